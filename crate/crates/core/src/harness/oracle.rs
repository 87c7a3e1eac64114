//! Exact expectations for tiny Bernoulli instances.
//!
//! With 0/1 rewards and a fixed drift slope the incentivized rule is a
//! deterministic function of the reward history, so the expected cumulative
//! pseudo-regret and compensation are finite weighted sums over at most
//! `2^T` outcome paths. The enumeration carries its own copy of the decision
//! rule and shares no code with the simulator it is used to check.

use crate::env::DriftModel;
use crate::incentive::{run_policy, BernoulliArms, LogMode, Policy};
use crate::rng::{trial_seed, EpisodeRng};
use crate::{Error, Result};

pub const MAX_ORACLE_ARMS: usize = 3;
pub const MAX_ORACLE_HORIZON: u64 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliInstance {
    pub probs: Vec<f64>,
    /// Fixed drift slope.
    pub ell: f64,
    pub horizon: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expectation {
    pub pseudo_regret: f64,
    pub compensation: f64,
}

/// Monte-Carlo means with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub episodes: u64,
    pub pseudo_regret: f64,
    pub pseudo_regret_se: f64,
    pub compensation: f64,
    pub compensation_se: f64,
}

impl BernoulliInstance {
    fn validate(&self) -> Result<()> {
        if self.probs.is_empty() || self.probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("probabilities must lie in [0,1]"));
        }
        if !(self.ell >= 0.0) || !self.ell.is_finite() {
            return Err(Error::invalid("drift slope must be >= 0"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        if self.probs.len() > MAX_ORACLE_ARMS || self.horizon > MAX_ORACLE_HORIZON {
            return Err(Error::BudgetExceeded {
                requested: 2u128.pow(self.horizon.min(127) as u32),
                budget: 2u128.pow(MAX_ORACLE_HORIZON as u32),
            });
        }
        Ok(())
    }
}

struct Walker<'a> {
    inst: &'a BernoulliInstance,
    best: f64,
    expected: Expectation,
}

impl Walker<'_> {
    fn decide(&self, t: u64, sums: &[f64], counts: &[u64]) -> (usize, f64) {
        let means: Vec<f64> = sums
            .iter()
            .zip(counts)
            .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
            .collect();
        let mut pick = 0;
        let mut pick_score = f64::NEG_INFINITY;
        for i in 0..means.len() {
            let score = if counts[i] == 0 {
                f64::INFINITY
            } else {
                means[i] + (2.0 * (t as f64).ln() / counts[i] as f64).sqrt()
            };
            if score > pick_score {
                pick = i;
                pick_score = score;
            }
        }
        let mut greedy = 0;
        for i in 1..means.len() {
            if means[i] > means[greedy] {
                greedy = i;
            }
        }
        (pick, means[greedy] - means[pick])
    }

    fn walk(&mut self, t: u64, sums: &mut Vec<f64>, counts: &mut Vec<u64>, prob: f64, regret: f64, paid: f64) {
        if t > self.inst.horizon {
            self.expected.pseudo_regret += prob * regret;
            self.expected.compensation += prob * paid;
            return;
        }
        let (arm, kappa) = self.decide(t, sums, counts);
        let p = self.inst.probs[arm];
        for (reward, weight) in [(1.0, p), (0.0, 1.0 - p)] {
            if weight == 0.0 {
                continue;
            }
            let before = sums[arm];
            sums[arm] += reward + self.inst.ell * kappa;
            counts[arm] += 1;
            self.walk(t + 1, sums, counts, prob * weight, regret + self.best - p, paid + kappa);
            sums[arm] = before;
            counts[arm] -= 1;
        }
    }
}

/// Exact expected cumulative pseudo-regret and compensation at the horizon.
pub fn brute_force_expectation(inst: &BernoulliInstance) -> Result<Expectation> {
    inst.validate()?;
    let best = inst.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut walker = Walker {
        inst,
        best,
        expected: Expectation {
            pseudo_regret: 0.0,
            compensation: 0.0,
        },
    };
    let n = inst.probs.len();
    walker.walk(1, &mut vec![0.0; n], &mut vec![0; n], 1.0, 0.0, 0.0);
    Ok(walker.expected)
}

/// Simulator estimate of the same expectations over seeded episodes.
pub fn monte_carlo_expectation(
    inst: &BernoulliInstance,
    episodes: u64,
    master_seed: u64,
) -> Result<MonteCarloEstimate> {
    if episodes < 2 {
        return Err(Error::invalid("need at least two episodes"));
    }
    let env = BernoulliArms::new(inst.probs.clone())?;
    let drift = DriftModel::fixed(inst.ell)?;
    let mut regret = Vec::with_capacity(episodes as usize);
    let mut paid = Vec::with_capacity(episodes as usize);
    for i in 0..episodes {
        let mut rng = EpisodeRng::new(trial_seed(master_seed, i));
        let run = run_policy(
            &env,
            &drift,
            inst.horizon,
            LogMode::Round,
            Policy::Incentivized,
            &mut rng,
        )?;
        regret.push(run.total_pseudo_regret());
        paid.push(run.total_compensation());
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (pseudo_regret, pseudo_regret_se) = stats(&regret);
    let (compensation, compensation_se) = stats(&paid);
    Ok(MonteCarloEstimate {
        episodes,
        pseudo_regret,
        pseudo_regret_se,
        compensation,
        compensation_se,
    })
}
