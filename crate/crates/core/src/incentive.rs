//! Incentivized UCB over a finite (discretized) arm set.
//!
//! Each round the principal picks the UCB arm `a_t`, the myopic agent would
//! pick the empirical best `g_t`, and the principal pays
//! `kappa_t = mean(g_t) - mean(a_t)`. The agent then pulls `a_t` and reports
//! `r_t = rho_t + gamma_t(kappa_t)`; the drifted `r_t` is what enters the
//! empirical means.
//!
//! Conventions: an unpulled arm has an infinite UCB index and an empirical
//! mean of zero, and every argmax breaks ties towards the lowest index.

use rand::Rng;

use crate::env::{DriftModel, MeanRewardModel, NoiseModel};
use crate::rng::EpisodeRng;
use crate::space::GridCover;
use crate::{Error, Result};

/// Pull count and running sum of observed (drifted) rewards for one arm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ArmStats {
    pulls: u64,
    reward_sum: f64,
}

impl ArmStats {
    pub fn new(pulls: u64, reward_sum: f64) -> Self {
        Self { pulls, reward_sum }
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn reward_sum(&self) -> f64 {
        self.reward_sum
    }

    pub fn empirical_mean(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.reward_sum / self.pulls as f64
        }
    }

    pub fn record(&mut self, observed: f64) {
        self.pulls += 1;
        self.reward_sum += observed;
    }
}

/// Which logarithm feeds the exploration bonus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogMode {
    /// `sqrt(2 ln t / N)`, the per-round form.
    #[default]
    Round,
    /// `sqrt(2 ln T / N)` with the horizon `T`.
    Horizon,
}

impl LogMode {
    fn log_arg(self, t: u64, horizon: u64) -> f64 {
        match self {
            LogMode::Round => t as f64,
            LogMode::Horizon => horizon as f64,
        }
    }

    /// Exploration bonus for an arm pulled `pulls >= 1` times.
    pub fn bonus(self, t: u64, horizon: u64, pulls: u64) -> f64 {
        (2.0 * self.log_arg(t, horizon).ln() / pulls as f64).sqrt()
    }
}

/// UCB index; `+inf` for an unpulled arm.
pub fn ucb_index(stats: &ArmStats, t: u64, log_mode: LogMode, horizon: u64) -> f64 {
    if stats.pulls == 0 {
        f64::INFINITY
    } else {
        stats.empirical_mean() + log_mode.bonus(t, horizon, stats.pulls)
    }
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

pub fn select_principal(
    stats: &[ArmStats],
    t: u64,
    log_mode: LogMode,
    horizon: u64,
) -> Result<usize> {
    argmax_lowest(stats.iter().map(|s| ucb_index(s, t, log_mode, horizon)))
        .ok_or_else(|| Error::InvalidState("no arms to select from".into()))
}

pub fn select_greedy(stats: &[ArmStats]) -> Result<usize> {
    argmax_lowest(stats.iter().map(ArmStats::empirical_mean))
        .ok_or_else(|| Error::InvalidState("no arms to select from".into()))
}

pub fn compensation(stats: &[ArmStats], greedy: usize, principal: usize) -> Result<f64> {
    let n = stats.len();
    if greedy >= n || principal >= n {
        return Err(Error::invalid(format!(
            "arm index out of range (greedy {greedy}, principal {principal}, {n} arms)"
        )));
    }
    Ok(stats[greedy].empirical_mean() - stats[principal].empirical_mean())
}

/// Arm statistics with incremental bookkeeping for the two argmax rules.
///
/// Selections agree exactly with [`select_principal`] and [`select_greedy`];
/// the table only avoids rescanning arms whose answer cannot change. While
/// any arm is unpulled the principal's choice is the lowest unpulled index,
/// and the agent's best pulled arm is updated in O(1) unless its own mean
/// drops.
#[derive(Clone, Debug)]
pub struct ArmTable {
    stats: Vec<ArmStats>,
    first_unpulled: usize,
    best_pulled: Option<usize>,
    total_pulls: u64,
}

impl ArmTable {
    pub fn new(n_arms: usize) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::InvalidState("arm table needs at least one arm".into()));
        }
        Ok(Self {
            stats: vec![ArmStats::default(); n_arms],
            first_unpulled: 0,
            best_pulled: None,
            total_pulls: 0,
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn total_pulls(&self) -> u64 {
        self.total_pulls
    }

    pub fn principal(&self, t: u64, log_mode: LogMode, horizon: u64) -> usize {
        if self.first_unpulled < self.stats.len() {
            return self.first_unpulled;
        }
        let lead = 2.0 * log_mode.log_arg(t, horizon).ln();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, s) in self.stats.iter().enumerate() {
            let index = s.empirical_mean() + (lead / s.pulls as f64).sqrt();
            if index > best.1 {
                best = (i, index);
            }
        }
        best.0
    }

    pub fn greedy(&self) -> usize {
        let unpulled = (self.first_unpulled < self.stats.len()).then_some(self.first_unpulled);
        match (self.best_pulled, unpulled) {
            (Some(b), None) => b,
            (None, Some(u)) => u,
            (Some(b), Some(u)) => {
                let m = self.stats[b].empirical_mean();
                if m > 0.0 || (m == 0.0 && b < u) {
                    b
                } else {
                    u
                }
            }
            (None, None) => unreachable!("table is non-empty"),
        }
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.stats[arm].empirical_mean()
    }

    pub fn record(&mut self, arm: usize, observed: f64) {
        let before = self.stats[arm].empirical_mean();
        let was_unpulled = self.stats[arm].pulls == 0;
        self.stats[arm].record(observed);
        self.total_pulls += 1;
        if arm == self.first_unpulled {
            while self.first_unpulled < self.stats.len()
                && self.stats[self.first_unpulled].pulls > 0
            {
                self.first_unpulled += 1;
            }
        }
        let after = self.stats[arm].empirical_mean();
        match self.best_pulled {
            None => self.best_pulled = Some(arm),
            Some(b) if b == arm => {
                if !was_unpulled && after < before {
                    self.best_pulled = self.rescan_pulled();
                }
            }
            Some(b) => {
                let m = self.stats[b].empirical_mean();
                if after > m || (after == m && arm < b) {
                    self.best_pulled = Some(arm);
                }
            }
        }
    }

    fn rescan_pulled(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in self.stats.iter().enumerate() {
            if s.pulls > 0 {
                let m = s.empirical_mean();
                if best.is_none_or(|(_, b)| m > b) {
                    best = Some((i, m));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// A finite arm set with known means and a sampling rule.
pub trait ArmEnvironment {
    fn n_arms(&self) -> usize;
    fn mean(&self, arm: usize) -> f64;
    /// The benchmark value regret is measured against.
    fn optimum(&self) -> f64;
    fn sample<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64;

    /// Gap between the benchmark and the best arm in the set.
    fn discretization_gap(&self) -> f64 {
        let best = (0..self.n_arms())
            .map(|i| self.mean(i))
            .fold(f64::NEG_INFINITY, f64::max);
        self.optimum() - best
    }
}

/// Arms with precomputed means and Gaussian noise.
#[derive(Clone, Debug)]
pub struct FiniteArms {
    means: Vec<f64>,
    optimum: f64,
    noise: NoiseModel,
}

impl FiniteArms {
    /// Arm means taken from a table; the benchmark is the best entry.
    pub fn from_means(means: Vec<f64>, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        if means.is_empty() {
            return Err(Error::invalid("need at least one arm"));
        }
        let optimum = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            means,
            optimum,
            noise,
        })
    }

    /// Grid arms under a reward model; `context` pins the context for a
    /// contextual model. The benchmark is the continuous optimum.
    pub fn from_cover(
        cover: &GridCover,
        model: &MeanRewardModel,
        noise: &NoiseModel,
        context: Option<&[f64]>,
    ) -> Result<Self> {
        noise.validate()?;
        if cover.dim() != model.d_a {
            return Err(Error::invalid(format!(
                "cover dimension {} does not match arm dimension {}",
                cover.dim(),
                model.d_a
            )));
        }
        let means = cover
            .points()
            .map(|p| model.mean(p.coords(), context))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            means,
            optimum: model.optimal_value(context)?,
            noise: noise.clone(),
        })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }
}

impl ArmEnvironment for FiniteArms {
    fn n_arms(&self) -> usize {
        self.means.len()
    }

    fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    fn optimum(&self) -> f64 {
        self.optimum
    }

    fn sample<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        self.noise.perturb(self.means[arm], rng)
    }
}

/// Arms paying 1 with probability `p` and 0 otherwise.
#[derive(Clone, Debug)]
pub struct BernoulliArms {
    probs: Vec<f64>,
}

impl BernoulliArms {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("Bernoulli arms need probabilities in [0,1]"));
        }
        Ok(Self { probs })
    }
}

impl ArmEnvironment for BernoulliArms {
    fn n_arms(&self) -> usize {
        self.probs.len()
    }

    fn mean(&self, arm: usize) -> f64 {
        self.probs[arm]
    }

    fn optimum(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn sample<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.probs[arm] {
            1.0
        } else {
            0.0
        }
    }
}

/// One round of an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// 1-based round index.
    pub t: u64,
    pub principal_arm: usize,
    pub greedy_arm: usize,
    pub kappa: f64,
    /// Undrifted noisy reward.
    pub rho: f64,
    pub gamma: f64,
    pub observed: f64,
    pub ell_t: f64,
    pub pseudo_regret_inc: f64,
    pub realized_regret_inc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub records: Vec<StepRecord>,
    pub cum_pseudo_regret: Vec<f64>,
    pub cum_realized_regret: Vec<f64>,
    pub cum_compensation: Vec<f64>,
    pub pull_counts: Vec<u64>,
    pub discretization_gap: f64,
}

impl RunResult {
    pub fn from_records(records: Vec<StepRecord>, n_arms: usize, discretization_gap: f64) -> Self {
        let prefix = |f: fn(&StepRecord) -> f64| -> Vec<f64> {
            records
                .iter()
                .scan(0.0, |acc, r| {
                    *acc += f(r);
                    Some(*acc)
                })
                .collect()
        };
        let cum_pseudo_regret = prefix(|r| r.pseudo_regret_inc);
        let cum_realized_regret = prefix(|r| r.realized_regret_inc);
        let cum_compensation = prefix(|r| r.kappa);
        let mut pull_counts = vec![0; n_arms];
        for r in &records {
            pull_counts[r.principal_arm] += 1;
        }
        Self {
            records,
            cum_pseudo_regret,
            cum_realized_regret,
            cum_compensation,
            pull_counts,
            discretization_gap,
        }
    }

    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    pub fn arm_sequence(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.principal_arm).collect()
    }

    pub fn total_pseudo_regret(&self) -> f64 {
        self.cum_pseudo_regret.last().copied().unwrap_or(0.0)
    }

    pub fn total_compensation(&self) -> f64 {
        self.cum_compensation.last().copied().unwrap_or(0.0)
    }
}

/// Who decides the pulled arm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Policy {
    /// UCB principal paying the agent to follow it.
    #[default]
    Incentivized,
    /// The agent plays its empirical best; nothing is paid.
    GreedyOnly,
    /// The UCB arm is pulled directly; nothing is paid.
    UcbNoIncentive,
}

/// Decision and feedback of one round, before regret accounting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Round {
    pub pulled: usize,
    pub greedy: usize,
    pub kappa: f64,
    pub rho: f64,
    pub gamma: f64,
    pub ell_t: f64,
    pub observed: f64,
}

/// Plays round `t` on `table` and records the observed reward.
///
/// Order: principal arm, greedy arm, compensation, reward draw, drift draw,
/// update. Baselines skip the drift draw entirely.
#[allow(clippy::too_many_arguments)]
pub(crate) fn play_round<R: Rng + ?Sized>(
    table: &mut ArmTable,
    t: u64,
    horizon: u64,
    log_mode: LogMode,
    policy: Policy,
    drift: &DriftModel,
    draw_reward: impl FnOnce(usize) -> f64,
    drift_rng: &mut R,
) -> Result<Round> {
    let principal = table.principal(t, log_mode, horizon);
    let greedy = table.greedy();
    let round = match policy {
        Policy::Incentivized => {
            let kappa = table.mean(greedy) - table.mean(principal);
            let rho = draw_reward(principal);
            let (gamma, ell_t) = drift.drift(kappa, drift_rng)?;
            Round {
                pulled: principal,
                greedy,
                kappa,
                rho,
                gamma,
                ell_t,
                observed: rho + gamma,
            }
        }
        Policy::GreedyOnly | Policy::UcbNoIncentive => {
            let pulled = if policy == Policy::GreedyOnly {
                greedy
            } else {
                principal
            };
            let rho = draw_reward(pulled);
            Round {
                pulled,
                greedy,
                kappa: 0.0,
                rho,
                gamma: 0.0,
                ell_t: 0.0,
                observed: rho,
            }
        }
    };
    table.record(round.pulled, round.observed);
    Ok(round)
}

/// Runs one episode of `policy` on an arbitrary finite arm environment.
pub fn run_policy<E: ArmEnvironment>(
    env: &E,
    drift: &DriftModel,
    horizon: u64,
    log_mode: LogMode,
    policy: Policy,
    rng: &mut EpisodeRng,
) -> Result<RunResult> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    drift.validate()?;
    let mut table = ArmTable::new(env.n_arms())?;
    let optimum = env.optimum();
    let mut records = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let reward_rng = &mut rng.reward;
        let round = play_round(
            &mut table,
            t,
            horizon,
            log_mode,
            policy,
            drift,
            |arm| env.sample(arm, reward_rng),
            &mut rng.drift,
        )?;
        records.push(StepRecord {
            t,
            principal_arm: round.pulled,
            greedy_arm: round.greedy,
            kappa: round.kappa,
            rho: round.rho,
            gamma: round.gamma,
            observed: round.observed,
            ell_t: round.ell_t,
            pseudo_regret_inc: optimum - env.mean(round.pulled),
            realized_regret_inc: optimum - round.rho,
        });
    }
    Ok(RunResult::from_records(
        records,
        env.n_arms(),
        env.discretization_gap(),
    ))
}

/// Incentivized UCB on a grid cover under a stochastic reward model.
pub fn run_episode(
    cover: &GridCover,
    reward: &MeanRewardModel,
    noise: &NoiseModel,
    drift: &DriftModel,
    horizon: u64,
    log_mode: LogMode,
    rng: &mut EpisodeRng,
) -> Result<RunResult> {
    if reward.is_contextual() {
        return Err(Error::invalid(
            "stochastic episode needs a context-free reward model",
        ));
    }
    let env = FiniteArms::from_cover(cover, reward, noise, None)?;
    run_policy(&env, drift, horizon, log_mode, Policy::Incentivized, rng)
}

/// Counts of deterministic-invariant checks over a trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub steps: u64,
    pub kappa_bound_checks: u64,
    pub drift_bound_checks: u64,
}

const AUDIT_TOL: f64 = 1e-9;

fn tolerance(scale: f64) -> f64 {
    AUDIT_TOL * (1.0 + scale.abs())
}

/// Replays a trace and checks every deterministic guarantee of the
/// incentivized rule:
/// - `kappa >= 0`, and `kappa = 0` when the principal and agent agree;
/// - `kappa <= sqrt(2 ln(t or T) / N)` whenever the pulled arm had `N >= 1`
///   prior pulls (in the row given by `rows`, if present);
/// - `observed = rho + gamma` and `ell_low * kappa <= gamma <= ell_high * kappa`;
/// - cumulative drift per arm `<= 2 ell sqrt(2 N ln T)`.
///
/// `rows[i]` is the snapped context of round `i` for contextual traces.
pub fn audit_trace(
    records: &[StepRecord],
    rows: Option<&[usize]>,
    horizon: u64,
    log_mode: LogMode,
    drift: &DriftModel,
) -> Result<AuditReport> {
    use std::collections::HashMap;

    let fail = |t: u64, what: String| Err(Error::InvariantViolation(format!("round {t}: {what}")));
    let mut pulls: HashMap<(usize, usize), u64> = HashMap::new();
    let mut drift_sum: HashMap<(usize, usize), f64> = HashMap::new();
    let mut report = AuditReport::default();
    let log_t_horizon = (horizon as f64).ln();
    for (i, r) in records.iter().enumerate() {
        let row = rows.map_or(0, |rows| rows[i]);
        let key = (row, r.principal_arm);
        if r.t != i as u64 + 1 {
            return fail(r.t, format!("expected round index {}", i + 1));
        }
        if !(r.kappa >= 0.0) {
            return fail(r.t, format!("negative compensation {}", r.kappa));
        }
        if r.principal_arm == r.greedy_arm && r.kappa != 0.0 {
            return fail(r.t, format!("compensation {} paid with a_t = g_t", r.kappa));
        }
        let n = pulls.get(&key).copied().unwrap_or(0);
        if n >= 1 {
            let bound = log_mode.bonus(r.t, horizon, n);
            if r.kappa > bound + tolerance(bound) {
                return fail(
                    r.t,
                    format!("compensation {} exceeds bonus bound {bound} (N = {n})", r.kappa),
                );
            }
            report.kappa_bound_checks += 1;
        }
        if (r.observed - (r.rho + r.gamma)).abs() > tolerance(r.observed) {
            return fail(r.t, format!("observed {} != rho + gamma", r.observed));
        }
        if r.kappa == 0.0 && r.gamma != 0.0 {
            return fail(r.t, format!("drift {} without compensation", r.gamma));
        }
        let tol = tolerance(r.kappa);
        if r.gamma < drift.ell_low * r.kappa - tol || r.gamma > drift.ell_high * r.kappa + tol {
            return fail(
                r.t,
                format!(
                    "drift {} outside [{}, {}] * kappa {}",
                    r.gamma, drift.ell_low, drift.ell_high, r.kappa
                ),
            );
        }
        *pulls.entry(key).or_default() += 1;
        *drift_sum.entry(key).or_default() += r.gamma;
        report.steps += 1;
    }
    for (key, &total) in &drift_sum {
        let n = pulls[key] as f64;
        let bound = 2.0 * drift.ell() * (2.0 * n * log_t_horizon).sqrt();
        if total > bound + tolerance(bound) {
            return Err(Error::InvariantViolation(format!(
                "cumulative drift {total} on arm {} (row {}) exceeds {bound}",
                key.1, key.0
            )));
        }
        report.drift_bound_checks += 1;
    }
    Ok(report)
}
