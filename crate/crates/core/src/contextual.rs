//! Per-context incentivized UCB over a product cover of arms and contexts.
//!
//! Each observed context is snapped to its ℓ∞-nearest representative; the
//! representative selects an independent row of arm statistics, and one
//! incentivized round is played inside that row. The exploration bonus uses
//! the global round counter `t` and the row-local pull count.

use rand::Rng;

use crate::env::{DriftModel, MeanRewardModel, NoiseModel};
use crate::incentive::{play_round, ArmStats, ArmTable, LogMode, Policy, RunResult, StepRecord};
use crate::rng::EpisodeRng;
use crate::space::{linf_distance, optimal_psi, GridCover};
use crate::{Error, Result};

/// Tuned mesh for the product space of dimension `d_a + d_x`.
pub fn contextual_optimal_psi(
    horizon: u64,
    lipschitz: f64,
    d_a: usize,
    d_x: usize,
    c: f64,
) -> Result<f64> {
    optimal_psi(horizon, lipschitz, d_a + d_x, c)
}

/// Statistics for every (context representative, arm) cell.
#[derive(Clone, Debug)]
pub struct ContextArmTable {
    arm_cover: GridCover,
    ctx_cover: GridCover,
    rows: Vec<ArmTable>,
}

impl ContextArmTable {
    pub fn new(d_a: usize, d_x: usize, psi: f64) -> Result<Self> {
        let arm_cover = GridCover::new(d_a, psi)?;
        let ctx_cover = GridCover::new(d_x, psi)?;
        let cells = arm_cover.len() as u128 * ctx_cover.len() as u128;
        if cells > crate::space::DEFAULT_ARM_BUDGET {
            return Err(Error::BudgetExceeded {
                requested: cells,
                budget: crate::space::DEFAULT_ARM_BUDGET,
            });
        }
        let rows = (0..ctx_cover.len())
            .map(|_| ArmTable::new(arm_cover.len()))
            .collect::<Result<_>>()?;
        Ok(Self {
            arm_cover,
            ctx_cover,
            rows,
        })
    }

    pub fn arm_cover(&self) -> &GridCover {
        &self.arm_cover
    }

    pub fn ctx_cover(&self) -> &GridCover {
        &self.ctx_cover
    }

    pub fn row(&self, ctx: usize) -> &[ArmStats] {
        self.rows[ctx].stats()
    }

    pub fn total_pulls(&self) -> u64 {
        self.rows.iter().map(ArmTable::total_pulls).sum()
    }
}

/// Where contexts come from.
#[derive(Clone, Debug, PartialEq)]
pub enum ContextSource {
    /// Fresh uniform draws from `[0,1]^{d_x}` each round.
    UniformIid,
    /// A fixed sequence, one context per round.
    Replay(Vec<Vec<f64>>),
}

/// Context observed in one round and its snapped representative.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextRecord {
    pub context: Vec<f64>,
    pub row: usize,
    pub snap_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextualRun {
    pub result: RunResult,
    pub contexts: Vec<ContextRecord>,
}

impl ContextualRun {
    pub fn rows(&self) -> Vec<usize> {
        self.contexts.iter().map(|c| c.row).collect()
    }
}

/// Runs the per-context incentivized rule for `horizon` rounds.
///
/// Pseudo-regret is measured against the continuous per-context optimum
/// `nu(a*(x_t), x_t)`, realized regret against the same value minus `rho_t`.
#[allow(clippy::too_many_arguments)]
pub fn run_contextual_episode(
    d_a: usize,
    d_x: usize,
    psi: f64,
    reward: &MeanRewardModel,
    noise: &NoiseModel,
    drift: &DriftModel,
    horizon: u64,
    source: &ContextSource,
    log_mode: LogMode,
    policy: Policy,
    rng: &mut EpisodeRng,
) -> Result<ContextualRun> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    if !reward.is_contextual() || reward.d_a != d_a || reward.d_x != d_x {
        return Err(Error::invalid(format!(
            "reward model does not match a contextual problem with d_a = {d_a}, d_x = {d_x}"
        )));
    }
    if let ContextSource::Replay(list) = source {
        if (list.len() as u64) < horizon {
            return Err(Error::invalid(format!(
                "replay list has {} contexts, horizon is {horizon}",
                list.len()
            )));
        }
        if let Some(bad) = list
            .iter()
            .find(|x| x.len() != d_x || x.iter().any(|c| !(0.0..=1.0).contains(c)))
        {
            return Err(Error::invalid(format!("replayed context {bad:?} is not in [0,1]^{d_x}")));
        }
    }
    noise.validate()?;
    drift.validate()?;
    let mut table = ContextArmTable::new(d_a, d_x, psi)?;
    let arm_points: Vec<Vec<f64>> = table
        .arm_cover
        .points()
        .map(|p| p.coords().to_vec())
        .collect();
    let n_arms = arm_points.len();
    let mut records = Vec::with_capacity(horizon as usize);
    let mut contexts = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let x: Vec<f64> = match source {
            ContextSource::UniformIid => (0..d_x).map(|_| rng.context.random::<f64>()).collect(),
            ContextSource::Replay(list) => list[(t - 1) as usize].clone(),
        };
        let row = table.ctx_cover.snap(&x)?;
        let snap_distance = linf_distance(table.ctx_cover.point(row).coords(), &x);
        let reward_rng = &mut rng.reward;
        let mut mean_err = None;
        let round = play_round(
            &mut table.rows[row],
            t,
            horizon,
            log_mode,
            policy,
            drift,
            |arm| match reward.mean(&arm_points[arm], Some(&x)) {
                Ok(m) => noise.perturb(m, reward_rng),
                Err(e) => {
                    mean_err = Some(e);
                    f64::NAN
                }
            },
            &mut rng.drift,
        )?;
        if let Some(e) = mean_err {
            return Err(e);
        }
        let optimum = reward.optimal_value(Some(&x))?;
        let played = reward.mean(&arm_points[round.pulled], Some(&x))?;
        records.push(StepRecord {
            t,
            principal_arm: round.pulled,
            greedy_arm: round.greedy,
            kappa: round.kappa,
            rho: round.rho,
            gamma: round.gamma,
            observed: round.observed,
            ell_t: round.ell_t,
            pseudo_regret_inc: optimum - played,
            realized_regret_inc: optimum - round.rho,
        });
        contexts.push(ContextRecord {
            context: x,
            row,
            snap_distance,
        });
    }
    // Per-context gap of the best grid arm; the linear model makes it
    // independent of the context.
    let probe = vec![0.0; d_x];
    let best_grid = arm_points
        .iter()
        .map(|a| reward.mean(a, Some(&probe)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = reward.optimal_value(Some(&probe))? - best_grid;
    Ok(ContextualRun {
        result: RunResult::from_records(records, n_arms, gap),
        contexts,
    })
}
