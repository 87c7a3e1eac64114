//! Trial-parallel experiment runner.
//!
//! Trials are independent work units seeded by `trial_seed(master, i)`;
//! aggregation always runs in trial-index order, so summaries do not depend
//! on the worker count.

use rayon::prelude::*;

use crate::contextual::{contextual_optimal_psi, run_contextual_episode, ContextSource};
use crate::env::{DriftModel, MeanRewardModel, NoiseModel};
use crate::harness::stats::{checkpoint_grid, mean_ci, sublinearity_slope, theoretical_bound};
use crate::incentive::{run_policy, FiniteArms, LogMode, Policy, RunResult};
use crate::rng::{trial_seed, EpisodeRng};
use crate::space::{optimal_psi, GridCover};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Stochastic,
    Contextual,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PsiPolicy {
    /// Tuned mesh with multiplier `c`.
    Auto { c: f64 },
    Fixed(f64),
}

impl Default for PsiPolicy {
    fn default() -> Self {
        PsiPolicy::Auto { c: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Baseline {
    GreedyOnly,
    UcbNoIncentive,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::GreedyOnly => "greedy_only",
            Baseline::UcbNoIncentive => "ucb_no_incentive",
        }
    }

    pub fn policy(self) -> Policy {
        match self {
            Baseline::GreedyOnly => Policy::GreedyOnly,
            Baseline::UcbNoIncentive => Policy::UcbNoIncentive,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub horizon: u64,
    /// Arm dimension.
    pub d_a: usize,
    /// Context dimension; ignored in stochastic mode.
    pub d_x: usize,
    pub lipschitz: f64,
    pub psi: PsiPolicy,
    pub noise: NoiseModel,
    pub drift: DriftModel,
    pub trials: usize,
    pub master_seed: u64,
    pub log_mode: LogMode,
    pub baselines: Vec<Baseline>,
    /// Multiplier of the plotted theoretical envelope.
    pub bound_constant: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Stochastic,
            horizon: 20_000,
            d_a: 1,
            d_x: 0,
            lipschitz: 1.0,
            psi: PsiPolicy::default(),
            noise: NoiseModel::default(),
            drift: DriftModel::default(),
            trials: 10,
            master_seed: 0,
            log_mode: LogMode::Round,
            baselines: Vec::new(),
            bound_constant: 1.0,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        if self.d_a == 0 {
            return Err(Error::invalid("arm dimension must be >= 1"));
        }
        if self.mode == Mode::Contextual && self.d_x == 0 {
            return Err(Error::invalid("contextual mode needs a context dimension >= 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be >= 1"));
        }
        match self.psi {
            PsiPolicy::Fixed(p) if !(p > 0.0) || !p.is_finite() => {
                return Err(Error::invalid(format!("psi must be > 0, got {p}")))
            }
            PsiPolicy::Auto { c } if !(c > 0.0) || !c.is_finite() => {
                return Err(Error::invalid(format!("psi multiplier must be > 0, got {c}")))
            }
            _ => {}
        }
        if !(self.bound_constant >= 0.0) {
            return Err(Error::invalid("bound constant must be >= 0"));
        }
        self.noise.validate()?;
        self.drift.validate()?;
        self.reward_model()?;
        Ok(())
    }

    /// Covering dimension of the discretized space.
    pub fn dimension(&self) -> usize {
        match self.mode {
            Mode::Stochastic => self.d_a,
            Mode::Contextual => self.d_a + self.d_x,
        }
    }

    pub fn reward_model(&self) -> Result<MeanRewardModel> {
        match self.mode {
            Mode::Stochastic => MeanRewardModel::linear(self.lipschitz, self.d_a),
            Mode::Contextual => MeanRewardModel::contextual(self.lipschitz, self.d_a, self.d_x),
        }
    }

    /// The mesh actually used. The tuned mesh needs `T >= 2`; for a one-round
    /// horizon it falls back to a single cell.
    pub fn resolved_psi(&self) -> Result<f64> {
        match self.psi {
            PsiPolicy::Fixed(p) => Ok(p),
            PsiPolicy::Auto { .. } if self.horizon < 2 => Ok(1.0),
            PsiPolicy::Auto { c } => match self.mode {
                Mode::Stochastic => optimal_psi(self.horizon, self.lipschitz, self.d_a, c),
                Mode::Contextual => {
                    contextual_optimal_psi(self.horizon, self.lipschitz, self.d_a, self.d_x, c)
                }
            },
        }
    }
}

/// Mean and 95% half-width of one metric at every checkpoint.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricBand {
    pub mean: Vec<f64>,
    pub ci: Vec<f64>,
}

impl MetricBand {
    fn aggregate(per_trial: &[Vec<f64>], n_checkpoints: usize) -> Self {
        let (mean, ci) = (0..n_checkpoints)
            .map(|j| {
                let column: Vec<f64> = per_trial.iter().map(|c| c[j]).collect();
                mean_ci(&column)
            })
            .unzip();
        Self { mean, ci }
    }

    pub fn last(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineSummary {
    pub kind: Baseline,
    pub pseudo_regret: MetricBand,
    pub compensation: MetricBand,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub psi: f64,
    /// Arms in the discretized set `A_0`.
    pub n_arms: usize,
    /// Context representatives (1 in stochastic mode).
    pub n_contexts: usize,
    pub checkpoints: Vec<u64>,
    pub pseudo_regret: MetricBand,
    pub realized_regret: MetricBand,
    pub compensation: MetricBand,
    pub bound: Vec<f64>,
    pub baselines: Vec<BaselineSummary>,
}

impl ExperimentSummary {
    /// Log-log slope of a mean curve over checkpoints with `from <= t <= to`.
    pub fn slope(&self, band: &MetricBand, from: u64, to: u64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .checkpoints
            .iter()
            .zip(&band.mean)
            .filter(|(t, _)| (from..=to).contains(*t))
            .map(|(&t, &v)| (t as f64, v))
            .collect();
        sublinearity_slope(&pts)
    }

    /// Slope over the last decade of the horizon, `[T/10, T]`.
    pub fn regret_slope(&self) -> Result<f64> {
        let t = self.config.horizon;
        self.slope(&self.pseudo_regret, t / 10, t)
    }

    pub fn compensation_slope(&self) -> Result<f64> {
        let t = self.config.horizon;
        self.slope(&self.compensation, t / 10, t)
    }
}

struct TrialCurves {
    pseudo: Vec<f64>,
    realized: Vec<f64>,
    compensation: Vec<f64>,
}

impl TrialCurves {
    fn sample(run: &RunResult, checkpoints: &[u64]) -> Self {
        let at = |v: &Vec<f64>| -> Vec<f64> {
            checkpoints.iter().map(|&t| v[t as usize - 1]).collect()
        };
        Self {
            pseudo: at(&run.cum_pseudo_regret),
            realized: at(&run.cum_realized_regret),
            compensation: at(&run.cum_compensation),
        }
    }
}

/// Shared, immutable per-experiment state.
struct Prepared {
    psi: f64,
    model: MeanRewardModel,
    arms: Option<FiniteArms>,
    n_arms: usize,
    n_contexts: usize,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let psi = config.resolved_psi()?;
    let model = config.reward_model()?;
    let arm_cover = GridCover::new(config.d_a, psi)?;
    let (arms, n_contexts) = match config.mode {
        Mode::Stochastic => (
            Some(FiniteArms::from_cover(&arm_cover, &model, &config.noise, None)?),
            1,
        ),
        Mode::Contextual => (None, GridCover::new(config.d_x, psi)?.len()),
    };
    Ok(Prepared {
        psi,
        model,
        arms,
        n_arms: arm_cover.len(),
        n_contexts,
    })
}

/// Runs trial `index` of `config` under `policy` and returns the full trace.
pub fn run_trial(config: &ExperimentConfig, policy: Policy, index: usize) -> Result<RunResult> {
    let prepared = prepare(config)?;
    run_prepared(config, &prepared, policy, index)
}

fn run_prepared(
    config: &ExperimentConfig,
    prepared: &Prepared,
    policy: Policy,
    index: usize,
) -> Result<RunResult> {
    let mut rng = EpisodeRng::new(trial_seed(config.master_seed, index as u64));
    match &prepared.arms {
        Some(arms) => run_policy(
            arms,
            &config.drift,
            config.horizon,
            config.log_mode,
            policy,
            &mut rng,
        ),
        None => Ok(run_contextual_episode(
            config.d_a,
            config.d_x,
            prepared.psi,
            &prepared.model,
            &config.noise,
            &config.drift,
            config.horizon,
            &ContextSource::UniformIid,
            config.log_mode,
            policy,
            &mut rng,
        )?
        .result),
    }
}

fn run_trials(
    config: &ExperimentConfig,
    prepared: &Prepared,
    policy: Policy,
    checkpoints: &[u64],
) -> Result<Vec<TrialCurves>> {
    let work = || {
        (0..config.trials)
            .into_par_iter()
            .map(|i| {
                run_prepared(config, prepared, policy, i).map(|r| TrialCurves::sample(&r, checkpoints))
            })
            .collect::<Result<Vec<_>>>()
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidState(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn summarize(
    config: &ExperimentConfig,
    prepared: &Prepared,
    policy: Policy,
) -> Result<ExperimentSummary> {
    let checkpoints = checkpoint_grid(config.horizon);
    let curves = run_trials(config, prepared, policy, &checkpoints)?;
    let n = checkpoints.len();
    let collect = |f: fn(&TrialCurves) -> &Vec<f64>| -> Vec<Vec<f64>> {
        curves.iter().map(|c| f(c).clone()).collect()
    };
    let bound = checkpoints
        .iter()
        .map(|&t| {
            theoretical_bound(
                t,
                config.dimension(),
                config.lipschitz,
                config.bound_constant,
            )
        })
        .collect();
    Ok(ExperimentSummary {
        config: config.clone(),
        psi: prepared.psi,
        n_arms: prepared.n_arms,
        n_contexts: prepared.n_contexts,
        pseudo_regret: MetricBand::aggregate(&collect(|c| &c.pseudo), n),
        realized_regret: MetricBand::aggregate(&collect(|c| &c.realized), n),
        compensation: MetricBand::aggregate(&collect(|c| &c.compensation), n),
        checkpoints,
        bound,
        baselines: Vec::new(),
    })
}

/// Runs `config.trials` incentivized episodes plus any requested baselines.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let prepared = prepare(config)?;
    let mut summary = summarize(config, &prepared, Policy::Incentivized)?;
    for &kind in &config.baselines {
        let base = summarize(config, &prepared, kind.policy())?;
        summary.baselines.push(BaselineSummary {
            kind,
            pseudo_regret: base.pseudo_regret,
            compensation: base.compensation,
        });
    }
    Ok(summary)
}

/// Runs a baseline policy with the same trial seeds and accounting.
pub fn run_baseline(config: &ExperimentConfig, kind: Baseline) -> Result<ExperimentSummary> {
    let prepared = prepare(config)?;
    summarize(config, &prepared, kind.policy())
}
