//! Multi-trial experiments, baselines, diagnostics, the exact Bernoulli
//! oracle, and CSV output.

pub mod experiment;
pub mod oracle;
pub mod output;
pub mod stats;

pub use experiment::{
    run_baseline, run_experiment, Baseline, ExperimentConfig, ExperimentSummary, MetricBand, Mode,
    PsiPolicy,
};
pub use oracle::{brute_force_expectation, monte_carlo_expectation, BernoulliInstance, Expectation};
pub use stats::{checkpoint_grid, sublinearity_slope, theoretical_bound};
