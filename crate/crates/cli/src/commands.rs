//! Subcommand implementations.

use std::path::{Path, PathBuf};

use incentive_bandit::contextual::{run_contextual_episode, ContextSource};
use incentive_bandit::env::MeanRewardModel;
use incentive_bandit::harness::experiment::run_trial;
use incentive_bandit::harness::output::{
    format_float, write_file, write_summary_csv, write_table_csv, write_trace_csv, TableRow,
};
use incentive_bandit::harness::{
    brute_force_expectation, monte_carlo_expectation, run_experiment, BernoulliInstance,
    ExperimentConfig, ExperimentSummary, Mode, PsiPolicy,
};
use incentive_bandit::incentive::{audit_trace, ArmEnvironment, FiniteArms, Policy};
use incentive_bandit::rng::{trial_seed, EpisodeRng};
use incentive_bandit::space::GridCover;
use incentive_bandit::{Error, VERSION};

use crate::args::{
    Cli, Command, ContextualArgs, CoverArgs, ExperimentArgs, LogKind, ModeKind, NoiseKind,
    OracleArgs, Overrides, PlotArgs, Preset, SimArgs,
};
use crate::config;
use crate::error::{CliError, Result};
use crate::plot::plot_summary;

/// `(d, psi)` cells of the mesh-sensitivity grid.
pub const MESH_SENSITIVITY: [(usize, f64); 9] = [
    (1, 0.061),
    (1, 0.00001),
    (1, 0.35),
    (2, 0.123),
    (2, 0.005),
    (2, 0.35),
    (3, 0.187),
    (3, 0.02),
    (3, 0.35),
];

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Cover(a) => cover(a),
        Command::Run(a) => run(cli, a),
        Command::Contextual(a) => contextual(cli, a),
        Command::Experiment(a) => experiment(cli, a),
        Command::Oracle(a) => oracle(cli, a),
        Command::Plot(a) => plot(cli, a),
    }
}

impl Overrides {
    /// Flag values as config key/value pairs.
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut num = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        num("d_a", self.d_a.map(|v| v.to_string()));
        num("d_x", self.d_x.map(|v| v.to_string()));
        num("horizon", self.horizon.map(|v| v.to_string()));
        num("trials", self.trials.map(|v| v.to_string()));
        num("lipschitz", self.lipschitz.map(format_float));
        num("psi", self.psi.clone());
        num("psi_c", self.psi_c.map(format_float));
        num("noise_scale", self.noise_scale.map(format_float));
        num(
            "noise_interpretation",
            self.noise_interpretation.map(|k| {
                match k {
                    NoiseKind::Variance => "variance",
                    NoiseKind::StdDev => "std_dev",
                }
                .to_string()
            }),
        );
        num("noise_clip", self.noise_clip.map(|v| v.to_string()));
        num("ell_low", self.ell_low.map(format_float));
        num("ell_high", self.ell_high.map(format_float));
        num(
            "log_mode",
            self.log_mode.map(|k| {
                match k {
                    LogKind::Round => "round",
                    LogKind::Horizon => "horizon",
                }
                .to_string()
            }),
        );
        num("baselines", self.baselines.clone());
        num("bound_constant", self.bound_constant.map(format_float));
        out
    }
}

/// Sets the dimensions from a total `d` for the given mode.
fn split_dimension(config: &mut ExperimentConfig, d: usize) {
    match config.mode {
        Mode::Stochastic => config.d_a = d,
        Mode::Contextual => {
            config.d_a = d.div_ceil(2);
            config.d_x = d / 2;
        }
    }
}

/// Layers defaults, the config file, then flags.
pub fn effective_config(
    cli: &Cli,
    overrides: &Overrides,
    base: ExperimentConfig,
    mode: Option<Mode>,
) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Core(Error::io(path, e)))?;
            config::parse_onto(base, &text, &path.display().to_string())?
        }
        None => base,
    };
    if let Some(mode) = mode {
        config.mode = mode;
    }
    if let Some(d) = overrides.d {
        split_dimension(&mut config, d);
    }
    for (key, value) in overrides.pairs() {
        config::apply(&mut config, key, &value)
            .map_err(|m| CliError::usage(format!("--{}: {m}", key.replace('_', "-"))))?;
    }
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(n) = cli.threads {
        config.threads = Some(n);
    }
    config.validate()?;
    Ok(config)
}

/// Comment lines heading every output file.
pub fn preamble(command: &str, config: &ExperimentConfig, extra: &[String]) -> Vec<String> {
    let mut lines = vec![format!("version = {VERSION}"), format!("command = {command}")];
    lines.extend(extra.iter().cloned());
    lines.extend(config::to_lines(config));
    lines
}

fn trace_path(out: &Path, stem: &str, trials: usize, i: usize) -> PathBuf {
    if trials == 1 {
        out.join(format!("{stem}.csv"))
    } else {
        out.join(format!("{stem}_{i}.csv"))
    }
}

fn cover(args: &CoverArgs) -> Result<()> {
    if args.d == 0 {
        return Err(CliError::usage("--d must be >= 1"));
    }
    let cover = GridCover::new(args.d, args.psi)?;
    let model = MeanRewardModel::linear(args.lipschitz, args.d)?;
    let arms = FiniteArms::from_cover(&cover, &model, &Default::default(), None)?;
    println!("d = {}", args.d);
    println!("psi = {}", format_float(args.psi));
    println!("points_per_axis = {}", cover.points_per_dim());
    println!("arms = {}", cover.len());
    println!("radius = {}", format_float(cover.radius()));
    println!("cell_diameter = {}", format_float(cover.cell_diameter()));
    println!(
        "discretization_gap = {}",
        format_float(arms.discretization_gap())
    );
    Ok(())
}

fn sim_base() -> ExperimentConfig {
    ExperimentConfig {
        trials: 1,
        ..ExperimentConfig::default()
    }
}

fn run(cli: &Cli, args: &SimArgs) -> Result<()> {
    let config = effective_config(cli, &args.overrides, sim_base(), Some(Mode::Stochastic))?;
    let psi = config.resolved_psi()?;
    let n_arms = GridCover::new(config.d_a, psi)?.len();
    println!("psi = {}, arms = {n_arms}", format_float(psi));
    for i in 0..config.trials {
        let result = run_trial(&config, Policy::Incentivized, i)?;
        let audit = audit_trace(
            &result.records,
            None,
            config.horizon,
            config.log_mode,
            &config.drift,
        )?;
        let path = trace_path(&cli.out, "trace", config.trials, i);
        let extra = [
            format!("trial = {i}"),
            format!("psi_resolved = {}", format_float(psi)),
            format!("n_arms = {n_arms}"),
        ];
        write_trace_csv(&path, &result.records, &preamble("run", &config, &extra))?;
        println!(
            "trial {i}: pseudo_regret = {}, compensation = {}, audited {} steps -> {}",
            format_float(result.total_pseudo_regret()),
            format_float(result.total_compensation()),
            audit.steps,
            path.display()
        );
    }
    Ok(())
}

/// Reads replay contexts: one comma-separated row per round, `#` comments.
pub fn read_contexts(path: &Path, d_x: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Core(Error::io(path, e)))?;
    let err = |line: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| err(i + 1, format!("not a number: `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != d_x {
            return Err(err(i + 1, format!("expected {d_x} values, found {}", row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn contextual(cli: &Cli, args: &ContextualArgs) -> Result<()> {
    let config = effective_config(cli, &args.overrides, sim_base(), Some(Mode::Contextual))?;
    let psi = config.resolved_psi()?;
    let model = config.reward_model()?;
    let source = match &args.contexts {
        Some(p) => ContextSource::Replay(read_contexts(p, config.d_x)?),
        None => ContextSource::UniformIid,
    };
    let n_arms = GridCover::new(config.d_a, psi)?.len();
    let n_contexts = GridCover::new(config.d_x, psi)?.len();
    println!(
        "psi = {}, arms = {n_arms}, contexts = {n_contexts}",
        format_float(psi)
    );
    for i in 0..config.trials {
        let mut rng = EpisodeRng::new(trial_seed(config.master_seed, i as u64));
        let run = run_contextual_episode(
            config.d_a,
            config.d_x,
            psi,
            &model,
            &config.noise,
            &config.drift,
            config.horizon,
            &source,
            config.log_mode,
            Policy::Incentivized,
            &mut rng,
        )?;
        if let Some((t, c)) = run
            .contexts
            .iter()
            .enumerate()
            .find(|(_, c)| c.snap_distance > psi / 2.0 + 1e-12)
        {
            return Err(Error::InvariantViolation(format!(
                "round {}: snap distance {} exceeds psi/2",
                t + 1,
                c.snap_distance
            ))
            .into());
        }
        let audit = audit_trace(
            &run.result.records,
            Some(&run.rows()),
            config.horizon,
            config.log_mode,
            &config.drift,
        )?;
        let mut extra = vec![
            format!("trial = {i}"),
            format!("psi_resolved = {}", format_float(psi)),
            format!("n_arms = {n_arms}"),
            format!("n_contexts = {n_contexts}"),
        ];
        if let Some(p) = &args.contexts {
            extra.push(format!("contexts = {}", p.display()));
        }
        let pre = preamble("contextual", &config, &extra);
        let path = trace_path(&cli.out, "trace", config.trials, i);
        write_trace_csv(&path, &run.result.records, &pre)?;
        let ctx_path = trace_path(&cli.out, "contexts", config.trials, i);
        write_file(&ctx_path, &contexts_csv(&run.contexts, &pre))?;
        println!(
            "trial {i}: pseudo_regret = {}, compensation = {}, audited {} steps -> {}",
            format_float(run.result.total_pseudo_regret()),
            format_float(run.result.total_compensation()),
            audit.steps,
            path.display()
        );
    }
    Ok(())
}

fn contexts_csv(
    contexts: &[incentive_bandit::contextual::ContextRecord],
    preamble: &[String],
) -> String {
    let mut out = String::new();
    for line in preamble {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    let d_x = contexts.first().map_or(0, |c| c.context.len());
    let mut header = vec!["t".to_string(), "row".into(), "snap_distance".into()];
    header.extend((1..=d_x).map(|j| format!("x_{j}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, c) in contexts.iter().enumerate() {
        let mut fields = vec![
            (i + 1).to_string(),
            c.row.to_string(),
            format_float(c.snap_distance),
        ];
        fields.extend(c.context.iter().map(|&x| format_float(x)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses `d:psi` cells; psi may be `auto`.
pub fn parse_grid(cells: &str) -> Result<Vec<(usize, PsiPolicy)>> {
    cells.split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(|cell| {
            let bad = || CliError::usage(format!("--grid: expected `d:psi`, got `{cell}`"));
            let (d, psi) = cell.split_once(':').ok_or_else(bad)?;
            let d: usize = d.trim().parse().map_err(|_| bad())?;
            let psi = match psi.trim() {
                "auto" => PsiPolicy::Auto { c: 1.0 },
                p => PsiPolicy::Fixed(p.parse().map_err(|_| bad())?),
            };
            Ok((d, psi))
        })
        .collect()
}

fn describe(summary: &ExperimentSummary) -> String {
    let slope = |r: incentive_bandit::Result<f64>| match r {
        Ok(s) => format!("{s:.4}"),
        Err(_) => "undefined".into(),
    };
    let bound = summary.bound.last().copied().unwrap_or(0.0);
    let regret = summary.pseudo_regret.last();
    let ratio = if bound > 0.0 {
        format!("{:.4}", regret / bound)
    } else {
        "undefined".into()
    };
    let mut s = format!(
        "d = {}, psi = {}, arms = {}, mean_pseudo_regret = {:.4}, mean_compensation = {:.4}, regret_slope = {}, compensation_slope = {}, regret/bound = {}",
        summary.config.dimension(),
        format_float(summary.psi),
        summary.n_arms * summary.n_contexts,
        regret,
        summary.compensation.last(),
        slope(summary.regret_slope()),
        slope(summary.compensation_slope()),
        ratio
    );
    for b in &summary.baselines {
        s.push_str(&format!(
            ", {}_pseudo_regret = {:.4}",
            b.kind.name(),
            b.pseudo_regret.last()
        ));
    }
    s
}

fn experiment(cli: &Cli, args: &ExperimentArgs) -> Result<()> {
    let mode = args.mode.map(|m| match m {
        ModeKind::Stochastic => Mode::Stochastic,
        ModeKind::Contextual => Mode::Contextual,
    });
    let cells: Option<Vec<(usize, PsiPolicy)>> = match (&args.grid, args.preset) {
        (Some(g), _) => Some(parse_grid(g)?),
        (None, Some(Preset::MeshSensitivity)) => Some(
            MESH_SENSITIVITY
                .iter()
                .map(|&(d, p)| (d, PsiPolicy::Fixed(p)))
                .collect(),
        ),
        (None, None) => None,
    };
    let config = effective_config(cli, &args.overrides, ExperimentConfig::default(), mode)?;
    let Some(cells) = cells else {
        let summary = run_experiment(&config)?;
        let path = cli.out.join("summary.csv");
        let extra = [format!("psi_resolved = {}", format_float(summary.psi))];
        write_summary_csv(&path, &summary, &preamble("experiment", &config, &extra))?;
        println!("{}", describe(&summary));
        println!("wrote {}", path.display());
        return Ok(());
    };
    if cells.is_empty() {
        return Err(CliError::usage("--grid: no cells given"));
    }
    let mut rows = Vec::new();
    for (d, psi) in cells {
        let mut cell = config.clone();
        split_dimension(&mut cell, d);
        cell.psi = match (psi, config.psi) {
            (PsiPolicy::Auto { .. }, PsiPolicy::Auto { c }) => PsiPolicy::Auto { c },
            (p, _) => p,
        };
        let summary = run_experiment(&cell)?;
        let label = match psi {
            PsiPolicy::Fixed(p) => format_float(p),
            PsiPolicy::Auto { .. } => "auto".into(),
        };
        let path = cli.out.join(format!("summary_d{d}_psi{label}.csv"));
        let extra = [format!("psi_resolved = {}", format_float(summary.psi))];
        write_summary_csv(&path, &summary, &preamble("experiment", &cell, &extra))?;
        println!("{}", describe(&summary));
        rows.push(TableRow::from_summary(&summary));
    }
    let path = cli.out.join("table.csv");
    write_table_csv(&path, &rows, &preamble("experiment", &config, &[]))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn oracle(cli: &Cli, args: &OracleArgs) -> Result<()> {
    let probs = args
        .probs
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("--probs: not a number: `{p}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let inst = BernoulliInstance {
        probs,
        ell: args.ell,
        horizon: args.horizon,
    };
    let exact = brute_force_expectation(&inst)?;
    let mc = monte_carlo_expectation(&inst, args.episodes, cli.seed.unwrap_or(0))?;
    let z = |est: f64, se: f64, exact: f64| {
        if se > 0.0 {
            (est - exact).abs() / se
        } else if est == exact {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let zr = z(mc.pseudo_regret, mc.pseudo_regret_se, exact.pseudo_regret);
    let zc = z(mc.compensation, mc.compensation_se, exact.compensation);
    println!(
        "pseudo_regret: exact = {}, monte_carlo = {} (se {}), |z| = {zr:.3}",
        format_float(exact.pseudo_regret),
        format_float(mc.pseudo_regret),
        format_float(mc.pseudo_regret_se)
    );
    println!(
        "compensation: exact = {}, monte_carlo = {} (se {}), |z| = {zc:.3}",
        format_float(exact.compensation),
        format_float(mc.compensation),
        format_float(mc.compensation_se)
    );
    if zr > 3.0 || zc > 3.0 {
        return Err(Error::InvariantViolation(format!(
            "simulator disagrees with exact expectation (|z| = {zr:.3}, {zc:.3})"
        ))
        .into());
    }
    println!("agreement within 3 standard errors");
    Ok(())
}

fn plot(cli: &Cli, args: &PlotArgs) -> Result<()> {
    for path in plot_summary(&args.input, &cli.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
