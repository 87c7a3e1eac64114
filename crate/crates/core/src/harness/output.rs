//! CSV serialization.
//!
//! Files are LF-terminated, use `.` as decimal separator and print floats
//! with 17 significant digits in C `%.17g` style, so any value round-trips.
//! Optional preamble lines are written first, each prefixed with `# `.

use std::fmt::Write as _;
use std::path::Path;

use crate::harness::experiment::ExperimentSummary;
use crate::incentive::StepRecord;
use crate::{Error, Result};

pub const TRACE_HEADER: &str =
    "t,principal_arm,greedy_arm,kappa,rho,gamma,observed,ell_t,pseudo_regret_inc,realized_regret_inc";

pub const SUMMARY_HEADER: &str = "checkpoint_t,mean_pseudo_regret,ci_pseudo_regret,mean_realized_regret,ci_realized_regret,mean_compensation,ci_compensation,bound_value";

pub const TABLE_HEADER: &str = "d,psi,n_arms,mean_regret,mean_compensation";

/// Formats like C's `%.17g`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn preamble_text(out: &mut String, preamble: &[String]) {
    for line in preamble {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
}

pub fn trace_csv(records: &[StepRecord], preamble: &[String]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 200);
    preamble_text(&mut out, preamble);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.principal_arm,
            r.greedy_arm,
            format_float(r.kappa),
            format_float(r.rho),
            format_float(r.gamma),
            format_float(r.observed),
            format_float(r.ell_t),
            format_float(r.pseudo_regret_inc),
            format_float(r.realized_regret_inc),
        );
    }
    out
}

/// Header for a summary; baseline columns are appended only when the
/// summary carries baselines.
pub fn summary_header(summary: &ExperimentSummary) -> String {
    let mut h = SUMMARY_HEADER.to_string();
    for b in &summary.baselines {
        let n = b.kind.name();
        let _ = write!(
            h,
            ",{n}_mean_pseudo_regret,{n}_ci_pseudo_regret,{n}_mean_compensation,{n}_ci_compensation"
        );
    }
    h
}

pub fn summary_csv(summary: &ExperimentSummary, preamble: &[String]) -> String {
    let mut out = String::new();
    preamble_text(&mut out, preamble);
    out.push_str(&summary_header(summary));
    out.push('\n');
    for (j, t) in summary.checkpoints.iter().enumerate() {
        let mut fields = vec![
            t.to_string(),
            format_float(summary.pseudo_regret.mean[j]),
            format_float(summary.pseudo_regret.ci[j]),
            format_float(summary.realized_regret.mean[j]),
            format_float(summary.realized_regret.ci[j]),
            format_float(summary.compensation.mean[j]),
            format_float(summary.compensation.ci[j]),
            format_float(summary.bound[j]),
        ];
        for b in &summary.baselines {
            fields.push(format_float(b.pseudo_regret.mean[j]));
            fields.push(format_float(b.pseudo_regret.ci[j]));
            fields.push(format_float(b.compensation.mean[j]));
            fields.push(format_float(b.compensation.ci[j]));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// One row of the mesh-sensitivity table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub d: usize,
    pub psi: f64,
    pub n_arms: usize,
    pub mean_regret: f64,
    pub mean_compensation: f64,
}

impl TableRow {
    pub fn from_summary(summary: &ExperimentSummary) -> Self {
        Self {
            d: summary.config.dimension(),
            psi: summary.psi,
            n_arms: summary.n_arms * summary.n_contexts,
            mean_regret: summary.pseudo_regret.last(),
            mean_compensation: summary.compensation.last(),
        }
    }
}

pub fn table_csv(rows: &[TableRow], preamble: &[String]) -> String {
    let mut out = String::new();
    preamble_text(&mut out, preamble);
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.d,
            format_float(r.psi),
            r.n_arms,
            format_float(r.mean_regret),
            format_float(r.mean_compensation)
        );
    }
    out
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_trace_csv(path: &Path, records: &[StepRecord], preamble: &[String]) -> Result<()> {
    write_file(path, &trace_csv(records, preamble))
}

pub fn write_summary_csv(path: &Path, summary: &ExperimentSummary, preamble: &[String]) -> Result<()> {
    write_file(path, &summary_csv(summary, preamble))
}

pub fn write_table_csv(path: &Path, rows: &[TableRow], preamble: &[String]) -> Result<()> {
    write_file(path, &table_csv(rows, preamble))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DriftModel, NoiseModel};
    use crate::harness::experiment::{run_experiment, ExperimentConfig};
    use crate::incentive::{run_policy, FiniteArms, LogMode, Policy};
    use crate::rng::EpisodeRng;

    #[test]
    fn matches_c_g17() {
        // Reference strings from Python's '%.17g'.
        let cases: &[(f64, &str)] = &[
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (0.5, "0.5"),
            (-2.25, "-2.25"),
            (0.45, "0.45000000000000001"),
            (1e-5, "1.0000000000000001e-05"),
            (0.0001, "0.0001"),
            (123456.789, "123456.789"),
            (1e17, "1e+17"),
            (1.5e16, "15000000000000000"),
            (2773.73, "2773.73"),
            (1.0 / 3.0, "0.33333333333333331"),
            (-0.0, "-0"),
            (f64::INFINITY, "inf"),
            (6.02214076e23, "6.0221407599999999e+23"),
            (5e-324, "4.9406564584124654e-324"),
        ];
        for &(x, want) in cases {
            assert_eq!(format_float(x), want, "{x:e}");
        }
    }

    #[test]
    fn values_round_trip() {
        let mut z = 0x1234_5678u64;
        for _ in 0..10_000 {
            z = crate::rng::mix(z);
            let x = f64::from_bits(z);
            if x.is_finite() {
                assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
            }
        }
    }

    #[test]
    fn header_only_and_single_row() {
        assert_eq!(trace_csv(&[], &[]), format!("{TRACE_HEADER}\n"));
        assert_eq!(table_csv(&[], &[]), format!("{TABLE_HEADER}\n"));
        let env = FiniteArms::from_means(vec![0.5], NoiseModel::noiseless()).unwrap();
        let r = run_policy(&env, &DriftModel::default(), 1, LogMode::Round, Policy::Incentivized, &mut EpisodeRng::new(1))
            .unwrap();
        let text = trace_csv(&r.records, &["seed = 1".into()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "# seed = 1");
        assert!(lines[2].starts_with("1,0,0,0,0.5,0,0.5,"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn summary_columns_follow_baselines() {
        let cfg = ExperimentConfig {
            horizon: 50,
            trials: 2,
            ..ExperimentConfig::default()
        };
        let s = run_experiment(&cfg).unwrap();
        let text = summary_csv(&s, &[]);
        assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER);
        assert_eq!(text.lines().count(), s.checkpoints.len() + 1);
        let with = run_experiment(&ExperimentConfig {
            baselines: vec![crate::harness::Baseline::UcbNoIncentive],
            ..cfg
        })
        .unwrap();
        let header = summary_header(&with);
        assert!(header.ends_with("ucb_no_incentive_ci_compensation"));
        assert_eq!(header.split(',').count(), 12);
    }

    #[test]
    fn io_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_file(&blocker.join("sub/out.csv"), "data").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("file"));
    }
}
