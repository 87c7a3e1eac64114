//! Line-based `key = value` experiment configuration.
//!
//! Keys mirror the fields of [`ExperimentConfig`]. `#` starts a comment,
//! blank lines are ignored, and unknown or repeated keys are errors.
//! [`to_text`] writes every key in a fixed order, so parsing and
//! re-serializing always produces the same canonical text.

use std::collections::BTreeMap;
use std::path::Path;

use incentive_bandit::env::NoiseScale;
use incentive_bandit::harness::output::format_float;
use incentive_bandit::harness::{Baseline, ExperimentConfig, Mode, PsiPolicy};
use incentive_bandit::incentive::LogMode;

use crate::error::{CliError, Result};

/// Every accepted key, in canonical order.
pub const KEYS: [&str; 18] = [
    "mode",
    "horizon",
    "d_a",
    "d_x",
    "lipschitz",
    "psi",
    "psi_c",
    "noise_scale",
    "noise_interpretation",
    "noise_clip",
    "ell_low",
    "ell_high",
    "trials",
    "master_seed",
    "log_mode",
    "baselines",
    "bound_constant",
    "threads",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
}

fn parse_float(key: &str, value: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_num(key, value)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{key}` must be finite, got `{value}`"))
    }
}

/// Sets one key on `config`. Values are validated individually here and
/// jointly by [`ExperimentConfig::validate`].
pub fn apply(config: &mut ExperimentConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let value = value.trim();
    match key {
        "mode" => {
            config.mode = match value {
                "stochastic" => Mode::Stochastic,
                "contextual" => Mode::Contextual,
                _ => return Err(format!("`mode` is `stochastic` or `contextual`, got `{value}`")),
            }
        }
        "horizon" => config.horizon = parse_num(key, value)?,
        "d_a" => config.d_a = parse_num(key, value)?,
        "d_x" => config.d_x = parse_num(key, value)?,
        "lipschitz" => config.lipschitz = parse_float(key, value)?,
        "psi" => {
            config.psi = if value == "auto" {
                match config.psi {
                    PsiPolicy::Auto { c } => PsiPolicy::Auto { c },
                    PsiPolicy::Fixed(_) => PsiPolicy::Auto { c: 1.0 },
                }
            } else {
                PsiPolicy::Fixed(parse_float(key, value)?)
            }
        }
        "psi_c" => match config.psi {
            PsiPolicy::Auto { .. } => config.psi = PsiPolicy::Auto { c: parse_float(key, value)? },
            PsiPolicy::Fixed(_) => return Err("`psi_c` only applies when `psi = auto`".into()),
        },
        "noise_scale" => config.noise.scale = parse_float(key, value)?,
        "noise_interpretation" => {
            config.noise.interpretation = match value {
                "variance" => NoiseScale::Variance,
                "std_dev" => NoiseScale::StdDev,
                _ => {
                    return Err(format!(
                        "`noise_interpretation` is `variance` or `std_dev`, got `{value}`"
                    ))
                }
            }
        }
        "noise_clip" => {
            config.noise.clip_to_unit = match value {
                "true" => true,
                "false" => false,
                _ => return Err(format!("`noise_clip` is `true` or `false`, got `{value}`")),
            }
        }
        "ell_low" => config.drift.ell_low = parse_float(key, value)?,
        "ell_high" => config.drift.ell_high = parse_float(key, value)?,
        "trials" => config.trials = parse_num(key, value)?,
        "master_seed" => config.master_seed = parse_num(key, value)?,
        "log_mode" => {
            config.log_mode = match value {
                "round" => LogMode::Round,
                "horizon" => LogMode::Horizon,
                _ => return Err(format!("`log_mode` is `round` or `horizon`, got `{value}`")),
            }
        }
        "baselines" => config.baselines = parse_baselines(value)?,
        "bound_constant" => config.bound_constant = parse_float(key, value)?,
        "threads" => {
            config.threads = if value == "auto" {
                None
            } else {
                Some(parse_num(key, value)?)
            }
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn parse_baselines(value: &str) -> std::result::Result<Vec<Baseline>, String> {
    if value == "none" || value.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for name in value.split(',').map(str::trim) {
        let b = match name {
            "greedy_only" => Baseline::GreedyOnly,
            "ucb_no_incentive" => Baseline::UcbNoIncentive,
            _ => {
                return Err(format!(
                    "unknown baseline `{name}` (expected greedy_only or ucb_no_incentive)"
                ))
            }
        };
        if !out.contains(&b) {
            out.push(b);
        }
    }
    out.sort();
    Ok(out)
}

/// Parses config text on top of `base`. `source_name` labels error messages.
pub fn parse_onto(base: ExperimentConfig, text: &str, source_name: &str) -> Result<ExperimentConfig> {
    let err = |line: usize, message: String| CliError::Config {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut entries: BTreeMap<usize, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let slot = KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| err(i + 1, format!("unknown key `{key}`")))?;
        if entries.insert(slot, (i + 1, value)).is_some() {
            return Err(err(i + 1, format!("duplicate key `{key}`")));
        }
    }
    // Canonical order, so `psi_c` always sees the final `psi`.
    let mut config = base;
    for (slot, (line, value)) in entries {
        apply(&mut config, KEYS[slot], value).map_err(|m| err(line, m))?;
    }
    config
        .validate()
        .map_err(|e| err(0, e.to_string()))?;
    Ok(config)
}

pub fn parse(text: &str, source_name: &str) -> Result<ExperimentConfig> {
    parse_onto(ExperimentConfig::default(), text, source_name)
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Core(incentive_bandit::Error::io(path, e)))?;
    parse(&text, &path.display().to_string())
}

/// Canonical `key = value` lines.
pub fn to_lines(config: &ExperimentConfig) -> Vec<String> {
    let mut lines = Vec::with_capacity(KEYS.len());
    let mut push = |k: &str, v: String| lines.push(format!("{k} = {v}"));
    push(
        "mode",
        match config.mode {
            Mode::Stochastic => "stochastic",
            Mode::Contextual => "contextual",
        }
        .into(),
    );
    push("horizon", config.horizon.to_string());
    push("d_a", config.d_a.to_string());
    push("d_x", config.d_x.to_string());
    push("lipschitz", format_float(config.lipschitz));
    match config.psi {
        PsiPolicy::Auto { c } => {
            push("psi", "auto".into());
            push("psi_c", format_float(c));
        }
        PsiPolicy::Fixed(p) => push("psi", format_float(p)),
    }
    push("noise_scale", format_float(config.noise.scale));
    push(
        "noise_interpretation",
        match config.noise.interpretation {
            NoiseScale::Variance => "variance",
            NoiseScale::StdDev => "std_dev",
        }
        .into(),
    );
    push("noise_clip", config.noise.clip_to_unit.to_string());
    push("ell_low", format_float(config.drift.ell_low));
    push("ell_high", format_float(config.drift.ell_high));
    push("trials", config.trials.to_string());
    push("master_seed", config.master_seed.to_string());
    push(
        "log_mode",
        match config.log_mode {
            LogMode::Round => "round",
            LogMode::Horizon => "horizon",
        }
        .into(),
    );
    push(
        "baselines",
        if config.baselines.is_empty() {
            "none".into()
        } else {
            config
                .baselines
                .iter()
                .map(|b| b.name())
                .collect::<Vec<_>>()
                .join(",")
        },
    );
    push("bound_constant", format_float(config.bound_constant));
    push(
        "threads",
        config.threads.map_or("auto".into(), |n| n.to_string()),
    );
    lines
}

pub fn to_text(config: &ExperimentConfig) -> String {
    let mut s = to_lines(config).join("\n");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use incentive_bandit::env::{DriftModel, NoiseModel};
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let text = to_text(&ExperimentConfig::default());
        assert!(text.starts_with("mode = stochastic\nhorizon = 20000\n"));
        assert!(text.contains("psi = auto\npsi_c = 1\n"));
        assert!(text.contains("noise_scale = 0.050000000000000003\n"));
        assert_eq!(parse(&text, "t").unwrap(), ExperimentConfig::default());
        assert_eq!(parse("", "t").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn comments_whitespace_and_order() {
        let cfg = parse(
            "# header\n  psi_c=2  \n\npsi = auto # inline\nhorizon=50\ntrials = 3\nbaselines = ucb_no_incentive, greedy_only\n",
            "t",
        )
        .unwrap();
        assert_eq!(cfg.psi, PsiPolicy::Auto { c: 2.0 });
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.baselines, vec![Baseline::GreedyOnly, Baseline::UcbNoIncentive]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("horizon = 5\nwidth = 3\n", "cfg.txt").unwrap_err();
        assert_eq!(e.to_string(), "cfg.txt:2: unknown key `width`");
        let e = parse("trials = 2\ntrials = 3", "c").unwrap_err();
        assert!(e.to_string().starts_with("c:2: duplicate key"));
        let e = parse("horizon = many", "c").unwrap_err();
        assert!(e.to_string().contains("expects a number"));
        assert!(parse("just text", "c").is_err());
        assert!(parse("psi = 0.1\npsi_c = 2", "c").is_err());
        assert!(parse("psi = nan", "c").is_err());
        assert_eq!(parse("x = 1", "c").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn joint_validation() {
        assert!(parse("trials = 0", "c").is_err());
        assert!(parse("ell_low = 0.6\nell_high = 0.5", "c").is_err());
        assert!(parse("mode = contextual", "c").is_err());
        assert!(parse("mode = contextual\nd_x = 1", "c").is_ok());
        assert!(parse("psi = -1", "c").is_err());
        assert!(parse("threads = 0", "c").is_err());
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            (any::<bool>(), 1u64..1_000_000, 1usize..5, 0usize..4, 0.01f64..10.0),
            (any::<bool>(), 1e-4f64..2.0, 0.0f64..1.0, any::<bool>(), any::<bool>()),
            (0.0f64..1.0, 0.0f64..1.0, 1usize..50, any::<u64>(), any::<bool>()),
            (0usize..4, 0.0f64..5.0, proptest::option::of(1usize..16)),
        )
            .prop_map(|(a, b, c, d)| {
                let (ctx, horizon, d_a, d_x, lipschitz) = a;
                let (auto, psi, scale, std_dev, clip) = b;
                let (l1, l2, trials, master_seed, horizon_log) = c;
                let (base_mask, bound_constant, threads) = d;
                let mode = if ctx { Mode::Contextual } else { Mode::Stochastic };
                ExperimentConfig {
                    mode,
                    horizon,
                    d_a,
                    d_x: if ctx { d_x.max(1) } else { d_x },
                    lipschitz,
                    psi: if auto { PsiPolicy::Auto { c: psi } } else { PsiPolicy::Fixed(psi) },
                    noise: NoiseModel {
                        scale,
                        interpretation: if std_dev { NoiseScale::StdDev } else { NoiseScale::Variance },
                        clip_to_unit: clip,
                    },
                    drift: DriftModel {
                        ell_low: l1.min(l2),
                        ell_high: l1.max(l2),
                    },
                    trials,
                    master_seed,
                    log_mode: if horizon_log { LogMode::Horizon } else { LogMode::Round },
                    baselines: [Baseline::GreedyOnly, Baseline::UcbNoIncentive]
                        .into_iter()
                        .enumerate()
                        .filter(|(i, _)| base_mask & (1 << i) != 0)
                        .map(|(_, b)| b)
                        .collect(),
                    bound_constant,
                    threads,
                }
            })
    }

    proptest! {
        #[test]
        fn round_trip(cfg in arb_config()) {
            let text = to_text(&cfg);
            let back = parse(&text, "p").unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(to_text(&back), text);
        }

        #[test]
        fn canonical_form_is_a_fixed_point(cfg in arb_config(), rev in any::<bool>()) {
            // Shuffle the key order and add noise; the canonical text is unchanged.
            let mut lines = to_lines(&cfg);
            if rev {
                lines.reverse();
            }
            let messy: String = lines
                .iter()
                .map(|l| format!("  {}   # note\n\n", l.replace(" = ", "=")))
                .collect();
            prop_assert_eq!(to_text(&parse(&messy, "p").unwrap()), to_text(&cfg));
        }
    }
}
