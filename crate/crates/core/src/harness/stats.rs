use crate::{Error, Result};

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// Number of log-spaced checkpoints (the horizon is always appended).
pub const CHECKPOINTS: usize = 40;

/// `c * L^(d/(d+2)) * T^((d+1)/(d+2)) * (ln T)^(1/(d+2))`.
///
/// Defined for every `T >= 1`; it vanishes at `T = 1` where `ln T = 0`.
pub fn theoretical_bound(horizon: u64, d: usize, lipschitz: f64, c_bound: f64) -> f64 {
    let t = horizon as f64;
    let d = d as f64;
    c_bound
        * lipschitz.powf(d / (d + 2.0))
        * t.powf((d + 1.0) / (d + 2.0))
        * t.ln().max(0.0).powf(1.0 / (d + 2.0))
}

/// Rounds `round(T^(i/40))` for `i = 0..=40`, deduplicated; always ends at `T`.
pub fn checkpoint_grid(horizon: u64) -> Vec<u64> {
    if horizon == 0 {
        return Vec::new();
    }
    let log_t = (horizon as f64).ln();
    let mut grid: Vec<u64> = (0..=CHECKPOINTS)
        .map(|i| {
            ((log_t * i as f64 / CHECKPOINTS as f64).exp().round() as u64).clamp(1, horizon)
        })
        .collect();
    grid.push(horizon);
    grid.dedup();
    grid
}

/// Least-squares slope of `ln(value)` against `ln(t)`.
pub fn sublinearity_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::DiagnosticUndefined(format!(
            "need at least 3 checkpoints, got {}",
            points.len()
        )));
    }
    if let Some((t, v)) = points.iter().find(|(t, v)| !(*t > 0.0) || !(*v > 0.0)) {
        return Err(Error::DiagnosticUndefined(format!(
            "log-log fit needs positive values, got ({t}, {v})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DiagnosticUndefined(
            "checkpoints must have distinct t".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Sample mean and 95% half-width `1.96 * sd / sqrt(n)`; zero width for one sample.
pub fn mean_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Z_95 * var.sqrt() / (n as f64).sqrt())
}
