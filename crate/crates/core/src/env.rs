//! Ground-truth rewards, observation noise and the compensation drift channel.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::space::linf_distance;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RewardKind {
    /// `mu(a) = L * sum_i a_i`.
    LinearStochastic,
    /// `nu(a, x) = L * (sum_i a_i + sum_j x_j)`.
    LinearContextual,
    /// A flat landscape, used to sanity-check Lipschitz estimation.
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanRewardModel {
    pub kind: RewardKind,
    pub lipschitz: f64,
    pub d_a: usize,
    pub d_x: usize,
}

impl MeanRewardModel {
    pub fn linear(lipschitz: f64, d: usize) -> Result<Self> {
        Self::validated(RewardKind::LinearStochastic, lipschitz, d, 0)
    }

    pub fn contextual(lipschitz: f64, d_a: usize, d_x: usize) -> Result<Self> {
        Self::validated(RewardKind::LinearContextual, lipschitz, d_a, d_x)
    }

    pub fn constant(value: f64, d: usize) -> Self {
        Self {
            kind: RewardKind::Constant(value),
            lipschitz: 0.0,
            d_a: d,
            d_x: 0,
        }
    }

    fn validated(kind: RewardKind, lipschitz: f64, d_a: usize, d_x: usize) -> Result<Self> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::invalid(format!(
                "Lipschitz constant must be > 0, got {lipschitz}"
            )));
        }
        if d_a == 0 {
            return Err(Error::invalid("arm dimension must be positive"));
        }
        Ok(Self {
            kind,
            lipschitz,
            d_a,
            d_x,
        })
    }

    pub fn is_contextual(&self) -> bool {
        self.kind == RewardKind::LinearContextual
    }

    fn check_dims(&self, a: &[f64], x: Option<&[f64]>) -> Result<()> {
        if a.len() != self.d_a {
            return Err(Error::invalid(format!(
                "arm has dimension {}, model expects {}",
                a.len(),
                self.d_a
            )));
        }
        match (self.is_contextual(), x) {
            (true, None) => Err(Error::invalid("contextual reward needs a context")),
            (true, Some(x)) if x.len() != self.d_x => Err(Error::invalid(format!(
                "context has dimension {}, model expects {}",
                x.len(),
                self.d_x
            ))),
            _ => Ok(()),
        }
    }

    /// Best achievable mean over the continuous arm space (for context `x`).
    pub fn optimal_value(&self, x: Option<&[f64]>) -> Result<f64> {
        self.mean(&vec![1.0; self.d_a], x)
    }

    pub fn mean(&self, a: &[f64], x: Option<&[f64]>) -> Result<f64> {
        self.check_dims(a, x)?;
        let arm_sum: f64 = a.iter().sum();
        Ok(match self.kind {
            RewardKind::LinearStochastic => self.lipschitz * arm_sum,
            RewardKind::LinearContextual => {
                let ctx_sum: f64 = x.map_or(0.0, |x| x.iter().sum());
                self.lipschitz * (arm_sum + ctx_sum)
            }
            RewardKind::Constant(v) => v,
        })
    }
}

pub fn mean_reward(model: &MeanRewardModel, a: &[f64], x: Option<&[f64]>) -> Result<f64> {
    model.mean(a, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseScale {
    Variance,
    StdDev,
}

/// Additive Gaussian observation noise.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub scale: f64,
    pub interpretation: NoiseScale,
    pub clip_to_unit: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            scale: 0.05,
            interpretation: NoiseScale::Variance,
            clip_to_unit: false,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            scale: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid(format!(
                "noise scale must be >= 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn std_dev(&self) -> f64 {
        match self.interpretation {
            NoiseScale::Variance => self.scale.sqrt(),
            NoiseScale::StdDev => self.scale,
        }
    }

    /// Perturbs `mean` with one standard-normal draw. The draw is taken even
    /// when the scale is zero so the stream position never depends on it.
    pub fn perturb<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let value = mean + self.std_dev() * z;
        if self.clip_to_unit {
            value.clamp(0.0, 1.0)
        } else {
            value
        }
    }
}

pub fn sample_reward<R: Rng + ?Sized>(
    model: &MeanRewardModel,
    noise: &NoiseModel,
    a: &[f64],
    x: Option<&[f64]>,
    rng: &mut R,
) -> Result<f64> {
    noise.validate()?;
    let mean = model.mean(a, x)?;
    Ok(noise.perturb(mean, rng))
}

/// Linear drift `gamma_t(kappa) = ell_t * kappa` with `ell_t` redrawn
/// uniformly from `[ell_low, ell_high]` every round.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftModel {
    pub ell_low: f64,
    pub ell_high: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            ell_low: 0.45,
            ell_high: 0.55,
        }
    }
}

impl DriftModel {
    pub fn new(ell_low: f64, ell_high: f64) -> Result<Self> {
        let m = Self { ell_low, ell_high };
        m.validate()?;
        Ok(m)
    }

    /// Drift pinned to a single slope.
    pub fn fixed(ell: f64) -> Result<Self> {
        Self::new(ell, ell)
    }

    /// No drift at all.
    pub fn off() -> Self {
        Self {
            ell_low: 0.0,
            ell_high: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell_low >= 0.0) || !(self.ell_high >= self.ell_low) || !self.ell_high.is_finite()
        {
            return Err(Error::invalid(format!(
                "drift slopes need 0 <= ell_low <= ell_high, got [{}, {}]",
                self.ell_low, self.ell_high
            )));
        }
        Ok(())
    }

    /// The worst-case slope `ell`.
    pub fn ell(&self) -> f64 {
        self.ell_high
    }

    pub fn draw_slope<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.ell_low + (self.ell_high - self.ell_low) * u
    }

    /// Returns `(gamma, ell_t)`.
    pub fn drift<R: Rng + ?Sized>(&self, kappa: f64, rng: &mut R) -> Result<(f64, f64)> {
        if !(kappa >= 0.0) {
            return Err(Error::invalid(format!(
                "compensation must be >= 0, got {kappa}"
            )));
        }
        let ell_t = self.draw_slope(rng);
        Ok((ell_t * kappa, ell_t))
    }
}

/// Distance between `(a, x)` pairs: ℓ∞ on arms plus ℓ∞ on contexts.
pub fn product_distance(a: &[f64], x: &[f64], a2: &[f64], x2: &[f64]) -> f64 {
    linf_distance(a, a2) + linf_distance(x, x2)
}

/// `|mean(p) - mean(q)| / distance(p, q)`, zero for coincident points.
pub fn lipschitz_ratio(
    model: &MeanRewardModel,
    (a, x): (&[f64], &[f64]),
    (a2, x2): (&[f64], &[f64]),
) -> Result<f64> {
    let ctx = |v: &[f64]| -> Option<Vec<f64>> { model.is_contextual().then(|| v.to_vec()) };
    let m1 = model.mean(a, ctx(x).as_deref())?;
    let m2 = model.mean(a2, ctx(x2).as_deref())?;
    let dist = if model.is_contextual() {
        product_distance(a, x, a2, x2)
    } else {
        linf_distance(a, a2)
    };
    Ok(if dist == 0.0 {
        0.0
    } else {
        (m1 - m2).abs() / dist
    })
}

/// Largest observed ratio over `n_pairs` uniformly sampled point pairs.
pub fn verify_lipschitz<R: Rng + ?Sized>(
    model: &MeanRewardModel,
    n_pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_pairs == 0 {
        return Err(Error::invalid("need at least one pair"));
    }
    let d_x = if model.is_contextual() { model.d_x } else { 0 };
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>()).collect() };
    let mut worst: f64 = 0.0;
    for _ in 0..n_pairs {
        let (a, x, a2, x2) = (draw(model.d_a), draw(d_x), draw(model.d_a), draw(d_x));
        worst = worst.max(lipschitz_ratio(model, (&a, &x), (&a2, &x2))?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_reward_examples() {
        let m = MeanRewardModel::linear(2.5, 3).unwrap();
        assert_eq!(m.mean(&[0.0, 0.0, 0.0], None).unwrap(), 0.0);
        let m = MeanRewardModel::linear(1.0, 2).unwrap();
        assert_eq!(m.mean(&[1.0, 1.0], None).unwrap(), 2.0);
        assert_eq!(m.optimal_value(None).unwrap(), 2.0);
        let c = MeanRewardModel::contextual(0.5, 1, 1).unwrap();
        assert_eq!(c.mean(&[0.5], Some(&[0.5])).unwrap(), 0.5);
        assert_eq!(c.optimal_value(Some(&[0.25])).unwrap(), 0.625);
    }

    #[test]
    fn mean_reward_errors() {
        let c = MeanRewardModel::contextual(1.0, 1, 1).unwrap();
        assert!(matches!(c.mean(&[0.5], None), Err(Error::InvalidParameter(_))));
        assert!(c.mean(&[0.5], Some(&[0.1, 0.2])).is_err());
        let m = MeanRewardModel::linear(1.0, 2).unwrap();
        assert!(m.mean(&[0.5], None).is_err());
        assert!(MeanRewardModel::linear(0.0, 1).is_err());
        assert!(MeanRewardModel::linear(1.0, 0).is_err());
    }

    #[test]
    fn zero_noise_is_exact() {
        let m = MeanRewardModel::linear(1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r = sample_reward(&m, &NoiseModel::noiseless(), &[0.3, 0.4], None, &mut rng).unwrap();
            assert_eq!(r, m.mean(&[0.3, 0.4], None).unwrap());
        }
    }

    #[test]
    fn gaussian_sample_mean() {
        let m = MeanRewardModel::linear(1.0, 1).unwrap();
        let noise = NoiseModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| sample_reward(&m, &noise, &[1.0], None, &mut rng).unwrap())
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() <= 3.0 * (0.05f64 / n as f64).sqrt());
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 0.05).abs() < 0.002, "variance {var}");
    }

    #[test]
    fn std_dev_interpretation() {
        let noise = NoiseModel {
            scale: 0.05,
            interpretation: NoiseScale::StdDev,
            clip_to_unit: false,
        };
        assert_eq!(noise.std_dev(), 0.05);
        assert_eq!(NoiseModel::default().std_dev(), 0.05f64.sqrt());
    }

    #[test]
    fn clipping_bounds_output() {
        let m = MeanRewardModel::linear(1.0, 1).unwrap();
        let noise = NoiseModel {
            scale: 1.0,
            clip_to_unit: true,
            ..NoiseModel::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let r = sample_reward(&m, &noise, &[1.0], None, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = MeanRewardModel::linear(1.0, 1).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_reward(&m, &NoiseModel::default(), &[0.7], None, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(17), draw(17));
    }

    #[test]
    fn drift_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (g, ell) = DriftModel::default().drift(0.0, &mut rng).unwrap();
        assert_eq!(g, 0.0);
        assert!((0.45..=0.55).contains(&ell));
        let (g, ell) = DriftModel::fixed(0.5).unwrap().drift(0.2, &mut rng).unwrap();
        assert_eq!(ell, 0.5);
        assert_eq!(g, 0.1);
        assert!(DriftModel::default().drift(-0.1, &mut rng).is_err());
        assert!(DriftModel::new(0.6, 0.5).is_err());
        assert!(DriftModel::new(-0.1, 0.5).is_err());
    }

    #[test]
    fn drift_monte_carlo_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| DriftModel::default().drift(0.2, &mut rng).unwrap().0)
            .collect();
        for &g in &draws {
            assert!((0.45 * 0.2..=0.55 * 0.2).contains(&g));
        }
        let mean = draws.iter().sum::<f64>() / n as f64;
        // ell_t ~ U[0.45, 0.55]: sd(gamma) = 0.2 * 0.1 / sqrt(12)
        let se = 0.2 * 0.1 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 0.1).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn lipschitz_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (l, d) in [(1.0, 1), (2.0, 2), (0.7, 3)] {
            let m = MeanRewardModel::linear(l, d).unwrap();
            let r = verify_lipschitz(&m, 5_000, &mut rng).unwrap();
            assert!(r <= l * d as f64 + 1e-9);
            assert!(r > 0.0);
        }
        let m = MeanRewardModel::linear(1.7, 1).unwrap();
        let r = lipschitz_ratio(&m, (&[0.0], &[]), (&[1.0], &[])).unwrap();
        assert_eq!(r, 1.7);
        let flat = MeanRewardModel::constant(0.5, 2);
        assert_eq!(verify_lipschitz(&flat, 1_000, &mut rng).unwrap(), 0.0);
        let c = MeanRewardModel::contextual(1.0, 2, 1).unwrap();
        let r = verify_lipschitz(&c, 5_000, &mut rng).unwrap();
        assert!(r <= 2.0 + 1e-9);
        assert!(verify_lipschitz(&c, 0, &mut rng).is_err());
    }
}
