//! Uniform ψ-covers of the unit cube under the ℓ∞ metric.
//!
//! A cover with `k` points per axis places representatives at the cell
//! centers `(2i+1)/(2k)`. Each cell has ℓ∞ diameter `1/k`, and every point of
//! the cube lies within `1/(2k)` of its representative.

use crate::{Error, Result};

/// Default cap on the number of grid points a cover may hold (2^21).
pub const DEFAULT_ARM_BUDGET: u128 = 1 << 21;

/// Largest supported cube dimension.
pub const MAX_DIM: usize = 16;

/// A point of `[0,1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords
            .iter()
            .find(|c| !c.is_finite() || **c < 0.0 || **c > 1.0)
        {
            return Err(Error::invalid(format!(
                "point coordinate {c} outside [0,1]"
            )));
        }
        Ok(Self(coords))
    }

    /// The all-ones corner, i.e. the maximizer of any increasing linear reward.
    pub fn ones(d: usize) -> Self {
        Self(vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// ℓ∞ distance between two coordinate slices of equal length.
pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Number of grid points per axis for a requested mesh: the smallest `k` with
/// cell width `1/k <= psi`.
pub fn points_per_dim(psi: f64) -> Result<usize> {
    if !(psi > 0.0) || !psi.is_finite() {
        return Err(Error::invalid(format!("mesh psi must be > 0, got {psi}")));
    }
    if psi >= 1.0 {
        return Ok(1);
    }
    let raw = (1.0 / psi).ceil();
    if raw > (1u64 << 53) as f64 {
        return Err(Error::invalid(format!(
            "mesh psi = {psi} is too fine to index"
        )));
    }
    let mut k = raw as usize;
    // 1/psi may round just above an integer (psi = 1/3 gives 3.0000000000000004).
    if k > 1 && 1.0 / ((k - 1) as f64) <= psi {
        k -= 1;
    }
    Ok(k)
}

/// Tuned mesh `c * (ln T / (T L^2))^(1/(d+2))`.
pub fn optimal_psi(horizon: u64, lipschitz: f64, d: usize, c: f64) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::invalid(format!(
            "horizon must be >= 2 for the tuned mesh, got {horizon}"
        )));
    }
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(Error::invalid(format!(
            "Lipschitz constant must be > 0, got {lipschitz}"
        )));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("mesh multiplier must be > 0, got {c}")));
    }
    let t = horizon as f64;
    let base = t.ln() / (t * lipschitz * lipschitz);
    Ok(c * base.powf(1.0 / (d as f64 + 2.0)))
}

/// A uniform grid over `[0,1]^d` with `k` cell centers per axis, stored in
/// lexicographic order (first axis most significant).
#[derive(Clone, Debug, PartialEq)]
pub struct GridCover {
    d: usize,
    psi_target: f64,
    k: usize,
    axis: Vec<f64>,
    len: usize,
}

impl GridCover {
    pub fn new(d: usize, psi: f64) -> Result<Self> {
        Self::with_budget(d, psi, DEFAULT_ARM_BUDGET)
    }

    pub fn with_budget(d: usize, psi: f64, budget: u128) -> Result<Self> {
        if d > MAX_DIM {
            return Err(Error::invalid(format!(
                "dimension {d} exceeds the supported maximum {MAX_DIM}"
            )));
        }
        let k = points_per_dim(psi)?;
        let requested = (k as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if requested > budget {
            return Err(Error::BudgetExceeded { requested, budget });
        }
        let axis = (0..k)
            .map(|i| (2 * i + 1) as f64 / (2 * k) as f64)
            .collect();
        Ok(Self {
            d,
            psi_target: psi,
            k,
            axis,
            len: requested as usize,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn psi_target(&self) -> f64 {
        self.psi_target
    }

    pub fn points_per_dim(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Cell-center coordinates along one axis.
    pub fn axis_values(&self) -> &[f64] {
        &self.axis
    }

    /// Worst-case ℓ∞ distance from a point of the cube to its representative.
    pub fn radius(&self) -> f64 {
        1.0 / (2 * self.k) as f64
    }

    /// ℓ∞ diameter of each cell.
    pub fn cell_diameter(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Per-axis grid indices of point `index`.
    pub fn axis_indices(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        for slot in out.iter_mut().rev() {
            *slot = index % self.k;
            index /= self.k;
        }
        out
    }

    pub fn point(&self, index: usize) -> Point {
        assert!(index < self.len, "cover index {index} out of range");
        Point(
            self.axis_indices(index)
                .into_iter()
                .map(|i| self.axis[i])
                .collect(),
        )
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len).map(|i| self.point(i))
    }

    /// Sum of the coordinates of point `index`, summed in axis order.
    pub fn coord_sum(&self, index: usize) -> f64 {
        self.point(index).coords().iter().sum()
    }

    /// Index of the nearest grid point under ℓ∞, ties to the lowest index.
    ///
    /// The ℓ∞ optimum is the largest per-axis nearest distance `D`; the lowest
    /// index among all points within `D` takes, on each axis, the lowest
    /// center within `D` of the query.
    pub fn snap(&self, q: &[f64]) -> Result<usize> {
        if q.len() != self.d {
            return Err(Error::invalid(format!(
                "query has dimension {}, cover has {}",
                q.len(),
                self.d
            )));
        }
        let windows: Vec<(usize, usize)> = q
            .iter()
            .map(|&x| {
                let centre = ((x * self.k as f64).floor().max(0.0) as usize).min(self.k - 1);
                (centre.saturating_sub(2), (centre + 2).min(self.k - 1))
            })
            .collect();
        let worst = q
            .iter()
            .zip(&windows)
            .map(|(&x, &(lo, hi))| {
                (lo..=hi)
                    .map(|i| (x - self.axis[i]).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        let mut index = 0;
        for (&x, &(lo, hi)) in q.iter().zip(&windows) {
            let i = (lo..=hi)
                .find(|&i| (x - self.axis[i]).abs() <= worst)
                .expect("nearest center lies in the window");
            index = index * self.k + i;
        }
        Ok(index)
    }
}

/// Builds the ψ-cover with the default arm budget.
pub fn build_cover(d: usize, psi: f64) -> Result<GridCover> {
    GridCover::new(d, psi)
}
