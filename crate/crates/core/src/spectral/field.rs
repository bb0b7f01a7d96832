use num_complex::Complex64;

use super::grid::signed_mode;
use super::{Grid, SpectralError};

/// Real scalar lattice function on a [`Grid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFiniteInput);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Crate-internal constructor for values produced by finite arithmetic.
    pub(crate) fn from_parts(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_parts(grid, vec![c; grid.len()])
    }

    /// Samples `f` at every node position.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self, SpectralError> {
        let mut pos = vec![0.0; grid.dims()];
        let values = (0..grid.len())
            .map(|i| {
                grid.position(i, &mut pos);
                f(&pos)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Spacing-weighted sum `h^N sum u`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lattice maximum of `|u|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `L^p` norm; `p = f64::INFINITY` gives the lattice maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, self.grid.cell_volume(), p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Field {
        debug_assert!(self.grid.same_as(&other.grid));
        Field::from_parts(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    /// Discrete inner product `h^N sum u v`.
    pub fn dot(&self, other: &Field) -> f64 {
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }
}

/// Discrete `L^p` norm of raw values with cell measure `weight`.
pub fn lp_norm(values: &[f64], weight: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    // scaled to avoid overflow for large p
    let s: f64 = values.iter().map(|v| (v.abs() / peak).powf(p)).sum();
    peak * (weight * s).powf(1.0 / p)
}

/// Random real field whose Fourier modes satisfy `|k_j| <= max_mode` on
/// every axis; coefficients are uniform in `[-1, 1]` (real and imaginary parts).
pub fn band_limited_field(grid: &Grid, max_mode: usize, rng: &mut impl rand::Rng) -> Field {
    let n = grid.points_per_axis();
    let half = n / 2 + 1;
    let scale = grid.len() as f64;
    let spectrum = (0..grid.spectral_len())
        .map(|s| {
            let mut inside = s % half <= max_mode && s % half < n / 2;
            let mut rest = s / half;
            for _ in 1..grid.dims() {
                inside &= signed_mode(rest % n, n).unsigned_abs() as usize <= max_mode && rest % n != n / 2;
                rest /= n;
            }
            if inside {
                let re = rng.gen_range(-1.0..1.0);
                let im = if s == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
                Complex64::new(re, im) * scale
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Field::from_parts(grid, grid.inverse(spectrum))
}
