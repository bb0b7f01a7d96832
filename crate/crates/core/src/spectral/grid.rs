use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::SpectralError;

/// Default cap on the number of lattice nodes a grid may carry (2^24).
pub const DEFAULT_NODE_BUDGET: usize = 1 << 24;

/// Periodic box `[-L/2, L/2)^N` sampled with `n` nodes per axis.
///
/// Cloning is cheap: transform plans and wavenumber tables are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dims: usize,
    n: usize,
    extent: f64,
    /// |xi|^2 on the half spectrum (last axis holds n/2 + 1 modes).
    wavenumber_sq: Vec<f64>,
    dealias: Vec<bool>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Builds a grid with the default node budget.
pub fn make_grid(dims: usize, extent: f64, points_per_axis: usize) -> Result<Grid, SpectralError> {
    Grid::with_budget(dims, extent, points_per_axis, DEFAULT_NODE_BUDGET)
}

impl Grid {
    pub fn new(dims: usize, extent: f64, points_per_axis: usize) -> Result<Self, SpectralError> {
        make_grid(dims, extent, points_per_axis)
    }

    pub fn with_budget(
        dims: usize,
        extent: f64,
        points_per_axis: usize,
        node_budget: usize,
    ) -> Result<Self, SpectralError> {
        if !(1..=3).contains(&dims) {
            return Err(SpectralError::InvalidDims(dims));
        }
        let n = points_per_axis;
        if n < 8 || !n.is_power_of_two() {
            return Err(SpectralError::NotPowerOfTwo(n));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(SpectralError::InvalidExtent(extent));
        }
        let nodes = n
            .checked_pow(dims as u32)
            .filter(|&c| c <= node_budget)
            .ok_or(SpectralError::MemoryBudgetExceeded {
                nodes: n.saturating_pow(dims as u32),
                budget: node_budget,
            })?;

        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        let r2c = real_planner.plan_fft_forward(n);
        let c2r = real_planner.plan_fft_inverse(n);
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);

        let half = n / 2 + 1;
        let spectral_len = nodes / n * half;
        let step = 2.0 * PI / extent;
        let mut wavenumber_sq = Vec::with_capacity(spectral_len);
        let mut dealias = Vec::with_capacity(spectral_len);
        let mut idx = vec![0usize; dims];
        for _ in 0..spectral_len {
            let mut ksq = 0.0;
            let mut keep = true;
            for (axis, &k) in idx.iter().enumerate() {
                let j = if axis + 1 == dims { k as i64 } else { signed_mode(k, n) };
                let xi = step * j as f64;
                ksq += xi * xi;
                keep &= 3 * j.unsigned_abs() as usize <= n;
            }
            wavenumber_sq.push(ksq);
            dealias.push(keep);
            // advance the half-spectrum multi-index, last axis fastest
            for axis in (0..dims).rev() {
                let len = if axis + 1 == dims { half } else { n };
                idx[axis] += 1;
                if idx[axis] < len {
                    break;
                }
                idx[axis] = 0;
            }
        }

        Ok(Self {
            inner: Arc::new(GridInner {
                dims,
                n,
                extent,
                wavenumber_sq,
                dealias,
                r2c,
                c2r,
                fwd,
                inv,
            }),
        })
    }

    pub fn dims(&self) -> usize {
        self.inner.dims
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.n
    }

    pub fn extent(&self) -> f64 {
        self.inner.extent
    }

    pub fn spacing(&self) -> f64 {
        self.inner.extent / self.inner.n as f64
    }

    /// Total number of lattice nodes, `n^N`.
    pub fn len(&self) -> usize {
        self.inner.n.pow(self.inner.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one lattice cell, `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dims as i32)
    }

    pub fn volume(&self) -> f64 {
        self.inner.extent.powi(self.inner.dims as i32)
    }

    /// Signed integer modes of one axis in standard FFT ordering.
    pub fn modes(&self) -> Vec<i64> {
        (0..self.inner.n).map(|k| signed_mode(k, self.inner.n)).collect()
    }

    /// Angular frequencies `2 pi j / L` of one axis in FFT ordering.
    pub fn frequencies(&self) -> Vec<f64> {
        let step = self.frequency_step();
        self.modes().into_iter().map(|j| step * j as f64).collect()
    }

    pub fn frequency_step(&self) -> f64 {
        2.0 * PI / self.inner.extent
    }

    /// Coordinate of node `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.inner.extent + i as f64 * self.spacing()
    }

    /// Writes the coordinates of flat node `index` into `out` (length N).
    pub fn position(&self, index: usize, out: &mut [f64]) {
        let n = self.inner.n;
        let mut rem = index;
        for axis in (0..self.inner.dims).rev() {
            out[axis] = self.coordinate(rem % n);
            rem /= n;
        }
    }

    /// Multi-index of flat node `index`.
    pub fn unravel(&self, index: usize, out: &mut [usize]) {
        let n = self.inner.n;
        let mut rem = index;
        for axis in (0..self.inner.dims).rev() {
            out[axis] = rem % n;
            rem /= n;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.inner.n + i)
    }

    /// Euclidean norm of the node position, `|x|`.
    pub fn radius(&self, index: usize) -> f64 {
        let mut pos = [0.0; 3];
        self.position(index, &mut pos[..self.inner.dims]);
        pos.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Length of the half spectrum produced by [`Grid::forward`].
    pub fn spectral_len(&self) -> usize {
        self.inner.wavenumber_sq.len()
    }

    /// `|xi|^2` for every half-spectrum coefficient.
    pub fn wavenumber_sq(&self) -> &[f64] {
        &self.inner.wavenumber_sq
    }

    /// 2/3-rule mask on the half spectrum; `true` means the mode is kept.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.inner.dealias
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }

    /// Unnormalized forward real-to-complex transform.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let g = &*self.inner;
        let n = g.n;
        let half = n / 2 + 1;
        let rows = values.len() / n;
        let mut out = vec![Complex64::new(0.0, 0.0); rows * half];
        let mut input = g.r2c.make_input_vec();
        let mut scratch = g.r2c.make_scratch_vec();
        for (row, dst) in values.chunks_exact(n).zip(out.chunks_exact_mut(half)) {
            input.copy_from_slice(row);
            g.r2c
                .process_with_scratch(&mut input, dst, &mut scratch)
                .expect("buffer sizes fixed by plan");
        }
        self.complex_axes(&mut out, &g.fwd);
        out
    }

    /// Normalized inverse transform; Hermitian symmetry is enforced on the
    /// purely real modes of the last axis before the complex-to-real pass.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        let g = &*self.inner;
        let n = g.n;
        let half = n / 2 + 1;
        self.complex_axes(&mut spectrum, &g.inv);
        let scale = 1.0 / self.len() as f64;
        let mut out = vec![0.0; spectrum.len() / half * n];
        let mut scratch = g.c2r.make_scratch_vec();
        for (row, dst) in spectrum.chunks_exact_mut(half).zip(out.chunks_exact_mut(n)) {
            row[0].im = 0.0;
            row[half - 1].im = 0.0;
            g.c2r
                .process_with_scratch(row, dst, &mut scratch)
                .expect("buffer sizes fixed by plan");
        }
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    fn complex_axes(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let g = &*self.inner;
        let n = g.n;
        let half = n / 2 + 1;
        if g.dims == 1 {
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..g.dims - 1 {
            // stride of `axis` in the half-spectrum layout
            let stride = half * n.pow((g.dims - 2 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.dims == other.inner.dims
            && self.inner.n == other.inner.n
            && self.inner.extent == other.inner.extent
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dims", &self.inner.dims)
            .field("points_per_axis", &self.inner.n)
            .field("extent", &self.inner.extent)
            .finish()
    }
}

pub(crate) fn signed_mode(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
