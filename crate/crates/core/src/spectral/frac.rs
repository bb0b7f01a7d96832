use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Field, Grid, SpectralError};

/// Exponent `beta` of the fractional power `(-Delta)^beta`, with Fourier
/// symbol `|xi|^(2 beta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracPower {
    beta: f64,
}

impl FracPower {
    pub fn new(beta: f64) -> Result<Self, SpectralError> {
        if beta > 0.0 && beta <= 1.0 {
            Ok(Self { beta })
        } else {
            Err(SpectralError::BetaOutOfRange(beta))
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `|xi|^(2 beta)` evaluated from `|xi|^2`.
    pub fn symbol(&self, wavenumber_sq: f64) -> f64 {
        if wavenumber_sq == 0.0 {
            0.0
        } else if self.beta == 1.0 {
            wavenumber_sq
        } else {
            wavenumber_sq.powf(self.beta)
        }
    }
}

/// Multiplies the spectrum of `u` by `symbol(|xi|^2)`.
pub fn apply_multiplier(u: &Field, symbol: impl Fn(f64) -> f64) -> Field {
    let grid = u.grid();
    let mut spec = grid.forward(u.values());
    multiply_spectrum(grid, &mut spec, symbol);
    Field::from_parts(grid, grid.inverse(spec))
}

pub(crate) fn multiply_spectrum(grid: &Grid, spec: &mut [Complex64], symbol: impl Fn(f64) -> f64) {
    for (c, &ksq) in spec.iter_mut().zip(grid.wavenumber_sq()) {
        *c *= symbol(ksq);
    }
}

/// `(-Delta)^beta u` as a Fourier multiplier. The zero mode is annihilated.
pub fn frac_power(u: &Field, p: FracPower) -> Result<Field, SpectralError> {
    if !u.is_finite() {
        return Err(SpectralError::NonFiniteInput);
    }
    Ok(apply_multiplier(u, |ksq| p.symbol(ksq)))
}

/// Normalization of the singular-integral form of `(-Delta)^beta` in `R^N`:
/// `4^beta Gamma(N/2 + beta) / (pi^(N/2) |Gamma(-beta)|)`.
pub fn singular_integral_constant(dims: usize, beta: f64) -> f64 {
    let n = dims as f64;
    4f64.powf(beta) * libm::tgamma(0.5 * n + beta)
        / (PI.powf(0.5 * n) * libm::tgamma(-beta).abs())
}

/// Largest grid accepted by [`frac_power_quadrature`] (64 nodes per axis).
pub const QUADRATURE_MAX_POINTS: usize = 64;

/// Image boxes summed on each side in 1D; fewer in higher dimensions.
const IMAGES_1D: usize = 64;

/// Real-space evaluation of `(-Delta)^beta u` by the principal-value sum
/// `C_{N,beta} sum_y (u(x) - u(y)) / |x - y|^(N + 2 beta)` over the periodic
/// lattice and its images.
///
/// Offsets are paired as `+-z` and the node `y = x` is excluded; the
/// excluded cell is restored with the second-order Taylor term using the
/// discrete Laplacian. In 1D each offset weight integrates the kernel
/// exactly over its cell against a local quadratic. Images beyond the
/// summed range are replaced by their continuum tail acting on `u - mean(u)`.
pub fn frac_power_quadrature(u: &Field, p: FracPower) -> Result<Field, SpectralError> {
    let beta = p.beta();
    if beta >= 1.0 {
        return Err(SpectralError::BetaOutOfRange(beta));
    }
    let grid = u.grid();
    if grid.points_per_axis() > QUADRATURE_MAX_POINTS {
        return Err(SpectralError::GridTooLarge {
            nodes: grid.len(),
            max: QUADRATURE_MAX_POINTS.pow(grid.dims() as u32),
        });
    }
    if !u.is_finite() {
        return Err(SpectralError::NonFiniteInput);
    }

    let dims = grid.dims();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let c = singular_integral_constant(dims, beta);
    let (weights, tail) = periodic_weights(grid, beta);
    let center = center_cell_weight(dims, h, beta);

    let vals = u.values();
    let mean = u.mean();
    let mut idx = vec![0usize; dims];
    let mut shifted = vec![0usize; dims];
    let mut off = vec![0usize; dims];
    let out = (0..grid.len())
        .map(|i| {
            grid.unravel(i, &mut idx);
            let ui = vals[i];
            let mut acc = 0.0;
            for (r, &w) in weights.iter().enumerate().skip(1) {
                grid.unravel(r, &mut off);
                for a in 0..dims {
                    shifted[a] = (idx[a] + off[a]) % n;
                }
                acc += w * (ui - vals[grid.ravel(&shifted)]);
            }
            // discrete Laplacian for the excluded cell
            let mut lap = 0.0;
            for a in 0..dims {
                shifted.copy_from_slice(&idx);
                shifted[a] = (idx[a] + 1) % n;
                let up = vals[grid.ravel(&shifted)];
                shifted[a] = (idx[a] + n - 1) % n;
                let down = vals[grid.ravel(&shifted)];
                lap += (up + down - 2.0 * ui) / (h * h);
            }
            c * (acc + tail * (ui - mean) - center * lap)
        })
        .collect();
    Ok(Field::from_parts(grid, out))
}

/// Kernel weights folded onto lattice residues, plus the far-image tail
/// constant `int_{|z| > R} |z|^(-N - 2 beta) dz`.
fn periodic_weights(grid: &Grid, beta: f64) -> (Vec<f64>, f64) {
    let dims = grid.dims();
    let n = grid.points_per_axis() as i64;
    let h = grid.spacing();
    let mut weights = vec![0.0; grid.len()];
    let s = dims as f64 + 2.0 * beta;

    if dims == 1 {
        let reach = IMAGES_1D as i64 * n + n / 2;
        let e = 2.0 - 2.0 * beta;
        for m in 1..=reach {
            let mf = m as f64;
            let cell = (((mf + 0.5) * h).powf(e) - ((mf - 0.5) * h).powf(e)) / e;
            let w = cell / (mf * h).powi(2);
            weights[m.rem_euclid(n) as usize] += w;
            weights[(-m).rem_euclid(n) as usize] += w;
        }
        let radius = (reach as f64 + 0.5) * h;
        let tail = 2.0 * radius.powf(-2.0 * beta) / (2.0 * beta);
        return (weights, tail);
    }

    let images: i64 = if dims == 2 { 8 } else { 2 };
    let reach = images * n + n / 2;
    let cell = h.powi(dims as i32);
    let mut m = vec![-reach; dims];
    let mut residue = vec![0usize; dims];
    loop {
        let r2: i64 = m.iter().map(|v| v * v).sum();
        if r2 > 0 {
            let dist = (r2 as f64).sqrt() * h;
            for (a, &v) in m.iter().enumerate() {
                residue[a] = v.rem_euclid(n) as usize;
            }
            weights[grid.ravel(&residue)] += cell * dist.powf(-s);
        }
        let mut axis = dims;
        loop {
            if axis == 0 {
                let radius = (reach as f64 + 0.5) * h;
                let tail = sphere_area(dims) * radius.powf(-2.0 * beta) / (2.0 * beta);
                return (weights, tail);
            }
            axis -= 1;
            m[axis] += 1;
            if m[axis] <= reach {
                break;
            }
            m[axis] = -reach;
        }
    }
}

/// `(1 / 2N) int_{cell} |z|^(2 - N - 2 beta) dz` for the excluded cell;
/// exact in 1D, equal-volume ball otherwise.
fn center_cell_weight(dims: usize, h: f64, beta: f64) -> f64 {
    let e = 2.0 - 2.0 * beta;
    if dims == 1 {
        return (0.5 * h).powf(e) / e;
    }
    let n = dims as f64;
    let ball_volume_unit = PI.powf(0.5 * n) / libm::tgamma(0.5 * n + 1.0);
    let radius = (h.powi(dims as i32) / ball_volume_unit).powf(1.0 / n);
    sphere_area(dims) * radius.powf(e) / e / (2.0 * n)
}

fn sphere_area(dims: usize) -> f64 {
    match dims {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    fn mode(grid: &Grid, k: f64) -> Field {
        Field::from_fn(grid, |x| (k * x[0]).sin()).unwrap()
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn constant_is_annihilated() {
        let g = make_grid(2, 3.0, 16).unwrap();
        let u = Field::constant(&g, 2.5);
        let out = frac_power(&u, FracPower::new(0.4).unwrap()).unwrap();
        assert!(out.sup_norm() < 1e-14);
        let q = frac_power_quadrature(&u, FracPower::new(0.4).unwrap()).unwrap();
        assert!(q.sup_norm() < 1e-12);
    }

    #[test]
    fn single_modes() {
        let g = make_grid(1, 2.0 * PI, 64).unwrap();
        let out = frac_power(&mode(&g, 2.0), FracPower::new(0.5).unwrap()).unwrap();
        assert!(max_diff(&out, &mode(&g, 2.0).scale(2.0)) < 1e-13);
        let out = frac_power(&mode(&g, 3.0), FracPower::new(1.0).unwrap()).unwrap();
        assert!(max_diff(&out, &mode(&g, 3.0).scale(9.0)) < 1e-12);
    }

    #[test]
    fn beta_validation() {
        assert!(FracPower::new(0.0).is_err());
        assert!(FracPower::new(1.2).is_err());
        let g = make_grid(1, 2.0 * PI, 16).unwrap();
        let u = mode(&g, 1.0);
        assert!(matches!(
            frac_power_quadrature(&u, FracPower::new(1.0).unwrap()),
            Err(SpectralError::BetaOutOfRange(_))
        ));
        let big = make_grid(1, 2.0 * PI, 128).unwrap();
        assert!(matches!(
            frac_power_quadrature(&mode(&big, 1.0), FracPower::new(0.5).unwrap()),
            Err(SpectralError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn constant_of_half_power_in_1d() {
        assert!((singular_integral_constant(1, 0.5) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn quadrature_on_sine() {
        let g = make_grid(1, 2.0 * PI, 64).unwrap();
        let u = mode(&g, 1.0);
        let q = frac_power_quadrature(&u, FracPower::new(0.5).unwrap()).unwrap();
        let err = max_diff(&q, &u) / u.sup_norm();
        assert!(err < 0.02, "relative error {err}");
    }

    #[test]
    fn quadrature_2d_low_mode() {
        let g = make_grid(2, 2.0 * PI, 16).unwrap();
        let u = Field::from_fn(&g, |x| x[0].cos() + (x[1]).sin()).unwrap();
        let p = FracPower::new(0.5).unwrap();
        let spec = frac_power(&u, p).unwrap();
        let quad = frac_power_quadrature(&u, p).unwrap();
        let rel = spec.axpby(1.0, &quad, -1.0).lp_norm(2.0) / spec.lp_norm(2.0);
        assert!(rel < 0.1, "relative L2 discrepancy {rel}");
    }
}
