use num_complex::Complex64;

use super::{parseval_weights, trapezoid_weights, EstimateError};
use crate::report::{fmt_f64, CsvRecord};
use crate::solver::phi12;
use crate::spectral::{apply_multiplier, Field, FracPower};

fn check_alpha(alpha: f64) -> Result<FracPower, EstimateError> {
    FracPower::new(alpha).map_err(|_| EstimateError::AlphaOutOfRange(alpha))
}

/// `int |(-Delta)^(beta/2) u|^2 dx` from the spectrum: `h^N n^-N sum_k w_k |xi|^(2 beta) |u_hat|^2`.
fn dirichlet_energy(u: &Field, beta: FracPower) -> f64 {
    let grid = u.grid();
    let spec = grid.forward(u.values());
    let weights = parseval_weights(grid);
    let sum: f64 = spec
        .iter()
        .zip(grid.wavenumber_sq())
        .zip(&weights)
        .map(|((c, &k), w)| w * beta.symbol(k) * c.norm_sqr())
        .sum();
    sum * grid.cell_volume() / grid.len() as f64
}

fn signed_pow(v: f64, q: f64) -> f64 {
    v.signum() * v.abs().powf(q)
}

/// Both sides of the Stroock–Varopoulos inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvGap {
    pub alpha: f64,
    pub ell: f64,
    /// `int |v|^(ell-2) v (-Delta)^alpha v`.
    pub lhs: f64,
    /// `4 (ell-1)/ell^2 int |(-Delta)^(alpha/2) v^[ell/2]|^2` with the signed power.
    pub rhs: f64,
    pub gap: f64,
}

impl SvGap {
    pub fn magnitude(&self) -> f64 {
        self.lhs.abs().max(self.rhs.abs())
    }
}

impl CsvRecord for SvGap {
    fn header() -> Vec<&'static str> {
        vec!["alpha", "ell", "lhs", "rhs", "gap"]
    }

    fn fields(&self) -> Vec<String> {
        [self.alpha, self.ell, self.lhs, self.rhs, self.gap].map(fmt_f64).to_vec()
    }
}

pub fn stroock_varopoulos_gap(v: &Field, alpha: f64, ell: f64) -> Result<SvGap, EstimateError> {
    if !(ell > 1.0 && ell.is_finite()) {
        return Err(EstimateError::EllOutOfRange(ell));
    }
    let power = check_alpha(alpha)?;
    let lap = apply_multiplier(v, |k| power.symbol(k));
    let lhs = v.map(|x| signed_pow(x, ell - 1.0)).dot(&lap);
    let w = v.map(|x| signed_pow(x, 0.5 * ell));
    let rhs = 4.0 * (ell - 1.0) / (ell * ell) * dirichlet_energy(&w, power);
    Ok(SvGap {
        alpha,
        ell,
        lhs,
        rhs,
        gap: lhs - rhs,
    })
}

/// `theta = (2 alpha q - N (q - 2)) / (2 alpha q)`.
pub fn gn_theta(dims: usize, alpha: f64, q: f64) -> f64 {
    (2.0 * alpha * q - dims as f64 * (q - 2.0)) / (2.0 * alpha * q)
}

/// `2N / (N - 2 alpha)` when `alpha < N/2`, else infinity.
fn critical_exponent(dims: usize, alpha: f64) -> f64 {
    let n = dims as f64;
    if alpha < n / 2.0 {
        2.0 * n / (n - 2.0 * alpha)
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GnRecord {
    pub dims: usize,
    pub alpha: f64,
    pub q: f64,
    pub theta: f64,
    pub ratio: f64,
}

impl CsvRecord for GnRecord {
    fn header() -> Vec<&'static str> {
        vec!["dims", "alpha", "q", "theta", "ratio"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.dims.to_string(),
            fmt_f64(self.alpha),
            fmt_f64(self.q),
            fmt_f64(self.theta),
            fmt_f64(self.ratio),
        ]
    }
}

/// `||v||_q / (||v||_2^theta ||(-Delta)^(alpha/2) v||_2^(1-theta))`.
pub fn gn_ratio(v: &Field, alpha: f64, q: f64) -> Result<f64, EstimateError> {
    let power = check_alpha(alpha)?;
    let dims = v.grid().dims();
    let upper = critical_exponent(dims, alpha);
    if !(q > 2.0 && q < upper) {
        return Err(EstimateError::QOutOfRange { q, upper });
    }
    let l2 = v.lp_norm(2.0);
    if l2 == 0.0 {
        return Err(EstimateError::ZeroField);
    }
    let semi = dirichlet_energy(v, power).sqrt();
    if !(semi > 1e-14 * l2 / v.grid().extent()) {
        return Err(EstimateError::ZeroSeminorm);
    }
    let theta = gn_theta(dims, alpha, q);
    Ok(v.lp_norm(q) / (l2.powf(theta) * semi.powf(1.0 - theta)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxRegRecord {
    pub alpha: f64,
    pub mu: f64,
    pub ratio: f64,
    pub bound: f64,
}

impl CsvRecord for MaxRegRecord {
    fn header() -> Vec<&'static str> {
        vec!["alpha", "mu", "ratio", "bound"]
    }

    fn fields(&self) -> Vec<String> {
        [self.alpha, self.mu, self.ratio, self.bound].map(fmt_f64).to_vec()
    }
}

fn check_forcing(forcing: &[Field], times: &[f64], mu: f64) -> Result<(), EstimateError> {
    if forcing.len() != times.len() {
        return Err(EstimateError::LengthMismatch {
            fields: forcing.len(),
            times: times.len(),
        });
    }
    if times.len() < 2 {
        return Err(EstimateError::TooFewSlices(times.len()));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(EstimateError::NonPositiveDiffusivity(mu));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return Err(EstimateError::NonUniformTimeGrid);
    }
    Ok(())
}

/// Solves `u' + mu (-Delta)^alpha u = f`, `u(t_0) = 0`, mode by mode with the
/// exponential rule that is exact for `f` linear between samples. Returns
/// the spectra of `u` at every time.
fn solve_modes(forcing: &[Field], times: &[f64], power: FracPower, mu: f64) -> Vec<Vec<Complex64>> {
    let grid = forcing[0].grid();
    let dt = times[1] - times[0];
    let weights: Vec<(f64, f64, f64)> = grid
        .wavenumber_sq()
        .iter()
        .map(|&k| {
            let z = dt * mu * power.symbol(k);
            let (p1, p2) = phi12(z);
            ((-z).exp(), dt * p1, dt * p2)
        })
        .collect();
    let mut f_prev = grid.forward(forcing[0].values());
    let mut u = vec![Complex64::new(0.0, 0.0); f_prev.len()];
    let mut out = vec![u.clone()];
    for f in &forcing[1..] {
        let f_next = grid.forward(f.values());
        for (k, c) in u.iter_mut().enumerate() {
            let (e, w1, w2) = weights[k];
            *c = *c * e + f_prev[k] * w1 + (f_next[k] - f_prev[k]) * w2;
        }
        out.push(u.clone());
        f_prev = f_next;
    }
    out
}

/// Solution fields of the linear problem driven by `forcing` from zero data.
pub fn maximal_reg_solve(forcing: &[Field], times: &[f64], alpha: f64, mu: f64) -> Result<Vec<Field>, EstimateError> {
    let power = check_alpha(alpha)?;
    check_forcing(forcing, times, mu)?;
    let grid = forcing[0].grid();
    Ok(solve_modes(forcing, times, power, mu)
        .into_iter()
        .map(|s| Field::from_parts(grid, grid.inverse(s)))
        .collect())
}

/// `||(-Delta)^alpha u||_{L2(Q)} / ||f||_{L2(Q)}` with trapezoid time
/// integration; zero forcing gives 0.
pub fn maximal_reg_ratio(forcing: &[Field], times: &[f64], alpha: f64, mu: f64) -> Result<f64, EstimateError> {
    let power = check_alpha(alpha)?;
    check_forcing(forcing, times, mu)?;
    let grid = forcing[0].grid();
    let tw = trapezoid_weights(times);
    let f_sq: f64 = forcing.iter().zip(&tw).map(|(f, w)| w * f.dot(f)).sum();
    if f_sq == 0.0 {
        return Ok(0.0);
    }
    let pw = parseval_weights(grid);
    let norm = grid.cell_volume() / grid.len() as f64;
    let u_sq: f64 = solve_modes(forcing, times, power, mu)
        .iter()
        .zip(&tw)
        .map(|(spec, w)| {
            let s: f64 = spec
                .iter()
                .zip(grid.wavenumber_sq())
                .zip(&pw)
                .map(|((c, &k), m)| {
                    let a = power.symbol(k);
                    m * a * a * c.norm_sqr()
                })
                .sum();
            w * s * norm
        })
        .sum();
    Ok((u_sq / f_sq).sqrt())
}
