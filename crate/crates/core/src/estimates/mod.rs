//! Numerical probes of the a-priori estimates: the time-integrated weighted
//! sum `v`, functional inequalities, space-time norms and the duality
//! exponent ladder.

mod inequalities;
mod ladder;
mod norms;
mod vfield;

use thiserror::Error;

pub use inequalities::{
    gn_ratio, gn_theta, maximal_reg_ratio, maximal_reg_solve, stroock_varopoulos_gap, GnRecord,
    MaxRegRecord, SvGap,
};
pub use ladder::{duality_ladder, ExponentLadder, LadderRow, QHat, MAX_LADDER_STEPS};
pub use norms::{norm_report, NormReport, NormRow, SpeciesNorms, WEAK_LEVELS};
pub use vfield::{accumulate_v, holder_seminorm, HolderEstimate, VDiagnostics, VSummaryRow};

use crate::spectral::Grid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("expected {expected} diffusivities, found {found}")]
    DiffusivityMismatch { expected: usize, found: usize },
    #[error("gamma = {0} outside (0, 1)")]
    GammaOutOfRange(f64),
    #[error("need at least 2 time slices, found {0}")]
    TooFewSlices(usize),
    #[error("ell = {0} must exceed 1")]
    EllOutOfRange(f64),
    #[error("alpha = {0} outside (0, 1]")]
    AlphaOutOfRange(f64),
    #[error("q = {q} outside (2, {upper})")]
    QOutOfRange { q: f64, upper: f64 },
    #[error("field is identically zero")]
    ZeroField,
    #[error("field has zero fractional seminorm (constant field)")]
    ZeroSeminorm,
    #[error("time grid is not uniform")]
    NonUniformTimeGrid,
    #[error("{fields} forcing slices for {times} times")]
    LengthMismatch { fields: usize, times: usize },
    #[error("mu = {0} must be positive")]
    NonPositiveDiffusivity(f64),
    #[error("exponent p = {0} must be at least 1")]
    InvalidExponent(f64),
    #[error("rho = {rho} exceeds the admissible bound {rho_max}")]
    RhoInadmissible { rho: f64, rho_max: f64 },
    #[error("p0 = {0} is below 2")]
    P0TooSmall(f64),
    #[error("invalid ladder parameter: {0}")]
    InvalidLadderInput(String),
}

/// Multiplicities of half-spectrum coefficients in the full spectrum, so that
/// `sum_x |u|^2 = n^-N sum_k w_k |u_hat_k|^2`.
pub(crate) fn parseval_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.points_per_axis();
    let half = n / 2 + 1;
    (0..grid.spectral_len())
        .map(|s| {
            let col = s % half;
            if col == 0 || col == half - 1 {
                1.0
            } else {
                2.0
            }
        })
        .collect()
}

/// Trapezoid weights for integrating over `times`.
pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let k = times.len();
    let mut w = vec![0.0; k];
    for i in 1..k {
        let h = 0.5 * (times[i] - times[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}
