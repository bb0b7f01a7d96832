//! Periodic grids, spectral transforms and fractional powers of the Laplacian.

mod field;
mod frac;
mod grid;

pub use field::{band_limited_field, lp_norm, Field};
pub use frac::{
    apply_multiplier, frac_power, frac_power_quadrature, singular_integral_constant, FracPower,
    QUADRATURE_MAX_POINTS,
};
pub(crate) use frac::multiply_spectrum;
pub use grid::{make_grid, Grid, DEFAULT_NODE_BUDGET};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dimension {0} not supported (expected 1, 2 or 3)")]
    InvalidDims(usize),
    #[error("points per axis must be a power of two >= 8, got {0}")]
    NotPowerOfTwo(usize),
    #[error("extent must be positive and finite, got {0}")]
    InvalidExtent(f64),
    #[error("grid needs {nodes} nodes, budget is {budget}")]
    MemoryBudgetExceeded { nodes: usize, budget: usize },
    #[error("field contains non-finite values")]
    NonFiniteInput,
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("quadrature limited to {max} nodes, grid has {nodes}")]
    GridTooLarge { nodes: usize, max: usize },
    #[error("fractional exponent {0} outside the admissible range")]
    BetaOutOfRange(f64),
}
