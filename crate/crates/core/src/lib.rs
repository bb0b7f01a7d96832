//! Pseudospectral simulation of reaction-diffusion systems driven by the
//! fractional Laplacian on a periodic box, together with numerical probes of
//! the kernel bounds, smoothing rates, functional inequalities and
//! integrability bootstrap that control such systems.

pub mod spectral;

pub use spectral::{Field, FracPower, Grid};
pub mod heat_kernel;
pub mod report;
pub mod model;
pub mod solver;
pub mod estimates;
