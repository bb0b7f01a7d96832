//! Reaction systems `du_i/dt + d_i (-Delta)^alpha u_i = f_i(x, t, u)` and
//! sampling-based checks of the structural assumptions placed on `f`.

mod assumptions;
mod builtin;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::spectral::Field;

pub use assumptions::{
    check_assumption, conservative_lift, lift_state, Assumption, AssumptionReport, LogUniformSampler,
    Sample, StateSampler, Witness,
};
pub use builtin::{
    model_by_name, Bimolecular, DissipativePair, Lifted, Monomial, PolynomialReactions,
    SuperquadraticIsc, MODEL_NAMES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("diffusivity d_{index} = {value} must be positive")]
    NonPositiveDiffusivity { index: usize, value: f64 },
    #[error("expected {expected} species, found {found}")]
    SpeciesMismatch { expected: usize, found: usize },
    #[error("invalid intermediate-sum matrix: {0}")]
    InvalidIscMatrix(String),
    #[error("species {species} has value {value:.3e} below the tolerance {tolerance:.3e}")]
    NegativeStateBeyondTolerance {
        species: usize,
        value: f64,
        tolerance: f64,
    },
    #[error("reaction rate of species {species} is not finite")]
    NonFiniteRate { species: usize },
    #[error("assumption {0} needs metadata that the model does not declare")]
    MissingMeta(&'static str),
    #[error("model violates mass dissipation at {witnesses} sampled states")]
    DissipationViolated { witnesses: usize },
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("sample count must be at least 1")]
    EmptySampleCount,
}

/// Nodewise reaction map `f(x, t, u)`.
pub trait Reactions: Send + Sync + fmt::Debug {
    fn species(&self) -> usize;

    /// Writes `f(x, t, u)` into `out` (length `species()`).
    fn eval(&self, x: &[f64], t: f64, u: &[f64], out: &mut [f64]);

    /// Largest total degree, used to pick a dealiasing policy.
    fn degree(&self) -> Option<u32> {
        None
    }
}

/// Lower-triangular coefficients `a_ij` of the intermediate sum condition,
/// one row per species `i < m`, normalised to `a_ii = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct IscMatrix {
    rows: Vec<Vec<f64>>,
}

impl IscMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(ModelError::InvalidIscMatrix(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    i + 1
                )));
            }
            if row[i] != 1.0 {
                return Err(ModelError::InvalidIscMatrix(format!(
                    "diagonal entry a_{i}{i} = {} must be 1",
                    row[i]
                )));
            }
            if let Some(j) = row.iter().position(|&a| !(a >= 0.0) || !a.is_finite()) {
                return Err(ModelError::InvalidIscMatrix(format!(
                    "entry a_{i}{j} = {} must be finite and non-negative",
                    row[j]
                )));
            }
        }
        Ok(Self { rows })
    }

    /// All-ones lower triangle with `rows` rows.
    pub fn ones(rows: usize) -> Self {
        Self {
            rows: (0..rows).map(|i| vec![1.0; i + 1]).collect(),
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Declared constants for the assumption checks.
#[derive(Clone, Debug, Default)]
pub struct ModelMeta {
    pub isc: Option<IscMatrix>,
    pub rho: Option<f64>,
    pub nu: Option<f64>,
    /// Constant `C` shared by the growth, ISC and polynomial bounds.
    pub growth_constant: Option<f64>,
    /// Time-independent forcing `Phi >= 0`; zero when absent.
    pub phi: Option<Field>,
}

/// Immutable reaction-diffusion model: diffusivities, reactions and metadata.
#[derive(Clone, Debug)]
pub struct ReactionModel {
    name: String,
    diffusivities: Vec<f64>,
    reactions: Arc<dyn Reactions>,
    meta: ModelMeta,
}

impl ReactionModel {
    pub fn new(
        name: impl Into<String>,
        diffusivities: Vec<f64>,
        reactions: Arc<dyn Reactions>,
        meta: ModelMeta,
    ) -> Result<Self, ModelError> {
        let m = reactions.species();
        if diffusivities.len() != m {
            return Err(ModelError::SpeciesMismatch {
                expected: m,
                found: diffusivities.len(),
            });
        }
        if let Some((index, &value)) = diffusivities
            .iter()
            .enumerate()
            .find(|(_, &d)| !(d > 0.0 && d.is_finite()))
        {
            return Err(ModelError::NonPositiveDiffusivity { index, value });
        }
        if let Some(isc) = &meta.isc {
            if isc.rows().len() + 1 < m {
                return Err(ModelError::InvalidIscMatrix(format!(
                    "{} rows declared, {} species need {}",
                    isc.rows().len(),
                    m,
                    m - 1
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            diffusivities,
            reactions,
            meta,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn species(&self) -> usize {
        self.diffusivities.len()
    }

    pub fn diffusivities(&self) -> &[f64] {
        &self.diffusivities
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn reactions(&self) -> &Arc<dyn Reactions> {
        &self.reactions
    }

    pub fn with_diffusivities(&self, d: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(self.name.clone(), d, self.reactions.clone(), self.meta.clone())
    }

    pub fn with_meta(&self, meta: ModelMeta) -> Result<Self, ModelError> {
        Self::new(self.name.clone(), self.diffusivities.clone(), self.reactions.clone(), meta)
    }

    /// Rates at a single state.
    pub fn rates(&self, x: &[f64], t: f64, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.species()];
        self.reactions.eval(x, t, u, &mut out);
        out
    }
}

/// Relative tolerance for negative states accepted by [`eval_reactions`].
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// Evaluates `f_i` at every node of `state`.
pub fn eval_reactions(model: &ReactionModel, state: &[Field], t: f64) -> Result<Vec<Field>, ModelError> {
    let m = model.species();
    if state.len() != m {
        return Err(ModelError::SpeciesMismatch {
            expected: m,
            found: state.len(),
        });
    }
    let scale = state.iter().fold(0.0f64, |s, f| s.max(f.sup_norm()));
    let tolerance = NEGATIVITY_TOLERANCE * scale;
    for (species, f) in state.iter().enumerate() {
        let value = f.min();
        if value < -tolerance {
            return Err(ModelError::NegativeStateBeyondTolerance {
                species,
                value,
                tolerance,
            });
        }
    }
    let rates = eval_nodes(model, state, t);
    for (species, values) in rates.iter().enumerate() {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteRate { species });
        }
    }
    let grid = state[0].grid();
    Ok(rates
        .into_iter()
        .map(|v| Field::from_parts(grid, v))
        .collect())
}

/// Unchecked nodewise evaluation; one value vector per species.
pub(crate) fn eval_nodes(model: &ReactionModel, state: &[Field], t: f64) -> Vec<Vec<f64>> {
    let m = model.species();
    let grid = state[0].grid();
    let len = grid.len();
    let mut rates = vec![vec![0.0; len]; m];
    let mut u = vec![0.0; m];
    let mut out = vec![0.0; m];
    let mut pos = vec![0.0; grid.dims()];
    for node in 0..len {
        for (k, f) in state.iter().enumerate() {
            u[k] = f.values()[node];
        }
        grid.position(node, &mut pos);
        model.reactions.eval(&pos, t, &u, &mut out);
        for (k, r) in out.iter().enumerate() {
            rates[k][node] = *r;
        }
    }
    rates
}
