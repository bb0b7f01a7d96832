use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{IscMatrix, ModelError, ModelMeta, ReactionModel, Reactions};

/// Names accepted by [`model_by_name`].
pub const MODEL_NAMES: [&str; 3] = ["bimolecular", "dissipative-pair", "superquadratic-isc"];

/// `S1 + S3 <-> S2 + S4`: `f_i = (-1)^i (u1 u3 - u2 u4)`.
///
/// The rate is evaluated once and shared, so `sum f_i` cancels exactly.
#[derive(Debug, Clone, Copy)]
pub struct Bimolecular;

impl Reactions for Bimolecular {
    fn species(&self) -> usize {
        4
    }

    fn eval(&self, _x: &[f64], _t: f64, u: &[f64], out: &mut [f64]) {
        let r = u[0] * u[2] - u[1] * u[3];
        out[0] = -r;
        out[1] = r;
        out[2] = -r;
        out[3] = r;
    }

    fn degree(&self) -> Option<u32> {
        Some(2)
    }
}

/// `f = (-u1 u2, -u1 u2)`.
#[derive(Debug, Clone, Copy)]
pub struct DissipativePair;

impl Reactions for DissipativePair {
    fn species(&self) -> usize {
        2
    }

    fn eval(&self, _x: &[f64], _t: f64, u: &[f64], out: &mut [f64]) {
        let r = u[0] * u[1];
        out[0] = -r;
        out[1] = -r;
    }

    fn degree(&self) -> Option<u32> {
        Some(2)
    }
}

/// `f = (-u1 u2^3, u1 u2^3 - u2^4)`: super-quadratic growth that still
/// satisfies the intermediate sum condition with `rho = 1`.
#[derive(Debug, Clone, Copy)]
pub struct SuperquadraticIsc;

impl Reactions for SuperquadraticIsc {
    fn species(&self) -> usize {
        2
    }

    fn eval(&self, _x: &[f64], _t: f64, u: &[f64], out: &mut [f64]) {
        let cube = u[1] * u[1] * u[1];
        let a = u[0] * cube;
        out[0] = -a;
        out[1] = a - cube * u[1];
    }

    fn degree(&self) -> Option<u32> {
        Some(4)
    }
}

/// `coefficient * prod_j u_j^powers[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: f64,
    pub powers: Vec<u32>,
}

/// Reactions given as a sum of monomials per species.
#[derive(Debug, Clone)]
pub struct PolynomialReactions {
    terms: Vec<Vec<Monomial>>,
}

impl PolynomialReactions {
    pub fn new(terms: Vec<Vec<Monomial>>) -> Result<Self, ModelError> {
        let m = terms.len();
        if m == 0 {
            return Err(ModelError::InvalidPolynomial("no species".into()));
        }
        for (i, species) in terms.iter().enumerate() {
            for mono in species {
                if mono.powers.len() != m {
                    return Err(ModelError::InvalidPolynomial(format!(
                        "species {i}: monomial has {} powers, expected {m}",
                        mono.powers.len()
                    )));
                }
                if !mono.coefficient.is_finite() {
                    return Err(ModelError::InvalidPolynomial(format!(
                        "species {i}: non-finite coefficient"
                    )));
                }
            }
        }
        Ok(Self { terms })
    }
}

impl Reactions for PolynomialReactions {
    fn species(&self) -> usize {
        self.terms.len()
    }

    fn eval(&self, _x: &[f64], _t: f64, u: &[f64], out: &mut [f64]) {
        for (o, species) in out.iter_mut().zip(&self.terms) {
            *o = species
                .iter()
                .map(|mono| {
                    mono.powers
                        .iter()
                        .zip(u)
                        .fold(mono.coefficient, |acc, (&p, &v)| acc * v.powi(p as i32))
                })
                .sum();
        }
    }

    fn degree(&self) -> Option<u32> {
        self.terms
            .iter()
            .flatten()
            .map(|m| m.powers.iter().sum())
            .max()
    }
}

/// Appends species `m + 1` with `g_{m+1} = -sum_{i <= m} f_i`.
#[derive(Debug, Clone)]
pub struct Lifted {
    inner: Arc<dyn Reactions>,
}

impl Lifted {
    pub fn new(inner: Arc<dyn Reactions>) -> Self {
        Self { inner }
    }
}

impl Reactions for Lifted {
    fn species(&self) -> usize {
        self.inner.species() + 1
    }

    fn eval(&self, x: &[f64], t: f64, u: &[f64], out: &mut [f64]) {
        let m = self.inner.species();
        self.inner.eval(x, t, &u[..m], &mut out[..m]);
        // same left-to-right order as any downstream sum, so the total is exactly 0
        let total = out[..m].iter().fold(0.0, |s, v| s + v);
        out[m] = -total;
    }

    fn degree(&self) -> Option<u32> {
        self.inner.degree()
    }
}

/// Built-in models with their default diffusivities and declared constants.
pub fn model_by_name(name: &str) -> Result<ReactionModel, ModelError> {
    match name {
        "bimolecular" => ReactionModel::new(
            name,
            vec![1.0, 0.5, 2.0, 1.5],
            Arc::new(Bimolecular),
            ModelMeta {
                isc: Some(IscMatrix::ones(3)),
                rho: Some(2.0),
                nu: Some(2.0),
                growth_constant: Some(1.0),
                phi: None,
            },
        ),
        "dissipative-pair" => ReactionModel::new(
            name,
            vec![1.0, 0.5],
            Arc::new(DissipativePair),
            ModelMeta {
                isc: Some(IscMatrix::ones(1)),
                rho: Some(1.0),
                nu: Some(2.0),
                growth_constant: Some(1.0),
                phi: None,
            },
        ),
        "superquadratic-isc" => ReactionModel::new(
            name,
            vec![1.0, 2.0],
            Arc::new(SuperquadraticIsc),
            ModelMeta {
                isc: Some(IscMatrix::new(vec![vec![1.0]])?),
                rho: Some(1.0),
                nu: Some(4.0),
                growth_constant: Some(1.0),
                phi: None,
            },
        ),
        other => Err(ModelError::UnknownModel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        for name in MODEL_NAMES {
            assert_eq!(model_by_name(name).unwrap().name(), name);
        }
        assert!(matches!(model_by_name("nope"), Err(ModelError::UnknownModel(_))));
    }

    #[test]
    fn bimolecular_sum_is_exactly_zero() {
        let mut out = [0.0; 4];
        for u in [[0.1, 0.7, 3.3, 1e-9], [1e3, 2.2, 7.1, 0.3], [0.3, 0.1, 0.2, 0.6]] {
            Bimolecular.eval(&[], 0.0, &u, &mut out);
            assert_eq!(out.iter().fold(0.0, |s, v| s + v), 0.0);
        }
    }

    #[test]
    fn polynomial_matches_hand_written() {
        let poly = PolynomialReactions::new(vec![
            vec![Monomial { coefficient: -1.0, powers: vec![1, 3] }],
            vec![
                Monomial { coefficient: 1.0, powers: vec![1, 3] },
                Monomial { coefficient: -1.0, powers: vec![0, 4] },
            ],
        ])
        .unwrap();
        assert_eq!(poly.degree(), Some(4));
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        let u = [1.7, 0.4];
        poly.eval(&[], 0.0, &u, &mut a);
        SuperquadraticIsc.eval(&[], 0.0, &u, &mut b);
        assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
    }

    #[test]
    fn polynomial_shape_checked() {
        let bad = PolynomialReactions::new(vec![vec![Monomial { coefficient: 1.0, powers: vec![1, 1] }]]);
        assert!(matches!(bad, Err(ModelError::InvalidPolynomial(_))));
    }
}
