use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Lifted, ModelError, ModelMeta, ReactionModel};
use crate::report::CsvRecord;
use crate::spectral::Field;

/// Structural assumptions on the reaction map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Assumption {
    /// Quasi-positivity: `f_i >= 0` whenever `u_i = 0`.
    P,
    /// Mass dissipation: `sum f_i <= 0`.
    M,
    /// Mass conservation: `sum f_i = 0`.
    Conservation,
    /// `|f_i| <= C (1 + |u|^2)`.
    Quadratic,
    /// `sum_{j <= i} a_ij f_j <= C (Phi + |u|^rho)` for `i < m`.
    Isc,
    /// `f_i <= C (Phi + |u|^nu)`.
    Pol,
}

impl Assumption {
    pub fn label(self) -> &'static str {
        match self {
            Assumption::P => "P",
            Assumption::M => "M",
            Assumption::Conservation => "conservation",
            Assumption::Quadratic => "quadratic",
            Assumption::Isc => "ISC",
            Assumption::Pol => "Pol",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A state at which an assumption failed, with the offending quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub state: Vec<f64>,
    pub value: f64,
}

/// Outcome of a sampled check: "no violation found in `samples_tested` samples"
/// when `passed`.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub samples_tested: usize,
    pub violations: Vec<Witness>,
    pub passed: bool,
}

impl CsvRecord for AssumptionReport {
    fn header() -> Vec<&'static str> {
        vec!["assumption", "samples_tested", "violations", "passed"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.assumption.label().to_string(),
            self.samples_tested.to_string(),
            self.violations.len().to_string(),
            self.passed.to_string(),
        ]
    }
}

/// Non-negative state with the forcing value `Phi` at the sampled point.
#[derive(Clone, Debug)]
pub struct Sample {
    pub u: Vec<f64>,
    pub phi: f64,
}

pub trait StateSampler {
    fn sample(&mut self, species: usize, meta: &ModelMeta) -> Sample;
}

/// Emits a fixed set of probe states (zero, all ones, unit vectors) and
/// then components drawn log-uniformly from `[1e-3, 1e3]`, each zero with
/// probability 1/5.
pub struct LogUniformSampler {
    rng: ChaCha8Rng,
    emitted: usize,
}

impl LogUniformSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            emitted: 0,
        }
    }
}

impl StateSampler for LogUniformSampler {
    fn sample(&mut self, species: usize, meta: &ModelMeta) -> Sample {
        let k = self.emitted;
        self.emitted += 1;
        let u = if k == 0 {
            vec![0.0; species]
        } else if k == 1 {
            vec![1.0; species]
        } else if k < species + 2 {
            let mut e = vec![0.0; species];
            e[k - 2] = 1.0;
            e
        } else {
            (0..species)
                .map(|_| {
                    if self.rng.gen_bool(0.2) {
                        0.0
                    } else {
                        10f64.powf(self.rng.gen_range(-3.0..3.0))
                    }
                })
                .collect()
        };
        let phi = match &meta.phi {
            Some(field) => field.values()[self.rng.gen_range(0..field.values().len())],
            None => 0.0,
        };
        Sample { u, phi }
    }
}

/// Relative slack for sign and equality tests on floating-point rates.
const RATE_SLACK: f64 = 1e-12;

/// Tests `which` on `count` sampled states.
pub fn check_assumption(
    model: &ReactionModel,
    which: Assumption,
    sampler: &mut dyn StateSampler,
    count: usize,
) -> Result<AssumptionReport, ModelError> {
    if count == 0 {
        return Err(ModelError::EmptySampleCount);
    }
    let meta = model.meta();
    let constant = || meta.growth_constant.ok_or(ModelError::MissingMeta("growth constant C"));
    // resolve metadata before sampling so a missing field fails fast
    let bound = match which {
        Assumption::Quadratic => Some((constant()?, 2.0)),
        Assumption::Isc => {
            meta.isc.as_ref().ok_or(ModelError::MissingMeta("ISC matrix"))?;
            Some((constant()?, meta.rho.ok_or(ModelError::MissingMeta("rho"))?))
        }
        Assumption::Pol => Some((constant()?, meta.nu.ok_or(ModelError::MissingMeta("nu"))?)),
        _ => None,
    };

    let m = model.species();
    let mut violations = Vec::new();
    let mut rates = vec![0.0; m];
    let x = vec![0.0; meta.phi.as_ref().map_or(1, |f| f.grid().dims())];
    for _ in 0..count {
        let Sample { mut u, phi } = sampler.sample(m, meta);
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        match which {
            Assumption::P => {
                for i in 0..m {
                    let saved = u[i];
                    u[i] = 0.0;
                    model.reactions().eval(&x, 0.0, &u, &mut rates);
                    let scale = rates.iter().fold(0.0f64, |s, r| s.max(r.abs()));
                    if rates[i] < -RATE_SLACK * scale {
                        violations.push(Witness {
                            state: u.clone(),
                            value: rates[i],
                        });
                    }
                    u[i] = saved;
                }
            }
            Assumption::M | Assumption::Conservation => {
                model.reactions().eval(&x, 0.0, &u, &mut rates);
                let total = rates.iter().fold(0.0, |s, r| s + r);
                let scale: f64 = rates.iter().map(|r| r.abs()).sum();
                let bad = if which == Assumption::M {
                    total > RATE_SLACK * scale
                } else {
                    total.abs() > RATE_SLACK * scale
                };
                if bad {
                    violations.push(Witness { state: u, value: total });
                }
            }
            Assumption::Quadratic => {
                let (c, _) = bound.unwrap();
                model.reactions().eval(&x, 0.0, &u, &mut rates);
                let limit = c * (1.0 + norm * norm);
                if let Some(r) = rates.iter().find(|r| r.abs() > limit * (1.0 + RATE_SLACK)) {
                    violations.push(Witness { state: u, value: *r });
                }
            }
            Assumption::Isc => {
                let (c, rho) = bound.unwrap();
                model.reactions().eval(&x, 0.0, &u, &mut rates);
                let limit = c * (phi + norm.powf(rho));
                let isc = meta.isc.as_ref().unwrap();
                for row in isc.rows().iter().take(m - 1) {
                    let s: f64 = row.iter().zip(&rates).map(|(a, f)| a * f).sum();
                    let scale: f64 = row.iter().zip(&rates).map(|(a, f)| (a * f).abs()).sum();
                    if s > limit + RATE_SLACK * scale {
                        violations.push(Witness {
                            state: u.clone(),
                            value: s,
                        });
                        break;
                    }
                }
            }
            Assumption::Pol => {
                let (c, nu) = bound.unwrap();
                model.reactions().eval(&x, 0.0, &u, &mut rates);
                let limit = c * (phi + norm.powf(nu));
                if let Some(r) = rates.iter().find(|&&r| r > limit * (1.0 + RATE_SLACK)) {
                    violations.push(Witness { state: u, value: *r });
                }
            }
        }
    }
    let passed = violations.is_empty();
    Ok(AssumptionReport {
        assumption: which,
        samples_tested: count,
        violations,
        passed,
    })
}

/// Seed and sample count used when lifting checks (M) internally.
const LIFT_CHECK_SEED: u64 = 0x5eed;
const LIFT_CHECK_SAMPLES: usize = 2000;

/// Turns a dissipative model into a conservative one with an extra species
/// `g_{m+1} = -sum_i f_i >= 0` diffusing with `d_{m+1} = 1`.
pub fn conservative_lift(model: &ReactionModel) -> Result<ReactionModel, ModelError> {
    let mut sampler = LogUniformSampler::new(LIFT_CHECK_SEED);
    let report = check_assumption(model, Assumption::M, &mut sampler, LIFT_CHECK_SAMPLES)?;
    if !report.passed {
        return Err(ModelError::DissipationViolated {
            witnesses: report.violations.len(),
        });
    }
    let m = model.species();
    let mut d = model.diffusivities().to_vec();
    d.push(1.0);
    let meta = model.meta();
    let lifted_meta = ModelMeta {
        isc: None,
        rho: None,
        nu: meta.nu,
        growth_constant: meta.growth_constant.map(|c| c * m as f64),
        phi: meta.phi.clone(),
    };
    ReactionModel::new(
        format!("{}+lift", model.name()),
        d,
        Arc::new(Lifted::new(model.reactions().clone())),
        lifted_meta,
    )
}

/// Initial data for a lifted model: the new species starts at zero.
pub fn lift_state(state: &[Field]) -> Vec<Field> {
    let mut out = state.to_vec();
    out.push(Field::zeros(state[0].grid()));
    out
}
