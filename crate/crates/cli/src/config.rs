//! JSON scenario documents and their field-level validation.

use std::fmt;
use std::sync::Arc;

use fracrd_core::estimates::{duality_ladder, EstimateError};
use fracrd_core::model::{model_by_name, ModelError, ModelMeta, Monomial, PolynomialReactions, ReactionModel};
use fracrd_core::solver::SolverConfig;
use fracrd_core::spectral::{band_limited_field, make_grid, Field, Grid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::RunError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub grid: GridSpec,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    /// One profile per species, or a single profile shared by all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<Profile>,
    /// No simulation is run without a solver section.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
    #[serde(default)]
    pub reports: ReportSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: usize,
    pub extent: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Named(String),
    Inline(InlineModel),
}

/// Polynomial reactions: `reactions[i]` is the list of monomials in `f_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    pub name: String,
    pub diffusivities: Vec<f64>,
    pub reactions: Vec<Vec<Monomial>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    GaussianBump {
        amplitude: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Two bumps at `+-separation/2` along the first axis.
    TwoBumps { amplitude: f64, width: f64, separation: f64 },
    Constant { amplitude: f64 },
    /// `amplitude (1 + w / (2 sup|w|))` for a random band-limited `w`, so
    /// values stay in `[amplitude/2, 3 amplitude/2]`.
    RandomBandLimited { amplitude: f64, modes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dealias: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

impl SolverSpec {
    pub fn to_config(&self) -> SolverConfig {
        let mut c = SolverConfig::new(self.dt, self.horizon);
        if let Some(v) = self.picard_tol {
            c.picard_tol = v;
        }
        if let Some(v) = self.picard_max {
            c.picard_max = v;
        }
        if let Some(v) = self.dealias {
            c.dealias = v;
        }
        c.blowup_threshold = self.blowup_threshold;
        if let Some(v) = self.record_every {
            c.record_every = v;
        }
        c
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    /// Space-time `L^p` exponents; the sup norm is always reported.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub norm_exponents: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sv: Option<SvSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gn: Option<GnSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_reg: Option<MaxRegSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<SmoothingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderSpec>,
    /// Sampled structural checks on the model.
    #[serde(default)]
    pub assumptions: bool,
}

/// Random band-limited fields on the scenario grid, plus the final state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvSweep {
    pub fields: usize,
    pub ells: Vec<f64>,
    pub alphas: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnSweep {
    pub fields: usize,
    pub exponents: Vec<f64>,
    pub alphas: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxRegSweep {
    pub forcings: usize,
    pub mus: Vec<f64>,
    pub horizon: f64,
    pub steps: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

/// Smoothing-rate fit of the heat semigroup of order `alpha` on the scenario grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSpec {
    pub r: f64,
    /// `None` means `p = inf`.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_times")]
    pub times: usize,
}

/// Exponent ladder in the scenario dimension and order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub rho: f64,
    pub p0: f64,
    #[serde(default)]
    pub eps_star: f64,
}

fn default_modes() -> usize {
    8
}

fn default_mu() -> f64 {
    1.0
}

fn default_times() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
    }

    fn check(&mut self, ok: bool, field: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.push(field, message());
        }
    }
}

fn in_unit(alpha: f64) -> bool {
    alpha > 0.0 && alpha <= 1.0
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| {
            RunError::ConfigInvalid(vec![FieldError {
                field: "<document>".into(),
                message: e.to_string(),
            }])
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is plain data")
    }

    /// Checks every field; unknown model names are reported as `ModelUnknown`.
    pub fn validate(&self) -> Result<(), RunError> {
        let mut e = Errors(Vec::new());
        e.check(self.schema_version == SCHEMA_VERSION, "schema_version", || {
            format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version)
        });
        if let Err(err) = make_grid(self.grid.dims, self.grid.extent, self.grid.points) {
            e.push("grid", err.to_string());
        }
        e.check(in_unit(self.alpha), "alpha", || format!("{} outside (0, 1]", self.alpha));

        if let Some(solver) = &self.solver {
            if let Err(err) = solver.to_config().validate() {
                e.push("solver", err.to_string());
            }
            match &self.model {
                None => e.push("model", "required when a solver section is present"),
                Some(ModelSpec::Named(name)) => {
                    if model_by_name(name).is_err() {
                        return Err(RunError::ModelUnknown(name.clone()));
                    }
                }
                Some(ModelSpec::Inline(m)) => {
                    if let Err(err) = inline_model(m) {
                        e.push("model", err.to_string());
                    }
                }
            }
            let species = self.build_model().map(|m| m.species()).ok();
            if self.initial.is_empty() {
                e.push("initial", "at least one profile is required");
            } else if let Some(m) = species {
                e.check(self.initial.len() == 1 || self.initial.len() == m, "initial", || {
                    format!("{} profiles for {m} species", self.initial.len())
                });
            }
            for (i, p) in self.initial.iter().enumerate() {
                validate_profile(&mut e, &format!("initial[{i}]"), p, self.grid.dims);
            }
        }

        let r = &self.reports;
        for (i, &p) in r.norm_exponents.iter().enumerate() {
            e.check(p >= 1.0, &format!("reports.norm_exponents[{i}]"), || format!("{p} below 1"));
        }
        if let Some(p) = r.weak_exponent {
            e.check(p >= 1.0, "reports.weak_exponent", || format!("{p} below 1"));
        }
        if let Some(g) = r.holder_gamma {
            e.check(g > 0.0 && g < 1.0, "reports.holder_gamma", || format!("{g} outside (0, 1)"));
        }
        if let Some(sv) = &r.sv {
            e.check(!sv.ells.is_empty(), "reports.sv.ells", || "empty".into());
            for &l in &sv.ells {
                e.check(l > 1.0 && l.is_finite(), "reports.sv.ells", || format!("{l} must exceed 1"));
            }
            for &a in &sv.alphas {
                e.check(in_unit(a), "reports.sv.alphas", || format!("{a} outside (0, 1]"));
            }
        }
        if let Some(gn) = &r.gn {
            for &a in &gn.alphas {
                e.check(in_unit(a), "reports.gn.alphas", || format!("{a} outside (0, 1]"));
                for &q in &gn.exponents {
                    let n = self.grid.dims as f64;
                    let upper = if a < n / 2.0 { 2.0 * n / (n - 2.0 * a) } else { f64::INFINITY };
                    e.check(q > 2.0 && q < upper, "reports.gn.exponents", || {
                        format!("q = {q} outside (2, {upper}) for alpha = {a}")
                    });
                }
            }
        }
        if let Some(mr) = &r.max_reg {
            e.check(mr.steps >= 1, "reports.max_reg.steps", || "must be at least 1".into());
            e.check(mr.horizon > 0.0, "reports.max_reg.horizon", || format!("{} not positive", mr.horizon));
            for &mu in &mr.mus {
                e.check(mu > 0.0 && mu.is_finite(), "reports.max_reg.mus", || format!("{mu} not positive"));
            }
        }
        if let Some(s) = &r.smoothing {
            let p = s.p.unwrap_or(f64::INFINITY);
            e.check(s.r >= 1.0 && s.r <= p, "reports.smoothing", || {
                format!("need 1 <= r <= p, got r = {}, p = {p}", s.r)
            });
            e.check((0.0..=1.0).contains(&s.beta), "reports.smoothing.beta", || {
                format!("{} outside [0, 1]", s.beta)
            });
            e.check(s.mu > 0.0, "reports.smoothing.mu", || format!("{} not positive", s.mu));
            e.check(s.times >= 5, "reports.smoothing.times", || "at least 5 times are needed".into());
        }
        if let Some(l) = &r.ladder {
            match duality_ladder(self.grid.dims, self.alpha, l.rho, l.p0, l.eps_star) {
                Ok(_) => {}
                Err(EstimateError::RhoInadmissible { rho, rho_max }) => {
                    e.push("reports.ladder.rho", format!("rho = {rho} exceeds rho_max = {rho_max}"))
                }
                Err(EstimateError::P0TooSmall(p)) => e.push("reports.ladder.p0", format!("{p} below 2")),
                Err(err) => e.push("reports.ladder", err.to_string()),
            }
        }
        if e.0.is_empty() {
            Ok(())
        } else {
            Err(RunError::ConfigInvalid(e.0))
        }
    }

    pub fn build_grid(&self) -> Result<Grid, RunError> {
        make_grid(self.grid.dims, self.grid.extent, self.grid.points).map_err(|err| {
            RunError::ConfigInvalid(vec![FieldError {
                field: "grid".into(),
                message: err.to_string(),
            }])
        })
    }

    pub fn build_model(&self) -> Result<ReactionModel, RunError> {
        match &self.model {
            None => Err(RunError::ConfigInvalid(vec![FieldError {
                field: "model".into(),
                message: "missing".into(),
            }])),
            Some(ModelSpec::Named(name)) => model_by_name(name).map_err(|_| RunError::ModelUnknown(name.clone())),
            Some(ModelSpec::Inline(m)) => Ok(inline_model(m)?),
        }
    }

    /// Initial fields; random profiles draw from a stream seeded by `seed`.
    pub fn build_initial(&self, grid: &Grid, species: usize) -> Result<Vec<Field>, RunError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..species)
            .map(|i| {
                let p = if self.initial.len() == 1 { &self.initial[0] } else { &self.initial[i] };
                profile_field(p, grid, &mut rng)
            })
            .collect()
    }
}

fn inline_model(m: &InlineModel) -> Result<ReactionModel, ModelError> {
    let r = PolynomialReactions::new(m.reactions.clone())?;
    ReactionModel::new(m.name.clone(), m.diffusivities.clone(), Arc::new(r), ModelMeta::default())
}

fn validate_profile(e: &mut Errors, at: &str, p: &Profile, dims: usize) {
    let amp = |e: &mut Errors, a: f64| e.check(a >= 0.0 && a.is_finite(), &format!("{at}.amplitude"), || format!("{a} must be non-negative"));
    let width = |e: &mut Errors, w: f64| e.check(w > 0.0 && w.is_finite(), &format!("{at}.width"), || format!("{w} must be positive"));
    match p {
        Profile::GaussianBump { amplitude, width: w, center } => {
            amp(e, *amplitude);
            width(e, *w);
            if let Some(c) = center {
                e.check(c.len() == dims, &format!("{at}.center"), || format!("{} coordinates for {dims} dimensions", c.len()));
            }
        }
        Profile::TwoBumps { amplitude, width: w, separation } => {
            amp(e, *amplitude);
            width(e, *w);
            e.check(separation.is_finite(), &format!("{at}.separation"), || "not finite".into());
        }
        Profile::Constant { amplitude } => amp(e, *amplitude),
        Profile::RandomBandLimited { amplitude, modes } => {
            amp(e, *amplitude);
            e.check(*modes >= 1, &format!("{at}.modes"), || "must be at least 1".into());
        }
    }
}

fn gaussian(x: &[f64], c: &[f64], width: f64) -> f64 {
    let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (-r2 / (2.0 * width * width)).exp()
}

fn profile_field(p: &Profile, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<Field, RunError> {
    let dims = grid.dims();
    let field = match p {
        Profile::GaussianBump { amplitude, width, center } => {
            let c = center.clone().unwrap_or_else(|| vec![0.0; dims]);
            Field::from_fn(grid, |x| amplitude * gaussian(x, &c, *width))
        }
        Profile::TwoBumps { amplitude, width, separation } => {
            let mut a = vec![0.0; dims];
            let mut b = vec![0.0; dims];
            a[0] = -0.5 * separation;
            b[0] = 0.5 * separation;
            Field::from_fn(grid, |x| amplitude * (gaussian(x, &a, *width) + gaussian(x, &b, *width)))
        }
        Profile::Constant { amplitude } => Ok(Field::constant(grid, *amplitude)),
        Profile::RandomBandLimited { amplitude, modes } => {
            let w = band_limited_field(grid, *modes, rng);
            let s = w.sup_norm();
            let scale = if s > 0.0 { 0.5 / s } else { 0.0 };
            Ok(w.map(|v| amplitude * (1.0 + scale * v)))
        }
    };
    field.map_err(|err| {
        RunError::ConfigInvalid(vec![FieldError {
            field: "initial".into(),
            message: err.to_string(),
        }])
    })
}
