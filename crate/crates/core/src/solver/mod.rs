//! Mild solutions of `du_i/dt + d_i (-Delta)^alpha u_i = f_i(u)` by Picard
//! iteration of the discrete Duhamel map on windows of length `dt`.
//!
//! Within a window each species is advanced with the exponential rule
//!
//! `u_{n+1} = E u_n + dt [phi1 f_n + phi2 (f_{n+1} - f_n)]`
//!
//! where `E = exp(-dt d |xi|^(2 alpha))` and `phi1`, `phi2` are the usual
//! exponential-integrator weights. The rule is exact when `f` is linear in
//! time on the window; `f_{n+1}` is resolved by fixed-point iteration.

mod checkpoint;

use num_complex::Complex64;
use thiserror::Error;

use crate::heat_kernel::KernelError;
use crate::model::{eval_nodes, ReactionModel};
use crate::spectral::{Field, Grid};

pub use checkpoint::{Checkpoint, CheckpointError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("alpha = {0} outside (0, 1]")]
    AlphaOutOfRange(f64),
    #[error("Picard iteration diverged at t = {time} after {halvings} step halvings (residual {residual:.3e}); dt is too large")]
    PicardDivergence {
        time: f64,
        residual: f64,
        halvings: u32,
    },
    #[error("blow-up: sup-norm exceeded the threshold at t = {time}")]
    BlowUp { time: f64, trajectory: Box<Trajectory> },
    #[error("initial data for species {species} has negative value {value:.3e}")]
    NegativeInitialData { species: usize, value: f64 },
    #[error("initial data for species {0} is not finite")]
    NonFiniteInitialData(usize),
    #[error("expected {expected} species, found {found}")]
    SpeciesMismatch { expected: usize, found: usize },
    #[error("species live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Maximal number of successive step halvings before giving up.
pub const MAX_HALVINGS: u32 = 20;

/// Blow-up threshold factor applied to the initial summed sup-norm.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub horizon: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// 2/3-rule mask on reaction evaluations (polynomial reactions only).
    pub dealias: bool,
    /// Cap on `sum_i ||u_i||_inf`; `None` means `1e6` times the initial value.
    pub blowup_threshold: Option<f64>,
    /// Store every `record_every`-th accepted state (the last one is always kept).
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            picard_tol: 1e-10,
            picard_max: 50,
            dealias: true,
            blowup_threshold: None,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.dt > self.horizon {
            return bad(format!("dt = {} exceeds horizon = {}", self.dt, self.horizon));
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        if self.picard_max < 2 {
            return bad(format!("picard_max must be at least 2, got {}", self.picard_max));
        }
        if let Some(th) = self.blowup_threshold {
            if !(th > 0.0) {
                return bad(format!("blowup_threshold must be positive, got {th}"));
            }
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }
}

/// Per-step record of an accepted window.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    /// End time of the window.
    pub time: f64,
    pub dt: f64,
    pub picard_iterations: usize,
    pub residual: f64,
    pub min_value: Vec<f64>,
    pub sup_norm: Vec<f64>,
    pub total_mass: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub alpha: f64,
    pub diffusivities: Vec<f64>,
    /// Times of the recorded states, starting at the initial time.
    pub times: Vec<f64>,
    pub states: Vec<Vec<Field>>,
    /// One entry per accepted step, including unrecorded ones.
    pub steps: Vec<StepDiagnostics>,
    pub initial_mass: Vec<f64>,
    pub initial_sup: Vec<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.states[0][0].grid()
    }

    pub fn species(&self) -> usize {
        self.diffusivities.len()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &[Field] {
        self.states.last().unwrap()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            time: self.final_time(),
            state: self.final_state().to_vec(),
        }
    }

    /// `(t, sum_i ||u_i||_inf)` for the initial state and every accepted step.
    pub fn summed_sup_series(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(self.start_time(), self.initial_sup.iter().sum())];
        out.extend(self.steps.iter().map(|s| (s.time, s.sup_norm.iter().sum())));
        out
    }

    /// `max_i sup_{[tau + k w, tau + (k + 1) w]} ||u_i||_inf` over consecutive
    /// windows of width `w`, using every accepted step.
    pub fn windowed_sup(&self, width: f64) -> Vec<f64> {
        let per: Vec<Vec<f64>> = (0..self.species()).map(|i| self.species_windowed_sup(i, width)).collect();
        (0..per[0].len())
            .map(|k| per.iter().fold(0.0f64, |a, s| a.max(s[k])))
            .collect()
    }

    /// Windowed sups of one species; a step on a window edge counts for both
    /// neighbouring windows.
    pub fn species_windowed_sup(&self, species: usize, width: f64) -> Vec<f64> {
        let t0 = self.start_time();
        let count = ((self.final_time() - t0) / width + 1e-9).floor() as usize;
        let mut out = vec![0.0f64; count];
        let mut put = |rel: f64, v: f64| {
            let near = rel.round();
            if (rel - near).abs() < 1e-9 {
                let k = near as usize;
                if k >= 1 && k - 1 < count {
                    out[k - 1] = out[k - 1].max(v);
                }
                if k < count {
                    out[k] = out[k].max(v);
                }
            } else if (rel.floor() as usize) < count {
                let k = rel.floor() as usize;
                out[k] = out[k].max(v);
            }
        };
        put(0.0, self.initial_sup[species]);
        for s in &self.steps {
            put((s.time - t0) / width, s.sup_norm[species]);
        }
        out
    }

    /// Unweighted total mass `sum_i int u_i` at every accepted step.
    pub fn total_mass_series(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(self.start_time(), self.initial_mass.iter().sum())];
        out.extend(self.steps.iter().map(|s| (s.time, s.total_mass.iter().sum())));
        out
    }

    fn shift_times(&mut self, offset: f64) {
        self.times.iter_mut().for_each(|t| *t += offset);
        self.steps.iter_mut().for_each(|s| s.time += offset);
    }
}

/// First time at which `sum_i ||u_i||_inf` exceeds `threshold`.
pub fn detect_blowup(traj: &Trajectory, threshold: f64) -> Option<f64> {
    traj.summed_sup_series()
        .into_iter()
        .find(|&(_, s)| s > threshold)
        .map(|(t, _)| t)
}

/// Solves from `u0` at time 0 up to `cfg.horizon`.
pub fn solve_mild(
    model: &ReactionModel,
    alpha: f64,
    u0: &[Field],
    cfg: &SolverConfig,
) -> Result<Trajectory, SolverError> {
    solve_from(model, alpha, u0, 0.0, cfg)
}

/// Continues from a checkpoint for another `cfg.horizon` time units. The
/// solver itself always starts at 0; reported times are shifted.
pub fn resume_mild(
    model: &ReactionModel,
    alpha: f64,
    start: &Checkpoint,
    cfg: &SolverConfig,
) -> Result<Trajectory, SolverError> {
    solve_from(model, alpha, &start.state, start.time, cfg)
}

fn solve_from(
    model: &ReactionModel,
    alpha: f64,
    u0: &[Field],
    offset: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SolverError::AlphaOutOfRange(alpha));
    }
    let m = model.species();
    if u0.len() != m {
        return Err(SolverError::SpeciesMismatch {
            expected: m,
            found: u0.len(),
        });
    }
    let grid = u0[0].grid().clone();
    for (i, f) in u0.iter().enumerate() {
        if !f.grid().same_as(&grid) {
            return Err(SolverError::GridMismatch);
        }
        if !f.is_finite() {
            return Err(SolverError::NonFiniteInitialData(i));
        }
        let min = f.min();
        if min < 0.0 {
            return Err(SolverError::NegativeInitialData { species: i, value: min });
        }
    }

    let initial_sup: Vec<f64> = u0.iter().map(Field::sup_norm).collect();
    let threshold = cfg
        .blowup_threshold
        .unwrap_or_else(|| DEFAULT_BLOWUP_FACTOR * initial_sup.iter().sum::<f64>().max(1.0));
    let dealias = cfg.dealias && model.reactions().degree().is_some();
    let mut traj = Trajectory {
        alpha,
        diffusivities: model.diffusivities().to_vec(),
        times: vec![0.0],
        states: vec![u0.to_vec()],
        steps: Vec::new(),
        initial_mass: u0.iter().map(Field::integral).collect(),
        initial_sup,
    };

    let ctx = Context {
        model,
        grid: &grid,
        alpha,
        dealias,
        offset,
        cfg,
    };
    let mut current: Vec<Vec<f64>> = u0.iter().map(|f| f.values().to_vec()).collect();
    let mut h = cfg.dt;
    let mut halvings = 0u32;
    let mut weights = ctx.weights(h);
    let mut t = 0.0;
    let mut since_record = 0usize;
    let horizon = cfg.horizon;

    while t < horizon {
        let mut step = h;
        // land exactly on the horizon; absorb a final sliver into the last step
        if t + step * (1.0 + 1e-9) >= horizon {
            step = horizon - t;
        }
        let w = if step == h { None } else { Some(ctx.weights(step)) };
        let outcome = ctx.advance(&current, t, step, w.as_ref().unwrap_or(&weights));
        match outcome {
            Ok((next, iterations, residual)) => {
                t = if step == horizon - t { horizon } else { t + step };
                let fields: Vec<Field> = next.iter().map(|v| Field::from_parts(&grid, v.clone())).collect();
                let sup: Vec<f64> = fields.iter().map(Field::sup_norm).collect();
                traj.steps.push(StepDiagnostics {
                    time: t,
                    dt: step,
                    picard_iterations: iterations,
                    residual,
                    min_value: fields.iter().map(Field::min).collect(),
                    total_mass: fields.iter().map(Field::integral).collect(),
                    sup_norm: sup.clone(),
                });
                current = next;
                since_record += 1;
                let blown = sup.iter().sum::<f64>() > threshold;
                if since_record == cfg.record_every || t >= horizon || blown {
                    traj.times.push(t);
                    traj.states.push(fields);
                    since_record = 0;
                }
                if blown {
                    traj.shift_times(offset);
                    return Err(SolverError::BlowUp {
                        time: t + offset,
                        trajectory: Box::new(traj),
                    });
                }
            }
            Err(residual) => {
                if halvings == MAX_HALVINGS {
                    return Err(SolverError::PicardDivergence {
                        time: t + offset,
                        residual,
                        halvings,
                    });
                }
                halvings += 1;
                h *= 0.5;
                weights = ctx.weights(h);
            }
        }
    }
    traj.shift_times(offset);
    Ok(traj)
}

/// Spectral weights of one window length, per species.
struct Weights {
    decay: Vec<Vec<f64>>,
    w1: Vec<Vec<f64>>,
    w2: Vec<Vec<f64>>,
}

struct Context<'a> {
    model: &'a ReactionModel,
    grid: &'a Grid,
    alpha: f64,
    dealias: bool,
    offset: f64,
    cfg: &'a SolverConfig,
}

impl Context<'_> {
    fn weights(&self, h: f64) -> Weights {
        let ksq = self.grid.wavenumber_sq();
        let mask = self.grid.dealias_mask();
        let mut out = Weights {
            decay: Vec::new(),
            w1: Vec::new(),
            w2: Vec::new(),
        };
        for &d in self.model.diffusivities() {
            let mut e = Vec::with_capacity(ksq.len());
            let mut a = Vec::with_capacity(ksq.len());
            let mut b = Vec::with_capacity(ksq.len());
            for (&k, &keep) in ksq.iter().zip(mask) {
                let lambda = if k == 0.0 {
                    0.0
                } else if self.alpha == 1.0 {
                    d * k
                } else {
                    d * k.powf(self.alpha)
                };
                let z = h * lambda;
                let (p1, p2) = phi12(z);
                let on = if self.dealias && !keep { 0.0 } else { 1.0 };
                e.push((-z).exp());
                a.push(h * p1 * on);
                b.push(h * p2 * on);
            }
            out.decay.push(e);
            out.w1.push(a);
            out.w2.push(b);
        }
        out
    }

    fn reaction_spectra(&self, state: &[Vec<f64>], t: f64) -> Option<Vec<Vec<Complex64>>> {
        let fields: Vec<Field> = state.iter().map(|v| Field::from_parts(self.grid, v.clone())).collect();
        let rates = eval_nodes(self.model, &fields, t + self.offset);
        if rates.iter().flatten().any(|v| !v.is_finite()) {
            return None;
        }
        Some(rates.iter().map(|r| self.grid.forward(r)).collect())
    }

    /// One window; on failure returns the last residual.
    fn advance(
        &self,
        u: &[Vec<f64>],
        t: f64,
        h: f64,
        w: &Weights,
    ) -> Result<(Vec<Vec<f64>>, usize, f64), f64> {
        let f_now = self.reaction_spectra(u, t).ok_or(f64::INFINITY)?;
        let m = u.len();
        // base = E u_n + (w1 - w2) f_n; iterate = base + w2 f(iterate)
        let mut base = Vec::with_capacity(m);
        let mut guess = Vec::with_capacity(m);
        for i in 0..m {
            let mut uh = self.grid.forward(&u[i]);
            let mut g = uh.clone();
            for (k, c) in uh.iter_mut().enumerate() {
                let eu = *c * w.decay[i][k];
                *c = eu + f_now[i][k] * (w.w1[i][k] - w.w2[i][k]);
                g[k] = eu + f_now[i][k] * w.w1[i][k];
            }
            base.push(uh);
            guess.push(self.grid.inverse(g));
        }

        let mut prev_residual = f64::INFINITY;
        for iteration in 1..=self.cfg.picard_max {
            let f_next = self.reaction_spectra(&guess, t + h).ok_or(f64::INFINITY)?;
            let mut next = Vec::with_capacity(m);
            for i in 0..m {
                let spec: Vec<Complex64> = base[i]
                    .iter()
                    .zip(&f_next[i])
                    .zip(&w.w2[i])
                    .map(|((b, f), w2)| b + f * w2)
                    .collect();
                next.push(self.grid.inverse(spec));
            }
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for (a, b) in next.iter().zip(&guess) {
                for (x, y) in a.iter().zip(b) {
                    diff = diff.max((x - y).abs());
                    scale = scale.max(x.abs());
                }
            }
            let residual = if scale > 0.0 { diff / scale } else { diff };
            if !residual.is_finite() {
                return Err(f64::INFINITY);
            }
            if residual <= self.cfg.picard_tol {
                return Ok((next, iteration, residual));
            }
            // a growing residual past the first few sweeps means no contraction
            if iteration >= 3 && residual > prev_residual {
                return Err(residual);
            }
            prev_residual = residual;
            guess = next;
        }
        Err(prev_residual)
    }
}

/// `phi1(z) = (1 - e^-z) / z`, `phi2(z) = (z - 1 + e^-z) / z^2`, with the
/// series used near zero to avoid cancellation.
pub(crate) fn phi12(z: f64) -> (f64, f64) {
    if z < 0.1 {
        // sum_k (-z)^k / (k + 1)! and sum_k (-z)^k / (k + 2)!
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut term = 1.0; // (-z)^k / k!
        for k in 0..14 {
            p1 += term / (k + 1) as f64;
            p2 += term / ((k + 1) * (k + 2)) as f64;
            term *= -z / (k + 1) as f64;
        }
        (p1, p2)
    } else {
        let em = (-z).exp();
        ((1.0 - em) / z, (z - 1.0 + em) / (z * z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_branches_agree() {
        for z in [0.0999999, 0.1] {
            let (a, b) = phi12(z);
            let em = (-z as f64).exp();
            assert!((a - (1.0 - em) / z).abs() < 1e-14);
            assert!((b - (z - 1.0 + em) / (z * z)).abs() < 1e-12);
        }
        assert_eq!(phi12(0.0), (1.0, 0.5));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.1, 1.0).validate().is_ok());
        assert!(SolverConfig::new(2.0, 1.0).validate().is_err());
        assert!(SolverConfig::new(0.0, 1.0).validate().is_err());
        let mut c = SolverConfig::new(0.1, 1.0);
        c.picard_max = 1;
        assert!(c.validate().is_err());
    }
}
