use super::{accumulate_v, trapezoid_weights, EstimateError};
use crate::report::{fmt_f64, CsvRecord};
use crate::solver::Trajectory;
use crate::spectral::{frac_power, FracPower};

/// Number of logarithmic levels scanned for the weak norm.
pub const WEAK_LEVELS: usize = 64;

/// Lowest scanned level relative to the sup.
const WEAK_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesNorms {
    /// `(p, ||u_i||_{L^p(Q)})`; `p = inf` gives the space-time sup.
    pub lp: Vec<(f64, f64)>,
    /// `sup_{[tau + k, tau + k + 1]} ||u_i||_inf` over the accepted steps.
    pub window_sup: Vec<f64>,
    /// Lower bound of the weak-`L^p` norm from the level scan.
    pub weak: Option<(f64, f64)>,
    /// `||(-Delta)^(alpha/2) u_i||_inf` at every recorded time.
    pub half_derivative_sup: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub times: Vec<f64>,
    pub species: Vec<SpeciesNorms>,
    /// `||(-Delta)^alpha v||_inf` at every recorded time.
    pub v_derivative_sup: Vec<f64>,
}

/// Flat row: `species` is 1-based, 0 marks `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormRow {
    pub species: usize,
    pub quantity: &'static str,
    pub parameter: f64,
    pub value: f64,
}

impl CsvRecord for NormRow {
    fn header() -> Vec<&'static str> {
        vec!["species", "quantity", "parameter", "value"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.species.to_string(),
            self.quantity.to_string(),
            fmt_f64(self.parameter),
            fmt_f64(self.value),
        ]
    }
}

impl NormReport {
    pub fn rows(&self) -> Vec<NormRow> {
        let mut out = Vec::new();
        for (i, s) in self.species.iter().enumerate() {
            let species = i + 1;
            for &(p, value) in &s.lp {
                out.push(NormRow { species, quantity: "lp", parameter: p, value });
            }
            if let Some((p, value)) = s.weak {
                out.push(NormRow { species, quantity: "weak_lp", parameter: p, value });
            }
            for (k, &value) in s.window_sup.iter().enumerate() {
                out.push(NormRow { species, quantity: "window_sup", parameter: k as f64, value });
            }
            for (t, &value) in self.times.iter().zip(&s.half_derivative_sup) {
                out.push(NormRow { species, quantity: "half_derivative_sup", parameter: *t, value });
            }
        }
        for (t, &value) in self.times.iter().zip(&self.v_derivative_sup) {
            out.push(NormRow { species: 0, quantity: "v_derivative_sup", parameter: *t, value });
        }
        out
    }
}

pub fn norm_report(traj: &Trajectory, p_list: &[f64], weak_p: Option<f64>) -> Result<NormReport, EstimateError> {
    if traj.states.is_empty() {
        return Err(EstimateError::EmptyTrajectory);
    }
    if let Some(&p) = p_list.iter().chain(weak_p.iter()).find(|&&p| !(p >= 1.0)) {
        return Err(EstimateError::InvalidExponent(p));
    }
    let grid = traj.grid();
    let cell = grid.cell_volume();
    let tw = trapezoid_weights(&traj.times);
    let alpha = traj.alpha;
    let half = FracPower::new(0.5 * alpha).map_err(|_| EstimateError::AlphaOutOfRange(alpha))?;
    let full = FracPower::new(alpha).map_err(|_| EstimateError::AlphaOutOfRange(alpha))?;
    let m = traj.species();

    let mut species = Vec::with_capacity(m);
    for i in 0..m {
        let slices: Vec<&[f64]> = traj.states.iter().map(|s| s[i].values()).collect();
        let sup = slices.iter().flat_map(|s| s.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
        let lp = p_list
            .iter()
            .map(|&p| {
                if p.is_infinite() {
                    return (p, sup);
                }
                if sup == 0.0 {
                    return (p, 0.0);
                }
                // scaled by the sup to avoid overflow at large p
                let s: f64 = slices
                    .iter()
                    .zip(&tw)
                    .map(|(vals, w)| w * cell * vals.iter().map(|v| (v.abs() / sup).powf(p)).sum::<f64>())
                    .sum();
                (p, sup * s.powf(1.0 / p))
            })
            .collect();
        let weak = weak_p.map(|p| {
            if sup == 0.0 {
                return (p, 0.0);
            }
            let mut best = 0.0f64;
            for level in 0..WEAK_LEVELS {
                let frac = level as f64 / (WEAK_LEVELS - 1) as f64;
                let lambda = sup * WEAK_FLOOR.powf(1.0 - frac);
                let measure: f64 = slices
                    .iter()
                    .zip(&tw)
                    .map(|(vals, w)| w * cell * vals.iter().filter(|v| v.abs() >= lambda).count() as f64)
                    .sum();
                best = best.max(lambda * measure.powf(1.0 / p));
            }
            (p, best)
        });
        let half_derivative_sup = traj
            .states
            .iter()
            .map(|s| frac_power(&s[i], half).map(|f| f.sup_norm()).unwrap_or(f64::NAN))
            .collect();
        species.push(SpeciesNorms {
            lp,
            window_sup: traj.species_windowed_sup(i, 1.0),
            weak,
            half_derivative_sup,
        });
    }

    let vd = accumulate_v(traj, &traj.diffusivities)?;
    let v_derivative_sup = vd
        .v
        .iter()
        .map(|v| frac_power(v, full).map(|f| f.sup_norm()).unwrap_or(f64::NAN))
        .collect();
    Ok(NormReport {
        times: traj.times.clone(),
        species,
        v_derivative_sup,
    })
}
