use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EstimateError;
use crate::report::{fmt_f64, CsvRecord};
use crate::solver::Trajectory;
use crate::spectral::{Field, Grid};

/// Nodes with `sum_i u_i` at or below this fraction of the trajectory-wide
/// maximum have no defined `b`.
const B_DEFINED_FRACTION: f64 = 1e-12;

/// Rounding slack on the `b` bounds.
const B_SLACK: f64 = 1e-12;

/// `v(x, t) = int_0^t sum_i d_i u_i(x, s) ds` and `b = sum u_i / sum d_i u_i`
/// on the recorded time slices.
#[derive(Clone, Debug)]
pub struct VDiagnostics {
    pub times: Vec<f64>,
    pub v: Vec<Field>,
    /// `None` where the total density is negligible.
    pub b: Vec<Vec<Option<f64>>>,
    pub b_lower: f64,
    pub b_upper: f64,
    pub b_min: Option<f64>,
    pub b_max: Option<f64>,
    pub b_defined: usize,
    pub b_violations: usize,
    pub b_bounds_ok: bool,
}

pub fn accumulate_v(traj: &Trajectory, d: &[f64]) -> Result<VDiagnostics, EstimateError> {
    if traj.states.is_empty() {
        return Err(EstimateError::EmptyTrajectory);
    }
    if d.len() != traj.states[0].len() {
        return Err(EstimateError::DiffusivityMismatch {
            expected: traj.states[0].len(),
            found: d.len(),
        });
    }
    let grid = traj.states[0][0].grid();
    let len = grid.len();
    let weighted: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|s| (0..len).map(|x| s.iter().zip(d).map(|(f, di)| di * f.values()[x]).sum()).collect())
        .collect();
    let totals: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|s| (0..len).map(|x| s.iter().map(|f| f.values()[x]).sum()).collect())
        .collect();

    let mut v = vec![Field::zeros(grid)];
    let mut acc = vec![0.0; len];
    for k in 1..traj.times.len() {
        let h = 0.5 * (traj.times[k] - traj.times[k - 1]);
        for x in 0..len {
            acc[x] += h * (weighted[k - 1][x] + weighted[k][x]);
        }
        v.push(Field::from_parts(grid, acc.clone()));
    }

    let b_lower = 1.0 / d.iter().cloned().fold(f64::MIN, f64::max);
    let b_upper = 1.0 / d.iter().cloned().fold(f64::MAX, f64::min);
    let scale = totals.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let cut = B_DEFINED_FRACTION * scale;
    let (mut b_min, mut b_max): (Option<f64>, Option<f64>) = (None, None);
    let (mut defined, mut violations) = (0, 0);
    let b = totals
        .iter()
        .zip(&weighted)
        .map(|(tot, wt)| {
            tot.iter()
                .zip(wt)
                .map(|(&s, &w)| {
                    if scale == 0.0 || s <= cut {
                        return None;
                    }
                    let r = s / w;
                    defined += 1;
                    b_min = Some(b_min.map_or(r, |m| m.min(r)));
                    b_max = Some(b_max.map_or(r, |m| m.max(r)));
                    if !(r >= b_lower * (1.0 - B_SLACK) && r <= b_upper * (1.0 + B_SLACK)) {
                        violations += 1;
                    }
                    Some(r)
                })
                .collect()
        })
        .collect();

    Ok(VDiagnostics {
        times: traj.times.clone(),
        v,
        b,
        b_lower,
        b_upper,
        b_min,
        b_max,
        b_defined: defined,
        b_violations: violations,
        b_bounds_ok: violations == 0,
    })
}

/// One-line summary of a [`VDiagnostics`].
#[derive(Clone, Debug)]
pub struct VSummaryRow {
    pub b_lower: f64,
    pub b_upper: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub defined: usize,
    pub violations: usize,
    pub v_final_sup: f64,
}

impl VDiagnostics {
    pub fn summary(&self) -> VSummaryRow {
        VSummaryRow {
            b_lower: self.b_lower,
            b_upper: self.b_upper,
            b_min: self.b_min.unwrap_or(f64::NAN),
            b_max: self.b_max.unwrap_or(f64::NAN),
            defined: self.b_defined,
            violations: self.b_violations,
            v_final_sup: self.v.last().map_or(0.0, Field::sup_norm),
        }
    }
}

impl CsvRecord for VSummaryRow {
    fn header() -> Vec<&'static str> {
        vec!["b_lower", "b_upper", "b_min", "b_max", "defined", "violations", "v_final_sup"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.b_lower),
            fmt_f64(self.b_upper),
            fmt_f64(self.b_min),
            fmt_f64(self.b_max),
            self.defined.to_string(),
            self.violations.to_string(),
            fmt_f64(self.v_final_sup),
        ]
    }
}

/// Sampled Hölder quotients of `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderEstimate {
    pub gamma: f64,
    /// `max |v(x,t) - v(y,t)| / |x - y|^gamma`.
    pub space: f64,
    /// `max |v(x,t) - v(x,s)| / |t - s|^(gamma/2)`.
    pub parabolic: f64,
}

/// All node pairs are used up to this many nodes, random pairs beyond.
const ALL_PAIRS_NODES: usize = 4096;
const RANDOM_PAIRS: usize = 100_000;
const PAIR_SEED: u64 = 0x4011;

pub fn holder_seminorm(vd: &VDiagnostics, gamma: f64) -> Result<HolderEstimate, EstimateError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(EstimateError::GammaOutOfRange(gamma));
    }
    if vd.v.len() < 2 {
        return Err(EstimateError::TooFewSlices(vd.v.len()));
    }
    let grid = vd.v[0].grid();
    let len = grid.len();
    let dist = PeriodicDistance::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
    let pairs: Vec<(usize, usize)> = if len <= ALL_PAIRS_NODES {
        (0..len).flat_map(|a| (a + 1..len).map(move |b| (a, b))).collect()
    } else {
        (0..RANDOM_PAIRS)
            .map(|_| {
                let a = rng.gen_range(0..len);
                let mut b = rng.gen_range(0..len - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            })
            .collect()
    };
    let inv_dist: Vec<f64> = pairs.iter().map(|&(a, b)| dist.between(a, b).powf(-gamma)).collect();

    let mut space = 0.0f64;
    for field in &vd.v {
        let vals = field.values();
        for (&(a, b), w) in pairs.iter().zip(&inv_dist) {
            space = space.max((vals[a] - vals[b]).abs() * w);
        }
    }

    let slices = vd.v.len();
    let mut parabolic = 0.0f64;
    for i in 0..slices {
        for j in i + 1..slices {
            let w = (vd.times[j] - vd.times[i]).powf(-0.5 * gamma);
            let (a, b) = (vd.v[i].values(), vd.v[j].values());
            let m = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            parabolic = parabolic.max(m * w);
        }
    }
    Ok(HolderEstimate { gamma, space, parabolic })
}

/// Wrapped Euclidean distance between lattice nodes.
struct PeriodicDistance {
    dims: usize,
    n: usize,
    h: f64,
}

impl PeriodicDistance {
    fn new(grid: &Grid) -> Self {
        Self {
            dims: grid.dims(),
            n: grid.points_per_axis(),
            h: grid.spacing(),
        }
    }

    fn between(&self, mut a: usize, mut b: usize) -> f64 {
        let mut sq = 0.0;
        for _ in 0..self.dims {
            let (ia, ib) = (a % self.n, b % self.n);
            a /= self.n;
            b /= self.n;
            let d = ia.abs_diff(ib);
            let d = d.min(self.n - d) as f64 * self.h;
            sq += d * d;
        }
        sq.sqrt()
    }
}
