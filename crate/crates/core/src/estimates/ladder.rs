use serde::Serialize;

use super::EstimateError;
use crate::report::{fmt_f64, CsvRecord};

/// Steps after which a ladder that has not crossed its threshold is flagged.
pub const MAX_LADDER_STEPS: usize = 100;

/// Integrability exponent reached by heat regularization from `L^p` data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum QHat {
    /// Any exponent strictly below the bound.
    OpenBelow(f64),
    Exact(f64),
    AnyFinite,
    Infinite,
}

impl QHat {
    /// Numeric stand-in for ordering: the bound, the value, or infinity.
    pub fn as_f64(self) -> f64 {
        match self {
            QHat::OpenBelow(x) | QHat::Exact(x) => x,
            QHat::AnyFinite | QHat::Infinite => f64::INFINITY,
        }
    }
}

/// Exponent sequence `p_{n+1} = (N + 2a) p_n / (rho (N + 2a) - 2a p_n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentLadder {
    pub dims: usize,
    pub alpha: f64,
    pub rho: f64,
    pub p0: f64,
    pub eps_star: f64,
    pub rho_max: f64,
    /// `(N + 2a) / (2 a rho)`.
    pub threshold: f64,
    pub sequence: Vec<f64>,
    /// First `n` with `p_n >= threshold`.
    pub termination_index: Option<usize>,
    pub diverged: bool,
}

/// `min{1 + 2a (2 + eps) / (N + 2a), 2}`.
fn rho_bound(dims: usize, alpha: f64, eps_star: f64) -> f64 {
    let n2a = dims as f64 + 2.0 * alpha;
    (1.0 + 2.0 * alpha * (2.0 + eps_star) / n2a).min(2.0)
}

pub fn duality_ladder(
    dims: usize,
    alpha: f64,
    rho: f64,
    p0: f64,
    eps_star: f64,
) -> Result<ExponentLadder, EstimateError> {
    let bad = |m: String| Err(EstimateError::InvalidLadderInput(m));
    if dims == 0 {
        return bad("dimension must be positive".into());
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return bad(format!("alpha = {alpha} outside (0, 1)"));
    }
    if !(rho >= 1.0 && rho.is_finite()) {
        return bad(format!("rho = {rho} below 1"));
    }
    if !(eps_star >= 0.0 && eps_star.is_finite()) {
        return bad(format!("eps_star = {eps_star} negative"));
    }
    if !p0.is_finite() {
        return bad(format!("p0 = {p0} not finite"));
    }
    let rho_max = rho_bound(dims, alpha, eps_star);
    if rho > rho_max {
        return Err(EstimateError::RhoInadmissible { rho, rho_max });
    }
    if p0 < 2.0 {
        return Err(EstimateError::P0TooSmall(p0));
    }

    let n2a = dims as f64 + 2.0 * alpha;
    let threshold = n2a / (2.0 * alpha * rho);
    let mut sequence = vec![p0];
    let mut termination_index = None;
    while termination_index.is_none() && sequence.len() <= MAX_LADDER_STEPS {
        let p = *sequence.last().unwrap();
        if p >= threshold {
            termination_index = Some(sequence.len() - 1);
            break;
        }
        let denom = rho * n2a - 2.0 * alpha * p;
        if denom <= 0.0 {
            break;
        }
        sequence.push(n2a * p / denom);
    }
    if termination_index.is_none() {
        if let Some(&p) = sequence.last() {
            if p >= threshold {
                termination_index = Some(sequence.len() - 1);
            }
        }
    }
    Ok(ExponentLadder {
        dims,
        alpha,
        rho,
        p0,
        eps_star,
        rho_max,
        threshold,
        sequence,
        termination_index,
        diverged: termination_index.is_none(),
    })
}

impl ExponentLadder {
    /// Lower bound `(N + 2a) / (rho (N + 2a) - 2a p0)` on `p_{n+1} / p_n`.
    pub fn ratio_lower_bound(&self) -> f64 {
        let n2a = self.dims as f64 + 2.0 * self.alpha;
        n2a / (self.rho * n2a - 2.0 * self.alpha * self.p0)
    }

    /// Exponent gained by heat regularization from `L^p` data; `None` for `p < 1`.
    pub fn q_hat(&self, p: f64) -> Option<QHat> {
        q_hat(self.dims, self.alpha, p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ladder is plain data")
    }

    pub fn rows(&self) -> Vec<LadderRow> {
        self.sequence
            .iter()
            .enumerate()
            .map(|(n, &p)| LadderRow {
                n,
                p,
                threshold: self.threshold,
                q_hat: self.q_hat(p).map_or(f64::NAN, QHat::as_f64),
            })
            .collect()
    }
}

pub(crate) fn q_hat(dims: usize, alpha: f64, p: f64) -> Option<QHat> {
    let n = dims as f64;
    let n2a = n + 2.0 * alpha;
    let critical = n2a / (2.0 * alpha);
    if !(p >= 1.0) {
        None
    } else if p == 1.0 {
        Some(QHat::OpenBelow(n2a / n))
    } else if (p - critical).abs() <= 1e-12 * critical {
        Some(QHat::AnyFinite)
    } else if p < critical {
        Some(QHat::Exact(n2a * p / (n2a - 2.0 * p * alpha)))
    } else {
        Some(QHat::Infinite)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderRow {
    pub n: usize,
    pub p: f64,
    pub threshold: f64,
    pub q_hat: f64,
}

impl CsvRecord for LadderRow {
    fn header() -> Vec<&'static str> {
        vec!["n", "p", "threshold", "q_hat"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.n.to_string(), fmt_f64(self.p), fmt_f64(self.threshold), fmt_f64(self.q_hat)]
    }
}
