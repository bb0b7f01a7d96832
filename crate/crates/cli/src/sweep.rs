//! One scenario per value of a numeric config field, run in parallel.

use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{FieldError, ScenarioConfig};
use crate::output::{f, table};
use crate::scenario::evaluate;
use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    Rho,
    P0,
    Points,
    Dt,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Rho => "rho",
            SweepAxis::P0 => "p0",
            SweepAxis::Points => "points",
            SweepAxis::Dt => "dt",
        }
    }

    /// Copy of `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, RunError> {
        let invalid = |field: &str, message: String| {
            RunError::ConfigInvalid(vec![FieldError {
                field: field.into(),
                message,
            }])
        };
        let mut c = cfg.clone();
        match self {
            SweepAxis::Alpha => c.alpha = value,
            SweepAxis::Rho | SweepAxis::P0 => {
                let l = c
                    .reports
                    .ladder
                    .as_mut()
                    .ok_or_else(|| invalid("reports.ladder", format!("sweeping {} needs a ladder section", self.name())))?;
                if self == SweepAxis::Rho {
                    l.rho = value;
                } else {
                    l.p0 = value;
                }
            }
            SweepAxis::Points => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(invalid("grid.points", format!("{value} is not a positive integer")));
                }
                c.grid.points = value as usize;
            }
            SweepAxis::Dt => {
                let s = c
                    .solver
                    .as_mut()
                    .ok_or_else(|| invalid("solver", "sweeping dt needs a solver section".into()))?;
                s.dt = value;
            }
        }
        Ok(c)
    }
}

impl FromStr for SweepAxis {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "rho" => Ok(SweepAxis::Rho),
            "p0" => Ok(SweepAxis::P0),
            "points" => Ok(SweepAxis::Points),
            "dt" => Ok(SweepAxis::Dt),
            other => Err(RunError::UnknownAxis(other.to_string())),
        }
    }
}

/// Summary rows keyed by the axis value, in the order of the input values.
#[derive(Clone, Debug)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, r)| r[j]).collect())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut header = vec![self.axis.name().to_string()];
        header.extend(self.columns.iter().cloned());
        table(
            &header,
            self.rows.iter().map(|(v, r)| std::iter::once(f(*v)).chain(r.iter().map(|x| f(*x))).collect()),
        )
    }

    pub fn violations(&self) -> usize {
        self.column("checks_failed").map_or(0, |c| c.iter().filter(|&&x| x > 0.0).count())
    }
}

/// Every derived config is validated before anything runs.
pub fn sweep(cfg: &ScenarioConfig, axis: &str, values: &[f64]) -> Result<SweepTable, RunError> {
    let axis: SweepAxis = axis.parse()?;
    if values.is_empty() {
        return Err(RunError::EmptyValues);
    }
    let configs = values
        .iter()
        .map(|&v| {
            let c = axis.apply(cfg, v)?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let results = configs
        .par_iter()
        .map(evaluate)
        .collect::<Result<Vec<_>, RunError>>()?;
    let columns: Vec<String> = results[0].summary.iter().map(|(k, _)| k.clone()).collect();
    let rows = values
        .iter()
        .zip(&results)
        .map(|(&v, ev)| {
            // same config shape on every run, so the keys line up
            let row = columns
                .iter()
                .map(|c| ev.summary.iter().find(|(k, _)| k == c).map_or(f64::NAN, |(_, x)| *x))
                .collect();
            (v, row)
        })
        .collect();
    Ok(SweepTable { axis, columns, rows })
}
