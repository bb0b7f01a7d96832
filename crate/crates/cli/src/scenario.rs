//! A single configured run: simulate, measure, check, report.

use std::path::Path;

use fracrd_core::estimates::{
    accumulate_v, duality_ladder, gn_ratio, gn_theta, holder_seminorm, maximal_reg_ratio, norm_report,
    stroock_varopoulos_gap, ExponentLadder,
};
use fracrd_core::heat_kernel::{resolved_times, smoothing_rate_fit, KernelSpec};
use fracrd_core::model::{check_assumption, Assumption, LogUniformSampler, ModelError, ReactionModel};
use fracrd_core::report::{to_csv_string, CsvRecord};
use fracrd_core::solver::{solve_mild, SolverError, Trajectory};
use fracrd_core::spectral::{band_limited_field, Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{GnSweep, MaxRegSweep, ScenarioConfig, SvSweep};
use crate::output::{checks_table, f, table, write_run, Evaluation, RunManifest};
use crate::RunError;

/// Relative slack on the conserved total mass, per unit time.
pub const MASS_TOLERANCE: f64 = 1e-10;
/// Allowed undershoot below zero relative to the sup norm.
pub const NEGATIVITY_FLOOR: f64 = 1e-8;
/// Relative slack on the Stroock–Varopoulos gap.
pub const SV_TOLERANCE: f64 = 1e-8;
/// Time-quadrature slack on the maximal-regularity bound `1/mu`.
pub const MAX_REG_SLACK: f64 = 1.05;
pub const SMOOTHING_TOLERANCE: f64 = 0.05;
const ASSUMPTION_SAMPLES: usize = 1000;

// independent random streams drawn from the scenario seed
const SV_STREAM: u64 = 1;
const GN_STREAM: u64 = 2;
const MAX_REG_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Validates `cfg` and runs it in memory.
pub fn evaluate(cfg: &ScenarioConfig) -> Result<Evaluation, RunError> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let mut ev = Evaluation::default();
    let mut finals: Vec<Field> = Vec::new();

    if let Some(spec) = &cfg.solver {
        let model = cfg.build_model()?;
        let u0 = cfg.build_initial(&grid, model.species())?;
        let (traj, blowup) = match solve_mild(&model, cfg.alpha, &u0, &spec.to_config()) {
            Ok(t) => (t, None),
            Err(SolverError::BlowUp { time, trajectory }) => (*trajectory, Some(time)),
            Err(e) => return Err(e.into()),
        };
        simulation_reports(cfg, &model, &traj, blowup, &mut ev)?;
        finals = traj.final_state().to_vec();
    }

    let r = &cfg.reports;
    if let Some(sv) = &r.sv {
        sv_sweep(cfg.seed, &grid, sv, &finals, &mut ev)?;
    }
    if let Some(gn) = &r.gn {
        gn_sweep(cfg.seed, &grid, gn, &mut ev)?;
    }
    if let Some(mr) = &r.max_reg {
        max_reg_sweep(cfg.seed, &grid, cfg.alpha, mr, &mut ev)?;
    }
    if let Some(s) = &r.smoothing {
        let spec = KernelSpec::new(cfg.alpha, s.mu, &grid)?;
        let times = resolved_times(&spec, s.times);
        let p = s.p.unwrap_or(f64::INFINITY);
        let beta = (s.beta > 0.0).then_some(s.beta);
        let rep = smoothing_rate_fit(&spec, s.r, p, &times, beta)?;
        ev.add("smoothing.csv", to_csv_string(&[rep.clone()]).into_bytes());
        ev.add(
            "smoothing_ratios.csv",
            table(&["time", "ratio"], rep.times.iter().zip(&rep.ratios).map(|(t, v)| vec![f(*t), f(*v)])),
        );
        ev.check(
            "smoothing_slope",
            rep.relative_error <= SMOOTHING_TOLERANCE,
            format!("fitted {:.6} predicted {:.6}", rep.fitted_slope, rep.predicted_slope),
        );
        ev.note("fitted_slope", rep.fitted_slope);
        ev.note("predicted_slope", rep.predicted_slope);
        ev.note("slope_relative_error", rep.relative_error);
    }
    if let Some(l) = &r.ladder {
        let ladder = duality_ladder(cfg.grid.dims, cfg.alpha, l.rho, l.p0, l.eps_star)?;
        ladder_reports(&ladder, &mut ev);
    }

    let checks = checks_table(&ev.checks);
    ev.add("checks.csv", checks);
    ev.note("checks_failed", ev.failed().len() as f64);
    Ok(ev)
}

/// Runs `cfg` and writes its artifacts and manifest under `out`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunManifest, RunError> {
    let ev = evaluate(cfg)?;
    let echo = serde_json::to_value(cfg).expect("config is plain data");
    write_run(out, "scenario", cfg.seed, &ev, Some(echo))
}

fn trajectory_table(traj: &Trajectory) -> Vec<u8> {
    let m = traj.species();
    let mut header: Vec<String> = ["step", "time", "dt", "picard_iterations", "residual"].map(String::from).to_vec();
    for i in 1..=m {
        header.extend([format!("min_{i}"), format!("sup_{i}"), format!("mass_{i}")]);
    }
    let rows = traj.steps.iter().enumerate().map(|(k, s)| {
        let mut row = vec![(k + 1).to_string(), f(s.time), f(s.dt), s.picard_iterations.to_string(), f(s.residual)];
        for i in 0..m {
            row.extend([f(s.min_value[i]), f(s.sup_norm[i]), f(s.total_mass[i])]);
        }
        row
    });
    table(&header, rows)
}

fn simulation_reports(
    cfg: &ScenarioConfig,
    model: &ReactionModel,
    traj: &Trajectory,
    blowup: Option<f64>,
    ev: &mut Evaluation,
) -> Result<(), RunError> {
    ev.add("trajectory.csv", trajectory_table(traj));
    let ck = traj.checkpoint();
    let mut bin = Vec::new();
    ck.write_binary(&mut bin)?;
    ev.add("checkpoint.bin", bin);
    let mut csv = Vec::new();
    ck.write_csv(&mut csv)?;
    ev.add("checkpoint.csv", csv);

    ev.check(
        "no_blowup",
        blowup.is_none(),
        blowup.map_or("bounded up to the horizon".into(), |t| format!("threshold exceeded at t = {t}")),
    );

    // non-negativity floor
    let sup = traj.steps.iter().flat_map(|s| s.sup_norm.iter()).fold(0.0f64, |a, &b| a.max(b));
    let min = traj.steps.iter().flat_map(|s| s.min_value.iter()).fold(f64::INFINITY, |a, &b| a.min(b));
    if !traj.steps.is_empty() {
        ev.check(
            "nonnegativity",
            min >= -NEGATIVITY_FLOOR * sup,
            format!("min {min:.3e}, sup {sup:.3e}"),
        );
    }

    // mass law from the sampled structure of the reactions
    let m0: f64 = traj.initial_mass.iter().sum();
    let mut sampler = LogUniformSampler::new(cfg.seed);
    let conservative = check_assumption(model, Assumption::Conservation, &mut sampler, ASSUMPTION_SAMPLES)?.passed;
    let mut sampler = LogUniformSampler::new(cfg.seed);
    let dissipative = check_assumption(model, Assumption::M, &mut sampler, ASSUMPTION_SAMPLES)?.passed;
    let scale = m0.abs().max(f64::MIN_POSITIVE);
    let t0 = traj.start_time();
    let drift = traj
        .steps
        .iter()
        .map(|s| (s.total_mass.iter().sum::<f64>() - m0).abs() / scale)
        .fold(0.0f64, f64::max);
    if conservative {
        let worst = traj
            .steps
            .iter()
            .map(|s| (s.total_mass.iter().sum::<f64>() - m0).abs() / (scale * (s.time - t0).max(1.0)))
            .fold(0.0f64, f64::max);
        ev.check(
            "mass_conservation",
            worst <= MASS_TOLERANCE,
            format!("relative drift per unit time {worst:.3e}"),
        );
    } else if dissipative {
        let mut prev = m0;
        let mut ok = true;
        for s in &traj.steps {
            let total: f64 = s.total_mass.iter().sum();
            ok &= total <= prev + MASS_TOLERANCE * scale;
            prev = total;
        }
        ev.check("mass_non_increasing", ok, format!("relative drift {drift:.3e}"));
    }

    let vd = accumulate_v(traj, model.diffusivities())?;
    ev.add("v_summary.csv", to_csv_string(&[vd.summary()]).into_bytes());
    ev.check(
        "b_bounds",
        vd.b_bounds_ok,
        format!("{} violations in {} defined values", vd.b_violations, vd.b_defined),
    );
    if let Some(gamma) = cfg.reports.holder_gamma {
        let h = holder_seminorm(&vd, gamma)?;
        ev.add(
            "holder.csv",
            table(&["gamma", "space", "parabolic"], [vec![f(h.gamma), f(h.space), f(h.parabolic)]]),
        );
        ev.note("holder_space", h.space);
    }

    let mut ps = cfg.reports.norm_exponents.clone();
    ps.push(f64::INFINITY);
    let norms = norm_report(traj, &ps, cfg.reports.weak_exponent)?;
    ev.add("norms.csv", to_csv_string(&norms.rows()).into_bytes());

    if cfg.reports.assumptions {
        let mut rows = Vec::new();
        for which in [
            Assumption::P,
            Assumption::M,
            Assumption::Conservation,
            Assumption::Quadratic,
            Assumption::Isc,
            Assumption::Pol,
        ] {
            let mut sampler = LogUniformSampler::new(cfg.seed);
            match check_assumption(model, which, &mut sampler, ASSUMPTION_SAMPLES) {
                Ok(rep) => rows.push(rep),
                Err(ModelError::MissingMeta(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        ev.add("assumptions.csv", to_csv_string(&rows).into_bytes());
    }

    ev.note("final_time", traj.final_time());
    ev.note("steps", traj.steps.len() as f64);
    ev.note("final_dt", traj.steps.last().map_or(f64::NAN, |s| s.dt));
    ev.note("min_over_sup", if sup > 0.0 { min / sup } else { 0.0 });
    ev.note("mass_drift", drift);
    ev.note("blowup_time", blowup.unwrap_or(f64::NAN));
    ev.note("b_violations", vd.b_violations as f64);
    for (i, u) in traj.final_state().iter().enumerate() {
        ev.note(format!("final_mean_{}", i + 1), u.mean());
    }
    for (i, u) in traj.final_state().iter().enumerate() {
        ev.note(format!("final_sup_{}", i + 1), u.sup_norm());
    }
    Ok(())
}

fn sv_sweep(seed: u64, grid: &Grid, sv: &SvSweep, finals: &[Field], ev: &mut Evaluation) -> Result<(), RunError> {
    let mut rng = stream(seed, SV_STREAM);
    let mut fields: Vec<(String, Field)> = (0..sv.fields)
        .map(|k| (format!("random_{k}"), band_limited_field(grid, sv.modes, &mut rng)))
        .collect();
    fields.extend(finals.iter().enumerate().map(|(i, u)| (format!("final_{}", i + 1), u.clone())));
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    for (label, v) in &fields {
        if v.sup_norm() == 0.0 {
            continue;
        }
        for &alpha in &sv.alphas {
            for &ell in &sv.ells {
                let s = stroock_varopoulos_gap(v, alpha, ell)?;
                let mag = s.magnitude();
                if mag > 0.0 {
                    worst = worst.min(s.gap / mag);
                }
                let mut row = vec![label.clone()];
                row.extend(s.fields());
                rows.push(row);
            }
        }
    }
    let mut header = vec!["field"];
    header.extend(fracrd_core::estimates::SvGap::header());
    ev.add("sv.csv", table(&header, rows));
    ev.check(
        "sv_gap",
        worst >= -SV_TOLERANCE,
        format!("smallest relative gap {worst:.3e}"),
    );
    ev.note("sv_min_relative_gap", worst);
    Ok(())
}

fn gn_sweep(seed: u64, grid: &Grid, gn: &GnSweep, ev: &mut Evaluation) -> Result<(), RunError> {
    let mut rng = stream(seed, GN_STREAM);
    let fields: Vec<Field> = (0..gn.fields).map(|_| band_limited_field(grid, gn.modes, &mut rng)).collect();
    let dims = grid.dims();
    let mut rows = Vec::new();
    let mut constants = Vec::new();
    let mut overall = 0.0f64;
    for &alpha in &gn.alphas {
        for &q in &gn.exponents {
            let theta = gn_theta(dims, alpha, q);
            let mut max = 0.0f64;
            for (k, v) in fields.iter().enumerate() {
                let ratio = gn_ratio(v, alpha, q)?;
                max = max.max(ratio);
                rows.push(vec![k.to_string(), dims.to_string(), f(alpha), f(q), f(theta), f(ratio)]);
            }
            overall = overall.max(max);
            constants.push(vec![dims.to_string(), f(alpha), f(q), f(theta), f(max)]);
        }
    }
    ev.add("gn.csv", table(&["field", "dims", "alpha", "q", "theta", "ratio"], rows));
    ev.add("gn_constants.csv", table(&["dims", "alpha", "q", "theta", "empirical_constant"], constants));
    ev.note("gn_max_ratio", overall);
    Ok(())
}

/// `forcing(t) = a cos(w t) + b sin(w t)` with random band-limited `a, b`.
pub fn oscillating_forcing(grid: &Grid, modes: usize, times: &[f64], rng: &mut impl Rng) -> Vec<Field> {
    let a = band_limited_field(grid, modes, rng);
    let b = band_limited_field(grid, modes, rng);
    let w: f64 = rng.gen_range(0.5..6.0);
    times.iter().map(|&t| a.axpby((w * t).cos(), &b, (w * t).sin())).collect()
}

fn max_reg_sweep(seed: u64, grid: &Grid, alpha: f64, mr: &MaxRegSweep, ev: &mut Evaluation) -> Result<(), RunError> {
    let mut rng = stream(seed, MAX_REG_STREAM);
    let times: Vec<f64> = (0..=mr.steps).map(|k| mr.horizon * k as f64 / mr.steps as f64).collect();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &mu in &mr.mus {
        for k in 0..mr.forcings {
            let forcing = oscillating_forcing(grid, mr.modes, &times, &mut rng);
            let ratio = maximal_reg_ratio(&forcing, &times, alpha, mu)?;
            worst = worst.max(ratio * mu);
            rows.push(vec![k.to_string(), f(alpha), f(mu), f(ratio), f(1.0 / mu)]);
        }
    }
    ev.add("max_reg.csv", table(&["forcing", "alpha", "mu", "ratio", "bound"], rows));
    ev.check(
        "max_reg_bound",
        worst <= MAX_REG_SLACK,
        format!("largest mu * ratio {worst:.6}"),
    );
    ev.note("max_reg_mu_ratio", worst);
    Ok(())
}

/// Monotone below the threshold, every step at least the ratio bound, terminated.
pub fn ladder_checks(ladder: &ExponentLadder) -> (bool, bool) {
    let bound = ladder.ratio_lower_bound();
    let below_start = ladder.p0 < ladder.threshold;
    let monotone = ladder.sequence.windows(2).all(|w| {
        w[0] >= ladder.threshold || (w[1] > w[0] && (!below_start || w[1] / w[0] >= bound * (1.0 - 1e-12)))
    });
    (monotone, !ladder.diverged)
}

fn ladder_reports(ladder: &ExponentLadder, ev: &mut Evaluation) {
    ev.add("ladder.csv", to_csv_string(&ladder.rows()).into_bytes());
    ev.add("ladder.json", ladder.to_json().into_bytes());
    let (monotone, terminated) = ladder_checks(ladder);
    ev.check("ladder_monotone", monotone, format!("{} terms", ladder.sequence.len()));
    ev.check(
        "ladder_terminates",
        terminated,
        ladder
            .termination_index
            .map_or(format!("no crossing of {} in {} steps", ladder.threshold, ladder.sequence.len() - 1), |n| {
                format!("n0 = {n}")
            }),
    );
    ev.note("rho_max", ladder.rho_max);
    ev.note("threshold", ladder.threshold);
    ev.note("termination_index", ladder.termination_index.map_or(f64::NAN, |n| n as f64));
    ev.note("ladder_final_p", *ladder.sequence.last().unwrap());
}
