use std::f64::consts::PI;
use std::sync::Arc;

use fracrd_core::heat_kernel::{semigroup_apply, KernelSpec};
use fracrd_core::model::{model_by_name, ModelMeta, Monomial, PolynomialReactions, ReactionModel};
use fracrd_core::solver::{detect_blowup, resume_mild, solve_mild, Checkpoint, SolverConfig, SolverError};
use fracrd_core::spectral::{make_grid, Field, Grid};

fn mono(coefficient: f64, powers: &[u32]) -> Monomial {
    Monomial {
        coefficient,
        powers: powers.to_vec(),
    }
}

fn poly_model(name: &str, d: Vec<f64>, terms: Vec<Vec<Monomial>>) -> ReactionModel {
    let r = PolynomialReactions::new(terms).unwrap();
    ReactionModel::new(name, d, Arc::new(r), ModelMeta::default()).unwrap()
}

fn constants(g: &Grid, values: &[f64]) -> Vec<Field> {
    values.iter().map(|&c| Field::constant(g, c)).collect()
}

fn bumps(g: &Grid, amps: &[f64]) -> Vec<Field> {
    amps.iter()
        .enumerate()
        .map(|(i, &a)| {
            let shift = 0.7 * i as f64;
            Field::from_fn(g, |x| a * (-(x[0] - shift).powi(2) / 2.0).exp()).unwrap()
        })
        .collect()
}

#[test]
fn zero_reactions_reproduce_the_semigroup() {
    let g = make_grid(1, 20.0, 128).unwrap();
    let d = vec![1.0, 0.3];
    let model = poly_model("zero", d.clone(), vec![vec![], vec![]]);
    let u0 = bumps(&g, &[2.0, 1.0]);
    for alpha in [0.4, 0.75, 1.0] {
        let traj = solve_mild(&model, alpha, &u0, &SolverConfig::new(0.05, 1.5)).unwrap();
        assert_eq!(traj.final_time(), 1.5);
        for (i, u) in traj.final_state().iter().enumerate() {
            let spec = KernelSpec::new(alpha, d[i], &g).unwrap();
            let exact = semigroup_apply(&u0[i], &spec, 1.5).unwrap();
            let err = u.axpby(1.0, &exact, -1.0).sup_norm() / exact.sup_norm();
            assert!(err < 1e-10, "alpha {alpha} species {i}: {err}");
        }
    }
}

#[test]
fn reversible_bimolecular_ode_reduction() {
    // u1 = u3, u2 = u4 = 1 - u1, so du1/dt = -(2 u1 - 1)
    let g = make_grid(1, 10.0, 16).unwrap();
    let model = model_by_name("bimolecular").unwrap();
    let traj = solve_mild(&model, 0.5, &constants(&g, &[1.0, 0.0, 1.0, 0.0]), &SolverConfig::new(1e-3, 1.0)).unwrap();
    let exact = 0.5 + 0.5 * (-2.0f64).exp();
    let u = traj.final_state();
    for (i, want) in [exact, 1.0 - exact, exact, 1.0 - exact].iter().enumerate() {
        assert!((u[i].values()[3] - want).abs() < 1e-6, "species {i}: {}", u[i].values()[3]);
    }
}

#[test]
fn forward_bimolecular_ode_reduction() {
    // S1 + S3 -> S2 + S4 with u1 = u3: du1/dt = -u1^2, u1 = 1 / (1 + t)
    let g = make_grid(1, 10.0, 16).unwrap();
    let k = |s: f64| vec![mono(s, &[1, 0, 1, 0])];
    let model = poly_model("forward", vec![1.0, 0.5, 2.0, 1.5], vec![k(-1.0), k(1.0), k(-1.0), k(1.0)]);
    let traj = solve_mild(&model, 0.5, &constants(&g, &[1.0, 0.0, 1.0, 0.0]), &SolverConfig::new(1e-3, 1.0)).unwrap();
    for f in traj.final_state() {
        assert!((f.values()[0] - 0.5).abs() < 1e-6, "{}", f.values()[0]);
    }
}

#[test]
fn quadratic_blowup_detected_near_one_over_u0() {
    let g = make_grid(1, 4.0, 8).unwrap();
    let model = poly_model("square", vec![1.0], vec![vec![mono(1.0, &[2])]]);
    let err = solve_mild(&model, 0.5, &constants(&g, &[10.0]), &SolverConfig::new(1e-3, 1.0)).unwrap_err();
    let SolverError::BlowUp { time, trajectory } = err else {
        panic!("expected blow-up, got {err}");
    };
    assert!((time - 0.1).abs() < 0.02, "blow-up at {time}");
    let detected = detect_blowup(&trajectory, 1e7).unwrap();
    assert!((detected - 0.1).abs() < 0.02);
    assert_eq!(detected, trajectory.final_time());
}

#[test]
fn detect_blowup_definitions() {
    let g = make_grid(1, 10.0, 32).unwrap();
    let model = model_by_name("dissipative-pair").unwrap();
    let traj = solve_mild(&model, 0.8, &bumps(&g, &[1.0, 2.0]), &SolverConfig::new(0.1, 1.0)).unwrap();
    assert_eq!(detect_blowup(&traj, 10.0), None);
    assert_eq!(detect_blowup(&traj, 1e-3), Some(traj.times[0]));
    let after_start = traj.summed_sup_series()[1].1 * 0.999;
    // first step already above a threshold just under its value, initial data below it
    if traj.summed_sup_series()[0].1 <= after_start {
        assert_eq!(detect_blowup(&traj, after_start), Some(traj.times[1]));
    }
}

#[test]
fn first_step_exceedance_reports_first_step_time() {
    let g = make_grid(1, 4.0, 8).unwrap();
    let model = poly_model("growth", vec![1.0], vec![vec![mono(1.0, &[1])]]);
    let traj = solve_mild(&model, 1.0, &constants(&g, &[1.0]), &SolverConfig::new(0.1, 1.0)).unwrap();
    assert_eq!(detect_blowup(&traj, 1.05), Some(traj.times[1]));
}

#[test]
fn conservative_mass_and_nonnegativity() {
    let g = make_grid(1, 16.0, 64).unwrap();
    let model = model_by_name("bimolecular").unwrap();
    let u0 = bumps(&g, &[2.0, 0.0, 1.0, 0.5]);
    let traj = solve_mild(&model, 0.6, &u0, &SolverConfig::new(0.01, 3.0)).unwrap();
    let series = traj.total_mass_series();
    let m0 = series[0].1;
    for &(t, m) in &series {
        assert!((m - m0).abs() <= 1e-10 * m0 * t.max(1.0), "t {t}: drift {}", (m - m0) / m0);
    }
    let mut running = traj.initial_sup.iter().cloned().fold(0.0, f64::max);
    for s in &traj.steps {
        running = s.sup_norm.iter().cloned().fold(running, f64::max);
        for &min in &s.min_value {
            assert!(min >= -1e-8 * running, "t {}: min {min}", s.time);
        }
    }
}

#[test]
fn dissipative_mass_non_increasing() {
    let g = make_grid(2, 12.0, 32).unwrap();
    let model = model_by_name("dissipative-pair").unwrap();
    let u0: Vec<Field> = [1.5, 1.0]
        .iter()
        .map(|&a| Field::from_fn(&g, |x| a * (-(x[0] * x[0] + x[1] * x[1]) / 3.0).exp()).unwrap())
        .collect();
    let traj = solve_mild(&model, 0.7, &u0, &SolverConfig::new(0.02, 2.0)).unwrap();
    let series = traj.total_mass_series();
    for w in series.windows(2) {
        assert!(w[1].1 <= w[0].1 * (1.0 + 1e-10), "mass grew at t {}", w[1].0);
    }
    assert!(series.last().unwrap().1 < series[0].1);
}

#[test]
fn classical_heat_step_matches_direct_dft() {
    let n = 64;
    let l = 2.0 * PI;
    let g = make_grid(1, l, n).unwrap();
    let model = poly_model("zero", vec![0.7], vec![vec![]]);
    let u0 = Field::from_fn(&g, |x| (x[0].cos() + 1.5).powi(3) * (-0.2 * x[0] * x[0]).exp()).unwrap();
    let dt = 0.05;
    let traj = solve_mild(&model, 1.0, &[u0.clone()], &SolverConfig::new(dt, dt)).unwrap();

    // O(n^2) DFT with nodes at x_j = -L/2 + j h
    let h = l / n as f64;
    let x = |j: usize| -l / 2.0 + j as f64 * h;
    let mut out = vec![0.0; n];
    for k in 0..n {
        let m = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let xi = 2.0 * PI * m / l;
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..n {
            let ph = -xi * x(j);
            re += u0.values()[j] * ph.cos();
            im += u0.values()[j] * ph.sin();
        }
        let damp = (-0.7 * xi * xi * dt).exp();
        for j in 0..n {
            let ph = xi * x(j);
            // the Nyquist mode is kept with its real part only
            let contrib = if k == n / 2 { re * ph.cos() } else { re * ph.cos() - im * ph.sin() };
            out[j] += damp * contrib / n as f64;
        }
    }
    let got = traj.final_state()[0].values();
    let err = got.iter().zip(&out).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    assert!(err < 1e-8, "max error {err}");
}

#[test]
fn halving_dt_converges() {
    let g = make_grid(1, 16.0, 64).unwrap();
    let model = model_by_name("bimolecular").unwrap();
    let u0 = bumps(&g, &[2.0, 0.5, 1.0, 0.5]);
    let run = |dt: f64| solve_mild(&model, 0.5, &u0, &SolverConfig::new(dt, 1.0)).unwrap().final_state().to_vec();
    let diff = |a: &[Field], b: &[Field]| {
        a.iter().zip(b).map(|(x, y)| x.axpby(1.0, y, -1.0).sup_norm()).fold(0.0, f64::max)
    };
    let (a, b, c) = (run(0.1), run(0.05), run(0.025));
    let (e1, e2) = (diff(&a, &b), diff(&b, &c));
    // at least first order: successive differences shrink by about 2 or better
    assert!(e2 < 0.6 * e1, "{e1} {e2}");
}

#[test]
fn resume_from_checkpoint_continues_the_run() {
    let g = make_grid(1, 16.0, 64).unwrap();
    let model = model_by_name("dissipative-pair").unwrap();
    let u0 = bumps(&g, &[2.0, 1.0]);
    let whole = solve_mild(&model, 0.6, &u0, &SolverConfig::new(0.125, 2.0)).unwrap();
    let first = solve_mild(&model, 0.6, &u0, &SolverConfig::new(0.125, 1.0)).unwrap();

    let mut buf = Vec::new();
    first.checkpoint().write_binary(&mut buf).unwrap();
    let ck = Checkpoint::read_binary(&buf[..]).unwrap();
    let second = resume_mild(&model, 0.6, &ck, &SolverConfig::new(0.125, 1.0)).unwrap();
    assert_eq!(second.start_time(), 1.0);
    assert_eq!(second.final_time(), 2.0);
    for (a, b) in second.final_state().iter().zip(whole.final_state()) {
        assert!(a.axpby(1.0, b, -1.0).sup_norm() < 1e-14);
    }
}

#[test]
fn rejects_bad_initial_data() {
    let g = make_grid(1, 4.0, 8).unwrap();
    let model = model_by_name("dissipative-pair").unwrap();
    let mut v = vec![1.0; 8];
    v[3] = -0.1;
    let u0 = vec![Field::new(&g, v).unwrap(), Field::constant(&g, 1.0)];
    assert!(matches!(
        solve_mild(&model, 0.5, &u0, &SolverConfig::new(0.1, 1.0)),
        Err(SolverError::NegativeInitialData { species: 0, .. })
    ));
    assert!(matches!(
        solve_mild(&model, 0.5, &u0[..1], &SolverConfig::new(0.1, 1.0)),
        Err(SolverError::SpeciesMismatch { .. })
    ));
}

#[test]
fn picard_divergence_triggers_halving() {
    // stiff growth u' = 50 u^2 from u0 = 1 on a large window needs several halvings
    let g = make_grid(1, 4.0, 8).unwrap();
    let model = poly_model("stiff", vec![1.0], vec![vec![mono(-50.0, &[2])]]);
    let traj = solve_mild(&model, 1.0, &constants(&g, &[1.0]), &SolverConfig::new(0.5, 1.0)).unwrap();
    assert!(traj.steps[0].dt < 0.5);
    // accuracy is limited by the contraction-sized step, not the requested one
    let exact = 1.0 / (1.0 + 50.0);
    let got = traj.final_state()[0].values()[0];
    assert!((got - exact).abs() < 0.1 * exact, "{got} vs {exact}");
}

#[test]
fn windowed_sup_non_increasing_after_burn_in() {
    let g = make_grid(1, 32.0, 256).unwrap();
    let model = model_by_name("bimolecular").unwrap();
    let u0 = bumps(&g, &[3.0, 0.5, 2.0, 1.0]);
    let mut cfg = SolverConfig::new(0.01, 20.0);
    cfg.record_every = 100;
    let traj = solve_mild(&model, 0.5, &u0, &cfg).unwrap();
    let w = traj.windowed_sup(1.0);
    assert_eq!(w.len(), 20);
    for k in 2..19 {
        assert!(w[k + 1] <= w[k], "window {k}: {w:?}");
    }
}
