use std::f64::consts::PI;

use fracrd_core::estimates::{
    accumulate_v, duality_ladder, gn_ratio, gn_theta, holder_seminorm, maximal_reg_ratio, maximal_reg_solve,
    norm_report, stroock_varopoulos_gap, EstimateError, QHat,
};
use fracrd_core::model::model_by_name;
use fracrd_core::solver::{solve_mild, SolverConfig, Trajectory};
use fracrd_core::spectral::{band_limited_field, make_grid, Field, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Trajectory with prescribed states and no step diagnostics.
fn frozen(times: Vec<f64>, states: Vec<Vec<Field>>, d: Vec<f64>) -> Trajectory {
    Trajectory {
        alpha: 0.5,
        initial_mass: states[0].iter().map(Field::integral).collect(),
        initial_sup: states[0].iter().map(Field::sup_norm).collect(),
        diffusivities: d,
        times,
        states,
        steps: Vec::new(),
    }
}

fn uniform_times(count: usize, t: f64) -> Vec<f64> {
    (0..count).map(|k| t * k as f64 / (count - 1) as f64).collect()
}

#[test]
fn v_of_zero_trajectory() {
    let g = make_grid(1, 4.0, 16).unwrap();
    let times = uniform_times(5, 1.0);
    let states = times.iter().map(|_| vec![Field::zeros(&g); 2]).collect();
    let vd = accumulate_v(&frozen(times, states, vec![1.0, 2.0]), &[1.0, 2.0]).unwrap();
    assert!(vd.v.iter().all(|v| v.sup_norm() == 0.0));
    assert!(vd.b.iter().flatten().all(Option::is_none));
    assert_eq!(vd.b_defined, 0);
    assert!(vd.b_bounds_ok);
}

#[test]
fn v_of_constant_ones() {
    let g = make_grid(2, 4.0, 8).unwrap();
    let d = vec![1.0, 0.5, 2.0];
    let times = uniform_times(11, 2.0);
    let states = times.iter().map(|_| vec![Field::constant(&g, 1.0); 3]).collect();
    let vd = accumulate_v(&frozen(times.clone(), states, d.clone()), &d).unwrap();
    for (t, v) in times.iter().zip(&vd.v) {
        assert!(v.values().iter().all(|x| (x - 3.5 * t).abs() < 1e-13));
    }
    for b in vd.b.iter().flatten() {
        assert!((b.unwrap() - 3.0 / 3.5).abs() < 1e-15);
    }
    assert!(vd.b_bounds_ok && vd.b_lower == 0.5 && vd.b_upper == 2.0);
}

#[test]
fn equal_diffusivities_collapse_b() {
    let g = make_grid(1, 8.0, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let times = uniform_times(4, 1.0);
    let states = times
        .iter()
        .map(|_| (0..3).map(|_| band_limited_field(&g, 3, &mut rng).map(|x| x.abs())).collect())
        .collect();
    let vd = accumulate_v(&frozen(times, states, vec![0.7; 3]), &[0.7; 3]).unwrap();
    for b in vd.b.iter().flatten().flatten() {
        assert!((b - 1.0 / 0.7).abs() < 1e-14);
    }
}

#[test]
fn b_bounds_on_solver_runs() {
    for name in ["bimolecular", "dissipative-pair", "superquadratic-isc"] {
        let model = model_by_name(name).unwrap();
        let g = make_grid(1, 12.0, 64).unwrap();
        let u0: Vec<Field> = (0..model.species())
            .map(|i| Field::from_fn(&g, |x| (1.0 + i as f64) * (-(x[0] - i as f64).powi(2)).exp()).unwrap())
            .collect();
        let traj = solve_mild(&model, 0.6, &u0, &SolverConfig::new(0.02, 1.0)).unwrap();
        let vd = accumulate_v(&traj, model.diffusivities()).unwrap();
        assert!(vd.b_bounds_ok, "{name}: {} violations", vd.b_violations);
        assert!(vd.b_defined > 0);
    }
}

fn frozen_v(field: Field) -> fracrd_core::estimates::VDiagnostics {
    // u constant in time with d = 1: v(t) = t u, so the t = 1 slice is u
    let g = field.grid().clone();
    let times = vec![0.0, 0.5, 1.0];
    let states = times.iter().map(|_| vec![field.clone()]).collect();
    let _ = g;
    accumulate_v(&frozen(times, states, vec![1.0]), &[1.0]).unwrap()
}

#[test]
fn holder_of_constant_and_sine() {
    let g = make_grid(1, 2.0 * PI, 256).unwrap();
    let h = holder_seminorm(&frozen_v(Field::constant(&g, 0.0)), 0.5).unwrap();
    assert_eq!((h.space, h.parabolic), (0.0, 0.0));

    let vd = frozen_v(Field::from_fn(&g, |x| x[0].sin()).unwrap());
    let h = holder_seminorm(&vd, 0.99).unwrap();
    assert!((h.space - 1.0).abs() < 0.05, "space {}", h.space);

    assert!(matches!(holder_seminorm(&vd, 1.0), Err(EstimateError::GammaOutOfRange(_))));
}

#[test]
fn holder_random_pair_sampling_on_large_grids() {
    let g = make_grid(2, 2.0 * PI, 128).unwrap();
    let vd = frozen_v(Field::from_fn(&g, |x| x[0].sin() * x[1].cos()).unwrap());
    let h = holder_seminorm(&vd, 0.9).unwrap();
    assert!(h.space > 0.8 && h.space < 1.5, "{}", h.space);
}

#[test]
fn holder_stable_under_refinement() {
    let model = model_by_name("bimolecular").unwrap();
    let run = |n: usize| {
        let g = make_grid(1, 16.0, n).unwrap();
        let u0: Vec<Field> = [2.0, 0.5, 1.0, 0.5]
            .iter()
            .enumerate()
            .map(|(i, &a)| Field::from_fn(&g, |x| a * (-(x[0] - 0.7 * i as f64).powi(2) / 2.0).exp()).unwrap())
            .collect();
        let traj = solve_mild(&model, 0.6, &u0, &SolverConfig::new(0.05, 1.0)).unwrap();
        holder_seminorm(&accumulate_v(&traj, model.diffusivities()).unwrap(), 0.5).unwrap()
    };
    let (a, b) = (run(64), run(128));
    assert!((a.space - b.space).abs() / b.space < 0.1, "{} vs {}", a.space, b.space);
}

#[test]
fn sv_gap_vanishes_at_two() {
    let g = make_grid(1, 2.0 * PI, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for alpha in [0.3, 0.5, 0.9] {
        let v = band_limited_field(&g, 8, &mut rng);
        let s = stroock_varopoulos_gap(&v, alpha, 2.0).unwrap();
        assert!(s.gap.abs() <= 1e-10 * s.magnitude(), "{s:?}");
    }
}

#[test]
fn sv_gap_of_sine_is_nonnegative() {
    let g = make_grid(1, 2.0 * PI, 128).unwrap();
    let v = Field::from_fn(&g, |x| x[0].sin()).unwrap();
    let s = stroock_varopoulos_gap(&v, 0.5, 3.0).unwrap();
    assert!(s.gap >= -1e-8, "{s:?}");
}

#[test]
fn gn_theta_and_scale_invariance() {
    assert_eq!(gn_theta(1, 0.5, 4.0), 0.5);
    let g = make_grid(1, 2.0 * PI, 64).unwrap();
    let v = Field::from_fn(&g, |x| x[0].sin()).unwrap();
    let r = gn_ratio(&v, 0.5, 4.0).unwrap();
    assert!(r.is_finite() && r > 0.0);
    for c in [1e-3, 1.0, 1e3] {
        let rc = gn_ratio(&v.scale(c), 0.5, 4.0).unwrap();
        assert!((rc - r).abs() < 1e-12 * r);
    }
}

#[test]
fn max_reg_single_mode_oracle() {
    // u' + mu k^(2a) u = e^-t sin(kx), u(0) = 0: u = A(t) sin(kx), A = (e^-t - e^-lt)/(l - 1)
    let (k, alpha, mu): (f64, f64, f64) = (3.0, 0.6, 0.8);
    let g = make_grid(1, 2.0 * PI, 32).unwrap();
    let lam = mu * k.powf(2.0 * alpha);
    let times = uniform_times(2001, 2.0);
    let forcing: Vec<Field> = times
        .iter()
        .map(|&t| Field::from_fn(&g, |x| (-t).exp() * (k * x[0]).sin()).unwrap())
        .collect();
    let sol = maximal_reg_solve(&forcing, &times, alpha, mu).unwrap();
    for (t, u) in times.iter().zip(&sol) {
        let a = ((-t).exp() - (-lam * t).exp()) / (lam - 1.0);
        for (i, v) in u.values().iter().enumerate() {
            assert!((v - a * (k * g.coordinate(i)).sin()).abs() < 1e-6);
        }
    }
    // ratio = k^(2a) ||A||_2 / ||e^-t||_2 on [0, T]
    let tt: f64 = 2.0;
    let ia = ((1.0 - (-2.0 * tt).exp()) / 2.0 - 2.0 * (1.0 - (-(1.0 + lam) * tt).exp()) / (1.0 + lam)
        + (1.0 - (-2.0 * lam * tt).exp()) / (2.0 * lam))
        / (lam - 1.0).powi(2);
    let ifo = (1.0 - (-2.0 * tt).exp()) / 2.0;
    let exact = k.powf(2.0 * alpha) * (ia / ifo).sqrt();
    let ratio = maximal_reg_ratio(&forcing, &times, alpha, mu).unwrap();
    assert!((ratio - exact).abs() < 1e-6 * exact, "{ratio} vs {exact}");
    assert!(ratio <= 1.0 / mu);
}

#[test]
fn max_reg_zero_forcing() {
    let g = make_grid(1, 2.0 * PI, 16).unwrap();
    let times = uniform_times(5, 1.0);
    let f = vec![Field::zeros(&g); 5];
    assert_eq!(maximal_reg_ratio(&f, &times, 0.5, 1.0).unwrap(), 0.0);
}

#[test]
fn max_reg_random_sweep() {
    let g = make_grid(1, 2.0 * PI, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let times = uniform_times(101, 1.0);
    for mu in [0.5, 1.0, 2.0] {
        for _ in 0..10 {
            let a = band_limited_field(&g, 8, &mut rng);
            let b = band_limited_field(&g, 8, &mut rng);
            let w: f64 = rng.gen_range(0.5..6.0);
            let forcing: Vec<Field> = times.iter().map(|&t| a.axpby((w * t).cos(), &b, (w * t).sin())).collect();
            let r = maximal_reg_ratio(&forcing, &times, 0.7, mu).unwrap();
            assert!(r <= 1.05 / mu, "mu {mu}: {r}");
        }
    }
}

#[test]
fn norms_of_constant_and_indicator() {
    let g = make_grid(2, 3.0, 8).unwrap();
    let c = 2.5;
    let times = uniform_times(6, 2.0);
    let states = times.iter().map(|_| vec![Field::constant(&g, c)]).collect();
    let rep = norm_report(&frozen(times.clone(), states, vec![1.0]), &[1.0, 2.0, 3.5, f64::INFINITY], Some(2.0)).unwrap();
    let vt: f64 = 9.0 * 2.0;
    for &(p, value) in &rep.species[0].lp {
        let exact = if p.is_infinite() { c } else { c * vt.powf(1.0 / p) };
        assert!((value - exact).abs() < 1e-12 * exact, "p {p}");
    }
    // constant field: weak norm attained at lambda = c with measure VT
    let (_, weak) = rep.species[0].weak.unwrap();
    assert!((weak - c * vt.sqrt()).abs() < 1e-12 * weak);

    // indicator of a space-time region: c on half the nodes at every time
    let ind = Field::from_fn(&g, |x| if x[0] < 0.0 { c } else { 0.0 }).unwrap();
    let states = times.iter().map(|_| vec![ind.clone()]).collect();
    let rep = norm_report(&frozen(times, states, vec![1.0]), &[3.0], Some(3.0)).unwrap();
    let m: f64 = 0.5 * vt;
    let (_, weak) = rep.species[0].weak.unwrap();
    assert!((weak - c * m.powf(1.0 / 3.0)).abs() < 1e-12 * weak);
}

#[test]
fn norms_grow_with_horizon() {
    let g = make_grid(1, 10.0, 64).unwrap();
    let model = model_by_name("dissipative-pair").unwrap();
    let u0 = vec![
        Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap(),
        Field::constant(&g, 0.3),
    ];
    let short = solve_mild(&model, 0.5, &u0, &SolverConfig::new(0.05, 1.0)).unwrap();
    let long = solve_mild(&model, 0.5, &u0, &SolverConfig::new(0.05, 2.0)).unwrap();
    let ps = [1.0, 2.0, 4.0];
    let a = norm_report(&short, &ps, None).unwrap();
    let b = norm_report(&long, &ps, None).unwrap();
    for i in 0..2 {
        for (x, y) in a.species[i].lp.iter().zip(&b.species[i].lp) {
            assert!(y.1 >= x.1);
        }
    }
    assert_eq!(b.species[0].window_sup.len(), 2);
    assert_eq!(b.rows().iter().filter(|r| r.quantity == "v_derivative_sup").count(), long.times.len());
}

fn random_trajectory(g: &Grid, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = uniform_times(4, 1.0);
    let states = times
        .iter()
        .map(|_| vec![band_limited_field(g, 4, &mut rng).map(|x| x.abs() * 3.0)])
        .collect();
    frozen(times, states, vec![1.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weak_norm_below_strong(seed in any::<u64>(), p in 1.0f64..6.0) {
        let g = make_grid(1, 5.0, 32).unwrap();
        let rep = norm_report(&random_trajectory(&g, seed), &[p], Some(p)).unwrap();
        let strong = rep.species[0].lp[0].1;
        let weak = rep.species[0].weak.unwrap().1;
        prop_assert!(weak <= strong * (1.0 + 1e-12));
    }

    #[test]
    fn sv_gap_nonnegative(seed in any::<u64>()) {
        let g = make_grid(1, 2.0 * PI, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = band_limited_field(&g, 8, &mut rng);
        for ell in [2.0, 3.0, 4.0] {
            for alpha in [0.3, 0.5, 0.9] {
                let s = stroock_varopoulos_gap(&v, alpha, ell).unwrap();
                prop_assert!(s.gap >= -1e-8 * s.magnitude(), "ell {} alpha {}: {:?}", ell, alpha, s);
            }
        }
    }

    #[test]
    fn ladder_monotone_with_ratio_bound(
        dims in 1usize..=3,
        alpha in 0.05f64..0.95,
        rho_frac in 0.0f64..=1.0,
        p0 in 2.0001f64..8.0,
    ) {
        let n2a = dims as f64 + 2.0 * alpha;
        let rho = 1.0 + rho_frac * (4.0 * alpha / n2a).min(1.0);
        let l = duality_ladder(dims, alpha, rho, p0, 0.0).unwrap();
        let bound = l.ratio_lower_bound();
        // the bound only speaks about ladders that start below the threshold
        prop_assert!(p0 >= l.threshold || bound > 1.0);
        let below: Vec<f64> = l.sequence.iter().cloned().take_while(|&p| p < l.threshold).collect();
        for w in l.sequence.windows(2) {
            if w[0] < l.threshold {
                prop_assert!(w[1] > w[0]);
                prop_assert!(w[1] / w[0] >= bound * (1.0 - 1e-12));
            }
        }
        prop_assert!(!l.diverged, "{} steps below threshold", below.len());
    }

    #[test]
    fn q_hat_monotone_on_branches(dims in 1usize..=3, alpha in 0.05f64..0.95, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let critical = (dims as f64 + 2.0 * alpha) / (2.0 * alpha);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let l = duality_ladder(dims, alpha, 1.0, 2.0, 0.0).unwrap();
        // middle branch
        let p = |s: f64| 1.0 + 1e-9 + s * (critical - 1.0 - 2e-9);
        let (x, y) = (l.q_hat(p(lo)).unwrap(), l.q_hat(p(hi)).unwrap());
        prop_assert!(matches!(x, QHat::Exact(_)) && matches!(y, QHat::Exact(_)));
        prop_assert!(y.as_f64() >= x.as_f64());
        // upper branch is constant
        prop_assert_eq!(l.q_hat(critical * (1.0 + lo) + 1e-6), Some(QHat::Infinite));
    }
}

#[test]
fn ladder_sweep_of_a_thousand_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let dims = rng.gen_range(1..=3);
        let alpha = rng.gen_range(0.05..0.95);
        let n2a = dims as f64 + 2.0 * alpha;
        let rho = 1.0 + rng.gen_range(0.0..=1.0) * (4.0 * alpha / n2a).min(1.0);
        let p0 = rng.gen_range(2.0001..8.0);
        let l = duality_ladder(dims, alpha, rho, p0, 0.0).unwrap();
        let bound = l.ratio_lower_bound();
        assert!(p0 >= l.threshold || bound > 1.0);
        for w in l.sequence.windows(2) {
            assert!(w[1] > w[0] && w[1] / w[0] >= bound * (1.0 - 1e-12));
        }
        assert!(l.termination_index.is_some());
    }
    assert!(matches!(
        duality_ladder(2, 0.5, 1.9, 3.0, 0.0),
        Err(EstimateError::RhoInadmissible { .. })
    ));
}

#[test]
fn gn_sweep_maximum_is_an_upper_bound() {
    let g = make_grid(1, 2.0 * PI, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ratios: Vec<f64> = (0..100)
        .map(|_| gn_ratio(&band_limited_field(&g, 8, &mut rng), 0.5, 4.0).unwrap())
        .collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(ratios.iter().all(|&r| r <= max && r > 0.0));
}
