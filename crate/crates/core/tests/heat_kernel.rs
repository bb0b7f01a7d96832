use std::f64::consts::PI;

use fracrd_core::heat_kernel::{
    contraction_violation, heat_kernel_field, kernel_diagnostics, resolved_times, semigroup_apply,
    shell_tail_mass, smoothing_rate_fit, KernelError, KernelSpec,
};
use fracrd_core::spectral::{make_grid, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn peak(field: &Field) -> f64 {
    field.max()
}

#[test]
fn gaussian_peak_closed_form() {
    let g = make_grid(1, 200.0, 1024).unwrap();
    let spec = KernelSpec::new(1.0, 1.0, &g).unwrap();
    let k = heat_kernel_field(&spec, 1.0).unwrap();
    let exact = (4.0 * PI).powf(-0.5);
    assert!((peak(&k) - exact).abs() / exact < 1e-4);
    // value at x = 0 is the centre node
    assert_eq!(k.values()[512], peak(&k));
}

#[test]
fn gaussian_profile_matches_closed_form() {
    let g = make_grid(1, 60.0, 512).unwrap();
    let spec = KernelSpec::new(1.0, 2.0, &g).unwrap();
    let t = 0.75;
    let k = heat_kernel_field(&spec, t).unwrap();
    let s = 2.0 * t;
    for i in 0..512 {
        let x = g.coordinate(i);
        let exact = (4.0 * PI * s).powf(-0.5) * (-x * x / (4.0 * s)).exp();
        assert!((k.values()[i] - exact).abs() < 1e-12);
    }
}

#[test]
fn poisson_peak_closed_form() {
    let g = make_grid(1, 200.0, 1024).unwrap();
    let spec = KernelSpec::new(0.5, 1.0, &g).unwrap();
    let k = heat_kernel_field(&spec, 1.0).unwrap();
    let exact = 1.0 / PI;
    assert!((peak(&k) - exact).abs() / exact < 1e-4);
}

#[test]
fn unit_mass_and_positivity() {
    for (dims, n, alpha, t) in [(1, 512, 0.5, 2.0), (1, 256, 0.8, 1.0), (2, 64, 0.6, 1.5), (3, 32, 1.0, 2.0)] {
        let g = make_grid(dims, if dims == 3 { 20.0 } else { 40.0 }, n).unwrap();
        let spec = KernelSpec::new(alpha, 1.0, &g).unwrap();
        let k = heat_kernel_field(&spec, t).unwrap();
        let tail = shell_tail_mass(&k);
        assert!((k.integral() - 1.0).abs() <= tail + 1e-10, "dims {dims}: mass {}", k.integral());
        assert!(k.min() >= -1e-12 * k.max(), "dims {dims}: min {}", k.min());
    }
}

#[test]
fn poisson_envelope_ratio_is_one_over_pi() {
    let g = make_grid(1, 200.0, 1024).unwrap();
    let spec = KernelSpec::new(0.5, 1.0, &g).unwrap();
    let diag = kernel_diagnostics(&spec, &[1.0]).unwrap();
    let d = &diag.per_time[0];
    for v in [d.envelope_inner_min, d.envelope_inner_max] {
        assert!((v - 1.0 / PI).abs() * PI < 1e-3, "ratio {v}");
    }
}

#[test]
fn envelope_interval_is_time_independent() {
    let g = make_grid(1, 400.0, 4096).unwrap();
    for alpha in [0.5, 0.7, 0.9] {
        let spec = KernelSpec::new(alpha, 1.0, &g).unwrap();
        let diag = kernel_diagnostics(&spec, &[0.2, 0.5, 1.0, 2.0]).map_err(|e| format!("alpha {alpha}: {e}")).unwrap();
        let (c1, c2) = diag.envelope_interval();
        assert!(c1 > 0.0 && c2 < 10.0 && c1 < c2, "alpha {alpha}: [{c1}, {c2}]");
        for d in &diag.per_time {
            assert!(d.envelope_min >= c1 && d.envelope_max <= c2);
        }
    }
}

#[test]
fn self_similarity_residual() {
    // t2 = 16 t1 with both kernels resolved and images negligible
    let g = make_grid(1, 800.0, 32768).unwrap();
    for alpha in [0.5, 1.0] {
        let spec = KernelSpec::new(alpha, 1.0, &g).unwrap();
        let diag = kernel_diagnostics(&spec, &[0.25, 4.0]).unwrap();
        let res = diag.max_selfsim_residual();
        assert!(res < 1e-6, "alpha {alpha}: residual {res}");
    }
}

#[test]
fn tail_guard() {
    let g = make_grid(1, 20.0, 256).unwrap();
    let spec = KernelSpec::new(0.5, 1.0, &g).unwrap();
    assert!(matches!(
        kernel_diagnostics(&spec, &[50.0]),
        Err(KernelError::TailMassTooLarge { .. })
    ));
}

#[test]
fn semigroup_identity_and_eigenfunction() {
    let g = make_grid(1, 2.0 * PI, 64).unwrap();
    let spec = KernelSpec::new(0.6, 1.5, &g).unwrap();
    let u = Field::from_fn(&g, |x| (3.0 * x[0]).sin() + 0.5).unwrap();
    let same = semigroup_apply(&u, &spec, 0.0).unwrap();
    assert_eq!(same.values(), u.values());
    let t = 0.4;
    let out = semigroup_apply(&u, &spec, t).unwrap();
    let decay = (-1.5 * t * 9f64.powf(0.6)).exp();
    for (i, v) in out.values().iter().enumerate() {
        let x = g.coordinate(i);
        assert!((v - (decay * (3.0 * x).sin() + 0.5)).abs() < 1e-13);
    }
}

#[test]
fn semigroup_law_and_mean() {
    let g = make_grid(2, 10.0, 32).unwrap();
    let spec = KernelSpec::new(0.45, 0.8, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = Field::new(&g, (0..g.len()).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
    for _ in 0..100 {
        let s = rng.gen_range(0.0..2.0);
        let t = rng.gen_range(0.0..2.0);
        let two = semigroup_apply(&semigroup_apply(&u, &spec, s).unwrap(), &spec, t).unwrap();
        let one = semigroup_apply(&u, &spec, s + t).unwrap();
        for (a, b) in two.values().iter().zip(one.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((one.mean() - u.mean()).abs() < 1e-13);
    }
}

#[test]
fn norms_do_not_grow() {
    let g = make_grid(1, 40.0, 256).unwrap();
    let spec = KernelSpec::new(1.0, 1.0, &g).unwrap();
    let u = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
    let times: Vec<f64> = (1..20).map(|k| 0.1 * k as f64).collect();
    assert_eq!(contraction_violation(&u, &spec, &times, 1e-12).unwrap(), None);
}

fn fit(dims: usize, n: usize, extent: f64, alpha: f64, r: f64, p: f64, beta: Option<f64>) -> (f64, f64) {
    let g = make_grid(dims, extent, n).unwrap();
    let spec = KernelSpec::new(alpha, 1.0, &g).unwrap();
    let times = resolved_times(&spec, 8);
    let rep = smoothing_rate_fit(&spec, r, p, &times, beta).unwrap();
    (rep.fitted_slope, rep.predicted_slope)
}

#[test]
fn smoothing_slopes() {
    let inf = f64::INFINITY;
    let (f, p) = fit(1, 4096, 400.0, 0.5, 1.0, inf, None);
    assert_eq!(p, -1.0);
    assert!((f - p).abs() / p.abs() < 0.05, "fitted {f}");

    let (f, p) = fit(1, 4096, 400.0, 0.75, 1.0, 2.0, None);
    assert!((f - p).abs() / p.abs() < 0.05, "fitted {f} predicted {p}");

    let (f, p) = fit(2, 256, 100.0, 0.5, 1.0, 2.0, None);
    assert!((f - p).abs() / p.abs() < 0.05, "fitted {f} predicted {p}");

    let (f, p) = fit(1, 4096, 400.0, 0.5, 2.0, 2.0, None);
    assert_eq!(p, 0.0);
    assert!(f.abs() < 0.02, "fitted {f}");

    let (f, p) = fit(1, 4096, 400.0, 0.5, 2.0, 2.0, Some(0.25));
    assert_eq!(p, -0.5);
    assert!((f - p).abs() / p.abs() < 0.05, "fitted {f}");

    let (f, p) = fit(1, 4096, 400.0, 0.5, 1.0, inf, Some(0.25));
    assert_eq!(p, -1.5);
    assert!((f - p).abs() / p.abs() < 0.05, "fitted {f}");
}
