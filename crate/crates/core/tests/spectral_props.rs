use std::f64::consts::PI;

use fracrd_core::spectral::{frac_power, frac_power_quadrature, make_grid, Field, FracPower, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn band_limited(grid: &Grid, max_mode: usize, rng: &mut impl Rng) -> Field {
    let coeffs: Vec<(f64, f64)> = (0..=max_mode)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let k0 = 2.0 * PI / grid.extent();
    Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, (a, b))| {
                let arg = k0 * j as f64 * x[0];
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    })
    .unwrap()
}

#[test]
fn eigenfunction_exactness_every_mode() {
    let g = make_grid(1, 7.0, 32).unwrap();
    let k0 = 2.0 * PI / 7.0;
    for j in 1..16 {
        for beta in [0.2, 0.5, 0.75, 1.0] {
            let u = Field::from_fn(&g, |x| (k0 * j as f64 * x[0]).cos()).unwrap();
            let out = frac_power(&u, FracPower::new(beta).unwrap()).unwrap();
            let lambda = (k0 * j as f64).powf(2.0 * beta);
            for (a, b) in out.values().iter().zip(u.values()) {
                assert!((a - lambda * b).abs() < 1e-11 * lambda.max(1.0));
            }
        }
    }
}

#[test]
fn eigenfunction_2d() {
    let g = make_grid(2, 2.0 * PI, 16).unwrap();
    let u = Field::from_fn(&g, |x| (2.0 * x[0] + 3.0 * x[1]).sin()).unwrap();
    let out = frac_power(&u, FracPower::new(0.3).unwrap()).unwrap();
    let lambda = 13f64.powf(0.3);
    for (a, b) in out.values().iter().zip(u.values()) {
        assert!((a - lambda * b).abs() < 1e-12);
    }
}

#[test]
fn oracle_agreement_band_limited() {
    let g = make_grid(1, 2.0 * PI, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for beta in [0.3, 0.5, 0.8] {
        let p = FracPower::new(beta).unwrap();
        for _ in 0..10 {
            let u = band_limited(&g, 8, &mut rng);
            let spec = frac_power(&u, p).unwrap();
            let quad = frac_power_quadrature(&u, p).unwrap();
            let rel = spec.axpby(1.0, &quad, -1.0).lp_norm(2.0) / spec.lp_norm(2.0);
            assert!(rel <= 0.05, "beta {beta}: discrepancy {rel}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linearity(a in -5.0f64..5.0, b in -5.0f64..5.0, seed in 0u64..1000, beta in 0.05f64..1.0) {
        let g = make_grid(1, 3.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = band_limited(&g, 10, &mut rng);
        let w = band_limited(&g, 10, &mut rng);
        let p = FracPower::new(beta).unwrap();
        let lhs = frac_power(&u.axpby(a, &w, b), p).unwrap();
        let rhs = frac_power(&u, p).unwrap().axpby(a, &frac_power(&w, p).unwrap(), b);
        let scale = lhs.sup_norm().max(1.0);
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() < 1e-11 * scale);
        }
    }

    #[test]
    fn mean_is_annihilated(seed in 0u64..1000, beta in 0.05f64..1.0, offset in -10.0f64..10.0) {
        let g = make_grid(2, 5.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..g.len()).map(|_| offset + rng.gen_range(-1.0..1.0)).collect();
        let u = Field::new(&g, vals).unwrap();
        let out = frac_power(&u, FracPower::new(beta).unwrap()).unwrap();
        prop_assert!(out.mean().abs() < 1e-12 * out.sup_norm().max(1.0));
    }

    #[test]
    fn composition_of_powers(seed in 0u64..1000, b1 in 0.05f64..0.5, b2 in 0.05f64..0.5) {
        let g = make_grid(1, 2.0 * PI, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = band_limited(&g, 8, &mut rng);
        let twice = frac_power(&frac_power(&u, FracPower::new(b1).unwrap()).unwrap(), FracPower::new(b2).unwrap()).unwrap();
        let once = frac_power(&u, FracPower::new(b1 + b2).unwrap()).unwrap();
        let scale = once.sup_norm().max(1.0);
        for (x, y) in twice.values().iter().zip(once.values()) {
            prop_assert!((x - y).abs() < 1e-11 * scale);
        }
    }
}
