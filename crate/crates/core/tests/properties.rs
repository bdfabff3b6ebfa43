mod common;

use magtorus::ansatz::{harmonic_residual_at, omega_from_rescaled, omega_raw, omega_rescaled, rescale, stationarity_at};
use magtorus::fields::{random_trig, Axis};
use magtorus::quasilinear::{assemble, pencil_spectrum, stacked_residual, SpectrumOptions, StateVector};
use magtorus::ScalarMap;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state(r: &mut ChaCha8Rng, n: usize) -> StateVector {
    let mut v = vec![r.gen_range(0.5..3.0)];
    v.extend((1..2 * n).map(|_| r.gen_range(-1.0..1.0)));
    StateVector::new(n, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trig_fields_are_period_invariant(seed in any::<u64>(), x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let f = random_trig(&mut rng(seed), 6, 3, 1.0, 0.2, common::geom());
        let v = f.eval(x, y);
        prop_assert!((f.eval(x + TAU, y) - v).abs() < 1e-13);
        prop_assert!((f.eval(x, y - TAU) - v).abs() < 1e-13);
    }

    #[test]
    fn spectral_derivatives_match_finite_differences(seed in any::<u64>(), x in 0.0..TAU, y in 0.0..TAU) {
        let f = random_trig(&mut rng(seed), 6, 3, 1.0, 0.0, common::geom());
        let h = 1e-5;
        let fd_x = (f.eval(x + h, y) - f.eval(x - h, y)) / (2.0 * h);
        let fd_y = (f.eval(x, y + h) - f.eval(x, y - h)) / (2.0 * h);
        prop_assert!((f.d_dx(x, y) - fd_x).abs() < 1e-8);
        prop_assert!((f.d_dy(x, y) - fd_y).abs() < 1e-8);
    }

    #[test]
    fn derivative_table_matches_jet(seed in any::<u64>(), x in 0.0..TAU, y in 0.0..TAU) {
        let f = random_trig(&mut rng(seed), 6, 3, 1.0, 0.0, common::geom());
        let p = f.as_trig().unwrap();
        prop_assert!((p.derivative(Axis::X).jet(x, y).v - f.d_dx(x, y)).abs() < 1e-13);
        prop_assert!((p.derivative(Axis::Y).jet(x, y).v - f.d_dy(x, y)).abs() < 1e-13);
    }

    #[test]
    fn omega_formulas_agree(seed in any::<u64>(), n in 1usize..=4, x in 0.0..TAU, y in 0.0..TAU) {
        let a = common::random_ansatz(&mut rng(seed), n);
        let r = rescale(&a).unwrap();
        let raw = omega_raw(&a).unwrap().value(x, y);
        let resc = omega_rescaled(&r).value(x, y);
        prop_assert!((raw - resc).abs() < 1e-12 * (1.0 + raw.abs()));
        let direct = omega_from_rescaled(n, r.f(n - 1).jet(x, y), r.g(n - 1).jet(x, y));
        prop_assert_eq!(direct, resc);
    }

    #[test]
    fn angular_fourier_modes_are_the_harmonics(seed in any::<u64>(), n in 1usize..=4, x in 0.0..TAU, y in 0.0..TAU) {
        let a = common::random_ansatz(&mut rng(seed), n);
        let omega = omega_raw(&a).unwrap();
        let w = omega.value(x, y);
        let m = 4 * n + 4;
        let samples: Vec<f64> = (0..m)
            .map(|j| stationarity_at(&a, w, x, y, TAU * j as f64 / m as f64).value)
            .collect();
        for k in 0..=n + 1 {
            let coeff: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(j, s)| *s * Complex64::from_polar(1.0, -(k as f64) * TAU * j as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64;
            let (e, _) = harmonic_residual_at(&a, &omega, k, x, y).unwrap();
            prop_assert!((coeff - e).norm() < 1e-12 * (1.0 + e.norm()), "k = {}: {} vs {}", k, coeff, e);
        }
    }

    #[test]
    fn residual_vanishes_without_derivatives(seed in any::<u64>(), n in 1usize..=4) {
        let u = random_state(&mut rng(seed), n);
        let z = vec![0.0; 2 * n];
        prop_assert!(stacked_residual(&u, &z, &z).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn assembly_reproduces_residual(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let u = random_state(&mut r, n);
        let ux: Vec<f64> = (0..2 * n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let uy: Vec<f64> = (0..2 * n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let m = assemble(&u).unwrap();
        let direct = stacked_residual(&u, &ux, &uy).unwrap();
        for (p, d) in m.apply(&ux, &uy).iter().zip(&direct) {
            prop_assert!((p - d).abs() < 1e-13 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn row_scaling_keeps_the_pencil_spectrum(seed in any::<u64>(), dim in 2usize..=6) {
        let mut r = rng(seed);
        let a = DMatrix::from_fn(dim, dim, |i, j| if i == j { 2.0 } else { 0.0 } + r.gen_range(-0.5..0.5));
        let b = DMatrix::from_fn(dim, dim, |_, _| r.gen_range(-1.0..1.0));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |_, _| {
            let s: f64 = r.gen_range(0.2..5.0);
            if r.gen_bool(0.5) { s } else { -s }
        }));
        let opts = SpectrumOptions::default();
        let p = pencil_spectrum(&a, &b, &opts);
        let q = pencil_spectrum(&(&d * &a), &(&d * &b), &opts);
        prop_assert_eq!(p.classification, q.classification);
        prop_assert_eq!(p.eigenvalues.len(), q.eigenvalues.len());
        for (x, y) in p.eigenvalues.iter().zip(&q.eigenvalues) {
            prop_assert!((x - y).norm() < 1e-10 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn stream_function_satisfies_the_constraint(seed in any::<u64>(), n in 2usize..=4) {
        let r = common::stream_rescaled(&mut rng(seed), n);
        let rep = r.constraint_residual(&magtorus::SamplingGrid::new(16, 16).unwrap());
        prop_assert!(rep.max_sup() < 1e-12);
    }
}
