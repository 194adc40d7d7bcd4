use std::f64::consts::PI;

use ndicke::dynamics::{integrate_full, run_ensemble, EnsembleSpec, IntegratorControls};
use ndicke::linalg::finite_difference_jacobian;
use ndicke::model::{adiabatic_force, energy, full_drift, position_force};
use ndicke::stationary::{adiabatic_jacobian, full_jacobian};
use ndicke::{FullState, MechState, PhysicalParams, ReducedParams, SymmetryElement};
use num_complex::Complex64;
use proptest::prelude::*;

const MHZ: f64 = 2.0 * PI * 1e6;

fn params(n: usize, omega_mhz: f64, delta_mhz: f64, kappa_mhz: f64) -> ReducedParams {
    PhysicalParams {
        omega_pump: omega_mhz * MHZ,
        delta_pc: delta_mhz * MHZ,
        kappa: kappa_mhz * MHZ,
        ..PhysicalParams::reference(n)
    }
    .reduce()
    .unwrap()
}

fn state(n: usize) -> impl Strategy<Value = FullState> {
    (
        -20.0..20.0f64,
        -20.0..20.0f64,
        prop::collection::vec(-PI..PI, n),
        prop::collection::vec(-2.0..2.0f64, n),
    )
        .prop_map(|(re, im, zeta, pi)| FullState {
            alpha: Complex64::new(re, im),
            mech: MechState { zeta, pi },
        })
}

fn case() -> impl Strategy<Value = (ReducedParams, FullState)> {
    (1usize..=7, 1.0..40.0f64, -60.0..-0.5f64, 0.0..3.0f64)
        .prop_flat_map(|(n, o, d, k)| (Just(params(n, o, d, k)), state(n)))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drift_is_equivariant((r, s) in case()) {
        let base = full_drift(&s, &r);
        for g in SymmetryElement::all(r.n) {
            let moved = full_drift(&g.apply(&s, &r), &r);
            let expected = g.apply(&base, &r);
            prop_assert!(max_diff(&moved.to_vec(), &expected.to_vec()) < 1e-12 * (1.0 + base.alpha.norm()));
        }
    }

    #[test]
    fn adiabatic_force_is_equivariant((r, s) in case()) {
        let base = adiabatic_force(&s.mech, &r).unwrap();
        for g in SymmetryElement::all(r.n) {
            let moved = adiabatic_force(&g.apply_mech(&s.mech), &r).unwrap();
            prop_assert!(max_diff(&moved.to_vec(), &g.apply_mech(&base).to_vec()) < 1e-12);
        }
    }

    #[test]
    fn full_jacobian_matches_central_differences((r, s) in case()) {
        let analytic = full_jacobian(&s, &r);
        let numeric = finite_difference_jacobian(
            |y| full_drift(&FullState::from_slice(y), &r).to_vec(),
            &s.to_vec(),
            1e-6,
        );
        let scale = analytic.amax().max(1.0);
        prop_assert!((&analytic - &numeric).amax() < 1e-6 * scale);
    }

    #[test]
    fn adiabatic_jacobian_matches_central_differences((r, s) in case()) {
        let analytic = adiabatic_jacobian(&s.mech.zeta, &r).unwrap();
        let y = MechState::at_rest(s.mech.zeta.clone()).to_vec();
        let numeric = finite_difference_jacobian(
            |y| adiabatic_force(&MechState::from_slice(y), &r).unwrap().to_vec(),
            &y,
            1e-6,
        );
        let scale = analytic.amax().max(1.0);
        prop_assert!((&analytic - &numeric).amax() < 1e-6 * scale);
    }

    #[test]
    fn position_force_is_odd((r, s) in case()) {
        let f = position_force(&s.mech.zeta, &r).unwrap();
        let neg: Vec<f64> = s.mech.zeta.iter().map(|z| -z).collect();
        let g = position_force(&neg, &r).unwrap();
        prop_assert!(f.iter().zip(&g).all(|(a, b)| (a + b).abs() < 1e-12 * (1.0 + a.abs())));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lossless_energy_is_conserved(
        n in 1usize..=6,
        omega in 1.0..25.0f64,
        seed in any::<u64>(),
    ) {
        let r = params(n, omega, -4.0, 0.0);
        let s0 = EnsembleSpec { count: 1, seed, position_scale: 0.3, momentum_scale: 0.3 }
            .initial_states(n)
            .remove(0);
        let ctl = IntegratorControls {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            t_end: 100.0,
            max_step: 0.5,
            sample_every: 10.0,
            ..IntegratorControls::default()
        };
        let traj = integrate_full(&s0, &r, &ctl).unwrap();
        let e0 = energy(&traj.states[0], &r);
        for s in &traj.states {
            prop_assert!((energy(s, &r) - e0).abs() < 1e-6 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn integration_commutes_with_the_group(
        n in 2usize..=5,
        seed in any::<u64>(),
        step in 0usize..5,
        parity in any::<bool>(),
    ) {
        let r = params(n, 20.0, -4.0, 0.5);
        let g = SymmetryElement { step: step % n, parity };
        let s0 = EnsembleSpec { count: 1, seed, position_scale: 0.2, momentum_scale: 0.1 }
            .initial_states(n)
            .remove(0);
        let ctl = IntegratorControls {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            t_end: 5.0,
            max_step: 0.5,
            sample_every: 5.0,
            ..IntegratorControls::default()
        };
        let a = integrate_full(&g.apply(&s0, &r), &r, &ctl).unwrap();
        let b = integrate_full(&s0, &r, &ctl).unwrap();
        let pushed = g.apply(b.final_state(), &r);
        prop_assert!(max_diff(&a.final_state().to_vec(), &pushed.to_vec()) < 1e-6);
    }
}

#[test]
fn ensembles_are_bit_identical_across_runs() {
    let r = PhysicalParams::reference(4).reduce().unwrap();
    let ctl = IntegratorControls {
        t_end: 30.0,
        sample_every: 1.0,
        ..IntegratorControls::default()
    };
    let spec = EnsembleSpec::new(4, 2024);
    let a = run_ensemble(&spec, &r, &ctl).unwrap();
    let b = run_ensemble(&spec, &r, &ctl).unwrap();
    assert_eq!(a, b);
    let c = run_ensemble(&EnsembleSpec::new(4, 2025), &r, &ctl).unwrap();
    assert_ne!(a, c);
}

#[test]
fn halving_tolerance_moves_endpoint_less_than_coarse_tolerance() {
    let r = PhysicalParams::reference(3).reduce().unwrap();
    let s0 = EnsembleSpec::new(1, 3).initial_states(3).remove(0);
    let run = |tol: f64| {
        let ctl = IntegratorControls {
            rel_tol: tol,
            abs_tol: tol * 1e-3,
            t_end: 20.0,
            sample_every: 20.0,
            ..IntegratorControls::default()
        };
        integrate_full(&s0, &r, &ctl)
            .unwrap()
            .final_state()
            .to_vec()
    };
    let (coarse, fine) = (run(1e-9), run(5e-10));
    let scale = coarse.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    assert!(max_diff(&coarse, &fine) < 1e-6 * scale);
}
