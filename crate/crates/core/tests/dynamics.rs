mod common;

use magtorus::ansatz::{build_power_family, residual_all_harmonics};
use magtorus::flow::{integrate, monitor, IntegrateOptions};
use magtorus::{PhaseState, SamplingGrid};

#[test]
fn drift_is_bounded_by_the_harmonic_residuals() {
    let lambda = common::trig(&[(0, 0, 2.0, 0.0), (0, 1, 0.15, 0.0), (0, 2, 0.0, 0.05)]);
    let a = common::trig(&[(0, 1, 0.0, -0.05), (0, 3, 0.02, 0.0)]);
    for n in 1..=3 {
        let (ansatz, system) = build_power_family(&lambda, &a, n).unwrap();
        let grid = SamplingGrid::new(32, 32).unwrap();
        let eps = residual_all_harmonics(&ansatz, system.omega(), &grid).max_sup().max(f64::EPSILON);
        let traj = integrate(&system, PhaseState::new(1.0, 0.2, 2.0), 10.0, &IntegrateOptions::default()).unwrap();
        let drift = monitor(&traj, &[ansatz.first_integral()])[0].relative_drift;
        assert!(drift < 1e3 * eps, "N = {n}: drift {drift:e}, eps {eps:e}");
    }
}

#[test]
fn adaptive_run_conserves_the_integral() {
    let lambda = common::trig(&[(0, 0, 2.0, 0.0), (0, 1, 0.3, 0.0)]);
    let a = common::trig(&[(0, 1, 0.0, -0.1)]);
    let (ansatz, system) = build_power_family(&lambda, &a, 2).unwrap();
    let traj = integrate(&system, PhaseState::new(0.0, 1.0, 0.5), 20.0, &IntegrateOptions::adaptive(1e-11)).unwrap();
    assert!(traj.is_complete());
    assert!(traj.rejected_steps < traj.steps);
    let drift = monitor(&traj, &[ansatz.first_integral()])[0].relative_drift;
    assert!(drift < 1e-8, "{drift:e}");
}
