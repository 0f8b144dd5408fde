use nstr::driver::{inner_loop, InnerOutcome};
use nstr::oracles::exactness_cut;
use nstr::problems::{counterexample_quadratic, l1_quadratic, max_quad, parse_problem, soft_threshold};
use nstr::*;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn oscillation_config() -> SolverConfig {
    SolverConfig {
        gamma: 0.5,
        gamma_tilde: 0.75,
        q_policy: QPolicy::Zero,
        bundle: Some(BundlePolicy::new(3, 1).unwrap()),
        trial_mode: TrialMode::Direct,
        oracle: OracleKind::Downshift,
        r_initial: 1.0,
        max_inner: 20,
        ..SolverConfig::default()
    }
}

#[test]
fn zero_curvature_model_oscillates() {
    let p = counterexample_quadratic();
    let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &oscillation_config()).unwrap();
    assert_eq!(res.status, SolveStatus::InnerCap);
    assert_eq!(res.serious_steps, 0);
    let tr = &res.trace;
    assert_eq!(tr.len(), 20);
    let first = &tr[0];
    assert_eq!(first.y, v(&[1.0, 1.0]));
    assert_eq!(first.t, -1.0);
    assert_eq!(first.rho, 0.25);
    assert_eq!(first.rho_tilde, Some(0.25));
    for (i, r) in tr.iter().enumerate() {
        assert_eq!(r.kind, StepKind::NullFrozen);
        assert_eq!(r.r, 1.0);
        assert_eq!(r.t, -1.0);
        assert_eq!(r.z[0], 1.0);
        let expect = if i % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!(r.z[1], expect, "iteration {}", i + 1);
    }
}

#[test]
fn positive_curvature_repairs_the_counterexample() {
    let p = counterexample_quadratic();
    let cfg = SolverConfig {
        q_policy: QPolicy::ScaledIdentity(0.5),
        eps_stop: 1e-13,
        ..SolverConfig::default()
    };
    let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg).unwrap();
    assert_eq!(res.status, SolveStatus::Critical);
    assert!(res.serious_steps <= 200);
    assert!((&res.x - v(&[1.0, 0.0])).amax() < 1e-6, "x = {}", res.x);
    assert!((res.f + 0.5).abs() < 1e-10);
}

#[test]
fn prox_mode_first_step_is_soft_threshold() {
    let p = l1_quadratic(v(&[2.0]), 1.0).unwrap();
    let cfg = SolverConfig {
        oracle: OracleKind::AllTangents,
        q_policy: p.q_hint.clone().unwrap(),
        ..SolverConfig::default()
    };
    let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg).unwrap();
    let first = res.trace.iter().find(|r| r.kind == StepKind::Serious).unwrap();
    assert!((first.z[0] - 1.0).abs() < 1e-8);
    assert_eq!(res.status, SolveStatus::Critical);
    assert!((res.x[0] - 1.0).abs() < 1e-8);
}

#[test]
fn prox_mode_halves_radius_on_every_null_step() {
    let b = v(&[2.0, -3.0, 0.5]);
    let p = l1_quadratic(b.clone(), 4.0).unwrap();
    let cfg = SolverConfig {
        oracle: OracleKind::AllTangents,
        q_policy: p.q_hint.clone().unwrap(),
        ..SolverConfig::default()
    };
    let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg).unwrap();
    let nulls: Vec<_> = res.trace.iter().filter(|r| r.kind.is_null()).collect();
    assert!(!nulls.is_empty());
    for r in nulls {
        assert!(r.rho_tilde.unwrap() >= 1.0);
        assert_eq!(r.kind, StepKind::NullHalved);
        assert_eq!(r.r_next, 0.5 * r.r);
    }
    assert_eq!(res.status, SolveStatus::Critical);
    assert!((&res.x - soft_threshold(&b, 1.0)).amax() < 1e-6);
}

#[test]
fn downshift_reaches_grid_reference_on_max_quad() {
    for seed in [0, 1, 2] {
        let p = max_quad(seed);
        let cfg = SolverConfig {
            eps_stop: 1e-12,
            ..SolverConfig::default()
        };
        let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg).unwrap();
        let reference = p.reference.unwrap().value;
        assert_eq!(res.status, SolveStatus::Critical, "seed {seed}");
        assert!((res.f - reference).abs() <= 1e-5, "seed {seed}: {} vs {}", res.f, reference);
    }
}

#[test]
fn every_oracle_solves_a_smooth_quadratic() {
    for oracle in [OracleKind::Downshift, OracleKind::DoubleDownshift, OracleKind::Standard, OracleKind::Natural] {
        let p = counterexample_quadratic();
        let cfg = SolverConfig {
            oracle,
            eps_stop: 1e-13,
            ..SolverConfig::default()
        };
        let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg).unwrap();
        assert!((&res.x - v(&[1.0, 0.0])).amax() < 1e-6, "{oracle}: x = {}", res.x);
    }
}

#[test]
fn trial_modes_keep_descent() {
    for mode in [TrialMode::Backtrack, TrialMode::StrongNu] {
        let p = max_quad(4);
        let cfg = SolverConfig {
            trial_mode: mode,
            eps_stop: 1e-12,
            ..SolverConfig::default()
        };
        let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg).unwrap();
        assert!((res.f - p.reference.unwrap().value).abs() <= 1e-5, "{mode}");
        assert!(res.trace.iter().any(|r| r.kind == StepKind::Serious));
    }
}

#[test]
fn negative_distance_descends_away_from_the_points() {
    let p = parse_problem("distance_squared:sign=-", 0).unwrap();
    assert_eq!(p.start[0], 1.5);
    let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &SolverConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Critical);
    assert_eq!(res.f, -2.0);
    assert_eq!(res.x[0], 3.0);
    let mut last = p.start[0];
    for r in res.trace.iter().filter(|r| r.kind == StepKind::Serious) {
        assert!(r.z[0] > last);
        last = r.z[0];
    }
}

#[test]
fn midpoint_between_points_is_a_local_minimum_of_negative_distance() {
    let p = parse_problem("distance_squared:sign=-,x0=0.1", 0).unwrap();
    let res = solve(p.objective.as_ref(), &p.feasible, &p.start, &SolverConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Critical);
    assert!(res.x[0].abs() < 1e-8);
    assert!((res.f + 0.5).abs() < 1e-12);
}

#[test]
fn critical_start_converges_immediately() {
    let p = counterexample_quadratic();
    let x = v(&[1.0, 0.0]);
    let fx = p.objective.value(&x);
    let wm = WorkingModel::new(
        x.clone(),
        fx,
        vec![exactness_cut(p.objective.as_ref(), &x, fx).unwrap()],
        Matrix::identity(2, 2) * 0.1,
        1e3,
    )
    .unwrap();
    let (out, trace) =
        inner_loop(p.objective.as_ref(), &p.feasible, wm, 1.0, &SolverConfig::default()).unwrap();
    assert_eq!(out, InnerOutcome::Converged);
    assert!(trace.is_empty());
}

#[test]
fn infeasible_start_is_rejected() {
    let p = parse_problem("zigzag", 0).unwrap();
    let err = solve(p.objective.as_ref(), &p.feasible, &v(&[1.5]), &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, SolverError::Infeasible { .. }));
}

#[test]
fn all_tangents_needs_a_split() {
    let p = counterexample_quadratic();
    let cfg = SolverConfig {
        oracle: OracleKind::AllTangents,
        ..SolverConfig::default()
    };
    assert!(matches!(
        solve(p.objective.as_ref(), &p.feasible, &p.start, &cfg),
        Err(SolverError::Unsupported(_))
    ));
}

#[test]
fn traces_are_deterministic() {
    let p = max_quad(11);
    let a = solve(p.objective.as_ref(), &p.feasible, &p.start, &SolverConfig::default()).unwrap();
    let b = solve(p.objective.as_ref(), &p.feasible, &p.start, &SolverConfig::default()).unwrap();
    assert_eq!(a.trace, b.trace);
}
