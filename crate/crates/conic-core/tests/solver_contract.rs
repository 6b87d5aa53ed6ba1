//! Contract tests for the conic layer: solve outcomes on programs with known
//! optima, status classification, re-certification, and the
//! spectrum-faithfulness of the complex-to-real embedding.

use conic_core::{
    embed_hermitian, pack, solve, Cone, ConicProgram, ConstraintBlock, SolveStatus,
    SolverTolerances, HERMITIAN_TOL,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_tol() -> SolverTolerances {
    SolverTolerances::default()
}

// ---------------------------------------------------------------------------
// Known-optimum solves
// ---------------------------------------------------------------------------

/// maximize -x subject to x >= 1 has optimum x = 1.
fn bounded_lp() -> ConicProgram {
    let mut p = ConicProgram::new();
    let x = p.add_var("x");
    p.set_objective(vec![(x, -1.0)], true).unwrap();
    p.add_block(ConstraintBlock {
        name: "x >= 1".into(),
        cone: Cone::Nonneg(1),
        coeffs: vec![(0, x, 1.0)],
        constants: vec![-1.0],
    })
    .unwrap();
    p
}

#[test]
fn lp_with_known_optimum() {
    let sol = solve(&bounded_lp(), &default_tol());
    assert_eq!(sol.status, SolveStatus::Optimal);
    let x = &sol.primal.as_ref().unwrap()[0];
    assert!((x - 1.0).abs() < 1e-6, "optimizer should sit on the bound, got {x}");
    assert!((sol.objective_value + 1.0).abs() < 1e-6);
    assert!(sol.max_constraint_residual <= default_tol().feas);
}

#[test]
fn psd_program_with_known_optimum() {
    // minimize t subject to [[t, 1], [1, t]] >= 0: optimum t = 1.
    let mut p = ConicProgram::new();
    let t = p.add_var("t");
    p.set_objective(vec![(t, 1.0)], false).unwrap();
    p.add_block(ConstraintBlock {
        name: "psd".into(),
        cone: Cone::Psd(2),
        coeffs: vec![(pack::svec_index(0, 0), t, 1.0), (pack::svec_index(1, 1), t, 1.0)],
        constants: vec![0.0, pack::SVEC_OFF_DIAG_SCALE, 0.0],
    })
    .unwrap();
    let sol = solve(&p, &default_tol());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(
        (sol.objective_value - 1.0).abs() < 1e-6,
        "PSD bound should bind at t = 1, got {}",
        sol.objective_value
    );
}

#[test]
fn contradictory_bounds_are_infeasible() {
    // x >= 1 and -x >= 0 cannot hold together.
    let mut p = bounded_lp();
    let x = 0;
    p.add_block(ConstraintBlock {
        name: "-x >= 0".into(),
        cone: Cone::Nonneg(1),
        coeffs: vec![(0, x, -1.0)],
        constants: vec![0.0],
    })
    .unwrap();
    let sol = solve(&p, &default_tol());
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(sol.objective_value.is_nan());
}

#[test]
fn unbounded_objective_is_detected() {
    // maximize x subject to x >= 1 grows without bound.
    let mut p = bounded_lp();
    p.set_objective(vec![(0, 1.0)], true).unwrap();
    let sol = solve(&p, &default_tol());
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

#[test]
fn soc_projection_solve() {
    // minimize t subject to t >= ||(3, 4)||: optimum 5.
    let mut p = ConicProgram::new();
    let t = p.add_var("t");
    p.set_objective(vec![(t, 1.0)], false).unwrap();
    p.add_block(ConstraintBlock {
        name: "norm bound".into(),
        cone: Cone::Soc(3),
        coeffs: vec![(0, t, 1.0)],
        constants: vec![0.0, 3.0, 4.0],
    })
    .unwrap();
    let sol = solve(&p, &default_tol());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective_value - 5.0).abs() < 1e-6);
}

#[test]
fn mixed_cone_program_with_equalities() {
    // maximize x + y subject to x + y + z = 1, z >= 0.25, (x, y) in a ball of
    // radius z around the origin: optimum at z = 0.25, x = y = 0.75 / sqrt(2)
    // ... but x + y <= sqrt(2) * r with r = 0.75, so optimum sqrt(2) * 0.75.
    let mut p = ConicProgram::new();
    let x = p.add_var("x");
    let y = p.add_var("y");
    let z = p.add_var("z");
    p.set_objective(vec![(x, 1.0), (y, 1.0)], true).unwrap();
    p.add_block(ConstraintBlock {
        name: "budget".into(),
        cone: Cone::Zero(1),
        coeffs: vec![(0, x, 0.0), (0, z, 1.0)],
        constants: vec![-0.25],
    })
    .unwrap();
    p.add_block(ConstraintBlock {
        name: "ball".into(),
        cone: Cone::Soc(3),
        coeffs: vec![(0, z, -1.0), (1, x, 1.0), (2, y, 1.0)],
        constants: vec![1.0, 0.0, 0.0],
    })
    .unwrap();
    let sol = solve(&p, &default_tol());
    assert_eq!(sol.status, SolveStatus::Optimal);
    let expected = 0.75 * std::f64::consts::SQRT_2;
    assert!(
        (sol.objective_value - expected).abs() < 1e-6,
        "got {}, want {expected}",
        sol.objective_value
    );
}

// ---------------------------------------------------------------------------
// Determinism / idempotence
// ---------------------------------------------------------------------------

#[test]
fn solving_twice_is_idempotent() {
    let tol = default_tol();
    let p = bounded_lp();
    let a = solve(&p, &tol);
    let b = solve(&p, &tol);
    assert_eq!(a.status, b.status);
    assert!(
        (a.objective_value - b.objective_value).abs() <= 10.0 * tol.relgap,
        "re-solve drifted: {} vs {}",
        a.objective_value,
        b.objective_value
    );
}

// ---------------------------------------------------------------------------
// Embedding: spectrum faithfulness
// ---------------------------------------------------------------------------

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let raw = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0)
}

fn complex_min_eig(h: &DMatrix<Complex64>) -> f64 {
    // Hermitian eigenvalues through the real embedding's own independent
    // oracle would be circular; use nalgebra's complex Hermitian eigensolver.
    h.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn embedding_preserves_definiteness_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut seen_psd = 0;
    let mut seen_indef = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=5);
        let mut h = random_hermitian(&mut rng, n);
        // Shift about half the draws into the PSD cone.
        if rng.gen_bool(0.5) {
            let shift = complex_min_eig(&h).abs() + 0.1;
            for i in 0..n {
                h[(i, i)] += Complex64::new(shift, 0.0);
            }
        }
        let t = embed_hermitian(&h, HERMITIAN_TOL).unwrap();
        let real_min = t
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let complex_min = complex_min_eig(&h);
        assert!(
            (real_min - complex_min).abs() < 1e-9,
            "lambda_min mismatch: embedded {real_min} vs complex {complex_min}"
        );
        let psd = complex_min >= -1e-12;
        if psd {
            seen_psd += 1;
        } else {
            seen_indef += 1;
        }
        assert_eq!(
            real_min >= -1e-9,
            psd,
            "embedding must preserve PSD-ness (lambda_min {complex_min})"
        );
    }
    assert!(seen_psd >= 20 && seen_indef >= 20, "draws should cover both classes");
}

#[test]
fn embedding_doubles_every_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..50 {
        let n = rng.gen_range(1..=4);
        let h = random_hermitian(&mut rng, n);
        let t = embed_hermitian(&h, HERMITIAN_TOL).unwrap();

        let mut complex_eigs: Vec<f64> =
            h.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
        let mut doubled: Vec<f64> = complex_eigs.iter().flat_map(|&e| [e, e]).collect();
        complex_eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        doubled.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut real_eigs: Vec<f64> =
            t.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
        real_eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());

        for (got, want) in real_eigs.iter().zip(doubled.iter()) {
            assert!(
                (got - want).abs() < 1e-9,
                "spectrum not doubled: {real_eigs:?} vs {doubled:?}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Certified solves feed the residual checker honestly
// ---------------------------------------------------------------------------

#[test]
fn optimal_status_implies_certified_residual() {
    // A slightly larger PSD program: minimize trace-like objective with an
    // off-diagonal coupling, then confirm the reported residual agrees with a
    // from-scratch evaluation of the returned point.
    let mut p = ConicProgram::new();
    let a = p.add_var("a");
    let b = p.add_var("b");
    p.set_objective(vec![(a, 1.0), (b, 2.0)], false).unwrap();
    p.add_block(ConstraintBlock {
        name: "coupled".into(),
        cone: Cone::Psd(2),
        coeffs: vec![
            (pack::svec_index(0, 0), a, 1.0),
            (pack::svec_index(1, 1), b, 1.0),
            (pack::svec_index(0, 1), a, 0.1 * pack::SVEC_OFF_DIAG_SCALE),
        ],
        constants: vec![0.0, 0.7 * pack::SVEC_OFF_DIAG_SCALE, 0.0],
    })
    .unwrap();
    p.add_block(ConstraintBlock {
        name: "a cap".into(),
        cone: Cone::Nonneg(1),
        coeffs: vec![(0, a, -1.0)],
        constants: vec![3.0],
    })
    .unwrap();

    let sol = solve(&p, &default_tol());
    assert_eq!(sol.status, SolveStatus::Optimal);
    let x = sol.primal.as_ref().unwrap();
    let recheck = p.max_scaled_violation(x);
    assert!((recheck - sol.max_constraint_residual).abs() < 1e-15);
    assert!(recheck <= default_tol().feas);
}
