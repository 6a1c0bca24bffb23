//! Behavioral contract of assembled problems: the relaxation minorizes the
//! ℓ0 objective and agrees with it on saturated points, dual residuals and
//! criticality behave as documented, and the uniqueness/isolation thresholds
//! reproduce hand computations.

use bregman_l0::prelude::*;
use proptest::prelude::*;

#[test]
fn zero_pad_places_amplitudes() {
    let sup = Support::new(vec![1, 3, 4]).unwrap();
    let x = zero_pad(&[1.0, 2.0, 3.0], &sup, 6).unwrap();
    assert_eq!(x, vec![0.0, 1.0, 0.0, 2.0, 3.0, 0.0]);
}

#[test]
fn uniqueness_threshold_matches_hand_computation() {
    // F(x) = 2 with two nonzeros, budget 5: 2/(1+5−4) = 1.
    let p = Problem::least_squares(Matrix::identity(2), vec![0.0, 0.0], 0.7, DEFAULT_CC_SAFETY)
        .unwrap();
    let r2 = std::f64::consts::SQRT_2;
    let t = p.uniqglob_threshold(&[r2, r2], 5).unwrap();
    assert!((t - 1.0).abs() < 1e-12);

    // F(x) = 3 at the origin, budget 1: 3/(1+1−0) = 1.5.
    let p2 = Problem::least_squares(
        Matrix::identity(2),
        vec![6.0f64.sqrt(), 0.0],
        0.7,
        DEFAULT_CC_SAFETY,
    )
    .unwrap();
    let t2 = p2.uniqglob_threshold(&[0.0, 0.0], 1).unwrap();
    assert!((t2 - 1.5).abs() < 1e-12);

    // Budget below twice the support size is rejected.
    assert!(p.uniqglob_threshold(&[r2, r2], 3).is_err());
}

#[test]
fn isolation_example_with_explicit_duals() {
    // γ = 1, λ0 = 0.5 → α = 1, ψ'(α) = 1; C_K = 0.5 widens the band to
    // [0.5, 2]. Duals (0.3, 2.5) sit outside on both sides: isolated.
    let p = Problem::least_squares(Matrix::identity(2), vec![0.0, 0.0], 0.5, DEFAULT_CC_SAFETY)
        .unwrap();
    let report = p.isolation_check(&[0.3, 2.5], 0.5).unwrap();
    assert!(report.isolated);
    assert_eq!(report.bands.len(), 2);
    for (lo, hi) in &report.bands {
        assert!((lo - 0.5).abs() < 1e-14);
        assert!((hi - 2.0).abs() < 1e-14);
    }
    // A dual inside the band defeats isolation and reports a negative margin.
    let inside = p.isolation_check(&[1.0, 2.5], 0.5).unwrap();
    assert!(!inside.isolated);
    assert!(inside.margins[0] < 0.0);
}

#[test]
fn criticality_holds_at_an_exact_minimizer_and_fails_off_it() {
    // A = I, y = (1, 0.1), λ0 = 0.3: the brute-force optimum is x = (1, 0).
    let p = Problem::least_squares(Matrix::identity(2), vec![1.0, 0.1], 0.3, DEFAULT_CC_SAFETY)
        .unwrap();
    let crit = p.is_critical(&[1.0, 0.0], DEFAULT_CRITICALITY_TOL).unwrap();
    assert!(crit.is_critical, "worst residual {}", crit.worst_scaled);
    let off = p.is_critical(&[0.4, 0.0], DEFAULT_CRITICALITY_TOL).unwrap();
    assert!(!off.is_critical);
}

#[test]
fn infeasible_points_evaluate_to_infinity() {
    let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let p = Problem::kl(a, vec![2.0, 1.0], vec![1.0, 1.0], 0.4, DEFAULT_CC_SAFETY).unwrap();
    assert_eq!(p.eval_j0(&[-0.5, 1.0]).unwrap(), f64::INFINITY);
    assert_eq!(p.eval_jpsi(&[-0.5, 1.0]).unwrap(), f64::INFINITY);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn relaxation_minorizes_the_l0_objective(
        y0 in -3.0f64..3.0,
        y1 in -3.0f64..3.0,
        lambda0 in 0.05f64..2.0,
        x0 in -4.0f64..4.0,
        x1 in -4.0f64..4.0,
    ) {
        let p = Problem::least_squares(Matrix::identity(2), vec![y0, y1], lambda0, DEFAULT_CC_SAFETY)
            .unwrap();
        let x = [x0, x1];
        let jp = p.eval_jpsi(&x).unwrap();
        let j0 = p.eval_j0(&x).unwrap();
        prop_assert!(jp <= j0 + 1e-12, "JΨ = {jp} exceeds J0 = {j0}");
    }

    #[test]
    fn objectives_agree_on_saturated_points(
        y0 in -3.0f64..3.0,
        y1 in -3.0f64..3.0,
        lambda0 in 0.05f64..2.0,
        s0 in 0.0f64..3.0,
        s1 in 0.0f64..3.0,
    ) {
        let p = Problem::least_squares(Matrix::identity(2), vec![y0, y1], lambda0, DEFAULT_CC_SAFETY)
            .unwrap();
        // Points whose nonzero coordinates all sit at or beyond α.
        let a0 = p.penalty(0).alpha();
        let a1 = p.penalty(1).alpha();
        let x = [
            if s0 < 0.5 { 0.0 } else { a0 + s0 },
            if s1 < 0.5 { 0.0 } else { -(a1 + s1) },
        ];
        let jp = p.eval_jpsi(&x).unwrap();
        let j0 = p.eval_j0(&x).unwrap();
        prop_assert!((jp - j0).abs() <= 1e-12 * (1.0 + j0.abs()));
    }

    #[test]
    fn dual_residuals_vanish_exactly_on_criticality(
        y0 in -2.0f64..2.0,
        lambda0 in 0.05f64..1.0,
    ) {
        // For any point, the criticality report's residuals are the distances
        // from z to the subdifferential intervals; at a reported critical
        // point every residual must be within the scaled tolerance.
        let p = Problem::least_squares(Matrix::identity(2), vec![y0, 0.0], lambda0, DEFAULT_CC_SAFETY)
            .unwrap();
        let run = prox_gradient(&p, &[0.0, 0.0], &SolveOptions::default()).unwrap();
        if run.converged {
            let report = p.is_critical(&run.x, DEFAULT_CRITICALITY_TOL).unwrap();
            prop_assert!(report.is_critical);
            for r in &report.residuals {
                prop_assert!(*r >= 0.0);
            }
        }
    }
}
