//! Behavioral contract of the minimizers: monotone descent traces, honest
//! convergence flags, restricted solves matching normal equations, and
//! brute-force enumeration invariants.

use bregman_l0::prelude::*;
use proptest::prelude::*;

/// Slack allowed in the "trace is non-increasing" assertion. The solver
/// accepts steps up to an absolute 1e-12 objective increase (its tie
/// tolerance), so the trace can rise by at most that amount per step.
const TRACE_SLACK: f64 = 1e-12;

#[test]
fn forward_backward_reaches_the_brute_force_optimum() {
    let p = Problem::least_squares(Matrix::identity(2), vec![1.0, 0.1], 0.3, DEFAULT_CC_SAFETY)
        .unwrap();
    let bf = brute_force_l0(&p, 2).unwrap();
    for start in [[0.0, 0.0], [2.0, 2.0], [-1.0, 0.5]] {
        let run = prox_gradient(&p, &start, &SolveOptions::default()).unwrap();
        assert!(run.converged, "start {start:?} did not converge");
        assert!(run.criticality.is_critical);
        assert!(
            run.objective <= bf.j0_value + 1e-9,
            "run from {start:?} stalled at {} above the optimum {}",
            run.objective,
            bf.j0_value
        );
    }
}

#[test]
fn kl_runs_stay_feasible_and_descend() {
    let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![0.5, 0.1]]).unwrap();
    let p = Problem::kl(a, vec![3.0, 7.0, 1.0], vec![1.0, 1.0, 0.5], 0.5, DEFAULT_CC_SAFETY)
        .unwrap();
    let run = prox_gradient(&p, &[0.5, 0.5], &SolveOptions::default()).unwrap();
    assert!(run.x.iter().all(|&v| v >= 0.0), "iterate left the nonnegative orthant");
    for w in run.trace.windows(2) {
        assert!(w[1] <= w[0] + TRACE_SLACK, "trace rose from {} to {}", w[0], w[1]);
    }
}

#[test]
fn brute_force_bookkeeping_is_consistent() {
    let p = Problem::least_squares(Matrix::identity(2), vec![1.0, 0.1], 0.3, DEFAULT_CC_SAFETY)
        .unwrap();
    let bf = brute_force_l0(&p, 2).unwrap();
    // The reported value is the ℓ0 objective of the reported point.
    assert!((p.eval_j0(&bf.x_best).unwrap() - bf.j0_value).abs() < 1e-15);
    // The reported support is the exact support of the reported point.
    assert_eq!(Support::of_vector(&bf.x_best), bf.best_support);
    // No enumerated candidate beats the winner.
    for entry in &bf.table {
        let candidate = entry.value + p.lambda0() * entry.nnz as f64;
        assert!(candidate >= bf.j0_value - 1e-15);
    }
    // The winner is among the ties, and ties are deduplicated.
    assert!(bf.ties.contains(&bf.best_support));
    for (i, s) in bf.ties.iter().enumerate() {
        assert!(!bf.ties[i + 1..].contains(s), "duplicate tie {s:?}");
    }
}

#[test]
fn exact_ties_are_reported() {
    // A = I, y = (1, 1), λ0 = 0.5: supports {0} and {1} both give
    // J0 = 0.5 + 0.5 = 1.0, as does {0,1} (J0 = 0 + 2·0.5). The empty
    // support gives 1.0 as well: a four-way tie at 1.0.
    let p = Problem::least_squares(Matrix::identity(2), vec![1.0, 1.0], 0.5, DEFAULT_CC_SAFETY)
        .unwrap();
    let bf = brute_force_l0(&p, 2).unwrap();
    assert!((bf.j0_value - 1.0).abs() < 1e-15);
    assert_eq!(bf.ties.len(), 4, "ties: {:?}", bf.ties);
}

#[test]
fn oracle_solve_scatters_the_restricted_solution() {
    // Column norms exceed 1 here, so calibration inflates γ; the problem is
    // still valid for the restricted solve.
    let a = Matrix::from_rows(&[vec![1.0, 0.3], vec![1.0, 0.9]]).unwrap();
    let p = Problem::least_squares(a, vec![1.0, 3.0], 0.3, DEFAULT_CC_SAFETY).unwrap();
    let sup = Support::new(vec![0]).unwrap();
    let sol = oracle_solve(&p, &sup).unwrap();
    // Restricted normal equations: u = (a₀ᵀa₀)⁻¹ a₀ᵀ y = (1+3)/2 = 2.
    assert!((sol.u[0] - 2.0).abs() < 1e-12);
    assert_eq!(sol.x.len(), 2);
    assert_eq!(sol.x[1], 0.0);
    assert!((sol.value - 1.0).abs() < 1e-12, "residual value {}", sol.value);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 120, ..ProptestConfig::default() })]

    #[test]
    fn traces_never_increase_and_convergence_implies_criticality(
        y in proptest::array::uniform3(-2.0f64..2.0),
        a_entries in proptest::array::uniform9(-1.0f64..1.0),
        lambda0 in 0.05f64..1.0,
        start in proptest::array::uniform3(-2.0f64..2.0),
    ) {
        let a = Matrix::from_fn(3, 3, |r, c| a_entries[3 * r + c]);
        // Skip degenerate operators the calibration rejects (zero column).
        let p = match Problem::least_squares(a, y.to_vec(), lambda0, DEFAULT_CC_SAFETY) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        let run = prox_gradient(&p, &start, &SolveOptions::default()).unwrap();
        for w in run.trace.windows(2) {
            prop_assert!(w[1] <= w[0] + TRACE_SLACK, "trace rose from {} to {}", w[0], w[1]);
        }
        if run.converged {
            prop_assert!(run.criticality.is_critical);
        }
    }
}

#[test]
fn restricted_kl_solve_is_exact_at_photon_counting_scale() {
    // Megacount KL fits have curvature spanning ~12 orders of magnitude
    // between u = 0 and the optimum, far beyond what first-order steps can
    // traverse; the restricted solver's Newton steps must still land on the
    // closed-form optimum. For one column with equal entries s over rows
    // carrying counts y and unit background, the optimum matches the mean:
    //   s·u + 1 = ȳ  ⇒  u* = (ȳ − 1)/s.
    let s = 3.0_f64.sqrt().recip();
    let a = Matrix::from_rows(&[vec![s], vec![s], vec![s]]).unwrap();
    let y = vec![4.2e6, 4.4e6, 4.0e6];
    let p = Problem::kl(a, y, vec![1.0, 1.0, 1.0], 1.0, DEFAULT_CC_SAFETY).unwrap();
    let sup = Support::new(vec![0]).unwrap();
    let (u, value) = restricted_convex_solve(&p, &sup).unwrap();
    let u_exact = (4.2e6 - 1.0) * 3.0_f64.sqrt();
    assert!(
        ((u[0] - u_exact) / u_exact).abs() <= 1e-12,
        "restricted optimum {} departs from the closed form {}",
        u[0],
        u_exact
    );
    assert!(value.is_finite());
    // The same fit through the oracle wrapper scatters back to dimension 1.
    let sol = oracle_solve(&p, &sup).unwrap();
    assert_eq!(sol.x.len(), 1);
    assert!(((sol.x[0] - u_exact) / u_exact).abs() <= 1e-12);
}
