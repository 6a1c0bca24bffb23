//! Behavioral contract of the data terms: frozen calibration examples,
//! finite-difference gradient agreement, and the descent-constant inequality
//! `‖∇G(w)‖ ≤ √(2·L̃·G(w))`.

use bregman_l0::prelude::*;

/// Relative tolerance for central-difference gradient checks at step
/// `h = ∛ε·(1+|x|)`: the scheme's truncation plus rounding error sits well
/// below 1e-6 for the smooth terms checked here.
const GRAD_CHECK_REL_TOL: f64 = 1e-6;

fn central_diff(fid: &Fidelity, w: &[f64], j: usize) -> f64 {
    let h = f64::EPSILON.cbrt() * (1.0 + w[j].abs());
    let mut wp = w.to_vec();
    let mut wm = w.to_vec();
    wp[j] += h;
    wm[j] -= h;
    (fid.value(&wp).unwrap() - fid.value(&wm).unwrap()) / (2.0 * h)
}

#[test]
fn kl_lipschitz_constant_is_frozen() {
    // y = (4, 1), b = (2, 1): L = max_j y_j/b_j² = max(1, 1) = 1.
    let fid = Fidelity::gen_kl(vec![4.0, 1.0], vec![2.0, 1.0]).unwrap();
    let info = fid.lipschitz_info(&Matrix::identity(2)).unwrap();
    assert!((info.l - 1.0).abs() < 1e-15);
    assert!(info.l_tilde >= info.l);
}

#[test]
fn quadratic_calibration_is_frozen() {
    // A = 2I: max‖a_i‖² = 4 > 1, safety 1.01 → γ = 4.04. A = I → γ = 1.
    let two_i = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let fid = Fidelity::least_squares(vec![0.0, 0.0]).unwrap();
    assert!((cc_calibrate_quadratic(&fid, &two_i, 1.01).unwrap() - 4.04).abs() < 1e-12);
    assert_eq!(cc_calibrate_quadratic(&fid, &Matrix::identity(2), 1.01).unwrap(), 1.0);
}

#[test]
fn kl_calibration_is_frozen() {
    // A = [[1,2],[3,4]], y = (1,1), b = (1,2), safety → 1:
    // ξ = min b = 1, c = column-wise min positive entries (1, 2),
    // γ_i = Σ_j a_ji² y_j / (c_i² ξ) = (10, 5).
    let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let fid = Fidelity::gen_kl(vec![1.0, 1.0], vec![1.0, 2.0]).unwrap();
    let (xi, c, gamma) = cc_calibrate_kl(&fid, &a, 1.0).unwrap();
    assert_eq!(xi, 1.0);
    assert_eq!(c, vec![1.0, 2.0]);
    assert!((gamma[0] - 10.0).abs() < 1e-12);
    assert!((gamma[1] - 5.0).abs() < 1e-12);
}

#[test]
fn gradients_match_central_differences() {
    let ls = Fidelity::least_squares(vec![1.0, -2.0, 0.5]).unwrap();
    let kl = Fidelity::gen_kl(vec![3.0, 0.0, 7.0], vec![1.0, 0.5, 2.0]).unwrap();
    // A deterministic fan of evaluation points (KL needs w + b > 0).
    for s in 0..50 {
        let t = s as f64 / 49.0;
        let w_ls = vec![4.0 * t - 2.0, 3.0 * (1.0 - t), t * t - 0.3];
        let w_kl = vec![2.0 * t + 0.1, 1.5 * (1.0 - t) + 0.2, 5.0 * t + 0.4];
        for j in 0..3 {
            let mut g = vec![0.0; 3];
            ls.grad_into(&w_ls, &mut g).unwrap();
            let fd = central_diff(&ls, &w_ls, j);
            assert!(
                (g[j] - fd).abs() <= GRAD_CHECK_REL_TOL * (1.0 + fd.abs()),
                "LS gradient {} vs difference {fd} at component {j}",
                g[j]
            );
            kl.grad_into(&w_kl, &mut g).unwrap();
            let fd = central_diff(&kl, &w_kl, j);
            assert!(
                (g[j] - fd).abs() <= GRAD_CHECK_REL_TOL * (1.0 + fd.abs()),
                "KL gradient {} vs difference {fd} at component {j}",
                g[j]
            );
        }
    }
}

#[test]
fn descent_constant_dominates_the_gradient() {
    // ‖∇G(w)‖ ≤ √(2·L̃·G(w)) must hold on the operator's range; probe it on
    // 10⁴ deterministic points for a KL term with mixed zero/positive counts.
    let a = Matrix::from_rows(&[
        vec![1.0, 0.5, 0.0],
        vec![0.2, 1.0, 0.3],
        vec![0.0, 0.4, 1.0],
        vec![0.7, 0.0, 0.2],
    ])
    .unwrap();
    let kl = Fidelity::gen_kl(vec![5.0, 0.0, 2.0, 1.0], vec![1.0, 0.8, 1.2, 0.6]).unwrap();
    let info = kl.lipschitz_info(&a).unwrap();
    let mut grad = vec![0.0; 4];
    for s in 0..10_000 {
        // Three-coordinate fan over the nonnegative orthant.
        let t = s as f64;
        let x = vec![
            (t * 0.000_731).fract() * 8.0,
            (t * 0.000_269).fract() * 8.0,
            (t * 0.000_577).fract() * 8.0,
        ];
        let w = a.matvec(&x);
        let g = kl.value(&w).unwrap();
        kl.grad_into(&w, &mut grad).unwrap();
        let gn = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bound = (2.0 * info.l_tilde * g).sqrt();
        assert!(
            gn <= bound + 1e-9,
            "‖∇G‖ = {gn} exceeds √(2L̃G) = {bound} at sample {s}"
        );
    }
}

#[test]
fn least_squares_descent_constant_is_unity() {
    let fid = Fidelity::least_squares(vec![1.0, 2.0]).unwrap();
    let info = fid.lipschitz_info(&Matrix::identity(2)).unwrap();
    assert_eq!(info.l, 1.0);
    assert_eq!(info.l_tilde, 1.0);
}
