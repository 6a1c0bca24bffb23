//! Separable data-fidelity terms and their calculus.
//!
//! Two families:
//!
//! ```text
//! least squares:    G_y(w) = ½ ‖w − y‖²
//! generalized KL:   G_y(w) = Σ_j g_{y_j}(w_j + b_j),   g_y(z) = z + y·log(y/z) − y
//! ```
//!
//! The KL form carries a strictly positive background `b` and uses the
//! `0·log 0 = 0` convention: a zero-count component contributes `w_j + b_j`
//! with gradient 1 and no logarithm is evaluated.
//!
//! Besides values and gradients this module computes: the gradient Lipschitz
//! constant `L`; the descent-lemma constant `L̃ ≥ L` that controls gradients
//! through values (`‖∇G(w)‖ ≤ sqrt(2·L̃·G(w))` on the operator's range); and
//! the concavity-condition (CC) calibration that picks generator curvatures
//! making the relaxation exact.

use crate::linalg::Matrix;
use crate::{Error, Result};

/// The minimum curvature weight the KL calibration will return, so that a
/// column facing only zero counts still yields a strictly convex generator.
const KL_GAMMA_FLOOR: f64 = 1e-8;

/// A separable data term `G_y`.
#[derive(Clone, Debug, PartialEq)]
pub enum Fidelity {
    /// `½‖w − y‖²`.
    LeastSquares {
        /// Measurements (length M).
        y: Vec<f64>,
    },
    /// `Σ_j g_{y_j}(w_j + b_j)` with strictly positive background `b`.
    GenKl {
        /// Nonnegative counts (length M).
        y: Vec<f64>,
        /// Strictly positive background (length M).
        b: Vec<f64>,
    },
}

/// Gradient-smoothness data for a fidelity composed with an operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzInfo {
    /// Gradient Lipschitz constant `L` of `G_y`.
    pub l: f64,
    /// Descent constant `L̃ ≥ L` with `‖∇G(w)‖ ≤ sqrt(2·L̃·G(w))` on the range.
    pub l_tilde: f64,
    /// Distance `δ` of the operator's range to the domain boundary (KL only).
    pub margin_delta: Option<f64>,
    /// Range-wide gradient bound `θ` (KL only).
    pub grad_sup_theta: Option<f64>,
}

impl Fidelity {
    /// Least-squares term with the given measurements.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when `y` is empty or not finite.
    pub fn least_squares(y: Vec<f64>) -> Result<Self> {
        if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("least-squares measurements must be a nonempty finite vector".into()));
        }
        Ok(Fidelity::LeastSquares { y })
    }

    /// Generalized KL term with counts `y ≥ 0` and background `b > 0`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] on length mismatch, negative counts, or a
    /// non-positive background component.
    pub fn gen_kl(y: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if y.is_empty() || y.len() != b.len() {
            return Err(Error::InvalidParameter(format!(
                "KL needs matching nonempty counts/background, got lengths {} and {}",
                y.len(),
                b.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("KL counts must be finite and nonnegative".into()));
        }
        if b.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidParameter("KL background must be strictly positive".into()));
        }
        Ok(Fidelity::GenKl { y, b })
    }

    /// Number of measurements M.
    #[inline]
    pub fn m(&self) -> usize {
        match self {
            Fidelity::LeastSquares { y } => y.len(),
            Fidelity::GenKl { y, .. } => y.len(),
        }
    }

    /// Strong-convexity modulus `ν` (1 for least squares, 0 for KL).
    #[inline]
    pub fn nu(&self) -> f64 {
        match self {
            Fidelity::LeastSquares { .. } => 1.0,
            Fidelity::GenKl { .. } => 0.0,
        }
    }

    /// Whether this term constrains problems to nonnegative operators/cones.
    #[inline]
    pub fn requires_nonneg(&self) -> bool {
        matches!(self, Fidelity::GenKl { .. })
    }

    fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.m() {
            return Err(Error::InvalidParameter(format!(
                "fidelity expects length {}, got {}",
                self.m(),
                w.len()
            )));
        }
        Ok(())
    }

    /// `G_y(w)`.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] for KL when some `w_j + b_j ≤ 0`;
    /// [`Error::InvalidParameter`] on length mismatch.
    pub fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_len(w)?;
        match self {
            Fidelity::LeastSquares { y } => {
                let mut acc = 0.0;
                for (wj, yj) in w.iter().zip(y) {
                    let d = wj - yj;
                    acc += d * d;
                }
                Ok(0.5 * acc)
            }
            Fidelity::GenKl { y, b } => {
                let mut acc = 0.0;
                for j in 0..y.len() {
                    let z = w[j] + b[j];
                    if z <= 0.0 {
                        return Err(Error::Domain(format!(
                            "KL component {j}: w + b = {z} must be strictly positive"
                        )));
                    }
                    acc += if y[j] == 0.0 { z } else { z + y[j] * (y[j] / z).ln() - y[j] };
                }
                Ok(acc)
            }
        }
    }

    /// `∇G_y(w)` written into `grad`.
    ///
    /// # Errors
    ///
    /// Same conditions as [`Fidelity::value`].
    pub fn grad_into(&self, w: &[f64], grad: &mut [f64]) -> Result<()> {
        self.check_len(w)?;
        self.check_len(grad)?;
        match self {
            Fidelity::LeastSquares { y } => {
                for j in 0..y.len() {
                    grad[j] = w[j] - y[j];
                }
            }
            Fidelity::GenKl { y, b } => {
                for j in 0..y.len() {
                    let z = w[j] + b[j];
                    if z <= 0.0 {
                        return Err(Error::Domain(format!(
                            "KL component {j}: w + b = {z} must be strictly positive"
                        )));
                    }
                    grad[j] = 1.0 - y[j] / z;
                }
            }
        }
        Ok(())
    }

    /// Per-row second derivative `G_y″(w_j)` written into `curv`: the data
    /// term is separable across rows, so its Hessian is this diagonal.
    /// Least squares is 1 in every row; generalized KL is `y_j/(w_j+b_j)²`
    /// (zero-count rows are affine in `w_j` and contribute no curvature).
    ///
    /// # Errors
    ///
    /// Same conditions as [`Fidelity::value`].
    pub fn curvature_into(&self, w: &[f64], curv: &mut [f64]) -> Result<()> {
        self.check_len(w)?;
        self.check_len(curv)?;
        match self {
            Fidelity::LeastSquares { .. } => curv.fill(1.0),
            Fidelity::GenKl { y, b } => {
                for j in 0..y.len() {
                    let z = w[j] + b[j];
                    if z <= 0.0 {
                        return Err(Error::Domain(format!(
                            "KL component {j}: w + b = {z} must be strictly positive"
                        )));
                    }
                    curv[j] = y[j] / (z * z);
                }
            }
        }
        Ok(())
    }

    /// `(G_y(w), ∇G_y(w))` in one pass.
    ///
    /// # Errors
    ///
    /// Same conditions as [`Fidelity::value`].
    pub fn value_grad(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        let v = self.value(w)?;
        let mut g = vec![0.0; self.m()];
        self.grad_into(w, &mut g)?;
        Ok((v, g))
    }

    /// Gradient-smoothness constants for this fidelity composed with `A`.
    ///
    /// Least squares: `L = L̃ = 1` (the domain is all of ℝ^M). KL:
    /// `L = max_j y_j/b_j²`, and `L̃ = 1/(2η − Lη²)` where
    /// `η = 1/L` if `δ/θ > 1/L` (then `L̃ = L` exactly) and `η = 0.99·δ/θ`
    /// otherwise, with `δ = min_j b_j` the boundary margin of the range and
    /// `θ = sqrt(Σ_j max(|1 − y_j/b_j|, 1)²)` the range-wide gradient bound.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] for a KL term with an operator carrying
    /// negative entries or mismatched row count.
    pub fn lipschitz_info(&self, a: &Matrix) -> Result<LipschitzInfo> {
        if a.rows() != self.m() {
            return Err(Error::InvalidParameter(format!(
                "operator has {} rows but the fidelity has {} measurements",
                a.rows(),
                self.m()
            )));
        }
        match self {
            Fidelity::LeastSquares { .. } => Ok(LipschitzInfo {
                l: 1.0,
                l_tilde: 1.0,
                margin_delta: None,
                grad_sup_theta: None,
            }),
            Fidelity::GenKl { y, b } => {
                if !a.is_entrywise_nonneg() {
                    return Err(Error::InvalidParameter(
                        "KL fidelity requires an entrywise nonnegative operator".into(),
                    ));
                }
                let l = y
                    .iter()
                    .zip(b)
                    .map(|(yj, bj)| yj / (bj * bj))
                    .fold(0.0_f64, f64::max);
                let delta = b.iter().copied().fold(f64::INFINITY, f64::min);
                let theta = y
                    .iter()
                    .zip(b)
                    .map(|(yj, bj)| (1.0 - yj / bj).abs().max(1.0).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let inv_l = if l > 0.0 { 1.0 / l } else { f64::INFINITY };
                let l_tilde = if delta / theta > inv_l {
                    // The interior margin is slack: the optimal η = 1/L is
                    // admissible and gives L̃ = L exactly.
                    l
                } else {
                    let eta = 0.99 * delta / theta;
                    1.0 / (2.0 * eta - l * eta * eta)
                };
                Ok(LipschitzInfo {
                    l,
                    l_tilde,
                    margin_delta: Some(delta),
                    grad_sup_theta: Some(theta),
                })
            }
        }
    }
}

/// Concavity-condition curvature for quadratic generators against a
/// least-squares term: `γ = safety · max_i ‖a_i‖²`, except that any operator
/// with `max_i ‖a_i‖² ≤ 1` may use `γ = 1` outright.
///
/// # Errors
///
/// [`Error::InvalidParameter`] for a non-LS fidelity or `safety < 1`;
/// [`Error::ZeroColumn`] when a column is identically zero.
pub fn cc_calibrate_quadratic(f: &Fidelity, a: &Matrix, safety: f64) -> Result<f64> {
    if !matches!(f, Fidelity::LeastSquares { .. }) {
        return Err(Error::InvalidParameter(
            "quadratic calibration applies to the least-squares fidelity only".into(),
        ));
    }
    if !(safety.is_finite() && safety >= 1.0) {
        return Err(Error::InvalidParameter(format!("safety factor must be ≥ 1, got {safety}")));
    }
    let mut max_sq = 0.0_f64;
    for i in 0..a.cols() {
        let nsq = a.col_norm_sq(i);
        if nsq == 0.0 {
            return Err(Error::ZeroColumn(i));
        }
        max_sq = max_sq.max(nsq);
    }
    Ok(if max_sq <= 1.0 { 1.0 } else { safety * max_sq })
}

/// Concavity-condition parameters for smoothed-KL generators against a KL
/// term: `ξ = min_j b_j`, `c_i = min_{j∈σ(a_i)} a_ji` (the smallest positive
/// entry of column i), and `γ_i = safety · Σ_j a_ji² y_j / (c_i² ξ)`, floored
/// at a tiny positive value when the bound degenerates to zero.
///
/// Returns `(ξ, c, γ)`.
///
/// # Errors
///
/// [`Error::InvalidParameter`] for a non-KL fidelity, `safety < 1`, or an
/// operator with negative entries; [`Error::ZeroColumn`] when a column has no
/// strictly positive entry.
pub fn cc_calibrate_kl(f: &Fidelity, a: &Matrix, safety: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (y, b) = match f {
        Fidelity::GenKl { y, b } => (y, b),
        _ => {
            return Err(Error::InvalidParameter(
                "KL calibration applies to the generalized-KL fidelity only".into(),
            ))
        }
    };
    if !(safety.is_finite() && safety >= 1.0) {
        return Err(Error::InvalidParameter(format!("safety factor must be ≥ 1, got {safety}")));
    }
    if a.rows() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "operator has {} rows but the fidelity has {} measurements",
            a.rows(),
            y.len()
        )));
    }
    if !a.is_entrywise_nonneg() {
        return Err(Error::InvalidParameter(
            "KL calibration requires an entrywise nonnegative operator".into(),
        ));
    }
    let xi = b.iter().copied().fold(f64::INFINITY, f64::min);
    let mut c = Vec::with_capacity(a.cols());
    let mut gamma = Vec::with_capacity(a.cols());
    for i in 0..a.cols() {
        let mut c_i = f64::INFINITY;
        let mut bound = 0.0;
        for j in 0..a.rows() {
            let aji = a.get(j, i);
            if aji > 0.0 {
                c_i = c_i.min(aji);
            }
            bound += aji * aji * y[j];
        }
        if !c_i.is_finite() {
            return Err(Error::ZeroColumn(i));
        }
        bound /= c_i * c_i * xi;
        c.push(c_i);
        gamma.push((safety * bound).max(KL_GAMMA_FLOOR));
    }
    Ok((xi, c, gamma))
}
