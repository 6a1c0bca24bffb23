//! Problem assembly, objectives, and first-order diagnostics.
//!
//! A [`Problem`] bundles an operator `A`, a data term `G_y`, and one
//! calibrated B-rex penalty per coordinate. It evaluates three objectives:
//!
//! ```text
//! J₀(x) = G_y(Ax) + λ₀·‖x‖₀          the target, combinatorial
//! J_Ψ(x) = G_y(Ax) + Σᵢ βᵢ(xᵢ)        the continuous exact relaxation
//! H(x)  = Σᵢ (βᵢ + ψᵢ)(xᵢ)            the Bregman-convexified penalty part
//! ```
//!
//! and the dual-style vector `z(x) = ∇Ψ(x) − Aᵀ∇G_y(Ax)` whose coordinate-wise
//! membership `zᵢ ∈ ∂hᵢ(xᵢ)` characterizes criticality of `J_Ψ` relative to
//! the generator geometry. On top of `z` sit two certificates: a residual
//! [`CriticalityReport`] and the amplitude-gap [`IsolationReport`] that rules
//! out critical points near the threshold band.
//!
//! Construction validates the concavity condition (CC) that makes the
//! relaxation exact — an uncalibrated problem is rejected, not silently
//! accepted.
//!
//! # What can go wrong
//!
//! - Generator family and fidelity must match (quadratic ↔ least squares,
//!   smoothed-KL ↔ generalized KL): the exactness certificates exist only for
//!   those pairings.
//! - A KL problem with a negative operator entry or a real (sign-free)
//!   constraint set is rejected at construction.
//! - Curvatures below the CC bound are rejected with the violating coordinate
//!   named.

use crate::fidelity::{cc_calibrate_kl, cc_calibrate_quadratic, Fidelity, LipschitzInfo};
use crate::generator::{BregmanGenerator, ConstraintSet, GeneratorKind};
use crate::linalg::Matrix;
use crate::penalty::BrexPenalty;
use crate::{Error, Result};

/// Relative slack used when re-checking the concavity condition at
/// construction. The calibration routines compute the same bound with a
/// possibly different summation order, so bit-exact comparisons would reject
/// valid certificates; 1e-9 is far above accumulated rounding yet far below
/// any meaningful miscalibration.
const CC_SLACK: f64 = 1e-9;

/// A sparsity pattern: strictly increasing 0-based coordinate indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Support {
    indices: Vec<usize>,
}

impl Support {
    /// Build from indices, which must be strictly increasing.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when indices repeat or decrease.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParameter(format!(
                    "support indices must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Support { indices })
    }

    /// The empty support.
    pub fn empty() -> Self {
        Support { indices: Vec::new() }
    }

    /// Support of a vector: the indices of its exactly-nonzero entries.
    pub fn of_vector(x: &[f64]) -> Self {
        Support { indices: x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect() }
    }

    /// The indices, strictly increasing.
    #[inline]
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Cardinality.
    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Whether the support is empty.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Membership test.
    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Extract the entries of `x` on this support, in index order.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| x[i]).collect()
    }
}

/// Scatter `u` onto its support inside an `n`-vector of zeros.
///
/// `zero_pad(&[1.0, 2.0, 3.0], {1,3,4}, 6)` gives `(0, 1, 0, 2, 3, 0)`.
///
/// # Errors
///
/// [`Error::InvalidParameter`] when lengths disagree or an index reaches `n`.
pub fn zero_pad(u: &[f64], support: &Support, n: usize) -> Result<Vec<f64>> {
    if u.len() != support.len() {
        return Err(Error::InvalidParameter(format!(
            "zero_pad: {} values for a support of size {}",
            u.len(),
            support.len()
        )));
    }
    if let Some(&last) = support.indices().last() {
        if last >= n {
            return Err(Error::InvalidParameter(format!(
                "zero_pad: support index {last} does not fit in dimension {n}"
            )));
        }
    }
    let mut x = vec![0.0; n];
    for (k, &i) in support.indices().iter().enumerate() {
        x[i] = u[k];
    }
    Ok(x)
}

/// Residuals of the criticality inclusion `zᵢ ∈ ∂hᵢ(xᵢ)`.
#[derive(Clone, Debug)]
pub struct CriticalityReport {
    /// Whether every scaled residual is within tolerance.
    pub is_critical: bool,
    /// Raw distance of `zᵢ` to `∂hᵢ(xᵢ)`, per coordinate.
    pub residuals: Vec<f64>,
    /// Largest residual after dividing by the coordinate scale `1 + |ψᵢ'(αᵢ)|`.
    pub worst_scaled: f64,
    /// The tolerance the verdict used.
    pub tol: f64,
}

/// Verdict of the amplitude-gap (isolation) test on a dual vector `z`.
#[derive(Clone, Debug)]
pub struct IsolationReport {
    /// Whether every `|zᵢ|` avoids its forbidden band.
    pub isolated: bool,
    /// Per-coordinate forbidden band `[lo, hi]`; empty bands have `lo > hi`.
    pub bands: Vec<(f64, f64)>,
    /// Distance of `|zᵢ|` to its band: positive outside, negative inside,
    /// `+∞` when the band is empty.
    pub margins: Vec<f64>,
}

/// A calibrated sparse-regression problem: operator, data term, and one
/// B-rex penalty per coordinate, all sharing a constraint set.
#[derive(Clone, Debug)]
pub struct Problem {
    a: Matrix,
    fidelity: Fidelity,
    penalties: Vec<BrexPenalty>,
    lambda0: f64,
    constraint: ConstraintSet,
    lipschitz: LipschitzInfo,
    spectral_norm_a: f64,
}

impl Problem {
    /// Assemble and validate a problem from explicit generators.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] on shape mismatch, mixed constraint sets,
    /// a generator family that does not match the fidelity, or a curvature
    /// below the concavity-condition bound.
    pub fn new(
        a: Matrix,
        fidelity: Fidelity,
        generators: Vec<BregmanGenerator>,
        lambda0: f64,
    ) -> Result<Self> {
        if a.rows() != fidelity.m() {
            return Err(Error::InvalidParameter(format!(
                "operator has {} rows but the fidelity has {} measurements",
                a.rows(),
                fidelity.m()
            )));
        }
        if generators.len() != a.cols() {
            return Err(Error::InvalidParameter(format!(
                "{} generators for an operator with {} columns",
                generators.len(),
                a.cols()
            )));
        }
        let constraint = generators[0].constraint();
        if generators.iter().any(|g| g.constraint() != constraint) {
            return Err(Error::InvalidParameter(
                "all coordinates must share one constraint set".into(),
            ));
        }
        if fidelity.requires_nonneg() {
            if constraint != ConstraintSet::NonnegReals {
                return Err(Error::InvalidParameter(
                    "the KL fidelity requires the nonnegative constraint set".into(),
                ));
            }
            if !a.is_entrywise_nonneg() {
                return Err(Error::InvalidParameter(
                    "the KL fidelity requires an entrywise nonnegative operator".into(),
                ));
            }
        }
        Self::validate_cc(&a, &fidelity, &generators)?;
        let lipschitz = fidelity.lipschitz_info(&a)?;
        let spectral_norm_a = a.spectral_norm();
        let penalties = generators
            .into_iter()
            .map(|g| BrexPenalty::new(g, lambda0))
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem { a, fidelity, penalties, lambda0, constraint, lipschitz, spectral_norm_a })
    }

    /// Check the concavity condition that makes the relaxation exact.
    fn validate_cc(a: &Matrix, fidelity: &Fidelity, generators: &[BregmanGenerator]) -> Result<()> {
        match fidelity {
            Fidelity::LeastSquares { .. } => {
                for (i, g) in generators.iter().enumerate() {
                    let gamma = match g.kind() {
                        GeneratorKind::Quadratic { gamma } => gamma,
                        GeneratorKind::SmoothedKl { .. } => {
                            return Err(Error::InvalidParameter(
                                "least-squares problems need quadratic generators; the concavity \
                                 condition has no smoothed-KL certificate here"
                                    .into(),
                            ))
                        }
                    };
                    let bound = a.col_norm_sq(i);
                    if gamma < bound * (1.0 - CC_SLACK) {
                        return Err(Error::InvalidParameter(format!(
                            "coordinate {i}: curvature {gamma} is below the concavity bound ‖a_i‖² = {bound}"
                        )));
                    }
                }
            }
            Fidelity::GenKl { y, b } => {
                let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
                for (i, g) in generators.iter().enumerate() {
                    let (gamma, c, xi) = match g.kind() {
                        GeneratorKind::SmoothedKl { gamma, c, xi } => (gamma, c, xi),
                        GeneratorKind::Quadratic { .. } => {
                            return Err(Error::InvalidParameter(
                                "generalized-KL problems need smoothed-KL generators; the \
                                 concavity condition has no quadratic certificate here"
                                    .into(),
                            ))
                        }
                    };
                    if xi > min_b * (1.0 + CC_SLACK) {
                        return Err(Error::InvalidParameter(format!(
                            "coordinate {i}: ξ = {xi} exceeds the smallest background {min_b}"
                        )));
                    }
                    let mut min_pos = f64::INFINITY;
                    let mut bound = 0.0;
                    for j in 0..a.rows() {
                        let aji = a.get(j, i);
                        if aji > 0.0 {
                            min_pos = min_pos.min(aji);
                        }
                        bound += aji * aji * y[j];
                    }
                    if !min_pos.is_finite() {
                        return Err(Error::ZeroColumn(i));
                    }
                    if c > min_pos * (1.0 + CC_SLACK) {
                        return Err(Error::InvalidParameter(format!(
                            "coordinate {i}: c = {c} exceeds the smallest positive column entry {min_pos}"
                        )));
                    }
                    bound /= c * c * xi;
                    if gamma < bound * (1.0 - CC_SLACK) {
                        return Err(Error::InvalidParameter(format!(
                            "coordinate {i}: curvature {gamma} is below the concavity bound {bound}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Least-squares problem with curvatures from the quadratic calibration
    /// and the sign-free constraint set.
    ///
    /// # Errors
    ///
    /// Propagates calibration and construction failures.
    pub fn least_squares(a: Matrix, y: Vec<f64>, lambda0: f64, safety: f64) -> Result<Self> {
        let fidelity = Fidelity::least_squares(y)?;
        let gamma = cc_calibrate_quadratic(&fidelity, &a, safety)?;
        let generators = (0..a.cols())
            .map(|_| BregmanGenerator::quadratic(gamma, ConstraintSet::Reals))
            .collect::<Result<Vec<_>>>()?;
        Problem::new(a, fidelity, generators, lambda0)
    }

    /// Generalized-KL problem with parameters from the KL calibration.
    ///
    /// # Errors
    ///
    /// Propagates calibration and construction failures.
    pub fn kl(a: Matrix, y: Vec<f64>, b: Vec<f64>, lambda0: f64, safety: f64) -> Result<Self> {
        let fidelity = Fidelity::gen_kl(y, b)?;
        let (xi, c, gamma) = cc_calibrate_kl(&fidelity, &a, safety)?;
        let generators = (0..a.cols())
            .map(|i| BregmanGenerator::smoothed_kl(gamma[i], c[i], xi))
            .collect::<Result<Vec<_>>>()?;
        Problem::new(a, fidelity, generators, lambda0)
    }

    /// The same problem re-thresholded at a different `λ₀`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when `lambda0` is not strictly positive.
    pub fn with_lambda0(&self, lambda0: f64) -> Result<Self> {
        let generators: Vec<BregmanGenerator> =
            self.penalties.iter().map(|p| p.generator().clone()).collect();
        let penalties = generators
            .into_iter()
            .map(|g| BrexPenalty::new(g, lambda0))
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem { penalties, lambda0, ..self.clone() })
    }

    /// The operator `A`.
    #[inline]
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    /// The data term.
    #[inline]
    pub fn fidelity(&self) -> &Fidelity {
        &self.fidelity
    }

    /// All coordinate penalties.
    #[inline]
    pub fn penalties(&self) -> &[BrexPenalty] {
        &self.penalties
    }

    /// The penalty on coordinate `i`.
    #[inline]
    pub fn penalty(&self, i: usize) -> &BrexPenalty {
        &self.penalties[i]
    }

    /// The sparsity price `λ₀`.
    #[inline]
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// The shared constraint set.
    #[inline]
    pub fn constraint(&self) -> ConstraintSet {
        self.constraint
    }

    /// Gradient-smoothness constants of the data term.
    #[inline]
    pub fn lipschitz(&self) -> LipschitzInfo {
        self.lipschitz
    }

    /// Cached `‖A‖₂`.
    #[inline]
    pub fn spectral_norm_a(&self) -> f64 {
        self.spectral_norm_a
    }

    /// Ambient dimension N.
    #[inline]
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Number of measurements M.
    #[inline]
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::InvalidParameter(format!(
                "vector has length {}, expected {}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Whether `x` lies in the constraint set.
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| self.constraint.contains(v))
    }

    /// `G_y(Ax)`, the data-fit part alone.
    ///
    /// # Errors
    ///
    /// Propagates fidelity domain errors.
    pub fn fidelity_of(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.fidelity.value(&self.a.matvec(x))
    }

    /// `J₀(x) = G_y(Ax) + λ₀·‖x‖₀`, `+∞` outside the constraint set.
    ///
    /// # Errors
    ///
    /// Propagates fidelity domain errors.
    pub fn eval_j0(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if !self.is_feasible(x) {
            return Ok(f64::INFINITY);
        }
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        Ok(self.fidelity.value(&self.a.matvec(x))? + self.lambda0 * nnz as f64)
    }

    /// `J_Ψ(x) = G_y(Ax) + Σᵢ βᵢ(xᵢ)`, `+∞` outside the constraint set.
    ///
    /// # Errors
    ///
    /// Propagates fidelity domain errors.
    pub fn eval_jpsi(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut pen = 0.0;
        for (p, &xi) in self.penalties.iter().zip(x) {
            pen += p.value_on_set(xi);
            if pen.is_infinite() {
                return Ok(f64::INFINITY);
            }
        }
        Ok(self.fidelity.value(&self.a.matvec(x))? + pen)
    }

    /// `H(x) = Σᵢ (βᵢ + ψᵢ)(xᵢ)`, `+∞` outside the constraint set.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] on a length mismatch.
    pub fn eval_h(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut acc = 0.0;
        for (p, &xi) in self.penalties.iter().zip(x) {
            if !self.constraint.contains(xi) {
                return Ok(f64::INFINITY);
            }
            acc += p.h_value(xi)?;
        }
        Ok(acc)
    }

    /// The dual-style vector `z(x) = ∇Ψ(x) − Aᵀ∇G_y(Ax)`.
    ///
    /// # Errors
    ///
    /// Propagates fidelity domain errors and generator domain errors.
    pub fn compute_z(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let w = self.a.matvec(x);
        let mut grad = vec![0.0; self.m()];
        self.fidelity.grad_into(&w, &mut grad)?;
        let mut z = self.a.tr_matvec(&grad);
        for i in 0..self.n() {
            z[i] = self.penalties[i].generator().deriv(x[i])? - z[i];
        }
        Ok(z)
    }

    /// Test the inclusion `zᵢ(x) ∈ ∂hᵢ(xᵢ)` coordinate-wise.
    ///
    /// The verdict compares each residual against `tol · (1 + |ψᵢ'(αᵢ)|)`, so
    /// one tolerance works across coordinate scalings.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] for infeasible `x` or non-positive `tol`;
    /// propagates domain errors from `z`.
    pub fn is_critical(&self, x: &[f64], tol: f64) -> Result<CriticalityReport> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("criticality tolerance must be positive, got {tol}")));
        }
        self.check_dim(x)?;
        if !self.is_feasible(x) {
            return Err(Error::InvalidParameter(
                "criticality is only defined on the constraint set".into(),
            ));
        }
        let z = self.compute_z(x)?;
        let mut residuals = Vec::with_capacity(self.n());
        let mut worst = 0.0_f64;
        let mut ok = true;
        for i in 0..self.n() {
            let interval = self.penalties[i].h_subdiff(x[i])?;
            let r = interval.distance(z[i]);
            let scale = 1.0 + self.penalties[i].dpsi_alpha().abs();
            let scaled = r / scale;
            worst = worst.max(scaled);
            if scaled > tol {
                ok = false;
            }
            residuals.push(r);
        }
        Ok(CriticalityReport { is_critical: ok, residuals, worst_scaled: worst, tol })
    }

    /// Amplitude-gap test: `x` is isolated when every `|zᵢ|` avoids the band
    ///
    /// ```text
    /// [ C_K·(ψᵢ'(αᵢ) − ψᵢ'(0)) + ψᵢ'(0),  (ψᵢ'(αᵢ) − ψᵢ'(0))/C_K + ψᵢ'(0) ]
    /// ```
    ///
    /// For `C_K > 1` the band is empty and every vector passes with infinite
    /// margin.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when `c_k` is not strictly positive or `z`
    /// has the wrong length.
    pub fn isolation_check(&self, z: &[f64], c_k: f64) -> Result<IsolationReport> {
        if !(c_k > 0.0 && c_k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "isolation needs a strictly positive landscape constant, got {c_k}"
            )));
        }
        self.check_dim(z)?;
        let mut bands = Vec::with_capacity(self.n());
        let mut margins = Vec::with_capacity(self.n());
        let mut isolated = true;
        for i in 0..self.n() {
            let gap = self.penalties[i].dpsi_alpha() - self.penalties[i].dpsi_zero();
            let base = self.penalties[i].dpsi_zero();
            let lo = c_k * gap + base;
            let hi = gap / c_k + base;
            let margin = if lo > hi {
                f64::INFINITY
            } else {
                let t = z[i].abs();
                if t < lo {
                    lo - t
                } else if t > hi {
                    t - hi
                } else {
                    isolated = false;
                    -(t - lo).min(hi - t)
                }
            };
            bands.push((lo, hi));
            margins.push(margin);
        }
        Ok(IsolationReport { isolated, bands, margins })
    }

    /// The λ₀ level below which a sparse vector's optimality can follow from
    /// its fidelity value: `F(x) / (1 + K − 2‖x‖₀)`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when `k_max < 2‖x‖₀` (the denominator
    /// would lose its meaning); propagates fidelity errors.
    pub fn uniqglob_threshold(&self, x: &[f64], k_max: usize) -> Result<f64> {
        self.check_dim(x)?;
        let k = x.iter().filter(|v| **v != 0.0).count();
        if k_max < 2 * k {
            return Err(Error::InvalidParameter(format!(
                "sparsity budget {k_max} is below twice the vector's support size {k}"
            )));
        }
        let f = self.fidelity_of(x)?;
        Ok(f / (1.0 + k_max as f64 - 2.0 * k as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_CC_SAFETY;

    fn tiny_ls() -> Problem {
        let a = Matrix::identity(2);
        Problem::least_squares(a, vec![1.0, 0.0], 0.5, DEFAULT_CC_SAFETY).unwrap()
    }

    #[test]
    fn zero_pad_scatters() {
        let s = Support::new(vec![1, 3, 4]).unwrap();
        let x = zero_pad(&[1.0, 2.0, 3.0], &s, 6).unwrap();
        assert_eq!(x, vec![0.0, 1.0, 0.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn support_of_vector_is_exact() {
        let s = Support::of_vector(&[0.0, 1e-300, 0.0, -2.0]);
        assert_eq!(s.indices(), &[1, 3]);
    }

    #[test]
    fn z_at_truth_and_zero() {
        let p = tiny_ls();
        // At the exact fit the fidelity gradient vanishes, so z = ψ'(x) = γ·x.
        let z = p.compute_z(&[1.0, 0.0]).unwrap();
        assert_eq!(z, vec![1.0, 0.0]);
        // At the origin z = Aᵀy.
        let z0 = p.compute_z(&[0.0, 0.0]).unwrap();
        assert_eq!(z0, vec![1.0, 0.0]);
    }

    #[test]
    fn isolation_band_matches_hand_computation() {
        // Quadratic γ = 1, λ₀ = 0.5 ⇒ α = 1, ψ'(α) = 1, band [C_K, 1/C_K].
        let p = tiny_ls();
        let rep = p.isolation_check(&[0.3, 2.5], 0.5).unwrap();
        assert!(rep.isolated);
        assert_eq!(rep.bands[0], (0.5, 2.0));
        assert!((rep.margins[0] - 0.2).abs() < 1e-15);
        assert!((rep.margins[1] - 0.5).abs() < 1e-15);
        let inside = p.isolation_check(&[1.0, 0.0], 0.5).unwrap();
        assert!(!inside.isolated);
    }

    #[test]
    fn mismatched_family_rejected() {
        let a = Matrix::identity(2);
        let fid = Fidelity::least_squares(vec![1.0, 0.0]).unwrap();
        let gens = (0..2)
            .map(|_| BregmanGenerator::smoothed_kl(1.0, 1.0, 1.0).unwrap())
            .collect::<Vec<_>>();
        assert!(Problem::new(a, fid, gens, 0.5).is_err());
    }

    #[test]
    fn undercalibrated_curvature_rejected() {
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let fid = Fidelity::least_squares(vec![1.0, 0.0]).unwrap();
        // Columns have squared norm 4; γ = 1 violates the concavity bound.
        let gens: Vec<_> = (0..2)
            .map(|_| BregmanGenerator::quadratic(1.0, ConstraintSet::Reals).unwrap())
            .collect();
        assert!(matches!(Problem::new(a, fid, gens, 0.5), Err(Error::InvalidParameter(_))));
    }
}
