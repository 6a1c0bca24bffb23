//! Scalar Bregman-generator calculus.
//!
//! A generator `ψ` is a strictly convex C² function on a constraint set
//! `𝒞 ∈ {ℝ, ℝ≥0}`. Two families are provided:
//!
//! ```text
//! quadratic:    ψ(x) = (γ/2) x²                        on ℝ or ℝ≥0
//! smoothed KL:  ψ(x) = γ · g_ξ(c x + ξ)                on ℝ≥0 only
//!               g_ξ(z) = z + ξ log(ξ/z) − ξ
//! ```
//!
//! Everything downstream — the B-rex penalty, its thresholds, the safe-region
//! geometry — is built from the triple `(ψ, ψ', ψ'')`, the scalar Bregman
//! distance `d_ψ(x, x') = ψ(x) − ψ(x') − ψ'(x')(x − x')`, and the threshold
//! `α` solving `d_ψ(0, α) = λ0`.

use crate::lambert::lambert_w0;
use crate::{Error, Result};

/// The constraint set `𝒞` shared by a problem's coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSet {
    /// `𝒞 = ℝ`.
    Reals,
    /// `𝒞 = ℝ≥0`.
    NonnegReals,
}

impl ConstraintSet {
    /// Whether `x` belongs to the set.
    #[inline]
    pub fn contains(self, x: f64) -> bool {
        match self {
            ConstraintSet::Reals => x.is_finite(),
            ConstraintSet::NonnegReals => x.is_finite() && x >= 0.0,
        }
    }

    /// Projection onto the set.
    #[inline]
    pub fn project(self, x: f64) -> f64 {
        match self {
            ConstraintSet::Reals => x,
            ConstraintSet::NonnegReals => x.max(0.0),
        }
    }
}

/// The generator family and its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeneratorKind {
    /// `ψ(x) = (γ/2) x²`.
    Quadratic {
        /// Curvature weight `γ > 0`.
        gamma: f64,
    },
    /// `ψ(x) = γ (c x + ξ log(ξ/(c x + ξ)))`, i.e. `γ · g_ξ(c x + ξ)`.
    SmoothedKl {
        /// Curvature weight `γ > 0`.
        gamma: f64,
        /// Column scale `c > 0`.
        c: f64,
        /// Smoothing offset `ξ > 0`.
        xi: f64,
    },
}

/// A scalar Bregman generator: family parameters plus the constraint set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BregmanGenerator {
    kind: GeneratorKind,
    constraint: ConstraintSet,
}

/// The threshold `α` at which the B-rex penalty saturates, together with the
/// regularization weight that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    /// `α > 0` with `d_ψ(0, α) = λ0` (absolute residual ≤ 1e-12).
    pub alpha: f64,
    /// The regularization weight `λ0 > 0`.
    pub lambda0: f64,
}

impl BregmanGenerator {
    /// Quadratic generator `ψ(x) = (γ/2)x²` on the given constraint set.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when `γ ≤ 0` or not finite.
    pub fn quadratic(gamma: f64, constraint: ConstraintSet) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic generator needs gamma > 0, got {gamma}"
            )));
        }
        Ok(Self { kind: GeneratorKind::Quadratic { gamma }, constraint })
    }

    /// Smoothed-KL generator `ψ(x) = γ·g_ξ(cx+ξ)`; only defined on `ℝ≥0`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when any of `γ, c, ξ` is non-positive.
    pub fn smoothed_kl(gamma: f64, c: f64, xi: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("c", c), ("xi", xi)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "smoothed-KL generator needs {name} > 0, got {v}"
                )));
            }
        }
        Ok(Self {
            kind: GeneratorKind::SmoothedKl { gamma, c, xi },
            constraint: ConstraintSet::NonnegReals,
        })
    }

    /// The family and parameters.
    #[inline]
    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// The constraint set `𝒞`.
    #[inline]
    pub fn constraint(&self) -> ConstraintSet {
        self.constraint
    }

    /// The curvature weight `γ` (both families have one).
    #[inline]
    pub fn gamma(&self) -> f64 {
        match self.kind {
            GeneratorKind::Quadratic { gamma } => gamma,
            GeneratorKind::SmoothedKl { gamma, .. } => gamma,
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.constraint.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "generator argument {x} outside the constraint set {:?}",
                self.constraint
            )))
        }
    }

    /// `ψ(x)`, `ψ'(x)`, `ψ''(x)` in one call.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] when `x ∉ 𝒞`.
    pub fn calculus(&self, x: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(x)?;
        Ok((self.value_unchecked(x), self.deriv_unchecked(x), self.deriv2_unchecked(x)))
    }

    /// `ψ(x)`.
    pub fn value(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.value_unchecked(x))
    }

    /// `ψ'(x)`.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.deriv_unchecked(x))
    }

    /// `ψ''(x)`.
    pub fn deriv2(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.deriv2_unchecked(x))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            GeneratorKind::Quadratic { gamma } => 0.5 * gamma * x * x,
            GeneratorKind::SmoothedKl { gamma, c, xi } => {
                // γ (z + ξ log(ξ/z) − ξ) at z = cx + ξ  ⇒  γ (cx + ξ log(ξ/(cx+ξ)))
                let z = c * x + xi;
                gamma * (c * x + xi * (xi / z).ln())
            }
        }
    }

    #[inline]
    pub(crate) fn deriv_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            GeneratorKind::Quadratic { gamma } => gamma * x,
            GeneratorKind::SmoothedKl { gamma, c, xi } => gamma * c * (1.0 - xi / (c * x + xi)),
        }
    }

    #[inline]
    pub(crate) fn deriv2_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            GeneratorKind::Quadratic { gamma } => gamma,
            GeneratorKind::SmoothedKl { gamma, c, xi } => {
                let z = c * x + xi;
                gamma * c * c * xi / (z * z)
            }
        }
    }

    /// Scalar Bregman distance `d_ψ(x, x') = ψ(x) − ψ(x') − ψ'(x')(x − x')`.
    ///
    /// Nonnegative, zero iff `x = x'` (strict convexity).
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] when either point leaves `𝒞` (the anchor `x'` must
    /// also be an interior point, which for these two families is all of `𝒞`).
    pub fn bregman(&self, x: f64, x_anchor: f64) -> Result<f64> {
        self.check_domain(x)?;
        self.check_domain(x_anchor)?;
        Ok(self.value_unchecked(x)
            - self.value_unchecked(x_anchor)
            - self.deriv_unchecked(x_anchor) * (x - x_anchor))
    }

    /// `d_ψ(0, t)` — the distance-from-zero profile that defines thresholds.
    ///
    /// Closed forms:
    /// ```text
    /// quadratic:    (γ/2) t²
    /// smoothed KL:  γ ξ (log((ct+ξ)/ξ) − ct/(ct+ξ))
    /// ```
    #[inline]
    pub fn bregman_from_zero(&self, t: f64) -> f64 {
        match self.kind {
            GeneratorKind::Quadratic { gamma } => 0.5 * gamma * t * t,
            GeneratorKind::SmoothedKl { gamma, c, xi } => {
                let z = c * t + xi;
                gamma * xi * ((z / xi).ln() - c * t / z)
            }
        }
    }

    /// Solves `d_ψ(0, α) = λ0` for the saturation threshold `α`.
    ///
    /// Quadratic: closed form `α = sqrt(2λ0/γ)`. Smoothed KL: the Lambert-W
    /// closed form `α = (−1/c)(ξ/W(−e^{−κ}) + ξ)` with `κ = λ0/(γξ) + 1`,
    /// polished by a bisection-guarded Newton step on the defining equation to
    /// protect against W rounding when `κ → 1`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when `λ0 ≤ 0` (λ0 = 0 is rejected: the
    /// penalty would collapse to a discontinuous indicator);
    /// [`Error::Numerical`] when the smoothed-KL threshold `α ≈ (ξ/c)e^{κ−1}`
    /// overflows f64 (κ = λ0/(γξ) + 1 beyond ≈700) — such a penalty never
    /// saturates at representable amplitudes, so the model needs rescaling.
    pub fn solve_alpha(&self, lambda0: f64) -> Result<Threshold> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold needs lambda0 > 0, got {lambda0}"
            )));
        }
        let alpha = match self.kind {
            GeneratorKind::Quadratic { gamma } => (2.0 * lambda0 / gamma).sqrt(),
            GeneratorKind::SmoothedKl { gamma, c, xi } => {
                let kappa = lambda0 / (gamma * xi) + 1.0;
                if kappa > 700.0 {
                    return Err(Error::Numerical(format!(
                        "smoothed-KL threshold overflows: λ0/(γξ) + 1 = {kappa} pushes α beyond \
                         the floating-point range; rescale λ0, γ, or ξ"
                    )));
                }
                let w = lambert_w0(-(-kappa).exp())?;
                let candidate = if w < 0.0 { -(xi / w + xi) / c } else { f64::INFINITY };
                let alpha = self.polish_alpha(candidate, lambda0);
                if !alpha.is_finite() {
                    return Err(Error::Numerical(format!(
                        "smoothed-KL threshold overflows at λ0 = {lambda0} with γ = {gamma}, \
                         c = {c}, ξ = {xi}; rescale the model"
                    )));
                }
                alpha
            }
        };
        debug_assert!(alpha > 0.0);
        Ok(Threshold { alpha, lambda0 })
    }

    /// Safeguarded Newton on `r(t) = d_ψ(0, t) − λ0` (so `r'(t) = t·ψ''(t)`),
    /// starting from the closed-form candidate, with a doubling bracket and
    /// bisection fallback. Converges for any positive starting point because
    /// `d_ψ(0, ·)` is strictly increasing on `(0, ∞)`.
    fn polish_alpha(&self, candidate: f64, lambda0: f64) -> f64 {
        let residual = |t: f64| self.bregman_from_zero(t) - lambda0;
        // Bracket the root.
        let mut hi = if candidate.is_finite() && candidate > 0.0 { candidate } else { 1.0 };
        let mut grow = 0;
        while residual(hi) < 0.0 && grow < 2048 {
            hi *= 2.0;
            grow += 1;
        }
        let mut lo = 0.0;
        let mut t = if candidate.is_finite() && candidate > 0.0 && candidate <= hi {
            candidate
        } else {
            0.5 * hi
        };
        let tol = 1e-13 * (1.0 + lambda0);
        for _ in 0..128 {
            let r = residual(t);
            if r.abs() <= tol {
                return t;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let slope = t * self.deriv2_unchecked(t);
            let newton = t - r / slope;
            t = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_calculus_is_polynomial() {
        let g = BregmanGenerator::quadratic(2.0, ConstraintSet::Reals).unwrap();
        let (v, d1, d2) = g.calculus(3.0).unwrap();
        assert_eq!((v, d1, d2), (9.0, 6.0, 2.0));
    }

    #[test]
    fn smoothed_kl_at_zero_is_flat() {
        let g = BregmanGenerator::smoothed_kl(1.0, 1.0, 1.0).unwrap();
        let (v, d1, d2) = g.calculus(0.0).unwrap();
        assert_eq!(v, 0.0, "psi(0) = 0");
        assert_eq!(d1, 0.0, "psi'(0) = 0");
        assert_eq!(d2, 1.0, "psi''(0) = gamma c^2 / xi");
    }

    #[test]
    fn smoothed_kl_unit_point() {
        // x − ln(1+x) at x = 1 and its derivatives.
        let g = BregmanGenerator::smoothed_kl(1.0, 1.0, 1.0).unwrap();
        let (v, d1, d2) = g.calculus(1.0).unwrap();
        assert!((v - (1.0 - 2.0_f64.ln())).abs() < 1e-15);
        assert!((d1 - 0.5).abs() < 1e-15);
        assert!((d2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constraint_violations_are_domain_errors() {
        let g = BregmanGenerator::smoothed_kl(1.0, 2.0, 0.5).unwrap();
        assert!(matches!(g.value(-0.1), Err(Error::Domain(_))));
        let q = BregmanGenerator::quadratic(1.0, ConstraintSet::NonnegReals).unwrap();
        assert!(matches!(q.calculus(-1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn lambda0_zero_is_rejected() {
        let g = BregmanGenerator::quadratic(1.0, ConstraintSet::Reals).unwrap();
        assert!(matches!(g.solve_alpha(0.0), Err(Error::InvalidParameter(_))));
    }
}
