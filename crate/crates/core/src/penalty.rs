//! The scalar B-rex penalty, its subdifferentials, and its proximal operator.
//!
//! For a generator `ψ` with threshold `α` (where `d_ψ(0, α) = λ0`), the
//! penalty is
//!
//! ```text
//! β(x) = ψ(0) − ψ(x) + sign(x)·ψ'(α)·x    if |x| ≤ α
//!        λ0                               if |x| > α
//! ```
//!
//! `β` is continuous, zero at the origin, saturates at `λ0` beyond `±α`, and
//! satisfies `0 ≤ β ≤ λ0` everywhere on the constraint set — it is the
//! tightest Bregman-expressible minorant of `λ0·1{x≠0}`.
//!
//! The *envelope integrand* `h(x) = β(x) + ψ(x)` is convex; its subgradients
//! drive the criticality test for the full objective. On `ℝ≥0` the
//! subdifferentials at `x = 0` absorb the normal cone `(−∞, 0]` of the
//! constraint, which is why [`SubgradInterval`] allows `lo = −∞` there and
//! only there.

use crate::generator::{BregmanGenerator, ConstraintSet, GeneratorKind, Threshold};
use crate::{Error, Result};

/// A closed interval of subgradients `[lo, hi]` (singleton when `lo == hi`).
///
/// `lo = −∞` occurs only for the nonnegative constraint set at `x = 0`,
/// where the constraint's normal cone joins the subdifferential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubgradInterval {
    /// Lower end (possibly `−∞`).
    pub lo: f64,
    /// Upper end (always finite for these penalties).
    pub hi: f64,
}

impl SubgradInterval {
    /// A singleton `{v}`.
    #[inline]
    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    /// Distance of `z` to the interval (zero when inside).
    #[inline]
    pub fn distance(&self, z: f64) -> f64 {
        (self.lo - z).max(z - self.hi).max(0.0)
    }

    /// Membership up to an absolute tolerance.
    #[inline]
    pub fn contains(&self, z: f64, tol: f64) -> bool {
        self.distance(z) <= tol
    }
}

/// One coordinate's B-rex penalty: generator, threshold, and cached endpoint
/// derivatives.
#[derive(Clone, Copy, Debug)]
pub struct BrexPenalty {
    gen: BregmanGenerator,
    threshold: Threshold,
    /// `ψ'(α)` — the saturation slope, used everywhere downstream.
    dpsi_alpha: f64,
    /// `ψ'(0)` (zero for both provided families, kept general).
    dpsi_zero: f64,
    /// `ψ(0)`.
    psi_zero: f64,
}

impl BrexPenalty {
    /// Builds the penalty by solving the threshold equation `d_ψ(0, α) = λ0`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when `λ0 ≤ 0`.
    pub fn new(gen: BregmanGenerator, lambda0: f64) -> Result<Self> {
        let threshold = gen.solve_alpha(lambda0)?;
        Ok(Self {
            gen,
            threshold,
            dpsi_alpha: gen.deriv_unchecked(threshold.alpha),
            dpsi_zero: gen.deriv_unchecked(0.0),
            psi_zero: gen.value_unchecked(0.0),
        })
    }

    /// The underlying generator.
    #[inline]
    pub fn generator(&self) -> &BregmanGenerator {
        &self.gen
    }

    /// The saturation threshold `α`.
    #[inline]
    pub fn alpha(&self) -> f64 {
        self.threshold.alpha
    }

    /// The regularization weight `λ0`.
    #[inline]
    pub fn lambda0(&self) -> f64 {
        self.threshold.lambda0
    }

    /// The threshold record.
    #[inline]
    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    /// Cached `ψ'(α)`.
    #[inline]
    pub fn dpsi_alpha(&self) -> f64 {
        self.dpsi_alpha
    }

    /// Cached `ψ'(0)` (zero for both built-in families, kept explicit so the
    /// slope *gap* `ψ'(α) − ψ'(0)` is always written as such).
    #[inline]
    pub fn dpsi_zero(&self) -> f64 {
        self.dpsi_zero
    }

    /// The constraint set.
    #[inline]
    pub fn constraint(&self) -> ConstraintSet {
        self.gen.constraint()
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.constraint().contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "penalty argument {x} outside the constraint set {:?}",
                self.constraint()
            )))
        }
    }

    /// `β(x)`.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] when `x ∉ 𝒞`.
    pub fn value(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.value_on_set(x))
    }

    /// `β(x)` with the extended-value convention: `+∞` outside `𝒞`.
    ///
    /// Grid scans and solvers use this to fold the constraint into the
    /// objective instead of branching at every call site.
    #[inline]
    pub fn value_on_set(&self, x: f64) -> f64 {
        if !self.constraint().contains(x) {
            return f64::INFINITY;
        }
        let a = self.threshold.alpha;
        if x.abs() <= a {
            self.psi_zero - self.gen.value_unchecked(x) + x.signum() * self.dpsi_alpha * x
        } else {
            self.threshold.lambda0
        }
    }

    /// `h(x) = β(x) + ψ(x)`, the convex envelope integrand.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] when `x ∉ 𝒞`.
    pub fn h_value(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let a = self.threshold.alpha;
        Ok(if x.abs() <= a {
            self.psi_zero + x.signum() * self.dpsi_alpha * x
        } else {
            self.threshold.lambda0 + self.gen.value_unchecked(x)
        })
    }

    /// Clarke subdifferential `∂β(x)`.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] when `x ∉ 𝒞`.
    pub fn subdiff(&self, x: f64) -> Result<SubgradInterval> {
        self.check_domain(x)?;
        let a = self.threshold.alpha;
        Ok(match self.constraint() {
            ConstraintSet::Reals => {
                if x == 0.0 {
                    SubgradInterval {
                        lo: -self.dpsi_alpha - self.dpsi_zero,
                        hi: self.dpsi_alpha - self.dpsi_zero,
                    }
                } else if x.abs() <= a {
                    SubgradInterval::point(-self.gen.deriv_unchecked(x) + x.signum() * self.dpsi_alpha)
                } else {
                    SubgradInterval::point(0.0)
                }
            }
            ConstraintSet::NonnegReals => {
                if x == 0.0 {
                    // The constraint's normal cone (−∞, 0] joins in.
                    SubgradInterval { lo: f64::NEG_INFINITY, hi: self.dpsi_alpha - self.dpsi_zero }
                } else if x <= a {
                    SubgradInterval::point(-self.gen.deriv_unchecked(x) + self.dpsi_alpha)
                } else {
                    SubgradInterval::point(0.0)
                }
            }
        })
    }

    /// Subdifferential `∂h(x)` of the envelope integrand `h = β + ψ`.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] when `x ∉ 𝒞`.
    pub fn h_subdiff(&self, x: f64) -> Result<SubgradInterval> {
        self.check_domain(x)?;
        let a = self.threshold.alpha;
        Ok(match self.constraint() {
            ConstraintSet::Reals => {
                if x == 0.0 {
                    SubgradInterval { lo: -self.dpsi_alpha, hi: self.dpsi_alpha }
                } else if x.abs() <= a {
                    SubgradInterval::point(x.signum() * self.dpsi_alpha)
                } else {
                    SubgradInterval::point(self.gen.deriv_unchecked(x))
                }
            }
            ConstraintSet::NonnegReals => {
                if x == 0.0 {
                    SubgradInterval { lo: f64::NEG_INFINITY, hi: self.dpsi_alpha }
                } else if x <= a {
                    SubgradInterval::point(self.dpsi_alpha)
                } else {
                    SubgradInterval::point(self.gen.deriv_unchecked(x))
                }
            }
        })
    }

    /// The scalar proximal operator: a global minimizer over `𝒞` of
    ///
    /// ```text
    /// q(t) = (1/(2·step))·(t − v)² + β(t).
    /// ```
    ///
    /// Works by candidate enumeration: `0`, the saturation point `α`, the
    /// inflection of `q` on `(0, α)`, the stationary point of the convex part
    /// of `q|ₗ₀,αₗ` (safeguarded Newton, ≤ 64 iterations, residual ≤ 1e-12,
    /// golden-section fallback), and `v` itself beyond `α`; mirrored for
    /// negative inputs when `𝒞 = ℝ`. Ties break toward smaller `|t|` so the
    /// operator prefers sparser outputs.
    ///
    /// The result always lies in `[min(0, v, −α), max(0, v, α)]`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidParameter`] when `step ≤ 0` or `v` is not finite.
    pub fn prox(&self, step: f64, v: f64) -> Result<f64> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!("prox needs step > 0, got {step}")));
        }
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("prox needs finite v, got {v}")));
        }
        match self.constraint() {
            ConstraintSet::NonnegReals => {
                let (t, _) = self.prox_nonneg_side(step, v);
                Ok(t)
            }
            ConstraintSet::Reals => {
                let (tp, qp) = self.prox_nonneg_side(step, v);
                let (tm, qm) = self.prox_nonneg_side(step, -v);
                let tm = -tm;
                // Prefer strictly smaller objective; on exact ties prefer the
                // smaller magnitude.
                Ok(if qp < qm || (qp == qm && tp.abs() <= tm.abs()) { tp } else { tm })
            }
        }
    }

    /// Minimizes `q` over `t ≥ 0` and returns `(argmin, min)`.
    ///
    /// The piecewise structure of `q` on `[0, ∞)`:
    /// - on `[0, α]`: `q(t) = (t−v)²/(2s) + ψ(0) − ψ(t) + ψ'(α) t`, whose
    ///   curvature `1/s − ψ''(t)` is nondecreasing in `t` for both generator
    ///   families, so `q` is concave-then-convex with at most one inflection;
    ///   the minimum over the segment is at `0`, at the inflection, at `α`,
    ///   or at the unique stationary point inside the convex part;
    /// - on `(α, ∞)`: `q(t) = (t−v)²/(2s) + λ0`, minimized at `max(v, α)`.
    fn prox_nonneg_side(&self, s: f64, v: f64) -> (f64, f64) {
        let a = self.threshold.alpha;
        let q = |t: f64| (t - v) * (t - v) / (2.0 * s) + self.value_on_set(t);

        let mut best_t = 0.0;
        let mut best_q = q(0.0);
        let consider = |t: f64, qt: f64, best_t: &mut f64, best_q: &mut f64| {
            // Ties toward smaller |t|; candidates here are all nonnegative.
            if qt < *best_q || (qt == *best_q && t < *best_t) {
                *best_t = t;
                *best_q = qt;
            }
        };

        consider(a, q(a), &mut best_t, &mut best_q);
        if v > a {
            consider(v, q(v), &mut best_t, &mut best_q);
        }

        // Where the inner piece turns convex: ψ''(t) ≤ 1/s.
        let inv_s = 1.0 / s;
        let t_convex_from = match self.gen.kind() {
            GeneratorKind::Quadratic { gamma } => {
                if inv_s > gamma {
                    0.0 // convex on the whole segment
                } else {
                    a // concave on the whole segment: endpoints only
                }
            }
            GeneratorKind::SmoothedKl { gamma, c, xi } => {
                if self.gen.deriv2_unchecked(0.0) <= inv_s {
                    0.0
                } else if self.gen.deriv2_unchecked(a) >= inv_s {
                    a
                } else {
                    // (c t + ξ)² = s γ c² ξ  ⇒  t = sqrt(s γ ξ) − ξ/c
                    let t_inf = (s * gamma * xi).sqrt() - xi / c;
                    let t_inf = t_inf.clamp(0.0, a);
                    consider(t_inf, q(t_inf), &mut best_t, &mut best_q);
                    t_inf
                }
            }
        };

        if t_convex_from < a {
            // q' is nondecreasing on [t_convex_from, α]; look for its root.
            let qp = |t: f64| (t - v) / s - self.gen.deriv_unchecked(t) + self.dpsi_alpha;
            let qpp = |t: f64| inv_s - self.gen.deriv2_unchecked(t);
            if qp(t_convex_from) <= 0.0 && qp(a) >= 0.0 {
                let scale = (1.0 + v.abs() + a) / s + 2.0 * self.dpsi_alpha.abs() + 1.0;
                match stationary_root(t_convex_from, a, &qp, &qpp, 1e-12 * scale) {
                    Some(root) => consider(root, q(root), &mut best_t, &mut best_q),
                    None => {
                        // Defensive fallback: golden-section on the convex part.
                        let root = golden_section_min(&q, t_convex_from, a);
                        consider(root, q(root), &mut best_t, &mut best_q);
                    }
                }
            }
        }

        (best_t, best_q)
    }
}

/// Safeguarded Newton for `qp = 0` on a bracket where `qp` is nondecreasing
/// with `qp(lo) ≤ 0 ≤ qp(hi)`. Newton steps falling outside the shrinking
/// bracket are replaced by bisection; at most 64 iterations.
fn stationary_root(
    mut lo: f64,
    mut hi: f64,
    qp: &dyn Fn(f64) -> f64,
    qpp: &dyn Fn(f64) -> f64,
    tol: f64,
) -> Option<f64> {
    let mut t = 0.5 * (lo + hi);
    for _ in 0..64 {
        let f = qp(t);
        if f.abs() <= tol {
            return Some(t);
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let curv = qpp(t);
        let newton = if curv > 0.0 { t - f / curv } else { f64::NAN };
        t = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
            return Some(t);
        }
    }
    let f = qp(t);
    if f.abs() <= tol * 10.0 {
        Some(t)
    } else {
        None
    }
}

/// Golden-section minimization of a continuous function on `[lo, hi]`.
fn golden_section_min(q: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut q1 = q(x1);
    let mut q2 = q(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        if q1 <= q2 {
            hi = x2;
            x2 = x1;
            q2 = q1;
            x1 = hi - INV_PHI * (hi - lo);
            q1 = q(x1);
        } else {
            lo = x1;
            x1 = x2;
            q1 = q2;
            x2 = lo + INV_PHI * (hi - lo);
            q2 = q(x2);
        }
    }
    0.5 * (lo + hi)
}
