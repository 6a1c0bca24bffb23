//! Landscape certificates: restricted-curvature constants, safe oracle
//! regions, λ₀ recovery intervals, and the global-optimality check.
//!
//! The chain of reasoning this module mechanizes:
//!
//! 1. **Curvature.** [`lrip_delta`] measures the restricted injectivity of
//!    the operator; [`brsc_ls`] / [`brsc_kl_constructive`] turn it into a
//!    Bregman restricted-strong-convexity (BRSC) constant `C_K`, the rate at
//!    which the data term dominates a reference geometry on sparse
//!    differences. [`brsc_empirical`] estimates the same constant by
//!    sampling, bounding the constructive value from above.
//! 2. **Localization.** [`safe_ball`] and [`kl_region_membership`] describe a
//!    region, computable without the oracle solution, that must contain it.
//! 3. **Recovery intervals.** [`interval_l2`], [`interval_ls`], and
//!    [`interval_kl`] convert the constants into an explicit open interval of
//!    sparsity prices λ₀ for which the oracle-supported solution is the
//!    unique global minimizer; [`carlsson_interval`] is the prior
//!    least-squares bound kept for comparison.
//! 4. **The verdict.** [`global_optimality_check`] evaluates the three
//!    sufficient conditions (region separation, off-support bound, λ₀ floor)
//!    directly on one problem instance, with a deterministic sampling
//!    falsifier backing the analytic separation argument in the KL case.
//!
//! # What can go wrong
//!
//! - Every enumeration is guarded: `K` and `C(N,K)` caps come back as
//!   [`Error::Guard`] before work starts.
//! - A KL problem whose counts are all zero carries no curvature
//!   information: [`Error::NotApplicable`].
//! - Empty intervals are data, not errors: `lower ≥ upper` means "nothing is
//!   certified", and downstream code must check [`LambdaInterval::is_nonempty`].

use crate::fidelity::Fidelity;
use crate::generator::GeneratorKind;
use crate::linalg::{jacobi_eigh, Matrix};
use crate::objective::{Problem, Support};
use crate::solvers::{oracle_solve, OracleSolution};
use crate::{Error, Result};

/// Largest support size the restricted-isometry scan accepts.
const LRIP_MAX_K: usize = 20;

/// Largest number of supports the restricted-isometry scan will visit.
const LRIP_MAX_ENUM: u128 = 2_000_000;

/// Bisection width (relative to the endpoint) at which the scalar sublevel
/// solves stop. The downstream certificates compare λ₀ values of order one,
/// so 1e-12 endpoint accuracy is far below every decision margin.
const SUBLEVEL_TOL: f64 = 1e-12;

/// Number of deterministic samples the KL separation falsifier draws.
const FALSIFICATION_SAMPLES: usize = 100_000;

// ---------------------------------------------------------------------------
// λ₀ intervals
// ---------------------------------------------------------------------------

/// An open interval `(lower, upper)` of certified sparsity prices.
///
/// The interval is nonempty exactly when `lower < upper`; both endpoints are
/// kept even when it is empty, because *how* a certificate fails (floor too
/// high, ceiling collapsed to zero) is diagnostic information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaInterval {
    /// Infimum of certified prices (not itself certified).
    pub lower: f64,
    /// Supremum of certified prices (not itself certified).
    pub upper: f64,
}

impl LambdaInterval {
    /// Whether any price is certified at all.
    #[inline]
    pub fn is_nonempty(&self) -> bool {
        self.lower < self.upper
    }

    /// Whether `lambda0` lies strictly inside.
    #[inline]
    pub fn contains(&self, lambda0: f64) -> bool {
        self.lower < lambda0 && lambda0 < self.upper
    }
}

// ---------------------------------------------------------------------------
// Restricted curvature
// ---------------------------------------------------------------------------

/// How a BRSC constant was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrscProvenance {
    /// Closed form for a strongly convex data term: `ν(1−δ_K⁻)/γ`.
    LeastSquaresClosedForm,
    /// The constructive offset-Burg bound for generalized-KL terms.
    KlConstructive,
    /// Minimum symmetric-divergence ratio over sampled pairs (an upper
    /// bound on the best constant, not a certificate by itself).
    Empirical,
}

/// A restricted-strong-convexity certificate.
///
/// `c_k` is stated relative to the comparison geometry the derivation used
/// (the generator itself for least squares, the offset Burg entropy for KL);
/// `c_k_tilde` restates it relative to the problem's generator `Ψ`, which is
/// what every downstream certificate consumes. For least squares the two
/// coincide.
#[derive(Clone, Debug)]
pub struct BrscCertificate {
    /// Sparse-difference budget `K` the constant is valid for.
    pub k: usize,
    /// Constant relative to the derivation geometry.
    pub c_k: f64,
    /// Constant relative to the generator `Ψ` (use this downstream).
    pub c_k_tilde: f64,
    /// The restricted-isometry constant consumed, when one was.
    pub lrip_delta: Option<f64>,
    /// How the constant was obtained.
    pub provenance: BrscProvenance,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > LRIP_MAX_ENUM {
            return u128::MAX;
        }
    }
    acc
}

/// Lower restricted-isometry constant: `δ_K⁻ = 1 − min_{#ω=K} λ_min(A_ωᵀA_ω)`.
///
/// By eigenvalue interlacing the minimum over supports of size exactly `K`
/// equals the minimum over all supports of size at most `K`. Values can be
/// negative (all restricted Grams better-conditioned than the identity) and
/// exceed one (some restriction is singular); `δ_K⁻ < 1` is what certificates
/// need.
///
/// # Errors
///
/// [`Error::Guard`] when `K > min(N, 20)` or more than 2·10⁶ supports would
/// be visited; [`Error::InvalidParameter`] for `K = 0`.
pub fn lrip_delta(a: &Matrix, k: usize) -> Result<f64> {
    let n = a.cols();
    if k == 0 {
        return Err(Error::InvalidParameter("the restricted-isometry order must be at least 1".into()));
    }
    if k > n.min(LRIP_MAX_K) {
        return Err(Error::Guard(format!(
            "restricted-isometry scan is capped at order min(N, {LRIP_MAX_K}), got K = {k} with N = {n}"
        )));
    }
    if binomial(n, k) > LRIP_MAX_ENUM {
        return Err(Error::Guard(format!(
            "restricted-isometry scan over C({n},{k}) supports exceeds the {LRIP_MAX_ENUM} cap"
        )));
    }
    let mut min_eig = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let sub = a.submatrix_cols(&idx);
        let (evals, _) = jacobi_eigh(&sub.gram())?;
        min_eig = min_eig.min(evals[0]);

        let mut i = k as isize - 1;
        while i >= 0 && idx[i as usize] == i as usize + n - k {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        let i = i as usize;
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(1.0 - min_eig)
}

/// The shared quadratic curvature of a least-squares problem.
fn shared_quadratic_gamma(p: &Problem) -> Result<f64> {
    let mut shared: Option<f64> = None;
    for pen in p.penalties() {
        match pen.generator().kind() {
            GeneratorKind::Quadratic { gamma } => match shared {
                None => shared = Some(gamma),
                Some(g) if g == gamma => {}
                Some(g) => {
                    return Err(Error::InvalidParameter(format!(
                        "this certificate needs one shared curvature, got {g} and {gamma}"
                    )))
                }
            },
            GeneratorKind::SmoothedKl { .. } => {
                return Err(Error::InvalidParameter(
                    "this certificate applies to quadratic generators only".into(),
                ))
            }
        }
    }
    shared.ok_or_else(|| Error::InvalidParameter("the problem has no coordinates".into()))
}

/// The smoothed-KL parameters `(ξ, c, γ)` of a KL problem, with `ξ` shared.
fn kl_params(p: &Problem) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let mut xi_shared: Option<f64> = None;
    let mut c = Vec::with_capacity(p.n());
    let mut gamma = Vec::with_capacity(p.n());
    for pen in p.penalties() {
        match pen.generator().kind() {
            GeneratorKind::SmoothedKl { gamma: g, c: ci, xi } => {
                match xi_shared {
                    None => xi_shared = Some(xi),
                    Some(x) if x == xi => {}
                    Some(x) => {
                        return Err(Error::InvalidParameter(format!(
                            "KL landscape certificates need one shared ξ, got {x} and {xi}"
                        )))
                    }
                }
                c.push(ci);
                gamma.push(g);
            }
            GeneratorKind::Quadratic { .. } => {
                return Err(Error::InvalidParameter(
                    "this certificate applies to smoothed-KL generators only".into(),
                ))
            }
        }
    }
    let xi = xi_shared.ok_or_else(|| Error::InvalidParameter("the problem has no coordinates".into()))?;
    Ok((xi, c, gamma))
}

/// BRSC constant for a strongly convex data term: `C_K = ν(1−δ_K⁻)/γ`,
/// floored at zero when `δ_K⁻ ≥ 1`.
///
/// With a shared quadratic generator the derivation geometry *is* `Ψ`, so
/// `c_k == c_k_tilde`.
///
/// # Errors
///
/// [`Error::NotApplicable`] for a KL data term (its strong-convexity modulus
/// is zero, so this route certifies nothing); propagates [`lrip_delta`]
/// guards.
pub fn brsc_ls(p: &Problem, k: usize) -> Result<BrscCertificate> {
    if !matches!(p.fidelity(), Fidelity::LeastSquares { .. }) {
        return Err(Error::NotApplicable(
            "the closed-form certificate needs a strongly convex data term; \
             use the constructive KL certificate instead"
                .into(),
        ));
    }
    let gamma = shared_quadratic_gamma(p)?;
    let delta = lrip_delta(p.a(), k)?;
    let c = if delta >= 1.0 { 0.0 } else { p.fidelity().nu() * (1.0 - delta) / gamma };
    Ok(BrscCertificate {
        k,
        c_k: c,
        c_k_tilde: c,
        lrip_delta: Some(delta),
        provenance: BrscProvenance::LeastSquaresClosedForm,
    })
}

/// Constructive BRSC constant for a generalized-KL data term on the box
/// `X = [0, Q]^N`, relative to the offset Burg entropy with offsets
/// `η_i = ξ/c_i`.
///
/// Writing `Ã` for the rows of `A` with a nonzero count, `δ = δ_K⁻(Ã)`,
/// `D = ‖Ã·(Q·1) + b_{σ(y)}‖₂`, `B = 4√K·Q`, `η̲ = min_i η_i`, and
/// `δ₅ = 9KQ²/η̲`:
///
/// ```text
/// C_K = (min_j y_j / D) · (1 − δ) · η̲ ·
///       min{ η̲ / (‖Ã‖₂B + D),  (3/16)·B² / ((‖Ã‖₂B + D)(√K·B + δ₅)) }
/// ```
///
/// and the generator-relative constant is `C̃_K = C_K / (ξ·max_i γ_i)`.
/// `δ ≥ 1` yields a zero certificate rather than an error.
///
/// # Errors
///
/// [`Error::NotApplicable`] when every count is zero; propagates
/// [`lrip_delta`] guards and parameter validation.
pub fn brsc_kl_constructive(p: &Problem, k: usize, q: f64) -> Result<BrscCertificate> {
    let (y, b) = match p.fidelity() {
        Fidelity::GenKl { y, b } => (y, b),
        _ => {
            return Err(Error::NotApplicable(
                "the constructive certificate applies to generalized-KL data terms".into(),
            ))
        }
    };
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("the box bound Q must be strictly positive, got {q}")));
    }
    let (xi, c, gamma) = kl_params(p)?;
    let sigma_y: Vec<usize> = (0..y.len()).filter(|&j| y[j] > 0.0).collect();
    if sigma_y.is_empty() {
        return Err(Error::NotApplicable(
            "every count is zero, so the data term carries no curvature information".into(),
        ));
    }
    let a_tilde = p.a().submatrix_rows(&sigma_y);
    let delta = lrip_delta(&a_tilde, k)?;
    if delta >= 1.0 {
        return Ok(BrscCertificate {
            k,
            c_k: 0.0,
            c_k_tilde: 0.0,
            lrip_delta: Some(delta),
            provenance: BrscProvenance::KlConstructive,
        });
    }

    // D = max over the box of ‖Ãx + b_σ(y)‖₂, attained at x = Q·1 since
    // everything is entrywise nonnegative.
    let ones_q = vec![q; p.n()];
    let ax = a_tilde.matvec(&ones_q);
    let d: f64 = ax
        .iter()
        .zip(sigma_y.iter().map(|&j| b[j]))
        .map(|(axj, bj)| (axj + bj).powi(2))
        .sum::<f64>()
        .sqrt();
    let min_y = sigma_y.iter().map(|&j| y[j]).fold(f64::INFINITY, f64::min);
    let delta1 = min_y / d;
    let delta2 = d;
    let min_eta = c.iter().map(|ci| xi / ci).fold(f64::INFINITY, f64::min);
    let kf = k as f64;
    let big_b = 4.0 * kf.sqrt() * q;
    let delta5 = 9.0 * kf * q * q / min_eta;
    let op = a_tilde.spectral_norm();
    let near = min_eta / (op * big_b + delta2);
    let far = (3.0 / 16.0) * big_b * big_b / ((op * big_b + delta2) * (kf.sqrt() * big_b + delta5));
    let c_k = delta1 * (1.0 - delta) * min_eta * near.min(far);
    let max_gamma = gamma.iter().copied().fold(0.0_f64, f64::max);
    Ok(BrscCertificate {
        k,
        c_k,
        c_k_tilde: c_k / (xi * max_gamma),
        lrip_delta: Some(delta),
        provenance: BrscProvenance::KlConstructive,
    })
}

// ---------------------------------------------------------------------------
// Deterministic low-discrepancy sampling
// ---------------------------------------------------------------------------

/// Additive recurrence (Kronecker/Weyl) lattice in `[0,1)^d`, driven by the
/// inverse powers of the d-dimensional plastic constant. Deterministic,
/// dependency-free, and far better distributed than a grid at equal count.
pub(crate) struct WeylLattice {
    alphas: Vec<f64>,
    state: Vec<f64>,
}

impl WeylLattice {
    pub(crate) fn new(dim: usize) -> Self {
        // The unique real root of x^{d+1} = x + 1, by the (contractive)
        // fixed-point iteration x ← (1+x)^{1/(d+1)}.
        let mut g = 1.5_f64;
        for _ in 0..128 {
            g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
        }
        let alphas = (1..=dim).map(|j| (1.0 / g).powi(j as i32).fract()).collect();
        WeylLattice { alphas, state: vec![0.5; dim] }
    }

    /// Advance and expose the next point.
    pub(crate) fn next_point(&mut self) -> &[f64] {
        for (s, a) in self.state.iter_mut().zip(&self.alphas) {
            *s = (*s + *a).fract();
        }
        &self.state
    }
}

/// Indices of the `k` largest entries of `vals` (a deterministic way to turn
/// a lattice block into a support pattern).
fn top_k_indices(vals: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).expect("lattice points are finite"));
    let mut sel: Vec<usize> = order.into_iter().take(k).collect();
    sel.sort_unstable();
    sel
}

/// The denominator geometry an empirical BRSC estimator measures against:
/// the derivation geometry `Φ` and the generator `Ψ` share the same pairwise
/// kernel, differing only by the per-coordinate weights.
enum RatioGeometry {
    Quadratic { gamma: f64 },
    Burg { eta: Vec<f64>, xi: f64, gamma: Vec<f64> },
}

/// Per-pair ratio evaluation shared by the empirical BRSC estimators: the
/// estimators differ only in where their sample pairs come from, never in
/// how a pair is measured.
struct RatioEngine {
    geometry: RatioGeometry,
    w: Vec<f64>,
    w2: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl RatioEngine {
    fn new(p: &Problem) -> Result<Self> {
        let geometry = match p.fidelity() {
            Fidelity::LeastSquares { .. } => {
                RatioGeometry::Quadratic { gamma: shared_quadratic_gamma(p)? }
            }
            Fidelity::GenKl { .. } => {
                let (xi, c, gamma) = kl_params(p)?;
                RatioGeometry::Burg { eta: c.iter().map(|ci| xi / ci).collect(), xi, gamma }
            }
        };
        let m = p.m();
        Ok(RatioEngine {
            geometry,
            w: vec![0.0; m],
            w2: vec![0.0; m],
            g1: vec![0.0; m],
            g2: vec![0.0; m],
        })
    }

    /// `(D_F/D_Φ, D_F/D_Ψ)` for one pair, or `None` when the denominators are
    /// too degenerate to divide by.
    fn ratios(&mut self, p: &Problem, x: &[f64], x2: &[f64]) -> Result<Option<(f64, f64)>> {
        let (d_phi, d_psi): (f64, f64) = match &self.geometry {
            RatioGeometry::Quadratic { gamma } => {
                let d: f64 = x.iter().zip(x2).map(|(a, b)| gamma * (a - b) * (a - b)).sum();
                (d, d)
            }
            RatioGeometry::Burg { eta, xi, gamma } => {
                let mut d_phi = 0.0;
                let mut d_psi = 0.0;
                for i in 0..x.len() {
                    let t =
                        (x[i] - x2[i]) * (x[i] - x2[i]) / ((x[i] + eta[i]) * (x2[i] + eta[i]));
                    d_phi += t;
                    d_psi += gamma[i] * xi * t;
                }
                (d_phi, d_psi)
            }
        };
        if !(d_phi > 1e-300 && d_psi > 1e-300) {
            return Ok(None);
        }
        p.a().matvec_into(x, &mut self.w);
        p.a().matvec_into(x2, &mut self.w2);
        p.fidelity().grad_into(&self.w, &mut self.g1)?;
        p.fidelity().grad_into(&self.w2, &mut self.g2)?;
        let mut d_f = 0.0;
        for j in 0..self.w.len() {
            d_f += (self.g1[j] - self.g2[j]) * (self.w[j] - self.w2[j]);
        }
        Ok(Some((d_f / d_phi, d_f / d_psi)))
    }
}

/// Empirical BRSC constant: the minimum symmetric-divergence ratio
/// `D_F / D_Φ` over `pairs` deterministically sampled pairs `(x, x')` with
/// `x` in the box of radius `Q`, `x'` differing on at most `K` coordinates
/// (probed out to `5Q`).
///
/// Both ratios are measured directly per pair: `c_k` against the derivation
/// geometry `Φ` (offset Burg for KL, the quadratic generator for least
/// squares) and `c_k_tilde` against the generator `Ψ` itself — avoiding the
/// lossy `C/(ξ·max γ)` conversion the constructive KL route must take.
///
/// This estimates the best possible constants **from above**: any
/// constructive certificate must come in at or below it.
///
/// # Errors
///
/// [`Error::InvalidParameter`] on non-positive `q`, `k`, or `pairs`.
pub fn brsc_empirical(p: &Problem, k: usize, q: f64, pairs: usize) -> Result<BrscCertificate> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("the box bound Q must be strictly positive, got {q}")));
    }
    if k == 0 || k > p.n() {
        return Err(Error::InvalidParameter(format!(
            "the sparse-difference budget must be in 1..=N, got {k} with N = {}",
            p.n()
        )));
    }
    if pairs == 0 {
        return Err(Error::InvalidParameter("at least one sampled pair is required".into()));
    }
    let n = p.n();
    let signed = p.constraint() == crate::generator::ConstraintSet::Reals;

    let mut engine = RatioEngine::new(p)?;
    let mut lattice = WeylLattice::new(2 * n);
    let mut best_phi = f64::INFINITY;
    let mut best_psi = f64::INFINITY;
    let mut kept = 0usize;
    let mut attempts = 0usize;
    while kept < pairs && attempts < 4 * pairs + 16 {
        attempts += 1;
        let pt = lattice.next_point();
        let (u_block, v_block) = pt.split_at(n);
        let x: Vec<f64> = u_block
            .iter()
            .map(|&u| if signed { (2.0 * u - 1.0) * q } else { u * q })
            .collect();
        let support = top_k_indices(v_block, k);
        let mut x2 = x.clone();
        for &i in &support {
            let u = v_block[i];
            x2[i] = if signed { (2.0 * u - 1.0) * 5.0 * q } else { u * 5.0 * q };
        }

        if let Some((r_phi, r_psi)) = engine.ratios(p, &x, &x2)? {
            best_phi = best_phi.min(r_phi);
            best_psi = best_psi.min(r_psi);
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::Numerical("no usable sample pairs were produced".into()));
    }
    Ok(BrscCertificate {
        k,
        c_k: best_phi,
        c_k_tilde: best_psi,
        lrip_delta: None,
        provenance: BrscProvenance::Empirical,
    })
}

/// Largest step in direction `toward` from the inside point `inside` at which
/// the axis map stays within `level`, located by bisection once `outside`
/// violates it. `misfit` must be quasi-convex along the axis (true of
/// restricted data misfits, which are convex in each coordinate).
fn bisect_sublevel_boundary(
    mut misfit: impl FnMut(f64) -> f64,
    level: f64,
    mut inside: f64,
    mut outside: f64,
) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (inside + outside);
        if misfit(mid) <= level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Empirical BRSC constants measured on the oracle region: the set of
/// vectors supported on `σ(x*)` whose data misfit does not exceed the misfit
/// of `x*` itself. This is the region the recovery guarantees actually
/// quantify over, and it is dramatically smaller than any box containing it,
/// so the sampled constants are correspondingly larger — box infima collapse
/// along distant rays the recovery argument never visits.
///
/// Sample pairs differ on at most `k* = |σ(x*)|` coordinates by
/// construction, so they are admissible for any sparse-difference budget
/// `k ≥ k*` (enforced). Sampling is deterministic: a Weyl lattice fills the
/// axis-aligned bounding box of the region (its per-coordinate extent
/// through `x*` is found by bisection on the restricted misfit), and for
/// supports with more than one coordinate a rejection step keeps every
/// retained pair inside the region proper.
///
/// Like [`brsc_empirical`], the minimum sampled ratio estimates the region's
/// true constants **from above**; certificates built on it should be
/// cross-checked downstream (the recovery harness does so by brute force).
///
/// # Errors
///
/// [`Error::InvalidParameter`] on an empty true support, `k < |σ(x*)|`,
/// `k ∉ 1..=N`, or zero `pairs`; [`Error::Numerical`] when the misfit
/// sublevel set is unbounded along a support axis or no usable pair
/// survives sampling.
pub fn brsc_empirical_oracle_region(
    p: &Problem,
    x_star: &[f64],
    k: usize,
    pairs: usize,
) -> Result<BrscCertificate> {
    if k == 0 || k > p.n() {
        return Err(Error::InvalidParameter(format!(
            "the sparse-difference budget must be in 1..=N, got {k} with N = {}",
            p.n()
        )));
    }
    if pairs == 0 {
        return Err(Error::InvalidParameter("at least one sampled pair is required".into()));
    }
    let (sigma, u_star) = true_support_of(p, x_star)?;
    let k_star = sigma.len();
    if k < k_star {
        return Err(Error::InvalidParameter(format!(
            "region samples differ on up to {k_star} coordinates, exceeding the budget K = {k}"
        )));
    }
    let signed = p.constraint() == crate::generator::ConstraintSet::Reals;
    let level = p.fidelity().value(&p.a().matvec(x_star))?;

    // Axis-aligned extent of the misfit sublevel set through x*, one support
    // coordinate at a time. Each axis section is an interval containing the
    // corresponding entry of x*, bracketed by doubling and then bisected.
    let mut lo = vec![0.0; k_star];
    let mut hi = vec![0.0; k_star];
    let mut probe = x_star.to_vec();
    for (j, &i) in sigma.indices().iter().enumerate() {
        let u = u_star[j];
        let mut axis = |t: f64| -> f64 {
            probe[i] = t;
            // Leaving the fidelity domain certainly leaves the sublevel set.
            p.fidelity().value(&p.a().matvec(&probe)).unwrap_or(f64::INFINITY)
        };
        let mut edge = |upward: bool| -> Result<f64> {
            let mut inside = u;
            let mut step = 1.0 + u.abs();
            loop {
                let t = if upward { inside + step } else { inside - step };
                if !(axis(t) <= level) {
                    return Ok(bisect_sublevel_boundary(&mut axis, level, inside, t));
                }
                inside = t;
                step *= 2.0;
                if !step.is_finite() {
                    return Err(Error::Numerical(format!(
                        "the misfit sublevel set through coordinate {i} is unbounded; \
                         the oracle region cannot be sampled"
                    )));
                }
            }
        };
        hi[j] = edge(true)?;
        lo[j] = if signed {
            edge(false)?
        } else if axis(0.0) <= level {
            0.0
        } else {
            bisect_sublevel_boundary(&mut axis, level, u, 0.0)
        };
        probe[i] = x_star[i];
    }

    let mut engine = RatioEngine::new(p)?;
    let mut lattice = WeylLattice::new(2 * k_star);
    let mut x = vec![0.0; p.n()];
    let mut x2 = vec![0.0; p.n()];
    let mut best_phi = f64::INFINITY;
    let mut best_psi = f64::INFINITY;
    let mut kept = 0usize;
    let mut attempts = 0usize;
    while kept < pairs && attempts < 16 * pairs + 64 {
        attempts += 1;
        let pt = lattice.next_point();
        let (ua, ub) = pt.split_at(k_star);
        for (j, &i) in sigma.indices().iter().enumerate() {
            x[i] = lo[j] + (hi[j] - lo[j]) * ua[j];
            x2[i] = lo[j] + (hi[j] - lo[j]) * ub[j];
        }
        // A one-coordinate box is exactly the region; larger supports need a
        // rejection step because the box can overshoot the sublevel set.
        if k_star > 1
            && (!(p.fidelity().value(&p.a().matvec(&x))? <= level)
                || !(p.fidelity().value(&p.a().matvec(&x2))? <= level))
        {
            continue;
        }
        if let Some((r_phi, r_psi)) = engine.ratios(p, &x, &x2)? {
            best_phi = best_phi.min(r_phi);
            best_psi = best_psi.min(r_psi);
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::Numerical("no usable sample pairs were produced".into()));
    }
    Ok(BrscCertificate {
        k,
        c_k: best_phi,
        c_k_tilde: best_psi,
        lrip_delta: None,
        provenance: BrscProvenance::Empirical,
    })
}

// ---------------------------------------------------------------------------
// Safe oracle regions
// ---------------------------------------------------------------------------

/// A region on the true support guaranteed to contain the oracle solution,
/// described without solving for it.
#[derive(Clone, Debug)]
pub enum SafeRegion {
    /// Euclidean ball (quadratic generators): center `u*`, radius
    /// `√(2F(x*)/(γ·C_K))`.
    Ball {
        /// True amplitudes on the support.
        center: Vec<f64>,
        /// Ball radius.
        radius: f64,
    },
    /// Smoothed-KL sublevel region: points `u` with
    /// `Σ_j γ_j·g₁((c_j u*_j + ξ)/(c_j u_j + ξ)) ≤ F(x*)/(ξ·C̃_K)`, where
    /// `g₁(t) = t − ln t − 1`.
    KlSublevel {
        /// True amplitudes on the support.
        u_star: Vec<f64>,
        /// Generator curvatures on the support.
        gammas: Vec<f64>,
        /// Generator slopes on the support.
        cs: Vec<f64>,
        /// Shared generator offset.
        xi: f64,
        /// Sublevel height `F(x*)/(ξ·C̃_K)`.
        height: f64,
    },
}

impl SafeRegion {
    /// Whether `u` (length `k*`) lies in the region.
    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            SafeRegion::Ball { center, radius } => {
                let dist_sq: f64 = u.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                dist_sq.sqrt() <= *radius
            }
            SafeRegion::KlSublevel { u_star, gammas, cs, xi, height } => {
                let mut acc = 0.0;
                for j in 0..u_star.len() {
                    let t = (cs[j] * u_star[j] + xi) / (cs[j] * u[j] + xi);
                    acc += gammas[j] * (t - t.ln() - 1.0);
                }
                acc <= *height
            }
        }
    }
}

/// Dimension/feasibility checks shared by the region builders.
fn true_support_of(p: &Problem, x_star: &[f64]) -> Result<(Support, Vec<f64>)> {
    if x_star.len() != p.n() {
        return Err(Error::InvalidParameter(format!(
            "the true vector has length {}, expected {}",
            x_star.len(),
            p.n()
        )));
    }
    if !p.is_feasible(x_star) {
        return Err(Error::InvalidParameter("the true vector violates the constraint set".into()));
    }
    let sigma = Support::of_vector(x_star);
    if sigma.is_empty() {
        return Err(Error::InvalidParameter("the true vector has empty support".into()));
    }
    let u = sigma.restrict(x_star);
    Ok((sigma, u))
}

/// The Euclidean safe oracle region of a quadratic-generator problem:
/// `B(u*, √(2F(x*)/(γ·C_K)))`.
///
/// # Errors
///
/// [`Error::InvalidParameter`] when `c_k ≤ 0` (no curvature, the region
/// would be all of space) or the problem does not have a shared quadratic
/// generator.
pub fn safe_ball(p: &Problem, x_star: &[f64], c_k: f64) -> Result<SafeRegion> {
    if !(c_k > 0.0 && c_k.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "a strictly positive curvature constant is required, got {c_k}"
        )));
    }
    let gamma = shared_quadratic_gamma(p)?;
    let (_, u_star) = true_support_of(p, x_star)?;
    let f_star = p.fidelity_of(x_star)?;
    Ok(SafeRegion::Ball { center: u_star, radius: (2.0 * f_star / (gamma * c_k)).sqrt() })
}

/// Build the smoothed-KL safe oracle region of a KL problem.
fn kl_safe_region(p: &Problem, x_star: &[f64], c_k_tilde: f64) -> Result<SafeRegion> {
    if !(c_k_tilde > 0.0 && c_k_tilde.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "a strictly positive curvature constant is required, got {c_k_tilde}"
        )));
    }
    let (xi, c, gamma) = kl_params(p)?;
    let (sigma, u_star) = true_support_of(p, x_star)?;
    let f_star = p.fidelity_of(x_star)?;
    let idx = sigma.indices();
    Ok(SafeRegion::KlSublevel {
        u_star,
        gammas: idx.iter().map(|&i| gamma[i]).collect(),
        cs: idx.iter().map(|&i| c[i]).collect(),
        xi,
        height: f_star / (xi * c_k_tilde),
    })
}

/// Whether `u` lies in the smoothed-KL safe oracle region of this problem.
///
/// # Errors
///
/// [`Error::InvalidParameter`] on dimension mismatches or a non-positive
/// constant; the problem must use smoothed-KL generators.
pub fn kl_region_membership(p: &Problem, x_star: &[f64], c_k_tilde: f64, u: &[f64]) -> Result<bool> {
    let region = kl_safe_region(p, x_star, c_k_tilde)?;
    let k_star = match &region {
        SafeRegion::KlSublevel { u_star, .. } => u_star.len(),
        SafeRegion::Ball { .. } => unreachable!("kl_safe_region builds sublevel regions"),
    };
    if u.len() != k_star {
        return Err(Error::InvalidParameter(format!(
            "the candidate has length {}, expected the support size {k_star}",
            u.len()
        )));
    }
    Ok(region.contains(u))
}

// ---------------------------------------------------------------------------
// Scalar sublevel solves and the KL noise functional
// ---------------------------------------------------------------------------

/// Largest `t ≥ 1` with `t − ln t − 1 ≤ height` (the right endpoint of the
/// Burg-distance sublevel set).
///
/// # Errors
///
/// [`Error::InvalidParameter`] for a negative or non-finite height.
pub fn g1kl_sublevel_upper(height: f64) -> Result<f64> {
    if !(height >= 0.0 && height.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "the sublevel height must be finite and nonnegative, got {height}"
        )));
    }
    if height == 0.0 {
        return Ok(1.0);
    }
    let g = |t: f64| t - t.ln() - 1.0;
    let mut hi = 2.0;
    while g(hi) <= height {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical("sublevel endpoint overflowed".into()));
        }
    }
    let mut lo = 1.0;
    while hi - lo > SUBLEVEL_TOL * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= height {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest `t ∈ (0, 1]` with `t − ln t − 1 ≤ height` (the left endpoint of
/// the Burg-distance sublevel set).
fn g1kl_sublevel_lower(height: f64) -> Result<f64> {
    if !(height >= 0.0 && height.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "the sublevel height must be finite and nonnegative, got {height}"
        )));
    }
    if height == 0.0 {
        return Ok(1.0);
    }
    let g = |t: f64| t - t.ln() - 1.0;
    let mut lo = 0.5;
    while g(lo) <= height {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Numerical("sublevel endpoint underflowed".into()));
        }
    }
    let mut hi = 1.0;
    while hi - lo > SUBLEVEL_TOL * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= height {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The worst-case KL misfit at noise level `eps` and smallest true amplitude
/// `amplitude`:
///
/// ```text
/// f(ε, x) = Σ_j (a_j·x + b_j + ε)·ln((a_j·x + b_j + ε)/(a_j·x + b_j)) − ε,
/// a_j = Σ_{i∈σ*} a_ji.
/// ```
///
/// It upper-bounds `F(x*)` over all noise realizations with `‖ε‖_∞ ≤ eps`
/// and all true vectors with amplitudes at least `amplitude` on `σ*`, and
/// decreases in `amplitude`, vanishing as `eps → 0`.
///
/// # Errors
///
/// [`Error::InvalidParameter`] on negative arguments, shape mismatch, or an
/// operator with negative entries.
pub fn f_kl(a: &Matrix, b: &[f64], sigma_star: &Support, eps: f64, amplitude: f64) -> Result<f64> {
    if !(eps >= 0.0 && eps.is_finite()) || !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise level and amplitude must be finite and nonnegative, got {eps} and {amplitude}"
        )));
    }
    if b.len() != a.rows() {
        return Err(Error::InvalidParameter(format!(
            "background has length {}, expected {} rows",
            b.len(),
            a.rows()
        )));
    }
    if !a.is_entrywise_nonneg() {
        return Err(Error::InvalidParameter("the KL misfit needs an entrywise nonnegative operator".into()));
    }
    if let Some(&last) = sigma_star.indices().last() {
        if last >= a.cols() {
            return Err(Error::InvalidParameter(format!(
                "support index {last} is out of range for {} columns",
                a.cols()
            )));
        }
    }
    let mut acc = 0.0;
    for j in 0..a.rows() {
        if b[j] <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "background component {j} must be strictly positive, got {}",
                b[j]
            )));
        }
        let aj: f64 = sigma_star.indices().iter().map(|&i| a.get(j, i)).sum();
        let z = aj * amplitude + b[j];
        acc += (z + eps) * (eps / z).ln_1p() - eps;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// λ₀ recovery intervals
// ---------------------------------------------------------------------------

/// Oracle-recovery interval for quadratic generators and any data term with
/// descent constant `L̃`:
///
/// ```text
/// Λ̲ = F(x*)·max{ L̃·max_{i∉σ*}‖a_i‖² / (γ·min{C_K²,1}),  1/(1+K−2k*) }
/// Λ̄ = (γ/2)·min{C_K²,1}·(min_{i∈σ*}|x*_i| − √(2F(x*)/(γ·C_K)))²   (0 if the base is negative)
/// ```
///
/// # Errors
///
/// [`Error::InvalidParameter`] when `c_k ≤ 0`, `K < 2k*`, the true support
/// is empty, or the problem is not quadratic-generated.
pub fn interval_l2(p: &Problem, x_star: &[f64], c_k: f64, k: usize) -> Result<LambdaInterval> {
    if !(c_k > 0.0 && c_k.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "a strictly positive curvature constant is required, got {c_k}"
        )));
    }
    let gamma = shared_quadratic_gamma(p)?;
    let (sigma, u_star) = true_support_of(p, x_star)?;
    let k_star = sigma.len();
    if k < 2 * k_star {
        return Err(Error::InvalidParameter(format!(
            "the sparse-difference budget {k} must be at least twice the true support size {k_star}"
        )));
    }
    let f_star = p.fidelity_of(x_star)?;
    let l_tilde = p.lipschitz().l_tilde;
    let cksq = (c_k * c_k).min(1.0);

    let max_off: f64 = (0..p.n())
        .filter(|i| !sigma.contains(*i))
        .map(|i| p.a().col_norm_sq(i))
        .fold(0.0, f64::max);
    let lower = f_star * (l_tilde * max_off / (gamma * cksq)).max(1.0 / (1.0 + k as f64 - 2.0 * k_star as f64));

    let min_amp = u_star.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let base = min_amp - (2.0 * f_star / (gamma * c_k)).sqrt();
    let upper = if base > 0.0 { 0.5 * gamma * cksq * base * base } else { 0.0 };
    Ok(LambdaInterval { lower, upper })
}

/// The least-squares recovery interval as a pure formula of summary
/// statistics — the core of [`interval_ls`], exposed for sweeps that control
/// the statistics directly:
///
/// ```text
/// Λ̲ = ‖ε‖² / (2·min{(1−δ)²,1})
/// Λ̄ = (min{(1−δ)²,1}/2)·(min|x*_i| − ‖ε‖/√(1−δ))²   (0 if the base is negative)
/// ```
///
/// `δ ≥ 1` yields the empty interval `(+∞, 0)`.
///
/// # Errors
///
/// [`Error::InvalidParameter`] on negative amplitude/noise, non-finite
/// inputs, or `K < 2k*`.
pub fn interval_ls_from_stats(
    min_amplitude: f64,
    eps_norm: f64,
    delta: f64,
    k: usize,
    k_star: usize,
) -> Result<LambdaInterval> {
    if !(min_amplitude >= 0.0 && min_amplitude.is_finite())
        || !(eps_norm >= 0.0 && eps_norm.is_finite())
        || !delta.is_finite()
    {
        return Err(Error::InvalidParameter(format!(
            "need finite nonnegative amplitude/noise and a finite δ, got {min_amplitude}, {eps_norm}, {delta}"
        )));
    }
    if k < 2 * k_star {
        return Err(Error::InvalidParameter(format!(
            "the sparse-difference budget {k} must be at least twice the true support size {k_star}"
        )));
    }
    if delta >= 1.0 {
        return Ok(LambdaInterval { lower: f64::INFINITY, upper: 0.0 });
    }
    let shrink = ((1.0 - delta) * (1.0 - delta)).min(1.0);
    let lower = eps_norm * eps_norm / (2.0 * shrink);
    let base = min_amplitude - eps_norm / (1.0 - delta).sqrt();
    let upper = if base > 0.0 { 0.5 * shrink * base * base } else { 0.0 };
    Ok(LambdaInterval { lower, upper })
}

/// Oracle-recovery interval for the normalized least-squares setting
/// (`γ = 1`, every column norm strictly below 1), in terms of the
/// restricted-isometry constant `δ = δ_K⁻` — see [`interval_ls_from_stats`]
/// for the formula.
///
/// # Errors
///
/// [`Error::InvalidParameter`] when the problem is not least-squares with
/// `γ = 1`, a column norm reaches 1, the true support is empty, or
/// `K < 2k*`.
pub fn interval_ls(p: &Problem, x_star: &[f64], delta: f64, k: usize) -> Result<LambdaInterval> {
    if !matches!(p.fidelity(), Fidelity::LeastSquares { .. }) {
        return Err(Error::InvalidParameter(
            "this interval applies to least-squares problems".into(),
        ));
    }
    let gamma = shared_quadratic_gamma(p)?;
    if gamma != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "this interval is stated for curvature γ = 1, got {gamma}"
        )));
    }
    for i in 0..p.n() {
        if p.a().col_norm_sq(i) >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "column {i} has norm ≥ 1; rescale the operator first"
            )));
        }
    }
    let (sigma, u_star) = true_support_of(p, x_star)?;
    let y = match p.fidelity() {
        Fidelity::LeastSquares { y } => y,
        _ => unreachable!(),
    };
    let ax = p.a().matvec(x_star);
    let eps_norm: f64 = y.iter().zip(&ax).map(|(yj, axj)| (yj - axj) * (yj - axj)).sum::<f64>().sqrt();
    let min_amp = u_star.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    interval_ls_from_stats(min_amp, eps_norm, delta, k, sigma.len())
}

/// The prior least-squares interval this work improves on:
///
/// ```text
/// ( ‖ε‖²/(2(1−δ)²),  ((1−δ)²/(2(2−δ)²))·min|x*_i|² )
/// ```
///
/// `δ ≥ 1` yields the empty interval `(+∞, 0)`.
///
/// # Errors
///
/// [`Error::InvalidParameter`] on negative or non-finite arguments.
pub fn carlsson_interval(min_amplitude: f64, eps_norm: f64, delta: f64) -> Result<LambdaInterval> {
    if !(min_amplitude >= 0.0 && min_amplitude.is_finite())
        || !(eps_norm >= 0.0 && eps_norm.is_finite())
        || !delta.is_finite()
    {
        return Err(Error::InvalidParameter(format!(
            "need finite nonnegative amplitude/noise and a finite δ, got {min_amplitude}, {eps_norm}, {delta}"
        )));
    }
    if delta >= 1.0 {
        return Ok(LambdaInterval { lower: f64::INFINITY, upper: 0.0 });
    }
    let one_minus = 1.0 - delta;
    let lower = eps_norm * eps_norm / (2.0 * one_minus * one_minus);
    let upper = one_minus * one_minus / (2.0 * (2.0 - delta) * (2.0 - delta)) * min_amplitude * min_amplitude;
    Ok(LambdaInterval { lower, upper })
}

/// Which curvature regime a certificate operates in: the separation geometry
/// differs across `C̃_K > 1` and `C̃_K ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkRegime {
    /// `C̃_K > 1`: the isolation band is empty and the weaker on-support
    /// separation suffices.
    AboveOne,
    /// `C̃_K ≤ 1`: the strengthened (band-widened) separation is required.
    AtMostOne,
}

/// Intermediate quantities of [`interval_kl`], kept for diagnostics and
/// tests.
#[derive(Clone, Debug)]
pub struct KlIntervalWork {
    /// The noise-functional value `f(‖ε‖_∞, min amplitude)` the bounds used.
    pub f_bound: f64,
    /// Which branch the upper bound used.
    pub regime: CkRegime,
    /// Per-support-coordinate sublevel heights `f/(γ_j·ξ·C̃_K)`.
    pub heights: Vec<f64>,
    /// Per-support-coordinate sublevel right endpoints `E_j`.
    pub sublevel_upper: Vec<f64>,
    /// `E_j` rescaled: `ξE_j/(c_j u*_j + ξ)` below one, `E_j/(c_j u*_j + ξ)`
    /// at or above one.
    pub scaled: Vec<f64>,
    /// The inverse-map evaluations bounding each `α_j`.
    pub g_inverse: Vec<f64>,
    /// The per-coordinate exponents `h_j ∈ [−1, 0)`.
    pub h: Vec<f64>,
    /// Per-support-coordinate upper-bound candidates.
    pub upper_candidates: Vec<f64>,
    /// Per-off-support-coordinate lower-bound candidates (`+∞` when the
    /// off-support condition is infeasible at any price).
    pub lower_off_support: Vec<f64>,
}

/// Oracle-recovery interval for generalized-KL problems with smoothed-KL
/// generators, in terms of the generator-relative constant `C̃_K`:
///
/// ```text
/// Λ̲ = max{ f/(1+K−2k*),  max_{i∉σ*} −γ_i·ξ·ln(1 − ‖a_i‖√(2·L̃·f)/(min{C̃_K,1}·γ_i·c_i)) }
/// Λ̄ = min_{i∈σ*} −γ_i·ξ·(ln(1 − e^{h_i}) + 1)
/// ```
///
/// where `f` is the [`f_kl`] bound at the given noise level and the
/// smallest true amplitude, and the exponents `h_i` come from inverting the
/// separation geometry on the safe region (two branches, by regime). A
/// non-positive logarithm argument in `Λ̲` means the off-support condition
/// fails at every price: the lower bound is `+∞` and the interval is empty.
///
/// # Errors
///
/// [`Error::InvalidParameter`] when the problem is not KL, `c_k_tilde ≤ 0`,
/// the true support is empty, or `K < 2k*`.
pub fn interval_kl(
    p: &Problem,
    x_star: &[f64],
    eps_inf: f64,
    c_k_tilde: f64,
    k: usize,
) -> Result<(LambdaInterval, KlIntervalWork)> {
    let b = match p.fidelity() {
        Fidelity::GenKl { b, .. } => b.clone(),
        _ => {
            return Err(Error::InvalidParameter(
                "this interval applies to generalized-KL problems".into(),
            ))
        }
    };
    if !(c_k_tilde > 0.0 && c_k_tilde.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "a strictly positive curvature constant is required, got {c_k_tilde}"
        )));
    }
    let (xi, c, gamma) = kl_params(p)?;
    let (sigma, u_star) = true_support_of(p, x_star)?;
    let k_star = sigma.len();
    if k < 2 * k_star {
        return Err(Error::InvalidParameter(format!(
            "the sparse-difference budget {k} must be at least twice the true support size {k_star}"
        )));
    }
    let min_amp = u_star.iter().copied().fold(f64::INFINITY, f64::min);
    let f = f_kl(p.a(), &b, &sigma, eps_inf, min_amp)?;
    let l_tilde = p.lipschitz().l_tilde;
    let ck_capped = c_k_tilde.min(1.0);

    // Lower bound: the sparsity floor and the off-support feasibility bound.
    let mut lower = f / (1.0 + k as f64 - 2.0 * k_star as f64);
    let mut lower_off_support = Vec::new();
    for i in 0..p.n() {
        if sigma.contains(i) {
            continue;
        }
        let ai = p.a().col_norm_sq(i).sqrt();
        let arg = 1.0 - ai * (2.0 * l_tilde * f).sqrt() / (ck_capped * gamma[i] * c[i]);
        let cand = if arg > 0.0 { -gamma[i] * xi * arg.ln() } else { f64::INFINITY };
        lower = lower.max(cand);
        lower_off_support.push(cand);
    }

    // Upper bound: invert the separation geometry per support coordinate.
    let regime = if c_k_tilde < 1.0 { CkRegime::AtMostOne } else { CkRegime::AboveOne };
    let mut heights = Vec::with_capacity(k_star);
    let mut sublevel_upper = Vec::with_capacity(k_star);
    let mut scaled = Vec::with_capacity(k_star);
    let mut g_inverse = Vec::with_capacity(k_star);
    let mut h = Vec::with_capacity(k_star);
    let mut upper_candidates = Vec::with_capacity(k_star);
    let mut upper = f64::INFINITY;
    for (j, &i) in sigma.indices().iter().enumerate() {
        let height = f / (gamma[i] * xi * c_k_tilde);
        let e_j = g1kl_sublevel_upper(height)?;
        let anchor = c[i] * u_star[j] + xi;
        let (scaled_j, ginv_j, h_j) = if c_k_tilde < 1.0 {
            let e_prime = xi * e_j / anchor;
            let v = e_prime.min(1.0);
            let shrink = c_k_tilde * (1.0 - v);
            let ginv = shrink * xi / (c[i] * (1.0 - shrink));
            (e_prime, ginv, -(1.0 - shrink))
        } else {
            let e_second = e_j / anchor;
            let v = e_second.min(1.0 / xi);
            let ginv = (1.0 / v - xi) / c[i];
            (e_second, ginv, -xi * v)
        };
        let cand = -gamma[i] * xi * ((-h_j.exp()).ln_1p() + 1.0);
        upper = upper.min(cand);
        heights.push(height);
        sublevel_upper.push(e_j);
        scaled.push(scaled_j);
        g_inverse.push(ginv_j);
        h.push(h_j);
        upper_candidates.push(cand);
    }

    let work = KlIntervalWork {
        f_bound: f,
        regime,
        heights,
        sublevel_upper,
        scaled,
        g_inverse,
        h,
        upper_candidates,
        lower_off_support,
    };
    Ok((LambdaInterval { lower, upper }, work))
}

// ---------------------------------------------------------------------------
// Global-optimality check
// ---------------------------------------------------------------------------

/// The sufficient conditions the global-optimality certificate evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionId {
    /// The safe oracle region avoids the near-threshold slabs on the support.
    RegionSeparation,
    /// Off-support dual amplitudes stay below the threshold slope.
    OffSupportBound,
    /// The sparsity price exceeds the misfit floor `F(x*)/(1+K−2k*)`.
    LambdaFloor,
}

/// One evaluated condition.
#[derive(Clone, Debug)]
pub struct ConditionCheck {
    /// Which condition.
    pub id: ConditionId,
    /// Whether it holds.
    pub satisfied: bool,
    /// Worst-case slack (positive means satisfied with room).
    pub margin: f64,
    /// Human-readable account of the decisive quantity.
    pub detail: String,
}

/// Outcome of the deterministic sampling falsifier on the KL safe region.
#[derive(Clone, Copy, Debug)]
pub struct SamplingSummary {
    /// Points drawn.
    pub samples: usize,
    /// Points that landed inside the safe region.
    pub in_region: usize,
    /// In-region points violating the separation condition (must be 0).
    pub violations: usize,
}

/// Full report of [`global_optimality_check`].
#[derive(Clone, Debug)]
pub struct GlobalOptimalityReport {
    /// Whether every condition holds: the oracle solution is then the unique
    /// global minimizer of both objectives, and every other critical point
    /// differs from it in more than `K` coordinates.
    pub certified: bool,
    /// Which curvature regime was applied.
    pub regime: CkRegime,
    /// The evaluated conditions.
    pub conditions: Vec<ConditionCheck>,
    /// Sparse-difference budget `K`.
    pub k: usize,
    /// True support size `k*`.
    pub k_star: usize,
    /// Misfit of the true vector, `F(x*)`.
    pub f_star: f64,
    /// The λ₀ floor `F(x*)/(1+K−2k*)`.
    pub lambda_floor: f64,
    /// The oracle solution the certificate speaks about.
    pub oracle: OracleSolution,
    /// Sampling falsifier outcome (KL problems only).
    pub sampling: Option<SamplingSummary>,
}

/// Evaluate the sufficient conditions for the oracle solution on the true
/// support to be the **unique global minimizer** of both the relaxation and
/// the original ℓ0 objective at this problem's λ₀.
///
/// Three conditions are checked against the generator-relative curvature
/// constant `cert.c_k_tilde`:
///
/// - **Region separation** — on quadratic problems the safe ball must clear
///   the threshold slab `α_j` (regime `C̃_K > 1`) or `α_j/C̃_K` (`C̃_K ≤ 1`)
///   on every support coordinate; on KL problems the sublevel region's
///   geometry is inverted analytically, and a deterministic 10⁵-point
///   lattice additionally tries to falsify the separation — any in-region
///   counterexample defeats the certificate regardless of the analytic
///   margin.
/// - **Off-support bound** — `‖a_i‖√(2·L̃·F(x*))` must stay below
///   `ψ_i'(α_i) − ψ_i'(0)` (scaled by `C̃_K` in the low-curvature regime)
///   for every `i ∉ σ*`.
/// - **λ₀ floor** — `λ₀ > F(x*)/(1+K−2k*)`.
///
/// # Errors
///
/// [`Error::NotApplicable`] when `cert.c_k_tilde ≤ 0`;
/// [`Error::InvalidParameter`] when `K < 2k*` or the true support is empty;
/// propagates the oracle solve.
pub fn global_optimality_check(
    p: &Problem,
    x_star: &[f64],
    cert: &BrscCertificate,
) -> Result<GlobalOptimalityReport> {
    let c_tilde = cert.c_k_tilde;
    if !(c_tilde > 0.0 && c_tilde.is_finite()) {
        return Err(Error::NotApplicable(format!(
            "the curvature certificate is vacuous (C̃_K = {c_tilde}); nothing can be certified"
        )));
    }
    let k = cert.k;
    let (sigma, u_star) = true_support_of(p, x_star)?;
    let k_star = sigma.len();
    if k < 2 * k_star {
        return Err(Error::InvalidParameter(format!(
            "the sparse-difference budget {k} must be at least twice the true support size {k_star}"
        )));
    }
    let f_star = p.fidelity_of(x_star)?;
    let l_tilde = p.lipschitz().l_tilde;
    let regime = if c_tilde > 1.0 { CkRegime::AboveOne } else { CkRegime::AtMostOne };
    let oracle = oracle_solve(p, &sigma)?;
    let mut conditions = Vec::with_capacity(3);
    let mut sampling = None;

    // --- Region separation -------------------------------------------------
    let is_kl = matches!(p.fidelity(), Fidelity::GenKl { .. });
    if !is_kl {
        let gamma = shared_quadratic_gamma(p)?;
        let radius = (2.0 * f_star / (gamma * c_tilde)).sqrt();
        let mut margin = f64::INFINITY;
        for (j, &i) in sigma.indices().iter().enumerate() {
            let alpha = p.penalty(i).alpha();
            let slab = match regime {
                CkRegime::AboveOne => alpha,
                CkRegime::AtMostOne => alpha / c_tilde,
            };
            margin = margin.min(u_star[j].abs() - radius - slab);
        }
        conditions.push(ConditionCheck {
            id: ConditionId::RegionSeparation,
            satisfied: margin > 0.0,
            margin,
            detail: format!("safe-ball radius {radius:.6e}; worst support clearance {margin:.6e}"),
        });
    } else {
        let (xi, c, gamma) = kl_params(p)?;
        // Analytic route: per support coordinate, the threshold α_j must sit
        // strictly below the inverted separation bound.
        let mut margin = f64::INFINITY;
        let mut e_upper = Vec::with_capacity(k_star);
        let mut e_lower = Vec::with_capacity(k_star);
        for (j, &i) in sigma.indices().iter().enumerate() {
            let height = f_star / (gamma[i] * xi * c_tilde);
            let e_hi = g1kl_sublevel_upper(height)?;
            let e_lo = g1kl_sublevel_lower(height)?;
            let anchor = c[i] * u_star[j] + xi;
            let ginv = if c_tilde < 1.0 {
                let v = (xi * e_hi / anchor).min(1.0);
                let shrink = c_tilde * (1.0 - v);
                shrink * xi / (c[i] * (1.0 - shrink))
            } else {
                let v = (e_hi / anchor).min(1.0 / xi);
                (1.0 / v - xi) / c[i]
            };
            margin = margin.min(ginv - p.penalty(i).alpha());
            e_upper.push(e_hi);
            e_lower.push(e_lo);
        }

        // Falsification route: lattice-sample the bounding box of the safe
        // region and hunt for an in-region point inside a forbidden slab.
        let region = kl_safe_region(p, x_star, c_tilde)?;
        let mut lattice = WeylLattice::new(k_star);
        let mut in_region = 0usize;
        let mut violations = 0usize;
        let mut u = vec![0.0; k_star];
        let (box_lo, box_hi): (Vec<f64>, Vec<f64>) = sigma
            .indices()
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                let anchor = c[i] * u_star[j] + xi;
                let lo = ((anchor / e_upper[j] - xi) / c[i]).max(0.0);
                let hi = (anchor / e_lower[j] - xi) / c[i];
                (lo, hi)
            })
            .unzip();
        for _ in 0..FALSIFICATION_SAMPLES {
            let pt = lattice.next_point();
            for j in 0..k_star {
                u[j] = box_lo[j] + pt[j] * (box_hi[j] - box_lo[j]);
            }
            if !region.contains(&u) {
                continue;
            }
            in_region += 1;
            let mut separated = true;
            for (j, &i) in sigma.indices().iter().enumerate() {
                let hit = match regime {
                    CkRegime::AboveOne => u[j] <= p.penalty(i).alpha(),
                    CkRegime::AtMostOne => {
                        let rho = (p.penalty(i).dpsi_alpha() - p.penalty(i).dpsi_zero()) / c_tilde
                            + p.penalty(i).dpsi_zero();
                        p.penalty(i).generator().deriv(u[j])? <= rho
                    }
                };
                if hit {
                    separated = false;
                    break;
                }
            }
            if !separated {
                violations += 1;
            }
        }
        sampling = Some(SamplingSummary { samples: FALSIFICATION_SAMPLES, in_region, violations });
        conditions.push(ConditionCheck {
            id: ConditionId::RegionSeparation,
            satisfied: margin > 0.0 && violations == 0,
            margin,
            detail: format!(
                "worst inverted-geometry clearance {margin:.6e}; sampler found {violations} violations among {in_region} in-region points"
            ),
        });
    }

    // --- Off-support bound --------------------------------------------------
    let mut off_margin = f64::INFINITY;
    let lhs_common = (2.0 * l_tilde * f_star).sqrt();
    for i in 0..p.n() {
        if sigma.contains(i) {
            continue;
        }
        let lhs = p.a().col_norm_sq(i).sqrt() * lhs_common;
        let gap = p.penalty(i).dpsi_alpha() - p.penalty(i).dpsi_zero();
        let rhs = match regime {
            CkRegime::AboveOne => gap,
            CkRegime::AtMostOne => c_tilde * gap,
        };
        off_margin = off_margin.min(rhs - lhs);
    }
    let off_ok = match regime {
        // The high-curvature regime admits equality; the low-curvature one
        // is strict.
        CkRegime::AboveOne => off_margin >= 0.0,
        CkRegime::AtMostOne => off_margin > 0.0,
    };
    conditions.push(ConditionCheck {
        id: ConditionId::OffSupportBound,
        satisfied: off_ok,
        margin: off_margin,
        detail: format!("worst off-support slack {off_margin:.6e} against ‖a_i‖√(2L̃F(x*)) = {lhs_common:.6e}·‖a_i‖"),
    });

    // --- λ₀ floor -----------------------------------------------------------
    let lambda_floor = f_star / (1.0 + k as f64 - 2.0 * k_star as f64);
    let floor_margin = p.lambda0() - lambda_floor;
    conditions.push(ConditionCheck {
        id: ConditionId::LambdaFloor,
        satisfied: floor_margin > 0.0,
        margin: floor_margin,
        detail: format!("λ₀ = {} against floor {lambda_floor:.6e}", p.lambda0()),
    });

    let certified = conditions.iter().all(|c| c.satisfied);
    Ok(GlobalOptimalityReport {
        certified,
        regime,
        conditions,
        k,
        k_star,
        f_star,
        lambda_floor,
        oracle,
        sampling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_CC_SAFETY;

    #[test]
    fn lrip_of_identity_is_zero() {
        let delta = lrip_delta(&Matrix::identity(4), 2).unwrap();
        assert!(delta.abs() < 1e-12);
    }

    #[test]
    fn lrip_guard_trips_on_order() {
        assert!(matches!(lrip_delta(&Matrix::identity(24), 21), Err(Error::Guard(_))));
    }

    #[test]
    fn sublevel_endpoints_bracket_one() {
        // g₁(e) = e − 2, so the upper endpoint at height e−2 is exactly e.
        let e = std::f64::consts::E;
        let hi = g1kl_sublevel_upper(e - 2.0).unwrap();
        assert!((hi - e).abs() < 1e-10, "expected e, got {hi}");
        let lo = g1kl_sublevel_lower(e - 2.0).unwrap();
        assert!(lo < 1.0 && lo > 0.0);
        let g = |t: f64| t - t.ln() - 1.0;
        assert!((g(lo) - (e - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn interval_ls_matches_hand_computation() {
        // δ = 0, ‖ε‖ = 0.1, min amplitude 2: (0.005, 1.805).
        let iv = interval_ls_from_stats(2.0, 0.1, 0.0, 2, 1).unwrap();
        assert!((iv.lower - 0.005).abs() < 1e-15);
        assert!((iv.upper - 1.805).abs() < 1e-12);
        assert!(iv.is_nonempty());
    }

    #[test]
    fn carlsson_matches_hand_computation() {
        // δ = 0, ε = 0, min amplitude 2: (0, 0.5).
        let iv = carlsson_interval(2.0, 0.0, 0.0).unwrap();
        assert_eq!(iv.lower, 0.0);
        assert!((iv.upper - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interval_l2_identity_example() {
        // A = I₂, x* = (3, 0), y = (3, 1): F(x*) = 0.5, C₂ = 1, γ = 1,
        // giving (0.5, 2.0).
        let p = Problem::least_squares(Matrix::identity(2), vec![3.0, 1.0], 1.0, DEFAULT_CC_SAFETY)
            .unwrap();
        let cert = brsc_ls(&p, 2).unwrap();
        assert!((cert.c_k - 1.0).abs() < 1e-12);
        let iv = interval_l2(&p, &[3.0, 0.0], cert.c_k_tilde, 2).unwrap();
        assert!((iv.lower - 0.5).abs() < 1e-12, "lower {}", iv.lower);
        assert!((iv.upper - 2.0).abs() < 1e-12, "upper {}", iv.upper);
    }

    #[test]
    fn ball_contains_oracle() {
        let p = Problem::least_squares(Matrix::identity(2), vec![3.0, 1.0], 1.0, DEFAULT_CC_SAFETY)
            .unwrap();
        let region = safe_ball(&p, &[3.0, 0.0], 1.0).unwrap();
        let oracle = oracle_solve(&p, &Support::new(vec![0]).unwrap()).unwrap();
        assert!(region.contains(&oracle.u));
    }
}
