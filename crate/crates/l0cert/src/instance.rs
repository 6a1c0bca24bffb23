//! Seeded synthetic instances: sparse truth, measurement operator, noise.
//!
//! Two generative models are instantiated, matching the two data terms the
//! mathematical layer supports:
//!
//! | Fidelity | Operator entries | Truth amplitudes | Noise |
//! |----------|------------------|------------------|-------|
//! | least squares | `N(0, 1/M)` | uniform in `±[a_min, a_max]` | additive Gaussian, `y = Ax* + σ·g` |
//! | generalized KL | `|N(0, 1/M)|` | uniform in `[a_min, a_max]` | Poisson counts, `y_j ∼ 𝒫((Ax* + b)_j)` |
//!
//! Mixing them the other way (Poisson counts under a least-squares misfit, or
//! Gaussian perturbations of photon counts) is rejected at validation: a
//! Gaussian kick can push a count negative, which leaves the divergence
//! domain, and the harness prefers a loud early error over a seed-dependent
//! one deep inside a sweep.
//!
//! # Determinism
//!
//! [`gen_instance`] consumes exactly one PRNG stream in a frozen order —
//! operator entries row-major, then the support shuffle, then amplitudes,
//! then noise — so the same spec always reproduces the same instance
//! bit-for-bit, and adding draws to a later phase never perturbs an earlier
//! one.
//!
//! # What can go wrong
//!
//! - A fixed operator whose dimensions disagree with `n`/`m` is a
//!   configuration error, caught before any drawing.
//! - `a_min = 0` would let a "nonzero" truth entry be zero, silently
//!   shrinking the support; amplitudes must satisfy `0 < a_min ≤ a_max`.
//! - Poisson means are `(Ax* + b)_j ≥ 0` by construction (nonnegative
//!   operator, positive amplitudes, nonnegative background), so the sampler's
//!   domain check cannot trip.

use bregman_l0::prelude::*;

use crate::rng::Rng;
use crate::{Error, Result};

/// Which data term the instance is generated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FidelityKind {
    /// Squared Euclidean misfit, Gaussian noise.
    LeastSquares,
    /// Generalized Kullback–Leibler misfit, Poisson counts over a background.
    Kl,
}

/// Noise model applied to the clean measurements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseSpec {
    /// `y = y_clean + σ·g`, `g` i.i.d. standard normal.  `σ = 0` is allowed
    /// and produces `ε = 0` exactly.
    Gaussian { sigma: f64 },
    /// `y_j ∼ Poisson(y_clean_j)` independently.
    Poisson,
}

/// Where the measurement operator comes from.
#[derive(Clone, Debug)]
pub enum MatrixEnsemble {
    /// I.i.d. `N(0, 1/M)` entries (absolute values for KL instances).
    GaussianIid,
    /// A caller-supplied operator; no matrix entries are drawn.
    Fixed(Matrix),
}

/// Everything needed to generate one instance deterministically.
#[derive(Clone, Debug)]
pub struct InstanceSpec {
    /// Signal dimension `N ≥ 1`.
    pub n: usize,
    /// Measurement dimension `M ≥ 1`.
    pub m: usize,
    /// True support size, `k* ≤ N`.
    pub k_star: usize,
    /// Data term the instance targets.
    pub fidelity: FidelityKind,
    /// Amplitude range `0 < a_min ≤ a_max` for the nonzero truth entries.
    pub amplitude: (f64, f64),
    /// Noise model; must match the fidelity (see module docs).
    pub noise: NoiseSpec,
    /// Constant background level added to every component (KL only;
    /// ignored for least squares).  Must be `> 0` for KL.
    pub background: f64,
    /// Operator source.
    pub ensemble: MatrixEnsemble,
    /// Rescale every operator column to this Euclidean norm after drawing
    /// (`None` keeps the raw ensemble).  Restricted-isometry-based
    /// certificates need near-unit columns; the raw `N(0, 1/M)` ensemble
    /// drifts from isometry as `N/M` grows.
    pub col_norm: Option<f64>,
    /// Master seed for the single PRNG stream this spec consumes.
    pub seed: u64,
}

/// A generated instance: operator, truth, measurements, and the realized
/// noise, all tied to the seed that produced them.
#[derive(Clone, Debug)]
pub struct Instance {
    /// Measurement operator, `M × N`.
    pub a: Matrix,
    /// True signal with exactly `k*` nonzeros.
    pub x_star: Vec<f64>,
    /// Support of `x_star`.
    pub sigma_star: Support,
    /// Observed measurements.
    pub y: Vec<f64>,
    /// Noiseless measurements: `A·x*` (plus the background for KL).
    pub y_clean: Vec<f64>,
    /// Realized noise, `y − y_clean`.
    pub eps: Vec<f64>,
    /// Background vector (empty for least squares).
    pub background: Vec<f64>,
    /// Which fidelity this instance was generated for.
    pub fidelity: FidelityKind,
    /// The seed that produced all of the above.
    pub seed: u64,
}

impl InstanceSpec {
    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.m == 0 {
            return fail(format!("dimensions must be positive, got N={} M={}", self.n, self.m));
        }
        if self.k_star > self.n {
            return fail(format!("k_star={} exceeds N={}", self.k_star, self.n));
        }
        let (lo, hi) = self.amplitude;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return fail(format!("amplitude range must satisfy 0 < a_min ≤ a_max, got [{lo}, {hi}]"));
        }
        match (self.fidelity, self.noise) {
            (FidelityKind::LeastSquares, NoiseSpec::Gaussian { sigma }) => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return fail(format!("gaussian sigma must be finite and ≥ 0, got {sigma}"));
                }
            }
            (FidelityKind::Kl, NoiseSpec::Poisson) => {
                // Generation tolerates a zero background (Poisson means may
                // then be zero, and 𝒫(0) ≡ 0); assembling the KL *problem*
                // from such an instance still requires b > 0, and
                // `to_problem` rejects it there.
                if !(self.background >= 0.0 && self.background.is_finite()) {
                    return fail(format!(
                        "KL instances need a nonnegative background, got {}",
                        self.background
                    ));
                }
            }
            (FidelityKind::LeastSquares, NoiseSpec::Poisson) => {
                return fail("least-squares instances use gaussian noise, not poisson".into());
            }
            (FidelityKind::Kl, NoiseSpec::Gaussian { .. }) => {
                return fail(
                    "KL instances use poisson noise; gaussian noise can produce negative counts"
                        .into(),
                );
            }
        }
        if let Some(t) = self.col_norm {
            if !(t > 0.0 && t.is_finite()) {
                return fail(format!("col_norm must be positive and finite, got {t}"));
            }
        }
        if let MatrixEnsemble::Fixed(a) = &self.ensemble {
            if a.rows() != self.m || a.cols() != self.n {
                return fail(format!(
                    "fixed operator is {}×{} but the spec says {}×{}",
                    a.rows(),
                    a.cols(),
                    self.m,
                    self.n
                ));
            }
            if self.fidelity == FidelityKind::Kl && !a.is_entrywise_nonneg() {
                return fail("KL instances need an entrywise nonnegative operator".into());
            }
        }
        Ok(())
    }
}

/// Generate the instance a spec describes.  Deterministic: the same spec
/// (including its seed) always returns a bit-identical instance.
pub fn gen_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);

    // Phase 1: operator entries, row-major.
    let a = match &spec.ensemble {
        MatrixEnsemble::Fixed(a) => a.clone(),
        MatrixEnsemble::GaussianIid => {
            let scale = 1.0 / (spec.m as f64).sqrt();
            let mut a = Matrix::zeros(spec.m, spec.n);
            for j in 0..spec.m {
                for i in 0..spec.n {
                    let mut g = scale * rng.standard_normal();
                    if spec.fidelity == FidelityKind::Kl {
                        g = g.abs();
                    }
                    a.set(j, i, g);
                }
            }
            a
        }
    };

    // Column rescaling is a deterministic post-map of phase 1: it consumes no
    // randomness, so it leaves the later phases' draws untouched.
    let a = match spec.col_norm {
        None => a,
        Some(target) => {
            let mut a = a;
            for i in 0..spec.n {
                let norm = a.col_norm_sq(i).sqrt();
                if norm == 0.0 {
                    return Err(Error::Config(format!(
                        "column {i} is zero and cannot be rescaled to norm {target}"
                    )));
                }
                let s = target / norm;
                for j in 0..spec.m {
                    let v = a.get(j, i);
                    a.set(j, i, s * v);
                }
            }
            a
        }
    };

    // Phase 2: support, by shuffling all indices and keeping the first k*.
    let mut order: Vec<usize> = (0..spec.n).collect();
    rng.shuffle(&mut order);
    let mut picked: Vec<usize> = order[..spec.k_star].to_vec();
    picked.sort_unstable();
    let sigma_star = Support::new(picked.clone()).map_err(bregman_l0::Error::from)?;

    // Phase 3: amplitudes.  Magnitude first, then (least squares only) a sign
    // draw, so the KL and LS streams agree on the magnitudes.
    let mut x_star = vec![0.0; spec.n];
    let (lo, hi) = spec.amplitude;
    for &i in &picked {
        let mag = rng.uniform_in(lo, hi);
        x_star[i] = match spec.fidelity {
            FidelityKind::Kl => mag,
            FidelityKind::LeastSquares => {
                if rng.uniform() < 0.5 {
                    -mag
                } else {
                    mag
                }
            }
        };
    }

    // Phase 4: clean measurements and noise.
    let background = match spec.fidelity {
        FidelityKind::LeastSquares => Vec::new(),
        FidelityKind::Kl => vec![spec.background; spec.m],
    };
    let mut y_clean = a.matvec(&x_star);
    for (c, b) in y_clean.iter_mut().zip(background.iter()) {
        *c += *b;
    }
    let y: Vec<f64> = match spec.noise {
        NoiseSpec::Gaussian { sigma } => {
            y_clean.iter().map(|&c| c + sigma * rng.standard_normal()).collect()
        }
        NoiseSpec::Poisson => y_clean.iter().map(|&c| rng.poisson(c) as f64).collect(),
    };
    let eps: Vec<f64> = y.iter().zip(y_clean.iter()).map(|(a, b)| a - b).collect();

    Ok(Instance {
        a,
        x_star,
        sigma_star,
        y,
        y_clean,
        eps,
        background,
        fidelity: spec.fidelity,
        seed: spec.seed,
    })
}

impl Instance {
    /// `‖ε‖₂` of the realized noise.
    pub fn eps_norm(&self) -> f64 {
        self.eps.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// `‖ε‖∞` of the realized noise.
    pub fn eps_inf(&self) -> f64 {
        self.eps.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    /// Smallest nonzero truth magnitude, `m(x*)`; `+∞` for an empty support.
    pub fn min_amplitude(&self) -> f64 {
        self.sigma_star
            .indices()
            .iter()
            .map(|&i| self.x_star[i].abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Assemble the relaxed problem this instance poses, with continuation
    /// calibration of the generator parameters at the given safety factor.
    pub fn to_problem(&self, lambda0: f64, safety: f64) -> Result<Problem> {
        let p = match self.fidelity {
            FidelityKind::LeastSquares => {
                Problem::least_squares(self.a.clone(), self.y.clone(), lambda0, safety)?
            }
            FidelityKind::Kl => Problem::kl(
                self.a.clone(),
                self.y.clone(),
                self.background.clone(),
                lambda0,
                safety,
            )?,
        };
        Ok(p)
    }
}
