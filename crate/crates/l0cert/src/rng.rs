//! Deterministic random numbers for instance generation.
//!
//! Reproducibility is a hard contract for this harness: the same configuration
//! and seed must produce bit-identical instances and reports on every machine,
//! every run, serial or parallel.  Library RNGs keep that promise only until
//! their next minor version, so the harness pins the exact algorithms here:
//!
//! | Piece | Algorithm |
//! |-------|-----------|
//! | core generator | xoshiro256** (Blackman–Vigna) |
//! | seeding / stream splitting | splitmix64 |
//! | uniform in `[0,1)` | top 53 bits, `(x >> 11) · 2⁻⁵³` |
//! | standard normal | Box–Muller, no spare caching |
//! | Poisson | Knuth product method (`λ < 30`), PTRS transformed rejection otherwise |
//! | shuffling | Fisher–Yates with multiply-shift index reduction |
//!
//! Parallel sweeps derive one independent stream per trial with
//! [`derive_stream_seed`], so the work can be scheduled in any order and still
//! produce the serial result.
//!
//! # What can go wrong
//!
//! - Box–Muller needs `ln` of a positive number; the first uniform is mapped
//!   through `1 − u` so the argument lives in `(0, 1]` and never underflows.
//! - The Knuth Poisson loop multiplies `e^{−λ}` factors and underflows for
//!   large `λ`; the PTRS branch takes over well before that point.
//! - Multiply-shift index reduction has a bias of at most `n / 2⁶⁴`, far below
//!   anything observable here, and avoids the modulo path whose timing varies.

/// One step of the splitmix64 sequence: advances `state` and returns the next
/// output.  Used both for seeding xoshiro and for deriving per-trial streams.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the RNG stream of trial `index` under a master seed.
///
/// Each trial's stream is one splitmix64 output of a state offset by a
/// distinct multiple of the golden-ratio constant, so streams for different
/// indices never share internal state even when master seeds are small
/// consecutive integers.
#[inline]
pub fn derive_stream_seed(master: u64, index: u64) -> u64 {
    let mut state = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(&mut state)
}

/// xoshiro256** generator.  All randomness in the harness flows through this
/// type; no global or thread-local generator exists.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    /// Expand a 64-bit seed into the 256-bit state with splitmix64, as the
    /// algorithm's authors recommend.  An all-zero state (impossible via
    /// splitmix64 expansion) would be a fixed point.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s }
    }

    /// Next raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n` via multiply-shift reduction.  `n` must be
    /// positive.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal draw via Box–Muller.
    ///
    /// The cosine half of each pair is used and the sine half discarded:
    /// caching the spare would make the draw count depend on call history,
    /// which breaks the "same seed, same instance" contract when generation
    /// order changes between harness versions.
    pub fn standard_normal(&mut self) -> f64 {
        // 1 − u ∈ (0, 1]: the logarithm is finite and ≤ 0.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
    }

    /// Poisson draw with mean `lambda ≥ 0`.
    ///
    /// Knuth's product method below mean 30 (exact, cheap there), Hörmann's
    /// PTRS transformed rejection above (the product method's `e^{−λ}` factor
    /// underflows near `λ ≈ 745` and its cost grows linearly).
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        assert!(
            lambda.is_finite() && lambda >= 0.0,
            "Poisson mean must be finite and nonnegative, got {lambda}"
        );
        if lambda == 0.0 {
            return 0;
        }
        if lambda < 30.0 {
            self.poisson_knuth(lambda)
        } else {
            self.poisson_ptrs(lambda)
        }
    }

    fn poisson_knuth(&mut self, lambda: f64) -> u64 {
        let limit = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= self.uniform();
            if p <= limit {
                return k;
            }
            k += 1;
        }
    }

    /// PTRS sampler (Hörmann, "The transformed rejection method for
    /// generating Poisson random variables", constants from the published
    /// algorithm).  Valid for `λ ≥ 10`; used here from 30 up.
    fn poisson_ptrs(&mut self, lambda: f64) -> u64 {
        let slam = lambda.sqrt();
        let loglam = lambda.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            if (v * inv_alpha / (a / (us * us) + b)).ln()
                <= k * loglam - lambda - ln_factorial(k as u64)
            {
                return k as u64;
            }
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

/// `ln(k!)`, exact ln-sum for small `k`, Stirling series beyond.
///
/// The crossover at 256 keeps the ln-sum cost bounded while the Stirling
/// series with three correction terms is already accurate to ~1e-16 relative
/// there, well inside what the PTRS acceptance test needs.
pub fn ln_factorial(k: u64) -> f64 {
    if k <= 256 {
        let mut acc = 0.0;
        for i in 2..=k {
            acc += (i as f64).ln();
        }
        acc
    } else {
        let kf = k as f64;
        kf * kf.ln() - kf + 0.5 * (core::f64::consts::TAU * kf).ln() + 1.0 / (12.0 * kf)
            - 1.0 / (360.0 * kf.powi(3))
            + 1.0 / (1260.0 * kf.powi(5))
    }
}
