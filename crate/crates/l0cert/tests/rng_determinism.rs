//! The PRNG stack against reference values and distributional sanity checks.
//!
//! The raw-output values below were produced by an independent
//! reimplementation of the published xoshiro256** / splitmix64 algorithms
//! (arbitrary-precision integer arithmetic, no shared code with this crate).
//! They pin the exact bit stream: any deviation breaks every seeded
//! experiment downstream, so these are the most load-bearing constants in
//! the harness.

use l0cert::rng::{derive_stream_seed, ln_factorial, splitmix64, Rng};

/// First five raw outputs of xoshiro256** seeded with 42 via splitmix64.
const XOSHIRO_SEED42: [u64; 5] = [
    1546998764402558742,
    6990951692964543102,
    12544586762248559009,
    17057574109182124193,
    18295552978065317476,
];

#[test]
fn raw_stream_matches_the_reference_implementation() {
    let mut rng = Rng::new(42);
    for (i, &expect) in XOSHIRO_SEED42.iter().enumerate() {
        assert_eq!(rng.next_u64(), expect, "output {i} diverged");
    }
}

#[test]
fn uniform_mapping_matches_the_reference() {
    let mut rng = Rng::new(42);
    let expect = [0.08386297105988216, 0.3789802506626686, 0.6800434110281394];
    for (i, &e) in expect.iter().enumerate() {
        assert_eq!(rng.uniform(), e, "uniform {i} diverged");
    }
}

#[test]
fn first_normal_draw_matches_the_reference() {
    // Box–Muller on (1 − u₀, u₁) from the seed-42 stream, computed
    // independently with the same formula.
    let mut rng = Rng::new(42);
    let z = rng.standard_normal();
    assert!((z - (-0.303263064678738)).abs() <= 1e-15, "got {z}");
}

#[test]
fn stream_seeds_match_the_reference_and_are_distinct() {
    assert_eq!(derive_stream_seed(7, 0), 309689372594955804);
    assert_eq!(derive_stream_seed(7, 1), 16616101746815609346);
    assert_eq!(derive_stream_seed(7, 2), 10753165928301472203);
    // Small master seeds with adjacent indices must still give unrelated
    // streams; check pairwise distinctness over a block.
    let mut seen = std::collections::HashSet::new();
    for master in 0..4u64 {
        for idx in 0..64u64 {
            assert!(seen.insert(derive_stream_seed(master, idx)), "stream seed collision");
        }
    }
}

#[test]
fn splitmix_sequence_is_reproducible() {
    let mut s1 = 12345u64;
    let mut s2 = 12345u64;
    let a: Vec<u64> = (0..8).map(|_| splitmix64(&mut s1)).collect();
    let b: Vec<u64> = (0..8).map(|_| splitmix64(&mut s2)).collect();
    assert_eq!(a, b);
    assert_eq!(s1, s2);
}

#[test]
fn uniforms_fill_the_unit_interval() {
    let mut rng = Rng::new(1);
    let mut min = 1.0f64;
    let mut max = 0.0f64;
    let mut sum = 0.0;
    const N: usize = 100_000;
    for _ in 0..N {
        let u = rng.uniform();
        assert!((0.0..1.0).contains(&u));
        min = min.min(u);
        max = max.max(u);
        sum += u;
    }
    let mean = sum / N as f64;
    assert!((mean - 0.5).abs() < 0.01, "uniform mean {mean} far from 1/2");
    assert!(min < 0.001 && max > 0.999, "range [{min}, {max}] not filled");
}

#[test]
fn normals_have_unit_variance_and_zero_mean() {
    let mut rng = Rng::new(2);
    const N: usize = 200_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..N {
        let z = rng.standard_normal();
        sum += z;
        sum_sq += z * z;
    }
    let mean = sum / N as f64;
    let var = sum_sq / N as f64 - mean * mean;
    // Standard error of the mean is ~1/√N ≈ 0.0022; allow 4σ.
    assert!(mean.abs() < 0.01, "normal mean {mean}");
    assert!((var - 1.0).abs() < 0.02, "normal variance {var}");
}

/// Poisson mean/variance for both sampler branches.  The Knuth branch runs
/// below mean 30, PTRS above; both must deliver the Poisson moments.
#[test]
fn poisson_moments_hold_on_both_branches() {
    for &(lambda, n) in &[(3.5f64, 200_000usize), (12.0, 200_000), (80.0, 200_000), (400.0, 100_000)] {
        let mut rng = Rng::new(lambda.to_bits());
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let k = rng.poisson(lambda) as f64;
            sum += k;
            sum_sq += k * k;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // Mean and variance both equal λ; standard error ~ √(λ/n).
        let se = (lambda / n as f64).sqrt();
        assert!(
            (mean - lambda).abs() < 6.0 * se,
            "λ={lambda}: mean {mean} off by {}",
            (mean - lambda).abs()
        );
        assert!(
            (var - lambda).abs() < 0.05 * lambda,
            "λ={lambda}: variance {var}"
        );
    }
}

#[test]
fn poisson_mean_zero_is_identically_zero() {
    let mut rng = Rng::new(9);
    for _ in 0..100 {
        assert_eq!(rng.poisson(0.0), 0);
    }
}

#[test]
fn ln_factorial_matches_direct_summation_at_the_stirling_side() {
    // Direct ln-sum at k = 500 (oracle: the definition), Stirling in the
    // implementation; agreement to 1e-12 relative.
    let direct: f64 = (2..=500u64).map(|i| (i as f64).ln()).sum();
    let viaimpl = ln_factorial(500);
    assert!(
        (direct - viaimpl).abs() <= 1e-12 * direct,
        "ln(500!) direct {direct} vs stirling {viaimpl}"
    );
}

#[test]
fn shuffle_is_deterministic_and_a_permutation() {
    let mut a: Vec<usize> = (0..50).collect();
    let mut b: Vec<usize> = (0..50).collect();
    Rng::new(77).shuffle(&mut a);
    Rng::new(77).shuffle(&mut b);
    assert_eq!(a, b);
    let mut sorted = a.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    assert_ne!(a, sorted, "seed 77 left 50 elements in place — vanishingly unlikely");
}
