//! Small numeric helpers shared across modules.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// log(Σ exp(x_k)) without overflow. Empty input yields -inf.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    let sum: f64 = xs.iter().map(|x| (x - mx).exp()).sum();
    mx + sum.ln()
}

/// SplitMix64 finalizer; used to decorrelate stream tags.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic sub-stream: same (seed, tags) always yields the same RNG,
/// and distinct tag paths yield decorrelated streams. Evaluation order of
/// concurrent consumers therefore cannot affect results.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut s = splitmix64(seed);
    for &t in tags {
        s = splitmix64(s ^ splitmix64(t.wrapping_add(1)));
    }
    ChaCha8Rng::seed_from_u64(s)
}

/// Normalizes log-weights in place to log-probabilities summing to 1.
pub fn normalize_log_weights(lw: &mut [f64]) {
    let z = logsumexp(lw);
    for w in lw.iter_mut() {
        *w -= z;
    }
}

/// Draws an index from a categorical given log-probabilities.
pub fn sample_categorical_log(lw: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &w) in lw.iter().enumerate() {
        acc += w.exp();
        if u < acc {
            return k;
        }
    }
    lw.len() - 1
}

/// Mean and standard error of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logsumexp_matches_direct_sum() {
        let xs = [-1.0f64, 0.5, 2.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>();
        assert_relative_eq!(logsumexp(&xs), direct.ln(), epsilon = 1e-12);
    }

    #[test]
    fn logsumexp_survives_large_magnitudes() {
        let xs = [-1000.0, -1000.5];
        let v = logsumexp(&xs);
        assert!(v.is_finite());
        assert_relative_eq!(v, -1000.0 + (1.0 + (-0.5f64).exp()).ln(), epsilon = 1e-12);
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        use rand::RngCore;
        let a1 = substream(7, &[3]).next_u64();
        let a2 = substream(7, &[3]).next_u64();
        let b = substream(7, &[4]).next_u64();
        assert_eq!(a1, a2);
        assert_ne!(a1, b);
    }

    #[test]
    fn categorical_respects_cdf_boundaries() {
        let lw = [(0.25f64).ln(), (0.75f64).ln()];
        assert_eq!(sample_categorical_log(&lw, 0.1), 0);
        assert_eq!(sample_categorical_log(&lw, 0.3), 1);
        assert_eq!(sample_categorical_log(&lw, 0.999), 1);
    }

    #[test]
    fn mean_stderr_on_constant_sample() {
        let (m, se) = mean_stderr(&[2.0, 2.0, 2.0]);
        assert_relative_eq!(m, 2.0);
        assert_relative_eq!(se, 0.0);
    }
}
