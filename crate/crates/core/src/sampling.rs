//! Seeded measurement sampling from exact output distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Draw `shots` i.i.d. bitstrings from a probability vector indexed by basis
/// state, by inverse-CDF lookup on a ChaCha8 stream keyed by `seed`.
pub fn sample_bitstrings(probs: &[f64], shots: usize, seed: u64) -> Result<Vec<usize>> {
    if probs.is_empty() {
        return Err(Error::InsufficientData("empty distribution".into()));
    }
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be >= 1".into()));
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    let total = *cdf.last().unwrap();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InsufficientData(format!(
            "distribution sums to {total}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(shots);
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        // First index with cdf[i] > u.
        let idx = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        out.push(idx);
    }
    Ok(out)
}

/// Render a basis state as a 0/1 string, qubit 0 first.
pub fn format_bitstring(z: usize, n: usize) -> String {
    (0..n)
        .map(|k| if (z >> k) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let probs = vec![0.1, 0.2, 0.3, 0.4];
        let a = sample_bitstrings(&probs, 1000, 7).unwrap();
        let b = sample_bitstrings(&probs, 1000, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_bitstrings(&probs, 1000, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn frequencies_match_distribution() {
        let probs = vec![0.05, 0.15, 0.3, 0.5];
        let shots = 1_000_000usize;
        let draws = sample_bitstrings(&probs, shots, 1234).unwrap();
        let mut counts = [0usize; 4];
        for d in draws {
            counts[d] += 1;
        }
        for (i, &p) in probs.iter().enumerate() {
            let freq = counts[i] as f64 / shots as f64;
            // 4-sigma multinomial band.
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!(
                (freq - p).abs() < 4.0 * sigma,
                "state {i}: freq {freq} vs p {p}"
            );
        }
    }

    #[test]
    fn bitstring_formatting_is_lsb_first() {
        assert_eq!(format_bitstring(0b0110, 4), "0110");
        assert_eq!(format_bitstring(0b0001, 4), "1000");
        assert_eq!(format_bitstring(0, 3), "000");
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(sample_bitstrings(&[], 10, 0).is_err());
        assert!(sample_bitstrings(&[0.5, 0.5], 0, 0).is_err());
        assert!(sample_bitstrings(&[0.0, 0.0], 5, 0).is_err());
    }
}
