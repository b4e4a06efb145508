//! Empirical statistics of emitted binary sequences.

use serde::{Deserialize, Serialize};

/// Lengths (number of 0s) of every gap bounded by two 1s. The partial gaps
/// before the first 1 and after the last 1 are dropped.
pub fn gap_lengths(sequence: &[u8]) -> Vec<usize> {
    let mut gaps = Vec::new();
    let mut current: Option<usize> = None;
    for &bit in sequence {
        if bit == 1 {
            if let Some(len) = current {
                gaps.push(len);
            }
            current = Some(0);
        } else if let Some(len) = current.as_mut() {
            *len += 1;
        }
    }
    gaps
}

/// Counts of gap lengths `0..=max_gap` plus one overflow bucket for longer gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapHistogram {
    pub counts: Vec<u64>,
    pub overflow: u64,
}

impl GapHistogram {
    pub fn from_gaps(gaps: &[usize], max_gap: usize) -> Self {
        let mut counts = vec![0u64; max_gap + 1];
        let mut overflow = 0;
        for &g in gaps {
            match counts.get_mut(g) {
                Some(c) => *c += 1,
                None => overflow += 1,
            }
        }
        Self { counts, overflow }
    }

    pub fn from_sequence(sequence: &[u8], max_gap: usize) -> Self {
        Self::from_gaps(&gap_lengths(sequence), max_gap)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    /// Normalized frequencies of the bounded bins followed by the overflow bin.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .chain(std::iter::once(&self.overflow))
            .map(|&c| c as f64 / total)
            .collect()
    }

    /// Empirical `P(gap ≥ n)` for `n = 0..=max_gap`.
    pub fn survival(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        let mut remaining = self.total();
        self.counts
            .iter()
            .map(|&c| {
                let s = remaining as f64 / total;
                remaining -= c;
                s
            })
            .collect()
    }
}

/// Total-variation distance between two histograms over the same bins
/// (overflow bin included).
pub fn total_variation(a: &GapHistogram, b: &GapHistogram) -> f64 {
    assert_eq!(a.counts.len(), b.counts.len(), "histograms must share bins");
    let fa = a.frequencies();
    let fb = b.frequencies();
    0.5 * fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// One-sigma binomial error of an empirical frequency estimating `prob` from `trials` samples.
pub fn binomial_sigma(prob: f64, trials: u64) -> f64 {
    (prob * (1.0 - prob) / trials.max(1) as f64).sqrt()
}

/// Shannon entropy in bits, with `0·log 0 = 0`.
pub fn entropy_bits<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_simple_distributions() {
        assert_eq!(entropy_bits([1.0]), 0.0);
        assert_eq!(entropy_bits([0.5, 0.5]), 1.0);
        assert_eq!(entropy_bits([0.25; 4]), 2.0);
        assert_eq!(entropy_bits([1.0, 0.0]), 0.0);
    }

    #[test]
    fn gaps_drop_partial_ends() {
        let seq = [0, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 0];
        assert_eq!(gap_lengths(&seq), vec![3, 0, 1]);
        assert!(gap_lengths(&[0, 0, 0]).is_empty());
        assert!(gap_lengths(&[1]).is_empty());
    }

    #[test]
    fn histogram_and_survival() {
        let h = GapHistogram::from_gaps(&[0, 1, 1, 3, 7], 3);
        assert_eq!(h.counts, vec![1, 2, 0, 1]);
        assert_eq!(h.overflow, 1);
        assert_eq!(h.survival(), vec![1.0, 0.8, 0.4, 0.4]);
        let f = h.frequencies();
        assert_eq!(f.len(), 5);
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tv_distance() {
        let a = GapHistogram::from_gaps(&[0, 0, 1, 1], 1);
        let b = GapHistogram::from_gaps(&[0, 1, 1, 1], 1);
        assert!((total_variation(&a, &b) - 0.25).abs() < 1e-15);
        assert_eq!(total_variation(&a, &a), 0.0);
    }
}
