//! Truncated ε-machine of a dual Poisson process.
//!
//! Causal states count the 0s emitted since the last 1. States beyond
//! `n_term` carry negligible probability and are merged into a single
//! terminal state with a self-loop on 0.

use rand::Rng;

use crate::error::{Error, Result};
use crate::process::{
    emission_prob, normalization_mu, steady_state_prob, survival_tail_sum, tail_cutoff,
    DiscreteParams, TAIL_TOLERANCE,
};
use crate::rng::{self, streams};
use crate::stats::entropy_bits;

/// Default truncation fraction.
pub const DEFAULT_DELTA: f64 = 0.01;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )))
    }
}

/// Smallest `n` with `Φ(n) ≤ δ·(1 − Φ(1))`.
pub fn compute_n_term(dp: &DiscreteParams, delta: f64) -> Result<usize> {
    check_delta(delta)?;
    let log_threshold = (delta * emission_prob(dp, 0)).ln();
    let below = |n: usize| dp.log_survival(n) <= log_threshold;
    // Φ is strictly decreasing: gallop to a bracket, then bisect.
    let mut hi = 1usize;
    while !below(hi) {
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::InvalidParameter("truncation index overflow".into()))?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Finite-state classical causal model with states `0..=n_term`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedEpsilonMachine {
    dp: DiscreteParams,
    n_term: usize,
    /// Probability of emitting 1 from each state; the last entry is the terminal state.
    emit_prob: Vec<f64>,
}

/// Builds the truncated machine. The terminal state emits with the
/// steady-state weighted average of the emission probabilities it absorbs:
/// `Σ_{n≥n_term} μΦ(n)·e(n) / Σ_{n≥n_term} μΦ(n) = Φ(n_term) / Σ_{n≥n_term} Φ(n)`.
pub fn build_machine(dp: &DiscreteParams, delta: f64) -> Result<TruncatedEpsilonMachine> {
    let n_term = compute_n_term(dp, delta)?;
    Ok(TruncatedEpsilonMachine::with_n_term(dp, n_term))
}

impl TruncatedEpsilonMachine {
    /// Machine truncated at an explicit index rather than by the δ rule.
    pub fn with_n_term(dp: &DiscreteParams, n_term: usize) -> Self {
        let mut emit_prob: Vec<f64> = (0..n_term).map(|n| emission_prob(dp, n)).collect();
        emit_prob.push(terminal_emission(dp, n_term));
        Self {
            dp: *dp,
            n_term,
            emit_prob,
        }
    }

    pub fn params(&self) -> &DiscreteParams {
        &self.dp
    }

    pub fn n_term(&self) -> usize {
        self.n_term
    }

    pub fn num_states(&self) -> usize {
        self.n_term + 1
    }

    pub fn emit_probs(&self) -> &[f64] {
        &self.emit_prob
    }

    pub fn emit_prob(&self, state: usize) -> f64 {
        self.emit_prob[state]
    }

    pub fn terminal_emit(&self) -> f64 {
        self.emit_prob[self.n_term]
    }

    /// Transition rule: 1 resets to state 0, 0 advances and saturates at `n_term`.
    pub fn next_state(&self, state: usize, output: u8) -> usize {
        if output == 1 {
            0
        } else {
            (state + 1).min(self.n_term)
        }
    }

    /// Emits `steps` symbols starting from `start_state`, drawing from the
    /// classical child stream of `seed`.
    pub fn simulate(&self, start_state: usize, steps: usize, seed: u64) -> Result<Vec<u8>> {
        let mut rng = rng::stream(seed, streams::CLASSICAL);
        self.simulate_with(start_state, steps, &mut rng)
    }

    pub fn simulate_with<R: Rng + ?Sized>(
        &self,
        start_state: usize,
        steps: usize,
        rng: &mut R,
    ) -> Result<Vec<u8>> {
        if start_state > self.n_term {
            return Err(Error::InvalidState {
                state: start_state,
                states: self.num_states(),
            });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("steps must be positive".into()));
        }
        let mut state = start_state;
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let bit = u8::from(rng.random::<f64>() < self.emit_prob[state]);
            out.push(bit);
            state = self.next_state(state, bit);
        }
        Ok(out)
    }

    /// Stationary distribution of the truncated chain itself, solved from the
    /// chain's own transition rule. Used as a diagnostic against
    /// [`aggregated_distribution`].
    pub fn chain_stationary_distribution(&self) -> Vec<f64> {
        let mut weights = Vec::with_capacity(self.num_states());
        let mut w = 1.0;
        for n in 0..self.n_term {
            weights.push(w);
            w *= 1.0 - self.emit_prob[n];
        }
        weights.push(w / self.terminal_emit());
        let total: f64 = weights.iter().sum();
        weights.iter().map(|x| x / total).collect()
    }
}

fn terminal_emission(dp: &DiscreteParams, n_term: usize) -> f64 {
    let (q1, q2) = dp.channel_posterior(n_term);
    let mut denom = 0.0;
    if q1 > 0.0 {
        denom += q1 / dp.decay1();
    }
    if q2 > 0.0 {
        denom += q2 / dp.decay2();
    }
    1.0 / denom
}

/// Steady-state distribution over the truncated states: `μΦ(n)` for `n < n_term`
/// and the exact merged tail mass `μ·Σ_{k≥n_term} Φ(k)` for the terminal state.
pub fn aggregated_distribution(dp: &DiscreteParams, n_term: usize) -> Vec<f64> {
    let mu = normalization_mu(dp);
    let mut dist: Vec<f64> = (0..n_term).map(|n| steady_state_prob(dp, n)).collect();
    dist.push(mu * survival_tail_sum(dp, n_term));
    dist
}

/// Statistical complexity of the machine truncated at `n_term`, in bits.
pub fn truncated_entropy(dp: &DiscreteParams, n_term: usize) -> f64 {
    entropy_bits(aggregated_distribution(dp, n_term))
}

/// `C̃μ` with `n_term` chosen by the δ rule.
pub fn stat_complexity_truncated(dp: &DiscreteParams, delta: f64) -> Result<f64> {
    Ok(truncated_entropy(dp, compute_n_term(dp, delta)?))
}

/// `D̃μ = log2(n_term + 1)`.
pub fn top_complexity_truncated(n_term: usize) -> f64 {
    ((n_term + 1) as f64).log2()
}

/// `Cμ` of the untruncated causal-state distribution, summed until the
/// neglected tail mass drops below [`TAIL_TOLERANCE`].
pub fn stat_complexity_exact(dp: &DiscreteParams) -> f64 {
    let last = tail_cutoff(dp, TAIL_TOLERANCE);
    entropy_bits((0..=last).map(|n| steady_state_prob(dp, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{survival, ProcessParams};
    use crate::stats::GapHistogram;
    use approx::assert_relative_eq;

    fn reference_point(dt: f64) -> DiscreteParams {
        ProcessParams::new(12.0, 1.0, 0.9, dt)
            .unwrap()
            .discretize()
            .unwrap()
    }

    fn scan_n_term(dp: &DiscreteParams, delta: f64) -> usize {
        let threshold = delta * (1.0 - survival(dp, 1));
        (0..).find(|&n| survival(dp, n) <= threshold).unwrap()
    }

    #[test]
    fn n_term_examples() {
        let dp = reference_point(0.1);
        assert_eq!(compute_n_term(&dp, 0.01).unwrap(), 28);
        assert_eq!(compute_n_term(&dp, 1.0).unwrap(), 1);
        let half = DiscreteParams::new(0.5, 0.9, 1.0).unwrap();
        assert_eq!(compute_n_term(&half, 0.01).unwrap(), 8);
    }

    #[test]
    fn n_term_matches_scan() {
        for dt in [0.2, 0.05, 0.0125, 0.003] {
            let dp = reference_point(dt);
            for delta in [0.5, 0.01, 1e-4] {
                assert_eq!(compute_n_term(&dp, delta).unwrap(), scan_n_term(&dp, delta));
            }
        }
    }

    #[test]
    fn delta_validated() {
        let dp = reference_point(0.1);
        assert!(compute_n_term(&dp, 0.0).is_err());
        assert!(compute_n_term(&dp, 1.5).is_err());
        assert!(build_machine(&dp, -0.1).is_err());
    }

    #[test]
    fn machine_shape() {
        let dp = reference_point(0.1);
        let m = build_machine(&dp, DEFAULT_DELTA).unwrap();
        assert_eq!(m.num_states(), 29);
        for n in 0..m.n_term() {
            assert_eq!(m.emit_prob(n), emission_prob(&dp, n));
        }
        let upper = emission_prob(&dp, m.n_term());
        let lower = 1.0 - dp.gamma_max();
        assert!(m.terminal_emit() <= upper && m.terminal_emit() >= lower);
    }

    #[test]
    fn terminal_emit_matches_weighted_average() {
        let dp = reference_point(0.1);
        let m = build_machine(&dp, DEFAULT_DELTA).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for n in m.n_term()..5000 {
            let w = steady_state_prob(&dp, n);
            num += w * emission_prob(&dp, n);
            den += w;
        }
        assert_relative_eq!(m.terminal_emit(), num / den, max_relative = 1e-12);
    }

    #[test]
    fn memoryless_machine() {
        let dp = DiscreteParams::new(0.5, 0.9, 1.0).unwrap();
        let m = build_machine(&dp, 0.01).unwrap();
        assert_eq!(m.n_term(), 8);
        for &e in m.emit_probs() {
            assert_relative_eq!(e, 0.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn transitions_replay() {
        let m = build_machine(&reference_point(0.1), 0.01).unwrap();
        let seq = m.simulate(0, 5000, 3).unwrap();
        let mut state = 0;
        let mut zeros_since_one: Option<usize> = None;
        for &bit in &seq {
            state = m.next_state(state, bit);
            if bit == 1 {
                zeros_since_one = Some(0);
                assert_eq!(state, 0);
            } else if let Some(k) = zeros_since_one.as_mut() {
                *k += 1;
                assert_eq!(state, (*k).min(m.n_term()));
            }
        }
    }

    #[test]
    fn simulate_errors() {
        let m = build_machine(&reference_point(0.1), 0.01).unwrap();
        assert!(matches!(
            m.simulate(29, 10, 0),
            Err(Error::InvalidState {
                state: 29,
                states: 29
            })
        ));
        assert!(m.simulate(0, 0, 0).is_err());
        assert_eq!(m.simulate(28, 10, 0).unwrap().len(), 10);
    }

    #[test]
    fn simulate_deterministic() {
        let m = build_machine(&reference_point(0.1), 0.01).unwrap();
        assert_eq!(
            m.simulate(0, 1000, 11).unwrap(),
            m.simulate(0, 1000, 11).unwrap()
        );
        assert_ne!(
            m.simulate(0, 1000, 11).unwrap(),
            m.simulate(0, 1000, 12).unwrap()
        );
    }

    #[test]
    fn near_certain_emission_gives_all_ones() {
        let dp = DiscreteParams::new(1e-12, 0.5, 1.0).unwrap();
        let m = build_machine(&dp, 0.01).unwrap();
        assert!(m.simulate(0, 10_000, 5).unwrap().iter().all(|&b| b == 1));
    }

    #[test]
    fn bernoulli_fraction() {
        let dp = DiscreteParams::new(0.5, 0.9, 1.0).unwrap();
        let m = build_machine(&dp, 0.01).unwrap();
        let n = 1_000_000;
        let seq = m.simulate(0, n, 42).unwrap();
        let ones = seq.iter().filter(|&&b| b == 1).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() < 4.0 * 0.0005, "fraction {ones}");
    }

    #[test]
    fn gap_survival_matches_process() {
        let dp = reference_point(0.1);
        let m = build_machine(&dp, 0.01).unwrap();
        let seq = m.simulate(0, 1_000_000, 9).unwrap();
        let h = GapHistogram::from_sequence(&seq, 10);
        let total = h.total();
        for (n, s) in h.survival().into_iter().enumerate() {
            let phi = survival(&dp, n);
            let sigma = crate::stats::binomial_sigma(phi, total);
            assert!(
                (s - phi).abs() <= 4.0 * sigma.max(1e-12),
                "n={n} emp={s} phi={phi}"
            );
        }
    }

    #[test]
    fn truncated_entropy_geometric_half() {
        let dp = DiscreteParams::new(0.5, 0.9, 1.0).unwrap();
        // P(n) = 2^-(n+1) for n < 8, merged tail 2^-8.
        let expected: f64 =
            (1..=8).map(|k| k as f64 * 0.5f64.powi(k)).sum::<f64>() + 8.0 * 0.5f64.powi(8);
        assert_relative_eq!(expected, 1.9921875, epsilon = 1e-15);
        assert_relative_eq!(
            stat_complexity_truncated(&dp, 0.01).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert_eq!(truncated_entropy(&dp, 0), 0.0);
    }

    #[test]
    fn truncated_entropy_reference_baseline() {
        let dp = reference_point(0.1);
        let dist = aggregated_distribution(&dp, 28);
        assert_relative_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(
            stat_complexity_truncated(&dp, 0.01).unwrap(),
            3.244676642181583,
            epsilon = 1e-10
        );
    }

    #[test]
    fn top_complexity_values() {
        assert_relative_eq!(
            top_complexity_truncated(28),
            4.857980995127572,
            epsilon = 1e-12
        );
        assert_eq!(top_complexity_truncated(0), 0.0);
        assert_eq!(top_complexity_truncated(1), 1.0);
    }

    #[test]
    fn exact_complexity() {
        let dp = DiscreteParams::new(0.5, 0.9, 1.0).unwrap();
        assert_relative_eq!(stat_complexity_exact(&dp), 2.0, epsilon = 1e-10);
        let dp = reference_point(0.1);
        assert_relative_eq!(
            stat_complexity_exact(&dp),
            3.374876272670012,
            epsilon = 1e-9
        );
        assert!(stat_complexity_exact(&dp) >= stat_complexity_truncated(&dp, 0.01).unwrap());
    }

    #[test]
    fn exact_complexity_grows_with_precision() {
        let mut prev = f64::NEG_INFINITY;
        let mut dt = 0.2;
        for _ in 0..8 {
            let c = stat_complexity_exact(&reference_point(dt));
            assert!(c > prev);
            prev = c;
            dt /= 2.0;
        }
    }

    #[test]
    fn chain_stationary_matches_aggregated() {
        let dp = reference_point(0.1);
        let m = build_machine(&dp, 0.01).unwrap();
        let chain = m.chain_stationary_distribution();
        let agg = aggregated_distribution(&dp, m.n_term());
        assert_relative_eq!(chain.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for (a, b) in chain.iter().zip(&agg) {
            // stationary weighting of the terminal state makes the two coincide
            assert_relative_eq!(*a, *b, max_relative = 1e-10);
        }
    }
}
