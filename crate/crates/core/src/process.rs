//! Dual Poisson renewal processes.
//!
//! An event is emitted through one of two hidden decay channels with rates
//! `gamma1` and `gamma2`; after every event the next channel is chosen afresh,
//! channel 1 with probability `p`. Observed at a finite timestep `dt`, the gap
//! between consecutive events survives `n` steps with probability
//!
//! ```text
//! Φ(n) = p·Γ1ⁿ + (1 − p)·Γ2ⁿ,   Γj = exp(−γj·dt)
//! ```
//!
//! Everything downstream (classical and quantum models, metrics) takes its
//! probabilities from this module.
//!
//! Internally the per-step survival factors are stored as logarithms so that
//! `1 − Γ`, `1 − √(Γ1Γ2)` and large powers stay accurate as `dt → 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail mass below which infinite sums over causal states are cut off.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Continuous-time description of a dual Poisson process observed at timestep `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: f64,
    pub dt: f64,
}

impl ProcessParams {
    pub fn new(gamma1: f64, gamma2: f64, p: f64, dt: f64) -> Result<Self> {
        let params = Self {
            gamma1,
            gamma2,
            p,
            dt,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("gamma1", self.gamma1)?;
        check_positive("gamma2", self.gamma2)?;
        check_positive("dt", self.dt)?;
        check_probability("p", self.p)?;
        Ok(())
    }

    /// True when `p ∉ {0, 1}` and the two rates differ: the regime in which
    /// every causal state has a distinct future.
    pub fn is_non_extremal(&self) -> bool {
        self.p != 0.0 && self.p != 1.0 && self.gamma1 != self.gamma2
    }

    pub fn discretize(&self) -> Result<DiscreteParams> {
        discretize(self)
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}

fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {value}"
        )))
    }
}

/// Smallest accepted `ln Γ`: below it `Γ` is no longer a normal float.
pub const MIN_LOG_GAMMA: f64 = -708.3964185322641;

/// Per-step survival factors `Γ1`, `Γ2` and the channel-1 probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteParams {
    log_gamma1: f64,
    log_gamma2: f64,
    p: f64,
}

/// `Γj = exp(−γj·dt)`; `p` is copied through.
pub fn discretize(params: &ProcessParams) -> Result<DiscreteParams> {
    params.validate()?;
    DiscreteParams::from_log_factors(
        -params.gamma1 * params.dt,
        -params.gamma2 * params.dt,
        params.p,
    )
}

impl DiscreteParams {
    /// Builds from survival factors given directly, each in the open interval (0, 1).
    pub fn new(gamma1: f64, gamma2: f64, p: f64) -> Result<Self> {
        for (name, value) in [("Gamma1", gamma1), ("Gamma2", gamma2)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {value}"
                )));
            }
        }
        Self::from_log_factors(gamma1.ln(), gamma2.ln(), p)
    }

    /// Builds from `ln Γ1`, `ln Γ2`, each strictly negative and no smaller than
    /// [`MIN_LOG_GAMMA`].
    pub fn from_log_factors(log_gamma1: f64, log_gamma2: f64, p: f64) -> Result<Self> {
        for (name, value) in [("ln Gamma1", log_gamma1), ("ln Gamma2", log_gamma2)] {
            if !(MIN_LOG_GAMMA..0.0).contains(&value) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [{MIN_LOG_GAMMA:.3}, 0), got {value} (rate x dt too large)"
                )));
            }
        }
        check_probability("p", p)?;
        Ok(Self {
            log_gamma1,
            log_gamma2,
            p,
        })
    }

    pub fn gamma1(&self) -> f64 {
        self.log_gamma1.exp()
    }

    pub fn gamma2(&self) -> f64 {
        self.log_gamma2.exp()
    }

    pub fn log_gamma1(&self) -> f64 {
        self.log_gamma1
    }

    pub fn log_gamma2(&self) -> f64 {
        self.log_gamma2
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_bar(&self) -> f64 {
        1.0 - self.p
    }

    /// `1 − Γ1`, accurate for `Γ1` close to one.
    pub fn decay1(&self) -> f64 {
        -self.log_gamma1.exp_m1()
    }

    /// `1 − Γ2`, accurate for `Γ2` close to one.
    pub fn decay2(&self) -> f64 {
        -self.log_gamma2.exp_m1()
    }

    /// `1 − √(Γ1·Γ2)`.
    pub fn one_minus_sqrt_product(&self) -> f64 {
        -(0.5 * (self.log_gamma1 + self.log_gamma2)).exp_m1()
    }

    /// The slower of the two per-step survival factors.
    pub fn gamma_max(&self) -> f64 {
        self.log_gamma1.max(self.log_gamma2).exp()
    }

    pub fn is_non_extremal(&self) -> bool {
        self.p != 0.0 && self.p != 1.0 && self.log_gamma1 != self.log_gamma2
    }

    /// The same process with the channel labels exchanged: `(Γ2, Γ1, 1 − p)`.
    pub fn swapped(&self) -> Self {
        Self {
            log_gamma1: self.log_gamma2,
            log_gamma2: self.log_gamma1,
            p: 1.0 - self.p,
        }
    }

    /// Posterior probability of each channel given that the current gap has
    /// already lasted `n` steps: `(pΓ1ⁿ, p̄Γ2ⁿ) / Φ(n)`. Evaluated in log space
    /// so it stays finite long after `Φ(n)` underflows.
    pub fn channel_posterior(&self, n: usize) -> (f64, f64) {
        if self.p == 1.0 {
            return (1.0, 0.0);
        }
        if self.p == 0.0 {
            return (0.0, 1.0);
        }
        let nf = n as f64;
        let a = self.p.ln() + nf * self.log_gamma1;
        let b = self.p_bar().ln() + nf * self.log_gamma2;
        let m = a.max(b);
        let (ea, eb) = ((a - m).exp(), (b - m).exp());
        let total = ea + eb;
        (ea / total, eb / total)
    }

    /// `ln Φ(n)`.
    pub fn log_survival(&self, n: usize) -> f64 {
        let nf = n as f64;
        let terms = [
            (self.p, nf * self.log_gamma1),
            (self.p_bar(), nf * self.log_gamma2),
        ];
        let m = terms
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(_, l)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, l)| w * (l - m).exp())
            .sum();
        m + sum.ln()
    }
}

/// A renewal process described by its gap survival function.
///
/// Only the dual Poisson family implements this today; the models in this crate
/// depend on the two-channel structure beyond this trait.
pub trait SurvivalFunction {
    /// Probability that a gap between consecutive events lasts at least `n` steps.
    fn survival(&self, n: usize) -> f64;

    /// Probability that the next event occurs at this step given `n` silent steps so far.
    fn hazard(&self, n: usize) -> f64 {
        let now = self.survival(n);
        1.0 - self.survival(n + 1) / now
    }
}

impl SurvivalFunction for DiscreteParams {
    fn survival(&self, n: usize) -> f64 {
        survival(self, n)
    }

    fn hazard(&self, n: usize) -> f64 {
        emission_prob(self, n)
    }
}

/// `Φ(n) = pΓ1ⁿ + p̄Γ2ⁿ`.
pub fn survival(dp: &DiscreteParams, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    dp.p * (nf * dp.log_gamma1).exp() + dp.p_bar() * (nf * dp.log_gamma2).exp()
}

/// Probability of exactly `n_future` further silent steps before the next event,
/// given `n_past` silent steps since the last one.
pub fn conditional_gap(dp: &DiscreteParams, n_past: usize, n_future: usize) -> f64 {
    let total = n_past + n_future;
    let ratio = (dp.log_survival(total) - dp.log_survival(n_past)).exp();
    ratio * emission_prob(dp, total)
}

/// Probability of emitting an event from causal state `n`: `1 − Φ(n+1)/Φ(n)`.
pub fn emission_prob(dp: &DiscreteParams, n: usize) -> f64 {
    let (q1, q2) = dp.channel_posterior(n);
    q1 * dp.decay1() + q2 * dp.decay2()
}

/// `μ = 1 / Σₙ Φ(n)`.
pub fn normalization_mu(dp: &DiscreteParams) -> f64 {
    let (a1, a2) = (dp.decay1(), dp.decay2());
    a1 * a2 / (dp.p * a2 + dp.p_bar() * a1)
}

/// Steady-state probability of causal state `n`: `μΦ(n)`.
pub fn steady_state_prob(dp: &DiscreteParams, n: usize) -> f64 {
    normalization_mu(dp) * survival(dp, n)
}

/// `Σ_{k ≥ n} Φ(k)` in closed form.
pub fn survival_tail_sum(dp: &DiscreteParams, n: usize) -> f64 {
    let nf = n as f64;
    let mut sum = 0.0;
    if dp.p > 0.0 {
        sum += dp.p * (nf * dp.log_gamma1).exp() / dp.decay1();
    }
    if dp.p_bar() > 0.0 {
        sum += dp.p_bar() * (nf * dp.log_gamma2).exp() / dp.decay2();
    }
    sum
}

/// Last causal-state index that must be kept so that the neglected steady-state
/// mass, bounded by `μ·Γmaxⁿ⁺¹ / (1 − Γmax)`, falls below `tol`.
pub fn tail_cutoff(dp: &DiscreteParams, tol: f64) -> usize {
    let mu = normalization_mu(dp);
    let log_max = dp.log_gamma1.max(dp.log_gamma2);
    let decay_max = -log_max.exp_m1();
    let bound = |n: usize| mu * (((n + 1) as f64) * log_max).exp() / decay_max;
    // Solve the bound for n, then nudge to the exact smallest index.
    let estimate = ((tol * decay_max / mu).ln() / log_max - 1.0)
        .ceil()
        .max(0.0) as usize;
    let mut n = estimate;
    while n > 0 && bound(n - 1) < tol {
        n -= 1;
    }
    while bound(n) >= tol {
        n += 1;
    }
    n
}
