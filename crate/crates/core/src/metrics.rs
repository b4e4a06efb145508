//! Memory metrics: classical `Cμ`, `Dμ` and quantum `Cq`, `Dq`.
//!
//! The quantum memory's steady state is
//! `ρ = Σₙ μΦ(n)|ς(n)⟩⟨ς(n)|`, which sums in closed form to a 2×2 matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{
    compute_n_term, stat_complexity_exact, top_complexity_truncated, truncated_entropy,
};
use crate::error::{Error, Result};
use crate::process::{
    normalization_mu, steady_state_prob, tail_cutoff, DiscreteParams, ProcessParams, TAIL_TOLERANCE,
};
use crate::quantum::{memory_state, overlap_complement, overlap_g, Matrix2, QubitState};
use crate::stats::entropy_bits;

/// Relative eigenvalue cutoff for the rank in `Dq`.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const DENSITY_TOLERANCE: f64 = 1e-12;

/// 2×2 density matrix of the memory qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    m: Matrix2,
}

impl DensityMatrix2 {
    /// Checks Hermiticity, unit trace and positivity to 1e-12.
    pub fn new(m: Matrix2) -> Result<Self> {
        let rho = Self { m };
        let herm = (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if !(herm <= DENSITY_TOLERANCE) {
            return Err(Error::InvalidParameter(format!(
                "density matrix not Hermitian ({herm:e})"
            )));
        }
        let trace = rho.trace();
        if !((trace - 1.0).abs() <= DENSITY_TOLERANCE) {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {trace}"
            )));
        }
        let (_, low) = rho.raw_eigenvalues();
        if !(low >= -DENSITY_TOLERANCE) {
            return Err(Error::InvalidParameter(format!(
                "negative eigenvalue {low:e}"
            )));
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(state: &QubitState) -> Self {
        let a = state.amplitudes();
        Self {
            m: std::array::from_fn(|r| std::array::from_fn(|c| a[r] * a[c].conj())),
        }
    }

    pub fn entries(&self) -> &Matrix2 {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    fn raw_eigenvalues(&self) -> (f64, f64) {
        let (a, d) = (self.m[0][0].re, self.m[1][1].re);
        let half_trace = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + self.m[0][1].norm_sqr()).sqrt();
        (half_trace + radius, half_trace - radius)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix2) -> f64 {
        (0..2)
            .flat_map(|r| (0..2).map(move |c| (r, c)))
            .map(|(r, c)| (self.m[r][c] - other.m[r][c]).norm())
            .fold(0.0, f64::max)
    }
}

/// Closed-form steady-state density matrix.
pub fn density_matrix(dp: &DiscreteParams) -> Result<DensityMatrix2> {
    if dp.log_gamma1() == dp.log_gamma2() {
        return Err(Error::Degenerate(
            "Gamma1 == Gamma2: quantum model undefined (g = 1)".into(),
        ));
    }
    let mu = normalization_mu(dp);
    let g = overlap_g(dp);
    let s = overlap_complement(dp);
    let (p, pb) = (dp.p(), dp.p_bar());
    let (a1, a2) = (dp.decay1(), dp.decay2());
    let b = dp.one_minus_sqrt_product();
    let r00 = mu * (p / a1 + g * g * pb / a2);
    let r11 = mu * s * s * pb / a2;
    let off = Complex64::new(mu * g * s * pb / a2, -mu * s * (p * pb).sqrt() / b);
    DensityMatrix2::new([[r00.into(), off], [off.conj(), r11.into()]])
}

/// `Σₙ μΦ(n)|ς(n)⟩⟨ς(n)|`, truncated once the remaining steady-state mass is
/// below [`TAIL_TOLERANCE`]. Independent of the closed form.
pub fn density_matrix_by_summation(dp: &DiscreteParams) -> Result<DensityMatrix2> {
    let last = tail_cutoff(dp, TAIL_TOLERANCE);
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for n in 0..=last {
        let weight = steady_state_prob(dp, n);
        let proj = DensityMatrix2::pure(&memory_state(dp, n)?);
        for (row, proj_row) in m.iter_mut().zip(proj.m) {
            for (entry, p) in row.iter_mut().zip(proj_row) {
                *entry += weight * p;
            }
        }
    }
    Ok(DensityMatrix2 { m })
}

/// Steady-state memory density for any valid parameters. Off the
/// non-extremal regime every memory state coincides, so `ρ` is the pure
/// projector onto that state.
pub fn steady_state_density(dp: &DiscreteParams) -> Result<DensityMatrix2> {
    if dp.is_non_extremal() {
        density_matrix(dp)
    } else {
        Ok(DensityMatrix2::pure(&collapsed_memory_state(dp)))
    }
}

/// The single memory state shared by all causal states when `p ∈ {0, 1}` or
/// `Γ1 = Γ2`.
fn collapsed_memory_state(dp: &DiscreteParams) -> QubitState {
    if dp.log_gamma1() == dp.log_gamma2() || dp.p() == 1.0 {
        QubitState::ZERO
    } else {
        // p = 0: only |φ2⟩ survives
        QubitState {
            amp0: overlap_g(dp).into(),
            amp1: overlap_complement(dp).into(),
        }
    }
}

/// Eigenvalues `λ1 ≥ λ2` with `λ1 + λ2 = 1`, clamped to `[0, 1]`.
pub fn eigvals2(rho: &DensityMatrix2) -> (f64, f64) {
    let (hi, _) = rho.raw_eigenvalues();
    let hi = hi.clamp(0.0, 1.0);
    (hi, 1.0 - hi)
}

/// von Neumann entropy in bits.
pub fn cq(rho: &DensityMatrix2) -> f64 {
    let (l1, l2) = eigvals2(rho);
    entropy_bits([l1, l2])
}

/// `log2 rank(ρ)`, counting eigenvalues above `rank_tol·λ1`.
pub fn dq(rho: &DensityMatrix2, rank_tol: f64) -> f64 {
    let (l1, l2) = eigvals2(rho);
    let rank = [l1, l2].iter().filter(|&&l| l > rank_tol * l1).count();
    (rank as f64).log2()
}

/// `(Cq, Dq)` at a parameter point, using the pure-state shortcut off the
/// non-extremal regime.
pub fn quantum_memory(dp: &DiscreteParams) -> Result<(f64, f64)> {
    if !dp.is_non_extremal() {
        return Ok((0.0, 0.0));
    }
    let rho = density_matrix(dp)?;
    Ok((cq(&rho), dq(&rho, DEFAULT_RANK_TOL)))
}

/// All memory metrics at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: f64,
    pub dt: f64,
    pub delta: f64,
    pub g: f64,
    pub mu: f64,
    pub n_term: usize,
    pub cmu_exact: f64,
    pub cmu_trunc: f64,
    pub dmu_trunc: f64,
    pub cq: f64,
    pub dq: f64,
}

/// Evaluates every metric. Equal rates are rejected because the quantum
/// model does not exist there.
pub fn report(params: &ProcessParams, delta: f64) -> Result<MetricsReport> {
    let dp = params.discretize()?;
    if dp.log_gamma1() == dp.log_gamma2() {
        return Err(Error::Degenerate(format!(
            "gamma1 == gamma2 == {}: quantum model undefined",
            params.gamma1
        )));
    }
    let n_term = compute_n_term(&dp, delta)?;
    let (cq, dq) = quantum_memory(&dp)?;
    Ok(MetricsReport {
        gamma1: params.gamma1,
        gamma2: params.gamma2,
        p: params.p,
        dt: params.dt,
        delta,
        g: overlap_g(&dp),
        mu: normalization_mu(&dp),
        n_term,
        cmu_exact: stat_complexity_exact(&dp),
        cmu_trunc: truncated_entropy(&dp, n_term),
        dmu_trunc: top_complexity_truncated(n_term),
        cq,
        dq,
    })
}

/// Convergence threshold on `|ΔCq|` between successive timestep halvings.
pub const CONTINUUM_TOLERANCE: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Result of the continuum-limit extrapolation of `Cq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumCq {
    pub cq: f64,
    pub dq: f64,
    /// Timestep of the final evaluation, in units of `1/gamma2`.
    pub dt: f64,
    pub halvings: usize,
    pub converged: bool,
    /// True on the lines `p ∈ {0, 1}` or `gamma = 1`, where `ρ` is pure.
    pub degenerate: bool,
}

/// `Cq` in the `dt → 0` limit for the family point `gamma = gamma1/gamma2`, `p`.
///
/// With `gamma2 = 1`, the timestep starts at `0.1 / max(gamma, 1)` and halves
/// until `Cq` moves by less than [`CONTINUUM_TOLERANCE`].
pub fn continuum_cq(gamma: f64, p: f64) -> Result<ContinuumCq> {
    let fastest = gamma.max(1.0);
    let mut dt = 0.1 / fastest;
    let point = |dt: f64| ProcessParams::new(gamma, 1.0, p, dt)?.discretize();
    let dp = point(dt)?;
    if !dp.is_non_extremal() {
        return Ok(ContinuumCq {
            cq: 0.0,
            dq: 0.0,
            dt,
            halvings: 0,
            converged: true,
            degenerate: true,
        });
    }
    let mut prev = quantum_memory(&dp)?;
    for halvings in 1..=MAX_HALVINGS {
        dt *= 0.5;
        let next = quantum_memory(&point(dt)?)?;
        if (next.0 - prev.0).abs() < CONTINUUM_TOLERANCE {
            return Ok(ContinuumCq {
                cq: next.0,
                dq: next.1,
                dt,
                halvings,
                converged: true,
                degenerate: false,
            });
        }
        prev = next;
    }
    Ok(ContinuumCq {
        cq: prev.0,
        dq: prev.1,
        dt,
        halvings: MAX_HALVINGS,
        converged: false,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_point(dt: f64) -> DiscreteParams {
        ProcessParams::new(12.0, 1.0, 0.9, dt)
            .unwrap()
            .discretize()
            .unwrap()
    }

    #[test]
    fn closed_form_matches_summation() {
        let dp = reference_point(0.1);
        let closed = density_matrix(&dp).unwrap();
        let summed = density_matrix_by_summation(&dp).unwrap();
        assert!(closed.max_abs_diff(&summed) < 1e-9);
        assert_relative_eq!(closed.trace(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(cq(&closed), cq(&summed), epsilon = 1e-8);
    }

    #[test]
    fn reference_regression_values() {
        let rho = density_matrix(&reference_point(0.1)).unwrap();
        let m = rho.entries();
        assert_relative_eq!(m[0][0].re, 0.68148294, epsilon = 1e-8);
        assert_relative_eq!(m[0][1].re, 0.20411122, epsilon = 1e-8);
        assert_relative_eq!(m[0][1].im, -0.225965952, epsilon = 1e-8);
        let (l1, l2) = eigvals2(&rho);
        assert_relative_eq!(l1, 0.85448281, epsilon = 1e-8);
        assert_relative_eq!(l2, 0.14551719, epsilon = 1e-8);
        assert_relative_eq!(cq(&rho), 0.5985074410361174, epsilon = 1e-12);
        assert_eq!(dq(&rho, DEFAULT_RANK_TOL), 1.0);
    }

    #[test]
    fn single_channel_is_pure() {
        let dp = DiscreteParams::new(0.4, 0.9, 1.0).unwrap();
        let rho = density_matrix(&dp).unwrap();
        assert_eq!(rho, DensityMatrix2::pure(&QubitState::ZERO));
        assert_eq!(eigvals2(&rho), (1.0, 0.0));
        assert_eq!(cq(&rho), 0.0);
        assert_eq!(dq(&rho, DEFAULT_RANK_TOL), 0.0);
    }

    #[test]
    fn maximally_mixed() {
        let half = Complex64::new(0.5, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let rho = DensityMatrix2::new([[half, zero], [zero, half]]).unwrap();
        assert_eq!(eigvals2(&rho), (0.5, 0.5));
        assert_eq!(cq(&rho), 1.0);
        assert_eq!(dq(&rho, DEFAULT_RANK_TOL), 1.0);
    }

    #[test]
    fn invalid_density_rejected() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!(DensityMatrix2::new([[one, zero], [zero, one]]).is_err());
        let half = Complex64::new(0.5, 0.0);
        let bad = Complex64::new(0.0, 0.6);
        assert!(DensityMatrix2::new([[half, bad], [bad, half]]).is_err());
        let big = Complex64::new(0.9, 0.0);
        assert!(DensityMatrix2::new([[half, big], [big, half]]).is_err());
    }

    #[test]
    fn degenerate_lines() {
        let same = DiscreteParams::new(0.7, 0.7, 0.4).unwrap();
        assert!(matches!(density_matrix(&same), Err(Error::Degenerate(_))));
        for dp in [
            same,
            DiscreteParams::new(0.3, 0.8, 0.0).unwrap(),
            DiscreteParams::new(0.3, 0.8, 1.0).unwrap(),
        ] {
            assert_eq!(quantum_memory(&dp).unwrap(), (0.0, 0.0));
            let rho = steady_state_density(&dp).unwrap();
            assert_eq!(dq(&rho, DEFAULT_RANK_TOL), 0.0);
            assert!(cq(&rho) < 1e-12);
        }
    }

    #[test]
    fn exchange_symmetry_exact() {
        for dp in [
            reference_point(0.1),
            reference_point(0.003),
            DiscreteParams::new(0.2, 0.99, 0.37).unwrap(),
        ] {
            let a = cq(&density_matrix(&dp).unwrap());
            let b = cq(&density_matrix(&dp.swapped()).unwrap());
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn report_reference_point() {
        let params = ProcessParams::new(12.0, 1.0, 0.9, 0.1).unwrap();
        let r = report(&params, 0.01).unwrap();
        assert_eq!(r.n_term, 28);
        assert_eq!(r.dq, 1.0);
        assert!(r.cq <= 1.0);
        assert_relative_eq!(r.dmu_trunc, 29f64.log2(), epsilon = 1e-12);
        assert!(r.cmu_trunc <= r.cmu_exact);
    }

    #[test]
    fn report_single_channel_and_degenerate() {
        let r = report(&ProcessParams::new(3.0, 1.0, 1.0, 0.1).unwrap(), 0.01).unwrap();
        assert_eq!((r.cq, r.dq), (0.0, 0.0));
        let dp = ProcessParams::new(3.0, 1.0, 1.0, 0.1)
            .unwrap()
            .discretize()
            .unwrap();
        assert_relative_eq!(
            r.cmu_trunc,
            truncated_entropy(&dp, r.n_term),
            epsilon = 1e-15
        );
        assert!(matches!(
            report(&ProcessParams::new(1.0, 1.0, 0.5, 0.1).unwrap(), 0.01),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn report_symmetric_pair() {
        // (γ, p) with γ2 = 1 against (1/γ, 1 − p) with the timestep rescaled by γ
        let gamma = 7.0;
        let a = report(&ProcessParams::new(gamma, 1.0, 0.3, 0.02).unwrap(), 0.01).unwrap();
        let b = report(
            &ProcessParams::new(1.0 / gamma, 1.0, 0.7, 0.02 * gamma).unwrap(),
            0.01,
        )
        .unwrap();
        assert!((a.cq - b.cq).abs() < 1e-9);
    }

    #[test]
    fn cq_converges_as_dt_shrinks() {
        let mut dt = 0.2;
        let mut prev = cq(&density_matrix(&reference_point(dt)).unwrap());
        let mut last_change = f64::INFINITY;
        for _ in 0..14 {
            dt /= 2.0;
            let next = cq(&density_matrix(&reference_point(dt)).unwrap());
            assert!(next <= 1.0);
            last_change = (next - prev).abs();
            prev = next;
        }
        assert!(last_change < 1e-3);
    }

    #[test]
    fn continuum_symmetry_and_degenerate() {
        let a = continuum_cq(100.0, 0.9).unwrap();
        let b = continuum_cq(0.01, 0.1).unwrap();
        assert!(a.converged && b.converged);
        assert!((a.cq - b.cq).abs() < 1e-9);
        assert_eq!(a.dq, 1.0);
        let d = continuum_cq(1.0, 0.5).unwrap();
        assert!(d.degenerate);
        assert_eq!((d.cq, d.dq), (0.0, 0.0));
        assert!(continuum_cq(-1.0, 0.5).is_err());
    }
}
