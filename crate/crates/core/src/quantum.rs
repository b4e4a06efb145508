//! Two-qubit quantum causal model.
//!
//! The memory is a single qubit. Each timestep a blank probe qubit `|0⟩` is
//! coupled to the memory by a fixed unitary `U` and measured; the outcome is
//! the emitted symbol and the memory is left in the correct conditional state.
//!
//! All memory states are superpositions of two generator states
//! `|φ1⟩ = |0⟩` and `|φ2⟩ = g|0⟩ + √(1−g²)|1⟩`:
//!
//! ```text
//! |ς(n)⟩ ∝ √(pΓ1ⁿ)|φ1⟩ + i√(p̄Γ2ⁿ)|φ2⟩
//! ```
//!
//! Two-qubit vectors are ordered memory-first: index `2·memory + probe`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::DiscreteParams;
use crate::rng::{self, streams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub const NORM_TOLERANCE: f64 = 1e-12;
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Normalized single-qubit state `amp0|0⟩ + amp1|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub amp0: Complex64,
    pub amp1: Complex64,
}

impl QubitState {
    pub const ZERO: QubitState = QubitState {
        amp0: Complex64 { re: 1.0, im: 0.0 },
        amp1: ZERO,
    };

    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let state = Self { amp0, amp1 };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "qubit state has squared norm {norm}"
            )));
        }
        Ok(state)
    }

    /// Rescales to unit norm. Returns `None` for the zero vector.
    pub fn normalized(amp0: Complex64, amp1: Complex64) -> Option<Self> {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        (norm > 0.0 && norm.is_finite()).then(|| Self {
            amp0: amp0 / norm,
            amp1: amp1 / norm,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    /// `|⟨self|other⟩|`; insensitive to global phase.
    pub fn fidelity(&self, other: &QubitState) -> f64 {
        self.inner(other).norm()
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.amp0, self.amp1]
    }

    /// `self ⊗ |probe⟩` in memory-first ordering.
    pub fn with_probe(&self, probe: usize) -> [Complex64; 4] {
        let mut v = [ZERO; 4];
        v[probe] = self.amp0;
        v[2 + probe] = self.amp1;
        v
    }
}

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

fn mat2_apply(m: &Matrix2, v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// 4×4 unitary on `|memory⟩ ⊗ |probe⟩`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitUnitary {
    m: Matrix4,
}

impl TwoQubitUnitary {
    /// Wraps a matrix after checking `U†U = I` to [`UNITARITY_TOLERANCE`].
    pub fn from_rows(m: Matrix4) -> Result<Self> {
        let u = Self { m };
        let err = u.unitarity_error();
        if !(err <= UNITARITY_TOLERANCE) {
            return Err(Error::InvalidParameter(format!(
                "matrix is not unitary: max |U†U - I| = {err:e}"
            )));
        }
        Ok(u)
    }

    pub fn rows(&self) -> &Matrix4 {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn column(&self, col: usize) -> [Complex64; 4] {
        std::array::from_fn(|r| self.m[r][col])
    }

    pub fn apply(&self, v: &[Complex64; 4]) -> [Complex64; 4] {
        std::array::from_fn(|r| (0..4).map(|k| self.m[r][k] * v[k]).sum())
    }

    /// Max-abs entry of `U†U − I`.
    pub fn unitarity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let dot: Complex64 = (0..4).map(|r| self.m[r][a].conj() * self.m[r][b]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// Conditional memory updates `E_j = ⟨j|U|0⟩` (probe subspace).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausPair {
    pub e0: Matrix2,
    pub e1: Matrix2,
}

impl KrausPair {
    pub fn get(&self, outcome: u8) -> &Matrix2 {
        if outcome == 0 {
            &self.e0
        } else {
            &self.e1
        }
    }

    /// Unnormalized post-measurement memory `E_outcome·state`.
    pub fn apply(&self, outcome: u8, state: &QubitState) -> [Complex64; 2] {
        mat2_apply(self.get(outcome), state.amplitudes())
    }

    /// Max-abs entry of `E0†E0 + E1†E1 − I`.
    pub fn completeness_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let s: Complex64 = [&self.e0, &self.e1]
                    .iter()
                    .flat_map(|e| (0..2).map(move |r| e[r][a].conj() * e[r][b]))
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

/// Overlap `g = ⟨φ1|φ2⟩ = √((1−Γ1)(1−Γ2)) / (1 − √(Γ1Γ2))`, real and positive.
pub fn overlap_g(dp: &DiscreteParams) -> f64 {
    ((dp.decay1() * dp.decay2()).sqrt() / dp.one_minus_sqrt_product()).min(1.0)
}

/// `√(1 − g²)`, evaluated as `|√Γ1 − √Γ2| / (1 − √(Γ1Γ2))` so that it keeps
/// full relative precision when the two rates are close.
pub fn overlap_complement(dp: &DiscreteParams) -> f64 {
    let (l1, l2) = (dp.log_gamma1(), dp.log_gamma2());
    let (hi, lo) = (l1.max(l2), l1.min(l2));
    let diff = -(0.5 * hi).exp() * (0.5 * (lo - hi)).exp_m1();
    diff / dp.one_minus_sqrt_product()
}

fn require_distinct(dp: &DiscreteParams) -> Result<()> {
    if dp.log_gamma1() == dp.log_gamma2() {
        Err(Error::Degenerate(
            "Gamma1 == Gamma2: generator states coincide (g = 1)".into(),
        ))
    } else {
        Ok(())
    }
}

/// `(|φ1⟩, |φ2⟩) = (|0⟩, g|0⟩ + √(1−g²)|1⟩)`.
pub fn generator_states(dp: &DiscreteParams) -> Result<(QubitState, QubitState)> {
    require_distinct(dp)?;
    let phi2 = QubitState {
        amp0: c(overlap_g(dp)),
        amp1: c(overlap_complement(dp)),
    };
    Ok((QubitState::ZERO, phi2))
}

/// Memory state `|ς(n)⟩` for causal state `n`.
pub fn memory_state(dp: &DiscreteParams, n: usize) -> Result<QubitState> {
    require_distinct(dp)?;
    Ok(memory_state_unchecked(dp, n))
}

fn memory_state_unchecked(dp: &DiscreteParams, n: usize) -> QubitState {
    let g = overlap_g(dp);
    let s = overlap_complement(dp);
    let (q1, q2) = dp.channel_posterior(n);
    let (r1, r2) = (q1.sqrt(), q2.sqrt());
    QubitState {
        amp0: c(r1) + I * (g * r2),
        amp1: I * (s * r2),
    }
}

/// The unitary `U` in the computational basis.
///
/// The two columns acting on a blank probe are fixed by the model; the two
/// acting on probe `|1⟩` are a canonical orthonormal completion.
pub fn build_unitary(dp: &DiscreteParams) -> Result<TwoQubitUnitary> {
    require_distinct(dp)?;
    let g = overlap_g(dp);
    let s = overlap_complement(dp);
    let (sp, spb) = (dp.p().sqrt(), dp.p_bar().sqrt());
    let (g1, g2) = (dp.gamma1(), dp.gamma2());
    let (a1, a2) = (dp.decay1(), dp.decay2());
    let reset0 = c(sp) + I * (spb * g);
    // sign(√Γ1 − √Γ2); the (√Γ2 − √Γ1)/√(1−g²) and (√(1−Γ2) − g√(1−Γ1))/√(1−g²)
    // factors reduce to −σ(1 − √(Γ1Γ2)) and σ√((1−Γ2)Γ1).
    let sigma = if dp.log_gamma1() > dp.log_gamma2() {
        1.0
    } else {
        -1.0
    };
    let cross = sigma * (a2 * g1).sqrt();

    let col_00 = [
        c(g1.sqrt()),
        reset0 * a1.sqrt(),
        ZERO,
        I * (a1.sqrt() * spb * s),
    ];
    let col_10 = [
        c(-sigma * g * dp.one_minus_sqrt_product()),
        reset0 * cross,
        c(g2.sqrt()),
        I * (cross * spb * s),
    ];
    let (col_01, col_11) = complete_basis(&col_00, &col_10)?;

    let cols = [col_00, col_01, col_10, col_11];
    let m: Matrix4 = std::array::from_fn(|r| std::array::from_fn(|k| cols[k][r]));
    TwoQubitUnitary::from_rows(m).map_err(|e| Error::Completion(e.to_string()))
}

/// Extends two orthonormal 4-vectors to an orthonormal basis. Each new vector
/// is the canonical basis vector with the largest residual after projecting out
/// the vectors found so far (lowest index on ties), orthogonalized twice.
fn complete_basis(
    a: &[Complex64; 4],
    b: &[Complex64; 4],
) -> Result<([Complex64; 4], [Complex64; 4])> {
    let mut basis: Vec<[Complex64; 4]> = vec![*a, *b];
    for _ in 0..2 {
        let mut best: Option<([Complex64; 4], f64)> = None;
        for k in 0..4 {
            let mut v = [ZERO; 4];
            v[k] = c(1.0);
            for _ in 0..2 {
                for q in &basis {
                    let proj: Complex64 = (0..4).map(|r| q[r].conj() * v[r]).sum();
                    for r in 0..4 {
                        v[r] -= proj * q[r];
                    }
                }
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(_, n)| norm > *n) {
                best = Some((v, norm));
            }
        }
        let (v, norm) = best.expect("four candidates");
        if norm < 1e-6 {
            return Err(Error::Completion(format!(
                "residual norm {norm:e} too small to extend basis"
            )));
        }
        basis.push(v.map(|x| x / norm));
    }
    Ok((basis[2], basis[3]))
}

/// `E_j[m', m] = U[2m' + j, 2m]`.
pub fn kraus_ops(u: &TwoQubitUnitary) -> KrausPair {
    let block = |j: usize| -> Matrix2 {
        std::array::from_fn(|mp| std::array::from_fn(|m| u.entry(2 * mp + j, 2 * m)))
    };
    KrausPair {
        e0: block(0),
        e1: block(1),
    }
}

/// A fully built quantum causal model for one parameter point.
#[derive(Debug, Clone)]
pub struct QuantumModel {
    dp: DiscreteParams,
    g: f64,
    unitary: TwoQubitUnitary,
    kraus: KrausPair,
}

impl QuantumModel {
    pub fn new(dp: &DiscreteParams) -> Result<Self> {
        let unitary = build_unitary(dp)?;
        let kraus = kraus_ops(&unitary);
        Ok(Self {
            dp: *dp,
            g: overlap_g(dp),
            unitary,
            kraus,
        })
    }

    pub fn params(&self) -> &DiscreteParams {
        &self.dp
    }

    pub fn overlap(&self) -> f64 {
        self.g
    }

    pub fn unitary(&self) -> &TwoQubitUnitary {
        &self.unitary
    }

    pub fn kraus(&self) -> &KrausPair {
        &self.kraus
    }

    pub fn memory_state(&self, n: usize) -> QubitState {
        memory_state_unchecked(&self.dp, n)
    }

    /// The state adopted after every event, `|ς(0)⟩ = √p|φ1⟩ + i√p̄|φ2⟩`.
    pub fn reset_state(&self) -> QubitState {
        self.memory_state(0)
    }

    /// Probability that the next output is 1 given the memory.
    pub fn emission_probability(&self, memory: &QubitState) -> f64 {
        let [x, y] = self.kraus.apply(1, memory);
        (x.norm_sqr() + y.norm_sqr()).clamp(0.0, 1.0)
    }

    /// One timestep: couple a blank probe, measure it, update the memory.
    pub fn step<R: Rng + ?Sized>(&self, memory: &QubitState, rng: &mut R) -> (u8, QubitState) {
        let p1 = self.emission_probability(memory);
        let outcome = u8::from(rng.random::<f64>() < p1);
        let [x, y] = self.kraus.apply(outcome, memory);
        // a zero-probability branch is never sampled, so the update is nonzero
        let next = QubitState::normalized(x, y).unwrap_or(*memory);
        (outcome, next)
    }

    /// Same timestep evaluated on the full two-qubit statevector.
    pub fn step_statevector<R: Rng + ?Sized>(
        &self,
        memory: &QubitState,
        rng: &mut R,
    ) -> (u8, QubitState) {
        let out = self.unitary.apply(&memory.with_probe(0));
        let p1 = (out[1].norm_sqr() + out[3].norm_sqr()).clamp(0.0, 1.0);
        let outcome = u8::from(rng.random::<f64>() < p1);
        let k = outcome as usize;
        let next = QubitState::normalized(out[k], out[2 + k]).unwrap_or(*memory);
        (outcome, next)
    }

    /// Runs the protocol for `steps` timesteps from `|ς(start_n)⟩`, drawing from
    /// the quantum child stream of `seed`.
    pub fn simulate(&self, start_n: usize, steps: usize, seed: u64) -> Result<Vec<u8>> {
        let mut rng = rng::stream(seed, streams::QUANTUM);
        self.run(start_n, steps, &mut rng, Self::step)
    }

    /// [`simulate`](Self::simulate) through the full statevector instead of the
    /// Kraus pair. Consumes randomness identically.
    pub fn simulate_statevector(&self, start_n: usize, steps: usize, seed: u64) -> Result<Vec<u8>> {
        let mut rng = rng::stream(seed, streams::QUANTUM);
        self.run(start_n, steps, &mut rng, Self::step_statevector)
    }

    fn run<R: Rng>(
        &self,
        start_n: usize,
        steps: usize,
        rng: &mut R,
        step: fn(&Self, &QubitState, &mut R) -> (u8, QubitState),
    ) -> Result<Vec<u8>> {
        if steps == 0 {
            return Err(Error::InvalidParameter("steps must be positive".into()));
        }
        let mut memory = self.memory_state(start_n);
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (bit, next) = step(self, &memory, rng);
            out.push(bit);
            memory = next;
        }
        Ok(out)
    }

    /// Probability of `n` consecutive 0s from the reset state, computed as the
    /// post-selected norm `‖(Π0·U)ⁿ |ς(0)⟩|0⟩‖²` on the two-qubit space.
    pub fn quantum_survival(&self, n: usize) -> f64 {
        self.quantum_survival_curve(n)[n]
    }

    /// [`quantum_survival`](Self::quantum_survival) for every `n` in `0..=last`,
    /// in a single pass.
    pub fn quantum_survival_curve(&self, last: usize) -> Vec<f64> {
        let mut v = self.reset_state().with_probe(0);
        let mut curve = Vec::with_capacity(last + 1);
        curve.push(v.iter().map(|x| x.norm_sqr()).sum());
        for _ in 0..last {
            v = self.unitary.apply(&v);
            v[1] = ZERO;
            v[3] = ZERO;
            curve.push(v.iter().map(|x| x.norm_sqr()).sum());
        }
        curve
    }

    pub fn export(&self) -> ModelExport {
        let to_rows = |rows: &[[Complex64; 4]]| rows.iter().map(|r| r.to_vec()).collect();
        let to_rows2 = |m: &Matrix2| m.iter().map(|r| r.to_vec()).collect();
        ModelExport {
            gamma1: self.dp.gamma1(),
            gamma2: self.dp.gamma2(),
            p: self.dp.p(),
            g: self.g,
            basis: BASIS_LABELS.iter().map(|s| s.to_string()).collect(),
            unitary: to_rows(&self.unitary.m),
            e0: to_rows2(&self.kraus.e0),
            e1: to_rows2(&self.kraus.e1),
        }
    }
}

pub const BASIS_LABELS: [&str; 4] = ["00", "01", "10", "11"];

/// JSON document carrying `U`, `E0`, `E1` as row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelExport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: f64,
    pub g: f64,
    /// Labels `|memory probe⟩` of the row/column order.
    pub basis: Vec<String>,
    pub unitary: Vec<Vec<Complex64>>,
    pub e0: Vec<Vec<Complex64>>,
    pub e1: Vec<Vec<Complex64>>,
}

impl ModelExport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates an exported document: shapes, basis labels,
    /// unitarity, and that the Kraus blocks agree with the unitary.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelExport = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.basis.iter().map(String::as_str).ne(BASIS_LABELS) {
            return Err(Error::Decode(format!("unexpected basis {:?}", self.basis)));
        }
        let u = TwoQubitUnitary::from_rows(square::<4>(&self.unitary, "unitary")?)
            .map_err(|e| Error::Decode(e.to_string()))?;
        let kraus = KrausPair {
            e0: square::<2>(&self.e0, "e0")?,
            e1: square::<2>(&self.e1, "e1")?,
        };
        let derived = kraus_ops(&u);
        let mismatch = [(&kraus.e0, &derived.e0), (&kraus.e1, &derived.e1)]
            .iter()
            .flat_map(|(a, b)| {
                (0..2).flat_map(move |r| (0..2).map(move |k| (a[r][k] - b[r][k]).norm()))
            })
            .fold(0.0f64, f64::max);
        if !(mismatch <= UNITARITY_TOLERANCE) {
            return Err(Error::Decode(format!(
                "Kraus blocks disagree with unitary by {mismatch:e}"
            )));
        }
        Ok(())
    }

    pub fn unitary(&self) -> Result<TwoQubitUnitary> {
        TwoQubitUnitary::from_rows(square::<4>(&self.unitary, "unitary")?)
    }
}

fn square<const N: usize>(rows: &[Vec<Complex64>], name: &str) -> Result<[[Complex64; N]; N]> {
    if rows.len() != N || rows.iter().any(|r| r.len() != N) {
        return Err(Error::Decode(format!("{name} must be {N}x{N}")));
    }
    if rows
        .iter()
        .flatten()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Decode(format!("{name} has non-finite entries")));
    }
    Ok(std::array::from_fn(|r| std::array::from_fn(|k| rows[r][k])))
}
