//! Classical and quantum causal models of dual Poisson renewal processes.
//!
//! * [`process`]: the process family, its discretization and survival function.
//! * [`classical`]: the truncated ε-machine, its simulation and `Cμ`, `Dμ`.
//! * [`quantum`]: the two-qubit model (memory states, `U`, Kraus pair) and its simulation.
//! * [`metrics`]: the steady-state memory density matrix, `Cq`, `Dq` and per-point reports.
//! * [`experiments`]: precision and family sweeps, and the Monte Carlo equivalence study.
//! * [`verify`]: the invariant suite behind `qrenewal verify`.

// `!(x <= tol)` is used on purpose: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod process;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use process::{discretize, DiscreteParams, ProcessParams, SurvivalFunction};
