//! Parameter sweeps and the Monte Carlo equivalence study.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{build_machine, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::metrics::{continuum_cq, report};
use crate::process::{survival, ProcessParams};
use crate::quantum::QuantumModel;
use crate::stats::{binomial_sigma, total_variation, GapHistogram};

/// Geometric grid of timesteps from `dt_max` down to `dt_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionGrid {
    pub dt_max: f64,
    pub dt_min: f64,
    pub points: usize,
}

impl Default for PrecisionGrid {
    /// `0.2` down to `0.2 / 2¹⁰`, one point per halving.
    fn default() -> Self {
        Self {
            dt_max: 0.2,
            dt_min: 0.2 / 1024.0,
            points: 11,
        }
    }
}

impl PrecisionGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.dt_min > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "timestep bounds must be positive and finite, got [{}, {}]",
                self.dt_min, self.dt_max
            )));
        }
        if self.dt_min > self.dt_max {
            return Err(Error::InvalidParameter(format!(
                "timestep bounds reversed: dt_max {} < dt_min {}",
                self.dt_max, self.dt_min
            )));
        }
        if self.points == 0 {
            return Err(Error::InvalidParameter(
                "grid needs at least one point".into(),
            ));
        }
        if self.points == 1 {
            return Ok(vec![self.dt_max]);
        }
        let log_ratio = (self.dt_min / self.dt_max).log2();
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| self.dt_max * ((k as f64 * log_ratio) / last).exp2())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisScale {
    Linear,
    Log,
}

/// One axis of a family grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: AxisScale,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(Error::InvalidParameter(format!(
                "axis bounds must be finite and ordered, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points == 0 {
            return Err(Error::InvalidParameter(
                "grid needs at least one point".into(),
            ));
        }
        if self.scale == AxisScale::Log && self.min <= 0.0 {
            return Err(Error::InvalidParameter(
                "log axis needs positive bounds".into(),
            ));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| {
                let t = k as f64 / last;
                match self.scale {
                    AxisScale::Linear => self.min + t * (self.max - self.min),
                    AxisScale::Log => (self.min.ln() + t * (self.max / self.min).ln()).exp(),
                }
            })
            .collect())
    }
}

/// Grid over the rate ratio `gamma = gamma1/gamma2` and the channel probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyGrid {
    pub gamma: Axis,
    pub p: Axis,
}

impl Default for FamilyGrid {
    fn default() -> Self {
        Self {
            gamma: Axis {
                min: 1.1,
                max: 1e3,
                points: 40,
                scale: AxisScale::Log,
            },
            p: Axis {
                min: 0.02,
                max: 0.98,
                points: 40,
                scale: AxisScale::Linear,
            },
        }
    }
}

impl FamilyGrid {
    /// Grid points in row order: `gamma` outer, `p` inner.
    pub fn points(&self) -> Result<Vec<(f64, f64)>> {
        let ps = self.p.values()?;
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter(
                "p axis must lie within [0, 1]".into(),
            ));
        }
        let gammas = self.gamma.values()?;
        if gammas.iter().any(|&g| g <= 0.0) {
            return Err(Error::InvalidParameter(
                "gamma axis must be positive".into(),
            ));
        }
        Ok(gammas
            .iter()
            .flat_map(|&g| ps.iter().map(move |&p| (g, p)))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Fixed `(gamma1, gamma2, p)` over a timestep grid.
    Precision {
        gamma1: f64,
        gamma2: f64,
        p: f64,
        grid: PrecisionGrid,
    },
    /// Continuum-limit `Cq` over a `(gamma, p)` grid.
    Family { grid: FamilyGrid },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub delta: f64,
    pub seed: u64,
}

impl SweepSpec {
    pub fn precision(gamma1: f64, gamma2: f64, p: f64, grid: PrecisionGrid) -> Self {
        Self {
            mode: SweepMode::Precision {
                gamma1,
                gamma2,
                p,
                grid,
            },
            delta: DEFAULT_DELTA,
            seed: 0,
        }
    }

    pub fn family(grid: FamilyGrid) -> Self {
        Self {
            mode: SweepMode::Family { grid },
            delta: DEFAULT_DELTA,
            seed: 0,
        }
    }

    pub fn run(&self) -> Result<SweepTable> {
        match self.mode {
            SweepMode::Precision { .. } => sweep_precision(self).map(SweepTable::Precision),
            SweepMode::Family { .. } => sweep_family(self).map(SweepTable::Family),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub dt: f64,
    pub cmu_exact: f64,
    pub cmu_trunc: f64,
    pub dmu_trunc: f64,
    pub cq: f64,
    pub dq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub gamma: f64,
    pub p: f64,
    pub cq: f64,
    pub dq: f64,
    pub degenerate: bool,
}

/// Rows of a sweep in grid order.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepTable {
    Precision(Vec<PrecisionRow>),
    Family(Vec<FamilyRow>),
}

impl SweepTable {
    pub fn len(&self) -> usize {
        match self {
            SweepTable::Precision(rows) => rows.len(),
            SweepTable::Family(rows) => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Header row plus one line per grid point, `\n`-terminated. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        // header written by hand so empty tables still carry it
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        match self {
            SweepTable::Precision(rows) => {
                writer.write_record(PRECISION_COLUMNS)?;
                rows.iter().try_for_each(|r| writer.serialize(r))?
            }
            SweepTable::Family(rows) => {
                writer.write_record(FAMILY_COLUMNS)?;
                rows.iter().try_for_each(|r| writer.serialize(r))?
            }
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Decode(e.to_string()))
    }

    /// Reads a table written by [`write_csv`](Self::write_csv); the header
    /// decides which kind of table it is.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().from_reader(input);
        let headers = reader.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names == PRECISION_COLUMNS {
            let rows = reader
                .deserialize()
                .collect::<std::result::Result<_, _>>()?;
            Ok(SweepTable::Precision(rows))
        } else if names == FAMILY_COLUMNS {
            let rows = reader
                .deserialize()
                .collect::<std::result::Result<_, _>>()?;
            Ok(SweepTable::Family(rows))
        } else {
            Err(Error::Decode(format!("unrecognised header {names:?}")))
        }
    }
}

pub const PRECISION_COLUMNS: [&str; 6] = ["dt", "cmu_exact", "cmu_trunc", "dmu_trunc", "cq", "dq"];
pub const FAMILY_COLUMNS: [&str; 5] = ["gamma", "p", "cq", "dq", "degenerate"];

/// Memory metrics across the timestep grid. Any degenerate point fails the sweep.
pub fn sweep_precision(spec: &SweepSpec) -> Result<Vec<PrecisionRow>> {
    let SweepMode::Precision {
        gamma1,
        gamma2,
        p,
        grid,
    } = spec.mode
    else {
        return Err(Error::InvalidParameter("expected a precision sweep".into()));
    };
    let dts = grid.values()?;
    let first = ProcessParams::new(gamma1, gamma2, p, dts[0])?;
    if !first.is_non_extremal() {
        return Err(Error::Degenerate(format!(
            "precision sweep needs p in (0, 1) and gamma1 != gamma2, got gamma1={gamma1} gamma2={gamma2} p={p}"
        )));
    }
    dts.par_iter()
        .map(|&dt| {
            let r = report(&ProcessParams::new(gamma1, gamma2, p, dt)?, spec.delta)?;
            Ok(PrecisionRow {
                dt,
                cmu_exact: r.cmu_exact,
                cmu_trunc: r.cmu_trunc,
                dmu_trunc: r.dmu_trunc,
                cq: r.cq,
                dq: r.dq,
            })
        })
        .collect()
}

/// Continuum-limit `Cq` and `Dq` across the family grid. Points on the lines
/// `p ∈ {0, 1}` or `gamma = 1` are marked degenerate with `Cq = Dq = 0`.
pub fn sweep_family(spec: &SweepSpec) -> Result<Vec<FamilyRow>> {
    let SweepMode::Family { grid } = spec.mode else {
        return Err(Error::InvalidParameter("expected a family sweep".into()));
    };
    grid.points()?
        .par_iter()
        .map(|&(gamma, p)| {
            let c = continuum_cq(gamma, p)?;
            Ok(FamilyRow {
                gamma,
                p,
                cq: c.cq,
                dq: c.dq,
                degenerate: c.degenerate,
            })
        })
        .collect()
}

/// Largest gap length binned individually in the equivalence study.
pub const EQUIVALENCE_MAX_GAP: usize = 20;
/// Gap-survival points compared against the analytic curve.
pub const EQUIVALENCE_SURVIVAL_POINTS: usize = 10;
pub const EQUIVALENCE_SIGMAS: f64 = 4.0;
pub const EQUIVALENCE_TV_THRESHOLD: f64 = 0.01;

/// Empirical against analytic gap survival at one gap length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCheck {
    pub n: usize,
    pub analytic: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineRun {
    pub gaps: u64,
    pub ones: u64,
    pub histogram: GapHistogram,
    pub survival: Vec<SurvivalCheck>,
}

impl EngineRun {
    fn from_sequence(seq: &[u8], params: &ProcessParams) -> Result<Self> {
        let dp = params.discretize()?;
        let histogram = GapHistogram::from_sequence(seq, EQUIVALENCE_MAX_GAP);
        let gaps = histogram.total();
        let survival = histogram
            .survival()
            .into_iter()
            .take(EQUIVALENCE_SURVIVAL_POINTS + 1)
            .enumerate()
            .map(|(n, empirical)| {
                let analytic = survival(&dp, n);
                let sigma = binomial_sigma(analytic, gaps);
                SurvivalCheck {
                    n,
                    analytic,
                    empirical,
                    sigma,
                    within: (empirical - analytic).abs() <= EQUIVALENCE_SIGMAS * sigma + 1e-12,
                }
            })
            .collect();
        Ok(Self {
            gaps,
            ones: seq.iter().map(|&b| b as u64).sum(),
            histogram,
            survival,
        })
    }

    pub fn survival_ok(&self) -> bool {
        self.gaps > 0 && self.survival.iter().all(|c| c.within)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub params: ProcessParams,
    pub steps: usize,
    pub seed: u64,
    pub classical: EngineRun,
    pub quantum: EngineRun,
    pub tv_distance: f64,
    pub survival_pass: bool,
    pub tv_pass: bool,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.survival_pass && self.tv_pass
    }
}

/// Simulates both models for `steps` timesteps and compares their gap
/// statistics with each other and with `Φ(n)`.
pub fn equivalence_study(
    params: &ProcessParams,
    steps: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    let dp = params.discretize()?;
    let machine = build_machine(&dp, DEFAULT_DELTA)?;
    let model = QuantumModel::new(&dp)?;
    let (classical_seq, quantum_seq) = rayon::join(
        || machine.simulate(0, steps, seed),
        || model.simulate(0, steps, seed),
    );
    let classical = EngineRun::from_sequence(&classical_seq?, params)?;
    let quantum = EngineRun::from_sequence(&quantum_seq?, params)?;
    let tv_distance = total_variation(&classical.histogram, &quantum.histogram);
    Ok(EquivalenceReport {
        params: *params,
        steps,
        seed,
        survival_pass: classical.survival_ok() && quantum.survival_ok(),
        tv_pass: tv_distance < EQUIVALENCE_TV_THRESHOLD,
        classical,
        quantum,
        tv_distance,
    })
}
