//! Steady-state sweeps over the symmetric pump rate and over the separation
//! presets, and a golden-section search for the most entangling pump.

use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entanglement::{negativity, EntanglementError};
use crate::model::{ParamError, Preset, SystemParams};
use crate::steadystate::{steady_analytic, steady_numeric, SteadyError, SteadyState};

/// Environment variable holding the number of sweep worker threads.
pub const WORKERS_ENV: &str = "VPAIR_WORKERS";
/// Number of grid points re-solved by the numeric route in each sweep.
pub const SPOT_CHECKS: usize = 5;
/// Allowed elementwise gap between the analytic and numeric steady states.
pub const SPOT_CHECK_TOL: f64 = 1e-8;
/// Pre-scan resolution of the optimum search.
pub const PRESCAN_POINTS: usize = 20;
/// Fallback grid resolution when the pre-scan is not unimodal.
pub const FALLBACK_POINTS: usize = 1000;
/// Golden-section tolerance on Λ, in units of γ₁.
pub const OPTIMUM_TOL: f64 = 1e-4;
/// Negativities at or below this count as no entanglement.
pub const ENTANGLEMENT_FLOOR: f64 = 1e-12;

const SPOT_CHECK_SEED: u64 = 0x5eed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("grid must be non-empty, non-negative and strictly increasing (at index {index})")]
    BadGrid { index: usize },
    #[error("cannot parse grid {spec:?}: expected start:stop:step with step > 0 and stop >= start")]
    GridSyntax { spec: String },
    #[error("bracket ({low}, {high}) must satisfy 0 <= low < high")]
    BadBracket { low: f64, high: f64 },
    #[error("numeric cross-check failed at {x}: analytic and numeric differ by {diff:e}")]
    SpotCheck { x: f64, diff: f64 },
    #[error("invalid {name} = {value:?}: {reason}")]
    BadWorkers { name: &'static str, value: String, reason: String },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Steady(#[from] SteadyError),
    #[error(transparent)]
    Entanglement(#[from] EntanglementError),
}

/// Evenly spaced grid `start, start + step, …` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        // tolerate stop landing a rounding error short of the last point
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for GridSpec {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, SweepError> {
        let bad = || SweepError::GridSyntax { spec: s.to_string() };
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
            return Err(bad());
        }
        Ok(GridSpec { start, stop, step })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// x is the symmetric pump rate Λ₁ = Λ₂
    Pump,
    /// x is the separation R/λ₁ of a preset
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    /// preset key on distance sweeps
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub negativity: f64,
    pub rho99: f64,
    pub rho37: Complex64,
    pub rho68: Complex64,
    pub residual: f64,
}

impl SweepRow {
    fn from_steady(x: f64, preset: Option<String>, s: &SteadyState) -> Result<Self, SweepError> {
        Ok(Self {
            x,
            preset,
            negativity: negativity(&s.state)?,
            rho99: s.state.pop(9),
            rho37: s.state.rho37,
            rho68: s.state.rho68,
            residual: s.residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub axis: Axis,
    pub params: SystemParams,
    /// the x values as requested
    pub grid: Vec<f64>,
    /// seconds since the Unix epoch
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the largest negativity (first on ties).
    pub fn argmax(&self) -> Option<&SweepRow> {
        self.rows.iter().fold(None, |best: Option<&SweepRow>, row| match best {
            Some(b) if b.negativity >= row.negativity => Some(b),
            _ => Some(row),
        })
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> Result<Option<usize>, SweepError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Err(SweepError::BadWorkers {
                name: WORKERS_ENV,
                value: v,
                reason: "must be at least 1".into(),
            }),
            Ok(n) => Ok(Some(n)),
            Err(e) => Err(SweepError::BadWorkers { name: WORKERS_ENV, value: v, reason: e.to_string() }),
        },
    }
}

/// Maps `f` over `items` in parallel, keeping input order.
fn par_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>, SweepError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, SweepError> + Sync + Send,
{
    let run = || items.par_iter().map(&f).collect::<Result<Vec<R>, SweepError>>();
    match workers_from_env()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SweepError::BadWorkers { name: WORKERS_ENV, value: n.to_string(), reason: e.to_string() })?
            .install(run),
        None => run(),
    }
}

fn check_grid(grid: &[f64]) -> Result<(), SweepError> {
    if grid.is_empty() {
        return Err(SweepError::BadGrid { index: 0 });
    }
    for (i, &x) in grid.iter().enumerate() {
        if !(x >= 0.0 && x.is_finite()) || (i > 0 && x <= grid[i - 1]) {
            return Err(SweepError::BadGrid { index: i });
        }
    }
    Ok(())
}

fn spot_check(params: &SystemParams, x: f64, analytic: &SteadyState) -> Result<(), SweepError> {
    let numeric = steady_numeric(params)?;
    let diff = analytic.state.max_abs_diff(&numeric.state);
    if !(diff < SPOT_CHECK_TOL) {
        return Err(SweepError::SpotCheck { x, diff });
    }
    Ok(())
}

/// Steady negativity with Λ₁ = Λ₂ = Λ for each Λ in `grid`, via the closed
/// form. [`SPOT_CHECKS`] grid points, chosen by a fixed seed, are re-solved
/// numerically and must agree within [`SPOT_CHECK_TOL`].
pub fn sweep_pump(params: &SystemParams, grid: &[f64]) -> Result<SweepTable, SweepError> {
    check_grid(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SPOT_CHECK_SEED);
    let mut checked = vec![false; grid.len()];
    for i in sample(&mut rng, grid.len(), SPOT_CHECKS.min(grid.len())) {
        checked[i] = true;
    }
    let points: Vec<(f64, bool)> = grid.iter().copied().zip(checked).collect();
    let rows = par_map(&points, |&(pump, verify)| {
        let p = params.with_symmetric_pump(pump)?;
        let s = steady_analytic(&p)?;
        if verify {
            spot_check(&p, pump, &s)?;
        }
        SweepRow::from_steady(pump, None, &s)
    })?;
    Ok(SweepTable {
        metadata: SweepMetadata { axis: Axis::Pump, params: *params, grid: grid.to_vec(), timestamp: now() },
        rows,
    })
}

/// Steady negativity for each preset key at symmetric pump `pump`, keeping
/// γ₁ and r from `base`. Rows follow the order of `keys`.
pub fn sweep_distance<S: AsRef<str>>(base: &SystemParams, keys: &[S], pump: f64) -> Result<SweepTable, SweepError> {
    let presets: Vec<Preset> = keys.iter().map(|k| k.as_ref().parse()).collect::<Result<_, ParamError>>()?;
    let base = base.with_symmetric_pump(pump)?;
    let rows = par_map(&presets, |&preset| {
        let p = SystemParams::from_preset(preset, base.gamma1(), base.ratio())?.with_symmetric_pump(pump)?;
        let s = steady_analytic(&p)?;
        SweepRow::from_steady(preset.separation(), Some(preset.key().to_string()), &s)
    })?;
    Ok(SweepTable {
        metadata: SweepMetadata {
            axis: Axis::Distance,
            params: base,
            grid: presets.iter().map(|p| p.separation()).collect(),
            timestamp: now(),
        },
        rows,
    })
}

/// Steady negativity at Λ₁ = Λ₂ = `pump`.
pub fn steady_negativity(params: &SystemParams, pump: f64) -> Result<f64, SweepError> {
    let s = steady_analytic(&params.with_symmetric_pump(pump)?)?;
    Ok(negativity(&s.state)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    GoldenSection,
    GridSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Optimum {
    Found { pump: f64, negativity: f64, method: SearchMethod },
    NoEntanglement { low: f64, high: f64 },
}

fn linspace(low: f64, high: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| low + (high - low) * k as f64 / (n - 1) as f64).collect()
}

/// Non-decreasing up to `peak`, non-increasing after it.
fn unimodal(values: &[f64], peak: usize) -> bool {
    values[..=peak].windows(2).all(|w| w[1] >= w[0]) && values[peak..].windows(2).all(|w| w[1] <= w[0])
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best })
}

/// Pump rate in `bracket` maximizing the steady negativity.
///
/// A 20-point pre-scan locates the peak; if the scan is unimodal the peak is
/// refined by golden section between its neighbours to [`OPTIMUM_TOL`]·γ₁,
/// otherwise the best point of a 1000-point grid is returned.
pub fn find_optimal_pump(params: &SystemParams, bracket: (f64, f64)) -> Result<Optimum, SweepError> {
    let (low, high) = bracket;
    if !(low >= 0.0 && high > low && high.is_finite()) {
        return Err(SweepError::BadBracket { low, high });
    }
    let f = |x: f64| steady_negativity(params, x);
    let scan_x = linspace(low, high, PRESCAN_POINTS);
    let scan: Vec<f64> = scan_x.iter().map(|&x| f(x)).collect::<Result<_, _>>()?;
    let peak = argmax(&scan);

    if !unimodal(&scan, peak) {
        let xs = linspace(low, high, FALLBACK_POINTS);
        let ys = par_map(&xs, |&x| f(x))?;
        let best = argmax(&ys);
        if ys[best] <= ENTANGLEMENT_FLOOR {
            return Ok(Optimum::NoEntanglement { low, high });
        }
        return Ok(Optimum::Found { pump: xs[best], negativity: ys[best], method: SearchMethod::GridSearch });
    }
    if scan[peak] <= ENTANGLEMENT_FLOOR {
        return Ok(Optimum::NoEntanglement { low, high });
    }

    let mut a = scan_x[peak.saturating_sub(1)];
    let mut b = scan_x[(peak + 1).min(PRESCAN_POINTS - 1)];
    let tol = OPTIMUM_TOL * params.gamma1();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    // the bracket endpoints are part of the pre-scan and may beat the interior
    let mut best = (0.5 * (a + b), f(0.5 * (a + b))?);
    for (x, y) in [(scan_x[peak], scan[peak]), (c, fc), (d, fd)] {
        if y > best.1 {
            best = (x, y);
        }
    }
    Ok(Optimum::Found { pump: best.0, negativity: best.1, method: SearchMethod::GoldenSection })
}
