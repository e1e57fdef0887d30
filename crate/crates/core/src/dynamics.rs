//! Time evolution of the reduced state: a classic RK4 integrator with
//! step-doubling error control, and the closed-form pumpless solution from
//! the initial state |eμ>.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entanglement::{self, EntanglementError};
use crate::model::{ReducedState, SystemParams};

/// Local error threshold per step (max norm, Richardson estimate).
pub const STEP_TOL: f64 = 1e-9;
/// Number of times a nominal step may be halved.
pub const MAX_HALVINGS: u32 = 6;
/// Default nominal step in units of 1/γ₁.
pub const DEFAULT_DT: f64 = 1e-3;
/// Default horizon in relaxation times.
pub const DEFAULT_HORIZON_RELAXATIONS: f64 = 10.0;
/// Gap below which the closed forms switch to their series expansion.
pub const SERIES_GAP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid time grid: dt = {dt}, t_max = {t_max}")]
    InvalidGrid { dt: f64, t_max: f64 },
    #[error("step underflow at t = {time}: local error {error:e} even at dt/{}", 1u32 << MAX_HALVINGS)]
    StepUnderflow { time: f64, error: f64 },
    #[error("closed form requires zero pumping (Lambda1 = {pump1}, Lambda2 = {pump2})")]
    PumpedClosedForm { pump1: f64, pump2: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("relaxation time diverges for |Gamma1| = gamma1 = {0}")]
    DivergingRelaxation(f64),
    #[error(transparent)]
    Entanglement(#[from] EntanglementError),
}

/// Recorded solution: times, states and their negativities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    pub negativities: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&ReducedState> {
        self.states.last()
    }

    /// Largest |tr ρ − 1| over the recorded states.
    pub fn max_trace_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.trace() - 1.0).abs()).fold(0.0, f64::max)
    }

    fn push(&mut self, t: f64, state: ReducedState) -> Result<(), EntanglementError> {
        self.negativities.push(entanglement::negativity(&state)?);
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }
}

fn rk4_step<F>(rhs: &F, y: &ReducedState, h: f64) -> ReducedState
where
    F: Fn(&ReducedState) -> ReducedState,
{
    let k1 = rhs(y);
    let k2 = rhs(&(*y + k1 * (0.5 * h)));
    let k3 = rhs(&(*y + k2 * (0.5 * h)));
    let k4 = rhs(&(*y + k3 * h));
    *y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates `rhs` from `initial` at t = 0 up to `t_max` with nominal step
/// `dt`. Each step is taken as two half steps and compared with one full
/// step; if the estimated local error exceeds [`STEP_TOL`] the step is
/// split, down to `dt / 64`. Every accepted step is recorded. The trace is
/// never renormalized.
pub fn integrate<F>(rhs: F, initial: ReducedState, t_max: f64, dt: f64) -> Result<Trajectory, DynamicsError>
where
    F: Fn(&ReducedState) -> ReducedState,
{
    if !(dt > 0.0 && dt.is_finite() && t_max.is_finite() && t_max >= dt) {
        return Err(DynamicsError::InvalidGrid { dt, t_max });
    }
    let steps = (t_max / dt - 1e-9).ceil() as usize;
    let mut traj = Trajectory::default();
    traj.push(0.0, initial)?;
    let mut y = initial;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = if k + 1 == steps { t_max } else { (k + 1) as f64 * dt };
        y = advance(&rhs, y, t0, t1, 0, &mut traj)?;
    }
    Ok(traj)
}

fn advance<F>(
    rhs: &F,
    y: ReducedState,
    t0: f64,
    t1: f64,
    depth: u32,
    traj: &mut Trajectory,
) -> Result<ReducedState, DynamicsError>
where
    F: Fn(&ReducedState) -> ReducedState,
{
    let h = t1 - t0;
    let full = rk4_step(rhs, &y, h);
    let mid = rk4_step(rhs, &y, 0.5 * h);
    let half = rk4_step(rhs, &mid, 0.5 * h);
    let error = (half - full).max_norm() / 15.0;
    if error <= STEP_TOL {
        traj.push(t1, half)?;
        return Ok(half);
    }
    if depth == MAX_HALVINGS {
        return Err(DynamicsError::StepUnderflow { time: t0, error });
    }
    let tm = t0 + 0.5 * h;
    let y_mid = advance(rhs, y, t0, tm, depth + 1, traj)?;
    advance(rhs, y_mid, tm, t1, depth + 1, traj)
}

/// max{1/(2(γ₁+Γ₁)), 1/(2(γ₁−Γ₁))}, the slowest decay of the exchange
/// coherence.
pub fn relaxation_time(params: &SystemParams) -> Result<f64, DynamicsError> {
    let (g, c) = (params.gamma1(), params.cross1());
    if (g - c.abs()).abs() <= 1e-12 * g {
        return Err(DynamicsError::DivergingRelaxation(g));
    }
    Ok(f64::max(1.0 / (2.0 * (g + c)), 1.0 / (2.0 * (g - c))))
}

/// 10 relaxation times.
pub fn default_t_max(params: &SystemParams) -> Result<f64, DynamicsError> {
    relaxation_time(params).map(|t| DEFAULT_HORIZON_RELAXATIONS * t)
}

/// Closed forms for one exchange channel: `own` is the decay of the
/// transition carrying the exchange, `partner` the decay feeding it, `cross`
/// and `shift` its dipole–dipole constants.
struct Channel {
    own: f64,
    partner: f64,
    cross: f64,
    shift: f64,
}

struct ChannelSolution {
    /// population directly fed from |eμ> (ρ₃₃ for channel 1)
    fed: f64,
    /// population reached only through exchange (ρ₇₇ for channel 1)
    exchanged: f64,
    /// exchange coherence (ρ₃₇ for channel 1)
    coherence: Complex64,
}

impl Channel {
    fn solve(&self, t: f64) -> ChannelSolution {
        let k = self.partner;
        let a = 2.0 * t;
        let decay = (-a * self.own).exp();
        let ek = (-a * k).exp();
        let (sin, cos) = (a * self.shift).sin_cos();
        let osc_den = k * k + self.shift * self.shift;
        let pop_osc = decay * (k * cos + self.shift * sin - k * ek) / osc_den;
        let coh_osc = decay * (self.shift * cos - k * sin - self.shift * ek) / osc_den;
        let hyp = Damped::new(a, self.own, k);
        let pop_hyp = hyp.population(self.cross);
        let coh_hyp = hyp.coherence(self.cross);
        let pre = 0.5 * k;
        ChannelSolution {
            fed: pre * (pop_hyp + pop_osc),
            exchanged: pre * (pop_hyp - pop_osc),
            coherence: Complex64::new(pre * coh_hyp, -pre * coh_osc),
        }
    }
}

/// Hyperbolic parts of the closed forms, multiplied through by e^{−a·own}
/// so that cosh and sinh never overflow at long times.
struct Damped {
    a: f64,
    own: f64,
    k: f64,
}

impl Damped {
    fn new(a: f64, own: f64, k: f64) -> Self {
        Self { a, own, k }
    }

    /// (e^{−a·own} sinh(ac), e^{−a·own} cosh(ac), e^{−a(own+k)})
    fn terms(&self, c: f64) -> (f64, f64, f64) {
        let up = (self.a * (c - self.own)).exp();
        let down = (-self.a * (c + self.own)).exp();
        (0.5 * (up - down), 0.5 * (up + down), (-self.a * (self.own + self.k)).exp())
    }

    /// e^{−a·own} (k cosh(ac) − c sinh(ac) − k e^{−ak}) / (k² − c²)
    fn population(&self, c: f64) -> f64 {
        let (a, k) = (self.a, self.k);
        if (c.abs() - k).abs() >= SERIES_GAP * k.max(1e-300) {
            let (sh, ch, ek) = self.terms(c);
            return (k * ch - c * sh - k * ek) / (k * k - c * c);
        }
        let c0 = k.copysign(c);
        let (sh, ch, _) = self.terms(c0);
        let d1 = k * a * sh - sh - c0 * a * ch;
        let d2 = k * a * a * ch - 2.0 * a * ch - c0 * a * a * sh;
        let d3 = k * a.powi(3) * sh - 3.0 * a * a * sh - c0 * a.powi(3) * ch;
        removable(c - c0, c0, d1, d2, d3, -1.0)
    }

    /// e^{−a·own} (c e^{−ak} − c cosh(ac) + k sinh(ac)) / (c² − k²)
    fn coherence(&self, c: f64) -> f64 {
        let (a, k) = (self.a, self.k);
        if (c.abs() - k).abs() >= SERIES_GAP * k.max(1e-300) {
            let (sh, ch, ek) = self.terms(c);
            return (c * ek - c * ch + k * sh) / (c * c - k * k);
        }
        let c0 = k.copysign(c);
        let (sh, ch, ek) = self.terms(c0);
        let d1 = ek - ch - c0 * a * sh + k * a * ch;
        let d2 = -2.0 * a * sh - c0 * a * a * ch + k * a * a * sh;
        let d3 = -3.0 * a * a * ch - c0 * a.powi(3) * sh + k * a.powi(3) * ch;
        removable(c - c0, c0, d1, d2, d3, 1.0)
    }
}

/// N(c)/(sign · (c − c0)(c + c0)) near a simple zero c0 of N, from the
/// first three derivatives of N at c0, to second order in the gap `eps`.
fn removable(eps: f64, c0: f64, d1: f64, d2: f64, d3: f64, sign: f64) -> f64 {
    let series = d1 + 0.5 * d2 * eps + d3 / 6.0 * eps * eps;
    sign * series / (2.0 * c0 + eps)
}

/// Closed-form pumpless state at time `t` starting from |eμ>.
///
/// ρ₉₉ is taken as 1 minus the other populations including ρ₂₂, so the
/// returned state has unit trace; [`truncated_ground_population`] gives the
/// variant that leaves ρ₂₂ out.
pub fn analytic_pumpless(params: &SystemParams, t: f64) -> Result<ReducedState, DynamicsError> {
    if params.is_pumped() {
        return Err(DynamicsError::PumpedClosedForm {
            pump1: params.pump1(),
            pump2: params.pump2(),
        });
    }
    if t < 0.0 || !t.is_finite() {
        return Err(DynamicsError::NegativeTime(t));
    }
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let ch1 = Channel { own: g1, partner: g2, cross: params.cross1(), shift: params.shift1() }.solve(t);
    let ch2 = Channel { own: g2, partner: g1, cross: params.cross2(), shift: params.shift2() }.solve(t);

    let mut s = ReducedState::default();
    s.set_pop(2, (-2.0 * (g1 + g2) * t).exp());
    s.set_pop(3, ch1.fed);
    s.set_pop(7, ch1.exchanged);
    s.rho37 = ch1.coherence;
    s.set_pop(8, ch2.fed);
    s.set_pop(6, ch2.exchanged);
    // ρ₆₈ is the 1↔2 image of ρ₃₇*, i.e. the conjugate of the channel-2 solution
    s.rho68 = ch2.coherence.conj();
    s.set_pop(9, 1.0 - s.pop(2) - s.pop(3) - s.pop(6) - s.pop(7) - s.pop(8));
    Ok(s)
}

/// 1 − ρ₃₃ − ρ₆₆ − ρ₇₇ − ρ₈₈: the ground population with ρ₂₂ omitted from the
/// normalization. Exceeds the trace-consistent ρ₉₉ by exactly ρ₂₂(t).
pub fn truncated_ground_population(params: &SystemParams, t: f64) -> Result<f64, DynamicsError> {
    let s = analytic_pumpless(params, t)?;
    Ok(1.0 - s.pop(3) - s.pop(6) - s.pop(7) - s.pop(8))
}
