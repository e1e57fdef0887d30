//! Steady state of the pumped pair, by closed form and by a linear solve on
//! the restricted generator, with long-time integration as a fallback.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{integrate, DynamicsError};
use crate::linalg::{solve_real, LinalgError};
use crate::model::{build_generator, rhs_pumped, ReducedState, SystemParams};

/// Accepted residual of the steady state, relative to γ₁.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Pivot ratio below which the linear route hands over to integration.
pub const ILL_CONDITIONED: f64 = 1e-13;
/// Horizon of the long-time fallback, in units of 1/γ₁.
pub const LONG_TIME: f64 = 200.0;
const LONG_TIME_DT: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyError {
    #[error("steady-state residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
    #[error("reduced generator has more than one null direction (pivot {pivot:e} in column {column})")]
    RankDeficient { pivot: f64, column: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyRoute {
    Analytic,
    Nullspace,
    LongTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub state: ReducedState,
    /// max-norm of `rhs_pumped` at `state`
    pub residual: f64,
    pub route: SteadyRoute,
    /// Set when Λ₁ = Λ₂ = 0 and the ground state was returned by convention.
    pub zero_pump_limit: bool,
}

fn residual(state: &ReducedState, params: &SystemParams) -> f64 {
    rhs_pumped(state, params).max_norm()
}

fn checked(
    state: ReducedState,
    params: &SystemParams,
    route: SteadyRoute,
    zero_pump_limit: bool,
) -> Result<SteadyState, SteadyError> {
    let residual = residual(&state, params);
    let limit = RESIDUAL_TOL * params.gamma1();
    if !(residual <= limit) {
        return Err(SteadyError::Residual { residual, limit });
    }
    Ok(SteadyState { state, residual, route, zero_pump_limit })
}

/// Closed-form steady state for Λ₁ + Λ₂ > 0.
///
/// The normalization constant is b/(γ₁+γ₂), which makes the populations sum
/// to one. Without pumping the closed form is 0/0 and the ground state is
/// returned with `zero_pump_limit` set.
pub fn steady_analytic(params: &SystemParams) -> Result<SteadyState, SteadyError> {
    if !params.is_pumped() {
        return checked(ReducedState::ground(), params, SteadyRoute::Analytic, true);
    }
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let (c1, c2) = (params.cross1(), params.cross2());
    let (l1, l2) = (params.pump1(), params.pump2());
    let (s1, s2) = (params.s1(), params.s2());
    let lsum = l1 + l2;
    let gsum = g1 + g2;

    let beta = |s: f64, g: f64, c: f64, l: f64| (s * g * g + c * c * (l - g)) / (2.0 * s * g * lsum);
    let beta1 = beta(s1, g1, c1, l1);
    let beta2 = beta(s2, g2, c2, l2);
    let a1 = l2 * (g1 + 2.0 * beta1 * gsum);
    let a2 = l1 * (g2 + 2.0 * beta2 * gsum);
    let b = 2.0 * g1 * g2 * gsum * ((beta1 + 1.0) * a2 + (beta2 + 1.0) * a1)
        + gsum * (a2 * g2 * l1 + a1 * g1 * l2)
        + g1 * g2 * (2.0 * a2 * l2 + 2.0 * a1 * l1);
    let norm = b / gsum;

    let mut s = ReducedState::default();
    let p22 = g1 * g2 / (norm * gsum) * (a1 * l1 + a2 * l2);
    let p33 = g1 * g2 * a2 / norm;
    let p66 = g1 * g2 * a1 / norm;
    s.set_pop(1, g2 * l1 * a2 / norm);
    s.set_pop(2, p22);
    s.set_pop(3, p33);
    s.set_pop(4, p22);
    s.set_pop(5, g1 * a1 * l2 / norm);
    s.set_pop(6, p66);
    s.set_pop(7, p33);
    s.set_pop(8, p66);
    s.set_pop(9, 2.0 * g1 * g2 / norm * (beta1 * a2 + a1 * beta2));
    s.rho37 = Complex64::new(c1 * g2 / (s1 * norm) * (l1 - g1) * a2, 0.0);
    s.rho68 = Complex64::new(g1 * c2 / (s2 * norm) * (l2 - g2) * a1, 0.0);
    checked(s, params, SteadyRoute::Analytic, false)
}

/// The generator restricted to the 13 real support coordinates, row-major,
/// built from the full operator-level generator.
pub fn reduced_generator(params: &SystemParams) -> [[f64; 13]; 13] {
    let generator = build_generator(params, true);
    let mut out = [[0.0; 13]; 13];
    for col in 0..13 {
        let mut unit = [0.0; 13];
        unit[col] = 1.0;
        let image = generator
            .apply_reduced(&ReducedState::from_real(&unit))
            .expect("generator preserves the support")
            .to_real();
        for (row, v) in image.iter().enumerate() {
            out[row][col] = *v;
        }
    }
    out
}

/// Steady state from the null vector of the restricted generator, with the
/// ρ₉₉ equation replaced by the normalization. Falls back to
/// [`steady_long_time`] from |eμ> when the solve is ill-conditioned.
pub fn steady_numeric(params: &SystemParams) -> Result<SteadyState, SteadyError> {
    let reduced = reduced_generator(params);
    let mut a = Vec::with_capacity(169);
    for (row, coeffs) in reduced.iter().enumerate() {
        if row == 8 {
            a.extend((0..13).map(|k| if k < 9 { 1.0 } else { 0.0 }));
        } else {
            a.extend_from_slice(coeffs);
        }
    }
    let mut rhs = vec![0.0; 13];
    rhs[8] = 1.0;
    let (x, pivot_ratio) = match solve_real(&a, &rhs) {
        Ok(sol) => sol,
        Err(LinalgError::Singular { pivot, column }) => {
            return Err(SteadyError::RankDeficient { pivot, column })
        }
        Err(e) => return Err(e.into()),
    };
    if pivot_ratio < ILL_CONDITIONED {
        return steady_long_time(params, ReducedState::excited_pair());
    }
    let mut v = [0.0; 13];
    v.copy_from_slice(&x);
    checked(ReducedState::from_real(&v), params, SteadyRoute::Nullspace, !params.is_pumped())
}

/// Integrates the pumped equations from `initial` to t = 200/γ₁ and returns
/// the final state.
pub fn steady_long_time(params: &SystemParams, initial: ReducedState) -> Result<SteadyState, SteadyError> {
    let t_max = LONG_TIME / params.gamma1();
    let dt = LONG_TIME_DT / params.gamma1();
    let traj = integrate(|s| rhs_pumped(s, params), initial, t_max, dt)?;
    let state = *traj.last_state().expect("trajectory has the initial point");
    checked(state, params, SteadyRoute::LongTime, !params.is_pumped())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pumped(cross: f64, shift: f64, pump: f64) -> SystemParams {
        SystemParams::new(1.0, 1.2, cross, shift, pump, pump).unwrap()
    }

    #[test]
    fn analytic_is_normalized_and_valid() {
        let s = steady_analytic(&pumped(0.96, 2.4, 0.08)).unwrap();
        assert!((s.state.trace() - 1.0).abs() < 1e-10);
        s.state.validate().unwrap();
        assert_eq!(s.route, SteadyRoute::Analytic);
        assert!(!s.zero_pump_limit);
    }

    #[test]
    fn pump_equal_to_decay_kills_rho37() {
        let p = SystemParams::new(1.0, 1.2, 0.9, 2.4, 1.0, 0.3).unwrap();
        let s = steady_analytic(&p).unwrap();
        assert_eq!(s.state.rho37, Complex64::new(0.0, 0.0));
        assert!(s.state.rho68.norm() > 0.0);
    }

    #[test]
    fn coherence_signs_follow_pump_minus_decay() {
        let s = steady_analytic(&SystemParams::new(1.0, 1.2, 0.9, 0.0, 0.5, 2.0).unwrap()).unwrap();
        assert!(s.state.rho37.re < 0.0);
        assert!(s.state.rho68.re > 0.0);
    }

    #[test]
    fn zero_pump_gives_ground_state() {
        let p = pumped(0.96, 2.4, 0.0);
        let a = steady_analytic(&p).unwrap();
        assert!(a.zero_pump_limit);
        assert_eq!(a.state, ReducedState::ground());
        let n = steady_numeric(&p).unwrap();
        assert!((n.state.pop(9) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_independent_of_shift() {
        let a = steady_analytic(&pumped(0.9, 0.9, 0.08)).unwrap();
        let b = steady_analytic(&pumped(0.9, 2.4, 0.08)).unwrap();
        assert!(a.state.max_abs_diff(&b.state) <= 1e-12);
    }

    #[test]
    fn analytic_matches_numeric_at_optimum() {
        let p = pumped(0.96, 2.4, 0.08);
        let a = steady_analytic(&p).unwrap();
        let n = steady_numeric(&p).unwrap();
        assert_eq!(n.route, SteadyRoute::Nullspace);
        assert!(a.state.max_abs_diff(&n.state) < 1e-8);
    }

    #[test]
    fn presets_match_numeric() {
        for preset in crate::model::Preset::ALL {
            let p = SystemParams::from_preset(preset, 1.0, 1.2).unwrap().with_symmetric_pump(0.08).unwrap();
            let a = steady_analytic(&p).unwrap();
            let n = steady_numeric(&p).unwrap();
            assert!(a.state.max_abs_diff(&n.state) < 1e-8, "{preset}");
        }
    }

    #[test]
    fn random_residual_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let cross = rng.gen_range(0.0..=0.96);
            let pump = rng.gen_range(1e-6..=2.0);
            let r = rng.gen_range(0.5..=2.0);
            let p = SystemParams::new(1.0, r, cross, 2.4, pump, pump).unwrap();
            let s = steady_analytic(&p).unwrap();
            assert!(s.residual < 1e-9, "{p:?}: {}", s.residual);
        }
    }

    #[test]
    fn numeric_independent_of_shift() {
        let base = steady_numeric(&pumped(0.9, -0.24, 0.08)).unwrap();
        for g in [0.9, 2.4, 8.0] {
            let s = steady_numeric(&pumped(0.9, g, 0.08)).unwrap();
            assert!(s.state.max_abs_diff(&base.state) < 1e-9, "G = {g}");
        }
    }

    #[test]
    fn channel_exchange_relabels_state() {
        let p = SystemParams::new(1.0, 1.3, 0.7, 1.1, 0.2, 0.05).unwrap();
        let q = SystemParams::new(p.gamma2(), 1.0 / 1.3, p.cross2(), p.shift2(), 0.05, 0.2).unwrap();
        let a = steady_analytic(&p).unwrap().state.exchanged();
        let b = steady_analytic(&q).unwrap().state;
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn long_time_converges_from_both_ends() {
        let p = pumped(0.96, 2.4, 0.08);
        let from_excited = steady_long_time(&p, ReducedState::excited_pair()).unwrap();
        let from_ground = steady_long_time(&p, ReducedState::ground()).unwrap();
        assert_eq!(from_excited.route, SteadyRoute::LongTime);
        assert!(from_excited.state.max_abs_diff(&from_ground.state) < 1e-7);
        let exact = steady_analytic(&p).unwrap();
        assert!(from_excited.state.max_abs_diff(&exact.state) < 1e-7);
    }

    #[test]
    fn reduced_generator_columns_sum_to_zero_on_populations() {
        let m = reduced_generator(&pumped(0.8, 1.0, 0.3));
        for col in 0..13 {
            let sum: f64 = (0..9).map(|row| m[row][col]).sum();
            assert!(sum.abs() < 1e-12);
        }
    }
}
