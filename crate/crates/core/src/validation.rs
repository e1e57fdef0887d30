//! Self-checks run by `vpair validate`: each check evaluates one invariant
//! and reports the worst deviation found against its tolerance.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{analytic_pumpless, integrate, relaxation_time, Trajectory, DEFAULT_DT};
use crate::entanglement::{negativity, negativity_generic, pt_eigenvalues_pumpless, pt_spectrum_generic};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, JACOBI_TOL};
use crate::model::{rhs_pumpless, Preset, ReducedState, SystemParams};
use crate::steadystate::{steady_analytic, steady_numeric};
use crate::sweep::{sweep_pump, GridSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// worst deviation observed (meaning depends on the check)
    pub max_residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn bound(name: &'static str, max_residual: f64, tolerance: f64, detail: String) -> Self {
        Check { name, passed: max_residual < tolerance, max_residual, tolerance, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

const RATIO: f64 = 1.2;
const HORIZON: f64 = 5.0;

fn preset_params(preset: Preset) -> SystemParams {
    SystemParams::from_preset(preset, 1.0, RATIO).expect("preset table is valid")
}

fn pumpless_run(params: &SystemParams, t_max: f64, dt: f64) -> Trajectory {
    integrate(|s| rhs_pumpless(s, params), ReducedState::excited_pair(), t_max, dt)
        .expect("pumpless integration stays within tolerance")
}

/// Largest elementwise gap between a trajectory and the closed form.
pub fn closed_form_error(params: &SystemParams, traj: &Trajectory) -> f64 {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| s.max_abs_diff(&analytic_pumpless(params, t).expect("pumpless params")))
        .fold(0.0, f64::max)
}

fn min_eigenvalue(state: &ReducedState) -> f64 {
    hermitian_eigenvalues(&state.to_density_matrix(), JACOBI_TOL)
        .expect("support states are Hermitian")
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn closed_form_agreement(runs: &[(Preset, SystemParams, Trajectory)]) -> Check {
    let worst = runs.iter().map(|(_, p, tr)| closed_form_error(p, tr)).fold(0.0, f64::max);
    Check::bound("closed_form_vs_integrator", worst, 1e-6, format!("r = {RATIO}, t = 0..{HORIZON}, all presets"))
}

fn excited_pair_decay(runs: &[(Preset, SystemParams, Trajectory)]) -> Check {
    let worst = runs
        .iter()
        .flat_map(|(_, p, tr)| {
            let rate = 2.0 * (p.gamma1() + p.gamma2());
            tr.times.iter().zip(&tr.states).map(move |(&t, s)| (s.pop(2) - (-rate * t).exp()).abs())
        })
        .fold(0.0, f64::max);
    Check::bound("excited_pair_decay", worst, 1e-8, "rho22 = exp(-2(gamma1+gamma2)t)".into())
}

fn transient_shape() -> Check {
    let mut problems = Vec::new();
    let mut survival = Vec::new();
    let mut worst_tail: f64 = 0.0;
    for preset in Preset::ALL {
        let p = preset_params(preset);
        let tau = relaxation_time(&p).expect("presets have finite relaxation");
        let tr = pumpless_run(&p, 10.0 * tau, DEFAULT_DT);
        if tr.negativities[0] != 0.0 {
            problems.push(format!("{preset}: N(0) = {}", tr.negativities[0]));
        }
        let peak = tr.negativities.iter().copied().fold(0.0, f64::max);
        if matches!(preset, Preset::R083 | Preset::R118) && !(peak > 1e-3) {
            problems.push(format!("{preset}: peak {peak:e}"));
        }
        let tail = *tr.negativities.last().unwrap();
        worst_tail = worst_tail.max(tail);
        if !(tail < 1e-4) {
            problems.push(format!("{preset}: N(10 tau) = {tail:e}"));
        }
        let last = tr
            .times
            .iter()
            .zip(&tr.negativities)
            .filter(|(_, &n)| n > 1e-3)
            .map(|(&t, _)| t)
            .fold(0.0, f64::max);
        survival.push((preset, last));
    }
    let surv = |key| survival.iter().find(|(p, _)| *p == key).map(|s| s.1).unwrap_or(0.0);
    if !(surv(Preset::R083) > surv(Preset::R278)) {
        problems.push(format!("survival R0.83 {} <= R2.78 {}", surv(Preset::R083), surv(Preset::R278)));
    }
    Check {
        name: "transient_negativity_shape",
        passed: problems.is_empty(),
        max_residual: worst_tail,
        tolerance: 1e-4,
        detail: if problems.is_empty() {
            format!("survival R0.83 = {:.3}, R2.78 = {:.3}", surv(Preset::R083), surv(Preset::R278))
        } else {
            problems.join("; ")
        },
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn pumpless_spectrum(runs: &[(Preset, SystemParams, Trajectory)], samples: usize) -> Check {
    let total: usize = runs.iter().map(|r| r.2.len()).sum();
    let stride = (total / samples).max(1);
    let mut worst: f64 = 0.0;
    let mut other_negative = 0usize;
    let mut count = 0usize;
    for state in runs.iter().flat_map(|r| r.2.states.iter()).step_by(stride).take(samples) {
        let closed = pt_eigenvalues_pumpless(state).expect("pumpless support");
        if closed[..8].iter().any(|&l| l < -1e-12) {
            other_negative += 1;
        }
        let generic = pt_spectrum_generic(&state.to_density_matrix()).expect("Hermitian");
        let diff = sorted(closed.to_vec())
            .iter()
            .zip(&generic)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
        count += 1;
    }
    Check {
        name: "pumpless_spectrum_closed_form",
        passed: worst < 1e-10 && other_negative == 0 && count == samples,
        max_residual: worst,
        tolerance: 1e-10,
        detail: format!("{count} points, {other_negative} with a negative eigenvalue besides lambda9"),
    }
}

fn maximal_state() -> Check {
    let amp = num_complex::Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    let mut psi = vec![num_complex::Complex64::new(0.0, 0.0); 9];
    for k in [0, 4, 8] {
        psi[k] = amp;
    }
    let n = negativity_generic(&ComplexMatrix::projector(&psi)).map(|r| r.value).unwrap_or(f64::NAN);
    Check::bound("maximal_state_negativity", (n - 1.0).abs(), 1e-12, format!("N = {n}"))
}

/// Random points with Γ ∈ [0, 0.96], Λ ∈ (0, 2], r ∈ [0.5, 2].
pub fn random_steady_params(count: usize, seed: u64) -> Vec<SystemParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let cross = rng.gen_range(0.0..=0.96);
            let pump = 2.0 - rng.gen_range(0.0..2.0);
            let r = rng.gen_range(0.5..=2.0);
            let shift = rng.gen_range(-1.0..=8.0);
            SystemParams::new(1.0, r, cross, shift, pump, pump).expect("sampled inside the valid region")
        })
        .collect()
}

fn steady_cross_route() -> Check {
    let mut worst_diff: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut errors = Vec::new();
    for p in random_steady_params(100, 7) {
        match (steady_analytic(&p), steady_numeric(&p)) {
            (Ok(a), Ok(n)) => {
                worst_diff = worst_diff.max(a.state.max_abs_diff(&n.state));
                worst_residual = worst_residual.max(a.residual);
            }
            (a, n) => errors.push(format!("{p:?}: {:?} {:?}", a.err(), n.err())),
        }
    }
    Check {
        name: "steady_state_cross_route",
        passed: errors.is_empty() && worst_diff < 1e-8 && worst_residual < 1e-9,
        max_residual: worst_diff,
        tolerance: 1e-8,
        detail: if errors.is_empty() {
            format!("100 points, worst residual {worst_residual:.3e}")
        } else {
            errors.join("; ")
        },
    }
}

fn shift_independence() -> Check {
    let states: Vec<ReducedState> = [-0.24, 0.9, 2.4, 8.0]
        .iter()
        .filter_map(|&g| {
            let p = SystemParams::new(1.0, RATIO, 0.9, g, 0.08, 0.08).ok()?;
            steady_numeric(&p).ok().map(|s| s.state)
        })
        .collect();
    let worst = if states.len() == 4 {
        states.iter().map(|s| s.max_abs_diff(&states[0])).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Check::bound("steady_state_shift_independence", worst, 1e-9, "G in {-0.24, 0.9, 2.4, 8}".into())
}

fn pump_curve() -> Check {
    let base = |c| SystemParams::new(1.0, RATIO, c, 2.4, 0.0, 0.0).expect("valid");
    let grid = GridSpec { start: 0.005, stop: 0.5, step: 0.005 }.values();
    let mut problems = Vec::new();

    let start = Instant::now();
    let main = sweep_pump(&base(0.96), &grid);
    let elapsed = start.elapsed().as_secs_f64();
    let Ok(main) = main else {
        return Check::bound("steady_pump_curve", f64::INFINITY, 1e-4, format!("{:?}", main.err()));
    };
    if elapsed >= 5.0 {
        problems.push(format!("100-point sweep took {elapsed:.2} s"));
    }
    let peak = main.argmax().expect("non-empty");
    if !(0.04..=0.16).contains(&peak.x) {
        problems.push(format!("argmax {}", peak.x));
    }
    let peaks: Vec<f64> = [0.8, 0.9]
        .iter()
        .filter_map(|&c| sweep_pump(&base(c), &grid).ok()?.argmax().map(|r| r.negativity))
        .chain([peak.negativity])
        .collect();
    if !(peaks.len() == 3 && peaks[0] < peaks[1] && peaks[1] < peaks[2]) {
        problems.push(format!("peaks not ordered: {peaks:?}"));
    }
    let at = |x: f64| {
        steady_analytic(&base(0.96).with_symmetric_pump(x).expect("valid"))
            .ok()
            .and_then(|s| negativity(&s.state).ok())
            .unwrap_or(f64::NAN)
    };
    let (n0, small, strong) = (at(0.0), at(1e-6), at(50.0));
    if n0 != 0.0 || !(small < 1e-6) {
        problems.push(format!("N(0) = {n0}, N(1e-6) = {small}"));
    }
    if !(strong < 1e-4) {
        problems.push(format!("N(50) = {strong}"));
    }
    Check {
        name: "steady_pump_curve",
        passed: problems.is_empty(),
        max_residual: strong,
        tolerance: 1e-4,
        detail: if problems.is_empty() {
            format!("argmax {:.3}, peaks {:?}, sweep {:.3} s", peak.x, peaks, elapsed)
        } else {
            problems.join("; ")
        },
    }
}

fn conservation(runs: &[(Preset, SystemParams, Trajectory)]) -> Check {
    let drift = runs.iter().map(|r| r.2.max_trace_drift()).fold(0.0, f64::max);
    let min_eig = runs
        .iter()
        .flat_map(|r| r.2.states.iter())
        .map(min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    Check {
        name: "trace_and_positivity",
        passed: drift < 1e-9 && min_eig >= -1e-7,
        max_residual: drift,
        tolerance: 1e-9,
        detail: format!("min eigenvalue {min_eig:.3e}"),
    }
}

/// Error reduction when the step is halved from 0.005 to 0.0025.
pub fn convergence_ratios() -> Vec<(Preset, f64)> {
    Preset::ALL
        .iter()
        .map(|&preset| {
            let p = preset_params(preset);
            let coarse = closed_form_error(&p, &pumpless_run(&p, HORIZON, 0.005));
            let fine = closed_form_error(&p, &pumpless_run(&p, HORIZON, 0.0025));
            (preset, coarse / fine)
        })
        .collect()
}

fn convergence_order() -> Check {
    let ratios = convergence_ratios();
    let worst = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Check {
        name: "fourth_order_convergence",
        passed: worst >= 8.0,
        max_residual: worst,
        tolerance: 8.0,
        detail: format!("error ratios {ratios:?}"),
    }
}

/// Runs every check.
pub fn run_all() -> ValidationReport {
    let runs: Vec<(Preset, SystemParams, Trajectory)> = Preset::ALL
        .iter()
        .map(|&preset| {
            let p = preset_params(preset);
            let tr = pumpless_run(&p, HORIZON, DEFAULT_DT);
            (preset, p, tr)
        })
        .collect();
    ValidationReport {
        checks: vec![
            closed_form_agreement(&runs),
            excited_pair_decay(&runs),
            transient_shape(),
            pumpless_spectrum(&runs, 200),
            maximal_state(),
            steady_cross_route(),
            shift_independence(),
            pump_curve(),
            conservation(&runs),
            convergence_order(),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_params_are_in_range() {
        for p in random_steady_params(50, 3) {
            assert!((0.0..=0.96).contains(&p.cross1()));
            assert!(p.pump1() > 0.0 && p.pump1() <= 2.0 && p.pump1() == p.pump2());
            assert!((0.5..=2.0).contains(&p.ratio()));
        }
    }

    #[test]
    fn maximal_state_check_passes() {
        let c = maximal_state();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn closed_form_error_is_zero_on_exact_trajectory() {
        let p = preset_params(Preset::R083);
        let mut tr = Trajectory::default();
        for t in [0.0, 0.5, 1.0] {
            tr.times.push(t);
            tr.states.push(analytic_pumpless(&p, t).unwrap());
        }
        assert_eq!(closed_form_error(&p, &tr), 0.0);
    }

    #[test]
    fn check_bound_is_strict() {
        assert!(!Check::bound("x", 1.0, 1.0, String::new()).passed);
        assert!(!Check::bound("x", f64::NAN, 1.0, String::new()).passed);
        assert!(Check::bound("x", 0.5, 1.0, String::new()).passed);
    }
}
