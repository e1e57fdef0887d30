//! Partial-transpose negativity N(ρ) = −Σ (negative eigenvalues of ρ^{T_A}).
//!
//! Three routes to the spectrum of ρ^{T_A}:
//!
//! * generic: Jacobi diagonalization of the full 9×9 partial transpose;
//! * pumpless closed form: on states without ρ₁₁, ρ₄₄, ρ₅₅ the spectrum is
//!   {0, 0, ρ₂₂, ρ₃₃, ρ₆₆, ρ₇₇, ρ₈₈, λ₊, λ₋} with
//!   λ± = ρ₉₉/2 ± ½ √(ρ₉₉² + 4(|ρ₃₇|² + |ρ₆₈|²));
//! * block cubic: on the full 13-element support, ρ^{T_A} splits into the
//!   diagonal entries ρ₂₂, ρ₃₃, ρ₄₄, ρ₆₆, ρ₇₇, ρ₈₈ and a 3×3 Hermitian block on
//!   {|ee>, |μμ>, |gg>} whose characteristic polynomial is
//!   (ρ₁₁−λ)(ρ₅₅−λ)(ρ₉₉−λ) − |ρ₃₇|²(ρ₅₅−λ) − |ρ₆₈|²(ρ₁₁−λ).
//!
//! The last two are only valid on the support described by [`ReducedState`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eigenvalues, partial_transpose_a, ComplexMatrix, LinalgError, JACOBI_TOL};
use crate::model::ReducedState;

/// Eigenvalues above this are not counted as negative.
pub const NEGATIVE_THRESHOLD: f64 = -1e-12;
/// Allowed deviation of tr ρ from 1 for the generic route.
pub const NEGATIVITY_TRACE_TOL: f64 = 1e-8;
/// Largest imaginary part tolerated in a cubic root before the input is
/// declared inconsistent.
pub const CUBIC_IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("density matrix trace {trace} deviates from 1")]
    TraceNotOne { trace: f64 },
    #[error("closed form requires pumpless support but rho{index}{index} = {value:e}")]
    NotPumpless { index: usize, value: f64 },
    #[error("characteristic cubic has a complex root pair (imaginary part {imag:e})")]
    ComplexRoots { imag: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Generic,
    ClosedFormPumpless,
    CubicPumped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityResult {
    pub value: f64,
    pub negative_eigenvalues: Vec<f64>,
    pub method: Method,
}

impl NegativityResult {
    pub fn from_spectrum(spectrum: &[f64], method: Method) -> Self {
        let negative_eigenvalues: Vec<f64> =
            spectrum.iter().copied().filter(|&l| l < NEGATIVE_THRESHOLD).collect();
        let value = -negative_eigenvalues.iter().sum::<f64>();
        Self { value: value.max(0.0), negative_eigenvalues, method }
    }
}

/// Ascending spectrum of ρ^{T_A} by direct diagonalization.
pub fn pt_spectrum_generic(rho: &ComplexMatrix) -> Result<Vec<f64>, EntanglementError> {
    let pt = partial_transpose_a(rho)?;
    Ok(hermitian_eigenvalues(&pt, JACOBI_TOL)?)
}

pub fn negativity_generic(rho: &ComplexMatrix) -> Result<NegativityResult, EntanglementError> {
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > NEGATIVITY_TRACE_TOL || trace.im.abs() > NEGATIVITY_TRACE_TOL {
        return Err(EntanglementError::TraceNotOne { trace: trace.re });
    }
    let spectrum = pt_spectrum_generic(rho)?;
    Ok(NegativityResult::from_spectrum(&spectrum, Method::Generic))
}

/// The nine closed-form eigenvalues, in the order
/// [0, 0, ρ₂₂, ρ₃₃, ρ₆₆, ρ₇₇, ρ₈₈, λ₊, λ₋].
pub fn pt_eigenvalues_pumpless(state: &ReducedState) -> Result<[f64; 9], EntanglementError> {
    for index in [1, 4, 5] {
        let value = state.pop(index);
        if value.abs() > 1e-10 {
            return Err(EntanglementError::NotPumpless { index, value });
        }
    }
    let r99 = state.pop(9);
    let c = state.rho37.norm_sqr() + state.rho68.norm_sqr();
    let root = (r99 * r99 + 4.0 * c).sqrt();
    let plus = 0.5 * r99 + 0.5 * root;
    // λ₋ = −c/λ₊ avoids cancellation when the coherences are small
    let minus = if plus > 0.0 { -c / plus } else { 0.5 * r99 - 0.5 * root };
    Ok([
        0.0,
        0.0,
        state.pop(2),
        state.pop(3),
        state.pop(6),
        state.pop(7),
        state.pop(8),
        plus,
        minus,
    ])
}

pub fn negativity_pumpless(state: &ReducedState) -> Result<NegativityResult, EntanglementError> {
    let ev = pt_eigenvalues_pumpless(state)?;
    Ok(NegativityResult::from_spectrum(&ev, Method::ClosedFormPumpless))
}

/// Spectrum of ρ^{T_A} on the 13-element support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpectrum {
    /// ρ₂₂, ρ₃₃, ρ₄₄, ρ₆₆, ρ₇₇, ρ₈₈: diagonal entries untouched by T_A.
    pub direct: [f64; 6],
    /// Roots of the block cubic, ascending.
    pub cubic_roots: [f64; 3],
}

impl BlockSpectrum {
    pub fn all(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[..6].copy_from_slice(&self.direct);
        out[6..].copy_from_slice(&self.cubic_roots);
        out
    }

    pub fn sorted(&self) -> [f64; 9] {
        let mut out = self.all();
        out.sort_by(f64::total_cmp);
        out
    }
}

pub fn pt_eigenvalues_pumped(state: &ReducedState) -> Result<BlockSpectrum, EntanglementError> {
    let a = state.pop(1);
    let b = state.pop(5);
    let c = state.pop(9);
    let x = state.rho37.norm_sqr();
    let y = state.rho68.norm_sqr();
    // the block is reducible whenever a coherence vanishes or ρ₁₁ = ρ₅₅;
    // those are exactly the cases with repeated roots, so split them off
    let mut roots = if x == 0.0 {
        with_quadratic(a, b, c, y)
    } else if y == 0.0 {
        with_quadratic(b, a, c, x)
    } else if a == b {
        with_quadratic(a, a, c, x + y)
    } else {
        // monic form λ³ + p2 λ² + p1 λ + p0
        let p2 = -(a + b + c);
        let p1 = a * b + b * c + c * a - x - y;
        let p0 = -(a * b * c - x * b - y * a);
        real_cubic_roots(p2, p1, p0)?
    };
    roots.sort_by(f64::total_cmp);
    Ok(BlockSpectrum {
        direct: [2, 3, 4, 6, 7, 8].map(|k| state.pop(k)),
        cubic_roots: roots,
    })
}

/// {`single`} together with the roots of (p − λ)(q − λ) − z.
fn with_quadratic(single: f64, p: f64, q: f64, z: f64) -> [f64; 3] {
    let mid = 0.5 * (p + q);
    let half = (0.25 * (p - q) * (p - q) + z).sqrt();
    let hi = mid + half;
    // product of roots is pq − z; use it for the smaller root when stable
    let lo = if hi.abs() > f64::MIN_POSITIVE && mid > 0.0 { (p * q - z) / hi } else { mid - half };
    [single, lo, hi]
}

pub fn negativity_pumped(state: &ReducedState) -> Result<NegativityResult, EntanglementError> {
    let spec = pt_eigenvalues_pumped(state)?;
    Ok(NegativityResult::from_spectrum(&spec.all(), Method::CubicPumped))
}

/// Negativity of a support state through the block cubic, the cheapest route
/// valid everywhere on the 13-element support.
pub fn negativity(state: &ReducedState) -> Result<f64, EntanglementError> {
    negativity_pumped(state).map(|r| r.value)
}

/// Ascending real roots of λ³ + p2 λ² + p1 λ + p0 (trigonometric method,
/// Newton-polished). A complex pair with imaginary part beyond
/// [`CUBIC_IMAG_TOL`] is an error.
pub fn real_cubic_roots(p2: f64, p1: f64, p0: f64) -> Result<[f64; 3], EntanglementError> {
    let shift = -p2 / 3.0;
    // depressed cubic u³ + p u + q with λ = u + shift
    let p = p1 - p2 * p2 / 3.0;
    let q = 2.0 * p2 * p2 * p2 / 27.0 - p2 * p1 / 3.0 + p0;

    let mut roots = if p >= 0.0 {
        // at most one real root unless p = q = 0 (triple root)
        let disc = q * q / 4.0 + p * p * p / 27.0;
        let sd = disc.max(0.0).sqrt();
        let u = (-q / 2.0 + sd).cbrt();
        let v = (-q / 2.0 - sd).cbrt();
        let imag = 0.5 * 3f64.sqrt() * (u - v).abs();
        if imag > CUBIC_IMAG_TOL {
            return Err(EntanglementError::ComplexRoots { imag });
        }
        let real = u + v;
        [real, -0.5 * real, -0.5 * real]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = 3.0 * q / (p * m);
        if arg.abs() > 1.0 + 1e-12 {
            let disc = q * q / 4.0 + p * p * p / 27.0;
            let sd = disc.max(0.0).sqrt();
            let u = (-q / 2.0 + sd).cbrt();
            let v = (-q / 2.0 - sd).cbrt();
            let imag = 0.5 * 3f64.sqrt() * (u - v).abs();
            if imag > CUBIC_IMAG_TOL {
                return Err(EntanglementError::ComplexRoots { imag });
            }
        }
        let theta = arg.clamp(-1.0, 1.0).acos() / 3.0;
        [
            m * theta.cos(),
            m * (theta - 2.0 * PI / 3.0).cos(),
            m * (theta - 4.0 * PI / 3.0).cos(),
        ]
    };

    for r in roots.iter_mut() {
        *r += shift;
        for _ in 0..2 {
            let f = ((*r + p2) * *r + p1) * *r + p0;
            let df = (3.0 * *r + 2.0 * p2) * *r + p1;
            if df.abs() < 1e-300 {
                break;
            }
            let step = f / df;
            // only polish, never jump to another root
            if step.abs() > 1e-6 * (1.0 + r.abs()) {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ket(entries: &[(usize, f64)]) -> Vec<Complex64> {
        let mut v = vec![c(0.0, 0.0); 9];
        for &(k, a) in entries {
            v[k - 1] = c(a, 0.0);
        }
        v
    }

    #[test]
    fn ground_state_has_zero_negativity() {
        let rho = ReducedState::ground().to_density_matrix();
        assert_eq!(negativity_generic(&rho).unwrap().value, 0.0);
    }

    #[test]
    fn maximally_entangled_state() {
        let a = 1.0 / 3f64.sqrt();
        let rho = ComplexMatrix::projector(&ket(&[(1, a), (5, a), (9, a)]));
        let n = negativity_generic(&rho).unwrap();
        assert!((n.value - 1.0).abs() < 1e-12, "{}", n.value);
        assert_eq!(n.method, Method::Generic);
        let sum: f64 = n.negative_eigenvalues.iter().sum();
        assert!((n.value + sum).abs() < 1e-12);
    }

    #[test]
    fn eg_ge_bell_state() {
        let a = 1.0 / 2f64.sqrt();
        let rho = ComplexMatrix::projector(&ket(&[(3, a), (7, a)]));
        assert!((negativity_generic(&rho).unwrap().value - 0.5).abs() < 1e-12);
        // same state through the closed form and the block cubic
        let s = ReducedState::from_density_matrix(&rho, 0.0).unwrap();
        assert!((negativity_pumpless(&s).unwrap().value - 0.5).abs() < 1e-12);
        assert!((negativity_pumped(&s).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn generic_rejects_unnormalized() {
        let rho = ComplexMatrix::diagonal(&[0.5; 9]);
        assert!(matches!(negativity_generic(&rho), Err(EntanglementError::TraceNotOne { .. })));
    }

    #[test]
    fn closed_form_on_separable_initial_state() {
        let ev = pt_eigenvalues_pumpless(&ReducedState::excited_pair()).unwrap();
        let mut sorted = ev;
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(ev[8], 0.0);
    }

    #[test]
    fn closed_form_unnormalized_algebraic_check() {
        let mut s = ReducedState::ground();
        s.rho37 = c(0.1, 0.0);
        let ev = pt_eigenvalues_pumpless(&s).unwrap();
        let expected = 0.5 - 0.5 * (1.0f64 + 0.04).sqrt();
        assert!((ev[8] - expected).abs() < 1e-15);
        assert!((ev[8] + 0.009901951359278).abs() < 1e-12);
        // generic eigensolver on the assembled matrix (trace check bypassed)
        let mut generic = pt_spectrum_generic(&s.to_density_matrix()).unwrap();
        let mut closed = ev;
        closed.sort_by(f64::total_cmp);
        generic.sort_by(f64::total_cmp);
        for (a, b) in closed.iter().zip(&generic) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_rejects_pumped_state() {
        let mut s = ReducedState::ground();
        s.set_pop(5, 0.1);
        s.set_pop(9, 0.9);
        assert!(matches!(
            pt_eigenvalues_pumpless(&s),
            Err(EntanglementError::NotPumpless { index: 5, .. })
        ));
    }

    #[test]
    fn decoupled_cubic_roots_are_diagonal() {
        let mut s = ReducedState::default();
        s.populations = [0.2, 0.05, 0.1, 0.05, 0.15, 0.1, 0.1, 0.1, 0.15];
        let spec = pt_eigenvalues_pumped(&s).unwrap();
        let mut expected = [0.2, 0.15, 0.15];
        expected.sort_by(f64::total_cmp);
        for (r, e) in spec.cubic_roots.iter().zip(expected) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn cubic_matches_generic_on_pumped_support() {
        let mut s = ReducedState::default();
        s.populations = [0.01, 0.009, 0.13, 0.009, 0.008, 0.12, 0.13, 0.12, 0.455];
        let t = s.trace();
        s = s * (1.0 / t);
        s.rho37 = c(-0.10, 0.02);
        s.rho68 = c(-0.09, -0.01);
        let block = pt_eigenvalues_pumped(&s).unwrap().sorted();
        let generic = pt_spectrum_generic(&s.to_density_matrix()).unwrap();
        for (a, b) in block.iter().zip(&generic) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(block[0] < 0.0);
    }

    #[test]
    fn cubic_solver_known_roots() {
        // (λ-1)(λ-2)(λ-3)
        let r = real_cubic_roots(-6.0, 11.0, -6.0).unwrap();
        for (x, e) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-13);
        }
        // triple root at 0.5
        let r = real_cubic_roots(-1.5, 0.75, -0.125).unwrap();
        assert!(r.iter().all(|x| (x - 0.5).abs() < 1e-5));
        // double root: (λ-1)²(λ+2)
        let r = real_cubic_roots(0.0, -3.0, 2.0).unwrap();
        assert!((r[0] + 2.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-7 && (r[2] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn cubic_solver_rejects_complex_pair() {
        // λ³ + λ = λ(λ² + 1)
        assert!(matches!(
            real_cubic_roots(0.0, 1.0, 0.0),
            Err(EntanglementError::ComplexRoots { .. })
        ));
    }

    #[test]
    fn diagonal_states_have_zero_negativity() {
        let mut s = ReducedState::default();
        s.populations = [0.1, 0.2, 0.05, 0.05, 0.1, 0.1, 0.2, 0.1, 0.1];
        assert_eq!(negativity_pumped(&s).unwrap().value, 0.0);
        assert_eq!(negativity_generic(&s.to_density_matrix()).unwrap().value, 0.0);
    }
}
