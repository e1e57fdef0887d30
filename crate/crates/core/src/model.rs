//! Parameters, basis labels, reduced state and equations of motion for two
//! radiatively coupled V-type atoms sharing a vacuum.
//!
//! Levels per atom are `e`, `μ` (excited) and `g` (ground). The two-atom
//! product basis is ordered |ee>, |eμ>, |eg>, |μe>, |μμ>, |μg>, |ge>, |gμ>,
//! |gg>, numbered 1 through 9; ρ_ij below always refers to that numbering.
//!
//! Two independent descriptions of the dynamics live here:
//!
//! * [`Generator`], the full 81×81 superoperator assembled from collapse and
//!   coupling operators on the 9-dimensional space, and
//! * [`rhs_pumpless`] / [`rhs_pumped`], the hand-written equations for the
//!   13 matrix elements that stay nonzero from the initial state |eμ>.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::ComplexMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("gamma1 must be positive, got {0}")]
    NonPositiveDecay(f64),
    #[error("frequency ratio r must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("pump rate {name} must be non-negative, got {value}")]
    NegativePump { name: &'static str, value: f64 },
    #[error("cross damping |Gamma1| = {cross} exceeds gamma1 = {decay}")]
    CrossDampingTooLarge { cross: f64, decay: f64 },
    #[error("unknown preset {key:?}; valid keys: R0.50, R0.83, R1.18, R2.78")]
    UnknownPreset { key: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("population rho{index}{index} = {value:e} is negative")]
    NegativePopulation { index: usize, value: f64 },
    #[error("populations sum to {sum}, not 1")]
    TraceNotOne { sum: f64 },
    #[error("coherence rho{coherence} violates the positivity minor by {excess:e}")]
    MinorViolated { coherence: &'static str, excess: f64 },
    #[error("matrix element {row},{col} = {value} lies outside the 13-element support")]
    OutsideSupport { row: usize, col: usize, value: Complex64 },
}

/// Rate and coupling constants, validated at construction.
///
/// Channel 1 is the e↔g transition, channel 2 the μ↔g transition; channel-2
/// constants follow from channel 1 through the frequency ratio r = ω₂/ω₁.
/// All rates share the units of `gamma1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    gamma1: f64,
    ratio: f64,
    cross1: f64,
    shift1: f64,
    pump1: f64,
    pump2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    gamma1: f64,
    r: f64,
    #[serde(rename = "Gamma")]
    cross: f64,
    #[serde(rename = "G")]
    shift: f64,
    #[serde(rename = "Lambda1", default)]
    pump1: f64,
    #[serde(rename = "Lambda2", default)]
    pump2: f64,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = ParamError;
    fn try_from(p: RawParams) -> Result<Self, ParamError> {
        SystemParams::new(p.gamma1, p.r, p.cross, p.shift, p.pump1, p.pump2)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams {
            gamma1: p.gamma1,
            r: p.ratio,
            cross: p.cross1,
            shift: p.shift1,
            pump1: p.pump1,
            pump2: p.pump2,
        }
    }
}

impl SystemParams {
    /// `cross1` is the dipole–dipole cross damping Γ₁, `shift1` the
    /// dipole–dipole level shift G₁, `pump1`/`pump2` the incoherent pump
    /// rates Λ₁ (g→e) and Λ₂ (g→μ).
    pub fn new(
        gamma1: f64,
        ratio: f64,
        cross1: f64,
        shift1: f64,
        pump1: f64,
        pump2: f64,
    ) -> Result<Self, ParamError> {
        for (name, value) in [
            ("gamma1", gamma1),
            ("r", ratio),
            ("Gamma1", cross1),
            ("G1", shift1),
            ("Lambda1", pump1),
            ("Lambda2", pump2),
        ] {
            if !value.is_finite() {
                return Err(ParamError::NotFinite { name, value });
            }
        }
        if gamma1 <= 0.0 {
            return Err(ParamError::NonPositiveDecay(gamma1));
        }
        if ratio <= 0.0 {
            return Err(ParamError::NonPositiveRatio(ratio));
        }
        if pump1 < 0.0 {
            return Err(ParamError::NegativePump { name: "Lambda1", value: pump1 });
        }
        if pump2 < 0.0 {
            return Err(ParamError::NegativePump { name: "Lambda2", value: pump2 });
        }
        // |Γ₂| ≤ γ₂ follows since both scale with r
        if cross1.abs() > gamma1 {
            return Err(ParamError::CrossDampingTooLarge { cross: cross1, decay: gamma1 });
        }
        Ok(Self { gamma1, ratio, cross1, shift1, pump1, pump2 })
    }

    /// Parameters from a separation preset, pump off.
    pub fn from_preset(preset: Preset, gamma1: f64, ratio: f64) -> Result<Self, ParamError> {
        Self::new(
            gamma1,
            ratio,
            preset.cross_ratio() * gamma1,
            preset.shift_ratio() * gamma1,
            0.0,
            0.0,
        )
    }

    pub fn with_pumps(self, pump1: f64, pump2: f64) -> Result<Self, ParamError> {
        Self::new(self.gamma1, self.ratio, self.cross1, self.shift1, pump1, pump2)
    }

    /// Λ₁ = Λ₂ = `pump`.
    pub fn with_symmetric_pump(self, pump: f64) -> Result<Self, ParamError> {
        self.with_pumps(pump, pump)
    }

    pub fn with_coupling(self, cross1: f64, shift1: f64) -> Result<Self, ParamError> {
        Self::new(self.gamma1, self.ratio, cross1, shift1, self.pump1, self.pump2)
    }

    pub fn without_pump(self) -> Self {
        Self { pump1: 0.0, pump2: 0.0, ..self }
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }
    pub fn gamma2(&self) -> f64 {
        self.ratio * self.gamma1
    }
    pub fn ratio(&self) -> f64 {
        self.ratio
    }
    /// Γ₁
    pub fn cross1(&self) -> f64 {
        self.cross1
    }
    /// Γ₂ = r Γ₁
    pub fn cross2(&self) -> f64 {
        self.ratio * self.cross1
    }
    /// G₁
    pub fn shift1(&self) -> f64 {
        self.shift1
    }
    /// G₂ = r G₁
    pub fn shift2(&self) -> f64 {
        self.ratio * self.shift1
    }
    pub fn pump1(&self) -> f64 {
        self.pump1
    }
    pub fn pump2(&self) -> f64 {
        self.pump2
    }
    pub fn is_pumped(&self) -> bool {
        self.pump1 > 0.0 || self.pump2 > 0.0
    }
    /// s₁ = γ₁ + Λ₁ + Λ₂
    pub fn s1(&self) -> f64 {
        self.gamma1 + self.pump1 + self.pump2
    }
    /// s₂ = γ₂ + Λ₁ + Λ₂
    pub fn s2(&self) -> f64 {
        self.gamma2() + self.pump1 + self.pump2
    }

    /// The eight independent rates seen by the generator.
    pub fn rates(&self) -> Rates {
        Rates {
            decay: [self.gamma1, self.gamma2()],
            cross: [self.cross1, self.cross2()],
            shift: [self.shift1, self.shift2()],
            pump: [self.pump1, self.pump2],
        }
    }
}

/// The eight rates entering the generator, unconstrained by r scaling.
/// Index 0 is channel 1 (e↔g), index 1 channel 2 (μ↔g).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub decay: [f64; 2],
    pub cross: [f64; 2],
    pub shift: [f64; 2],
    pub pump: [f64; 2],
}

impl Rates {
    /// Swaps the roles of the two transitions.
    pub fn exchanged(&self) -> Rates {
        let sw = |a: [f64; 2]| [a[1], a[0]];
        Rates {
            decay: sw(self.decay),
            cross: sw(self.cross),
            shift: sw(self.shift),
            pump: sw(self.pump),
        }
    }
}

impl Add for Rates {
    type Output = Rates;
    fn add(self, o: Rates) -> Rates {
        let ad = |a: [f64; 2], b: [f64; 2]| [a[0] + b[0], a[1] + b[1]];
        Rates {
            decay: ad(self.decay, o.decay),
            cross: ad(self.cross, o.cross),
            shift: ad(self.shift, o.shift),
            pump: ad(self.pump, o.pump),
        }
    }
}

/// Single-atom level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    E,
    Mu,
    G,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::E, Level::Mu, Level::G];

    pub fn index(self) -> usize {
        match self {
            Level::E => 0,
            Level::Mu => 1,
            Level::G => 2,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Level::E => "e",
            Level::Mu => "μ",
            Level::G => "g",
        }
    }
}

/// Two-atom product state |a_A b_B>, ordinal 1–9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub a: Level,
    pub b: Level,
}

impl BasisState {
    pub const fn new(a: Level, b: Level) -> Self {
        Self { a, b }
    }

    pub fn all() -> impl Iterator<Item = BasisState> {
        Level::ALL
            .into_iter()
            .flat_map(|a| Level::ALL.into_iter().map(move |b| BasisState::new(a, b)))
    }

    /// 1-based position in the product basis.
    pub fn ordinal(self) -> usize {
        3 * self.a.index() + self.b.index() + 1
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        if !(1..=9).contains(&ordinal) {
            return None;
        }
        let k = ordinal - 1;
        Some(Self::new(Level::ALL[k / 3], Level::ALL[k % 3]))
    }

    pub fn label(self) -> String {
        format!("|{}{}>", self.a.symbol(), self.b.symbol())
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Interatomic separation presets with their coupling constants in units of γ₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "R0.50")]
    R050,
    #[serde(rename = "R0.83")]
    R083,
    #[serde(rename = "R1.18")]
    R118,
    #[serde(rename = "R2.78")]
    R278,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::R050, Preset::R083, Preset::R118, Preset::R278];

    pub fn key(self) -> &'static str {
        match self {
            Preset::R050 => "R0.50",
            Preset::R083 => "R0.83",
            Preset::R118 => "R1.18",
            Preset::R278 => "R2.78",
        }
    }

    /// Separation in units of the transition wavelength.
    pub fn separation(self) -> f64 {
        self.row().0
    }

    /// Γ₁ / γ₁
    pub fn cross_ratio(self) -> f64 {
        self.row().1
    }

    /// G₁ / γ₁
    pub fn shift_ratio(self) -> f64 {
        self.row().2
    }

    fn row(self) -> (f64, f64, f64) {
        match self {
            Preset::R050 => (0.50, 0.96, 8.0),
            Preset::R083 => (0.83, 0.9, 2.4),
            Preset::R118 => (1.18, 0.8, 0.9),
            Preset::R278 => (2.78, 0.2, -0.24),
        }
    }
}

impl FromStr for Preset {
    type Err = ParamError;
    fn from_str(s: &str) -> Result<Self, ParamError> {
        Preset::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| ParamError::UnknownPreset { key: s.to_string() })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// The 13 density-matrix elements that can be nonzero when the pair starts
/// in |eμ>: the nine populations plus ρ₃₇ = <eg|ρ|ge> and ρ₆₈ = <μg|ρ|gμ>
/// (ρ₇₃ and ρ₈₆ are their conjugates).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    /// ρ₁₁ … ρ₉₉, stored 0-based.
    pub populations: [f64; 9],
    pub rho37: Complex64,
    pub rho68: Complex64,
}

/// Positivity tolerance on populations and minors.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Trace tolerance for a valid state.
pub const TRACE_TOL: f64 = 1e-9;

impl ReducedState {
    /// Population ρ_kk with 1-based `k`.
    #[inline]
    pub fn pop(&self, k: usize) -> f64 {
        self.populations[k - 1]
    }

    #[inline]
    pub fn set_pop(&mut self, k: usize, value: f64) {
        self.populations[k - 1] = value;
    }

    /// Both atoms in the ground state, |gg>.
    pub fn ground() -> Self {
        Self::basis_population(9)
    }

    /// The initial state |eμ> (ρ₂₂ = 1).
    pub fn excited_pair() -> Self {
        Self::basis_population(2)
    }

    pub fn basis_population(ordinal: usize) -> Self {
        let mut s = Self::default();
        s.set_pop(ordinal, 1.0);
        s
    }

    pub fn trace(&self) -> f64 {
        self.populations.iter().sum()
    }

    /// Zero pumped-only populations ρ₁₁, ρ₄₄, ρ₅₅ within `tol`.
    pub fn on_pumpless_support(&self, tol: f64) -> bool {
        [1, 4, 5].iter().all(|&k| self.pop(k).abs() <= tol)
    }

    pub fn validate(&self) -> Result<(), StateError> {
        for (i, &p) in self.populations.iter().enumerate() {
            if p < -POSITIVITY_TOL {
                return Err(StateError::NegativePopulation { index: i + 1, value: p });
            }
        }
        let sum = self.trace();
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(StateError::TraceNotOne { sum });
        }
        let excess37 = self.rho37.norm_sqr() - self.pop(3) * self.pop(7);
        if excess37 > POSITIVITY_TOL {
            return Err(StateError::MinorViolated { coherence: "37", excess: excess37 });
        }
        let excess68 = self.rho68.norm_sqr() - self.pop(6) * self.pop(8);
        if excess68 > POSITIVITY_TOL {
            return Err(StateError::MinorViolated { coherence: "68", excess: excess68 });
        }
        Ok(())
    }

    pub fn to_density_matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(9);
        for (i, &p) in self.populations.iter().enumerate() {
            m[(i, i)] = Complex64::new(p, 0.0);
        }
        m[(2, 6)] = self.rho37;
        m[(6, 2)] = self.rho37.conj();
        m[(5, 7)] = self.rho68;
        m[(7, 5)] = self.rho68.conj();
        m
    }

    /// Reads the 13 support elements; anything else larger than `tol` is an
    /// error.
    pub fn from_density_matrix(m: &ComplexMatrix, tol: f64) -> Result<Self, StateError> {
        let on_support = |i: usize, j: usize| {
            i == j || matches!((i, j), (2, 6) | (6, 2) | (5, 7) | (7, 5))
        };
        for i in 0..9 {
            for j in 0..9 {
                if !on_support(i, j) && m[(i, j)].norm() > tol {
                    return Err(StateError::OutsideSupport {
                        row: i + 1,
                        col: j + 1,
                        value: m[(i, j)],
                    });
                }
            }
        }
        Ok(Self::from_density_matrix_unchecked(m))
    }

    fn from_density_matrix_unchecked(m: &ComplexMatrix) -> Self {
        let mut populations = [0.0; 9];
        for (i, p) in populations.iter_mut().enumerate() {
            *p = m[(i, i)].re;
        }
        Self { populations, rho37: m[(2, 6)], rho68: m[(5, 7)] }
    }

    /// Real coordinates: nine populations, then Re/Im ρ₃₇, Re/Im ρ₆₈.
    pub fn to_real(&self) -> [f64; 13] {
        let mut v = [0.0; 13];
        v[..9].copy_from_slice(&self.populations);
        v[9] = self.rho37.re;
        v[10] = self.rho37.im;
        v[11] = self.rho68.re;
        v[12] = self.rho68.im;
        v
    }

    pub fn from_real(v: &[f64; 13]) -> Self {
        let mut populations = [0.0; 9];
        populations.copy_from_slice(&v[..9]);
        Self {
            populations,
            rho37: Complex64::new(v[9], v[10]),
            rho68: Complex64::new(v[11], v[12]),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.populations
            .iter()
            .map(|p| p.abs())
            .chain([self.rho37.norm(), self.rho68.norm()])
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_norm()
    }

    /// Relabels the transitions 1↔2 (e↔μ on both atoms): ρ₁₁↔ρ₅₅, ρ₂₂↔ρ₄₄, ρ₃₃↔ρ₆₆, ρ₇₇↔ρ₈₈,
    /// ρ₃₇↔ρ₆₈.
    pub fn exchanged(&self) -> Self {
        let p = |k| self.pop(k);
        Self {
            populations: [p(5), p(4), p(6), p(2), p(1), p(3), p(8), p(7), p(9)],
            rho37: self.rho68,
            rho68: self.rho37,
        }
    }
}

impl Add for ReducedState {
    type Output = ReducedState;
    fn add(self, o: Self) -> Self {
        let mut populations = self.populations;
        for (p, q) in populations.iter_mut().zip(o.populations) {
            *p += q;
        }
        Self { populations, rho37: self.rho37 + o.rho37, rho68: self.rho68 + o.rho68 }
    }
}

impl Sub for ReducedState {
    type Output = ReducedState;
    fn sub(self, o: Self) -> Self {
        self + o * -1.0
    }
}

impl Mul<f64> for ReducedState {
    type Output = ReducedState;
    fn mul(self, s: f64) -> Self {
        Self {
            populations: self.populations.map(|p| p * s),
            rho37: self.rho37 * s,
            rho68: self.rho68 * s,
        }
    }
}

// ---------------------------------------------------------------------------
// Operator-level generator
// ---------------------------------------------------------------------------

/// Single-atom transition operator |to><from| on the 3-level space.
fn transition(to: Level, from: Level) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3);
    m[(to.index(), from.index())] = Complex64::new(1.0, 0.0);
    m
}

fn on_a(op: &ComplexMatrix) -> ComplexMatrix {
    op.kron(&ComplexMatrix::identity(3))
}

fn on_b(op: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::identity(3).kron(op)
}

/// 2 J ρ K − K J ρ − ρ K J, the cross-dissipator shape shared by all
/// dissipative terms (J = K† gives the ordinary Lindblad form with rate 1).
fn cross_dissipator(j: &ComplexMatrix, k: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let jump = j.matmul(rho).matmul(k).scale(Complex64::new(2.0, 0.0));
    let kj = k.matmul(j);
    &(&jump - &kj.matmul(rho)) - &rho.matmul(&kj)
}

/// 2 J ρ J† − P ρ − ρ P with an explicit projector P (pump terms).
fn pump_dissipator(j: &ComplexMatrix, p: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let jump = j.matmul(rho).matmul(&j.adjoint()).scale(Complex64::new(2.0, 0.0));
    &(&jump - &p.matmul(rho)) - &rho.matmul(p)
}

/// Operators needed to evaluate the master equation on 9×9 matrices.
struct Operators {
    // lowering operators per channel and atom: [channel][atom]
    lower: [[ComplexMatrix; 2]; 2],
    // raising operators for the pump, [channel][atom]
    raise: [[ComplexMatrix; 2]; 2],
    ground_projector: [ComplexMatrix; 2],
    // level-shift Hamiltonian pieces, one per channel (without G)
    exchange: [ComplexMatrix; 2],
}

impl Operators {
    fn new() -> Self {
        let lower1 = transition(Level::G, Level::E);
        let lower2 = transition(Level::G, Level::Mu);
        let lower = [
            [on_a(&lower1), on_b(&lower1)],
            [on_a(&lower2), on_b(&lower2)],
        ];
        let raise = [
            [lower[0][0].adjoint(), lower[0][1].adjoint()],
            [lower[1][0].adjoint(), lower[1][1].adjoint()],
        ];
        let pg = transition(Level::G, Level::G);
        let ground_projector = [on_a(&pg), on_b(&pg)];
        // σ_A† σ_B + h.c. for each channel
        let exchange = [0, 1].map(|c| {
            let x = raise[c][0].matmul(&lower[c][1]);
            &x + &x.adjoint()
        });
        Self { lower, raise, ground_projector, exchange }
    }

    /// dρ/dt for an arbitrary (not necessarily Hermitian) 9×9 `rho`.
    fn apply(&self, rates: &Rates, pumped: bool, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(9);
        let minus_i = Complex64::new(0.0, -1.0);
        for c in 0..2 {
            // coherent dipole–dipole shift: -i[V, ρ]
            if rates.shift[c] != 0.0 {
                let v = self.exchange[c].scale(Complex64::new(rates.shift[c], 0.0));
                let comm = &v.matmul(rho) - &rho.matmul(&v);
                out = &out + &comm.scale(minus_i);
            }
            // independent spontaneous emission of each atom
            if rates.decay[c] != 0.0 {
                for atom in 0..2 {
                    let l = &self.lower[c][atom];
                    let d = cross_dissipator(l, &l.adjoint(), rho);
                    out = &out + &d.scale(Complex64::new(rates.decay[c], 0.0));
                }
            }
            // vacuum-mediated cross damping: B emits, A absorbs, plus the
            // (linear) Hermitian-conjugate partner with the atoms swapped
            if rates.cross[c] != 0.0 {
                let [la, lb] = &self.lower[c];
                let d = &cross_dissipator(lb, &la.adjoint(), rho)
                    + &cross_dissipator(la, &lb.adjoint(), rho);
                out = &out + &d.scale(Complex64::new(rates.cross[c], 0.0));
            }
            // incoherent pump g → e (c = 0) or g → μ (c = 1); the
            // anticommutator removes population from |g> of the pumped atom
            if pumped && rates.pump[c] != 0.0 {
                for atom in 0..2 {
                    let d = pump_dissipator(&self.raise[c][atom], &self.ground_projector[atom], rho);
                    out = &out + &d.scale(Complex64::new(rates.pump[c], 0.0));
                }
            }
        }
        out
    }
}

/// Vectorized generator L with dρ/dt = L vec(ρ), where vec stacks rows
/// (vec index 9 i + j for ρ_ij, 0-based).
#[derive(Debug, Clone)]
pub struct Generator {
    matrix: ComplexMatrix,
}

impl Generator {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// L(ρ) as a 9×9 matrix.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(rho.dim(), 9);
        let out = self.matrix.mul_vec(rho.as_slice());
        ComplexMatrix::from_row_major(out).expect("81 entries")
    }

    /// Derivative of a reduced state through the full generator. Errors if
    /// the result leaks outside the 13-element support.
    pub fn apply_reduced(&self, state: &ReducedState) -> Result<ReducedState, StateError> {
        ReducedState::from_density_matrix(&self.apply(&state.to_density_matrix()), 1e-12)
    }
}

/// Builds the 81×81 generator. With `pumped = false` the pump terms are
/// dropped regardless of the pump rates in `params`.
pub fn build_generator(params: &SystemParams, pumped: bool) -> Generator {
    build_generator_from_rates(&params.rates(), pumped)
}

pub fn build_generator_from_rates(rates: &Rates, pumped: bool) -> Generator {
    let ops = Operators::new();
    let mut matrix = ComplexMatrix::zeros(81);
    let mut unit = ComplexMatrix::zeros(9);
    for col in 0..81 {
        let (i, j) = (col / 9, col % 9);
        unit[(i, j)] = Complex64::new(1.0, 0.0);
        let image = ops.apply(rates, pumped, &unit);
        for (row, v) in image.as_slice().iter().enumerate() {
            matrix[(row, col)] = *v;
        }
        unit[(i, j)] = Complex64::new(0.0, 0.0);
    }
    Generator { matrix }
}

/// Master-equation right-hand side evaluated directly on a 9×9 matrix,
/// without materializing the superoperator.
pub fn lindblad_rhs(params: &SystemParams, pumped: bool, rho: &ComplexMatrix) -> ComplexMatrix {
    Operators::new().apply(&params.rates(), pumped, rho)
}

// ---------------------------------------------------------------------------
// Reduced right-hand sides
// ---------------------------------------------------------------------------

/// Derivative of the ten elements that survive without pumping. Pump rates in
/// `params` are ignored; ρ₁₁, ρ₄₄, ρ₅₅ must be zero and their derivatives
/// are returned as zero.
pub fn rhs_pumpless(state: &ReducedState, params: &SystemParams) -> ReducedState {
    debug_assert!(state.on_pumpless_support(1e-10), "pumpless rhs on pumped state");
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let (c1, c2) = (params.cross1(), params.cross2());
    let (d1, d2) = (params.shift1(), params.shift2());
    let i = Complex64::new(0.0, 1.0);
    let p = |k| state.pop(k);
    let r37 = state.rho37;
    let r73 = r37.conj();
    let r68 = state.rho68;
    let r86 = r68.conj();

    let mut d = ReducedState::default();
    d.set_pop(2, -2.0 * (g1 + g2) * p(2));
    d.set_pop(
        3,
        (-2.0 * g1 * p(3) + 2.0 * g2 * p(2) - c1 * (r73 + r37) - i * d1 * (r73 - r37)).re,
    );
    d.rho37 = -2.0 * g1 * r37 - c1 * (p(7) + p(3)) - i * d1 * (p(7) - p(3));
    d.set_pop(6, (-2.0 * g2 * p(6) - c2 * (r86 + r68) - i * d2 * (r86 - r68)).re);
    d.rho68 = -2.0 * g2 * r68 - c2 * (p(8) + p(6)) - i * d2 * (p(8) - p(6));
    d.set_pop(7, (-2.0 * g1 * p(7) - c1 * (r37 + r73) - i * d1 * (r37 - r73)).re);
    d.set_pop(
        8,
        (-2.0 * g2 * p(8) + 2.0 * g1 * p(2) - c2 * (r86 + r68) - i * d2 * (r68 - r86)).re,
    );
    d.set_pop(
        9,
        (2.0 * g1 * (p(3) + p(7))
            + 2.0 * g2 * (p(6) + p(8))
            + 2.0 * c1 * (r37 + r73)
            + 2.0 * c2 * (r68 + r86))
            .re,
    );
    d
}

/// Derivative of all 13 support elements with incoherent pumping.
pub fn rhs_pumped(state: &ReducedState, params: &SystemParams) -> ReducedState {
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let (c1, c2) = (params.cross1(), params.cross2());
    let (d1, d2) = (params.shift1(), params.shift2());
    let (l1, l2) = (params.pump1(), params.pump2());
    let (s1, s2) = (params.s1(), params.s2());
    let i = Complex64::new(0.0, 1.0);
    let p = |k| state.pop(k);
    let r37 = state.rho37;
    let r73 = r37.conj();
    let r68 = state.rho68;
    let r86 = r68.conj();

    let mut d = ReducedState::default();
    d.set_pop(1, -4.0 * g1 * p(1) + 2.0 * l1 * (p(7) + p(3)));
    d.set_pop(2, -2.0 * (g1 + g2) * p(2) + 2.0 * l1 * p(8) + 2.0 * l2 * p(3));
    d.set_pop(
        3,
        (-2.0 * s1 * p(3) + 2.0 * g2 * p(2) + 2.0 * g1 * p(1) + 2.0 * l1 * p(9)
            - i * d1 * (r73 - r37)
            - c1 * (r73 + r37))
            .re,
    );
    d.rho37 = -2.0 * s1 * r37 - c1 * (p(7) + p(3)) + 2.0 * c1 * p(1) - i * d1 * (p(7) - p(3));
    d.set_pop(4, -2.0 * (g1 + g2) * p(4) + 2.0 * l1 * p(6) + 2.0 * l2 * p(7));
    d.set_pop(5, -4.0 * g2 * p(5) + 2.0 * l2 * (p(6) + p(8)));
    d.set_pop(
        6,
        (-2.0 * s2 * p(6) + 2.0 * g1 * p(4) + 2.0 * g2 * p(5) + 2.0 * l2 * p(9)
            - i * d2 * (r86 - r68)
            - c2 * (r86 + r68))
            .re,
    );
    // the |μμ> source feeding ρ₆₈ carries the channel-2 cross damping Γ₂,
    // mirroring the 2Γ₁ρ₁₁ source of ρ₃₇
    d.rho68 = -2.0 * s2 * r68 - c2 * (p(8) + p(6)) + 2.0 * c2 * p(5) - i * d2 * (p(8) - p(6));
    d.set_pop(
        7,
        (-2.0 * s1 * p(7) + 2.0 * g1 * p(1) + 2.0 * g2 * p(4) + 2.0 * l1 * p(9)
            - c1 * (r37 + r73)
            - i * d1 * (r37 - r73))
            .re,
    );
    d.set_pop(
        8,
        (-2.0 * s2 * p(8) + 2.0 * g1 * p(2) + 2.0 * g2 * p(5) + 2.0 * l2 * p(9)
            - c2 * (r86 + r68)
            - i * d2 * (r68 - r86))
            .re,
    );
    d.set_pop(
        9,
        (2.0 * g1 * (p(3) + p(7)) + 2.0 * g2 * (p(6) + p(8)) - 4.0 * (l1 + l2) * p(9)
            + 2.0 * c1 * (r37 + r73)
            + 2.0 * c2 * (r68 + r86))
            .re,
    );
    d
}
