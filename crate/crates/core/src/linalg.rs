//! Dense complex matrices sized for the two-atom problem (dimension 9, or 81
//! for vectorized superoperators), with a cyclic Jacobi eigensolver for
//! Hermitian input, partial transposition and a small real linear solver.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Hermiticity tolerance applied before diagonalization.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Default off-diagonal Frobenius threshold for the Jacobi sweeps.
pub const JACOBI_TOL: f64 = 1e-12;
/// Sweep cap for the Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max |M_ij - conj(M_ji)| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },
    #[error("Jacobi iteration did not converge: off-diagonal norm {off_diagonal_norm:e} after {sweeps} sweeps")]
    NoConvergence { off_diagonal_norm: f64, sweeps: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular linear system (pivot {pivot:e} at column {column})")]
    Singular { pivot: f64, column: usize },
}

/// Square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a square.
    pub fn from_row_major(entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, data: entries })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Outer product |v><v|.
    pub fn projector(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |M_ij - conj(M_ji)| over all index pairs.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (m, n) = (self.dim, rhs.dim);
        Self::from_fn(m * n, |r, c| {
            self[(r / n, c / n)] * rhs[(r % n, c % n)]
        })
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Eigen-decomposition of a Hermitian matrix: `values` ascending, eigenvector
/// `k` stored in column `k` of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Rebuilds V diag(values) V†.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)].conj())
                .sum()
        })
    }
}

/// Ascending eigenvalues of a Hermitian matrix; `tol` is the off-diagonal
/// Frobenius threshold that ends the Jacobi sweeps.
pub fn hermitian_eigenvalues(m: &ComplexMatrix, tol: f64) -> Result<Vec<f64>, LinalgError> {
    jacobi(m, tol, false).map(|e| e.values)
}

pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigen, LinalgError> {
    jacobi(m, tol, true)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(m: &ComplexMatrix, tol: f64, want_vectors: bool) -> Result<HermitianEigen, LinalgError> {
    let asym = m.max_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(LinalgError::NotHermitian { max_asymmetry: asym });
    }
    let n = m.dim;
    // symmetrize so the rotations see an exactly Hermitian input
    let mut a = ComplexMatrix::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let mut v = ComplexMatrix::identity(n);
    let threshold = tol * m.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence {
                off_diagonal_norm: off,
                sweeps,
            });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, want_vectors.then_some(&mut v), p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = if want_vectors {
        ComplexMatrix::from_fn(n, |i, k| v[(i, order[k])])
    } else {
        ComplexMatrix::zeros(n)
    };
    Ok(HermitianEigen { values, vectors })
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
///
/// The rotation is J = D R with D = diag(1, e^{-iφ}) on the (p, q) plane
/// (φ = arg a_pq) and R the real rotation for the phase-stripped 2×2 block;
/// the update is A ← J† A J, V ← V J.
fn rotate(a: &mut ComplexMatrix, v: Option<&mut ComplexMatrix>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < f64::MIN_POSITIVE {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J entries: J_pp = c, J_pq = s, J_qp = -s e^{-iφ}, J_qq = c e^{-iφ}
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = a.dim;
    // A ← A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // A ← J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    if let Some(v) = v {
        for k in 0..n {
            let vkp = v[(k, p)];
            let vkq = v[(k, q)];
            v[(k, p)] = vkp * jpp + vkq * jqp;
            v[(k, q)] = vkp * jpq + vkq * jqq;
        }
    }
}

/// Partial transpose over the first factor of a `dim_a * dim_b` bipartite
/// matrix: out[(i,j),(k,l)] = in[(k,j),(i,l)].
pub fn partial_transpose_first(
    rho: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
) -> Result<ComplexMatrix, LinalgError> {
    if rho.dim() != dim_a * dim_b {
        return Err(LinalgError::DimensionMismatch {
            expected: dim_a * dim_b,
            found: rho.dim(),
        });
    }
    Ok(ComplexMatrix::from_fn(rho.dim(), |row, col| {
        let (i, j) = (row / dim_b, row % dim_b);
        let (k, l) = (col / dim_b, col % dim_b);
        rho[(k * dim_b + j, i * dim_b + l)]
    }))
}

/// Partial transpose on atom A of a two-qutrit density matrix.
pub fn partial_transpose_a(rho: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    partial_transpose_first(rho, 3, 3)
}

/// Reduced matrix of the first factor, Tr_B.
pub fn partial_trace_second(
    rho: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
) -> Result<ComplexMatrix, LinalgError> {
    if rho.dim() != dim_a * dim_b {
        return Err(LinalgError::DimensionMismatch {
            expected: dim_a * dim_b,
            found: rho.dim(),
        });
    }
    Ok(ComplexMatrix::from_fn(dim_a, |i, k| {
        (0..dim_b).map(|j| rho[(i * dim_b + j, k * dim_b + j)]).sum()
    }))
}

/// Solves the dense real system `a x = b` (row-major `a`) by Gaussian
/// elimination with partial pivoting. Also returns the ratio of the smallest
/// to largest pivot magnitude as a cheap conditioning indicator.
pub fn solve_real(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, f64), LinalgError> {
    let n = b.len();
    if a.len() != n * n {
        return Err(LinalgError::DimensionMismatch {
            expected: n * n,
            found: a.len(),
        });
    }
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0_f64;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .expect("non-empty pivot range");
        let pivot = m[pivot_row * n + col];
        if pivot.abs() <= f64::EPSILON * scale * n as f64 {
            return Err(LinalgError::Singular {
                pivot: pivot.abs(),
                column: col,
            });
        }
        min_pivot = min_pivot.min(pivot.abs());
        max_pivot = max_pivot.max(pivot.abs());
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
            }
            x.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = m[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    Ok((x, min_pivot / max_pivot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = c(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn identity_spectrum() {
        let ev = hermitian_eigenvalues(&ComplexMatrix::identity(9), JACOBI_TOL).unwrap();
        assert_eq!(ev, vec![1.0; 9]);
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let vals = [5.0, 2.0, 9.0, 1.0, 3.0, 8.0, 4.0, 7.0, 6.0];
        let ev = hermitian_eigenvalues(&ComplexMatrix::diagonal(&vals), JACOBI_TOL).unwrap();
        assert_eq!(ev, (1..=9).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn pauli_x() {
        let m = ComplexMatrix::from_row_major(vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
            .unwrap();
        let ev = hermitian_eigenvalues(&m, JACOBI_TOL).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_y_complex_offdiagonal() {
        let m = ComplexMatrix::from_row_major(vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
            .unwrap();
        let ev = hermitian_eigenvalues(&m, JACOBI_TOL).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(3);
        m[(0, 2)] = c(0.5, 0.0);
        match hermitian_eigenvalues(&m, JACOBI_TOL) {
            Err(LinalgError::NotHermitian { max_asymmetry }) => {
                assert!((max_asymmetry - 0.5).abs() < 1e-15)
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn trace_and_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[9usize, 81] {
            for _ in 0..3 {
                let m = random_hermitian(&mut rng, n);
                let eig = hermitian_eigen(&m, JACOBI_TOL).unwrap();
                let sum: f64 = eig.values.iter().sum();
                assert!((sum - m.trace().re).abs() < 1e-10, "n={n}");
                assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
                assert!(eig.reconstruct().max_abs_diff(&m) < 1e-10, "n={n}");
            }
        }
    }

    fn brute_force_pt(rho: &ComplexMatrix) -> ComplexMatrix {
        // loop over all 81 (row, col) entries with explicit level labels
        let mut out = ComplexMatrix::zeros(9);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        out[(3 * i + j, 3 * k + l)] = rho[(3 * k + j, 3 * i + l)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn partial_transpose_moves_eg_ge_coherence() {
        // ρ37 = <eg|ρ|ge> lives at 0-based (2, 6)
        let z = c(0.3, -0.2);
        let mut rho = ComplexMatrix::zeros(9);
        rho[(2, 6)] = z;
        rho[(6, 2)] = z.conj();
        let pt = partial_transpose_a(&rho).unwrap();
        assert_eq!(pt, brute_force_pt(&rho));
        // |gg> = index 8, |ee> = index 0
        assert_eq!(pt[(8, 0)], z);
        assert_eq!(pt[(0, 8)], z.conj());
        assert_eq!(pt[(2, 6)], c(0., 0.));
        assert_eq!(pt[(6, 2)], c(0., 0.));
    }

    #[test]
    fn partial_transpose_involution_and_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let rho = random_hermitian(&mut rng, 9);
            let pt = partial_transpose_a(&rho).unwrap();
            assert_eq!(pt, brute_force_pt(&rho));
            assert_eq!(partial_transpose_a(&pt).unwrap(), rho);
            assert_eq!(pt.trace(), rho.trace());
            assert_eq!(pt.max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn partial_transpose_diagonal_unchanged() {
        let d = ComplexMatrix::diagonal(&[0.1, 0.2, 0.05, 0.05, 0.1, 0.1, 0.2, 0.1, 0.1]);
        assert_eq!(partial_transpose_a(&d).unwrap(), d);
    }

    #[test]
    fn partial_transpose_rejects_wrong_dim() {
        assert!(matches!(
            partial_transpose_a(&ComplexMatrix::identity(4)),
            Err(LinalgError::DimensionMismatch { expected: 9, found: 4 })
        ));
    }

    #[test]
    fn product_state_pt_spectrum_is_product_of_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let ha = random_hermitian(&mut rng, 3);
            let hb = random_hermitian(&mut rng, 3);
            let (ra, rb) = (ha.matmul(&ha), hb.matmul(&hb));
            let rho = ra.kron(&rb);
            let ev_pt = hermitian_eigenvalues(&partial_transpose_a(&rho).unwrap(), JACOBI_TOL)
                .unwrap();
            let ea = hermitian_eigenvalues(&ra, JACOBI_TOL).unwrap();
            let eb = hermitian_eigenvalues(&rb, JACOBI_TOL).unwrap();
            let mut prod: Vec<f64> = ea.iter().flat_map(|a| eb.iter().map(move |b| a * b)).collect();
            prod.sort_by(f64::total_cmp);
            for (x, y) in ev_pt.iter().zip(&prod) {
                assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let a = ComplexMatrix::diagonal(&[0.5, 0.3, 0.2]);
        let b = ComplexMatrix::diagonal(&[0.1, 0.6, 0.3]);
        let red = partial_trace_second(&a.kron(&b), 3, 3).unwrap();
        assert!(red.max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn solve_small_system() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let (x, ratio) = solve_real(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(ratio > 0.0);
        assert!(matches!(
            solve_real(&[1.0, 2.0, 2.0, 4.0], &[1.0, 2.0]),
            Err(LinalgError::Singular { column: 1, .. })
        ));
    }
}
