//! Dense complex matrix kernels.
//!
//! Everything the operator-field layer needs per atom lives here: a small
//! row-major [`ComplexMatrix`], a cyclic complex Jacobi eigensolver for
//! Hermitian input, simultaneous diagonalization of normal matrices, PSD
//! matrix powers, and the two norms used for classification.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Double precision complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Largest accepted matrix dimension.
pub const MAX_DIM: usize = 512;

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Default linear-algebra tolerance for decomposition residuals.
pub const TOL_LIN: f64 = 1e-10;

/// Default eigenvalue clustering tolerance (relative to the operator norm).
pub const CLUSTER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("dimension {dim} exceeds the configured maximum {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not normal (commutator residual {residual:.3e})")]
    NotNormal { residual: f64 },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is singular for a negative power (smallest eigenvalue {min_eigenvalue:.3e})")]
    Singular { min_eigenvalue: f64 },
    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Dense complex matrix stored in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, enforcing the type invariants.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        let dim = rows.max(cols);
        if dim > MAX_DIM {
            return Err(LinalgError::TooLarge { dim, max: MAX_DIM });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::EntryCount {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(LinalgError::EntryCount {
                expected: c,
                found: bad.len(),
            });
        }
        Self::from_row_major(r, c, rows.concat())
    }

    /// Real-entry convenience constructor.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let diag: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&diag)
    }

    /// Rank-one outer product `u v*`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Frobenius (Hilbert–Schmidt) norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn hermitian_part(&self) -> Self {
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }

    fn require_square(&self) -> Result<(), LinalgError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; use the `checked_*` methods when
// shapes come from untrusted input.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Spectral decomposition `m = Σ λ_k P_k` with one orthogonal projection per
/// eigenvalue cluster.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    pub projections: Vec<ComplexMatrix>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Rank of each spectral projection.
    pub fn multiplicities(&self) -> Vec<usize> {
        self.projections
            .iter()
            .map(|p| p.trace().re.round() as usize)
            .collect()
    }

    /// `Σ_k λ_k P_k`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.projections[0].rows();
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .fold(ComplexMatrix::zeros(n, n), |acc, (&l, p)| &acc + &p.scale(l))
    }

    /// `Σ_k f(λ_k) P_k`.
    pub fn apply_function(&self, f: impl Fn(C64) -> C64) -> ComplexMatrix {
        let n = self.projections[0].rows();
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .fold(ComplexMatrix::zeros(n, n), |acc, (&l, p)| &acc + &p.scale(f(l)))
    }
}

/// Raw cyclic Jacobi on the Hermitian part of `m`.
///
/// Returns ascending eigenvalues and a unitary whose columns are the
/// matching eigenvectors.
fn jacobi_eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), LinalgError> {
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let total = a.frobenius_norm();
    let zero = C64::new(0.0, 0.0);

    let mut converged = n == 1 || total == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Pivots that underflow carry no information.
                if abs < f64::MIN_POSITIVE {
                    a[(p, q)] = zero;
                    a[(q, p)] = zero;
                    continue;
                }
                let phase = apq / abs;
                let theta = (aqq - app) / (2.0 * abs);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) · [[c, s], [-s, c]] on the (p, q) plane.
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = phase.conj() * (-s);
                let gqq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
                a[(p, q)] = zero;
                a[(q, p)] = zero;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        converged = off.sqrt() <= f64::EPSILON * total;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Ok((values, vectors))
}

/// Splits ascending values into maximal runs whose consecutive gaps are `< gap`.
fn cluster_sorted(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= gap {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// `Q Q*` for the listed columns of `basis`.
fn column_projection(basis: &ComplexMatrix, cols: impl IntoIterator<Item = usize>) -> ComplexMatrix {
    let n = basis.rows();
    let mut p = ComplexMatrix::zeros(n, n);
    for c in cols {
        let q = basis.column(c);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] += q[i] * q[j].conj();
            }
        }
    }
    p
}

fn select_columns(basis: &ComplexMatrix, cols: std::ops::Range<usize>) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(basis.rows(), cols.len());
    for (new, c) in cols.enumerate() {
        for i in 0..basis.rows() {
            out[(i, new)] = basis[(i, c)];
        }
    }
    out
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.max_abs() == 0.0 {
        return 0.0;
    }
    let gram = if m.rows() < m.cols() {
        m * &m.adjoint()
    } else {
        &m.adjoint() * m
    };
    match jacobi_eigh(&gram) {
        Ok((values, _)) => values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        // Jacobi on a Gram matrix this small does not stall in practice;
        // fall back to the Frobenius bound rather than fail a norm query.
        Err(_) => m.frobenius_norm(),
    }
}

/// Frobenius norm, named for its role as the Hilbert–Schmidt norm.
pub fn hs_norm_matrix(m: &ComplexMatrix) -> f64 {
    m.frobenius_norm()
}

/// Operator-norm residual, with a cheap Frobenius short-circuit.
fn residual_norm(m: &ComplexMatrix, threshold: f64) -> f64 {
    let frob = m.frobenius_norm();
    if frob <= threshold {
        frob
    } else {
        op_norm(m)
    }
}

fn hermitian_residual(m: &ComplexMatrix, threshold: f64) -> f64 {
    residual_norm(&(m - &m.adjoint()), threshold)
}

/// Hermitian eigendecomposition with eigenvalue clustering.
///
/// `tol` is scaled by `max(1, ‖m‖_F)` for the Hermitian check and by
/// `max(1, ‖m‖_op)` for the clustering gap.
pub fn eig_hermitian(m: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition, LinalgError> {
    m.require_square()?;
    let threshold = tol * m.frobenius_norm().max(1.0);
    let residual = hermitian_residual(m, threshold);
    if residual > threshold {
        return Err(LinalgError::NotHermitian { residual });
    }
    let (values, vectors) = jacobi_eigh(m)?;
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let clusters = cluster_sorted(&values, tol * scale);
    let eigenvalues = clusters
        .iter()
        .map(|r| C64::new(values[r.clone()].iter().sum::<f64>() / r.len() as f64, 0.0))
        .collect();
    let projections = clusters
        .into_iter()
        .map(|r| column_projection(&vectors, r))
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        projections,
    })
}

/// Commutator residual `‖m m* − m* m‖_op`.
pub fn normality_residual(m: &ComplexMatrix) -> f64 {
    let adj = m.adjoint();
    op_norm(&(&(m * &adj) - &(&adj * m)))
}

/// Unitary diagonalization of a normal matrix.
///
/// Uses the commuting Hermitian pair `½(m + m*)`, `½i(m* − m)`: the first is
/// diagonalized, then the second on each of its eigenspaces. Joint clusters
/// closer than the clustering gap in the complex plane are merged.
/// Eigenvalues come back sorted lexicographically by (re, im).
pub fn diagonalize_normal(m: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition, LinalgError> {
    m.require_square()?;
    let norm = op_norm(m);
    let residual = normality_residual(m);
    if residual > tol * norm * norm {
        return Err(LinalgError::NotNormal { residual });
    }
    let n = m.rows();
    let adj = m.adjoint();
    let real_part = (m + &adj).scale(C64::new(0.5, 0.0));
    let imag_part = (m - &adj).scale(C64::new(0.0, -0.5));
    let gap = tol * norm.max(1.0);

    let (re_values, re_vectors) = jacobi_eigh(&real_part)?;
    let mut joint: Vec<(C64, ComplexMatrix)> = Vec::new();
    for block in cluster_sorted(&re_values, gap) {
        let basis = select_columns(&re_vectors, block);
        let restricted = &(&basis.adjoint() * &imag_part) * &basis;
        let (im_values, im_vectors) = jacobi_eigh(&restricted)?;
        let rotated = &basis * &im_vectors;
        for sub in cluster_sorted(&im_values, gap) {
            let rank = sub.len() as f64;
            let mut rayleigh = C64::new(0.0, 0.0);
            for c in sub.clone() {
                let q = rotated.column(c);
                let mq = m.mul_vec(&q)?;
                rayleigh += q.iter().zip(&mq).map(|(a, b)| a.conj() * b).sum::<C64>();
            }
            joint.push((rayleigh / rank, column_projection(&rotated, sub)));
        }
    }

    // Single-linkage merge in the complex plane.
    let mut parent: Vec<usize> = (0..joint.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..joint.len() {
        for j in i + 1..joint.len() {
            if (joint[i].0 - joint[j].0).norm() < gap {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    let mut merged: Vec<(C64, f64, ComplexMatrix)> = Vec::new();
    let mut slot = vec![usize::MAX; joint.len()];
    for (i, (value, proj)) in joint.into_iter().enumerate() {
        let root = find(&mut parent, i);
        let rank = proj.trace().re;
        if slot[root] == usize::MAX {
            slot[root] = merged.len();
            merged.push((value * rank, rank, proj));
        } else {
            let entry = &mut merged[slot[root]];
            entry.0 += value * rank;
            entry.1 += rank;
            entry.2 = &entry.2 + &proj;
        }
    }
    let mut pairs: Vec<(C64, ComplexMatrix)> = merged
        .into_iter()
        .map(|(weighted, rank, proj)| (weighted / rank, proj))
        .collect();
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    debug_assert!(pairs.iter().all(|(_, p)| p.rows() == n));
    let (eigenvalues, projections) = pairs.into_iter().unzip();
    Ok(EigenDecomposition {
        eigenvalues,
        projections,
    })
}

/// `Σ λ_k^exponent P_k` for a Hermitian positive semidefinite matrix.
///
/// Negative exponents require `λ_min > tol·max(1, ‖m‖)`. Eigenvalues in
/// `[-tol·scale, 0)` are clamped to zero for non-negative exponents.
pub fn psd_power(m: &ComplexMatrix, exponent: f64, tol: f64) -> Result<ComplexMatrix, LinalgError> {
    m.require_square()?;
    let threshold = tol * m.frobenius_norm().max(1.0);
    let residual = hermitian_residual(m, threshold);
    if residual > threshold {
        return Err(LinalgError::NotHermitian { residual });
    }
    let (values, vectors) = jacobi_eigh(m)?;
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let min = values[0];
    if min < -tol * scale {
        return Err(LinalgError::NotPsd { min_eigenvalue: min });
    }
    if exponent < 0.0 && min <= tol * scale {
        return Err(LinalgError::Singular { min_eigenvalue: min });
    }
    let n = m.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let power = if exponent == 0.0 {
            1.0
        } else {
            lambda.max(0.0).powf(exponent)
        };
        if power == 0.0 {
            continue;
        }
        let q = vectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += q[i] * q[j].conj() * power;
            }
        }
    }
    Ok(out)
}

/// Hermitian and idempotent, each within `tol` in operator norm.
pub fn is_projection(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    hermitian_residual(m, tol) <= tol && residual_norm(&(&(m * m) - m), tol) <= tol
}

/// Smallest eigenvalue of the Hermitian part.
pub(crate) fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    let (values, _) = jacobi_eigh(m)?;
    Ok(values[0])
}

/// Eigenvalues only, ascending, for the Hermitian part of `m`.
pub fn eigenvalues_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    m.require_square()?;
    Ok(jacobi_eigh(m)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn diagonal_hermitian() {
        let m = ComplexMatrix::from_real_diag(&[2.0, 1.0]);
        let d = eig_hermitian(&m, CLUSTER_TOL).unwrap();
        assert_eq!(d.eigenvalues, vec![c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(close(&d.projections[0], &ComplexMatrix::from_real_diag(&[0.0, 1.0]), 1e-15));
        assert!(close(&d.projections[1], &ComplexMatrix::from_real_diag(&[1.0, 0.0]), 1e-15));
    }

    #[test]
    fn swap_matrix_eigenpairs() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = eig_hermitian(&m, CLUSTER_TOL).unwrap();
        assert!((d.eigenvalues[0] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((d.eigenvalues[1] - c(1.0, 0.0)).norm() < 1e-14);
        let minus = ComplexMatrix::from_real_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let plus = ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(close(&d.projections[0], &minus, 1e-14));
        assert!(close(&d.projections[1], &plus, 1e-14));
    }

    #[test]
    fn identity_is_one_cluster() {
        let d = eig_hermitian(&ComplexMatrix::identity(3), CLUSTER_TOL).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.eigenvalues[0], c(1.0, 0.0));
        assert!(close(&d.projections[0], &ComplexMatrix::identity(3), 0.0));
        assert_eq!(d.multiplicities(), vec![3]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m, 1e-9), Err(LinalgError::NotHermitian { .. })));
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(eig_hermitian(&rect, 1e-9), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn complex_hermitian_entries() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let m = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]])
            .unwrap();
        let d = eig_hermitian(&m, CLUSTER_TOL).unwrap();
        assert!((d.eigenvalues[0].re - 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1].re - 3.0).abs() < 1e-14);
        assert!(close(&d.reconstruct(), &m, 1e-14));
    }

    #[test]
    fn normal_diagonal_and_rotation() {
        let m = ComplexMatrix::from_diag(&[c(1.0, 1.0), c(2.0, 0.0)]);
        let d = diagonalize_normal(&m, CLUSTER_TOL).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.eigenvalues[0] - c(1.0, 1.0)).norm() < 1e-15);
        assert!((d.eigenvalues[1] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(close(&d.projections[0], &ComplexMatrix::from_real_diag(&[1.0, 0.0]), 1e-15));

        let rot = ComplexMatrix::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let d = diagonalize_normal(&rot, CLUSTER_TOL).unwrap();
        assert!((d.eigenvalues[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((d.eigenvalues[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(close(&d.reconstruct(), &rot, 1e-14));
    }

    #[test]
    fn normal_agrees_with_hermitian_path() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.5, 0.25), c(0.0, 0.0)],
            vec![c(0.5, -0.25), c(-2.0, 0.0), c(0.1, 0.0)],
            vec![c(0.0, 0.0), c(0.1, 0.0), c(0.3, 0.0)],
        ])
        .unwrap();
        let h = eig_hermitian(&m, CLUSTER_TOL).unwrap();
        let n = diagonalize_normal(&m, CLUSTER_TOL).unwrap();
        assert_eq!(h.len(), n.len());
        for k in 0..h.len() {
            assert!((h.eigenvalues[k] - n.eigenvalues[k]).norm() < TOL_LIN);
            assert!(close(&h.projections[k], &n.projections[k], TOL_LIN));
        }
    }

    #[test]
    fn non_normal_rejected() {
        let m = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(diagonalize_normal(&m, 1e-9), Err(LinalgError::NotNormal { .. })));
    }

    #[test]
    fn psd_power_examples() {
        let sqrt = psd_power(&ComplexMatrix::from_real_diag(&[4.0, 9.0]), 0.5, 1e-12).unwrap();
        assert!(close(&sqrt, &ComplexMatrix::from_real_diag(&[2.0, 3.0]), 1e-14));
        let inv = psd_power(&ComplexMatrix::identity(3), -1.0, 1e-12).unwrap();
        assert!(close(&inv, &ComplexMatrix::identity(3), 1e-15));
        let scalar = psd_power(&ComplexMatrix::from_real_diag(&[10.0]), -1.0, 1e-12).unwrap();
        assert!((scalar[(0, 0)] - c(0.1, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn psd_power_errors() {
        let indefinite = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(matches!(psd_power(&indefinite, 0.5, 1e-12), Err(LinalgError::NotPsd { .. })));
        let singular = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(psd_power(&singular, -0.5, 1e-12), Err(LinalgError::Singular { .. })));
        assert!(psd_power(&singular, 0.5, 1e-12).is_ok());
    }

    #[test]
    fn norms() {
        let id = ComplexMatrix::identity(2);
        assert!((op_norm(&id) - 1.0).abs() < 1e-15);
        assert!((hs_norm_matrix(&id) - 2f64.sqrt()).abs() < 1e-15);
        let d = ComplexMatrix::from_real_diag(&[3.0, 4.0]);
        assert!((op_norm(&d) - 4.0).abs() < 1e-14);
        assert!((hs_norm_matrix(&d) - 5.0).abs() < 1e-15);
        let z = ComplexMatrix::zeros(2, 2);
        assert_eq!(op_norm(&z), 0.0);
        assert_eq!(hs_norm_matrix(&z), 0.0);
        // Rectangular: singular values of [[3, 0, 0], [0, 0, 4]] are 4 and 3.
        let r = ComplexMatrix::from_real_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 0.0, 4.0]]).unwrap();
        assert!((op_norm(&r) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn projection_predicate() {
        assert!(is_projection(&ComplexMatrix::from_real_diag(&[1.0, 0.0]), 1e-12));
        let half = ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(is_projection(&half, 1e-12));
        let nil = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(!is_projection(&nil, 1e-12));
    }

    #[test]
    fn constructor_invariants() {
        assert!(matches!(
            ComplexMatrix::from_row_major(0, 1, vec![]),
            Err(LinalgError::Empty)
        ));
        assert!(matches!(
            ComplexMatrix::from_row_major(2, 2, vec![c(1.0, 0.0); 3]),
            Err(LinalgError::EntryCount { expected: 4, found: 3 })
        ));
        assert!(matches!(
            ComplexMatrix::from_row_major(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]),
            Err(LinalgError::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            ComplexMatrix::from_row_major(MAX_DIM + 1, 1, vec![c(0.0, 0.0); MAX_DIM + 1]),
            Err(LinalgError::TooLarge { .. })
        ));
    }
}
