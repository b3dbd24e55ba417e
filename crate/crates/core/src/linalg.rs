//! Dense complex linear algebra helpers used throughout the crate.
//!
//! Everything is built on `nalgebra::DMatrix<Complex64>`. Hermitian
//! eigendecompositions are always computed on the symmetrized input
//! `(M + M†)/2` and returned in a deterministic order: descending
//! eigenvalue, ties broken by the lexicographically larger eigenvector
//! after a canonical phase fix.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Tolerances shared by the validation code.
pub mod tol {
    /// Absolute slack on negative eigenvalues and Hermiticity.
    pub const PSD: f64 = 1e-10;
    /// Slack on `‖Σ K†K − I‖`.
    pub const TP: f64 = 1e-9;
    /// Slack on unit trace for states and ensemble weights.
    pub const TRACE: f64 = 1e-9;
    /// Eigenvalues below `EIG_FLOOR · Tr A` count as exact zeros.
    pub const EIG_FLOOR: f64 = 1e-14;
    /// Eigenvalues above `RANK · Tr ρ` count toward the numerical rank.
    pub const RANK: f64 = 1e-12;
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    let mut m = CMat::zeros(n, n);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = c(*v, 0.0);
    }
    m
}

/// Computational basis vector `|i⟩` in dimension `d`.
pub fn basis(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = c(1.0, 0.0);
    v
}

pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

pub fn projector(v: &CVec) -> CMat {
    outer(v, v)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest entrywise modulus of `M − M†`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// Real Frobenius inner product `Re Tr(A†B)`.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn frobenius(a: &CMat) -> f64 {
    inner_re(a, a).sqrt()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMat,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Rebuild `U f(Λ) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Rotate the vector so that its first non-negligible entry is real positive.
fn fix_phase(v: &mut [C64]) {
    let scale = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
        let ph = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

fn lex_cmp(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

fn eigh_2x2(m: &CMat) -> (Vec<f64>, Vec<Vec<C64>>) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let delta = 0.5 * (a - d);
    let r = delta.hypot(b.norm());
    if r == 0.0 {
        return (
            vec![mean, mean],
            vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)]],
        );
    }
    let (x, y) = if delta >= 0.0 {
        (c(delta + r, 0.0), b.conj())
    } else {
        (b, c(r - delta, 0.0))
    };
    let nrm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    let (x, y) = (x / nrm, y / nrm);
    (
        vec![mean + r, mean - r],
        vec![vec![x, y], vec![-y.conj(), x.conj()]],
    )
}

/// Hermitian eigendecomposition of the symmetrized input.
pub fn eigh(m: &CMat) -> Eigh {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigh needs a square matrix");
    let (values, mut vecs): (Vec<f64>, Vec<Vec<C64>>) = match n {
        0 => (vec![], vec![]),
        1 => (vec![m[(0, 0)].re], vec![vec![c(1., 0.)]]),
        2 => eigh_2x2(m),
        _ => {
            let se = SymmetricEigen::new(hermitian_part(m));
            let vals = se.eigenvalues.iter().copied().collect();
            let vecs = (0..n)
                .map(|j| se.eigenvectors.column(j).iter().copied().collect())
                .collect();
            (vals, vecs)
        }
    };
    for v in vecs.iter_mut() {
        fix_phase(v);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[j]
            .total_cmp(&values[i])
            .then_with(|| lex_cmp(&vecs[j], &vecs[i]))
    });
    let mut vectors = CMat::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        sorted.push(values[k]);
        for i in 0..n {
            vectors[(i, col)] = vecs[k][i];
        }
    }
    Eigh {
        values: sorted,
        vectors,
    }
}

/// Eigenvalues only, descending.
pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    match n {
        0 => vec![],
        1 => vec![m[(0, 0)].re],
        2 => eigh_2x2(m).0,
        _ => {
            let mut v: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
                .eigenvalues
                .iter()
                .copied()
                .collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        }
    }
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm(m: &CMat) -> f64 {
    eigvalsh(&hermitian_part(m)).iter().map(|x| x.abs()).sum()
}

/// Operator norm of a Hermitian matrix.
pub fn op_norm(m: &CMat) -> f64 {
    eigvalsh(&hermitian_part(m))
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Thin QR orthonormalization with a positive real diagonal in `R`.
///
/// Returns a matrix with the same shape as the input whose columns are
/// orthonormal. Requires `rows >= cols`.
pub fn orthonormalize(m: &CMat) -> CMat {
    let (rows, cols) = m.shape();
    assert!(rows >= cols, "orthonormalize needs a tall matrix");
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let d = r[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let ph = d.conj() / n;
            for i in 0..rows {
                q[(i, j)] *= ph.conj();
            }
        }
    }
    q
}

/// `max |(V†V − I)_{ij}|`.
pub fn isometry_defect(v: &CMat) -> f64 {
    let g = v.adjoint() * v;
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - c(target, 0.0)).norm());
        }
    }
    worst
}
