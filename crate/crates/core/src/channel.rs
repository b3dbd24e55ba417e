//! Kraus-form channels and the channel algebra: application, tensor
//! products, composition, restriction to subspaces, partial traces and
//! spectral truncation of states.

use crate::error::{Error, Result};
use crate::linalg::{self, c, tol, CMat, CVec};
use crate::states::{DensityMatrix, HermitianMatrix};

/// Completely positive trace-preserving map `ρ ↦ Σ K ρ K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMat>,
    /// `[K_1; K_2; …]` stacked vertically, `(k·dim_out) × dim_in`.
    stacked: CMat,
}

/// Which tensor factor to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Build a channel after checking shapes and `Σ K†K = I`.
pub fn validate_channel(kraus: Vec<CMat>, dim_in: usize, dim_out: usize) -> Result<KrausChannel> {
    if kraus.is_empty() {
        return Err(Error::InvalidArgument("empty Kraus list".into()));
    }
    if dim_in == 0 || dim_out == 0 {
        return Err(Error::InvalidArgument("zero dimension".into()));
    }
    for (i, k) in kraus.iter().enumerate() {
        if k.shape() != (dim_out, dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator {i} is {}x{}, expected {dim_out}x{dim_in}",
                k.nrows(),
                k.ncols()
            )));
        }
    }
    let mut sum = CMat::zeros(dim_in, dim_in);
    for k in &kraus {
        sum += k.adjoint() * k;
    }
    let defect = (sum - linalg::identity(dim_in)).norm();
    if defect > tol::TP {
        return Err(Error::TracePreservation(defect));
    }
    Ok(KrausChannel::from_parts(kraus, dim_in, dim_out))
}

impl KrausChannel {
    fn from_parts(kraus: Vec<CMat>, dim_in: usize, dim_out: usize) -> Self {
        let mut stacked = CMat::zeros(kraus.len() * dim_out, dim_in);
        for (e, k) in kraus.iter().enumerate() {
            stacked.view_mut((e * dim_out, 0), (dim_out, dim_in)).copy_from(k);
        }
        Self {
            dim_in,
            dim_out,
            kraus,
            stacked,
        }
    }

    pub fn new(kraus: Vec<CMat>, dim_in: usize, dim_out: usize) -> Result<Self> {
        validate_channel(kraus, dim_in, dim_out)
    }

    pub fn identity(d: usize) -> Self {
        Self::from_parts(vec![linalg::identity(d)], d, d)
    }

    /// Single-Kraus channel `ρ ↦ UρU†`.
    pub fn unitary(u: CMat) -> Result<Self> {
        let (r, cdim) = u.shape();
        validate_channel(vec![u], cdim, r)
    }

    /// `ρ ↦ I/d`, Kraus `|i⟩⟨j|/√d`.
    pub fn fully_depolarizing(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = CMat::zeros(d, d);
                k[(i, j)] = c(s, 0.0);
                kraus.push(k);
            }
        }
        Self::from_parts(kraus, d, d)
    }

    /// Qubit depolarizing channel `ρ ↦ (1 − p)ρ + p·I/2`, `p ∈ [0, 4/3]`.
    pub fn depolarizing_qubit(p: f64) -> Result<Self> {
        if !(0.0..=4.0 / 3.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing parameter {p}")));
        }
        let a = (1.0 - 0.75 * p).sqrt();
        let b = (0.25 * p).sqrt();
        validate_channel(
            vec![
                linalg::identity(2) * c(a, 0.0),
                linalg::pauli_x() * c(b, 0.0),
                linalg::pauli_y() * c(b, 0.0),
                linalg::pauli_z() * c(b, 0.0),
            ],
            2,
            2,
        )
    }

    /// Qubit dephasing `{√(1−q) I, √q Z}`.
    pub fn dephasing_qubit(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("dephasing parameter {q}")));
        }
        validate_channel(
            vec![
                linalg::identity(2) * c((1.0 - q).sqrt(), 0.0),
                linalg::pauli_z() * c(q.sqrt(), 0.0),
            ],
            2,
            2,
        )
    }

    /// Amplitude damping with decay probability `g`.
    pub fn amplitude_damping(g: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::InvalidArgument(format!("damping parameter {g}")));
        }
        let k0 = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c((1.0 - g).sqrt(), 0.)]);
        let k1 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(g.sqrt(), 0.), c(0., 0.), c(0., 0.)]);
        validate_channel(vec![k0, k1], 2, 2)
    }

    /// `ω ↦ Tr_B ω` (keep A) or `Tr_A ω` (keep B) on a `dA·dB` space.
    pub fn partial_trace(da: usize, db: usize, keep: Subsystem) -> Self {
        let (kept, traced) = match keep {
            Subsystem::A => (da, db),
            Subsystem::B => (db, da),
        };
        let kraus = (0..traced)
            .map(|t| {
                let bra = CMat::from_fn(1, traced, |_, j| c(if j == t { 1.0 } else { 0.0 }, 0.0));
                match keep {
                    Subsystem::A => linalg::kron(&linalg::identity(kept), &bra),
                    Subsystem::B => linalg::kron(&bra, &linalg::identity(kept)),
                }
            })
            .collect();
        Self::from_parts(kraus, da * db, kept)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    pub(crate) fn stacked(&self) -> &CMat {
        &self.stacked
    }

    /// `Σ K M K†` for an arbitrary square input matrix.
    pub fn apply_matrix(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        out
    }

    /// Heisenberg-picture dual `Σ K† X K`.
    pub fn adjoint_apply(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * x * k;
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs channel input {}",
                rho.dim(),
                self.dim_in
            )));
        }
        Ok(DensityMatrix::from_matrix_unchecked(self.apply_matrix(rho.matrix())))
    }

    /// Output of a pure input `ψ` (not necessarily normalized).
    pub fn apply_pure(&self, psi: &CVec) -> CMat {
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            let y = k * psi;
            out += &y * y.adjoint();
        }
        out
    }

    /// `Φ ⊗ Ψ` with Kraus operators `K_i ⊗ L_j`.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let mut kraus = Vec::with_capacity(self.num_kraus() * other.num_kraus());
        for k in &self.kraus {
            for l in &other.kraus {
                kraus.push(linalg::kron(k, l));
            }
        }
        Self::from_parts(kraus, self.dim_in * other.dim_in, self.dim_out * other.dim_out)
    }

    /// Restrict the input to the range of an isometry `V`: Kraus `K V`.
    pub fn restrict(&self, isometry: &CMat) -> Result<KrausChannel> {
        if isometry.nrows() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} rows, channel input is {}",
                isometry.nrows(),
                self.dim_in
            )));
        }
        if isometry.ncols() > isometry.nrows() {
            return Err(Error::NotIsometry(f64::INFINITY));
        }
        let defect = linalg::isometry_defect(isometry);
        if defect > tol::TP {
            return Err(Error::NotIsometry(defect));
        }
        let kraus = self.kraus.iter().map(|k| k * isometry).collect();
        Ok(Self::from_parts(kraus, isometry.ncols(), self.dim_out))
    }

    /// `Φ*(H)` as a Hermitian matrix on the input space.
    pub fn dual_observable(&self, h: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::from_hermitian_part(&self.adjoint_apply(h.matrix()))
    }
}

/// `outer ∘ inner`: Kraus operators `L_j K_i`.
pub fn compose_channel(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
    if inner.dim_out != outer.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "inner output {} vs outer input {}",
            inner.dim_out, outer.dim_in
        )));
    }
    let mut kraus = Vec::with_capacity(inner.num_kraus() * outer.num_kraus());
    for k in &inner.kraus {
        for l in &outer.kraus {
            kraus.push(l * k);
        }
    }
    Ok(KrausChannel::from_parts(kraus, inner.dim_in, outer.dim_out))
}

pub fn tensor_channel(phi: &KrausChannel, psi: &KrausChannel) -> KrausChannel {
    phi.tensor(psi)
}

pub fn apply_channel(phi: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    phi.apply(rho)
}

/// Partial trace of a matrix on `dA·dB` (no validation).
pub(crate) fn partial_trace_matrix(m: &CMat, da: usize, db: usize, keep: Subsystem) -> CMat {
    match keep {
        Subsystem::A => CMat::from_fn(da, da, |i, j| {
            (0..db).map(|b| m[(i * db + b, j * db + b)]).sum()
        }),
        Subsystem::B => CMat::from_fn(db, db, |i, j| {
            (0..da).map(|a| m[(a * db + i, a * db + j)]).sum()
        }),
    }
}

/// Reduced state of one factor of a bipartite state.
pub fn partial_trace(
    omega: &DensityMatrix,
    da: usize,
    db: usize,
    keep: Subsystem,
) -> Result<DensityMatrix> {
    if da == 0 || db == 0 || da * db != omega.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{da}x{db} does not factor a state of dim {}",
            omega.dim()
        )));
    }
    Ok(DensityMatrix::from_matrix_unchecked(partial_trace_matrix(
        omega.matrix(),
        da,
        db,
        keep,
    )))
}

/// Compress onto the `n` largest-eigenvalue eigenvectors and renormalize.
///
/// Returns `(ρ_n, λ_n)` with `λ_n = Tr P_n ρ`, so that `λ_n ρ_n ≤ ρ`.
pub fn spectral_truncation(rho: &DensityMatrix, n: usize) -> Result<(DensityMatrix, f64)> {
    if n == 0 || n > rho.dim() {
        return Err(Error::InvalidArgument(format!(
            "truncation level {n} outside 1..={}",
            rho.dim()
        )));
    }
    let e = rho.eigh();
    let mass: f64 = e.values[..n].iter().map(|x| x.max(0.0)).sum();
    if mass <= tol::EIG_FLOOR {
        return Err(Error::ZeroTruncation);
    }
    if n == rho.dim() {
        return Ok((rho.clone(), 1.0));
    }
    let d = rho.dim();
    let mut m = CMat::zeros(d, d);
    for j in 0..n {
        let v: CVec = e.vectors.column(j).into_owned();
        m += linalg::projector(&v) * c(e.values[j].max(0.0) / mass, 0.0);
    }
    Ok((DensityMatrix::from_matrix_unchecked(m), mass))
}
