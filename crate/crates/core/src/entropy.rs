//! Entropy and relative entropy of positive (not necessarily normalized)
//! operators.
//!
//! `H(A) = Tr A (I log Tr A − log A)` and
//! `H(A‖B) = Tr(A log A − A log B + B − A)` when `ran A ⊆ ran B`, `+∞`
//! otherwise. Logarithms are natural; `0 log 0 = 0`. Eigenvalues at or
//! below `1e-14 · Tr A` are treated as exact zeros.

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{self, c, tol, CMat};
use crate::states::{DensityMatrix, Ensemble, ExtendedNonnegReal};

/// Hermitian positive semidefinite matrix of arbitrary trace.
#[derive(Clone, Debug, PartialEq)]
pub struct PositiveMatrix {
    mat: CMat,
}

impl PositiveMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        let defect = linalg::hermiticity_defect(&m);
        if defect > tol::PSD {
            return Err(Error::NotHermitian(defect));
        }
        let mat = linalg::hermitian_part(&m);
        let min = linalg::eigvalsh(&mat).last().copied().unwrap_or(0.0);
        if min < -tol::PSD {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { mat })
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(linalg::diag(values))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.mat)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        if s < 0.0 {
            return Err(Error::InvalidArgument(format!("negative scale {s}")));
        }
        Ok(Self {
            mat: &self.mat * c(s, 0.0),
        })
    }
}

impl From<DensityMatrix> for PositiveMatrix {
    fn from(rho: DensityMatrix) -> Self {
        Self {
            mat: rho.into_matrix(),
        }
    }
}

impl From<&DensityMatrix> for PositiveMatrix {
    fn from(rho: &DensityMatrix) -> Self {
        Self {
            mat: rho.matrix().clone(),
        }
    }
}

/// `t log t − Σ λ log λ` over a spectrum, with the eigenvalue floor applied.
pub fn entropy_of_spectrum(eigs: &[f64]) -> f64 {
    let t: f64 = eigs.iter().map(|x| x.max(0.0)).sum();
    if t <= 0.0 {
        return 0.0;
    }
    let floor = tol::EIG_FLOOR * t;
    let s: f64 = eigs
        .iter()
        .filter(|&&x| x > floor)
        .map(|&x| x * x.ln())
        .sum();
    (t * t.ln() - s).max(0.0)
}

pub(crate) fn entropy_of_matrix(m: &CMat) -> f64 {
    entropy_of_spectrum(&linalg::eigvalsh(m))
}

/// Entropy of a positive operator; always finite here.
pub fn entropy(a: &PositiveMatrix) -> ExtendedNonnegReal {
    ExtendedNonnegReal::finite(entropy_of_matrix(&a.mat))
}

/// Von Neumann entropy `−Tr ρ log ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_matrix(rho.matrix())
}

/// Output entropy `H(Φ(ρ))`.
pub fn output_entropy(phi: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    Ok(von_neumann_entropy(&phi.apply(rho)?))
}

pub(crate) fn relative_entropy_matrices(a: &CMat, b: &CMat) -> ExtendedNonnegReal {
    let ea = linalg::eigh(a);
    let eb = linalg::eigh(b);
    let ta: f64 = ea.values.iter().map(|x| x.max(0.0)).sum();
    let tb: f64 = eb.values.iter().map(|x| x.max(0.0)).sum();
    let floor_a = tol::EIG_FLOOR * ta;
    let floor_b = tol::EIG_FLOOR * tb;
    let n = ea.dim();
    // overlaps[i][j] = |⟨u_i|w_j⟩|²
    let overlap = ea.vectors.adjoint() * &eb.vectors;
    let mut a_log_a = 0.0;
    let mut a_log_b = 0.0;
    for i in 0..n {
        let l = ea.values[i];
        if l <= floor_a {
            continue;
        }
        a_log_a += l * l.ln();
        let mut escaped = 0.0;
        for j in 0..n {
            let w = overlap[(i, j)].norm_sqr();
            let mu = eb.values[j];
            if mu <= floor_b {
                escaped += w;
            } else {
                a_log_b += l * w * mu.ln();
            }
        }
        if escaped > 1e-9 {
            return ExtendedNonnegReal::Infinite;
        }
    }
    ExtendedNonnegReal::finite(a_log_a - a_log_b + tb - ta)
}

/// Relative entropy `H(A‖B)`.
pub fn relative_entropy(a: &PositiveMatrix, b: &PositiveMatrix) -> Result<ExtendedNonnegReal> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy of dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(relative_entropy_matrices(&a.mat, &b.mat))
}

/// Relative entropy of two states.
pub fn state_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtendedNonnegReal> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy of dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(relative_entropy_matrices(rho.matrix(), sigma.matrix()))
}

/// Outcome of the Donald identity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DonaldOutcome {
    /// Both sides finite.
    Residual { residual: f64, lhs: f64, rhs: f64 },
    /// Some relative entropy in the identity is `+∞`.
    Infinite,
}

/// `|Σπ_i H(ρ_i‖σ) − Σπ_i H(ρ_i‖ρ̄) − H(ρ̄‖σ)|`.
pub fn donald_residual(ens: &Ensemble, sigma: &DensityMatrix) -> Result<DonaldOutcome> {
    if ens.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble dim {} vs σ dim {}",
            ens.dim(),
            sigma.dim()
        )));
    }
    let avg = ens.average();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (w, r) in ens.iter() {
        match (
            relative_entropy_matrices(r.matrix(), sigma.matrix()),
            relative_entropy_matrices(r.matrix(), avg.matrix()),
        ) {
            (ExtendedNonnegReal::Finite(x), ExtendedNonnegReal::Finite(y)) => {
                lhs += w * x;
                rhs += w * y;
            }
            _ => return Ok(DonaldOutcome::Infinite),
        }
    }
    match relative_entropy_matrices(avg.matrix(), sigma.matrix()) {
        ExtendedNonnegReal::Finite(z) => rhs += z,
        ExtendedNonnegReal::Infinite => return Ok(DonaldOutcome::Infinite),
    }
    Ok(DonaldOutcome::Residual {
        residual: (lhs - rhs).abs(),
        lhs,
        rhs,
    })
}

/// `H(P_n A P_n)` for a nested projector sequence ending at the identity.
pub fn truncated_entropy_sequence(a: &PositiveMatrix, projs: &[CMat]) -> Result<Vec<f64>> {
    let d = a.dim();
    let Some(last) = projs.last() else {
        return Err(Error::InvalidProjectors("empty sequence".into()));
    };
    for (i, p) in projs.iter().enumerate() {
        if p.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("projector {i} has wrong shape")));
        }
        if (p * p - p).norm() > 1e-9 || linalg::hermiticity_defect(p) > 1e-9 {
            return Err(Error::InvalidProjectors(format!("element {i} is not a projector")));
        }
    }
    for (i, w) in projs.windows(2).enumerate() {
        if (&w[1] * &w[0] - &w[0]).norm() > 1e-9 {
            return Err(Error::InvalidProjectors(format!(
                "P_{i} is not below P_{}",
                i + 1
            )));
        }
    }
    if (last - linalg::identity(d)).norm() > 1e-9 {
        return Err(Error::InvalidProjectors("last projector is not the identity".into()));
    }
    Ok(projs
        .iter()
        .map(|p| entropy_of_matrix(&(p * &a.mat * p)))
        .collect())
}

impl Ensemble {
    /// `Σ π_i H(Φ(ρ_i))`.
    pub fn mean_output_entropy(&self, phi: &KrausChannel) -> Result<f64> {
        let mut s = 0.0;
        for (w, r) in self.iter() {
            s += w * output_entropy(phi, r)?;
        }
        Ok(s)
    }

    /// Holevo quantity `Σ π_i H(Φ(ρ_i)‖Φ(ρ̄))`.
    pub fn holevo_quantity(&self, phi: &KrausChannel) -> Result<f64> {
        let avg_out = phi.apply(&self.average())?;
        let mut s = 0.0;
        for (w, r) in self.iter() {
            let out = phi.apply(r)?;
            match relative_entropy_matrices(out.matrix(), avg_out.matrix()) {
                ExtendedNonnegReal::Finite(x) => s += w * x,
                ExtendedNonnegReal::Infinite => return Err(Error::InfiniteRelativeEntropy),
            }
        }
        Ok(s)
    }
}
