//! States, Hermitian observables, ensembles and extended reals.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, c, tol, CMat, CVec, Eigh};

fn check_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    Ok(m.nrows())
}

/// Hermitian matrix (observables, Fenchel dual variables).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    mat: CMat,
}

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        check_square(&m)?;
        let defect = linalg::hermiticity_defect(&m);
        if defect > tol::PSD {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self {
            mat: linalg::hermitian_part(&m),
        })
    }

    /// Symmetrize without validation. Used for internally generated operators.
    pub(crate) fn from_hermitian_part(m: &CMat) -> Self {
        Self {
            mat: linalg::hermitian_part(m),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            mat: CMat::zeros(d, d),
        }
    }

    pub fn scaled_identity(d: usize, s: f64) -> Self {
        Self {
            mat: linalg::identity(d) * c(s, 0.0),
        }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        Self {
            mat: linalg::diag(values),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn eigh(&self) -> Eigh {
        linalg::eigh(&self.mat)
    }

    /// `Tr(Aρ)`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        linalg::inner_re(&self.mat, rho.matrix())
    }

    /// Kronecker sum `A ⊗ I + I ⊗ B`.
    pub fn kronecker_sum(&self, other: &HermitianMatrix) -> HermitianMatrix {
        let a = linalg::kron(&self.mat, &linalg::identity(other.dim()));
        let b = linalg::kron(&linalg::identity(self.dim()), &other.mat);
        HermitianMatrix { mat: a + b }
    }
}

/// Unit-trace positive semidefinite Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validate and symmetrize a candidate state.
    pub fn new(m: CMat) -> Result<Self> {
        check_square(&m)?;
        let defect = linalg::hermiticity_defect(&m);
        if defect > tol::PSD {
            return Err(Error::NotHermitian(defect));
        }
        let mat = linalg::hermitian_part(&m);
        let tr = linalg::trace_re(&mat);
        if (tr - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidTrace(tr));
        }
        let min = linalg::eigvalsh(&mat).last().copied().unwrap_or(0.0);
        if min < -tol::PSD {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { mat })
    }

    /// Normalize `ψψ†`.
    pub fn from_pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        let v = psi / c(n, 0.0);
        Ok(Self {
            mat: linalg::projector(&v),
        })
    }

    pub fn basis_state(d: usize, i: usize) -> Self {
        Self {
            mat: linalg::projector(&linalg::basis(d, i)),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: linalg::identity(d) * c(1.0 / d as f64, 0.0),
        }
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(linalg::diag(p))
    }

    /// Bell state `(|00⟩ + |11⟩)/√2`.
    pub fn bell() -> Self {
        let mut v = CVec::zeros(4);
        v[0] = c(1.0, 0.0);
        v[3] = c(1.0, 0.0);
        Self::from_pure(&v).expect("nonzero")
    }

    /// Symmetrize and renormalize a matrix known to be a state up to rounding.
    pub(crate) fn from_matrix_unchecked(m: CMat) -> Self {
        let mut mat = linalg::hermitian_part(&m);
        let tr = linalg::trace_re(&mat);
        if tr > 0.0 {
            mat *= c(1.0 / tr, 0.0);
        }
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn eigh(&self) -> Eigh {
        linalg::eigh(&self.mat)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.mat)
    }

    /// Count of eigenvalues above `1e-12 · Tr ρ`.
    pub fn rank(&self) -> usize {
        self.eigenvalues()
            .iter()
            .filter(|&&x| x > tol::RANK)
            .count()
    }

    pub fn is_pure(&self) -> bool {
        self.rank() == 1
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            mat: linalg::kron(&self.mat, &other.mat),
        }
    }

    /// `t·self + (1 − t)·other`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mixing states of dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("mixing weight {t}")));
        }
        Ok(DensityMatrix {
            mat: &self.mat * c(t, 0.0) + &other.mat * c(1.0 - t, 0.0),
        })
    }

    /// Trace distance `‖self − other‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        linalg::trace_norm(&(&self.mat - &other.mat))
    }
}

/// A nonnegative real or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedNonnegReal {
    Finite(f64),
    Infinite,
}

impl ExtendedNonnegReal {
    pub(crate) fn finite(x: f64) -> Self {
        ExtendedNonnegReal::Finite(x.max(0.0))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedNonnegReal::Infinite)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ExtendedNonnegReal::Finite(x) => Some(*x),
            ExtendedNonnegReal::Infinite => None,
        }
    }

    /// Finite value or `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtendedNonnegReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedNonnegReal::Finite(x) => write!(f, "{x}"),
            ExtendedNonnegReal::Infinite => write!(f, "+inf"),
        }
    }
}

/// Finite ensemble `{π_i, ρ_i}` with weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    members: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidEnsemble("empty ensemble".into()));
        };
        let d = first.1.dim();
        let mut total = 0.0;
        for (i, (w, s)) in members.iter().enumerate() {
            if !(*w > 0.0 && *w <= 1.0 + tol::TRACE) {
                return Err(Error::InvalidEnsemble(format!("weight {w} at atom {i}")));
            }
            if s.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "atom {i} has dim {} (expected {d})",
                    s.dim()
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        Ok(Self { members })
    }

    /// Drop weights ≤ `1e-14` and renormalize the rest.
    pub(crate) fn from_weighted_pruned(members: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let kept: Vec<_> = members.into_iter().filter(|(w, _)| *w > 1e-14).collect();
        let total: f64 = kept.iter().map(|(w, _)| w).sum();
        if kept.is_empty() || total <= 0.0 {
            return Err(Error::InvalidEnsemble("no atoms with positive weight".into()));
        }
        Self::new(kept.into_iter().map(|(w, s)| (w / total, s)).collect())
    }

    pub fn singleton(state: DensityMatrix) -> Self {
        Self {
            members: vec![(1.0, state)],
        }
    }

    /// Eigen-ensemble of a state.
    pub fn spectral(rho: &DensityMatrix) -> Self {
        let e = rho.eigh();
        let members = e
            .values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > tol::RANK)
            .map(|(j, &l)| {
                let v: CVec = e.vectors.column(j).into_owned();
                (l, DensityMatrix::from_pure(&v).expect("unit eigenvector"))
            })
            .collect();
        Self::from_weighted_pruned(members).expect("state has positive trace")
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    pub fn members(&self) -> &[(f64, DensityMatrix)] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, DensityMatrix)> {
        self.members.iter()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|(w, _)| *w).collect()
    }

    /// Average state `Σ π_i ρ_i`.
    pub fn average(&self) -> DensityMatrix {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for (w, s) in &self.members {
            m += s.matrix() * c(*w, 0.0);
        }
        DensityMatrix::from_matrix_unchecked(m)
    }

    /// All atoms are pure.
    pub fn is_pure(&self) -> bool {
        self.members.iter().all(|(_, s)| s.is_pure())
    }

    /// Ensemble of products `π_i μ_j, ρ_i ⊗ σ_j`.
    pub fn tensor(&self, other: &Ensemble) -> Ensemble {
        let mut members = Vec::with_capacity(self.len() * other.len());
        for (p, r) in &self.members {
            for (q, s) in &other.members {
                members.push((p * q, r.tensor(s)));
            }
        }
        Ensemble { members }
    }

    /// Replace mixed atoms by their eigen-ensembles.
    pub fn purify_atoms(&self) -> Ensemble {
        let mut members = Vec::new();
        for (w, s) in &self.members {
            for (p, atom) in Ensemble::spectral(s).members {
                members.push((w * p, atom));
            }
        }
        Ensemble { members }
    }

    /// Mixture `t·self ∪ (1 − t)·other` as one ensemble.
    pub fn mixture(&self, other: &Ensemble, t: f64) -> Result<Ensemble> {
        let mut members: Vec<_> = self
            .members
            .iter()
            .map(|(w, s)| (w * t, s.clone()))
            .collect();
        members.extend(other.members.iter().map(|(w, s)| (w * (1.0 - t), s.clone())));
        Ensemble::from_weighted_pruned(members)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_diagonal(&[0.5, 0.5]).is_ok());
        assert!(matches!(
            DensityMatrix::from_diagonal(&[0.6, 0.6]),
            Err(Error::InvalidTrace(_))
        ));
        assert!(matches!(
            DensityMatrix::from_diagonal(&[1.2, -0.2]),
            Err(Error::NotPositive(_))
        ));
        let nh = CMat::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0.3, 0.), c(0.5, 0.)]);
        assert!(matches!(DensityMatrix::new(nh), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn ensemble_validation_and_average() {
        let e = Ensemble::new(vec![
            (0.25, DensityMatrix::basis_state(2, 0)),
            (0.75, DensityMatrix::basis_state(2, 1)),
        ])
        .unwrap();
        let avg = e.average();
        assert!((avg.matrix()[(1, 1)].re - 0.75).abs() < 1e-15);
        assert!(Ensemble::new(vec![(0.5, DensityMatrix::basis_state(2, 0))]).is_err());
        assert!(Ensemble::new(vec![]).is_err());
    }

    #[test]
    fn kronecker_sum_spectrum_is_pairwise_sums() {
        let a = HermitianMatrix::from_diagonal(&[0.3, -1.0]);
        let b = HermitianMatrix::from_diagonal(&[2.0, 0.5, 0.0]);
        let mut got = a.kronecker_sum(&b).eigh().values;
        let mut want: Vec<f64> = [0.3, -1.0]
            .iter()
            .flat_map(|x| [2.0, 0.5, 0.0].iter().map(move |y| x + y))
            .collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_counts_support() {
        assert_eq!(DensityMatrix::bell().rank(), 1);
        assert_eq!(DensityMatrix::maximally_mixed(3).rank(), 3);
    }
}
