//! Pure-state decompositions of a state and their transport.
//!
//! A rank-`r` state `ρ = Σ_j λ_j e_j e_j†` has its `m`-atom pure-state
//! decompositions parametrized by `m×r` matrices `V` with `V†V = I_r`:
//! atom `i` is `φ_i = Σ_j V_{ij} √λ_j e_j` with weight `‖φ_i‖²`.

use rand::Rng;

use crate::channel::spectral_truncation;
use crate::error::{Error, Result};
use crate::linalg::{self, c, tol, CMat, CVec};
use crate::random::gaussian_matrix;
use crate::states::{DensityMatrix, Ensemble};

/// `m×r` complex matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint {
    v: CMat,
}

impl StiefelPoint {
    pub fn new(v: CMat) -> Result<Self> {
        if v.ncols() == 0 || v.nrows() < v.ncols() {
            return Err(Error::InvalidArgument(format!(
                "{}x{} cannot have orthonormal columns",
                v.nrows(),
                v.ncols()
            )));
        }
        let defect = linalg::isometry_defect(&v);
        if defect > 1e-10 {
            return Err(Error::NotIsometry(defect));
        }
        Ok(Self { v })
    }

    pub(crate) fn from_unchecked(v: CMat) -> Self {
        Self { v }
    }

    /// `[I_r; 0]` with `m` rows.
    pub fn canonical(m: usize, r: usize) -> Result<Self> {
        Self::new(CMat::from_fn(m, r, |i, j| {
            if i == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    pub fn random<R: Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> Result<Self> {
        if r == 0 || m < r {
            return Err(Error::InvalidArgument(format!("Stiefel point {m}x{r}")));
        }
        Ok(Self {
            v: linalg::orthonormalize(&gaussian_matrix(m, r, rng)),
        })
    }

    pub fn atoms(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn matrix(&self) -> &CMat {
        &self.v
    }
}

/// Count of eigenvalues above `1e-12 · Tr ρ`.
pub fn numerical_rank(rho: &DensityMatrix) -> usize {
    rho.rank()
}

/// Support data of a state: `W = E √Λ` restricted to the numerical support.
#[derive(Clone, Debug)]
pub(crate) struct SupportFrame {
    /// `d × r`, columns `√λ_j e_j`.
    pub w: CMat,
    /// `d × r`, orthonormal support basis.
    pub basis: CMat,
    pub values: Vec<f64>,
}

impl SupportFrame {
    pub fn of(rho: &DensityMatrix) -> Self {
        let e = rho.eigh();
        let r = e.values.iter().filter(|&&x| x > tol::RANK).count().max(1);
        let basis = e.vectors.columns(0, r).into_owned();
        let values: Vec<f64> = e.values[..r].to_vec();
        let mut w = basis.clone();
        for j in 0..r {
            let s = values[j].max(0.0).sqrt();
            for i in 0..w.nrows() {
                w[(i, j)] *= s;
            }
        }
        Self { w, basis, values }
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Columns are the unnormalized atoms `φ_i`: `W Vᵀ`.
    pub fn atoms(&self, v: &CMat) -> CMat {
        &self.w * v.transpose()
    }

    /// Coordinates `V` (rows `(W⁺ φ_i)ᵀ`) of unnormalized atoms given as columns.
    pub fn coordinates(&self, phis: &CMat) -> CMat {
        let mut pinv = self.basis.adjoint();
        for j in 0..self.rank() {
            let s = 1.0 / self.values[j].sqrt();
            for k in 0..pinv.ncols() {
                pinv[(j, k)] *= s;
            }
        }
        (pinv * phis).transpose()
    }
}

/// Pure-state ensemble induced by a Stiefel point.
pub fn decomposition_from_stiefel(rho: &DensityMatrix, v: &StiefelPoint) -> Result<Ensemble> {
    let frame = SupportFrame::of(rho);
    if v.rank() != frame.rank() {
        return Err(Error::DimensionMismatch(format!(
            "Stiefel point has {} columns but ρ has rank {}",
            v.rank(),
            frame.rank()
        )));
    }
    let phis = frame.atoms(v.matrix());
    ensemble_from_atoms(&phis)
}

/// Ensemble from unnormalized atoms stored as columns.
pub(crate) fn ensemble_from_atoms(phis: &CMat) -> Result<Ensemble> {
    let mut members = Vec::with_capacity(phis.ncols());
    for i in 0..phis.ncols() {
        let phi: CVec = phis.column(i).into_owned();
        let w = phi.norm_squared();
        if w > 1e-14 {
            members.push((w, DensityMatrix::from_pure(&phi)?));
        }
    }
    Ensemble::from_weighted_pruned(members)
}

/// Stiefel coordinates of a pure-state ensemble of `ρ`, padded to `m` atoms.
///
/// Mixed atoms are first split into their eigen-ensembles. The result is
/// re-orthonormalized to absorb rounding in the ensemble average.
pub fn stiefel_from_ensemble(rho: &DensityMatrix, ens: &Ensemble, m: usize) -> Result<StiefelPoint> {
    let pure = ens.purify_atoms();
    if pure.dim() != rho.dim() {
        return Err(Error::DimensionMismatch("ensemble vs state".into()));
    }
    let frame = SupportFrame::of(rho);
    if pure.len() > m {
        return Err(Error::InvalidArgument(format!(
            "ensemble has {} pure atoms, more than {m}",
            pure.len()
        )));
    }
    let d = rho.dim();
    let mut phis = CMat::zeros(d, m);
    for (i, (w, s)) in pure.iter().enumerate() {
        let e = s.eigh();
        let v = e.vectors.column(0) * c(w.sqrt(), 0.0);
        phis.set_column(i, &v);
    }
    let v = frame.coordinates(&phis);
    if m < frame.rank() {
        return Err(Error::InvalidArgument(format!(
            "{m} atoms cannot carry rank {}",
            frame.rank()
        )));
    }
    let v = linalg::orthonormalize(&v);
    Ok(StiefelPoint::from_unchecked(v))
}

/// Support projector and Moore-Penrose inverse square root of a state.
fn support_and_inv_sqrt(rho: &DensityMatrix) -> (CMat, CMat) {
    let e = rho.eigh();
    let tr = linalg::trace_re(rho.matrix());
    let thr = tol::RANK * tr;
    let p = e.map(|x| if x > thr { 1.0 } else { 0.0 });
    let inv = e.map(|x| if x > thr { 1.0 / x.sqrt() } else { 0.0 });
    (p, inv)
}

/// Move an ensemble with average `ρ` to one with average `ρ′`.
///
/// `A_i = ρ^{-1/2} ρ_i ρ^{-1/2}`, `B_i = ρ′^{1/2} A_i ρ′^{1/2} + ρ′^{1/2}(I − P)ρ′^{1/2}`,
/// `π_i′ = π_i Tr B_i`, `ρ_i′ = B_i / Tr B_i`, where `P` projects onto the
/// support of `ρ` and the inverse square root vanishes off that support.
pub fn transport_ensemble(ens: &Ensemble, target: &DensityMatrix) -> Result<Ensemble> {
    if ens.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble dim {} vs target dim {}",
            ens.dim(),
            target.dim()
        )));
    }
    let rho = ens.average();
    let (p, inv_sqrt) = support_and_inv_sqrt(&rho);
    let sqrt_t = target.eigh().map(|x| x.max(0.0).sqrt());
    let d = target.dim();
    let correction = &sqrt_t * (linalg::identity(d) - p) * &sqrt_t;
    let mut members = Vec::with_capacity(ens.len());
    for (i, (w, r)) in ens.iter().enumerate() {
        if *w <= 0.0 {
            return Err(Error::InvalidEnsemble(format!("zero weight at atom {i}")));
        }
        let a = &inv_sqrt * r.matrix() * &inv_sqrt;
        let b = &sqrt_t * a * &sqrt_t + &correction;
        let tr = linalg::trace_re(&b);
        if tr <= tol::EIG_FLOOR {
            return Err(Error::DegenerateTransport { atom: i, trace: tr });
        }
        members.push((w * tr, DensityMatrix::from_matrix_unchecked(b)));
    }
    // The weights sum to Tr ρ′ = 1 up to rounding; renormalize to keep the invariant exact.
    let total: f64 = members.iter().map(|(w, _)| w).sum();
    Ensemble::new(members.into_iter().map(|(w, s)| (w / total, s)).collect())
}

/// Memberwise distance `max_i |π_i − π_i′| + ‖ρ_i − ρ_i′‖₁`.
pub fn memberwise_distance(a: &Ensemble, b: &Ensemble) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "ensembles of sizes {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|((p, r), (q, s))| (p - q).abs() + r.trace_distance(s))
        .fold(0.0, f64::max))
}

/// One level of the spectral truncation sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationLevel {
    pub n: usize,
    pub state: DensityMatrix,
    pub mass: f64,
}

/// Truncations `ρ_n` for `n = 1..=rank(ρ)`.
pub fn truncation_sweep_inputs(rho: &DensityMatrix) -> Result<Vec<TruncationLevel>> {
    let r = rho.rank();
    let mut out = Vec::with_capacity(r);
    for n in 1..=r {
        let (state, mass) = if n == r {
            (rho.clone(), 1.0)
        } else {
            spectral_truncation(rho, n)?
        };
        out.push(TruncationLevel { n, state, mass });
    }
    Ok(out)
}
