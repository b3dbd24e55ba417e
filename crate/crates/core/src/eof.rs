//! Entanglement of formation.
//!
//! The EoF of a bipartite state is the convex closure of the output entropy
//! of a partial-trace channel, so it is computed with [`hhat`]. For two
//! qubits the concurrence formula gives an exact value that the optimizer
//! is checked against.

use rand::Rng;

use crate::channel::{partial_trace, KrausChannel, Subsystem};
use crate::entropy::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::optimize::{hhat, OptimizerOptions, OptimizerReport};
use crate::random::{gaussian_vector, rng_from_seed};
use crate::states::{DensityMatrix, Ensemble};

/// State on `C^{d_A} ⊗ C^{d_B}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    da: usize,
    db: usize,
    state: DensityMatrix,
}

impl BipartiteState {
    pub fn new(state: DensityMatrix, da: usize, db: usize) -> Result<Self> {
        if da == 0 || db == 0 || da * db != state.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{da}x{db} factorization of a dim-{} state",
                state.dim()
            )));
        }
        Ok(Self { da, db, state })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn marginal(&self, keep: Subsystem) -> DensityMatrix {
        partial_trace(&self.state, self.da, self.db, keep).expect("dims checked on construction")
    }

    /// Same state with the two factors exchanged.
    pub fn swapped(&self) -> BipartiteState {
        let (da, db) = (self.da, self.db);
        let orig = |i: usize| (i % da) * db + i / da;
        let m = self.state.matrix();
        let s = CMat::from_fn(da * db, da * db, |i, j| m[(orig(i), orig(j))]);
        BipartiteState {
            da: db,
            db: da,
            state: DensityMatrix::from_matrix_unchecked(s),
        }
    }
}

/// EoF as `Ĥ` of the channel `ω ↦ Tr_B ω` (or `Tr_A ω` with `keep = B`).
pub fn eof_with(omega: &BipartiteState, keep: Subsystem, opts: &OptimizerOptions) -> Result<OptimizerReport> {
    let ch = KrausChannel::partial_trace(omega.da, omega.db, keep);
    hhat(&ch, &omega.state, opts)
}

pub fn eof(omega: &BipartiteState, opts: &OptimizerOptions) -> Result<OptimizerReport> {
    eof_with(omega, Subsystem::A, opts)
}

/// Average marginal entropy of an explicit pure-state decomposition.
pub fn decomposition_eof(omega: &BipartiteState, ens: &Ensemble) -> Result<f64> {
    if ens.dim() != omega.state.dim() {
        return Err(Error::DimensionMismatch("ensemble vs bipartite state".into()));
    }
    let ch = KrausChannel::partial_trace(omega.da, omega.db, Subsystem::A);
    ens.mean_output_entropy(&ch)
}

fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    h(p) + h(1.0 - p)
}

/// Concurrence of a two-qubit state.
pub fn concurrence(omega: &BipartiteState) -> Result<f64> {
    if omega.dims() != (2, 2) {
        return Err(Error::DimensionMismatch(format!(
            "concurrence needs 2x2, got {}x{}",
            omega.da, omega.db
        )));
    }
    let rho = omega.state.matrix();
    let yy = linalg::kron(&linalg::pauli_y(), &linalg::pauli_y());
    let tilde = &yy * rho.conjugate() * &yy;
    let sqrt_rho = omega.state.eigh().map(|x| x.max(0.0).sqrt());
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let ev = linalg::eigvalsh(&linalg::hermitian_part(&r));
    // Rounding noise at the 1e-17 level would otherwise turn into 1e-9 after the square root.
    let floor = linalg::tol::EIG_FLOOR * ev.iter().fold(0.0f64, |a, &x| a.max(x));
    let mut l: Vec<f64> = ev
        .into_iter()
        .map(|x| if x > floor { x.sqrt() } else { 0.0 })
        .collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// Exact two-qubit EoF in nats from the concurrence.
pub fn wootters_oracle(omega: &BipartiteState) -> Result<f64> {
    let cc = concurrence(omega)?.min(1.0);
    Ok(binary_entropy(0.5 * (1.0 + (1.0 - cc * cc).sqrt())))
}

/// Pure state `Σ_i √p_i |i⟩|i⟩` on `d×d`.
pub fn schmidt_state(coefficients: &[f64]) -> Result<BipartiteState> {
    let d = coefficients.len();
    let mut psi = CVec::zeros(d * d);
    for (i, &p) in coefficients.iter().enumerate() {
        if p < 0.0 {
            return Err(Error::InvalidArgument(format!("negative Schmidt weight {p}")));
        }
        psi[i * d + i] = linalg::c(p.sqrt(), 0.0);
    }
    BipartiteState::new(DensityMatrix::from_pure(&psi)?, d, d)
}

/// One checked input of a separability scan.
#[derive(Clone, Debug)]
pub struct ScanEntry {
    pub dims: (usize, usize),
    /// Atoms in the generating mixture; 1 for pure entangled inputs.
    pub mixture_size: usize,
    pub value: f64,
    /// `0` for separable inputs, the marginal entropy for pure ones.
    pub expected: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SeparabilityReport {
    pub separable: Vec<ScanEntry>,
    pub entangled: Vec<ScanEntry>,
    pub failures: Vec<String>,
}

impl SeparabilityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

const SCAN_DIMS: [(usize, usize); 3] = [(2, 2), (2, 3), (3, 2)];
const ZERO_TOL: f64 = 1e-6;

fn unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    gaussian_vector(d, rng).normalize()
}

/// Random mixture of `k` product pure states.
pub fn random_separable<R: Rng + ?Sized>(da: usize, db: usize, k: usize, rng: &mut R) -> Result<BipartiteState> {
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let mut m = CMat::zeros(da * db, da * db);
    for w in &weights {
        let psi = linalg::kron_vec(&unit(da, rng), &unit(db, rng));
        m += linalg::projector(&psi) * linalg::c(w / total, 0.0);
    }
    BipartiteState::new(DensityMatrix::new(linalg::hermitian_part(&m))?, da, db)
}

/// Random pure state whose Schmidt coefficients are all at least `min_coeff`.
pub fn random_entangled_pure<R: Rng + ?Sized>(da: usize, db: usize, min_coeff: f64, rng: &mut R) -> Result<BipartiteState> {
    let k = da.min(db);
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let spare = 1.0 - min_coeff * k as f64;
    let coeffs: Vec<f64> = raw.iter().map(|r| min_coeff + spare * r / total).collect();
    let ua = crate::random::isometry_with(da, k, rng)?;
    let ub = crate::random::isometry_with(db, k, rng)?;
    let mut psi = CVec::zeros(da * db);
    for (i, p) in coeffs.iter().enumerate() {
        let a: CVec = ua.column(i).into_owned();
        let b: CVec = ub.column(i).into_owned();
        psi += linalg::kron_vec(&a, &b) * linalg::c(p.sqrt(), 0.0);
    }
    BipartiteState::new(DensityMatrix::from_pure(&psi)?, da, db)
}

/// EoF vanishes on separable mixtures and equals the marginal entropy on
/// entangled pure states.
///
/// Each sample draws a separable mixture of 2 to 8 product pure states and
/// an entangled pure state with Schmidt coefficients ≥ 0.1, cycling through
/// 2x2, 2x3 and 3x2.
pub fn separability_zero_scan(samples: usize, seed: u64, opts: &OptimizerOptions) -> Result<SeparabilityReport> {
    let mut rng = rng_from_seed(seed);
    let mut report = SeparabilityReport::default();
    for s in 0..samples {
        let (da, db) = SCAN_DIMS[s % SCAN_DIMS.len()];
        let k = rng.random_range(2..=8);
        let omega = random_separable(da, db, k, &mut rng)?;
        let value = eof(&omega, opts)?.value;
        let passed = value <= ZERO_TOL;
        if !passed {
            report
                .failures
                .push(format!("sample {s}: separable {da}x{db} mixture of {k} has eof {value:.3e}"));
        }
        report.separable.push(ScanEntry {
            dims: (da, db),
            mixture_size: k,
            value,
            expected: 0.0,
            passed,
        });

        let pure = random_entangled_pure(da, db, 0.1, &mut rng)?;
        let expected = von_neumann_entropy(&pure.marginal(Subsystem::A));
        let value = eof(&pure, opts)?.value;
        let passed = value >= expected - ZERO_TOL && expected > 0.0;
        if !passed {
            report
                .failures
                .push(format!("sample {s}: pure {da}x{db} has eof {value:.6} below {expected:.6}"));
        }
        report.entangled.push(ScanEntry {
            dims: (da, db),
            mixture_size: 1,
            value,
            expected,
            passed,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn werner(w: f64) -> BipartiteState {
        let bell = DensityMatrix::bell();
        let mixed = DensityMatrix::maximally_mixed(4);
        BipartiteState::new(bell.mix(&mixed, w).unwrap(), 2, 2).unwrap()
    }

    #[test]
    fn oracle_closed_forms() {
        let bell = BipartiteState::new(DensityMatrix::bell(), 2, 2).unwrap();
        assert!((wootters_oracle(&bell).unwrap() - LN_2).abs() < 1e-12);
        let prod = BipartiteState::new(DensityMatrix::basis_state(4, 1), 2, 2).unwrap();
        assert!(wootters_oracle(&prod).unwrap().abs() < 1e-12);
        let mixed = BipartiteState::new(DensityMatrix::maximally_mixed(4), 2, 2).unwrap();
        assert!(wootters_oracle(&mixed).unwrap().abs() < 1e-12);
    }

    #[test]
    fn oracle_on_pure_states_is_marginal_entropy() {
        let s = schmidt_state(&[0.8, 0.2]).unwrap();
        let want = -(0.8 * 0.8f64.ln() + 0.2 * 0.2f64.ln());
        assert!((want - 0.500402).abs() < 1e-6);
        assert!((wootters_oracle(&s).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn oracle_on_werner_states() {
        // Concurrence of w·Bell + (1−w)·I/4 is max(0, (3w − 1)/2).
        for w in [0.2, 1.0 / 3.0, 0.5, 0.9] {
            let cc = concurrence(&werner(w)).unwrap();
            assert!((cc - ((3.0 * w - 1.0) / 2.0).max(0.0)).abs() < 1e-9, "w={w}: {cc}");
        }
    }

    #[test]
    fn swap_exchanges_marginals() {
        let mut rng = rng_from_seed(3);
        let s = random_separable(2, 3, 3, &mut rng).unwrap();
        let t = s.swapped();
        assert_eq!(t.dims(), (3, 2));
        assert!(t.marginal(Subsystem::A).trace_distance(&s.marginal(Subsystem::B)) < 1e-12);
        assert!(t.swapped().state().trace_distance(s.state()) < 1e-14);
    }

    #[test]
    fn eof_of_werner_matches_oracle() {
        let omega = werner(0.9);
        let rep = eof(&omega, &OptimizerOptions::default().with_restarts(16)).unwrap();
        let oracle = wootters_oracle(&omega).unwrap();
        assert!((rep.value - oracle).abs() < 5e-3, "{} vs {oracle}", rep.value);
    }

    #[test]
    fn eof_of_bell_and_schmidt_states() {
        let opts = OptimizerOptions::default().with_restarts(4);
        let bell = BipartiteState::new(DensityMatrix::bell(), 2, 2).unwrap();
        assert!((eof(&bell, &opts).unwrap().value - LN_2).abs() < 1e-8);
        let s = schmidt_state(&[0.8, 0.2]).unwrap();
        assert!((eof(&s, &opts).unwrap().value - 0.500402).abs() < 1e-6);
    }

    #[test]
    fn product_of_mixed_states_has_zero_eof() {
        let a = crate::random::random_state(2, 2, 1).unwrap();
        let b = crate::random::random_state(2, 2, 2).unwrap();
        let omega = BipartiteState::new(a.tensor(&b), 2, 2).unwrap();
        let rep = eof(&omega, &OptimizerOptions::default().with_restarts(8)).unwrap();
        assert!(rep.value < ZERO_TOL, "{}", rep.value);
    }
}
