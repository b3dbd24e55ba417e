//! Tensor-product additivity checks for `Ĥ`, `ν_H`, `χ` and the minimal
//! output entropy.
//!
//! Every check computes `gap = lhs − rhs`, where `lhs` is the quantity for
//! the product channel and `rhs` the sum over the factors. Each report
//! records which sign of the gap the theory guarantees and which sign
//! would indicate a failure of additivity. Product-space searches are
//! warm-started with the tensor product of the factor certificates, so the
//! guaranteed direction holds numerically up to rounding and only genuine
//! entangled improvements can push the gap past it.

use std::fmt;

use crate::channel::{partial_trace_matrix, KrausChannel, Subsystem};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::optimize::{
    chi, chi_seeded, constrained_capacity, hhat, hhat_seeded, min_output_entropy,
    min_output_entropy_seeded, nu_h, nu_h_seeded, OptimizerOptions, OptimizerReport,
};
use crate::states::{DensityMatrix, Ensemble, HermitianMatrix};

/// Tolerance absorbing optimizer error in one-sided bounds.
pub const TOL_OPT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Statement {
    /// Superadditivity of `Ĥ` on arbitrary product-space states.
    I,
    /// Additivity of `ν_H` for Kronecker-sum observables.
    II,
    /// Additivity of `Ĥ` on product states.
    III,
    /// Additivity of constrained `χ`.
    IV,
    /// Additivity of the minimal output entropy of subchannels.
    V,
}

impl Statement {
    pub fn id(&self) -> &'static str {
        match self {
            Statement::I => "i",
            Statement::II => "ii",
            Statement::III => "iii",
            Statement::IV => "iv",
            Statement::V => "v",
        }
    }

    pub fn parse(s: &str) -> Option<Statement> {
        match s {
            "i" => Some(Statement::I),
            "ii" => Some(Statement::II),
            "iii" => Some(Statement::III),
            "iv" => Some(Statement::IV),
            "v" => Some(Statement::V),
            _ => None,
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Sign of `gap` that holds unconditionally.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Guaranteed {
    /// `gap ≤ tol`: product inputs already reach `rhs`.
    AtMost,
    /// `gap ≥ −tol`: product ensembles already reach `rhs`.
    AtLeast,
}

#[derive(Clone, Debug)]
pub struct AdditivityReport {
    pub statement: Statement,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub guaranteed: Guaranteed,
    pub description: String,
    /// Product-space run first, then the factor runs.
    pub diagnostics: Vec<OptimizerReport>,
}

impl AdditivityReport {
    /// The gap is on the wrong side of the guaranteed direction by more
    /// than `tol`.
    pub fn violates_guarantee(&self, tol: f64) -> bool {
        match self.guaranteed {
            Guaranteed::AtMost => self.gap > tol,
            Guaranteed::AtLeast => self.gap < -tol,
        }
    }

    /// Additivity fails by more than `tol` in the non-guaranteed direction.
    pub fn witnesses_nonadditivity(&self, tol: f64) -> bool {
        match self.guaranteed {
            Guaranteed::AtMost => self.gap < -tol,
            Guaranteed::AtLeast => self.gap > tol,
        }
    }
}

fn pure_vector(s: &DensityMatrix) -> CVec {
    s.eigh().vectors.column(0).into_owned()
}

fn certificate_vector(rep: &OptimizerReport) -> CVec {
    pure_vector(rep.certificate.state().expect("pure-state search returns a state"))
}

fn certificate_ensemble(rep: &OptimizerReport) -> &Ensemble {
    rep.certificate.ensemble().expect("decomposition search returns an ensemble")
}

fn check_dims(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what}: dim {got}, expected {want}")));
    }
    Ok(())
}

const MARGINAL_TRACE_TOL: f64 = 1e-12;

fn marginal(omega: &DensityMatrix, da: usize, db: usize, keep: Subsystem) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(omega.matrix(), da, db, keep);
    let t = linalg::trace_re(&m);
    if (t - 1.0).abs() > MARGINAL_TRACE_TOL {
        return Err(Error::InvalidTrace(t));
    }
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// `Ĥ_{Φ⊗Ψ}(ω) − Ĥ_Φ(ω_A) − Ĥ_Ψ(ω_B)`; superadditivity says `≥ 0`.
///
/// The product-space value is an upper bound from the optimizer, so only
/// gaps below `−TOL_OPT` carry evidence.
pub fn superadditivity_gap(
    phi: &KrausChannel,
    psi: &KrausChannel,
    omega: &DensityMatrix,
    opts: &OptimizerOptions,
) -> Result<AdditivityReport> {
    let (da, db) = (phi.dim_in(), psi.dim_in());
    check_dims("joint state", omega.dim(), da * db)?;
    let rho_a = marginal(omega, da, db, Subsystem::A)?;
    let rho_b = marginal(omega, da, db, Subsystem::B)?;
    let ra = hhat(phi, &rho_a, opts)?;
    let rb = hhat(psi, &rho_b, opts)?;
    let joint = hhat(&phi.tensor(psi), omega, opts)?;
    let (lhs, rhs) = (joint.value, ra.value + rb.value);
    Ok(AdditivityReport {
        statement: Statement::I,
        lhs,
        rhs,
        gap: lhs - rhs,
        guaranteed: Guaranteed::AtLeast,
        description: format!(
            "Ĥ of the product channel at a {da}x{db} state vs Ĥ of the factors at its marginals"
        ),
        diagnostics: vec![joint, ra, rb],
    })
}

/// `ν_H(Φ⊗Ψ, A⊗I + I⊗B) − ν_H(Φ, A) − ν_H(Ψ, B)`; always `≤ 0` because
/// product inputs attain the right side.
pub fn nu_additivity_gap(
    phi: &KrausChannel,
    psi: &KrausChannel,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    opts: &OptimizerOptions,
) -> Result<AdditivityReport> {
    check_dims("first observable", a.dim(), phi.dim_in())?;
    check_dims("second observable", b.dim(), psi.dim_in())?;
    let ra = nu_h(phi, a, opts)?;
    let rb = nu_h(psi, b, opts)?;
    let seed = linalg::kron_vec(&certificate_vector(&ra), &certificate_vector(&rb));
    let joint = nu_h_seeded(&phi.tensor(psi), &a.kronecker_sum(b), opts, &[seed])?;
    let (lhs, rhs) = (joint.value, ra.value + rb.value);
    Ok(AdditivityReport {
        statement: Statement::II,
        lhs,
        rhs,
        gap: lhs - rhs,
        guaranteed: Guaranteed::AtMost,
        description: "ν_H of the product channel with a Kronecker-sum observable vs the factor sum".into(),
        diagnostics: vec![joint, ra, rb],
    })
}

/// `Ĥ_{Φ⊗Ψ}(ρ⊗σ) − Ĥ_Φ(ρ) − Ĥ_Ψ(σ)`; always `≤ 0` because product
/// decompositions attain the right side.
pub fn product_state_check(
    phi: &KrausChannel,
    psi: &KrausChannel,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    opts: &OptimizerOptions,
) -> Result<AdditivityReport> {
    check_dims("first state", rho.dim(), phi.dim_in())?;
    check_dims("second state", sigma.dim(), psi.dim_in())?;
    let ra = hhat(phi, rho, opts)?;
    let rb = hhat(psi, sigma, opts)?;
    let seed = certificate_ensemble(&ra).tensor(certificate_ensemble(&rb));
    let joint = hhat_seeded(&phi.tensor(psi), &rho.tensor(sigma), opts, &[seed])?;
    let (lhs, rhs) = (joint.value, ra.value + rb.value);
    Ok(AdditivityReport {
        statement: Statement::III,
        lhs,
        rhs,
        gap: lhs - rhs,
        guaranteed: Guaranteed::AtMost,
        description: "Ĥ of the product channel at a product state vs the factor sum".into(),
        diagnostics: vec![joint, ra, rb],
    })
}

/// `χ_{Φ⊗Ψ}(ρ⊗σ) − χ_Φ(ρ) − χ_Ψ(σ)`: constrained `χ` additivity for the
/// singleton constraint sets `{ρ}` and `{σ}`. Always `≥ 0`.
pub fn chi_strong_additivity_gap(
    phi: &KrausChannel,
    psi: &KrausChannel,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    opts: &OptimizerOptions,
) -> Result<AdditivityReport> {
    check_dims("first state", rho.dim(), phi.dim_in())?;
    check_dims("second state", sigma.dim(), psi.dim_in())?;
    let ra = chi(phi, rho, opts)?;
    let rb = chi(psi, sigma, opts)?;
    let seed = certificate_ensemble(&ra).tensor(certificate_ensemble(&rb));
    let joint = chi_seeded(&phi.tensor(psi), &rho.tensor(sigma), opts, &[seed])?;
    let (lhs, rhs) = (joint.value, ra.value + rb.value);
    Ok(AdditivityReport {
        statement: Statement::IV,
        lhs,
        rhs,
        gap: lhs - rhs,
        guaranteed: Guaranteed::AtLeast,
        description: "χ of the product channel at a product state vs the factor sum".into(),
        diagnostics: vec![joint, ra, rb],
    })
}

/// Constrained `χ` additivity for output-energy constraints: the product
/// channel is constrained by `H_A ⊗ I + I ⊗ H_B ≤ h_A + h_B`. Always `≥ 0`
/// up to optimizer error, since products of feasible states are feasible.
pub fn constrained_chi_additivity_gap(
    phi: &KrausChannel,
    psi: &KrausChannel,
    (h_a, bound_a): (&HermitianMatrix, f64),
    (h_b, bound_b): (&HermitianMatrix, f64),
    opts: &OptimizerOptions,
) -> Result<AdditivityReport> {
    let ra = constrained_capacity(phi, h_a, bound_a, opts)?;
    let rb = constrained_capacity(psi, h_b, bound_b, opts)?;
    let joint = constrained_capacity(&phi.tensor(psi), &h_a.kronecker_sum(h_b), bound_a + bound_b, opts)?;
    let (lhs, rhs) = (joint.value, ra.value + rb.value);
    Ok(AdditivityReport {
        statement: Statement::IV,
        lhs,
        rhs,
        gap: lhs - rhs,
        guaranteed: Guaranteed::AtLeast,
        description: format!(
            "energy-constrained χ of the product channel (bound {}) vs the factor sum",
            bound_a + bound_b
        ),
        diagnostics: vec![joint, ra, rb],
    })
}

/// `H_min(Φ₀⊗Ψ₀) − H_min(Φ₀) − H_min(Ψ₀)` for the subchannels obtained by
/// restricting inputs to the ranges of `v_a` and `v_b`. Always `≤ 0`.
pub fn subchannel_min_entropy_gap(
    phi: &KrausChannel,
    psi: &KrausChannel,
    v_a: &CMat,
    v_b: &CMat,
    opts: &OptimizerOptions,
) -> Result<AdditivityReport> {
    let sub_a = phi.restrict(v_a)?;
    let sub_b = psi.restrict(v_b)?;
    let ra = min_output_entropy(&sub_a, opts)?;
    let rb = min_output_entropy(&sub_b, opts)?;
    let seed = linalg::kron_vec(&certificate_vector(&ra), &certificate_vector(&rb));
    let joint = min_output_entropy_seeded(&sub_a.tensor(&sub_b), opts, &[seed])?;
    let (lhs, rhs) = (joint.value, ra.value + rb.value);
    Ok(AdditivityReport {
        statement: Statement::V,
        lhs,
        rhs,
        gap: lhs - rhs,
        guaranteed: Guaranteed::AtMost,
        description: format!(
            "minimal output entropy of {}x{}-dimensional subchannels and their product",
            v_a.ncols(),
            v_b.ncols()
        ),
        diagnostics: vec![joint, ra, rb],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::output_entropy;
    use crate::random::{hermitian_with, positive_observable_with, random_channel, random_isometry, random_pure, random_state, rng_from_seed};
    use std::f64::consts::LN_2;

    fn quick() -> OptimizerOptions {
        OptimizerOptions::default().with_restarts(6)
    }

    #[test]
    fn identity_channels_give_zero_everywhere() {
        let id = KrausChannel::identity(2);
        let rho = random_state(2, 2, 1).unwrap();
        let sigma = random_state(2, 2, 2).unwrap();
        let r = superadditivity_gap(&id, &id, &rho.tensor(&sigma), &quick()).unwrap();
        assert!(r.lhs.abs() < 1e-8 && r.rhs.abs() < 1e-8);
        let r = superadditivity_gap(&id, &id, &DensityMatrix::bell(), &quick()).unwrap();
        assert!(r.gap.abs() < 1e-8);
        let r = product_state_check(&id, &id, &rho, &sigma, &quick()).unwrap();
        assert!(r.gap.abs() < 1e-8);
        let r = chi_strong_additivity_gap(&id, &id, &rho, &sigma, &quick()).unwrap();
        let want = crate::entropy::von_neumann_entropy(&rho) + crate::entropy::von_neumann_entropy(&sigma);
        assert!((r.lhs - want).abs() < 1e-8 && r.gap.abs() < 1e-8);
    }

    #[test]
    fn constant_channels_on_bell_state() {
        let dep = KrausChannel::fully_depolarizing(2);
        let r = superadditivity_gap(&dep, &dep, &DensityMatrix::bell(), &quick()).unwrap();
        assert!((r.lhs - 2.0 * LN_2).abs() < 1e-8);
        assert!((r.rhs - 2.0 * LN_2).abs() < 1e-8);
        let r = chi_strong_additivity_gap(&dep, &dep, &random_state(2, 2, 3).unwrap(), &random_state(2, 2, 4).unwrap(), &quick()).unwrap();
        assert!(r.lhs.abs() < 1e-8 && r.rhs.abs() < 1e-8);
    }

    #[test]
    fn nu_additivity_closed_forms() {
        let u = KrausChannel::unitary(random_isometry(2, 2, 5).unwrap()).unwrap();
        let z = HermitianMatrix::zeros(2);
        let r = nu_additivity_gap(&u, &u, &z, &z, &quick()).unwrap();
        assert!(r.lhs.abs() < 1e-8 && r.rhs.abs() < 1e-8);

        let mut rng = rng_from_seed(6);
        let a = positive_observable_with(2, &mut rng);
        let b = positive_observable_with(3, &mut rng);
        let r = nu_additivity_gap(&KrausChannel::identity(2), &KrausChannel::identity(3), &a, &b, &quick()).unwrap();
        let want = a.eigh().min() + b.eigh().min();
        assert!((r.lhs - want).abs() < 1e-8 && (r.rhs - want).abs() < 1e-8);
    }

    #[test]
    fn random_pairs_respect_guaranteed_directions() {
        let phi = random_channel(2, 2, 2, 7).unwrap();
        let psi = random_channel(2, 2, 2, 8).unwrap();
        let mut rng = rng_from_seed(9);
        let (a, b) = (hermitian_with(2, &mut rng), hermitian_with(2, &mut rng));
        assert!(!nu_additivity_gap(&phi, &psi, &a, &b, &quick()).unwrap().violates_guarantee(TOL_OPT));
        let (rho, sigma) = (random_state(2, 2, 10).unwrap(), random_state(2, 2, 11).unwrap());
        let r = product_state_check(&phi, &psi, &rho, &sigma, &quick()).unwrap();
        assert!(r.gap <= 1e-10, "{}", r.gap);
        let r = chi_strong_additivity_gap(&phi, &psi, &rho, &sigma, &quick()).unwrap();
        assert!(r.gap >= -1e-10, "{}", r.gap);
    }

    #[test]
    fn pure_product_states_add_output_entropies() {
        let phi = random_channel(2, 2, 2, 12).unwrap();
        let psi = random_channel(2, 3, 2, 13).unwrap();
        let (rho, sigma) = (random_pure(2, 1).unwrap(), random_pure(2, 2).unwrap());
        let r = product_state_check(&phi, &psi, &rho, &sigma, &quick()).unwrap();
        let want = output_entropy(&phi, &rho).unwrap() + output_entropy(&psi, &sigma).unwrap();
        assert!((r.lhs - want).abs() < 1e-10 && r.gap.abs() < 1e-10);
    }

    #[test]
    fn subchannel_cases() {
        let u = KrausChannel::unitary(random_isometry(2, 2, 14).unwrap()).unwrap();
        let full = linalg::identity(2);
        let r = subchannel_min_entropy_gap(&u, &u, &full, &full, &quick()).unwrap();
        assert!(r.lhs.abs() < 1e-8 && r.rhs.abs() < 1e-8);

        let phi = random_channel(3, 3, 2, 15).unwrap();
        let psi = random_channel(3, 3, 2, 16).unwrap();
        let va = random_isometry(3, 1, 17).unwrap();
        let vb = random_isometry(3, 1, 18).unwrap();
        let r = subchannel_min_entropy_gap(&phi, &psi, &va, &vb, &quick()).unwrap();
        assert!(r.gap.abs() < 1e-10, "{}", r.gap);

        assert!(subchannel_min_entropy_gap(&phi, &psi, &(va * linalg::c(2.0, 0.0)), &vb, &quick()).is_err());
    }

    #[test]
    fn energy_constrained_mode() {
        let id = KrausChannel::identity(2);
        let h = HermitianMatrix::from_diagonal(&[0.0, 1.0]);
        let r = constrained_chi_additivity_gap(&id, &id, (&h, 0.2), (&h, 0.2), &quick()).unwrap();
        let single = -(0.8 * 0.8f64.ln() + 0.2 * 0.2f64.ln());
        assert!((r.rhs - 2.0 * single).abs() < 1e-6, "{}", r.rhs);
        assert!(!r.violates_guarantee(TOL_OPT), "{}", r.gap);
    }

    #[test]
    fn marginal_trace_checked() {
        let id = KrausChannel::identity(2);
        assert!(superadditivity_gap(&id, &KrausChannel::identity(3), &DensityMatrix::bell(), &quick()).is_err());
    }
}
