//! Optimization of ensemble functionals.
//!
//! * [`hhat`]: convex closure of the output entropy, the minimum of
//!   `Σ π_i H(Φ(ρ_i))` over pure-state decompositions of `ρ`, searched over
//!   Stiefel points with `rank(ρ)²` atoms by default.
//! * [`chi`]: `H(Φ(ρ)) − Ĥ_Φ(ρ)`, cross-checked against the Holevo quantity
//!   of the returned ensemble.
//! * [`nu_h`], [`min_output_entropy`]: pure-state minimization of
//!   `H(Φ(ψψ†)) + ⟨ψ|A|ψ⟩`.
//! * [`constrained_capacity`]: maximum of `χ_Φ` over states obeying an
//!   output energy constraint.
//!
//! Every report carries the certificate the value was computed from.

pub(crate) mod manifold;
pub(crate) mod objectives;

use rayon::prelude::*;

use crate::channel::KrausChannel;
use crate::decompositions::{
    decomposition_from_stiefel, ensemble_from_atoms, stiefel_from_ensemble, StiefelPoint,
    SupportFrame,
};
use crate::entropy::{output_entropy, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::random::{derive_seed, gaussian_matrix, rng_from_seed};
use crate::states::{DensityMatrix, Ensemble, HermitianMatrix};

use manifold::{best_index, minimize, multistart, LocalResult, LocalSettings};
use objectives::{MeanOutputEntropy, OutputEntropy, PenalizedHolevo, PenalizedOutputEntropy};

/// Knobs shared by all optimizers.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerOptions {
    /// Random restarts (explicit warm starts come on top).
    pub restarts: usize,
    pub max_iters: usize,
    pub step_tol: f64,
    pub value_tol: f64,
    /// Atoms in the decomposition search; `None` means `rank²`.
    pub max_atoms: Option<usize>,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 500,
            step_tol: 1e-10,
            value_tol: 1e-9,
            max_atoms: None,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.step_tol > 0.0 && self.value_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }

    fn local(&self) -> LocalSettings {
        LocalSettings {
            max_iters: self.max_iters,
            step_tol: self.step_tol,
            value_tol: self.value_tol,
            grad_tol: 1e-10,
        }
    }

    fn atoms_for(&self, rank: usize) -> Result<usize> {
        match self.max_atoms {
            None => Ok(rank * rank),
            Some(m) if m >= rank => Ok(m),
            Some(m) => Err(Error::InvalidArgument(format!(
                "max_atoms {m} is below the rank {rank}"
            ))),
        }
    }

    fn restart_seed(&self, k: usize) -> u64 {
        derive_seed(self.seed, k as u64)
    }
}

/// What a reported value was computed from.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    Ensemble(Ensemble),
    State(DensityMatrix),
    Constrained { state: DensityMatrix, ensemble: Ensemble },
}

impl Certificate {
    pub fn ensemble(&self) -> Option<&Ensemble> {
        match self {
            Certificate::Ensemble(e) | Certificate::Constrained { ensemble: e, .. } => Some(e),
            Certificate::State(_) => None,
        }
    }

    pub fn state(&self) -> Option<&DensityMatrix> {
        match self {
            Certificate::State(s) | Certificate::Constrained { state: s, .. } => Some(s),
            Certificate::Ensemble(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerReport {
    pub value: f64,
    pub certificate: Certificate,
    /// Starts actually run, warm starts included.
    pub restarts_used: usize,
    pub best_restart: usize,
    pub best_restart_seed: u64,
    pub gradient_norm_at_exit: f64,
    pub iterations: usize,
    pub converged: bool,
    /// For `chi`: `|value − Holevo quantity of the certificate|`.
    pub crosscheck: Option<f64>,
    pub seed: u64,
}

/// Continue the winning run if it stopped at the iteration cap.
///
/// Near decompositions with (almost) pure outputs the objective behaves like
/// `x log x` and progress per iteration becomes small, so the cap is hit
/// before the value settles.
fn polish<O: manifold::Objective>(obj: &O, best: &mut LocalResult, opts: &OptimizerOptions) {
    if best.converged {
        return;
    }
    let mut local = opts.local();
    local.max_iters = opts.max_iters.saturating_mul(POLISH_FACTOR);
    let more = minimize(obj, &best.x, &local);
    if more.value <= best.value {
        best.iterations += more.iterations;
        best.x = more.x;
        best.value = more.value;
        best.grad_norm = more.grad_norm;
        best.converged = more.converged;
    }
}

const POLISH_FACTOR: usize = 10;

/// Start list: warm starts first, then seeded random points.
struct Starts {
    points: Vec<CMat>,
    seeds: Vec<u64>,
}

impl Starts {
    fn new() -> Self {
        Self {
            points: Vec::new(),
            seeds: Vec::new(),
        }
    }

    fn push_warm(&mut self, x: CMat) {
        self.points.push(x);
        self.seeds.push(u64::MAX);
    }

    fn push_random(&mut self, opts: &OptimizerOptions, rows: usize, cols: usize) {
        for k in 0..opts.restarts {
            let seed = opts.restart_seed(k);
            let mut rng = rng_from_seed(seed);
            self.points.push(linalg::orthonormalize(&gaussian_matrix(rows, cols, &mut rng)));
            self.seeds.push(seed);
        }
    }
}

fn check_input(phi: &KrausChannel, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != phi.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs channel input {}",
            rho.dim(),
            phi.dim_in()
        )));
    }
    Ok(())
}

fn report_from(
    value: f64,
    certificate: Certificate,
    results: &[LocalResult],
    seeds: &[u64],
    best: usize,
    opts: &OptimizerOptions,
) -> OptimizerReport {
    OptimizerReport {
        value,
        certificate,
        restarts_used: results.len(),
        best_restart: best,
        best_restart_seed: seeds[best],
        gradient_norm_at_exit: results[best].grad_norm,
        iterations: results[best].iterations,
        converged: results[best].converged,
        crosscheck: None,
        seed: opts.seed,
    }
}

/// Convex closure of the output entropy at `ρ`.
pub fn hhat(phi: &KrausChannel, rho: &DensityMatrix, opts: &OptimizerOptions) -> Result<OptimizerReport> {
    hhat_seeded(phi, rho, opts, &[])
}

/// [`hhat`] with extra warm-start ensembles (each must average to `ρ`).
///
/// A warm start with more pure atoms than the configured atom count widens
/// the search to fit it.
pub fn hhat_seeded(
    phi: &KrausChannel,
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
    warm: &[Ensemble],
) -> Result<OptimizerReport> {
    check_input(phi, rho)?;
    opts.validate()?;
    let frame = SupportFrame::of(rho);
    let r = frame.rank();
    if r == 1 {
        let value = output_entropy(phi, rho)?;
        let results = vec![LocalResult {
            x: CMat::identity(1, 1),
            value,
            grad_norm: 0.0,
            iterations: 0,
            converged: true,
        }];
        return Ok(report_from(
            value,
            Certificate::Ensemble(Ensemble::singleton(rho.clone())),
            &results,
            &[u64::MAX],
            0,
            opts,
        ));
    }
    let mut m = opts.atoms_for(r)?;
    for w in warm {
        if w.dim() != rho.dim() {
            return Err(Error::DimensionMismatch("warm-start ensemble dim".into()));
        }
        m = m.max(w.purify_atoms().len());
    }
    let mut starts = Starts::new();
    for w in warm {
        starts.push_warm(stiefel_from_ensemble(rho, w, m)?.matrix().clone());
    }
    starts.push_warm(StiefelPoint::canonical(m, r)?.matrix().clone());
    starts.push_random(opts, m, r);

    let obj = MeanOutputEntropy {
        kernel: OutputEntropy::new(phi),
        frame,
    };
    let mut results = multistart(&obj, &starts.points, &opts.local());
    let best = best_index(&results);
    polish(&obj, &mut results[best], opts);
    let point = StiefelPoint::from_unchecked(results[best].x.clone());
    let ens = decomposition_from_stiefel(rho, &point)?;
    let value = ens.mean_output_entropy(phi)?;
    Ok(report_from(
        value,
        Certificate::Ensemble(ens),
        &results,
        &starts.seeds,
        best,
        opts,
    ))
}

/// `χ_Φ(ρ) = H(Φ(ρ)) − Ĥ_Φ(ρ)`.
pub fn chi(phi: &KrausChannel, rho: &DensityMatrix, opts: &OptimizerOptions) -> Result<OptimizerReport> {
    chi_seeded(phi, rho, opts, &[])
}

pub fn chi_seeded(
    phi: &KrausChannel,
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
    warm: &[Ensemble],
) -> Result<OptimizerReport> {
    let mut rep = hhat_seeded(phi, rho, opts, warm)?;
    let h_out = output_entropy(phi, rho)?;
    rep.value = (h_out - rep.value).max(0.0);
    let ens = rep.certificate.ensemble().expect("hhat returns an ensemble");
    let holevo = ens.holevo_quantity(phi)?;
    rep.crosscheck = Some((holevo - rep.value).abs());
    Ok(rep)
}

/// `inf_ψ H(Φ(ψψ†)) + ⟨ψ|A|ψ⟩` over unit vectors.
pub fn nu_h(phi: &KrausChannel, a: &HermitianMatrix, opts: &OptimizerOptions) -> Result<OptimizerReport> {
    nu_h_seeded(phi, a, opts, &[])
}

pub fn nu_h_seeded(
    phi: &KrausChannel,
    a: &HermitianMatrix,
    opts: &OptimizerOptions,
    warm: &[CVec],
) -> Result<OptimizerReport> {
    let (results, seeds) = nu_h_all(phi, a, opts, warm)?;
    let best = best_index(&results);
    let psi: CVec = results[best].x.column(0).into_owned();
    let state = DensityMatrix::from_pure(&psi)?;
    let value = output_entropy(phi, &state)? + a.expectation(&state);
    Ok(report_from(
        value,
        Certificate::State(state),
        &results,
        &seeds,
        best,
        opts,
    ))
}

/// All local minima found by the `ν_H` search, in start order.
pub(crate) fn nu_h_all(
    phi: &KrausChannel,
    a: &HermitianMatrix,
    opts: &OptimizerOptions,
    warm: &[CVec],
) -> Result<(Vec<LocalResult>, Vec<u64>)> {
    if a.dim() != phi.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "observable dim {} vs channel input {}",
            a.dim(),
            phi.dim_in()
        )));
    }
    opts.validate()?;
    let d = phi.dim_in();
    let mut starts = Starts::new();
    for w in warm {
        if w.len() != d {
            return Err(Error::DimensionMismatch("warm-start vector dim".into()));
        }
        starts.push_warm(CMat::from_column_slice(d, 1, w.as_slice()));
    }
    let e = a.eigh();
    for j in (0..d).rev() {
        starts.push_warm(e.vectors.columns(j, 1).into_owned());
    }
    starts.push_random(opts, d, 1);
    let obj = PenalizedOutputEntropy {
        kernel: OutputEntropy::new(phi),
        a: a.matrix().clone(),
    };
    let mut results = multistart(&obj, &starts.points, &opts.local());
    let best = best_index(&results);
    polish(&obj, &mut results[best], opts);
    Ok((results, starts.seeds))
}

/// `H_min(Φ) = ν_H(Φ, 0)`.
pub fn min_output_entropy(phi: &KrausChannel, opts: &OptimizerOptions) -> Result<OptimizerReport> {
    nu_h(phi, &HermitianMatrix::zeros(phi.dim_in()), opts)
}

pub fn min_output_entropy_seeded(
    phi: &KrausChannel,
    opts: &OptimizerOptions,
    warm: &[CVec],
) -> Result<OptimizerReport> {
    nu_h_seeded(phi, &HermitianMatrix::zeros(phi.dim_in()), opts, warm)
}

const FEASIBILITY_TOL: f64 = 1e-8;
const MAX_OUTER: usize = 30;
const MU_MAX: f64 = 1e8;

/// Maximal `χ_Φ(ρ)` over states with `Tr Φ(ρ) H ≤ h`.
///
/// Ensembles are optimized jointly with their average by an augmented
/// Lagrangian method on the energy constraint: the multiplier is updated
/// after every inner solve and the penalty weight raised tenfold whenever
/// the violation fails to shrink by a factor of four. Any violation left
/// over is removed by mixing in the minimal-energy pure state. The best average is then polished with
/// [`chi`].
pub fn constrained_capacity(
    phi: &KrausChannel,
    h_obs: &HermitianMatrix,
    bound: f64,
    opts: &OptimizerOptions,
) -> Result<OptimizerReport> {
    opts.validate()?;
    if h_obs.dim() != phi.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "constraint observable dim {} vs channel output {}",
            h_obs.dim(),
            phi.dim_out()
        )));
    }
    let min_eig = h_obs.eigh().min();
    if min_eig < -linalg::tol::PSD {
        return Err(Error::NotPositive(min_eig));
    }
    let energy = phi.dual_observable(h_obs);
    let e = energy.eigh();
    let min_energy = e.min();
    if min_energy > bound + 1e-12 {
        return Err(Error::Infeasible { min_energy, bound });
    }
    let ground: CVec = e.vectors.column(e.dim() - 1).into_owned();
    let d = phi.dim_in();
    let atoms = opts.max_atoms.unwrap_or(d * d).max(d);
    let n = d * atoms;

    let mut starts = Starts::new();
    let mut uniform = CMat::zeros(d, atoms);
    for i in 0..d {
        uniform[(i, i)] = c(1.0 / (d as f64).sqrt(), 0.0);
    }
    starts.push_warm(CMat::from_column_slice(n, 1, uniform.as_slice()));
    let mut ground_start = CMat::zeros(d, atoms);
    ground_start.set_column(0, &ground);
    starts.push_warm(CMat::from_column_slice(n, 1, ground_start.as_slice()));
    starts.push_random(opts, n, 1);

    let local = opts.local();
    let candidates: Vec<Result<(f64, Ensemble, usize, f64)>> = starts
        .points
        .par_iter()
        .map(|x0| {
            let mut x = x0.clone();
            let mut lambda = 0.0;
            let mut mu = 10.0;
            let mut prev_violation = f64::INFINITY;
            let mut iterations = 0;
            let mut grad_norm;
            let mut atoms_mat;
            let mut outer = 0;
            loop {
                let obj = PenalizedHolevo {
                    phi,
                    kernel: OutputEntropy::new(phi),
                    dim: d,
                    atoms,
                    energy: energy.matrix().clone(),
                    bound,
                    lambda,
                    mu,
                };
                let res = minimize(&obj, &x, &local);
                iterations += res.iterations;
                grad_norm = res.grad_norm;
                x = res.x;
                atoms_mat = obj.unpack(&x);
                let g = obj.energy_of(&atoms_mat) - bound;
                let next = (lambda + mu * g).max(0.0);
                outer += 1;
                let settled = g <= FEASIBILITY_TOL && (next - lambda).abs() <= 1e-6 * (1.0 + lambda);
                if settled || outer >= MAX_OUTER {
                    break;
                }
                if g > 0.25 * prev_violation && mu < MU_MAX {
                    mu *= 10.0;
                }
                prev_violation = g.max(0.0);
                lambda = next;
            }
            let en = linalg::inner_re(&atoms_mat, &(energy.matrix() * &atoms_mat));
            if en > bound {
                let s = ((en - bound) / (en - min_energy)).clamp(0.0, 1.0);
                let mut widened = CMat::zeros(d, atoms + 1);
                widened
                    .columns_mut(0, atoms)
                    .copy_from(&(&atoms_mat * c((1.0 - s).sqrt(), 0.0)));
                widened.set_column(atoms, &(&ground * c(s.sqrt(), 0.0)));
                atoms_mat = widened;
            }
            let ens = ensemble_from_atoms(&atoms_mat)?;
            let value = ens.holevo_quantity(phi)?;
            Ok((value, ens, iterations, grad_norm))
        })
        .collect();
    let mut best: Option<(usize, f64, Ensemble, usize, f64)> = None;
    for (i, cand) in candidates.into_iter().enumerate() {
        let (value, ens, iters, gn) = cand?;
        if best.as_ref().is_none_or(|b| value > b.1) {
            best = Some((i, value, ens, iters, gn));
        }
    }
    let (best_i, joint_value, ens, iters, gn) = best.expect("at least one start");
    let state = ens.average();
    let polished = chi_seeded(phi, &state, opts, std::slice::from_ref(&ens))?;
    let (value, ensemble) = match polished.certificate {
        Certificate::Ensemble(e) if polished.value > joint_value => (polished.value, e),
        _ => (joint_value, ens),
    };
    Ok(OptimizerReport {
        value,
        certificate: Certificate::Constrained { state, ensemble },
        restarts_used: starts.points.len(),
        best_restart: best_i,
        best_restart_seed: starts.seeds[best_i],
        gradient_norm_at_exit: gn,
        iterations: iters,
        converged: true,
        crosscheck: None,
        seed: opts.seed,
    })
}

/// Derivative-free lower bound on `χ_Φ(ρ)` for `dim ≤ 3`.
///
/// Dense random sampling of Stiefel points with `rank²` atoms followed by
/// an adaptive random-perturbation polish. Values come from direct
/// evaluation of the induced ensembles, independent of the gradient code.
pub fn brute_force_chi(phi: &KrausChannel, rho: &DensityMatrix, samples: usize, seed: u64) -> Result<f64> {
    check_input(phi, rho)?;
    if rho.dim() > 3 {
        return Err(Error::InvalidArgument(format!(
            "brute force is limited to dim ≤ 3 (got {})",
            rho.dim()
        )));
    }
    let r = rho.rank();
    let h_out = von_neumann_entropy(&phi.apply(rho)?);
    if r == 1 {
        return Ok(0.0);
    }
    let m = r * r;
    let value = |v: &StiefelPoint| -> Result<f64> {
        let ens = decomposition_from_stiefel(rho, v)?;
        Ok(h_out - ens.mean_output_entropy(phi)?)
    };
    let mut rng = rng_from_seed(seed);
    let mut best = StiefelPoint::canonical(m, r)?;
    let mut best_val = value(&best)?;
    for _ in 0..samples {
        let v = StiefelPoint::random(m, r, &mut rng)?;
        let x = value(&v)?;
        if x > best_val {
            best = v;
            best_val = x;
        }
    }
    let mut step = 0.3;
    let polish = 4000 + samples;
    for _ in 0..polish {
        let dir = gaussian_matrix(m, r, &mut rng);
        let cand = StiefelPoint::from_unchecked(linalg::orthonormalize(
            &(best.matrix() + dir * c(step, 0.0)),
        ));
        let x = value(&cand)?;
        if x > best_val {
            best = cand;
            best_val = x;
            step = (step * 1.5).min(1.0);
        } else {
            step = (step * 0.93).max(1e-9);
        }
    }
    Ok(best_val.max(0.0))
}
