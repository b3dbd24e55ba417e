//! Randomized property checks over the whole library.
//!
//! Each [`PropertyCase`] samples inputs from a per-trial seed and returns a
//! pair `(lhs, rhs)` that must satisfy `lhs ≤ rhs + tol`. Optimizer-backed
//! cases get a warning band: violations up to `2·TOL_OPT` are reported as
//! warnings (optimization gap), anything beyond as failures. Exact cases
//! have no band.
//!
//! Trial `k` of case `c` uses seed `derive_seed(derive_seed(seed, c), k)`,
//! so a single trial can be replayed with [`replay`].

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::additivity::nu_additivity_gap;
use crate::channel::{compose_channel, KrausChannel, Subsystem};
use crate::duality::{duality_check, AscentOptions, DEFAULT_GAP_TOL};
use crate::entropy::{donald_residual, state_relative_entropy, DonaldOutcome};
use crate::eof::{eof, random_separable, BipartiteState};
use crate::error::{Error, Result};
use crate::optimize::{chi, hhat, OptimizerOptions};
use crate::random::{channel_with, derive_seed, hermitian_with, rng_from_seed, state_with, SeededRng};
use crate::states::{DensityMatrix, Ensemble};
use crate::sweeps::{csv_float, truncation_sweep};

pub const TOL_OPT: f64 = 1e-4;

/// Outcome of one trial: `lhs ≤ rhs` is the property.
#[derive(Clone, Debug)]
pub struct Sample {
    pub lhs: f64,
    pub rhs: f64,
    pub inputs: String,
}

type TrialFn = fn(&mut SeededRng, &OptimizerOptions) -> Result<Sample>;

#[derive(Clone, Copy)]
pub struct PropertyCase {
    pub name: &'static str,
    pub statement: &'static str,
    /// Slack for a pass.
    pub tol: f64,
    /// Extra slack reported as a warning instead of a failure.
    pub warn_band: f64,
    /// The case runs `trials / trials_divisor` trials (at least one).
    pub trials_divisor: usize,
    run: TrialFn,
}

impl PropertyCase {
    pub fn trials_for(&self, trials: usize) -> usize {
        (trials / self.trials_divisor).max(1)
    }
}

impl std::fmt::Debug for PropertyCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PropertyCase")
            .field("name", &self.name)
            .field("tol", &self.tol)
            .finish()
    }
}

fn dim<R: Rng>(rng: &mut R) -> usize {
    rng.random_range(2..=3)
}

fn channel<R: Rng>(din: usize, rng: &mut R) -> Result<KrausChannel> {
    let dout = rng.random_range(2..=3);
    let env = rng.random_range(1..=3).max(din.div_ceil(dout));
    channel_with(din, dout, env, rng)
}

fn full_rank_state<R: Rng>(d: usize, rng: &mut R) -> Result<DensityMatrix> {
    state_with(d, d, rng)
}

fn any_rank_state<R: Rng>(d: usize, rng: &mut R) -> Result<DensityMatrix> {
    let r = rng.random_range(1..=d);
    state_with(d, r, rng)
}

fn describe(phi: &KrausChannel) -> String {
    format!("{}->{} channel, {} Kraus", phi.dim_in(), phi.dim_out(), phi.num_kraus())
}

fn chi_concavity(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let d = dim(rng);
    let phi = channel(d, rng)?;
    let rho = any_rank_state(d, rng)?;
    let sigma = any_rank_state(d, rng)?;
    let t: f64 = rng.random_range(0.05..0.95);
    let mix = rho.mix(&sigma, t)?;
    let lhs = t * chi(&phi, &rho, opts)?.value + (1.0 - t) * chi(&phi, &sigma, opts)?.value;
    Ok(Sample {
        lhs,
        rhs: chi(&phi, &mix, opts)?.value,
        inputs: format!("{}, t = {t:.4}", describe(&phi)),
    })
}

fn hhat_convexity(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let d = dim(rng);
    let phi = channel(d, rng)?;
    let rho = any_rank_state(d, rng)?;
    let sigma = any_rank_state(d, rng)?;
    let t: f64 = rng.random_range(0.05..0.95);
    let mix = rho.mix(&sigma, t)?;
    Ok(Sample {
        lhs: hhat(&phi, &mix, opts)?.value,
        rhs: t * hhat(&phi, &rho, opts)?.value + (1.0 - t) * hhat(&phi, &sigma, opts)?.value,
        inputs: format!("{}, t = {t:.4}", describe(&phi)),
    })
}

fn composed<R: Rng>(rng: &mut R) -> Result<(KrausChannel, KrausChannel, DensityMatrix)> {
    let d = dim(rng);
    let phi = channel(d, rng)?;
    let psi = channel(phi.dim_out(), rng)?;
    let rho = any_rank_state(d, rng)?;
    Ok((phi, psi, rho))
}

fn chain_outer(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let (phi, psi, rho) = composed(rng)?;
    Ok(Sample {
        lhs: chi(&compose_channel(&psi, &phi)?, &rho, opts)?.value,
        rhs: chi(&phi, &rho, opts)?.value,
        inputs: format!("inner {}, outer {}", describe(&phi), describe(&psi)),
    })
}

fn chain_inner(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let (phi, psi, rho) = composed(rng)?;
    let out = phi.apply(&rho)?;
    Ok(Sample {
        lhs: chi(&compose_channel(&psi, &phi)?, &rho, opts)?.value,
        rhs: chi(&psi, &out, opts)?.value,
        inputs: format!("inner {}, outer {}", describe(&phi), describe(&psi)),
    })
}

fn donald_identity(rng: &mut SeededRng, _: &OptimizerOptions) -> Result<Sample> {
    let d = dim(rng);
    let k = rng.random_range(1..=4);
    let members = (0..k)
        .map(|_| -> Result<(f64, DensityMatrix)> { Ok((rng.random_range(0.1..1.0), any_rank_state(d, rng)?)) })
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = members.iter().map(|(w, _)| w).sum();
    let ens = Ensemble::new(members.into_iter().map(|(w, s)| (w / total, s)).collect())?;
    let sigma = full_rank_state(d, rng)?;
    let residual = match donald_residual(&ens, &sigma)? {
        DonaldOutcome::Residual { residual, .. } => residual,
        DonaldOutcome::Infinite => return Err(Error::InfiniteRelativeEntropy),
    };
    Ok(Sample {
        lhs: residual,
        rhs: 0.0,
        inputs: format!("dim {d}, {k} atoms"),
    })
}

fn relative_entropy_monotone(rng: &mut SeededRng, _: &OptimizerOptions) -> Result<Sample> {
    let d = dim(rng);
    let phi = channel(d, rng)?;
    let rho = any_rank_state(d, rng)?;
    let sigma = full_rank_state(d, rng)?;
    let before = state_relative_entropy(&rho, &sigma)?.to_f64();
    let after = state_relative_entropy(&phi.apply(&rho)?, &phi.apply(&sigma)?)?.to_f64();
    Ok(Sample {
        lhs: after,
        rhs: before,
        inputs: describe(&phi),
    })
}

fn relative_entropy_nonnegative(rng: &mut SeededRng, _: &OptimizerOptions) -> Result<Sample> {
    let d = dim(rng);
    let rho = any_rank_state(d, rng)?;
    let sigma = full_rank_state(d, rng)?;
    Ok(Sample {
        lhs: 0.0,
        rhs: state_relative_entropy(&rho, &sigma)?.to_f64(),
        inputs: format!("dim {d}"),
    })
}

fn chi_log_dim(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let d = dim(rng);
    let phi = channel(d, rng)?;
    let rho = any_rank_state(d, rng)?;
    Ok(Sample {
        lhs: chi(&phi, &rho, opts)?.value,
        rhs: (d as f64).ln(),
        inputs: describe(&phi),
    })
}

fn certificate_residual(phi: &KrausChannel, rho: &DensityMatrix, opts: &OptimizerOptions) -> Result<f64> {
    let rep = hhat(phi, rho, opts)?;
    let ens = rep.certificate.ensemble().expect("hhat returns an ensemble");
    let reeval = (ens.mean_output_entropy(phi)? - rep.value).abs();
    let avg = ens.average().trace_distance(rho);
    let holevo = chi(phi, rho, opts)?.crosscheck.unwrap_or(0.0);
    Ok(reeval.max(holevo).max(if avg > 1e-10 { avg } else { 0.0 }))
}

fn certificate_reevaluation(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let d = dim(rng);
    let phi = channel(d, rng)?;
    let rho = any_rank_state(d, rng)?;
    Ok(Sample {
        lhs: certificate_residual(&phi, &rho, opts)?,
        rhs: 0.0,
        inputs: describe(&phi),
    })
}

fn certificate_reevaluation_dim4(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let phi = channel(4, rng)?;
    let rho = any_rank_state(4, rng)?;
    Ok(Sample {
        lhs: certificate_residual(&phi, &rho, opts)?,
        rhs: 0.0,
        inputs: describe(&phi),
    })
}

fn truncation_bound(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let d = dim(rng);
    let phi = channel(d, rng)?;
    let rho = full_rank_state(d, rng)?;
    let sweep = truncation_sweep(&phi, &rho, opts)?;
    let worst = sweep
        .rows
        .iter()
        .map(|r| r.mass * r.chi)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Sample {
        lhs: worst,
        rhs: sweep.chi_full,
        inputs: describe(&phi),
    })
}

fn nu_subadditivity(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let phi = channel(2, rng)?;
    let psi = channel(2, rng)?;
    let a = hermitian_with(2, rng);
    let b = hermitian_with(2, rng);
    let rep = nu_additivity_gap(&phi, &psi, &a, &b, opts)?;
    Ok(Sample {
        lhs: rep.lhs,
        rhs: rep.rhs,
        inputs: format!("{} and {}", describe(&phi), describe(&psi)),
    })
}

fn weak_duality(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let phi = channel(2, rng)?;
    let rho = any_rank_state(2, rng)?;
    let rep = duality_check(&phi, &rho, opts, &AscentOptions::default(), DEFAULT_GAP_TOL)?;
    Ok(Sample {
        lhs: rep.hstarstar_value,
        rhs: rep.hhat_value,
        inputs: describe(&phi),
    })
}

fn separable_zero(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let k = rng.random_range(2..=8);
    let omega: BipartiteState = random_separable(2, 2, k, rng)?;
    Ok(Sample {
        lhs: eof(&omega, opts)?.value,
        rhs: 0.0,
        inputs: format!("2x2 mixture of {k} product states"),
    })
}

fn eof_marginal_bound(rng: &mut SeededRng, opts: &OptimizerOptions) -> Result<Sample> {
    let omega = BipartiteState::new(any_rank_state(4, rng)?, 2, 2)?;
    let bound = crate::entropy::von_neumann_entropy(&omega.marginal(Subsystem::A))
        .min(crate::entropy::von_neumann_entropy(&omega.marginal(Subsystem::B)));
    Ok(Sample {
        lhs: eof(&omega, opts)?.value,
        rhs: bound,
        inputs: "2x2 state".into(),
    })
}

const OPT_BAND: f64 = 2.0 * TOL_OPT;

/// Every case of the suite, in report order.
pub fn cases() -> Vec<PropertyCase> {
    let c = |name, statement, tol, warn_band, trials_divisor, run| PropertyCase {
        name,
        statement,
        tol,
        warn_band,
        trials_divisor,
        run,
    };
    vec![
        c("chi_concavity", "t·χ(ρ) + (1−t)·χ(σ) ≤ χ(tρ + (1−t)σ)", 1e-9, OPT_BAND, 1, chi_concavity as TrialFn),
        c("hhat_convexity", "Ĥ(tρ + (1−t)σ) ≤ t·Ĥ(ρ) + (1−t)·Ĥ(σ)", 1e-9, OPT_BAND, 1, hhat_convexity),
        c("chain_outer", "χ(Ψ∘Φ, ρ) ≤ χ(Φ, ρ)", 1e-9, OPT_BAND, 1, chain_outer),
        c("chain_inner", "χ(Ψ∘Φ, ρ) ≤ χ(Ψ, Φ(ρ))", 1e-9, OPT_BAND, 1, chain_inner),
        c("donald_identity", "Donald identity residual ≤ 1e-9", 1e-9, 0.0, 1, donald_identity),
        c("relative_entropy_monotone", "H(Φρ‖Φσ) ≤ H(ρ‖σ)", 1e-9, 0.0, 1, relative_entropy_monotone),
        c("relative_entropy_nonnegative", "0 ≤ H(ρ‖σ)", 1e-12, 0.0, 1, relative_entropy_nonnegative),
        c("chi_log_dim", "χ(ρ) ≤ log dim", 1e-9, 0.0, 1, chi_log_dim),
        c("certificate_reevaluation", "certificate re-evaluation residual ≤ 1e-8", 1e-8, 0.0, 1, certificate_reevaluation),
        c("certificate_reevaluation_dim4", "certificate re-evaluation residual ≤ 1e-8 at dim 4", 1e-8, 0.0, 4, certificate_reevaluation_dim4),
        c("truncation_bound", "λ_n·χ(ρ_n) ≤ χ(ρ)", TOL_OPT, 0.0, 1, truncation_bound),
        c("nu_subadditivity", "ν(Φ⊗Ψ, A⊗I + I⊗B) ≤ ν(Φ, A) + ν(Ψ, B)", TOL_OPT, 0.0, 1, nu_subadditivity),
        c("weak_duality", "H**(ρ) ≤ Ĥ(ρ)", 1e-8, 0.0, 1, weak_duality),
        c("separable_zero", "EoF of a separable mixture ≤ 1e-6", 1e-6, OPT_BAND, 1, separable_zero),
        c("eof_marginal_bound", "EoF ≤ min marginal entropy", 1e-9, OPT_BAND, 1, eof_marginal_bound),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Warn,
    Fail,
    Error,
}

impl Status {
    fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`; positive values violate the property.
    pub violation: f64,
    pub status: Status,
    pub inputs: String,
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub name: &'static str,
    pub statement: &'static str,
    pub trials: Vec<TrialRecord>,
}

impl CaseReport {
    pub fn count(&self, s: Status) -> usize {
        self.trials.iter().filter(|t| t.status == s).count()
    }

    pub fn worst_violation(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.violation)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// No failures and no errors.
    pub fn passed(&self) -> bool {
        self.count(Status::Fail) + self.count(Status::Error) == 0
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub seed: u64,
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(CaseReport::passed)
    }

    pub fn case(&self, name: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.name == name)
    }

    /// One row per trial.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("case,trial,seed,lhs,rhs,violation,status\n");
        for c in &self.cases {
            for t in &c.trials {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    c.name,
                    t.trial,
                    t.seed,
                    csv_float(t.lhs),
                    csv_float(t.rhs),
                    csv_float(t.violation),
                    t.status.as_str()
                )
                .expect("writing to a String");
            }
        }
        s
    }

    pub fn summary_table(&self) -> String {
        let width = self.cases.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
        let mut s = format!(
            "{:<width$}  {:>6}  {:>5}  {:>5}  {:>5}  {:>5}  {:>12}\n",
            "case", "trials", "pass", "warn", "fail", "error", "worst"
        );
        for c in &self.cases {
            writeln!(
                s,
                "{:<width$}  {:>6}  {:>5}  {:>5}  {:>5}  {:>5}  {:>12.3e}",
                c.name,
                c.trials.len(),
                c.count(Status::Pass),
                c.count(Status::Warn),
                c.count(Status::Fail),
                c.count(Status::Error),
                c.worst_violation()
            )
            .expect("writing to a String");
            for t in c.trials.iter().filter(|t| matches!(t.status, Status::Fail | Status::Error)) {
                writeln!(
                    s,
                    "    {} trial {} seed {}: violation {:.3e} ({})",
                    t.status.as_str(),
                    t.trial,
                    t.seed,
                    t.violation,
                    t.inputs
                )
                .expect("writing to a String");
            }
        }
        s
    }
}

fn trial_seed(seed: u64, case_index: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(seed, case_index as u64), trial as u64)
}

fn run_trial(case: &PropertyCase, trial: usize, seed: u64, opts: &OptimizerOptions) -> TrialRecord {
    let mut rng = rng_from_seed(seed);
    match (case.run)(&mut rng, opts) {
        Ok(sample) => {
            let violation = sample.lhs - sample.rhs;
            let status = if violation <= case.tol {
                Status::Pass
            } else if violation <= case.tol + case.warn_band {
                Status::Warn
            } else {
                Status::Fail
            };
            TrialRecord {
                trial,
                seed,
                lhs: sample.lhs,
                rhs: sample.rhs,
                violation,
                status,
                inputs: sample.inputs,
            }
        }
        Err(e) => TrialRecord {
            trial,
            seed,
            lhs: f64::NAN,
            rhs: f64::NAN,
            violation: f64::NAN,
            status: Status::Error,
            inputs: e.to_string(),
        },
    }
}

/// Optimizer settings used inside the suite.
pub fn suite_options(seed: u64) -> OptimizerOptions {
    OptimizerOptions::default().with_restarts(8).with_seed(seed)
}

/// Run every case; `trials` is the per-case count before each case's
/// divisor is applied.
pub fn run_suite(seed: u64, trials: usize) -> SuiteReport {
    run_cases(&cases(), seed, trials, &suite_options(seed))
}

pub fn run_cases(cases: &[PropertyCase], seed: u64, trials: usize, opts: &OptimizerOptions) -> SuiteReport {
    let all = self::cases();
    let reports = cases
        .par_iter()
        .map(|case| {
            let index = all.iter().position(|c| c.name == case.name).unwrap_or(usize::MAX);
            let n = case.trials_for(trials);
            let trials = (0..n)
                .into_par_iter()
                .map(|k| run_trial(case, k, trial_seed(seed, index, k), opts))
                .collect();
            CaseReport {
                name: case.name,
                statement: case.statement,
                trials,
            }
        })
        .collect();
    SuiteReport { seed, cases: reports }
}

/// Rerun one trial from the seed printed in a report.
pub fn replay(name: &str, trial_seed: u64, opts: &OptimizerOptions) -> Result<TrialRecord> {
    let case = cases()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown property case {name:?}")))?;
    Ok(run_trial(&case, 0, trial_seed, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let a = run_suite(3, 2);
        let b = run_suite(3, 2);
        assert!(a.passed(), "{}", a.summary_table());
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.cases.len(), cases().len());
    }

    #[test]
    fn replay_reproduces_a_trial() {
        let r = run_suite(5, 1);
        let c = r.case("chi_concavity").unwrap();
        let t = &c.trials[0];
        let again = replay("chi_concavity", t.seed, &suite_options(5)).unwrap();
        assert_eq!(again.lhs.to_bits(), t.lhs.to_bits());
        assert!(replay("nope", 0, &suite_options(0)).is_err());
    }

    #[test]
    fn statuses_follow_bands() {
        fn bad(_: &mut SeededRng, _: &OptimizerOptions) -> Result<Sample> {
            Ok(Sample { lhs: 1.5e-4, rhs: 0.0, inputs: String::new() })
        }
        let mut case = cases()[0];
        case.run = bad;
        assert_eq!(run_trial(&case, 0, 1, &suite_options(0)).status, Status::Warn);
        case.warn_band = 0.0;
        assert_eq!(run_trial(&case, 0, 1, &suite_options(0)).status, Status::Fail);
    }
}
