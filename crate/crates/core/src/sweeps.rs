//! Batch drivers over spectral truncations `ρ_n` of a state.
//!
//! [`truncation_sweep`] computes `χ_Φ(ρ_n)` for every `n` up to the rank
//! and checks `λ_n χ_Φ(ρ_n) ≤ χ_Φ(ρ)`. [`optimal_ensemble_track`] follows
//! the optimal ensembles of the truncations, transports each one to an
//! ensemble of the full state and records how much of `χ_Φ(ρ)` it attains.
//!
//! The full-rank search is warm-started from every truncation level with
//! `λ_n·E_n ∪ (1 − λ_n)·(eigen-ensemble of the remainder)`, where `E_n` is
//! the optimal ensemble of `ρ_n`, and with the transported `E_n`. The first
//! has Holevo quantity at least `λ_n χ_Φ(ρ_n)` by concavity of the entropy,
//! so the bound is never lost to a poor local optimum at full rank.

use crate::channel::KrausChannel;
use crate::decompositions::{transport_ensemble, truncation_sweep_inputs, TruncationLevel};
use crate::entropy::output_entropy;
use crate::error::{Error, Result};
use crate::optimize::{chi, chi_seeded, OptimizerOptions, OptimizerReport};
use crate::states::{DensityMatrix, Ensemble};

/// Slack in the truncation bound.
pub const BOUND_TOL: f64 = 1e-4;

/// Floats in CSV output carry 12 significant digits.
pub fn csv_float(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub n: usize,
    /// `λ_n = Tr P_n ρ`.
    pub mass: f64,
    pub chi: f64,
    pub hhat: f64,
    pub bound_ok: bool,
    pub report: OptimizerReport,
}

#[derive(Clone, Debug)]
pub struct TruncationSweep {
    pub rows: Vec<SweepRow>,
    pub chi_full: f64,
    pub levels: Vec<TruncationLevel>,
}

impl TruncationSweep {
    pub const CSV_HEADER: &'static str = "n,lambda_n,chi_n,hhat_n,bound_ok";

    pub fn all_bounds_ok(&self) -> bool {
        self.rows.iter().all(|r| r.bound_ok)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n,
                csv_float(r.mass),
                csv_float(r.chi),
                csv_float(r.hhat),
                r.bound_ok
            ));
        }
        s
    }
}

fn certificate(rep: &OptimizerReport) -> &Ensemble {
    rep.certificate.ensemble().expect("chi returns an ensemble")
}

fn check_input(phi: &KrausChannel, rho: &DensityMatrix) -> Result<()> {
    if phi.dim_in() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs channel input {}",
            rho.dim(),
            phi.dim_in()
        )));
    }
    Ok(())
}

/// `χ_Φ(ρ_n)` for `n = 1..=rank(ρ)`; the last row is the full state.
pub fn truncation_sweep(phi: &KrausChannel, rho: &DensityMatrix, opts: &OptimizerOptions) -> Result<TruncationSweep> {
    check_input(phi, rho)?;
    let levels = truncation_sweep_inputs(rho)?;
    let r = levels.len();
    let mut partial = Vec::with_capacity(r);
    for level in &levels[..r - 1] {
        partial.push(chi(phi, &level.state, opts)?);
    }

    let mut warm = Vec::new();
    for (level, rep) in levels.iter().zip(&partial) {
        let cert = certificate(rep);
        let rest = rho.matrix() - level.state.matrix() * crate::linalg::c(level.mass, 0.0);
        let rest = DensityMatrix::from_matrix_unchecked(rest);
        warm.push(cert.mixture(&Ensemble::spectral(&rest), level.mass)?);
        if let Ok(t) = transport_ensemble(cert, rho) {
            warm.push(t);
        }
    }
    let full = chi_seeded(phi, rho, opts, &warm)?;
    let chi_full = full.value;
    partial.push(full);

    let rows = levels
        .iter()
        .zip(partial)
        .map(|(level, rep)| -> Result<SweepRow> {
            let h_out = output_entropy(phi, &level.state)?;
            Ok(SweepRow {
                n: level.n,
                mass: level.mass,
                chi: rep.value,
                hhat: (h_out - rep.value).max(0.0),
                bound_ok: level.mass * rep.value <= chi_full + BOUND_TOL,
                report: rep,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncationSweep { rows, chi_full, levels })
}

#[derive(Clone, Debug)]
pub struct TrackRow {
    pub n: usize,
    pub mass: f64,
    /// `‖ρ̄_n − ρ‖₁` for the average `ρ̄_n` of the optimal ensemble of `ρ_n`.
    pub distance: f64,
    pub chi_n: f64,
    /// Holevo quantity of the optimal ensemble of `ρ_n` transported to `ρ`.
    pub transported_holevo: f64,
    pub atoms: usize,
    /// `transported_holevo` has not dropped by more than `BOUND_TOL`
    /// relative to the best earlier row.
    pub trend_ok: bool,
}

#[derive(Clone, Debug)]
pub struct EnsembleTrack {
    pub rows: Vec<TrackRow>,
    pub chi_full: f64,
}

impl EnsembleTrack {
    pub const CSV_HEADER: &'static str =
        "n,lambda_n,trace_distance,chi_n,transported_holevo,chi_full,atoms,trend_ok";

    pub fn trend_ok(&self) -> bool {
        self.rows.iter().all(|r| r.trend_ok)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.n,
                csv_float(r.mass),
                csv_float(r.distance),
                csv_float(r.chi_n),
                csv_float(r.transported_holevo),
                csv_float(self.chi_full),
                r.atoms,
                r.trend_ok
            ));
        }
        s
    }
}

/// Follow the optimal ensembles of the truncations of `ρ`.
pub fn optimal_ensemble_track(phi: &KrausChannel, rho: &DensityMatrix, opts: &OptimizerOptions) -> Result<EnsembleTrack> {
    let sweep = truncation_sweep(phi, rho, opts)?;
    let mut rows = Vec::with_capacity(sweep.rows.len());
    let mut best = f64::NEG_INFINITY;
    for row in &sweep.rows {
        let cert = certificate(&row.report);
        let transported = transport_ensemble(cert, rho)?;
        let achieved = transported.holevo_quantity(phi)?;
        let trend_ok = achieved >= best - BOUND_TOL;
        best = best.max(achieved);
        rows.push(TrackRow {
            n: row.n,
            mass: row.mass,
            distance: cert.average().trace_distance(rho),
            chi_n: row.chi,
            transported_holevo: achieved,
            atoms: cert.len(),
            trend_ok,
        });
    }
    Ok(EnsembleTrack {
        rows,
        chi_full: sweep.chi_full,
    })
}
