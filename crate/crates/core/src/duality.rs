//! Fenchel conjugate of the output entropy and its double conjugate.
//!
//! With `H*(A) = sup_ρ (Tr Aρ − H(Φ(ρ)))`, the double conjugate at `ρ` is
//! `sup_A f(A)` where
//!
//! `f(A) = Tr Aρ − H*(A) = min_ψ H(Φ(ψψ†)) + Tr A(ρ − ψψ†)`.
//!
//! `f` is concave, and `ρ − ψψ†` is a supergradient for every inner
//! minimizer `ψ`. The ascent steps along the minimum-norm element of the
//! convex hull of the supergradients of all near-optimal inner minimizers,
//! which handles the kinks where several minimizers compete.

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::optimize::{hhat, nu_h, nu_h_all, OptimizerOptions, OptimizerReport};
use crate::states::{DensityMatrix, HermitianMatrix};

/// `H*(A) = −ν_H(Φ, −A)`.
pub fn fenchel_star(phi: &KrausChannel, a: &HermitianMatrix, opts: &OptimizerOptions) -> Result<f64> {
    let neg = HermitianMatrix::from_hermitian_part(&(-a.matrix()));
    Ok(-nu_h(phi, &neg, opts)?.value)
}

/// Settings of the supergradient ascent.
#[derive(Clone, Debug, PartialEq)]
pub struct AscentOptions {
    pub max_iters: usize,
    /// Stop once the best step gains less than this.
    pub min_gain: f64,
    /// Initial operator-norm radius; `None` uses `4·log(d_out) + 10`.
    pub radius: Option<f64>,
    /// Radius doublings allowed before the run is flagged.
    pub max_expansions: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            min_gain: 1e-9,
            radius: None,
            max_expansions: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AscentReport {
    pub value: f64,
    /// Dual point attaining `value`.
    pub witness: HermitianMatrix,
    /// Objective after every accepted step, starting at `A = 0`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Final operator-norm radius.
    pub radius: f64,
    /// The iteration budget or the radius budget ran out.
    pub stagnated: bool,
}

struct Evaluation {
    value: f64,
    /// Inner minimizers within the activity window, best first.
    active: Vec<CVec>,
    /// Every distinct local minimizer, kept as warm starts.
    minimizers: Vec<CVec>,
}

fn same_ray(a: &CVec, b: &CVec) -> bool {
    a.dotc(b).norm() > 1.0 - 1e-10
}

fn evaluate(
    phi: &KrausChannel,
    rho: &DensityMatrix,
    a: &CMat,
    window: f64,
    opts: &OptimizerOptions,
    warm: &[CVec],
) -> Result<Evaluation> {
    let neg = HermitianMatrix::from_hermitian_part(&(-a));
    let (results, _) = nu_h_all(phi, &neg, opts, warm)?;
    let shift = linalg::inner_re(a, rho.matrix());
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&i, &j| results[i].value.total_cmp(&results[j].value).then(i.cmp(&j)));
    let best = results[order[0]].value;
    let mut minimizers: Vec<CVec> = Vec::new();
    let mut active = Vec::new();
    for &i in &order {
        let psi: CVec = results[i].x.column(0).into_owned();
        if minimizers.iter().any(|m| same_ray(m, &psi)) {
            continue;
        }
        if results[i].value <= best + window {
            active.push(psi.clone());
        }
        minimizers.push(psi);
    }
    Ok(Evaluation {
        value: shift + best,
        active,
        minimizers,
    })
}

/// Minimum-norm point of the convex hull of `points` (Frank-Wolfe with
/// exact line search on the Gram matrix).
fn min_norm_combination(points: &[CMat]) -> CMat {
    let k = points.len();
    let gram: Vec<Vec<f64>> = points
        .iter()
        .map(|p| points.iter().map(|q| linalg::inner_re(p, q)).collect())
        .collect();
    let mut w = vec![0.0; k];
    let start = (0..k)
        .min_by(|&i, &j| gram[i][i].total_cmp(&gram[j][j]))
        .expect("nonempty");
    w[start] = 1.0;
    for _ in 0..2000 {
        // Gradient of ‖Σ w_i p_i‖²/2 is G w.
        let gw: Vec<f64> = (0..k).map(|i| (0..k).map(|j| gram[i][j] * w[j]).sum()).collect();
        let s = (0..k).min_by(|&i, &j| gw[i].total_cmp(&gw[j])).expect("nonempty");
        let wgw: f64 = (0..k).map(|i| w[i] * gw[i]).sum();
        let gap = wgw - gw[s];
        if gap <= 1e-15 {
            break;
        }
        // Exact step along e_s − w.
        let denom = wgw - 2.0 * gw[s] + gram[s][s];
        let t = if denom > 0.0 { (gap / denom).clamp(0.0, 1.0) } else { 1.0 };
        for (i, wi) in w.iter_mut().enumerate() {
            *wi *= 1.0 - t;
            if i == s {
                *wi += t;
            }
        }
    }
    let mut d = CMat::zeros(points[0].nrows(), points[0].ncols());
    for (p, wi) in points.iter().zip(&w) {
        d += p * c(*wi, 0.0);
    }
    d
}

const ARMIJO: f64 = 1e-4;
const WINDOW_START: f64 = 1e-2;
const WINDOW_MIN: f64 = 1e-9;
const STEP_MIN: f64 = 1e-10;

/// `sup_A Tr Aρ − H*(A)` by ε-steepest supergradient ascent from `A = 0`.
///
/// Each trial step starts at length 1 and is halved until an Armijo-type
/// gain is obtained. If no step is accepted the activity window `ε` is
/// shrunk tenfold; the run ends when the window bottoms out, when the gain
/// falls below `min_gain`, or after `max_iters` steps.
pub fn double_fenchel(
    phi: &KrausChannel,
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
    ascent: &AscentOptions,
) -> Result<AscentReport> {
    double_fenchel_seeded(phi, rho, opts, ascent, &[])
}

/// [`double_fenchel`] with extra warm starts for the inner minimization.
pub fn double_fenchel_seeded(
    phi: &KrausChannel,
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
    ascent: &AscentOptions,
    warm: &[CVec],
) -> Result<AscentReport> {
    if rho.dim() != phi.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs channel input {}",
            rho.dim(),
            phi.dim_in()
        )));
    }
    let d = rho.dim();
    let mut radius = ascent
        .radius
        .unwrap_or(4.0 * (phi.dim_out() as f64).ln() + 10.0);
    let mut expansions = 0;
    let mut a = CMat::zeros(d, d);
    let mut seeds: Vec<CVec> = warm.to_vec();
    let mut window = WINDOW_START;
    let mut cur = evaluate(phi, rho, &a, window, opts, &seeds)?;
    let mut trace = vec![cur.value];
    let mut iterations = 0;
    let mut stagnated = false;

    loop {
        if iterations >= ascent.max_iters {
            stagnated = true;
            break;
        }
        let grads: Vec<CMat> = cur
            .active
            .iter()
            .map(|psi| rho.matrix() - linalg::projector(psi))
            .collect();
        let dir = min_norm_combination(&grads);
        let dn2 = linalg::inner_re(&dir, &dir);
        if dn2.sqrt() < 1e-12 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t >= STEP_MIN {
            let cand = &a + &dir * c(t, 0.0);
            if linalg::op_norm(&cand) > radius {
                if expansions < ascent.max_expansions {
                    radius *= 2.0;
                    expansions += 1;
                } else {
                    t *= 0.5;
                    continue;
                }
            }
            let mut warm_now = cur.minimizers.clone();
            warm_now.extend(seeds.iter().cloned());
            let next = evaluate(phi, rho, &cand, window, opts, &warm_now)?;
            if next.value >= cur.value + ARMIJO * t * dn2 {
                accepted = Some((cand, next));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, next)) => {
                let gain = next.value - cur.value;
                seeds = cur.minimizers.clone();
                a = cand;
                cur = next;
                trace.push(cur.value);
                if gain < ascent.min_gain {
                    break;
                }
            }
            None => {
                window *= 0.1;
                if window < WINDOW_MIN {
                    break;
                }
                cur = evaluate(phi, rho, &a, window, opts, &cur.minimizers)?;
            }
        }
    }
    if expansions >= ascent.max_expansions && linalg::op_norm(&a) > 0.5 * radius {
        stagnated = true;
    }
    Ok(AscentReport {
        value: cur.value,
        witness: HermitianMatrix::from_hermitian_part(&a),
        trace,
        iterations,
        radius,
        stagnated,
    })
}

#[derive(Clone, Debug)]
pub struct DualityReport {
    pub hhat_value: f64,
    pub hstarstar_value: f64,
    /// `hhat_value − hstarstar_value`.
    pub gap: f64,
    pub witness_a: HermitianMatrix,
    pub hhat_report: OptimizerReport,
    pub ascent: AscentReport,
    pub gap_tol: f64,
}

impl DualityReport {
    /// `gap ∈ [−1e-8, gap_tol]`.
    pub fn within_tolerance(&self) -> bool {
        self.gap >= -WEAK_DUALITY_SLACK && self.gap <= self.gap_tol
    }
}

pub const WEAK_DUALITY_SLACK: f64 = 1e-8;
pub const DEFAULT_GAP_TOL: f64 = 5e-2;

/// Compare `Ĥ_Φ(ρ)` with its double Fenchel transform.
///
/// The inner minimizations of the ascent are warm-started with the atoms
/// of the `Ĥ` certificate, which are exactly the minimizers at the optimal
/// dual point.
pub fn duality_check(
    phi: &KrausChannel,
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
    ascent: &AscentOptions,
    gap_tol: f64,
) -> Result<DualityReport> {
    let primal = hhat(phi, rho, opts)?;
    let warm: Vec<CVec> = primal
        .certificate
        .ensemble()
        .expect("hhat returns an ensemble")
        .iter()
        .map(|(_, s)| s.eigh().vectors.column(0).into_owned())
        .collect();
    let dual = double_fenchel_seeded(phi, rho, opts, ascent, &warm)?;
    Ok(DualityReport {
        hhat_value: primal.value,
        hstarstar_value: dual.value,
        gap: primal.value - dual.value,
        witness_a: dual.witness.clone(),
        hhat_report: primal,
        ascent: dual,
        gap_tol,
    })
}
