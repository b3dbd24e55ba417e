//! Riemannian conjugate gradient on the complex Stiefel manifold
//! `{X ∈ C^{m×r} : X†X = I}` with the embedded metric `Re Tr(A†B)`,
//! QR retraction and projection-based vector transport. The unit sphere
//! is the case `r = 1`.

use rayon::prelude::*;

use crate::linalg::{self, c, CMat};

/// Smooth real function of a complex matrix.
///
/// When `grad` is provided it receives the Euclidean gradient `G` defined by
/// `df = Re Tr(G† dX)`.
pub(crate) trait Objective: Sync {
    fn eval(&self, x: &CMat, grad: Option<&mut CMat>) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LocalSettings {
    pub max_iters: usize,
    pub step_tol: f64,
    pub value_tol: f64,
    pub grad_tol: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct LocalResult {
    pub x: CMat,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &CMat, g: &CMat) -> CMat {
    let xg = x.adjoint() * g;
    g - x * linalg::hermitian_part(&xg)
}

fn retract(x: &CMat, d: &CMat, t: f64) -> CMat {
    linalg::orthonormalize(&(x + d * c(t, 0.0)))
}

const ARMIJO: f64 = 1e-4;

pub(crate) fn minimize<O: Objective + ?Sized>(obj: &O, x0: &CMat, s: &LocalSettings) -> LocalResult {
    let mut x = linalg::orthonormalize(x0);
    let mut egrad = CMat::zeros(x.nrows(), x.ncols());
    let mut f = obj.eval(&x, Some(&mut egrad));
    let mut g = project(&x, &egrad);
    let mut gn2 = linalg::inner_re(&g, &g);
    let mut d = -&g;
    let mut step = 1.0 / gn2.sqrt().max(1.0);
    let mut flat = 0usize;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < s.max_iters {
        if gn2.sqrt() <= s.grad_tol {
            converged = true;
            break;
        }
        let mut slope = linalg::inner_re(&g, &d);
        if slope >= 0.0 {
            d = -&g;
            slope = -gn2;
        }
        let dn = linalg::frobenius(&d);
        let mut t = step;
        let mut accepted = None;
        loop {
            let xn = retract(&x, &d, t);
            let fnew = obj.eval(&xn, None);
            if fnew <= f + ARMIJO * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
            if t * dn < s.step_tol {
                break;
            }
        }
        iterations += 1;
        let Some((xn, fnew)) = accepted else {
            if slope == -gn2 {
                // Steepest descent made no progress either.
                converged = true;
                break;
            }
            d = -&g;
            continue;
        };
        let decrease = f - fnew;
        let mut egn = CMat::zeros(x.nrows(), x.ncols());
        let fcheck = obj.eval(&xn, Some(&mut egn));
        let gnew = project(&xn, &egn);
        let gnew2 = linalg::inner_re(&gnew, &gnew);
        let g_t = project(&xn, &g);
        let d_t = project(&xn, &d);
        let beta = (linalg::inner_re(&gnew, &(&gnew - &g_t)) / gn2).max(0.0);
        d = -&gnew + d_t * c(beta, 0.0);
        x = xn;
        f = fcheck;
        g = gnew;
        gn2 = gnew2;
        step = (t * 2.0).min(1e3);
        if decrease <= s.value_tol * f.abs() + 1e-15 {
            flat += 1;
            if flat >= 4 {
                converged = true;
                break;
            }
        } else {
            flat = 0;
        }
    }
    LocalResult {
        x,
        value: f,
        grad_norm: gn2.sqrt(),
        iterations,
        converged,
    }
}

/// Run every start to convergence; results keep the order of `starts`.
pub(crate) fn multistart<O: Objective>(obj: &O, starts: &[CMat], s: &LocalSettings) -> Vec<LocalResult> {
    starts.par_iter().map(|x0| minimize(obj, x0, s)).collect()
}

/// Lowest value wins; ties go to the earliest start.
pub(crate) fn best_index(results: &[LocalResult]) -> usize {
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.value < results[best].value {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_matrix, rng_from_seed};

    /// `Re Tr(X† A X)` for Hermitian `A`: minimum is the sum of the `r`
    /// smallest eigenvalues.
    struct Rayleigh(CMat);

    impl Objective for Rayleigh {
        fn eval(&self, x: &CMat, grad: Option<&mut CMat>) -> f64 {
            let ax = &self.0 * x;
            if let Some(g) = grad {
                *g = &ax * c(2.0, 0.0);
            }
            linalg::inner_re(x, &ax)
        }
    }

    #[test]
    fn finds_bottom_eigenspace() {
        let mut rng = rng_from_seed(4);
        let g = gaussian_matrix(6, 6, &mut rng);
        let a = linalg::hermitian_part(&g);
        let mut eig = linalg::eigvalsh(&a);
        eig.sort_by(f64::total_cmp);
        let settings = LocalSettings {
            max_iters: 2000,
            step_tol: 1e-14,
            value_tol: 1e-15,
            grad_tol: 1e-10,
        };
        let x0 = gaussian_matrix(6, 2, &mut rng);
        let res = minimize(&Rayleigh(a), &x0, &settings);
        assert!((res.value - (eig[0] + eig[1])).abs() < 1e-9, "{} vs {}", res.value, eig[0] + eig[1]);
        assert!(linalg::isometry_defect(&res.x) < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(9);
        let a = linalg::hermitian_part(&gaussian_matrix(4, 4, &mut rng));
        let obj = Rayleigh(a);
        let x = gaussian_matrix(4, 2, &mut rng);
        let mut g = CMat::zeros(4, 2);
        obj.eval(&x, Some(&mut g));
        let dir = gaussian_matrix(4, 2, &mut rng);
        let h = 1e-6;
        let fd = (obj.eval(&(&x + &dir * c(h, 0.)), None) - obj.eval(&(&x - &dir * c(h, 0.)), None)) / (2.0 * h);
        assert!((fd - linalg::inner_re(&g, &dir)).abs() < 1e-6);
    }
}
