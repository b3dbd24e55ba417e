//! Objectives with analytic gradients.
//!
//! For an unnormalized input `φ`, `A = Φ(φφ†)` and
//! `H(A) = Tr A log Tr A − Tr A log A`, the differential is
//! `dH = Re⟨2Φ*(G)φ, dφ⟩` with `G = log(Tr A)·I − log A`. Since the columns
//! of `Y = [K_1φ … K_kφ]` lie in the range of `A`, only `G` on that range
//! matters and the spectrum can be taken from whichever of `YY†` and `Y†Y`
//! is smaller.

use crate::channel::KrausChannel;
use crate::decompositions::SupportFrame;
use crate::entropy::entropy_of_spectrum;
use crate::linalg::{self, c, tol, CMat, CVec};

use super::manifold::Objective;

pub(crate) struct OutputEntropy<'a> {
    stacked: &'a CMat,
    dim_out: usize,
    nk: usize,
}

impl<'a> OutputEntropy<'a> {
    pub fn new(phi: &'a KrausChannel) -> Self {
        Self {
            stacked: phi.stacked(),
            dim_out: phi.dim_out(),
            nk: phi.num_kraus(),
        }
    }

    fn env_matrix(&self, phi: &CVec) -> CMat {
        let y = self.stacked * phi;
        CMat::from_fn(self.dim_out, self.nk, |i, e| y[e * self.dim_out + i])
    }

    fn gram(&self, y: &CMat) -> CMat {
        if self.nk <= self.dim_out {
            y.adjoint() * y
        } else {
            y * y.adjoint()
        }
    }

    pub fn value(&self, phi: &CVec) -> f64 {
        let y = self.env_matrix(phi);
        entropy_of_spectrum(&linalg::eigvalsh(&self.gram(&y)))
    }

    /// Value and Euclidean gradient with respect to `φ`.
    pub fn value_grad(&self, phi: &CVec) -> (f64, CVec) {
        let y = self.env_matrix(phi);
        let e = linalg::eigh(&self.gram(&y));
        let h = entropy_of_spectrum(&e.values);
        let t: f64 = e.values.iter().map(|x| x.max(0.0)).sum();
        if t <= f64::MIN_POSITIVE {
            return (0.0, CVec::zeros(phi.len()));
        }
        let floor = tol::EIG_FLOOR * t;
        let lt = t.ln();
        let l = e.map(|x| lt - x.max(floor).ln());
        let gy = if self.nk <= self.dim_out { &y * l } else { l * &y };
        let mut v = CVec::zeros(self.nk * self.dim_out);
        for ek in 0..self.nk {
            for i in 0..self.dim_out {
                v[ek * self.dim_out + i] = gy[(i, ek)];
            }
        }
        (h, self.stacked.adjoint() * v * c(2.0, 0.0))
    }
}

/// `V ↦ Σ_i H(Φ(φ_i φ_i†))` for the decomposition induced by `V`.
pub(crate) struct MeanOutputEntropy<'a> {
    pub kernel: OutputEntropy<'a>,
    pub frame: SupportFrame,
}

impl Objective for MeanOutputEntropy<'_> {
    fn eval(&self, v: &CMat, grad: Option<&mut CMat>) -> f64 {
        let phis = self.frame.atoms(v);
        let m = phis.ncols();
        match grad {
            None => (0..m)
                .map(|i| self.kernel.value(&phis.column(i).into_owned()))
                .sum(),
            Some(g) => {
                let mut total = 0.0;
                let mut gphi = CMat::zeros(phis.nrows(), m);
                for i in 0..m {
                    let (h, gi) = self.kernel.value_grad(&phis.column(i).into_owned());
                    total += h;
                    gphi.set_column(i, &gi);
                }
                *g = (self.frame.w.adjoint() * gphi).transpose();
                total
            }
        }
    }
}

/// `ψ ↦ H(Φ(ψψ†)) + ⟨ψ|A|ψ⟩` on the unit sphere.
pub(crate) struct PenalizedOutputEntropy<'a> {
    pub kernel: OutputEntropy<'a>,
    pub a: CMat,
}

impl Objective for PenalizedOutputEntropy<'_> {
    fn eval(&self, x: &CMat, grad: Option<&mut CMat>) -> f64 {
        let psi: CVec = x.column(0).into_owned();
        let ap = &self.a * &psi;
        let lin = psi.dotc(&ap).re;
        match grad {
            None => self.kernel.value(&psi) + lin,
            Some(g) => {
                let (h, gh) = self.kernel.value_grad(&psi);
                *g = CMat::from_column_slice(psi.len(), 1, (gh + ap * c(2.0, 0.0)).as_slice());
                h + lin
            }
        }
    }
}

/// Negative Holevo quantity of an ensemble encoded as a unit vector of
/// stacked unnormalized atoms, plus the augmented-Lagrangian term
/// `(max(0, λ + μg)² − λ²) / 2μ` for the output energy constraint
/// `g = Tr Φ(ρ̄) H − h ≤ 0`.
pub(crate) struct PenalizedHolevo<'a> {
    pub phi: &'a KrausChannel,
    pub kernel: OutputEntropy<'a>,
    pub dim: usize,
    pub atoms: usize,
    /// `Φ*(H)` on the input space.
    pub energy: CMat,
    pub bound: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl PenalizedHolevo<'_> {
    pub fn unpack(&self, x: &CMat) -> CMat {
        CMat::from_column_slice(self.dim, self.atoms, x.as_slice())
    }

    pub fn energy_of(&self, atoms: &CMat) -> f64 {
        linalg::inner_re(atoms, &(&self.energy * atoms))
    }
}

impl Objective for PenalizedHolevo<'_> {
    fn eval(&self, x: &CMat, grad: Option<&mut CMat>) -> f64 {
        let xm = self.unpack(x);
        let rho = &xm * xm.adjoint();
        let out = self.phi.apply_matrix(&rho);
        let mx = &self.energy * &xm;
        let energy = linalg::inner_re(&xm, &mx);
        let shifted = (self.lambda + self.mu * (energy - self.bound)).max(0.0);
        let penalty = (shifted * shifted - self.lambda * self.lambda) / (2.0 * self.mu);
        match grad {
            None => {
                let mean: f64 = (0..self.atoms)
                    .map(|i| self.kernel.value(&xm.column(i).into_owned()))
                    .sum();
                mean - entropy_of_spectrum(&linalg::eigvalsh(&out)) + penalty
            }
            Some(g) => {
                let e = linalg::eigh(&out);
                let h_out = entropy_of_spectrum(&e.values);
                let t: f64 = e.values.iter().map(|v| v.max(0.0)).sum();
                let floor = tol::EIG_FLOOR * t;
                let gb = e.map(|v| t.ln() - v.max(floor).ln());
                let mut gm = self.phi.adjoint_apply(&gb) * &xm * c(-2.0, 0.0);
                let mut mean = 0.0;
                for i in 0..self.atoms {
                    let (h, gi) = self.kernel.value_grad(&xm.column(i).into_owned());
                    mean += h;
                    let mut col = gm.column_mut(i);
                    col += gi;
                }
                if shifted > 0.0 {
                    gm += mx * c(2.0 * shifted, 0.0);
                }
                *g = CMat::from_column_slice(self.dim * self.atoms, 1, gm.as_slice());
                mean - h_out + penalty
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_matrix, random_channel, random_state, rng_from_seed};
    use crate::states::DensityMatrix;

    fn fd_check<O: Objective>(obj: &O, x: &CMat, seed: u64) -> (f64, f64) {
        let mut rng = rng_from_seed(seed);
        let dir = gaussian_matrix(x.nrows(), x.ncols(), &mut rng);
        let mut g = CMat::zeros(x.nrows(), x.ncols());
        obj.eval(x, Some(&mut g));
        let h = 1e-6;
        let fp = obj.eval(&(x + &dir * c(h, 0.)), None);
        let fm = obj.eval(&(x - &dir * c(h, 0.)), None);
        ((fp - fm) / (2.0 * h), linalg::inner_re(&g, &dir))
    }

    #[test]
    fn output_entropy_gradient_matches_finite_differences() {
        for (din, dout, env) in [(2, 2, 2), (3, 2, 3), (2, 3, 1), (3, 3, 4)] {
            let ch = random_channel(din, dout, env, 5).unwrap();
            let kernel = OutputEntropy::new(&ch);
            let obj = PenalizedOutputEntropy { kernel, a: CMat::zeros(din, din) };
            let x = gaussian_matrix(din, 1, &mut rng_from_seed(2));
            let (fd, an) = fd_check(&obj, &x, 3);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{din}->{dout}: {fd} vs {an}");
        }
    }

    #[test]
    fn mean_output_entropy_gradient_matches_finite_differences() {
        let ch = random_channel(3, 2, 2, 8).unwrap();
        let rho = random_state(3, 3, 1).unwrap();
        let obj = MeanOutputEntropy {
            kernel: OutputEntropy::new(&ch),
            frame: SupportFrame::of(&rho),
        };
        let v = gaussian_matrix(9, 3, &mut rng_from_seed(4));
        let (fd, an) = fd_check(&obj, &v, 6);
        assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
    }

    #[test]
    fn penalized_holevo_gradient_matches_finite_differences() {
        let ch = random_channel(2, 2, 2, 3).unwrap();
        let h = crate::random::positive_observable_with(2, &mut rng_from_seed(1));
        for (bound, lambda, mu) in [(10.0, 0.0, 1.0), (0.0, 0.5, 3.0), (0.3, 0.2, 10.0)] {
            let obj = PenalizedHolevo {
                phi: &ch,
                kernel: OutputEntropy::new(&ch),
                dim: 2,
                atoms: 4,
                energy: ch.adjoint_apply(h.matrix()),
                bound,
                lambda,
                mu,
            };
            let x = gaussian_matrix(8, 1, &mut rng_from_seed(5));
            let (fd, an) = fd_check(&obj, &x, 7);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
        }
    }

    #[test]
    fn kernel_value_matches_direct_entropy() {
        let ch = random_channel(3, 2, 3, 12).unwrap();
        let kernel = OutputEntropy::new(&ch);
        let phi = gaussian_matrix(3, 1, &mut rng_from_seed(1)).column(0).into_owned();
        let w = phi.norm_squared();
        let direct = crate::entropy::output_entropy(&ch, &DensityMatrix::from_pure(&phi).unwrap()).unwrap();
        assert!((kernel.value(&phi) - w * direct).abs() < 1e-12);
    }
}
