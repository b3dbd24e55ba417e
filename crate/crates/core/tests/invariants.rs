use entropics::channel::{partial_trace, spectral_truncation, KrausChannel, Subsystem};
use entropics::decompositions::{decomposition_from_stiefel, transport_ensemble, StiefelPoint};
use entropics::duality::{double_fenchel, fenchel_star, AscentOptions};
use entropics::entropy::{entropy, output_entropy, state_relative_entropy, PositiveMatrix};
use entropics::eof::{decomposition_eof, eof, eof_with, BipartiteState};
use entropics::formats::{
    format_channel, format_hermitian, format_state, parse_channel, parse_hermitian, parse_state,
};
use entropics::linalg::{eigvalsh, trace_norm, trace_re};
use entropics::optimize::{chi, hhat, OptimizerOptions};
use entropics::random::{channel_with, gaussian_matrix, hermitian_with, rng_from_seed, state_with};
use entropics::states::{DensityMatrix, HermitianMatrix};
use proptest::prelude::*;
use rand::Rng;

fn opts(seed: u64) -> OptimizerOptions {
    OptimizerOptions::default().with_restarts(6).with_seed(seed)
}

fn positive(d: usize, seed: u64) -> PositiveMatrix {
    let g = gaussian_matrix(d, d, &mut rng_from_seed(seed));
    PositiveMatrix::new(&g * g.adjoint()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn formats_round_trip_bit_identical(seed in any::<u64>(), d in 1usize..=4, dout in 1usize..=3, env in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let rho = state_with(d, rng.random_range(1..=d), &mut rng).unwrap();
        let back = parse_state(&format_state(&rho)).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());

        let h = hermitian_with(d, &mut rng);
        let back = parse_hermitian(&format_hermitian(&h)).unwrap();
        prop_assert_eq!(back.matrix(), h.matrix());

        let env = env.max(d.div_ceil(dout));
        let ch = channel_with(d, dout, env, &mut rng).unwrap();
        let back = parse_channel(&format_channel(&ch)).unwrap();
        prop_assert_eq!(back.kraus(), ch.kraus());
    }

    #[test]
    fn tensor_channel_factorizes(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let phi = channel_with(2, 3, 2, &mut rng).unwrap();
        let psi = channel_with(2, 2, 2, &mut rng).unwrap();
        let rho = state_with(2, 2, &mut rng).unwrap();
        let sigma = state_with(2, 1, &mut rng).unwrap();
        let joint = phi.tensor(&psi).apply(&rho.tensor(&sigma)).unwrap();
        let split = phi.apply(&rho).unwrap().tensor(&psi.apply(&sigma).unwrap());
        prop_assert!(trace_norm(&(joint.matrix() - split.matrix())) <= 1e-12);
        prop_assert!((trace_re(joint.matrix()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn truncation_is_dominated(seed in any::<u64>(), d in 2usize..=5) {
        let rho = state_with(d, d, &mut rng_from_seed(seed)).unwrap();
        for n in 1..=d {
            let (rn, mass) = spectral_truncation(&rho, n).unwrap();
            let rest = rho.matrix() - rn.matrix() * entropics::linalg::c(mass, 0.0);
            prop_assert!(eigvalsh(&rest)[d - 1] >= -1e-10);
        }
    }

    #[test]
    fn marginals_have_unit_trace(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3) {
        let omega = state_with(da * db, da * db, &mut rng_from_seed(seed)).unwrap();
        for keep in [Subsystem::A, Subsystem::B] {
            let m = partial_trace(&omega, da, db, keep).unwrap();
            prop_assert!((trace_re(m.matrix()) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropy_scaling(seed in any::<u64>(), d in 1usize..=4) {
        let a = positive(d, seed);
        let h = entropy(&a).to_f64();
        for c in [0.5, 2.0, 10.0] {
            let hc = entropy(&a.scaled(c).unwrap()).to_f64();
            prop_assert!((hc - c * h).abs() <= 1e-9 * (1.0 + h.abs()));
        }
        let tr = a.trace();
        let normalized = entropy(&a.scaled(1.0 / tr).unwrap()).to_f64();
        prop_assert!((h - tr * normalized).abs() <= 1e-10 * (1.0 + h.abs()));
    }

    #[test]
    fn relative_entropy_contracts(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let rho = state_with(d, rng.random_range(1..=d), &mut rng).unwrap();
        let sigma = state_with(d, d, &mut rng).unwrap();
        let ch = channel_with(d, rng.random_range(1..=3), d, &mut rng).unwrap();
        let before = state_relative_entropy(&rho, &sigma).unwrap().to_f64();
        let after = state_relative_entropy(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap()).unwrap().to_f64();
        prop_assert!(before >= -1e-10);
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn output_entropy_is_concave(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut rng = rng_from_seed(seed);
        let ch = channel_with(3, 2, 2, &mut rng).unwrap();
        let rho = state_with(3, 1, &mut rng).unwrap();
        let sigma = state_with(3, 2, &mut rng).unwrap();
        let mixed = output_entropy(&ch, &rho.mix(&sigma, t).unwrap()).unwrap();
        let chord = t * output_entropy(&ch, &rho).unwrap() + (1.0 - t) * output_entropy(&ch, &sigma).unwrap();
        prop_assert!(mixed >= chord - 1e-12);
    }

    #[test]
    fn stiefel_decompositions_reconstruct(seed in any::<u64>(), d in 1usize..=4, extra in 0usize..=3) {
        let mut rng = rng_from_seed(seed);
        let rank = rng.random_range(1..=d);
        let rho = state_with(d, rank, &mut rng).unwrap();
        let v = StiefelPoint::random(rank + extra, rank, &mut rng).unwrap();
        let ens = decomposition_from_stiefel(&rho, &v).unwrap();
        prop_assert!(ens.is_pure());
        prop_assert!(trace_norm(&(ens.average().matrix() - rho.matrix())) <= 1e-12);

        let target = state_with(d, d, &mut rng).unwrap();
        let moved = transport_ensemble(&ens, &target).unwrap();
        prop_assert!(trace_norm(&(moved.average().matrix() - target.matrix())) <= 1e-10);
    }

    #[test]
    fn kronecker_sum_spectrum(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let a = hermitian_with(da, &mut rng);
        let b = hermitian_with(db, &mut rng);
        let mut pairs: Vec<f64> = eigvalsh(a.matrix())
            .iter()
            .flat_map(|x| eigvalsh(b.matrix()).into_iter().map(move |y| x + y))
            .collect();
        pairs.sort_by(f64::total_cmp);
        let got = eigvalsh(a.kronecker_sum(&b).matrix());
        pairs.reverse();
        for (p, g) in pairs.iter().zip(&got) {
            prop_assert!((p - g).abs() <= 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chi_certificates_are_consistent(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let ch = channel_with(d, 2, 2, &mut rng).unwrap();
        let rho = state_with(d, d, &mut rng).unwrap();
        let rep = chi(&ch, &rho, &opts(seed)).unwrap();
        prop_assert!(rep.value <= (d as f64).ln() + 1e-9);
        prop_assert!(rep.crosscheck.unwrap() <= 1e-8);
        let h = hhat(&ch, &rho, &opts(seed)).unwrap();
        prop_assert!((h.value + rep.value - output_entropy(&ch, &rho).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn any_decomposition_bounds_eof_from_above(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let rho = state_with(4, rng.random_range(1..=4), &mut rng).unwrap();
        let omega = BipartiteState::new(rho.clone(), 2, 2).unwrap();
        let best = eof(&omega, &opts(seed)).unwrap().value;
        let rank = rho.rank();
        let v = StiefelPoint::random(rank + 2, rank, &mut rng).unwrap();
        let ens = decomposition_from_stiefel(&rho, &v).unwrap();
        prop_assert!(decomposition_eof(&omega, &ens).unwrap() >= best - 1e-8);
    }

    #[test]
    fn eof_bounded_by_marginals_and_swap_symmetric(seed in any::<u64>(), da in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let omega = BipartiteState::new(state_with(da * 2, 3, &mut rng).unwrap(), da, 2).unwrap();
        let via_a = eof_with(&omega, Subsystem::A, &opts(seed)).unwrap().value;
        let via_b = eof_with(&omega, Subsystem::B, &opts(seed)).unwrap().value;
        let bound = entropics::entropy::von_neumann_entropy(&omega.marginal(Subsystem::A))
            .min(entropics::entropy::von_neumann_entropy(&omega.marginal(Subsystem::B)));
        prop_assert!(via_a <= bound + 1e-9);
        prop_assert!((via_a - via_b).abs() <= 1e-4);
        let swapped = eof(&omega.swapped(), &opts(seed)).unwrap().value;
        prop_assert!((via_b - swapped).abs() <= 1e-4);
    }

    #[test]
    fn conjugate_shift_covariance(seed in any::<u64>(), shift in -2.0f64..=2.0) {
        let mut rng = rng_from_seed(seed);
        let ch = channel_with(2, 2, 2, &mut rng).unwrap();
        let a = hermitian_with(2, &mut rng);
        let shifted = HermitianMatrix::new(a.matrix() + HermitianMatrix::scaled_identity(2, shift).matrix()).unwrap();
        let base = fenchel_star(&ch, &a, &opts(seed)).unwrap();
        let moved = fenchel_star(&ch, &shifted, &opts(seed)).unwrap();
        // The stopping rule is relative to |f|, so the two runs settle
        // slightly differently.
        prop_assert!((moved - base - shift).abs() <= 1e-6);
    }
}

#[test]
fn double_conjugate_sits_between_closure_bounds() {
    for seed in 0..6u64 {
        let mut rng = rng_from_seed(seed);
        let ch = channel_with(2, 2, 2, &mut rng).unwrap();
        let rho = state_with(2, 2, &mut rng).unwrap();
        let o = opts(seed);
        let dual = double_fenchel(&ch, &rho, &o, &AscentOptions::default()).unwrap();
        let primal = hhat(&ch, &rho, &o).unwrap().value;
        assert!(dual.value <= primal + 1e-8, "seed {seed}: {} > {primal}", dual.value);
        assert!(dual.value <= output_entropy(&ch, &rho).unwrap() + 1e-8);
        for w in dual.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "seed {seed}: ascent went down");
        }
    }
}

#[test]
fn chi_of_mixture_dominates_chord() {
    for seed in 0..8u64 {
        let mut rng = rng_from_seed(seed);
        let ch = channel_with(2, 2, 2, &mut rng).unwrap();
        let rho = state_with(2, 2, &mut rng).unwrap();
        let sigma = state_with(2, 1, &mut rng).unwrap();
        let t: f64 = rng.random_range(0.05..0.95);
        let o = opts(seed);
        let mid = chi(&ch, &rho.mix(&sigma, t).unwrap(), &o).unwrap().value;
        let chord = t * chi(&ch, &rho, &o).unwrap().value + (1.0 - t) * chi(&ch, &sigma, &o).unwrap().value;
        assert!(mid >= chord - 2e-4, "seed {seed}: {mid} < {chord}");
    }
}

#[test]
fn identity_channel_keeps_everything() {
    let rho = DensityMatrix::maximally_mixed(3);
    let rep = chi(&KrausChannel::identity(3), &rho, &opts(1)).unwrap();
    assert!((rep.value - 3f64.ln()).abs() <= 1e-9);
}
