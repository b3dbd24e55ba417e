//! Seeded samplers for states, channels and isometries.
//!
//! States are `GG†/Tr` for complex Gaussian `G`; channels come from a
//! random isometry `V: C^{din} → C^{dout} ⊗ C^{env}` whose row blocks are
//! the Kraus operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::states::{DensityMatrix, HermitianMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream seed from a base seed and an index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    gaussian_matrix(d, 1, rng).column(0).into_owned()
}

/// Haar-random isometry with orthonormal columns (`rows ≥ cols`).
pub fn isometry_with<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<CMat> {
    if cols == 0 || rows < cols {
        return Err(Error::InvalidArgument(format!(
            "no {rows}x{cols} isometry exists"
        )));
    }
    Ok(linalg::orthonormalize(&gaussian_matrix(rows, cols, rng)))
}

pub fn state_with<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} state in dim {dim}"
        )));
    }
    let g = gaussian_matrix(dim, rank, rng);
    Ok(DensityMatrix::from_matrix_unchecked(&g * g.adjoint()))
}

pub fn pure_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim 0".into()));
    }
    DensityMatrix::from_pure(&gaussian_vector(dim, rng))
}

pub fn channel_with<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    env_dim: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    if dim_in == 0 || dim_out == 0 || env_dim == 0 {
        return Err(Error::InvalidArgument("zero dimension".into()));
    }
    if dim_out * env_dim < dim_in {
        return Err(Error::InvalidArgument(format!(
            "dim_out·env_dim = {} is smaller than dim_in = {dim_in}",
            dim_out * env_dim
        )));
    }
    let v = isometry_with(dim_out * env_dim, dim_in, rng)?;
    let kraus = (0..env_dim)
        .map(|e| v.rows(e * dim_out, dim_out).into_owned())
        .collect();
    KrausChannel::new(kraus, dim_in, dim_out)
}

pub fn hermitian_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    HermitianMatrix::from_hermitian_part(&g)
}

/// Random positive semidefinite observable `GG†/dim`.
pub fn positive_observable_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    HermitianMatrix::from_hermitian_part(&(&g * g.adjoint() * c(1.0 / dim as f64, 0.0)))
}

pub fn random_state(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    state_with(dim, rank, &mut rng_from_seed(seed))
}

pub fn random_pure(dim: usize, seed: u64) -> Result<DensityMatrix> {
    pure_with(dim, &mut rng_from_seed(seed))
}

pub fn random_channel(dim_in: usize, dim_out: usize, env_dim: usize, seed: u64) -> Result<KrausChannel> {
    channel_with(dim_in, dim_out, env_dim, &mut rng_from_seed(seed))
}

pub fn random_isometry(rows: usize, cols: usize, seed: u64) -> Result<CMat> {
    isometry_with(rows, cols, &mut rng_from_seed(seed))
}
