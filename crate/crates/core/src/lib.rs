//! Entropic characteristics of finite-dimensional quantum channels.
//!
//! The crate computes output entropies and relative entropies, the
//! χ-function `χ_Φ(ρ)`, the convex closure `Ĥ_Φ(ρ)` of the output entropy,
//! the output purity `ν_H(Φ, A)`, Fenchel transforms of the output entropy,
//! tensor-product additivity gaps and the entanglement of formation. Every
//! optimized value comes with a certificate (an ensemble or a state) from
//! which it can be recomputed directly.
//!
//! Logarithms are natural throughout.

pub mod additivity;
pub mod channel;
pub mod cli;
pub mod decompositions;
pub mod duality;
pub mod entropy;
pub mod eof;
pub mod error;
pub mod formats;
pub mod linalg;
pub mod optimize;
pub mod propsuite;
pub mod random;
pub mod states;
pub mod sweeps;

pub use channel::{
    apply_channel, compose_channel, partial_trace, spectral_truncation, tensor_channel,
    validate_channel, KrausChannel, Subsystem,
};
pub use entropy::{entropy, relative_entropy, von_neumann_entropy, PositiveMatrix};
pub use error::{Error, Result};
pub use optimize::{
    chi, constrained_capacity, hhat, min_output_entropy, nu_h, Certificate, OptimizerOptions,
    OptimizerReport,
};
pub use states::{DensityMatrix, Ensemble, ExtendedNonnegReal, HermitianMatrix};
