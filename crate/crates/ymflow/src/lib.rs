//! Numerical laboratory for Type-I blowup of Yang-Mills flow on R^n, 5 <= n <= 9.
//!
//! The crate is organised bottom-up:
//!
//! * [`liealg`]: so(n) arithmetic and the generator fields `sigma_i`.
//! * [`soliton`]: the closed-form shrinking soliton and its explicit eigenfunctions.
//! * [`operators`]: pointwise evaluation of every differential operator on jets.
//! * [`equivariant`]: radial reduction, spectral element discretization, spectrum.
//! * [`flow`]: rescaled and physical-time evolution, Duhamel and Picard solvers.
//! * [`analysis`]: inequality checks, weighted norms, growth fits, certificates.

pub mod analysis;
pub mod equivariant;
pub mod error;
pub mod flow;
pub mod liealg;
pub mod operators;
pub mod quadrature;
pub mod soliton;

pub use error::{Error, Result};

/// Inclusive range of supported dimensions.
pub const DIM_RANGE: std::ops::RangeInclusive<usize> = 5..=9;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if DIM_RANGE.contains(&n) {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension n = {n} outside 5..=9")))
    }
}
