//! Special functions, small dense Hermitian linear algebra and random streams.
//!
//! Everything here is a pure function of its inputs. Random draws always take
//! an explicit [`RandomStream`], so independent streams can be used from
//! different threads without coordination.

mod gamma;
mod linalg;
mod random;

pub use gamma::{
    inverse_regularized_lower_gamma, inverse_regularized_upper_gamma, ln_gamma, regularized_lower_gamma,
    regularized_upper_gamma,
};
pub use linalg::{hermitian_solve, ComplexVector, HermitianMatrix, HermitianSolver};
pub use random::{
    derive_stream, sample_correlated_complex_gaussian, standard_complex_normal, CorrelatedGaussian, RandomStream,
    StreamKind,
};

pub use num_complex::Complex64;
