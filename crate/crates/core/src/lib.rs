//! Zeros of the hyperbolic Gaussian analytic functions `f_L`.

pub mod coeffs;
pub mod error;
pub mod kernel;
pub mod limitlaw;
pub mod moments;
pub mod numerics;
pub mod quad;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod zeros;

pub use error::{Error, Result};
pub use num_complex::Complex64;
