//! Compressed sensing and dynamic mode decomposition.
//!
//! The numerical core is generic over the floating-point type through
//! [`scalar::Real`]; the aliases below fix it to `f64` (or `f32`) for
//! everyday use.

pub mod dmd;
pub mod error;
pub mod linalg;
pub mod pipelines;
pub mod recovery;
pub mod scalar;
pub mod sensing;
pub mod systems;

pub use error::{Error, Result};

use num_complex::Complex;

pub type RealMatrix = linalg::Matrix<f64>;
pub type ComplexMatrix = linalg::Matrix<Complex<f64>>;
pub type RealMatrix32 = linalg::Matrix<f32>;
pub type ComplexMatrix32 = linalg::Matrix<Complex<f32>>;
pub type Svd = linalg::EconSvd<f64>;
pub type Dmd = dmd::DmdResult<f64>;
