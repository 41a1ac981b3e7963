//! Library, solver and experiment harness for the symmetric-gradient
//! p-structure system `−div S(Du) = f` with shifted power-law stress.

pub mod constitutive;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
