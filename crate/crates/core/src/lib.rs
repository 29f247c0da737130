pub mod arith;
pub mod circle_method;
pub mod error;
pub mod formats;
pub mod lattice;
pub mod norms;
pub mod operators;
pub mod quadrature;
pub mod summation;

pub use error::{Error, Result};
