//! Arithmetic of the twisted Fermat cubics `x^3 + y^3 = delta` and their
//! Jacobi-sum Hecke characters.

pub mod arith;
pub mod certify;
pub mod cyclotomic;
pub mod dd;
pub mod error;
pub mod ff;
pub mod hecke;
pub mod local_zeta;
pub mod special;
pub mod symbols;

pub use error::{Error, Result};
