//! Numerical laboratory for the exponentially small splitting of the
//! homoclinic orbit of a fourth-order traveling-wave equation.

pub mod error;
pub mod inner;
pub mod integrator;
pub mod manifold;
pub mod model;
pub mod splitting;

pub use error::{CoreError, Result};
