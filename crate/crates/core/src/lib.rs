//! Mixed-weight Sobolev norms on planar wedges and a Mellin-transform
//! solver for the zero-Dirichlet Poisson problem.

pub mod error;
pub mod fields;
pub mod geometry;
pub mod mellin;
pub mod norms;
pub mod polar_calculus;
pub mod quadrature;
pub mod wedge_poisson;

pub use error::{Error, Result};
