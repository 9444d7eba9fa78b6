//! Dirichlet eigenvalues of the planar Stokes operator from second-kind
//! boundary integral equations and Fredholm determinant sweeps.

pub mod chebyshev;
pub mod config;
pub mod detsweep;
pub mod eigenfield;
pub mod error;
pub mod gauss;
pub mod geometry;
pub mod linalg;
pub mod operator;
pub mod potentials;
pub mod quadrature;
pub mod reference;
pub mod special;

pub use error::{Error, Result};
