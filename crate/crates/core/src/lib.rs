//! Kriging of manifold-valued spatial data through random domain
//! decompositions.
//!
//! Observations living on a Riemannian manifold (SPD matrices, hypersphere
//! points, Cholesky factors of correlation matrices) are predicted at new
//! locations by bagging many local kriging models: each bootstrap iteration
//! draws a random Voronoi partition of the sites, linearizes every tile's data
//! in the tangent space at the tile's Fréchet mean, fits a kernel-weighted
//! trace-variogram and krigs there. The ensemble is averaged intrinsically.

pub mod domain;
pub mod engine;
pub mod error;
pub mod kriging;
pub mod linalg;
pub mod manifold;
pub mod simgen;
pub mod variogram;

pub use error::{Error, Result};
