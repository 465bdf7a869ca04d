//! Numerics for the backward shift on spiked-weight Hardy spaces `H²_w`:
//! truncated radial power series, reproducing kernels and curvatures,
//! Carleson norms of radial densities, the spike-position search, and the
//! coefficient-space operators.

pub mod carleson;
pub mod construction;
pub mod error;
pub mod grid;
pub mod operators;
pub mod quadrature;
pub mod series;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
