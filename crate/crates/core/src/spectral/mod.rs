//! Grid functions on the unit interval, Helmholtz inverses, and the
//! Hermite/cosine projections used by the eigenvalue formulas.

pub mod bessel;
pub mod cosine;
mod grid;
pub mod helmholtz;
pub mod hermite;
pub(crate) mod stencil;

pub use grid::{GridFunction, QuadratureRule};
