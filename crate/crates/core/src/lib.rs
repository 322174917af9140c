//! Effective diffusivity, moment dynamics and invariant measures for a passive
//! scalar advected by a shear flow whose amplitude switches randomly in time.

pub mod aris;
pub mod eff_diffusivity;
pub mod error;
pub mod flow;
pub mod invariant_measure;
pub mod monte_carlo;
pub mod ou_process;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod validation;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
