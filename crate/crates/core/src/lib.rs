//! Cortical-inspired connectivity kernels on position-orientation(-speed,
//! -time) feature spaces, anisotropic affinity matrices over synthetic
//! stimuli, and spectral grouping on the resulting graphs.
//!
//! The crate is `no_std` (alloc only): it holds the full algorithmic
//! pipeline — feature manifolds and covering grids, Monte Carlo kernel
//! estimation, affinity assembly, the spectral clustering procedure,
//! stimulus generators and the grouping-error evaluation — while IO, file
//! formats and the CLI live in the companion binary crate.

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod affinity;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod linalg;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod space;
pub mod spectral;
pub mod stimuli;

pub use error::{Error, Result};
