//! Citation-network growth engine.
//!
//! A paper's yearly citations are Poisson draws whose rate is its fitness
//! times a direct-citation curve plus a self-exciting term: every earlier
//! citation keeps triggering copied citations through a kernel that decays
//! with age and grows logarithmically with the paper's citation count.
//!
//! Modules:
//! - [`params`], [`curves`], [`model`]: calibration constants, tabulated
//!   curves, kernel and fitness.
//! - [`reference`]: age composition of reference lists.
//! - [`duality`]: reference-age to citation-rate conversion.
//! - [`hawkes`]: stochastic simulation of single papers and ensembles.
//! - [`continuum`]: deterministic continuous-time approximation.
//! - [`metrics`]: diagnostics for simulated or measured trajectories.
//! - [`io`]: trajectory store, summaries and provenance.

pub mod continuum;
pub mod curves;
pub mod duality;
pub mod error;
pub mod hawkes;
pub mod io;
pub mod metrics;
pub mod model;
pub mod params;
pub mod reference;
pub mod rng;

pub use curves::EmpiricalCurves;
pub use error::{Error, Result};
pub use params::{KernelNorm, ModelParams};
