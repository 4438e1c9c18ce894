//! Multi-view dimension reduction with tensor canonical correlation
//! analysis (linear and kernel), classical two-view CCA and MAXVAR
//! baselines, and an evaluation harness.

pub mod cca;
pub mod cp;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod io;
pub mod ktcca;
pub mod linalg;
pub mod rng;
pub mod tcca;
pub mod tensor;

pub use error::{Error, ErrorCategory, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
