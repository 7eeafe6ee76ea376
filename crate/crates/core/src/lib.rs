//! Discrete Littlewood-Paley-Stein analysis for flag (implicit two-parameter)
//! structures on periodic grids over the unit torus.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: sampling grids, dyadic rectangles, quasi-norms, block IO
//! - [`filters`]: one-parameter filter families and their flag lift
//! - [`transform`]: analysis, synthesis, the remainder `R` and its Neumann inverse
//! - [`squarefuncs`]: flag square functions, Hardy norms, sup/inf comparison
//! - [`maximal`]: dyadic Hardy-Littlewood and strong maximal operators
//! - [`carleson`]: Carleson sums, sequence norms, candidate open sets
//! - [`czd`]: Calderón-Zygmund decomposition and interpolation harness
//! - [`kernels`]: kernel certification, projection and truncated convolution
//! - [`cli`]: the batch front end behind the `flaglp` binary

pub mod carleson;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod czd;
pub mod error;
pub(crate) mod fft;
pub mod filters;
pub mod grid;
pub mod kernels;
pub mod maximal;
pub mod report;
pub mod squarefuncs;
pub mod transform;
pub mod verify;

pub use error::{FlagError, Result};
pub use filters::{FilterBank, FilterMode, FilterProfile};
pub use grid::{DyadicRectangle, Grid, SampledFunction};
pub use transform::CoefficientField;

/// Library version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
