// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandsolver;
pub mod cli;
pub mod coupling;
pub mod dispersion;
pub mod error;
mod fit;
pub mod geometry;
pub mod io;
mod linalg;
pub mod spectra;
pub mod synthetic;
pub mod timetrace;

pub use error::{Error, Result};
pub use fit::FitOptions;
pub use linalg::hermiticity_residual;
