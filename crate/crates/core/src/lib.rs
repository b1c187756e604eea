pub mod cli;
pub mod complex;
pub mod drifter;
pub mod error;
pub mod interpolate;
pub mod io;
pub mod linalg;
pub mod product;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
