pub mod dataset;
pub mod dispersion;
pub mod em;
pub mod error;
pub mod grid;
pub mod material;
pub mod nl;
pub mod pml;
pub mod sparse;
pub mod wavefield;
pub mod weld;

pub use error::{Error, Result};
