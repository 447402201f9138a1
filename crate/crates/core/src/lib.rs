//! Dyadic-grid toolkit for visible parts of compact sets.

pub mod dimension;
pub mod dyadic;
pub mod error;
pub mod fractals;
pub mod measures;
pub mod pipeline;
pub mod transforms;
pub mod visibility;

pub use error::{Error, Result};
