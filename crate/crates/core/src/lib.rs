pub mod data;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod nn;
pub mod rng;
pub mod trainer;
pub mod triplet;

pub use error::{Error, ModelError, ParseError, Result};
