pub mod audio;
pub mod dataset;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod gateway;
pub mod head;
pub mod rng;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
