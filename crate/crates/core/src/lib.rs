pub mod circuit;
pub mod cli;
pub mod detect;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod optimize;
pub mod oracle;
pub mod pauli;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
