pub mod cli;
pub mod config;
pub mod encoder;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod hnn;
pub mod kb;
pub mod literal;
pub mod optim;
pub mod p2vec;
pub mod pipeline;
pub mod sampler;
pub mod similarity;
pub mod synthetic;
pub mod table;

pub use error::{Error, Result};
