pub mod data;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
