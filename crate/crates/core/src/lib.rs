pub mod artifact;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod linear_models;
pub mod matrix;
pub mod neural;
pub mod pipeline;
pub mod predict;
pub mod service;
pub mod synthetic;
pub mod textrep;

pub use error::{Error, Result};
