//! Multiscale analysis of finite metric spaces: nets, Schul cores,
//! geodesic-deviation β-numbers, spanning-tree traversals, Frostmann
//! measures, and fractal generators.

pub mod error;
pub mod metric;
pub mod nets;
pub mod cubes;
pub mod beta;
pub mod constants;
pub mod fractal;
pub mod measure;
pub mod tree;
pub mod cli;

pub use error::{Error, Result};
