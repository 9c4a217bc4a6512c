//! Spatial preferential attachment networks: generation, percolation and
//! the diagnostics used to study robustness.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod generator;
pub mod indegree;
pub mod model;
pub mod pathlab;
pub mod percolation;
pub mod randomness;
pub mod stats;

pub use error::{Error, Result};
pub use generator::{build_graph, Edge, Graph, Mode, View};
pub use model::{ModelParams, Phase};
