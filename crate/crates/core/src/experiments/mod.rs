//! Configuration files, graph files and parameter sweeps.

pub mod config;
pub mod graph_io;
pub mod sweep;

pub use config::{model_params, parse_f64, parse_seed, Config};
pub use graph_io::{graph_to_string, load_graph, parse_graph, read_graph, save_graph, write_graph};
pub use sweep::{run_sweep, SweepConfig, SweepOutcome};
