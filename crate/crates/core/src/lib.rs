//! Spectral graph measures, effective resistance, lazy random walks and
//! spanning tree counts for finite weighted graphs.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod graph;
pub mod linalg;
pub mod resistance;
pub mod spectral;
pub mod trees;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{Edge, WeightedGraph};
