//! Exact combinatorics of clusters of infinitely near points, complete ideals
//! and the sandwiched surface singularities obtained by blowing them up.

pub mod cluster;
pub mod curve;
pub mod error;
pub mod flags;
pub mod invariants;
pub mod linalg;
pub mod oracle;
pub mod principality;
pub mod proximity;
pub mod report;
pub mod scene;
pub mod surface;
pub mod tree;
pub mod unloading;

pub use cluster::WeightedCluster;
pub use error::{Error, Result};
pub use tree::{ClusterTree, PointRecord};
