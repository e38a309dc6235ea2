//! Trajectory-set market models for two discounted assets.
//!
//! The pipeline: ingest a price chart, discount against a numeraire, chop it
//! into fixed-length windows, detect threshold escapes, aggregate the observed
//! grid increments, build worst-case pruning tables, grow a pruned trajectory
//! graph, and price payoffs on it by backward dynamic programming with
//! arbitrage-node handling.

pub mod analysis;
pub mod error;
pub mod escape;
pub mod geometry;
pub mod graph;
pub mod market_data;
pub mod pruning;
pub mod rational;
pub mod superhedge;

pub use error::{Error, Result};
