//! Balanced and unbalanced Monge-Kantorovich distances between nonnegative
//! mass distributions on 2-D grids, solved exactly as min-cost flows, plus
//! the imaging, synthetic-data and nearest-neighbour tooling used to
//! benchmark them as classification distances.

pub mod classify;
pub mod distributions;
pub mod error;
pub mod flow;
pub mod imaging;
pub mod numeric;
pub mod oracle;
pub mod synth;
pub mod transport;

pub use distributions::{quantize, total_mass, Grid, GroundCost, MassDistribution, QuantizedDistribution};
pub use error::{Error, Result};
pub use transport::{balanced_distance, unbalanced_distance, wasserstein_distance, TransportResult};
