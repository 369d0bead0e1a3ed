//! Cross-Entropy / Max-Min Ant System optimizer for the symmetric TSP.
//!
//! The crate covers instance families ([`instance`]), tours and exchange
//! moves ([`tour`]), the sampling matrix ([`pheromone`]), the two random
//! tour-construction schemes ([`generation`]), the optimization loop
//! ([`optimizer`]) and the exact oracle, Monte Carlo bound checks and runtime
//! experiments ([`analysis`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod generation;
pub mod geometry;
pub mod instance;
pub mod optimizer;
pub mod pheromone;
pub mod rng;
pub mod tour;

pub use error::{Error, Result};
pub use generation::Scheme;
pub use instance::{GridMeta, Instance};
pub use optimizer::{CeConfig, RunTrace};
pub use pheromone::{Bounds, PheromoneMatrix};
pub use tour::{Edge, ExchangeMove, Tour};
