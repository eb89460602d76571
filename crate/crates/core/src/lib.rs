//! Max-margin structured learning of pairwise graph labelings, with exact
//! loss-augmented inference through one-hot binary encodings, graph cuts and
//! QPBO.

pub mod cli;
pub mod energy;
pub mod error;
pub mod graphdata;
pub mod infer;
pub mod learn;
pub mod maxflow;
pub mod model;
pub mod qpbo;

pub use energy::{evaluate_energy, BinaryEnergy, EnergyFunction};
pub use error::{Error, Result};
pub use graphdata::{Dataset, Edge, GraphInstance};
pub use learn::{train, TrainConfig, TrainReport};
pub use model::WeightVector;
