//! Tri-modal drug–target interaction prediction: sequence, topological
//! graph and 3D geometric encoders for drugs and proteins, aligned with a
//! cross-modal contrastive loss and fused into a binary classifier.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod contrastive;
pub mod dataset;
pub mod encoders;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod ingest;
pub mod model;
pub mod nn;
pub mod synthetic;
pub mod tokenizer;

pub use config::ModelConfig;
pub use error::{DtiError, Result};
pub use model::{TriModalModel, Variant};
