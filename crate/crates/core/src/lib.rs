//! Deep clustering with an intra-class distance constraint.
//!
//! A symmetric fully-connected autoencoder is trained jointly with a K-means
//! style penalty that pulls every code toward its assigned cluster center.
//! Weights follow hand-derived gradients; centers and the one-hot indicator
//! are updated in closed form once per epoch.
//!
//! ```no_run
//! use dcidc::{data, trainer::{train, TrainConfig}};
//!
//! let ds = data::synth_blobs(200, 3, 10, 6.0, 1.0, 7).unwrap();
//! let ds = data::normalize(&ds, data::NormalizeMode::MinmaxPerBand);
//! let cfg = TrainConfig::new(vec![10, 6, 2, 6, 10], 3);
//! let out = train(&ds.features, &cfg, ds.labels.as_deref()).unwrap();
//! println!("accuracy {:?}", out.final_report().accuracy);
//! ```

pub mod activation;
pub mod checkpoint;
pub mod cluster;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod matrix;
pub mod metrics;
pub mod network;
pub mod rng;
pub mod trainer;

pub use activation::ActivationKind;
pub use cluster::ClusterState;
pub use data::{Dataset, DataFormat, NormalizeMode};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::LabelVector;
pub use network::{Activations, ForwardTrace, Gradients, NetworkParams, Penalties};
pub use trainer::{EpochReport, LossTerms, TrainConfig, TrainOutcome};

/// Version string recorded in run manifests.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
