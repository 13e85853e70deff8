//! Multimodal deep network with learned feature and class relationships.
//!
//! Video features from several modalities are transformed per modality,
//! merged in a fusion layer and mapped to per-category sigmoid scores.
//! Training alternates mini-batch gradient descent on the weights with
//! closed-form updates of two relation matrices: `Ψ` over modalities,
//! penalizing the stacked fusion weights, and `Ω` over categories,
//! penalizing the output weights.
//!
//! Modules:
//! - [`linalg`]: symmetric eigendecomposition, PSD square root, regularized inverse
//! - [`model`]: network topology, forward pass, `RDNM` model files
//! - [`relation`]: stacked weights, relation updates, trace penalties
//! - [`trainer`]: loss, backprop, alternating training, NN-EF/NN-LF baselines
//! - [`dataio`]: `RDNF` feature files, label CSV, manifests, RootSIFT, splits
//! - [`synth`]: planted-structure synthetic datasets
//! - [`metrics`]: AP, mAP, confusion summaries
//! - [`analysis`]: spectral clustering of `Ω`, adjusted Rand index

pub mod analysis;
pub mod dataio;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod relation;
pub mod synth;
pub mod trainer;

pub use nalgebra;

pub use dataio::{Dataset, LabeledSample};
pub use error::{Error, Result};
pub use linalg::SymMatrix;
pub use model::{NetworkConfig, RdnnModel};
pub use relation::{ClassRelation, FeatureRelation};
pub use trainer::{train, Method, TrainConfig, TrainMode, TrainOutcome, TrainReport};
