//! Weak-label multiple-instance regression for slide-level TIL scoring.
//!
//! The engine trains a tile-scoring head on bags of pre-extracted tile
//! feature vectors using only a weak slide-level label, selects models by
//! validation AUC over binarized labels, and evaluates with rank and
//! regression statistics. It also ships the detection-count baseline,
//! a stratified patient-level cross-validation scheme, a hyperparameter
//! grid harness, a synthetic planted-signal generator, and heatmap
//! rendering of per-tile scores.

pub mod bag;
pub mod baseline;
pub mod grid;
pub mod heatmap;
pub mod io;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod splits;
pub mod synth;
pub mod train;

mod error;

pub use bag::{validate_bag, FeatureBag, TileFeature, TileGeometry};
pub use baseline::{tb_til_percent, DetectionSummary};
pub use error::{Error, Result};
pub use metrics::{EvalRecord, EvalReport, ScorePairs, TilClass};
pub use model::{BagPrediction, HeadKind, ModelHead};
pub use optim::{AdamHyper, AdamState};
pub use splits::{Role, SplitPlan};
pub use train::{TrainConfig, TrainResult};
