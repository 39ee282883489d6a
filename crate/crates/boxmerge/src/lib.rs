//! boxmerge merges stochastic object-detection samples into object
//! observations with calibrated classification and spatial uncertainty.
//!
//! A sampling-based detector (dropout at inference, ensembles, ...) runs
//! several stochastic forward passes per image and yields a pile of
//! overlapping detections. This crate covers the full pipeline that turns
//! those piles into something usable:
//!
//! 1. [`affinity`] — spatial measures (IoU, PAC, EAC) and semantic
//!    modifiers (same winning label, symmetrized KL divergence) between
//!    detections.
//! 2. [`cluster`] — association of detections into per-object groups:
//!    sequential threshold clustering (BSAS), its intra-sample exclusive
//!    variant, sample-wise Hungarian assignment, and a from-scratch HDBSCAN
//!    over 2-D box embeddings.
//! 3. [`observation`] — merged observations with score entropy and spatial
//!    variance, plus the accept/reject rule at an uncertainty threshold.
//! 4. [`metrics`] — ground-truth matching and the evaluation suite:
//!    uncertainty error, AUROC, AUPR-In/Out, and mean average precision.
//! 5. [`synth`] — a seeded generator of synthetic detection corpora in
//!    closed-set, near open-set and distant open-set regimes.
//! 6. [`grid`] — the experiment runner that sweeps every
//!    affinity-clustering combination over a corpus and reports all metrics
//!    per dataset regime.
//!
//! See the crate examples for one runnable walkthrough per capability, and
//! the `boxmerge` binary for the command-line interface.

pub mod affinity;
pub mod cluster;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod model;
pub mod observation;
pub mod plot;
pub mod synth;

pub use affinity::{AffinityKind, SemanticModifier, SpatialAffinity};
pub use cluster::hdbscan::{EmbeddingKind, HdbscanConfig};
pub use cluster::{Cluster, ClusterConfig, ClusterMethod};
pub use error::{Error, Result};
pub use metrics::{Correctness, EvalRecord, GroundTruthObject};
pub use model::{BoundingBox, Detection, Observation, Regime, SampleSet, ScoreDistribution};
pub use observation::UncertaintyKind;
