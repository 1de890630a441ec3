//! Image similarity networks for studying coordinated image dissemination.
//!
//! The crate turns per-image embedding vectors into exact k-nearest-neighbor
//! similarity graphs and analyses them:
//!
//! * [`ingest`] loads the manifest and `SIMVEC01` vector files;
//! * [`simnet`] builds the union-symmetrized k-NN graph with `k = floor(ln N)`;
//! * [`netmetrics`] computes clustering coefficient and fragmentation;
//! * [`communities`] runs deterministic Louvain and summarizes clusters;
//! * [`layout`] computes ForceAtlas2 positions;
//! * [`fold`] projects image graphs onto accounts and countries;
//! * [`export`] writes GraphML, JSON, positions CSV and SVG;
//! * `pipeline` (feature `pipeline`) chains everything from a config file.

pub mod communities;
pub mod export;
pub mod fold;
pub mod ingest;
pub mod layout;
pub mod netmetrics;
#[cfg(feature = "pipeline")]
pub mod pipeline;
pub mod simnet;
pub mod synth;

pub use communities::{louvain, modularity, Partition, Weighting};
pub use ingest::{DatasetHandle, FeatureMatrix, ImageRecord};
pub use layout::{run_layout, Fa2Params};
pub use netmetrics::{metrics_report, NetworkMetrics};
pub use simnet::{build_image_graph, KnnParams, SimilarityGraph, Topology};
