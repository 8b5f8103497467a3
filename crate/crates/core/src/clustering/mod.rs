//! Trajectory clustering: dynamic time warping, Ward hierarchical
//! clustering, DTW k-clustering with barycenter centers, and per-cluster
//! feature summaries.

mod dtw;
mod kcluster;
mod summary;
mod ward;

pub use dtw::{dtw, dtw_distance, LocalCost, WarpingResult};
pub use kcluster::{dtw_barycenter, dtw_kcluster, ClusterReport, EntityLabel, KClusterOptions, MemberAlignment};
pub use summary::{cluster_feature_summary, compound_annual_growth_pct, FeatureSummary};
pub use ward::{ward_cluster, Dendrogram, Merge};

use thiserror::Error;

use crate::panel::{standardize_series, PanelDataset, PanelError};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("sequence is empty")]
    EmptySequence,
    #[error("band {band} is narrower than the length difference {required}")]
    BandTooNarrow { band: usize, required: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("need at least 2 series, got {0}")]
    TooFewSeries(usize),
    #[error("cluster count {k} is invalid for {n} series")]
    InvalidK { k: usize, n: usize },
    #[error("cluster {cluster} has no members")]
    EmptyCluster { cluster: usize },
    #[error("entity `{0}` has no cluster label")]
    UnlabeledEntity(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Per-entity z-scored series of one variable, in panel entity order.
pub fn standardized_series(panel: &PanelDataset, code: &str) -> Result<Vec<Vec<f64>>, ClusterError> {
    let v = panel.variable_index(code)?;
    (0..panel.entities().len())
        .map(|e| Ok(standardize_series(&panel.series(e, v))?))
        .collect()
}
