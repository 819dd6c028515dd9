//! Segmentation accuracy, realism statistics, texture descriptors and t-SNE.

mod clahe;
mod features;
mod histogram;
mod report;
mod segmentation;
mod ssim;
mod tsne;

pub use clahe::{clahe, ClaheParams};
pub use features::{
    mean_pairwise_distance, read_feature_csv, standardize, texture_features, write_feature_csv,
    FeatureVector, FEATURE_NAMES,
};
pub use histogram::{histogram, histogram_overlap, shannon_entropy};
pub use report::{evaluate_realism, evaluate_segmentation, AggregateMetrics, MetricsReport, PairMetrics};
pub use segmentation::{boundary_f1, boundary_scores, iou, iou_interior, squared_distance_transform, BoundaryScores};
pub use ssim::ssim;
pub use tsne::{
    calibrate_affinities, read_embedding_csv, silhouette, tsne, write_embedding_csv, Affinities, Embedding2D,
    TsneParams, TsneRun,
};

/// Default Boundary F1 tolerance in pixels.
pub const DEFAULT_BF1_TOLERANCE: f64 = 2.0;
