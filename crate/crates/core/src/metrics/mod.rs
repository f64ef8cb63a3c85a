//! Projection-quality metrics and stability protocols.

pub mod density;
pub mod procrustes;
pub mod rank;
pub mod report;
pub mod stability;

pub use density::{class_pair_kl, density_kl, dtm, kernel_density, stress, ClassPairKl};
pub use procrustes::procrustes_distance;
pub use rank::{continuity, f1, mrre_f, mrre_m, rank_metrics, trustworthiness, RankScores, RankTables};
pub use report::{evaluate, EvalSpec, MetricEntry, MetricKind, MetricParam, MetricReport};
pub use stability::{stability_init, stability_inits, stability_subsample, subsample_indices};
