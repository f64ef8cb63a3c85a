//! Two-phase hub-anchored dimensionality reduction.
//!
//! A small set of high-traffic "hub" points is laid out first with the exact
//! fuzzy cross-entropy objective, which fixes the global arrangement. The
//! remaining reachable points are then refined with negative sampling while
//! the hubs stay (mostly) put, and disconnected points are dropped onto the
//! centroid of their neighbors. The crate also carries the projection-quality
//! metrics and stability protocols used to evaluate embeddings.

pub mod classify;
pub mod dataset;
pub mod digest;
pub mod embed;
pub mod error;
pub mod metrics;
pub mod neighbors;

pub use classify::{classify_points, knn_frequency, PointClass, PointClassification};
pub use dataset::{standardize, Dataset, Projection};
pub use embed::{umap_like, umato, EmbedConfig, Embedder, Method, OptTrace};
pub use error::{Result, UmatoError};
pub use neighbors::{FuzzyGraph, KnnIndex};
