//! Layout optimization: configuration, the two-phase pipeline and the
//! single-phase baseline.

pub mod curve;
pub mod dcp;
pub mod global;
pub mod local;
pub mod pca;
mod pipeline;

pub use curve::{cross_entropy, fit_ab, low_dim_similarity, CurveParams};
pub use dcp::place_dcps;
pub use global::{ce_gradient, ce_loss, global_phase, hub_weights, GlobalParams};
pub use local::{init_enns, local_phase, random_layout, update_knn_exclude_dcp, LocalParams};
pub use pca::{pca_init, pca_scores};
pub use pipeline::{umap_like, umato, umato_with_init, MethodEmbedder, UmatoRun};

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use ndarray::Array2;

use crate::dataset::{Dataset, Projection};
use crate::error::{Result, UmatoError};
use crate::neighbors::KnnBackend;

/// Per-coordinate gradient clip used by every optimizer here.
pub const GRAD_CLIP: f64 = 4.0;

/// Hyperparameters of the two-phase embedding (and the baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    /// Neighbors per point in the kNN graph.
    pub k: usize,
    /// Requested hub count.
    pub n_h: usize,
    /// Output dimensionality.
    pub dim: usize,
    pub global_epochs: usize,
    pub local_epochs: usize,
    pub min_dist: f64,
    /// Curve parameters; fitted from `min_dist` when unset.
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Weight of each negative sample.
    pub gamma: f64,
    /// Negative samples per edge.
    pub negative_samples: usize,
    pub epsilon: f64,
    pub hub_attract_penalty: f64,
    pub repulse_penalty: f64,
    /// Placed neighbors averaged when initializing an eNN.
    pub m_init: usize,
    pub lr_global: f64,
    pub lr_local: f64,
    pub seed: u64,
    pub knn_backend: KnnBackend,
    /// Jitter eNN initial positions. Disable only for exact-reproduction tests.
    pub init_noise: bool,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            k: 50,
            n_h: 300,
            dim: 2,
            global_epochs: 500,
            local_epochs: 100,
            min_dist: 0.1,
            a: None,
            b: None,
            gamma: 1.0,
            negative_samples: 5,
            epsilon: 1e-3,
            hub_attract_penalty: 0.1,
            repulse_penalty: 0.1,
            m_init: 10,
            lr_global: 1.0,
            lr_local: 1.0,
            seed: 0,
            knn_backend: KnnBackend::Auto,
            init_noise: true,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("k", self.k),
            ("n_h", self.n_h),
            ("dim", self.dim),
            ("global_epochs", self.global_epochs),
            ("local_epochs", self.local_epochs),
            ("m_init", self.m_init),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(UmatoError::invalid(format!("{name} must be at least 1")));
            }
        }
        let unit = [
            ("hub_attract_penalty", self.hub_attract_penalty),
            ("repulse_penalty", self.repulse_penalty),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(UmatoError::invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        let positive = [
            ("gamma", Some(self.gamma)),
            ("lr_global", Some(self.lr_global)),
            ("lr_local", Some(self.lr_local)),
            ("a", self.a),
            ("b", self.b),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(UmatoError::invalid(format!("{name} must be positive")));
                }
            }
        }
        if !(self.min_dist >= 0.0 && self.min_dist.is_finite()) {
            return Err(UmatoError::invalid("min_dist must be non-negative"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(UmatoError::invalid("epsilon must be non-negative"));
        }
        Ok(())
    }

    /// Curve parameters, fitting any that were not set explicitly.
    pub fn curve(&self) -> CurveParams {
        match (self.a, self.b) {
            (Some(a), Some(b)) => CurveParams { a, b },
            (a, b) => {
                let fit = fit_ab(self.min_dist);
                CurveParams {
                    a: a.unwrap_or(fit.a),
                    b: b.unwrap_or(fit.b),
                }
            }
        }
    }

    /// Stable 64-bit FNV-1a digest of every field, as 16 hex digits.
    pub fn digest(&self) -> String {
        let h = crate::digest::fnv1a64(format!("{self:?}").into_bytes());
        format!("{h:016x}")
    }

    /// `key=value` lines describing the configuration.
    pub fn describe(&self) -> Vec<String> {
        let curve = self.curve();
        vec![
            format!("k={}", self.k),
            format!("hub_num={}", self.n_h),
            format!("dim={}", self.dim),
            format!("global_epochs={}", self.global_epochs),
            format!("local_epochs={}", self.local_epochs),
            format!("min_dist={}", self.min_dist),
            format!("a={}", curve.a),
            format!("b={}", curve.b),
            format!("gamma={}", self.gamma),
            format!("negative_samples={}", self.negative_samples),
            format!("epsilon={}", self.epsilon),
            format!("hub_attract_penalty={}", self.hub_attract_penalty),
            format!("repulse_penalty={}", self.repulse_penalty),
            format!("m_init={}", self.m_init),
            format!("lr_global={}", self.lr_global),
            format!("lr_local={}", self.lr_local),
            format!("seed={}", self.seed),
            format!("knn={}", self.knn_backend),
            format!("init_noise={}", self.init_noise),
        ]
    }
}

/// Wall-clock time of one pipeline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub elapsed: Duration,
}

/// Loss history and stage timings of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptTrace {
    /// Exact cross-entropy before each global epoch.
    pub global_loss: Vec<f64>,
    /// Sampled objective accumulated over each local epoch.
    pub local_loss: Vec<f64>,
    pub stages: Vec<StageTiming>,
}

impl OptTrace {
    pub(crate) fn add_time(&mut self, stage: &'static str, elapsed: Duration) {
        match self.stages.iter_mut().find(|s| s.stage == stage) {
            Some(s) => s.elapsed += elapsed,
            None => self.stages.push(StageTiming { stage, elapsed }),
        }
    }

    pub fn stage_seconds(&self, stage: &str) -> f64 {
        self.stages
            .iter()
            .find(|s| s.stage == stage)
            .map(|s| s.elapsed.as_secs_f64())
            .unwrap_or(0.0)
    }

    /// `epoch,phase,loss` rows.
    pub fn loss_csv(&self) -> String {
        let mut out = String::from("epoch,phase,loss\n");
        for (e, l) in self.global_loss.iter().enumerate() {
            out.push_str(&format!("{e},global,{l}\n"));
        }
        for (e, l) in self.local_loss.iter().enumerate() {
            out.push_str(&format!("{e},local,{l}\n"));
        }
        out
    }

    /// `stage,seconds` rows.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("stage,seconds\n");
        for s in &self.stages {
            out.push_str(&format!("{},{:.6}\n", s.stage, s.elapsed.as_secs_f64()));
        }
        out
    }
}

/// Embedding methods exposed to the command line and the stability protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Umato,
    UmapLike,
    Pca,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Umato => "umato",
            Method::UmapLike => "umap-like",
            Method::Pca => "pca",
        })
    }
}

impl FromStr for Method {
    type Err = UmatoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "umato" => Ok(Method::Umato),
            "umap-like" | "umap_like" | "umap" => Ok(Method::UmapLike),
            "pca" => Ok(Method::Pca),
            other => Err(UmatoError::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Anything that maps a dataset to a projection, optionally from a given
/// initial layout.
pub trait Embedder: Sync {
    fn embed(&self, data: &Dataset, init: Option<&Array2<f64>>, seed: u64) -> Result<Projection>;

    fn name(&self) -> String;

    /// Width of the projections this embedder produces.
    fn output_dim(&self) -> usize {
        2
    }
}

/// Mixes a stream id into a seed (splitmix64 finalizer).
pub(crate) fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
