use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::global::{global_phase, hub_weights, GlobalParams};
use super::local::{
    init_enns, local_phase, negative_sampling_sgd, negative_weights, update_knn_exclude_dcp,
    LocalParams, SgdEdge,
};
use super::pca::pca_init;
use super::{place_dcps, sub_seed, EmbedConfig, Embedder, Method, OptTrace};
use crate::classify::{classify_points, PointClassification};
use crate::dataset::{Dataset, Projection};
use crate::error::{Result, UmatoError};
use crate::neighbors::{build_knn, compute_rho_sigma, fuzzy_weights};

/// Output of a two-phase run.
#[derive(Debug, Clone)]
pub struct UmatoRun {
    pub projection: Projection,
    pub partition: PointClassification,
    pub trace: OptTrace,
}

fn check_inputs(data: &Dataset, cfg: &EmbedConfig, init: Option<&Array2<f64>>) -> Result<()> {
    cfg.validate()?;
    let n = data.n_points();
    if n <= cfg.k {
        return Err(UmatoError::NeighborCount { k: cfg.k, n });
    }
    if cfg.dim > data.n_features() {
        return Err(UmatoError::invalid(format!(
            "cannot embed {}-dimensional data into {} dimensions",
            data.n_features(),
            cfg.dim
        )));
    }
    if let Some(init) = init {
        if init.dim() != (n, cfg.dim) {
            return Err(UmatoError::invalid(format!(
                "initial layout is {:?}, expected ({n}, {})",
                init.dim(),
                cfg.dim
            )));
        }
    }
    Ok(())
}

fn local_params(cfg: &EmbedConfig, epochs: usize) -> LocalParams {
    LocalParams {
        curve: cfg.curve(),
        epochs,
        learning_rate: cfg.lr_local,
        gamma: cfg.gamma,
        negative_samples: cfg.negative_samples,
        epsilon: cfg.epsilon,
        hub_attract_penalty: cfg.hub_attract_penalty,
        repulse_penalty: cfg.repulse_penalty,
    }
}

/// Two-phase embedding with PCA-initialized hubs.
///
/// The caller is responsible for standardizing `data`.
pub fn umato(data: &Dataset, cfg: &EmbedConfig) -> Result<UmatoRun> {
    umato_with_init(data, cfg, None)
}

/// Two-phase embedding; when `init` is given its hub rows replace the PCA
/// initialization of the hub layout.
pub fn umato_with_init(
    data: &Dataset,
    cfg: &EmbedConfig,
    init: Option<&Array2<f64>>,
) -> Result<UmatoRun> {
    check_inputs(data, cfg, init)?;
    let n = data.n_points();
    let mut trace = OptTrace::default();

    let clock = Instant::now();
    let knn = build_knn(data, cfg.k, cfg.knn_backend, cfg.seed)?;
    trace.add_time("knn", clock.elapsed());

    let clock = Instant::now();
    let partition = classify_points(&knn, cfg.n_h.min(n))?;
    trace.add_time("classify", clock.elapsed());
    log::debug!(
        "{} hubs, {} eNNs, {} disconnected",
        partition.hubs.len(),
        partition.enns.len(),
        partition.dcps.len()
    );

    let clock = Instant::now();
    let hubs = &partition.hubs;
    let v = hub_weights(data, hubs, cfg.k)?;
    let hub_init = match init {
        Some(m) => m.select(Axis(0), hubs),
        None if hubs.len() >= 2 => pca_init(&data.subset(hubs)?, cfg.dim)?,
        None => Array2::zeros((hubs.len(), cfg.dim)),
    };
    trace.add_time("init", clock.elapsed());

    let clock = Instant::now();
    let hub_layout = if hubs.len() >= 2 {
        let params = GlobalParams {
            curve: cfg.curve(),
            epochs: cfg.global_epochs,
            learning_rate: cfg.lr_global,
            epsilon: cfg.epsilon,
        };
        let (layout, losses) = global_phase(&hub_init, &v, &params)?;
        trace.global_loss = losses;
        layout
    } else {
        log::warn!("only {} hub(s); skipping the global phase", hubs.len());
        hub_init
    };
    trace.add_time("global", clock.elapsed());

    let clock = Instant::now();
    let y0 = init_enns(
        &partition,
        &knn,
        &hub_layout,
        cfg.m_init,
        cfg.init_noise,
        sub_seed(cfg.seed, 1),
    )?;
    trace.add_time("init", clock.elapsed());

    let clock = Instant::now();
    let local_knn = update_knn_exclude_dcp(data, &knn, &partition)?;
    let (rho, sigma) = compute_rho_sigma(&local_knn);
    let graph = fuzzy_weights(&local_knn, &rho, &sigma)?;
    let (y1, losses) = local_phase(
        &graph,
        &partition,
        &y0,
        &local_params(cfg, cfg.local_epochs),
        sub_seed(cfg.seed, 2),
    )?;
    trace.local_loss = losses;
    trace.add_time("local", clock.elapsed());

    let clock = Instant::now();
    let y = place_dcps(&partition, &knn, &y1)?;
    trace.add_time("dcp", clock.elapsed());

    let projection = Projection::new(y, cfg.seed, cfg.digest())?;
    Ok(UmatoRun {
        projection,
        partition,
        trace,
    })
}

/// Single-phase baseline: PCA initialization, then negative-sampling
/// refinement of every point over the full fuzzy graph for
/// `5 * local_epochs` epochs, visiting each edge with probability
/// proportional to its weight.
pub fn umap_like(data: &Dataset, cfg: &EmbedConfig, init: Option<&Array2<f64>>) -> Result<(Projection, OptTrace)> {
    check_inputs(data, cfg, init)?;
    let n = data.n_points();
    let mut trace = OptTrace::default();

    let clock = Instant::now();
    let knn = build_knn(data, cfg.k, cfg.knn_backend, cfg.seed)?;
    trace.add_time("knn", clock.elapsed());

    let clock = Instant::now();
    let mut y = match init {
        Some(m) => m.clone(),
        None => pca_init(data, cfg.dim)?,
    };
    trace.add_time("init", clock.elapsed());

    let clock = Instant::now();
    let (rho, sigma) = compute_rho_sigma(&knn);
    let graph = fuzzy_weights(&knn, &rho, &sigma)?;
    // Edges are sampled in proportion to their weight, as UMAP does.
    let max_v = graph.edges().iter().map(|e| e.weight).fold(0.0, f64::max);
    let mut edges: Vec<SgdEdge> = graph
        .edges()
        .iter()
        .filter(|e| e.weight > 0.0)
        .flat_map(|e| {
            [
                SgdEdge::sampled(e.i, e.j, e.weight, max_v),
                SgdEdge::sampled(e.j, e.i, e.weight, max_v),
            ]
        })
        .collect();
    let weights = negative_weights(&graph);
    let ones = vec![1.0; n];
    let zeros = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 2));
    trace.local_loss = negative_sampling_sgd(
        &mut y,
        &mut edges,
        &weights,
        &ones,
        &zeros,
        &local_params(cfg, 5 * cfg.local_epochs),
        &mut rng,
    )?;
    trace.add_time("local", clock.elapsed());

    Ok((Projection::new(y, cfg.seed, cfg.digest())?, trace))
}

/// A [`Method`] bound to a configuration. The `seed` passed to
/// [`Embedder::embed`] replaces `config.seed`.
#[derive(Debug, Clone)]
pub struct MethodEmbedder {
    pub method: Method,
    pub config: EmbedConfig,
}

impl MethodEmbedder {
    pub fn new(method: Method, config: EmbedConfig) -> Self {
        Self { method, config }
    }
}

impl Embedder for MethodEmbedder {
    fn embed(&self, data: &Dataset, init: Option<&Array2<f64>>, seed: u64) -> Result<Projection> {
        let cfg = EmbedConfig {
            seed,
            ..self.config.clone()
        };
        match self.method {
            Method::Umato => Ok(umato_with_init(data, &cfg, init)?.projection),
            Method::UmapLike => Ok(umap_like(data, &cfg, init)?.0),
            Method::Pca => Projection::new(pca_init(data, cfg.dim)?, seed, cfg.digest()),
        }
    }

    fn name(&self) -> String {
        self.method.to_string()
    }

    fn output_dim(&self) -> usize {
        self.config.dim
    }
}
