//! A battery of metrics over a parameter grid, with CSV output.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use super::density::{dtm, density_kl, stress};
use super::rank::rank_metrics;
use crate::digest::matrix_digest;
use crate::error::{Result, UmatoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Trustworthiness,
    Continuity,
    TcF1,
    MrreF,
    MrreM,
    Kl,
    Dtm,
    Stress,
}

impl MetricKind {
    pub const ALL: [MetricKind; 8] = [
        MetricKind::Trustworthiness,
        MetricKind::Continuity,
        MetricKind::TcF1,
        MetricKind::MrreF,
        MetricKind::MrreM,
        MetricKind::Kl,
        MetricKind::Dtm,
        MetricKind::Stress,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MetricKind::Trustworthiness => "trustworthiness",
            MetricKind::Continuity => "continuity",
            MetricKind::TcF1 => "tc_f1",
            MetricKind::MrreF => "mrre_f",
            MetricKind::MrreM => "mrre_m",
            MetricKind::Kl => "kl",
            MetricKind::Dtm => "dtm",
            MetricKind::Stress => "stress",
        }
    }

    pub fn is_rank(self) -> bool {
        matches!(
            self,
            MetricKind::Trustworthiness
                | MetricKind::Continuity
                | MetricKind::TcF1
                | MetricKind::MrreF
                | MetricKind::MrreM
        )
    }

    pub fn is_density(self) -> bool {
        matches!(self, MetricKind::Kl | MetricKind::Dtm)
    }

    /// True when larger scores mean a better projection.
    pub fn higher_is_better(self) -> bool {
        self.is_rank()
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MetricKind {
    type Err = UmatoError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        MetricKind::ALL
            .into_iter()
            .find(|m| m.id() == key)
            .ok_or_else(|| UmatoError::invalid(format!("unknown metric '{s}'")))
    }
}

/// Parameter a score was computed with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricParam {
    K(usize),
    Sigma(f64),
    None,
}

impl fmt::Display for MetricParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricParam::K(k) => write!(f, "k={k}"),
            MetricParam::Sigma(s) => write!(f, "sigma={s}"),
            MetricParam::None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricEntry {
    pub metric: MetricKind,
    pub param: MetricParam,
    pub value: f64,
}

impl MetricEntry {
    /// Column name in the wide layout, e.g. `kl@sigma=0.1`.
    pub fn column(&self) -> String {
        match self.param {
            MetricParam::None => self.metric.id().to_string(),
            p => format!("{}@{}", self.metric, p),
        }
    }
}

/// Which metrics to compute and over which grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSpec {
    pub metrics: Vec<MetricKind>,
    pub ks: Vec<usize>,
    pub sigmas: Vec<f64>,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self {
            metrics: MetricKind::ALL.to_vec(),
            ks: vec![10, 50],
            sigmas: vec![0.1, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub entries: Vec<MetricEntry>,
    pub data_digest: String,
    pub projection_digest: String,
}

impl MetricReport {
    pub fn get(&self, metric: MetricKind, param: MetricParam) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.metric == metric && e.param == param)
            .map(|e| e.value)
    }

    /// One `metric,parameter,value` row per score.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("metric,parameter,value\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.metric, e.param, e.value));
        }
        out
    }

    /// Header line and a single row with one column per score.
    pub fn to_wide_csv(&self) -> String {
        let header: Vec<String> = std::iter::once("data_digest".to_string())
            .chain(std::iter::once("projection_digest".to_string()))
            .chain(self.entries.iter().map(MetricEntry::column))
            .collect();
        let row: Vec<String> = [self.data_digest.clone(), self.projection_digest.clone()]
            .into_iter()
            .chain(self.entries.iter().map(|e| e.value.to_string()))
            .collect();
        format!("{}\n{}\n", header.join(","), row.join(","))
    }
}

/// Evaluates `spec` on a (data, projection) pair. Inputs are used as given;
/// standardize them first for the distance-based scores.
pub fn evaluate(data: &Array2<f64>, proj: &Array2<f64>, spec: &EvalSpec) -> Result<MetricReport> {
    let wants = |m: MetricKind| spec.metrics.contains(&m);
    let mut entries = Vec::new();
    if spec.metrics.iter().any(|m| m.is_rank()) && !spec.ks.is_empty() {
        let scores = rank_metrics(data, proj, &spec.ks)?;
        for kind in MetricKind::ALL.into_iter().filter(|m| m.is_rank() && wants(*m)) {
            for s in &scores {
                let value = match kind {
                    MetricKind::Trustworthiness => s.trustworthiness,
                    MetricKind::Continuity => s.continuity,
                    MetricKind::TcF1 => s.tc_f1(),
                    MetricKind::MrreF => s.mrre_f,
                    _ => s.mrre_m,
                };
                entries.push(MetricEntry {
                    metric: kind,
                    param: MetricParam::K(s.k),
                    value,
                });
            }
        }
    }
    for kind in [MetricKind::Kl, MetricKind::Dtm].into_iter().filter(|m| wants(*m)) {
        for &sigma in &spec.sigmas {
            let value = if kind == MetricKind::Kl {
                density_kl(data, proj, sigma)?
            } else {
                dtm(data, proj, sigma)?
            };
            entries.push(MetricEntry {
                metric: kind,
                param: MetricParam::Sigma(sigma),
                value,
            });
        }
    }
    if wants(MetricKind::Stress) {
        entries.push(MetricEntry {
            metric: MetricKind::Stress,
            param: MetricParam::None,
            value: stress(data, proj)?,
        });
    }
    if let Some(bad) = entries.iter().find(|e| !e.value.is_finite()) {
        return Err(UmatoError::invalid(format!("{} is not finite", bad.column())));
    }
    Ok(MetricReport {
        entries,
        data_digest: matrix_digest(data),
        projection_digest: matrix_digest(proj),
    })
}
