//! Point sets, projections and the preprocessing applied before embedding.

mod csv_io;
mod synthetic;

pub use csv_io::{
    load_csv, load_mammoth, save_dataset_csv, save_projection_csv, write_dataset_csv,
    write_projection_csv,
};
pub use synthetic::{gen_s_curve, gen_spheres, gen_swiss_roll, SpheresParams};

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Result, UmatoError};

/// A dense `N x D` point set with optional integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Array2<f64>,
    labels: Option<Vec<usize>>,
    label_names: Option<Vec<String>>,
    name: String,
}

impl Dataset {
    pub fn new(points: Array2<f64>, name: impl Into<String>) -> Result<Self> {
        check_matrix(&points)?;
        Ok(Self {
            points,
            labels: None,
            label_names: None,
            name: name.into(),
        })
    }

    /// Attaches labels; `labels.len()` must equal the number of points.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_points() {
            return Err(UmatoError::invalid(format!(
                "{} labels for {} points",
                labels.len(),
                self.n_points()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Names for dictionary-encoded labels, indexed by label value.
    pub fn with_label_names(mut self, names: Vec<String>) -> Self {
        self.label_names = Some(names);
        self
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.points.ncols()
    }

    /// Rows at `indices`, in that order, with their labels.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let points = self.points.select(Axis(0), indices);
        let mut out = Dataset::new(points, self.name.clone())?;
        if let Some(labels) = &self.labels {
            out.labels = Some(indices.iter().map(|&i| labels[i]).collect());
        }
        out.label_names = self.label_names.clone();
        Ok(out)
    }
}

/// An `N x d` embedding. Row `i` belongs to row `i` of the source dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coords: Array2<f64>,
    pub seed: u64,
    pub config_digest: String,
}

impl Projection {
    pub fn new(coords: Array2<f64>, seed: u64, config_digest: impl Into<String>) -> Result<Self> {
        check_matrix(&coords)?;
        Ok(Self {
            coords,
            seed,
            config_digest: config_digest.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn n_points(&self) -> usize {
        self.coords.nrows()
    }
}

pub(crate) fn check_matrix(m: &Array2<f64>) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(UmatoError::invalid(format!(
            "matrix must be non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    check_finite(m)
}

pub(crate) fn check_finite(m: &Array2<f64>) -> Result<()> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(UmatoError::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Column-wise z-scoring with population variance. Constant columns map to 0.
pub fn standardize_matrix(m: &Array2<f64>) -> Result<Array2<f64>> {
    check_finite(m)?;
    let n = m.nrows();
    if n < 2 {
        return Err(UmatoError::invalid(format!(
            "standardization needs at least 2 rows, got {n}"
        )));
    }
    let mut out = m.clone();
    for mut col in out.columns_mut() {
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
        let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let scale = col.iter().fold(mean.abs(), |acc, v| acc.max(v.abs()));
        // Variance at rounding level means the column was constant.
        if var.sqrt() <= 1e-12 * scale || var == 0.0 {
            col.fill(0.0);
        } else {
            let sd = var.sqrt();
            col.mapv_inplace(|v| v / sd);
        }
    }
    Ok(out)
}

/// Standardizes every feature column of `data`, keeping labels.
pub fn standardize(data: &Dataset) -> Result<Dataset> {
    let points = standardize_matrix(data.points())?;
    Ok(Dataset {
        points,
        labels: data.labels.clone(),
        label_names: data.label_names.clone(),
        name: data.name.clone(),
    })
}
