use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::{Dataset, Projection};
use crate::error::{Result, UmatoError};

/// Reads a headed, comma-separated file. Lines starting with `#` are skipped.
///
/// Row numbers in errors are 1-based file lines (the header is line 1) and
/// columns are 1-based. When `label_column` is given that column is removed
/// from the features; integer cells are used as-is, anything else is
/// dictionary-encoded in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;

    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.is_empty() {
        return Err(format_err(path, "missing header row"));
    }
    let label_idx = match label_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            UmatoError::Parse {
                path: path.to_path_buf(),
                row: 1,
                col: 0,
                msg: format!(
                    "unknown label column '{name}' (columns: {})",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            }
        })?),
        None => None,
    };
    let n_cols = headers.len();
    let n_features = n_cols - usize::from(label_idx.is_some());
    if n_features == 0 {
        return Err(format_err(path, "no feature columns"));
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != n_cols {
            return Err(UmatoError::Parse {
                path: path.to_path_buf(),
                row: line,
                col: record.len().min(n_cols) + 1,
                msg: format!("expected {n_cols} fields, found {}", record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| UmatoError::Parse {
                path: path.to_path_buf(),
                row: line,
                col: c + 1,
                msg: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(UmatoError::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    col: c + 1,
                    msg: format!("'{cell}' is not finite"),
                });
            }
            values.push(v);
        }
    }
    let n = values.len() / n_features;
    if n == 0 {
        return Err(format_err(path, "no data rows"));
    }
    let points = Array2::from_shape_vec((n, n_features), values)
        .map_err(|e| format_err(path, e.to_string()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut data = Dataset::new(points, name)?;
    if label_idx.is_some() {
        let parsed: Option<Vec<usize>> = raw_labels.iter().map(|s| s.parse().ok()).collect();
        data = match parsed {
            Some(labels) => data.with_labels(labels)?,
            None => {
                let (labels, names) = encode_labels(&raw_labels);
                data.with_labels(labels)?.with_label_names(names)
            }
        };
    }
    Ok(data)
}

fn encode_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut codes: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let labels = raw
        .iter()
        .map(|s| {
            *codes.entry(s.as_str()).or_insert_with(|| {
                names.push(s.clone());
                names.len() - 1
            })
        })
        .collect();
    (labels, names)
}

/// Loads the mammoth skeleton point cloud: exactly three coordinate columns,
/// plus an optional `label` column.
pub fn load_mammoth(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let has_label = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .and_then(|mut r| r.headers().map(|h| h.iter().any(|c| c == "label")))
        .map_err(|e| csv_err(path, e))?;
    let data = load_csv(path, has_label.then_some("label"))?;
    if data.n_features() != 3 {
        return Err(format_err(
            path,
            format!("expected 3 dimensions, found {}", data.n_features()),
        ));
    }
    Ok(data)
}

/// Writes `data` with columns `f0..f{D-1}` and `label` when labels exist.
pub fn save_dataset_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset_csv(data, path, &[])
}

/// Like [`save_dataset_csv`], with `#`-prefixed comment lines before the header.
/// Dictionary-encoded labels also get a `<path>.labels.csv` mapping file.
pub fn write_dataset_csv(data: &Dataset, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let header: Vec<String> = (0..data.n_features()).map(|j| format!("f{j}")).collect();
    let body = render(&header, data.points(), data.labels(), comments);
    fs::write(path, body).map_err(|e| UmatoError::io(path, e))?;
    if let Some(names) = data.label_names() {
        let map_path = label_map_path(path);
        let mut w = csv::Writer::from_path(&map_path).map_err(|e| csv_err(&map_path, e))?;
        w.write_record(["label", "name"]).map_err(|e| csv_err(&map_path, e))?;
        for (code, name) in names.iter().enumerate() {
            w.write_record([code.to_string().as_str(), name.as_str()])
                .map_err(|e| csv_err(&map_path, e))?;
        }
        w.flush().map_err(|e| UmatoError::io(&map_path, e))?;
    }
    Ok(())
}

fn label_map_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".labels.csv");
    PathBuf::from(s)
}

/// Writes projection coordinates as `x,y(,z,...)` plus an optional `label` column.
pub fn save_projection_csv(
    proj: &Projection,
    labels: Option<&[usize]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_projection_csv(proj, labels, path, &[])
}

pub fn write_projection_csv(
    proj: &Projection,
    labels: Option<&[usize]>,
    path: impl AsRef<Path>,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    if proj.n_points() == 0 || proj.dim() == 0 {
        return Err(UmatoError::invalid("refusing to write an empty projection"));
    }
    if let Some(l) = labels {
        if l.len() != proj.n_points() {
            return Err(UmatoError::invalid(format!(
                "{} labels for {} projected points",
                l.len(),
                proj.n_points()
            )));
        }
    }
    let header: Vec<String> = (0..proj.dim()).map(axis_name).collect();
    let body = render(&header, &proj.coords, labels, comments);
    fs::write(path, body).map_err(|e| UmatoError::io(path, e))
}

fn axis_name(j: usize) -> String {
    match j {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("x{j}"),
    }
}

fn render(header: &[String], m: &Array2<f64>, labels: Option<&[usize]>, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(&header.join(","));
    if labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for (i, row) in m.rows().into_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        if let Some(l) = labels {
            out.push(',');
            out.push_str(&l[i].to_string());
        }
        out.push('\n');
    }
    out
}

fn csv_err(path: &Path, e: csv::Error) -> UmatoError {
    let msg = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => UmatoError::io(path, io),
        _ => format_err(path, msg),
    }
}

fn format_err(path: &Path, msg: impl Into<String>) -> UmatoError {
    UmatoError::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}
