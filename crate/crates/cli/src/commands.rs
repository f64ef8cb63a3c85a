//! Subcommand implementations.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umato::dataset::{
    gen_s_curve, gen_spheres, gen_swiss_roll, load_csv, standardize, standardize_matrix, write_dataset_csv,
    write_projection_csv, SpheresParams,
};
use umato::embed::{pca_init, umap_like, umato, EmbedConfig, Embedder, Method, MethodEmbedder, OptTrace};
use umato::metrics::{class_pair_kl, evaluate, stability_init, stability_subsample, EvalSpec, MetricKind, MetricParam};
use umato::{Dataset, Projection};

use crate::args::{
    Command, DatasetKind, EvaluateArgs, GenerateArgs, HeatmapArgs, InputArgs, MethodArg, PlotArgs,
    ProjectArgs, StabilityArgs, StabilityMode, SweepArgs,
};
use crate::config::{embed_config, ConfigFile};
use crate::{svg, UsageError};

/// Hub counts below this trigger a warning; the global layout gets too coarse.
const LOW_HUB_WARNING: usize = 20;
const SUBSAMPLE_RATE_RANGE: (f64, f64) = (0.10, 0.99);

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(&a),
        Command::Project(a) => project(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
        Command::Stability(a) => stability(&a),
        Command::SweepHubs(a) => sweep_hubs(&a),
        Command::Plot(a) => plot(&a),
        Command::Heatmap(a) => heatmap(&a),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn method_of(arg: MethodArg) -> Method {
    match arg {
        MethodArg::Umato => Method::Umato,
        MethodArg::UmapLike => Method::UmapLike,
        MethodArg::Pca => Method::Pca,
    }
}

fn resolve_method(flag: Option<MethodArg>, file: &mut ConfigFile) -> Result<Method> {
    let name = file.resolve("method", flag.map(|m| method_of(m).to_string()), Method::Umato.to_string())?;
    name.parse::<Method>().map_err(|e| usage(e.to_string()))
}

fn write_text(path: &Path, comments: &[String], body: &str) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(body);
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn kind_name(kind: DatasetKind) -> &'static str {
    match kind {
        DatasetKind::SwissRoll => "swiss-roll",
        DatasetKind::SCurve => "s-curve",
        DatasetKind::Spheres => "spheres",
    }
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let mut file = ConfigFile::load(a.config.as_deref())?;
    file.note(format!("dataset={}", kind_name(a.kind)));
    let seed = file.resolve("seed", a.seed, 0u64)?;
    let data = match a.kind {
        DatasetKind::SwissRoll | DatasetKind::SCurve => {
            if a.n_inner.is_some() || a.n_per_inner.is_some() || a.n_outer.is_some() || a.dim.is_some() || a.radius.is_some() {
                return Err(usage("--n-inner, --n-per-inner, --n-outer, --dim and --radius only apply to spheres"));
            }
            let n = file.resolve("n", a.n, 2000usize)?;
            if a.kind == DatasetKind::SwissRoll {
                gen_swiss_roll(n, seed)?
            } else {
                gen_s_curve(n, seed)?
            }
        }
        DatasetKind::Spheres => {
            if a.n.is_some() {
                return Err(usage("--n does not apply to spheres; use --n-per-inner and --n-outer"));
            }
            let d = SpheresParams::default();
            let params = SpheresParams {
                n_inner_spheres: file.resolve("n_inner", a.n_inner, d.n_inner_spheres)?,
                n_per_inner: file.resolve("n_per_inner", a.n_per_inner, d.n_per_inner)?,
                n_outer: file.resolve("n_outer", a.n_outer, d.n_outer)?,
                dim: file.resolve("dim", a.dim, d.dim)?,
                inner_radius: file.resolve("radius", a.radius, d.inner_radius)?,
            };
            gen_spheres(&params, seed)?.0
        }
    };
    file.finish()?;
    write_dataset_csv(&data, &a.out, file.echo())?;
    Ok(())
}

fn load_input(input: &InputArgs, file: &mut ConfigFile) -> Result<Dataset> {
    let label = file.resolve_opt("label_column", input.label_column.clone())?;
    let no_std = file.resolve_switch("no_standardize", input.no_standardize, false)?;
    let data = load_csv(&input.input, label.as_deref())?;
    Ok(if no_std { data } else { standardize(&data)? })
}

fn warn_low_hubs(cfg: &EmbedConfig, method: Method, n: usize) {
    if method == Method::Umato && cfg.n_h < LOW_HUB_WARNING && cfg.n_h < n {
        log::warn!(
            "hub_num={} is small for {} points; the global layout rests on very few anchors",
            cfg.n_h,
            n
        );
    }
}

fn project(a: &ProjectArgs) -> Result<()> {
    let mut file = ConfigFile::load(a.config.as_deref())?;
    let method = resolve_method(a.method, &mut file)?;
    let data = load_input(&a.input, &mut file)?;
    let cfg = embed_config(&a.embed, &mut file)?;
    file.finish()?;
    if a.partition_out.is_some() && method != Method::Umato {
        return Err(usage("--partition-out needs --method umato"));
    }
    warn_low_hubs(&cfg, method, data.n_points());

    let (projection, trace, partition) = match method {
        Method::Umato => {
            let run = umato(&data, &cfg)?;
            (run.projection, run.trace, Some(run.partition))
        }
        Method::UmapLike => {
            let (p, t) = umap_like(&data, &cfg, None)?;
            (p, t, None)
        }
        Method::Pca => {
            let clock = Instant::now();
            let p = Projection::new(pca_init(&data, cfg.dim)?, cfg.seed, cfg.digest())?;
            let mut t = OptTrace::default();
            t.stages.push(umato::embed::StageTiming {
                stage: "init",
                elapsed: clock.elapsed(),
            });
            (p, t, None)
        }
    };

    let header = effective_header(file.echo(), &cfg);
    write_projection_csv(&projection, data.labels(), &a.out, &header)?;

    for s in &trace.stages {
        eprintln!("{:<9}{:>10.3} s", s.stage, s.elapsed.as_secs_f64());
    }
    if let Some(path) = &a.trace_out {
        write_text(path, &header, &trace.loss_csv())?;
    }
    if let Some(path) = &a.timing_out {
        write_text(path, &header, &trace.timing_csv())?;
    }
    if let (Some(path), Some(part)) = (&a.partition_out, &partition) {
        let ranks = part.hub_rank();
        let mut body = String::from("index,class,selection_rank\n");
        for i in 0..part.n_points() {
            let rank = ranks[i].map(|r| r.to_string()).unwrap_or_default();
            body.push_str(&format!("{i},{},{rank}\n", part.class_of(i).as_str()));
        }
        write_text(path, &header, &body)?;
    }
    Ok(())
}

/// Echoed settings followed by the full embedding configuration, with the
/// fitted curve parameters, without repeating keys.
fn effective_header(echo: &[String], cfg: &EmbedConfig) -> Vec<String> {
    let described = cfg.describe();
    let key = |l: &str| l.split('=').next().unwrap_or_default().to_string();
    let keys: Vec<String> = described.iter().map(|l| key(l)).collect();
    echo.iter()
        .filter(|l| !keys.contains(&key(l)))
        .cloned()
        .chain(described)
        .collect()
}

/// First non-comment line of a CSV file, split on commas.
fn csv_header(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let line = text
        .lines()
        .find(|l| !l.trim_start().starts_with('#'))
        .ok_or_else(|| anyhow::anyhow!("{}: missing header row", path.display()))?;
    Ok(line.split(',').map(|s| s.trim().to_string()).collect())
}

/// Leading `#` lines of a file, without the marker.
fn csv_comments(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .map(|l| l.trim_start().trim_start_matches('#').trim().to_string())
        .collect())
}

/// Loads a projection CSV, treating a `label` column as labels.
fn load_projection(path: &Path) -> Result<Dataset> {
    let has_label = csv_header(path)?.iter().any(|h| h == "label");
    Ok(load_csv(path, has_label.then_some("label"))?)
}

fn parse_metrics(names: &[String]) -> Result<Vec<MetricKind>> {
    names
        .iter()
        .map(|n| n.parse::<MetricKind>().map_err(|e| usage(e.to_string())))
        .collect()
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let mut file = ConfigFile::load(a.config.as_deref())?;
    let default = EvalSpec::default();
    let metric_list = file.resolve_opt("metrics", a.metrics.as_ref().map(|m| m.join(",")))?;
    let metrics = match metric_list {
        Some(list) => parse_metrics(&list.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>())?,
        None => default.metrics.clone(),
    };
    let ks = match file.resolve_opt("k", a.ks.as_ref().map(|v| join(v)))? {
        Some(list) => parse_list::<usize>(&list, "k")?,
        None => default.ks.clone(),
    };
    let sigmas = match file.resolve_opt("sigma", a.sigmas.as_ref().map(|v| join(v)))? {
        Some(list) => parse_list::<f64>(&list, "sigma")?,
        None => default.sigmas.clone(),
    };
    let label = file.resolve_opt("label_column", a.label_column.clone())?;
    let no_std = file.resolve_switch("no_standardize", a.no_standardize, false)?;
    let class_sigma = file.resolve("class_kl_sigma", a.class_kl_sigma, 0.1)?;
    file.finish()?;
    if metrics.is_empty() {
        return Err(usage("no metrics selected"));
    }
    if ks.contains(&0) || sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(usage("k values must be positive and sigma values must be > 0"));
    }

    let data = load_csv(&a.data, label.as_deref())?;
    let proj = load_projection(&a.projection)?;
    if data.n_points() != proj.n_points() {
        bail!("{} data rows but {} projection rows", data.n_points(), proj.n_points());
    }
    let (hd, ld) = if no_std {
        (data.points().clone(), proj.points().clone())
    } else {
        (standardize_matrix(data.points())?, standardize_matrix(proj.points())?)
    };
    let spec = EvalSpec { metrics, ks, sigmas };
    let report = evaluate(&hd, &ld, &spec)?;
    let body = if a.wide { report.to_wide_csv() } else { report.to_long_csv() };
    write_text(&a.out, file.echo(), &body)?;

    if let Some(path) = &a.class_kl_out {
        let labels = data
            .labels()
            .or(proj.labels())
            .ok_or_else(|| usage("--class-kl-out needs labels (--label-column or a label column in the projection)"))?;
        let pairs = class_pair_kl(&hd, &ld, labels, class_sigma)?;
        let names: Vec<String> = pairs
            .classes
            .iter()
            .map(|&c| match data.label_names() {
                Some(n) if c < n.len() => n[c].clone(),
                _ => c.to_string(),
            })
            .collect();
        let mut body = format!("class,{}\n", names.join(","));
        for (i, name) in names.iter().enumerate() {
            let row: Vec<String> = pairs.matrix.row(i).iter().map(|v| v.to_string()).collect();
            body.push_str(&format!("{name},{}\n", row.join(",")));
        }
        let mut comments = file.echo().to_vec();
        comments.push(format!("class_kl_total={}", pairs.total));
        write_text(path, &comments, &body)?;
    }
    Ok(())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(list: &str, what: &str) -> Result<Vec<T>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| usage(format!("bad {what} value '{}'", s.trim())))
        })
        .collect()
}

fn stability(a: &StabilityArgs) -> Result<()> {
    let mut file = ConfigFile::load(a.config.as_deref())?;
    let method = resolve_method(a.method, &mut file)?;
    let trials = file.resolve("trials", a.trials, 10usize)?;
    let inits = file.resolve("inits", a.inits, 3usize)?;
    let data = load_input(&a.input, &mut file)?;
    let cfg = embed_config(&a.embed, &mut file)?;
    file.finish()?;
    if trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    file.note(format!(
        "mode={}",
        match a.mode {
            StabilityMode::Subsample => "subsample",
            StabilityMode::Init => "init",
        }
    ));
    warn_low_hubs(&cfg, method, data.n_points());

    let embedder = MethodEmbedder::new(method, cfg.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut body = String::from("trial,rate,distance,min,max\n");
    let mut distances = Vec::with_capacity(trials);
    for t in 0..trials {
        let seed = cfg.seed.wrapping_add(t as u64);
        let (rate, d) = match a.mode {
            StabilityMode::Subsample => {
                let rate = rng.random_range(SUBSAMPLE_RATE_RANGE.0..=SUBSAMPLE_RATE_RANGE.1);
                (Some(rate), stability_subsample(&data, &embedder as &dyn Embedder, rate, seed)?)
            }
            StabilityMode::Init => (None, stability_init(&data, &embedder, inits, seed)?),
        };
        let rate = rate.map(|r| r.to_string()).unwrap_or_default();
        body.push_str(&format!("{t},{rate},{d},,\n"));
        distances.push(d);
    }
    let mean = distances.iter().sum::<f64>() / trials as f64;
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    body.push_str(&format!("mean,,{mean},{min},{max}\n"));
    write_text(&a.out, file.echo(), &body)
}

/// `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    let spec = spec.trim();
    if let Some((start, rest)) = spec.split_once(':') {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(usage(format!("grid '{spec}' is not start:stop:step")));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("grid '{spec}' has a bad number '{s}'")))
        };
        let (start, stop, step) = (num(start)?, num(parts[0])?, num(parts[1])?);
        if step == 0 || start == 0 || stop < start {
            return Err(usage(format!("grid '{spec}' needs 0 < start <= stop and step > 0")));
        }
        Ok((start..=stop).step_by(step).collect())
    } else {
        let grid = parse_list::<usize>(spec, "grid")?;
        if grid.is_empty() || grid.contains(&0) {
            return Err(usage("grid values must be positive"));
        }
        Ok(grid)
    }
}

fn sweep_hubs(a: &SweepArgs) -> Result<()> {
    let mut file = ConfigFile::load(a.config.as_deref())?;
    let grid = parse_grid(&file.resolve("grid", a.grid.clone(), "20:400:20".to_string())?)?;
    let data = load_input(&a.input, &mut file)?;
    let base = embed_config(&a.embed, &mut file)?;
    file.finish()?;
    let hd = standardize_matrix(data.points())?;
    let spec = EvalSpec {
        metrics: vec![MetricKind::TcF1, MetricKind::Kl],
        ks: vec![10],
        sigmas: vec![0.1],
    };
    let mut body = String::from("hub_num,hubs,tc_f1,kl\n");
    for n_h in grid {
        let cfg = EmbedConfig { n_h, ..base.clone() };
        let clock = Instant::now();
        let run = umato(&data, &cfg)?;
        let ld = standardize_matrix(&run.projection.coords)?;
        let report = evaluate(&hd, &ld, &spec)?;
        let f1 = report.get(MetricKind::TcF1, MetricParam::K(10)).unwrap_or(f64::NAN);
        let kl = report.get(MetricKind::Kl, MetricParam::Sigma(0.1)).unwrap_or(f64::NAN);
        log::info!("hub_num={n_h}: {:.2} s", clock.elapsed().as_secs_f64());
        body.push_str(&format!("{n_h},{},{f1},{kl}\n", run.partition.hubs.len()));
    }
    write_text(&a.out, file.echo(), &body)
}

fn plot(a: &PlotArgs) -> Result<()> {
    let proj = load_projection(&a.input)?;
    let labels = if a.color_by_label {
        Some(
            proj.labels()
                .ok_or_else(|| anyhow::anyhow!("{} has no label column", a.input.display()))?,
        )
    } else {
        None
    };
    let svg = svg::scatter(proj.points(), labels, &csv_comments(&a.input)?)?;
    fs::write(&a.out, svg).with_context(|| format!("writing {}", a.out.display()))
}

/// Reads a `class,<names...>` matrix CSV.
fn load_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| anyhow::anyhow!("{}: missing header row", path.display()))?
        .split(',')
        .collect();
    let c = header.len().saturating_sub(1);
    if c == 0 {
        bail!("{}: header has no class columns", path.display());
    }
    let mut names = Vec::new();
    let mut values = Vec::new();
    for (r, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != c + 1 {
            bail!("{}: row {} has {} fields, expected {}", path.display(), r + 1, cells.len(), c + 1);
        }
        names.push(cells[0].trim().to_string());
        for cell in &cells[1..] {
            let v: f64 = cell
                .trim()
                .parse()
                .with_context(|| format!("{}: row {}: '{}' is not a number", path.display(), r + 1, cell.trim()))?;
            values.push(v);
        }
    }
    if names.len() != c {
        bail!("{}: {} rows for {} columns", path.display(), names.len(), c);
    }
    Ok((names, Array2::from_shape_vec((c, c), values)?))
}

fn heatmap(a: &HeatmapArgs) -> Result<()> {
    let (names, m) = load_matrix(&a.input)?;
    let svg = svg::heatmap(&m, &names, &csv_comments(&a.input)?)?;
    fs::write(&a.out, svg).with_context(|| format!("writing {}", a.out.display()))
}
