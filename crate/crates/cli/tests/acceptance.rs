//! Acceptance suite. Each test prints one `[PASS]`/`[FAIL]` line with the
//! measured value, its threshold and the runtime against its budget.
//!
//! Tests hold a shared lock so wall-clock budgets are not skewed by other
//! criteria running alongside. Run with `--nocapture` to see the lines.

#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::collections::VecDeque;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use umato::classify::{classify_points, PointClass};
use umato::dataset::{gen_spheres, gen_swiss_roll, load_csv, save_dataset_csv, standardize, standardize_matrix, write_projection_csv, SpheresParams};
use umato::embed::{ce_gradient, ce_loss, umap_like, umato, CurveParams, EmbedConfig, Method, MethodEmbedder};
use umato::metrics::{
    continuity, density_kl, dtm, mrre_f, mrre_m, procrustes_distance, stability_init, stability_subsample, stress,
    trustworthiness,
};
use umato::neighbors::{knn_descent, knn_exact, KnnBackend};
use umato::{Dataset, Projection};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line and fails the test when either the measured
/// condition or the time budget is missed.
fn report(id: u32, name: &str, ok: bool, detail: &str, elapsed: Duration, budget_s: Option<f64>) {
    let secs = elapsed.as_secs_f64();
    let in_time = budget_s.is_none_or(|b| secs < b);
    let budget = budget_s.map_or("no budget".to_string(), |b| format!("budget {b} s"));
    println!(
        "\n[{}] criterion {id:>2} {name}: {detail}; {secs:.1} s ({budget})",
        if ok && in_time { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} {name}: {detail}");
    assert!(in_time, "criterion {id} {name}: {secs:.1} s exceeds the {budget}");
}

/// Five inner spheres of 200 points inside a 1000-point sphere, dim 101, standardized.
fn reduced_spheres(seed: u64) -> Dataset {
    let params = SpheresParams {
        n_inner_spheres: 5,
        n_per_inner: 200,
        n_outer: 1000,
        dim: 101,
        ..SpheresParams::default()
    };
    standardize(&gen_spheres(&params, seed).unwrap().0).unwrap()
}

/// Configuration used for Spheres layouts: every point may become a hub.
/// Outer-sphere points never appear in other points' neighbor lists, so at
/// the default hub count most of them are disconnected and get placed at the
/// centroid of their (inner-sphere) neighbors.
fn spheres_config(seed: u64) -> EmbedConfig {
    EmbedConfig {
        n_h: 2000,
        seed,
        ..EmbedConfig::default()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn c01_gradient_matches_finite_differences() {
    let _g = serial();
    let clock = Instant::now();
    let curve = CurveParams { a: 1.0, b: 1.0 };
    let h = 1e-5;
    let mut worst = 0.0f64;
    for layout in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + layout);
        let m = rng.random_range(5..=30);
        let y = Array2::from_shape_fn((m, 2), |_| rng.random_range(-5.0..5.0));
        let mut v = Array2::zeros((m, m));
        for i in 0..m {
            for j in (i + 1)..m {
                if rng.random::<f64>() < 0.3 {
                    let w: f64 = rng.random();
                    v[[i, j]] = w;
                    v[[j, i]] = w;
                }
            }
        }
        let g = ce_gradient(&y, &v, curve, 0.0);
        for i in 0..m {
            for t in 0..2 {
                let (mut yp, mut ym) = (y.clone(), y.clone());
                yp[[i, t]] += h;
                ym[[i, t]] -= h;
                let fd = (ce_loss(&yp, &v, curve) - ce_loss(&ym, &v, curve)) / (2.0 * h);
                let rel = (g[[i, t]] - fd).abs() / fd.abs().max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    report(
        1,
        "gradient check",
        worst <= 1e-4,
        &format!("max relative error {worst:.2e} over 20 layouts (need <= 1e-4)"),
        clock.elapsed(),
        Some(5.0),
    );
}

#[test]
fn c02_metrics_match_naive_oracles() {
    let _g = serial();
    let clock = Instant::now();
    let mut worst = 0.0f64;
    let mut track = |got: f64, want: f64| worst = worst.max((got - want).abs());
    for seed in 0..10 {
        let (x, y) = oracles::instance(seed);
        let n = x.nrows();
        for k in [1, 3, (n - 1) / 2] {
            track(trustworthiness(&x, &y, k).unwrap(), oracles::oracle_trust(&x, &y, k));
            track(continuity(&x, &y, k).unwrap(), oracles::oracle_trust(&y, &x, k));
            track(mrre_f(&x, &y, k).unwrap(), oracles::oracle_mrre(&x, &y, k));
            track(mrre_m(&x, &y, k).unwrap(), oracles::oracle_mrre(&y, &x, k));
        }
        for sigma in [0.1, 1.0] {
            track(density_kl(&x, &y, sigma).unwrap(), oracles::oracle_kl(&x, &y, sigma));
            track(dtm(&x, &y, sigma).unwrap(), oracles::oracle_dtm(&x, &y, sigma));
        }
        track(stress(&x, &y).unwrap(), oracles::oracle_stress(&x, &y));
        let (_, other) = oracles::instance(seed + 1000);
        let m = n.min(other.nrows());
        let a = y.slice(ndarray::s![..m, ..]).to_owned();
        let b = other.slice(ndarray::s![..m, ..]).to_owned();
        track(procrustes_distance(&a, &b).unwrap(), oracles::oracle_procrustes(&a, &b));
    }
    report(
        2,
        "metric oracles",
        worst <= 1e-12,
        &format!("max deviation {worst:.2e} on 10 instances (need <= 1e-12)"),
        clock.elapsed(),
        Some(10.0),
    );
}

/// Mean distance of each label's points from the layout centroid.
fn label_spread(y: &Array2<f64>, labels: &[usize], n_labels: usize) -> Vec<f64> {
    let c = y.mean_axis(ndarray::Axis(0)).unwrap();
    let mut sums = vec![0.0; n_labels];
    let mut counts = vec![0usize; n_labels];
    for (i, row) in y.rows().into_iter().enumerate() {
        let d = row.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        sums[labels[i]] += d;
        counts[labels[i]] += 1;
    }
    sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect()
}

#[test]
fn c03_outer_sphere_encloses_inner_clusters() {
    let _g = serial();
    let clock = Instant::now();
    let data = reduced_spheres(0);
    let run = umato(&data, &spheres_config(0)).unwrap();
    let spread = label_spread(&run.projection.coords, data.labels().unwrap(), 6);
    let enclosed = (0..5).filter(|&c| spread[5] > spread[c]).count();
    report(
        3,
        "spheres inclusion",
        enclosed >= 4,
        &format!(
            "outer mean distance {:.2} exceeds {enclosed}/5 inner cluster means {:?} (need >= 4)",
            spread[5],
            spread[..5].iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
        clock.elapsed(),
        Some(180.0),
    );
}

#[test]
fn c04_global_structure_beats_baseline() {
    let _g = serial();
    let clock = Instant::now();
    // [dataset][method] -> per-seed (kl, stress)
    let mut scores = vec![vec![Vec::new(), Vec::new()]; 2];
    for seed in 0..5u64 {
        let sets = [
            (reduced_spheres(seed), spheres_config(seed)),
            (
                standardize(&gen_swiss_roll(2000, seed).unwrap()).unwrap(),
                EmbedConfig { seed, ..EmbedConfig::default() },
            ),
        ];
        for (d, (data, cfg)) in sets.iter().enumerate() {
            let ours = umato(data, cfg).unwrap().projection.coords;
            let base = umap_like(data, cfg, None).unwrap().0.coords;
            for (m, y) in [ours, base].iter().enumerate() {
                let y = standardize_matrix(y).unwrap();
                scores[d][m].push((density_kl(data.points(), &y, 0.1).unwrap(), stress(data.points(), &y).unwrap()));
            }
        }
    }
    let mut wins = 0;
    let mut cells = Vec::new();
    for (d, name) in ["spheres", "swiss roll"].iter().enumerate() {
        for (metric, pick) in [("KL", 0usize), ("stress", 1)] {
            let med = |m: usize| median(scores[d][m].iter().map(|s| if pick == 0 { s.0 } else { s.1 }).collect());
            let (ours, base) = (med(0), med(1));
            if ours < base {
                wins += 1;
            }
            cells.push(format!("{name} {metric} {ours:.4} vs {base:.4}"));
        }
    }
    report(
        4,
        "global structure vs baseline",
        wins >= 3,
        &format!("umato better in {wins}/4 median cells [{}] (need >= 3)", cells.join("; ")),
        clock.elapsed(),
        Some(600.0),
    );
}

#[test]
fn c05_stability_beats_baseline() {
    let _g = serial();
    let clock = Instant::now();
    let cfg = EmbedConfig::default();
    let ours = MethodEmbedder::new(Method::Umato, cfg.clone());
    let base = MethodEmbedder::new(Method::UmapLike, cfg);
    let (mut init, mut sub) = ([0.0; 2], [0.0; 2]);
    for seed in 0..3u64 {
        let data = reduced_spheres(seed);
        for (m, e) in [&ours, &base].into_iter().enumerate() {
            init[m] += stability_init(&data, e, 3, seed).unwrap() / 3.0;
            for rate in [0.3, 0.6, 0.9] {
                sub[m] += stability_subsample(&data, e, rate, seed).unwrap() / 9.0;
            }
        }
    }
    let ok = init[0] <= 0.7 * init[1] && sub[0] <= 0.7 * sub[1];
    report(
        5,
        "stability vs baseline",
        ok,
        &format!(
            "init {:.4} vs {:.4} (ratio {:.2}), subsample {:.4} vs {:.4} (ratio {:.2}) (need ratios <= 0.70)",
            init[0],
            init[1],
            init[0] / init[1],
            sub[0],
            sub[1],
            sub[0] / sub[1]
        ),
        clock.elapsed(),
        Some(600.0),
    );
}

/// Average ranks, ties sharing the mean position.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        for &o in &order[i..=j] {
            ranks[o] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    ranks
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn spearman_reference_values() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    // Hand-computed: ranks [1,2,3,4,5] vs [2,1,4,3,5] give 1 - 6*4/(5*24) = 0.8.
    assert!((spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]) - 0.8).abs() < 1e-12);
    assert_eq!(average_ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
}

#[test]
fn c06_kl_falls_as_hubs_grow() {
    let _g = serial();
    let clock = Instant::now();
    // Single runs scatter by about 0.03 in KL, so each point is a 5-seed mean.
    let grid = [20usize, 60, 100, 180, 300];
    let seeds = 5u64;
    let mut kls = vec![0.0; grid.len()];
    for seed in 0..seeds {
        let data = reduced_spheres(seed);
        for (slot, &n_h) in kls.iter_mut().zip(&grid) {
            let run = umato(&data, &EmbedConfig { n_h, seed, ..EmbedConfig::default() }).unwrap();
            let y = standardize_matrix(&run.projection.coords).unwrap();
            *slot += density_kl(data.points(), &y, 0.1).unwrap() / seeds as f64;
        }
    }
    let hubs: Vec<f64> = grid.iter().map(|&h| h as f64).collect();
    let rho = spearman(&hubs, &kls);
    report(
        6,
        "hub_num trend",
        rho <= -0.5,
        &format!(
            "Spearman {rho:.2} for mean KL {:?} over hub_num {grid:?}, 5 seeds (need <= -0.5)",
            kls.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
        clock.elapsed(),
        Some(600.0),
    );
}

#[test]
fn c07_partition_invariants() {
    let _g = serial();
    let clock = Instant::now();
    let mut failures = Vec::new();
    for inst in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + inst);
        let n = rng.random_range(10..=500);
        let dim = rng.random_range(2..=8);
        let clusters = rng.random_range(1..=4);
        let centers: Vec<Vec<f64>> = (0..clusters).map(|_| (0..dim).map(|_| rng.random_range(-20.0..20.0)).collect()).collect();
        let points = Array2::from_shape_fn((n, dim), |(i, t)| centers[i % clusters][t] + rng.sample::<f64, _>(StandardNormal));
        let data = Dataset::new(points, "inst").unwrap();
        let k = rng.random_range(1..=15.min(n - 1));
        let n_h = rng.random_range(1..=n.min(120));
        let backend = if inst % 2 == 0 { KnnBackend::Exact } else { KnnBackend::Descent { max_iters: 10 } };
        let knn = umato::neighbors::build_knn(&data, k, backend, inst).unwrap();
        let part = classify_points(&knn, n_h).unwrap();

        let mut seen = vec![0u8; n];
        for &i in part.hubs.iter().chain(&part.enns).chain(&part.dcps) {
            seen[i] += 1;
        }
        let cover = seen.iter().all(|&c| c == 1);
        let bounded = part.hubs.len() <= n_h;
        // Closure: rows of hubs and eNNs only reach hubs and eNNs, and every
        // eNN is reachable from a hub along kNN rows.
        let closed = (0..n)
            .filter(|&i| part.class_of(i) != PointClass::Dcp)
            .all(|i| knn.neighbors(i).iter().all(|&j| !part.is_dcp(j)));
        let mut reached = vec![false; n];
        let mut queue: VecDeque<usize> = part.hubs.iter().copied().collect();
        for &h in &part.hubs {
            reached[h] = true;
        }
        while let Some(i) = queue.pop_front() {
            for &j in knn.neighbors(i) {
                if !reached[j] {
                    reached[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let reachable = part.enns.iter().all(|&e| reached[e]) && part.dcps.iter().all(|&d| !reached[d]);
        let again = classify_points(&umato::neighbors::build_knn(&data, k, backend, inst).unwrap(), n_h).unwrap();
        let deterministic = again == part;
        if !(cover && bounded && closed && reachable && deterministic) {
            failures.push(format!(
                "instance {inst}: cover {cover} bounded {bounded} closed {closed} reachable {reachable} deterministic {deterministic}"
            ));
        }
    }
    report(
        7,
        "partition invariants",
        failures.is_empty(),
        &format!("{} of 200 instances violate an invariant {:?}", failures.len(), failures.first()),
        clock.elapsed(),
        Some(30.0),
    );
}

#[test]
fn c08_descent_recall() {
    let _g = serial();
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let points = Array2::from_shape_fn((2000, 20), |_| rng.sample::<f64, _>(StandardNormal));
    let data = Dataset::new(points, "gauss").unwrap();
    let exact = knn_exact(&data, 15).unwrap();
    let approx = knn_descent(&data, 15, 20, 8).unwrap();
    let mut hits = 0usize;
    for i in 0..2000 {
        let truth = exact.neighbors(i);
        hits += approx.neighbors(i).iter().filter(|j| truth.contains(j)).count();
    }
    let recall = hits as f64 / (2000.0 * 15.0);
    report(
        8,
        "NN-descent recall",
        recall >= 0.90,
        &format!("recall {recall:.4} at k = 15 (need >= 0.90)"),
        clock.elapsed(),
        Some(30.0),
    );
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_umato"));
    cmd.env_remove("UMATO_THREADS").env_remove("RUST_LOG");
    cmd
}

fn cli(args: &[&str]) {
    let out = bin().args(args).output().expect("spawn umato");
    assert!(out.status.success(), "umato {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn c09_performance_smoke() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("swiss5000.csv");
    let timing = dir.path().join("timing.csv");
    cli(&["generate", "swiss-roll", "--n", "5000", "--seed", "9", "--out", s(&data)]);
    let clock = Instant::now();
    cli(&["project", "--input", s(&data), "--out", s(&dir.path().join("p.csv")), "--timing-out", s(&timing)]);
    let elapsed = clock.elapsed();
    let stages: Vec<(String, f64)> = fs::read_to_string(&timing)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("stage,"))
        .map(|l| {
            let (name, secs) = l.split_once(',').unwrap();
            (name.to_string(), secs.parse().unwrap())
        })
        .collect();
    let total: f64 = stages.iter().map(|s| s.1).sum();
    let dominant: f64 = stages.iter().filter(|s| s.0 == "knn" || s.0 == "local").map(|s| s.1).sum();
    let share = dominant / total;
    report(
        9,
        "performance smoke",
        share > 0.5,
        &format!(
            "5000-point swiss roll; kNN + local take {:.0}% of stage time {:?} (need > 50%, under 60 s)",
            share * 100.0,
            stages.iter().map(|(n, t)| format!("{n}={t:.2}")).collect::<Vec<_>>()
        ),
        elapsed,
        Some(60.0),
    );
}

#[test]
fn c10_determinism_and_round_trip() {
    let _g = serial();
    let clock = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("swiss.csv");
    cli(&["generate", "swiss-roll", "--n", "800", "--seed", "10", "--out", s(&data)]);
    let mut csvs = Vec::new();
    let mut svgs = Vec::new();
    for run in 0..2 {
        let proj = dir.path().join(format!("p{run}.csv"));
        let svg = dir.path().join(format!("p{run}.svg"));
        cli(&["project", "--input", s(&data), "--out", s(&proj), "--seed", "11"]);
        cli(&["plot", "--input", s(&proj), "--out", s(&svg)]);
        csvs.push(fs::read(&proj).unwrap());
        svgs.push(fs::read(&svg).unwrap());
    }
    let identical = csvs[0] == csvs[1] && svgs[0] == svgs[1];

    // Library round trips: dataset with labels, and a projection.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let points = Array2::from_shape_fn((300, 6), |_| rng.random_range(-1e3..1e3) * rng.random::<f64>().powi(3));
    let labels: Vec<usize> = (0..300).map(|i| i % 7).collect();
    let ds = Dataset::new(points.clone(), "rt").unwrap().with_labels(labels.clone()).unwrap();
    let ds_path = dir.path().join("rt.csv");
    save_dataset_csv(&ds, &ds_path).unwrap();
    let back = load_csv(&ds_path, Some("label")).unwrap();
    let ds_err = (back.points() - &points).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let coords = points.slice(ndarray::s![.., ..2]).to_owned();
    let proj = Projection::new(coords.clone(), 1, "rt").unwrap();
    let proj_path = dir.path().join("rt_proj.csv");
    write_projection_csv(&proj, Some(&labels), &proj_path, &["seed=1".into()]).unwrap();
    let pback = load_csv(&proj_path, Some("label")).unwrap();
    let p_err = (pback.points() - &coords).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let labels_ok = back.labels() == Some(&labels[..]) && pback.labels() == Some(&labels[..]);
    let round_trip = ds_err <= 1e-12 && p_err <= 1e-12 && labels_ok;
    report(
        10,
        "determinism and I/O",
        identical && round_trip,
        &format!(
            "projection CSV and SVG identical across runs: {identical}; round-trip error {:.1e} (need <= 1e-12), labels intact: {labels_ok}",
            ds_err.max(p_err)
        ),
        clock.elapsed(),
        None,
    );
}
