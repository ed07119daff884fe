use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mixflow::harness::{run_sweep, ExperimentConfig};
use mixflow::world::RoadConfig;

fn tiny() -> ExperimentConfig {
    ExperimentConfig {
        road: RoadConfig { road_length: 100.0, n_lanes: 3, episode_duration: 3.0, arrival_rate: 900.0, ..RoadConfig::default() },
        n_episodes: 3,
        eval_episodes: 2,
        seeds: vec![1, 2, 3, 4, 5],
        smoothing_window: 2,
        ..ExperimentConfig::default()
    }
}

fn read_all(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        out.insert(rel, fs::read(&entry).unwrap());
    }
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn full_grid_writes_one_curve_per_cell_and_is_reproducible() {
    let cfg = tiny();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_sweep(&cfg, a.path(), 4, true).unwrap();
    run_sweep(&cfg, b.path(), 2, true).unwrap();

    assert_eq!(fs::read_dir(a.path().join("curves")).unwrap().count(), 60);
    assert!(ra.rows.iter().all(|r| r.failure.is_none()));
    assert_eq!(ra.summary.len(), 12);
    assert_eq!(read_all(a.path()), read_all(b.path()));

    let header = fs::read_to_string(a.path().join("curves/DR_p050_s3.csv")).unwrap();
    assert!(header.starts_with("episode,return,smoothed_return,epsilon,table_size\n"));
    assert_eq!(header.lines().count(), 4);
    assert!(a.path().join("curves_p025.svg").exists());
}

#[derive(Debug, serde::Deserialize)]
struct Cell {
    variant: String,
    penetration: f64,
    avg_speed: Option<f64>,
    succ_rate: Option<f64>,
    min_gap: Option<f64>,
}

#[derive(Debug, serde::Deserialize)]
struct Summary {
    variant: String,
    penetration: f64,
    n_seeds: usize,
    avg_speed_mean: f64,
    avg_speed_std: f64,
    succ_rate_mean: f64,
    succ_rate_std: f64,
    min_gap_mean: f64,
    min_gap_std: f64,
}

/// Two-pass sample statistics, written independently of the library.
fn stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (m, if xs.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 })
}

#[test]
fn summary_matches_recompute_from_cell_rows() {
    let mut cfg = tiny();
    cfg.sweep.penetrations = vec![0.5, 1.0];
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&cfg, dir.path(), 3, false).unwrap();
    let cells: Vec<Cell> =
        csv::Reader::from_path(dir.path().join("cells.csv")).unwrap().deserialize().map(Result::unwrap).collect();
    let summary: Vec<Summary> =
        csv::Reader::from_path(dir.path().join("summary.csv")).unwrap().deserialize().map(Result::unwrap).collect();
    assert_eq!(summary.len(), 6);
    for s in &summary {
        let group: Vec<&Cell> =
            cells.iter().filter(|c| c.variant == s.variant && c.penetration == s.penetration).collect();
        assert_eq!(group.len(), s.n_seeds);
        let check = |f: fn(&Cell) -> Option<f64>, mean: f64, std: f64| {
            let (m, sd) = stats(&group.iter().map(|c| f(c).unwrap()).collect::<Vec<_>>());
            assert!((m - mean).abs() <= 1e-12 && (sd - std).abs() <= 1e-12, "{} {}: {m} {sd} vs {mean} {std}", s.variant, s.penetration);
        };
        check(|c| c.avg_speed, s.avg_speed_mean, s.avg_speed_std);
        check(|c| c.succ_rate, s.succ_rate_mean, s.succ_rate_std);
        check(|c| c.min_gap, s.min_gap_mean, s.min_gap_std);
    }
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let cfg = ExperimentConfig { seeds: vec![], ..tiny() };
    let dir = tempfile::tempdir().unwrap();
    assert!(run_sweep(&cfg, dir.path(), 1, false).is_err());
}
