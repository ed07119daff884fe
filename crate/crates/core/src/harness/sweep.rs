use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::train::{convergence_episode, smooth, train_cell, TrainOutcome};
use crate::error::{Error, Result};
use crate::rewards::RewardVariant;

/// One (variant, penetration, seed) combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub variant: RewardVariant,
    pub penetration: f64,
    pub seed: u64,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{}_p{:03}_s{}", self.variant.name(), (self.penetration * 100.0).round() as u32, self.seed)
    }

    pub fn config(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        cfg.reward_variant = self.variant;
        cfg.road.penetration = self.penetration;
        cfg.seeds = vec![self.seed];
        cfg
    }
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &variant in &cfg.sweep.variants {
        for &penetration in &cfg.sweep.penetrations {
            for &seed in &cfg.seeds {
                out.push(Cell { variant, penetration, seed });
            }
        }
    }
    out
}

/// Final row of one cell; metric fields are empty when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub variant: RewardVariant,
    pub penetration: f64,
    pub seed: u64,
    pub avg_speed: Option<f64>,
    pub min_gap: Option<f64>,
    pub lc_freq: Option<f64>,
    pub lc_per_minute: Option<f64>,
    pub succ_rate: Option<f64>,
    pub succ_rate_pct: Option<f64>,
    pub final_return: Option<f64>,
    pub convergence_episode: Option<usize>,
    pub failure: Option<String>,
}

/// Mean and sample standard deviation over the successful seeds of a cell group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variant: RewardVariant,
    pub penetration: f64,
    pub n_seeds: usize,
    pub avg_speed_mean: f64,
    pub avg_speed_std: f64,
    pub min_gap_mean: f64,
    pub min_gap_std: f64,
    pub lc_freq_mean: f64,
    pub lc_freq_std: f64,
    pub lc_per_minute_mean: f64,
    pub lc_per_minute_std: f64,
    pub succ_rate_mean: f64,
    pub succ_rate_std: f64,
    pub succ_rate_pct_mean: f64,
    pub succ_rate_pct_std: f64,
    pub final_return_mean: f64,
    pub final_return_std: f64,
}

/// Sample mean and standard deviation (n - 1); std is 0 for one value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(rows: &[CellRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(RewardVariant, f64)> = Vec::new();
    for r in rows {
        if !groups.iter().any(|g| g.0 == r.variant && g.1 == r.penetration) {
            groups.push((r.variant, r.penetration));
        }
    }
    groups
        .into_iter()
        .map(|(variant, penetration)| {
            let ok: Vec<&CellRow> =
                rows.iter().filter(|r| r.variant == variant && r.penetration == penetration && r.failure.is_none()).collect();
            let col = |f: fn(&CellRow) -> Option<f64>| mean_std(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            let (avg_speed_mean, avg_speed_std) = col(|r| r.avg_speed);
            let (min_gap_mean, min_gap_std) = col(|r| r.min_gap);
            let (lc_freq_mean, lc_freq_std) = col(|r| r.lc_freq);
            let (lc_per_minute_mean, lc_per_minute_std) = col(|r| r.lc_per_minute);
            let (succ_rate_mean, succ_rate_std) = col(|r| r.succ_rate);
            let (succ_rate_pct_mean, succ_rate_pct_std) = col(|r| r.succ_rate_pct);
            let (final_return_mean, final_return_std) = col(|r| r.final_return);
            SummaryRow {
                variant,
                penetration,
                n_seeds: ok.len(),
                avg_speed_mean,
                avg_speed_std,
                min_gap_mean,
                min_gap_std,
                lc_freq_mean,
                lc_freq_std,
                lc_per_minute_mean,
                lc_per_minute_std,
                succ_rate_mean,
                succ_rate_std,
                succ_rate_pct_mean,
                succ_rate_pct_std,
                final_return_mean,
                final_return_std,
            }
        })
        .collect()
}

fn cell_row(cell: Cell, outcome: &Result<TrainOutcome>, window: usize) -> CellRow {
    let mut row = CellRow {
        variant: cell.variant,
        penetration: cell.penetration,
        seed: cell.seed,
        avg_speed: None,
        min_gap: None,
        lc_freq: None,
        lc_per_minute: None,
        succ_rate: None,
        succ_rate_pct: None,
        final_return: None,
        convergence_episode: None,
        failure: None,
    };
    match outcome {
        Ok(o) => {
            let m = &o.final_metrics;
            let returns: Vec<f64> = o.curve.iter().map(|r| r.episode_return).collect();
            row.avg_speed = Some(m.avg_speed);
            row.min_gap = Some(m.min_gap);
            row.lc_freq = Some(m.lc_freq);
            row.lc_per_minute = Some(m.lc_per_minute);
            row.succ_rate = Some(m.succ_rate);
            row.succ_rate_pct = Some(m.succ_rate_pct);
            row.final_return = Some(m.episode_return);
            row.convergence_episode = convergence_episode(&returns, window, 0.8);
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}

/// Curve CSV columns: episode, return, smoothed_return, epsilon, table_size.
pub fn write_curve(path: &Path, outcome: &TrainOutcome, window: usize) -> Result<()> {
    let returns: Vec<f64> = outcome.curve.iter().map(|r| r.episode_return).collect();
    let smoothed = smooth(&returns, window);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "return", "smoothed_return", "epsilon", "table_size"])?;
    for (row, s) in outcome.curve.iter().zip(smoothed) {
        w.write_record([
            row.episode.to_string(),
            row.episode_return.to_string(),
            s.to_string(),
            row.epsilon.to_string(),
            row.table_size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<CellRow>,
    pub summary: Vec<SummaryRow>,
    pub dir: PathBuf,
}

/// Train every cell of the grid on up to `workers` threads and write
/// `curves/<cell>.csv`, `cells.csv`, `summary.csv` and optionally SVG plots.
/// A failed cell is recorded with its reason and does not stop the sweep.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path, workers: usize, plots: bool) -> Result<SweepResult> {
    cfg.validate()?;
    let curves_dir = out.join("curves");
    fs::create_dir_all(&curves_dir)?;
    let grid = cells(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let window = cfg.smoothing_window;
    let results: Vec<(Cell, Result<TrainOutcome>)> = pool.install(|| {
        grid.par_iter()
            .map(|&cell| {
                let outcome = train_cell(&cell.config(cfg), cell.seed);
                let outcome = outcome.and_then(|o| {
                    write_curve(&curves_dir.join(format!("{}.csv", cell.label())), &o, window)?;
                    Ok(o)
                });
                (cell, outcome)
            })
            .collect()
    });
    let rows: Vec<CellRow> = results.iter().map(|(c, o)| cell_row(*c, o, window)).collect();
    let summary = summarize(&rows);
    write_rows(&out.join("cells.csv"), &rows)?;
    write_rows(&out.join("summary.csv"), &summary)?;
    if plots {
        for &p in &cfg.sweep.penetrations {
            let series: Vec<(String, Vec<f64>)> = cfg
                .sweep
                .variants
                .iter()
                .filter_map(|&v| {
                    let curves: Vec<Vec<f64>> = results
                        .iter()
                        .filter(|(c, _)| c.variant == v && c.penetration == p)
                        .filter_map(|(_, o)| o.as_ref().ok())
                        .map(|o| smooth(&o.curve.iter().map(|r| r.episode_return).collect::<Vec<_>>(), window))
                        .collect();
                    let n = curves.first()?.len();
                    let mean = (0..n).map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64).collect();
                    Some((v.name().to_string(), mean))
                })
                .collect();
            let title = format!("smoothed return, penetration {p}");
            fs::write(out.join(format!("curves_p{:03}.svg", (p * 100.0).round() as u32)), svg_log_x(&title, &series))?;
        }
    }
    Ok(SweepResult { rows, summary, dir: out.to_path_buf() })
}

/// Line plot of each series against episode number (1-based) on a log10 x axis.
pub fn svg_log_x(title: &str, series: &[(String, Vec<f64>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let n_max = series.iter().map(|s| s.1.len()).max().unwrap_or(1).max(2);
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.1.iter().copied())
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0), lo.max(0.0) + 1.0) };
    let x_of = |i: usize| M + ((i + 1) as f64).log10() / (n_max as f64).log10() * (W - 2.0 * M);
    let y_of = |v: f64| H - M - (v - lo) / (hi - lo) * (H - 2.0 * M);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(svg, r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - M, W - M, H - M);
    let _ = writeln!(svg, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#, H - M);
    let mut decade = 1usize;
    while decade <= n_max {
        let x = x_of(decade - 1);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{decade}</text>"#, H - M + 16.0);
        decade *= 10;
    }
    let _ = writeln!(svg, r#"<text x="{M}" y="{}" text-anchor="end">{lo:.3}</text>"#, H - M);
    let _ = writeln!(svg, r#"<text x="{M}" y="{M}" text-anchor="end">{hi:.3}</text>"#);
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = ys.iter().enumerate().map(|(i, v)| format!("{:.1},{:.1}", x_of(i), y_of(*v))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, points.join(" "));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#, W - M + 5.0, M + 15.0 * k as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_one_cell_per_combination() {
        let cfg = ExperimentConfig { seeds: vec![1, 2, 3, 4, 5], ..ExperimentConfig::default() };
        let grid = cells(&cfg);
        assert_eq!(grid.len(), 60);
        let labels: std::collections::HashSet<String> = grid.iter().map(Cell::label).collect();
        assert_eq!(labels.len(), 60);
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = svg_log_x("t", &[("GR".into(), vec![0.0, 1.0, 2.0]), ("DR".into(), vec![1.0, 1.0, 3.0])]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
