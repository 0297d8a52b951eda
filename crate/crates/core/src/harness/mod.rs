//! Experiment orchestration and CSV output.
//!
//! Every random stream in an experiment comes from [`cell_seed`], a pure
//! function of the master seed, the grid-cell index and the repetition (or
//! trial-chunk) index, so output is identical for any thread count.
//!
//! Result CSVs share the columns in [`COLUMNS`]; `-` marks a parameter that
//! does not apply. [`reproduce`] additionally writes one wide `_plot.csv`
//! per figure with one x column (`delta` or `n2`) and one column per series.

mod row;
mod run;
mod spec;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use row::{mean_se, rate, read_rows, write_rows, ResultRow, COLUMNS};
pub use run::{detection_tally, parity, run_experiment, CHUNK, QUANTUM_R0};
pub use spec::{default_out_dir, desk_delta_grid, full_delta_grid, AttackSpec, ExperimentKind, ExperimentSpec, OUT_DIR_ENV};

use crate::error::{Error, Result};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ cell) ^ rep)`.
pub fn cell_seed(master: u64, cell: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ rep)
}

/// Seed of the dataset used by repetition `rep`, shared by every cell with
/// the same dataset so methods are compared on identical data.
pub fn dataset_seed(master: u64, dataset: u64, rep: u64) -> u64 {
    cell_seed(master ^ 0xDA7A_5E7D_DA7A_5E7D, dataset, rep)
}

/// Runs `spec` and writes `<out_dir>/<kind>.csv`.
pub fn run_to_file(spec: &ExperimentSpec) -> Result<(PathBuf, Vec<ResultRow>)> {
    let rows = run_experiment(spec)?;
    fs::create_dir_all(&spec.out_dir)?;
    let path = spec.out_dir.join(format!("{}.csv", spec.kind));
    write_rows(&rows, fs::File::create(&path)?)?;
    Ok((path, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig3,
    Fig4,
    Thm2,
    Leak,
    Recon,
}

impl Figure {
    pub fn experiment(self) -> ExperimentKind {
        match self {
            Figure::Fig3 => ExperimentKind::Fig3Rounds,
            Figure::Fig4 => ExperimentKind::Fig4Compare,
            Figure::Thm2 => ExperimentKind::Thm2Sweep,
            Figure::Leak => ExperimentKind::LeakExpectation,
            Figure::Recon => ExperimentKind::ReconCompare,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Thm2 => "thm2",
            Figure::Leak => "leak",
            Figure::Recon => "recon",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Figure::Fig3, Figure::Fig4, Figure::Thm2, Figure::Leak, Figure::Recon]
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown figure {s:?}")))
    }
}

/// Wide table: one row per `(group, x)` in first-seen order, one column
/// per series.
fn pivot(
    rows: &[ResultRow],
    metrics: &[&str],
    group: impl Fn(&ResultRow) -> String,
    series: impl Fn(&ResultRow) -> String,
    x: impl Fn(&ResultRow) -> String,
    x_name: &str,
) -> String {
    let mut names: Vec<String> = Vec::new();
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut cells: Vec<BTreeMap<String, f64>> = Vec::new();
    for r in rows.iter().filter(|r| metrics.contains(&r.metric.as_str())) {
        let s = series(r);
        if !names.contains(&s) {
            names.push(s.clone());
        }
        let key = (group(r), x(r));
        let i = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                cells.push(BTreeMap::new());
                keys.len() - 1
            }
        };
        cells[i].insert(s, r.value);
    }
    let mut out = format!("group,{x_name},{}\n", names.join(","));
    for ((g, xv), vals) in keys.iter().zip(&cells) {
        let cols: Vec<String> = names.iter().map(|n| vals.get(n).map_or("-".into(), |v| v.to_string())).collect();
        out.push_str(&format!("{g},{xv},{}\n", cols.join(",")));
    }
    out
}

fn opt(s: &Option<String>) -> String {
    s.clone().unwrap_or_else(|| "-".into())
}

fn delta(r: &ResultRow) -> String {
    r.delta.map_or("-".into(), |d| d.to_string())
}

/// Runs the preset experiment behind `figure` and writes `<figure>.csv`
/// plus `<figure>_plot.csv` into `out_dir`.
pub fn reproduce(figure: Figure, out_dir: &Path, full: bool) -> Result<Vec<PathBuf>> {
    let mut spec = ExperimentSpec::preset(figure.experiment(), full);
    spec.out_dir = out_dir.to_path_buf();
    reproduce_with(figure, &spec)
}

/// As [`reproduce`] with a caller-adjusted spec.
pub fn reproduce_with(figure: Figure, spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let rows = run_experiment(spec)?;
    fs::create_dir_all(&spec.out_dir)?;
    let long = spec.out_dir.join(format!("{}.csv", figure.name()));
    write_rows(&rows, fs::File::create(&long)?)?;
    let metric = |r: &ResultRow| r.metric.clone();
    let n2 = |r: &ResultRow| r.n2.map_or("-".into(), |v| v.to_string());
    let plot = match figure {
        Figure::Fig3 => pivot(&rows, &["avg_rounds"], |r| opt(&r.dataset), |r| opt(&r.generator), delta, "delta"),
        Figure::Fig4 => pivot(&rows, &["success_probability"], |r| opt(&r.dataset), |r| opt(&r.method), delta, "delta"),
        Figure::Thm2 => pivot(&rows, &["detection_rate", "detection_formula"], |r| opt(&r.method), metric, n2, "n2"),
        Figure::Leak => pivot(&rows, &["leaked_examples_mean", "leaked_examples_formula"], |_| "example".into(), metric, n2, "n2"),
        Figure::Recon => pivot(&rows, &["l1_error_1d", "l1_error_2d"], |r| opt(&r.dataset), metric, delta, "delta"),
    };
    let plot_path = spec.out_dir.join(format!("{}_plot.csv", figure.name()));
    fs::write(&plot_path, plot)?;
    Ok(vec![long, plot_path])
}
