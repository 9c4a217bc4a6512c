//! Parameter sweeps: build replicated graphs over a grid of cells, percolate
//! each at every retention probability, and append one CSV row per
//! (cell, replica, p).
//!
//! Rows are written in task order through a single appender regardless of
//! how many workers run, so the CSV is independent of the worker count
//! apart from the timing column. Restarting with `resume` keeps every cell
//! already complete and recomputes the rest.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::generator::{build_graph_with_stats, Mode, View};
use crate::model::{ModelParams, Phase, DEFAULT_AMPLITUDE};
use crate::percolation::{component_stats, finite_component_fraction, fraction_connected_to_oldest, percolate};
use crate::randomness::{SeedSpec, DEFAULT_MAX_EXPECTED_POINTS};

use super::config::Config;

/// Name of the rows file inside the output directory.
pub const ROWS_FILE: &str = "rows.csv";
/// Name of the manifest inside the output directory.
pub const MANIFEST_FILE: &str = "manifest.json";
/// Environment variable capping the number of workers.
pub const THREADS_ENV: &str = "SPAG_THREADS";

pub const CSV_HEADER: &str = "cell,d,gamma,beta,delta,a,t,phase,mode,replica,graph_seed,p,status,n,largest_frac,second_frac,frac_to_oldest,frac_finite_k,runtime_ms";

const SWEEP_KEYS: [&str; 14] = [
    "d", "gamma", "beta", "delta", "a", "t", "p", "replicas", "seed", "mode", "view", "finite_k", "max_expected_points",
    "threads",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub d: Vec<usize>,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    /// Fixed attachment offset; `1 - gamma` per cell when absent.
    pub beta: Option<f64>,
    pub a: f64,
    pub replicas: usize,
    pub seed: u64,
    pub mode: Mode,
    pub view: View,
    pub finite_k: usize,
    pub max_expected_points: f64,
    /// Worker count requested by the config; the environment cap applies
    /// on top.
    pub threads: Option<usize>,
}

/// One grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub params: ModelParams,
    pub t: f64,
    pub phase: Phase,
}

impl SweepConfig {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        cfg.ensure_only(&SWEEP_KEYS)?;
        let mode: Mode = if cfg.contains("mode") {
            cfg.string("mode")?.parse().map_err(|e| reline(cfg, "mode", e))?
        } else {
            Mode::RingSkip
        };
        let view: View = if cfg.contains("view") {
            cfg.string("view")?.parse().map_err(|e| reline(cfg, "view", e))?
        } else {
            View::Stationary
        };
        let sc = Self {
            d: cfg.usize_list("d")?,
            gamma: cfg.f64_list("gamma")?,
            delta: cfg.f64_list("delta")?,
            t: cfg.f64_list("t")?,
            p: cfg.f64_list("p")?,
            beta: if cfg.contains("beta") { Some(cfg.f64("beta")?) } else { None },
            a: cfg.f64_or("a", DEFAULT_AMPLITUDE)?,
            replicas: cfg.usize_or("replicas", 1)?,
            seed: if cfg.contains("seed") { cfg.seed("seed")? } else { 0 },
            mode,
            view,
            finite_k: cfg.usize_or("finite_k", 10)?,
            max_expected_points: cfg.f64_or("max_expected_points", DEFAULT_MAX_EXPECTED_POINTS)?,
            threads: if cfg.contains("threads") { Some(cfg.usize("threads")?) } else { None },
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config(&Config::load(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(contract("replicas must be at least 1"));
        }
        if [self.d.len(), self.gamma.len(), self.delta.len(), self.t.len(), self.p.len()].contains(&0) {
            return Err(contract("every grid needs at least one value"));
        }
        if let Some(bad) = self.t.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return Err(contract(format!("t must be positive, got {bad}")));
        }
        if let Some(bad) = self.p.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
            return Err(contract(format!("p must lie in [0,1], got {bad}")));
        }
        if self.finite_k < 1 {
            return Err(contract("finite_k must be at least 1"));
        }
        self.cells().map(|_| ())
    }

    /// Grid cells, ordered by d, then gamma, then delta, then t.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for &d in &self.d {
            for &gamma in &self.gamma {
                for &delta in &self.delta {
                    let params = ModelParams::new(d, gamma, self.beta.unwrap_or(1.0 - gamma), delta, self.a)?;
                    for &t in &self.t {
                        out.push(Cell {
                            index: out.len(),
                            phase: params.classify_phase().phase,
                            params: params.clone(),
                            t,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Seed of the graph built for `replica` of `cell`.
    pub fn graph_seed(&self, cell: usize, replica: usize) -> u64 {
        SeedSpec::new(self.seed, format!("sweep-cell-{cell}"), replica as u64).derive_u64()
    }

    /// Seed of the retention marks for `replica` of `cell`, shared by every
    /// p so the p-grid is monotonically coupled.
    pub fn percolation_seed(&self, cell: usize, replica: usize) -> u64 {
        SeedSpec::new(self.seed, format!("sweep-perc-{cell}"), replica as u64).derive_u64()
    }

    pub fn rows_per_cell(&self) -> usize {
        self.replicas * self.p.len()
    }
}

fn reline(cfg: &Config, key: &str, e: Error) -> Error {
    Error::Parse {
        line: cfg.line_of(key).unwrap_or(0),
        message: e.to_string(),
    }
}

/// Measurements at one retention probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub p: f64,
    pub largest_frac: f64,
    pub second_frac: f64,
    pub frac_to_oldest: f64,
    pub frac_finite_k: f64,
}

/// Result of one (cell, replica) task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub cell: usize,
    pub replica: usize,
    pub graph_seed: u64,
    pub n: usize,
    /// `None` when the cell was skipped because of the resource cap.
    pub measurements: Option<Vec<Measurement>>,
    pub runtime_ms: u128,
}

/// Builds and percolates one replica of a cell.
pub fn run_task(cfg: &SweepConfig, cell: &Cell, replica: usize) -> Result<TaskResult> {
    let start = Instant::now();
    let graph_seed = cfg.graph_seed(cell.index, replica);
    let built = build_graph_with_stats(&cell.params, cfg.view, cell.t, graph_seed, cfg.mode, cfg.max_expected_points);
    let g = match built {
        Ok((g, _)) => g,
        Err(Error::Resource { .. }) => {
            return Ok(TaskResult {
                cell: cell.index,
                replica,
                graph_seed,
                n: 0,
                measurements: None,
                runtime_ms: start.elapsed().as_millis(),
            })
        }
        Err(e) => return Err(e),
    };
    let n = g.num_vertices();
    let perc_seed = cfg.percolation_seed(cell.index, replica);
    let denom = n.max(1) as f64;
    let measurements = cfg
        .p
        .iter()
        .map(|&p| {
            let r = percolate(&g, p, perc_seed)?;
            let s = component_stats(&r);
            Ok(Measurement {
                p,
                largest_frac: s.largest as f64 / denom,
                second_frac: s.second as f64 / denom,
                frac_to_oldest: fraction_connected_to_oldest(&r, denom),
                frac_finite_k: finite_component_fraction(&r, cfg.finite_k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaskResult {
        cell: cell.index,
        replica,
        graph_seed,
        n,
        measurements: Some(measurements),
        runtime_ms: start.elapsed().as_millis(),
    })
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// CSV lines of one task, in p-grid order.
pub fn task_rows(cfg: &SweepConfig, cell: &Cell, r: &TaskResult) -> Vec<String> {
    let p = &cell.params;
    let prefix = format!(
        "{},{},{},{},{},{},{},{},{},{},{:#x}",
        cell.index,
        p.d(),
        fmt_f64(p.gamma()),
        fmt_f64(p.beta()),
        fmt_f64(p.delta()),
        fmt_f64(p.a()),
        fmt_f64(cell.t),
        cell.phase,
        cfg.mode,
        r.replica,
        r.graph_seed
    );
    match &r.measurements {
        Some(ms) => ms
            .iter()
            .map(|m| {
                format!(
                    "{prefix},{},ok,{},{},{},{},{},{}",
                    fmt_f64(m.p),
                    r.n,
                    m.largest_frac,
                    m.second_frac,
                    m.frac_to_oldest,
                    m.frac_finite_k,
                    r.runtime_ms
                )
            })
            .collect(),
        None => cfg
            .p
            .iter()
            .map(|&pv| format!("{prefix},{},skipped_resource_cap,,,,,,{}", fmt_f64(pv), r.runtime_ms))
            .collect(),
    }
}

/// Summary written next to the rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub master_seed: String,
    pub config: String,
    pub cells: Vec<ManifestCell>,
    pub rows: usize,
    pub skipped_tasks: Vec<(usize, usize)>,
    pub workers: usize,
    pub resumed_cells: usize,
    pub wall_time_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub index: usize,
    pub d: usize,
    pub gamma: f64,
    pub beta: f64,
    pub delta: String,
    pub a: f64,
    pub t: f64,
    pub phase: Phase,
    pub graph_seeds: Vec<String>,
    pub percolation_seeds: Vec<String>,
}

/// Worker count: the config's request (or all cores), capped by
/// `SPAG_THREADS` when that is set to a positive integer.
pub fn worker_count(requested: Option<usize>) -> usize {
    let mut n = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    if let Some(cap) = std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if cap >= 1 {
            n = n.min(cap);
        }
    }
    n
}

/// Rows of complete cells at the start of an existing rows file. Returns
/// the number of complete cells and their lines.
fn completed_prefix(path: &Path, cfg: &SweepConfig, cells: usize) -> Result<(usize, Vec<String>)> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((0, Vec::new())),
        Err(e) => return Err(e.into()),
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next().transpose()? {
        Some(h) if h == CSV_HEADER => {}
        Some(_) => return Err(contract(format!("{} has an unexpected header", path.display()))),
        None => return Ok((0, Vec::new())),
    }
    let mut by_cell: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for line in lines {
        let line = line?;
        match line.split(',').next().and_then(|c| c.parse::<usize>().ok()) {
            Some(c) if line.split(',').count() == 19 => by_cell.entry(c).or_default().push(line),
            _ => break,
        }
    }
    let mut done = 0;
    let mut kept = Vec::new();
    while done < cells && by_cell.get(&done).is_some_and(|rows| rows.len() == cfg.rows_per_cell()) {
        kept.extend(by_cell.remove(&done).expect("checked"));
        done += 1;
    }
    Ok((done, kept))
}

/// Outcome of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub rows_path: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
}

/// Runs a sweep into `out_dir`. With `resume`, complete cells found in an
/// existing rows file are kept and only the remaining cells are run.
pub fn run_sweep(cfg: &SweepConfig, config_text: &str, out_dir: &Path, resume: bool) -> Result<SweepOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let rows_path = out_dir.join(ROWS_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let cells = cfg.cells()?;

    let (done, kept) = if resume { completed_prefix(&rows_path, cfg, cells.len())? } else { (0, Vec::new()) };
    {
        let mut f = File::create(&rows_path)?;
        writeln!(f, "{CSV_HEADER}")?;
        for line in &kept {
            writeln!(f, "{line}")?;
        }
    }

    let tasks: Vec<(usize, usize)> =
        (done..cells.len()).flat_map(|c| (0..cfg.replicas).map(move |r| (c, r))).collect();
    let workers = worker_count(cfg.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| contract(format!("cannot start workers: {e}")))?;

    let mut out = OpenOptions::new().append(true).open(&rows_path)?;
    let mut skipped = Vec::new();
    let mut written = kept.len();
    let (tx, rx) = mpsc::channel::<(usize, Result<TaskResult>)>();
    let outcome: Result<()> = std::thread::scope(|scope| {
        let cells = &cells;
        let tasks = &tasks;
        scope.spawn(move || {
            pool.install(|| {
                tasks.par_iter().enumerate().for_each_with(tx, |tx, (order, &(c, r))| {
                    let _ = tx.send((order, run_task(cfg, &cells[c], r)));
                });
            });
        });
        // Reorder buffer: emit results strictly in task order.
        let mut pending: BTreeMap<usize, TaskResult> = BTreeMap::new();
        let mut next = 0;
        let mut first_error = None;
        for (order, result) in rx {
            match result {
                Ok(r) => {
                    pending.insert(order, r);
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
            while let Some(r) = pending.remove(&next) {
                if first_error.is_none() {
                    for line in task_rows(cfg, &cells[r.cell], &r) {
                        writeln!(out, "{line}")?;
                        written += 1;
                    }
                    out.flush()?;
                    if r.measurements.is_none() {
                        skipped.push((r.cell, r.replica));
                    }
                }
                next += 1;
            }
        }
        first_error.map_or(Ok(()), Err)
    });
    outcome?;

    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: format!("{:#x}", cfg.seed),
        config: config_text.to_string(),
        cells: cells
            .iter()
            .map(|c| ManifestCell {
                index: c.index,
                d: c.params.d(),
                gamma: c.params.gamma(),
                beta: c.params.beta(),
                delta: fmt_f64(c.params.delta()),
                a: c.params.a(),
                t: c.t,
                phase: c.phase,
                graph_seeds: (0..cfg.replicas).map(|r| format!("{:#x}", cfg.graph_seed(c.index, r))).collect(),
                percolation_seeds: (0..cfg.replicas)
                    .map(|r| format!("{:#x}", cfg.percolation_seed(c.index, r)))
                    .collect(),
            })
            .collect(),
        rows: written,
        skipped_tasks: skipped,
        workers,
        resumed_cells: done,
        wall_time_ms: start.elapsed().as_millis(),
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(SweepOutcome {
        rows_path,
        manifest_path,
        manifest,
    })
}

/// A parsed row of a rows file; skipped rows carry no measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub d: usize,
    pub gamma: f64,
    pub delta: f64,
    pub t: f64,
    pub phase: String,
    pub replica: usize,
    pub p: f64,
    pub status: String,
    pub n: Option<usize>,
    pub measurement: Option<Measurement>,
}

/// Reads a rows file back.
pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: "unexpected rows header".into(),
        });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| Error::Parse {
                line: i + 2,
                message: format!("bad {what} in `{line}`"),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 19 {
                return Err(bad("field count"));
            }
            let num = |j: usize, what: &str| super::config::parse_f64(f[j]).ok_or_else(|| bad(what));
            let int = |j: usize, what: &str| f[j].parse::<usize>().map_err(|_| bad(what));
            let measurement = if f[12] == "ok" {
                Some(Measurement {
                    p: num(11, "p")?,
                    largest_frac: num(14, "largest_frac")?,
                    second_frac: num(15, "second_frac")?,
                    frac_to_oldest: num(16, "frac_to_oldest")?,
                    frac_finite_k: num(17, "frac_finite_k")?,
                })
            } else {
                None
            };
            Ok(SweepRow {
                cell: int(0, "cell")?,
                d: int(1, "d")?,
                gamma: num(2, "gamma")?,
                delta: num(4, "delta")?,
                t: num(6, "t")?,
                phase: f[7].to_string(),
                replica: int(9, "replica")?,
                p: num(11, "p")?,
                status: f[12].to_string(),
                n: f[13].parse().ok(),
                measurement,
            })
        })
        .collect()
}

/// CSV contents with the timing column removed, for comparisons.
pub fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
