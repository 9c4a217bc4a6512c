//! Sweeps, graph files and the command-line front end.

use std::path::Path;
use std::process::Command;

use spag::experiments::sweep::{read_rows, strip_timing, CSV_HEADER};
use spag::experiments::{graph_to_string, load_graph, run_sweep, Config, SweepConfig};
use spag::generator::{build_graph, Mode, View};
use spag::model::ModelParams;

fn sweep_cfg(text: &str) -> SweepConfig {
    SweepConfig::from_config(&Config::parse(text).unwrap()).unwrap()
}

const GRID: &str = "d=1\ngamma=[0.3,0.8]\ndelta=[1.2,3]\nt=[800,1500]\np=[0.1,0.4,0.7,1]\nreplicas=3\nseed=0x51\n";

#[test]
fn single_cell_gives_one_row_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_cfg("d=1\ngamma=0.5\ndelta=2\nt=500\np=0.5\n");
    let out = run_sweep(&cfg, "", dir.path(), false).unwrap();
    let text = std::fs::read_to_string(&out.rows_path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out.manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["rows"], 1);
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 1);
    assert!(manifest["wall_time_ms"].is_u64());
}

#[test]
fn rows_are_coupled_in_p_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_cfg(GRID);
    let out = run_sweep(&cfg, GRID, dir.path(), false).unwrap();
    let rows = read_rows(&out.rows_path).unwrap();
    assert_eq!(rows.len(), 8 * 3 * 4);
    for chunk in rows.chunks(4) {
        let ms: Vec<_> = chunk.iter().map(|r| r.measurement.clone().unwrap()).collect();
        assert!(chunk.iter().all(|r| r.cell == chunk[0].cell && r.replica == chunk[0].replica));
        for m in &ms {
            for x in [m.largest_frac, m.second_frac, m.frac_to_oldest, m.frac_finite_k] {
                assert!((0.0..=1.0).contains(&x));
            }
            assert!(m.second_frac <= m.largest_frac);
        }
        assert!(ms.windows(2).all(|w| w[0].largest_frac <= w[1].largest_frac), "{ms:?}");
    }
}

fn run_to_string(cfg: &SweepConfig, dir: &Path, resume: bool) -> String {
    let out = run_sweep(cfg, GRID, dir, resume).unwrap();
    strip_timing(&std::fs::read_to_string(out.rows_path).unwrap())
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let mut one = sweep_cfg(GRID);
    one.threads = Some(1);
    let mut three = one.clone();
    three.threads = Some(3);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run_to_string(&one, a.path(), false), run_to_string(&three, b.path(), false));
}

#[test]
fn resuming_after_a_crash_reproduces_the_full_run() {
    let cfg = sweep_cfg(GRID);
    let full_dir = tempfile::tempdir().unwrap();
    let full = run_to_string(&cfg, full_dir.path(), false);

    let dir = tempfile::tempdir().unwrap();
    let raw = {
        run_sweep(&cfg, GRID, dir.path(), false).unwrap();
        std::fs::read_to_string(dir.path().join("rows.csv")).unwrap()
    };
    // Keep three complete cells, part of the fourth and a torn last line.
    let lines: Vec<&str> = raw.lines().collect();
    let per_cell = cfg.rows_per_cell();
    let keep = 1 + 3 * per_cell + 5;
    let mut crashed: String = lines[..keep].iter().map(|l| format!("{l}\n")).collect();
    crashed.push_str(&lines[keep][..lines[keep].len() / 2]);
    std::fs::write(dir.path().join("rows.csv"), crashed).unwrap();

    let out = run_sweep(&cfg, GRID, dir.path(), true).unwrap();
    assert_eq!(out.manifest.resumed_cells, 3);
    let resumed = strip_timing(&std::fs::read_to_string(out.rows_path).unwrap());
    assert_eq!(resumed, full);
    // Resuming a finished run recomputes nothing.
    let again = run_sweep(&cfg, GRID, dir.path(), true).unwrap();
    assert_eq!(again.manifest.resumed_cells, 8);
    assert_eq!(strip_timing(&std::fs::read_to_string(again.rows_path).unwrap()), full);
}

#[test]
fn resource_cap_skips_and_flags_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_cfg("d=1\ngamma=0.5\ndelta=2\nt=[100,100000]\np=[0.5,1]\nmax_expected_points=1000\n");
    let out = run_sweep(&cfg, "", dir.path(), false).unwrap();
    assert_eq!(out.manifest.skipped_tasks, vec![(1, 0)]);
    let rows = read_rows(&out.rows_path).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[..2].iter().all(|r| r.status == "ok"));
    assert!(rows[2..].iter().all(|r| r.status == "skipped_resource_cap" && r.measurement.is_none()));
}

#[test]
fn graph_files_are_reproducible() {
    let p = ModelParams::with_defaults(2, 0.6, 2.5).unwrap();
    for seed in [0u64, 7, u64::MAX] {
        let a = graph_to_string(&build_graph(&p, View::Stationary, 700.0, seed, Mode::RingSkip).unwrap());
        let b = graph_to_string(&build_graph(&p, View::Stationary, 700.0, seed, Mode::RingSkip).unwrap());
        assert_eq!(a, b);
    }
}

fn spag(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_spag")).args(args).output().unwrap()
}

#[test]
fn cli_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    std::fs::write(path("model.cfg"), "d=1\ngamma=0.4\ndelta=2\n").unwrap();

    let gen = |out: &str| spag(&["generate", "--config", &path("model.cfg"), "--t", "1500", "--seed", "0x10", "--out", out]);
    assert!(gen(&path("a.txt")).status.success());
    assert!(gen(&path("b.txt")).status.success());
    let a = std::fs::read(path("a.txt")).unwrap();
    assert_eq!(a, std::fs::read(path("b.txt")).unwrap());
    let g = load_graph(Path::new(&path("a.txt"))).unwrap();
    assert_eq!(g.seed(), 16);

    let out = spag(&["percolate", "--graph", &path("a.txt"), "--p", "0.3,1", "--seed", "4", "--out", &path("p.csv")]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(path("p.csv")).unwrap();
    assert!(csv.starts_with("p,retained,largest,second,components,frac_to_oldest,frac_finite_k10"));
    assert_eq!(csv.lines().count(), 3);

    for report in ["degrees", "clustering", "lengths", "distances"] {
        let out = spag(&["analyze", "--graph", &path("a.txt"), "--report", report, "--out", &path("r.json")]);
        assert!(out.status.success(), "{report}: {}", String::from_utf8_lossy(&out.stderr));
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path("r.json")).unwrap()).unwrap();
        assert_eq!(doc["params"]["gamma"], 0.4);
        assert!(doc["sample_size"].is_u64(), "{report}");
    }
    // Non-robust parameters: the core report is refused.
    let out = spag(&["analyze", "--graph", &path("a.txt"), "--report", "core", "--out", &path("c.json")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("refused"));

    let out = spag(&["pathlab", "--graph", &path("a.txt"), "--perc-seed", "3", "--p", "0.8", "--samples", "4", "--out", &path("pl.json")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path("pl.json")).unwrap()).unwrap();
    assert_eq!(doc["samples"].as_array().unwrap().len(), 4);
    assert!(doc["samples"][0]["trace"]["retained_fraction"].is_number());

    std::fs::write(path("i.cfg"), "gamma=0.5\nbeta=0.5\nr=0.01\ns=1\nreplicas=2000\n").unwrap();
    let out = spag(&["indegree", "--check", "mean", "--config", &path("i.cfg"), "--out", &path("i.csv")]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(path("i.csv")).unwrap().lines().count(), 11);

    std::fs::write(path("s.cfg"), "d=1\ngamma=0.5\ndelta=2\nt=300\np=[0.5,1]\nreplicas=2\n").unwrap();
    let out = spag(&["sweep", "--config", &path("s.cfg"), "--out-dir", &path("sw")]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("sw/rows.csv")).unwrap().lines().count(), 5);

    let bad = spag(&["generate", "--config", &path("model.cfg"), "--t", "10", "--seed", "nope", "--out", &path("x")]);
    assert!(!bad.status.success());
    std::fs::write(path("bad.cfg"), "d=1\ngamma=0.4\ndelta\n").unwrap();
    let bad = spag(&["generate", "--config", &path("bad.cfg"), "--t", "10", "--seed", "1", "--out", &path("x")]);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 3"));
}
