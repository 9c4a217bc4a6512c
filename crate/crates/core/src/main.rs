use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use spag::analysis::{
    average_clustering, core_report, default_goodness_correction, distance_sample, edge_length_survival,
    longest_incident_edges, tail_exponent, DEFAULT_TOP_FRACTION,
};
use spag::experiments::{self, model_params, parse_f64, parse_seed, Config, SweepConfig};
use spag::generator::{build_graph_with_stats, Adjacency, Graph, Mode, View};
use spag::indegree::{mean_check, moment_ratio_check, tail_bound_check, DEFAULT_MEAN_GRID};
use spag::model::ModelParams;
use spag::pathlab;
use spag::percolation::{component_stats, finite_component_fraction, fraction_connected_to_oldest, percolate};
use spag::randomness::DEFAULT_MAX_EXPECTED_POINTS;
use spag::{Error, Result};

#[derive(Parser)]
#[command(name = "spag", version, about = "Spatial preferential attachment networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn seed_arg(s: &str) -> std::result::Result<u64, String> {
    parse_seed(s).ok_or_else(|| format!("`{s}` is not a decimal or 0x-hex seed"))
}

fn float_arg(s: &str) -> std::result::Result<f64, String> {
    parse_f64(s).ok_or_else(|| format!("`{s}` is not a number"))
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it in the canonical text format.
    Generate {
        /// Model config with keys d, gamma, delta and optionally beta, a.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = float_arg)]
        t: f64,
        #[arg(long, default_value = "stationary")]
        view: View,
        #[arg(long, default_value = "ring-skip")]
        mode: Mode,
        #[arg(long)]
        seed: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_EXPECTED_POINTS)]
        max_expected_points: f64,
    },
    /// Percolate a graph over a grid of retention probabilities.
    Percolate {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated retention probabilities, e.g. `0.1,0.5,1`.
        #[arg(long)]
        p: String,
        #[arg(long, value_parser = seed_arg)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Size bound for the finite-component column.
        #[arg(long, default_value_t = 10)]
        finite_k: usize,
    },
    /// Structural diagnostics of a graph; CSV or JSON by output extension.
    Analyze {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        report: Report,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = seed_arg, default_value = "0")]
        seed: u64,
        /// Sample size for clustering and distance estimates.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TOP_FRACTION)]
        top_fraction: f64,
        /// Core depth.
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Core growth exponent.
        #[arg(long, default_value_t = 1.3)]
        alpha: f64,
    },
    /// Sample geodesics of a percolated graph and derive their path objects.
    Pathlab {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = seed_arg)]
        perc_seed: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo checks of the indegree birth process.
    Indegree {
        #[arg(long)]
        check: Check,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep into a directory of CSV rows and a manifest.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        resume: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Degrees,
    Clustering,
    Lengths,
    Distances,
    Core,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Tail,
    Moments,
    Mean,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spag: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            config,
            t,
            view,
            mode,
            seed,
            out,
            max_expected_points,
        } => {
            let seed_value = parse_seed(&seed).ok_or_else(|| Error::Contract(format!("bad seed `{seed}`")))?;
            let params = model_params(&load_model_config(&config)?)?;
            let (g, stats) = build_graph_with_stats(&params, view, t, seed_value, mode, max_expected_points)?;
            experiments::save_graph(&g, &out)?;
            eprintln!(
                "seed {seed}: {} vertices, {} edges, {} probability evaluations",
                g.num_vertices(),
                g.num_edges(),
                stats.evaluations
            );
            Ok(())
        }
        Command::Percolate {
            graph,
            p,
            seed,
            out,
            finite_k,
        } => {
            let g = experiments::load_graph(&graph)?;
            write_text(&out, &percolation_csv(&g, &parse_grid(&p)?, seed, finite_k)?)
        }
        Command::Analyze {
            graph,
            report,
            out,
            seed,
            samples,
            top_fraction,
            k,
            alpha,
        } => {
            let g = experiments::load_graph(&graph)?;
            let (csv, summary) = analyze(&g, report, seed, samples, top_fraction, k, alpha)?;
            if is_json(&out) {
                let mut doc = json!({ "params": params_json(g.params()), "view": g.view().to_string(),
                    "t": g.t(), "seed": format!("{:#x}", g.seed()), "n": g.num_vertices(), "m": g.num_edges() });
                doc.as_object_mut().expect("object").extend(summary.as_object().cloned().unwrap_or_default());
                write_text(&out, &(serde_json::to_string_pretty(&doc)? + "\n"))
            } else {
                write_text(&out, &csv)
            }
        }
        Command::Pathlab {
            graph,
            perc_seed,
            p,
            samples,
            out,
        } => {
            let g = experiments::load_graph(&graph)?;
            let sampled = pathlab::sample_paths(&g, p, perc_seed, samples)?;
            let doc = json!({
                "params": params_json(g.params()),
                "graph_seed": format!("{:#x}", g.seed()),
                "perc_seed": format!("{perc_seed:#x}"),
                "p": p,
                "samples": sampled.iter().map(path_sample_json).collect::<Vec<_>>(),
            });
            write_text(&out, &(serde_json::to_string_pretty(&doc)? + "\n"))
        }
        Command::Indegree { check, config, out } => write_text(&out, &indegree_csv(check, &Config::load(&config)?)?),
        Command::Sweep { config, out_dir, resume } => {
            let cfg_file = Config::load(&config)?;
            let cfg = SweepConfig::from_config(&cfg_file)?;
            let outcome = experiments::run_sweep(&cfg, &cfg_file.canonical(), &out_dir, resume)?;
            eprintln!(
                "{} rows in {}, {} skipped tasks, {} cells resumed",
                outcome.manifest.rows,
                outcome.rows_path.display(),
                outcome.manifest.skipped_tasks.len(),
                outcome.manifest.resumed_cells
            );
            Ok(())
        }
    }
}

fn load_model_config(path: &Path) -> Result<Config> {
    let cfg = Config::load(path)?;
    cfg.ensure_only(&experiments::config::MODEL_KEYS)?;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    Ok(std::fs::write(path, text)?)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(|s| parse_f64(s).ok_or_else(|| Error::Contract(format!("`{s}` is not a number"))))
        .collect()
}

fn params_json(p: &ModelParams) -> Value {
    json!({
        "d": p.d(),
        "gamma": p.gamma(),
        "beta": p.beta(),
        "delta": if p.delta().is_infinite() { json!("inf") } else { json!(p.delta()) },
        "a": p.a(),
        "phase": p.classify_phase().phase.to_string(),
    })
}

/// One row per retention probability, all sharing the same marks.
fn percolation_csv(g: &Graph, grid: &[f64], seed: u64, finite_k: usize) -> Result<String> {
    let mut csv = format!(
        "p,retained,largest,second,components,frac_to_oldest,frac_finite_k{finite_k},frac_to_oldest_of_retained\n"
    );
    for &p in grid {
        let r = percolate(g, p, seed)?;
        let s = component_stats(&r);
        let retained = r.retained_count();
        let of_retained = fraction_connected_to_oldest(&r, retained.max(1) as f64);
        writeln!(
            csv,
            "{p},{retained},{},{},{},{},{},{of_retained}",
            s.largest,
            s.second,
            s.count,
            fraction_connected_to_oldest(&r, g.t()),
            finite_component_fraction(&r, finite_k)?
        )
        .expect("writing to a string");
    }
    Ok(csv)
}

fn analyze(
    g: &Graph,
    report: Report,
    seed: u64,
    samples: usize,
    top_fraction: f64,
    k: u32,
    alpha: f64,
) -> Result<(String, Value)> {
    let mut csv = String::new();
    let summary = match report {
        Report::Degrees => {
            let degrees = g.degrees();
            let mut hist = std::collections::BTreeMap::<u64, usize>::new();
            for &d in &degrees {
                *hist.entry(d).or_default() += 1;
            }
            csv.push_str("degree,count\n");
            for (d, c) in &hist {
                writeln!(csv, "{d},{c}").expect("writing to a string");
            }
            let tail = (degrees.len() as f64 * top_fraction).floor() as usize;
            json!({
                "report": "degrees",
                "tau_hat": tail_exponent(&degrees, top_fraction).ok(),
                "tau_target": g.params().tau(),
                "top_fraction": top_fraction,
                "tail_sample_size": tail,
                "mean_degree": degrees.iter().sum::<u64>() as f64 / degrees.len().max(1) as f64,
                "sample_size": degrees.len(),
            })
        }
        Report::Clustering => {
            let c = average_clustering(g, samples, seed)?;
            let used = samples.min(g.num_vertices());
            writeln!(csv, "sample_size,average_clustering\n{used},{c}").expect("writing to a string");
            json!({ "report": "clustering", "average_clustering": c, "sample_size": used, "sample_seed": format!("{seed:#x}") })
        }
        Report::Lengths => {
            let lengths = longest_incident_edges(g)?;
            let max = lengths.iter().copied().fold(0.0, f64::max);
            let grid: Vec<f64> = (0..40).map(|i| 2f64.powf(i as f64 / 2.0)).take_while(|&k| k <= max.max(1.0)).collect();
            let surv = edge_length_survival(g, &grid)?;
            csv.push_str("length,survival\n");
            for (k, s) in &surv {
                writeln!(csv, "{k},{s}").expect("writing to a string");
            }
            let slope = spag::stats::log_log_slope(&surv).ok();
            json!({ "report": "lengths", "survival": surv, "log_log_slope": slope, "sample_size": lengths.len() })
        }
        Report::Distances => {
            let adj = Adjacency::new(g.num_vertices(), g.edges(), None);
            let ds = distance_sample(&adj, None, samples, seed)?;
            let mut hist = std::collections::BTreeMap::<usize, usize>::new();
            for &h in &ds.hops {
                *hist.entry(h).or_default() += 1;
            }
            csv.push_str("hops,count\n");
            for (h, c) in &hist {
                writeln!(csv, "{h},{c}").expect("writing to a string");
            }
            json!({ "report": "distances", "median_hops": ds.median(), "connected_pairs": ds.hops.len(),
                    "unreachable_pairs": ds.unreachable, "sample_size": samples, "sample_seed": format!("{seed:#x}") })
        }
        Report::Core => {
            let r = core_report(g, k, alpha, &default_goodness_correction)?;
            csv.push_str("id,birth,good,in_core\n");
            for &v in &r.good_vertex_ids {
                let in_core = r.core_ids.binary_search(&v).is_ok();
                writeln!(csv, "{v},{},1,{}", g.birth(v), u8::from(in_core)).expect("writing to a string");
            }
            let mut v = serde_json::to_value(&r)?;
            v["report"] = json!("core");
            v["two_connected_fraction"] = json!(r.two_connected_fraction());
            v["sample_size"] = json!(r.candidates);
            v
        }
    };
    Ok((csv, summary))
}

fn path_sample_json(s: &pathlab::PathSample) -> Value {
    json!({
        "geodesic": s.geodesic,
        "quick_path": s.quick_path,
        "split_indices": s.decomposition.split_indices,
        "part_types": s.decomposition.part_types.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "contributors": s.decomposition.contributors,
        "children_sets": s.children.sets,
        "children_disjoint": s.children.disjoint,
        "trace": s.trace,
    })
}

const INDEGREE_KEYS: [&str; 12] =
    ["gamma", "beta", "r", "s", "s_prime", "lambda", "exponents", "replicas", "seed", "min_count", "grid_r", "grid_s"];

fn indegree_csv(check: Check, cfg: &Config) -> Result<String> {
    cfg.ensure_only(&INDEGREE_KEYS)?;
    let gamma = cfg.f64("gamma")?;
    let params = ModelParams::new(1, gamma, cfg.f64_or("beta", 1.0 - gamma)?, 2.0, 0.5)?;
    let replicas = cfg.usize_or("replicas", 10_000)?;
    let seed = if cfg.contains("seed") { cfg.seed("seed")? } else { 0 };
    let mut csv = String::new();
    match check {
        Check::Mean => {
            let grid: Vec<(f64, f64)> = if cfg.contains("grid_r") {
                let (r, s) = (cfg.f64_list("grid_r")?, cfg.f64_list("grid_s")?);
                if r.len() != s.len() {
                    return Err(Error::Contract("grid_r and grid_s differ in length".into()));
                }
                r.into_iter().zip(s).collect()
            } else {
                DEFAULT_MEAN_GRID.to_vec()
            };
            csv.push_str("r,s,replicas,mean,std_error,expected,z_score\n");
            for row in mean_check(&params, &grid, replicas, seed)? {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    row.r,
                    row.s,
                    row.replicas,
                    row.mean,
                    row.std_error,
                    row.expected,
                    row.z_score()
                )
                .expect("writing to a string");
            }
        }
        Check::Tail => {
            let lambdas =
                if cfg.contains("lambda") { cfg.f64_list("lambda")? } else { (2..=12).map(f64::from).collect() };
            let t = tail_bound_check(&params, cfg.f64("r")?, cfg.f64("s")?, &lambdas, replicas, seed)?;
            csv.push_str("lambda,exceedance,fitted_slope,slope_upper_95\n");
            for (l, e) in &t.rows {
                writeln!(csv, "{l},{e},{},{}", t.slope, t.slope_upper).expect("writing to a string");
            }
        }
        Check::Moments => {
            let exps = if cfg.contains("exponents") { cfg.f64_list("exponents")? } else { vec![1.0, 2.0] };
            let t = moment_ratio_check(
                &params,
                cfg.f64("r")?,
                cfg.f64("s")?,
                cfg.f64("s_prime")?,
                &exps,
                replicas,
                cfg.usize_or("min_count", 100)?,
                seed,
            )?;
            csv.push_str("value_at_s,count,exponent,moment,normalized\n");
            let growth = cfg.f64("s_prime")? / cfg.f64("s")?;
            for b in &t.buckets {
                for (p, m) in exps.iter().zip(&b.moments) {
                    let norm = m / growth.powf(p * gamma);
                    writeln!(csv, "{},{},{p},{m},{norm}", b.value, b.count).expect("writing to a string");
                }
            }
        }
    }
    Ok(csv)
}
