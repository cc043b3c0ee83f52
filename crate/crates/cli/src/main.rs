//! Experiment runner and analysis front end for the MRF fabric simulator.

mod analyze;
mod config;
mod perf_cmd;
mod run;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mrfsim",
    version,
    about = "Tiled Gibbs-sampling fabric simulator"
)]
struct Cli {
    /// Worker threads for the phase-parallel simulator (never affects
    /// results; 0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// key = value configuration file.
    #[arg(long, required_unless_present = "from_summary")]
    config: Option<PathBuf>,

    /// Reproduce a previous run from its JSON summary.
    #[arg(long, conflicts_with = "config")]
    from_summary: Option<PathBuf>,

    /// Override a config key, e.g. --set seed=5. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory for all artifacts.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,

    /// Run the naive per-iteration counter oracle alongside and verify the
    /// reconstructed histogram against it.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct ShapeArgs {
    /// Pull image dimensions, label count, and window from a run summary.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    labels: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fixed-point simulator end to end.
    Run(RunArgs),

    /// Rebuild exact per-RV histograms from a log file.
    Reconstruct {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },

    /// Per-RV mode/top-1/entropy statistics and an uncertainty map.
    Stats {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },

    /// Analytical models: eviction bandwidth, topology, throughput, storage.
    Perf {
        #[arg(long, default_value_t = 2048)]
        spus: u64,
        #[arg(long, default_value_t = 49)]
        labels: u64,
        #[arg(long, default_value_t = 146e6)]
        clock_hz: f64,
        #[arg(long, default_value_t = 32)]
        message_bits: u64,
        #[arg(long, default_value_t = 512)]
        bandwidth: u64,
        #[arg(long, default_value_t = 0.0)]
        eviction_rate: f64,
        #[arg(long, default_value_t = 8)]
        grid_d: u64,
        #[arg(long, default_value_t = 2)]
        spus_per_spe: u64,
        /// Pull measured eviction/storage figures from a run summary.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Also write the D x S topology cost table as CSV.
        #[arg(long)]
        topology_csv: Option<PathBuf>,
    },

    /// Cumulative fraction of RVs per unique-label count over a window.
    TraceUniqueLabels {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        labels: usize,
        #[arg(long)]
        window_start: Option<usize>,
        #[arg(long)]
        window_end: Option<usize>,
        #[arg(long, default_value = "unique_labels.csv")]
        out: PathBuf,
    },

    /// Replay a trace against label memories of 1..=8 pairs per RV.
    LmemSweep {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        labels: usize,
        #[arg(long, default_value_t = 2048)]
        spus: u64,
        #[arg(long, default_value_t = 32)]
        message_bits: u64,
        #[arg(long, default_value_t = 512)]
        bandwidth: u64,
        #[arg(long, default_value = "lmem_sweep.csv")]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Run(args) => {
            let config = if let Some(summary_path) = &args.from_summary {
                let mut config = analyze::read_summary(summary_path)?.config;
                if !args.overrides.is_empty() {
                    let mut map = serde_json::to_value(&config)?
                        .as_object()
                        .map(|o| {
                            o.iter()
                                .filter(|(_, v)| !v.is_null())
                                .map(|(k, v)| {
                                    let s = match v {
                                        serde_json::Value::String(s) => s.clone(),
                                        other => other.to_string(),
                                    };
                                    (k.clone(), s)
                                })
                                .collect::<std::collections::BTreeMap<_, _>>()
                        })
                        .unwrap_or_default();
                    for pair in &args.overrides {
                        let (k, v) = pair.split_once('=').context("--set expects key=value")?;
                        map.insert(k.trim().into(), v.trim().into());
                    }
                    config = config::resolve(map)?;
                }
                config
            } else {
                config::load(args.config.as_ref().unwrap(), &args.overrides)?
            };
            let summary = run::cmd_run(config, &args.out_dir, args.oracle)?;
            for warning in &summary.warnings {
                eprintln!("warning: {warning}");
            }
            if let Some(e) = summary.metrics.epe {
                println!("epe = {e:.4}");
            }
            if let Some(bp) = summary.metrics.bad_pixel_percent {
                println!("bad_pixel_percent = {bp:.3}");
            }
            println!("log_records = {}", summary.evictions.log_records);
            println!(
                "storage_savings_ratio = {:.4}",
                summary.storage.savings_ratio
            );
            println!(
                "bank_conflicts: lmem = {}, s2 = {}",
                summary.counters.lmem_bank_conflicts, summary.counters.s2_bank_conflicts
            );
            println!("one_hop_violations = {}", summary.one_hop_violations);
            println!("summary: {}", summary.artifacts.summary.display());
        }
        Command::Reconstruct {
            log,
            shape,
            out_dir,
        } => {
            let shape = analyze::LogShape::from_args(
                shape.summary.as_deref(),
                shape.labels,
                shape.width,
                shape.height,
            )?;
            analyze::cmd_reconstruct(&log, &shape, &out_dir)?;
        }
        Command::Stats {
            log,
            shape,
            out_dir,
        } => {
            let shape = analyze::LogShape::from_args(
                shape.summary.as_deref(),
                shape.labels,
                shape.width,
                shape.height,
            )?;
            analyze::cmd_stats(&log, &shape, &out_dir)?;
        }
        Command::Perf {
            spus,
            labels,
            clock_hz,
            message_bits,
            bandwidth,
            eviction_rate,
            grid_d,
            spus_per_spe,
            summary,
            topology_csv,
        } => {
            perf_cmd::cmd_perf(
                &perf_cmd::PerfArgs {
                    n_spus: spus,
                    labels,
                    clock_hz,
                    message_bits,
                    bandwidth,
                    eviction_rate,
                    grid_d,
                    spus_per_spe,
                    summary,
                },
                topology_csv.as_deref(),
            )?;
        }
        Command::TraceUniqueLabels {
            trace,
            labels,
            window_start,
            window_end,
            out,
        } => {
            analyze::cmd_trace_unique_labels(&trace, labels, window_start, window_end, &out)?;
        }
        Command::LmemSweep {
            trace,
            labels,
            spus,
            message_bits,
            bandwidth,
            out,
        } => {
            analyze::cmd_lmem_sweep(&trace, labels, spus, message_bits, bandwidth, &out)?;
        }
    }
    Ok(())
}
