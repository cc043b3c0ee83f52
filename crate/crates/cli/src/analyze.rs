//! Log and trace analysis commands: histogram reconstruction, per-RV
//! statistics, unique-label CDFs, and the label-memory size sweep.

use crate::run::RunSummary;
use anyhow::{bail, Context, Result};
use mrfsim_core::apps::io::{write_pgm, GrayImage};
use mrfsim_core::perf::{bandwidth_utilization, PerfParams};
use mrfsim_core::uq::{trace_lmem_sim, unique_label_cdf, uq_stats};
use mrfsim_core::{DramLog, LabelTrace};
use std::io::Write;
use std::path::Path;

/// Shape information the log file itself does not carry.
pub struct LogShape {
    pub n_rvs: usize,
    pub labels: usize,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub window: Option<u64>,
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("missing summary file: {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl LogShape {
    pub fn from_args(
        summary: Option<&Path>,
        labels: Option<usize>,
        width: Option<usize>,
        height: Option<usize>,
    ) -> Result<Self> {
        if let Some(path) = summary {
            let s = read_summary(path)?;
            return Ok(Self {
                n_rvs: s.image_width * s.image_height,
                labels: s.config.labels,
                width: Some(s.image_width),
                height: Some(s.image_height),
                window: Some((s.config.iterations - s.config.collection_start) as u64),
            });
        }
        let (Some(labels), Some(width), Some(height)) = (labels, width, height) else {
            bail!("provide either --summary or all of --labels, --width, --height");
        };
        Ok(Self {
            n_rvs: width * height,
            labels,
            width: Some(width),
            height: Some(height),
            window: None,
        })
    }
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

/// Rebuild exact per-RV histograms from a log file and dump them as CSV.
pub fn cmd_reconstruct(log_path: &Path, shape: &LogShape, out_dir: &Path) -> Result<()> {
    let log = DramLog::read_file(log_path)
        .with_context(|| format!("reading log {}", log_path.display()))?;
    let hist = mrfsim_core::reconstruct_histogram(&log, shape.n_rvs, shape.labels)?;
    std::fs::create_dir_all(out_dir)?;
    let csv = out_dir.join("histogram.csv");
    write_csv(
        &csv,
        "rv,label,count",
        (0..shape.n_rvs).flat_map(|rv| {
            hist.rv_counts(rv)
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(l, &c)| format!("{rv},{l},{c}"))
                .collect::<Vec<_>>()
        }),
    )?;
    let totals: Vec<u64> = (0..shape.n_rvs).map(|rv| hist.total(rv)).collect();
    let uniform = totals.windows(2).all(|w| w[0] == w[1]);
    println!("log records: {}", log.index());
    println!("histogram: {}", csv.display());
    if let Some(window) = shape.window {
        let conserved = uniform && totals.first().copied().unwrap_or(0) == window;
        println!("per-rv totals equal the collection window ({window}): {conserved}");
        if !conserved {
            bail!("count conservation violated: totals do not match the collection window");
        }
    } else if !totals.is_empty() {
        println!("per-rv total (first): {} (uniform: {uniform})", totals[0]);
    }
    Ok(())
}

/// Per-RV mode/top-1/entropy statistics plus an uncertainty map image.
pub fn cmd_stats(log_path: &Path, shape: &LogShape, out_dir: &Path) -> Result<()> {
    let log = DramLog::read_file(log_path)
        .with_context(|| format!("reading log {}", log_path.display()))?;
    let hist = mrfsim_core::reconstruct_histogram(&log, shape.n_rvs, shape.labels)?;
    std::fs::create_dir_all(out_dir)?;
    let csv = out_dir.join("rv_stats.csv");
    let mut entropy_map = vec![0u8; shape.n_rvs];
    {
        let mut file = std::io::BufWriter::new(std::fs::File::create(&csv)?);
        writeln!(file, "rv,mode,top1,entropy")?;
        for (rv, pixel) in entropy_map.iter_mut().enumerate() {
            let stats = uq_stats(hist.rv_counts(rv))?;
            writeln!(
                file,
                "{rv},{},{:.6},{:.6}",
                stats.mode, stats.top1, stats.entropy
            )?;
            *pixel = (stats.entropy * 255.0).round().clamp(0.0, 255.0) as u8;
        }
    }
    println!("stats: {}", csv.display());
    if let (Some(width), Some(height)) = (shape.width, shape.height) {
        let map_path = out_dir.join("uncertainty.pgm");
        write_pgm(&map_path, &GrayImage::new(width, height, entropy_map))?;
        println!("uncertainty map: {}", map_path.display());
    }
    Ok(())
}

/// Unique-label CDF of a recorded trace over an iteration window.
pub fn cmd_trace_unique_labels(
    trace_path: &Path,
    labels: usize,
    window_start: Option<usize>,
    window_end: Option<usize>,
    out: &Path,
) -> Result<()> {
    let trace = LabelTrace::read_file(trace_path)
        .with_context(|| format!("reading trace {}", trace_path.display()))?;
    let window = window_start.unwrap_or(0)..window_end.unwrap_or(trace.iterations());
    let cdf = unique_label_cdf(&trace, window.clone(), labels)?;
    write_csv(
        out,
        "unique_labels,cumulative_fraction",
        cdf.iter()
            .enumerate()
            .map(|(k, &f)| format!("{},{f:.6}", k + 1)),
    )?;
    println!(
        "window {}..{}: {:.2}% of RVs within 2 unique labels ({})",
        window.start,
        window.end,
        100.0 * cdf.get(1).copied().unwrap_or(0.0),
        out.display()
    );
    Ok(())
}

/// Replay a trace against label memories of 1..=8 pairs and report
/// eviction behavior and bandwidth utilization per size.
pub fn cmd_lmem_sweep(
    trace_path: &Path,
    labels: usize,
    n_spus: u64,
    message_bits: u64,
    bandwidth: u64,
    out: &Path,
) -> Result<()> {
    let trace = LabelTrace::read_file(trace_path)
        .with_context(|| format!("reading trace {}", trace_path.display()))?;
    let mut rows = Vec::new();
    println!("pairs  capacity  saturation  sustained_rate  utilization");
    for pairs in 1..=8 {
        let stats = trace_lmem_sim(&trace, pairs, labels);
        let utilization = bandwidth_utilization(&PerfParams {
            n_spus,
            n_labels: labels as u64,
            message_bits,
            bandwidth_bits_per_cycle: bandwidth,
            eviction_rate: stats.sustained_rate,
        });
        println!(
            "{pairs:>5}  {:>8}  {:>10}  {:>14.6}  {utilization:>11.6}",
            stats.capacity_evictions, stats.saturation_evictions, stats.sustained_rate
        );
        rows.push(format!(
            "{pairs},{},{},{:.6},{:.6},{:.6},{:.6},{utilization:.6}",
            stats.capacity_evictions,
            stats.saturation_evictions,
            stats.max_rate_per_iteration,
            stats.max_rate_1000_cycles,
            stats.max_capacity_rate_per_iteration,
            stats.sustained_rate,
        ));
    }
    write_csv(
        out,
        "pairs,capacity_evictions,saturation_evictions,max_rate_per_iteration,max_rate_1000_cycles,max_capacity_rate_per_iteration,sustained_rate,utilization",
        rows.into_iter(),
    )?;
    println!("sweep: {}", out.display());
    Ok(())
}
