//! The `run` command: drive the fixed-point simulator end to end and emit
//! label maps, the UQ log, CSV traces, and a reproducible JSON summary.

use crate::config::{Application, RunConfig};
use anyhow::{bail, Context, Result};
use mrfsim_core::apps::io::{
    labels_to_pgm, read_disparity_gt, read_flo, read_pgm, write_pgm, GrayImage,
};
use mrfsim_core::apps::metrics::{bad_pixel, epe};
use mrfsim_core::apps::{
    build_motion_model, build_stereo_model, labels_to_disparity, labels_to_flow, AppParams,
    MOTION_LABELS, MOTION_RADIUS,
};
use mrfsim_core::model::MAX_LABELS;
use mrfsim_core::perf::{bandwidth_utilization, storage_comparison, PerfParams, StorageComparison};
use mrfsim_core::uq::TransportStats;
use mrfsim_core::{
    find_lmem_banking, verify_banking, Histogram, MrfModel, RunOutput, SimCounters, Simulation,
};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub epe: Option<f64>,
    pub bad_pixel_percent: Option<f64>,
    pub bp_threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvictionSummary {
    pub log_records: u64,
    pub log_lines: u64,
    pub capacity_evictions: u64,
    pub saturation_evictions: u64,
    pub mean_rate: f64,
    pub max_rate_per_iteration: f64,
    pub max_utilization_per_iteration: f64,
    /// Bandwidth-model utilization of the mean collection-window rate at
    /// the full-scale fabric constants.
    pub mean_utilization: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifacts {
    pub summary: PathBuf,
    pub log: PathBuf,
    pub trace: Option<PathBuf>,
    pub mode_map: PathBuf,
    pub final_map: PathBuf,
    pub flow_dx: Option<PathBuf>,
    pub flow_dy: Option<PathBuf>,
    pub evictions_csv: PathBuf,
}

/// The reproducible record of one run: full resolved config, seed, results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub image_width: usize,
    pub image_height: usize,
    pub metrics: MetricsSummary,
    pub counters: SimCounters,
    pub transport: TransportStats,
    pub evictions: EvictionSummary,
    pub storage: StorageComparison,
    pub bank_map_period: (usize, usize),
    pub verify_banking_conflicts: usize,
    pub replication: (usize, usize),
    pub one_hop_violations: usize,
    pub padded_size: (usize, usize),
    pub warnings: Vec<String>,
    pub oracle_match: Option<bool>,
    pub artifacts: Artifacts,
}

fn load_6bit_image(path: &Path) -> Result<GrayImage> {
    Ok(read_pgm(path)
        .with_context(|| format!("reading input image {}", path.display()))?
        .quantize_6bit())
}

pub fn build_model(config: &RunConfig) -> Result<(MrfModel, GrayImage, GrayImage)> {
    if config.labels > MAX_LABELS {
        bail!(
            "labels = {} exceeds the 6-bit label limit of {MAX_LABELS}",
            config.labels
        );
    }
    let first = load_6bit_image(&config.input1)?;
    let second = load_6bit_image(&config.input2)?;
    if (first.width, first.height) != (second.width, second.height) {
        bail!(
            "input dimensions differ: {} is {}x{}, {} is {}x{}",
            config.input1.display(),
            first.width,
            first.height,
            config.input2.display(),
            second.width,
            second.height
        );
    }
    let params = AppParams {
        alpha: config.alpha,
        beta: config.beta,
        temperature: config.temperature,
        smoothness: config.smoothness_term()?,
    };
    let model = match config.application {
        Application::Motion => {
            if config.labels != MOTION_LABELS {
                bail!(
                    "motion estimation uses the {}x{} displacement window: labels must be {MOTION_LABELS}, got {}",
                    2 * MOTION_RADIUS + 1,
                    2 * MOTION_RADIUS + 1,
                    config.labels
                );
            }
            build_motion_model(&first, &second, &params)?
        }
        Application::Stereo => {
            build_stereo_model(&first, &second, config.labels, config.direction()?, &params)?
        }
    };
    Ok((model, first, second))
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

fn compute_metrics(
    config: &RunConfig,
    out: &RunOutput,
    width: usize,
    height: usize,
) -> Result<MetricsSummary> {
    let mut metrics = MetricsSummary {
        epe: None,
        bad_pixel_percent: None,
        bp_threshold: None,
    };
    let Some(gt_path) = &config.gt else {
        return Ok(metrics);
    };
    match config.application {
        Application::Motion => {
            let gt = read_flo(gt_path)
                .with_context(|| format!("reading ground truth {}", gt_path.display()))?;
            let flow = labels_to_flow(&out.mode_labels, width, height);
            metrics.epe = Some(epe(&flow, &gt)?);
        }
        Application::Stereo => {
            let gt = read_disparity_gt(gt_path, config.gt_scale)
                .with_context(|| format!("reading ground truth {}", gt_path.display()))?;
            let disparity = labels_to_disparity(&out.mode_labels, width, height);
            metrics.bad_pixel_percent = Some(bad_pixel(&disparity, &gt, config.bp_threshold)?);
            metrics.bp_threshold = Some(config.bp_threshold);
        }
    }
    Ok(metrics)
}

pub fn cmd_run(config: RunConfig, out_dir: &Path, oracle: bool) -> Result<RunSummary> {
    let (model, _, _) = build_model(&config)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let accel = config.accelerator();
    let warnings = accel.warnings();
    let record_trace = config.trace || oracle;
    let sim = Simulation::new(&model, accel, record_trace)?;
    let out = sim.run();

    let (width, height) = (model.width, model.height);
    let metrics = compute_metrics(&config, &out, width, height)?;

    let oracle_match = oracle.then(|| {
        let trace = out.trace.as_ref().expect("oracle mode records a trace");
        Histogram::from_trace(trace, model.labels) == out.histogram
    });
    if oracle_match == Some(false) {
        bail!("histogram reconstruction diverged from the naive counter oracle");
    }

    // Artifacts.
    let log_path = out_dir.join("log.mrfl");
    out.log.write_file(&log_path)?;
    let trace_path = if config.trace {
        let p = out_dir.join("trace.mrft");
        out.trace.as_ref().unwrap().write_file(&p)?;
        Some(p)
    } else {
        None
    };
    let mode_path = out_dir.join("labels_mode.pgm");
    write_pgm(
        &mode_path,
        &labels_to_pgm(&out.mode_labels, width, height, model.labels),
    )?;
    let final_path = out_dir.join("labels_final.pgm");
    write_pgm(
        &final_path,
        &labels_to_pgm(&out.final_labels, width, height, model.labels),
    )?;

    let (flow_dx, flow_dy) = if config.application == Application::Motion {
        let flow = labels_to_flow(&out.mode_labels, width, height);
        let scale = |v: i8| ((i32::from(v) + MOTION_RADIUS) * 255 / (2 * MOTION_RADIUS)) as u8;
        let dx_img = GrayImage::new(width, height, flow.dx.iter().map(|&v| scale(v)).collect());
        let dy_img = GrayImage::new(width, height, flow.dy.iter().map(|&v| scale(v)).collect());
        let dx_path = out_dir.join("flow_dx.pgm");
        let dy_path = out_dir.join("flow_dy.pgm");
        write_pgm(&dx_path, &dx_img)?;
        write_pgm(&dy_path, &dy_img)?;
        (Some(dx_path), Some(dy_path))
    } else {
        (None, None)
    };

    // Bandwidth utilization per iteration window at the configured
    // constants.
    let n_rvs = model.num_rvs() as f64;
    let perf_at = |rate: f64| {
        bandwidth_utilization(&PerfParams {
            n_labels: model.labels as u64,
            message_bits: u64::from(config.message_bits),
            bandwidth_bits_per_cycle: u64::from(config.bandwidth_bits_per_cycle),
            eviction_rate: rate,
            ..PerfParams::default()
        })
    };
    let evictions_csv = out_dir.join("evictions.csv");
    write_csv(
        &evictions_csv,
        "iteration,evictions,rate,utilization",
        out.per_iteration_evictions
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let rate = e as f64 / n_rvs;
                format!("{i},{e},{rate:.6},{:.6}", perf_at(rate))
            }),
    )?;

    let window = (config.iterations - config.collection_start) as u64;
    let window_updates = window as f64 * n_rvs;
    let total_evictions = out.counters.capacity_evictions + out.counters.saturation_evictions;
    let mean_rate = if window_updates > 0.0 {
        total_evictions as f64 / window_updates
    } else {
        0.0
    };
    let max_rate = out
        .per_iteration_evictions
        .iter()
        .map(|&e| e as f64 / n_rvs)
        .fold(0.0, f64::max);
    let evictions = EvictionSummary {
        log_records: out.log.index(),
        log_lines: out.log.lines(),
        capacity_evictions: out.counters.capacity_evictions,
        saturation_evictions: out.counters.saturation_evictions,
        mean_rate,
        max_rate_per_iteration: max_rate,
        max_utilization_per_iteration: perf_at(max_rate),
        mean_utilization: perf_at(mean_rate),
    };
    let storage = storage_comparison(
        window,
        model.num_rvs() as u64,
        u64::from(config.message_bits),
        out.log.index(),
        config.lmem_pairs as u64,
    );

    let map = find_lmem_banking();
    let summary_path = out_dir.join("summary.json");
    let summary = RunSummary {
        image_width: width,
        image_height: height,
        metrics,
        counters: out.counters.clone(),
        transport: out.transport.clone(),
        evictions,
        storage,
        bank_map_period: map.period(),
        verify_banking_conflicts: verify_banking(map, width, height),
        replication: out.replication,
        one_hop_violations: out.one_hop_violations,
        padded_size: (out.tilemap.padded_width, out.tilemap.padded_height),
        warnings,
        oracle_match,
        artifacts: Artifacts {
            summary: summary_path.clone(),
            log: log_path,
            trace: trace_path,
            mode_map: mode_path,
            final_map: final_path,
            flow_dx,
            flow_dy,
            evictions_csv,
        },
        config,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(&summary_path, json)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    Ok(summary)
}
