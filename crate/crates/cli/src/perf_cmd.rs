//! The `perf` command: bandwidth utilization, topology cost table,
//! throughput/speedup identities, and the histogram storage comparison.

use anyhow::Result;
use mrfsim_core::perf::{
    bandwidth_utilization, frames_per_second, speedup_vs, storage_comparison, throughput,
    topology_cost, PerfParams, PRIOR_FPGA_LABELS_PER_SAMPLE, PRIOR_FPGA_SAMPLES_PER_SEC,
};
use std::io::Write;
use std::path::Path;

pub struct PerfArgs {
    pub n_spus: u64,
    pub labels: u64,
    pub clock_hz: f64,
    pub message_bits: u64,
    pub bandwidth: u64,
    pub eviction_rate: f64,
    pub grid_d: u64,
    pub spus_per_spe: u64,
    pub summary: Option<std::path::PathBuf>,
}

pub fn cmd_perf(args: &PerfArgs, topology_csv: Option<&Path>) -> Result<()> {
    let params = PerfParams {
        n_spus: args.n_spus,
        n_labels: args.labels,
        message_bits: args.message_bits,
        bandwidth_bits_per_cycle: args.bandwidth,
        eviction_rate: args.eviction_rate,
    };
    println!(
        "bandwidth_utilization = {:.6}",
        bandwidth_utilization(&params)
    );

    let t = throughput(args.n_spus, args.clock_hz, args.labels);
    println!("labels_per_sec = {:.4e}", t.labels_per_sec);
    println!("rv_updates_per_sec = {:.4e}", t.rv_updates_per_sec);
    println!(
        "speedup_vs_prior_fpga = {:.2}",
        speedup_vs(
            t.labels_per_sec,
            PRIOR_FPGA_LABELS_PER_SAMPLE,
            PRIOR_FPGA_SAMPLES_PER_SEC
        )
    );
    println!(
        "full_hd_fps_at_1500_iters = {:.2}",
        frames_per_second(t.rv_updates_per_sec, 1920 * 1080, 1500)
    );

    let cost = topology_cost(args.grid_d, args.spus_per_spe);
    println!(
        "topology D={} S={}: nn_links = {}, nn_xbar = {}, noc_links = {}, noc_xbar = {}",
        args.grid_d, args.spus_per_spe, cost.nn_links, cost.nn_xbar, cost.noc_links, cost.noc_xbar
    );
    println!(
        "topology totals: nearest-neighbor = {}, mesh NoC = {}",
        cost.nn_total(),
        cost.noc_total()
    );

    if let Some(path) = topology_csv {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            file,
            "d,s,nn_links,nn_xbar,noc_links,noc_xbar,nn_total,noc_total"
        )?;
        for d in 1..=16u64 {
            for s in [1u64, 2] {
                let c = topology_cost(d, s);
                writeln!(
                    file,
                    "{d},{s},{},{},{},{},{},{}",
                    c.nn_links,
                    c.nn_xbar,
                    c.noc_links,
                    c.noc_xbar,
                    c.nn_total(),
                    c.noc_total()
                )?;
            }
        }
        println!("topology table: {}", path.display());
    }

    if let Some(summary_path) = &args.summary {
        let summary = crate::analyze::read_summary(summary_path)?;
        let window = (summary.config.iterations - summary.config.collection_start) as u64;
        let n_rvs = (summary.image_width * summary.image_height) as u64;
        let storage = storage_comparison(
            window,
            n_rvs,
            args.message_bits,
            summary.evictions.log_records,
            summary.config.lmem_pairs as u64,
        );
        println!(
            "storage: naive_bytes = {}, log_bytes = {}, on_chip_bytes = {}",
            storage.naive_bytes, storage.log_bytes, storage.on_chip_bytes
        );
        println!("storage_savings_ratio = {:.4}", storage.savings_ratio);
        println!(
            "measured_mean_utilization = {:.6}",
            summary.evictions.mean_utilization
        );
    }
    Ok(())
}
