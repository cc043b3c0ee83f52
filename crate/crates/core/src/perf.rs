//! Analytical models: off-chip bandwidth utilization of the eviction
//! stream, nearest-neighbor vs mesh-NoC topology resource estimates, and
//! throughput/speedup identities.

use serde::{Deserialize, Serialize};

/// Reported sample rate of the prior FPGA Gibbs accelerator, used as the
/// speedup baseline.
pub const PRIOR_FPGA_SAMPLES_PER_SEC: f64 = 88.588e6;
/// The baseline emits two labels per sample.
pub const PRIOR_FPGA_LABELS_PER_SAMPLE: f64 = 2.0;

/// Inputs of the bandwidth-utilization model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfParams {
    pub n_spus: u64,
    pub n_labels: u64,
    pub message_bits: u64,
    pub bandwidth_bits_per_cycle: u64,
    /// Evictions per RV update, measured.
    pub eviction_rate: f64,
}

impl Default for PerfParams {
    fn default() -> Self {
        Self {
            n_spus: 2048,
            n_labels: 49,
            message_bits: 32,
            bandwidth_bits_per_cycle: 512,
            eviction_rate: 0.0,
        }
    }
}

/// Fraction of off-chip bandwidth the eviction stream consumes:
/// (#SPUs / #Labels) * EvictionRate * MessageSize / Bandwidth.
pub fn bandwidth_utilization(p: &PerfParams) -> f64 {
    (p.n_spus as f64 / p.n_labels as f64) * p.eviction_rate * p.message_bits as f64
        / p.bandwidth_bits_per_cycle as f64
}

/// Link and crossbar estimates for the nearest-neighbor topology and a 2-D
/// mesh NoC. Crossbar cost is input ports times output ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyCost {
    pub nn_links: u64,
    pub nn_xbar: u64,
    pub noc_links: u64,
    pub noc_xbar: u64,
}

impl TopologyCost {
    pub fn nn_total(&self) -> u64 {
        self.nn_links + self.nn_xbar
    }

    pub fn noc_total(&self) -> u64 {
        self.noc_links + self.noc_xbar
    }
}

/// Evaluate the topology cost for a D x D fabric with S SPUs per SPE.
pub fn topology_cost(d: u64, s: u64) -> TopologyCost {
    let nn_links = 2 * (2 * (d - 1) * d * (s + 1) + 2 * (d - 1) * (d - 1) * s);
    let nn_xbar = d * d * (2 * (4 * 8) + s * (9 * s) + 8 * (2 * s) + (9 * s) * s);
    let noc_links = 2 * (2 * (d - 1) * d * (s + 1));
    let noc_xbar = d * d * (2 * (4 * 8) + s * (5 * s) + 8 * (2 * s) + (5 * s) * (5 * s));
    TopologyCost {
        nn_links,
        nn_xbar,
        noc_links,
        noc_xbar,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub labels_per_sec: f64,
    pub rv_updates_per_sec: f64,
}

/// Each SPU retires one label per cycle and one RV update per L cycles.
pub fn throughput(n_spus: u64, clock_hz: f64, labels: u64) -> Throughput {
    let labels_per_sec = n_spus as f64 * clock_hz;
    Throughput {
        labels_per_sec,
        rv_updates_per_sec: labels_per_sec / labels as f64,
    }
}

/// Speedup over a baseline quoted in samples per second.
pub fn speedup_vs(
    labels_per_sec: f64,
    labels_per_sample: f64,
    baseline_samples_per_sec: f64,
) -> f64 {
    labels_per_sec / (labels_per_sample * baseline_samples_per_sec)
}

/// Sustained frames per second for a per-frame workload.
pub fn frames_per_second(
    rv_updates_per_sec: f64,
    rvs_per_frame: u64,
    iterations_per_frame: u64,
) -> f64 {
    rv_updates_per_sec / (rvs_per_frame as f64 * iterations_per_frame as f64)
}

/// Histogram storage: the log plus resident counters against writing every
/// label to off-chip memory each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageComparison {
    pub naive_bytes: u64,
    pub log_bytes: u64,
    pub on_chip_bytes: u64,
    /// 1 - (log + on-chip) / naive.
    pub savings_ratio: f64,
}

pub fn storage_comparison(
    window_iterations: u64,
    n_rvs: u64,
    message_bits: u64,
    log_records: u64,
    lmem_pairs: u64,
) -> StorageComparison {
    let naive_bytes = window_iterations * n_rvs * message_bits / 8;
    let log_bytes = log_records * message_bits / 8;
    // Each pair packs a 6-bit label and a 10-bit counter.
    let on_chip_bytes = n_rvs * lmem_pairs * 16 / 8;
    let measured = log_bytes + on_chip_bytes;
    StorageComparison {
        naive_bytes,
        log_bytes,
        on_chip_bytes,
        savings_ratio: if naive_bytes > 0 {
            1.0 - measured as f64 / naive_bytes as f64
        } else {
            0.0
        },
    }
}
