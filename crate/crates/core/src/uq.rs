//! Hybrid on-chip/off-chip uncertainty-quantification memory: the
//! read-modify-write label memory with LRP replacement and saturating
//! counters, eviction transport over the DRAM hub tree, exact histogram
//! reconstruction, statistics, and trace-driven label-memory studies.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

/// Saturation limit of the 10-bit slot counters.
pub const COUNT_MAX: u16 = 1023;
/// Largest supported number of label+counter pairs per RV.
pub const MAX_PAIRS: usize = 8;
/// On-wire message size charged per eviction record.
pub const MESSAGE_BITS: u32 = 32;
/// DRAM line width used for aggregation accounting.
pub const LINE_BITS: u32 = 512;

const LOG_MAGIC: &[u8; 4] = b"MRFL";
const LOG_VERSION: u16 = 1;
const TRACE_MAGIC: &[u8; 4] = b"MRFT";
const TRACE_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic, not a {expected} file")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("file truncated: header claims {expected} records, found {got}")]
    Truncated { expected: u64, got: u64 },
    #[error("malformed record {index}: reserved bits set")]
    ReservedBits { index: u64 },
    #[error("malformed record {index}: zero count")]
    ZeroCount { index: u64 },
    #[error("record {index} out of range: rv {rv} label {label}")]
    RecordOutOfRange { index: u64, rv: u32, label: u8 },
    #[error("empty histogram")]
    EmptyHistogram,
    #[error("empty window")]
    EmptyWindow,
}

/// One label+counter pair in a label-memory entry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Slot {
    pub label: u8,
    pub count: u16,
}

/// Message sent to the off-chip histogram log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvictionRecord {
    pub rv_address: u32,
    pub label: u8,
    pub count: u16,
}

impl EvictionRecord {
    /// File encoding: bits 0..31 address, 32..37 label, 38..47 count,
    /// 48..63 reserved zero.
    pub fn pack(&self) -> u64 {
        u64::from(self.rv_address) | (u64::from(self.label) << 32) | (u64::from(self.count) << 38)
    }

    pub fn unpack(word: u64, index: u64) -> Result<Self, LogError> {
        if word >> 48 != 0 {
            return Err(LogError::ReservedBits { index });
        }
        let record = Self {
            rv_address: (word & 0xffff_ffff) as u32,
            label: ((word >> 32) & 0x3f) as u8,
            count: ((word >> 38) & 0x3ff) as u16,
        };
        if record.count == 0 {
            return Err(LogError::ZeroCount { index });
        }
        Ok(record)
    }
}

/// Why a record left the chip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvictionKind {
    /// LRP slot displaced by a label not resident in the entry.
    Capacity,
    /// A counter hit its maximum and was drained.
    Saturation,
}

/// Per-RV label-memory entry: an ordered list of label+counter pairs,
/// slot 0 most recently picked, last slot the replacement victim. Empty
/// slots carry count 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelEntry {
    slots: [Slot; MAX_PAIRS],
    pairs: u8,
}

impl LabelEntry {
    pub fn new(pairs: usize) -> Self {
        assert!(
            (1..=MAX_PAIRS).contains(&pairs),
            "pairs per RV must be 1..=8"
        );
        Self {
            slots: [Slot::default(); MAX_PAIRS],
            pairs: pairs as u8,
        }
    }

    /// Entry with given live slots, for tests and trace replay.
    pub fn with_slots(pairs: usize, live: &[Slot]) -> Self {
        let mut entry = Self::new(pairs);
        assert!(live.len() <= pairs);
        entry.slots[..live.len()].copy_from_slice(live);
        entry
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots[..self.pairs as usize]
    }

    /// The RV's current label, always tracked by slot 0.
    pub fn current_label(&self) -> u8 {
        self.slots[0].label
    }

    /// Read-modify-write for one new label pick. Before collection starts,
    /// slot 0 tracks the current label with its count frozen at zero and
    /// nothing is emitted. Zero-count victims are suppressed.
    pub fn update(&mut self, addr: u32, new_label: u8, collecting: bool) -> Option<EvictionRecord> {
        self.update_classified(addr, new_label, collecting)
            .map(|(r, _)| r)
    }

    /// Same as `update` but also reports why a record was emitted.
    pub fn update_classified(
        &mut self,
        addr: u32,
        new_label: u8,
        collecting: bool,
    ) -> Option<(EvictionRecord, EvictionKind)> {
        if !collecting {
            self.slots[0] = Slot {
                label: new_label,
                count: 0,
            };
            return None;
        }
        let n = self.pairs as usize;
        if let Some(i) = self.slots[..n].iter().position(|s| s.label == new_label) {
            let mut hit = self.slots[i];
            let emitted = if hit.count == COUNT_MAX {
                hit.count = 1;
                Some((
                    EvictionRecord {
                        rv_address: addr,
                        label: hit.label,
                        count: COUNT_MAX,
                    },
                    EvictionKind::Saturation,
                ))
            } else {
                hit.count += 1;
                None
            };
            self.slots[..=i].rotate_right(1);
            self.slots[0] = hit;
            return emitted;
        }
        let victim = self.slots[n - 1];
        self.slots[..n].rotate_right(1);
        self.slots[0] = Slot {
            label: new_label,
            count: 1,
        };
        (victim.count > 0).then_some((
            EvictionRecord {
                rv_address: addr,
                label: victim.label,
                count: victim.count,
            },
            EvictionKind::Capacity,
        ))
    }
}

/// Drain every nonzero-count slot, RV address order then slot order, so the
/// log alone reconstructs the full histogram.
pub fn flush_residuals(entries: &[LabelEntry]) -> Vec<EvictionRecord> {
    let mut out = Vec::new();
    for (addr, entry) in entries.iter().enumerate() {
        for slot in entry.slots() {
            if slot.count > 0 {
                out.push(EvictionRecord {
                    rv_address: addr as u32,
                    label: slot.label,
                    count: slot.count,
                });
            }
        }
    }
    out
}

/// Append-only off-chip histogram log. Line packing is accounting only; the
/// file layout is a flat sequence of 64-bit records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DramLog {
    records: Vec<EvictionRecord>,
}

impl DramLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: EvictionRecord) {
        debug_assert!(record.count > 0 && record.count <= COUNT_MAX && record.label < 64);
        self.records.push(record);
    }

    /// Log index: number of valid records written.
    pub fn index(&self) -> u64 {
        self.records.len() as u64
    }

    /// 512-bit lines needed to hold the records at the modeled message size.
    pub fn lines(&self) -> u64 {
        let per_line = u64::from(LINE_BITS / MESSAGE_BITS);
        self.index().div_ceil(per_line)
    }

    pub fn records(&self) -> &[EvictionRecord] {
        &self.records
    }

    pub fn write_file(&self, path: &Path) -> Result<(), LogError> {
        let mut buf = Vec::with_capacity(14 + self.records.len() * 8);
        buf.extend_from_slice(LOG_MAGIC);
        buf.extend_from_slice(&LOG_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.index().to_le_bytes());
        for record in &self.records {
            buf.extend_from_slice(&record.pack().to_le_bytes());
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, LogError> {
        let mut file = std::fs::File::open(path)?;
        let mut header = [0u8; 14];
        file.read_exact(&mut header)
            .map_err(|_| LogError::BadMagic { expected: "MRFL" })?;
        if &header[0..4] != LOG_MAGIC {
            return Err(LogError::BadMagic { expected: "MRFL" });
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != LOG_VERSION {
            return Err(LogError::Version(version));
        }
        let expected = u64::from_le_bytes(header[6..14].try_into().unwrap());
        let mut payload = Vec::new();
        file.read_to_end(&mut payload)?;
        let got = (payload.len() / 8) as u64;
        if payload.len() % 8 != 0 || got != expected {
            return Err(LogError::Truncated { expected, got });
        }
        let mut records = Vec::with_capacity(payload.len() / 8);
        for (index, chunk) in payload.chunks_exact(8).enumerate() {
            let word = u64::from_le_bytes(chunk.try_into().unwrap());
            records.push(EvictionRecord::unpack(word, index as u64)?);
        }
        Ok(Self { records })
    }
}

/// Occupancy and backpressure accounting from the hub-tree transport.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportStats {
    pub delivered: u64,
    /// Highest occupancy seen in any FIFO.
    pub max_occupancy: usize,
    /// FIFO-cycles spent above the configured depth.
    pub backpressure_events: u64,
    pub cycles: u64,
}

impl TransportStats {
    pub fn merge(&mut self, other: &TransportStats) {
        self.delivered += other.delivered;
        self.max_occupancy = self.max_occupancy.max(other.max_occupancy);
        self.backpressure_events += other.backpressure_events;
        self.cycles += other.cycles;
    }
}

/// Merge per-SPE eviction buffers up the 4-ary DRAM hub tree into `log`.
///
/// Cycle-stepped model: each source feeds one record per cycle into its leaf
/// FIFO, every hub moves one record per cycle from its children under
/// round-robin arbitration, and the root drains one record per cycle into
/// the line packer. Delivery is guaranteed; occupancy beyond `fifo_depth`
/// is counted as backpressure rather than dropping records.
pub fn transport_into(
    records_by_spe: &[Vec<EvictionRecord>],
    fifo_depth: usize,
    log: &mut DramLog,
) -> TransportStats {
    let mut stats = TransportStats::default();
    let n_leaves = records_by_spe.len().max(1);

    // Tree levels, leaves first. Level k+1 has ceil(level_k / 4) nodes.
    let mut level_sizes = vec![n_leaves];
    while *level_sizes.last().unwrap() > 1 {
        let next = level_sizes.last().unwrap().div_ceil(4);
        level_sizes.push(next);
    }
    let mut fifos: Vec<Vec<VecDeque<EvictionRecord>>> = level_sizes
        .iter()
        .map(|&n| vec![VecDeque::new(); n])
        .collect();
    let mut arb: Vec<Vec<usize>> = level_sizes.iter().map(|&n| vec![0usize; n]).collect();
    let mut sources: Vec<std::slice::Iter<EvictionRecord>> =
        records_by_spe.iter().map(|v| v.iter()).collect();
    let total: u64 = records_by_spe.iter().map(|v| v.len() as u64).sum();

    while stats.delivered < total {
        stats.cycles += 1;
        // Root drains one record per cycle.
        let root_level = fifos.len() - 1;
        if let Some(record) = fifos[root_level][0].pop_front() {
            log.push(record);
            stats.delivered += 1;
        }
        // Hubs pull from children, upper levels first so a record moves at
        // most one level per cycle.
        for level in (1..fifos.len()).rev() {
            for node in 0..fifos[level].len() {
                let child_base = node * 4;
                let n_children = (child_base + 4).min(fifos[level - 1].len()) - child_base;
                let start = arb[level][node];
                for k in 0..n_children {
                    let child = child_base + (start + k) % n_children;
                    if let Some(record) = fifos[level - 1][child].pop_front() {
                        fifos[level][node].push_back(record);
                        arb[level][node] = (child - child_base + 1) % n_children;
                        break;
                    }
                }
            }
        }
        // Sources emit one record per cycle into their leaf FIFO.
        for (leaf, source) in sources.iter_mut().enumerate() {
            if let Some(&record) = source.next() {
                fifos[0][leaf].push_back(record);
            }
        }
        for level in &fifos {
            for fifo in level {
                stats.max_occupancy = stats.max_occupancy.max(fifo.len());
                if fifo.len() > fifo_depth {
                    stats.backpressure_events += 1;
                }
            }
        }
    }
    stats
}

/// One-shot transport producing a fresh log.
pub fn transport(
    records_by_spe: &[Vec<EvictionRecord>],
    fifo_depth: usize,
) -> (DramLog, TransportStats) {
    let mut log = DramLog::new();
    let stats = transport_into(records_by_spe, fifo_depth, &mut log);
    (log, stats)
}

/// Dense per-RV, per-label pick counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub n_rvs: usize,
    pub labels: usize,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(n_rvs: usize, labels: usize) -> Self {
        Self {
            n_rvs,
            labels,
            counts: vec![0; n_rvs * labels],
        }
    }

    pub fn add(&mut self, rv: usize, label: usize, count: u64) {
        self.counts[rv * self.labels + label] += count;
    }

    pub fn count(&self, rv: usize, label: usize) -> u64 {
        self.counts[rv * self.labels + label]
    }

    pub fn rv_counts(&self, rv: usize) -> &[u64] {
        &self.counts[rv * self.labels..(rv + 1) * self.labels]
    }

    pub fn total(&self, rv: usize) -> u64 {
        self.rv_counts(rv).iter().sum()
    }

    /// Per-RV mode labels, ties resolved toward the lowest label index.
    pub fn mode_labels(&self) -> Result<Vec<u8>, LogError> {
        (0..self.n_rvs)
            .map(|rv| {
                let counts = self.rv_counts(rv);
                if counts.iter().all(|&c| c == 0) {
                    return Err(LogError::EmptyHistogram);
                }
                let mut best = 0usize;
                for (l, &c) in counts.iter().enumerate() {
                    if c > counts[best] {
                        best = l;
                    }
                }
                Ok(best as u8)
            })
            .collect()
    }

    /// Count picks straight from a trace window; the naive oracle the log
    /// reconstruction must match exactly.
    pub fn from_trace(trace: &LabelTrace, labels: usize) -> Self {
        let mut hist = Self::new(trace.n_rvs, labels);
        for it in 0..trace.iterations() {
            for (rv, &label) in trace.iteration(it).iter().enumerate() {
                hist.add(rv, label as usize, 1);
            }
        }
        hist
    }
}

/// Rebuild exact per-RV histograms from a complete (post-flush) log.
pub fn reconstruct_histogram(
    log: &DramLog,
    n_rvs: usize,
    labels: usize,
) -> Result<Histogram, LogError> {
    let mut hist = Histogram::new(n_rvs, labels);
    for (index, record) in log.records().iter().enumerate() {
        if record.rv_address as usize >= n_rvs || record.label as usize >= labels {
            return Err(LogError::RecordOutOfRange {
                index: index as u64,
                rv: record.rv_address,
                label: record.label,
            });
        }
        hist.add(
            record.rv_address as usize,
            record.label as usize,
            u64::from(record.count),
        );
    }
    Ok(hist)
}

/// Mode, top-1 frequency, and normalized entropy of one RV's histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UqStats {
    pub mode: u8,
    pub top1: f64,
    pub entropy: f64,
}

pub fn uq_stats(counts: &[u64]) -> Result<UqStats, LogError> {
    let total: u64 = counts.iter().sum();
    if total == 0 || counts.is_empty() {
        return Err(LogError::EmptyHistogram);
    }
    let mut mode = 0usize;
    for (l, &c) in counts.iter().enumerate() {
        if c > counts[mode] {
            mode = l;
        }
    }
    let mut entropy = 0.0f64;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total as f64;
            entropy -= p * p.ln();
        }
    }
    let norm = (counts.len() as f64).ln();
    Ok(UqStats {
        mode: mode as u8,
        top1: counts[mode] as f64 / total as f64,
        entropy: if norm > 0.0 { entropy / norm } else { 0.0 },
    })
}

/// Per-iteration labels of every real RV, starting at `start_iteration`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTrace {
    pub n_rvs: usize,
    pub start_iteration: usize,
    data: Vec<u8>,
}

impl LabelTrace {
    pub fn new(n_rvs: usize, start_iteration: usize) -> Self {
        Self {
            n_rvs,
            start_iteration,
            data: Vec::new(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.data.len() / self.n_rvs.max(1)
    }

    pub fn push_iteration(&mut self, labels: &[u8]) {
        assert_eq!(labels.len(), self.n_rvs);
        self.data.extend_from_slice(labels);
    }

    pub fn iteration(&self, i: usize) -> &[u8] {
        &self.data[i * self.n_rvs..(i + 1) * self.n_rvs]
    }

    pub fn write_file(&self, path: &Path) -> Result<(), LogError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(TRACE_MAGIC)?;
        file.write_all(&TRACE_VERSION.to_le_bytes())?;
        file.write_all(&(self.n_rvs as u64).to_le_bytes())?;
        file.write_all(&(self.start_iteration as u64).to_le_bytes())?;
        file.write_all(&(self.iterations() as u64).to_le_bytes())?;
        file.write_all(&self.data)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, LogError> {
        let mut file = std::fs::File::open(path)?;
        let mut header = [0u8; 30];
        file.read_exact(&mut header)
            .map_err(|_| LogError::BadMagic { expected: "MRFT" })?;
        if &header[0..4] != TRACE_MAGIC {
            return Err(LogError::BadMagic { expected: "MRFT" });
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != TRACE_VERSION {
            return Err(LogError::Version(version));
        }
        let n_rvs = u64::from_le_bytes(header[6..14].try_into().unwrap()) as usize;
        let start_iteration = u64::from_le_bytes(header[14..22].try_into().unwrap()) as usize;
        let iterations = u64::from_le_bytes(header[22..30].try_into().unwrap());
        let mut data = Vec::new();
        file.read_to_end(&mut data)?;
        if data.len() as u64 != iterations * n_rvs as u64 {
            return Err(LogError::Truncated {
                expected: iterations * n_rvs as u64,
                got: data.len() as u64,
            });
        }
        Ok(Self {
            n_rvs,
            start_iteration,
            data,
        })
    }
}

/// Results of replaying a trace against a label memory of a given size.
///
/// Capacity evictions are the LMem-size-dependent stream; saturation drains
/// fire once per 1023 picks of a stable label, so with a shared collection
/// start they land synchronized in a single iteration regardless of size.
/// The sustained rate therefore combines the windowed capacity maximum with
/// the amortized saturation rate, which is what a bandwidth budget sees once
/// the eviction FIFOs absorb the burst.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLmemStats {
    pub pairs: usize,
    pub capacity_evictions: u64,
    pub saturation_evictions: u64,
    /// Max total evictions per RV update over single-iteration windows.
    pub max_rate_per_iteration: f64,
    /// Max total evictions per RV update over a sliding window of the
    /// updates one SPU performs in 1000 cycles (1000 / L updates).
    pub max_rate_1000_cycles: f64,
    /// Max capacity evictions per RV update over single-iteration windows.
    pub max_capacity_rate_per_iteration: f64,
    /// Saturation evictions divided by total RV updates.
    pub mean_saturation_rate: f64,
    /// Windowed capacity maximum plus amortized saturation drain.
    pub sustained_rate: f64,
    pub per_iteration_evictions: Vec<u64>,
}

/// Replay a recorded trace through the label memory to study eviction
/// behavior at sizes the hardware did not run.
pub fn trace_lmem_sim(trace: &LabelTrace, pairs: usize, labels: usize) -> TraceLmemStats {
    let mut entries = vec![LabelEntry::new(pairs); trace.n_rvs];
    let mut capacity = 0u64;
    let mut saturation = 0u64;
    let mut per_iteration = Vec::with_capacity(trace.iterations());
    let mut max_capacity_in_iteration = 0u64;
    // Update index of each eviction, for the fine-grained window.
    let mut eviction_points: Vec<u64> = Vec::new();
    let mut update_index = 0u64;
    for it in 0..trace.iterations() {
        let mut this_iteration = 0u64;
        let mut capacity_this_iteration = 0u64;
        for (rv, &label) in trace.iteration(it).iter().enumerate() {
            if let Some((_, kind)) = entries[rv].update_classified(rv as u32, label, true) {
                match kind {
                    EvictionKind::Capacity => {
                        capacity += 1;
                        capacity_this_iteration += 1;
                    }
                    EvictionKind::Saturation => saturation += 1,
                }
                this_iteration += 1;
                eviction_points.push(update_index);
            }
            update_index += 1;
        }
        per_iteration.push(this_iteration);
        max_capacity_in_iteration = max_capacity_in_iteration.max(capacity_this_iteration);
    }
    let updates_per_iteration = trace.n_rvs.max(1) as f64;
    let max_rate_per_iteration = per_iteration
        .iter()
        .map(|&e| e as f64 / updates_per_iteration)
        .fold(0.0, f64::max);
    let max_capacity_rate_per_iteration = max_capacity_in_iteration as f64 / updates_per_iteration;
    let total_updates = (trace.n_rvs * trace.iterations()).max(1) as f64;
    let mean_saturation_rate = saturation as f64 / total_updates;

    let window = (1000 / labels.max(1)).max(1) as u64;
    let mut max_in_window = 0u64;
    let mut lo = 0usize;
    for hi in 0..eviction_points.len() {
        while eviction_points[hi] - eviction_points[lo] >= window {
            lo += 1;
        }
        max_in_window = max_in_window.max((hi - lo + 1) as u64);
    }
    let max_rate_1000_cycles = max_in_window as f64 / window as f64;

    TraceLmemStats {
        pairs,
        capacity_evictions: capacity,
        saturation_evictions: saturation,
        max_rate_per_iteration,
        max_rate_1000_cycles,
        max_capacity_rate_per_iteration,
        mean_saturation_rate,
        sustained_rate: max_capacity_rate_per_iteration + mean_saturation_rate,
        per_iteration_evictions: per_iteration,
    }
}

/// For k = 1..=labels, the fraction of RVs taking at most k distinct labels
/// inside the window (iteration indices relative to the trace start).
pub fn unique_label_cdf(
    trace: &LabelTrace,
    window: std::ops::Range<usize>,
    labels: usize,
) -> Result<Vec<f64>, LogError> {
    if window.is_empty() || window.end > trace.iterations() {
        return Err(LogError::EmptyWindow);
    }
    let mut seen = vec![0u64; trace.n_rvs];
    for it in window {
        for (rv, &label) in trace.iteration(it).iter().enumerate() {
            seen[rv] |= 1u64 << label;
        }
    }
    let mut by_unique = vec![0usize; labels + 1];
    for &mask in &seen {
        by_unique[(mask.count_ones() as usize).min(labels)] += 1;
    }
    let mut cdf = Vec::with_capacity(labels);
    let mut acc = 0usize;
    for &bucket in &by_unique[1..=labels] {
        acc += bucket;
        cdf.push(acc as f64 / trace.n_rvs as f64);
    }
    Ok(cdf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry2(a: (u8, u16), b: (u8, u16)) -> LabelEntry {
        LabelEntry::with_slots(
            2,
            &[
                Slot {
                    label: a.0,
                    count: a.1,
                },
                Slot {
                    label: b.0,
                    count: b.1,
                },
            ],
        )
    }

    fn slots_of(e: &LabelEntry) -> Vec<(u8, u16)> {
        e.slots().iter().map(|s| (s.label, s.count)).collect()
    }

    #[test]
    fn lmem_update_branches() {
        // MRP hit.
        let mut e = entry2((5, 3), (2, 7));
        assert_eq!(e.update(9, 5, true), None);
        assert_eq!(slots_of(&e), vec![(5, 4), (2, 7)]);

        // LRP hit swaps to the front.
        let mut e = entry2((5, 3), (2, 7));
        assert_eq!(e.update(9, 2, true), None);
        assert_eq!(slots_of(&e), vec![(2, 8), (5, 3)]);

        // Miss evicts the LRP slot.
        let mut e = entry2((5, 3), (2, 7));
        let rec = e.update(9, 9, true).unwrap();
        assert_eq!((rec.rv_address, rec.label, rec.count), (9, 2, 7));
        assert_eq!(slots_of(&e), vec![(9, 1), (5, 3)]);

        // Saturated hit drains the counter.
        let mut e = entry2((5, COUNT_MAX), (2, 7));
        let rec = e.update(9, 5, true).unwrap();
        assert_eq!((rec.rv_address, rec.label, rec.count), (9, 5, COUNT_MAX));
        assert_eq!(slots_of(&e), vec![(5, 1), (2, 7)]);
    }

    #[test]
    fn lmem_update_before_collection() {
        let mut e = LabelEntry::new(2);
        for label in [3u8, 7, 3, 1] {
            assert_eq!(e.update(0, label, false), None);
            assert_eq!(e.current_label(), label);
        }
        assert_eq!(slots_of(&e), vec![(1, 0), (0, 0)]);
    }

    #[test]
    fn lmem_zero_count_evictions_suppressed() {
        let mut e = LabelEntry::new(2);
        // First collected picks displace empty slots silently.
        assert_eq!(e.update(0, 5, true), None);
        assert_eq!(e.update(0, 9, true), None);
        assert_eq!(slots_of(&e), vec![(9, 1), (5, 1)]);
    }

    #[test]
    fn slot_zero_tracks_current_label() {
        let mut e = LabelEntry::new(3);
        for (i, label) in [0u8, 1, 2, 1, 3, 3, 0].into_iter().enumerate() {
            e.update(0, label, i >= 2);
            assert_eq!(e.current_label(), label);
        }
    }

    #[test]
    fn flush_examples() {
        assert!(flush_residuals(&[LabelEntry::new(2)]).is_empty());
        let e = entry2((5, 4), (2, 7));
        let recs = flush_residuals(&[e]);
        assert_eq!(recs.len(), 2);
        assert_eq!((recs[0].label, recs[0].count), (5, 4));
        assert_eq!((recs[1].label, recs[1].count), (2, 7));
    }

    #[test]
    fn transport_line_packing() {
        let recs: Vec<EvictionRecord> = (0..17)
            .map(|i| EvictionRecord {
                rv_address: i,
                label: (i % 60) as u8,
                count: 1 + (i % 1000) as u16,
            })
            .collect();

        let (log, stats) = transport(&[recs[..16].to_vec()], 8);
        assert_eq!(log.index(), 16);
        assert_eq!(log.lines(), 1);
        assert_eq!(stats.delivered, 16);

        let (log, _) = transport(std::slice::from_ref(&recs), 8);
        assert_eq!(log.index(), 17);
        assert_eq!(log.lines(), 2);

        let (log, stats) = transport(&[vec![]], 8);
        assert_eq!(log.index(), 0);
        assert_eq!(log.lines(), 0);
        assert_eq!(stats.delivered, 0);
    }

    #[test]
    fn transport_conserves_records() {
        let mut by_spe = Vec::new();
        for spe in 0..16u32 {
            by_spe.push(
                (0..(spe % 5) * 7)
                    .map(|i| EvictionRecord {
                        rv_address: spe * 1000 + i,
                        label: (i % 64) as u8,
                        count: (i % 1023 + 1) as u16,
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let (log, stats) = transport(&by_spe, 4);
        let total: usize = by_spe.iter().map(Vec::len).sum();
        assert_eq!(log.index() as usize, total);
        assert_eq!(stats.delivered as usize, total);
        // Every input record shows up exactly once.
        let mut got: Vec<_> = log.records().to_vec();
        let mut want: Vec<_> = by_spe.concat();
        got.sort_by_key(|r| (r.rv_address, r.label, r.count));
        want.sort_by_key(|r| (r.rv_address, r.label, r.count));
        assert_eq!(got, want);
        // Per-SPE order is preserved in the merged stream.
        for (spe, recs) in by_spe.iter().enumerate() {
            let filtered: Vec<_> = log
                .records()
                .iter()
                .filter(|r| r.rv_address / 1000 == spe as u32)
                .copied()
                .collect();
            assert_eq!(&filtered, recs);
        }
    }

    #[test]
    fn log_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.mrfl");
        let mut log = DramLog::new();
        for i in 0..100u32 {
            log.push(EvictionRecord {
                rv_address: i * 37,
                label: (i % 64) as u8,
                count: (i % 1023 + 1) as u16,
            });
        }
        log.write_file(&path).unwrap();
        let back = DramLog::read_file(&path).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn log_file_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mrfl");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(
            DramLog::read_file(&path),
            Err(LogError::BadMagic { .. })
        ));

        // Truncated payload.
        let mut log = DramLog::new();
        log.push(EvictionRecord {
            rv_address: 1,
            label: 2,
            count: 3,
        });
        log.write_file(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            DramLog::read_file(&path),
            Err(LogError::Truncated { .. })
        ));
    }

    #[test]
    fn reconstruction_adds_counts() {
        let mut log = DramLog::new();
        log.push(EvictionRecord {
            rv_address: 7,
            label: 3,
            count: 10,
        });
        log.push(EvictionRecord {
            rv_address: 7,
            label: 3,
            count: 5,
        });
        let hist = reconstruct_histogram(&log, 16, 8).unwrap();
        assert_eq!(hist.count(7, 3), 15);
        assert_eq!(hist.total(7), 15);
        assert!(matches!(
            reconstruct_histogram(&log, 4, 8),
            Err(LogError::RecordOutOfRange { .. })
        ));
    }

    #[test]
    fn stats_examples() {
        let s = uq_stats(&[0, 0, 0, 1000]).unwrap();
        assert_eq!(s.mode, 3);
        assert_eq!(s.top1, 1.0);
        assert_eq!(s.entropy, 0.0);

        let s = uq_stats(&[250, 250, 250, 250]).unwrap();
        assert!((s.entropy - 1.0).abs() < 1e-12);

        let s = uq_stats(&[0, 600, 400]).unwrap();
        assert_eq!(s.mode, 1);
        assert!((s.top1 - 0.6).abs() < 1e-12);

        assert!(uq_stats(&[]).is_err());
        assert!(uq_stats(&[0, 0]).is_err());
    }

    fn constant_trace(n_rvs: usize, iterations: usize, label: u8) -> LabelTrace {
        let mut t = LabelTrace::new(n_rvs, 0);
        for _ in 0..iterations {
            t.push_iteration(&vec![label; n_rvs]);
        }
        t
    }

    #[test]
    fn trace_replay_constant() {
        let t = constant_trace(10, 50, 4);
        for pairs in 1..=4 {
            let stats = trace_lmem_sim(&t, pairs, 8);
            assert_eq!(stats.capacity_evictions, 0);
        }
    }

    #[test]
    fn trace_replay_thrash() {
        // Alternating labels with a single slot evict on every change.
        let mut t = LabelTrace::new(1, 0);
        for i in 0..40 {
            t.push_iteration(&[(i % 2) as u8]);
        }
        let stats = trace_lmem_sim(&t, 1, 2);
        // First pick displaces an empty slot; each of the 39 changes evicts.
        assert_eq!(stats.capacity_evictions, 39);
        let stats2 = trace_lmem_sim(&t, 2, 2);
        assert_eq!(stats2.capacity_evictions, 0);
    }

    #[test]
    fn unique_label_cdf_examples() {
        let t = constant_trace(10, 20, 3);
        let cdf = unique_label_cdf(&t, 0..20, 8).unwrap();
        assert_eq!(cdf[0], 1.0);

        let mut t = LabelTrace::new(4, 0);
        for i in 0..10 {
            let l = (i % 2) as u8;
            t.push_iteration(&[l, l + 2, l + 4, l]);
        }
        let cdf = unique_label_cdf(&t, 0..10, 8).unwrap();
        assert_eq!(cdf[0], 0.0);
        assert_eq!(cdf[1], 1.0);

        assert!(unique_label_cdf(&t, 0..0, 8).is_err());
        assert!(unique_label_cdf(&t, 0..11, 8).is_err());
    }

    #[test]
    fn trace_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.mrft");
        let mut t = LabelTrace::new(5, 100);
        for i in 0..7u8 {
            t.push_iteration(&[i, i, 1, 2, 3]);
        }
        t.write_file(&path).unwrap();
        let back = LabelTrace::read_file(&path).unwrap();
        assert_eq!(back, t);
    }

    /// Conservation: resident counts plus logged counts equal picks.
    #[test]
    fn count_conservation_small() {
        let labels = 6usize;
        let picks = [0u8, 1, 2, 3, 0, 0, 1, 5, 5, 5, 2, 0, 4, 4, 1, 0];
        let mut entry = LabelEntry::new(2);
        let mut emitted = vec![0u64; labels];
        for &p in &picks {
            if let Some(rec) = entry.update(0, p, true) {
                emitted[rec.label as usize] += u64::from(rec.count);
            }
        }
        let mut resident = vec![0u64; labels];
        for slot in entry.slots() {
            resident[slot.label as usize] += u64::from(slot.count);
        }
        for l in 0..labels {
            let truth = picks.iter().filter(|&&p| p as usize == l).count() as u64;
            assert_eq!(emitted[l] + resident[l], truth, "label {l}");
        }
    }

    proptest! {
        #[test]
        fn conservation_random_sequences(
            picks in proptest::collection::vec(0u8..8, 1..400),
            pairs in 1usize..=4,
        ) {
            let mut entry = LabelEntry::new(pairs);
            let mut logged = [0u64; 8];
            for &p in &picks {
                if let Some(rec) = entry.update(3, p, true) {
                    prop_assert!(rec.count >= 1);
                    logged[rec.label as usize] += u64::from(rec.count);
                }
                prop_assert_eq!(entry.current_label(), p);
            }
            for slot in entry.slots() {
                logged[slot.label as usize] += u64::from(slot.count);
            }
            for (l, &got) in logged.iter().enumerate() {
                let truth = picks.iter().filter(|&&p| p as usize == l).count() as u64;
                prop_assert_eq!(got, truth);
            }
        }

        #[test]
        fn lru_inclusion_on_random_traces(
            labels in proptest::collection::vec(0u8..6, 30..300),
        ) {
            let mut t = LabelTrace::new(1, 0);
            for &l in &labels {
                t.push_iteration(&[l]);
            }
            let mut prev = u64::MAX;
            for pairs in 1..=6 {
                let stats = trace_lmem_sim(&t, pairs, 6);
                prop_assert!(stats.capacity_evictions <= prev);
                prev = stats.capacity_evictions;
            }
        }

        #[test]
        fn record_pack_round_trip(addr in any::<u32>(), label in 0u8..64, count in 1u16..=COUNT_MAX) {
            let rec = EvictionRecord { rv_address: addr, label, count };
            prop_assert_eq!(EvictionRecord::unpack(rec.pack(), 0).unwrap(), rec);
        }
    }
}
