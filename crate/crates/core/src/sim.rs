//! Fabric simulator: SPE tiling, the two-phase chromatic schedule,
//! round-robin SPU assignment, banked-memory conflict checking, one-hop
//! reachability, and the hybrid UQ memory wired into the update path.
//!
//! Banking is a validation layer: functional results never depend on bank
//! assignment, conflicts are counted rather than simulated as delays.

use crate::model::{Color, MrfModel, TileMap, MAX_LABELS};
use crate::spu::{LfsrState, ModelSlice, ProbLut};
use crate::uq::{
    flush_residuals, reconstruct_histogram, transport_into, DramLog, EvictionKind, EvictionRecord,
    Histogram, LabelEntry, LabelTrace, TransportStats, MAX_PAIRS,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("SPE grid dimension must be at least 1")]
    GridDim,
    #[error("SPUs per SPE must be at least 1")]
    SpusPerSpe,
    #[error("label memory pairs {0} outside 1..=8")]
    LmemPairs(usize),
    #[error("collection start {start} exceeds iteration count {iterations}")]
    CollectionWindow { start: usize, iterations: usize },
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error(transparent)]
    Spu(#[from] crate::spu::SpuError),
}

/// Fabric geometry and run parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceleratorConfig {
    pub grid_d: usize,
    pub spus_per_spe: usize,
    /// Label+counter pairs per RV in the on-chip label memory.
    pub lmem_pairs: usize,
    /// Eviction FIFO depth used for backpressure accounting.
    pub fifo_depth: usize,
    pub bandwidth_bits_per_cycle: u32,
    pub message_bits: u32,
    /// Pipeline flush overhead charged per chromatic phase, in cycles.
    pub flush_depth: u64,
    pub seed: u64,
    /// First iteration whose picks are counted toward the histogram.
    pub collection_start: usize,
    pub iterations: usize,
}

impl Default for AcceleratorConfig {
    fn default() -> Self {
        Self {
            grid_d: 4,
            spus_per_spe: 2,
            lmem_pairs: 2,
            fifo_depth: 16,
            bandwidth_bits_per_cycle: 512,
            message_bits: 32,
            flush_depth: 4,
            seed: 1,
            collection_start: 2000,
            iterations: 3000,
        }
    }
}

impl AcceleratorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.grid_d < 1 {
            return Err(SimError::GridDim);
        }
        if self.spus_per_spe < 1 {
            return Err(SimError::SpusPerSpe);
        }
        if !(1..=MAX_PAIRS).contains(&self.lmem_pairs) {
            return Err(SimError::LmemPairs(self.lmem_pairs));
        }
        if self.iterations == 0 {
            return Err(SimError::NoIterations);
        }
        if self.collection_start > self.iterations {
            return Err(SimError::CollectionWindow {
                start: self.collection_start,
                iterations: self.iterations,
            });
        }
        Ok(())
    }

    /// Notes about configurations outside the prototype's envelope.
    pub fn warnings(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if self.spus_per_spe > 2 {
            notes.push(format!(
                "{} SPUs/SPE exceeds the prototyped maximum of 2; results are extrapolated",
                self.spus_per_spe
            ));
        }
        notes
    }
}

/// Singleton-2 bank of a plane column: every two columns share one of the
/// S banks.
pub fn s2_bank(col: usize, spus_per_spe: usize) -> usize {
    (col / 2) % spus_per_spe
}

fn s2_bank_signed(col: i64, spus_per_spe: usize) -> usize {
    (col.div_euclid(2)).rem_euclid(spus_per_spe as i64) as usize
}

/// Periodic assignment of label-memory cells to four banks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankMap {
    period_rows: usize,
    period_cols: usize,
    tile: Vec<u8>,
}

impl BankMap {
    pub fn bank(&self, r: usize, c: usize) -> u8 {
        self.tile[(r % self.period_rows) * self.period_cols + (c % self.period_cols)]
    }

    pub fn period(&self) -> (usize, usize) {
        (self.period_rows, self.period_cols)
    }
}

/// Number of RVs whose existing neighbors land in fewer distinct banks than
/// there are neighbors. Boundary RVs are checked over their real neighbors
/// only.
pub fn verify_banking(map: &BankMap, width: usize, height: usize) -> usize {
    let mut conflicts = 0;
    for r in 0..height {
        for c in 0..width {
            let mut seen = [false; 4];
            let mut neighbors = 0;
            let mut distinct = 0;
            let mut visit = |nr: usize, nc: usize| {
                neighbors += 1;
                let b = map.bank(nr, nc) as usize;
                if !seen[b] {
                    seen[b] = true;
                    distinct += 1;
                }
            };
            if r > 0 {
                visit(r - 1, c);
            }
            if r + 1 < height {
                visit(r + 1, c);
            }
            if c > 0 {
                visit(r, c - 1);
            }
            if c + 1 < width {
                visit(r, c + 1);
            }
            if distinct < neighbors {
                conflicts += 1;
            }
        }
    }
    conflicts
}

/// Backtracking search for a periodic four-bank tile where every RV's four
/// neighbors land in distinct banks. Periods are tried smallest area first;
/// the wrapped torus check covers every position of the infinite extension.
fn search_banking() -> Option<BankMap> {
    let mut periods: Vec<(usize, usize)> = (2..=8)
        .flat_map(|pr| (2..=8).map(move |pc| (pr, pc)))
        .collect();
    periods.sort_by_key(|&(pr, pc)| (pr * pc, pr, pc));

    for (pr, pc) in periods {
        // A period of two folds a cell onto both of an RV's opposite
        // neighbors, which can never be distinct.
        if pr == 2 || pc == 2 {
            continue;
        }
        let n = pr * pc;
        // Four wrapped neighbor cells per torus position.
        let constraints: Vec<[usize; 4]> = (0..n)
            .map(|cell| {
                let (r, c) = (cell / pc, cell % pc);
                [
                    ((r + pr - 1) % pr) * pc + c,
                    ((r + 1) % pr) * pc + c,
                    r * pc + (c + pc - 1) % pc,
                    r * pc + (c + 1) % pc,
                ]
            })
            .collect();
        let mut involving: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (center, cells) in constraints.iter().enumerate() {
            for &cell in cells {
                involving[cell].push(center);
            }
        }

        let mut tile = vec![u8::MAX; n];
        if assign(0, &mut tile, &constraints, &involving) {
            return Some(BankMap {
                period_rows: pr,
                period_cols: pc,
                tile,
            });
        }
    }
    None
}

fn assign(
    cell: usize,
    tile: &mut Vec<u8>,
    constraints: &[[usize; 4]],
    involving: &[Vec<usize>],
) -> bool {
    if cell == tile.len() {
        return true;
    }
    'banks: for bank in 0..4u8 {
        tile[cell] = bank;
        for &center in &involving[cell] {
            let cells = &constraints[center];
            if cells.iter().all(|&x| tile[x] != u8::MAX) {
                let mut seen = [false; 4];
                for &x in cells {
                    let b = tile[x] as usize;
                    if seen[b] {
                        tile[cell] = u8::MAX;
                        continue 'banks;
                    }
                    seen[b] = true;
                }
            }
        }
        if assign(cell + 1, tile, constraints, involving) {
            return true;
        }
        tile[cell] = u8::MAX;
    }
    false
}

static LMEM_BANKING: OnceLock<BankMap> = OnceLock::new();

/// The cached label-memory bank pattern.
pub fn find_lmem_banking() -> &'static BankMap {
    LMEM_BANKING.get_or_init(|| search_banking().expect("a four-bank periodic pattern exists"))
}

/// Singleton-2 copies each SPE keeps per direction so that accesses of the
/// given reach resolve within one hop.
pub fn replication_factor(tile_width: usize, s2_reach: usize) -> usize {
    s2_reach.div_ceil(tile_width)
}

/// A data access that cannot be serviced by the local SPE or a one-hop
/// neighbor. `label` is None for a neighbor-label access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OneHopViolation {
    pub r: usize,
    pub c: usize,
    pub label: Option<usize>,
    pub spe_dr: i64,
    pub spe_dc: i64,
}

/// Check that every neighbor-label access and every post-replication
/// singleton-2 access resolves within the local SPE or its eight nearest
/// neighbors. `replication` is the (rows, columns) copies per direction.
pub fn check_one_hop(
    model: &MrfModel,
    tm: &TileMap,
    replication: (usize, usize),
) -> Vec<OneHopViolation> {
    let mut violations = Vec::new();
    let allow_r = 1 + replication.0 as i64;
    let allow_c = 1 + replication.1 as i64;
    for r in 0..model.height {
        for c in 0..model.width {
            let (er, ec) = tm.spe_of(r, c);
            for (nr, nc) in [
                (r.wrapping_sub(1), c),
                (r + 1, c),
                (r, c.wrapping_sub(1)),
                (r, c + 1),
            ] {
                if nr >= model.height || nc >= model.width {
                    continue;
                }
                let (ner, nec) = tm.spe_of(nr, nc);
                let (dr, dc) = (ner as i64 - er as i64, nec as i64 - ec as i64);
                if dr.abs() > 1 || dc.abs() > 1 {
                    violations.push(OneHopViolation {
                        r,
                        c,
                        label: None,
                        spe_dr: dr,
                        spe_dc: dc,
                    });
                }
            }
            for l in 0..model.labels {
                let (dr, dc) = model.offsets[l];
                let tr = (r as i64 + i64::from(dr)).clamp(0, model.height as i64 - 1) as usize;
                let tc = (c as i64 + i64::from(dc)).clamp(0, model.width as i64 - 1) as usize;
                let (ter, tec) = tm.spe_of(tr, tc);
                let (sdr, sdc) = (ter as i64 - er as i64, tec as i64 - ec as i64);
                if sdr.abs() > allow_r || sdc.abs() > allow_c {
                    violations.push(OneHopViolation {
                        r,
                        c,
                        label: Some(l),
                        spe_dr: sdr,
                        spe_dc: sdc,
                    });
                }
            }
        }
    }
    violations
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimCounters {
    pub rv_updates: u64,
    pub lmem_bank_conflicts: u64,
    pub s2_bank_conflicts: u64,
    pub capacity_evictions: u64,
    pub saturation_evictions: u64,
    /// Modeled cycles per SPU, fabric lockstep at phase boundaries.
    pub cycles: u64,
}

/// Everything a completed run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Final labels of the real RVs, row-major.
    pub final_labels: Vec<u8>,
    /// Per-RV mode over the collection window (final labels if the window
    /// is empty).
    pub mode_labels: Vec<u8>,
    pub histogram: Histogram,
    pub log: DramLog,
    pub counters: SimCounters,
    pub transport: TransportStats,
    pub per_iteration_evictions: Vec<u64>,
    pub trace: Option<LabelTrace>,
    pub tilemap: TileMap,
    /// Singleton-2 replication applied, (rows, columns) copies per direction.
    pub replication: (usize, usize),
    pub one_hop_violations: usize,
}

struct SpeGather {
    /// (padded index, new label) in schedule order.
    updates: Vec<(u32, u8)>,
    s2_conflicts: u64,
    lmem_conflicts: u64,
    max_spu_rvs: usize,
}

/// The accelerator simulator. Construction fixes the tiling, banking, and
/// replication; `run` executes the chromatic iterations.
pub struct Simulation<'a> {
    model: &'a MrfModel,
    pub config: AcceleratorConfig,
    pub tilemap: TileMap,
    labels: Vec<u8>,
    lfsrs: Vec<LfsrState>,
    lmem: Vec<LabelEntry>,
    log: DramLog,
    transport: TransportStats,
    counters: SimCounters,
    per_iteration_evictions: Vec<u64>,
    trace: Option<LabelTrace>,
    iteration: usize,
    lut: ProbLut,
    bankmap: &'static BankMap,
    replication: (usize, usize),
    one_hop_violations: usize,
    phase_records: Vec<Vec<EvictionRecord>>,
    label_scratch: Vec<u8>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        model: &'a MrfModel,
        config: AcceleratorConfig,
        record_trace: bool,
    ) -> Result<Self, SimError> {
        config.validate()?;
        let tilemap = crate::model::pad_and_tile(
            model.width,
            model.height,
            config.grid_d,
            config.spus_per_spe,
        );
        let (reach_r, reach_c) = model.offset_reach();
        let replication = (
            replication_factor(tilemap.spe_height, reach_r),
            replication_factor(tilemap.spe_width, reach_c),
        );
        let one_hop_violations = check_one_hop(model, &tilemap, replication).len();
        let lfsrs = (0..tilemap.num_spus())
            .map(|k| LfsrState::derive(config.seed, k as u64))
            .collect();
        let lut = ProbLut::build(model.temperature.at(0))?;
        let n_rvs = model.num_rvs();
        let num_spes = tilemap.num_spes();
        // All RVs start at label 0; the seed only drives the samplers.
        let labels = vec![0; tilemap.padded_width * tilemap.padded_height];
        let trace = (record_trace && config.collection_start < config.iterations)
            .then(|| LabelTrace::new(n_rvs, config.collection_start));
        Ok(Self {
            model,
            tilemap,
            labels,
            lfsrs,
            lmem: vec![LabelEntry::new(config.lmem_pairs); n_rvs],
            log: DramLog::new(),
            transport: TransportStats::default(),
            counters: SimCounters::default(),
            per_iteration_evictions: Vec::with_capacity(config.iterations.min(1 << 16)),
            trace,
            iteration: 0,
            lut,
            bankmap: find_lmem_banking(),
            replication,
            one_hop_violations,
            phase_records: vec![Vec::new(); num_spes],
            label_scratch: Vec::with_capacity(n_rvs),
            config,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn padded_labels(&self) -> &[u8] {
        &self.labels
    }

    /// Labels of the real RVs, row-major.
    pub fn real_labels(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.model.num_rvs());
        self.copy_real_labels_into(&mut out);
        out
    }

    fn copy_real_labels_into(&self, out: &mut Vec<u8>) {
        out.clear();
        for r in 0..self.model.height {
            let base = r * self.tilemap.padded_width;
            out.extend_from_slice(&self.labels[base..base + self.model.width]);
        }
    }

    /// Overwrite the current real-RV labels (padded cells stay inert).
    pub fn set_real_labels(&mut self, labels: &[u8]) {
        assert_eq!(labels.len(), self.model.num_rvs());
        for r in 0..self.model.height {
            let base = r * self.tilemap.padded_width;
            self.labels[base..base + self.model.width]
                .copy_from_slice(&labels[r * self.model.width..(r + 1) * self.model.width]);
        }
    }

    /// The (padded index, draw) sequence the next phase of this color would
    /// consume, without advancing the simulation.
    pub fn peek_schedule_draws(&self, color: Color) -> Vec<(usize, u16)> {
        let mut lfsrs = self.lfsrs.clone();
        let mut out = Vec::new();
        let s = self.config.spus_per_spe;
        for spe in 0..self.tilemap.num_spes() {
            let chunk = &mut lfsrs[spe * s..(spe + 1) * s];
            for_each_scheduled_rv(&self.tilemap, spe, color, |r, c, k| {
                chunk[k].advance();
                out.push((self.tilemap.padded_index(r, c), chunk[k].rand12()));
            });
        }
        out
    }

    /// Run one chromatic phase; returns records emitted by the phase.
    pub fn run_phase(&mut self, color: Color) -> u64 {
        let model = self.model;
        let tm = &self.tilemap;
        let grid = &self.labels;
        let lut = &self.lut;
        let bankmap = self.bankmap;
        let s = self.config.spus_per_spe;

        let gathered: Vec<SpeGather> = self
            .lfsrs
            .par_chunks_mut(s)
            .enumerate()
            .map(|(spe, lfsrs)| gather_spe(model, tm, grid, lut, bankmap, color, spe, lfsrs))
            .collect();

        let collecting = self.iteration >= self.config.collection_start;
        let width = self.model.width;
        let padded_width = self.tilemap.padded_width;
        let mut emitted = 0u64;
        let mut max_spu_rvs = 0usize;
        for (spe, out) in gathered.iter().enumerate() {
            self.counters.s2_bank_conflicts += out.s2_conflicts;
            self.counters.lmem_bank_conflicts += out.lmem_conflicts;
            self.counters.rv_updates += out.updates.len() as u64;
            max_spu_rvs = max_spu_rvs.max(out.max_spu_rvs);
            let buffer = &mut self.phase_records[spe];
            for &(pidx, new_label) in &out.updates {
                self.labels[pidx as usize] = new_label;
                let (r, c) = (pidx as usize / padded_width, pidx as usize % padded_width);
                let real = r * width + c;
                if let Some((record, kind)) =
                    self.lmem[real].update_classified(real as u32, new_label, collecting)
                {
                    match kind {
                        EvictionKind::Capacity => self.counters.capacity_evictions += 1,
                        EvictionKind::Saturation => self.counters.saturation_evictions += 1,
                    }
                    buffer.push(record);
                    emitted += 1;
                }
            }
        }
        self.counters.cycles +=
            max_spu_rvs as u64 * self.model.labels as u64 + self.config.flush_depth;

        let stats = transport_into(&self.phase_records, self.config.fifo_depth, &mut self.log);
        self.transport.merge(&stats);
        for buffer in &mut self.phase_records {
            buffer.clear();
        }
        emitted
    }

    /// One full iteration: all black RVs, a pipeline flush, then all white.
    pub fn run_iteration(&mut self) {
        let t = self.model.temperature.at(self.iteration);
        if t != self.lut.temperature {
            self.lut = ProbLut::build(t).expect("temperature validated at model construction");
        }
        let mut emitted = self.run_phase(Color::Black);
        emitted += self.run_phase(Color::White);
        self.per_iteration_evictions.push(emitted);
        if self.iteration >= self.config.collection_start && self.trace.is_some() {
            let mut scratch = std::mem::take(&mut self.label_scratch);
            self.copy_real_labels_into(&mut scratch);
            if let Some(trace) = &mut self.trace {
                trace.push_iteration(&scratch);
            }
            self.label_scratch = scratch;
        }
        self.iteration += 1;
    }

    /// Run the configured iterations, drain the label memory, and reconstruct
    /// the histogram from the completed log.
    pub fn run(mut self) -> RunOutput {
        while self.iteration < self.config.iterations {
            self.run_iteration();
        }
        self.finish()
    }

    fn finish(mut self) -> RunOutput {
        // Drain residual counters through the same hub tree, grouped by the
        // SPE owning each RV.
        let residuals = flush_residuals(&self.lmem);
        for record in residuals {
            let (r, c) = (
                record.rv_address as usize / self.model.width,
                record.rv_address as usize % self.model.width,
            );
            let (er, ec) = self.tilemap.spe_of(r, c);
            self.phase_records[er * self.tilemap.grid_d + ec].push(record);
        }
        let stats = transport_into(&self.phase_records, self.config.fifo_depth, &mut self.log);
        self.transport.merge(&stats);

        let n_rvs = self.model.num_rvs();
        let histogram = reconstruct_histogram(&self.log, n_rvs, self.model.labels)
            .expect("simulator log is well-formed");
        let final_labels = self.real_labels();
        let window = self.config.iterations - self.config.collection_start;
        let mode_labels = if window > 0 {
            histogram
                .mode_labels()
                .expect("non-empty collection window")
        } else {
            final_labels.clone()
        };
        RunOutput {
            final_labels,
            mode_labels,
            histogram,
            log: self.log,
            counters: self.counters,
            transport: self.transport,
            per_iteration_evictions: self.per_iteration_evictions,
            trace: self.trace,
            tilemap: self.tilemap,
            replication: self.replication,
            one_hop_violations: self.one_hop_violations,
        }
    }
}

/// Visit the real RVs of `color` inside one SPE region in schedule order,
/// with the round-robin SPU assignment. Padded cells take no schedule slot.
fn for_each_scheduled_rv(
    tm: &TileMap,
    spe: usize,
    color: Color,
    mut f: impl FnMut(usize, usize, usize),
) {
    let s = tm.spus_per_spe;
    let (er, ec) = (spe / tm.grid_d, spe % tm.grid_d);
    let (r0, c0) = tm.spe_origin(er, ec);
    for r in r0..(r0 + tm.spe_height).min(tm.height) {
        let parity = (color.parity() + r) % 2;
        let first = if c0 % 2 == parity { c0 } else { c0 + 1 };
        let end = (c0 + tm.spe_width).min(tm.width);
        let mut j = 0usize;
        let mut c = first;
        while c < end {
            f(r, c, j % s);
            j += 1;
            c += 2;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn gather_spe(
    model: &MrfModel,
    tm: &TileMap,
    grid: &[u8],
    lut: &ProbLut,
    bankmap: &BankMap,
    color: Color,
    spe: usize,
    lfsrs: &mut [LfsrState],
) -> SpeGather {
    let s = lfsrs.len();
    let slice = ModelSlice {
        labels: model.labels,
        alpha: model.alpha,
        beta: model.beta,
        pairwise: model.pairwise_table(),
    };
    let mut out = SpeGather {
        updates: Vec::new(),
        s2_conflicts: 0,
        lmem_conflicts: 0,
        max_spu_rvs: 0,
    };
    let mut spu_rvs = vec![0usize; s];
    let mut singleton = [0u8; MAX_LABELS];
    // Representative singleton-2 column offset. The lockstep SPUs read
    // columns two apart at a common label offset, so bank distinctness of a
    // group does not depend on which label the cycle is serving.
    let dc0 = i64::from(model.offsets[0].1);

    let (er, ec) = (spe / tm.grid_d, spe % tm.grid_d);
    let (r0, c0) = tm.spe_origin(er, ec);
    for r in r0..(r0 + tm.spe_height).min(tm.height) {
        let parity = (color.parity() + r) % 2;
        let first = if c0 % 2 == parity { c0 } else { c0 + 1 };
        let end = (c0 + tm.spe_width).min(tm.width);
        let mut j = 0usize;
        let mut c = first;
        while c < end {
            let k = j % s;
            if k == 0 {
                // Bank check for the lockstep group starting here. Banking is
                // computed on the pre-clamp target column: border clamping is
                // halo data replication, not address redirection.
                let group = (end - c).div_ceil(2).min(s);
                if group > 1 {
                    let mut seen = [false; MAX_PAIRS];
                    let mut collide = false;
                    for m in 0..group {
                        let b = s2_bank_signed((c + 2 * m) as i64 + dc0, s);
                        if seen[b] {
                            collide = true;
                        }
                        seen[b] = true;
                    }
                    if collide {
                        // The group occupies one modeled cycle per label.
                        out.s2_conflicts += model.labels as u64;
                    }
                }
            }

            let mut neighbors = [0u8; 4];
            let mut n = 0usize;
            let mut banks = [false; 4];
            let mut distinct = 0usize;
            {
                let mut visit = |nr: usize, nc: usize| {
                    neighbors[n] = grid[nr * tm.padded_width + nc];
                    n += 1;
                    let b = bankmap.bank(nr, nc) as usize;
                    if !banks[b] {
                        banks[b] = true;
                        distinct += 1;
                    }
                };
                if r > 0 {
                    visit(r - 1, c);
                }
                if r + 1 < tm.height {
                    visit(r + 1, c);
                }
                if c > 0 {
                    visit(r, c - 1);
                }
                if c + 1 < tm.width {
                    visit(r, c + 1);
                }
            }
            if distinct < n {
                out.lmem_conflicts += 1;
            }

            for (l, slot) in singleton[..model.labels].iter_mut().enumerate() {
                *slot = model.singleton_energy(r, c, l);
            }
            let new_label = crate::spu::update_rv(
                &slice,
                &neighbors[..n],
                &singleton[..model.labels],
                lut,
                &mut lfsrs[k],
            );
            out.updates.push((tm.padded_index(r, c) as u32, new_label));
            spu_rvs[k] += 1;
            j += 1;
            c += 2;
        }
    }
    out.max_spu_rvs = spu_rvs.into_iter().max().unwrap_or(0);
    out
}

/// Apply one chromatic phase in the given order with externally supplied
/// draws. Updates read only opposite-color labels, so any permutation of the
/// same-color updates produces the same grid.
pub fn apply_phase(
    labels: &mut [u8],
    model: &MrfModel,
    tm: &TileMap,
    lut: &ProbLut,
    updates: &[(usize, u16)],
) {
    let slice = ModelSlice {
        labels: model.labels,
        alpha: model.alpha,
        beta: model.beta,
        pairwise: model.pairwise_table(),
    };
    let mut singleton = [0u8; MAX_LABELS];
    for &(pidx, draw) in updates {
        let (r, c) = (pidx / tm.padded_width, pidx % tm.padded_width);
        debug_assert!(!tm.is_padded(r, c));
        let mut neighbors = [0u8; 4];
        let mut n = 0usize;
        if r > 0 {
            neighbors[n] = labels[(r - 1) * tm.padded_width + c];
            n += 1;
        }
        if r + 1 < tm.height {
            neighbors[n] = labels[(r + 1) * tm.padded_width + c];
            n += 1;
        }
        if c > 0 {
            neighbors[n] = labels[r * tm.padded_width + c - 1];
            n += 1;
        }
        if c + 1 < tm.width {
            neighbors[n] = labels[r * tm.padded_width + c + 1];
            n += 1;
        }
        for (l, slot) in singleton[..model.labels].iter_mut().enumerate() {
            *slot = model.singleton_energy(r, c, l);
        }
        labels[pidx] = crate::spu::update_rv_with_draw(
            &slice,
            &neighbors[..n],
            &singleton[..model.labels],
            lut,
            draw,
        );
    }
}
