//! Bit-accurate software model of a tiled Gibbs-sampling fabric for
//! first-order MRF inference: the fixed-point sampling datapath, the
//! two-phase checkerboard schedule over a grid of processing elements,
//! banked-memory validation, a hybrid on-chip/off-chip histogram log for
//! uncertainty quantification, analytical performance models, and two
//! vision applications (motion estimation and stereo matching).

pub mod apps;
pub mod model;
pub mod perf;
pub mod sim;
pub mod spu;
pub mod uq;

pub use model::{
    color_of, pad_and_tile, Color, MrfModel, Smoothness, TemperatureSchedule, TileMap,
};
pub use sim::{
    check_one_hop, find_lmem_banking, replication_factor, s2_bank, verify_banking,
    AcceleratorConfig, BankMap, RunOutput, SimCounters, Simulation,
};
pub use spu::{
    build_prob_lut, compute_energy, sample, scale_energies, update_rv, EnergyVector, LfsrState,
    ProbLut,
};
pub use uq::{
    flush_residuals, reconstruct_histogram, trace_lmem_sim, transport, unique_label_cdf, uq_stats,
    DramLog, EvictionRecord, Histogram, LabelEntry, LabelTrace, TransportStats, UqStats,
};
