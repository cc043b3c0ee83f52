//! Shared fixtures for the criterion benchmarks.

use mrfsim_core::apps::{build_motion_model, synth, AppParams};
use mrfsim_core::{AcceleratorConfig, MrfModel};

/// Motion-estimation model over a synthetic scene of the given size.
pub fn motion_fixture(width: usize, height: usize) -> MrfModel {
    let (frame_t, frame_t1, _) = synth::shifted_pair(width, height, (1, 2), 42);
    build_motion_model(&frame_t, &frame_t1, &AppParams::motion()).unwrap()
}

pub fn bench_config(iterations: usize) -> AcceleratorConfig {
    AcceleratorConfig {
        grid_d: 4,
        spus_per_spe: 2,
        iterations,
        collection_start: 0,
        seed: 7,
        ..AcceleratorConfig::default()
    }
}
