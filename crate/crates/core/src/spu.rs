//! Bit-accurate model of the stochastic processing unit pipeline: energy
//! computation, dynamic scaling, the energy-to-probability LUT, and the
//! LFSR-driven inverse-transform sampler.

use crate::model::MAX_LABELS;
use thiserror::Error;

/// Scaled probabilities are 4-bit.
pub const PROB_BITS: u32 = 4;
/// Energies are 8-bit unsigned, so the LUT has one entry per scaled energy.
pub const LUT_SIZE: usize = 256;
/// Register width of the sampler's LFSR.
pub const LFSR_BITS: u32 = 19;
const LFSR_MASK: u32 = (1 << LFSR_BITS) - 1;
/// The sampler consumes the least significant twelve bits of the register.
pub const RAND_BITS: u32 = 12;
const RAND_MASK: u32 = (1 << RAND_BITS) - 1;
/// Number of distinct 12-bit draws.
pub const RAND_SPACE: u32 = 1 << RAND_BITS;

#[derive(Debug, Error)]
pub enum SpuError {
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("LFSR state must be nonzero")]
    ZeroLfsrState,
}

/// Raw and dynamically scaled per-label energies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyVector {
    pub raw: Vec<u8>,
    pub scaled: Vec<u8>,
    pub e_min: u8,
}

/// Energy of one candidate label: alpha * E_singleton + beta * sum of the
/// four neighborhood energies, saturating at the 8-bit range.
pub fn compute_energy(e_singleton: u32, neighbor_energies: [u32; 4], alpha: u32, beta: u32) -> u8 {
    let sum: u32 = neighbor_energies.iter().sum();
    let e = alpha
        .saturating_mul(e_singleton)
        .saturating_add(beta.saturating_mul(sum));
    e.min(255) as u8
}

/// Subtract the exact minimum from every raw energy.
pub fn scale_energies(raw: &[u8]) -> EnergyVector {
    debug_assert!(raw.len() >= 2);
    let e_min = *raw.iter().min().expect("non-empty energy vector");
    let scaled = raw.iter().map(|&e| e - e_min).collect();
    EnergyVector {
        raw: raw.to_vec(),
        scaled,
        e_min,
    }
}

/// Truncated-probability look-up table for a fixed temperature.
///
/// Entry `e` holds the scaled probability `(2^4 - 1) * exp(-e / T)` rounded
/// down to the nearest power of two, with values below one truncated to zero,
/// so every entry is in {0, 1, 2, 4, 8}. The table must be rebuilt when T
/// changes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbLut {
    table: [u8; LUT_SIZE],
    pub temperature: f64,
}

impl ProbLut {
    pub fn build(temperature: f64) -> Result<Self, SpuError> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(SpuError::Temperature(temperature));
        }
        let max = f64::from((1u32 << PROB_BITS) - 1);
        let mut table = [0u8; LUT_SIZE];
        for (e, entry) in table.iter_mut().enumerate() {
            let p_s = max * (-(e as f64) / temperature).exp();
            *entry = if p_s < 1.0 {
                0
            } else {
                1u8 << (p_s.log2().floor() as u32)
            };
        }
        Ok(Self { table, temperature })
    }

    #[inline]
    pub fn lookup(&self, scaled_energy: u8) -> u8 {
        self.table[scaled_energy as usize]
    }

    pub fn table(&self) -> &[u8; LUT_SIZE] {
        &self.table
    }
}

/// Free-function form of the LUT construction.
pub fn build_prob_lut(temperature: f64) -> Result<ProbLut, SpuError> {
    ProbLut::build(temperature)
}

/// 19-bit maximal-length Fibonacci LFSR, taps at bits 19, 18, 17, 14.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LfsrState(u32);

impl LfsrState {
    pub fn new(state: u32) -> Result<Self, SpuError> {
        let state = state & LFSR_MASK;
        if state == 0 {
            return Err(SpuError::ZeroLfsrState);
        }
        Ok(Self(state))
    }

    /// Derive a nonzero state from a 64-bit seed and a stream index, so each
    /// SPU gets its own well-mixed register.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        loop {
            z = splitmix64(&mut z);
            let s = (z & u64::from(LFSR_MASK)) as u32;
            if s != 0 {
                return Self(s);
            }
        }
    }

    /// Successor state under the fixed feedback polynomial.
    #[inline]
    pub fn next(self) -> Self {
        let s = self.0;
        let feedback = ((s >> 18) ^ (s >> 17) ^ (s >> 16) ^ (s >> 13)) & 1;
        Self(((s << 1) | feedback) & LFSR_MASK)
    }

    #[inline]
    pub fn advance(&mut self) {
        *self = self.next();
    }

    /// Low twelve bits of the register.
    #[inline]
    pub fn rand12(&self) -> u16 {
        (self.0 & RAND_MASK) as u16
    }

    pub fn state(&self) -> u32 {
        self.0
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Inverse-transform sample from a truncated-probability vector.
///
/// Reduces the 12-bit draw modulo the total mass and scans the CDF; the
/// modulo bias is part of the modeled hardware.
pub fn sample(ptr: &[u8], rand12: u16) -> usize {
    let total: u32 = ptr.iter().map(|&p| u32::from(p)).sum();
    assert!(total >= 8, "truncated probability mass must be at least 8");
    let u = u32::from(rand12) % total;
    let mut cumulative = 0u32;
    for (l, &p) in ptr.iter().enumerate() {
        cumulative += u32::from(p);
        if cumulative > u {
            return l;
        }
    }
    unreachable!("cumulative mass covers the reduced draw");
}

/// Per-label model parameters needed by one RV update.
#[derive(Debug, Clone, Copy)]
pub struct ModelSlice<'a> {
    pub labels: usize,
    pub alpha: u32,
    pub beta: u32,
    /// labels x labels smoothness table, row-major by candidate label.
    pub pairwise: &'a [u16],
}

/// One full pipeline pass for a single RV: energy computation over all
/// labels, dynamic scaling, LUT conversion, and sampling. Consumes exactly
/// one LFSR advance; the draw is the advanced register's low twelve bits.
pub fn update_rv(
    slice: &ModelSlice,
    neighbor_labels: &[u8],
    singleton: &[u8],
    lut: &ProbLut,
    lfsr: &mut LfsrState,
) -> u8 {
    lfsr.advance();
    update_rv_with_draw(slice, neighbor_labels, singleton, lut, lfsr.rand12())
}

/// The pipeline with an externally supplied 12-bit draw.
pub fn update_rv_with_draw(
    slice: &ModelSlice,
    neighbor_labels: &[u8],
    singleton: &[u8],
    lut: &ProbLut,
    rand12: u16,
) -> u8 {
    debug_assert_eq!(singleton.len(), slice.labels);
    let mut raw = [0u8; MAX_LABELS];
    let mut e_min = u8::MAX;
    for l in 0..slice.labels {
        let row = &slice.pairwise[l * slice.labels..(l + 1) * slice.labels];
        let mut neigh = [0u32; 4];
        for (slot, &n) in neigh.iter_mut().zip(neighbor_labels.iter()) {
            *slot = u32::from(row[n as usize]);
        }
        let e = compute_energy(u32::from(singleton[l]), neigh, slice.alpha, slice.beta);
        raw[l] = e;
        e_min = e_min.min(e);
    }
    let mut ptr = [0u8; MAX_LABELS];
    for l in 0..slice.labels {
        ptr[l] = lut.lookup(raw[l] - e_min);
    }
    sample(&ptr[..slice.labels], rand12) as u8
}
