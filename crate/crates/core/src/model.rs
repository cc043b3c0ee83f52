//! Problem-instance representation: grids, labels, the chromatic partition,
//! and the tiling/padding that distributes work evenly over the SPE fabric.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Labels are stored in six bits on chip.
pub const MAX_LABELS: usize = 64;
/// Singleton data is 6-bit grayscale.
pub const GRAY_MAX: u8 = 63;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("label count {0} outside supported range 2..=64")]
    LabelCount(usize),
    #[error("grid must be non-empty")]
    EmptyGrid,
    #[error("singleton plane has {got} entries, expected {expected}")]
    PlaneSize { got: usize, expected: usize },
    #[error("grayscale value {value} at index {index} exceeds 6-bit range")]
    GrayRange { index: usize, value: u8 },
    #[error("offset table has {got} entries, expected one per label ({expected})")]
    OffsetCount { got: usize, expected: usize },
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
}

/// Checkerboard color class of a random variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    /// (r + c) parity of the class: 0 for black, 1 for white.
    pub fn parity(self) -> usize {
        match self {
            Color::Black => 0,
            Color::White => 1,
        }
    }

    pub fn other(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

/// Color of the RV at (r, c). Black iff r + c is even.
pub fn color_of(r: usize, c: usize) -> Color {
    if (r + c).is_multiple_of(2) {
        Color::Black
    } else {
        Color::White
    }
}

/// Pairwise smoothness term between two labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    /// 0 if equal, 1 otherwise.
    Potts,
    /// L1 distance between the labels' offset vectors, capped.
    TruncatedL1 { cap: u32 },
}

impl Smoothness {
    /// Energy contributed by one neighbor holding `other` while evaluating
    /// candidate label `l`. Offsets give the vector interpretation of labels.
    pub fn energy(&self, offsets: &[(i32, i32)], l: usize, other: usize) -> u32 {
        match *self {
            Smoothness::Potts => u32::from(l != other),
            Smoothness::TruncatedL1 { cap } => {
                let (ar, ac) = offsets[l];
                let (br, bc) = offsets[other];
                let d = ar.abs_diff(br) + ac.abs_diff(bc);
                d.min(cap)
            }
        }
    }
}

/// Sampling temperature, fixed or per-iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TemperatureSchedule {
    Constant(f64),
    PerIteration(Vec<f64>),
}

impl TemperatureSchedule {
    pub fn at(&self, iteration: usize) -> f64 {
        match self {
            TemperatureSchedule::Constant(t) => *t,
            TemperatureSchedule::PerIteration(ts) => ts[iteration.min(ts.len().saturating_sub(1))],
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let check = |t: f64| {
            if t > 0.0 && t.is_finite() {
                Ok(())
            } else {
                Err(ModelError::Temperature(t))
            }
        };
        match self {
            TemperatureSchedule::Constant(t) => check(*t),
            TemperatureSchedule::PerIteration(ts) => {
                if ts.is_empty() {
                    return Err(ModelError::Temperature(f64::NAN));
                }
                ts.iter().try_for_each(|&t| check(t))
            }
        }
    }
}

/// A first-order MRF problem instance.
///
/// Singleton 1 holds one 6-bit value per RV; singleton 2 is a second 6-bit
/// plane addressed through the per-label offset table. The singleton energy
/// of label `l` at pixel `p` is `|s1[p] - s2[p + offset[l]]|` with the target
/// clamped to the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrfModel {
    pub width: usize,
    pub height: usize,
    pub labels: usize,
    pub alpha: u32,
    pub beta: u32,
    pub temperature: TemperatureSchedule,
    pub singleton1: Vec<u8>,
    pub singleton2: Vec<u8>,
    /// Per-label (dr, dc) offset into the singleton-2 plane.
    pub offsets: Vec<(i32, i32)>,
    pub smoothness: Smoothness,
    /// Precomputed smoothness table, labels x labels row-major.
    pairwise: Vec<u16>,
}

impl MrfModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        width: usize,
        height: usize,
        labels: usize,
        alpha: u32,
        beta: u32,
        temperature: TemperatureSchedule,
        singleton1: Vec<u8>,
        singleton2: Vec<u8>,
        offsets: Vec<(i32, i32)>,
        smoothness: Smoothness,
    ) -> Result<Self, ModelError> {
        if !(2..=MAX_LABELS).contains(&labels) {
            return Err(ModelError::LabelCount(labels));
        }
        if width == 0 || height == 0 {
            return Err(ModelError::EmptyGrid);
        }
        let n = width * height;
        for plane in [&singleton1, &singleton2] {
            if plane.len() != n {
                return Err(ModelError::PlaneSize {
                    got: plane.len(),
                    expected: n,
                });
            }
            if let Some((index, &value)) = plane.iter().enumerate().find(|(_, &v)| v > GRAY_MAX) {
                return Err(ModelError::GrayRange { index, value });
            }
        }
        if offsets.len() != labels {
            return Err(ModelError::OffsetCount {
                got: offsets.len(),
                expected: labels,
            });
        }
        temperature.validate()?;

        let mut pairwise = vec![0u16; labels * labels];
        for l in 0..labels {
            for m in 0..labels {
                pairwise[l * labels + m] =
                    smoothness.energy(&offsets, l, m).min(u32::from(u16::MAX)) as u16;
            }
        }
        Ok(Self {
            width,
            height,
            labels,
            alpha,
            beta,
            temperature,
            singleton1,
            singleton2,
            offsets,
            smoothness,
            pairwise,
        })
    }

    pub fn num_rvs(&self) -> usize {
        self.width * self.height
    }

    pub fn rv_index(&self, r: usize, c: usize) -> usize {
        r * self.width + c
    }

    /// Smoothness energy between candidate `l` and a neighbor's label `other`.
    pub fn pairwise_energy(&self, l: usize, other: usize) -> u32 {
        u32::from(self.pairwise[l * self.labels + other])
    }

    /// Row of the smoothness table for candidate label `l`.
    pub fn pairwise_row(&self, l: usize) -> &[u16] {
        &self.pairwise[l * self.labels..(l + 1) * self.labels]
    }

    /// The full labels x labels smoothness table, row-major by candidate.
    pub fn pairwise_table(&self) -> &[u16] {
        &self.pairwise
    }

    /// Singleton energy of label `l` at (r, c): absolute grayscale difference
    /// between the singleton-1 value and the offset singleton-2 target,
    /// clamped to the plane at the borders.
    pub fn singleton_energy(&self, r: usize, c: usize, l: usize) -> u8 {
        let (dr, dc) = self.offsets[l];
        let tr = (r as i64 + i64::from(dr)).clamp(0, self.height as i64 - 1) as usize;
        let tc = (c as i64 + i64::from(dc)).clamp(0, self.width as i64 - 1) as usize;
        let a = self.singleton1[self.rv_index(r, c)];
        let b = self.singleton2[tr * self.width + tc];
        a.abs_diff(b)
    }

    /// Largest |dr| and |dc| over the offset table.
    pub fn offset_reach(&self) -> (usize, usize) {
        let mut reach = (0usize, 0usize);
        for &(dr, dc) in &self.offsets {
            reach.0 = reach.0.max(dr.unsigned_abs() as usize);
            reach.1 = reach.1.max(dc.unsigned_abs() as usize);
        }
        reach
    }
}

/// Placement of the padded grid onto the D x D SPE fabric.
///
/// All SPE regions are congruent; padding extends the image right and down
/// so every region width is a multiple of 2*S and every height a multiple
/// of 2. Padded cells are inert: never updated, never read as neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileMap {
    pub grid_d: usize,
    pub spus_per_spe: usize,
    pub spe_width: usize,
    pub spe_height: usize,
    pub padded_width: usize,
    pub padded_height: usize,
    /// Real (unpadded) image dimensions.
    pub width: usize,
    pub height: usize,
}

impl TileMap {
    /// Padding mask: true for cells added by padding.
    pub fn is_padded(&self, r: usize, c: usize) -> bool {
        r >= self.height || c >= self.width
    }

    pub fn num_spes(&self) -> usize {
        self.grid_d * self.grid_d
    }

    pub fn num_spus(&self) -> usize {
        self.num_spes() * self.spus_per_spe
    }

    /// SPE grid coordinates owning padded-grid cell (r, c).
    pub fn spe_of(&self, r: usize, c: usize) -> (usize, usize) {
        (r / self.spe_height, c / self.spe_width)
    }

    /// Top-left padded-grid cell of SPE (er, ec).
    pub fn spe_origin(&self, er: usize, ec: usize) -> (usize, usize) {
        (er * self.spe_height, ec * self.spe_width)
    }

    pub fn padded_index(&self, r: usize, c: usize) -> usize {
        r * self.padded_width + c
    }
}

fn round_up(x: usize, multiple: usize) -> usize {
    x.div_ceil(multiple) * multiple
}

/// Pad an image and tile it onto a D x D fabric with S SPUs per SPE.
///
/// Chooses the smallest per-SPE region whose width is a multiple of 2*S
/// (keeps round-robin SPU assignment and singleton-2 banking phase-aligned
/// across rows) and whose height is a multiple of 2 (balanced checkerboard
/// phases).
pub fn pad_and_tile(width: usize, height: usize, grid_d: usize, spus_per_spe: usize) -> TileMap {
    assert!(grid_d >= 1 && spus_per_spe >= 1 && width >= 1 && height >= 1);
    let spe_width = round_up(width.div_ceil(grid_d), 2 * spus_per_spe);
    let spe_height = round_up(height.div_ceil(grid_d), 2);
    TileMap {
        grid_d,
        spus_per_spe,
        spe_width,
        spe_height,
        padded_width: spe_width * grid_d,
        padded_height: spe_height * grid_d,
        width,
        height,
    }
}
