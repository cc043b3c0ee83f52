//! Binary PGM images and the little-endian `.flo` flow format.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

const FLO_MAGIC: f32 = 202021.25;
/// Ground-truth flow components above this magnitude mark invalid pixels.
const FLO_INVALID: f32 = 1e9;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: not a binary (P5) PGM file")]
    NotPgm { path: String },
    #[error("{path}: unsupported PGM maxval {maxval} (only 8-bit supported)")]
    PgmDepth { path: String, maxval: u32 },
    #[error("{path}: truncated pixel data")]
    Truncated { path: String },
    #[error("{path}: not a .flo file")]
    NotFlo { path: String },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Row-major 8-bit grayscale image. Model construction expects planes
/// quantized to 6 bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.width + c]
    }

    /// Drop the two least significant bits of every pixel.
    pub fn quantize_6bit(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v >> 2).collect(),
        }
    }

    /// Crop the top-left `width` x `height` window.
    pub fn crop(&self, width: usize, height: usize) -> GrayImage {
        assert!(width <= self.width && height <= self.height);
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            let base = r * self.width;
            data.extend_from_slice(&self.data[base..base + width]);
        }
        GrayImage {
            width,
            height,
            data,
        }
    }
}

fn read_pgm_token(reader: &mut impl BufRead, path: &Path) -> Result<String, IoError> {
    let mut token = String::new();
    loop {
        let mut byte = [0u8; 1];
        match reader.read_exact(&mut byte) {
            Ok(()) => {}
            Err(e) => {
                if token.is_empty() {
                    return Err(IoError::io(path, e));
                }
                return Ok(token);
            }
        }
        let ch = byte[0] as char;
        if ch == '#' {
            let mut comment = String::new();
            reader
                .read_line(&mut comment)
                .map_err(|e| IoError::io(path, e))?;
            continue;
        }
        if ch.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            return Ok(token);
        }
        token.push(ch);
    }
}

/// Read a binary (P5) 8-bit PGM.
pub fn read_pgm(path: &Path) -> Result<GrayImage, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let magic = read_pgm_token(&mut reader, path)?;
    if magic != "P5" {
        return Err(IoError::NotPgm {
            path: path.display().to_string(),
        });
    }
    let parse = |s: String| -> Result<u32, IoError> {
        s.parse().map_err(|_| IoError::NotPgm {
            path: path.display().to_string(),
        })
    };
    let width = parse(read_pgm_token(&mut reader, path)?)? as usize;
    let height = parse(read_pgm_token(&mut reader, path)?)? as usize;
    let maxval = parse(read_pgm_token(&mut reader, path)?)?;
    if maxval == 0 || maxval > 255 {
        return Err(IoError::PgmDepth {
            path: path.display().to_string(),
            maxval,
        });
    }
    let mut data = vec![0u8; width * height];
    reader
        .read_exact(&mut data)
        .map_err(|_| IoError::Truncated {
            path: path.display().to_string(),
        })?;
    Ok(GrayImage::new(width, height, data))
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(image.data.len() + 32);
    write!(out, "P5\n{} {}\n255\n", image.width, image.height)
        .expect("writing to a Vec cannot fail");
    out.extend_from_slice(&image.data);
    std::fs::write(path, out).map_err(|e| IoError::io(path, e))
}

/// Per-pixel float flow with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGt {
    pub width: usize,
    pub height: usize,
    pub u: Vec<f32>,
    pub v: Vec<f32>,
    pub valid: Vec<bool>,
}

/// Read the standard `.flo` format: float magic, i32 width/height, then
/// interleaved (u, v) float pairs.
pub fn read_flo(path: &Path) -> Result<FlowGt, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    let not_flo = || IoError::NotFlo {
        path: path.display().to_string(),
    };
    if bytes.len() < 12 {
        return Err(not_flo());
    }
    let magic = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(not_flo());
    }
    let width = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 {
        return Err(not_flo());
    }
    let (width, height) = (width as usize, height as usize);
    let expected = 12 + width * height * 8;
    if bytes.len() < expected {
        return Err(IoError::Truncated {
            path: path.display().to_string(),
        });
    }
    let mut u = Vec::with_capacity(width * height);
    let mut v = Vec::with_capacity(width * height);
    let mut valid = Vec::with_capacity(width * height);
    for i in 0..width * height {
        let off = 12 + i * 8;
        let ui = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let vi = f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap());
        valid.push(
            ui.abs() < FLO_INVALID && vi.abs() < FLO_INVALID && ui.is_finite() && vi.is_finite(),
        );
        u.push(ui);
        v.push(vi);
    }
    Ok(FlowGt {
        width,
        height,
        u,
        v,
        valid,
    })
}

pub fn write_flo(path: &Path, flow: &FlowGt) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(12 + flow.u.len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height as i32).to_le_bytes());
    for i in 0..flow.u.len() {
        let (u, v) = if flow.valid[i] {
            (flow.u[i], flow.v[i])
        } else {
            (2e9, 2e9)
        };
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out).map_err(|e| IoError::io(path, e))
}

/// Per-pixel float disparities with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityGt {
    pub width: usize,
    pub height: usize,
    pub d: Vec<f32>,
    pub valid: Vec<bool>,
}

/// Read disparity ground truth stored as a PGM with a scale factor; pixel
/// value 0 marks unknown disparity.
pub fn read_disparity_gt(path: &Path, scale: f64) -> Result<DisparityGt, IoError> {
    let img = read_pgm(path)?;
    let mut d = Vec::with_capacity(img.data.len());
    let mut valid = Vec::with_capacity(img.data.len());
    for &p in &img.data {
        valid.push(p != 0);
        d.push((f64::from(p) / scale) as f32);
    }
    Ok(DisparityGt {
        width: img.width,
        height: img.height,
        d,
        valid,
    })
}

/// Scale labels onto the full 8-bit range for viewing.
pub fn labels_to_pgm(labels: &[u8], width: usize, height: usize, n_labels: usize) -> GrayImage {
    let denom = (n_labels.max(2) - 1) as u32;
    let data = labels
        .iter()
        .map(|&l| ((u32::from(l) * 255) / denom).min(255) as u8)
        .collect();
    GrayImage::new(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = GrayImage::new(5, 3, (0u8..15).collect());
        write_pgm(&path, &img).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
    }

    #[test]
    fn pgm_with_comment() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        std::fs::write(&path, b"P5\n# a comment\n2 2\n255\nabcd").unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!(img.data, b"abcd");
    }

    #[test]
    fn pgm_rejects_bad_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        std::fs::write(&path, b"P2\n2 2\n255\n0 0 0 0").unwrap();
        assert!(matches!(read_pgm(&path), Err(IoError::NotPgm { .. })));
        std::fs::write(&path, b"P5\n4 4\n255\nshort").unwrap();
        assert!(matches!(read_pgm(&path), Err(IoError::Truncated { .. })));
    }

    #[test]
    fn flo_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.flo");
        let flow = FlowGt {
            width: 3,
            height: 2,
            u: vec![0.0, 1.5, -2.0, 0.25, 3.0, 2e9],
            v: vec![1.0, -1.5, 0.0, 0.5, -3.0, 2e9],
            valid: vec![true, true, true, true, true, false],
        };
        write_flo(&path, &flow).unwrap();
        let got = read_flo(&path).unwrap();
        assert_eq!(got.valid, flow.valid);
        for i in 0..5 {
            assert_eq!(got.u[i], flow.u[i]);
            assert_eq!(got.v[i], flow.v[i]);
        }
    }

    #[test]
    fn quantization_drops_two_bits() {
        let img = GrayImage::new(2, 1, vec![255, 7]);
        assert_eq!(img.quantize_6bit().data, vec![63, 1]);
    }
}
