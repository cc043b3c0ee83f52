//! Deterministic synthetic scenes with known ground truth, used by tests
//! and for demo runs without dataset files.

use super::io::{DisparityGt, FlowGt, GrayImage};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A lightly smoothed full-contrast 6-bit noise texture. Smoothing keeps
/// block matching well-posed while leaving every pixel distinctive.
pub fn textured_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut state = seed.wrapping_mul(0x5851_f42d_4c95_7f2d) ^ 0x14057b7ef767814f;
    let noise: Vec<u8> = (0..width * height)
        .map(|_| (splitmix64(&mut state) & 0x3f) as u8)
        .collect();
    let mut data = vec![0u8; width * height];
    for r in 0..height {
        for c in 0..width {
            let mut sum = 2 * u32::from(noise[r * width + c]);
            let mut weight = 2u32;
            for (dr, dc) in [(0i64, 1i64), (1, 0)] {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < height as i64 && nc < width as i64 {
                    sum += u32::from(noise[nr as usize * width + nc as usize]);
                    weight += 1;
                }
            }
            data[r * width + c] = (sum / weight) as u8;
        }
    }
    GrayImage::new(width, height, data)
}

fn shift_clamped(img: &GrayImage, dy: i32, dx: i32) -> GrayImage {
    let mut data = vec![0u8; img.width * img.height];
    for r in 0..img.height {
        for c in 0..img.width {
            let sr = (r as i64 - i64::from(dy)).clamp(0, img.height as i64 - 1) as usize;
            let sc = (c as i64 - i64::from(dx)).clamp(0, img.width as i64 - 1) as usize;
            data[r * img.width + c] = img.at(sr, sc);
        }
    }
    GrayImage::new(img.width, img.height, data)
}

/// A frame pair where the whole scene moves by (dy, dx), plus ground truth.
/// Pixels whose correspondence falls off the frame are marked invalid.
pub fn shifted_pair(
    width: usize,
    height: usize,
    motion: (i32, i32),
    seed: u64,
) -> (GrayImage, GrayImage, FlowGt) {
    let (dy, dx) = motion;
    let frame_t = textured_image(width, height, seed);
    let frame_t1 = shift_clamped(&frame_t, dy, dx);
    let mut valid = vec![true; width * height];
    for r in 0..height {
        for c in 0..width {
            let (tr, tc) = (r as i64 + i64::from(dy), c as i64 + i64::from(dx));
            if tr < 0 || tr >= height as i64 || tc < 0 || tc >= width as i64 {
                valid[r * width + c] = false;
            }
        }
    }
    let gt = FlowGt {
        width,
        height,
        u: vec![dx as f32; width * height],
        v: vec![dy as f32; width * height],
        valid,
    };
    (frame_t, frame_t1, gt)
}

/// A rectified stereo pair with constant disparity under the leftward
/// convention: left(r, c) = right(r, c + d). Columns whose correspondence
/// leaves the frame are invalid.
pub fn stereo_pair(
    width: usize,
    height: usize,
    disparity: usize,
    seed: u64,
) -> (GrayImage, GrayImage, DisparityGt) {
    let right = textured_image(width, height, seed);
    let mut left = vec![0u8; width * height];
    for r in 0..height {
        for c in 0..width {
            let sc = (c + disparity).min(width - 1);
            left[r * width + c] = right.at(r, sc);
        }
    }
    let mut valid = vec![true; width * height];
    for r in 0..height {
        for c in 0..width {
            if c < disparity || c + disparity >= width {
                valid[r * width + c] = false;
            }
        }
    }
    let gt = DisparityGt {
        width,
        height,
        d: vec![disparity as f32; width * height],
        valid,
    };
    (right, GrayImage::new(width, height, left), gt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn texture_is_six_bit_and_deterministic() {
        let a = textured_image(40, 30, 99);
        let b = textured_image(40, 30, 99);
        assert_eq!(a, b);
        assert!(a.data.iter().all(|&v| v <= 63));
        // Healthy contrast: many distinct values.
        let mut seen = [false; 64];
        a.data.iter().for_each(|&v| seen[v as usize] = true);
        assert!(seen.iter().filter(|&&s| s).count() > 32);
    }

    #[test]
    fn shifted_pair_correspondence() {
        let (t, t1, gt) = shifted_pair(20, 14, (1, -2), 4);
        for r in 0..14 {
            for c in 0..20 {
                if gt.valid[r * 20 + c] {
                    assert_eq!(t.at(r, c), t1.at(r + 1, c - 2));
                }
            }
        }
    }

    #[test]
    fn stereo_pair_correspondence() {
        let (right, left, gt) = stereo_pair(24, 10, 6, 21);
        for r in 0..10 {
            for c in 0..24 {
                if gt.valid[r * 24 + c] {
                    assert_eq!(right.at(r, c), left.at(r, c - 6));
                }
            }
        }
    }
}
