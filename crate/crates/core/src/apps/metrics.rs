//! Ground-truth metrics and mode-output extraction.

use super::io::{DisparityGt, FlowGt};
use super::{DisparityMap, FlowField};
use crate::uq::{Histogram, LabelTrace, LogError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension mismatch: estimate {est_w}x{est_h}, ground truth {gt_w}x{gt_h}")]
    DimensionMismatch {
        est_w: usize,
        est_h: usize,
        gt_w: usize,
        gt_h: usize,
    },
    #[error("no valid ground-truth pixels")]
    NoValidPixels,
    #[error(transparent)]
    Log(#[from] LogError),
}

/// Mean end-point error over valid ground-truth pixels.
pub fn epe(flow: &FlowField, gt: &FlowGt) -> Result<f64, MetricError> {
    if (flow.width, flow.height) != (gt.width, gt.height) {
        return Err(MetricError::DimensionMismatch {
            est_w: flow.width,
            est_h: flow.height,
            gt_w: gt.width,
            gt_h: gt.height,
        });
    }
    let mut sum = 0.0f64;
    let mut n = 0u64;
    for i in 0..flow.dx.len() {
        if !gt.valid[i] {
            continue;
        }
        let du = f64::from(flow.dx[i]) - f64::from(gt.u[i]);
        let dv = f64::from(flow.dy[i]) - f64::from(gt.v[i]);
        sum += (du * du + dv * dv).sqrt();
        n += 1;
    }
    if n == 0 {
        return Err(MetricError::NoValidPixels);
    }
    Ok(sum / n as f64)
}

/// Percentage of valid pixels whose disparity error exceeds the threshold.
pub fn bad_pixel(
    disp: &DisparityMap,
    gt: &DisparityGt,
    threshold: f64,
) -> Result<f64, MetricError> {
    if (disp.width, disp.height) != (gt.width, gt.height) {
        return Err(MetricError::DimensionMismatch {
            est_w: disp.width,
            est_h: disp.height,
            gt_w: gt.width,
            gt_h: gt.height,
        });
    }
    let mut bad = 0u64;
    let mut n = 0u64;
    for i in 0..disp.d.len() {
        if !gt.valid[i] {
            continue;
        }
        n += 1;
        if (f64::from(disp.d[i]) - f64::from(gt.d[i])).abs() > threshold {
            bad += 1;
        }
    }
    if n == 0 {
        return Err(MetricError::NoValidPixels);
    }
    Ok(100.0 * bad as f64 / n as f64)
}

/// Per-RV mode labels over a reconstructed histogram.
pub fn mode_output(histogram: &Histogram) -> Result<Vec<u8>, MetricError> {
    Ok(histogram.mode_labels()?)
}

/// Per-RV mode labels straight from a trace window.
pub fn mode_output_from_trace(
    trace: &LabelTrace,
    labels: usize,
    window: std::ops::Range<usize>,
) -> Result<Vec<u8>, MetricError> {
    if window.is_empty() || window.end > trace.iterations() {
        return Err(MetricError::Log(LogError::EmptyWindow));
    }
    let mut hist = Histogram::new(trace.n_rvs, labels);
    for it in window {
        for (rv, &label) in trace.iteration(it).iter().enumerate() {
            hist.add(rv, label as usize, 1);
        }
    }
    Ok(hist.mode_labels()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow_of(width: usize, height: usize, dx: i8, dy: i8) -> FlowField {
        FlowField {
            width,
            height,
            dx: vec![dx; width * height],
            dy: vec![dy; width * height],
        }
    }

    #[test]
    fn epe_examples() {
        let gt = FlowGt {
            width: 1,
            height: 1,
            u: vec![0.0],
            v: vec![0.0],
            valid: vec![true],
        };
        assert_eq!(epe(&flow_of(1, 1, 0, 0), &gt).unwrap(), 0.0);
        // Off by (3, 4) gives the 3-4-5 distance.
        assert_eq!(epe(&flow_of(1, 1, 3, -4), &gt).unwrap(), 5.0);
    }

    #[test]
    fn epe_excludes_invalid() {
        let gt = FlowGt {
            width: 2,
            height: 1,
            u: vec![0.0, 100.0],
            v: vec![0.0, 100.0],
            valid: vec![true, false],
        };
        assert_eq!(epe(&flow_of(2, 1, 0, 0), &gt).unwrap(), 0.0);
        let none = FlowGt {
            valid: vec![false, false],
            ..gt.clone()
        };
        assert!(matches!(
            epe(&flow_of(2, 1, 0, 0), &none),
            Err(MetricError::NoValidPixels)
        ));
    }

    #[test]
    fn epe_rejects_dimension_mismatch() {
        let gt = FlowGt {
            width: 3,
            height: 1,
            u: vec![0.0; 3],
            v: vec![0.0; 3],
            valid: vec![true; 3],
        };
        assert!(matches!(
            epe(&flow_of(2, 1, 0, 0), &gt),
            Err(MetricError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bad_pixel_examples() {
        let gt = DisparityGt {
            width: 2,
            height: 1,
            d: vec![3.0, 3.0],
            valid: vec![true, true],
        };
        let exact = DisparityMap {
            width: 2,
            height: 1,
            d: vec![3, 3],
        };
        assert_eq!(bad_pixel(&exact, &gt, 1.0).unwrap(), 0.0);
        let off = DisparityMap {
            width: 2,
            height: 1,
            d: vec![5, 5],
        };
        assert_eq!(bad_pixel(&off, &gt, 1.0).unwrap(), 100.0);
        let half = DisparityMap {
            width: 2,
            height: 1,
            d: vec![3, 5],
        };
        assert_eq!(bad_pixel(&half, &gt, 1.0).unwrap(), 50.0);
    }

    #[test]
    fn mode_examples() {
        let mut hist = Histogram::new(1, 8);
        hist.add(0, 3, 900);
        hist.add(0, 5, 100);
        assert_eq!(mode_output(&hist).unwrap(), vec![3]);

        let mut trace = LabelTrace::new(2, 0);
        for _ in 0..10 {
            trace.push_iteration(&[4, 1]);
        }
        assert_eq!(
            mode_output_from_trace(&trace, 8, 0..10).unwrap(),
            vec![4, 1]
        );
        assert!(mode_output_from_trace(&trace, 8, 0..0).is_err());
    }

    #[test]
    fn mode_ties_take_lowest_label() {
        let mut hist = Histogram::new(1, 4);
        hist.add(0, 2, 50);
        hist.add(0, 1, 50);
        assert_eq!(mode_output(&hist).unwrap(), vec![1]);
    }
}
