//! Double-precision reference sampler: the quality oracle the fixed-point
//! datapath is compared against. Same chromatic schedule and boundary
//! conventions, but energies stay unclamped, probabilities are exact
//! softmax weights, and sampling uses a seeded 64-bit generator.

use crate::model::{Color, MrfModel};
use crate::uq::LabelTrace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct ReferenceOutput {
    pub final_labels: Vec<u8>,
    pub mode_labels: Vec<u8>,
    pub trace: LabelTrace,
}

/// Run the reference sampler for `iterations`, collecting a trace from
/// `collection_start`. Mode labels are computed over the collected window.
pub fn reference_sampler(
    model: &MrfModel,
    iterations: usize,
    collection_start: usize,
    seed: u64,
) -> ReferenceOutput {
    assert!(collection_start < iterations);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (model.width, model.height);
    let mut labels = vec![0u8; w * h];
    let mut trace = LabelTrace::new(w * h, collection_start);

    // Integer energies: exp(-(E - E_min) / T) via a table over the scaled
    // energy range.
    let max_pairwise = (0..model.labels)
        .flat_map(|l| model.pairwise_row(l))
        .copied()
        .max()
        .unwrap_or(0);
    let max_energy =
        model.alpha as usize * 63 + model.beta as usize * 4 * max_pairwise as usize + 1;
    let mut exp_table = vec![0.0f64; max_energy + 1];
    let mut table_t = f64::NAN;

    let mut energies = vec![0u64; model.labels];
    let mut weights = vec![0.0f64; model.labels];

    for iteration in 0..iterations {
        let t = model.temperature.at(iteration);
        if t != table_t {
            for (e, slot) in exp_table.iter_mut().enumerate() {
                *slot = (-(e as f64) / t).exp();
            }
            table_t = t;
        }
        for color in [Color::Black, Color::White] {
            for r in 0..h {
                let start = (color.parity() + r) % 2;
                let mut c = start;
                while c < w {
                    let mut e_min = u64::MAX;
                    for (l, slot) in energies.iter_mut().enumerate() {
                        let row = model.pairwise_row(l);
                        let mut neighborhood = 0u64;
                        if r > 0 {
                            neighborhood += u64::from(row[labels[(r - 1) * w + c] as usize]);
                        }
                        if r + 1 < h {
                            neighborhood += u64::from(row[labels[(r + 1) * w + c] as usize]);
                        }
                        if c > 0 {
                            neighborhood += u64::from(row[labels[r * w + c - 1] as usize]);
                        }
                        if c + 1 < w {
                            neighborhood += u64::from(row[labels[r * w + c + 1] as usize]);
                        }
                        let e = u64::from(model.alpha) * u64::from(model.singleton_energy(r, c, l))
                            + u64::from(model.beta) * neighborhood;
                        *slot = e;
                        e_min = e_min.min(e);
                    }
                    let mut total = 0.0f64;
                    for (wgt, &e) in weights.iter_mut().zip(energies.iter()) {
                        *wgt = exp_table[(e - e_min) as usize];
                        total += *wgt;
                    }
                    let u: f64 = rng.gen::<f64>() * total;
                    let mut cumulative = 0.0f64;
                    let mut picked = model.labels - 1;
                    for (l, &wgt) in weights.iter().enumerate() {
                        cumulative += wgt;
                        if cumulative > u {
                            picked = l;
                            break;
                        }
                    }
                    labels[r * w + c] = picked as u8;
                    c += 2;
                }
            }
        }
        if iteration >= collection_start {
            trace.push_iteration(&labels);
        }
    }

    let hist = crate::uq::Histogram::from_trace(&trace, model.labels);
    let mode_labels = hist.mode_labels().expect("non-empty collection window");
    ReferenceOutput {
        final_labels: labels,
        mode_labels,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Smoothness, TemperatureSchedule};

    fn flat_model(width: usize, height: usize, labels: usize, beta: u32) -> MrfModel {
        MrfModel::new(
            width,
            height,
            labels,
            0,
            beta,
            TemperatureSchedule::Constant(1.0),
            vec![0; width * height],
            vec![0; width * height],
            (0..labels as i32).map(|l| (0, l)).collect(),
            Smoothness::Potts,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_two_label_split() {
        // alpha = beta = 0: both labels weigh exp(0), a fair coin.
        let model = flat_model(20, 20, 2, 0);
        let out = reference_sampler(&model, 250, 0, 42);
        let mut ones = 0u64;
        let mut total = 0u64;
        for it in 0..out.trace.iterations() {
            for &l in out.trace.iteration(it) {
                ones += u64::from(l);
                total += 1;
            }
        }
        // 3 sigma around 1/2 for 100k Bernoulli trials.
        let p = ones as f64 / total as f64;
        let sigma = 0.5 / (total as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * sigma, "p = {p}");
    }

    #[test]
    fn beta_zero_matches_closed_form_softmax() {
        // With beta = 0 each RV is independent; marginals are the softmax of
        // its singleton energies.
        let width = 8;
        let height = 8;
        let labels = 4;
        let mut singleton2 = vec![0u8; width * height];
        for (i, v) in singleton2.iter_mut().enumerate() {
            *v = (i % 3) as u8;
        }
        let model = MrfModel::new(
            width,
            height,
            labels,
            2,
            0,
            TemperatureSchedule::Constant(1.5),
            vec![0; width * height],
            singleton2,
            vec![(0, 0), (1, 0), (0, 1), (1, 1)],
            Smoothness::Potts,
        )
        .unwrap();
        let iterations = 4000;
        let out = reference_sampler(&model, iterations, 0, 7);

        for (r, c) in [(2, 2), (5, 3), (3, 6)] {
            let rv = r * width + c;
            let energies: Vec<f64> = (0..labels)
                .map(|l| 2.0 * f64::from(model.singleton_energy(r, c, l)))
                .collect();
            let weights: Vec<f64> = energies.iter().map(|e| (-e / 1.5).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut counts = vec![0u64; labels];
            for it in 0..out.trace.iterations() {
                counts[out.trace.iteration(it)[rv] as usize] += 1;
            }
            for l in 0..labels {
                let p = weights[l] / total;
                let phat = counts[l] as f64 / iterations as f64;
                let sigma = (p * (1.0 - p) / iterations as f64).sqrt();
                assert!(
                    (phat - p).abs() < 4.0 * sigma + 1e-9,
                    "rv ({r},{c}) label {l}: p = {p:.4}, phat = {phat:.4}"
                );
            }
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let model = flat_model(10, 10, 3, 1);
        let a = reference_sampler(&model, 50, 10, 9);
        let b = reference_sampler(&model, 50, 10, 9);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.final_labels, b.final_labels);
        let c = reference_sampler(&model, 50, 10, 10);
        assert_ne!(a.trace, c.trace);
    }
}
