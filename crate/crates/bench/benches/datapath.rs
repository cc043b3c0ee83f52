use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use mrfsim_core::spu::{update_rv, LfsrState, ModelSlice, ProbLut};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn bench_update_rv(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(1);
    let labels = 49usize;
    let pairwise: Vec<u16> = (0..labels * labels)
        .map(|i| u16::from(i % labels != i / labels))
        .collect();
    let slice = ModelSlice {
        labels,
        alpha: 6,
        beta: 6,
        pairwise: &pairwise,
    };
    let singleton: Vec<u8> = (0..labels).map(|_| rng.gen_range(0..=63)).collect();
    let neighbors = [3u8, 17, 44, 8];
    let lut = ProbLut::build(1.0).unwrap();
    let mut lfsr = LfsrState::new(0x1234).unwrap();

    let mut group = c.benchmark_group("spu");
    group.throughput(Throughput::Elements(labels as u64));
    group.bench_function("update_rv_49_labels", |b| {
        b.iter(|| update_rv(&slice, &neighbors, &singleton, &lut, &mut lfsr));
    });
    group.finish();
}

fn bench_lut_build(c: &mut Criterion) {
    c.bench_function("prob_lut_build", |b| {
        let mut t = 0.5f64;
        b.iter(|| {
            t = if t > 4.0 { 0.5 } else { t + 0.001 };
            ProbLut::build(t).unwrap()
        });
    });
}

fn bench_lfsr(c: &mut Criterion) {
    let mut group = c.benchmark_group("lfsr");
    group.throughput(Throughput::Elements(1024));
    group.bench_function("advance_1024", |b| {
        let mut s = LfsrState::new(1).unwrap();
        b.iter(|| {
            for _ in 0..1024 {
                s.advance();
            }
            s.rand12()
        });
    });
    group.finish();
}

criterion_group!(benches, bench_update_rv, bench_lut_build, bench_lfsr);
criterion_main!(benches);
