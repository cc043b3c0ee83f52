use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use mrfsim_bench::{bench_config, motion_fixture};
use mrfsim_core::uq::{trace_lmem_sim, transport, EvictionRecord};
use mrfsim_core::{LabelTrace, Simulation};

fn bench_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("iteration");
    for (w, h) in [(105, 95), (210, 190)] {
        let model = motion_fixture(w, h);
        group.throughput(Throughput::Elements((w * h) as u64));
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{w}x{h}")),
            &model,
            |b, m| {
                let mut sim = Simulation::new(m, bench_config(1_000_000), false).unwrap();
                b.iter(|| sim.run_iteration());
            },
        );
    }
    group.finish();
}

fn bench_trace_replay(c: &mut Criterion) {
    let model = motion_fixture(105, 95);
    let config = bench_config(60);
    let out = Simulation::new(&model, config, true).unwrap().run();
    let trace = out.trace.unwrap();
    let mut group = c.benchmark_group("trace_lmem_sim");
    group.throughput(Throughput::Elements(
        (trace.n_rvs * trace.iterations()) as u64,
    ));
    for pairs in [1usize, 2, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(pairs), &pairs, |b, &p| {
            b.iter(|| trace_lmem_sim(&trace, p, model.labels));
        });
    }
    group.finish();
}

fn bench_transport(c: &mut Criterion) {
    let records: Vec<Vec<EvictionRecord>> = (0..16u32)
        .map(|spe| {
            (0..512)
                .map(|i| EvictionRecord {
                    rv_address: spe * 10_000 + i,
                    label: (i % 49) as u8,
                    count: (i % 1023 + 1) as u16,
                })
                .collect()
        })
        .collect();
    c.bench_function("transport_8k_records", |b| {
        b.iter(|| transport(&records, 16));
    });
}

fn bench_trace_cdf(c: &mut Criterion) {
    let model = motion_fixture(105, 95);
    let out = Simulation::new(&model, bench_config(60), true)
        .unwrap()
        .run();
    let trace: &LabelTrace = out.trace.as_ref().unwrap();
    c.bench_function("unique_label_cdf", |b| {
        b.iter(|| {
            mrfsim_core::unique_label_cdf(trace, 0..trace.iterations(), model.labels).unwrap()
        });
    });
}

criterion_group!(
    benches,
    bench_iteration,
    bench_trace_replay,
    bench_transport,
    bench_trace_cdf
);
criterion_main!(benches);
