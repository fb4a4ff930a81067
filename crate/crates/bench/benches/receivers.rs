use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mcpnc::pmf::SymbolPmf;
use mcpnc::receiver_bps::{bps_estimate, BpsConfig};
use mcpnc::receiver_fg::fg_pnc_iteration;
use mcpnc::receiver_vb::vb_pnc_iteration;
use mcpnc_bench::frame;

fn bench_eks(c: &mut Criterion) {
    let mut group = c.benchmark_group("eks_smooth");
    for &d in &[1usize, 4, 20] {
        let f = frame(d, 256, 0.01, 7);
        // All-slot soft stats through the FG projection of a uniform PMF.
        let pd = SymbolPmf::uniform(d, 256, 16);
        let stats =
            mcpnc::receiver_fg::project_soft_stats(&pd, &f.constellation, &f.cov, &f.pilots)
                .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| mcpnc::eks::smooth(black_box(&f.received), &stats, &f.cov).unwrap())
        });
    }
    group.finish();
}

fn bench_iterations(c: &mut Criterion) {
    let f = frame(4, 256, 0.01, 11);
    let pd = SymbolPmf::uniform(4, 256, 16);
    c.bench_function("fg_pnc_iteration_d4_n256", |b| {
        b.iter(|| {
            fg_pnc_iteration(
                black_box(&f.received),
                &pd,
                &f.cov,
                &f.pilots,
                &f.constellation,
            )
            .unwrap()
        })
    });
    c.bench_function("vb_pnc_iteration_d4_n256", |b| {
        b.iter(|| {
            vb_pnc_iteration(
                black_box(&f.received),
                &pd,
                &f.cov,
                &f.pilots,
                &f.constellation,
            )
            .unwrap()
        })
    });
}

fn bench_bps(c: &mut Criterion) {
    let f = frame(1, 4096, 0.01, 13);
    let config = BpsConfig::for_order(16);
    c.bench_function("bps_estimate_n4096_b32", |b| {
        b.iter(|| {
            bps_estimate(
                black_box(f.received.row(0)),
                &f.constellation,
                &config,
                Some(0.0),
            )
        })
    });
}

criterion_group!(benches, bench_eks, bench_iterations, bench_bps);
criterion_main!(benches);
