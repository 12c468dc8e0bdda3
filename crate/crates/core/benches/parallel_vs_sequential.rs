use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slimnoc::layout::{make_layout, LayoutKind};
use slimnoc::presets::preset;
use slimnoc::route::build_tables;
use slimnoc::sim::{sweep, SimConfig};
use slimnoc::topo::{all_pairs_distances, slim_noc};
use slimnoc::wiring::{crossing_counts, plan_wires};
use slimnoc::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn graph(c: &mut Criterion) {
    let t = slim_noc(13, 8).unwrap();
    let mut g = c.benchmark_group("graph_q13");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("all_pairs_distances", name), &exec, |b, &e| {
            b.iter(|| all_pairs_distances(&t, e))
        });
        g.bench_with_input(BenchmarkId::new("routing_tables", name), &exec, |b, &e| {
            b.iter(|| build_tables(&t, e).unwrap())
        });
    }
    g.finish();
}

fn wiring(c: &mut Criterion) {
    let t = slim_noc(13, 8).unwrap();
    let l = make_layout(&t, LayoutKind::Subgroup).unwrap();
    let mut g = c.benchmark_group("wiring_q13");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("plan_and_count", name), &exec, |b, &e| {
            b.iter(|| crossing_counts(&l, &plan_wires(&t, &l, 128, e), e))
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let net = preset("sn_subgr").unwrap().network(Exec::Parallel).unwrap();
    let cfg = SimConfig {
        warmup_cycles: 200,
        measure_cycles: 2_000,
        ..SimConfig::default()
    };
    let rates = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
    let mut g = c.benchmark_group("sweep_sn_s");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("six_rates", name), &exec, |b, &e| {
            b.iter(|| sweep(&net, &cfg, &rates, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, graph, wiring, simulation);
criterion_main!(benches);
