use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use supertransport::exec::Exec;
use supertransport::flows::trotter_table;
use supertransport::manifold_forms::{ScalarField, VectorField};
use supertransport::ode::OdeConfig;
use supertransport::random;
use supertransport::transport::roundtrip_residual;

fn modes() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn trotter(c: &mut Criterion) {
    let rot = VectorField::new(vec![ScalarField::var(2, 1).scale(-1.0), ScalarField::var(2, 0)]).unwrap();
    let tr = VectorField::coordinate(2, 0);
    let cfg = OdeConfig::with_tol(1e-10);
    let mut g = c.benchmark_group("trotter_table");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| trotter_table(&rot, &tr, 1.0, &[1.0, 0.0], 10, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

fn roundtrip(c: &mut Criterion) {
    let mut rng = random::rng(3);
    let conn = random::connection(&mut rng, 2, 2, 1, 2, true);
    let probes = vec![vec![0.25, -0.25], vec![0.0, 0.5]];
    let fields = vec![random::vector_field(&mut rng, 2, 1)];
    let mut g = c.benchmark_group("connection_roundtrip");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| roundtrip_residual(&conn, &probes, &fields, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, trotter, roundtrip);
criterion_main!(benches);
