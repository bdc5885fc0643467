use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dfo_bounds::ball;
use dfo_bounds::geometry::{self, PoisednessKind};
use dfo_bounds::par::Execution;
use dfo_bounds::poly::QuadraticPolynomial;
use dfo_bounds::verify;
use nalgebra::{DMatrix, DVector};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn campaign(c: &mut Criterion) {
    let configs = verify::parse_campaign_config(
        r#"{"function": ["quartic", "rosenbrock"], "kind": ["LIN_DET", "QUAD_DET", "MFN"], "n": 2, "delta": [0.5, 0.1], "seed": [0, 1, 2, 3], "sample_count": 500}"#,
    )
    .expect("config");
    let mut group = c.benchmark_group("campaign_48_trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| verify::run_campaign(&configs, exec)));
    }
    group.finish();
}

fn certificate(c: &mut Criterion) {
    let set = geometry::generate_poised_set(PoisednessKind::Mfn, 6, 20, 1.0, 50.0, 0).expect("set");
    let mut group = c.benchmark_group("certify_mfn_n6_p20");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| geometry::lambda_poisedness_with(exec, &set, PoisednessKind::Mfn))
        });
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let m = QuadraticPolynomial::new(
        0.3,
        DVector::from_vec(vec![1.0, -0.5]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, -2.0]),
    )
    .expect("poly");
    let mut group = c.benchmark_group("grid_oracle_n2");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, "res=1e-3"), &1e-3, |b, &res| {
            b.iter(|| ball::grid_oracle_with(exec, &m, &[0.0, 0.0], 1.0, res))
        });
    }
    group.finish();
}

criterion_group!(benches, campaign, certificate, grid);
criterion_main!(benches);
