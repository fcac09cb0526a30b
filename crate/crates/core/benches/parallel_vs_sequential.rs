use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qpdwire::calibration::calibrate_with;
use qpdwire::channel::depolarizing;
use qpdwire::experiment::{run_error_scaling, ExperimentConfig};
use qpdwire::qpd::estimate_expectation;
use qpdwire::rng::stream_rng;
use qpdwire::twirl::{self, twirl_with};
use qpdwire::{Channel, DensityMatrix, Execution, PauliOperator, QpdPlan};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn twirl_two_qubit(c: &mut Criterion) {
    let mut rng = stream_rng(1, &[]);
    let channel = Channel::random(2, 4, &mut rng).unwrap();
    let ensemble = twirl::two_design(2).unwrap();
    let mut group = c.benchmark_group("twirl_two_design_n2");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| twirl_with(&channel, &ensemble, exec).unwrap())
        });
    }
    group.finish();
}

fn estimator(c: &mut Criterion) {
    let channel = depolarizing(1, 0.7).unwrap();
    let plan = QpdPlan::build(&channel, &twirl::two_design(1).unwrap(), 0.7).unwrap();
    let rho = DensityMatrix::basis_state(1, 0);
    let obs = PauliOperator::from_label("Z").unwrap();
    let mut group = c.benchmark_group("estimate_1e6_shots");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| estimate_expectation(&plan, &rho, &obs, 1_000_000, 3, exec).unwrap())
        });
    }
    group.finish();
}

fn calibration(c: &mut Criterion) {
    let channel = depolarizing(2, 0.8).unwrap();
    let ensemble = twirl::two_design(2).unwrap();
    let mut group = c.benchmark_group("calibrate_two_design_n2");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| calibrate_with(&channel, &ensemble, 100_000, 4, exec).unwrap())
        });
    }
    group.finish();
}

fn error_scaling(c: &mut Criterion) {
    let cfg = ExperimentConfig::from_json_str(
        r#"{"schema_version":1,"kind":"error_scaling","fidelities":[0.7],"thetas":[0.15],
            "num_states":40,"shots":[100,1000,10000,100000],"seed":5}"#,
    )
    .unwrap();
    let mut group = c.benchmark_group("error_scaling_cell");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_error_scaling(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, twirl_two_qubit, estimator, calibration, error_scaling);
criterion_main!(benches);
