//! Hot-path benchmarks: tridiagonal solves, quasilinear assembly, nodal
//! noise evaluation (transform vs direct summation), and whole scheme steps.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use spde_bench::{noise, path, space, state};
use spde_core::problems::SpdeProblem;
use spde_core::schemes::{NewtonConfig, Stepper};
use spde_core::wiener::NodalEvaluator;

fn tridiag_solve(c: &mut Criterion) {
    let space = space(4096);
    let system = space.mass().add_scaled(1.0 / 1024.0, &space.stiffness());
    let rhs: Vec<f64> = (0..4096).map(|i| (i as f64 * 0.37).sin()).collect();

    c.bench_function("factor_4096", |b| {
        b.iter(|| black_box(&system).factor().expect("regular"))
    });
    let factored = system.factor().expect("regular");
    c.bench_function("solve_4096", |b| b.iter(|| factored.solve(black_box(&rhs))));
}

fn quasilinear_assembly(c: &mut Criterion) {
    let space = space(4096);
    let x = state(&space);
    let mut stiff = space.stiffness();
    let mut jac = space.stiffness();
    c.bench_function("assemble_pair_4096", |b| {
        b.iter(|| {
            SpdeProblem::Quasilinear.drift_pair_into(
                black_box(&space),
                black_box(&x),
                &mut stiff,
                &mut jac,
            )
        })
    });
}

fn noise_evaluation(c: &mut Criterion) {
    let space = space(1024);
    let (spec, transform) = noise(&space, 1024);
    let direct = NodalEvaluator::direct(&spec, &space);
    let w = path(&spec, 4);
    let mut out = vec![0.0; 1024];

    let mut scratch = transform.make_scratch();
    c.bench_function("noise_transform_1024", |b| {
        b.iter(|| transform.increment_at_nodes(black_box(&w), 0, &mut scratch, &mut out))
    });
    let mut scratch = direct.make_scratch();
    c.bench_function("noise_direct_1024", |b| {
        b.iter(|| direct.increment_at_nodes(black_box(&w), 0, &mut scratch, &mut out))
    });
}

fn scheme_steps(c: &mut Criterion) {
    let space = space(256);
    let x = state(&space);
    let dw = vec![1e-3; 256];
    let dw_prev = vec![-5e-4; 256];

    for problem in [SpdeProblem::Heat, SpdeProblem::Quasilinear] {
        let tag = match problem {
            SpdeProblem::Heat => "heat",
            SpdeProblem::Quasilinear => "quasilinear",
        };
        let mut stepper = Stepper::new(&space, problem, 1.0, 1.0 / 512.0, NewtonConfig::default())
            .expect("stepper");
        c.bench_function(&format!("bem_step_{tag}_256"), |b| {
            b.iter(|| stepper.bem_step(black_box(&x), &dw, 1).expect("step"))
        });
        let mut stepper = Stepper::new(&space, problem, 1.0, 1.0 / 512.0, NewtonConfig::default())
            .expect("stepper");
        c.bench_function(&format!("bdf2_step_{tag}_256"), |b| {
            b.iter(|| {
                stepper
                    .bdf2_step(black_box(&x), &x, &dw, &dw_prev, 2)
                    .expect("step")
            })
        });
    }
}

criterion_group!(
    benches,
    tridiag_solve,
    quasilinear_assembly,
    noise_evaluation,
    scheme_steps
);
criterion_main!(benches);
