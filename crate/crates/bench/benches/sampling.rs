use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::Rng;
use rpcq::samplers::{rpcholesky_optimized, rpcholesky_rejection, MultiStart};
use rpcq::{trial_rng, CholeskyState, Kernel, PeriodicSobolev, Point, SamplerConfig, TensorProduct, UnitBox};

fn kernel3() -> TensorProduct<PeriodicSobolev> {
    TensorProduct::new(PeriodicSobolev::new(3).unwrap(), 3).unwrap()
}

fn random_points(n: usize, d: usize, seed: u64) -> Vec<Point> {
    let mut rng = trial_rng(seed, 0);
    (0..n).map(|_| Point::new((0..d).map(|_| rng.gen::<f64>()).collect())).collect()
}

fn kernel_eval(c: &mut Criterion) {
    let k = kernel3();
    let pts = random_points(256, 3, 1);
    c.bench_function("sobolev3d_eval_256", |b| {
        b.iter(|| pts.windows(2).map(|w| k.eval(&w[0], &w[1])).sum::<f64>())
    });
}

fn residual(c: &mut Criterion) {
    let mut state = CholeskyState::new(kernel3());
    for p in random_points(150, 3, 2) {
        state.push(p).unwrap();
    }
    let probes = random_points(64, 3, 3);
    c.bench_function("residual_diag_n150", |b| {
        b.iter(|| probes.iter().map(|p| state.residual_diag(p).unwrap()).sum::<f64>())
    });
    c.bench_function("residual_diag_batch_n150", |b| b.iter(|| state.residual_diag_batch(&probes)));
    c.bench_function("extend_n150", |b| {
        b.iter_batched(
            || state.clone(),
            |mut s| {
                let r = s.residual_kernel(&probes[0]).unwrap();
                s.extend(probes[0].clone(), r).unwrap();
                s
            },
            BatchSize::SmallInput,
        )
    });
}

fn samplers(c: &mut Criterion) {
    let m = UnitBox::new(3).unwrap();
    let k = kernel3();
    let cfg = SamplerConfig { n: 100, ..SamplerConfig::default() };
    let mut g = c.benchmark_group("sample_3d_n100");
    g.sample_size(10);
    let mut seed = 0;
    g.bench_function("rejection", |b| {
        b.iter(|| {
            seed += 1;
            rpcholesky_rejection(&m, &k, &cfg, &mut trial_rng(7, seed)).unwrap()
        })
    });
    g.bench_function("optimized", |b| {
        b.iter(|| {
            seed += 1;
            rpcholesky_optimized(&m, &k, &cfg, &mut trial_rng(7, seed), &MultiStart::default()).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, kernel_eval, residual, samplers);
criterion_main!(benches);
