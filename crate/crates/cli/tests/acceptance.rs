//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rpcq::domains::quadrature_grid;
use rpcq::lowrank::nystrom_direct;
use rpcq::samplers::{rpcholesky_optimized, rpcholesky_rejection, MultiStart};
use rpcq::theory::{check_bound, log_log_slope, DEFAULT_TERMS};
use rpcq::{
    trial_rng, CholeskyState, DiscreteSpace, EigenvalueSequence, Gaussian, GramKernel, Kernel, Matern52,
    PeriodicSobolev, Point, SamplerConfig, SamplerKind, TensorProduct, UnitBox,
};
use rpcq_cli::check::{first_two_frequencies, oracle_problem, total_variation};
use rpcq_cli::experiments::run_crescent_demo;
use rpcq_cli::{run_benchmark, run_check, ExperimentConfig};

// Tolerances.
const TV_LIMIT: f64 = 0.02;
const ORACLE_RUNS: usize = 100_000;
const NYSTROM_REL_TOL: f64 = 1e-8;
const DECAY_SLOPE_MAX: f64 = -2.5;
const IID_RATIO_MIN: f64 = 10.0;
const SPEEDUP_MIN: f64 = 5.0;
const SPEEDUP_TRIALS: u64 = 10;
const ACCEPTANCE_SIGMAS: f64 = 3.0;
const ACCEPTANCE_RUNS: u64 = 200;
const ACCEPTANCE_STEPS: usize = 32;
const ACCEPTANCE_GRID: usize = 4096;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Law of the first two pivots from 2×2 determinants:
/// `P(a, b) = w_a w_b det K[{a,b}] / (Z₁ · Σ_x w_x det K[{a,x}])`.
fn determinant_law(space: &DiscreteSpace, k: &GramKernel) -> Vec<f64> {
    let m = space.len();
    let w = space.weights();
    let det2 = |a: usize, b: usize| {
        DMatrix::from_row_slice(2, 2, &[k.entry(a, a), k.entry(a, b), k.entry(b, a), k.entry(b, b)]).determinant()
    };
    let z1: f64 = (0..m).map(|x| w[x] * k.entry(x, x)).sum();
    let mut p = vec![0.0; m * m];
    for a in 0..m {
        let z2: f64 = (0..m).filter(|&x| x != a).map(|x| w[x] * det2(a, x)).sum();
        for b in (0..m).filter(|&b| b != a) {
            p[a * m + b] = w[a] * k.entry(a, a) / z1 * w[b] * det2(a, b) / z2;
        }
    }
    p
}

fn exactness_oracle() -> Outcome {
    let (space, k) = oracle_problem(11).unwrap();
    let exact = determinant_law(&space, &k);
    let cfg = SamplerConfig { n: 2, trials_max: 25, ..SamplerConfig::default() };
    let idx = |p: &Point| p[0].round() as usize;
    let rej = first_two_frequencies(ORACLE_RUNS, space.len(), 101, |rng| {
        let tr = rpcholesky_rejection(&space, &k, &cfg, rng)?;
        Ok((idx(&tr.nodes[0]), idx(&tr.nodes[1])))
    })
    .unwrap();
    let reopts = std::sync::atomic::AtomicUsize::new(0);
    let opt = first_two_frequencies(ORACLE_RUNS, space.len(), 102, |rng| {
        let tr = rpcholesky_optimized(&space, &k, &cfg, rng, &MultiStart::default())?;
        if !tr.alpha_history.is_empty() {
            reopts.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok((idx(&tr.nodes[0]), idx(&tr.nodes[1])))
    })
    .unwrap();
    let (a, b) = (total_variation(&rej, &exact), total_variation(&opt, &exact));
    let reopts = reopts.into_inner();
    outcome(
        a < TV_LIMIT && b < TV_LIMIT && reopts > 0,
        format!("TV rejection {a:.4}, optimized {b:.4} (limit {TV_LIMIT}); {reopts} optimized runs re-optimized α"),
    )
}

fn nystrom_equivalence() -> Outcome {
    let kernels: Vec<Box<dyn Kernel>> = vec![
        Box::new(PeriodicSobolev::new(1).unwrap()),
        Box::new(PeriodicSobolev::new(3).unwrap()),
        Box::new(TensorProduct::new(PeriodicSobolev::new(2).unwrap(), 3).unwrap()),
        Box::new(Matern52::new(0.7, 2).unwrap()),
        Box::new(Gaussian::new(0.4, 2).unwrap()),
    ];
    let mut rng = trial_rng(12, 0);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let k = &kernels[t % kernels.len()];
        let d = k.dim();
        let size = rng.gen_range(1..=10);
        let mut state = CholeskyState::new(k.as_ref());
        for _ in 0..size {
            let p = Point::new((0..d).map(|_| rng.gen()).collect());
            let r = state.residual_kernel(&p).unwrap();
            if r.d > 1e-10 * k.diag(&p) {
                state.extend(p, r).unwrap();
            }
        }
        let nodes = state.nodes();
        let x = Point::new((0..d).map(|_| rng.gen()).collect());
        let y = Point::new((0..d).map(|_| rng.gen()).collect());
        let iterative = k.eval(&x, &y) - state.residual_cross(&x, &y).unwrap();
        // Independent pseudoinverse by SVD.
        let m = nodes.len();
        let g = DMatrix::from_fn(m, m, |i, j| k.eval(&nodes[i], &nodes[j]));
        let smax = g.norm();
        let pinv = g.pseudo_inverse(1e-12 * smax).unwrap();
        let kx = DMatrix::from_fn(1, m, |_, j| k.eval(&x, &nodes[j]));
        let ky = DMatrix::from_fn(m, 1, |i, _| k.eval(&nodes[i], &y));
        let svd_direct = (&kx * pinv * &ky)[(0, 0)];
        let eig_direct = nystrom_direct(k.as_ref(), nodes, &x, &y);
        let scale = (k.diag(&x) * k.diag(&y)).sqrt();
        worst = worst.max((iterative - svd_direct).abs() / scale).max((iterative - eig_direct).abs() / scale);
    }
    outcome(worst <= NYSTROM_REL_TOL, format!("max relative gap {worst:.2e} over 100 instances (tol {NYSTROM_REL_TOL:e})"))
}

fn bound_sweep() -> Outcome {
    let mut cases = 0;
    let mut failures = Vec::new();
    for s in 1..=3u32 {
        let seq = EigenvalueSequence::sobolev(s, DEFAULT_TERMS).unwrap();
        for r in 1..=50 {
            for delta in [0.5, 0.1, 0.02] {
                cases += 1;
                let rep = check_bound(&seq, r, delta).unwrap();
                if !rep.pass {
                    failures.push(format!("s={s} r={r} δ={delta}"));
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{} failures in {cases} cases {:?}", failures.len(), failures))
}

fn benchmark_decay() -> Outcome {
    let cfg = ExperimentConfig { timing: false, ..ExperimentConfig::default() };
    let rpc = run_benchmark(&cfg).unwrap();
    let iid_cfg = ExperimentConfig { sampler: SamplerKind::Iid, n_grid: vec![128], ..cfg.clone() };
    let iid = run_benchmark(&iid_cfg).unwrap();
    let means: Vec<(usize, f64)> = rpc.summary.iter().map(|s| (s.curve.n, s.curve.mean)).collect();
    let decreasing = means.windows(2).all(|w| w[1].1 < w[0].1);
    let slope = log_log_slope(&means).unwrap_or(f64::NAN);
    let failures: usize = rpc.summary.iter().map(|s| s.failures).sum();
    let ratio = iid.summary[0].curve.mean / means.last().unwrap().1;
    outcome(
        decreasing && slope <= DECAY_SLOPE_MAX && ratio >= IID_RATIO_MIN && failures == 0,
        format!(
            "means {:?}, slope {slope:.3} (max {DECAY_SLOPE_MAX}), iid/rpc at 128 = {ratio:.1} (min {IID_RATIO_MIN}), {failures} failed trials",
            means.iter().map(|m| format!("{:.3e}", m.1)).collect::<Vec<_>>()
        ),
    )
}

fn speedup() -> Outcome {
    let m = UnitBox::new(3).unwrap();
    let k = TensorProduct::new(PeriodicSobolev::new(3).unwrap(), 3).unwrap();
    let cfg = SamplerConfig { n: 200, ..SamplerConfig::default() };
    let (mut t_rej, mut t_opt) = (0.0, 0.0);
    for t in 0..SPEEDUP_TRIALS {
        let a = rpcholesky_rejection(&m, &k, &cfg, &mut trial_rng(13, t));
        let b = rpcholesky_optimized(&m, &k, &cfg, &mut trial_rng(13, t), &MultiStart::default());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                t_rej += a.wall_time;
                t_opt += b.wall_time;
            }
            (a, b) => return outcome(false, format!("sampler failure: {:?} / {:?}", a.err(), b.err())),
        }
    }
    let ratio = t_rej / t_opt;
    outcome(
        ratio >= SPEEDUP_MIN,
        format!("rejection {:.3}s vs optimized {:.3}s per sample, ratio {ratio:.2} (min {SPEEDUP_MIN})", t_rej / SPEEDUP_TRIALS as f64, t_opt / SPEEDUP_TRIALS as f64),
    )
}

fn acceptance_law() -> Outcome {
    let m = UnitBox::new(1).unwrap();
    let k = PeriodicSobolev::new(1).unwrap();
    let cfg = SamplerConfig { n: ACCEPTANCE_STEPS, ..SamplerConfig::default() };
    let grid = quadrature_grid(&m, ACCEPTANCE_GRID);
    let trace_k: f64 = grid.iter().map(|(x, w)| w * k.diag(x)).sum();
    // Per step: observed proposals, expected proposals and variance.
    let mut obs = vec![0.0; ACCEPTANCE_STEPS];
    let mut mean = vec![0.0; ACCEPTANCE_STEPS];
    let mut var = vec![0.0; ACCEPTANCE_STEPS];
    for run in 0..ACCEPTANCE_RUNS {
        let tr = rpcholesky_rejection(&m, &k, &cfg, &mut trial_rng(14, run)).unwrap();
        let mut state = CholeskyState::new(&k);
        for i in 0..ACCEPTANCE_STEPS {
            let res: f64 = grid.iter().map(|(x, w)| w * state.residual_diag(x).unwrap().max(0.0)).sum();
            let p = (res / trace_k).min(1.0);
            obs[i] += tr.proposals_per_node[i] as f64;
            mean[i] += 1.0 / p;
            var[i] += (1.0 - p) / (p * p);
            state.push(tr.nodes[i].clone()).unwrap();
        }
    }
    let z: Vec<f64> = (0..ACCEPTANCE_STEPS)
        .map(|i| if var[i] > 0.0 { (obs[i] - mean[i]) / var[i].sqrt() } else { obs[i] - mean[i] })
        .collect();
    let worst = z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let rates: Vec<String> = [1usize, 8, 16, 32]
        .iter()
        .map(|&i| format!("i={i}: {:.4}/{:.4}", ACCEPTANCE_RUNS as f64 / obs[i - 1], ACCEPTANCE_RUNS as f64 / mean[i - 1]))
        .collect();
    outcome(
        worst <= ACCEPTANCE_SIGMAS,
        format!("max |z| {worst:.2} over {ACCEPTANCE_STEPS} steps (limit {ACCEPTANCE_SIGMAS}); empirical/predicted rate {}", rates.join(", ")),
    )
}

fn crescent_ordering() -> Outcome {
    let cfg = ExperimentConfig { n_grid: vec![10, 50], timing: false, ..ExperimentConfig::crescent() };
    let out = run_crescent_demo(&cfg).unwrap();
    let mean = |method: &str, n: usize| {
        out.summary.iter().find(|(m, s)| *m == method && s.curve.n == n).map(|(_, s)| s.curve.mean).unwrap()
    };
    let (r, i, mc) = (mean("rpcholesky", 50), mean("iid-kq", 50), mean("monte-carlo", 50));
    let decay = ["rpcholesky", "iid-kq", "monte-carlo"].iter().all(|m| mean(m, 50) < mean(m, 10));
    let max_residual = out.nodes.iter().map(|n| n.2.abs()).fold(0.0f64, f64::max);
    outcome(
        r < i && i < mc && decay,
        format!("n=50 mean relative error rpc {r:.3e} < iid-kq {i:.3e} < mc {mc:.3e}; decays from n=10: {decay}; max residual at plotted nodes {max_residual:.1e}"),
    )
}

fn invariant_suite() -> Outcome {
    let lines = run_check(&ExperimentConfig::default());
    let failed: Vec<String> = lines.iter().filter(|l| !l.pass).map(|l| l.to_string()).collect();
    outcome(failed.is_empty(), format!("{} checks, failures: {:?}", lines.len(), failed))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("exactness oracle", exactness_oracle),
        ("nystrom equivalence", nystrom_equivalence),
        ("node-count bound", bound_sweep),
        ("benchmark decay", benchmark_decay),
        ("optimized speedup", speedup),
        ("acceptance-rate law", acceptance_law),
        ("crescent ordering", crescent_ordering),
        ("invariant suite", invariant_suite),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("AC{} {} {name}: {} [{secs:.1}s]", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
