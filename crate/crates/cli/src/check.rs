//! The invariant suite behind `rpcq check`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use rpcq::kernels::gram_matrix;
use rpcq::lowrank::nystrom_direct;
use rpcq::quadrature::{optimal_weights, worst_case_error};
use rpcq::samplers::{rpcholesky_optimized, rpcholesky_rejection, MultiStart};
use rpcq::theory::check_bound;
use rpcq::{
    trial_rng, CholeskyState, DiscreteSpace, EigenvalueSequence, Gaussian, GramKernel, Kernel, Matern52,
    PeriodicSobolev, Point, QuadratureRule, Result, SamplerConfig, TensorProduct,
};

use crate::config::ExperimentConfig;
use crate::experiments::run_benchmark;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn line(name: &str, pass: bool, detail: String) -> CheckLine {
    CheckLine { name: name.to_string(), pass, detail }
}

pub const ORACLE_ATOMS: usize = 5;
pub const ORACLE_RUNS: usize = 100_000;
pub const ORACLE_TV_LIMIT: f64 = 0.02;

/// Five atoms with random weights and a random full-rank Gram matrix close to
/// rank one, so second pivots are accepted rarely under a stale envelope.
pub fn oracle_problem(seed: u64) -> Result<(DiscreteSpace, GramKernel)> {
    let mut rng = trial_rng(seed, 0xA70A);
    let m = ORACLE_ATOMS;
    let u = DMatrix::from_fn(m, 1, |_, _| rng.gen_range(0.5..1.5));
    let a = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    let g = &u * u.transpose() + &a * a.transpose() * 0.01 + DMatrix::identity(m, m) * 1e-3;
    let entries: Vec<f64> = (0..m * m).map(|k| g[(k / m, k % m)]).collect();
    let weights = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
    Ok((DiscreteSpace::indexed(weights)?, GramKernel::new(m, entries)?))
}

/// Exact law of the first two pivots by Schur complements.
pub fn first_two_law(space: &DiscreteSpace, k: &GramKernel) -> Vec<f64> {
    let m = space.len();
    let w = space.weights();
    let z1: f64 = (0..m).map(|x| w[x] * k.entry(x, x)).sum();
    let mut p = vec![0.0; m * m];
    for a in 0..m {
        let pa = w[a] * k.entry(a, a) / z1;
        let res = |x: usize| k.entry(x, x) - k.entry(a, x).powi(2) / k.entry(a, a);
        let z2: f64 = (0..m).filter(|&x| x != a).map(|x| w[x] * res(x)).sum();
        for b in 0..m {
            if b != a {
                p[a * m + b] = pa * w[b] * res(b) / z2;
            }
        }
    }
    p
}

/// Empirical first-two-pivot frequencies over `runs` seeded runs.
pub fn first_two_frequencies<F>(runs: usize, m: usize, seed: u64, draw: F) -> Result<Vec<f64>>
where
    F: Fn(&mut rpcq::TrialRng) -> Result<(usize, usize)> + Sync,
{
    let pairs: Vec<(usize, usize)> =
        (0..runs).into_par_iter().map(|t| draw(&mut trial_rng(seed, t as u64))).collect::<Result<_>>()?;
    let mut freq = vec![0.0; m * m];
    for (a, b) in pairs {
        freq[a * m + b] += 1.0 / runs as f64;
    }
    Ok(freq)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn test_kernels() -> Result<Vec<Box<dyn Kernel>>> {
    Ok(vec![
        Box::new(PeriodicSobolev::new(1)?),
        Box::new(PeriodicSobolev::new(2)?),
        Box::new(PeriodicSobolev::new(3)?),
        Box::new(TensorProduct::new(PeriodicSobolev::new(2)?, 2)?),
        Box::new(Matern52::new(0.5, 2)?),
        Box::new(Gaussian::new(0.3, 2)?),
    ])
}

fn random_points(rng: &mut impl Rng, count: usize, dim: usize) -> Vec<Point> {
    (0..count).map(|_| Point::new((0..dim).map(|_| rng.gen()).collect())).collect()
}

fn check_kernels(seed: u64) -> Result<CheckLine> {
    let mut rng = trial_rng(seed, 0xC1);
    let mut worst_asym = 0.0f64;
    let mut worst_eig = 0.0f64;
    for k in test_kernels()? {
        for _ in 0..20 {
            let pts = random_points(&mut rng, 8, k.dim());
            let g = gram_matrix(k.as_ref(), &pts);
            let scale = k.diagonal_bound();
            for i in 0..8 {
                for j in 0..8 {
                    worst_asym = worst_asym.max((g[i * 8 + j] - g[j * 8 + i]).abs() / scale);
                }
            }
            let e = SymmetricEigen::new(DMatrix::from_row_slice(8, 8, &g));
            let trace: f64 = (0..8).map(|i| g[i * 9]).sum();
            worst_eig = worst_eig.min(e.eigenvalues.min() / trace);
        }
    }
    Ok(line(
        "kernel-symmetry-psd",
        worst_asym <= 1e-14 && worst_eig >= -1e-10,
        format!("max asymmetry {worst_asym:.2e}, min eigenvalue/trace {worst_eig:.2e}"),
    ))
}

fn check_cholesky(seed: u64) -> Result<CheckLine> {
    let mut rng = trial_rng(seed, 0xC2);
    let mut worst = 0.0f64;
    for k in test_kernels()? {
        for _ in 0..10 {
            let mut state = CholeskyState::new(k.as_ref());
            for p in random_points(&mut rng, 12, k.dim()) {
                let r = state.residual_kernel(&p)?;
                if r.d > 1e-8 * k.diag(&p) {
                    state.extend(p, r)?;
                }
            }
            let l = state.factor_dense();
            let g = DMatrix::from_row_slice(state.len(), state.len(), &gram_matrix(k.as_ref(), state.nodes()));
            worst = worst.max((&l * l.transpose() - &g).norm() / g.norm());
        }
    }
    Ok(line("cholesky-reconstruction", worst <= 1e-10, format!("max relative Frobenius error {worst:.2e}")))
}

fn check_residual_monotone(seed: u64) -> Result<CheckLine> {
    let mut rng = trial_rng(seed, 0xC3);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for k in test_kernels()? {
        let probes = random_points(&mut rng, 16, k.dim());
        let mut state = CholeskyState::new(k.as_ref());
        let mut prev: Vec<f64> = probes.iter().map(|p| k.diag(p)).collect();
        for p in random_points(&mut rng, 10, k.dim()) {
            let r = state.residual_kernel(&p)?;
            if r.d <= 1e-8 * k.diag(&p) {
                continue;
            }
            state.extend(p, r)?;
            for (q, old) in probes.iter().zip(prev.iter_mut()) {
                let d = state.residual_diag(q)?;
                checked += 1;
                if d > *old + 1e-12 * k.diagonal_bound() || d < -1e-10 * k.diagonal_bound() {
                    violations += 1;
                }
                *old = d;
            }
        }
    }
    Ok(line("residual-monotone", violations == 0, format!("{violations} violations in {checked} probes")))
}

fn check_nystrom(seed: u64) -> Result<CheckLine> {
    let mut rng = trial_rng(seed, 0xC4);
    let mut worst = 0.0f64;
    let kernels = test_kernels()?;
    for t in 0..100 {
        let k = &kernels[t % kernels.len()];
        let size = rng.gen_range(1..=10);
        let mut state = CholeskyState::new(k.as_ref());
        for p in random_points(&mut rng, size, k.dim()) {
            let r = state.residual_kernel(&p)?;
            if r.d > 1e-8 * k.diag(&p) {
                state.extend(p, r)?;
            }
        }
        let x = random_points(&mut rng, 1, k.dim()).remove(0);
        let y = random_points(&mut rng, 1, k.dim()).remove(0);
        let iterative = k.eval(&x, &y) - state.residual_cross(&x, &y)?;
        let direct = nystrom_direct(k.as_ref(), state.nodes(), &x, &y);
        worst = worst.max((iterative - direct).abs() / (k.eval(&x, &x) * k.eval(&y, &y)).sqrt());
    }
    Ok(line("nystrom-equivalence", worst <= 1e-8, format!("max relative gap {worst:.2e} over 100 instances")))
}

fn check_weights(seed: u64) -> Result<CheckLine> {
    let mut rng = trial_rng(seed, 0xC5);
    let mut violations = 0usize;
    for s in 1..=3 {
        let k = PeriodicSobolev::new(s)?;
        let nodes = random_points(&mut rng, 8, 1);
        let tg = vec![1.0; nodes.len()];
        let w = optimal_weights(&k, &nodes, &tg)?;
        let best = worst_case_error(&k, &QuadratureRule::with_weights(nodes.clone(), w.clone(), tg.clone())?, 1.0);
        for _ in 0..100 {
            let eps = 10f64.powf(rng.gen_range(-6.0..0.0));
            let v: Vec<f64> = w.iter().map(|x| x + eps * rng.gen_range(-1.0..1.0)).collect();
            let e = worst_case_error(&k, &QuadratureRule::with_weights(nodes.clone(), v, tg.clone())?, 1.0);
            if best > e + 1e-10 {
                violations += 1;
            }
        }
    }
    Ok(line("weight-optimality", violations == 0, format!("{violations} of 300 perturbations beat the optimal weights")))
}

/// Sweep of the node-count bound; returns `(cases, failures)`.
pub fn bound_sweep() -> Result<(usize, usize)> {
    let mut cases = 0;
    let mut failures = 0;
    for s in 1..=3 {
        let seq = EigenvalueSequence::sobolev(s, rpcq::theory::DEFAULT_TERMS)?;
        let reports: Vec<bool> = (1..=50usize)
            .into_par_iter()
            .flat_map_iter(|r| [0.5, 0.1, 0.02].map(|d| check_bound(&seq, r, d).map(|rep| rep.pass)))
            .collect::<Result<_>>()?;
        cases += reports.len();
        failures += reports.iter().filter(|p| !**p).count();
    }
    Ok((cases, failures))
}

fn check_oracle(seed: u64, runs: usize) -> Result<Vec<CheckLine>> {
    let (space, k) = oracle_problem(seed)?;
    let exact = first_two_law(&space, &k);
    let cfg = SamplerConfig { n: 2, trials_max: 25, ..SamplerConfig::default() };
    let idx = |p: &Point| p[0].round() as usize;
    let rej = first_two_frequencies(runs, ORACLE_ATOMS, seed ^ 0x01, |rng| {
        let tr = rpcholesky_rejection(&space, &k, &cfg, rng)?;
        Ok((idx(&tr.nodes[0]), idx(&tr.nodes[1])))
    })?;
    let opt = first_two_frequencies(runs, ORACLE_ATOMS, seed ^ 0x02, |rng| {
        let tr = rpcholesky_optimized(&space, &k, &cfg, rng, &MultiStart::default())?;
        Ok((idx(&tr.nodes[0]), idx(&tr.nodes[1])))
    })?;
    Ok([("oracle-tv rpc-rejection", rej), ("oracle-tv rpc-optimized", opt)]
        .into_iter()
        .map(|(name, f)| {
            let tv = total_variation(&f, &exact);
            line(name, tv < ORACLE_TV_LIMIT, format!("TV {tv:.4} over {runs} runs on {ORACLE_ATOMS} atoms"))
        })
        .collect())
}

fn check_determinism(cfg: &ExperimentConfig) -> Result<CheckLine> {
    let mut small = cfg.clone();
    small.n_grid = vec![4, 8];
    small.trials = 3;
    small.timing = false;
    let a = run_benchmark(&small)?;
    let b = run_benchmark(&small)?;
    let same = a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(x, y)| x.err.to_bits() == y.err.to_bits() && x.proposals == y.proposals);
    Ok(line("determinism", same, format!("{} rows compared bit for bit", a.rows.len())))
}

/// Run the full suite. Configuration errors are reported as a failing line.
pub fn run_check(cfg: &ExperimentConfig) -> Vec<CheckLine> {
    let mut out = Vec::new();
    if let Err(e) = cfg.validate() {
        out.push(line("config", false, e.to_string()));
        return out;
    }
    out.push(line("config", true, "valid".into()));
    let seed = cfg.seed;
    let mut push = |name: &str, r: Result<Vec<CheckLine>>| match r {
        Ok(v) => out.extend(v),
        Err(e) => out.push(line(name, false, e.to_string())),
    };
    push("kernel-symmetry-psd", check_kernels(seed).map(|l| vec![l]));
    push("cholesky-reconstruction", check_cholesky(seed).map(|l| vec![l]));
    push("residual-monotone", check_residual_monotone(seed).map(|l| vec![l]));
    push("nystrom-equivalence", check_nystrom(seed).map(|l| vec![l]));
    push("weight-optimality", check_weights(seed).map(|l| vec![l]));
    push(
        "bound-sweep",
        bound_sweep().map(|(c, f)| vec![line("bound-sweep", f == 0, format!("{f} failures in {c} cases"))]),
    );
    push("oracle-tv", check_oracle(seed, ORACLE_RUNS));
    push("determinism", check_determinism(cfg).map(|l| vec![l]));
    out
}
