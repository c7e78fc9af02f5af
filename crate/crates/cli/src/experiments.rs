//! Seeded experiment runners. Trials run in parallel on independent RNG
//! streams and are collected in `(n, trial)` order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use rpcq::domains::quadrature_grid;
use rpcq::quadrature::{apply_rule, worst_case_error};
use rpcq::samplers::{iid_sampler, run_sampler};
use rpcq::theory::{summarize, CurveRow};
use rpcq::{trial_rng, CholeskyState, EmbeddingProvider, Error, Point, QuadratureRule, Result, SampleTrace};

use crate::config::ExperimentConfig;

/// RNG stream for trial `trial` at grid index `n_index` of scheme `tag`.
pub fn stream_id(tag: u64, n_index: usize, trial: usize) -> u64 {
    (tag << 56) | ((n_index as u64) << 32) | trial as u64
}

/// Stream reserved for building numeric embeddings.
pub const EMBEDDING_STREAM: u64 = u64::MAX;

pub fn status_of(e: &Error) -> &'static str {
    match e {
        Error::AcceptanceStalled { .. } => "stalled",
        Error::InvalidEnvelope { .. } => "invalid-envelope",
        Error::RankExhausted { .. } => "rank-exhausted",
        Error::SingularGram => "singular-gram",
        Error::DegenerateInitialization { .. } => "degenerate-init",
        _ => "error",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub trial: usize,
    /// NaN when the trial failed.
    pub err: f64,
    pub time: f64,
    pub proposals: u64,
    pub status: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub curve: CurveRow,
    pub mean_time: f64,
    pub failures: usize,
}

#[derive(Clone, Debug)]
pub struct BenchmarkOutput {
    pub rows: Vec<ErrorRow>,
    pub summary: Vec<SummaryRow>,
    pub embedding_mode: &'static str,
    pub gram_constant: f64,
    pub gram_constant_se: f64,
}

fn summarize_rows<'a>(n_grid: &[usize], rows: impl Iterator<Item = (usize, f64, f64)> + Clone + 'a) -> Vec<SummaryRow> {
    n_grid
        .iter()
        .map(|&n| {
            let all: Vec<(f64, f64)> = rows.clone().filter(|r| r.0 == n).map(|r| (r.1, r.2)).collect();
            let ok: Vec<(f64, f64)> = all.iter().copied().filter(|r| r.0.is_finite()).collect();
            let errs: Vec<f64> = ok.iter().map(|r| r.0).collect();
            let curve = if errs.is_empty() {
                CurveRow { n, trials: 0, mean: f64::NAN, q10: f64::NAN, q90: f64::NAN }
            } else {
                summarize(&[(n, errs)]).remove(0)
            };
            let mean_time = if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| r.1).sum::<f64>() / ok.len() as f64 };
            SummaryRow { curve, mean_time, failures: all.len() - ok.len() }
        })
        .collect()
}

pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkOutput> {
    cfg.validate()?;
    let kernel = cfg.build_kernel()?;
    let measure = cfg.build_measure()?;
    let provider =
        EmbeddingProvider::for_problem(kernel.as_ref(), measure.as_ref(), cfg.grid, &mut trial_rng(cfg.seed, EMBEDDING_STREAM))?;
    let tasks: Vec<(usize, usize)> =
        (0..cfg.n_grid.len()).flat_map(|ni| (0..cfg.trials).map(move |t| (ni, t))).collect();

    let rows: Vec<ErrorRow> = tasks
        .par_iter()
        .map(|&(ni, trial)| {
            let n = cfg.n_grid[ni];
            let mut rng = trial_rng(cfg.seed, stream_id(0, ni, trial));
            let outcome = run_sampler(cfg.sampler, measure.as_ref(), kernel.as_ref(), &cfg.sampler_config(n), &mut rng)
                .and_then(|tr| {
                    let rule = QuadratureRule::optimal(kernel.as_ref(), &provider, tr.nodes.clone())?;
                    Ok((tr, worst_case_error(kernel.as_ref(), &rule, provider.gram_constant())))
                });
            match outcome {
                Ok((tr, err)) => ErrorRow {
                    n,
                    trial,
                    err,
                    time: if cfg.timing { tr.wall_time } else { 0.0 },
                    proposals: tr.total_proposals(),
                    status: "ok",
                },
                Err(e) => ErrorRow { n, trial, err: f64::NAN, time: 0.0, proposals: 0, status: status_of(&e) },
            }
        })
        .collect();

    let summary = summarize_rows(&cfg.n_grid, rows.iter().map(|r| (r.n, r.err, r.time)));
    Ok(BenchmarkOutput {
        rows,
        summary,
        embedding_mode: provider.mode_name(),
        gram_constant: provider.gram_constant(),
        gram_constant_se: provider.gram_constant_se(),
    })
}

fn write_csv(path: &Path, header: &str, columns: &str, body: &str) -> Result<()> {
    let text = format!("{header}{columns}\n{body}");
    fs::write(path, text).map_err(|e| Error::InvalidConfig(format!("out: {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::InvalidConfig(format!("out: {}: {e}", dir.display())))
}

fn summary_lines(rows: &[SummaryRow], prefix: &str) -> String {
    let mut s = String::new();
    for r in rows {
        let c = &r.curve;
        let _ = writeln!(s, "{prefix}{},{},{},{},{},{},{}", c.n, c.mean, c.q10, c.q90, r.mean_time, c.trials, r.failures);
    }
    s
}

pub fn write_benchmark(cfg: &ExperimentConfig, out: &BenchmarkOutput, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut header = cfg.provenance();
    let _ = writeln!(
        header,
        "# embedding={} gram_constant={} gram_constant_se={}",
        out.embedding_mode, out.gram_constant, out.gram_constant_se
    );
    let mut body = String::new();
    for r in &out.rows {
        let _ = writeln!(body, "{},{},{},{},{},{}", r.n, r.trial, r.err, r.time, r.proposals, r.status);
    }
    write_csv(&dir.join("errors.csv"), &header, "n,trial,err,time,proposals,status", &body)?;
    write_csv(&dir.join("summary.csv"), &header, "n,mean,q10,q90,mean_time,trials,failures", &summary_lines(&out.summary, ""))
}

/// Integrand of the crescent demo.
pub fn crescent_integrand(x: &[f64]) -> f64 {
    x[0].sin() * x[1].exp()
}

pub const CRESCENT_METHODS: [&str; 3] = ["rpcholesky", "iid-kq", "monte-carlo"];
pub const CRESCENT_PLOT_NODES: usize = 20;
pub const CRESCENT_FIELD_PER_DIM: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct CrescentRow {
    pub method: &'static str,
    pub n: usize,
    pub trial: usize,
    pub rel_err: f64,
    pub time: f64,
    pub status: &'static str,
}

#[derive(Clone, Debug)]
pub struct CrescentOutput {
    pub reference: f64,
    pub rows: Vec<CrescentRow>,
    pub summary: Vec<(&'static str, SummaryRow)>,
    /// `(x, y, residual diagonal)` at each plotted node.
    pub nodes: Vec<(f64, f64, f64)>,
    /// `(x, y, residual diagonal)` on a grid over the crescent.
    pub field: Vec<(f64, f64, f64)>,
}

pub fn run_crescent_demo(cfg: &ExperimentConfig) -> Result<CrescentOutput> {
    cfg.validate()?;
    let kernel = cfg.build_kernel()?;
    let measure = cfg.build_measure()?;
    let provider =
        EmbeddingProvider::for_problem(kernel.as_ref(), measure.as_ref(), cfg.grid, &mut trial_rng(cfg.seed, EMBEDDING_STREAM))?;
    let grid = quadrature_grid(measure.as_ref(), cfg.grid);
    let reference: f64 = grid.iter().map(|(x, w)| w * crescent_integrand(x)).sum();
    let mass = provider.mass();

    let tasks: Vec<(usize, usize)> =
        (0..cfg.n_grid.len()).flat_map(|ni| (0..cfg.trials).map(move |t| (ni, t))).collect();
    let rel = |est: f64| (est - reference).abs() / reference.abs();
    let kq = |tr: Result<SampleTrace>| -> std::result::Result<(f64, f64), &'static str> {
        let tr = tr.map_err(|e| status_of(&e))?;
        let rule = QuadratureRule::optimal(kernel.as_ref(), &provider, tr.nodes).map_err(|e| status_of(&e))?;
        Ok((rel(apply_rule(&rule, crescent_integrand)), tr.wall_time))
    };
    let row = |method, n, trial, r: std::result::Result<(f64, f64), &'static str>| match r {
        Ok((e, t)) => CrescentRow { method, n, trial, rel_err: e, time: if cfg.timing { t } else { 0.0 }, status: "ok" },
        Err(s) => CrescentRow { method, n, trial, rel_err: f64::NAN, time: 0.0, status: s },
    };

    let per_task: Vec<[CrescentRow; 3]> = tasks
        .par_iter()
        .map(|&(ni, trial)| {
            let n = cfg.n_grid[ni];
            let mut rng = trial_rng(cfg.seed, stream_id(0, ni, trial));
            let rpc = run_sampler(cfg.sampler, measure.as_ref(), kernel.as_ref(), &cfg.sampler_config(n), &mut rng);
            let mut rng = trial_rng(cfg.seed, stream_id(1, ni, trial));
            let iid = iid_sampler(measure.as_ref(), n, &mut rng);
            let mc = iid.as_ref().map_err(|e| status_of(e)).map(|tr| {
                let mean = tr.nodes.iter().map(|x| crescent_integrand(x)).sum::<f64>() / n as f64;
                (rel(mass * mean), tr.wall_time)
            });
            [row(CRESCENT_METHODS[0], n, trial, kq(rpc)), row(CRESCENT_METHODS[1], n, trial, kq(iid)), row(CRESCENT_METHODS[2], n, trial, mc)]
        })
        .collect();

    let mut rows = Vec::with_capacity(per_task.len() * 3);
    for m in 0..3 {
        rows.extend(per_task.iter().map(|r| r[m].clone()));
    }
    let mut summary = Vec::new();
    for method in CRESCENT_METHODS {
        let sel = rows.iter().filter(move |r| r.method == method).map(|r| (r.n, r.rel_err, r.time));
        for s in summarize_rows(&cfg.n_grid, sel) {
            summary.push((method, s));
        }
    }

    // Node set and residual field for plotting.
    let mut rng = trial_rng(cfg.seed, stream_id(2, 0, 0));
    let plot = run_sampler(cfg.sampler, measure.as_ref(), kernel.as_ref(), &cfg.sampler_config(CRESCENT_PLOT_NODES), &mut rng)?;
    let mut state = CholeskyState::new(kernel.as_ref());
    for s in &plot.nodes {
        state.push(s.clone())?;
    }
    let mut nodes = Vec::new();
    for s in &plot.nodes {
        nodes.push((s[0], s[1], state.residual_diag(s)?));
    }
    let bbox = measure.bounding_box();
    let mut field = Vec::new();
    let m = CRESCENT_FIELD_PER_DIM;
    for i in 0..m {
        for j in 0..m {
            let x = bbox[0].0 + (i as f64 + 0.5) / m as f64 * (bbox[0].1 - bbox[0].0);
            let y = bbox[1].0 + (j as f64 + 0.5) / m as f64 * (bbox[1].1 - bbox[1].0);
            if measure.contains(&[x, y]) {
                field.push((x, y, state.residual_diag(&[x, y])?));
            }
        }
    }
    Ok(CrescentOutput { reference, rows, summary, nodes, field })
}

pub fn write_crescent(cfg: &ExperimentConfig, out: &CrescentOutput, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut header = cfg.provenance();
    let _ = writeln!(header, "# reference_integral={}", out.reference);
    let mut body = String::new();
    for r in &out.rows {
        let _ = writeln!(body, "{},{},{},{},{},{}", r.method, r.n, r.trial, r.rel_err, r.time, r.status);
    }
    write_csv(&dir.join("crescent_errors.csv"), &header, "method,n,trial,rel_err,time,status", &body)?;
    let mut body = String::new();
    for (m, s) in &out.summary {
        body.push_str(&summary_lines(std::slice::from_ref(s), &format!("{m},")));
    }
    write_csv(&dir.join("crescent_summary.csv"), &header, "method,n,mean,q10,q90,mean_time,trials,failures", &body)?;
    let mut body = String::new();
    for (i, (x, y, r)) in out.nodes.iter().enumerate() {
        let _ = writeln!(body, "{i},{x},{y},{r}");
    }
    write_csv(&dir.join("nodes.csv"), &header, "index,x,y,residual", &body)?;
    let mut body = String::new();
    for (x, y, r) in &out.field {
        let _ = writeln!(body, "{x},{y},{r}");
    }
    write_csv(&dir.join("field.csv"), &header, "x,y,residual", &body)
}

fn coord_columns(dim: usize) -> String {
    (0..dim).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",")
}

fn coords(p: &Point) -> String {
    p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// One sampler run per node count, on the trial-0 stream.
pub fn run_sample(cfg: &ExperimentConfig) -> Result<Vec<(usize, std::result::Result<SampleTrace, Error>)>> {
    cfg.validate()?;
    let kernel = cfg.build_kernel()?;
    let measure = cfg.build_measure()?;
    Ok(cfg
        .n_grid
        .par_iter()
        .enumerate()
        .map(|(ni, &n)| {
            let mut rng = trial_rng(cfg.seed, stream_id(0, ni, 0));
            (n, run_sampler(cfg.sampler, measure.as_ref(), kernel.as_ref(), &cfg.sampler_config(n), &mut rng))
        })
        .collect())
}

pub fn write_sample(cfg: &ExperimentConfig, runs: &[(usize, std::result::Result<SampleTrace, Error>)], dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut body = String::new();
    for (n, run) in runs {
        if let Ok(tr) = run {
            for (i, (p, k)) in tr.nodes.iter().zip(&tr.proposals_per_node).enumerate() {
                let _ = writeln!(body, "{n},{i},{},{k}", coords(p));
            }
        }
    }
    write_csv(&dir.join("samples.csv"), &cfg.provenance(), &format!("n,index,{},proposals", coord_columns(cfg.dim)), &body)
}

#[derive(Clone, Debug)]
pub struct RuleOutput {
    pub n: usize,
    pub rule: Option<QuadratureRule>,
    pub err: f64,
    pub status: &'static str,
}

/// Sample, weight and score one rule per node count.
pub fn run_quadrature(cfg: &ExperimentConfig) -> Result<Vec<RuleOutput>> {
    let runs = run_sample(cfg)?;
    let kernel = cfg.build_kernel()?;
    let measure = cfg.build_measure()?;
    let provider =
        EmbeddingProvider::for_problem(kernel.as_ref(), measure.as_ref(), cfg.grid, &mut trial_rng(cfg.seed, EMBEDDING_STREAM))?;
    Ok(runs
        .into_iter()
        .map(|(n, run)| {
            match run.and_then(|tr| QuadratureRule::optimal(kernel.as_ref(), &provider, tr.nodes)) {
                Ok(rule) => {
                    let err = worst_case_error(kernel.as_ref(), &rule, provider.gram_constant());
                    RuleOutput { n, rule: Some(rule), err, status: "ok" }
                }
                Err(e) => RuleOutput { n, rule: None, err: f64::NAN, status: status_of(&e) },
            }
        })
        .collect())
}

pub fn write_quadrature(cfg: &ExperimentConfig, rules: &[RuleOutput], dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let header = cfg.provenance();
    let mut body = String::new();
    let mut errs = String::new();
    for r in rules {
        let _ = writeln!(errs, "{},{},{}", r.n, r.err, r.status);
        if let Some(rule) = &r.rule {
            for (i, (p, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                let _ = writeln!(body, "{},{i},{},{w}", r.n, coords(p));
            }
        }
    }
    write_csv(&dir.join("rules.csv"), &header, &format!("n,index,{},weight", coord_columns(cfg.dim)), &body)?;
    write_csv(&dir.join("rule_errors.csv"), &header, "n,err,status", &errs)
}
