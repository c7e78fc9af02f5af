//! Eigenvalue recurrence `λ_j ← λ_j − λ_j² / Σλ` and the node-count bound it
//! controls, plus aggregation of empirical error curves.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quadrature::{worst_case_error, EmbeddingProvider, QuadratureRule};
use crate::samplers::SampleTrace;

pub const DEFAULT_TERMS: usize = 10_000;

/// `Σ_{m>N} m^{-p}` by Euler-Maclaurin, with the magnitude of the first
/// omitted term.
pub fn zeta_tail(p: f64, n: usize) -> (f64, f64) {
    let n = n as f64;
    let v = n.powf(1.0 - p) / (p - 1.0) - 0.5 * n.powf(-p) + p * n.powf(-p - 1.0) / 12.0;
    let err = p * (p + 1.0) * (p + 2.0) * n.powf(-p - 3.0) / 720.0;
    (v, err)
}

/// A truncated Mercer spectrum. `tail_beyond` is the mass past the last
/// stored value; the recurrence holds it fixed, which can only overstate
/// the surviving eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueSequence {
    pub values: Vec<f64>,
    pub tail_beyond: f64,
    /// Error bound on `tail_beyond`.
    pub truncation_error: f64,
}

impl EigenvalueSequence {
    pub fn new(values: Vec<f64>, tail_beyond: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) || !(tail_beyond >= 0.0) || !tail_beyond.is_finite() {
            return Err(Error::InvalidParameter("eigenvalues must be finite and nonnegative".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("eigenvalues must be nonincreasing".into()));
        }
        Ok(EigenvalueSequence { values, tail_beyond, truncation_error: 0.0 })
    }

    /// `λ_i = i^{-p}`, `p > 1`.
    pub fn power_law(p: f64, terms: usize) -> Result<Self> {
        if !(p > 1.0) || terms == 0 {
            return Err(Error::InvalidParameter(format!("power law needs p > 1 and terms > 0, got p={p}")));
        }
        let values = (1..=terms).map(|i| (i as f64).powf(-p)).collect();
        let (tail, err) = zeta_tail(p, terms);
        Ok(EigenvalueSequence { values, tail_beyond: tail, truncation_error: err })
    }

    /// Spectrum of the periodic Sobolev kernel of smoothness `s`: `1`, then
    /// each `m^{-2s}` twice.
    pub fn sobolev(s: u32, terms: usize) -> Result<Self> {
        let k = crate::kernels::PeriodicSobolev::new(s)?;
        Self::from_kernel(&k, terms, 2.0 * s as f64)
    }

    /// Spectrum from [`Kernel::eigenvalue`] for kernels whose eigenvalues come
    /// in cosine/sine pairs `m^{-p}`.
    pub fn from_kernel<K: Kernel + ?Sized>(kernel: &K, terms: usize, p: f64) -> Result<Self> {
        let values = (1..=terms)
            .map(|i| kernel.eigenvalue(i).ok_or_else(|| Error::InvalidParameter(format!("{} has no eigenvalue law", kernel.name()))))
            .collect::<Result<Vec<_>>>()?;
        if terms < 2 {
            return Err(Error::InvalidParameter("need at least two terms".into()));
        }
        // Index i >= 2 carries frequency i/2, so an even cut leaves one partner unpaired.
        let (unpaired, z) = if terms % 2 == 0 {
            (kernel.eigenvalue(terms + 1).unwrap_or(0.0), zeta_tail(p, terms / 2))
        } else {
            (0.0, zeta_tail(p, (terms - 1) / 2))
        };
        let (z, err) = z;
        let tail = unpaired + 2.0 * z;
        let mut seq = Self::new(values, tail)?;
        seq.truncation_error = 2.0 * err;
        Ok(seq)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() + self.tail_beyond
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.first().copied().unwrap_or(self.tail_beyond)
    }

    /// `Σ_{i>r} λ_i`.
    pub fn tail_sum(&self, r: usize) -> f64 {
        self.values.iter().skip(r).sum::<f64>() + self.tail_beyond
    }
}

/// One application of the recurrence. A zero total is a fixed point.
pub fn phi_step(seq: &EigenvalueSequence) -> EigenvalueSequence {
    let total = seq.total();
    if !(total > 0.0) {
        return seq.clone();
    }
    let values: Vec<f64> = seq.values.iter().map(|&l| (l - l * l / total).max(0.0)).collect();
    let old_sum: f64 = seq.values.iter().sum();
    let new_sum: f64 = values.iter().sum();
    for (j, (a, b)) in seq.values.iter().zip(&values).enumerate() {
        assert!(*b >= 0.0 && b <= a, "entry {j} increased or went negative");
    }
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "ordering lost");
    let drop = seq.lambda_max().powi(2) / total;
    assert!(new_sum <= old_sum && (drop <= f64::EPSILON * old_sum || new_sum < old_sum), "trace did not contract");
    EigenvalueSequence { values, tail_beyond: seq.tail_beyond, truncation_error: seq.truncation_error }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub r: usize,
    pub delta: f64,
    /// `⌈r log(2λ₁ / (δ tail)) + 2/δ⌉`; `None` when the tail vanishes.
    pub n_required: Option<usize>,
    pub tail: f64,
    /// Largest eigenvalue after `n_required` steps.
    pub lambda_after: f64,
    /// `δ · tail`, equal to `a + ε · tail` for the split below.
    pub threshold: f64,
    pub a: f64,
    pub epsilon: f64,
    pub degenerate_tail: bool,
    pub pass: bool,
}

/// Iterate the recurrence for the required number of steps and test
/// `λ₁ ≤ δ Σ_{i>r} λ_i`.
pub fn check_bound(seq: &EigenvalueSequence, r: usize, delta: f64) -> Result<BoundReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let tail = seq.tail_sum(r);
    let threshold = delta * tail;
    let mut report = BoundReport {
        r,
        delta,
        n_required: None,
        tail,
        lambda_after: seq.lambda_max(),
        threshold,
        a: 0.5 * delta * tail,
        epsilon: 0.5 * delta,
        degenerate_tail: false,
        pass: false,
    };
    if !(tail > 0.0) {
        report.degenerate_tail = true;
        return Ok(report);
    }
    let log_term = if r == 0 { 0.0 } else { r as f64 * (2.0 * seq.lambda_max() / threshold).ln().max(0.0) };
    let n = (log_term + 2.0 / delta).ceil() as usize;
    let mut cur = seq.clone();
    for _ in 0..n {
        cur = phi_step(&cur);
    }
    report.n_required = Some(n);
    report.lambda_after = cur.lambda_max();
    report.pass = report.lambda_after <= threshold;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and 10%/90% quantiles of each `(n, values)` group.
pub fn summarize(groups: &[(usize, Vec<f64>)]) -> Vec<CurveRow> {
    groups
        .iter()
        .map(|(n, vals)| {
            let mut s = vals.clone();
            s.sort_by(f64::total_cmp);
            CurveRow {
                n: *n,
                trials: s.len(),
                mean: s.iter().sum::<f64>() / s.len() as f64,
                q10: quantile(&s, 0.1),
                q90: quantile(&s, 0.9),
            }
        })
        .collect()
}

/// Worst-case error of the optimal rule for each trace, grouped by node count.
pub fn empirical_error_curve<K: Kernel + ?Sized>(
    kernel: &K,
    provider: &EmbeddingProvider,
    samples: &[(usize, SampleTrace)],
) -> Result<Vec<CurveRow>> {
    let mut groups: Vec<(usize, Vec<f64>)> = Vec::new();
    for (n, tr) in samples {
        let rule = QuadratureRule::optimal(kernel, provider, tr.nodes.clone())?;
        let e = worst_case_error(kernel, &rule, provider.gram_constant());
        match groups.iter_mut().find(|g| g.0 == *n) {
            Some(g) => g.1.push(e),
            None => groups.push((*n, vec![e])),
        }
    }
    groups.sort_by_key(|g| g.0);
    Ok(summarize(&groups))
}

/// Least-squares slope of `log y` against `log n` over `8 ≤ n ≤ 128`.
pub fn log_log_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, y)| (8..=128).contains(n) && *y > 0.0)
        .map(|&(n, y)| ((n as f64).ln(), y.ln()))
        .collect();
    fit_slope(&pts)
}

/// Least-squares slope over all points.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
