//! Quadrature weights and the worst-case error.
//!
//! The reference integrand is `g ≡ 1`, so the embedding is the kernel mean
//! `Tg(x) = ∫ k(x, y) dμ(y)`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::domains::{quadrature_grid, Measure};
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, Kernel};
use crate::point::Point;

/// Minimum grid resolution per dimension for numeric embeddings.
pub const MIN_GRID_PER_DIM: usize = 256;
pub const MONTE_CARLO_SAMPLES: usize = 1_000_000;
/// Relative standard error above which a rule records a warning.
pub const MAX_RELATIVE_SE: f64 = 1e-4;

const REG_FACTOR: f64 = 10.0 * f64::EPSILON;

#[derive(Clone, Debug)]
enum Mode {
    Analytic { value: f64 },
    Grid { nodes: Vec<(Point, f64)> },
    MonteCarlo { samples: Vec<Point>, mass: f64 },
}

/// Source of `Tg(x)` and of `⟨g, Tg⟩`.
pub struct EmbeddingProvider<'a> {
    kernel: &'a dyn Kernel,
    mode: Mode,
    gram_constant: f64,
    gram_se: f64,
}

impl<'a> EmbeddingProvider<'a> {
    /// Analytic on the unit box when the kernel knows its embedding, exact sums
    /// on finite spaces, a midpoint grid for `d ≤ 2`, and Monte Carlo beyond.
    pub fn for_problem<R: Rng>(
        kernel: &'a dyn Kernel,
        measure: &dyn Measure,
        grid_per_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if kernel.dim() != measure.dim() {
            return Err(Error::DimensionMismatch { expected: measure.dim(), got: kernel.dim() });
        }
        if measure.is_unit_box() {
            if let Some(value) = kernel.uniform_embedding() {
                return Ok(Self::analytic(kernel, value));
            }
        }
        if measure.atoms().is_some() {
            return Ok(Self::grid(kernel, measure, 1));
        }
        if measure.dim() <= 2 {
            return Ok(Self::grid(kernel, measure, grid_per_dim.max(MIN_GRID_PER_DIM)));
        }
        Self::monte_carlo(kernel, measure, MONTE_CARLO_SAMPLES, rng)
    }

    /// Constant embedding `Tg ≡ value` for a probability measure.
    pub fn analytic(kernel: &'a dyn Kernel, value: f64) -> Self {
        EmbeddingProvider { kernel, mode: Mode::Analytic { value }, gram_constant: value, gram_se: 0.0 }
    }

    /// Quadrature against [`quadrature_grid`]. The gram constant uses a grid
    /// four times coarser for the outer integral.
    pub fn grid(kernel: &'a dyn Kernel, measure: &dyn Measure, per_dim: usize) -> Self {
        let nodes = quadrature_grid(measure, per_dim);
        let mut p = EmbeddingProvider { kernel, mode: Mode::Grid { nodes }, gram_constant: 0.0, gram_se: 0.0 };
        let outer = if measure.atoms().is_some() {
            quadrature_grid(measure, 1)
        } else {
            quadrature_grid(measure, (per_dim / 4).max(1))
        };
        p.gram_constant = outer.iter().map(|(x, w)| w * p.embedding(x)).sum();
        p
    }

    pub fn monte_carlo<R: Rng>(kernel: &'a dyn Kernel, measure: &dyn Measure, count: usize, rng: &mut R) -> Result<Self> {
        if count < 4 {
            return Err(Error::InvalidParameter("Monte Carlo embedding needs at least 4 samples".into()));
        }
        let mass = if measure.is_unit_box() {
            1.0
        } else {
            quadrature_grid(measure, 32).iter().map(|(_, w)| w).sum()
        };
        let samples = (0..count).map(|_| measure.sample(rng)).collect::<Result<Vec<_>>>()?;
        let pairs: Vec<f64> = samples.chunks_exact(2).map(|p| kernel.eval(&p[0], &p[1])).collect();
        let (mean, se) = mean_se(&pairs);
        Ok(EmbeddingProvider {
            kernel,
            mode: Mode::MonteCarlo { samples, mass },
            gram_constant: mass * mass * mean,
            gram_se: mass * mass * se,
        })
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.mode, Mode::Analytic { .. })
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Analytic { .. } => "analytic",
            Mode::Grid { .. } => "grid",
            Mode::MonteCarlo { .. } => "monte-carlo",
        }
    }

    /// Total mass `μ(X) = ∫ g dμ`.
    pub fn mass(&self) -> f64 {
        match &self.mode {
            Mode::Analytic { .. } => 1.0,
            Mode::Grid { nodes } => nodes.iter().map(|(_, w)| w).sum(),
            Mode::MonteCarlo { mass, .. } => *mass,
        }
    }

    /// `Tg(x)` and its standard error (zero for deterministic modes).
    pub fn embedding_with_error(&self, x: &[f64]) -> (f64, f64) {
        match &self.mode {
            Mode::Analytic { value } => (*value, 0.0),
            Mode::Grid { nodes } => (nodes.iter().map(|(y, w)| w * self.kernel.eval(x, y)).sum(), 0.0),
            Mode::MonteCarlo { samples, mass } => {
                let vals: Vec<f64> = samples.iter().map(|y| self.kernel.eval(x, y)).collect();
                let (m, se) = mean_se(&vals);
                (mass * m, mass * se)
            }
        }
    }

    pub fn embedding(&self, x: &[f64]) -> f64 {
        self.embedding_with_error(x).0
    }

    /// `⟨g, Tg⟩ = ∬ k dμ dμ`.
    pub fn gram_constant(&self) -> f64 {
        self.gram_constant
    }

    pub fn gram_constant_se(&self) -> f64 {
        self.gram_se
    }

    /// `Tg` at every node, with a warning per value whose relative standard
    /// error exceeds [`MAX_RELATIVE_SE`].
    pub fn embed_nodes(&self, nodes: &[Point]) -> (Vec<f64>, Vec<String>) {
        let mut warnings = Vec::new();
        let vals = nodes
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let (v, se) = self.embedding_with_error(x);
                if se > MAX_RELATIVE_SE * v.abs() {
                    warnings.push(format!("node {i}: embedding standard error {se:.3e} exceeds {MAX_RELATIVE_SE:e} relative"));
                }
                v
            })
            .collect();
        (vals, warnings)
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    /// `Tg` at the nodes.
    pub embedding_values: Vec<f64>,
    pub warnings: Vec<String>,
}

impl QuadratureRule {
    pub fn empty() -> Self {
        QuadratureRule { nodes: Vec::new(), weights: Vec::new(), embedding_values: Vec::new(), warnings: Vec::new() }
    }

    /// Optimal weights for `nodes`.
    pub fn optimal<K: Kernel + ?Sized>(kernel: &K, provider: &EmbeddingProvider, nodes: Vec<Point>) -> Result<Self> {
        let (tg, warnings) = provider.embed_nodes(&nodes);
        let weights = optimal_weights(kernel, &nodes, &tg)?;
        Ok(QuadratureRule { nodes, weights, embedding_values: tg, warnings })
    }

    /// A rule with the given weights.
    pub fn with_weights(nodes: Vec<Point>, weights: Vec<f64>, embedding_values: Vec<f64>) -> Result<Self> {
        if weights.len() != nodes.len() || embedding_values.len() != nodes.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), got: weights.len() });
        }
        if weights.iter().chain(&embedding_values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadrature weights"));
        }
        Ok(QuadratureRule { nodes, weights, embedding_values, warnings: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Solve `(k(S,S) + 10 ε tr k(S,S) I) w = Tg(S)` by Cholesky.
pub fn optimal_weights<K: Kernel + ?Sized>(kernel: &K, nodes: &[Point], tg: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n == 0 {
        return Err(Error::InvalidParameter("optimal weights need at least one node".into()));
    }
    if tg.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: tg.len() });
    }
    let mut g = DMatrix::from_row_slice(n, n, &gram_matrix(kernel, nodes));
    let reg = REG_FACTOR * g.trace();
    for i in 0..n {
        g[(i, i)] += reg;
    }
    let chol = g.cholesky().ok_or(Error::SingularGram)?;
    let w = chol.solve(&DVector::from_column_slice(tg));
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularGram);
    }
    Ok(w.iter().copied().collect())
}

/// `sqrt(max(0, ⟨g,Tg⟩ − 2 wᵀTg(S) + wᵀ k(S,S) w))`.
pub fn worst_case_error<K: Kernel + ?Sized>(kernel: &K, rule: &QuadratureRule, gram_constant: f64) -> f64 {
    let w = &rule.weights;
    let cross: f64 = w.iter().zip(&rule.embedding_values).map(|(a, b)| a * b).sum();
    let mut quad = 0.0;
    for (i, xi) in rule.nodes.iter().enumerate() {
        let mut row = 0.0;
        for (j, xj) in rule.nodes.iter().enumerate() {
            row += w[j] * kernel.eval(xi, xj);
        }
        quad += w[i] * row;
    }
    let sq = gram_constant - 2.0 * cross + quad;
    if sq < -1e-8 {
        warn!("squared worst-case error {sq:e} is negative beyond roundoff");
    }
    sq.max(0.0).sqrt()
}

/// `Σ w_i f(s_i)`.
pub fn apply_rule<F: Fn(&[f64]) -> f64>(rule: &QuadratureRule, f: F) -> f64 {
    rule.weights.iter().zip(&rule.nodes).map(|(w, x)| w * f(x)).sum()
}
