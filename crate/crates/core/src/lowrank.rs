//! Incremental Cholesky factor of `k(S, S)` and the residual kernel
//! `k − k_S` it induces.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::point::Point;

/// Proposals with `d ≤ PIVOT_TOLERANCE · k(s,s)` count as zero residual.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Output of [`CholeskyState::residual_kernel`]: `d = k(s,s) − k_S(s,s)`
/// and `c = L⁻¹ k(S, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub d: f64,
    pub c: Vec<f64>,
}

/// Selected nodes `S` with a lower-triangular `L`, `L Lᵀ = k(S, S)`.
///
/// `L` is stored densely by rows in packed lower-triangular layout: row `i`
/// occupies `i(i+1)/2 .. (i+1)(i+2)/2`.
#[derive(Clone, Debug)]
pub struct CholeskyState<K> {
    kernel: K,
    nodes: Vec<Point>,
    factor: Vec<f64>,
}

impl<K: Kernel> CholeskyState<K> {
    pub fn new(kernel: K) -> Self {
        CholeskyState { kernel, nodes: Vec::new(), factor: Vec::new() }
    }

    /// Empty state with room for `n` nodes.
    pub fn with_capacity(kernel: K, n: usize) -> Self {
        CholeskyState { kernel, nodes: Vec::with_capacity(n), factor: Vec::with_capacity(n * (n + 1) / 2) }
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn into_nodes(self) -> Vec<Point> {
        self.nodes
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.factor[start..start + i + 1]
    }

    /// Entry `L(i, j)`, zero above the diagonal.
    pub fn factor_entry(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.row(i)[j]
        }
    }

    /// `L` as a dense square matrix.
    pub fn factor_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.factor_entry(i, j))
    }

    /// Forward substitution `c = L⁻¹ k(S, s)` into `c`; returns `d`.
    pub fn residual_into(&self, s: &[f64], c: &mut Vec<f64>) -> Result<f64> {
        let n = self.len();
        c.clear();
        for i in 0..n {
            let row = self.row(i);
            let mut v = self.kernel.eval(&self.nodes[i], s);
            for (l, cl) in row[..i].iter().zip(c.iter()) {
                v -= l * cl;
            }
            c.push(v / row[i]);
        }
        let kss = self.kernel.diag(s);
        let d = kss - c.iter().map(|v| v * v).sum::<f64>();
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NonFinite("residual_kernel"))
        }
    }

    pub fn residual_kernel(&self, s: &[f64]) -> Result<Residual> {
        let mut c = Vec::with_capacity(self.len());
        let d = self.residual_into(s, &mut c)?;
        Ok(Residual { d, c })
    }

    /// Residual diagonal `k(s,s) − k_S(s,s)`.
    pub fn residual_diag(&self, s: &[f64]) -> Result<f64> {
        let mut c = Vec::with_capacity(self.len());
        self.residual_into(s, &mut c)
    }

    /// [`Self::residual_diag`] at many points, solving for all of them at once.
    /// Non-finite results come back as NaN.
    pub fn residual_diag_batch(&self, points: &[Point]) -> Vec<f64> {
        let n = self.len();
        let m = points.len();
        let mut out: Vec<f64> = points.iter().map(|p| self.kernel.diag(p)).collect();
        // Row i of `c` holds L⁻¹ k(S, x) entry i for every x.
        let mut c = vec![0.0; n * m];
        for i in 0..n {
            let (done, rest) = c.split_at_mut(i * m);
            let ci = &mut rest[..m];
            for (v, p) in ci.iter_mut().zip(points) {
                *v = self.kernel.eval(&self.nodes[i], p);
            }
            let row = self.row(i);
            for (j, l) in row[..i].iter().enumerate() {
                let cj = &done[j * m..(j + 1) * m];
                for (v, w) in ci.iter_mut().zip(cj) {
                    *v -= l * w;
                }
            }
            let inv = 1.0 / row[i];
            for (v, o) in ci.iter_mut().zip(out.iter_mut()) {
                *v *= inv;
                *o -= *v * *v;
            }
        }
        for o in &mut out {
            if !o.is_finite() {
                *o = f64::NAN;
            }
        }
        out
    }

    /// Residual kernel `k(x,y) − k_S(x,y)` off the diagonal.
    pub fn residual_cross(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let cx = self.residual_kernel(x)?.c;
        let cy = self.residual_kernel(y)?.c;
        Ok(self.kernel.eval(x, y) - cx.iter().zip(&cy).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Append `s` with the row `[cᵀ, √d]`. `residual` must come from
    /// [`Self::residual_kernel`] on this state and `s`.
    pub fn extend(&mut self, s: Point, residual: Residual) -> Result<()> {
        let Residual { d, c } = residual;
        if !(d > 0.0) {
            return Err(Error::NonPositivePivot(d));
        }
        if c.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: c.len() });
        }
        self.factor.extend_from_slice(&c);
        self.factor.push(d.sqrt());
        self.nodes.push(s);
        Ok(())
    }

    /// Evaluate the residual at `s` and append it.
    pub fn push(&mut self, s: Point) -> Result<()> {
        let r = self.residual_kernel(&s)?;
        self.extend(s, r)
    }
}

/// `k(x, S) k(S, S)† k(S, y)` with a spectral pseudoinverse; eigenvalues
/// below `1e-12 · λ_max` are treated as zero.
pub fn nystrom_direct<K: Kernel + ?Sized>(kernel: &K, nodes: &[Point], x: &[f64], y: &[f64]) -> f64 {
    let n = nodes.len();
    if n == 0 {
        return 0.0;
    }
    let gram = DMatrix::from_fn(n, n, |i, j| kernel.eval(&nodes[i], &nodes[j]));
    let kx = nalgebra::DVector::from_fn(n, |i, _| kernel.eval(&nodes[i], x));
    let ky = nalgebra::DVector::from_fn(n, |i, _| kernel.eval(&nodes[i], y));
    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = 1e-12 * lmax;
    let px = eig.eigenvectors.transpose() * kx;
    let py = eig.eigenvectors.transpose() * ky;
    let mut acc = 0.0;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > cutoff {
            acc += px[i] * py[i] / lam;
        }
    }
    acc
}
