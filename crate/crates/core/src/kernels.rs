//! Kernel functions.
//!
//! All kernels implement [`Kernel`]. Evaluation is pure, so one kernel value
//! may be shared freely across threads.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// A symmetric positive-semidefinite kernel on `R^dim`.
pub trait Kernel: Send + Sync {
    fn dim(&self) -> usize;

    /// `k(x, y)`. Callers pass points of length [`Kernel::dim`].
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;

    fn diag(&self, x: &[f64]) -> f64 {
        self.eval(x, x)
    }

    /// Upper bound on `k(x, x)` over the domain.
    fn diagonal_bound(&self) -> f64;

    /// True when `k(x, x)` is the same for every `x` (stationary kernels).
    fn constant_diagonal(&self) -> bool {
        false
    }

    /// `Tg(x)` for `g ≡ 1` and `μ = Unif[0,1]^dim`, when it is a known constant.
    fn uniform_embedding(&self) -> Option<f64> {
        None
    }

    /// Mercer eigenvalue `λ_i` (1-based, nonincreasing) against `Unif[0,1]^dim`.
    fn eigenvalue(&self, _i: usize) -> Option<f64> {
        None
    }

    fn name(&self) -> String;
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (**self).eval(x, y)
    }
    fn diag(&self, x: &[f64]) -> f64 {
        (**self).diag(x)
    }
    fn diagonal_bound(&self) -> f64 {
        (**self).diagonal_bound()
    }
    fn constant_diagonal(&self) -> bool {
        (**self).constant_diagonal()
    }
    fn uniform_embedding(&self) -> Option<f64> {
        (**self).uniform_embedding()
    }
    fn eigenvalue(&self, i: usize) -> Option<f64> {
        (**self).eigenvalue(i)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<K: Kernel + ?Sized> Kernel for Box<K> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (**self).eval(x, y)
    }
    fn diag(&self, x: &[f64]) -> f64 {
        (**self).diag(x)
    }
    fn diagonal_bound(&self) -> f64 {
        (**self).diagonal_bound()
    }
    fn constant_diagonal(&self) -> bool {
        (**self).constant_diagonal()
    }
    fn uniform_embedding(&self) -> Option<f64> {
        (**self).uniform_embedding()
    }
    fn eigenvalue(&self, i: usize) -> Option<f64> {
        (**self).eigenvalue(i)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Gram matrix `k(P, P)` in row-major order.
pub fn gram_matrix<K: Kernel + ?Sized>(kernel: &K, points: &[impl AsRef<[f64]>]) -> Vec<f64> {
    let m = points.len();
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let v = kernel.eval(points[i].as_ref(), points[j].as_ref());
            g[i * m + j] = v;
            g[j * m + i] = v;
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Periodic Sobolev

fn bernoulli_even(s: u32, t: f64) -> f64 {
    match s {
        1 => t * t - t + 1.0 / 6.0,
        2 => {
            let t2 = t * t;
            t2 * t2 - 2.0 * t2 * t + t2 - 1.0 / 30.0
        }
        3 => {
            let t2 = t * t;
            let t4 = t2 * t2;
            t4 * t2 - 3.0 * t4 * t + 2.5 * t4 - 0.5 * t2 + 1.0 / 42.0
        }
        _ => unreachable!("smoothness validated at construction"),
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Periodic Sobolev kernel of smoothness `s` on the unit circle:
/// `1 + 2 Σ_{m≥1} m^{-2s} cos(2π m (x - y))`, evaluated through the
/// Bernoulli polynomial `B_{2s}` of the fractional lag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicSobolev {
    s: u32,
    scale: f64,
}

impl PeriodicSobolev {
    pub fn new(s: u32) -> Result<Self> {
        if !(1..=3).contains(&s) {
            return Err(Error::UnsupportedSmoothness(s));
        }
        let sign = if s % 2 == 1 { 1.0 } else { -1.0 };
        let scale = sign * (2.0 * PI).powi(2 * s as i32) / factorial(2 * s);
        Ok(PeriodicSobolev { s, scale })
    }

    pub fn smoothness(&self) -> u32 {
        self.s
    }

    /// Value as a function of the lag `x - y`.
    #[inline]
    pub fn at_lag(&self, lag: f64) -> f64 {
        // Lags between points of [0,1] avoid the floor call.
        let t = if (0.0..1.0).contains(&lag) {
            lag
        } else if (-1.0..0.0).contains(&lag) {
            lag + 1.0
        } else {
            lag - lag.floor()
        };
        1.0 + self.scale * bernoulli_even(self.s, t)
    }

    /// `k(x, x) = 1 + 2 ζ(2s)`.
    pub fn diagonal_value(&self) -> f64 {
        self.at_lag(0.0)
    }
}

/// Scalar periodic Sobolev kernel.
pub fn sobolev_kernel(s: u32, x: f64, y: f64) -> Result<f64> {
    Ok(PeriodicSobolev::new(s)?.at_lag(x - y))
}

impl Kernel for PeriodicSobolev {
    fn dim(&self) -> usize {
        1
    }

    #[inline]
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.at_lag(x[0] - y[0])
    }

    fn diag(&self, _x: &[f64]) -> f64 {
        self.diagonal_value()
    }

    fn diagonal_bound(&self) -> f64 {
        self.diagonal_value()
    }

    fn constant_diagonal(&self) -> bool {
        true
    }

    fn uniform_embedding(&self) -> Option<f64> {
        // Every cosine mode integrates to zero over a period.
        Some(1.0)
    }

    fn eigenvalue(&self, i: usize) -> Option<f64> {
        if i == 0 {
            return None;
        }
        if i == 1 {
            return Some(1.0);
        }
        let m = (i / 2) as f64;
        Some(m.powi(-2 * self.s as i32))
    }

    fn name(&self) -> String {
        format!("sobolev(s={})", self.s)
    }
}

// ---------------------------------------------------------------------------
// Tensor product

/// `k(x, y) = Π_j base(x_j, y_j)` for a one-dimensional `base`.
#[derive(Clone, Debug)]
pub struct TensorProduct<K> {
    base: K,
    dim: usize,
}

impl<K: Kernel> TensorProduct<K> {
    pub fn new(base: K, dim: usize) -> Result<Self> {
        if base.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: base.dim() });
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("product dimension must be positive".into()));
        }
        Ok(TensorProduct { base, dim })
    }

    pub fn base(&self) -> &K {
        &self.base
    }
}

/// Product of a one-dimensional kernel over matching coordinates.
pub fn product_kernel<K: Kernel + ?Sized>(base: &K, x: &[f64], y: &[f64]) -> Result<f64> {
    if base.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: base.dim() });
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    Ok(x.iter().zip(y).map(|(a, b)| base.eval(&[*a], &[*b])).product())
}

impl<K: Kernel> Kernel for TensorProduct<K> {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut v = 1.0;
        for j in 0..self.dim {
            v *= self.base.eval(&x[j..j + 1], &y[j..j + 1]);
        }
        v
    }

    fn diag(&self, x: &[f64]) -> f64 {
        if self.base.constant_diagonal() {
            self.base.diag(&x[..1]).powi(self.dim as i32)
        } else {
            (0..self.dim).map(|j| self.base.diag(&x[j..j + 1])).product()
        }
    }

    fn diagonal_bound(&self) -> f64 {
        self.base.diagonal_bound().powi(self.dim as i32)
    }

    fn constant_diagonal(&self) -> bool {
        self.base.constant_diagonal()
    }

    fn uniform_embedding(&self) -> Option<f64> {
        self.base.uniform_embedding().map(|v| v.powi(self.dim as i32))
    }

    fn name(&self) -> String {
        format!("{}^{}", self.base.name(), self.dim)
    }
}

// ---------------------------------------------------------------------------
// Radial kernels

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Matérn 5/2 kernel with `r = ‖x − y‖ / bandwidth`:
/// `(1 + √5 r + 5r²/3) exp(−√5 r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matern52 {
    bandwidth: f64,
    dim: usize,
}

impl Matern52 {
    pub fn new(bandwidth: f64, dim: usize) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Matern52 { bandwidth, dim })
    }

    #[inline]
    pub fn at_distance(&self, dist: f64) -> f64 {
        let r = 5f64.sqrt() * dist / self.bandwidth;
        (1.0 + r + r * r / 3.0) * (-r).exp()
    }
}

/// Matérn 5/2 value; rejects non-finite input.
pub fn matern52_kernel(bandwidth: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let k = Matern52::new(bandwidth, x.len())?;
    let v = k.at_distance(euclidean(x, y));
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("matern52_kernel"))
    }
}

impl Kernel for Matern52 {
    fn dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.at_distance(euclidean(x, y))
    }
    fn diag(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn diagonal_bound(&self) -> f64 {
        1.0
    }
    fn constant_diagonal(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("matern52(bandwidth={})", self.bandwidth)
    }
}

/// Gaussian kernel `exp(−‖x − y‖² / (2 bandwidth²))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    bandwidth: f64,
    dim: usize,
}

impl Gaussian {
    pub fn new(bandwidth: f64, dim: usize) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Gaussian { bandwidth, dim })
    }
}

impl Kernel for Gaussian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }
    fn diag(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn diagonal_bound(&self) -> f64 {
        1.0
    }
    fn constant_diagonal(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("gaussian(bandwidth={})", self.bandwidth)
    }
}

/// `k ≡ c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant {
    pub value: f64,
    pub dim: usize,
}

impl Kernel for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _x: &[f64], _y: &[f64]) -> f64 {
        self.value
    }
    fn diagonal_bound(&self) -> f64 {
        self.value
    }
    fn constant_diagonal(&self) -> bool {
        true
    }
    fn uniform_embedding(&self) -> Option<f64> {
        Some(self.value)
    }
    fn name(&self) -> String {
        format!("constant({})", self.value)
    }
}

/// Kernel on a finite space given by its Gram matrix. Atom `i` is the
/// one-dimensional point `[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramKernel {
    size: usize,
    entries: Vec<f64>,
    bound: f64,
}

impl GramKernel {
    /// `entries` is an `size × size` symmetric matrix in row-major order.
    pub fn new(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch { expected: size * size, got: entries.len() });
        }
        for i in 0..size {
            for j in 0..i {
                let (a, b) = (entries[i * size + j], entries[j * size + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidParameter(format!("Gram matrix not symmetric at ({i},{j})")));
                }
            }
        }
        let bound = (0..size).map(|i| entries[i * size + i]).fold(0.0, f64::max);
        Ok(GramKernel { size, entries, bound })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    #[inline]
    fn index(&self, x: &[f64]) -> usize {
        let i = x[0].round();
        debug_assert!(i >= 0.0 && (i as usize) < self.size, "atom index out of range");
        i as usize
    }
}

impl Kernel for GramKernel {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.entry(self.index(x), self.index(y))
    }
    fn diagonal_bound(&self) -> f64 {
        self.bound
    }
    fn name(&self) -> String {
        format!("gram({}x{})", self.size, self.size)
    }
}

/// User-supplied kernel. The caller declares the diagonal bound.
pub struct BlackBox<F> {
    f: F,
    dim: usize,
    bound: f64,
    label: String,
}

impl<F> BlackBox<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, diagonal_bound: f64, f: F) -> Result<Self> {
        if !(diagonal_bound > 0.0 && diagonal_bound.is_finite()) {
            return Err(Error::InvalidParameter("black-box kernels must declare a positive diagonal bound".into()));
        }
        Ok(BlackBox { f, dim, bound: diagonal_bound, label: "blackbox".into() })
    }

    pub fn with_name(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

impl<F> fmt::Debug for BlackBox<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBox").field("dim", &self.dim).field("bound", &self.bound).finish()
    }
}

impl<F> Kernel for BlackBox<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.f)(x, y)
    }
    fn diagonal_bound(&self) -> f64 {
        self.bound
    }
    fn name(&self) -> String {
        self.label.clone()
    }
}
