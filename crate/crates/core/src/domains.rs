//! Spaces and measures.
//!
//! A [`Measure`] describes `μ` through a density against Lebesgue measure on
//! an axis-aligned bounding box (or atom weights, for finite spaces). Draws
//! from `μ / μ(X)` use rejection against the uniform box proposal.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::point::Point;

/// Proposal cap for rejection draws from `μ` and from `k(x,x) dμ`.
pub const DEFAULT_PROPOSAL_CAP: u64 = 1_000_000;

pub trait Measure: Send + Sync {
    fn dim(&self) -> usize;

    fn contains(&self, x: &[f64]) -> bool;

    /// Density of `μ` with respect to Lebesgue measure; zero outside `X`.
    fn density(&self, x: &[f64]) -> f64;

    fn density_bound(&self) -> f64;

    fn bounding_box(&self) -> Vec<(f64, f64)>;

    /// One draw from `μ / μ(X)`.
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Point>;

    /// The underlying atoms when the space is finite.
    fn atoms(&self) -> Option<&DiscreteSpace> {
        None
    }

    /// Weighted nodes integrating against `μ` that resolve the boundary,
    /// used by [`quadrature_grid`] in place of the midpoint grid.
    fn quadrature_rule(&self, _per_dim: usize) -> Option<Vec<(Point, f64)>> {
        None
    }

    /// True for `Unif[0,1]^d`, where analytic kernel embeddings apply.
    fn is_unit_box(&self) -> bool {
        false
    }

    fn name(&self) -> String;
}

/// Rejection draw from `μ / μ(X)` using the uniform bounding-box proposal.
pub fn rejection_sample<M: Measure + ?Sized>(measure: &M, rng: &mut dyn RngCore, cap: u64) -> Result<Point> {
    let bbox = measure.bounding_box();
    let bound = measure.density_bound();
    for _ in 0..cap {
        let p: Vec<f64> = bbox.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect();
        if !measure.contains(&p) {
            continue;
        }
        if rng.gen::<f64>() * bound < measure.density(&p) {
            return Ok(Point::new(p));
        }
    }
    Err(Error::DegenerateMeasure { attempts: cap })
}

/// Draw from `μ / μ(X)`.
pub fn sample_mu<M: Measure + ?Sized, R: Rng>(measure: &M, rng: &mut R) -> Result<Point> {
    measure.sample(rng)
}

/// Draw from `k(x,x) dμ(x) / ∫ k dμ`: propose from `μ`, accept with
/// probability `k(x,x) / diagonal_bound`. Returns the point and the number of
/// proposals it took.
pub fn sample_diagonal_counted<M, K, R>(measure: &M, kernel: &K, rng: &mut R) -> Result<(Point, u64)>
where
    M: Measure + ?Sized,
    K: Kernel + ?Sized,
    R: Rng,
{
    if kernel.constant_diagonal() {
        return Ok((measure.sample(rng)?, 1));
    }
    let bound = kernel.diagonal_bound();
    for attempt in 1..=DEFAULT_PROPOSAL_CAP {
        let x = measure.sample(rng)?;
        if rng.gen::<f64>() * bound < kernel.diag(&x) {
            return Ok((x, attempt));
        }
    }
    Err(Error::DegenerateMeasure { attempts: DEFAULT_PROPOSAL_CAP })
}

pub fn sample_diagonal<M, K, R>(measure: &M, kernel: &K, rng: &mut R) -> Result<Point>
where
    M: Measure + ?Sized,
    K: Kernel + ?Sized,
    R: Rng,
{
    sample_diagonal_counted(measure, kernel, rng).map(|(p, _)| p)
}

/// Midpoint tensor grid over the bounding box with weights
/// `cell volume × density`; cells outside `X` are dropped. Finite spaces
/// return their atoms and weights.
pub fn quadrature_grid<M: Measure + ?Sized>(measure: &M, per_dim: usize) -> Vec<(Point, f64)> {
    if let Some(space) = measure.atoms() {
        return space.points().iter().cloned().zip(space.weights().iter().copied()).collect();
    }
    if let Some(rule) = measure.quadrature_rule(per_dim) {
        return rule;
    }
    let bbox = measure.bounding_box();
    let d = bbox.len();
    let steps: Vec<f64> = bbox.iter().map(|&(lo, hi)| (hi - lo) / per_dim as f64).collect();
    let cell: f64 = steps.iter().product();
    let total = per_dim.pow(d as u32);
    let mut out = Vec::new();
    let mut coords = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for j in (0..d).rev() {
            let idx = rem % per_dim;
            rem /= per_dim;
            coords[j] = bbox[j].0 + (idx as f64 + 0.5) * steps[j];
        }
        if measure.contains(&coords) {
            let w = measure.density(&coords) * cell;
            if w > 0.0 {
                out.push((Point::new(coords.clone()), w));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------

/// `Unif[0,1]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitBox {
    dim: usize,
}

impl UnitBox {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(UnitBox { dim })
    }
}

impl Measure for UnitBox {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| (0.0..=1.0).contains(v))
    }
    fn density(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            1.0
        } else {
            0.0
        }
    }
    fn density_bound(&self) -> f64 {
        1.0
    }
    fn bounding_box(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); self.dim]
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Point> {
        Ok(Point::new((0..self.dim).map(|_| rng.gen::<f64>()).collect()))
    }
    fn is_unit_box(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("box(d={})", self.dim)
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let k = k as f64;
                (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out.reverse();
    out
}

/// Crescent: the disc of radius 1 about `(1, 1)` minus the open disc of
/// radius 0.8 about `(1.5, 1)`, with `dμ = (x² + y²) dx dy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crescent {
    cap: u64,
}

impl Crescent {
    pub const OUTER_CENTER: (f64, f64) = (1.0, 1.0);
    pub const OUTER_RADIUS: f64 = 1.0;
    pub const INNER_CENTER: (f64, f64) = (1.5, 1.0);
    pub const INNER_RADIUS: f64 = 0.8;

    pub fn new() -> Self {
        Crescent { cap: DEFAULT_PROPOSAL_CAP }
    }

    pub fn with_cap(cap: u64) -> Self {
        Crescent { cap }
    }

    /// Abscissa of the two horns, where the boundary circles meet.
    fn horn_x() -> f64 {
        let (cx, _) = Self::OUTER_CENTER;
        let dx = Self::INNER_CENTER.0 - cx;
        let r1 = Self::OUTER_RADIUS;
        let r2 = Self::INNER_RADIUS;
        cx + (r1 * r1 - r2 * r2 + dx * dx) / (2.0 * dx)
    }
}

impl Default for Crescent {
    fn default() -> Self {
        Self::new()
    }
}

impl Measure for Crescent {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, p: &[f64]) -> bool {
        let (ox, oy) = Self::OUTER_CENTER;
        let (ix, iy) = Self::INNER_CENTER;
        let outer = (p[0] - ox).powi(2) + (p[1] - oy).powi(2);
        let inner = (p[0] - ix).powi(2) + (p[1] - iy).powi(2);
        outer <= Self::OUTER_RADIUS * Self::OUTER_RADIUS && inner >= Self::INNER_RADIUS * Self::INNER_RADIUS
    }

    fn density(&self, p: &[f64]) -> f64 {
        if self.contains(p) {
            p[0] * p[0] + p[1] * p[1]
        } else {
            0.0
        }
    }

    fn density_bound(&self) -> f64 {
        // x² + y² at the far corner of the bounding box.
        let b = self.bounding_box();
        b[0].1 * b[0].1 + b[1].1 * b[1].1
    }

    fn bounding_box(&self) -> Vec<(f64, f64)> {
        let (cx, cy) = Self::OUTER_CENTER;
        let r = Self::OUTER_RADIUS;
        vec![(cx - r, Self::horn_x()), (cy - r, cy + r)]
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<Point> {
        rejection_sample(self, rng, self.cap)
    }

    /// Column rule with `per_dim / 4` Gauss points per direction and piece.
    /// Left of the inner disc each column is one interval; right of it, two.
    /// The substitutions `x = a + b u²` absorb the square-root behaviour of
    /// the chord lengths where a column first touches a circle.
    fn quadrature_rule(&self, per_dim: usize) -> Option<Vec<(Point, f64)>> {
        let gl = gauss_legendre((per_dim / 4).max(2));
        let (ox, oy) = Self::OUTER_CENTER;
        let (ix, _) = Self::INNER_CENTER;
        let (r1, r2) = (Self::OUTER_RADIUS, Self::INNER_RADIUS);
        let chord = |r: f64, c: f64, x: f64| (r * r - (x - c).powi(2)).max(0.0).sqrt();
        let (x0, x1, x2) = (ox - r1, ix - r2, Self::horn_x());
        let mut out = Vec::new();
        for (lo, hi) in [(x0, x1), (x1, x2)] {
            for &(u, wu) in &gl {
                let x = lo + (hi - lo) * u * u;
                let dx = 2.0 * (hi - lo) * u * wu;
                let h1 = chord(r1, ox, x);
                let pieces = if lo == x1 {
                    let h2 = chord(r2, ix, x);
                    vec![(oy - h1, oy - h2), (oy + h2, oy + h1)]
                } else {
                    vec![(oy - h1, oy + h1)]
                };
                for (a, b) in pieces {
                    for &(v, wv) in &gl {
                        let y = a + (b - a) * v;
                        let w = dx * (b - a) * wv * (x * x + y * y);
                        if w > 0.0 {
                            out.push((Point::new(vec![x, y]), w));
                        }
                    }
                }
            }
        }
        Some(out)
    }

    fn name(&self) -> String {
        "crescent".into()
    }
}

/// Finite space with nonnegative atom weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSpace {
    points: Vec<Point>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    dim: usize,
}

impl DiscreteSpace {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidParameter("need one weight per atom and at least one atom".into()));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::InvalidParameter("atoms must share a dimension".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("atom weights must be finite and nonnegative".into()));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::InvalidParameter("atom weights must have positive total".into()));
        }
        Ok(DiscreteSpace { points, weights, cumulative, dim })
    }

    /// Atoms `[0], [1], …` for use with [`crate::kernels::GramKernel`].
    pub fn indexed(weights: Vec<f64>) -> Result<Self> {
        let points = (0..weights.len()).map(|i| Point::scalar(i as f64)).collect();
        Self::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p.coords() == x)
    }

    /// Index of one atom drawn with probability proportional to its weight.
    pub fn sample_index(&self, rng: &mut dyn RngCore) -> usize {
        let u = rng.gen::<f64>() * self.total_weight();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.points.len() - 1)
    }
}

impl Measure for DiscreteSpace {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, x: &[f64]) -> bool {
        self.index_of(x).is_some()
    }
    fn density(&self, x: &[f64]) -> f64 {
        self.index_of(x).map_or(0.0, |i| self.weights[i])
    }
    fn density_bound(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
    fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|j| {
                let lo = self.points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
                let hi = self.points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect()
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Point> {
        Ok(self.points[self.sample_index(rng)].clone())
    }
    fn atoms(&self) -> Option<&DiscreteSpace> {
        Some(self)
    }
    fn name(&self) -> String {
        format!("discrete({} atoms)", self.points.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BlackBox, GramKernel, Matern52, PeriodicSobolev};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DRAWS: usize = 100_000;
    // 0.99 quantile of chi-square with 19 degrees of freedom.
    const CHI2_19_99: f64 = 36.190_869;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn uniform_mean() {
        let m = UnitBox::new(1).unwrap();
        let mut r = rng(1);
        let mean: f64 = (0..DRAWS).map(|_| sample_mu(&m, &mut r).unwrap()[0]).sum::<f64>() / DRAWS as f64;
        let sigma = (1.0 / 12.0 / DRAWS as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn crescent_geometry() {
        let c = Crescent::new();
        assert!(c.contains(&[0.1, 1.0]));
        assert!(!c.contains(&[1.5, 1.0]));
        assert!(!c.contains(&[1.9, 1.9]));
        let b = c.bounding_box();
        assert!((b[0].1 - 1.61).abs() < 1e-12);
        assert!(c.density_bound() >= c.density(&[1.61, 1.79]));
    }

    #[test]
    fn crescent_second_moment_matches_grid() {
        // Independent oracle: fine midpoint grid over the bounding box.
        let c = Crescent::new();
        let b = c.bounding_box();
        let m = 2000;
        let (hx, hy) = ((b[0].1 - b[0].0) / m as f64, (b[1].1 - b[1].0) / m as f64);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let p = [b[0].0 + (i as f64 + 0.5) * hx, b[1].0 + (j as f64 + 0.5) * hy];
                if c.contains(&p) {
                    let rho = p[0] * p[0] + p[1] * p[1];
                    num += rho * rho;
                    den += rho;
                }
            }
        }
        let expected = num / den;

        let mut r = rng(2);
        let vals: Vec<f64> = (0..DRAWS)
            .map(|_| {
                let p = sample_mu(&c, &mut r).unwrap();
                assert!(c.contains(&p));
                p[0] * p[0] + p[1] * p[1]
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / DRAWS as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (DRAWS - 1) as f64;
        let sigma = (var / DRAWS as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * sigma + 1e-3, "mean {mean} expected {expected}");
    }

    #[test]
    fn discrete_atom_frequencies() {
        let space = DiscreteSpace::new(vec![Point::scalar(0.0), Point::scalar(1.0)], vec![2.0, 1.0]).unwrap();
        let mut r = rng(3);
        let hits = (0..DRAWS).filter(|_| sample_mu(&space, &mut r).unwrap()[0] == 0.0).count();
        let p = hits as f64 / DRAWS as f64;
        let sigma = (2.0 / 9.0 / DRAWS as f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn discrete_space_validation() {
        assert!(DiscreteSpace::indexed(vec![0.0, 0.0]).is_err());
        assert!(DiscreteSpace::indexed(vec![1.0, -1.0]).is_err());
        assert!(DiscreteSpace::indexed(vec![]).is_err());
    }

    #[test]
    fn diagonal_draws_on_discrete_space() {
        let space = DiscreteSpace::indexed(vec![1.0, 1.0]).unwrap();
        let k = GramKernel::new(2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let mut r = rng(4);
        let hits = (0..DRAWS).filter(|_| sample_diagonal(&space, &k, &mut r).unwrap()[0] == 0.0).count();
        // k(a,a) μ(a) / (k(a,a) μ(a) + k(b,b) μ(b)) = 2/3
        let p = hits as f64 / DRAWS as f64;
        let sigma = (2.0 / 9.0 / DRAWS as f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn constant_diagonal_reduces_to_mu() {
        let m = UnitBox::new(1).unwrap();
        let k = PeriodicSobolev::new(1).unwrap();
        let mut a = rng(5);
        let mut b = rng(5);
        for _ in 0..100 {
            let (p, n) = sample_diagonal_counted(&m, &k, &mut a).unwrap();
            assert_eq!(n, 1);
            assert_eq!(p, sample_mu(&m, &mut b).unwrap());
        }
        let c = Crescent::new();
        let mat = Matern52::new(2.0, 2).unwrap();
        let mut a = rng(6);
        let mut b = rng(6);
        for _ in 0..100 {
            assert_eq!(sample_diagonal(&c, &mat, &mut a).unwrap(), sample_mu(&c, &mut b).unwrap());
        }
    }

    fn chi_square(counts: &[usize], probs: &[f64], total: usize) -> f64 {
        counts
            .iter()
            .zip(probs)
            .map(|(&c, &p)| {
                let e = p * total as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum()
    }

    #[test]
    fn diagonal_histogram_chi_square() {
        let m = UnitBox::new(1).unwrap();
        let k = BlackBox::new(1, 4.0, |x: &[f64], y: &[f64]| {
            (1.0 + x[0]) * (1.0 + y[0]) * (-(x[0] - y[0]).powi(2)).exp()
        })
        .unwrap();
        let bins = 20;
        // Grid quadrature of (1+x)^2 per bin.
        let sub = 1000;
        let mut probs = vec![0.0; bins];
        for (b, p) in probs.iter_mut().enumerate() {
            for i in 0..sub {
                let x = (b as f64 + (i as f64 + 0.5) / sub as f64) / bins as f64;
                *p += k.diag(&[x]) / (sub * bins) as f64;
            }
        }
        let z: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= z);

        let mut r = rng(7);
        let mut counts = vec![0usize; bins];
        for _ in 0..DRAWS {
            let x = sample_diagonal(&m, &k, &mut r).unwrap();
            assert!(m.contains(&x));
            counts[((x[0] * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let stat = chi_square(&counts, &probs, DRAWS);
        assert!(stat < CHI2_19_99, "chi-square {stat}");
    }

    #[test]
    fn uniform_histogram_chi_square() {
        let m = UnitBox::new(1).unwrap();
        let mut r = rng(8);
        let bins = 20;
        let mut counts = vec![0usize; bins];
        for _ in 0..DRAWS {
            let x = sample_mu(&m, &mut r).unwrap();
            counts[((x[0] * bins as f64) as usize).min(bins - 1)] += 1;
        }
        assert!(chi_square(&counts, &vec![1.0 / bins as f64; bins], DRAWS) < CHI2_19_99);
    }

    struct Empty;
    impl Measure for Empty {
        fn dim(&self) -> usize {
            1
        }
        fn contains(&self, _x: &[f64]) -> bool {
            true
        }
        fn density(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn density_bound(&self) -> f64 {
            1.0
        }
        fn bounding_box(&self) -> Vec<(f64, f64)> {
            vec![(0.0, 1.0)]
        }
        fn sample(&self, rng: &mut dyn RngCore) -> Result<Point> {
            rejection_sample(self, rng, 1000)
        }
        fn name(&self) -> String {
            "empty".into()
        }
    }

    #[test]
    fn degenerate_measure_errors() {
        let mut r = rng(9);
        assert!(matches!(sample_mu(&Empty, &mut r), Err(Error::DegenerateMeasure { attempts: 1000 })));
    }

    #[test]
    fn grid_weights_integrate_density() {
        let g = quadrature_grid(&UnitBox::new(2).unwrap(), 256);
        let total: f64 = g.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let c = quadrature_grid(&Crescent::new(), 256);
        assert!(c.iter().all(|(p, _)| Crescent::new().contains(p)));
    }

    #[test]
    fn gauss_legendre_is_exact_for_low_degree() {
        for m in 1..12 {
            let gl = gauss_legendre(m);
            for deg in 0..2 * m {
                let q: f64 = gl.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn crescent_rule_matches_reference_integrals() {
        let c = Crescent::new();
        let rule = quadrature_grid(&c, 128);
        let mass: f64 = rule.iter().map(|(_, w)| w).sum();
        // Independent adaptive quadrature of sin(x) eʸ (x² + y²) and of the density.
        let f: f64 = rule.iter().map(|(p, w)| w * p[0].sin() * p[1].exp()).sum();
        assert!((f - 8.349416060590992).abs() < 1e-10, "{f}");
        assert!((mass - 2.8090389415896317).abs() < 1e-10, "{mass}");
        // Coarse cross-check against the midpoint grid.
        let b = c.bounding_box();
        let n = 2000;
        let (hx, hy) = ((b[0].1 - b[0].0) / n as f64, (b[1].1 - b[1].0) / n as f64);
        let mut mid = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = [b[0].0 + (i as f64 + 0.5) * hx, b[1].0 + (j as f64 + 0.5) * hy];
                mid += c.density(&p) * hx * hy;
            }
        }
        assert!((mid - mass).abs() < 1e-3 * mass, "{mid} vs {mass}");
    }
}
