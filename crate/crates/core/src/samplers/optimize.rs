use rand::RngCore;

use crate::domains::Measure;
use crate::error::Result;
use crate::point::Point;

/// A function to maximize, with an optional batched form.
pub trait Objective: Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn values(&self, xs: &[Point]) -> Vec<f64> {
        xs.iter().map(|x| self.value(x)).collect()
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for F {
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Global maximizer for the acceptance envelope `α`.
///
/// Exactness of the optimized sampler requires the returned value to be at
/// least the true maximum of `objective` over `X`.
pub trait EnvelopeOptimizer: Sync {
    /// Maximize `objective` over the support of `measure`. `nodes` is the
    /// number of selected nodes, a proxy for how many local maxima to expect.
    fn maximize(
        &self,
        measure: &dyn Measure,
        objective: &dyn Objective,
        nodes: usize,
        rng: &mut dyn RngCore,
    ) -> Result<f64>;
}

/// Exhaustive scan on finite spaces; otherwise random multi-start with
/// coordinate-wise golden-section refinement of the best candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiStart {
    /// Minimum number of random starts.
    pub starts: usize,
    /// Extra starts per selected node.
    pub starts_per_node: usize,
    /// Number of distinct basins refined by golden section.
    pub refine: usize,
    pub sweeps: usize,
    pub golden_iters: usize,
}

impl Default for MultiStart {
    fn default() -> Self {
        MultiStart { starts: 64, starts_per_node: 16, refine: 12, sweeps: 2, golden_iters: 20 }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[lo, hi]`; returns `(argmax, max)`
/// among the evaluated points.
fn golden_max(f: &mut dyn FnMut(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    let (mut best_x, mut best_f) = if fa >= fb { (a, fa) } else { (b, fb) };
    for _ in 0..iters {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
            if fa > best_f {
                best_x = a;
                best_f = fa;
            }
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
            if fb > best_f {
                best_x = b;
                best_f = fb;
            }
        }
    }
    (best_x, best_f)
}

impl EnvelopeOptimizer for MultiStart {
    fn maximize(
        &self,
        measure: &dyn Measure,
        objective: &dyn Objective,
        nodes: usize,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        if let Some(space) = measure.atoms() {
            let best = space
                .points()
                .iter()
                .zip(space.weights())
                .filter(|(_, w)| **w > 0.0)
                .map(|(p, _)| objective.value(p))
                .fold(f64::NEG_INFINITY, f64::max);
            return Ok(best);
        }

        let eval = |x: &[f64]| if measure.contains(x) { objective.value(x) } else { f64::NEG_INFINITY };
        let count = self.starts.max(self.starts_per_node * (nodes + 1));
        let starts = (0..count).map(|_| measure.sample(rng)).collect::<Result<Vec<_>>>()?;
        let values = objective.values(&starts);
        let mut cands: Vec<(f64, Vec<f64>)> = values
            .into_iter()
            .zip(starts)
            .map(|(v, x)| (if measure.contains(&x) && !v.is_nan() { v } else { f64::NEG_INFINITY }, x.into_inner()))
            .collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = cands.first().map_or(f64::NEG_INFINITY, |c| c.0);

        let bbox = measure.bounding_box();
        let d = bbox.len();
        // Local maxima are roughly one node spacing apart.
        let spread = 0.5 * ((nodes + 1) as f64).powf(-1.0 / d as f64);
        // Best start from each of the `refine` best distinct basins.
        let mut chosen: Vec<(f64, Vec<f64>)> = Vec::with_capacity(self.refine);
        for (v, x) in cands {
            if chosen.len() == self.refine {
                break;
            }
            let near = chosen.iter().any(|(_, c)| {
                c.iter().zip(&x).zip(&bbox).all(|((a, b), (lo, hi))| (a - b).abs() < 0.5 * spread * (hi - lo))
            });
            if !near {
                chosen.push((v, x));
            }
        }
        for (v0, mut x) in chosen {
            let mut fx = v0;
            for _ in 0..self.sweeps {
                for j in 0..d {
                    let (lo, hi) = bbox[j];
                    let h = spread * (hi - lo);
                    let a = (x[j] - h).max(lo);
                    let b = (x[j] + h).min(hi);
                    let mut probe = x.clone();
                    let (xj, fj) = golden_max(
                        &mut |t| {
                            probe[j] = t;
                            eval(&probe)
                        },
                        a,
                        b,
                        self.golden_iters,
                    );
                    if fj > fx {
                        fx = fj;
                        x[j] = xj;
                    }
                }
            }
            best = best.max(fx);
        }
        Ok(best)
    }
}
