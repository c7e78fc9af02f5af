use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use super::{SampleTrace, SamplerConfig};
use crate::domains::{sample_mu, Measure};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::point::Point;

const INIT_ATTEMPTS: usize = 100;

fn log_det<K: Kernel + ?Sized>(kernel: &K, nodes: &[Point]) -> Option<f64> {
    let n = nodes.len();
    let g = DMatrix::from_fn(n, n, |i, j| kernel.eval(&nodes[i], &nodes[j]));
    let chol = g.cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..n {
        let v = l[(i, i)];
        if !(v > 0.0) {
            return None;
        }
        acc += 2.0 * v.ln();
    }
    acc.is_finite().then_some(acc)
}

/// Lazy Metropolis chain on `n`-point sets with stationary density
/// proportional to `det k(S,S)` against `μ^n`.
pub struct CvsChain<'a, K: ?Sized> {
    measure: &'a dyn Measure,
    kernel: &'a K,
    nodes: Vec<Point>,
    logdet: f64,
    proposals: Vec<u64>,
}

impl<'a, K: Kernel + ?Sized> CvsChain<'a, K> {
    /// Initialize from iid draws, retrying while the Gram matrix is singular.
    pub fn new<R: Rng>(measure: &'a dyn Measure, kernel: &'a K, n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        for _ in 0..INIT_ATTEMPTS {
            let nodes = (0..n).map(|_| sample_mu(measure, rng)).collect::<Result<Vec<_>>>()?;
            if let Some(logdet) = log_det(kernel, &nodes) {
                return Ok(CvsChain { measure, kernel, nodes, logdet, proposals: vec![0; n] });
            }
        }
        Err(Error::DegenerateInitialization { attempts: INIT_ATTEMPTS })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn log_det(&self) -> f64 {
        self.logdet
    }

    /// One step: replace a uniformly chosen node by a fresh `μ` draw with
    /// probability `½ min(1, det ratio)`. Returns whether the move was taken.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> Result<bool> {
        let fresh = sample_mu(self.measure, rng)?;
        let slot = rng.gen_range(0..self.nodes.len());
        self.proposals[slot] += 1;
        let u: f64 = rng.gen();
        let old = std::mem::replace(&mut self.nodes[slot], fresh);
        if let Some(ld) = log_det(self.kernel, &self.nodes) {
            if u < 0.5 * (ld - self.logdet).exp().min(1.0) {
                self.logdet = ld;
                return Ok(true);
            }
        }
        self.nodes[slot] = old;
        Ok(false)
    }
}

/// Continuous volume sampling by MCMC, returning the final state after
/// `mcmc_steps_factor · n` steps.
pub fn cvs_mcmc<K, R>(measure: &dyn Measure, kernel: &K, cfg: &SamplerConfig, rng: &mut R) -> Result<SampleTrace>
where
    K: Kernel + ?Sized,
    R: Rng,
{
    let start = Instant::now();
    let mut chain = CvsChain::new(measure, kernel, cfg.n, rng)?;
    for _ in 0..cfg.mcmc_steps_factor * cfg.n {
        chain.step(rng)?;
    }
    let proposals_per_node = chain.proposals.iter().map(|p| p + 1).collect();
    Ok(SampleTrace {
        nodes: chain.nodes,
        proposals_per_node,
        alpha_history: Vec::new(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}
