//! Node selection.
//!
//! - [`rpcholesky_discrete`]: exact randomly pivoted Cholesky on a finite space.
//! - [`rpcholesky_rejection`]: rejection sampling against `k(x,x) dμ`.
//! - [`rpcholesky_optimized`]: the same loop with an acceptance envelope `α`
//!   recomputed by global optimization after a run of rejections.
//! - [`iid_sampler`] and [`cvs_mcmc`]: baselines.

mod cvs;
mod optimize;
mod rejection;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;

use crate::domains::{DiscreteSpace, Measure};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::lowrank::{CholeskyState, PIVOT_TOLERANCE};
use crate::point::Point;

pub use cvs::{cvs_mcmc, CvsChain};
pub use optimize::{EnvelopeOptimizer, MultiStart, Objective};
pub use rejection::{rpcholesky_optimized, rpcholesky_rejection};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub n: usize,
    /// Consecutive rejections before `α` is recomputed.
    pub trials_max: usize,
    /// Cap on proposals across one whole sampling run.
    pub proposal_cap: u64,
    /// Volume-sampling MCMC runs `mcmc_steps_factor · n` steps.
    pub mcmc_steps_factor: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { n: 1, trials_max: 100, proposal_cap: 10_000_000, mcmc_steps_factor: 10, seed: 0 }
    }
}

impl SamplerConfig {
    pub fn with_n(n: usize) -> Self {
        SamplerConfig { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        if !(25..=1000).contains(&self.trials_max) {
            return Err(Error::InvalidConfig(format!("trials_max = {} outside [25, 1000]", self.trials_max)));
        }
        if self.proposal_cap == 0 {
            return Err(Error::InvalidConfig("proposal_cap must be positive".into()));
        }
        if self.mcmc_steps_factor == 0 {
            return Err(Error::InvalidConfig("mcmc_steps_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Instrumented output of one sampling run.
#[derive(Clone, Debug, Default)]
pub struct SampleTrace {
    pub nodes: Vec<Point>,
    pub proposals_per_node: Vec<u64>,
    /// Every recomputed acceptance envelope, in order.
    pub alpha_history: Vec<f64>,
    /// Seconds spent inside the sampler.
    pub wall_time: f64,
}

impl SampleTrace {
    /// Equality of everything the random stream determines (not timing).
    pub fn same_draws(&self, other: &SampleTrace) -> bool {
        self.nodes == other.nodes
            && self.proposals_per_node == other.proposals_per_node
            && self.alpha_history == other.alpha_history
    }

    pub fn total_proposals(&self) -> u64 {
        self.proposals_per_node.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    RpcRejection,
    RpcOptimized,
    Iid,
    Cvs,
    RpcDiscrete,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 5] =
        [SamplerKind::RpcRejection, SamplerKind::RpcOptimized, SamplerKind::Iid, SamplerKind::Cvs, SamplerKind::RpcDiscrete];

    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::RpcRejection => "rpc-rejection",
            SamplerKind::RpcOptimized => "rpc-optimized",
            SamplerKind::Iid => "iid",
            SamplerKind::Cvs => "cvs",
            SamplerKind::RpcDiscrete => "rpc-discrete",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown sampler '{s}'")))
    }
}

/// Dispatch on [`SamplerKind`] with the default optimizer.
pub fn run_sampler<K, R>(kind: SamplerKind, measure: &dyn Measure, kernel: &K, cfg: &SamplerConfig, rng: &mut R) -> Result<SampleTrace>
where
    K: Kernel + ?Sized,
    R: Rng,
{
    match kind {
        SamplerKind::RpcRejection => rpcholesky_rejection(measure, kernel, cfg, rng),
        SamplerKind::RpcOptimized => rpcholesky_optimized(measure, kernel, cfg, rng, &MultiStart::default()),
        SamplerKind::Iid => iid_sampler(measure, cfg.n, rng),
        SamplerKind::Cvs => cvs_mcmc(measure, kernel, cfg, rng),
        SamplerKind::RpcDiscrete => {
            let space = measure
                .atoms()
                .ok_or_else(|| Error::InvalidConfig("rpc-discrete requires a finite space".into()))?;
            rpcholesky_discrete(space, kernel, cfg.n, rng)
        }
    }
}

/// Exact randomly pivoted Cholesky on a finite space: each step draws an atom
/// with probability proportional to `weight × residual diagonal`.
pub fn rpcholesky_discrete<K, R>(space: &DiscreteSpace, kernel: &K, n: usize, rng: &mut R) -> Result<SampleTrace>
where
    K: Kernel + ?Sized,
    R: Rng,
{
    let start = Instant::now();
    let mut state = CholeskyState::with_capacity(kernel, n);
    let mut scores = vec![0.0; space.len()];
    while state.len() < n {
        let mut total = 0.0;
        for (i, (p, w)) in space.points().iter().zip(space.weights()).enumerate() {
            let d = state.residual_diag(p)?;
            scores[i] = if d > PIVOT_TOLERANCE * kernel.diag(p) { w * d } else { 0.0 };
            total += scores[i];
        }
        if total <= 0.0 {
            return Err(Error::RankExhausted { selected: state.len(), requested: n });
        }
        let u = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &sc) in scores.iter().enumerate() {
            acc += sc;
            if sc > 0.0 {
                pick = Some(i);
                if u < acc {
                    break;
                }
            }
        }
        let p = space.points()[pick.expect("positive total")].clone();
        state.push(p)?;
    }
    Ok(SampleTrace {
        nodes: state.into_nodes(),
        proposals_per_node: vec![1; n],
        alpha_history: Vec::new(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// `n` independent draws from `μ / μ(X)`.
pub fn iid_sampler<R>(measure: &dyn Measure, n: usize, rng: &mut R) -> Result<SampleTrace>
where
    R: Rng,
{
    let start = Instant::now();
    let nodes = (0..n).map(|_| measure.sample(rng)).collect::<Result<Vec<_>>>()?;
    Ok(SampleTrace {
        nodes,
        proposals_per_node: vec![1; n],
        alpha_history: Vec::new(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::UnitBox;
    use crate::kernels::{GramKernel, PeriodicSobolev};
    use crate::rng::trial_rng;

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::with_n(4).validate().is_ok());
        let bad = SamplerConfig { trials_max: 10, ..SamplerConfig::with_n(4) };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        let bad = SamplerConfig { trials_max: 2000, ..SamplerConfig::with_n(4) };
        assert!(bad.validate().is_err());
        assert!(SamplerConfig::with_n(0).validate().is_err());
    }

    #[test]
    fn kind_round_trip() {
        for k in SamplerKind::ALL {
            assert_eq!(k.as_str().parse::<SamplerKind>().unwrap(), k);
        }
        assert!("fast".parse::<SamplerKind>().is_err());
    }

    #[test]
    fn discrete_two_point_chain() {
        let space = DiscreteSpace::indexed(vec![1.0, 1.0]).unwrap();
        let k = GramKernel::new(2, vec![2.0, 1.0, 1.0, 1.0]).unwrap();
        let runs = 60_000;
        let mut first_a = 0;
        for t in 0..runs {
            let mut rng = trial_rng(1, t);
            let tr = rpcholesky_discrete(&space, &k, 2, &mut rng).unwrap();
            if tr.nodes[0][0] == 0.0 {
                first_a += 1;
                assert_eq!(tr.nodes[1][0], 1.0);
            }
        }
        let p = first_a as f64 / runs as f64;
        assert!((p - 2.0 / 3.0).abs() < 3.0 * (2.0 / 9.0 / runs as f64).sqrt());
    }

    #[test]
    fn discrete_identity_kernel_first_node_uniform() {
        let space = DiscreteSpace::indexed(vec![1.0; 3]).unwrap();
        let k = GramKernel::new(3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let runs = 30_000;
        let mut counts = [0usize; 3];
        for t in 0..runs {
            let tr = rpcholesky_discrete(&space, &k, 1, &mut trial_rng(2, t)).unwrap();
            counts[tr.nodes[0][0] as usize] += 1;
        }
        let sigma = (2.0 / 9.0 / runs as f64).sqrt();
        for c in counts {
            assert!((c as f64 / runs as f64 - 1.0 / 3.0).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn discrete_exhaustion_and_rank_error() {
        let space = DiscreteSpace::indexed(vec![1.0; 3]).unwrap();
        let k = GramKernel::new(3, vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        let tr = rpcholesky_discrete(&space, &k, 3, &mut trial_rng(3, 0)).unwrap();
        let mut idx: Vec<usize> = tr.nodes.iter().map(|p| p[0] as usize).collect();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2]);
        let rank_one = GramKernel::new(3, vec![1.0; 9]).unwrap();
        assert!(matches!(
            rpcholesky_discrete(&space, &rank_one, 2, &mut trial_rng(3, 1)),
            Err(Error::RankExhausted { selected: 1, requested: 2 })
        ));
    }

    #[test]
    fn iid_trivial_cases() {
        let m = UnitBox::new(2).unwrap();
        let tr = iid_sampler(&m, 0, &mut trial_rng(4, 0)).unwrap();
        assert!(tr.nodes.is_empty());
        let a = iid_sampler(&m, 16, &mut trial_rng(4, 1)).unwrap();
        let b = iid_sampler(&m, 16, &mut trial_rng(4, 1)).unwrap();
        assert!(a.same_draws(&b));
    }

    #[test]
    fn every_sampler_is_deterministic() {
        let m = UnitBox::new(1).unwrap();
        let k = PeriodicSobolev::new(2).unwrap();
        let cfg = SamplerConfig { n: 12, trials_max: 25, ..SamplerConfig::default() };
        for kind in [SamplerKind::RpcRejection, SamplerKind::RpcOptimized, SamplerKind::Iid, SamplerKind::Cvs] {
            let a = run_sampler(kind, &m, &k, &cfg, &mut trial_rng(9, 3)).unwrap();
            let b = run_sampler(kind, &m, &k, &cfg, &mut trial_rng(9, 3)).unwrap();
            assert!(a.same_draws(&b), "{kind}");
            assert_eq!(a.nodes.len(), 12);
            assert!(a.proposals_per_node.iter().all(|&p| p >= 1));
        }
        assert!(run_sampler(SamplerKind::RpcDiscrete, &m, &k, &cfg, &mut trial_rng(9, 3)).is_err());
    }
}
