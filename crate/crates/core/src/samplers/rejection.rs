use std::time::Instant;

use rand::Rng;

use super::optimize::{EnvelopeOptimizer, Objective};
use super::{SampleTrace, SamplerConfig};
use crate::domains::{sample_diagonal_counted, Measure};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::lowrank::{CholeskyState, Residual, PIVOT_TOLERANCE};
use crate::point::Point;

/// Randomly pivoted Cholesky by rejection: propose from `k(x,x) dμ`, accept
/// with probability `d / k(s,s)` where `d` is the residual diagonal.
pub fn rpcholesky_rejection<K, R>(measure: &dyn Measure, kernel: &K, cfg: &SamplerConfig, rng: &mut R) -> Result<SampleTrace>
where
    K: Kernel + ?Sized,
    R: Rng,
{
    rejection_loop(measure, kernel, cfg, rng, None)
}

/// Rejection sampling with acceptance `(1/α) · d / k(s,s)`. After
/// `trials_max` consecutive rejections, `α` is reset to the optimizer's
/// estimate of `max_x (k − k_S)(x,x) / k(x,x)`.
pub fn rpcholesky_optimized<K, R>(
    measure: &dyn Measure,
    kernel: &K,
    cfg: &SamplerConfig,
    rng: &mut R,
    optimizer: &dyn EnvelopeOptimizer,
) -> Result<SampleTrace>
where
    K: Kernel + ?Sized,
    R: Rng,
{
    rejection_loop(measure, kernel, cfg, rng, Some(optimizer))
}

fn rejection_loop<K, R>(
    measure: &dyn Measure,
    kernel: &K,
    cfg: &SamplerConfig,
    rng: &mut R,
    optimizer: Option<&dyn EnvelopeOptimizer>,
) -> Result<SampleTrace>
where
    K: Kernel + ?Sized,
    R: Rng,
{
    let start = Instant::now();
    let n = cfg.n;
    let mut state = CholeskyState::with_capacity(kernel, n);
    let mut proposals_per_node = Vec::with_capacity(n);
    let mut alpha_history = Vec::new();
    let mut alpha = 1.0f64;
    let mut trials = 0usize;
    let mut since_accept = 0u64;
    let mut total = 0u64;
    let mut c = Vec::with_capacity(n);

    while state.len() < n {
        if total >= cfg.proposal_cap {
            let partial = SampleTrace {
                nodes: state.nodes().to_vec(),
                proposals_per_node,
                alpha_history,
                wall_time: start.elapsed().as_secs_f64(),
            };
            return Err(Error::AcceptanceStalled { proposals: total, partial: Box::new(partial) });
        }
        total += 1;
        since_accept += 1;
        trials += 1;

        let (s, _) = sample_diagonal_counted(measure, kernel, rng)?;
        let d = state.residual_into(&s, &mut c)?;
        let kss = kernel.diag(&s);
        let ratio = d / kss;
        if ratio > alpha * (1.0 + 1e-9) {
            return Err(Error::InvalidEnvelope { alpha, ratio });
        }
        let u: f64 = rng.gen();
        if d > PIVOT_TOLERANCE * kss && u < ratio / alpha {
            state.extend(s, Residual { d, c: std::mem::take(&mut c) })?;
            proposals_per_node.push(since_accept);
            since_accept = 0;
            trials = 0;
        }

        if let Some(opt) = optimizer {
            if trials >= cfg.trials_max && state.len() < n {
                let objective = ResidualRatio { state: &state };
                let found = opt.maximize(measure, &objective, state.len(), rng)?;
                if !(found > PIVOT_TOLERANCE) {
                    return Err(Error::RankExhausted { selected: state.len(), requested: n });
                }
                alpha = found.min(1.0);
                alpha_history.push(alpha);
                trials = 0;
            }
        }
    }

    Ok(SampleTrace { nodes: state.into_nodes(), proposals_per_node, alpha_history, wall_time: start.elapsed().as_secs_f64() })
}

/// `(k − k_S)(x,x) / k(x,x)`.
struct ResidualRatio<'a, K> {
    state: &'a CholeskyState<K>,
}

impl<K: Kernel> Objective for ResidualRatio<'_, K> {
    fn value(&self, x: &[f64]) -> f64 {
        match self.state.residual_diag(x) {
            Ok(d) => d / self.state.kernel().diag(x),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn values(&self, xs: &[Point]) -> Vec<f64> {
        let k = self.state.kernel();
        let mut out = Vec::with_capacity(xs.len());
        for block in xs.chunks(64) {
            let d = self.state.residual_diag_batch(block);
            out.extend(d.iter().zip(block).map(|(d, x)| d / k.diag(x)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{DiscreteSpace, UnitBox};
    use crate::kernels::{GramKernel, PeriodicSobolev};
    use crate::rng::trial_rng;
    use crate::samplers::MultiStart;

    #[test]
    fn proposals_bounded_by_inverse_tail() {
        use crate::theory::EigenvalueSequence;
        let m = UnitBox::new(1).unwrap();
        let k = PeriodicSobolev::new(1).unwrap();
        let seq = EigenvalueSequence::sobolev(1, 10_000).unwrap();
        let cfg = SamplerConfig::with_n(24);
        let runs = 200;
        let mut mean = vec![0.0; cfg.n];
        for t in 0..runs {
            let tr = rpcholesky_rejection(&m, &k, &cfg, &mut trial_rng(21, t)).unwrap();
            for (i, p) in tr.proposals_per_node.iter().enumerate() {
                mean[i] += *p as f64 / runs as f64;
            }
        }
        for (i, p) in mean.iter().enumerate() {
            let eta = seq.tail_sum(i) / seq.total();
            assert!(p * eta <= 2.0, "step {}: {p} proposals, relative tail {eta}", i + 1);
        }
    }

    #[test]
    fn first_node_always_accepted() {
        let m = UnitBox::new(1).unwrap();
        let k = PeriodicSobolev::new(1).unwrap();
        let cfg = SamplerConfig::with_n(1);
        for t in 0..100 {
            let tr = rpcholesky_rejection(&m, &k, &cfg, &mut trial_rng(1, t)).unwrap();
            assert_eq!(tr.proposals_per_node, vec![1]);
        }
    }

    #[test]
    fn untriggered_envelope_matches_plain_rejection() {
        let space = DiscreteSpace::indexed(vec![1.0, 2.0, 1.0]).unwrap();
        let k = GramKernel::new(3, vec![2.0, 0.5, 0.2, 0.5, 1.5, 0.1, 0.2, 0.1, 1.0]).unwrap();
        let cfg = SamplerConfig { n: 3, trials_max: 1000, ..SamplerConfig::default() };
        for t in 0..200 {
            let a = rpcholesky_rejection(&space, &k, &cfg, &mut trial_rng(2, t)).unwrap();
            let b = rpcholesky_optimized(&space, &k, &cfg, &mut trial_rng(2, t), &MultiStart::default()).unwrap();
            assert!(b.alpha_history.is_empty());
            assert!(a.same_draws(&b));
        }
    }

    #[test]
    fn stall_carries_partial_trace() {
        let m = UnitBox::new(1).unwrap();
        let k = PeriodicSobolev::new(3).unwrap();
        let cfg = SamplerConfig { n: 40, proposal_cap: 200, ..SamplerConfig::default() };
        match rpcholesky_rejection(&m, &k, &cfg, &mut trial_rng(3, 0)) {
            Err(Error::AcceptanceStalled { proposals, partial }) => {
                assert_eq!(proposals, 200);
                assert!(!partial.nodes.is_empty() && partial.nodes.len() < 40);
                assert_eq!(partial.nodes.len(), partial.proposals_per_node.len());
            }
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn optimized_reoptimizes_and_records_alpha() {
        let m = UnitBox::new(1).unwrap();
        let k = PeriodicSobolev::new(3).unwrap();
        let cfg = SamplerConfig { n: 64, trials_max: 25, ..SamplerConfig::default() };
        let tr = rpcholesky_optimized(&m, &k, &cfg, &mut trial_rng(4, 0), &MultiStart::default()).unwrap();
        assert_eq!(tr.nodes.len(), 64);
        assert!(!tr.alpha_history.is_empty());
        assert!(tr.alpha_history.iter().all(|&a| a > 0.0 && a <= 1.0));
    }

    struct Lowball;
    impl EnvelopeOptimizer for Lowball {
        fn maximize(
            &self,
            _m: &dyn Measure,
            _f: &dyn Objective,
            _nodes: usize,
            _rng: &mut dyn rand::RngCore,
        ) -> Result<f64> {
            Ok(1e-6)
        }
    }

    #[test]
    fn underestimated_envelope_is_detected() {
        let m = UnitBox::new(1).unwrap();
        let k = PeriodicSobolev::new(1).unwrap();
        let cfg = SamplerConfig { n: 200, trials_max: 25, ..SamplerConfig::default() };
        let err = rpcholesky_optimized(&m, &k, &cfg, &mut trial_rng(5, 0), &Lowball).unwrap_err();
        assert!(matches!(err, Error::InvalidEnvelope { .. }), "{err:?}");
    }
}
