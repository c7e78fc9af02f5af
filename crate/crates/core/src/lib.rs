//! Kernel quadrature driven by continuous randomly pivoted Cholesky.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: periodic Sobolev, tensor-product, Matérn 5/2, Gaussian and
//!   black-box kernels behind the [`Kernel`] trait.
//! - [`domains`]: spaces with a measure ([`Measure`]): unit boxes, the
//!   crescent region and finite atom sets, plus draws from `k(x,x) dμ`.
//! - [`lowrank`]: the incremental Cholesky/Nyström engine ([`CholeskyState`]).
//! - [`samplers`]: node selection (exact discrete, rejection, optimized
//!   rejection, iid and a volume-sampling MCMC baseline).
//! - [`quadrature`]: optimal weights, worst-case error and rule application.
//! - [`theory`]: the eigenvalue recurrence behind the error bound, and
//!   error-curve aggregation.

pub mod domains;
pub mod error;
pub mod kernels;
pub mod lowrank;
pub mod point;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod theory;

pub use domains::{Crescent, DiscreteSpace, Measure, UnitBox};
pub use error::{Error, Result};
pub use kernels::{Constant, Gaussian, GramKernel, Kernel, Matern52, PeriodicSobolev, TensorProduct};
pub use lowrank::CholeskyState;
pub use point::Point;
pub use quadrature::{EmbeddingProvider, QuadratureRule};
pub use rng::{trial_rng, TrialRng};
pub use samplers::{SampleTrace, SamplerConfig, SamplerKind};
pub use theory::EigenvalueSequence;
