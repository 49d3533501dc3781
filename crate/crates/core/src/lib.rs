//! Single-shot lossy compression of finite-alphabet sources: information
//! proxies for the guaranteed, conditional-excess and excess distortion
//! criteria, exact quantizer entropies on small instances, lossless code
//! bounds, and a random-codebook simulator.
//!
//! Quantities are computed in nats and carried as [`InfoValue`], which
//! converts to bits on output.

pub mod codebook;
pub mod codes;
pub mod exact;
pub mod infotheory;
pub mod model;
pub mod proxies;

pub use infotheory::{InfoValue, Units};
pub use model::{
    ball_table, AlphaProfile, BallTable, ConditionalKernel, InstanceSpec, Mode, ModelError,
    ReproductionDistribution,
};
pub use proxies::{Criterion, ProxyError, ProxySolution, SolverOptions};
