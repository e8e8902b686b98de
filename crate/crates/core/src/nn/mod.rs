//! Minimal differentiable core: ReLU MLPs, Adam, and the squashed Gaussian
//! policy head.

pub mod adam;
pub mod io;
pub mod mlp;
pub mod policy;

pub use adam::{Adam, AdamConfig, DEFAULT_LR};
pub use mlp::{Dense, Mlp, MlpGrads, OutputHead, Tape, HIDDEN_WIDTH};
pub use policy::{policy_sample, squash, GaussianBatch, GaussianPolicyOutput, SQUASH_LIMIT};
