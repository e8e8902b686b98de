//! Two-stage reward curriculum for off-policy actor-critic learning.
//!
//! Agents first optimise a base reward, then switch (once) to the full
//! constrained reward when the actor fits its critic well enough. Both
//! rewards are stored per transition so experience collected before the
//! switch is relabeled rather than discarded.

pub mod agents;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod rl;
pub mod rng;

pub use error::{Error, Result};
