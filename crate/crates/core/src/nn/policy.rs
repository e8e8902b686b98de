//! Tanh-squashed Gaussian policy head.
//!
//! The network emits `[mean | log_std]`. An action is `tanh(mean + std * eps)`
//! with `eps ~ N(0, I)`; keeping `eps` explicit makes the sample a
//! differentiable function of the network output.

use std::f64::consts::LN_2;

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::nn::mlp::{Mlp, OutputHead};
use crate::{Error, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest action magnitude. `tanh` rounds to exactly 1 beyond |u| of about
/// 19; actions stay one ulp inside the open interval.
pub const SQUASH_LIMIT: f64 = 1.0 - f64::EPSILON / 2.0;

pub fn squash(u: f64) -> f64 {
    u.tanh().clamp(-SQUASH_LIMIT, SQUASH_LIMIT)
}

/// Single-state sample from the policy.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolicyOutput {
    pub mean: Vec<f64>,
    /// Clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub log_std: Vec<f64>,
    pub pre_squash: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
}

/// `ln(1 - tanh(u)^2)` without cancellation for large |u|.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log-density of the squashed action for one dimension, given the noise
/// draw that produced it.
fn log_prob_term(eps: f64, log_std: f64, pre: f64) -> f64 {
    -0.5 * eps * eps - log_std - HALF_LN_2PI - log_one_minus_tanh_sq(pre)
}

/// Draw one action for `state`. `deterministic` forces `eps = 0`.
pub fn policy_sample<R: Rng + ?Sized>(
    params: &Mlp,
    state: &[f64],
    deterministic: bool,
    rng: &mut R,
) -> Result<GaussianPolicyOutput> {
    if params.head() != OutputHead::Gaussian {
        return Err(Error::config("policy_sample needs a gaussian head"));
    }
    let out = params.forward_one(state)?;
    let dim = out.len() / 2;
    let mut sample = GaussianPolicyOutput {
        mean: out[..dim].to_vec(),
        log_std: Vec::with_capacity(dim),
        pre_squash: Vec::with_capacity(dim),
        action: Vec::with_capacity(dim),
        log_prob: 0.0,
    };
    for j in 0..dim {
        let log_std = out[dim + j].clamp(LOG_STD_MIN, LOG_STD_MAX);
        let eps: f64 = if deterministic {
            0.0
        } else {
            rng.sample(StandardNormal)
        };
        let pre = sample.mean[j] + log_std.exp() * eps;
        sample.log_prob += log_prob_term(eps, log_std, pre);
        sample.log_std.push(log_std);
        sample.pre_squash.push(pre);
        sample.action.push(squash(pre));
    }
    Ok(sample)
}

/// Reparameterized batch of samples, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct GaussianBatch {
    pub mean: Array2<f64>,
    pub log_std: Array2<f64>,
    /// Whether the raw log-std fell inside the clamp range (gradient flows).
    pub log_std_free: Array2<bool>,
    pub noise: Array2<f64>,
    pub pre_squash: Array2<f64>,
    pub action: Array2<f64>,
    pub log_prob: Array1<f64>,
}

impl GaussianBatch {
    /// Build samples from raw network output `[mean | log_std]` and a noise
    /// matrix of shape `batch x action_dim`.
    pub fn from_output(output: ArrayView2<f64>, noise: Array2<f64>) -> Result<Self> {
        let dim = output.ncols() / 2;
        if noise.dim() != (output.nrows(), dim) {
            return Err(Error::config("noise shape does not match policy output"));
        }
        let mean = output.slice(s![.., ..dim]).to_owned();
        let raw = output.slice(s![.., dim..]);
        let log_std_free = raw.mapv(|v| (LOG_STD_MIN..=LOG_STD_MAX).contains(&v));
        let log_std = raw.mapv(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
        let mut pre_squash = log_std.mapv(f64::exp);
        pre_squash *= &noise;
        pre_squash += &mean;
        let action = pre_squash.mapv(squash);
        let mut log_prob = Array1::zeros(output.nrows());
        for i in 0..output.nrows() {
            log_prob[i] = (0..dim)
                .map(|j| log_prob_term(noise[[i, j]], log_std[[i, j]], pre_squash[[i, j]]))
                .sum();
        }
        Ok(Self {
            mean,
            log_std,
            log_std_free,
            noise,
            pre_squash,
            action,
            log_prob,
        })
    }

    pub fn standard_noise<R: Rng + ?Sized>(rows: usize, dim: usize, rng: &mut R) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, dim), || rng.sample(StandardNormal))
    }

    /// Map dL/d(action) and dL/d(log_prob) to dL/d(network output).
    pub fn backward(&self, grad_action: &Array2<f64>, grad_log_prob: &Array1<f64>) -> Array2<f64> {
        let (rows, dim) = self.mean.dim();
        let mut out = Array2::zeros((rows, 2 * dim));
        for i in 0..rows {
            for j in 0..dim {
                let u = self.pre_squash[[i, j]];
                let dsquash = log_one_minus_tanh_sq(u).exp();
                // Through u: the squash itself and the tanh correction term.
                let du = grad_action[[i, j]] * dsquash + grad_log_prob[i] * 2.0 * u.tanh();
                out[[i, j]] = du;
                let sigma = self.log_std[[i, j]].exp();
                let dlog_std = du * sigma * self.noise[[i, j]] - grad_log_prob[i];
                out[[i, dim + j]] = if self.log_std_free[[i, j]] { dlog_std } else { 0.0 };
            }
        }
        out
    }
}
