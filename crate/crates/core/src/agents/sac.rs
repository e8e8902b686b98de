//! Soft actor-critic with twin critics and a learned temperature.

use ndarray::{s, Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{policy_sample, Adam, AdamConfig, GaussianBatch, Mlp, OutputHead, HIDDEN_WIDTH};
use crate::rl::{critic_input, polyak_update, Batch, DEFAULT_TAU};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub gamma: f64,
    pub tau: f64,
    pub adam: AdamConfig,
    pub alpha_init: f64,
    pub alpha_min: f64,
    /// Defaults to minus the action dimension.
    pub target_entropy: Option<f64>,
    pub hidden: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: DEFAULT_TAU,
            adam: AdamConfig::default(),
            alpha_init: 1.0,
            alpha_min: 1e-4,
            target_entropy: None,
            hidden: HIDDEN_WIDTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SacState {
    pub config: SacConfig,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub actor: Mlp,
    pub critics: [Mlp; 2],
    pub targets: [Mlp; 2],
    pub actor_opt: Adam,
    pub critic_opts: [Adam; 2],
    pub alpha: f64,
    pub alpha_opt: Adam,
    pub target_entropy: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SacActorStats {
    /// Entropy-free actor loss, the curriculum's fit signal.
    pub fit: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    /// Mean of `-log pi` over the batch.
    pub entropy: f64,
}

impl SacState {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, config: SacConfig, rng: &mut R) -> Result<Self> {
        if !(0.0..1.0).contains(&config.gamma) {
            return Err(Error::config(format!("discount {} outside [0, 1)", config.gamma)));
        }
        if config.alpha_min <= 0.0 || config.alpha_init < config.alpha_min {
            return Err(Error::config("temperature must start at or above a positive floor"));
        }
        let h = config.hidden;
        let actor = Mlp::new(&[obs_dim, h, h, 2 * act_dim], OutputHead::Gaussian, rng)?;
        let c1 = Mlp::new(&[obs_dim + act_dim, h, h, 1], OutputHead::Identity, rng)?;
        let c2 = Mlp::new(&[obs_dim + act_dim, h, h, 1], OutputHead::Identity, rng)?;
        let adam = config.adam;
        Ok(Self {
            actor_opt: Adam::for_net(adam, &actor),
            critic_opts: [Adam::for_net(adam, &c1), Adam::for_net(adam, &c2)],
            targets: [c1.clone(), c2.clone()],
            critics: [c1, c2],
            actor,
            alpha: config.alpha_init,
            alpha_opt: Adam::new(adam, 1),
            target_entropy: config.target_entropy.unwrap_or(-(act_dim as f64)),
            obs_dim,
            act_dim,
            config,
        })
    }

    /// Fresh weights, targets, optimizers and temperature.
    pub fn reinitialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.actor.reinitialize(rng);
        for c in &mut self.critics {
            c.reinitialize(rng);
        }
        self.targets = self.critics.clone();
        self.actor_opt.reset();
        self.critic_opts.iter_mut().for_each(Adam::reset);
        self.alpha = self.config.alpha_init;
        self.alpha_opt.reset();
    }

    pub fn select_action<R: Rng + ?Sized>(&self, obs: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>> {
        if obs.len() != self.obs_dim {
            return Err(Error::config("observation width mismatch"));
        }
        Ok(policy_sample(&self.actor, obs, !explore, rng)?.action)
    }

    /// Bootstrapped targets `y = r + gamma (1 - done) [min Qbar(s', a') - alpha log pi(a'|s')]`
    /// for `a'` drawn with the given standard-normal noise.
    pub fn critic_targets(&self, batch: &Batch, noise: Array2<f64>) -> Result<Array1<f64>> {
        let out = self.actor.forward(batch.next_states.view())?;
        let next = GaussianBatch::from_output(out.view(), noise)?;
        let x = critic_input(batch.next_states.view(), next.action.view());
        let q1 = self.targets[0].forward(x.view())?;
        let q2 = self.targets[1].forward(x.view())?;
        let gamma = self.config.gamma;
        Ok(Array1::from_iter((0..batch.len()).map(|i| {
            let soft = q1[[i, 0]].min(q2[[i, 0]]) - self.alpha * next.log_prob[i];
            let cont = if batch.terminals[i] { 0.0 } else { 1.0 };
            batch.rewards[i] + gamma * cont * soft
        })))
    }

    /// Step both critics on the squared TD error; returns the two losses.
    pub fn critic_update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<[f64; 2]> {
        let noise = GaussianBatch::standard_noise(batch.len(), self.act_dim, rng);
        let y = self.critic_targets(batch, noise)?;
        let x = critic_input(batch.states.view(), batch.actions.view());
        let mut losses = [0.0; 2];
        for k in 0..2 {
            losses[k] = regress(&mut self.critics[k], &mut self.critic_opts[k], &x, &y)?;
        }
        Ok(losses)
    }

    /// One actor step, one temperature step, returning the fit signal.
    pub fn actor_and_alpha_update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<SacActorStats> {
        let noise = GaussianBatch::standard_noise(batch.len(), self.act_dim, rng);
        self.actor_and_alpha_update_with_noise(batch, noise)
    }

    pub fn actor_and_alpha_update_with_noise(&mut self, batch: &Batch, noise: Array2<f64>) -> Result<SacActorStats> {
        let n = batch.len();
        let nf = n as f64;
        let tape = self.actor.forward_tape(batch.states.view())?;
        let sample = GaussianBatch::from_output(tape.output().view(), noise)?;
        let x = critic_input(batch.states.view(), sample.action.view());
        let t1 = self.critics[0].forward_tape(x.view())?;
        let t2 = self.critics[1].forward_tape(x.view())?;

        // Route each row's gradient through whichever critic is lower.
        let mut g1 = Array2::zeros((n, 1));
        let mut g2 = Array2::zeros((n, 1));
        let mut qmin_sum = 0.0;
        for i in 0..n {
            let (a, b) = (t1.output()[[i, 0]], t2.output()[[i, 0]]);
            if a <= b {
                qmin_sum += a;
                g1[[i, 0]] = -1.0 / nf;
            } else {
                qmin_sum += b;
                g2[[i, 0]] = -1.0 / nf;
            }
        }
        let gx1 = self.critics[0].backward_input(&t1, &g1)?;
        let gx2 = self.critics[1].backward_input(&t2, &g2)?;
        let grad_action = &gx1.slice(s![.., self.obs_dim..]) + &gx2.slice(s![.., self.obs_dim..]);
        let alpha = self.alpha;
        let grad_logp = Array1::from_elem(n, alpha / nf);
        let grad_out = sample.backward(&grad_action, &grad_logp);
        let (grads, _) = self.actor.backward(&tape, &grad_out)?;
        self.actor_opt.step_net(&mut self.actor, &grads)?;

        let mean_logp = sample.log_prob.mean().unwrap_or(0.0);
        let fit = -qmin_sum / nf;
        let actor_loss = alpha * mean_logp + fit;
        if !actor_loss.is_finite() {
            return Err(Error::numerical("actor loss is not finite"));
        }

        // J(alpha) = E[-alpha log pi - alpha H_target]
        let alpha_grad = -mean_logp - self.target_entropy;
        self.alpha_opt.step_scalar(&mut self.alpha, alpha_grad)?;
        self.alpha = self.alpha.max(self.config.alpha_min);

        Ok(SacActorStats {
            fit,
            actor_loss,
            alpha: self.alpha,
            entropy: -mean_logp,
        })
    }

    pub fn update_targets(&mut self) -> Result<()> {
        for k in 0..2 {
            polyak_update(&mut self.targets[k], &self.critics[k], self.config.tau)?;
        }
        Ok(())
    }
}

/// One Adam step on mean squared error between `net(x)` and `y`.
pub(crate) fn regress(net: &mut Mlp, opt: &mut Adam, x: &Array2<f64>, y: &Array1<f64>) -> Result<f64> {
    let tape = net.forward_tape(x.view())?;
    let n = y.len() as f64;
    let diff = &tape.output().column(0) - y;
    let loss = diff.dot(&diff) / n;
    if !loss.is_finite() {
        return Err(Error::numerical("critic loss is not finite"));
    }
    let grad = (diff * (2.0 / n)).insert_axis(ndarray::Axis(1));
    let (grads, _) = net.backward(&tape, &grad)?;
    opt.step_net(net, &grads)?;
    Ok(loss)
}
