//! Twin delayed deterministic policy gradient.

use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::agents::sac::regress;
use crate::nn::{Adam, AdamConfig, GaussianBatch, Mlp, OutputHead, HIDDEN_WIDTH};
use crate::rl::{critic_input, polyak_update, Batch, DEFAULT_TAU};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    pub adam: AdamConfig,
    /// Std of the smoothing noise on target actions.
    pub target_noise: f64,
    pub noise_clip: f64,
    /// Critic updates per actor update.
    pub policy_delay: u64,
    pub hidden: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.999,
            tau: DEFAULT_TAU,
            adam: AdamConfig::default(),
            target_noise: 0.2,
            noise_clip: 0.5,
            policy_delay: 2,
            hidden: HIDDEN_WIDTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Td3State {
    pub config: Td3Config,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critics: [Mlp; 2],
    pub targets: [Mlp; 2],
    pub actor_opt: Adam,
    pub critic_opts: [Adam; 2],
    pub critic_updates: u64,
    pub actor_updates: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Td3ActorStats {
    /// `-mean Q1(s, actor(s))`, computed every step.
    pub fit: f64,
    pub updated: bool,
}

impl Td3State {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, config: Td3Config, rng: &mut R) -> Result<Self> {
        if !(0.0..1.0).contains(&config.gamma) {
            return Err(Error::config(format!("discount {} outside [0, 1)", config.gamma)));
        }
        if config.policy_delay == 0 {
            return Err(Error::config("policy delay must be at least 1"));
        }
        let h = config.hidden;
        let actor = Mlp::new(&[obs_dim, h, h, act_dim], OutputHead::Tanh, rng)?;
        let c1 = Mlp::new(&[obs_dim + act_dim, h, h, 1], OutputHead::Identity, rng)?;
        let c2 = Mlp::new(&[obs_dim + act_dim, h, h, 1], OutputHead::Identity, rng)?;
        let adam = config.adam;
        Ok(Self {
            actor_opt: Adam::for_net(adam, &actor),
            critic_opts: [Adam::for_net(adam, &c1), Adam::for_net(adam, &c2)],
            actor_target: actor.clone(),
            targets: [c1.clone(), c2.clone()],
            critics: [c1, c2],
            actor,
            critic_updates: 0,
            actor_updates: 0,
            obs_dim,
            act_dim,
            config,
        })
    }

    /// Fresh weights, targets and optimizers. Update counters keep running.
    pub fn reinitialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.actor.reinitialize(rng);
        for c in &mut self.critics {
            c.reinitialize(rng);
        }
        self.actor_target = self.actor.clone();
        self.targets = self.critics.clone();
        self.actor_opt.reset();
        self.critic_opts.iter_mut().for_each(Adam::reset);
    }

    /// Actor output, plus N(0, sigma) noise when exploring, clipped to [-1, 1].
    pub fn select_action<R: Rng + ?Sized>(&self, obs: &[f64], explore: bool, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
        if obs.len() != self.obs_dim {
            return Err(Error::config("observation width mismatch"));
        }
        let mut a = self.actor.forward_one(obs)?;
        if explore && sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
            for v in &mut a {
                *v = (*v + normal.sample(rng)).clamp(-1.0, 1.0);
            }
        }
        Ok(a)
    }

    /// Smoothed target action `clip(target_actor(s') + clip(noise, -c, c), -1, 1)`
    /// where `noise = target_noise * z` for the given standard-normal `z`.
    pub fn target_actions(&self, next_states: &Array2<f64>, z: &Array2<f64>) -> Result<Array2<f64>> {
        let mut a = self.actor_target.forward(next_states.view())?;
        let (sd, c) = (self.config.target_noise, self.config.noise_clip);
        a.zip_mut_with(z, |a, &z| *a = (*a + (sd * z).clamp(-c, c)).clamp(-1.0, 1.0));
        Ok(a)
    }

    /// `y = r + gamma (1 - done) min_i Qbar_i(s', a~')`.
    pub fn critic_targets(&self, batch: &Batch, z: &Array2<f64>) -> Result<Array1<f64>> {
        let next = self.target_actions(&batch.next_states, z)?;
        let x = critic_input(batch.next_states.view(), next.view());
        let q1 = self.targets[0].forward(x.view())?;
        let q2 = self.targets[1].forward(x.view())?;
        let gamma = self.config.gamma;
        Ok(Array1::from_iter((0..batch.len()).map(|i| {
            let cont = if batch.terminals[i] { 0.0 } else { 1.0 };
            batch.rewards[i] + gamma * cont * q1[[i, 0]].min(q2[[i, 0]])
        })))
    }

    pub fn critic_update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<[f64; 2]> {
        let z = GaussianBatch::standard_noise(batch.len(), self.act_dim, rng);
        let y = self.critic_targets(batch, &z)?;
        let x = critic_input(batch.states.view(), batch.actions.view());
        let mut losses = [0.0; 2];
        for k in 0..2 {
            losses[k] = regress(&mut self.critics[k], &mut self.critic_opts[k], &x, &y)?;
        }
        self.critic_updates += 1;
        Ok(losses)
    }

    /// Fit value every call; on every `policy_delay`-th critic update also
    /// steps the actor and moves all three target networks.
    pub fn actor_update(&mut self, batch: &Batch) -> Result<Td3ActorStats> {
        let n = batch.len() as f64;
        let tape = self.actor.forward_tape(batch.states.view())?;
        let x = critic_input(batch.states.view(), tape.output().view());
        let qtape = self.critics[0].forward_tape(x.view())?;
        let fit = -qtape.output().column(0).mean().unwrap_or(0.0);
        if !fit.is_finite() {
            return Err(Error::numerical("actor fit value is not finite"));
        }
        let due = self.critic_updates > 0 && self.critic_updates % self.config.policy_delay == 0;
        if !due || self.actor_updates >= self.critic_updates / self.config.policy_delay {
            return Ok(Td3ActorStats { fit, updated: false });
        }
        let gq = Array2::from_elem((batch.len(), 1), -1.0 / n);
        let gx = self.critics[0].backward_input(&qtape, &gq)?;
        let ga = gx.slice(s![.., self.obs_dim..]).to_owned();
        let (grads, _) = self.actor.backward(&tape, &ga)?;
        self.actor_opt.step_net(&mut self.actor, &grads)?;
        self.actor_updates += 1;
        let tau = self.config.tau;
        polyak_update(&mut self.actor_target, &self.actor, tau)?;
        for k in 0..2 {
            polyak_update(&mut self.targets[k], &self.critics[k], tau)?;
        }
        Ok(Td3ActorStats { fit, updated: true })
    }
}
