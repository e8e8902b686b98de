//! The off-policy reward curriculum loop.
//!
//! Each iteration collects a block of environment steps, then runs the same
//! number of gradient steps on batches relabeled for the current phase, and
//! finally feeds the iteration's mean actor-fit value to the controller.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{SacConfig, SacState, Td3Config, Td3State};
use crate::env::{Env, EnvSpec, EnvStep, Outcome};
use crate::rl::{Batch, CurriculumController, Phase, ReplayBuffer, Transition, DEFAULT_CAPACITY};
use crate::rng::RunRng;
use crate::{Error, Result};

/// RNG stream ids. Training, environment resets and evaluation never share
/// a stream, so evaluation cannot perturb training.
pub const AGENT_STREAM: u64 = 1;
pub const ENV_STREAM: u64 = 2;
pub const EVAL_STREAM: u64 = 3;
pub const INIT_STREAM: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "sac")]
    Sac,
    #[serde(rename = "td3")]
    Td3,
    #[serde(rename = "rc-sac")]
    RcSac,
    #[serde(rename = "rc-td3")]
    RcTd3,
}

impl AgentKind {
    pub fn is_curriculum(self) -> bool {
        matches!(self, AgentKind::RcSac | AgentKind::RcTd3)
    }

    pub fn is_sac(self) -> bool {
        matches!(self, AgentKind::Sac | AgentKind::RcSac)
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Sac => "sac",
            AgentKind::Td3 => "td3",
            AgentKind::RcSac => "rc-sac",
            AgentKind::RcTd3 => "rc-td3",
        }
    }

    /// The baseline sharing this agent's learner.
    pub fn baseline(self) -> AgentKind {
        if self.is_sac() {
            AgentKind::Sac
        } else {
            AgentKind::Td3
        }
    }

    pub fn curriculum(self) -> AgentKind {
        if self.is_sac() {
            AgentKind::RcSac
        } else {
            AgentKind::RcTd3
        }
    }
}

/// When the curriculum moves to the full reward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SwitchMode {
    /// Driven by the actor-fit controller.
    Auto,
    /// After iteration `floor(total_iterations * num / den)`.
    Static { num: u32, den: u32 },
    Never,
}

impl SwitchMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SwitchMode::Auto),
            "never" => Ok(SwitchMode::Never),
            _ => {
                let frac = s
                    .strip_prefix("static:")
                    .ok_or_else(|| Error::config(format!("unknown switch mode `{s}`")))?;
                let (n, d) = frac
                    .split_once('/')
                    .ok_or_else(|| Error::config(format!("static switch needs a fraction, got `{frac}`")))?;
                let num: u32 = n.trim().parse().map_err(|_| Error::config(format!("bad numerator `{n}`")))?;
                let den: u32 = d.trim().parse().map_err(|_| Error::config(format!("bad denominator `{d}`")))?;
                if den == 0 || num == 0 || num > den {
                    return Err(Error::config(format!("static switch fraction {num}/{den} must lie in (0, 1]")));
                }
                Ok(SwitchMode::Static { num, den })
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            SwitchMode::Auto => "auto".into(),
            SwitchMode::Never => "never".into(),
            SwitchMode::Static { num, den } => format!("static:{num}/{den}"),
        }
    }
}

impl Serialize for SwitchMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for SwitchMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SwitchMode::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResetOnSwitch {
    #[default]
    None,
    Networks,
    Buffer,
}

/// TD3 exploration noise, linearly annealed over a fraction of the run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exploration {
    pub sigma_start: f64,
    pub sigma_end: f64,
    /// Fraction of the total step budget spent annealing; 0 means constant.
    pub anneal_fraction: f64,
}

impl Default for Exploration {
    fn default() -> Self {
        Self {
            sigma_start: 0.1,
            sigma_end: 0.1,
            anneal_fraction: 0.0,
        }
    }
}

impl Exploration {
    pub fn sigma(&self, env_steps: u64, total_steps: u64) -> f64 {
        let span = self.anneal_fraction * total_steps as f64;
        if span <= 0.0 {
            return self.sigma_end;
        }
        let t = env_steps as f64 / span;
        if t >= 1.0 {
            return self.sigma_end;
        }
        self.sigma_start + t * (self.sigma_end - self.sigma_start)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub agent: AgentKind,
    pub sac: SacConfig,
    pub td3: Td3Config,
    pub threshold: f64,
    pub window: usize,
    pub total_steps: u64,
    pub steps_per_iteration: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub switch: SwitchMode,
    pub reset_on_switch: ResetOnSwitch,
    pub exploration: Exploration,
    pub eval_every: u64,
    pub eval_episodes: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            agent: AgentKind::RcTd3,
            sac: SacConfig::default(),
            td3: Td3Config::default(),
            threshold: -50.0,
            window: 20,
            total_steps: 200_000,
            steps_per_iteration: 1000,
            batch_size: 128,
            buffer_capacity: DEFAULT_CAPACITY,
            switch: SwitchMode::Auto,
            reset_on_switch: ResetOnSwitch::None,
            exploration: Exploration::default(),
            eval_every: 10,
            eval_episodes: 5,
        }
    }
}

impl TrainerConfig {
    pub fn total_iterations(&self) -> u64 {
        self.total_steps.div_ceil(self.steps_per_iteration.max(1))
    }

    /// Iteration after which a static schedule forces the switch.
    pub fn static_switch_iteration(&self) -> Option<u64> {
        match self.switch {
            SwitchMode::Static { num, den } => {
                Some((self.total_iterations() * num as u64 / den as u64).max(1))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_iteration == 0 || self.total_steps == 0 {
            return Err(Error::config("step budget and iteration length must be positive"));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(Error::config("buffer capacity must hold at least one batch"));
        }
        if self.agent.is_curriculum() {
            if self.switch == SwitchMode::Auto && (self.window == 0 || self.threshold.is_nan()) {
                return Err(Error::config("auto switching needs a threshold and a positive window"));
            }
        } else if self.switch != SwitchMode::Auto && self.switch != SwitchMode::Never {
            return Err(Error::config(format!(
                "switch mode `{}` requires a curriculum agent, not `{}`",
                self.switch.label(),
                self.agent.name()
            )));
        } else if self.reset_on_switch != ResetOnSwitch::None {
            return Err(Error::config("reset-on-switch requires a curriculum agent"));
        }
        let e = &self.exploration;
        if !(e.sigma_start >= 0.0 && e.sigma_end >= 0.0 && (0.0..=1.0).contains(&e.anneal_fraction)) {
            return Err(Error::config("exploration noise must be non-negative and anneal_fraction in [0, 1]"));
        }
        Ok(())
    }

    pub fn controller(&self) -> CurriculumController {
        if !self.agent.is_curriculum() {
            return CurriculumController::pinned_full();
        }
        match self.switch {
            SwitchMode::Auto => CurriculumController::new(self.threshold, self.window),
            // fit values are still recorded, but only the schedule switches
            SwitchMode::Static { .. } | SwitchMode::Never => CurriculumController::new(f64::NEG_INFINITY, self.window),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Learner {
    Sac(Box<SacState>),
    Td3(Box<Td3State>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub critic_loss: f64,
    pub fit: f64,
}

impl Learner {
    pub fn new<R: Rng + ?Sized>(config: &TrainerConfig, obs_dim: usize, act_dim: usize, rng: &mut R) -> Result<Self> {
        Ok(if config.agent.is_sac() {
            Learner::Sac(Box::new(SacState::new(obs_dim, act_dim, config.sac.clone(), rng)?))
        } else {
            Learner::Td3(Box::new(Td3State::new(obs_dim, act_dim, config.td3.clone(), rng)?))
        })
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], explore: bool, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Learner::Sac(s) => s.select_action(obs, explore, rng),
            Learner::Td3(t) => t.select_action(obs, explore, sigma, rng),
        }
    }

    /// One gradient step of Algorithm 1 on a relabeled batch.
    pub fn train_step<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<StepStats> {
        match self {
            Learner::Sac(s) => {
                let l = s.critic_update(batch, rng)?;
                let a = s.actor_and_alpha_update(batch, rng)?;
                s.update_targets()?;
                Ok(StepStats {
                    critic_loss: 0.5 * (l[0] + l[1]),
                    fit: a.fit,
                })
            }
            Learner::Td3(t) => {
                let l = t.critic_update(batch, rng)?;
                let a = t.actor_update(batch)?;
                Ok(StepStats {
                    critic_loss: 0.5 * (l[0] + l[1]),
                    fit: a.fit,
                })
            }
        }
    }

    pub fn reinitialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        match self {
            Learner::Sac(s) => s.reinitialize(rng),
            Learner::Td3(t) => t.reinitialize(rng),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Learner::Sac(s) => Some(s.alpha),
            Learner::Td3(_) => None,
        }
    }
}

/// Running sums for the episode in progress.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeAccumulator {
    pub steps: u64,
    pub train_return: f64,
    pub base: f64,
    pub constraint: f64,
    pub abs_action: f64,
}

impl EpisodeAccumulator {
    pub fn add(&mut self, step: &EnvStep, action: &[f64]) {
        self.steps += 1;
        self.train_return += step.full_reward;
        self.base += step.report_base;
        self.constraint += step.report_constraint;
        self.abs_action += action.iter().map(|a| a.abs()).sum::<f64>() / action.len().max(1) as f64;
    }

    pub fn finish(&self, outcome: Outcome, report_weight: f64) -> EpisodeSummary {
        EpisodeSummary {
            steps: self.steps,
            train_return: self.train_return,
            reported: report_with_fixed_wc(self.base, self.constraint, report_weight),
            base: self.base,
            constraint: self.constraint,
            mean_abs_action: if self.steps > 0 { self.abs_action / self.steps as f64 } else { 0.0 },
            outcome,
        }
    }
}

/// `sum r_b + w * sum r_c`, independent of the weight used in training.
pub fn report_with_fixed_wc(base_sum: f64, constraint_sum: f64, w_report: f64) -> f64 {
    base_sum + w_report * constraint_sum
}

/// Min-max normalization of a return, clipped to [0, 1].
pub fn normalize_return(g: f64, bounds: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bounds;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::config(format!("degenerate return bounds ({lo}, {hi})")));
    }
    Ok(((g - lo) / (hi - lo)).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub steps: u64,
    pub train_return: f64,
    pub reported: f64,
    pub base: f64,
    pub constraint: f64,
    pub mean_abs_action: f64,
    pub outcome: Outcome,
}

/// Means over a set of episodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episodes: usize,
    pub train_return: f64,
    pub reported: f64,
    pub base: f64,
    pub constraint: f64,
    pub mean_abs_action: f64,
    pub success_rate: f64,
    pub goals: usize,
    pub timeouts: usize,
    pub collisions: usize,
    pub normalized: f64,
}

impl EpisodeStats {
    pub fn from_episodes(eps: &[EpisodeSummary], bounds: (f64, f64)) -> Result<Option<Self>> {
        if eps.is_empty() {
            return Ok(None);
        }
        let n = eps.len() as f64;
        let mean = |f: fn(&EpisodeSummary) -> f64| eps.iter().map(f).sum::<f64>() / n;
        let count = |o: Outcome| eps.iter().filter(|e| e.outcome == o).count();
        let reported = mean(|e| e.reported);
        let normalized = eps
            .iter()
            .map(|e| normalize_return(e.reported, bounds))
            .sum::<Result<f64>>()?
            / n;
        Ok(Some(Self {
            episodes: eps.len(),
            train_return: mean(|e| e.train_return),
            reported,
            base: mean(|e| e.base),
            constraint: mean(|e| e.constraint),
            mean_abs_action: mean(|e| e.mean_abs_action),
            success_rate: count(Outcome::Goal) as f64 / n,
            goals: count(Outcome::Goal),
            timeouts: count(Outcome::Timeout),
            collisions: count(Outcome::Collision),
            normalized,
        }))
    }
}

/// Everything observed during one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub env_steps: u64,
    pub grad_steps: u64,
    /// Phase used for this iteration's gradient steps.
    pub phase: Phase,
    /// The switch happened at the end of this iteration.
    pub switched: bool,
    pub critic_loss: Option<f64>,
    pub actor_fit: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub train: Option<EpisodeStats>,
    pub eval: Option<EpisodeStats>,
}

/// Complete mutable state of one training run.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub config: TrainerConfig,
    pub env_spec: EnvSpec,
    pub seed: u64,
    pub learner: Learner,
    pub controller: CurriculumController,
    pub buffer: ReplayBuffer,
    pub env: Env,
    pub obs: Vec<f64>,
    pub episode: EpisodeAccumulator,
    pub agent_rng: RunRng,
    pub env_rng: RunRng,
    pub iteration: u64,
    pub env_steps: u64,
    pub grad_steps: u64,
}

impl Trainer {
    pub fn new(config: TrainerConfig, env_spec: EnvSpec, seed: u64) -> Result<Self> {
        config.validate()?;
        env_spec.validate()?;
        let mut env = env_spec.build();
        let mut env_rng = RunRng::new(seed, ENV_STREAM);
        let obs = env.reset(&mut env_rng)?;
        let mut init_rng = RunRng::new(seed, INIT_STREAM);
        let learner = Learner::new(&config, env.obs_dim(), env.act_dim(), &mut init_rng)?;
        let buffer = ReplayBuffer::new(config.buffer_capacity, env.obs_dim(), env.act_dim())?;
        Ok(Self {
            controller: config.controller(),
            learner,
            buffer,
            env,
            obs,
            episode: EpisodeAccumulator::default(),
            agent_rng: RunRng::new(seed, AGENT_STREAM),
            env_rng,
            iteration: 0,
            env_steps: 0,
            grad_steps: 0,
            config,
            env_spec,
            seed,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.config.total_iterations()
    }

    pub fn phase(&self) -> Phase {
        self.controller.phase()
    }

    fn sigma(&self) -> Option<f64> {
        (!self.config.agent.is_sac()).then(|| self.config.exploration.sigma(self.env_steps, self.config.total_steps))
    }

    /// One sampling block followed by one training block.
    pub fn run_iteration(&mut self) -> Result<IterationRecord> {
        let report_weight = self.env_spec.name.report_weight();
        let bounds = self.env_spec.return_bounds();
        let remaining = self.config.total_steps - self.env_steps.min(self.config.total_steps);
        let block = self.config.steps_per_iteration.min(remaining.max(1));

        let mut finished = Vec::new();
        for _ in 0..block {
            let sigma = self.sigma().unwrap_or(0.0);
            let action = self.learner.act(&self.obs, true, sigma, &mut self.agent_rng)?;
            let step = self.env.step(&action);
            self.episode.add(&step, &action);
            self.buffer.push(&Transition {
                state: std::mem::take(&mut self.obs),
                action,
                base_reward: step.base_reward,
                full_reward: step.full_reward,
                next_state: step.obs.clone(),
                terminal: step.terminal,
            })?;
            self.env_steps += 1;
            if step.done() {
                finished.push(self.episode.finish(step.outcome, report_weight));
                self.episode = EpisodeAccumulator::default();
                self.obs = self.env.reset(&mut self.env_rng)?;
            } else {
                self.obs = step.obs;
            }
        }

        let phase = self.controller.phase();
        let mut fit_sum = 0.0;
        let mut loss_sum = 0.0;
        let mut trained = 0u64;
        for _ in 0..block {
            let Some(batch) = self.buffer.sample_batch(phase, self.config.batch_size, &mut self.agent_rng) else {
                break;
            };
            let s = self.learner.train_step(&batch, &mut self.agent_rng)?;
            fit_sum += s.fit;
            loss_sum += s.critic_loss;
            trained += 1;
        }
        self.grad_steps += trained;
        self.iteration += 1;

        let actor_fit = (trained > 0).then(|| fit_sum / trained as f64);
        let mut switched = match actor_fit {
            Some(j) => self.controller.record_actor_fit(j),
            None => {
                self.controller.record_gap();
                false
            }
        };
        if self.config.static_switch_iteration() == Some(self.iteration) {
            switched |= self.controller.force_switch();
        }
        if switched {
            match self.config.reset_on_switch {
                ResetOnSwitch::None => {}
                ResetOnSwitch::Networks => self.learner.reinitialize(&mut self.agent_rng),
                ResetOnSwitch::Buffer => self.buffer.clear(),
            }
        }

        let eval = if self.config.eval_every > 0 && self.iteration % self.config.eval_every == 0 {
            Some(self.evaluate(self.config.eval_episodes)?)
        } else {
            None
        };

        Ok(IterationRecord {
            iteration: self.iteration,
            env_steps: self.env_steps,
            grad_steps: self.grad_steps,
            phase,
            switched,
            critic_loss: (trained > 0).then(|| loss_sum / trained as f64),
            actor_fit,
            alpha: self.learner.alpha(),
            sigma: self.sigma(),
            train: EpisodeStats::from_episodes(&finished, bounds)?,
            eval,
        })
    }

    /// Deterministic-policy episodes on fresh environment instances. Uses
    /// its own RNG derived from the seed and iteration.
    pub fn evaluate(&self, episodes: usize) -> Result<EpisodeStats> {
        let mut rng = RunRng::derive(self.seed, EVAL_STREAM, self.iteration);
        let eps = evaluate_policy(&self.learner, &self.env_spec, episodes, &mut rng)?;
        Ok(EpisodeStats::from_episodes(&eps, self.env_spec.return_bounds())?.unwrap_or_default())
    }
}

/// Roll out the deterministic policy for `episodes` episodes.
pub fn evaluate_policy<R: Rng + ?Sized>(
    learner: &Learner,
    spec: &EnvSpec,
    episodes: usize,
    rng: &mut R,
) -> Result<Vec<EpisodeSummary>> {
    let w = spec.name.report_weight();
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut env = spec.build();
        let mut obs = env.reset(rng)?;
        let mut acc = EpisodeAccumulator::default();
        loop {
            let a = learner.act(&obs, false, 0.0, rng)?;
            let step = env.step(&a);
            acc.add(&step, &a);
            if step.done() {
                out.push(acc.finish(step.outcome, w));
                break;
            }
            obs = step.obs;
        }
    }
    Ok(out)
}
