//! Binary run checkpoints.
//!
//! ```text
//! "RCCK" | u32 version | bytes(JSON metadata)
//! networks and optimizer moments (see `nn::io`)
//! replay buffer columns
//! ```
//!
//! The replay buffer is included so a resumed run continues bit-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::trainer::EpisodeAccumulator;
use crate::agents::{Learner, Trainer, TrainerConfig};
use crate::env::{Env, EnvSpec};
use crate::nn::io::{BinReader, BinWriter};
use crate::rl::{ControllerState, ReplayBuffer};
use crate::rng::{RngSnapshot, RunRng};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"RCCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Meta {
    /// TOML, which unlike JSON can carry infinite thresholds.
    trainer_config: String,
    env_spec: String,
    seed: u64,
    iteration: u64,
    env_steps: u64,
    grad_steps: u64,
    agent_rng: RngSnapshot,
    env_rng: RngSnapshot,
    controller: ControllerState,
    env: Env,
    obs: Vec<f64>,
    episode: EpisodeAccumulator,
    learner: LearnerMeta,
    buffer_len: u64,
    buffer_cursor: u64,
}

#[derive(Serialize, Deserialize)]
enum LearnerMeta {
    Sac { alpha: f64, target_entropy: f64 },
    Td3 { critic_updates: u64, actor_updates: u64 },
}

fn to_toml<T: Serialize>(v: &T) -> Result<String> {
    toml::to_string(v).map_err(|e| Error::Checkpoint(format!("cannot encode config: {e}")))
}

fn from_toml<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    toml::from_str(s).map_err(|e| Error::Checkpoint(format!("cannot decode config: {e}")))
}

pub fn write_checkpoint<W: Write>(t: &Trainer, out: W) -> Result<()> {
    let learner = match &t.learner {
        Learner::Sac(s) => LearnerMeta::Sac {
            alpha: s.alpha,
            target_entropy: s.target_entropy,
        },
        Learner::Td3(s) => LearnerMeta::Td3 {
            critic_updates: s.critic_updates,
            actor_updates: s.actor_updates,
        },
    };
    let meta = Meta {
        trainer_config: to_toml(&t.config)?,
        env_spec: to_toml(&t.env_spec)?,
        seed: t.seed,
        iteration: t.iteration,
        env_steps: t.env_steps,
        grad_steps: t.grad_steps,
        agent_rng: t.agent_rng.snapshot(),
        env_rng: t.env_rng.snapshot(),
        controller: t.controller.state(),
        env: t.env.clone(),
        obs: t.obs.clone(),
        episode: t.episode,
        learner,
        buffer_len: t.buffer.len() as u64,
        buffer_cursor: t.buffer.cursor() as u64,
    };
    let mut w = BinWriter::new(out);
    w.bytes(MAGIC)?;
    w.u32(CHECKPOINT_VERSION)?;
    w.bytes(&serde_json::to_vec(&meta)?)?;
    match &t.learner {
        Learner::Sac(s) => {
            w.mlp(&s.actor)?;
            for n in s.critics.iter().chain(&s.targets) {
                w.mlp(n)?;
            }
            w.adam(&s.actor_opt)?;
            for o in &s.critic_opts {
                w.adam(o)?;
            }
            w.adam(&s.alpha_opt)?;
        }
        Learner::Td3(s) => {
            w.mlp(&s.actor)?;
            w.mlp(&s.actor_target)?;
            for n in s.critics.iter().chain(&s.targets) {
                w.mlp(n)?;
            }
            w.adam(&s.actor_opt)?;
            for o in &s.critic_opts {
                w.adam(o)?;
            }
        }
    }
    let c = t.buffer.columns();
    w.f64s(c.states)?;
    w.f64s(c.actions)?;
    w.f64s(c.base)?;
    w.f64s(c.full)?;
    w.f64s(c.next_states)?;
    let flags: Vec<u8> = c.terminals.iter().map(|&b| u8::from(b)).collect();
    w.bytes(&flags)?;
    let mut inner = w.into_inner();
    inner.flush().map_err(|e| Error::Checkpoint(format!("flush failed: {e}")))
}

/// Rebuild a trainer. When `expected` is given, the stored configuration
/// must match it exactly.
pub fn read_checkpoint<R: Read>(input: R, expected: Option<(&TrainerConfig, &EnvSpec)>) -> Result<Trainer> {
    let mut r = BinReader::new(input);
    if r.bytes()? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let meta: Meta = serde_json::from_slice(&r.bytes()?)?;
    let config: TrainerConfig = from_toml(&meta.trainer_config)?;
    let spec: EnvSpec = from_toml(&meta.env_spec)?;
    if let Some((c, s)) = expected {
        if *c != config {
            return Err(Error::Checkpoint("checkpoint was written with a different trainer config".into()));
        }
        if *s != spec {
            return Err(Error::Checkpoint("checkpoint was written for a different environment config".into()));
        }
    }
    let mut t = Trainer::new(config, spec, meta.seed)?;
    if t.env.obs_dim() != meta.obs.len() {
        return Err(Error::Checkpoint("observation width does not match the environment".into()));
    }
    match (&mut t.learner, meta.learner) {
        (Learner::Sac(s), LearnerMeta::Sac { alpha, target_entropy }) => {
            let adam = s.config.adam;
            let shape = s.actor.clone();
            s.actor = checked(r.mlp()?, &shape)?;
            for k in 0..2 {
                s.critics[k] = checked(r.mlp()?, &s.critics[k])?;
            }
            for k in 0..2 {
                s.targets[k] = checked(r.mlp()?, &s.targets[k])?;
            }
            s.actor_opt = r.adam(adam)?;
            for k in 0..2 {
                s.critic_opts[k] = r.adam(adam)?;
            }
            s.alpha_opt = r.adam(adam)?;
            s.alpha = alpha;
            s.target_entropy = target_entropy;
        }
        (
            Learner::Td3(s),
            LearnerMeta::Td3 {
                critic_updates,
                actor_updates,
            },
        ) => {
            let adam = s.config.adam;
            s.actor = checked(r.mlp()?, &s.actor)?;
            s.actor_target = checked(r.mlp()?, &s.actor_target)?;
            for k in 0..2 {
                s.critics[k] = checked(r.mlp()?, &s.critics[k])?;
            }
            for k in 0..2 {
                s.targets[k] = checked(r.mlp()?, &s.targets[k])?;
            }
            s.actor_opt = r.adam(adam)?;
            for k in 0..2 {
                s.critic_opts[k] = r.adam(adam)?;
            }
            s.critic_updates = critic_updates;
            s.actor_updates = actor_updates;
        }
        _ => return Err(Error::Checkpoint("learner kind does not match the config".into())),
    }
    let n = meta.buffer_len as usize;
    let (o, a) = (t.buffer.obs_dim(), t.buffer.act_dim());
    let states = r.f64s(n * o)?;
    let actions = r.f64s(n * a)?;
    let base = r.f64s(n)?;
    let full = r.f64s(n)?;
    let next_states = r.f64s(n * o)?;
    let terminals: Vec<bool> = r.bytes()?.into_iter().map(|b| b != 0).collect();
    t.buffer = ReplayBuffer::from_columns(
        t.buffer.capacity(),
        o,
        a,
        states,
        actions,
        base,
        full,
        next_states,
        terminals,
        meta.buffer_cursor as usize,
    )?;
    t.controller.restore(&meta.controller);
    t.agent_rng = RunRng::restore(&meta.agent_rng)?;
    t.env_rng = RunRng::restore(&meta.env_rng)?;
    t.env = meta.env;
    t.obs = meta.obs;
    t.episode = meta.episode;
    t.iteration = meta.iteration;
    t.env_steps = meta.env_steps;
    t.grad_steps = meta.grad_steps;
    Ok(t)
}

fn checked(net: crate::nn::Mlp, like: &crate::nn::Mlp) -> Result<crate::nn::Mlp> {
    if net.same_shape(like) {
        Ok(net)
    } else {
        Err(Error::Checkpoint(format!(
            "network shape {:?} does not match expected {:?}",
            net.sizes(),
            like.sizes()
        )))
    }
}

/// Write via a temporary file and rename, so a crash never leaves a
/// truncated checkpoint behind.
pub fn save(t: &Trainer, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    write_checkpoint(t, BufWriter::new(f))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path, expected: Option<(&TrainerConfig, &EnvSpec)>) -> Result<Trainer> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(f), expected)
}
