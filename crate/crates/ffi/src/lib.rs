//! C ABI over `reward_curriculum`.
//!
//! Every fallible function returns an `RC_*` status code. On failure the
//! message is kept per thread and can be fetched with
//! `rc_last_error_message`. Handles are opaque and must be released with
//! their `_free` function; passing NULL to a `_free` function is a no-op.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use reward_curriculum::agents::trainer::normalize_return;
use reward_curriculum::agents::Trainer;
use reward_curriculum::env::robot::reward::{compose_reward, RewardTerms};
use reward_curriculum::env::robot::BaseSubset;
use reward_curriculum::env::{Env, EnvName, EnvSpec, Outcome};
use reward_curriculum::harness::{checkpoint, RunConfig};
use reward_curriculum::rl::{CurriculumController, Phase};
use reward_curriculum::rng::RunRng;
use reward_curriculum::Error;

pub const RC_OK: i32 = 0;
pub const RC_ERR_NULL: i32 = 1;
pub const RC_ERR_CONFIG: i32 = 2;
pub const RC_ERR_NUMERICAL: i32 = 3;
pub const RC_ERR_PLANNING: i32 = 4;
pub const RC_ERR_CHECKPOINT: i32 = 5;
pub const RC_ERR_IO: i32 = 6;
pub const RC_ERR_LENGTH: i32 = 7;
pub const RC_ERR_UTF8: i32 = 8;
pub const RC_ERR_PANIC: i32 = 9;

/// Seed stream used by environments created through this interface.
const FFI_ENV_STREAM: u64 = 100;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => RC_ERR_CONFIG,
            Error::Numerical(_) => RC_ERR_NUMERICAL,
            Error::Planning(_) => RC_ERR_PLANNING,
            Error::Checkpoint(_) => RC_ERR_CHECKPOINT,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => RC_ERR_IO,
        };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RC_ERR_NULL, format!("{what} is NULL"))
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RC_OK,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RC_ERR_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RC_ERR_UTF8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, want: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len != want {
        return Err(Failure(RC_ERR_LENGTH, format!("{what} has length {len}, expected {want}")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out(src: &[f64], dst: *mut f64, len: usize, what: &str) -> Result<(), Failure> {
    if dst.is_null() {
        return Err(null(what));
    }
    if len < src.len() {
        return Err(Failure(
            RC_ERR_LENGTH,
            format!("{what} holds {len} values, {} needed", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

unsafe fn handle<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Length in bytes of the last error message on this thread, excluding the
/// terminating NUL.
#[no_mangle]
pub extern "C" fn rc_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copy the last error message into `buf` as a NUL-terminated string.
/// Returns `RC_ERR_LENGTH` if `len` is too small, in which case nothing is
/// written.
#[no_mangle]
pub unsafe extern "C" fn rc_last_error_message(buf: *mut c_char, len: usize) -> i32 {
    if buf.is_null() {
        return RC_ERR_NULL;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if len < msg.len() + 1 {
            return RC_ERR_LENGTH;
        }
        std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, msg.len());
        *buf.add(msg.len()) = 0;
        RC_OK
    })
}

// ---------------------------------------------------------------------------
// Environments

pub struct RcEnv {
    env: Env,
    rng: RunRng,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RcOutcome {
    Running = 0,
    Goal = 1,
    Timeout = 2,
    Collision = 3,
    OutOfBounds = 4,
}

impl From<Outcome> for RcOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Running => RcOutcome::Running,
            Outcome::Goal => RcOutcome::Goal,
            Outcome::Timeout => RcOutcome::Timeout,
            Outcome::Collision => RcOutcome::Collision,
            Outcome::OutOfBounds => RcOutcome::OutOfBounds,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RcStep {
    pub base_reward: f64,
    pub full_reward: f64,
    pub report_base: f64,
    pub report_constraint: f64,
    pub terminal: bool,
    pub truncated: bool,
    pub outcome: RcOutcome,
}

/// Create an environment by name (`pendulum_swingup`, `cartpole_balance`,
/// `cartpole_swingup`, `robot_nav`) with the given constraint weight. Resets
/// draw from a generator seeded with `seed`.
#[no_mangle]
pub unsafe extern "C" fn rc_env_new(
    name: *const c_char,
    constraint_weight: f64,
    seed: u64,
    out: *mut *mut RcEnv,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = EnvName::parse(str_arg(name, "name")?)?;
        let mut spec = EnvSpec {
            name,
            constraint_weight,
            ..Default::default()
        };
        spec.robot.constraint_weight = constraint_weight;
        spec.validate()?;
        let env = RcEnv {
            env: spec.build(),
            rng: RunRng::new(seed, FFI_ENV_STREAM),
        };
        *out = Box::into_raw(Box::new(env));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rc_env_free(env: *mut RcEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Observation width, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rc_env_obs_dim(env: *const RcEnv) -> usize {
    env.as_ref().map_or(0, |e| e.env.obs_dim())
}

/// Action width, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rc_env_act_dim(env: *const RcEnv) -> usize {
    env.as_ref().map_or(0, |e| e.env.act_dim())
}

/// Start a new episode and write the first observation.
#[no_mangle]
pub unsafe extern "C" fn rc_env_reset(env: *mut RcEnv, obs: *mut f64, obs_len: usize) -> i32 {
    guard(|| {
        let e = handle(env, "env")?;
        let o = e.env.reset(&mut e.rng)?;
        write_out(&o, obs, obs_len, "obs")
    })
}

/// Apply one action. Actions are clipped to [-1, 1] by the environment.
#[no_mangle]
pub unsafe extern "C" fn rc_env_step(
    env: *mut RcEnv,
    action: *const f64,
    act_len: usize,
    obs: *mut f64,
    obs_len: usize,
    out: *mut RcStep,
) -> i32 {
    guard(|| {
        let e = handle(env, "env")?;
        let a = slice_arg(action, act_len, e.env.act_dim(), "action")?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Failure(RC_ERR_NUMERICAL, "action contains a non-finite value".into()));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if obs.is_null() {
            return Err(null("obs"));
        }
        if obs_len < e.env.obs_dim() {
            return Err(Failure(RC_ERR_LENGTH, format!("obs holds {obs_len} values, {} needed", e.env.obs_dim())));
        }
        let s = e.env.step(a);
        write_out(&s.obs, obs, obs_len, "obs")?;
        *out = RcStep {
            base_reward: s.base_reward,
            full_reward: s.full_reward,
            report_base: s.report_base,
            report_constraint: s.report_constraint,
            terminal: s.terminal,
            truncated: s.truncated,
            outcome: s.outcome.into(),
        };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Curriculum controller

pub struct RcController {
    inner: CurriculumController,
}

/// Controller that switches once the last `window` recorded fits are all
/// below `threshold`.
#[no_mangle]
pub unsafe extern "C" fn rc_controller_new(threshold: f64, window: usize, out: *mut *mut RcController) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if window == 0 {
            return Err(Failure(RC_ERR_CONFIG, "window must be positive".into()));
        }
        if threshold.is_nan() {
            return Err(Failure(RC_ERR_CONFIG, "threshold is NaN".into()));
        }
        *out = Box::into_raw(Box::new(RcController {
            inner: CurriculumController::new(threshold, window),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rc_controller_free(c: *mut RcController) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Record one iteration's mean actor fit. `switched` (optional) is set when
/// this record caused the switch.
#[no_mangle]
pub unsafe extern "C" fn rc_controller_record(c: *mut RcController, fit: f64, switched: *mut bool) -> i32 {
    guard(|| {
        let c = handle(c, "controller")?;
        let s = c.inner.record_actor_fit(fit);
        if let Some(out) = switched.as_mut() {
            *out = s;
        }
        Ok(())
    })
}

/// Record an iteration without gradient steps.
#[no_mangle]
pub unsafe extern "C" fn rc_controller_record_gap(c: *mut RcController) -> i32 {
    guard(|| {
        handle(c, "controller")?.inner.record_gap();
        Ok(())
    })
}

/// 0 while training on the base reward, 1 after the switch, -1 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rc_controller_phase(c: *const RcController) -> i32 {
    c.as_ref().map_or(-1, |c| match c.inner.phase() {
        Phase::Base => 0,
        Phase::Full => 1,
    })
}

/// Writes the 1-based record index of the switch and returns 1 if it has
/// happened, 0 if not, -1 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rc_controller_switched_at(c: *const RcController, iteration: *mut u64) -> i32 {
    let Some(c) = c.as_ref() else { return -1 };
    match c.inner.switched_at() {
        Some(i) => {
            if let Some(out) = iteration.as_mut() {
                *out = i;
            }
            1
        }
        None => 0,
    }
}

// ---------------------------------------------------------------------------
// Trainer

pub struct RcTrainer {
    inner: Trainer,
}

/// Summary of one training iteration. Values absent for the iteration are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RcIteration {
    pub iteration: u64,
    pub env_steps: u64,
    pub grad_steps: u64,
    pub phase: i32,
    pub switched: bool,
    pub critic_loss: f64,
    pub actor_fit: f64,
    pub eval_reported: f64,
    pub eval_normalized: f64,
}

/// Trainer for one seed from TOML config text (same format as the CLI).
#[no_mangle]
pub unsafe extern "C" fn rc_trainer_new(config_toml: *const c_char, seed: u64, out: *mut *mut RcTrainer) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = RunConfig::from_toml_str(str_arg(config_toml, "config_toml")?)?;
        let inner = Trainer::new(cfg.trainer_config(), cfg.env_spec(), seed)?;
        *out = Box::into_raw(Box::new(RcTrainer { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rc_trainer_free(t: *mut RcTrainer) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// 1 once the step budget is spent, 0 before, -1 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rc_trainer_is_finished(t: *const RcTrainer) -> i32 {
    t.as_ref().map_or(-1, |t| i32::from(t.inner.is_finished()))
}

#[no_mangle]
pub unsafe extern "C" fn rc_trainer_obs_dim(t: *const RcTrainer) -> usize {
    t.as_ref().map_or(0, |t| t.inner.env.obs_dim())
}

#[no_mangle]
pub unsafe extern "C" fn rc_trainer_act_dim(t: *const RcTrainer) -> usize {
    t.as_ref().map_or(0, |t| t.inner.env.act_dim())
}

#[no_mangle]
pub unsafe extern "C" fn rc_trainer_run_iteration(t: *mut RcTrainer, out: *mut RcIteration) -> i32 {
    guard(|| {
        let t = handle(t, "trainer")?;
        let r = t.inner.run_iteration()?;
        if let Some(o) = out.as_mut() {
            *o = RcIteration {
                iteration: r.iteration,
                env_steps: r.env_steps,
                grad_steps: r.grad_steps,
                phase: i32::from(r.phase.index()),
                switched: r.switched,
                critic_loss: r.critic_loss.unwrap_or(f64::NAN),
                actor_fit: r.actor_fit.unwrap_or(f64::NAN),
                eval_reported: r.eval.as_ref().map_or(f64::NAN, |e| e.reported),
                eval_normalized: r.eval.as_ref().map_or(f64::NAN, |e| e.normalized),
            };
        }
        Ok(())
    })
}

/// Deterministic policy action for `obs`.
#[no_mangle]
pub unsafe extern "C" fn rc_trainer_act(
    t: *const RcTrainer,
    obs: *const f64,
    obs_len: usize,
    action: *mut f64,
    act_len: usize,
) -> i32 {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trainer"))?;
        let o = slice_arg(obs, obs_len, t.inner.env.obs_dim(), "obs")?;
        // deterministic actions draw nothing from the generator
        let a = t.inner.learner.act(o, false, 0.0, &mut RunRng::new(0, 0))?;
        write_out(&a, action, act_len, "action")
    })
}

#[no_mangle]
pub unsafe extern "C" fn rc_trainer_save(t: *const RcTrainer, path: *const c_char) -> i32 {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trainer"))?;
        checkpoint::save(&t.inner, Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rc_trainer_load(path: *const c_char, out: *mut *mut RcTrainer) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = checkpoint::load(Path::new(str_arg(path, "path")?), None)?;
        *out = Box::into_raw(Box::new(RcTrainer { inner }));
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Reward helpers

/// Per-step robot reward terms before weighting.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RcRewardTerms {
    pub goal: f64,
    pub action: f64,
    pub velocity: f64,
    pub tracking: f64,
    pub progress: f64,
}

/// Base and full robot reward for a subset id (`gp`, `gpv`, `gpa`, `gpx`,
/// `full`).
#[no_mangle]
pub unsafe extern "C" fn rc_compose_reward(
    terms: *const RcRewardTerms,
    progress_weight: f64,
    constraint_weight: f64,
    subset: *const c_char,
    base: *mut f64,
    full: *mut f64,
) -> i32 {
    guard(|| {
        let t = terms.as_ref().ok_or_else(|| null("terms"))?;
        let subset = BaseSubset::parse(str_arg(subset, "subset")?)?;
        if base.is_null() || full.is_null() {
            return Err(null("output"));
        }
        let terms = RewardTerms {
            goal: t.goal,
            action: t.action,
            velocity: t.velocity,
            tracking: t.tracking,
            progress: t.progress,
        };
        let (b, f) = compose_reward(&terms, progress_weight, constraint_weight, subset);
        *base = b;
        *full = f;
        Ok(())
    })
}

/// Map a reported return into [0, 1] given (lo, hi) bounds.
#[no_mangle]
pub unsafe extern "C" fn rc_normalize_return(g: f64, lo: f64, hi: f64, out: *mut f64) -> i32 {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = normalize_return(g, (lo, hi))?;
        Ok(())
    })
}
