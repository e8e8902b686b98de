//! Per-step dumps of deterministic evaluation episodes.

use std::path::Path;

use rand::Rng;

use crate::agents::Learner;
use crate::env::{Env, EnvSpec};
use crate::harness::metrics::fmt_f64;
use crate::{Error, Result};

const ROBOT_COLUMNS: [&str; 10] = [
    "x", "y", "heading", "speed", "omega", "r_goal", "r_action", "r_velocity", "r_tracking", "r_progress",
];

/// Roll out `episodes` episodes and write one CSV row per step. Robot runs
/// also get pose and reward-term columns.
pub fn dump_trajectories<R: Rng + ?Sized>(
    learner: &Learner,
    spec: &EnvSpec,
    episodes: usize,
    rng: &mut R,
    path: &Path,
) -> Result<usize> {
    let mut w = csv::Writer::from_path(path)?;
    let probe = spec.build();
    let act_dim = probe.act_dim();
    let robot = matches!(probe, Env::Robot(_));
    let mut header = vec!["episode".to_string(), "step".into()];
    header.extend((0..act_dim).map(|i| format!("action_{i}")));
    header.extend(["base_reward", "full_reward", "outcome"].map(String::from));
    if robot {
        header.extend(ROBOT_COLUMNS.map(String::from));
    }
    w.write_record(&header)?;
    let mut rows = 0;
    for ep in 0..episodes {
        let mut env = spec.build();
        let mut obs = env.reset(rng)?;
        for step in 1.. {
            let a = learner.act(&obs, false, 0.0, rng)?;
            let s = env.step(&a);
            let mut rec = vec![ep.to_string(), step.to_string()];
            rec.extend(a.iter().map(|&v| fmt_f64(v)));
            rec.push(fmt_f64(s.base_reward));
            rec.push(fmt_f64(s.full_reward));
            rec.push(serde_json::to_value(s.outcome)?.as_str().unwrap_or_default().to_string());
            if let Env::Robot(r) = &env {
                let t = r.trace();
                rec.extend(
                    [
                        t.x,
                        t.y,
                        t.heading,
                        t.speed,
                        t.omega,
                        t.terms.goal,
                        t.terms.action,
                        t.terms.velocity,
                        t.terms.tracking,
                        t.terms.progress,
                    ]
                    .map(fmt_f64),
                );
            }
            w.write_record(&rec)?;
            rows += 1;
            if s.done() {
                break;
            }
            obs = s.obs;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(rows)
}
