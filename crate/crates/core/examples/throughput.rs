//! Rough gradient-step throughput for both learners.
//!
//! cargo run --release -p reward-curriculum --example throughput

use std::time::Instant;

use reward_curriculum::agents::{SacConfig, SacState, Td3Config, Td3State};
use reward_curriculum::rl::{Phase, ReplayBuffer, Transition};
use reward_curriculum::rng::RunRng;

fn filled(obs: usize, act: usize, rng: &mut RunRng) -> ReplayBuffer {
    use rand::Rng;
    let mut b = ReplayBuffer::new(10_000, obs, act).unwrap();
    for _ in 0..5_000 {
        let s: Vec<f64> = (0..obs).map(|_| rng.random_range(-1.0..1.0)).collect();
        b.push(&Transition {
            next_state: s.clone(),
            state: s,
            action: (0..act).map(|_| rng.random_range(-1.0..1.0)).collect(),
            base_reward: rng.random(),
            full_reward: rng.random(),
            terminal: false,
        })
        .unwrap();
    }
    b
}

fn main() {
    let steps = 200;
    for (obs, act) in [(3, 1), (178, 2)] {
        let mut rng = RunRng::new(0, 0);
        let buf = filled(obs, act, &mut rng);
        let mut td3 = Td3State::new(obs, act, Td3Config::default(), &mut rng).unwrap();
        let t = Instant::now();
        for _ in 0..steps {
            let b = buf.sample_batch(Phase::Full, 128, &mut rng).unwrap();
            td3.critic_update(&b, &mut rng).unwrap();
            td3.actor_update(&b).unwrap();
        }
        let td3_ms = t.elapsed().as_secs_f64() * 1e3 / steps as f64;
        let mut sac = SacState::new(obs, act, SacConfig::default(), &mut rng).unwrap();
        let t = Instant::now();
        for _ in 0..steps {
            let b = buf.sample_batch(Phase::Full, 128, &mut rng).unwrap();
            sac.critic_update(&b, &mut rng).unwrap();
            sac.actor_and_alpha_update(&b, &mut rng).unwrap();
            sac.update_targets().unwrap();
        }
        let sac_ms = t.elapsed().as_secs_f64() * 1e3 / steps as f64;
        println!("obs {obs:>3} act {act}: td3 {td3_ms:.2} ms/step, sac {sac_ms:.2} ms/step");
    }
}
