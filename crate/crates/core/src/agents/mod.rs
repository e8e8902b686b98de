//! SAC and TD3 learners.

pub mod sac;
pub mod td3;

pub use sac::{SacActorStats, SacConfig, SacState};
pub use td3::{Td3ActorStats, Td3Config, Td3State};
pub mod trainer;

pub use trainer::{
    evaluate_policy, normalize_return, report_with_fixed_wc, AgentKind, EpisodeStats, Exploration, IterationRecord,
    Learner, ResetOnSwitch, SwitchMode, Trainer, TrainerConfig,
};
