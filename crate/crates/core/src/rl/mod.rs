//! Curriculum machinery shared by both learners.

pub mod buffer;
pub mod curriculum;
pub mod fit;
pub mod polyak;

pub use buffer::{select_curriculum_reward, Batch, Phase, ReplayBuffer, Transition, DEFAULT_CAPACITY};
pub use curriculum::{ControllerState, CurriculumController};
pub use fit::{critic_input, deterministic_fit_value, stochastic_fit_value};
pub use polyak::{polyak_update, DEFAULT_TAU};
