//! Per-operator soft actor-critic.

pub mod buffer;
pub mod checkpoint;
pub mod learner;
pub mod nn;

pub use buffer::{Batch, BufferError, ReplayBuffer, Transition};
pub use learner::{Head, HeadStats, HyperParams, Learner, LearnerError};
