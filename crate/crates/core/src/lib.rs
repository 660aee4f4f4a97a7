//! Operator-scheduled hierarchical reinforcement learning.
//!
//! A symbolic layer of planning operators decides which per-operator
//! soft actor-critic policy acts in a kinematic block-manipulation simulator.

pub mod agent;
pub mod domain;
pub mod eval;
pub mod grounding;
pub mod rewards;
pub mod rng;
pub mod sac;
pub mod scheduler;
pub mod scripted;
pub mod sim;
pub mod symbolic;
pub mod train;
pub mod trajectory;
