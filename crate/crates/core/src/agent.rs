//! Low-level controllers and the chained (scheduled) episode runner.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::grounding::{OperatorId, Target, Thresholds};
use crate::sac::{Learner, LearnerError};
use crate::scheduler::{Directive, Scheduler, SchedulerConfig, Task, TraceEntry, IDLE_ACTION};
use crate::scripted::scripted_action;
use crate::sim::{observe, reset, step, ActionVec, EnvState, SimConfig, OBS_DIM};

/// Produces the action of operator `op`'s policy.
pub trait Controller {
    fn act(
        &mut self,
        op: OperatorId,
        state: &EnvState,
        obs: &[f64; OBS_DIM],
        target: Target,
        rng: &mut ChaCha8Rng,
    ) -> Result<ActionVec, LearnerError>;
}

#[derive(Debug, Clone)]
pub struct Scripted {
    pub task: Task,
    pub sim: SimConfig,
}

impl Controller for Scripted {
    fn act(&mut self, op: OperatorId, state: &EnvState, _: &[f64; OBS_DIM], target: Target, _: &mut ChaCha8Rng) -> Result<ActionVec, LearnerError> {
        Ok(scripted_action(op, state, target, self.task, &self.sim))
    }
}

/// Learned heads; deterministic mode acts with `tanh(mean)`.
#[derive(Debug, Clone, Copy)]
pub struct Learned<'a> {
    pub learner: &'a Learner,
    pub deterministic: bool,
}

impl Controller for Learned<'_> {
    fn act(&mut self, op: OperatorId, _: &EnvState, obs: &[f64; OBS_DIM], _: Target, rng: &mut ChaCha8Rng) -> Result<ActionVec, LearnerError> {
        let (a, _) = self.learner.head(op).act(obs, self.deterministic, rng)?;
        Ok(ActionVec::from_slice(&a))
    }
}

/// Uniform random actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomActions;

impl Controller for RandomActions {
    fn act(&mut self, _: OperatorId, _: &EnvState, _: &[f64; OBS_DIM], _: Target, rng: &mut ChaCha8Rng) -> Result<ActionVec, LearnerError> {
        Ok(ActionVec::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        ))
    }
}

/// Wraps a controller, replacing one operator's policy by a zero action.
#[derive(Debug, Clone)]
pub struct Frozen<C> {
    pub inner: C,
    pub frozen: OperatorId,
}

impl<C: Controller> Controller for Frozen<C> {
    fn act(&mut self, op: OperatorId, state: &EnvState, obs: &[f64; OBS_DIM], target: Target, rng: &mut ChaCha8Rng) -> Result<ActionVec, LearnerError> {
        if op == self.frozen {
            Ok(ActionVec::default())
        } else {
            self.inner.act(op, state, obs, target, rng)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainedEpisode {
    pub success: bool,
    pub steps: u32,
    pub trace: Vec<TraceEntry>,
    pub states: Vec<EnvState>,
    pub ops: Vec<Option<OperatorId>>,
}

/// Settings shared by every scheduled episode.
#[derive(Debug, Clone, Default)]
pub struct EpisodeSetup {
    pub sim: SimConfig,
    pub thresholds: Thresholds,
    pub scheduler: SchedulerConfig,
}

/// One scheduled episode from `reset(seed)`; keeps the visited states when
/// `record` is set.
pub fn run_chained_episode(
    task: Task,
    controller: &mut impl Controller,
    setup: &EpisodeSetup,
    seed: u64,
    rng: &mut ChaCha8Rng,
    record: bool,
) -> Result<ChainedEpisode, LearnerError> {
    let sim = &setup.sim;
    let mut sched = Scheduler::new(task, setup.scheduler.clone(), crate::grounding::world_instance(), sim, &setup.thresholds);
    let mut s = reset(seed, sim);
    let mut states = Vec::new();
    let mut ops = Vec::new();
    let mut success = false;
    while s.step < sim.episode_steps {
        let (op, target) = match sched.step(&s, sim, &setup.thresholds) {
            Directive::EpisodeDone { success: ok } => {
                success = ok;
                break;
            }
            Directive::Act { op, target } => (op, target),
        };
        let a = match (op, target) {
            (Some(op), Some(t)) => controller.act(op, &s, &observe(&s, sim), t, rng)?,
            _ => IDLE_ACTION,
        };
        if record {
            states.push(s.clone());
            ops.push(op);
        }
        s = step(&s, a, sim);
    }
    sched.end_episode(s.step);
    if record {
        states.push(s.clone());
    }
    Ok(ChainedEpisode { success, steps: s.step, trace: sched.trace, states, ops })
}
