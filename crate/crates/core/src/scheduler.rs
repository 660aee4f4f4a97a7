//! Symbolic operator scheduler. On an operator's gated success the next
//! symbolic state is predicted from that operator's effects; on timeout, or
//! when nothing is active, it is re-grounded from the simulator. The next
//! operator is the first step of a plan toward the task goal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grounding::{
    ground_state, operator_success, symbolic_binding, HoldGate, OperatorId, Target, Thresholds, BLOCKS, SLOTS,
};
use crate::sim::{contacts, dist, ActionVec, Contact, EnvState, SimConfig, N_BLOCKS, N_SLOTS};
use crate::symbolic::{GroundAction, GroundLiteral, Instance, TruthAssignment, DEFAULT_PLAN_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Task {
    Stack,
    Insert,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Stack => "STACK",
            Task::Insert => "INSERT",
        }
    }

    /// Operators the task may schedule.
    pub fn operators(self) -> [OperatorId; 6] {
        use OperatorId::*;
        match self {
            Task::Stack => [Open, Close, Reach, Lift, Move, Stack],
            Task::Insert => [Open, Close, Reach, Lift, Move, Insert],
        }
    }

    /// Goal literal for one target.
    pub fn goal(self, inst: &Instance, target: Target) -> GroundLiteral {
        let atom = match self {
            Task::Stack => inst.atom("onTop", &[BLOCKS[target.block], BLOCKS[target.base]]),
            Task::Insert => inst.atom("inSlot", &[BLOCKS[target.block], SLOTS[target.slot]]),
        };
        GroundLiteral { atom: atom.expect("world instance has goal atoms"), positive: true }
    }

    /// Goal holds for some pair of objects.
    pub fn goal_holds(self, inst: &Instance, state: &TruthAssignment) -> bool {
        (0..N_BLOCKS).any(|b| match self {
            Task::Stack => state.get(self.goal(inst, Target::new(b, 1 - b, 0)).atom),
            Task::Insert => (0..N_SLOTS).any(|s| state.get(self.goal(inst, Target::new(b, 1 - b, s)).atom)),
        })
    }

    /// Holding time the goal must last for the episode to count.
    pub fn final_operator(self) -> OperatorId {
        match self {
            Task::Stack => OperatorId::Stack,
            Task::Insert => OperatorId::Insert,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "STACK" => Ok(Task::Stack),
            "INSERT" => Ok(Task::Insert),
            _ => Err(format!("unknown task `{s}` (expected STACK or INSERT)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Success and timeout are checked every `planner_period` steps.
    pub planner_period: u32,
    pub operator_timeout: u32,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self { planner_period: 1, operator_timeout: 45 }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.planner_period == 0 || self.operator_timeout == 0 {
            return Err("planner_period and operator_timeout must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Timeout,
    /// Still running when the episode ended.
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub op: OperatorId,
    pub start: u32,
    pub end: u32,
    pub outcome: Outcome,
}

/// What to do on the current step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Directive {
    /// Run `op` for `target`; `None` means idle.
    Act { op: Option<OperatorId>, target: Option<Target> },
    EpisodeDone { success: bool },
}

/// Open the gripper and back away upward.
pub const IDLE_ACTION: ActionVec = ActionVec { dx: 0.0, dy: 0.0, dz: 1.0, grip: 1.0 };

/// Candidate manipulation targets: the block the end-effector touches if
/// any, otherwise every block resting on the tray.
pub fn get_targets(state: &EnvState, cfg: &SimConfig) -> Vec<usize> {
    let cs = contacts(state, cfg);
    let held: Vec<usize> = (0..N_BLOCKS).filter(|b| cs.contains(&Contact::EeBlock(*b))).collect();
    if held.len() == 1 {
        return held;
    }
    (0..N_BLOCKS).filter(|b| cs.contains(&Contact::BlockTable(*b))).collect()
}

/// The candidate closest to the end-effector, ties to the lower index.
pub fn choose_target(state: &EnvState, candidates: &[usize], cfg: &SimConfig) -> Option<Target> {
    candidates
        .iter()
        .copied()
        .min_by(|&a, &b| dist(state.ee, state.blocks[a].pos).total_cmp(&dist(state.ee, state.blocks[b].pos)))
        .map(|b| Target::for_block(state, b, cfg))
}

/// Ground actions available to `task` with the target's objects fixed.
pub fn task_actions(inst: &Instance, task: Task, target: Target) -> Vec<GroundAction> {
    let partial = symbolic_binding(task.final_operator(), target, task == Task::Insert);
    inst.ground_actions(&partial)
        .expect("world binding is well-typed")
        .into_iter()
        .filter(|a| {
            let op: OperatorId = a.name.parse().expect("domain operators are known");
            task.operators().contains(&op)
        })
        .collect()
}

/// First operator of a plan from `pre` to the task goal; if no plan exists,
/// the applicable operator whose effects satisfy the most goal literals,
/// ties to declaration order. `None` when the goal already holds or nothing
/// applies.
pub fn get_operator(inst: &Instance, pre: &TruthAssignment, task: Task, target: Target) -> Option<OperatorId> {
    let goal = [task.goal(inst, target)];
    if inst.holds(pre, &goal) {
        return None;
    }
    let actions = task_actions(inst, task, target);
    match inst.plan_with(pre, &goal, &actions, DEFAULT_PLAN_DEPTH) {
        Ok(plan) => plan.first().map(|s| s.operator.parse().expect("domain operators are known")),
        Err(_) => {
            let unsatisfied = |s: &TruthAssignment| goal.iter().filter(|g| s.get(g.atom) != g.positive).count();
            let before = unsatisfied(pre);
            let mut best: Option<(&GroundAction, usize)> = None;
            for a in actions.iter().filter(|a| a.applicable(pre)) {
                let left = unsatisfied(&a.apply(pre));
                if best.is_none_or(|(_, b)| left < b) {
                    best = Some((a, left));
                }
            }
            best.filter(|(_, left)| *left < before)
                .or_else(|| actions.iter().find(|a| a.applicable(pre)).map(|a| (a, before)))
                .map(|(a, _)| a.name.parse().expect("domain operators are known"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scheduler {
    pub task: Task,
    pub cfg: SchedulerConfig,
    inst: Instance,
    pub active: Option<OperatorId>,
    pub target: Option<Target>,
    pub steps_in_op: u32,
    gate: HoldGate,
    goal_gate: HoldGate,
    /// Symbolic state the active operator was selected from.
    pub pre: Option<TruthAssignment>,
    pub trace: Vec<TraceEntry>,
    started: u32,
}

impl Scheduler {
    pub fn new(task: Task, cfg: SchedulerConfig, inst: Instance, sim: &SimConfig, th: &Thresholds) -> Self {
        Self {
            task,
            cfg,
            inst,
            active: None,
            target: None,
            steps_in_op: 0,
            gate: HoldGate::new(1),
            goal_gate: HoldGate::for_op(task.final_operator(), sim, th),
            pre: None,
            trace: Vec::new(),
            started: 0,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    fn finish(&mut self, step: u32, outcome: Outcome) {
        if let Some(op) = self.active.take() {
            self.trace.push(TraceEntry { op, start: self.started, end: step, outcome });
        }
    }

    fn select(&mut self, pre: TruthAssignment, target: Option<Target>, step: u32, sim: &SimConfig, th: &Thresholds) {
        self.active = target.and_then(|t| get_operator(&self.inst, &pre, self.task, t));
        self.target = target;
        self.pre = Some(pre);
        self.steps_in_op = 0;
        self.started = step;
        if let Some(op) = self.active {
            self.gate = HoldGate::for_op(op, sim, th);
        }
    }

    fn reground(&mut self, env: &EnvState, sim: &SimConfig, th: &Thresholds) {
        let pre = ground_state(env, &self.inst, sim, th).expect("world atoms exist");
        let target = choose_target(env, &get_targets(env, sim), sim);
        self.select(pre, target, env.step, sim, th);
    }

    /// Advances bookkeeping for the state reached after the previous action
    /// and decides what runs next.
    pub fn step(&mut self, env: &EnvState, sim: &SimConfig, th: &Thresholds) -> Directive {
        let grounded = ground_state(env, &self.inst, sim, th).expect("world atoms exist");
        if self.goal_gate.update(self.task.goal_holds(&self.inst, &grounded)) {
            self.finish(env.step, Outcome::Open);
            return Directive::EpisodeDone { success: true };
        }
        match (self.active, self.target) {
            (Some(op), Some(target)) => {
                self.steps_in_op += 1;
                let ok = operator_success(op, env, target, sim, th);
                let gated = self.gate.update(ok);
                if self.steps_in_op % self.cfg.planner_period == 0 || self.steps_in_op >= self.cfg.operator_timeout {
                    if gated {
                        let binding = symbolic_binding(op, target, self.task == Task::Insert);
                        let pre = self.pre.as_ref().expect("active operator has a precondition state");
                        let next = self.inst.apply_effects(op.name(), pre, &binding).expect("binding is valid");
                        self.finish(env.step, Outcome::Success);
                        self.select(next, Some(target), env.step, sim, th);
                    } else if self.steps_in_op >= self.cfg.operator_timeout {
                        self.finish(env.step, Outcome::Timeout);
                        self.reground(env, sim, th);
                    }
                }
            }
            _ => self.reground(env, sim, th),
        }
        Directive::Act { op: self.active, target: self.target }
    }

    /// Closes the trace when the episode is cut off.
    pub fn end_episode(&mut self, step: u32) {
        self.finish(step, Outcome::Open);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::world_instance;
    use crate::sim::reset;

    fn fixture() -> (Instance, SimConfig, Thresholds) {
        (world_instance(), SimConfig::default(), Thresholds::default())
    }

    #[test]
    fn reset_grounding_selects_reach() {
        let (inst, cfg, th) = fixture();
        for seed in 0..20 {
            let s = reset(seed, &cfg);
            let pre = ground_state(&s, &inst, &cfg, &th).unwrap();
            let t = choose_target(&s, &get_targets(&s, &cfg), &cfg).unwrap();
            for task in [Task::Stack, Task::Insert] {
                assert_eq!(get_operator(&inst, &pre, task, t), Some(OperatorId::Reach));
            }
        }
    }

    #[test]
    fn both_blocks_are_candidates_until_one_is_touched() {
        let (_, cfg, _) = fixture();
        let mut s = reset(2, &cfg);
        s.ee = [0.0, 0.0, 0.25];
        assert_eq!(get_targets(&s, &cfg), [0, 1]);
        s.ee = s.blocks[1].pos;
        assert_eq!(get_targets(&s, &cfg), [1]);
        s.ee = [0.0, 0.0, 0.25];
        s.blocks[0].pos = s.blocks[1].pos;
        s.blocks[0].pos[2] += cfg.block_edge;
        assert_eq!(get_targets(&s, &cfg), [1]);
    }

    #[test]
    fn satisfied_goal_selects_nothing() {
        let (inst, cfg, th) = fixture();
        let mut s = reset(3, &cfg);
        s.ee = [-0.1, -0.1, 0.25];
        s.blocks[0].pos = s.blocks[1].pos;
        s.blocks[0].pos[2] += cfg.block_edge;
        let pre = ground_state(&s, &inst, &cfg, &th).unwrap();
        assert_eq!(get_operator(&inst, &pre, Task::Stack, Target::new(0, 1, 0)), None);
    }

    #[test]
    fn task_names_parse() {
        assert_eq!("stack".parse::<Task>().unwrap(), Task::Stack);
        assert_eq!("INSERT".parse::<Task>().unwrap(), Task::Insert);
        assert!("push".parse::<Task>().is_err());
    }

    #[test]
    fn insert_task_never_offers_stack() {
        let (inst, ..) = fixture();
        let names: Vec<String> = task_actions(&inst, Task::Insert, Target::new(0, 1, 1)).into_iter().map(|a| a.name).collect();
        assert!(names.iter().any(|n| n == "insert"));
        assert!(!names.iter().any(|n| n == "stack"));
        let names: Vec<String> = task_actions(&inst, Task::Stack, Target::new(0, 1, 1)).into_iter().map(|a| a.name).collect();
        assert!(names.iter().any(|n| n == "stack"));
        assert!(!names.iter().any(|n| n == "insert"));
    }
}
