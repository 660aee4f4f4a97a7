//! Continuous-to-symbolic bridge: state-variable groundings, operator success
//! criteria and holding-time gates.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{parse_domain, DomainSource, STACK_INSERT_DOMAIN};
use crate::sim::{between_fingers, contacts, dist, dist_xy, norm, Contact, EnvState, SimConfig, N_BLOCKS, N_SLOTS};
use crate::symbolic::{binding, Binding, Instance, Object, SymbolicError, TruthAssignment};

/// The seven operators, in reward-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorId {
    Open,
    Close,
    Reach,
    Lift,
    Move,
    Stack,
    Insert,
}

pub const K: usize = 7;

impl OperatorId {
    pub const ALL: [OperatorId; K] = [
        OperatorId::Open,
        OperatorId::Close,
        OperatorId::Reach,
        OperatorId::Lift,
        OperatorId::Move,
        OperatorId::Stack,
        OperatorId::Insert,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::Open => "open",
            OperatorId::Close => "close",
            OperatorId::Reach => "reach",
            OperatorId::Lift => "lift",
            OperatorId::Move => "move",
            OperatorId::Stack => "stack",
            OperatorId::Insert => "insert",
        }
    }

    /// Gripper-only operators need no object target.
    pub fn is_single_object(self) -> bool {
        matches!(self, OperatorId::Open | OperatorId::Close)
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperatorId::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown operator `{s}`"))
    }
}

/// Numeric thresholds of the groundings and success criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub graspable_dist: f64,
    pub lifted_height: f64,
    pub moving_vel: f64,
    pub moving_acc_max: f64,
    pub above_height: f64,
    pub align_tol: f64,
    pub reach_success_dist: f64,
    pub lift_success_height: f64,
    pub stack_pair_height: f64,
    pub insert_dist: f64,
    /// Required holding time per operator, seconds, in operator order.
    pub hold_seconds: [f64; K],
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            graspable_dist: 0.01,
            lifted_height: 0.01,
            moving_vel: 0.05,
            moving_acc_max: 5.0,
            above_height: 0.05,
            align_tol: 0.02,
            reach_success_dist: 0.02,
            lift_success_height: 0.04,
            stack_pair_height: 0.035,
            insert_dist: 0.003,
            hold_seconds: [0.2, 0.2, 0.1, 0.3, 0.2, 0.5, 0.5],
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), String> {
        let scalars = [
            self.graspable_dist,
            self.lifted_height,
            self.moving_vel,
            self.moving_acc_max,
            self.above_height,
            self.align_tol,
            self.reach_success_dist,
            self.lift_success_height,
            self.stack_pair_height,
            self.insert_dist,
        ];
        if scalars.iter().chain(&self.hold_seconds).all(|v| *v > 0.0) {
            Ok(())
        } else {
            Err("grounding thresholds must be positive".into())
        }
    }

    pub fn hold_steps(&self, op: OperatorId, cfg: &SimConfig) -> u32 {
        cfg.hold_steps(self.hold_seconds[op.index()]).max(1)
    }
}

/// Objects of an operator's continuous binding. `base` is the block to stack
/// on, `slot` the slot to insert into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Target {
    pub block: usize,
    pub base: usize,
    pub slot: usize,
}

impl Target {
    pub fn new(block: usize, base: usize, slot: usize) -> Self {
        assert!(block < N_BLOCKS && base < N_BLOCKS && slot < N_SLOTS && block != base);
        Self { block, base, slot }
    }

    /// `block` with the other block as base and its nearest slot.
    pub fn for_block(state: &EnvState, block: usize, cfg: &SimConfig) -> Self {
        let slot = crate::sim::nearest_slot(state.blocks[block].pos, cfg);
        Self::new(block, 1 - block, slot)
    }
}

pub const GRIPPER: &str = "g";
pub const TABLE: &str = "t";
pub const BLOCKS: [&str; N_BLOCKS] = ["b1", "b2"];
pub const SLOTS: [&str; N_SLOTS] = ["s1", "s2"];

pub fn world_objects() -> Vec<Object> {
    let mut v = vec![Object::new(GRIPPER, "gripper"), Object::new(TABLE, "table")];
    v.extend(BLOCKS.iter().map(|b| Object::new(*b, "block")));
    v.extend(SLOTS.iter().map(|s| Object::new(*s, "slot")));
    v
}

/// The shipped domain instantiated over the simulator's objects.
pub fn world_instance() -> Instance {
    let d = parse_domain(&DomainSource::inline(STACK_INSERT_DOMAIN)).expect("shipped domain parses");
    Instance::new(Arc::new(d), world_objects()).expect("world objects match the domain")
}

/// Symbolic binding of `op` for a continuous target. `?x` is the base block,
/// or the slot when `insert_task` (for `move`) or for `insert` itself.
pub fn symbolic_binding(op: OperatorId, target: Target, insert_task: bool) -> Binding {
    let mut b = binding([("?g", GRIPPER), ("?b", BLOCKS[target.block]), ("?t", TABLE)]);
    let x = match op {
        OperatorId::Insert => Some(SLOTS[target.slot]),
        OperatorId::Move if insert_task => Some(SLOTS[target.slot]),
        OperatorId::Move | OperatorId::Stack => Some(BLOCKS[target.base]),
        _ => None,
    };
    if let Some(x) = x {
        b.insert("?x".into(), x.into());
    }
    b
}

/// Height of a block's centre above its resting height on the tray.
pub fn block_height(state: &EnvState, b: usize, cfg: &SimConfig) -> f64 {
    state.blocks[b].pos[2] - cfg.rest_z()
}

pub fn graspable(state: &EnvState, b: usize, cfg: &SimConfig, th: &Thresholds) -> bool {
    dist(state.ee, state.blocks[b].pos) < th.graspable_dist && between_fingers(state, b, cfg)
}

pub fn lifted(state: &EnvState, b: usize, cfg: &SimConfig, th: &Thresholds) -> bool {
    block_height(state, b, cfg) > th.lifted_height
}

pub fn moving(state: &EnvState, b: usize, cfg: &SimConfig, th: &Thresholds) -> bool {
    let blk = &state.blocks[b];
    norm(blk.vel) > th.moving_vel && norm(blk.accel(cfg.dt)) < th.moving_acc_max
}

fn above_point(state: &EnvState, b: usize, p: [f64; 3], th: &Thresholds) -> bool {
    let pos = state.blocks[b].pos;
    dist_xy(pos, p) < th.align_tol && pos[2] - p[2] > th.above_height
}

pub fn above_block(state: &EnvState, b: usize, base: usize, th: &Thresholds) -> bool {
    b != base && above_point(state, b, state.blocks[base].pos, th)
}

pub fn above_slot(state: &EnvState, b: usize, s: usize, cfg: &SimConfig, th: &Thresholds) -> bool {
    above_point(state, b, cfg.slot_target(s), th)
}

/// Grounds every atom of the world instance from the simulator state.
pub fn ground_state(
    state: &EnvState,
    inst: &Instance,
    cfg: &SimConfig,
    th: &Thresholds,
) -> Result<TruthAssignment, SymbolicError> {
    let cs = contacts(state, cfg);
    let mut s = inst.empty_state();
    let open = state.gap >= cfg.gripper_open_gap - 1e-9;
    s.set(inst.atom("openGripper", &[GRIPPER])?, open);
    for (b, bn) in BLOCKS.iter().enumerate() {
        s.set(inst.atom("graspable", &[GRIPPER, bn])?, graspable(state, b, cfg, th));
        s.set(inst.atom("onTable", &[bn, TABLE])?, cs.contains(&Contact::BlockTable(b)));
        s.set(inst.atom("lifted", &[bn])?, lifted(state, b, cfg, th));
        s.set(inst.atom("moving", &[bn])?, moving(state, b, cfg, th));
        for (o, on) in BLOCKS.iter().enumerate() {
            if o == b {
                continue;
            }
            s.set(inst.atom("above", &[bn, on])?, above_block(state, b, o, th));
            let on_top = cs.contains(&Contact::BlockBlock { upper: b, lower: o }) && cs.contains(&Contact::BlockTable(o));
            s.set(inst.atom("onTop", &[bn, on])?, on_top);
        }
        for (sl, sn) in SLOTS.iter().enumerate() {
            s.set(inst.atom("above", &[bn, sn])?, above_slot(state, b, sl, cfg, th));
            let in_slot = cs.contains(&Contact::BlockSlot { block: b, slot: sl }) && !cs.contains(&Contact::EeBlock(b));
            s.set(inst.atom("inSlot", &[bn, sn])?, in_slot);
        }
    }
    Ok(s)
}

/// Per-frame success criterion of `op` for `target`.
pub fn operator_success(op: OperatorId, state: &EnvState, target: Target, cfg: &SimConfig, th: &Thresholds) -> bool {
    let b = target.block;
    let pos = state.blocks[b].pos;
    match op {
        OperatorId::Open => state.last_action.grip > 0.0,
        OperatorId::Close => state.last_action.grip < 0.0,
        OperatorId::Reach => dist(state.ee, pos) < th.reach_success_dist,
        OperatorId::Lift => block_height(state, b, cfg) > th.lift_success_height,
        OperatorId::Move => moving(state, b, cfg, th),
        OperatorId::Stack => {
            let cs = contacts(state, cfg);
            let x = target.base;
            let touching = cs.contains(&Contact::BlockBlock { upper: b, lower: x })
                || cs.contains(&Contact::BlockBlock { upper: x, lower: b });
            let on_tray = cs.iter().filter(|c| matches!(c, Contact::BlockTable(_))).count();
            touching && (pos[2] - state.blocks[x].pos[2]).abs() > th.stack_pair_height && on_tray == 1
        }
        OperatorId::Insert => dist(pos, cfg.slot_target(target.slot)) < th.insert_dist,
    }
}

/// Every target the world admits: each ordered block pair with each slot.
pub fn all_targets() -> Vec<Target> {
    let mut v = Vec::new();
    for b in 0..N_BLOCKS {
        for s in 0..N_SLOTS {
            v.push(Target::new(b, 1 - b, s));
        }
    }
    v
}

/// Consecutive-success counter for one operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldGate {
    pub required: u32,
    pub counter: u32,
}

impl HoldGate {
    pub fn new(required: u32) -> Self {
        Self { required: required.max(1), counter: 0 }
    }

    pub fn for_op(op: OperatorId, cfg: &SimConfig, th: &Thresholds) -> Self {
        Self::new(th.hold_steps(op, cfg))
    }

    /// Records one frame; true once success has lasted `required` frames.
    pub fn update(&mut self, success: bool) -> bool {
        self.counter = if success { self.counter.saturating_add(1) } else { 0 };
        self.passed()
    }

    pub fn passed(&self) -> bool {
        self.counter >= self.required
    }

    pub fn reset(&mut self) {
        self.counter = 0;
    }
}
