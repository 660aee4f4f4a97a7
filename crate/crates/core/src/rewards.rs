//! Ten reward elements and their per-operator composition. Every transition
//! yields a reward for every operator, so each policy learns from all data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{block_height, operator_success, OperatorId, Target, Thresholds, K};
use crate::sim::{dist, norm, ActionVec, EnvState, SimConfig, Vec3};

pub type RewardVector = [f64; K];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("no candidate binding to compute rewards for")]
    NoBinding,
}

/// Coefficients of the reward elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub shaping_coef: f64,
    /// Scale inside the `1 - tanh(scale * d)` distance kernels.
    pub kernel_scale: f64,
    pub near_dist: f64,
    pub gap_tol: f64,
    pub height_norm: f64,
    pub height_success: f64,
    pub vel_threshold: f64,
    pub acc_limit: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            shaping_coef: 0.05,
            kernel_scale: 10.0,
            near_dist: 0.02,
            gap_tol: 0.005,
            height_norm: 0.04,
            height_success: 0.04,
            vel_threshold: 0.05,
            acc_limit: 5.0,
        }
    }
}

/// Element ids composing each operator's reward, in operator order.
pub const COMPOSITION: [&[u8]; K] = [
    &[1, 2, 3],
    &[1, 2, 3],
    &[4],
    &[1, 4, 5, 6],
    &[3, 4, 5, 7, 8, 9],
    &[1, 2, 3, 4, 5, 7, 8, 10],
    &[3, 4, 10],
];

/// Closed range each element lives in.
pub fn element_range(id: u8) -> (f64, f64) {
    match id {
        1 | 3 | 5 | 7 | 8 => (0.0, 1.0),
        4 | 6 | 10 => (0.0, 1.0),
        9 => (-1.0, 0.0),
        2 => (-0.6, 0.0),
        _ => panic!("unknown reward element {id}"),
    }
}

/// One environment transition and the objects rewards refer to.
#[derive(Debug, Clone, Copy)]
pub struct TransitionCtx<'a> {
    pub prev: &'a EnvState,
    pub action: ActionVec,
    pub next: &'a EnvState,
    pub target: Target,
}

/// Sign of the gripper command each operator wants: open is positive.
fn wanted_grip(op: OperatorId) -> f64 {
    match op {
        OperatorId::Open => 1.0,
        _ => -1.0,
    }
}

/// Position the target block should reach under `op`.
pub fn goal_position(op: OperatorId, state: &EnvState, target: Target, cfg: &SimConfig) -> Vec3 {
    match op {
        OperatorId::Insert => cfg.slot_target(target.slot),
        _ => {
            let mut p = state.blocks[target.base].pos;
            p[2] += cfg.block_edge;
            p
        }
    }
}

fn kernel(d: f64, rc: &RewardConfig) -> f64 {
    1.0 - (rc.kernel_scale * d).tanh()
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn element(id: u8, op: OperatorId, ctx: &TransitionCtx, cfg: &SimConfig, rc: &RewardConfig) -> f64 {
    let s = ctx.next;
    let b = ctx.target.block;
    let blk = &s.blocks[b];
    match id {
        1 => indicator(ctx.action.grip * wanted_grip(op) > 0.0),
        2 => -rc.shaping_coef * ctx.action.translation().iter().map(|v| v * v).sum::<f64>(),
        3 => indicator(dist(s.ee, blk.pos) < rc.near_dist),
        4 => kernel(dist(s.ee, blk.pos), rc),
        5 => indicator(s.gap >= cfg.block_edge && s.gap <= cfg.block_edge + rc.gap_tol),
        6 => (block_height(s, b, cfg) / rc.height_norm).clamp(0.0, 1.0),
        7 => indicator(block_height(s, b, cfg) > rc.height_success),
        8 => indicator(norm(blk.vel) > rc.vel_threshold),
        9 => -indicator(norm(blk.accel(cfg.dt)) > rc.acc_limit),
        10 => kernel(dist(blk.pos, goal_position(op, s, ctx.target, cfg)), rc),
        _ => panic!("unknown reward element {id}"),
    }
}

pub fn operator_reward(op: OperatorId, ctx: &TransitionCtx, cfg: &SimConfig, rc: &RewardConfig) -> f64 {
    COMPOSITION[op.index()].iter().map(|&e| element(e, op, ctx, cfg, rc)).sum()
}

pub fn reward_vector(ctx: &TransitionCtx, cfg: &SimConfig, rc: &RewardConfig) -> RewardVector {
    OperatorId::ALL.map(|op| operator_reward(op, ctx, cfg, rc))
}

/// Reward when the acting target is unknown: computed on the targets where
/// `op` succeeds if there are any, otherwise on all candidates, and reduced
/// by elementwise maximum.
pub fn eval_reward_vector(
    prev: &EnvState,
    action: ActionVec,
    next: &EnvState,
    candidates: &[Target],
    op: OperatorId,
    cfg: &SimConfig,
    th: &Thresholds,
    rc: &RewardConfig,
) -> Result<RewardVector, RewardError> {
    if candidates.is_empty() {
        return Err(RewardError::NoBinding);
    }
    let winners: Vec<Target> = candidates
        .iter()
        .copied()
        .filter(|t| operator_success(op, next, *t, cfg, th))
        .collect();
    let pool = if winners.is_empty() { candidates } else { &winners[..] };
    let mut out = [f64::NEG_INFINITY; K];
    for &target in pool {
        let r = reward_vector(&TransitionCtx { prev, action, next, target }, cfg, rc);
        for i in 0..K {
            out[i] = out[i].max(r[i]);
        }
    }
    Ok(out)
}
