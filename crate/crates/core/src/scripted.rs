//! Hand-written proportional controllers for every operator. They stand in
//! for learned policies when checking the scheduler and simulator, and drive
//! the setup phase of single-operator evaluation.

use crate::grounding::{OperatorId, Target};
use crate::scheduler::Task;
use crate::sim::{ActionVec, EnvState, SimConfig, Vec3};

/// Clearance kept above the base while carrying a block toward it.
const CARRY_CLEARANCE: f64 = 0.08;
const ALIGN_TOL: f64 = 0.001;

fn toward(ee: Vec3, p: Vec3, cfg: &SimConfig, grip: f64) -> ActionVec {
    let s = cfg.max_step;
    ActionVec::new((p[0] - ee[0]) / s, (p[1] - ee[1]) / s, (p[2] - ee[2]) / s, grip)
}

/// Point the held block is lowered onto: the base's top face or the slot.
fn placement(op: OperatorId, state: &EnvState, target: Target, cfg: &SimConfig) -> Vec3 {
    if op == OperatorId::Insert {
        cfg.slot_target(target.slot)
    } else {
        let mut p = state.blocks[target.base].pos;
        p[2] += cfg.block_edge;
        p
    }
}

/// Moves over `dest`, then presses down onto it.
fn place(state: &EnvState, dest: Vec3, cfg: &SimConfig) -> ActionVec {
    let ee = state.ee;
    let off = ((dest[0] - ee[0]).powi(2) + (dest[1] - ee[1]).powi(2)).sqrt();
    if off > ALIGN_TOL {
        let z = ee[2].max(dest[2] + 0.02);
        toward(ee, [dest[0], dest[1], z], cfg, -1.0)
    } else {
        toward(ee, [dest[0], dest[1], dest[2] - 0.01], cfg, -1.0)
    }
}

pub fn scripted_action(op: OperatorId, state: &EnvState, target: Target, task: Task, cfg: &SimConfig) -> ActionVec {
    let block = state.blocks[target.block].pos;
    match op {
        OperatorId::Open => ActionVec::new(0.0, 0.0, 0.0, 1.0),
        OperatorId::Close => ActionVec::new(0.0, 0.0, 0.0, -1.0),
        OperatorId::Reach => toward(state.ee, block, cfg, 1.0),
        OperatorId::Lift => ActionVec::new(0.0, 0.0, 1.0, -1.0),
        OperatorId::Move => {
            let dest_op = if task == Task::Insert { OperatorId::Insert } else { OperatorId::Stack };
            let mut p = placement(dest_op, state, target, cfg);
            p[2] += CARRY_CLEARANCE;
            let v = state.blocks[target.block].vel;
            let sideways = v[0].hypot(v[1]);
            if crate::sim::dist(state.ee, p) < 4.0 * cfg.max_step && sideways < 0.01 {
                // already there: keep the block in motion by rising or sinking
                let dz = if state.ee[2] < cfg.workspace_max[2] - 0.06 { 1.0 } else { -1.0 };
                return ActionVec::new(0.0, 0.0, dz, -1.0);
            }
            toward(state.ee, p, cfg, -1.0)
        }
        OperatorId::Stack | OperatorId::Insert => place(state, placement(op, state, target, cfg), cfg),
    }
}
