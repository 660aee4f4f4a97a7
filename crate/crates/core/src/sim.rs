//! Deterministic kinematic block-world: an end-effector in a 30 cm cube above
//! a tray, a two-finger gripper, two 4 cm blocks and two slots, stepped at
//! 20 Hz with a 4-dimensional action.
//!
//! Coordinates are metres with z = 0 on the tray surface. Grasping is
//! kinematic: a closing gripper attaches a block centred between its fingers,
//! the attached block follows the end-effector, and released blocks drop onto
//! the highest support under their centre. A held block cannot be pushed
//! through whatever is beneath it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

pub const N_BLOCKS: usize = 2;
pub const N_SLOTS: usize = 2;
pub const OBS_DIM: usize = 36;
pub const ACTION_DIM: usize = 4;

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub(crate) fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

pub(crate) fn dist_xy(a: Vec3, b: Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub workspace_min: Vec3,
    pub workspace_max: Vec3,
    /// End-effector travel per unit action per step, metres.
    pub max_step: f64,
    pub block_edge: f64,
    pub slot_edge: f64,
    pub slot_depth: f64,
    pub tray_edge: f64,
    pub slot_centers: [[f64; 2]; N_SLOTS],
    /// A block whose centre is this close to a slot centre (per axis) drops
    /// into the slot and is centred.
    pub slot_capture: f64,
    /// Half-extent of the square blocks are placed in on reset.
    pub spawn_half_extent: f64,
    pub reset_height: [f64; 2],
    pub episode_steps: u32,
    pub gripper_open_gap: f64,
    pub gap_rate: f64,
    pub grasp_dist: f64,
    pub contact_tol: f64,
    pub drop_per_step: f64,
    /// Factor applied to every metric observation entry.
    pub obs_scale: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            workspace_min: [-0.15, -0.15, 0.0],
            workspace_max: [0.15, 0.15, 0.30],
            max_step: 0.01,
            block_edge: 0.04,
            slot_edge: 0.041,
            slot_depth: 0.01,
            tray_edge: 0.30,
            slot_centers: [[0.09, -0.07], [0.09, 0.07]],
            slot_capture: 0.01,
            spawn_half_extent: 0.11,
            reset_height: [0.05, 0.145],
            episode_steps: 360,
            gripper_open_gap: 0.08,
            gap_rate: 0.02,
            grasp_dist: 0.01,
            contact_tol: 0.002,
            drop_per_step: 0.5,
            obs_scale: 10.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0) || !(self.max_step > 0.0) || self.episode_steps == 0 {
            return Err("dt, max_step and episode_steps must be positive".into());
        }
        if (0..3).any(|i| !(self.workspace_min[i] < self.workspace_max[i])) {
            return Err("workspace_min must be below workspace_max".into());
        }
        if !(self.obs_scale > 0.0) {
            return Err("obs_scale must be positive".into());
        }
        if !(self.gripper_open_gap >= self.block_edge) || !(self.gap_rate > 0.0) {
            return Err("gripper must open wider than a block".into());
        }
        Ok(())
    }

    /// Centre height of a block resting on the tray.
    pub fn rest_z(&self) -> f64 {
        self.block_edge / 2.0
    }

    /// Centre of a block seated in slot `s`.
    pub fn slot_target(&self, s: usize) -> Vec3 {
        let [x, y] = self.slot_centers[s];
        [x, y, self.rest_z() - self.slot_depth]
    }

    pub fn hold_steps(&self, seconds: f64) -> u32 {
        (seconds / self.dt).round() as u32
    }
}

/// Action in `[-1, 1]^4`: translation and gripper command. A positive gripper
/// command opens, a negative one closes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionVec {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub grip: f64,
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

impl ActionVec {
    pub fn new(dx: f64, dy: f64, dz: f64, grip: f64) -> Self {
        Self {
            dx: clamp_unit(dx),
            dy: clamp_unit(dy),
            dz: clamp_unit(dz),
            grip: clamp_unit(grip),
        }
    }

    pub fn from_slice(a: &[f64]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.dx, self.dy, self.dz, self.grip]
    }

    pub fn translation(self) -> Vec3 {
        [self.dx, self.dy, self.dz]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockState {
    pub pos: Vec3,
    pub vel: Vec3,
    pub prev_vel: Vec3,
}

impl BlockState {
    /// Finite-difference acceleration over the last step.
    pub fn accel(&self, dt: f64) -> Vec3 {
        [
            (self.vel[0] - self.prev_vel[0]) / dt,
            (self.vel[1] - self.prev_vel[1]) / dt,
            (self.vel[2] - self.prev_vel[2]) / dt,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub ee: Vec3,
    pub gap: f64,
    pub attached: Option<usize>,
    pub blocks: [BlockState; N_BLOCKS],
    pub step: u32,
    /// Seed this episode was reset from.
    pub seed: u64,
    pub last_action: ActionVec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Contact {
    /// Block resting on the tray floor (the table surface in symbolic terms).
    BlockTable(usize),
    BlockBlock { upper: usize, lower: usize },
    BlockSlot { block: usize, slot: usize },
    EeBlock(usize),
}

pub fn reset(seed: u64, cfg: &SimConfig) -> EnvState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ee = [
        rng.random_range(cfg.workspace_min[0]..=cfg.workspace_max[0]),
        rng.random_range(cfg.workspace_min[1]..=cfg.workspace_max[1]),
        rng.random_range(cfg.reset_height[0]..=cfg.reset_height[1]),
    ];
    let r = cfg.spawn_half_extent;
    let clear_of_slots = |p: [f64; 2]| {
        let margin = (cfg.block_edge + cfg.slot_edge) / 2.0 + cfg.slot_capture;
        cfg.slot_centers
            .iter()
            .all(|s| (p[0] - s[0]).abs().max((p[1] - s[1]).abs()) > margin)
    };
    let mut placed = None;
    for _ in 0..1000 {
        let a = [rng.random_range(-r..=r), rng.random_range(-r..=r)];
        let b = [rng.random_range(-r..=r), rng.random_range(-r..=r)];
        let sep = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
        if sep > cfg.block_edge + 2.0 * cfg.contact_tol && clear_of_slots(a) && clear_of_slots(b) {
            placed = Some([a, b]);
            break;
        }
    }
    let [a, b] = placed.unwrap_or([[-0.06, -0.06], [-0.06, 0.06]]);
    let block = |p: [f64; 2]| BlockState {
        pos: [p[0], p[1], cfg.rest_z()],
        ..BlockState::default()
    };
    EnvState {
        ee,
        gap: cfg.gripper_open_gap,
        attached: None,
        blocks: [block(a), block(b)],
        step: 0,
        seed,
        last_action: ActionVec::default(),
    }
}

/// Block `b` sits between the fingers: centred on the closing (y) axis within
/// the current finger span.
pub fn between_fingers(state: &EnvState, b: usize, cfg: &SimConfig) -> bool {
    let d = sub(state.blocks[b].pos, state.ee);
    d[0].abs() <= cfg.grasp_dist
        && d[2].abs() <= cfg.grasp_dist
        && d[1].abs() <= state.gap / 2.0
}

/// Height of the highest surface under `(x, y)` a block centre would rest at,
/// ignoring `skip` and any attached block.
fn support_z(state: &EnvState, x: f64, y: f64, skip: usize, cfg: &SimConfig) -> (f64, Option<usize>) {
    let mut z = cfg.rest_z();
    let mut slot = None;
    for (s, c) in cfg.slot_centers.iter().enumerate() {
        if (x - c[0]).abs() <= cfg.slot_capture && (y - c[1]).abs() <= cfg.slot_capture {
            z = cfg.rest_z() - cfg.slot_depth;
            slot = Some(s);
        }
    }
    for (i, o) in state.blocks.iter().enumerate() {
        if i == skip || state.attached == Some(i) {
            continue;
        }
        if (x - o.pos[0]).abs() < cfg.block_edge && (y - o.pos[1]).abs() < cfg.block_edge {
            let top = o.pos[2] + cfg.block_edge;
            if top > z {
                z = top;
                slot = None;
            }
        }
    }
    (z, slot)
}

pub fn step(state: &EnvState, action: ActionVec, cfg: &SimConfig) -> EnvState {
    let a = ActionVec::new(action.dx, action.dy, action.dz, action.grip);
    let mut next = state.clone();
    let old: Vec<Vec3> = state.blocks.iter().map(|b| b.pos).collect();

    let t = a.translation();
    for i in 0..3 {
        next.ee[i] = (state.ee[i] + t[i] * cfg.max_step).clamp(cfg.workspace_min[i], cfg.workspace_max[i]);
    }

    if a.grip > 0.0 {
        next.attached = None;
        next.gap = (state.gap + cfg.gap_rate).min(cfg.gripper_open_gap);
    } else if let Some(held) = state.attached {
        next.blocks[held].pos = next.ee;
        next.gap = cfg.block_edge;
    } else if a.grip < 0.0 {
        next.gap = (state.gap - cfg.gap_rate).max(0.0);
        let blocker = (0..N_BLOCKS).find(|&b| between_fingers(&next, b, cfg));
        if let Some(b) = blocker {
            if next.gap <= cfg.block_edge {
                next.gap = cfg.block_edge;
                if dist(next.blocks[b].pos, next.ee) < cfg.grasp_dist {
                    next.attached = Some(b);
                }
            }
        }
    }

    if let Some(held) = next.attached {
        let (floor, _) = support_z(&next, next.ee[0], next.ee[1], held, cfg);
        if next.ee[2] < floor {
            next.ee[2] = floor.min(cfg.workspace_max[2]);
        }
        next.blocks[held].pos = next.ee;
    }

    // settle free blocks bottom-up so a block resting on another sees its
    // final height
    let mut order: Vec<usize> = (0..N_BLOCKS).filter(|&b| next.attached != Some(b)).collect();
    order.sort_by(|&i, &j| next.blocks[i].pos[2].total_cmp(&next.blocks[j].pos[2]).then(i.cmp(&j)));
    for b in order {
        let [x, y, z] = next.blocks[b].pos;
        let (floor, slot) = support_z(&next, x, y, b, cfg);
        let nz = if z > floor { (z - cfg.drop_per_step).max(floor) } else { floor };
        next.blocks[b].pos[2] = nz;
        if nz == floor {
            if let Some(s) = slot {
                let [sx, sy] = cfg.slot_centers[s];
                next.blocks[b].pos[0] = sx;
                next.blocks[b].pos[1] = sy;
            }
        }
    }

    for (b, prev) in old.iter().enumerate() {
        let blk = &mut next.blocks[b];
        blk.prev_vel = state.blocks[b].vel;
        for i in 0..3 {
            blk.vel[i] = (blk.pos[i] - prev[i]) / cfg.dt;
        }
    }
    next.step = state.step + 1;
    next.last_action = a;
    next
}

pub fn contacts(state: &EnvState, cfg: &SimConfig) -> Vec<Contact> {
    let tol = cfg.contact_tol;
    let half = cfg.block_edge / 2.0;
    let mut out = Vec::new();
    for (b, blk) in state.blocks.iter().enumerate() {
        let bottom = blk.pos[2] - half;
        if bottom.abs() <= tol {
            out.push(Contact::BlockTable(b));
        }
        for (s, c) in cfg.slot_centers.iter().enumerate() {
            let inside = (blk.pos[0] - c[0]).abs() <= (cfg.slot_edge - cfg.block_edge) / 2.0 + cfg.slot_capture
                && (blk.pos[1] - c[1]).abs() <= (cfg.slot_edge - cfg.block_edge) / 2.0 + cfg.slot_capture;
            if inside && (bottom + cfg.slot_depth).abs() <= tol {
                out.push(Contact::BlockSlot { block: b, slot: s });
            }
        }
        for (o, other) in state.blocks.iter().enumerate() {
            if o == b {
                continue;
            }
            let d = sub(blk.pos, other.pos);
            if d[0].abs() < cfg.block_edge
                && d[1].abs() < cfg.block_edge
                && (d[2] - cfg.block_edge).abs() <= tol
            {
                out.push(Contact::BlockBlock { upper: b, lower: o });
            }
        }
        if state.attached == Some(b) || dist(blk.pos, state.ee) <= cfg.grasp_dist + tol {
            out.push(Contact::EeBlock(b));
        }
    }
    out.sort();
    out
}

/// Index of the slot whose seated position is closest to `p`.
pub fn nearest_slot(p: Vec3, cfg: &SimConfig) -> usize {
    (0..N_SLOTS)
        .min_by(|&a, &b| dist(p, cfg.slot_target(a)).total_cmp(&dist(p, cfg.slot_target(b))))
        .unwrap_or(0)
}

/// Flat observation:
/// `ee(3) gap(1) [pos(3) vel(3) pos-ee(3) pos-other(3) pos-slot(3)]x2 attached(2)`.
pub fn observe(state: &EnvState, cfg: &SimConfig) -> [f64; OBS_DIM] {
    let mut o = [0.0; OBS_DIM];
    o[..3].copy_from_slice(&state.ee);
    o[3] = state.gap;
    for b in 0..N_BLOCKS {
        let base = 4 + 15 * b;
        let blk = &state.blocks[b];
        let other = &state.blocks[1 - b];
        let slot = cfg.slot_target(nearest_slot(blk.pos, cfg));
        o[base..base + 3].copy_from_slice(&blk.pos);
        o[base + 3..base + 6].copy_from_slice(&blk.vel);
        o[base + 6..base + 9].copy_from_slice(&sub(blk.pos, state.ee));
        o[base + 9..base + 12].copy_from_slice(&sub(blk.pos, other.pos));
        o[base + 12..base + 15].copy_from_slice(&sub(blk.pos, slot));
    }
    for v in &mut o[..34] {
        *v *= cfg.obs_scale;
    }
    for b in 0..N_BLOCKS {
        o[34 + b] = if state.attached == Some(b) { 1.0 } else { 0.0 };
    }
    o
}
