//! Single-operator and chained evaluation.
//!
//! A single-operator episode first drives the state to where the operator
//! applies with the scripted controllers (for example reach and close before
//! lift), then runs the evaluated policy for at most `t_tot` steps. Success
//! is judged against every object binding, each with its own hold gate.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{run_chained_episode, Controller, EpisodeSetup};
use crate::grounding::{all_targets, operator_success, HoldGate, OperatorId, Target};
use crate::rewards::{eval_reward_vector, RewardConfig};
use crate::rng::{stream, Stream};
use crate::sac::LearnerError;
use crate::scheduler::{get_targets, Task};
use crate::scripted::scripted_action;
use crate::sim::{observe, reset, step, EnvState};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub t_tot: u32,
    pub operators: Vec<OperatorId>,
    pub episodes: u32,
    pub seeds: Vec<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { t_tot: 90, operators: OperatorId::ALL.to_vec(), episodes: 50, seeds: vec![0] }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.t_tot == 0 || self.episodes == 0 || self.seeds.is_empty() {
            return Err("t_tot, episodes and seeds must be non-empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub successes: u32,
    pub episodes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub operator: String,
    pub successes: u32,
    pub episodes: u32,
    pub rate: f64,
    pub mean_reward: f64,
    pub mean_steps_to_success: Option<f64>,
    pub per_seed: Vec<SeedRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub mode: String,
    pub task: String,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn row(&self, name: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.operator == name)
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["mode", "task", "operator", "successes", "episodes", "rate", "mean_reward", "mean_steps_to_success"])?;
        for r in &self.rows {
            w.write_record([
                self.mode.clone(),
                self.task.clone(),
                r.operator.clone(),
                r.successes.to_string(),
                r.episodes.to_string(),
                r.rate.to_string(),
                r.mean_reward.to_string(),
                r.mean_steps_to_success.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Target rule when the acting object is unknown: the block touching the
/// end-effector, otherwise a random block resting on the tray.
pub fn solve_ope_with_mul_objs(state: &EnvState, sim: &crate::sim::SimConfig, rng: &mut impl Rng) -> Option<Target> {
    let candidates = get_targets(state, sim);
    if candidates.is_empty() {
        return None;
    }
    let b = candidates[rng.random_range(0..candidates.len())];
    Some(Target::for_block(state, b, sim))
}

/// Operators run by the scripted setup before `op` is evaluated.
pub fn setup_prefix(op: OperatorId) -> &'static [OperatorId] {
    use OperatorId::*;
    match op {
        Open | Close | Reach => &[],
        Lift => &[Reach, Close],
        Move => &[Reach, Close, Lift],
        Stack | Insert => &[Reach, Close, Lift, Move],
    }
}

fn prefix_task(op: OperatorId) -> Task {
    if op == OperatorId::Insert {
        Task::Insert
    } else {
        Task::Stack
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorEpisode {
    pub success: bool,
    pub steps_to_success: Option<u32>,
    pub mean_reward: f64,
    pub setup_failed: bool,
}

/// Runs the scripted prefix; `None` if some setup operator never succeeded.
fn run_setup(op: OperatorId, mut s: EnvState, setup: &EpisodeSetup, rng: &mut ChaCha8Rng) -> Option<EnvState> {
    let sim = &setup.sim;
    let task = prefix_task(op);
    let target = solve_ope_with_mul_objs(&s, sim, rng)?;
    for &p in setup_prefix(op) {
        let mut gate = HoldGate::for_op(p, sim, &setup.thresholds);
        let mut done = false;
        for _ in 0..setup.scheduler.operator_timeout {
            s = step(&s, scripted_action(p, &s, target, task, sim), sim);
            if gate.update(operator_success(p, &s, target, sim, &setup.thresholds)) {
                done = true;
                break;
            }
        }
        if !done {
            return None;
        }
    }
    Some(s)
}

pub fn evaluate_operator_episode(
    op: OperatorId,
    controller: &mut impl Controller,
    setup: &EpisodeSetup,
    rewards: &RewardConfig,
    t_tot: u32,
    env_seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<OperatorEpisode, LearnerError> {
    let sim = &setup.sim;
    let th = &setup.thresholds;
    let Some(mut s) = run_setup(op, reset(env_seed, sim), setup, rng) else {
        return Ok(OperatorEpisode { success: false, steps_to_success: None, mean_reward: 0.0, setup_failed: true });
    };
    let candidates = all_targets();
    let mut gates: Vec<HoldGate> = candidates.iter().map(|_| HoldGate::for_op(op, sim, th)).collect();
    // the acting object is fixed once found so a random pick cannot flap
    let mut target = None;
    let mut total = 0.0;
    for k in 1..=t_tot {
        if target.is_none() {
            target = solve_ope_with_mul_objs(&s, sim, rng);
        }
        let Some(t) = target else {
            return Ok(OperatorEpisode { success: false, steps_to_success: None, mean_reward: total / k as f64, setup_failed: false });
        };
        let a = controller.act(op, &s, &observe(&s, sim), t, rng)?;
        let next = step(&s, a, sim);
        let r = eval_reward_vector(&s, next.last_action, &next, &candidates, op, sim, th, rewards).expect("candidate set is non-empty");
        total += r[op.index()];
        let mut hit = false;
        for (g, c) in gates.iter_mut().zip(&candidates) {
            hit |= g.update(operator_success(op, &next, *c, sim, th));
        }
        s = next;
        if hit {
            return Ok(OperatorEpisode { success: true, steps_to_success: Some(k), mean_reward: total / k as f64, setup_failed: false });
        }
    }
    Ok(OperatorEpisode { success: false, steps_to_success: None, mean_reward: total / t_tot as f64, setup_failed: false })
}

/// Evaluates each operator independently over `episodes` episodes per seed.
pub fn evaluate_operators(
    controller: &mut impl Controller,
    setup: &EpisodeSetup,
    rewards: &RewardConfig,
    cfg: &EvalConfig,
) -> Result<EvalReport, LearnerError> {
    let mut rows = Vec::new();
    for &op in &cfg.operators {
        let (mut succ, mut n, mut reward, mut steps, mut per_seed) = (0, 0, 0.0, Vec::new(), Vec::new());
        for &seed in &cfg.seeds {
            let mut rng = stream(seed, Stream::Eval);
            let mut seed_succ = 0;
            for _ in 0..cfg.episodes {
                let env_seed = rng.next_u64();
                let ep = evaluate_operator_episode(op, controller, setup, rewards, cfg.t_tot, env_seed, &mut rng)?;
                seed_succ += ep.success as u32;
                reward += ep.mean_reward;
                steps.extend(ep.steps_to_success);
            }
            succ += seed_succ;
            n += cfg.episodes;
            per_seed.push(SeedRow { seed, successes: seed_succ, episodes: cfg.episodes });
        }
        rows.push(EvalRow {
            operator: op.name().into(),
            successes: succ,
            episodes: n,
            rate: succ as f64 / n as f64,
            mean_reward: reward / n as f64,
            mean_steps_to_success: (!steps.is_empty()).then(|| steps.iter().map(|&s| s as f64).sum::<f64>() / steps.len() as f64),
            per_seed,
        });
    }
    Ok(EvalReport { schema_version: SCHEMA_VERSION, mode: "single".into(), task: String::new(), rows })
}

/// Fully scheduled episodes; success means the task goal held for its
/// holding time within the episode.
pub fn chained_evaluate(
    task: Task,
    controller: &mut impl Controller,
    setup: &EpisodeSetup,
    episodes: u32,
    seeds: &[u64],
) -> Result<EvalReport, LearnerError> {
    let (mut succ, mut steps, mut per_seed) = (0, Vec::new(), Vec::new());
    for &seed in seeds {
        let mut rng = stream(seed, Stream::Eval);
        let mut seed_succ = 0;
        for _ in 0..episodes {
            let env_seed = rng.next_u64();
            let ep = run_chained_episode(task, controller, setup, env_seed, &mut rng, false)?;
            if ep.success {
                seed_succ += 1;
                steps.push(ep.steps as f64);
            }
        }
        succ += seed_succ;
        per_seed.push(SeedRow { seed, successes: seed_succ, episodes });
    }
    let n = episodes * seeds.len() as u32;
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        mode: "chained".into(),
        task: task.name().into(),
        rows: vec![EvalRow {
            operator: task.name().into(),
            successes: succ,
            episodes: n,
            rate: if n == 0 { 0.0 } else { succ as f64 / n as f64 },
            mean_reward: 0.0,
            mean_steps_to_success: (!steps.is_empty()).then(|| steps.iter().sum::<f64>() / steps.len() as f64),
            per_seed,
        }],
    })
}
