//! Scheduled training loop: the symbolic scheduler picks the operator, its
//! head acts, every transition is stored with the full reward vector, and
//! all heads update from one shared buffer.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{parse_domain, DomainSource};
use crate::grounding::{all_targets, ground_state, operator_success, world_objects, HoldGate, OperatorId, Target, Thresholds, K};
use crate::rewards::{eval_reward_vector, reward_vector, RewardConfig, RewardVector, TransitionCtx};
use crate::rng::{stream, Stream};
use crate::sac::checkpoint::{save_path, CheckpointError};
use crate::sac::{HeadStats, HyperParams, Learner, LearnerError, ReplayBuffer, Transition};
use crate::scheduler::{Directive, Scheduler, SchedulerConfig, Task, IDLE_ACTION};
use crate::sim::{observe, reset, step, ActionVec, EnvState, SimConfig};
use crate::symbolic::Instance;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub metrics: Option<PathBuf>,
    /// One row per environment step in addition to the episode rows.
    pub per_step: bool,
    /// Wall-clock column; off by default so reruns are bit-identical.
    pub wall_time: bool,
    pub checkpoint: Option<PathBuf>,
    /// Environment steps between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub steps: u64,
    /// Domain file; the built-in stack/insert domain when absent.
    pub domain: Option<PathBuf>,
    pub sim: SimConfig,
    pub hyper: HyperParams,
    pub thresholds: Thresholds,
    pub rewards: RewardConfig,
    pub scheduler: SchedulerConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Stack,
            seed: 0,
            steps: 500_000,
            domain: None,
            sim: SimConfig::default(),
            hyper: HyperParams::default(),
            thresholds: Thresholds::default(),
            rewards: RewardConfig::default(),
            scheduler: SchedulerConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid {section}: {msg}")]
    Invalid { section: &'static str, msg: String },
    #[error("domain {path}:\n{msg}")]
    Domain { path: PathBuf, msg: String },
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |section| move |msg| ConfigError::Invalid { section, msg };
        self.sim.validate().map_err(inv("sim"))?;
        self.hyper.validate().map_err(inv("hyper"))?;
        self.thresholds.validate().map_err(inv("thresholds"))?;
        self.scheduler.validate().map_err(inv("scheduler"))?;
        if self.steps == 0 {
            return Err(inv("run")("steps must be positive".into()));
        }
        Ok(())
    }

    /// Builds the symbolic instance and checks the task can be expressed in it.
    pub fn instance(&self) -> Result<Instance, ConfigError> {
        let (src, path) = match &self.domain {
            Some(p) => (
                DomainSource::from_path(p).map_err(|source| ConfigError::Io { path: p.clone(), source })?,
                p.clone(),
            ),
            None => (DomainSource::inline(crate::domain::STACK_INSERT_DOMAIN), PathBuf::from("<built-in>")),
        };
        let domain = parse_domain(&src).map_err(|d| ConfigError::Domain { path: path.clone(), msg: d.to_string() })?;
        let bad = |msg: String| ConfigError::Domain { path: path.clone(), msg };
        for op in self.task.operators() {
            if domain.operator(op.name()).is_none() {
                return Err(bad(format!("operator `{op}` needed by {} is not declared", self.task)));
            }
        }
        let inst = Instance::new(Arc::new(domain), world_objects()).map_err(|e| bad(e.to_string()))?;
        let s = reset(0, &self.sim);
        ground_state(&s, &inst, &self.sim, &self.thresholds).map_err(|e| bad(e.to_string()))?;
        let goal = match self.task {
            Task::Stack => inst.atom("onTop", &["b1", "b2"]),
            Task::Insert => inst.atom("inSlot", &["b1", "s1"]),
        };
        goal.map_err(|e| bad(format!("goal of {} is not expressible: {e}", self.task)))?;
        Ok(inst)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numeric fault at step {step}: {source}{}", dump.as_ref().map(|p| format!(" (diagnostics in {})", p.display())).unwrap_or_default())]
    Numeric { step: u64, source: LearnerError, dump: Option<PathBuf> },
    #[error("metrics: {0}")]
    Metrics(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Summary of one finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub episode: u64,
    pub end_step: u64,
    pub length: u32,
    pub success: bool,
    pub returns: RewardVector,
    pub trace: String,
}

fn create_parent(p: &Path) -> std::io::Result<()> {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => std::fs::create_dir_all(d),
        _ => Ok(()),
    }
}

fn metrics_header(wall_time: bool) -> Vec<String> {
    let mut h: Vec<String> = ["kind", "step", "episode", "episode_step", "operator", "success"].map(String::from).to_vec();
    for prefix in ["return", "critic_loss", "policy_loss", "alpha"] {
        h.extend(OperatorId::ALL.iter().map(|op| format!("{prefix}_{op}")));
    }
    h.push("trace".into());
    if wall_time {
        h.push("wall_time".into());
    }
    h
}

pub struct Trainer {
    pub cfg: RunConfig,
    pub learner: Learner,
    buffer: ReplayBuffer,
    inst: Instance,
    env_rng: ChaCha8Rng,
    policy_rng: ChaCha8Rng,
    state: EnvState,
    sched: Scheduler,
    gates: Vec<HoldGate>,
    step: u64,
    episode: u64,
    returns: RewardVector,
    stats: [HeadStats; K],
    metrics: Option<csv::Writer<BufWriter<File>>>,
    started: Instant,
    pub episodes: Vec<EpisodeSummary>,
}

impl Trainer {
    pub fn new(cfg: RunConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let inst = cfg.instance()?;
        let learner = Learner::new(cfg.hyper.clone(), &mut stream(cfg.seed, Stream::Init));
        Self::with_learner(cfg, inst, learner)
    }

    fn with_learner(cfg: RunConfig, inst: Instance, learner: Learner) -> Result<Self, TrainError> {
        let metrics = match &cfg.output.metrics {
            Some(p) => {
                create_parent(p)?;
                let mut w = csv::Writer::from_writer(BufWriter::new(File::create(p)?));
                w.write_record(metrics_header(cfg.output.wall_time))?;
                w.flush()?;
                Some(w)
            }
            None => None,
        };
        if let Some(p) = &cfg.output.checkpoint {
            create_parent(p)?;
        }
        let mut env_rng = stream(cfg.seed, Stream::Env);
        let state = reset(env_rng.next_u64(), &cfg.sim);
        let sched = Scheduler::new(cfg.task, cfg.scheduler.clone(), inst.clone(), &cfg.sim, &cfg.thresholds);
        let gates = OperatorId::ALL.iter().map(|&op| HoldGate::for_op(op, &cfg.sim, &cfg.thresholds)).collect();
        Ok(Self {
            buffer: ReplayBuffer::new(cfg.hyper.buffer_capacity),
            policy_rng: stream(cfg.seed, Stream::Policy),
            learner,
            inst,
            env_rng,
            state,
            sched,
            gates,
            step: 0,
            episode: 0,
            returns: [0.0; K],
            stats: [HeadStats::default(); K],
            metrics,
            started: Instant::now(),
            episodes: Vec::new(),
            cfg,
        })
    }

    pub fn env_steps(&self) -> u64 {
        self.step
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    fn action(&mut self, op: OperatorId) -> Result<ActionVec, LearnerError> {
        if self.step < self.cfg.hyper.warmup_steps as u64 {
            let r = &mut self.policy_rng;
            return Ok(ActionVec::new(
                r.random_range(-1.0..=1.0),
                r.random_range(-1.0..=1.0),
                r.random_range(-1.0..=1.0),
                r.random_range(-1.0..=1.0),
            ));
        }
        let obs = observe(&self.state, &self.cfg.sim);
        let (a, _) = self.learner.head(op).act(&obs, false, &mut self.policy_rng)?;
        Ok(ActionVec::from_slice(&a))
    }

    fn rewards(&self, next: &EnvState, action: ActionVec, target: Option<Target>) -> RewardVector {
        let c = &self.cfg;
        match target {
            Some(target) => reward_vector(&TransitionCtx { prev: &self.state, action, next, target }, &c.sim, &c.rewards),
            None => {
                let op = self.sched.active.unwrap_or(OperatorId::Reach);
                eval_reward_vector(&self.state, action, next, &all_targets(), op, &c.sim, &c.thresholds, &c.rewards)
                    .expect("candidate set is non-empty")
            }
        }
    }

    fn fault(&self, source: LearnerError) -> TrainError {
        let dump = self.cfg.output.metrics.as_ref().map(|p| p.with_extension("fault.json"));
        if let Some(path) = &dump {
            let report = serde_json::json!({
                "step": self.step,
                "episode": self.episode,
                "error": source.to_string(),
                "active": self.sched.active.map(|o| o.name()),
                "env_state": format!("{:?}", self.state),
                "alpha": self.learner.heads.iter().map(|h| h.log_alpha.exp()).collect::<Vec<_>>(),
                "last_stats": self.stats.iter().map(|s| [s.critic_loss, s.policy_loss, s.alpha]).collect::<Vec<_>>(),
            });
            let _ = std::fs::write(path, serde_json::to_string_pretty(&report).unwrap_or_default());
        }
        TrainError::Numeric { step: self.step, source, dump }
    }

    fn row(&self, kind: &str, op: Option<OperatorId>, success: Option<bool>, trace: &str) -> Vec<String> {
        let mut r = vec![
            kind.to_string(),
            self.step.to_string(),
            self.episode.to_string(),
            self.state.step.to_string(),
            op.map(|o| o.name()).unwrap_or("-").to_string(),
            success.map(|s| (s as u8).to_string()).unwrap_or_default(),
        ];
        r.extend(self.returns.iter().map(|v| v.to_string()));
        r.extend(self.stats.iter().map(|s| s.critic_loss.to_string()));
        r.extend(self.stats.iter().map(|s| s.policy_loss.to_string()));
        r.extend(self.stats.iter().map(|s| s.alpha.to_string()));
        r.push(trace.to_string());
        if self.cfg.output.wall_time {
            r.push(format!("{:.3}", self.started.elapsed().as_secs_f64()));
        }
        r
    }

    fn end_episode(&mut self, success: bool) -> Result<(), TrainError> {
        self.sched.end_episode(self.state.step);
        let trace = self.sched.trace.iter().map(|e| e.op.name()).collect::<Vec<_>>().join(" ");
        let row = self.row("episode", None, Some(success), &trace);
        if let Some(w) = &mut self.metrics {
            w.write_record(row)?;
            w.flush()?;
        }
        log::debug!("episode {} ended at step {} (success {success}): {trace}", self.episode, self.step);
        self.episodes.push(EpisodeSummary {
            episode: self.episode,
            end_step: self.step,
            length: self.state.step,
            success,
            returns: self.returns,
            trace,
        });
        self.episode += 1;
        self.returns = [0.0; K];
        self.state = reset(self.env_rng.next_u64(), &self.cfg.sim);
        self.sched = Scheduler::new(self.cfg.task, self.cfg.scheduler.clone(), self.inst.clone(), &self.cfg.sim, &self.cfg.thresholds);
        self.gates.iter_mut().for_each(HoldGate::reset);
        Ok(())
    }

    /// Advances one environment step, finishing episodes as needed.
    pub fn step_once(&mut self) -> Result<(), TrainError> {
        let (op, target) = loop {
            if self.state.step >= self.cfg.sim.episode_steps {
                self.end_episode(false)?;
                continue;
            }
            match self.sched.step(&self.state, &self.cfg.sim, &self.cfg.thresholds) {
                Directive::EpisodeDone { success } => self.end_episode(success)?,
                Directive::Act { op, target } => break (op, target),
            }
        };
        let action = match op {
            Some(op) => self.action(op).map_err(|e| self.fault(e))?,
            None => IDLE_ACTION,
        };
        let c = &self.cfg;
        let next = step(&self.state, action, &c.sim);
        let reward = self.rewards(&next, next.last_action, target);
        let mut success = [false; K];
        if let Some(t) = target {
            for (i, op) in OperatorId::ALL.iter().enumerate() {
                success[i] = self.gates[i].update(operator_success(*op, &next, t, &c.sim, &c.thresholds));
            }
        }
        self.buffer.push(Transition {
            obs: observe(&self.state, &c.sim),
            action: next.last_action.to_array(),
            reward,
            next_obs: observe(&next, &c.sim),
            success,
            active: op.map(|o| o.index() as u8).unwrap_or(K as u8),
        });
        for (r, v) in self.returns.iter_mut().zip(reward) {
            *r += v;
        }
        self.state = next;
        self.step += 1;

        let hp = &self.learner.hp;
        if self.step >= hp.warmup_steps as u64 && self.buffer.len() >= hp.batch_size {
            for _ in 0..hp.updates_per_step {
                match self.learner.update(&self.buffer, &mut self.policy_rng) {
                    Ok(s) => self.stats = s,
                    Err(e) => return Err(self.fault(e)),
                }
            }
        }
        if self.cfg.output.per_step {
            let row = self.row("step", op, None, "");
            if let Some(w) = &mut self.metrics {
                w.write_record(row)?;
            }
        }
        if let (Some(path), n) = (&self.cfg.output.checkpoint, self.cfg.output.checkpoint_interval) {
            if n > 0 && self.step % n == 0 {
                save_path(&self.learner, path)?;
                log::info!("checkpoint at step {} written to {}", self.step, path.display());
            }
        }
        Ok(())
    }

    /// Runs `n` more environment steps.
    pub fn run_steps(&mut self, n: u64) -> Result<(), TrainError> {
        for _ in 0..n {
            self.step_once()?;
        }
        Ok(())
    }

    /// Runs the configured budget, then writes the final checkpoint.
    pub fn run(&mut self) -> Result<(), TrainError> {
        let remaining = self.cfg.steps.saturating_sub(self.step);
        self.run_steps(remaining)?;
        self.finish()
    }

    pub fn finish(&mut self) -> Result<(), TrainError> {
        if let Some(w) = &mut self.metrics {
            w.flush()?;
        }
        if let Some(path) = &self.cfg.output.checkpoint {
            save_path(&self.learner, path)?;
        }
        Ok(())
    }
}
