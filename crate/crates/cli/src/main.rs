//! `oprl`: train, evaluate, plan and replay.
//!
//! Exit codes: 0 success, 1 failure (no plan, unreadable trajectory, I/O),
//! 2 configuration or usage error, 3 numeric fault during training,
//! 4 checkpoint that cannot be loaded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use oprl_core::agent::{run_chained_episode, Controller, EpisodeSetup, Learned, Scripted};
use oprl_core::domain::{parse_domain, parse_problem, DomainSource};
use oprl_core::eval::{chained_evaluate, evaluate_operators, EvalConfig, EvalReport};
use oprl_core::grounding::OperatorId;
use oprl_core::rng::{stream, Stream};
use oprl_core::sac::checkpoint::{load_path, CheckpointError};
use oprl_core::scheduler::Task;
use oprl_core::symbolic::{Instance, PlanError, DEFAULT_PLAN_DEPTH};
use oprl_core::train::{ConfigError, RunConfig, TrainError, Trainer};
use oprl_core::trajectory::{read_rows, rows_from_episode, summarize, write_rows};

#[derive(Parser)]
#[command(name = "oprl", version, about = "Operator-scheduled hierarchical SAC for block stacking and insertion")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train all operator policies under the symbolic scheduler.
    Train(TrainArgs),
    /// Evaluate single operators or chained task execution.
    Eval(EvalArgs),
    /// Print the plan for a domain and problem.
    Plan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PLAN_DEPTH)]
        depth: usize,
    },
    /// Summarize a trajectory CSV by operator segment.
    Replay {
        file: PathBuf,
        /// Print every row as well.
        #[arg(long)]
        rows: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct TrainArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    per_step: bool,
    #[arg(long)]
    wall_time: bool,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    checkpoint_interval: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Single,
    Chained,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long, value_enum, default_value_t = Mode::Single)]
    mode: Mode,
    #[arg(long, default_value = "STACK")]
    task: Task,
    /// Policy checkpoint; without it the scripted controllers act.
    #[arg(long, conflicts_with = "scripted")]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    scripted: bool,
    /// Run configuration supplying simulator, threshold and reward settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated operator names; all when omitted.
    #[arg(long, value_delimiter = ',')]
    operators: Vec<OperatorId>,
    #[arg(long, default_value_t = 50)]
    episodes: u32,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 90)]
    t_tot: u32,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the first chained episode as a trajectory CSV.
    #[arg(long)]
    record: Option<PathBuf>,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl std::fmt::Display) -> Self {
        Self { code, msg: msg.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(2, e)
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        let code = match e {
            TrainError::Config(_) => 2,
            TrainError::Numeric { .. } => 3,
            _ => 1,
        };
        Failure::new(code, e)
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        Failure::new(4, format!("checkpoint: {e}"))
    }
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(1, format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let cfg = match path {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    Ok(cfg)
}

fn train(a: TrainArgs) -> Result<(), Failure> {
    let mut cfg = load_config(a.config.as_deref())?;
    cfg.domain = a.domain.or(cfg.domain);
    cfg.task = a.task.unwrap_or(cfg.task);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.steps = a.steps.unwrap_or(cfg.steps);
    let out = &mut cfg.output;
    out.metrics = a.metrics.or(out.metrics.take());
    out.per_step |= a.per_step;
    out.wall_time |= a.wall_time;
    out.checkpoint = a.checkpoint.or(out.checkpoint.take());
    out.checkpoint_interval = a.checkpoint_interval.unwrap_or(out.checkpoint_interval);
    info!("training {} for {} steps with seed {}", cfg.task, cfg.steps, cfg.seed);
    let mut trainer = Trainer::new(cfg)?;
    trainer.run()?;
    let eps = &trainer.episodes;
    let ok = eps.iter().filter(|e| e.success).count();
    let tail = &eps[eps.len().saturating_sub(100)..];
    println!(
        "steps {} episodes {} successes {} recent success rate {:.3}",
        trainer.env_steps(),
        eps.len(),
        ok,
        if tail.is_empty() { 0.0 } else { tail.iter().filter(|e| e.success).count() as f64 / tail.len() as f64 }
    );
    Ok(())
}

fn write_report(r: &EvalReport, json: Option<&Path>, csv: Option<&Path>) -> Result<(), Failure> {
    if let Some(p) = json {
        let text = serde_json::to_string_pretty(r).map_err(|e| io_fail(p, e))?;
        std::fs::write(p, text).map_err(|e| io_fail(p, e))?;
    }
    if let Some(p) = csv {
        let text = r.to_csv().map_err(|e| io_fail(p, e))?;
        std::fs::write(p, text).map_err(|e| io_fail(p, e))?;
    }
    for row in &r.rows {
        println!("{:<8} {:>4}/{:<4} rate {:.3}", row.operator, row.successes, row.episodes, row.rate);
    }
    Ok(())
}

fn eval_with(a: &EvalArgs, ctl: &mut impl Controller, setup: &EpisodeSetup, cfg: &RunConfig) -> Result<EvalReport, Failure> {
    let fault = |e| Failure::new(3, e);
    match a.mode {
        Mode::Single => {
            let ec = EvalConfig {
                t_tot: a.t_tot,
                operators: if a.operators.is_empty() { a.task.operators().to_vec() } else { a.operators.clone() },
                episodes: a.episodes,
                seeds: a.seeds.clone(),
            };
            ec.validate().map_err(|e| Failure::new(2, e))?;
            evaluate_operators(ctl, setup, &cfg.rewards, &ec).map_err(fault)
        }
        Mode::Chained => {
            if a.seeds.is_empty() || a.episodes == 0 {
                return Err(Failure::new(2, "episodes and seeds must be non-empty"));
            }
            if let Some(p) = &a.record {
                let seed = a.seeds[0];
                let ep = run_chained_episode(a.task, ctl, setup, seed, &mut stream(seed, Stream::Eval), true).map_err(fault)?;
                let f = std::fs::File::create(p).map_err(|e| io_fail(p, e))?;
                write_rows(&rows_from_episode(&ep), f).map_err(|e| io_fail(p, e))?;
            }
            chained_evaluate(a.task, ctl, setup, a.episodes, &a.seeds).map_err(fault)
        }
    }
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let cfg = load_config(a.config.as_deref())?;
    cfg.validate()?;
    let setup = EpisodeSetup { sim: cfg.sim.clone(), thresholds: cfg.thresholds.clone(), scheduler: cfg.scheduler.clone() };
    let report = match &a.checkpoint {
        Some(p) => {
            let learner = load_path(p)?;
            eval_with(&a, &mut Learned { learner: &learner, deterministic: true }, &setup, &cfg)?
        }
        None => eval_with(&a, &mut Scripted { task: a.task, sim: cfg.sim.clone() }, &setup, &cfg)?,
    };
    let mut report = report;
    report.task = a.task.name().into();
    write_report(&report, a.json.as_deref(), a.csv.as_deref())
}

fn plan(domain: &Path, problem: &Path, depth: usize) -> Result<(), Failure> {
    let read = |p: &Path| DomainSource::from_path(p).map_err(|e| io_fail(p, e));
    let d = parse_domain(&read(domain)?).map_err(|e| Failure::new(2, format!("{}:\n{e}", domain.display())))?;
    let d = Arc::new(d);
    let p = parse_problem(&read(problem)?, &d).map_err(|e| Failure::new(2, format!("{}:\n{e}", problem.display())))?;
    let inst = Instance::new(d, p.objects).map_err(|e| Failure::new(2, e))?;
    let init = inst.state_from(&p.init).map_err(|e| Failure::new(2, e))?;
    let goal = p.goal.iter().map(|l| inst.ground_literal(l)).collect::<Result<Vec<_>, _>>().map_err(|e| Failure::new(2, e))?;
    match inst.plan(&init, &goal, depth) {
        Ok(steps) => {
            println!("{}", steps.iter().map(|s| s.operator.as_str()).collect::<Vec<_>>().join(" "));
            Ok(())
        }
        Err(PlanError::Unreachable) => Err(Failure::new(1, "unreachable")),
        Err(PlanError::DepthExceeded(d)) => Err(Failure::new(1, format!("unreachable within depth {d}"))),
    }
}

fn replay(file: &Path, rows: bool, json: bool) -> Result<(), Failure> {
    let f = std::fs::File::open(file).map_err(|e| io_fail(file, e))?;
    let data = read_rows(f).map_err(|e| io_fail(file, e))?;
    let summary = summarize(&data);
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        return Ok(());
    }
    if rows {
        println!("{:>5} {:<7} {:>8} {:>8} {:>8} {:>7} {:>4}", "step", "op", "ee_x", "ee_y", "ee_z", "gap", "held");
        for r in &data {
            let op = r.operator.map(|o| o.name()).unwrap_or("-");
            let held = r.attached.map(|b| format!("b{}", b + 1)).unwrap_or_else(|| "-".into());
            println!("{:>5} {:<7} {:>8.4} {:>8.4} {:>8.4} {:>7.4} {:>4}", r.step, op, r.ee_x, r.ee_y, r.ee_z, r.gap, held);
        }
    }
    println!("rows {}", summary.rows);
    for s in &summary.segments {
        let op = s.operator.map(|o| o.name()).unwrap_or("-");
        println!("{op:<7} steps {:>4} [{}, {})", s.steps, s.start, s.end);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OPRL_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Train(a) => train(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Plan { domain, problem, depth } => plan(&domain, &problem, depth),
        Cmd::Replay { file, rows, json } => replay(&file, rows, json),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
