//! Scheduler, grounding and simulator exercised together with scripted
//! controllers standing in for learned policies.

use oprl_core::agent::{run_chained_episode, EpisodeSetup, Frozen, Scripted};
use oprl_core::grounding::{ground_state, world_instance, OperatorId, Target, Thresholds};
use oprl_core::rng::{stream, Stream};
use oprl_core::scheduler::{get_operator, get_targets, choose_target, Directive, Outcome, Scheduler, SchedulerConfig, Task};
use oprl_core::scripted::scripted_action;
use oprl_core::sim::{reset, step, ActionVec, SimConfig};
use oprl_core::symbolic::TruthAssignment;

fn success_rate(task: Task, episodes: u64, freeze: Option<OperatorId>) -> f64 {
    let setup = EpisodeSetup::default();
    let scripted = Scripted { task, sim: setup.sim.clone() };
    let mut rng = stream(0, Stream::Policy);
    let mut ok = 0;
    for seed in 0..episodes {
        let ep = match freeze {
            None => run_chained_episode(task, &mut scripted.clone(), &setup, seed, &mut rng, false),
            Some(op) => run_chained_episode(task, &mut Frozen { inner: scripted.clone(), frozen: op }, &setup, seed, &mut rng, false),
        }
        .unwrap();
        ok += ep.success as u32;
    }
    ok as f64 / episodes as f64
}

#[test]
fn scripted_chained_stack_succeeds() {
    let rate = success_rate(Task::Stack, 100, None);
    assert!(rate >= 0.95, "{rate}");
}

#[test]
fn scripted_chained_insert_succeeds() {
    let rate = success_rate(Task::Insert, 100, None);
    assert!(rate >= 0.95, "{rate}");
}

#[test]
fn a_frozen_operator_breaks_the_chain() {
    for op in [OperatorId::Reach, OperatorId::Close, OperatorId::Lift, OperatorId::Move, OperatorId::Stack] {
        assert_eq!(success_rate(Task::Stack, 10, Some(op)), 0.0, "{op}");
    }
}

#[test]
fn traces_respect_timeout_and_preconditions() {
    let setup = EpisodeSetup::default();
    let inst = world_instance();
    for task in [Task::Stack, Task::Insert] {
        for seed in 0..20 {
            let mut sched = Scheduler::new(task, SchedulerConfig::default(), world_instance(), &setup.sim, &setup.thresholds);
            let mut s = reset(seed, &setup.sim);
            let mut rng = stream(seed, Stream::Policy);
            while s.step < setup.sim.episode_steps {
                let Directive::Act { op, target } = sched.step(&s, &setup.sim, &setup.thresholds) else { break };
                assert!(sched.steps_in_op <= 45);
                if let (Some(op), Some(t)) = (op, target) {
                    if sched.steps_in_op == 0 {
                        let b = oprl_core::grounding::symbolic_binding(op, t, task == Task::Insert);
                        assert!(inst.is_applicable(op.name(), sched.pre.as_ref().unwrap(), &b).unwrap(), "{op}");
                    }
                    // noisy scripted actions so some operators time out
                    let mut a = scripted_action(op, &s, t, task, &setup.sim);
                    if seed % 2 == 1 {
                        use rand::Rng;
                        a = ActionVec::new(a.dx + rng.random_range(-2.0..2.0), a.dy, a.dz, a.grip);
                    }
                    s = step(&s, a, &setup.sim);
                } else {
                    s = step(&s, oprl_core::scheduler::IDLE_ACTION, &setup.sim);
                }
            }
            for e in &sched.trace {
                assert!(e.end - e.start <= 45);
                if e.outcome == Outcome::Timeout {
                    assert_eq!(e.end - e.start, 45);
                }
            }
        }
    }
}

#[test]
fn reach_success_switches_to_close_on_the_same_step() {
    let setup = EpisodeSetup::default();
    let mut sched = Scheduler::new(Task::Stack, SchedulerConfig::default(), world_instance(), &setup.sim, &setup.thresholds);
    let mut s = reset(4, &setup.sim);
    let mut reach_hits = 0;
    loop {
        let Directive::Act { op: Some(op), target: Some(t) } = sched.step(&s, &setup.sim, &setup.thresholds) else { panic!() };
        if op == OperatorId::Close {
            let last = sched.trace.last().unwrap();
            assert_eq!((last.op, last.outcome, last.end), (OperatorId::Reach, Outcome::Success, s.step));
            assert_eq!(reach_hits, 2);
            break;
        }
        s = step(&s, scripted_action(op, &s, t, Task::Stack, &setup.sim), &setup.sim);
        if oprl_core::grounding::operator_success(OperatorId::Reach, &s, t, &setup.sim, &setup.thresholds) {
            reach_hits += 1;
        }
    }
}

#[test]
fn stalled_operator_times_out_and_replans() {
    let setup = EpisodeSetup::default();
    let mut sched = Scheduler::new(Task::Stack, SchedulerConfig::default(), world_instance(), &setup.sim, &setup.thresholds);
    let mut s = reset(5, &setup.sim);
    s.ee = [-0.15, -0.15, 0.3];
    for _ in 0..46 {
        sched.step(&s, &setup.sim, &setup.thresholds);
        s = step(&s, ActionVec::default(), &setup.sim);
    }
    let e = &sched.trace[0];
    assert_eq!((e.op, e.outcome, e.end - e.start), (OperatorId::Reach, Outcome::Timeout, 45));
    assert_eq!(sched.active, Some(OperatorId::Reach));
}

fn grounded_op(s: &oprl_core::sim::EnvState, cfg: &SimConfig, th: &Thresholds, task: Task) -> Option<OperatorId> {
    let inst = world_instance();
    let pre = ground_state(s, &inst, cfg, th).unwrap();
    let t = choose_target(s, &get_targets(s, cfg), cfg)?;
    get_operator(&inst, &pre, task, t)
}

#[test]
fn compute_condition_examples() {
    let cfg = SimConfig::default();
    let th = Thresholds::default();
    let mut s = reset(8, &cfg);
    assert_eq!(grounded_op(&s, &cfg, &th, Task::Stack), Some(OperatorId::Reach));
    let t = Target::for_block(&s, 0, &cfg);
    s.ee = s.blocks[0].pos;
    for _ in 0..3 {
        s = step(&s, ActionVec::new(0.0, 0.0, 0.0, -1.0), &cfg);
    }
    for _ in 0..6 {
        s = step(&s, ActionVec::new(0.0, 0.0, 1.0, -1.0), &cfg);
    }
    assert_eq!(grounded_op(&s, &cfg, &th, Task::Stack), Some(OperatorId::Move));
    // lose the block mid-move: it falls back to the tray
    for _ in 0..3 {
        s = step(&s, scripted_action(OperatorId::Move, &s, t, Task::Stack, &cfg), &cfg);
    }
    s = step(&s, ActionVec::new(0.0, 0.0, 1.0, 1.0), &cfg);
    for _ in 0..3 {
        s = step(&s, ActionVec::new(0.0, 0.0, 1.0, 1.0), &cfg);
    }
    assert_eq!(grounded_op(&s, &cfg, &th, Task::Stack), Some(OperatorId::Reach));
}

/// Atoms where the inherited prediction and the grounded state disagree.
fn disagreements(a: &TruthAssignment, b: &TruthAssignment) -> usize {
    (0..a.len()).filter(|&i| a.get(i) != b.get(i)).count()
}

#[test]
fn inherited_and_grounded_states_select_alike_when_they_agree() {
    let setup = EpisodeSetup::default();
    let inst = world_instance();
    let mut compared = 0;
    for seed in 0..30 {
        let mut sched = Scheduler::new(Task::Stack, SchedulerConfig::default(), world_instance(), &setup.sim, &setup.thresholds);
        let mut s = reset(seed, &setup.sim);
        let mut seen = 0;
        while s.step < setup.sim.episode_steps {
            let Directive::Act { op, target } = sched.step(&s, &setup.sim, &setup.thresholds) else { break };
            if sched.trace.len() > seen && sched.steps_in_op == 0 {
                seen = sched.trace.len();
                if sched.trace.last().unwrap().outcome == Outcome::Success {
                    let grounded = ground_state(&s, &inst, &setup.sim, &setup.thresholds).unwrap();
                    let inherited = sched.pre.clone().unwrap();
                    if disagreements(&inherited, &grounded) == 0 {
                        compared += 1;
                        assert_eq!(get_operator(&inst, &grounded, Task::Stack, sched.target.unwrap()), op);
                    }
                }
            }
            let a = match (op, target) {
                (Some(op), Some(t)) => scripted_action(op, &s, t, Task::Stack, &setup.sim),
                _ => oprl_core::scheduler::IDLE_ACTION,
            };
            s = step(&s, a, &setup.sim);
        }
    }
    assert!(compared > 0);
}
