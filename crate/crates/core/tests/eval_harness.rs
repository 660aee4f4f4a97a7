use oprl_core::agent::{EpisodeSetup, RandomActions, Scripted};
use oprl_core::eval::{chained_evaluate, evaluate_operators, EvalConfig, EvalReport};
use oprl_core::grounding::OperatorId;
use oprl_core::rewards::RewardConfig;
use oprl_core::scheduler::Task;

fn scripted(task: Task) -> Scripted {
    Scripted { task, sim: Default::default() }
}

#[test]
fn scripted_operators_succeed_from_their_setup() {
    let setup = EpisodeSetup::default();
    let cfg = EvalConfig { episodes: 50, seeds: vec![3], ..Default::default() };
    let report = evaluate_operators(&mut scripted(Task::Stack), &setup, &RewardConfig::default(), &cfg).unwrap();
    for op in OperatorId::ALL {
        let row = report.row(op.name()).unwrap();
        if op == OperatorId::Insert {
            continue;
        }
        assert!(row.rate >= 0.95, "{op}: {}", row.rate);
    }
    assert_eq!(report.row("reach").unwrap().rate, 1.0);
    let cfg = EvalConfig { operators: vec![OperatorId::Insert], ..cfg };
    let report = evaluate_operators(&mut scripted(Task::Insert), &setup, &RewardConfig::default(), &cfg).unwrap();
    assert!(report.rows[0].rate >= 0.95, "insert: {}", report.rows[0].rate);
}

#[test]
fn random_policy_rarely_stacks() {
    let setup = EpisodeSetup::default();
    let cfg = EvalConfig { operators: vec![OperatorId::Stack], episodes: 100, seeds: vec![11], ..Default::default() };
    let report = evaluate_operators(&mut RandomActions, &setup, &RewardConfig::default(), &cfg).unwrap();
    assert!(report.rows[0].rate <= 0.05, "{}", report.rows[0].rate);
}

#[test]
fn evaluation_is_reproducible_and_serialises() {
    let setup = EpisodeSetup::default();
    let cfg = EvalConfig { operators: vec![OperatorId::Reach, OperatorId::Lift], episodes: 5, seeds: vec![1, 2], ..Default::default() };
    let a = evaluate_operators(&mut RandomActions, &setup, &RewardConfig::default(), &cfg).unwrap();
    let b = evaluate_operators(&mut RandomActions, &setup, &RewardConfig::default(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows[0].per_seed.len(), 2);
    let json = serde_json::to_string(&a).unwrap();
    let back: EvalReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a);
    let csv = a.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("mode,task,operator"));
}

#[test]
fn chained_scripted_evaluation() {
    let setup = EpisodeSetup::default();
    let r = chained_evaluate(Task::Insert, &mut scripted(Task::Insert), &setup, 20, &[0]).unwrap();
    assert_eq!(r.mode, "chained");
    assert!(r.rows[0].rate >= 0.95);
    let r = chained_evaluate(Task::Stack, &mut RandomActions, &setup, 20, &[0]).unwrap();
    assert!(r.rows[0].rate <= 0.05);
}
