//! Learner checks against independent oracles: finite differences, the
//! squashed-Gaussian density, Polyak traces and sampling statistics.

mod common;

use oprl_core::grounding::{OperatorId, K};
use oprl_core::sac::learner::{policy_loss_grad, squash};
use oprl_core::sac::nn::Mlp;
use oprl_core::sac::{Head, HyperParams, Learner, ReplayBuffer, Transition};
use oprl_core::sim::{ACTION_DIM, OBS_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn small_hp() -> HyperParams {
    HyperParams { hidden: vec![16, 16], batch_size: 32, ..HyperParams::default() }
}

#[test]
fn gradients_match_finite_differences() {
    let worst = common::gradient_check(100);
    assert!(worst <= 1e-3, "max relative error {worst}");
}

#[test]
fn log_prob_matches_density_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mu: Vec<f64> = (0..ACTION_DIM).map(|_| rng.random_range(-1.5..1.5)).collect();
        let ls: Vec<f64> = (0..ACTION_DIM).map(|_| rng.random_range(-2.0..0.5)).collect();
        let eps: Vec<f64> = (0..ACTION_DIM).map(|_| rng.sample(StandardNormal)).collect();
        let (a, logp) = squash(&mu, &ls, &eps);
        // density of a = tanh(u), u ~ N(mu, sigma), by change of variables
        let mut density = 1.0;
        for i in 0..ACTION_DIM {
            let u = a[i].atanh();
            let s = ls[i].exp();
            let z = (u - mu[i]) / s;
            density *= (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt()) / (1.0 - a[i] * a[i]);
        }
        if a.iter().all(|v| v.abs() < 0.999_999) {
            assert!((density.ln() - logp[0]).abs() < 1e-6, "{} vs {}", density.ln(), logp[0]);
        }
    }
}

#[test]
fn vanishing_noise_gives_deterministic_action() {
    let mu = [0.3, -0.7, 1.2, 0.0];
    let ls = [-20.0; ACTION_DIM];
    let (a, _) = squash(&mu, &ls, &[1.3, -0.4, 2.0, 0.9]);
    for i in 0..ACTION_DIM {
        assert!((a[i] - mu[i].tanh()).abs() < 1e-8);
    }
}

#[test]
fn critic_residual_contracts() {
    let (first, last) = common::bellman_contraction(500);
    assert!(last <= 0.1 * first, "{first} -> {last}");
}

#[test]
fn targets_follow_the_polyak_trace() {
    let hp = HyperParams { hidden: vec![2], tau: 0.05, ..HyperParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut head = Head::new(OperatorId::Reach, &hp, &mut rng);
    let init = head.targets[0].params.clone();
    let mut online = Vec::new();
    for _ in 0..20 {
        for p in &mut head.critics[0].params {
            *p += rng.random_range(-0.1..0.1);
        }
        online.push(head.critics[0].params.clone());
        head.soft_update_targets(hp.tau);
    }
    let k = online.len();
    for i in 0..init.len() {
        let mut want = (1.0 - hp.tau).powi(k as i32) * init[i];
        for (j, o) in online.iter().enumerate() {
            want += hp.tau * (1.0 - hp.tau).powi((k - 1 - j) as i32) * o[i];
        }
        assert!((head.targets[0].params[i] - want).abs() < 1e-12);
    }
}

fn constant_critic(value: f64) -> Mlp {
    let mut q = Mlp::new(&[OBS_DIM + ACTION_DIM, 3, 1], &mut ChaCha8Rng::seed_from_u64(1));
    q.params.iter_mut().for_each(|p| *p = 0.0);
    *q.params.last_mut().unwrap() = value;
    q
}

#[test]
fn bellman_target_uses_the_smaller_target_critic() {
    let hp = small_hp();
    let mut head = Head::new(OperatorId::Lift, &hp, &mut ChaCha8Rng::seed_from_u64(2));
    head.targets = [constant_critic(5.0), constant_critic(3.0)];
    let batch = common::synthetic_batch(8, 3);
    let y = head.critic_targets(&batch, &hp, &mut ChaCha8Rng::seed_from_u64(4));
    // same noise stream reproduces log pi of the next action
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mu, ls) = head.distribution(&batch.next_obs);
    let eps: Vec<f64> = (0..batch.n * ACTION_DIM).map(|_| rng.sample(StandardNormal)).collect();
    let (_, logp) = squash(&mu, &ls, &eps);
    for r in 0..batch.n {
        let want = batch.reward(r, OperatorId::Lift.index()) + hp.gamma * (3.0 - head.alpha() * logp[r]);
        assert!((y[r] - want).abs() < 1e-12);
    }
}

#[test]
fn policy_gradient_uses_the_smaller_critic() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let actor = Mlp::new(&[OBS_DIM, 8, 2 * ACTION_DIM], &mut rng);
    let q1 = Mlp::new(&[OBS_DIM + ACTION_DIM, 8, 1], &mut rng);
    let mut q_high = q1.clone();
    *q_high.params.last_mut().unwrap() += 100.0;
    let obs: Vec<f64> = (0..4 * OBS_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eps: Vec<f64> = (0..4 * ACTION_DIM).map(|_| rng.sample(StandardNormal)).collect();
    let (l_a, g_a, _) = policy_loss_grad(&actor, [&q1, &q_high], &obs, &eps, 0.2);
    let (l_b, g_b, _) = policy_loss_grad(&actor, [&q_high, &q1], &obs, &eps, 0.2);
    let (l_c, g_c, _) = policy_loss_grad(&actor, [&q1, &q1], &obs, &eps, 0.2);
    assert_eq!(l_a, l_b);
    assert_eq!(g_a, g_b);
    assert!((l_a - l_c).abs() < 1e-12);
    for (a, c) in g_a.iter().zip(&g_c) {
        assert!((a - 2.0 * c).abs() < 1e-9 || (a - c).abs() < 1e-12);
    }
}

#[test]
fn constant_critic_and_zero_alpha_give_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let actor = Mlp::new(&[OBS_DIM, 8, 2 * ACTION_DIM], &mut rng);
    let q = constant_critic(1.5);
    let obs: Vec<f64> = (0..4 * OBS_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eps: Vec<f64> = (0..4 * ACTION_DIM).map(|_| rng.sample(StandardNormal)).collect();
    let (_, g, _) = policy_loss_grad(&actor, [&q, &q], &obs, &eps, 0.0);
    assert!(g.iter().all(|v| *v == 0.0));
}

#[test]
fn policy_loss_falls_with_frozen_critics() {
    let hp = small_hp();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut head = Head::new(OperatorId::Move, &hp, &mut rng);
    let batch = common::synthetic_batch(64, 9);
    let start = head.policy_update(&batch, &mut ChaCha8Rng::seed_from_u64(100)).unwrap().0;
    let mut end = start;
    for _ in 0..200 {
        end = head.policy_update(&batch, &mut ChaCha8Rng::seed_from_u64(100)).unwrap().0;
    }
    assert!(end < start, "{start} -> {end}");
}

/// Mean log-probability of a zero-mean squashed Gaussian with log-std `c`.
fn mean_logp(c: f64, rng: &mut ChaCha8Rng) -> f64 {
    let n = 20_000;
    let mu = vec![0.0; n * ACTION_DIM];
    let ls = vec![c; n * ACTION_DIM];
    let eps: Vec<f64> = (0..n * ACTION_DIM).map(|_| rng.sample(StandardNormal)).collect();
    squash(&mu, &ls, &eps).1.iter().sum::<f64>() / n as f64
}

#[test]
fn temperature_settles_on_a_fixed_policy_at_target_entropy() {
    let hp = small_hp();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    // bisect the log-std whose entropy equals the target
    let (mut lo, mut hi) = (-6.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if mean_logp(mid, &mut rng) + hp.target_entropy > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let mut head = Head::new(OperatorId::Reach, &hp, &mut rng);
    let mut trace = Vec::new();
    for _ in 0..2000 {
        let eps: Vec<f64> = (0..256 * ACTION_DIM).map(|_| rng.sample(StandardNormal)).collect();
        let (_, logp) = squash(&vec![0.0; eps.len()], &vec![c; eps.len()], &eps);
        trace.push(head.temperature_update(&logp, hp.target_entropy));
    }
    let tail = &trace[1900..];
    let (lo, hi) = tail.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
    assert!((hi - lo) / hi < 0.01, "alpha band {lo}..{hi}");
}

#[test]
fn temperature_drifts_when_entropy_is_off_target() {
    let hp = small_hp();
    let mut head = Head::new(OperatorId::Reach, &hp, &mut ChaCha8Rng::seed_from_u64(0));
    let start = head.alpha();
    for _ in 0..100 {
        head.temperature_update(&[0.0; 16], hp.target_entropy);
    }
    // entropy 0 exceeds the target of -4, so alpha shrinks
    assert!(head.alpha() < start);
}

#[test]
fn sampling_is_uniform() {
    let mut buf = ReplayBuffer::new(100);
    for _ in 0..100 {
        buf.push(Transition {
            obs: [0.0; OBS_DIM],
            action: [0.0; ACTION_DIM],
            reward: [0.0; K],
            next_obs: [0.0; OBS_DIM],
            success: [false; K],
            active: 0,
        });
    }
    let mut counts = [0u32; 100];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..1000 {
        for i in buf.sample_indices(100, &mut rng).unwrap() {
            counts[i] += 1;
        }
    }
    let e = 1000.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 0.99 quantile of chi-square with 99 degrees of freedom
    assert!(chi2 < 134.642, "chi2 = {chi2}");
}

#[test]
fn heads_read_only_their_reward_component() {
    let hp = small_hp();
    let base = common::synthetic_batch(hp.batch_size, 20);
    for op in OperatorId::ALL {
        let mut poisoned = base.clone();
        for r in 0..poisoned.n {
            for i in (0..K).filter(|&i| i != op.index()) {
                poisoned.reward[r * K + i] = f64::NAN;
            }
        }
        let mut a = Head::new(op, &hp, &mut ChaCha8Rng::seed_from_u64(1));
        let mut b = a.clone();
        a.update(&base, &hp, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        b.update(&poisoned, &hp, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a.actor, b.actor);
        assert_eq!(a.critics, b.critics);
    }
}

#[test]
fn updates_are_deterministic() {
    let hp = small_hp();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut l = Learner::new(hp.clone(), &mut rng);
        let mut buf = ReplayBuffer::new(1000);
        let b = common::synthetic_batch(200, 4);
        for r in 0..b.n {
            let mut t = Transition {
                obs: [0.0; OBS_DIM],
                action: [0.0; ACTION_DIM],
                reward: [0.0; K],
                next_obs: [0.0; OBS_DIM],
                success: [false; K],
                active: 0,
            };
            t.obs.copy_from_slice(&b.obs[r * OBS_DIM..(r + 1) * OBS_DIM]);
            t.next_obs.copy_from_slice(&b.next_obs[r * OBS_DIM..(r + 1) * OBS_DIM]);
            t.action.copy_from_slice(&b.action[r * ACTION_DIM..(r + 1) * ACTION_DIM]);
            t.reward.copy_from_slice(&b.reward[r * K..(r + 1) * K]);
            buf.push(t);
        }
        for _ in 0..5 {
            l.update(&buf, &mut rng).unwrap();
        }
        l.heads.iter().map(|h| h.actor.params.clone()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
