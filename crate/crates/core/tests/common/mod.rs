#![allow(dead_code)]

pub mod corpus;
pub mod table;

use oprl_core::grounding::K;
use oprl_core::sac::learner::{critic_loss_grad, policy_loss_grad};
use oprl_core::sac::nn::Mlp;
use oprl_core::sac::{Batch, Head, HyperParams, Transition};
use oprl_core::sim::{ACTION_DIM, OBS_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn central<F: Fn(&[f64]) -> f64>(f: F, p: &[f64], i: usize, h: f64) -> f64 {
    let mut q = p.to_vec();
    q[i] += h;
    let up = f(&q);
    q[i] -= 2.0 * h;
    let down = f(&q);
    (up - down) / (2.0 * h)
}

/// Worst relative error between analytic and central-difference gradients of
/// the policy and critic losses over `draws` random toy networks.
pub fn gradient_check(draws: u64) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for seed in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let actor = Mlp::new(&[OBS_DIM, 4, 4, 2 * ACTION_DIM], &mut rng);
        let q1 = Mlp::new(&[OBS_DIM + ACTION_DIM, 4, 4, 1], &mut rng);
        let q2 = Mlp::new(&[OBS_DIM + ACTION_DIM, 4, 4, 1], &mut rng);
        let obs: Vec<f64> = (0..n * OBS_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eps: Vec<f64> = (0..n * ACTION_DIM).map(|_| rng.sample(StandardNormal)).collect();
        let alpha = rng.random_range(0.05..1.0);
        let (_, g, _) = policy_loss_grad(&actor, [&q1, &q2], &obs, &eps, alpha);
        let sizes = actor.sizes().to_vec();
        let f = |p: &[f64]| {
            let a = Mlp::from_params(&sizes, p.to_vec()).unwrap();
            policy_loss_grad(&a, [&q1, &q2], &obs, &eps, alpha).0
        };
        for i in 0..g.len() {
            worst = worst.max(rel_err(g[i], central(&f, &actor.params, i, h)));
        }

        let act: Vec<f64> = (0..n * ACTION_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, g, ) = critic_loss_grad(&q1, &obs, &act, &y);
        let qs = q1.sizes().to_vec();
        let f = |p: &[f64]| critic_loss_grad(&Mlp::from_params(&qs, p.to_vec()).unwrap(), &obs, &act, &y).0;
        for i in 0..g.len() {
            worst = worst.max(rel_err(g[i], central(&f, &q1.params, i, h)));
        }
    }
    worst
}

pub fn synthetic_batch(n: usize, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Batch::default();
    for _ in 0..n {
        let mut t = Transition {
            obs: [0.0; OBS_DIM],
            action: [0.0; ACTION_DIM],
            reward: [0.0; K],
            next_obs: [0.0; OBS_DIM],
            success: [false; K],
            active: 0,
        };
        t.obs.iter_mut().for_each(|v| *v = rng.random_range(-0.2..0.2));
        t.next_obs.iter_mut().for_each(|v| *v = rng.random_range(-0.2..0.2));
        t.action.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        t.reward.iter_mut().for_each(|v| *v = rng.random_range(0.0..1.0));
        b.push(&t);
    }
    b
}

/// Critic residual before the first and after the last of `updates` critic
/// steps on one fixed batch, as `(initial, final)`.
pub fn bellman_contraction(updates: usize) -> (f64, f64) {
    let hp = HyperParams { hidden: vec![64, 64], batch_size: 128, ..HyperParams::default() };
    let batch = synthetic_batch(hp.batch_size, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut head = Head::new(oprl_core::grounding::OperatorId::Reach, &hp, &mut rng);
    let first = head.critic_update(&batch, &hp, &mut rng).unwrap();
    let mut last = first;
    for _ in 1..updates {
        last = head.critic_update(&batch, &hp, &mut rng).unwrap();
        head.soft_update_targets(hp.tau);
    }
    (first, last)
}
