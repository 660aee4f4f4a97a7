//! Soft actor-critic heads, one per operator, trained jointly from a shared
//! buffer. Each head has a squashed-Gaussian policy, twin critics with
//! Polyak-averaged targets and its own learned temperature.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::buffer::{Batch, BufferError, ReplayBuffer};
use super::nn::{polyak, Adam, Mlp};
use crate::grounding::{OperatorId, K};
use crate::sim::{ACTION_DIM, OBS_DIM};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub gamma: f64,
    pub policy_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub target_entropy: f64,
    pub hidden: Vec<usize>,
    pub updates_per_step: usize,
    pub warmup_steps: usize,
    pub init_alpha: f64,
    /// Stop bootstrapping a head's target on that operator's success.
    pub terminal_on_success: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            policy_lr: 3e-4,
            critic_lr: 3e-4,
            alpha_lr: 3e-4,
            tau: 0.005,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            target_entropy: -(ACTION_DIM as f64),
            hidden: vec![256, 256],
            updates_per_step: 1,
            warmup_steps: 5000,
            init_alpha: 1.0,
            terminal_on_success: false,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err("gamma must lie in (0, 1)".into());
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err("tau must lie in (0, 1]".into());
        }
        if [self.policy_lr, self.critic_lr, self.alpha_lr, self.init_alpha].iter().any(|v| !(*v > 0.0)) {
            return Err("learning rates and init_alpha must be positive".into());
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size || self.hidden.iter().any(|&h| h == 0) {
            return Err("batch_size, buffer_capacity and hidden sizes must be positive".into());
        }
        Ok(())
    }

    fn sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(&self.hidden);
        s.push(output);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("non-finite {what} in `{op}` head")]
    NonFinite { op: OperatorId, what: &'static str },
    #[error(transparent)]
    Buffer(#[from] BufferError),
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 - tanh(u)^2)`, stable for large `|u|`.
pub fn log1m_tanh2(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Splits actor output rows into means and clamped log-stds.
fn split_head(out: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mu = Vec::with_capacity(n * ACTION_DIM);
    let mut ls = Vec::with_capacity(n * ACTION_DIM);
    for row in out.chunks_exact(2 * ACTION_DIM) {
        mu.extend_from_slice(&row[..ACTION_DIM]);
        ls.extend(row[ACTION_DIM..].iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)));
    }
    (mu, ls)
}

/// Squashed sample `tanh(mu + exp(ls) * eps)` and its log-density, per row.
pub fn squash(mu: &[f64], ls: &[f64], eps: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = mu.len() / ACTION_DIM;
    let mut a = Vec::with_capacity(mu.len());
    let mut logp = Vec::with_capacity(n);
    for r in 0..n {
        let mut lp = 0.0;
        for i in r * ACTION_DIM..(r + 1) * ACTION_DIM {
            let u = mu[i] + ls[i].exp() * eps[i];
            a.push(u.tanh());
            lp += -0.5 * eps[i] * eps[i] - ls[i] - HALF_LN_2PI - log1m_tanh2(u);
        }
        logp.push(lp);
    }
    (a, logp)
}

fn concat_rows(obs: &[f64], act: &[f64], n: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(n * (OBS_DIM + ACTION_DIM));
    for r in 0..n {
        x.extend_from_slice(&obs[r * OBS_DIM..(r + 1) * OBS_DIM]);
        x.extend_from_slice(&act[r * ACTION_DIM..(r + 1) * ACTION_DIM]);
    }
    x
}

fn normals(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Soft Bellman target for one transition.
pub fn soft_target(reward: f64, gamma: f64, terminal: bool, q_min: f64, alpha_logp: f64) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * (q_min - alpha_logp)
    }
}

/// Mean squared residual of `q` against `y` and its parameter gradient.
pub fn critic_loss_grad(q: &Mlp, obs: &[f64], act: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let n = y.len();
    let tape = q.forward(&concat_rows(obs, act, n), n);
    let out = tape.output();
    let mut loss = 0.0;
    let mut dy = Vec::with_capacity(n);
    for (qv, yv) in out.iter().zip(y) {
        let d = qv - yv;
        loss += d * d / n as f64;
        dy.push(2.0 * d / n as f64);
    }
    let mut grad = vec![0.0; q.params.len()];
    q.backward(&tape, &dy, &mut grad, false);
    (loss, grad)
}

/// Reparameterized policy objective `mean(alpha * log pi(a|s) - min(Q1, Q2)(s, a))`
/// for fixed noise `eps`, with its actor gradient and per-row log-probs.
pub fn policy_loss_grad(actor: &Mlp, critics: [&Mlp; 2], obs: &[f64], eps: &[f64], alpha: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let n = obs.len() / OBS_DIM;
    let tape = actor.forward(obs, n);
    let raw = tape.output();
    let (mu, ls) = split_head(raw, n);
    let (a, logp) = squash(&mu, &ls, eps);
    let x = concat_rows(obs, &a, n);
    let t1 = critics[0].forward(&x, n);
    let t2 = critics[1].forward(&x, n);
    let (q1, q2) = (t1.output(), t2.output());
    let mut loss = 0.0;
    let mut pick = [vec![0.0; n], vec![0.0; n]];
    for r in 0..n {
        let (qmin, j) = if q1[r] <= q2[r] { (q1[r], 0) } else { (q2[r], 1) };
        pick[j][r] = 1.0;
        loss += (alpha * logp[r] - qmin) / n as f64;
    }
    // dQmin/da through whichever critic is smaller on each row
    let mut scratch = vec![0.0; critics[0].params.len()];
    let d1 = critics[0].backward(&t1, &pick[0], &mut scratch, true).unwrap();
    scratch.iter_mut().for_each(|v| *v = 0.0);
    let d2 = critics[1].backward(&t2, &pick[1], &mut scratch, true).unwrap();
    let width = OBS_DIM + ACTION_DIM;
    let mut dout = vec![0.0; raw.len()];
    for r in 0..n {
        for i in 0..ACTION_DIM {
            let k = r * ACTION_DIM + i;
            let dq = d1[r * width + OBS_DIM + i] + d2[r * width + OBS_DIM + i];
            let du = (-dq * (1.0 - a[k] * a[k]) + alpha * 2.0 * a[k]) / n as f64;
            dout[r * 2 * ACTION_DIM + i] = du;
            let raw_ls = raw[r * 2 * ACTION_DIM + ACTION_DIM + i];
            if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw_ls) {
                dout[r * 2 * ACTION_DIM + ACTION_DIM + i] = du * ls[k].exp() * eps[k] - alpha / n as f64;
            }
        }
    }
    let mut grad = vec![0.0; actor.params.len()];
    actor.backward(&tape, &dout, &mut grad, false);
    (loss, grad, logp)
}

#[derive(Debug, Clone)]
pub struct Head {
    pub op: OperatorId,
    pub actor: Mlp,
    pub critics: [Mlp; 2],
    pub targets: [Mlp; 2],
    pub log_alpha: f64,
    actor_opt: Adam,
    critic_opt: [Adam; 2],
    alpha_opt: Adam,
}

impl Head {
    pub fn new(op: OperatorId, hp: &HyperParams, rng: &mut impl Rng) -> Self {
        let actor = Mlp::new(&hp.sizes(OBS_DIM, 2 * ACTION_DIM), rng);
        let qs = hp.sizes(OBS_DIM + ACTION_DIM, 1);
        let critics = [Mlp::new(&qs, rng), Mlp::new(&qs, rng)];
        Self::from_parts(op, hp, actor, critics.clone(), critics, hp.init_alpha.ln())
    }

    pub fn from_parts(op: OperatorId, hp: &HyperParams, actor: Mlp, critics: [Mlp; 2], targets: [Mlp; 2], log_alpha: f64) -> Self {
        Self {
            op,
            actor_opt: Adam::new(actor.params.len(), hp.policy_lr),
            critic_opt: [
                Adam::new(critics[0].params.len(), hp.critic_lr),
                Adam::new(critics[1].params.len(), hp.critic_lr),
            ],
            alpha_opt: Adam::new(1, hp.alpha_lr),
            actor,
            critics,
            targets,
            log_alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// Means and clamped log-stds for a batch of observations.
    pub fn distribution(&self, obs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = obs.len() / OBS_DIM;
        split_head(&self.actor.predict(obs, n), n)
    }

    /// Stochastic `tanh(mu + sigma * eps)` with its log-probability, or
    /// `tanh(mu)` when `deterministic`.
    pub fn act(&self, obs: &[f64; OBS_DIM], deterministic: bool, rng: &mut impl Rng) -> Result<([f64; ACTION_DIM], Option<f64>), LearnerError> {
        let (mu, ls) = self.distribution(obs);
        if mu.iter().chain(&ls).any(|v| !v.is_finite()) {
            return Err(LearnerError::NonFinite { op: self.op, what: "policy output" });
        }
        let mut out = [0.0; ACTION_DIM];
        if deterministic {
            for (o, m) in out.iter_mut().zip(&mu) {
                *o = m.tanh();
            }
            return Ok((out, None));
        }
        let eps = normals(ACTION_DIM, rng);
        let (a, logp) = squash(&mu, &ls, &eps);
        out.copy_from_slice(&a);
        Ok((out, Some(logp[0])))
    }

    /// Soft Bellman targets for this head's reward component.
    pub fn critic_targets(&self, batch: &Batch, hp: &HyperParams, rng: &mut impl Rng) -> Vec<f64> {
        let n = batch.n;
        let (mu, ls) = self.distribution(&batch.next_obs);
        let eps = normals(n * ACTION_DIM, rng);
        let (a, logp) = squash(&mu, &ls, &eps);
        let x = concat_rows(&batch.next_obs, &a, n);
        let q1 = self.targets[0].predict(&x, n);
        let q2 = self.targets[1].predict(&x, n);
        let alpha = self.alpha();
        let op = self.op.index();
        (0..n)
            .map(|r| {
                let terminal = hp.terminal_on_success && batch.success(r, op);
                soft_target(batch.reward(r, op), hp.gamma, terminal, q1[r].min(q2[r]), alpha * logp[r])
            })
            .collect()
    }

    /// Steps both critics toward the soft targets; returns the mean of their
    /// squared residuals before the step.
    pub fn critic_update(&mut self, batch: &Batch, hp: &HyperParams, rng: &mut impl Rng) -> Result<f64, LearnerError> {
        let y = self.critic_targets(batch, hp, rng);
        let mut total = 0.0;
        for j in 0..2 {
            let (loss, grad) = critic_loss_grad(&self.critics[j], &batch.obs, &batch.action, &y);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(LearnerError::NonFinite { op: self.op, what: "critic loss" });
            }
            self.critic_opt[j].step(&mut self.critics[j].params, &grad);
            total += loss / 2.0;
        }
        Ok(total)
    }

    /// Returns the policy loss and the batch log-probs it used.
    pub fn policy_update(&mut self, batch: &Batch, rng: &mut impl Rng) -> Result<(f64, Vec<f64>), LearnerError> {
        let eps = normals(batch.n * ACTION_DIM, rng);
        let (loss, grad, logp) =
            policy_loss_grad(&self.actor, [&self.critics[0], &self.critics[1]], &batch.obs, &eps, self.alpha());
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(LearnerError::NonFinite { op: self.op, what: "policy loss" });
        }
        self.actor_opt.step(&mut self.actor.params, &grad);
        Ok((loss, logp))
    }

    /// Steps `log alpha` on `-log alpha * mean(log pi + target_entropy)`.
    pub fn temperature_update(&mut self, logp: &[f64], target_entropy: f64) -> f64 {
        let mean = logp.iter().map(|l| l + target_entropy).sum::<f64>() / logp.len() as f64;
        let mut la = [self.log_alpha];
        self.alpha_opt.step(&mut la, &[-mean]);
        self.log_alpha = la[0];
        self.alpha()
    }

    pub fn soft_update_targets(&mut self, tau: f64) {
        for j in 0..2 {
            polyak(&mut self.targets[j].params, &self.critics[j].params, tau);
        }
    }

    pub fn update(&mut self, batch: &Batch, hp: &HyperParams, rng: &mut impl Rng) -> Result<HeadStats, LearnerError> {
        let critic_loss = self.critic_update(batch, hp, rng)?;
        let (policy_loss, logp) = self.policy_update(batch, rng)?;
        let alpha = self.temperature_update(&logp, hp.target_entropy);
        self.soft_update_targets(hp.tau);
        Ok(HeadStats { critic_loss, policy_loss, alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeadStats {
    pub critic_loss: f64,
    pub policy_loss: f64,
    pub alpha: f64,
}

/// All seven heads.
#[derive(Debug, Clone)]
pub struct Learner {
    pub hp: HyperParams,
    pub heads: Vec<Head>,
}

impl Learner {
    pub fn new(hp: HyperParams, rng: &mut impl Rng) -> Self {
        let heads = OperatorId::ALL.iter().map(|&op| Head::new(op, &hp, rng)).collect();
        Self { hp, heads }
    }

    pub fn head(&self, op: OperatorId) -> &Head {
        &self.heads[op.index()]
    }

    /// Samples one batch and updates every head on it.
    pub fn update(&mut self, buffer: &ReplayBuffer, rng: &mut impl Rng) -> Result<[HeadStats; K], LearnerError> {
        let batch = buffer.sample(self.hp.batch_size, rng)?;
        let mut stats = [HeadStats::default(); K];
        for (s, head) in stats.iter_mut().zip(&mut self.heads) {
            *s = head.update(&batch, &self.hp, rng)?;
        }
        Ok(stats)
    }
}
