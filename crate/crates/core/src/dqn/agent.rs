//! Q-learning loop: Bellman targets, minibatch updates, exploration and
//! the greedy re-forming rollout.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::{Correction, EnvParams, ReformEnv, ReformScenario};
use super::network::QNetwork;
use super::replay::{ReplayBuffer, Transition};
use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::UavState;
use crate::hover::Perturbation;
use crate::seed::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub max_steps: usize,
    /// Metres per position action; `None` means one hundredth of the spacing.
    pub position_step: Option<f64>,
    pub phase_step: f64,
    pub hidden_layers: Vec<usize>,
    pub episodes: usize,
    /// `T_decay` of the step size `alpha / (1 + t / T_decay)`; `None` keeps
    /// the step size constant.
    pub step_decay: Option<f64>,
    /// Copy the online network into a frozen target every this many
    /// updates; `None` bootstraps from the online network.
    pub target_sync: Option<usize>,
    /// Rescale the minibatch gradient to at most this Euclidean norm.
    pub max_grad_norm: Option<f64>,
    pub terminal_bonus: f64,
    /// Fixed `eta` threshold; `None` calibrates one from probe draws.
    pub eta_threshold: Option<f64>,
    pub threshold_probes: usize,
    pub threshold_quantile: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            discount: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.99,
            batch_size: 32,
            replay_capacity: 10_000,
            max_steps: 100,
            position_step: None,
            phase_step: PI / 64.0,
            hidden_layers: vec![128, 128],
            episodes: 300,
            step_decay: Some(1000.0),
            target_sync: None,
            max_grad_norm: Some(1.0),
            terminal_bonus: 1.0,
            eta_threshold: None,
            threshold_probes: 100,
            threshold_quantile: 0.05,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid("learning_rate", "must lie in (0, 1]"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(invalid("discount", "must lie in (0, 1]"));
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, "must lie in [0, 1]"));
            }
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(invalid("epsilon_decay", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be >= 1"));
        }
        if self.batch_size > self.replay_capacity {
            return Err(invalid("batch_size", "must not exceed replay_capacity"));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be >= 1"));
        }
        if let Some(s) = self.position_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("position_step", "must be a finite value > 0"));
            }
        }
        if !(self.phase_step > 0.0 && self.phase_step.is_finite()) {
            return Err(invalid("phase_step", "must be a finite value > 0"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(invalid("hidden_layers", "layer sizes must be >= 1"));
        }
        if let Some(t) = self.step_decay {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("step_decay", "must be a finite value > 0"));
            }
        }
        if self.target_sync == Some(0) {
            return Err(invalid("target_sync", "must be >= 1"));
        }
        if let Some(g) = self.max_grad_norm {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid("max_grad_norm", "must be a finite value > 0"));
            }
        }
        if !self.terminal_bonus.is_finite() {
            return Err(invalid("terminal_bonus", "must be finite"));
        }
        if let Some(t) = self.eta_threshold {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("eta_threshold", "must be a finite value > 0"));
            }
        }
        if self.threshold_probes < 2 {
            return Err(invalid("threshold_probes", "must be >= 2"));
        }
        if !(0.0..1.0).contains(&self.threshold_quantile) {
            return Err(invalid("threshold_quantile", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Step size `varpi(t')` of update `t'` (zero-based).
    pub fn step_size(&self, update_index: usize) -> f64 {
        match self.step_decay {
            Some(t) => self.learning_rate / (1.0 + update_index as f64 / t),
            None => self.learning_rate,
        }
    }

    pub fn env_params(&self, spacing: f64, eta_threshold: f64) -> EnvParams {
        EnvParams {
            position_step: self.position_step.unwrap_or(spacing / 100.0),
            phase_step: self.phase_step,
            eta_threshold,
            max_steps: self.max_steps,
            terminal_bonus: self.terminal_bonus,
        }
    }

    pub fn layer_sizes(&self, scenario: &ReformScenario) -> Vec<usize> {
        let mut sizes = vec![scenario.state_dim()];
        sizes.extend(&self.hidden_layers);
        sizes.push(scenario.num_actions());
        sizes
    }
}

/// `Q + alpha (xi + gamma (Q'_max - Q))`.
pub fn bellman_target(q_current: f64, reward: f64, q_next_max: f64, alpha: f64, gamma: f64) -> f64 {
    q_current + alpha * (reward + gamma * (q_next_max - q_current))
}

/// Mean squared error.
pub fn dqn_loss(predicted: &[f64], targets: &[f64]) -> Result<f64> {
    check_len(predicted.len(), targets.len())?;
    if predicted.is_empty() {
        return Err(Error::EmptyInput("loss inputs"));
    }
    let sum: f64 = predicted
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predicted.len() as f64)
}

fn max_value(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Greedy action, ties to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Bellman targets for a minibatch; terminal transitions bootstrap from 0.
pub fn minibatch_targets(
    net: &QNetwork,
    batch: &[&Transition],
    config: &AgentConfig,
    target_net: Option<&QNetwork>,
) -> Result<Vec<f64>> {
    let boot = target_net.unwrap_or(net);
    batch
        .par_iter()
        .map(|t| {
            let q = net.forward(&t.state)?;
            let q_sa = *q.get(t.action).ok_or(Error::InvalidAction {
                action: t.action,
                count: q.len(),
            })?;
            let next = if t.terminal {
                0.0
            } else {
                max_value(&boot.forward(&t.next_state)?)
            };
            Ok(bellman_target(
                q_sa,
                t.reward,
                next,
                config.learning_rate,
                config.discount,
            ))
        })
        .collect()
}

/// One gradient step on the minibatch. Returns the loss before the update.
pub fn backward_and_update(
    net: &mut QNetwork,
    batch: &[&Transition],
    config: &AgentConfig,
    update_index: usize,
    target_net: Option<&QNetwork>,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("minibatch"));
    }
    let targets = minibatch_targets(net, batch, config, target_net)?;
    let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
    let (loss, mut grad) = net.loss_and_gradient(&states, &actions, &targets)?;
    if let Some(limit) = config.max_grad_norm {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > limit {
            let scale = limit / norm;
            grad.iter_mut().for_each(|g| *g *= scale);
        }
    }
    net.descend(&grad, config.step_size(update_index))?;
    Ok(loss)
}

/// With probability `epsilon` a uniform random action, otherwise the
/// greedy one. One uniform is always consumed for the coin flip.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let coin: f64 = rng.random();
    if coin < epsilon {
        return Ok(rng.random_range(0..net.output_dim()));
    }
    Ok(argmax(&net.forward(state)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_reward: f64,
    pub steps: usize,
    pub final_eta: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingLog {
    pub losses: Vec<f64>,
    pub episodes: Vec<EpisodeRecord>,
    pub eta_threshold: f64,
    pub net: QNetwork,
}

/// Threshold to train against: the configured one or a calibrated one.
pub fn resolve_threshold(
    scenario: &ReformScenario,
    config: &AgentConfig,
    seed: u64,
) -> Result<f64> {
    match config.eta_threshold {
        Some(t) => Ok(t),
        None => super::env::calibrate_threshold(
            scenario,
            config.threshold_probes,
            config.threshold_quantile,
            &mut stream(seed, "train.threshold"),
        ),
    }
}

/// The network `train` starts from for `seed`.
pub fn initial_network(
    scenario: &ReformScenario,
    config: &AgentConfig,
    seed: u64,
) -> Result<QNetwork> {
    QNetwork::random(
        &config.layer_sizes(scenario),
        &mut stream(seed, "train.init"),
    )
}

/// Runs `config.episodes` episodes of Q-learning. Deterministic in `seed`.
pub fn train(scenario: &ReformScenario, config: &AgentConfig, seed: u64) -> Result<TrainingLog> {
    config.validate()?;
    let eta_threshold = resolve_threshold(scenario, config, seed)?;
    let params = config.env_params(scenario.spacing, eta_threshold);
    let mut hover_rng = stream(seed, "train.hover");
    let mut explore_rng = stream(seed, "train.explore");
    let mut replay_rng = stream(seed, "train.replay");

    let mut net = initial_network(scenario, config, seed)?;
    let mut target = config.target_sync.map(|_| net.clone());
    let mut buffer = ReplayBuffer::new(config.replay_capacity)?;
    let mut losses = Vec::new();
    let mut episodes = Vec::with_capacity(config.episodes);
    let mut epsilon = config.epsilon_start;

    for episode in 0..config.episodes {
        let perturbations = scenario.sample_perturbations(&mut hover_rng);
        let mut env = ReformEnv::new(scenario, params, perturbations)?;
        let mut state = env.observation();
        let mut total_reward = if env.is_success() {
            params.terminal_bonus
        } else {
            0.0
        };
        while !env.is_done() {
            let action = epsilon_greedy(&net, &state, epsilon, &mut explore_rng)?;
            let out = env.step(action)?;
            total_reward += out.reward;
            buffer.push(Transition {
                state: std::mem::take(&mut state),
                action,
                reward: out.reward,
                next_state: out.state.clone(),
                terminal: out.success,
            });
            state = out.state;
            if buffer.len() >= config.batch_size {
                let batch = buffer.sample(config.batch_size, &mut replay_rng);
                let t = losses.len();
                let loss = backward_and_update(&mut net, &batch, config, t, target.as_ref())?;
                losses.push(loss);
                if let (Some(every), Some(tn)) = (config.target_sync, target.as_mut()) {
                    if losses.len() % every == 0 {
                        *tn = net.clone();
                    }
                }
            }
        }
        episodes.push(EpisodeRecord {
            episode: episode + 1,
            total_reward,
            steps: env.steps(),
            final_eta: env.eta(),
            epsilon,
        });
        epsilon = (epsilon * config.epsilon_decay).max(config.epsilon_end);
    }
    Ok(TrainingLog {
        losses,
        episodes,
        eta_threshold,
        net,
    })
}

/// Result of a greedy re-forming rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct ReformOutcome {
    /// Corrected states at the lowest `eta` seen.
    pub states: Vec<UavState>,
    pub corrections: Vec<Correction>,
    /// Phase corrections to add to the beam weights.
    pub phase_offsets: Vec<f64>,
    pub initial_eta: f64,
    pub final_eta: f64,
    pub steps: usize,
}

/// Greedy rollout from the given hover draw; keeps the best configuration
/// seen, including the uncorrected start.
pub fn propose_corrections(
    net: &QNetwork,
    scenario: &ReformScenario,
    perturbations: &[Perturbation],
    params: EnvParams,
) -> Result<ReformOutcome> {
    check_len(scenario.state_dim(), net.input_dim())?;
    check_len(scenario.num_actions(), net.output_dim())?;
    let mut env = ReformEnv::new(scenario, params, perturbations.to_vec())?;
    let snapshot = |env: &ReformEnv| ReformOutcome {
        states: env.current_states(),
        corrections: env.corrections().to_vec(),
        phase_offsets: env.phase_offsets(),
        initial_eta: 0.0,
        final_eta: env.eta(),
        steps: env.steps(),
    };
    let initial_eta = env.eta();
    let mut best = snapshot(&env);
    while !env.is_done() {
        let action = argmax(&net.forward(&env.observation())?);
        env.step(action)?;
        if env.eta() < best.final_eta {
            best = snapshot(&env);
        }
    }
    best.initial_eta = initial_eta;
    Ok(best)
}

/// One held-out evaluation draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub draw: usize,
    pub initial_eta: f64,
    pub final_eta: f64,
}

/// Greedy rollouts of `net` on `draws` hover draws from the `eval.hover`
/// stream of `seed`.
pub fn evaluate_policy(
    net: &QNetwork,
    scenario: &ReformScenario,
    params: EnvParams,
    draws: usize,
    seed: u64,
) -> Result<Vec<EvalRecord>> {
    let mut rng = stream(seed, "eval.hover");
    (0..draws)
        .map(|draw| {
            let perts = scenario.sample_perturbations(&mut rng);
            let out = propose_corrections(net, scenario, &perts, params)?;
            Ok(EvalRecord {
                draw,
                initial_eta: out.initial_eta,
                final_eta: out.final_eta,
            })
        })
        .collect()
}
