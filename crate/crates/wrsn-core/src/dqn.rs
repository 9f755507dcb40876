//! Q-learning on embedded schedule states: epsilon-greedy rollouts, n-step
//! targets, experience replay, and squared-loss parameter updates.

use std::collections::VecDeque;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::{
    batch_loss_and_grads, embed_graph, features_from_views, q_value, EmbeddingParams, LossSample,
};
use crate::envs::{ChargingEnv, ScheduleState};
use crate::instances::Variant;
use crate::{Error, Result};

/// One n-step experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Which training environment the episode ran on.
    pub env_idx: usize,
    /// Visit order of `s_l` (vertex indices).
    pub state_order: Vec<usize>,
    /// Acted vertex `v_l`.
    pub action: usize,
    /// Accumulated reward over the n steps.
    pub nstep_return: f64,
    /// Visit order of `s_{l+n}`; `None` when the episode ended inside the
    /// window.
    pub next_order: Option<Vec<usize>>,
}

/// Fixed-capacity ring of transitions with uniform batch sampling.
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Push a transition, evicting the oldest entry at capacity.
    pub fn push(&mut self, transition: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(transition);
    }

    /// Uniform sample of `batch` distinct entries (without replacement).
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Vec<&Transition> {
        let len = self.entries.len();
        let batch = batch.min(len);
        // Partial Fisher-Yates over indices.
        let mut indices: Vec<usize> = (0..len).collect();
        for i in 0..batch {
            let j = rng.gen_range(i..len);
            indices.swap(i, j);
        }
        indices[..batch].iter().map(|&i| &self.entries[i]).collect()
    }
}

/// Linear anneal from `start` to `end` over the first `decay_episodes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_episodes: usize,
}

impl EpsilonSchedule {
    pub fn at(&self, episode: usize) -> f64 {
        if self.decay_episodes == 0 || episode >= self.decay_episodes {
            return self.end;
        }
        let frac = episode as f64 / self.decay_episodes as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Discount applied to the successor value in the target.
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    /// Window length of the stored returns.
    pub n_step: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub episodes: usize,
    pub replay_capacity: usize,
    /// Stored transitions required before updates begin.
    pub warmup: usize,
    /// Embedding width and rounds for freshly initialized parameters.
    pub p: usize,
    pub rounds: usize,
    /// Rewards are divided by this inside the trainer (targets and losses
    /// only; argmax decisions are unaffected). `None` picks a per-problem
    /// scale that keeps squared losses O(1).
    pub reward_scale: Option<f64>,
    /// Rescale gradients whose global L2 norm exceeds this bound.
    pub grad_clip: Option<f64>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn defaults_for(variant: Variant, episodes: usize) -> Self {
        let gamma = match variant {
            Variant::P1MobilePath | Variant::P2FullyChargingReward => 1.0,
            Variant::P3KCoverage => 0.99,
        };
        TrainConfig {
            gamma,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_episodes: episodes * 4 / 5,
            },
            n_step: 1,
            batch_size: 32,
            learning_rate: 1e-3,
            episodes,
            replay_capacity: 10_000,
            warmup: 500,
            p: 64,
            rounds: 4,
            reward_scale: None,
            grad_clip: Some(10.0),
            seed: 0,
        }
    }
}

/// Epsilon-greedy pick over `actions` with Q-values aligned to them: the
/// argmax with ties to the lowest vertex id, or a uniform random action with
/// probability `epsilon`. `None` when the action set is empty.
pub fn select_action<R: Rng>(
    actions: &[usize],
    q_values: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Option<usize> {
    if actions.is_empty() {
        return None;
    }
    debug_assert_eq!(actions.len(), q_values.len());
    if rng.gen_range(0.0..1.0) < epsilon {
        return Some(actions[rng.gen_range(0..actions.len())]);
    }
    let mut best = 0;
    for i in 1..actions.len() {
        let better = q_values[i] > q_values[best]
            || (q_values[i] == q_values[best] && actions[i] < actions[best]);
        if better {
            best = i;
        }
    }
    Some(actions[best])
}

/// `y_l = r_l + gamma * max_v' Q(s_{l+n}, v')`, or `r_l` at a terminal.
pub fn n_step_target(nstep_return: f64, successor_best_q: Option<f64>, gamma: f64) -> f64 {
    match successor_best_q {
        Some(q) => nstep_return + gamma * q,
        None => nstep_return,
    }
}

/// Q-values of `actions` at `state`.
pub fn q_values_for(
    env: &dyn ChargingEnv,
    state: &ScheduleState,
    actions: &[usize],
    params: &EmbeddingParams,
) -> Vec<f64> {
    let (features, edges) = snapshot(env, state);
    let embedding = embed_graph(&features, &edges, params);
    actions
        .iter()
        .map(|&v| q_value(&embedding, v, params))
        .collect()
}

fn snapshot(
    env: &dyn ChargingEnv,
    state: &ScheduleState,
) -> (Array2<f64>, Vec<(usize, usize, f64)>) {
    let views = env.vertex_views(state);
    (features_from_views(&views), env.edge_snapshot(state))
}

/// Per-episode training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub objective: f64,
    pub epsilon: f64,
    pub loss_mean: f64,
}

pub struct TrainResult {
    pub params: EmbeddingParams,
    pub log: Vec<EpisodeLog>,
}

impl TrainResult {
    /// Training log CSV: `episode, objective, epsilon, loss_mean`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("episode,objective,epsilon,loss_mean\n");
        for row in &self.log {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.episode, row.objective, row.epsilon, row.loss_mean
            ));
        }
        out
    }
}

/// Train on a set of environments, cycling one episode per environment.
pub fn train(envs: &[Box<dyn ChargingEnv>], config: &TrainConfig) -> Result<TrainResult> {
    train_observed(envs, config, |_, _| {})
}

/// [`train`] with a per-episode observer over the terminal state.
pub fn train_observed(
    envs: &[Box<dyn ChargingEnv>],
    config: &TrainConfig,
    mut observer: impl FnMut(usize, &ScheduleState),
) -> Result<TrainResult> {
    if envs.is_empty() {
        return Err(Error::Validation(
            "training needs at least one instance".into(),
        ));
    }
    if config.batch_size > config.replay_capacity {
        return Err(Error::Validation(
            "batch size exceeds replay capacity".into(),
        ));
    }
    let mut params = EmbeddingParams::init(config.p, config.rounds, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9));
    let mut buffer = ReplayBuffer::new(config.replay_capacity);
    let scale = config
        .reward_scale
        .unwrap_or_else(|| default_reward_scale(envs[0].as_ref()));
    let mut log = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let env_idx = episode % envs.len();
        let env = envs[env_idx].as_ref();
        let epsilon = config.epsilon.at(episode);
        let mut state = env.initial_state();
        // n-step window: (state order, action, scaled reward).
        let mut pending: VecDeque<(Vec<usize>, usize, f64)> = VecDeque::new();
        let mut losses = Vec::new();

        loop {
            let actions = env.actions(&state);
            if actions.is_empty() {
                break;
            }
            let q_values = q_values_for(env, &state, &actions, &params);
            let vertex = select_action(&actions, &q_values, epsilon, &mut rng)
                .expect("non-empty action set");
            let outcome = env.step(&state, vertex);

            if outcome.reward.is_finite() {
                pending.push_back((state.order(), vertex, outcome.reward / scale));
                if pending.len() == config.n_step {
                    let (order, action, _) = pending.front().cloned().expect("non-empty window");
                    let nstep_return: f64 = pending.iter().map(|(_, _, r)| r).sum();
                    let next_order = if outcome.terminal {
                        None
                    } else {
                        Some(outcome.next_state.order())
                    };
                    buffer.push(Transition {
                        env_idx,
                        state_order: order,
                        action,
                        nstep_return,
                        next_order,
                    });
                    pending.pop_front();
                }
            }

            if buffer.len() >= config.warmup.max(config.batch_size) {
                let loss = gradient_step(envs, &mut params, &buffer, config, scale, &mut rng)?;
                losses.push(loss);
            }

            state = outcome.next_state;
            if outcome.terminal {
                break;
            }
        }

        // Episode over: remaining windows become terminal transitions.
        while let Some((order, action, _)) = pending.front().cloned() {
            let nstep_return: f64 = pending.iter().map(|(_, _, r)| r).sum();
            buffer.push(Transition {
                env_idx,
                state_order: order,
                action,
                nstep_return,
                next_order: None,
            });
            pending.pop_front();
        }

        let loss_mean = if losses.is_empty() {
            0.0
        } else {
            losses.iter().sum::<f64>() / losses.len() as f64
        };
        log.push(EpisodeLog {
            episode,
            objective: env.objective(&state),
            epsilon,
            loss_mean,
        });
        observer(episode, &state);
    }
    Ok(TrainResult { params, log })
}

fn default_reward_scale(env: &dyn ChargingEnv) -> f64 {
    match env.variant() {
        Variant::P1MobilePath => 1.0,
        // Rewards are joules; bring them to O(1).
        Variant::P2FullyChargingReward => env
            .instance()
            .nodes
            .first()
            .map(|n| n.battery_capacity)
            .unwrap_or(1.0),
        // Rewards are negated meters; normalize by the area diameter.
        Variant::P3KCoverage => env.instance().area.diameter(),
    }
}

fn gradient_step(
    envs: &[Box<dyn ChargingEnv>],
    params: &mut EmbeddingParams,
    buffer: &ReplayBuffer,
    config: &TrainConfig,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let batch = buffer.sample(config.batch_size, rng);
    let mut inputs = Vec::with_capacity(batch.len());
    for transition in &batch {
        let env = envs[transition.env_idx].as_ref();
        let state = env.replay(&transition.state_order);
        let (features, edges) = snapshot(env, &state);
        let best_next = transition.next_order.as_ref().and_then(|order| {
            let next_state = env.replay(order);
            let actions = env.actions(&next_state);
            if actions.is_empty() {
                return None;
            }
            q_values_for(env, &next_state, &actions, params)
                .into_iter()
                .fold(None, |best: Option<f64>, q| {
                    Some(best.map_or(q, |b| b.max(q)))
                })
        });
        if let Some(q) = best_next {
            if !q.is_finite() {
                return Err(Error::Diverged("non-finite successor Q in target".into()));
            }
        }
        let target = n_step_target(transition.nstep_return, best_next, config.gamma);
        inputs.push((features, edges, transition.action, target));
    }
    let samples: Vec<LossSample<'_>> = inputs
        .iter()
        .map(|(features, edges, vertex, target)| LossSample {
            features,
            edges,
            vertex: *vertex,
            target: *target,
        })
        .collect();
    let (loss, mut grads) = batch_loss_and_grads(&samples, params);
    if !loss.is_finite() {
        return Err(Error::Diverged(format!(
            "non-finite loss at buffer size {} (reward scale {scale})",
            buffer.len()
        )));
    }
    if let Some(clip) = config.grad_clip {
        grads.clip_norm(clip);
    }
    params.apply_gradient(&grads, config.learning_rate);
    if !params.is_finite() {
        return Err(Error::Diverged("non-finite parameters after update".into()));
    }
    Ok(loss)
}

/// Deterministic greedy (epsilon = 0) rollout to termination.
pub fn greedy_rollout(env: &dyn ChargingEnv, params: &EmbeddingParams) -> ScheduleState {
    let mut state = env.initial_state();
    loop {
        let actions = env.actions(&state);
        if actions.is_empty() {
            return state;
        }
        let q_values = q_values_for(env, &state, &actions, params);
        let mut rng = ChaCha8Rng::seed_from_u64(0); // epsilon 0: rng unused
        let vertex =
            select_action(&actions, &q_values, 0.0, &mut rng).expect("non-empty action set");
        let outcome = env.step(&state, vertex);
        state = outcome.next_state;
        if outcome.terminal {
            return state;
        }
    }
}
