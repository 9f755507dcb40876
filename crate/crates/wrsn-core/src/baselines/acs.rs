//! Ant colony system for the k-coverage charging tour.
//!
//! Agents walk the deadline graph from `v_0`, appending feasible nodes under
//! the pseudo-random-proportional rule until coverage is restored or they
//! get stuck. Per iteration, agents construct tours independently on the
//! same pheromone snapshot; local decay is then applied along every
//! traversed edge and the global rule reinforces the iteration-best feasible
//! tour: `tau <- (1-theta)*tau + theta*dtau` with `dtau = 1/L*` on the best
//! tour's edges and zero elsewhere.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::greedy_solve;
use crate::envs::{ChargingEnv, ScheduleState};
use crate::exec;
use crate::instances::Variant;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AcsParams {
    pub agents: usize,
    pub iterations: usize,
    /// Global pheromone decay.
    pub theta_global: f64,
    /// Local pheromone decay toward `tau0`.
    pub theta_local: f64,
    /// Initial pheromone; `None` derives `1/(n * L_greedy)`.
    pub tau0: Option<f64>,
    /// Pheromone exponent in the transition rule.
    pub alpha: f64,
    /// Heuristic (inverse distance) exponent.
    pub beta: f64,
    /// Probability of exploiting the best edge instead of sampling.
    pub q0: f64,
    pub seed: u64,
}

impl Default for AcsParams {
    fn default() -> Self {
        AcsParams {
            agents: 20,
            iterations: 200,
            theta_global: 0.1,
            theta_local: 0.1,
            tau0: None,
            alpha: 1.0,
            beta: 2.0,
            q0: 0.9,
            seed: 0,
        }
    }
}

impl AcsParams {
    fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::Validation("ACS needs at least one agent".into()));
        }
        for (name, theta) in [
            ("global", self.theta_global),
            ("local", self.theta_local),
        ] {
            if !(0.0 < theta && theta < 1.0) && theta != 1.0 {
                return Err(Error::Validation(format!(
                    "{name} pheromone decay {theta} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// One application of the global update rule.
pub fn pheromone_update(tau_prev: f64, theta: f64, delta_tau: f64) -> f64 {
    (1.0 - theta) * tau_prev + theta * delta_tau
}

struct AgentTour {
    /// Vertex sequence excluding `v_0`.
    order: Vec<usize>,
    /// Directed edges traversed, including the closing leg on success.
    edges: Vec<(usize, usize)>,
    /// Closed-tour length; only meaningful when `restored`.
    length: f64,
    restored: bool,
}

/// Ant colony search for a coverage-restoring tour; `Err(Infeasible)` when
/// no agent ever finds one.
pub fn acs_solve(env: &dyn ChargingEnv, params: &AcsParams) -> Result<ScheduleState> {
    acs_solve_traced(env, params).map(|(state, _)| state)
}

/// [`acs_solve`] plus the incumbent best feasible tour length after each
/// iteration (`inf` until the first feasible tour).
pub fn acs_solve_traced(
    env: &dyn ChargingEnv,
    params: &AcsParams,
) -> Result<(ScheduleState, Vec<f64>)> {
    if env.variant() != Variant::P3KCoverage {
        return Err(Error::Validation("ACS solver applies to P3 instances".into()));
    }
    params.validate()?;
    let graph = env.graph();
    let start = graph.start.expect("P3 graph has v_0");
    let count = graph.vertex_count();
    let instance = env.instance();

    // Candidate vertices: requesters only; others can never be charged.
    let candidates: Vec<usize> = (0..count)
        .filter(|&v| match graph.node_of[v] {
            Some(id) => instance.is_requester(&instance.nodes[id]),
            None => false,
        })
        .collect();
    if candidates.is_empty() {
        let state = env.initial_state();
        return if state.coverage_restored() {
            Ok((state, Vec::new()))
        } else {
            Err(Error::Infeasible("no requesters and coverage not restored".into()))
        };
    }

    let tau0 = params.tau0.unwrap_or_else(|| {
        let greedy = greedy_solve(env);
        let scale = env.closed_distance(&greedy).max(instance.area.diameter());
        1.0 / (candidates.len() as f64 * scale)
    });
    let mut tau = vec![vec![tau0; count]; count];

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut incumbents = Vec::with_capacity(params.iterations);
    for iteration in 0..params.iterations {
        let seeds: Vec<u64> = (0..params.agents)
            .map(|agent| {
                params
                    .seed
                    .wrapping_mul(0x100_0000_01b3)
                    .wrapping_add((iteration * params.agents + agent) as u64)
            })
            .collect();
        let tau_ref = &tau;
        let candidates_ref = &candidates;
        let tours: Vec<AgentTour> = exec::map_collect(seeds, |seed| {
            construct_tour(env, start, candidates_ref, tau_ref, params, seed)
        });

        // Local decay along every traversed edge, agents in index order.
        for tour in &tours {
            for &(a, b) in &tour.edges {
                tau[a][b] = pheromone_update(tau[a][b], params.theta_local, tau0);
            }
        }

        // Iteration-best feasible tour.
        let iter_best = tours
            .iter()
            .filter(|t| t.restored)
            .min_by(|a, b| a.length.partial_cmp(&b.length).unwrap());
        if let Some(tour) = iter_best {
            if best
                .as_ref()
                .map(|(_, len)| tour.length < *len)
                .unwrap_or(true)
            {
                best = Some((tour.order.clone(), tour.length));
            }
        }

        // Global update over every edge: reinforcement on the iteration-best
        // feasible tour, pure decay elsewhere.
        let best_edges: Vec<(usize, usize)> = iter_best
            .map(|tour| tour_edges(start, &tour.order))
            .unwrap_or_default();
        let deposit = iter_best.map(|t| 1.0 / t.length).unwrap_or(0.0);
        for a in 0..count {
            for b in 0..count {
                let delta = if best_edges.contains(&(a, b)) {
                    deposit
                } else {
                    0.0
                };
                tau[a][b] = pheromone_update(tau[a][b], params.theta_global, delta);
            }
        }
        incumbents.push(best.as_ref().map(|(_, len)| *len).unwrap_or(f64::INFINITY));
    }

    match best {
        Some((order, _)) => Ok((env.replay(&order), incumbents)),
        None => Err(Error::Infeasible(
            "no coverage-restoring tour found by any agent".into(),
        )),
    }
}

fn tour_edges(start: usize, order: &[usize]) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(order.len() + 1);
    let mut prev = start;
    for &v in order {
        edges.push((prev, v));
        prev = v;
    }
    if !order.is_empty() {
        edges.push((prev, start));
    }
    edges
}

fn construct_tour(
    env: &dyn ChargingEnv,
    start: usize,
    candidates: &[usize],
    tau: &[Vec<f64>],
    params: &AcsParams,
    seed: u64,
) -> AgentTour {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = env.graph();
    let instance = env.instance();
    let mut order: Vec<usize> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut current = start;
    let mut state = env.initial_state();

    while !state.coverage_restored() {
        // Deadline-feasible, clique-new successors reachable by an edge.
        let moves: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&v| !order.contains(&v) && graph.has_edge(current, v))
            .filter(|&v| {
                let mut candidate_order = order.clone();
                candidate_order.push(v);
                !env.replay(&candidate_order).infeasible
            })
            .collect();
        if moves.is_empty() {
            return AgentTour {
                order,
                edges,
                length: f64::INFINITY,
                restored: false,
            };
        }
        let desirability: Vec<f64> = moves
            .iter()
            .map(|&v| {
                let d = graph
                    .position(instance, current)
                    .distance(graph.position(instance, v))
                    .max(1e-9);
                tau[current][v].powf(params.alpha) * (1.0 / d).powf(params.beta)
            })
            .collect();
        let pick = if rng.gen_range(0.0..1.0) < params.q0 {
            let mut best = 0;
            for i in 1..moves.len() {
                if desirability[i] > desirability[best] {
                    best = i;
                }
            }
            moves[best]
        } else {
            let total: f64 = desirability.iter().sum();
            let mut roll = rng.gen_range(0.0..total.max(f64::MIN_POSITIVE));
            let mut chosen = moves[moves.len() - 1];
            for (i, &v) in moves.iter().enumerate() {
                roll -= desirability[i];
                if roll <= 0.0 {
                    chosen = v;
                    break;
                }
            }
            chosen
        };
        edges.push((current, pick));
        order.push(pick);
        current = pick;
        state = env.replay(&order);
    }
    edges.push((current, start));
    AgentTour {
        length: env.closed_distance(&state),
        restored: true,
        order,
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_rule_arithmetic() {
        // theta=0.1, tau=0.2, L*=500: 0.9*0.2 + 0.1*(1/500) = 0.1802.
        let updated = pheromone_update(0.2, 0.1, 1.0 / 500.0);
        assert!((updated - 0.1802).abs() < 1e-12);
    }

    #[test]
    fn off_best_edges_get_zero_deposit() {
        let updated = pheromone_update(0.2, 0.1, 0.0);
        assert!((updated - 0.18).abs() < 1e-12);
    }

    #[test]
    fn full_decay_replaces_tau_with_deposit() {
        let updated = pheromone_update(0.7, 1.0, 0.004);
        assert!((updated - 0.004).abs() < 1e-15);
    }
}
