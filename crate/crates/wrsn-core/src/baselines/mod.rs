//! Comparison solvers: exhaustive oracle, nearest-neighbor greedy, random
//! restarts, spanning-tree tours, the ant colony system, and the
//! color-coding dynamic program.

mod acs;
mod brute;
mod dp;
mod mst;

pub use acs::{acs_solve, acs_solve_traced, pheromone_update, AcsParams};
pub use brute::{brute_force, brute_force_dag, DEFAULT_BRUTE_LIMIT};
pub use dp::{dp_kcoverage, DpConfig};
pub use mst::{cmst_solve, mst_solve};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envs::{ChargingEnv, ScheduleState};
use crate::instances::Variant;
use crate::point::Point;

/// Position of a graph vertex at the state clock (mobile nodes move).
fn vertex_position_at(env: &dyn ChargingEnv, vertex: usize, clock: f64) -> Point {
    let instance = env.instance();
    match env.graph().node_of[vertex] {
        None => instance.charger.depot,
        Some(id) => {
            let node = &instance.nodes[id];
            node.position_at(clock).unwrap_or(node.position)
        }
    }
}

/// Is `candidate` a better solver outcome than `incumbent`? Feasibility
/// (P3 coverage restoration) dominates; the objective breaks ties.
pub fn better_solution(
    env: &dyn ChargingEnv,
    candidate: &ScheduleState,
    incumbent: &ScheduleState,
) -> bool {
    if env.variant() == Variant::P3KCoverage {
        match (candidate.coverage_restored(), incumbent.coverage_restored()) {
            (true, false) => return true,
            (false, true) => return false,
            _ => {}
        }
    }
    env.objective(candidate) > env.objective(incumbent)
}

/// Nearest-candidate heuristic: repeatedly step to the qualified vertex
/// (for P3: unused clique, reachable by an edge, finite charging times)
/// closest to the tour head. The episode ends when the stop function fires
/// or no candidate remains.
pub fn greedy_solve(env: &dyn ChargingEnv) -> ScheduleState {
    let mut state = env.initial_state();
    loop {
        let actions = env.actions(&state);
        if actions.is_empty() {
            return state;
        }
        let clock = if state.clock.is_finite() {
            state.clock
        } else {
            env.instance().t0
        };
        let head = state.head_position(env.instance().charger.depot);
        let nearest = actions
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let da = head.distance(vertex_position_at(env, a, clock));
                let db = head.distance(vertex_position_at(env, b, clock));
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .expect("non-empty action set");
        let outcome = env.step(&state, nearest);
        state = outcome.next_state;
        if outcome.terminal {
            return state;
        }
    }
}

/// Uniform random qualified successor each step; the best of `restarts`
/// independent runs is kept. Restarts fan out over the worker pool; each
/// carries its own seeded generator and the best-of fold runs in restart
/// order, so the result is identical at any thread count.
pub fn random_solve(env: &dyn ChargingEnv, seed: u64, restarts: usize) -> ScheduleState {
    let states = crate::exec::map_range(restarts.max(1), |restart| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let mut state = env.initial_state();
        loop {
            let actions = env.actions(&state);
            if actions.is_empty() {
                break;
            }
            let vertex = actions[rng.gen_range(0..actions.len())];
            let outcome = env.step(&state, vertex);
            state = outcome.next_state;
            if outcome.terminal {
                break;
            }
        }
        state
    });
    let mut best: Option<ScheduleState> = None;
    for state in states {
        let replace = match &best {
            None => true,
            Some(incumbent) => better_solution(env, &state, incumbent),
        };
        if replace {
            best = Some(state);
        }
    }
    best.expect("at least one restart")
}
