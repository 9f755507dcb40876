//! Exhaustive search oracles.

use crate::envs::{ChargingEnv, ScheduleState};
use crate::geometry::build_subregions;
use crate::graph::{build_time_expanded_dag, TimeExpandedDag};
use crate::instances::{ProblemInstance, Variant};
use crate::{Error, Result};

/// Refuse exhaustive search above this many candidate vertices.
pub const DEFAULT_BRUTE_LIMIT: usize = 10;

/// Depth-first search over visit orders with feasibility pruning; returns
/// the objective-optimal feasible state. For P3 the search uses the
/// continuous charging-time recurrence and returns the minimum-distance
/// coverage-restoring tour.
pub fn brute_force(env: &dyn ChargingEnv, max_n: usize) -> Result<ScheduleState> {
    let candidates: Vec<usize> = match env.variant() {
        Variant::P3KCoverage => {
            let graph = env.graph();
            (0..graph.vertex_count())
                .filter(|&v| match graph.node_of[v] {
                    Some(id) => env.instance().is_requester(&env.instance().nodes[id]),
                    None => false,
                })
                .collect()
        }
        _ => (0..env.graph().vertex_count()).collect(),
    };
    if candidates.len() > max_n {
        return Err(Error::Validation(format!(
            "brute force refused: {} candidates exceed limit {max_n}",
            candidates.len()
        )));
    }
    let mut search = OrderSearch {
        env,
        best: env.initial_state(),
        p3: env.variant() == Variant::P3KCoverage,
    };
    let mut order = Vec::with_capacity(candidates.len());
    let mut used = vec![false; candidates.len()];
    search.recurse(&candidates, &mut order, &mut used);
    Ok(search.best)
}

struct OrderSearch<'a> {
    env: &'a dyn ChargingEnv,
    best: ScheduleState,
    p3: bool,
}

impl OrderSearch<'_> {
    fn recurse(&mut self, candidates: &[usize], order: &mut Vec<usize>, used: &mut Vec<bool>) {
        let state = self.env.replay(order);
        if state.infeasible {
            return; // extensions keep the violated prefix
        }
        if self.p3 {
            // Distance only grows along a branch: bound against the incumbent.
            if self.best.coverage_restored()
                && self.env.closed_distance(&state) >= self.env.closed_distance(&self.best)
            {
                return;
            }
            if state.coverage_restored() {
                if !self.best.coverage_restored()
                    || self.env.closed_distance(&state) < self.env.closed_distance(&self.best)
                {
                    self.best = state;
                }
                return; // visiting more only adds distance
            }
        } else {
            let feasible = match self.env.variant() {
                Variant::P1MobilePath => {
                    let timespan = self.env.instance().charger.timespan.unwrap();
                    let head = state.head_position(self.env.instance().charger.depot);
                    let closing =
                        head.distance(self.env.instance().charger.end_point)
                            / self.env.instance().charger.speed;
                    (state.clock - self.env.instance().t0) + closing <= timespan
                }
                Variant::P2FullyChargingReward => {
                    let budget = self.env.instance().charger.energy_capacity.unwrap();
                    let xi = self.env.instance().charger.travel_energy;
                    state.charge_energy_total + self.env.closed_distance(&state) * xi <= budget
                }
                Variant::P3KCoverage => unreachable!(),
            };
            if !feasible {
                return; // budget/timespan monotone in appends
            }
            if self.env.objective(&state) > self.env.objective(&self.best) {
                self.best = state;
            }
        }
        for i in 0..candidates.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            order.push(candidates[i]);
            self.recurse(candidates, order, used);
            order.pop();
            used[i] = false;
        }
    }
}

/// Minimum-distance coverage-restoring path on the time-expanded DAG, by
/// exhaustive search over clique-distinct DAG walks. Independent oracle for
/// the color-coding program: same graph, same discretized times, no
/// color-set machinery. Returns the optimal closed-tour distance, or `None`
/// when no walk restores coverage.
pub fn brute_force_dag(instance: &ProblemInstance, dt: f64, max_n: usize) -> Result<Option<f64>> {
    let requesters = instance.requesters();
    if requesters.len() > max_n {
        return Err(Error::Validation(format!(
            "brute force refused: {} requesters exceed limit {max_n}",
            requesters.len()
        )));
    }
    let table = build_subregions(instance)?;
    if table.min_cover() < instance.coverage_k.unwrap_or(1) as usize {
        return Ok(None);
    }
    let dag = build_time_expanded_dag(instance, dt)?;
    let mut search = DagSearch {
        instance,
        dag: &dag,
        touched: requesters
            .iter()
            .map(|&id| table.touched_by(id))
            .collect(),
        requester_index: {
            let mut map = vec![usize::MAX; instance.n()];
            for (i, &id) in requesters.iter().enumerate() {
                map[id] = i;
            }
            map
        },
        best: if table.all_zero() { Some(0.0) } else { None },
    };
    let mut entries = table.entries.clone();
    let mut visited = vec![false; requesters.len()];
    search.walk(dag.start, 0.0, &mut entries, &mut visited);
    Ok(search.best)
}

struct DagSearch<'a> {
    instance: &'a ProblemInstance,
    dag: &'a TimeExpandedDag,
    /// Subregion indices each requester's disk contains.
    touched: Vec<Vec<usize>>,
    requester_index: Vec<usize>,
    best: Option<f64>,
}

impl DagSearch<'_> {
    fn position(&self, vertex: usize) -> crate::point::Point {
        match self.dag.clique_of(vertex) {
            Some(id) => self.instance.nodes[id].position,
            None => self.instance.charger.depot,
        }
    }

    fn walk(
        &mut self,
        vertex: usize,
        distance: f64,
        entries: &mut Vec<u32>,
        visited: &mut Vec<bool>,
    ) {
        if let Some(best) = self.best {
            // Path distance only grows; the closing leg is non-negative.
            if distance >= best {
                return;
            }
        }
        if entries.iter().all(|&t| t == 0) && self.dag.clique_of(vertex).is_some() {
            let total = distance + self.position(vertex).distance(self.instance.charger.depot);
            if self.best.map(|b| total < b).unwrap_or(true) {
                self.best = Some(total);
            }
            return; // extensions only add distance
        }
        for &next in self.dag.out_neighbors(vertex) {
            let node = self.dag.clique_of(next).expect("targets are sensor copies");
            let r = self.requester_index[node];
            if visited[r] {
                continue;
            }
            visited[r] = true;
            let saved = entries.clone();
            for &i in &self.touched[r] {
                entries[i] = entries[i].saturating_sub(1);
            }
            let leg = self.position(vertex).distance(self.position(next));
            self.walk(next, distance + leg, entries, visited);
            *entries = saved;
            visited[r] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make_env;
    use crate::instances::{generate_instance, GenParams};

    #[test]
    fn refuses_oversized_instances() {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        let inst = generate_instance(Variant::P2FullyChargingReward, 60, &params, 1).unwrap();
        let env = make_env(inst).unwrap();
        assert!(matches!(
            brute_force(env.as_ref(), 10),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn p2_brute_force_beats_heuristics() {
        let mut params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        params.area = crate::point::Rect::square(400.0);
        for seed in [2, 5, 8] {
            let inst =
                generate_instance(Variant::P2FullyChargingReward, 30, &params, seed).unwrap();
            if inst.requesters().len() > 8 {
                continue;
            }
            let env = make_env(inst).unwrap();
            let optimal = brute_force(env.as_ref(), 8).unwrap();
            let greedy = super::super::greedy_solve(env.as_ref());
            let random = super::super::random_solve(env.as_ref(), seed, 50);
            assert!(env.objective(&optimal) >= env.objective(&greedy) - 1e-9);
            assert!(env.objective(&optimal) >= env.objective(&random) - 1e-9);
        }
    }

    #[test]
    fn single_feasible_node_is_the_tour() {
        let mut params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        params.area = crate::point::Rect::square(100.0);
        let inst = generate_instance(Variant::P2FullyChargingReward, 8, &params, 12).unwrap();
        let requesters = inst.requesters();
        if requesters.is_empty() {
            return;
        }
        let env = make_env(inst).unwrap();
        let best = brute_force(env.as_ref(), 8).unwrap();
        assert!(!best.visits.is_empty(), "some node should fit the budget");
    }

    #[test]
    fn p3_brute_force_matches_second_enumeration() {
        use crate::instances::{Charger, SensorNode};
        use crate::point::{Point, Rect};
        // Hand-built: blanket disks, k=1, all requesting with roomy
        // deadlines; optimum must match a plain permutation scan.
        let area = Rect::square(60.0);
        let mk = |id: usize, x: f64, y: f64, residual: f64| {
            let mut node = SensorNode::stationary(id, Point::new(x, y), 10_800.0, residual);
            node.sensing_radius = Some(150.0);
            node.consumption_rate = 0.5;
            node.deadline = Some(residual / 0.5);
            node
        };
        let instance = ProblemInstance {
            variant: Variant::P3KCoverage,
            nodes: vec![
                mk(0, 10.0, 10.0, 4_000.0),
                mk(1, 50.0, 12.0, 3_500.0),
                mk(2, 25.0, 50.0, 4_500.0),
                mk(3, 40.0, 35.0, 3_800.0),
            ],
            charger: Charger {
                depot: area.center(),
                end_point: area.center(),
                speed: 5.0,
                transfer_rate: 20.0,
                travel_energy: 600.0,
                energy_capacity: None,
                timespan: None,
            },
            alpha: 0.9,
            epsilon_charge: 0.0,
            coverage_k: Some(1),
            area,
            t0: 0.0,
            rng_seed: 0,
        };
        let env = crate::envs::make_env(instance).unwrap();
        let best = brute_force(env.as_ref(), 8).unwrap();
        assert!(best.coverage_restored());

        // Second enumeration: recurse over raw permutations, no pruning.
        fn enumerate(
            env: &dyn ChargingEnv,
            order: &mut Vec<usize>,
            remaining: &mut Vec<usize>,
            best: &mut Option<f64>,
        ) {
            let state = env.replay(order);
            if !state.infeasible && state.coverage_restored() {
                let d = env.closed_distance(&state);
                if best.map(|b| d < b).unwrap_or(true) {
                    *best = Some(d);
                }
            }
            for i in 0..remaining.len() {
                let v = remaining.remove(i);
                order.push(v);
                enumerate(env, order, remaining, best);
                order.pop();
                remaining.insert(i, v);
            }
        }
        let mut order = Vec::new();
        let mut remaining: Vec<usize> = (1..=4).collect();
        let mut oracle = None;
        enumerate(env.as_ref(), &mut order, &mut remaining, &mut oracle);
        let oracle = oracle.expect("some permutation restores coverage");
        assert!((env.closed_distance(&best) - oracle).abs() < 1e-9);
    }

    #[test]
    fn empty_request_set_gives_empty_tour() {
        let mut params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        params.alpha = 1e-9; // nobody requests
        let inst = generate_instance(Variant::P2FullyChargingReward, 10, &params, 4).unwrap();
        assert!(inst.requesters().is_empty());
        let env = make_env(inst).unwrap();
        let best = brute_force(env.as_ref(), 10).unwrap();
        assert!(best.visits.is_empty());
        assert_eq!(env.objective(&best), 0.0);
    }
}
