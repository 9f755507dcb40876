//! P2: maximize the charging payoff within the charger's energy budget.

use super::{normalized_views, ChargingEnv, ScheduleState, StepOutcome, VertexView, Visit};
use crate::graph::ChargingGraph;
use crate::instances::{ProblemInstance, Variant};
use crate::point::Point;

pub struct P2Env {
    instance: ProblemInstance,
    graph: ChargingGraph,
    budget: f64,
}

impl P2Env {
    pub fn new(instance: ProblemInstance, graph: ChargingGraph) -> Self {
        let budget = instance.charger.energy_capacity.unwrap_or(f64::INFINITY);
        P2Env {
            instance,
            graph,
            budget,
        }
    }

    /// Energy the charger spends: charging to full plus travel for the
    /// closed tour (the charger returns to the depot).
    pub fn budget_used(&self, state: &ScheduleState) -> f64 {
        state.charge_energy_total + self.closed_distance(state) * self.instance.charger.travel_energy
    }

    /// Best insertion position by travel-energy delta, ties to the earliest
    /// index. Returns `(index, distance_delta)`.
    fn best_insertion(&self, state: &ScheduleState, vertex: usize) -> (usize, f64) {
        let depot = self.instance.charger.depot;
        let target = self.graph.position(&self.instance, vertex);
        let stops: Vec<Point> = state
            .visits
            .iter()
            .map(|v| self.graph.position(&self.instance, v.vertex))
            .collect();
        let mut best = (0, f64::INFINITY);
        for i in 0..=stops.len() {
            let prev = if i == 0 { depot } else { stops[i - 1] };
            let next = if i == stops.len() { depot } else { stops[i] };
            let delta = prev.distance(target) + target.distance(next) - prev.distance(next);
            if delta < best.1 {
                best = (i, delta);
            }
        }
        best
    }
}

impl ChargingEnv for P2Env {
    fn variant(&self) -> Variant {
        Variant::P2FullyChargingReward
    }

    fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    fn graph(&self) -> &ChargingGraph {
        &self.graph
    }

    fn initial_state(&self) -> ScheduleState {
        ScheduleState::empty(self.instance.t0, None)
    }

    /// Total energy charged into sensors. Rewards are the per-node charge
    /// energies, so episode rewards telescope to this exactly; the prize
    /// sum it is proportional to is tracked on the state for reporting.
    fn objective(&self, state: &ScheduleState) -> f64 {
        state.charge_energy_total
    }

    fn actions(&self, state: &ScheduleState) -> Vec<usize> {
        (0..self.graph.vertex_count())
            .filter(|&v| !state.contains_vertex(v))
            .collect()
    }

    fn step(&self, state: &ScheduleState, vertex: usize) -> StepOutcome {
        debug_assert!(!state.contains_vertex(vertex), "vertex visited twice");
        let (index, _) = self.best_insertion(state, vertex);
        let mut order = state.order();
        order.insert(index, vertex);
        let candidate = self.replay(&order);
        // Stop function: charging plus travel energy must fit the budget.
        if self.budget_used(&candidate) > self.budget {
            return StepOutcome {
                next_state: state.clone(),
                reward: 0.0,
                terminal: true,
                rejected: true,
                insert_pos: None,
            };
        }
        let node = &self.instance.nodes[self.graph.node_of[vertex].expect("sensor vertex")];
        let reward = node.battery_capacity - node.residual;
        let terminal = self.actions(&candidate).is_empty();
        StepOutcome {
            next_state: candidate,
            reward,
            terminal,
            rejected: false,
            insert_pos: Some(index),
        }
    }

    fn replay(&self, order: &[usize]) -> ScheduleState {
        let mut state = self.initial_state();
        let mut position = self.instance.charger.depot;
        for &vertex in order {
            let node_id = self.graph.node_of[vertex].expect("P2 graph has no start vertex");
            let node = &self.instance.nodes[node_id];
            let leg = position.distance(node.position);
            let arrival = state.clock + leg / self.instance.charger.speed;
            let charge_energy = node.battery_capacity - node.residual;
            let charge_duration = charge_energy / self.instance.charger.transfer_rate;
            state.travel_distance += leg;
            state.charge_energy_total += charge_energy;
            state.prize_total += u64::from(node.prize.unwrap_or(0));
            state.clock = arrival + charge_duration;
            state.visits.push(Visit {
                vertex,
                node: node_id,
                arrival,
                charge_duration,
                charge_energy,
                position: node.position,
                sojourn: 0.0,
            });
            position = node.position;
        }
        state
    }

    fn closed_distance(&self, state: &ScheduleState) -> f64 {
        let head = state.head_position(self.instance.charger.depot);
        state.travel_distance + head.distance(self.instance.charger.end_point)
    }

    fn vertex_views(&self, state: &ScheduleState) -> Vec<VertexView> {
        let n = self.instance.n();
        let cap = ((n * n) as f64).max(1.0);
        let positions: Vec<Point> = (0..self.graph.vertex_count())
            .map(|v| self.graph.position(&self.instance, v))
            .collect();
        let extras: Vec<f64> = (0..self.graph.vertex_count())
            .map(|v| {
                let id = self.graph.node_of[v].expect("sensor vertex");
                f64::from(self.instance.nodes[id].prize.unwrap_or(0)) / cap
            })
            .collect();
        // Budget fraction the tour would reach if v were inserted next.
        let used = self.budget_used(state);
        let acquisition: Vec<f64> = (0..self.graph.vertex_count())
            .map(|v| {
                if state.contains_vertex(v) {
                    return 0.0;
                }
                let id = self.graph.node_of[v].expect("sensor vertex");
                let node = &self.instance.nodes[id];
                let (_, delta) = self.best_insertion(state, v);
                let after = used
                    + (node.battery_capacity - node.residual)
                    + delta * self.instance.charger.travel_energy;
                (after / self.budget / 2.0).clamp(0.0, 1.0)
            })
            .collect();
        normalized_views(
            &self.instance,
            &self.graph,
            state,
            &positions,
            &extras,
            &acquisition,
        )
    }

    fn edge_snapshot(&self, _state: &ScheduleState) -> Vec<(usize, usize, f64)> {
        let diameter = self.instance.area.diameter().max(1e-12);
        let mut edges = Vec::new();
        for (a, b) in self.graph.edge_pairs() {
            let w = self.graph.weight(&self.instance, a, b) / diameter;
            edges.push((a, b, w));
            edges.push((b, a, w));
        }
        edges
    }
}
