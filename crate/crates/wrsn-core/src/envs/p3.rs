//! P3: restore k-coverage before deadlines at minimum traveling distance.

use super::{normalized_views, ChargingEnv, ScheduleState, StepOutcome, VertexView, Visit};
use crate::geometry::{build_subregions, table_after_charging, SubregionTable};
use crate::graph::ChargingGraph;
use crate::instances::{ProblemInstance, Variant};
use crate::point::Point;
use crate::Result;

pub struct P3Env {
    instance: ProblemInstance,
    graph: ChargingGraph,
    initial_table: SubregionTable,
    /// Deadline scale for feature normalization.
    max_deadline: f64,
}

impl P3Env {
    pub fn new(instance: ProblemInstance, graph: ChargingGraph) -> Result<Self> {
        let initial_table = build_subregions(&instance)?;
        let max_deadline = instance
            .nodes
            .iter()
            .filter_map(|n| n.deadline)
            .fold(1.0_f64, f64::max);
        Ok(P3Env {
            instance,
            graph,
            initial_table,
            max_deadline,
        })
    }

    pub fn initial_table(&self) -> &SubregionTable {
        &self.initial_table
    }

    /// Best deadline-feasible insertion position: the append position wins
    /// ties against interior positions, earliest index wins among interiors.
    /// Returns `(index, distance_delta)`.
    pub fn best_feasible_insertion(
        &self,
        state: &ScheduleState,
        vertex: usize,
    ) -> Option<(usize, f64)> {
        if state.infeasible || state.contains_vertex(vertex) {
            return None;
        }
        let depot = self.instance.charger.depot;
        let target = self.graph.position(&self.instance, vertex);
        let stops: Vec<Point> = state
            .visits
            .iter()
            .map(|v| self.graph.position(&self.instance, v.vertex))
            .collect();
        let order = state.order();
        let len = stops.len();

        let delta_at = |i: usize| -> f64 {
            let prev = if i == 0 { depot } else { stops[i - 1] };
            let next = if i == len { depot } else { stops[i] };
            prev.distance(target) + target.distance(next) - prev.distance(next)
        };
        let feasible_at = |i: usize| -> bool {
            let mut candidate = order.clone();
            candidate.insert(i, vertex);
            !self.replay_core(&candidate, false).infeasible
        };

        let mut best: Option<(usize, f64)> = None;
        // Append first, then interior positions left to right; only a
        // strictly smaller delta displaces the incumbent.
        if feasible_at(len) {
            best = Some((len, delta_at(len)));
        }
        for i in 0..len {
            let delta = delta_at(i);
            if best.map(|(_, d)| delta < d).unwrap_or(true) && feasible_at(i) {
                best = Some((i, delta));
            }
        }
        best
    }
}

impl P3Env {
    /// Charging-time recurrence over the order; the coverage table is only
    /// attached when asked for, since feasibility scans do not need it.
    fn replay_core(&self, order: &[usize], with_coverage: bool) -> ScheduleState {
        let mut state = ScheduleState::empty(self.instance.t0, None);
        let mut position = self.instance.charger.depot;
        let charger = &self.instance.charger;
        for &vertex in order {
            let node_id = match self.graph.node_of[vertex] {
                Some(id) => id,
                None => {
                    state.infeasible = true;
                    state.clock = f64::INFINITY;
                    break;
                }
            };
            let node = &self.instance.nodes[node_id];
            let leg = position.distance(node.position);
            let arrival = state.clock + leg / charger.speed;
            let deadline = self.instance.t0 + node.deadline.unwrap_or(0.0);
            if arrival > deadline {
                state.infeasible = true;
                state.clock = f64::INFINITY;
                break;
            }
            let residual = node.residual_at(arrival, self.instance.t0);
            let charge_energy = node.battery_capacity - residual;
            let charge_duration = charge_energy / charger.transfer_rate;
            state.travel_distance += leg;
            state.charge_energy_total += charge_energy;
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
        if with_coverage {
            state.coverage = Some(table_after_charging(
                &self.initial_table,
                &self.instance,
                &state.charged_nodes(),
            ));
        }
        state
    }
}

impl ChargingEnv for P3Env {
    fn variant(&self) -> Variant {
        Variant::P3KCoverage
    }

    fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    fn graph(&self) -> &ChargingGraph {
        &self.graph
    }

    fn initial_state(&self) -> ScheduleState {
        ScheduleState::empty(self.instance.t0, Some(self.initial_table.clone()))
    }

    /// Negated closed-tour distance; the problem minimizes travel.
    fn objective(&self, state: &ScheduleState) -> f64 {
        -self.closed_distance(state)
    }

    fn actions(&self, state: &ScheduleState) -> Vec<usize> {
        if state.infeasible || state.coverage_restored() {
            return Vec::new();
        }
        let start = self.graph.start.expect("P3 graph has v_0");
        let mut froms = vec![start];
        froms.extend(state.order());
        (0..self.graph.vertex_count())
            .filter(|&v| v != start && !state.contains_vertex(v))
            .filter(|&v| froms.iter().any(|&f| self.graph.has_edge(f, v)))
            .filter(|&v| self.best_feasible_insertion(state, v).is_some())
            .collect()
    }

    fn step(&self, state: &ScheduleState, vertex: usize) -> StepOutcome {
        match self.best_feasible_insertion(state, vertex) {
            None => StepOutcome {
                // No position keeps every charging time finite: the pick is
                // removed and the episode ends with the sentinel reward.
                next_state: state.clone(),
                reward: f64::NEG_INFINITY,
                terminal: true,
                rejected: true,
                insert_pos: None,
            },
            Some((index, delta)) => {
                let mut order = state.order();
                order.insert(index, vertex);
                let next_state = self.replay(&order);
                let terminal =
                    next_state.coverage_restored() || self.actions(&next_state).is_empty();
                StepOutcome {
                    next_state,
                    reward: -delta,
                    terminal,
                    rejected: false,
                    insert_pos: Some(index),
                }
            }
        }
    }

    fn replay(&self, order: &[usize]) -> ScheduleState {
        self.replay_core(order, true)
    }

    fn closed_distance(&self, state: &ScheduleState) -> f64 {
        let head = state.head_position(self.instance.charger.depot);
        state.travel_distance + head.distance(self.instance.charger.end_point)
    }

    fn vertex_views(&self, state: &ScheduleState) -> Vec<VertexView> {
        let clock = if state.clock.is_finite() {
            state.clock
        } else {
            self.instance.t0
        };
        let positions: Vec<Point> = (0..self.graph.vertex_count())
            .map(|v| self.graph.position(&self.instance, v))
            .collect();
        let extras: Vec<f64> = (0..self.graph.vertex_count())
            .map(|v| match self.graph.node_of[v] {
                None => 1.0,
                Some(id) => {
                    let deadline =
                        self.instance.t0 + self.instance.nodes[id].deadline.unwrap_or(0.0);
                    ((deadline - clock) / self.max_deadline).clamp(-1.0, 1.0)
                }
            })
            .collect();
        // Marginal tour growth if v were inserted at its best position; the
        // scan runs only for vertices actually reachable from the path.
        let diameter = self.instance.area.diameter().max(1e-12);
        let start = self.graph.start.expect("P3 graph has v_0");
        let mut froms = vec![start];
        froms.extend(state.order());
        let acquisition: Vec<f64> = (0..self.graph.vertex_count())
            .map(|v| {
                if self.graph.node_of[v].is_none() || state.contains_vertex(v) {
                    return 0.0;
                }
                if !froms.iter().any(|&f| self.graph.has_edge(f, v)) {
                    return 1.0;
                }
                match self.best_feasible_insertion(state, v) {
                    Some((_, delta)) => (delta / diameter).clamp(0.0, 1.0),
                    None => 1.0,
                }
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
        // Message passing runs over the undirected support of the deadline
        // graph: every directed edge contributes both directions once.
        let diameter = self.instance.area.diameter().max(1e-12);
        let count = self.graph.vertex_count();
        let mut edges = Vec::new();
        for a in 0..count {
            for b in (a + 1)..count {
                if self.graph.has_edge(a, b) || self.graph.has_edge(b, a) {
                    let w = self.graph.weight(&self.instance, a, b) / diameter;
                    edges.push((a, b, w));
                    edges.push((b, a, w));
                }
            }
        }
        edges
    }
}
