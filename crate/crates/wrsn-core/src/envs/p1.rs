//! P1: charge as many mobile sensors as possible within the timespan.

use super::{normalized_views, ChargingEnv, ScheduleState, StepOutcome, VertexView, Visit};
use crate::graph::{intercept, ChargingGraph};
use crate::instances::{ProblemInstance, Variant};
use crate::point::Point;
use crate::{Error, Result};

/// Default interception grid, seconds.
pub const DEFAULT_MEET_DT: f64 = 1.0;

pub struct P1Env {
    instance: ProblemInstance,
    graph: ChargingGraph,
    /// Candidate-step grid for the interception rule.
    meet_dt: f64,
    horizon: f64,
}

impl P1Env {
    pub fn new(instance: ProblemInstance, graph: ChargingGraph) -> Result<Self> {
        let timespan = instance
            .charger
            .timespan
            .ok_or_else(|| Error::Validation("P1 requires a timespan".into()))?;
        Ok(P1Env {
            horizon: instance.t0 + timespan,
            instance,
            graph,
            meet_dt: DEFAULT_MEET_DT,
        })
    }

    pub fn with_meet_dt(mut self, dt: f64) -> Self {
        self.meet_dt = dt;
        self
    }

    /// Energy still needed to reach the required level `(1-eps)*alpha*B`.
    fn charge_need(&self, node_id: usize) -> f64 {
        let node = &self.instance.nodes[node_id];
        let target =
            (1.0 - self.instance.epsilon_charge) * self.instance.alpha * node.battery_capacity;
        (target - node.residual).max(0.0)
    }

    /// Total charging time of the tour including the closing leg to the end
    /// point; this is what the timespan bounds.
    pub fn total_time(&self, state: &ScheduleState) -> f64 {
        let head = state.head_position(self.instance.charger.depot);
        let closing = head.distance(self.instance.charger.end_point) / self.instance.charger.speed;
        (state.clock - self.instance.t0) + closing
    }
}

impl ChargingEnv for P1Env {
    fn variant(&self) -> Variant {
        Variant::P1MobilePath
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

    fn objective(&self, state: &ScheduleState) -> f64 {
        state.visits.len() as f64
    }

    fn actions(&self, state: &ScheduleState) -> Vec<usize> {
        if state.infeasible {
            return Vec::new();
        }
        (0..self.graph.vertex_count())
            .filter(|&v| !state.contains_vertex(v))
            .collect()
    }

    fn step(&self, state: &ScheduleState, vertex: usize) -> StepOutcome {
        debug_assert!(!state.contains_vertex(vertex), "vertex visited twice");
        let mut order = state.order();
        order.push(vertex);
        let candidate = self.replay(&order);
        // Stop function: the whole tour, closing leg included, must fit the
        // timespan; otherwise the picked vertex is removed and the episode
        // ends.
        if candidate.infeasible || self.total_time(&candidate) > self.instance.charger.timespan.unwrap() {
            return StepOutcome {
                next_state: state.clone(),
                reward: 0.0,
                terminal: true,
                rejected: true,
                insert_pos: None,
            };
        }
        let terminal = self.actions(&candidate).is_empty();
        StepOutcome {
            next_state: candidate,
            reward: 1.0,
            terminal,
            rejected: false,
            insert_pos: Some(order.len() - 1),
        }
    }

    fn replay(&self, order: &[usize]) -> ScheduleState {
        let mut state = self.initial_state();
        let mut position = self.instance.charger.depot;
        for &vertex in order {
            let node_id = self.graph.node_of[vertex].expect("P1 graph has no start vertex");
            let meet = match intercept(
                &self.instance,
                position,
                state.clock,
                node_id,
                self.meet_dt,
                self.horizon,
            ) {
                Ok(Some(meet)) => meet,
                _ => {
                    state.infeasible = true;
                    state.clock = f64::INFINITY;
                    return state;
                }
            };
            let charge_energy = self.charge_need(node_id);
            let charge_duration = charge_energy / self.instance.charger.transfer_rate;
            state.travel_distance += meet.travel_distance;
            state.charge_energy_total += charge_energy;
            state.clock = meet.meet_time + charge_duration;
            state.visits.push(Visit {
                vertex,
                node: node_id,
                arrival: meet.meet_time,
                charge_duration,
                charge_energy,
                position: meet.meet_point,
                sojourn: meet.sojourn,
            });
            position = meet.meet_point;
        }
        state
    }

    fn closed_distance(&self, state: &ScheduleState) -> f64 {
        let head = state.head_position(self.instance.charger.depot);
        state.travel_distance + head.distance(self.instance.charger.end_point)
    }

    fn vertex_views(&self, state: &ScheduleState) -> Vec<VertexView> {
        let clock = if state.clock.is_finite() {
            state.clock.min(self.horizon)
        } else {
            self.horizon
        };
        let positions: Vec<Point> = (0..self.graph.vertex_count())
            .map(|v| {
                let id = self.graph.node_of[v].expect("sensor vertex");
                self.instance.nodes[id]
                    .position_at(clock)
                    .unwrap_or(self.instance.nodes[id].position)
            })
            .collect();
        let extras = vec![0.0; self.graph.vertex_count()];
        let timespan = self.instance.charger.timespan.unwrap();
        let head = state.head_position(self.instance.charger.depot);
        // Timespan fraction the tour would reach if v were charged next.
        let acquisition: Vec<f64> = (0..self.graph.vertex_count())
            .map(|v| {
                if state.contains_vertex(v) || state.infeasible {
                    return 0.0;
                }
                let id = self.graph.node_of[v].expect("sensor vertex");
                match intercept(&self.instance, head, state.clock, id, self.meet_dt, self.horizon)
                {
                    Ok(Some(meet)) => {
                        let charge =
                            self.charge_need(id) / self.instance.charger.transfer_rate;
                        let closing = meet
                            .meet_point
                            .distance(self.instance.charger.end_point)
                            / self.instance.charger.speed;
                        let total =
                            (meet.meet_time + charge - self.instance.t0) + closing;
                        (total / timespan / 2.0).clamp(0.0, 1.0)
                    }
                    _ => 1.0,
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

    fn edge_snapshot(&self, state: &ScheduleState) -> Vec<(usize, usize, f64)> {
        // Mobile nodes: weights move with the clock, so the snapshot is
        // recomputed from current positions every step.
        let clock = if state.clock.is_finite() {
            state.clock.min(self.horizon)
        } else {
            self.horizon
        };
        let diameter = self.instance.area.diameter().max(1e-12);
        let positions: Vec<Point> = (0..self.graph.vertex_count())
            .map(|v| {
                let id = self.graph.node_of[v].expect("sensor vertex");
                self.instance.nodes[id]
                    .position_at(clock)
                    .unwrap_or(self.instance.nodes[id].position)
            })
            .collect();
        let mut edges = Vec::new();
        for (a, b) in self.graph.edge_pairs() {
            let w = positions[a].distance(positions[b]) / diameter;
            edges.push((a, b, w));
            edges.push((b, a, w));
        }
        edges
    }
}
