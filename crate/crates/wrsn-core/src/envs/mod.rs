//! The three scheduling environments: shared tour bookkeeping plus
//! per-problem objective, insertion, stop, action, and reward rules.
//!
//! States are value-semantic; [`ChargingEnv::step`] returns a fresh state and
//! never mutates its input, so episodes can be branched or replayed freely.
//! Every state a step produces is rebuilt from its visit order through the
//! same replay path an auditor would use, which keeps cached times exact.

mod p1;
mod p2;
mod p3;

pub use p1::P1Env;
pub use p2::P2Env;
pub use p3::P3Env;

use crate::geometry::SubregionTable;
use crate::graph::{build_graph, ChargingGraph};
use crate::instances::{ProblemInstance, Variant};
use crate::point::Point;
use crate::{NodeId, Result};

/// One charging stop of a tour.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    /// Graph vertex index.
    pub vertex: usize,
    pub node: NodeId,
    /// Charging begin time (absolute seconds).
    pub arrival: f64,
    pub charge_duration: f64,
    pub charge_energy: f64,
    /// Where the charge happened (interception point for mobile nodes).
    pub position: Point,
    /// Waiting time spent before this charge (P1 interception slack).
    pub sojourn: f64,
}

/// Ordered partial tour with cached times and totals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleState {
    pub visits: Vec<Visit>,
    /// Depot to last visit, sum of consecutive legs (no closing leg).
    pub travel_distance: f64,
    pub charge_energy_total: f64,
    pub prize_total: u64,
    /// Time when the last charge completes; `t0` for the empty tour.
    pub clock: f64,
    /// Deficiency table after the charges so far (P3 only).
    pub coverage: Option<SubregionTable>,
    /// Set when the visit order violates a deadline (the `inf` sentinel).
    pub infeasible: bool,
}

impl ScheduleState {
    pub fn empty(t0: f64, coverage: Option<SubregionTable>) -> Self {
        ScheduleState {
            visits: Vec::new(),
            travel_distance: 0.0,
            charge_energy_total: 0.0,
            prize_total: 0,
            clock: t0,
            coverage,
            infeasible: false,
        }
    }

    /// Visit order as graph vertex indices.
    pub fn order(&self) -> Vec<usize> {
        self.visits.iter().map(|v| v.vertex).collect()
    }

    pub fn charged_nodes(&self) -> Vec<NodeId> {
        self.visits.iter().map(|v| v.node).collect()
    }

    pub fn contains_vertex(&self, vertex: usize) -> bool {
        self.visits.iter().any(|v| v.vertex == vertex)
    }

    /// Position of the tour head: last charging position, else `fallback`.
    pub fn head_position(&self, fallback: Point) -> Point {
        self.visits.last().map(|v| v.position).unwrap_or(fallback)
    }

    /// True when the coverage table reports no remaining deficiency.
    pub fn coverage_restored(&self) -> bool {
        self.coverage.as_ref().map(|t| t.all_zero()).unwrap_or(false)
    }

}

/// Per-step episode recorder with a CSV dump.
#[derive(Debug, Clone, Default)]
pub struct EpisodeTrace {
    rows: Vec<String>,
}

impl EpisodeTrace {
    pub fn new() -> Self {
        EpisodeTrace::default()
    }

    /// Record one step: the picked vertex, the outcome, and the state it led
    /// to (the prior state when the pick was rejected).
    pub fn record(&mut self, vertex: usize, outcome: &StepOutcome) {
        let state = &outcome.next_state;
        self.rows.push(format!(
            "{},{},{},{},{},{},{}",
            self.rows.len(),
            vertex,
            outcome
                .insert_pos
                .map(|i| i.to_string())
                .unwrap_or_else(|| "rejected".into()),
            outcome.reward,
            state.clock,
            state.travel_distance,
            state.charge_energy_total,
        ));
    }

    /// `step, vertex, insert_pos, reward, clock_s, dist_m, energy_J`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,vertex,insert_pos,reward,clock_s,dist_m,energy_J\n");
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: ScheduleState,
    /// Objective delta of the accepted transition; `0` on budget rejection
    /// and `-inf` on a P3 deadline-infeasible pick.
    pub reward: f64,
    pub terminal: bool,
    /// The picked vertex was removed by the stop function.
    pub rejected: bool,
    /// Where the vertex was placed in the visit list; `None` on rejection.
    pub insert_pos: Option<usize>,
}

/// Per-vertex embedding inputs derived from the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexView {
    /// `x_v`: vertex already part of the partial solution.
    pub selected: bool,
    /// Position normalized into `[0, 1]^2` over the area.
    pub pos_frac: (f64, f64),
    /// Residual energy as a fraction of capacity.
    pub residual_frac: f64,
    /// Problem-specific channel: deadline slack (P3), prize (P2), zero (P1).
    pub extra: f64,
    /// Distance to the tour head over the area diameter, clamped to 1.
    pub head_dist_frac: f64,
    /// Stop-function headroom were this vertex taken next: the resulting
    /// budget/timespan fraction (P1/P2, so > 0.5 after clamping to [0, 2]/2
    /// means the pick busts the constraint) or the insertion-delta distance
    /// fraction (P3). Selected vertices report 0.
    pub acquisition: f64,
}

/// Common interface of the three environments.
pub trait ChargingEnv: Send + Sync {
    fn variant(&self) -> Variant;
    fn instance(&self) -> &ProblemInstance;
    fn graph(&self) -> &ChargingGraph;

    fn initial_state(&self) -> ScheduleState;

    /// Objective `f` of a partial solution: charged-node count (P1), total
    /// charged energy (P2), negated closed-tour distance (P3).
    fn objective(&self, state: &ScheduleState) -> f64;

    /// Candidate vertices at this state; empty means the episode must end.
    fn actions(&self, state: &ScheduleState) -> Vec<usize>;

    /// Insert `vertex`, run the stop function, and report the transition.
    fn step(&self, state: &ScheduleState, vertex: usize) -> StepOutcome;

    /// Rebuild a state from scratch for a visit order (vertex indices).
    fn replay(&self, order: &[usize]) -> ScheduleState;

    /// Tour length including the closing leg to the configured end point.
    fn closed_distance(&self, state: &ScheduleState) -> f64;

    /// Embedding inputs for every graph vertex at this state.
    fn vertex_views(&self, state: &ScheduleState) -> Vec<VertexView>;

    /// Directed message-passing edges `(src, dst, weight_frac)` with weights
    /// normalized by the area diameter; P1 re-evaluates positions at the
    /// state clock.
    fn edge_snapshot(&self, state: &ScheduleState) -> Vec<(usize, usize, f64)>;
}

/// Construct the environment for an instance.
pub fn make_env(instance: ProblemInstance) -> Result<Box<dyn ChargingEnv>> {
    instance.validate()?;
    let graph = build_graph(&instance)?;
    Ok(match instance.variant {
        Variant::P1MobilePath => Box::new(P1Env::new(instance, graph)?),
        Variant::P2FullyChargingReward => Box::new(P2Env::new(instance, graph)),
        Variant::P3KCoverage => Box::new(P3Env::new(instance, graph)?),
    })
}

/// Replay a visit order on a fresh environment of the instance.
pub fn replay_schedule(instance: &ProblemInstance, order: &[usize]) -> Result<ScheduleState> {
    let env = make_env(instance.clone())?;
    Ok(env.replay(order))
}


pub(crate) fn normalized_views(
    instance: &ProblemInstance,
    graph: &ChargingGraph,
    state: &ScheduleState,
    clock_positions: &[Point],
    extra: &[f64],
    acquisition: &[f64],
) -> Vec<VertexView> {
    let area = instance.area;
    let diameter = area.diameter().max(1e-12);
    let head = state.head_position(instance.charger.depot);
    (0..graph.vertex_count())
        .map(|v| {
            let pos = clock_positions[v];
            let selected = match graph.node_of[v] {
                Some(_) => state.contains_vertex(v),
                None => true, // start vertex is always part of the solution
            };
            let residual_frac = match graph.node_of[v] {
                Some(id) => {
                    let node = &instance.nodes[id];
                    (node.residual / node.battery_capacity).clamp(0.0, 1.0)
                }
                None => 1.0,
            };
            VertexView {
                selected,
                pos_frac: (
                    ((pos.x - area.x0) / area.width().max(1e-12)).clamp(0.0, 1.0),
                    ((pos.y - area.y0) / area.height().max(1e-12)).clamp(0.0, 1.0),
                ),
                residual_frac,
                extra: extra[v],
                head_dist_frac: (pos.distance(head) / diameter).clamp(0.0, 1.0),
                acquisition: acquisition[v].clamp(0.0, 1.0),
            }
        })
        .collect()
}
