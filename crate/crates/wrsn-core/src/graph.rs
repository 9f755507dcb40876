//! Charging graphs: the per-problem weighted graphs the environments and
//! solvers run on, and the time-expanded DAG behind the exact P3 solver.

use crate::instances::{ProblemInstance, Variant};
use crate::point::Point;
use crate::{Error, NodeId, Result};

/// Weighted graph over charging-request vertices.
///
/// P1/P2 graphs are complete and undirected over the requesting nodes; edge
/// weights are Euclidean distances (P1 weights move with the nodes and are
/// evaluated lazily). The P3 graph is directed over all sensor nodes plus an
/// explicit start vertex, with an edge `i -> j` only when charging `i` to
/// full and driving over cannot already violate `j`'s deadline:
/// `(B - B_i(t0))/r_c + d_ij/s <= D_j`.
#[derive(Debug, Clone)]
pub struct ChargingGraph {
    pub variant: Variant,
    pub directed: bool,
    /// Vertex -> sensor node id; `None` marks the start vertex `v_0`.
    pub node_of: Vec<Option<NodeId>>,
    /// Index of `v_0` when the graph carries one (P3).
    pub start: Option<usize>,
    out_edges: Vec<Vec<usize>>,
}

impl ChargingGraph {
    pub fn vertex_count(&self) -> usize {
        self.node_of.len()
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.out_edges[a].binary_search(&b).is_ok()
    }

    /// Vertex position at `t0` (depot for the start vertex).
    pub fn position(&self, instance: &ProblemInstance, v: usize) -> Point {
        match self.node_of[v] {
            Some(id) => instance.nodes[id].position,
            None => instance.charger.depot,
        }
    }

    /// Deadline as a duration from `t0`; `None` never expires (start vertex).
    pub fn deadline_of(&self, instance: &ProblemInstance, v: usize) -> Option<f64> {
        match self.node_of[v] {
            None => None,
            Some(id) => {
                let node = &instance.nodes[id];
                // Nodes that sent no request must not be visited: deadline 0.
                Some(node.deadline.unwrap_or(0.0))
            }
        }
    }

    /// Static edge weight: Euclidean distance between deployment positions.
    pub fn weight(&self, instance: &ProblemInstance, a: usize, b: usize) -> f64 {
        self.position(instance, a)
            .distance(self.position(instance, b))
    }

    /// Directed edges as vertex-index pairs (undirected edges appear once).
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, neighbors) in self.out_edges.iter().enumerate() {
            for &b in neighbors {
                if self.directed || a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// CSV dump: `src, dst, weight_m`.
    pub fn to_csv(&self, instance: &ProblemInstance) -> String {
        let mut out = String::from("src,dst,weight_m\n");
        for (a, b) in self.edge_pairs() {
            out.push_str(&format!("{},{},{}\n", a, b, self.weight(instance, a, b)));
        }
        out
    }
}

/// Build the per-problem charging graph.
pub fn build_graph(instance: &ProblemInstance) -> Result<ChargingGraph> {
    instance.validate()?;
    match instance.variant {
        Variant::P1MobilePath | Variant::P2FullyChargingReward => {
            let requesters = instance.requesters();
            let m = requesters.len();
            let out_edges = (0..m)
                .map(|i| (0..m).filter(|&j| j != i).collect())
                .collect();
            Ok(ChargingGraph {
                variant: instance.variant,
                directed: false,
                node_of: requesters.into_iter().map(Some).collect(),
                start: None,
                out_edges,
            })
        }
        Variant::P3KCoverage => {
            let mut node_of: Vec<Option<NodeId>> = vec![None];
            node_of.extend(instance.nodes.iter().map(|n| Some(n.id)));
            let graph_stub = ChargingGraph {
                variant: instance.variant,
                directed: true,
                node_of,
                start: Some(0),
                out_edges: Vec::new(),
            };
            let count = graph_stub.vertex_count();
            let mut out_edges = vec![Vec::new(); count];
            for a in 0..count {
                for b in 0..count {
                    if a != b && p3_edge_allowed(instance, &graph_stub, a, b) {
                        out_edges[a].push(b);
                    }
                }
            }
            Ok(ChargingGraph {
                out_edges,
                ..graph_stub
            })
        }
    }
}

/// P3 edge test using residuals at departure time.
fn p3_edge_allowed(instance: &ProblemInstance, graph: &ChargingGraph, a: usize, b: usize) -> bool {
    let Some(deadline_b) = graph.deadline_of(instance, b) else {
        return true; // start vertex never expires
    };
    let charge_time = match graph.node_of[a] {
        Some(id) => {
            let node = &instance.nodes[id];
            (node.battery_capacity - node.residual) / instance.charger.transfer_rate
        }
        None => 0.0,
    };
    let travel_time = graph.weight(instance, a, b) / instance.charger.speed;
    charge_time + travel_time <= deadline_b
}

/// Interception of a mobile node per the P1 meeting rule: the charger leaves
/// `from` at `clock` and meets node `target` at the earliest grid time
/// `t_k = t0 + k*dt` whose position it can reach in time, waiting out any
/// slack as sojourn time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interception {
    pub meet_time: f64,
    pub meet_point: Point,
    pub travel_distance: f64,
    pub sojourn: f64,
}

pub fn intercept(
    instance: &ProblemInstance,
    from: Point,
    clock: f64,
    target: NodeId,
    dt: f64,
    horizon: f64,
) -> Result<Option<Interception>> {
    if dt <= 0.0 {
        return Err(Error::Validation(
            "interception step must be positive".into(),
        ));
    }
    let node = &instance.nodes[target];
    let speed = instance.charger.speed;
    let first_step = (((clock - instance.t0) / dt).ceil()).max(0.0) as u64;
    let mut step = first_step;
    loop {
        let t_k = instance.t0 + (step as f64) * dt;
        if t_k > horizon + 1e-9 {
            return Ok(None);
        }
        let meet_point = node.position_at(t_k)?;
        let travel_distance = from.distance(meet_point);
        let travel_time = travel_distance / speed;
        if travel_time <= t_k - clock + 1e-12 {
            return Ok(Some(Interception {
                meet_time: t_k,
                meet_point,
                travel_distance,
                sojourn: ((t_k - clock) - travel_time).max(0.0),
            }));
        }
        step += 1;
    }
}

/// Lazily evaluated P1 edge weight: distance from `v_i`'s position at `t`
/// to `v_j`'s position at the charger's earliest feasible arrival step.
pub fn dynamic_weight(
    instance: &ProblemInstance,
    graph: &ChargingGraph,
    v_i: usize,
    v_j: usize,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let horizon = instance.t0 + instance.charger.timespan.unwrap_or(f64::INFINITY);
    let from = match graph.node_of[v_i] {
        Some(id) => instance.nodes[id].position_at(t)?,
        None => instance.charger.depot,
    };
    let target = graph.node_of[v_j]
        .ok_or_else(|| Error::Validation("dynamic weight target must be a sensor vertex".into()))?;
    match intercept(instance, from, t, target, dt, horizon)? {
        Some(meet) => Ok(meet.travel_distance),
        None => Err(Error::Infeasible(format!(
            "node {target} cannot be intercepted before the horizon"
        ))),
    }
}

/// Vertex of the time-expanded DAG: one sensor at one time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagVertex {
    /// `None` is the start vertex `v_0`.
    pub node: Option<NodeId>,
    pub step: usize,
    /// Absolute time `t0 + step * dt`.
    pub time: f64,
}

/// Time-expanded DAG over the requesting nodes of a P3 instance.
#[derive(Debug, Clone)]
pub struct TimeExpandedDag {
    pub dt: f64,
    pub vertices: Vec<DagVertex>,
    /// Index of `v_0`, always 0.
    pub start: usize,
    out_edges: Vec<Vec<usize>>,
    /// Vertices in a topological order (time-sorted; valid because every
    /// edge strictly increases time).
    pub topo_order: Vec<usize>,
}

impl TimeExpandedDag {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    /// Sensor id the vertex belongs to; all time copies of one sensor form
    /// its clique.
    pub fn clique_of(&self, v: usize) -> Option<NodeId> {
        self.vertices[v].node
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    /// CSV dump: `src_node, src_t, dst_node, dst_t` (start vertex as -1).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("src_node,src_t,dst_node,dst_t\n");
        for (a, neighbors) in self.out_edges.iter().enumerate() {
            let va = self.vertices[a];
            for &b in neighbors {
                let vb = self.vertices[b];
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    va.node.map(|n| n as i64).unwrap_or(-1),
                    va.time,
                    vb.node.map(|n| n as i64).unwrap_or(-1),
                    vb.time,
                ));
            }
        }
        out
    }
}

/// Arrival time when leaving a source DAG vertex for node `to`: charge the
/// source to full at its extrapolated residual, then travel.
pub fn dag_arrival_time(
    instance: &ProblemInstance,
    from_node: Option<NodeId>,
    from_time: f64,
    to: NodeId,
) -> f64 {
    let charger = &instance.charger;
    match from_node {
        None => {
            let d = charger.depot.distance(instance.nodes[to].position);
            from_time + d / charger.speed
        }
        Some(src) => {
            let node = &instance.nodes[src];
            let residual = node.residual_at(from_time, instance.t0);
            let charge_time = (node.battery_capacity - residual) / charger.transfer_rate;
            let d = node.position.distance(instance.nodes[to].position);
            from_time + charge_time + d / charger.speed
        }
    }
}

/// Build the time-expanded DAG with time unit `dt`.
pub fn build_time_expanded_dag(instance: &ProblemInstance, dt: f64) -> Result<TimeExpandedDag> {
    if instance.variant != Variant::P3KCoverage {
        return Err(Error::Validation(
            "time-expanded DAG is defined for P3 instances".into(),
        ));
    }
    if dt <= 0.0 {
        return Err(Error::Validation("dt must be positive".into()));
    }
    let requesters = instance.requesters();

    let mut vertices = vec![DagVertex {
        node: None,
        step: 0,
        time: instance.t0,
    }];
    // first_vertex[r] indexes v_r(t_r^0); a requester's copies are contiguous.
    let mut first_vertex = Vec::with_capacity(requesters.len());
    let mut last_step = Vec::with_capacity(requesters.len());
    for &id in &requesters {
        let deadline = instance.nodes[id].deadline.expect("validated requester");
        let k_max = (deadline / dt).floor() as usize;
        first_vertex.push(vertices.len());
        last_step.push(k_max);
        for k in 0..=k_max {
            vertices.push(DagVertex {
                node: Some(id),
                step: k,
                time: instance.t0 + (k as f64) * dt,
            });
        }
    }

    let mut out_edges = vec![Vec::new(); vertices.len()];
    // v_0 connects to the first time copy of every requester.
    out_edges[0] = (0..requesters.len()).map(|r| first_vertex[r]).collect();

    for v in 1..vertices.len() {
        let src = vertices[v];
        for (r, &id) in requesters.iter().enumerate() {
            if Some(id) == src.node {
                continue;
            }
            let arrival = dag_arrival_time(instance, src.node, src.time, id);
            // Land in the cell (t^{k'-1}, t^{k'}], k' >= 1.
            let mut kp = ((arrival - instance.t0) / dt).ceil() as i64;
            while kp > 1 && arrival <= instance.t0 + ((kp - 1) as f64) * dt {
                kp -= 1;
            }
            while arrival > instance.t0 + (kp as f64) * dt {
                kp += 1;
            }
            if kp >= 1 && kp as usize <= last_step[r] {
                out_edges[v].push(first_vertex[r] + kp as usize);
            }
        }
    }
    for adj in &mut out_edges {
        adj.sort_unstable();
        adj.dedup();
    }

    let mut topo_order: Vec<usize> = (0..vertices.len()).collect();
    topo_order.sort_by(|&a, &b| {
        let (va, vb) = (vertices[a], vertices[b]);
        va.time
            .partial_cmp(&vb.time)
            .unwrap()
            .then(va.node.cmp(&vb.node))
            .then(va.step.cmp(&vb.step))
    });

    Ok(TimeExpandedDag {
        dt,
        vertices,
        start: 0,
        out_edges,
        topo_order,
    })
}
