//! Spanning-tree tour heuristics for the budgeted charging problem: build a
//! (capacitated) minimum spanning tree over the requesters rooted at the
//! depot, tour it in preorder, and truncate the tour to the energy budget.

use crate::envs::{ChargingEnv, ScheduleState};
use crate::instances::Variant;
use crate::point::Point;
use crate::{Error, Result};

fn requester_vertices(env: &dyn ChargingEnv) -> Vec<usize> {
    (0..env.graph().vertex_count()).collect()
}

fn vertex_point(env: &dyn ChargingEnv, v: usize) -> Point {
    env.graph().position(env.instance(), v)
}

/// Longest preorder prefix that fits the charger budget.
fn truncate_to_budget(env: &dyn ChargingEnv, tour: &[usize]) -> ScheduleState {
    let budget = env
        .instance()
        .charger
        .energy_capacity
        .unwrap_or(f64::INFINITY);
    let xi = env.instance().charger.travel_energy;
    let mut best = env.initial_state();
    for len in 1..=tour.len() {
        let state = env.replay(&tour[..len]);
        let used = state.charge_energy_total + env.closed_distance(&state) * xi;
        if used > budget {
            break;
        }
        best = state;
    }
    best
}

/// Preorder traversal of a tree given as a parent array rooted at `root`
/// (`parent[root] == root`); children visited nearest-first for a short tour.
fn preorder(parent: &[usize], root: usize, points: &[Point]) -> Vec<usize> {
    let n = parent.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        if v != root {
            children[parent[v]].push(v);
        }
    }
    for (node, kids) in children.iter_mut().enumerate() {
        kids.sort_by(|&a, &b| {
            points[node]
                .distance(points[a])
                .partial_cmp(&points[node].distance(points[b]))
                .unwrap()
                .then(a.cmp(&b))
        });
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        if v != root {
            order.push(v);
        }
        for &child in children[v].iter().rev() {
            stack.push(child);
        }
    }
    order
}

/// Minimum-spanning-tree tour: Prim from the depot, preorder walk, budget
/// truncation.
pub fn mst_solve(env: &dyn ChargingEnv) -> Result<ScheduleState> {
    if env.variant() != Variant::P2FullyChargingReward {
        return Err(Error::Validation(
            "spanning-tree solvers apply to P2 instances".into(),
        ));
    }
    let vertices = requester_vertices(env);
    if vertices.is_empty() {
        return Ok(env.initial_state());
    }
    // Index 0 is the depot root; 1.. are requester vertices.
    let mut points = vec![env.instance().charger.depot];
    points.extend(vertices.iter().map(|&v| vertex_point(env, v)));
    let n = points.len();

    let mut in_tree = vec![false; n];
    let mut parent = vec![0usize; n];
    let mut cost = vec![f64::INFINITY; n];
    in_tree[0] = true;
    cost[0] = 0.0;
    for v in 1..n {
        cost[v] = points[0].distance(points[v]);
    }
    for _ in 1..n {
        let mut pick = None;
        for v in 0..n {
            if !in_tree[v] && pick.map(|p: usize| cost[v] < cost[p]).unwrap_or(true) {
                pick = Some(v);
            }
        }
        let v = pick.expect("tree spans all vertices");
        in_tree[v] = true;
        for u in 0..n {
            if !in_tree[u] {
                let d = points[v].distance(points[u]);
                if d < cost[u] {
                    cost[u] = d;
                    parent[u] = v;
                }
            }
        }
    }

    let order = preorder(&parent, 0, &points);
    let tour: Vec<usize> = order.into_iter().map(|i| vertices[i - 1]).collect();
    Ok(truncate_to_budget(env, &tour))
}

/// Capacitated MST tour (Esau-Williams): subtrees hanging off the depot are
/// merged by best positive saving while their charge demand stays within
/// half the charger budget; the tree is then toured and truncated like the
/// plain MST.
pub fn cmst_solve(env: &dyn ChargingEnv) -> Result<ScheduleState> {
    if env.variant() != Variant::P2FullyChargingReward {
        return Err(Error::Validation(
            "spanning-tree solvers apply to P2 instances".into(),
        ));
    }
    let vertices = requester_vertices(env);
    if vertices.is_empty() {
        return Ok(env.initial_state());
    }
    let mut points = vec![env.instance().charger.depot];
    points.extend(vertices.iter().map(|&v| vertex_point(env, v)));
    let n = points.len();
    let capacity = env
        .instance()
        .charger
        .energy_capacity
        .unwrap_or(f64::INFINITY)
        / 2.0;
    let demand: Vec<f64> = vertices
        .iter()
        .map(|&v| {
            let id = env.graph().node_of[v].expect("sensor vertex");
            let node = &env.instance().nodes[id];
            node.battery_capacity - node.residual
        })
        .collect();

    // Start as a star: every requester is its own subtree on the root.
    let mut parent = vec![0usize; n];
    let mut component: Vec<usize> = (0..n).collect();
    let mut comp_demand = vec![0.0; n];
    for v in 1..n {
        comp_demand[v] = demand[v - 1];
    }

    loop {
        // Best positive saving: connect component gate i to some vertex j of
        // another component, dropping i's root link.
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 1..n {
            if parent[i] != 0 {
                continue; // only component gates link to the root
            }
            let root_cost = points[0].distance(points[i]);
            for j in 1..n {
                if component[j] == component[i] {
                    continue;
                }
                if comp_demand[component[i]] + comp_demand[component[j]] > capacity {
                    continue;
                }
                let saving = root_cost - points[i].distance(points[j]);
                if saving > 1e-12 && best.map(|(s, _, _)| saving > s).unwrap_or(true) {
                    best = Some((saving, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        parent[i] = j;
        let (from, into) = (component[i], component[j]);
        comp_demand[into] += comp_demand[from];
        comp_demand[from] = 0.0;
        for v in 1..n {
            if component[v] == from {
                component[v] = into;
            }
        }
    }

    let order = preorder(&parent, 0, &points);
    let tour: Vec<usize> = order.into_iter().map(|i| vertices[i - 1]).collect();
    Ok(truncate_to_budget(env, &tour))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make_env;
    use crate::instances::{generate_instance, GenParams};

    #[test]
    fn tree_tours_respect_the_budget() {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        for seed in 0..6 {
            let inst =
                generate_instance(Variant::P2FullyChargingReward, 50, &params, seed).unwrap();
            let ie = inst.charger.energy_capacity.unwrap();
            let xi = inst.charger.travel_energy;
            let env = make_env(inst).unwrap();
            for state in [
                mst_solve(env.as_ref()).unwrap(),
                cmst_solve(env.as_ref()).unwrap(),
            ] {
                let used = state.charge_energy_total + env.closed_distance(&state) * xi;
                assert!(used <= ie + 1e-6, "seed {seed}: budget violated");
            }
        }
    }

    #[test]
    fn rejects_other_variants() {
        let params = GenParams::defaults_for(Variant::P1MobilePath);
        let inst = generate_instance(Variant::P1MobilePath, 5, &params, 1).unwrap();
        let env = make_env(inst).unwrap();
        assert!(mst_solve(env.as_ref()).is_err());
        assert!(cmst_solve(env.as_ref()).is_err());
    }
}
