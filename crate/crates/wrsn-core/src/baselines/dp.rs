//! Color-coding dynamic program for the k-coverage charging problem.
//!
//! Every requesting sensor gets a unique color, shared by all of its time
//! copies in the expanded DAG. Entries `(color set, deficiency table,
//! distance, predecessor)` flow through the DAG in topological order; a
//! vertex extends an entry only when its color is new and charging its
//! sensor still decreases some table entry. Entries whose table hits all
//! zeros mark feasible tours; the minimum-distance one (closing leg to the
//! depot included) is optimal. Per vertex and color set only the cheapest
//! entry survives, since the table is a function of the color set alone.

use std::collections::HashMap;

use crate::envs::{ScheduleState, Visit};
use crate::geometry::{build_subregions, table_after_charging};
use crate::graph::{build_time_expanded_dag, TimeExpandedDag};
use crate::instances::ProblemInstance;
use crate::point::Point;
use crate::{Error, NodeId, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig {
    /// Time unit of the expanded DAG, seconds.
    pub dt: f64,
    /// Abort when live entries exceed this bound.
    pub max_entries: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            dt: 1.0,
            max_entries: 2_000_000,
        }
    }
}

/// Stored search node: colors on the path, table after charging them,
/// distance so far, and the predecessor for path recovery.
#[derive(Debug, Clone)]
struct ColorSetEntry {
    table: Vec<u32>,
    distance: f64,
    /// `(vertex, color set)` of the previous entry; `None` at first hops.
    predecessor: Option<(usize, u128)>,
}

/// Optimal charging tour on the discretized DAG, or `Err(Infeasible)` when
/// no colorful path restores coverage. Times in the returned state follow
/// the DAG grid (charging begins at vertex times).
pub fn dp_kcoverage(instance: &ProblemInstance, config: &DpConfig) -> Result<ScheduleState> {
    let table = build_subregions(instance)?;
    let k = instance
        .coverage_k
        .ok_or_else(|| Error::Validation("P3 instance required".into()))? as usize;
    if table.min_cover() < k {
        return Err(Error::Infeasible(
            "area is not k-covered by the deployment; charging cannot fix it".into(),
        ));
    }
    if table.all_zero() {
        // Case I everywhere: nothing to charge.
        return Ok(ScheduleState::empty(
            instance.t0,
            Some(table_after_charging(&table, instance, &[])),
        ));
    }

    let requesters = instance.requesters();
    if requesters.len() > 128 {
        return Err(Error::MemoryCap(format!(
            "{} requesters exceed the 128-color bound",
            requesters.len()
        )));
    }
    let color_of: HashMap<NodeId, usize> = requesters
        .iter()
        .enumerate()
        .map(|(color, &id)| (id, color))
        .collect();
    let touched: Vec<Vec<usize>> = requesters.iter().map(|&id| table.touched_by(id)).collect();

    let dag = build_time_expanded_dag(instance, config.dt)?;
    let depot = instance.charger.depot;
    let position = |vertex: usize| -> Point {
        match dag.clique_of(vertex) {
            Some(id) => instance.nodes[id].position,
            None => depot,
        }
    };

    // Entry collections per DAG vertex, keyed by color set.
    let mut entries: Vec<HashMap<u128, ColorSetEntry>> = vec![HashMap::new(); dag.vertex_count()];
    let mut live = 0usize;

    // v_0 sends the table to first-copy neighbors that decrease an entry.
    for &first in dag.out_neighbors(dag.start) {
        let node = dag.clique_of(first).expect("sensor copy");
        let color = color_of[&node];
        if !decreases_some(&table.entries, &touched[color]) {
            continue;
        }
        let mut t = table.entries.clone();
        decrement(&mut t, &touched[color]);
        let distance = depot.distance(position(first));
        insert_entry(
            &mut entries[first],
            1u128 << color,
            ColorSetEntry {
                table: t,
                distance,
                predecessor: None,
            },
            &mut live,
        );
    }

    for &vertex in &dag.topo_order {
        if vertex == dag.start || entries[vertex].is_empty() {
            continue;
        }
        if live > config.max_entries {
            return Err(Error::MemoryCap(format!(
                "color-set entries exceeded {} (DAG has {} vertices, {} requesters)",
                config.max_entries,
                dag.vertex_count(),
                requesters.len()
            )));
        }
        let current: Vec<(u128, ColorSetEntry)> = entries[vertex]
            .iter()
            .map(|(c, e)| (*c, e.clone()))
            .collect();
        for &next in dag.out_neighbors(vertex) {
            let node = dag.clique_of(next).expect("sensor copy");
            let color = color_of[&node];
            let bit = 1u128 << color;
            let leg = position(vertex).distance(position(next));
            for (colors, entry) in &current {
                if colors & bit != 0 {
                    continue; // colorful paths only
                }
                if !decreases_some(&entry.table, &touched[color]) {
                    continue;
                }
                let mut t = entry.table.clone();
                decrement(&mut t, &touched[color]);
                insert_entry(
                    &mut entries[next],
                    colors | bit,
                    ColorSetEntry {
                        table: t,
                        distance: entry.distance + leg,
                        predecessor: Some((vertex, *colors)),
                    },
                    &mut live,
                );
            }
        }
    }

    // Feasible tours: entries with all-zero tables, closing leg included.
    let mut best: Option<(usize, u128, f64)> = None;
    for (vertex, map) in entries.iter().enumerate() {
        for (colors, entry) in map {
            if entry.table.iter().all(|&t| t == 0) {
                let total = entry.distance + position(vertex).distance(depot);
                if best.map(|(_, _, b)| total < b).unwrap_or(true) {
                    best = Some((vertex, *colors, total));
                }
            }
        }
    }
    let Some((vertex, colors, _)) = best else {
        return Err(Error::Infeasible(
            "no colorful path restores k-coverage".into(),
        ));
    };

    // Trace predecessors back to v_0.
    let mut path = Vec::new();
    let mut cursor = Some((vertex, colors));
    while let Some((v, c)) = cursor {
        path.push(v);
        cursor = entries[v][&c].predecessor;
    }
    path.reverse();
    Ok(state_from_dag_path(instance, &dag, &table.entries, &path))
}

fn decreases_some(table: &[u32], touched: &[usize]) -> bool {
    touched.iter().any(|&i| table[i] > 0)
}

fn decrement(table: &mut [u32], touched: &[usize]) {
    for &i in touched {
        table[i] = table[i].saturating_sub(1);
    }
}

fn insert_entry(
    map: &mut HashMap<u128, ColorSetEntry>,
    colors: u128,
    entry: ColorSetEntry,
    live: &mut usize,
) {
    match map.get_mut(&colors) {
        Some(existing) => {
            // Same colors imply the same table; keep the shorter path.
            if entry.distance < existing.distance {
                *existing = entry;
            }
        }
        None => {
            map.insert(colors, entry);
            *live += 1;
        }
    }
}

/// Materialize a DAG path as a schedule: charging begins at each vertex's
/// grid time with the residual extrapolated there.
fn state_from_dag_path(
    instance: &ProblemInstance,
    dag: &TimeExpandedDag,
    initial_table: &[u32],
    path: &[usize],
) -> ScheduleState {
    let _ = initial_table;
    let mut state = ScheduleState::empty(instance.t0, None);
    let mut position = instance.charger.depot;
    for &vertex in path {
        let node_id = dag.clique_of(vertex).expect("sensor copy");
        let node = &instance.nodes[node_id];
        let arrival = dag.vertices[vertex].time;
        let residual = node.residual_at(arrival, instance.t0);
        let charge_energy = node.battery_capacity - residual;
        let charge_duration = charge_energy / instance.charger.transfer_rate;
        state.travel_distance += position.distance(node.position);
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
    let table = build_subregions(instance).expect("P3 instance");
    state.coverage = Some(table_after_charging(
        &table,
        instance,
        &state.charged_nodes(),
    ));
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Charger, SensorNode, Variant};
    use crate::point::Rect;

    fn p3_instance(nodes: Vec<SensorNode>, k: u32, area: Rect) -> ProblemInstance {
        ProblemInstance {
            variant: Variant::P3KCoverage,
            nodes,
            charger: Charger {
                depot: area.center(),
                end_point: area.center(),
                speed: 5.0,
                transfer_rate: 20.0,
                travel_energy: 600.0,
                energy_capacity: None,
                timespan: None,
            },
            alpha: 0.45,
            epsilon_charge: 0.0,
            coverage_k: Some(k),
            area,
            t0: 0.0,
            rng_seed: 0,
        }
    }

    fn disk_node(id: NodeId, x: f64, y: f64, residual: f64, requesting: bool) -> SensorNode {
        let mut node = SensorNode::stationary(id, Point::new(x, y), 10_800.0, residual);
        node.sensing_radius = Some(60.0);
        node.consumption_rate = 1.0;
        if requesting {
            node.deadline = Some(residual / node.consumption_rate);
        }
        node
    }

    #[test]
    fn all_zero_table_yields_empty_path() {
        // Three healthy disks blanket the area at k=2: nothing to charge.
        let area = Rect::new(45.0, 45.0, 55.0, 55.0);
        let inst = p3_instance(
            vec![
                disk_node(0, 50.0, 50.0, 9_000.0, false),
                disk_node(1, 52.0, 50.0, 9_000.0, false),
                disk_node(2, 48.0, 50.0, 9_000.0, false),
            ],
            2,
            area,
        );
        let state = dp_kcoverage(&inst, &DpConfig::default()).unwrap();
        assert!(state.visits.is_empty());
        assert_eq!(state.travel_distance, 0.0);
        assert!(state.coverage_restored());
    }

    #[test]
    fn single_deficient_requester_gives_single_node_path() {
        // Two blanket disks, k=2, one requesting: it must be charged.
        let area = Rect::new(45.0, 45.0, 55.0, 55.0);
        let inst = p3_instance(
            vec![
                disk_node(0, 50.0, 50.0, 3_000.0, true),
                disk_node(1, 52.0, 50.0, 9_000.0, false),
            ],
            2,
            area,
        );
        let state = dp_kcoverage(&inst, &DpConfig::default()).unwrap();
        assert_eq!(state.charged_nodes(), vec![0]);
        assert!(state.coverage_restored());
    }

    #[test]
    fn under_covered_area_is_infeasible() {
        let area = Rect::square(200.0);
        let inst = p3_instance(vec![disk_node(0, 100.0, 100.0, 3_000.0, true)], 1, area);
        assert!(matches!(
            dp_kcoverage(&inst, &DpConfig::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn mutually_exclusive_deadlines_are_infeasible() {
        // Both blanket disks must be charged (k=2, both requesting), but
        // charging either one takes (10800-100)/20 = 535 s while both
        // deadlines sit at 100 s: whichever goes second is missed.
        let area = Rect::new(45.0, 45.0, 55.0, 55.0);
        let inst = p3_instance(
            vec![
                disk_node(0, 50.0, 50.0, 100.0, true),
                disk_node(1, 52.0, 50.0, 100.0, true),
            ],
            2,
            area,
        );
        assert!(matches!(
            dp_kcoverage(&inst, &DpConfig::default()),
            Err(Error::Infeasible(_))
        ));
    }
}
