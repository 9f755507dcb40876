//! Disk-coverage computations: point coverage, the subregion arrangement
//! induced by sensing disks over the monitored rectangle, and the
//! per-subregion charge-deficiency table.
//!
//! Subregions are keyed by their covering signature (the set of disks
//! containing the region). Signatures are collected from candidate points of
//! the arrangement — pairwise circle intersections, circle/boundary
//! intersections, disk centers, and area corners, each ringed with nearby
//! probe points — plus a uniform grid fallback, so every signature with
//! non-negligible area is found. A Monte-Carlo sampling oracle cross-checks
//! this in the test suite.

use std::collections::HashMap;

use crate::instances::{ProblemInstance, SensorNode};
use crate::point::{Point, Rect};
use crate::{exec, Error, NodeId, Result};

/// Default grid fallback cell edge, meters.
pub const DEFAULT_GRID_CELL: f64 = 1.0;

const PROBE_ANGLES: usize = 16;
const PROBE_RADII: [f64; 2] = [1e-6, 1e-3];
/// Radius inflation used to split degenerate tangent circles.
const TANGENCY_EPS: f64 = 1e-9;

/// True iff `q` lies within the node's closed sensing disk.
pub fn covers(node: &SensorNode, q: Point) -> bool {
    match node.sensing_radius {
        Some(r) => node.position.distance(q) <= r,
        None => false,
    }
}

/// Number of nodes whose sensing disk contains `q`.
pub fn coverage_count(nodes: &[SensorNode], q: Point) -> usize {
    nodes.iter().filter(|node| covers(node, q)).count()
}

/// One maximal cell of constant covering set.
#[derive(Debug, Clone, PartialEq)]
pub struct Subregion {
    pub representative: Point,
    /// Sorted ids of the disks covering this cell.
    pub covering_ids: Vec<NodeId>,
    /// `r(a_i)`: how many covering nodes issued a charging request.
    pub requesting_cover: usize,
}

/// Arrangement of sensing disks with the charge-deficiency table `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubregionTable {
    pub subregions: Vec<Subregion>,
    /// `T[i] = max(0, k - (cover_i - r(a_i)))`: requesters still to charge
    /// before subregion `i` is k-covered by healthy sensors.
    pub entries: Vec<u32>,
    pub coverage_k: u32,
    index: HashMap<Vec<NodeId>, usize>,
}

impl SubregionTable {
    /// Index of the subregion with exactly this (sorted) covering set.
    pub fn lookup_signature(&self, signature: &[NodeId]) -> Option<usize> {
        self.index.get(signature).copied()
    }

    pub fn all_zero(&self) -> bool {
        self.entries.iter().all(|&t| t == 0)
    }

    pub fn min_cover(&self) -> usize {
        self.subregions
            .iter()
            .map(|s| s.covering_ids.len())
            .min()
            .unwrap_or(0)
    }

    /// Subregion indices whose deficiency a given node's charge would reduce.
    pub fn touched_by(&self, node: NodeId) -> Vec<usize> {
        self.subregions
            .iter()
            .enumerate()
            .filter(|(_, s)| s.covering_ids.binary_search(&node).is_ok())
            .map(|(i, _)| i)
            .collect()
    }

    /// CSV dump: `subregion_id, cover_count, r_ai, T`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subregion_id,cover_count,r_ai,T\n");
        for (i, s) in self.subregions.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i,
                s.covering_ids.len(),
                s.requesting_cover,
                self.entries[i]
            ));
        }
        out
    }
}

/// Rebuild that treats `charged` requesters as healthy again: each charged
/// requester decrements `T` once on every subregion its disk contains,
/// floored at zero.
pub fn table_after_charging(
    table: &SubregionTable,
    instance: &ProblemInstance,
    charged: &[NodeId],
) -> SubregionTable {
    let mut next = table.clone();
    for &id in charged {
        let node = &instance.nodes[id];
        if !instance.is_requester(node) {
            continue;
        }
        for (i, s) in next.subregions.iter().enumerate() {
            if s.covering_ids.binary_search(&id).is_ok() {
                next.entries[i] = next.entries[i].saturating_sub(1);
            }
        }
    }
    next
}

/// True iff every subregion of the area is covered by at least `k` disks.
pub fn verify_k_coverage(instance: &ProblemInstance) -> Result<bool> {
    let k = instance
        .coverage_k
        .ok_or_else(|| Error::Validation("k-coverage check needs coverage_k".into()))? as usize;
    // Corners fail first in sparse deployments; check them before scanning.
    for corner in instance.area.corners() {
        if coverage_count(&instance.nodes, corner) < k {
            return Ok(false);
        }
    }
    let signatures = collect_signatures(instance, DEFAULT_GRID_CELL)?;
    Ok(signatures.keys().all(|mask| mask.count_ones() as usize >= k))
}

/// Build the subregion arrangement and deficiency table for a P3 instance.
pub fn build_subregions(instance: &ProblemInstance) -> Result<SubregionTable> {
    build_subregions_with_cell(instance, DEFAULT_GRID_CELL)
}

pub fn build_subregions_with_cell(
    instance: &ProblemInstance,
    grid_cell: f64,
) -> Result<SubregionTable> {
    let k = instance
        .coverage_k
        .ok_or_else(|| Error::Validation("subregion table needs coverage_k".into()))?;
    let signatures = collect_signatures(instance, grid_cell)?;

    let mut subregions: Vec<Subregion> = signatures
        .into_iter()
        .map(|(mask, representative)| {
            let covering_ids = mask_to_ids(mask);
            let requesting_cover = covering_ids
                .iter()
                .filter(|&&id| instance.is_requester(&instance.nodes[id]))
                .count();
            Subregion {
                representative,
                covering_ids,
                requesting_cover,
            }
        })
        .collect();
    subregions.sort_by(|a, b| a.covering_ids.cmp(&b.covering_ids));

    let entries = subregions
        .iter()
        .map(|s| {
            // Cells covered by fewer than k disks overall cannot be fixed by
            // charging: their deficiency is tracked by `min_cover`, not `T`.
            if s.covering_ids.len() < k as usize {
                return 0;
            }
            let healthy = s.covering_ids.len() - s.requesting_cover;
            (k as i64 - healthy as i64).max(0) as u32
        })
        .collect();
    let index = subregions
        .iter()
        .enumerate()
        .map(|(i, s)| (s.covering_ids.clone(), i))
        .collect();
    Ok(SubregionTable {
        subregions,
        entries,
        coverage_k: k,
        index,
    })
}

fn mask_to_ids(mask: u128) -> Vec<NodeId> {
    (0..128).filter(|i| mask & (1u128 << i) != 0).collect()
}

fn signature_at(nodes: &[SensorNode], q: Point) -> u128 {
    let mut mask = 0u128;
    for node in nodes {
        if covers(node, q) {
            mask |= 1u128 << node.id;
        }
    }
    mask
}

/// Gather `signature -> representative` over candidate probes plus the grid.
/// Representatives are the lexicographically smallest point seen per
/// signature, which keeps the output independent of node ordering.
fn collect_signatures(instance: &ProblemInstance, grid_cell: f64) -> Result<HashMap<u128, Point>> {
    if instance.n() > 128 {
        return Err(Error::Validation(
            "subregion arrangement supports at most 128 disks".into(),
        ));
    }
    if grid_cell <= 0.0 {
        return Err(Error::Validation("grid cell must be positive".into()));
    }
    let area = instance.area;
    let nodes = &instance.nodes;

    let mut points = candidate_probes(instance);
    points.retain(|p| area.contains(*p));

    let cols = (area.width() / grid_cell).ceil().max(1.0) as usize;
    let rows = (area.height() / grid_cell).ceil().max(1.0) as usize;

    let mut best: HashMap<u128, Point> = HashMap::new();
    let classified = exec::map_collect(points, |p| (signature_at(nodes, p), p));
    for (mask, p) in classified {
        merge_representative(&mut best, mask, p);
    }

    let row_results = exec::map_range(rows, |row| {
        let y = area.y0 + (row as f64 + 0.5) * grid_cell;
        let y = y.min(area.y1);
        let mut local: HashMap<u128, Point> = HashMap::new();
        for col in 0..cols {
            let x = area.x0 + (col as f64 + 0.5) * grid_cell;
            let p = Point::new(x.min(area.x1), y);
            merge_representative(&mut local, signature_at(nodes, p), p);
        }
        local
    });
    for local in row_results {
        for (mask, p) in local {
            merge_representative(&mut best, mask, p);
        }
    }
    Ok(best)
}

fn merge_representative(best: &mut HashMap<u128, Point>, mask: u128, p: Point) {
    best.entry(mask)
        .and_modify(|cur| {
            if (p.x, p.y) < (cur.x, cur.y) {
                *cur = p;
            }
        })
        .or_insert(p);
}

/// Candidate points of the arrangement, each ringed with nearby probes so
/// that every face adjacent to a vertex contributes a signature.
fn candidate_probes(instance: &ProblemInstance) -> Vec<Point> {
    let mut anchors: Vec<Point> = Vec::new();
    let disks: Vec<(Point, f64)> = instance
        .nodes
        .iter()
        .filter_map(|n| n.sensing_radius.map(|r| (n.position, r)))
        .collect();

    anchors.extend(instance.area.corners());
    anchors.extend(disks.iter().map(|(c, _)| *c));

    for i in 0..disks.len() {
        for j in (i + 1)..disks.len() {
            anchors.extend(circle_circle(disks[i], disks[j]));
        }
    }
    for &disk in &disks {
        anchors.extend(circle_rect(disk, &instance.area));
    }

    let mut probes = Vec::with_capacity(anchors.len() * (PROBE_ANGLES * PROBE_RADII.len() + 1));
    for anchor in anchors {
        probes.push(anchor);
        for step in 0..PROBE_ANGLES {
            let theta = (step as f64) * std::f64::consts::TAU / (PROBE_ANGLES as f64);
            let (sin, cos) = theta.sin_cos();
            for delta in PROBE_RADII {
                probes.push(Point::new(anchor.x + delta * cos, anchor.y + delta * sin));
            }
        }
    }
    // Single-circle faces with no arrangement vertices: probe both sides of
    // every circle directly.
    for (center, r) in &disks {
        for step in 0..PROBE_ANGLES {
            let theta = (step as f64) * std::f64::consts::TAU / (PROBE_ANGLES as f64);
            let (sin, cos) = theta.sin_cos();
            for delta in PROBE_RADII {
                for radius in [r - delta, r + delta] {
                    probes.push(Point::new(center.x + radius * cos, center.y + radius * sin));
                }
            }
        }
    }
    probes
}

fn circle_circle(a: (Point, f64), b: (Point, f64)) -> Vec<Point> {
    let (c1, mut r1) = a;
    let (c2, mut r2) = b;
    let d = c1.distance(c2);
    if d < 1e-12 {
        return Vec::new();
    }
    // Split tangencies into two nearby crossings; the probe rings around
    // them classify the adjacent faces either way.
    if (d - (r1 + r2)).abs() < TANGENCY_EPS || (d - (r1 - r2).abs()).abs() < TANGENCY_EPS {
        r1 += TANGENCY_EPS;
        r2 += TANGENCY_EPS;
    }
    if d > r1 + r2 || d < (r1 - r2).abs() {
        return Vec::new();
    }
    let along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h_sq = r1 * r1 - along * along;
    let h = h_sq.max(0.0).sqrt();
    let ux = (c2.x - c1.x) / d;
    let uy = (c2.y - c1.y) / d;
    let base = Point::new(c1.x + along * ux, c1.y + along * uy);
    vec![
        Point::new(base.x + h * uy, base.y - h * ux),
        Point::new(base.x - h * uy, base.y + h * ux),
    ]
}

fn circle_rect((center, r): (Point, f64), rect: &Rect) -> Vec<Point> {
    let mut out = Vec::new();
    // Vertical edges x = const.
    for x in [rect.x0, rect.x1] {
        let dx = x - center.x;
        let rem = r * r - dx * dx;
        if rem >= 0.0 {
            let h = rem.sqrt();
            for y in [center.y - h, center.y + h] {
                if y >= rect.y0 - 1e-9 && y <= rect.y1 + 1e-9 {
                    out.push(Point::new(x, y.clamp(rect.y0, rect.y1)));
                }
            }
        }
    }
    // Horizontal edges y = const.
    for y in [rect.y0, rect.y1] {
        let dy = y - center.y;
        let rem = r * r - dy * dy;
        if rem >= 0.0 {
            let h = rem.sqrt();
            for x in [center.x - h, center.x + h] {
                if x >= rect.x0 - 1e-9 && x <= rect.x1 + 1e-9 {
                    out.push(Point::new(x.clamp(rect.x0, rect.x1), y));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Charger, Variant};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disk_node(id: NodeId, x: f64, y: f64, r: f64, requesting: bool) -> SensorNode {
        let mut node = SensorNode::stationary(id, Point::new(x, y), 10_800.0, {
            if requesting {
                1_000.0
            } else {
                9_000.0
            }
        });
        node.sensing_radius = Some(r);
        if requesting {
            node.deadline = Some(node.residual / node.consumption_rate);
        }
        node
    }

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

    #[test]
    fn covers_is_closed_at_the_boundary() {
        let node = disk_node(0, 0.0, 0.0, 135.0, false);
        assert!(covers(&node, Point::new(0.0, 135.0)));
        assert!(!covers(&node, Point::new(135.0001, 0.0)));
    }

    #[test]
    fn covers_345_triangle() {
        let node = disk_node(0, 3.0, 4.0, 5.0, false);
        assert!(covers(&node, Point::new(0.0, 0.0)));
    }

    #[test]
    fn coverage_count_is_cardinality() {
        assert_eq!(coverage_count(&[], Point::new(0.0, 0.0)), 0);
        let nodes = vec![
            disk_node(0, 0.0, 0.0, 10.0, false),
            disk_node(1, 100.0, 100.0, 10.0, false),
            disk_node(2, 1.0, 1.0, 10.0, false),
        ];
        assert_eq!(coverage_count(&nodes, Point::new(0.0, 0.0)), 2);
    }

    #[test]
    fn single_disk_inside_area_yields_two_subregions() {
        let area = Rect::square(100.0);
        let inst = p3_instance(vec![disk_node(0, 50.0, 50.0, 20.0, false)], 1, area);
        let table = build_subregions(&inst).unwrap();
        assert_eq!(table.subregions.len(), 2);
        let inside = table.lookup_signature(&[0]).unwrap();
        let outside = table.lookup_signature(&[]).unwrap();
        assert_eq!(table.entries[inside], 0); // one healthy cover meets k=1
        assert_eq!(table.entries[outside], 0); // unfixable by charging
        assert_eq!(table.min_cover(), 0); // ...but flagged structurally deficient
    }

    #[test]
    fn two_disjoint_requesting_disks_k1() {
        let area = Rect::square(200.0);
        let inst = p3_instance(
            vec![
                disk_node(0, 40.0, 40.0, 20.0, true),
                disk_node(1, 160.0, 160.0, 20.0, true),
            ],
            1,
            area,
        );
        let table = build_subregions(&inst).unwrap();
        assert_eq!(table.subregions.len(), 3);
        let a = table.lookup_signature(&[0]).unwrap();
        let b = table.lookup_signature(&[1]).unwrap();
        let rest = table.lookup_signature(&[]).unwrap();
        assert_eq!(table.entries[a], 1);
        assert_eq!(table.entries[b], 1);
        // Uncovered remainder: zero entry, infeasibility flagged via coverage.
        assert_eq!(table.entries[rest], 0);
        assert_eq!(table.subregions[rest].covering_ids.len(), 0);
        assert!(!verify_k_coverage(&inst).unwrap());
    }

    #[test]
    fn charging_all_requesters_zeroes_an_initially_covered_table() {
        // Two disks blanket a small area; k = 2 leaves no redundancy, so the
        // single request opens a deficiency that charging must close.
        let area = Rect::new(45.0, 45.0, 55.0, 55.0);
        let inst = p3_instance(
            vec![
                disk_node(0, 50.0, 50.0, 20.0, true),
                disk_node(1, 52.0, 50.0, 20.0, false),
            ],
            2,
            area,
        );
        assert!(verify_k_coverage(&inst).unwrap());
        let table = build_subregions(&inst).unwrap();
        assert!(!table.all_zero());
        let charged = table_after_charging(&table, &inst, &[0]);
        assert!(charged.all_zero());
        let untouched = table_after_charging(&table, &inst, &[]);
        assert_eq!(untouched.entries, table.entries);
    }

    #[test]
    fn table_after_charging_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..5 {
            let area = Rect::square(120.0);
            let nodes: Vec<SensorNode> = (0..8)
                .map(|id| {
                    disk_node(
                        id,
                        rng.gen_range(0.0..120.0),
                        rng.gen_range(0.0..120.0),
                        45.0,
                        rng.gen_bool(0.5),
                    )
                })
                .collect();
            let requesters: Vec<NodeId> = nodes
                .iter()
                .filter(|n| n.deadline.is_some())
                .map(|n| n.id)
                .collect();
            let inst = p3_instance(nodes, 2, area);
            let table = build_subregions(&inst).unwrap();
            let charged: Vec<NodeId> = requesters.iter().copied().step_by(2).collect();
            let updated = table_after_charging(&table, &inst, &charged);

            // Oracle: recompute from scratch with charged nodes no longer requesting.
            let mut healthy = inst.clone();
            for &id in &charged {
                healthy.nodes[id].residual = 9_000.0;
                healthy.nodes[id].deadline = None;
            }
            let rebuilt = build_subregions(&healthy).unwrap();
            for (i, s) in updated.subregions.iter().enumerate() {
                let j = rebuilt
                    .lookup_signature(&s.covering_ids)
                    .unwrap_or_else(|| panic!("trial {trial}: signature missing after rebuild"));
                assert_eq!(updated.entries[i], rebuilt.entries[j], "trial {trial}");
            }
        }
    }

    #[test]
    fn arrangement_matches_sampling_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let area = Rect::square(150.0);
        let nodes: Vec<SensorNode> = (0..5)
            .map(|id| {
                disk_node(
                    id,
                    rng.gen_range(0.0..150.0),
                    rng.gen_range(0.0..150.0),
                    60.0,
                    id % 2 == 0,
                )
            })
            .collect();
        let inst = p3_instance(nodes, 1, area);
        let table = build_subregions(&inst).unwrap();
        for _ in 0..100_000 {
            let q = Point::new(rng.gen_range(0.0..150.0), rng.gen_range(0.0..150.0));
            let mask = signature_at(&inst.nodes, q);
            let ids = mask_to_ids(mask);
            let idx = table
                .lookup_signature(&ids)
                .unwrap_or_else(|| panic!("missing signature {ids:?} at {q}"));
            assert_eq!(table.subregions[idx].covering_ids, ids);
        }
    }

    #[test]
    fn build_is_independent_of_node_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let area = Rect::square(100.0);
        let nodes: Vec<SensorNode> = (0..6)
            .map(|id| {
                disk_node(
                    id,
                    rng.gen_range(0.0..100.0),
                    rng.gen_range(0.0..100.0),
                    40.0,
                    id % 2 == 1,
                )
            })
            .collect();
        let inst = p3_instance(nodes.clone(), 2, area);
        let table = build_subregions(&inst).unwrap();

        // Reverse the deployment order; ids are relabeled accordingly.
        let n = nodes.len();
        let mut reversed: Vec<SensorNode> = nodes
            .into_iter()
            .rev()
            .enumerate()
            .map(|(new_id, mut node)| {
                node.id = new_id;
                node
            })
            .collect();
        reversed.sort_by_key(|n| n.id);
        let inst_rev = p3_instance(reversed, 2, area);
        let table_rev = build_subregions(&inst_rev).unwrap();

        assert_eq!(table.subregions.len(), table_rev.subregions.len());
        for (i, s) in table.subregions.iter().enumerate() {
            let translated: Vec<NodeId> = {
                let mut ids: Vec<NodeId> =
                    s.covering_ids.iter().map(|&id| n - 1 - id).collect();
                ids.sort_unstable();
                ids
            };
            let j = table_rev.lookup_signature(&translated).expect("signature");
            assert_eq!(table.entries[i], table_rev.entries[j]);
            assert_eq!(
                s.requesting_cover,
                table_rev.subregions[j].requesting_cover
            );
        }
    }
}
