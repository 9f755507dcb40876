//! Problem data model: sensors, charger, instances, and generators.
//!
//! All quantities use SI units internally and on disk: joules, seconds,
//! meters, watts.

mod gen;
mod io;

pub use gen::{generate_instance, GenParams};
pub use io::{load_instance, load_instance_str, save_instance, write_instance};

use crate::point::{Point, Rect};
use crate::{Error, NodeId, Result};

/// Sequence of timed waypoints a mobile sensor follows.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    /// `(time_s, position)`, times strictly increasing.
    pub waypoints: Vec<(f64, Point)>,
    /// Upper bound on the sensor's speed; implied segment speeds obey it.
    pub max_speed: f64,
}

impl MobilityTrace {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::Validation("empty mobility trace".into()));
        }
        for pair in self.waypoints.windows(2) {
            let (t0, p0) = pair[0];
            let (t1, p1) = pair[1];
            if t1 <= t0 {
                return Err(Error::Validation(format!(
                    "waypoint times must strictly increase, got {t0} then {t1}"
                )));
            }
            let speed = p0.distance(p1) / (t1 - t0);
            if speed > self.max_speed * (1.0 + 1e-9) {
                return Err(Error::Validation(format!(
                    "segment speed {speed} exceeds max_speed {}",
                    self.max_speed
                )));
            }
        }
        Ok(())
    }

    /// Piecewise-linear position at time `t`.
    pub fn position_at(&self, t: f64) -> Result<Point> {
        let first = self.waypoints.first().expect("validated non-empty");
        let last = self.waypoints.last().expect("validated non-empty");
        if t < first.0 - 1e-9 || t > last.0 + 1e-9 {
            return Err(Error::Validation(format!(
                "time {t} outside trace horizon [{}, {}]",
                first.0, last.0
            )));
        }
        let t = t.clamp(first.0, last.0);
        for pair in self.waypoints.windows(2) {
            let (t0, p0) = pair[0];
            let (t1, p1) = pair[1];
            if t <= t1 {
                let frac = (t - t0) / (t1 - t0);
                return Ok(p0.lerp(p1, frac));
            }
        }
        Ok(last.1)
    }

    pub fn horizon_end(&self) -> f64 {
        self.waypoints.last().map(|w| w.0).unwrap_or(0.0)
    }
}

/// One sensor node of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    pub id: NodeId,
    /// Position at `t0`; mobile nodes carry a trajectory as well.
    pub position: Point,
    /// Battery capacity `B` in joules.
    pub battery_capacity: f64,
    /// Residual energy at charger departure, `B_i(t0)`, joules.
    pub residual: f64,
    /// Average battery consumption rate, watts.
    pub consumption_rate: f64,
    /// Disk sensing radius, meters (P3 only).
    pub sensing_radius: Option<f64>,
    /// Charging deadline as a duration from `t0`, seconds.
    /// Present exactly on requesting nodes in P3.
    pub deadline: Option<f64>,
    /// Charging payoff in `[1, n^2]` (P2 requesters only).
    pub prize: Option<u32>,
    pub trajectory: Option<MobilityTrace>,
}

impl SensorNode {
    /// Stationary node with full defaults; builder-style setters below.
    pub fn stationary(id: NodeId, position: Point, capacity: f64, residual: f64) -> Self {
        SensorNode {
            id,
            position,
            battery_capacity: capacity,
            residual,
            consumption_rate: 1.0,
            sensing_radius: None,
            deadline: None,
            prize: None,
            trajectory: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(0.0..=self.battery_capacity).contains(&self.residual) {
            return Err(Error::Validation(format!(
                "node {}: residual {} outside [0, {}]",
                self.id, self.residual, self.battery_capacity
            )));
        }
        if let Some(d) = self.deadline {
            if self.consumption_rate <= 0.0 {
                return Err(Error::Validation(format!(
                    "node {}: deadline present but consumption rate {} not positive",
                    self.id, self.consumption_rate
                )));
            }
            let implied = self.residual / self.consumption_rate;
            if (d - implied).abs() > 1e-6 * implied.max(1.0) {
                return Err(Error::Validation(format!(
                    "node {}: deadline {} does not equal residual/rate {}",
                    self.id, d, implied
                )));
            }
        }
        if let Some(p) = self.prize {
            let cap = (n as u64) * (n as u64);
            if p == 0 || (p as u64) > cap {
                return Err(Error::Validation(format!(
                    "node {}: prize {} outside [1, {}]",
                    self.id, p, cap
                )));
            }
        }
        if let Some(trace) = &self.trajectory {
            trace.validate()?;
        }
        Ok(())
    }

    /// Position at absolute time `t`: trajectory interpolation for mobile
    /// nodes, the fixed deployment position otherwise.
    pub fn position_at(&self, t: f64) -> Result<Point> {
        match &self.trajectory {
            Some(trace) => trace.position_at(t),
            None => Ok(self.position),
        }
    }

    /// Residual energy extrapolated to time `t`:
    /// `B_i(t) = B_i(t0) - beta_i * (t - t0)`, floored at zero.
    pub fn residual_at(&self, t: f64, t0: f64) -> f64 {
        (self.residual - self.consumption_rate * (t - t0)).max(0.0)
    }
}

/// The mobile charger.
#[derive(Debug, Clone, PartialEq)]
pub struct Charger {
    pub depot: Point,
    pub end_point: Point,
    /// Average moving speed `s`, m/s.
    pub speed: f64,
    /// Energy transfer rate `r_c`, watts.
    pub transfer_rate: f64,
    /// Travel energy `xi`, joules per meter.
    pub travel_energy: f64,
    /// Onboard energy budget `IE`, joules (P2 only).
    pub energy_capacity: Option<f64>,
    /// Maximum tour timespan `C`, seconds (P1 only).
    pub timespan: Option<f64>,
}

impl Charger {
    pub fn validate(&self) -> Result<()> {
        if self.speed <= 0.0 {
            return Err(Error::Validation("charger speed must be positive".into()));
        }
        if self.transfer_rate <= 0.0 {
            return Err(Error::Validation(
                "charger transfer rate must be positive".into(),
            ));
        }
        if self.travel_energy < 0.0 {
            return Err(Error::Validation(
                "charger travel energy must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Which of the three scheduling problems an instance poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Maximize mobile sensors charged within timespan `C`.
    P1MobilePath,
    /// Maximize charging payoff within energy budget `IE`.
    P2FullyChargingReward,
    /// Restore k-coverage before deadlines at minimum travel distance.
    P3KCoverage,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::P1MobilePath => "p1",
            Variant::P2FullyChargingReward => "p2",
            Variant::P3KCoverage => "p3",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "p1" => Ok(Variant::P1MobilePath),
            "p2" => Ok(Variant::P2FullyChargingReward),
            "p3" => Ok(Variant::P3KCoverage),
            other => Err(Error::Validation(format!("unknown variant `{other}`"))),
        }
    }
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub variant: Variant,
    pub nodes: Vec<SensorNode>,
    pub charger: Charger,
    /// Request threshold: a node requests charging when `B_i(t0)/B <= alpha`
    /// (P2/P3). For P1 this is the required charge level.
    pub alpha: f64,
    /// P1 charge tolerance: nodes are charged to `(1 - epsilon) * alpha * B`.
    pub epsilon_charge: f64,
    /// Coverage requirement `k` (P3 only).
    pub coverage_k: Option<u32>,
    pub area: Rect,
    /// Charger departure time.
    pub t0: f64,
    pub rng_seed: u64,
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Ids of nodes that issued a charging request.
    ///
    /// P2/P3: residual at `t0` at or below `alpha * B`. P1: residual below
    /// the required charge level `(1 - epsilon) * alpha * B`.
    pub fn requesters(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|node| self.is_requester(node))
            .map(|node| node.id)
            .collect()
    }

    pub fn is_requester(&self, node: &SensorNode) -> bool {
        match self.variant {
            Variant::P1MobilePath => {
                node.residual < (1.0 - self.epsilon_charge) * self.alpha * node.battery_capacity
            }
            Variant::P2FullyChargingReward | Variant::P3KCoverage => {
                node.residual <= self.alpha * node.battery_capacity
            }
        }
    }

    /// Absolute deadline of a node, `t0 + D_i`; `None` when it never expires.
    pub fn absolute_deadline(&self, id: NodeId) -> Option<f64> {
        self.nodes[id].deadline.map(|d| self.t0 + d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Validation("instance has no nodes".into()));
        }
        self.charger.validate()?;
        if !(0.0 < self.alpha && self.alpha <= 1.0) {
            return Err(Error::Validation(format!(
                "alpha {} outside (0, 1]",
                self.alpha
            )));
        }
        let n = self.nodes.len();
        for (idx, node) in self.nodes.iter().enumerate() {
            if node.id != idx {
                return Err(Error::Validation(format!(
                    "node ids must be dense 0..n, found {} at index {}",
                    node.id, idx
                )));
            }
            node.validate(n)?;
        }
        match self.variant {
            Variant::P1MobilePath => {
                if self.charger.timespan.is_none() {
                    return Err(Error::Validation("P1 requires a charger timespan".into()));
                }
                for node in &self.nodes {
                    let trace = node.trajectory.as_ref().ok_or_else(|| {
                        Error::Validation(format!("P1 node {} lacks a trajectory", node.id))
                    })?;
                    if trace.max_speed >= self.charger.speed {
                        return Err(Error::Validation(format!(
                            "P1 node {}: max speed {} not below charger speed {}",
                            node.id, trace.max_speed, self.charger.speed
                        )));
                    }
                    let horizon = self.t0 + self.charger.timespan.unwrap();
                    if trace.horizon_end() < horizon - 1e-9 {
                        return Err(Error::Validation(format!(
                            "P1 node {}: trace ends at {} before horizon {}",
                            node.id,
                            trace.horizon_end(),
                            horizon
                        )));
                    }
                }
            }
            Variant::P2FullyChargingReward => {
                if self.charger.energy_capacity.is_none() {
                    return Err(Error::Validation(
                        "P2 requires a charger energy capacity".into(),
                    ));
                }
                for node in &self.nodes {
                    if self.is_requester(node) && node.prize.is_none() {
                        return Err(Error::Validation(format!(
                            "P2 requester {} lacks a prize",
                            node.id
                        )));
                    }
                }
            }
            Variant::P3KCoverage => {
                if self.coverage_k.is_none() {
                    return Err(Error::Validation("P3 requires coverage_k".into()));
                }
                for node in &self.nodes {
                    if node.sensing_radius.is_none() {
                        return Err(Error::Validation(format!(
                            "P3 node {} lacks a sensing radius",
                            node.id
                        )));
                    }
                    if self.is_requester(node) && node.deadline.is_none() {
                        return Err(Error::Validation(format!(
                            "P3 requester {} lacks a deadline",
                            node.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Charging payoff of a requester: proportional to the energy missing from
/// a full battery, clamped into `[1, n^2]`.
pub fn prize_of(node: &SensorNode, n: usize) -> u32 {
    let cap = (n as f64) * (n as f64);
    let missing = (node.battery_capacity - node.residual) / node.battery_capacity;
    let raw = (cap * missing).ceil();
    raw.clamp(1.0, cap) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node_with_residual(residual: f64) -> SensorNode {
        SensorNode::stationary(0, Point::new(0.0, 0.0), 10_800.0, residual)
    }

    #[test]
    fn prize_empty_battery_is_maximal() {
        assert_eq!(prize_of(&node_with_residual(0.0), 10), 100);
    }

    #[test]
    fn prize_full_battery_clamps_to_one() {
        assert_eq!(prize_of(&node_with_residual(10_800.0), 10), 1);
    }

    #[test]
    fn prize_half_battery() {
        assert_eq!(prize_of(&node_with_residual(5_400.0), 10), 50);
    }

    #[test]
    fn stationary_position_ignores_time() {
        let node = node_with_residual(1.0);
        assert_eq!(node.position_at(123.0).unwrap(), Point::new(0.0, 0.0));
    }

    #[test]
    fn trace_linear_midpoint() {
        let trace = MobilityTrace {
            waypoints: vec![
                (0.0, Point::new(0.0, 0.0)),
                (10.0, Point::new(10.0, 0.0)),
            ],
            max_speed: 1.0,
        };
        trace.validate().unwrap();
        assert_eq!(trace.position_at(5.0).unwrap(), Point::new(5.0, 0.0));
    }

    #[test]
    fn trace_segment_interpolation() {
        let trace = MobilityTrace {
            waypoints: vec![
                (0.0, Point::new(0.0, 0.0)),
                (10.0, Point::new(10.0, 0.0)),
                (20.0, Point::new(10.0, 10.0)),
            ],
            max_speed: 1.0,
        };
        assert_eq!(trace.position_at(15.0).unwrap(), Point::new(10.0, 5.0));
    }

    #[test]
    fn trace_rejects_out_of_horizon_queries() {
        let trace = MobilityTrace {
            waypoints: vec![(1.0, Point::new(0.0, 0.0)), (2.0, Point::new(1.0, 0.0))],
            max_speed: 1.0,
        };
        assert!(trace.position_at(0.5).is_err());
        assert!(trace.position_at(2.5).is_err());
    }

    #[test]
    fn trace_rejects_non_increasing_times() {
        let trace = MobilityTrace {
            waypoints: vec![(1.0, Point::new(0.0, 0.0)), (1.0, Point::new(1.0, 0.0))],
            max_speed: 5.0,
        };
        assert!(trace.validate().is_err());
    }

    #[test]
    fn trace_rejects_overspeed_segments() {
        let trace = MobilityTrace {
            waypoints: vec![(0.0, Point::new(0.0, 0.0)), (1.0, Point::new(10.0, 0.0))],
            max_speed: 2.0,
        };
        assert!(trace.validate().is_err());
    }

    #[test]
    fn residual_extrapolation_floors_at_zero() {
        let mut node = node_with_residual(100.0);
        node.consumption_rate = 1.0;
        assert_eq!(node.residual_at(50.0, 0.0), 50.0);
        assert_eq!(node.residual_at(1000.0, 0.0), 0.0);
    }
}
