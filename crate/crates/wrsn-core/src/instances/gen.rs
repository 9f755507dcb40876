//! Randomized instance generation mirroring the simulation settings of the
//! three problems.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{prize_of, Charger, MobilityTrace, ProblemInstance, SensorNode, Variant};
use crate::geometry;
use crate::point::{Point, Rect};
use crate::{Error, Result};

/// Generation knobs with per-variant defaults.
#[derive(Debug, Clone)]
pub struct GenParams {
    pub area: Rect,
    /// Battery capacity `B`, joules; identical across nodes.
    pub battery_capacity: f64,
    /// Request threshold `alpha` (fraction of `B`).
    pub alpha: f64,
    /// P1 charge tolerance `epsilon`.
    pub epsilon_charge: f64,
    pub charger_speed: f64,
    pub transfer_rate: f64,
    /// Travel energy `xi`, joules per meter.
    pub travel_energy: f64,
    /// Charger budget `IE`, joules (P2).
    pub energy_capacity: Option<f64>,
    /// Tour timespan `C`, seconds (P1).
    pub timespan: Option<f64>,
    /// Coverage requirement (P3).
    pub coverage_k: Option<u32>,
    /// Sensing radius, meters (P3).
    pub sensing_radius: f64,
    /// Residual-energy sampling range as fractions of `B`.
    pub residual_range: (f64, f64),
    /// Consumption-rate table bounds, watts (P3 deadlines).
    pub beta_range: (f64, f64),
    /// Mobile-node speed upper bound, m/s (P1).
    pub node_max_speed: f64,
    /// Attempts at a k-covered deployment before giving up (P3).
    pub coverage_retry_budget: usize,
    pub t0: f64,
}

impl GenParams {
    /// Defaults matching the per-problem simulation settings.
    pub fn defaults_for(variant: Variant) -> Self {
        match variant {
            Variant::P1MobilePath => GenParams {
                area: Rect::square(100.0),
                battery_capacity: 10_800.0,
                alpha: 0.9,
                epsilon_charge: 0.1,
                charger_speed: 5.0,
                transfer_rate: 40.0,
                travel_energy: 600.0,
                energy_capacity: None,
                timespan: Some(1_800.0),
                coverage_k: None,
                sensing_radius: 135.0,
                residual_range: (0.0, 1.0),
                beta_range: (0.5, 5.0),
                node_max_speed: 2.0,
                coverage_retry_budget: 200,
                t0: 0.0,
            },
            Variant::P2FullyChargingReward => GenParams {
                area: Rect::square(1_000.0),
                battery_capacity: 10_800.0,
                alpha: 0.2,
                epsilon_charge: 0.0,
                charger_speed: 5.0,
                transfer_rate: 40.0,
                travel_energy: 600.0,
                energy_capacity: Some(300_000.0),
                timespan: None,
                coverage_k: None,
                sensing_radius: 135.0,
                residual_range: (0.0, 1.0),
                beta_range: (0.5, 5.0),
                node_max_speed: 2.0,
                coverage_retry_budget: 200,
                t0: 0.0,
            },
            Variant::P3KCoverage => GenParams {
                area: Rect::square(500.0),
                battery_capacity: 10_800.0,
                alpha: 0.45,
                epsilon_charge: 0.0,
                charger_speed: 5.0,
                transfer_rate: 20.0,
                travel_energy: 600.0,
                energy_capacity: None,
                timespan: None,
                coverage_k: Some(2),
                sensing_radius: 135.0,
                // Residual drawn from (0.54, 10.8] kJ as a fraction of B.
                residual_range: (0.05, 1.0),
                beta_range: (0.5, 5.0),
                node_max_speed: 2.0,
                coverage_retry_budget: 200,
                t0: 0.0,
            },
        }
    }
}

/// Generate a randomized instance. Deterministic in `(variant, n, params, seed)`.
pub fn generate_instance(
    variant: Variant,
    n: usize,
    params: &GenParams,
    seed: u64,
) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::Validation("instance size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = match variant {
        Variant::P1MobilePath => generate_p1(n, params, seed, &mut rng)?,
        Variant::P2FullyChargingReward => generate_p2(n, params, seed, &mut rng),
        Variant::P3KCoverage => generate_p3(n, params, seed, &mut rng)?,
    };
    instance.validate()?;
    Ok(instance)
}

fn uniform_point(area: &Rect, rng: &mut ChaCha8Rng) -> Point {
    Point::new(
        rng.gen_range(area.x0..=area.x1),
        rng.gen_range(area.y0..=area.y1),
    )
}

fn generate_p1(
    n: usize,
    params: &GenParams,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<ProblemInstance> {
    let timespan = params
        .timespan
        .ok_or_else(|| Error::Validation("P1 generation needs a timespan".into()))?;
    let horizon = params.t0 + timespan;
    let nodes = (0..n)
        .map(|id| {
            let residual = rng.gen_range(0.0..=params.battery_capacity);
            let trace = random_waypoint_trace(params, params.t0, horizon, rng);
            let position = trace.waypoints[0].1;
            SensorNode {
                id,
                position,
                battery_capacity: params.battery_capacity,
                residual,
                consumption_rate: 1.0,
                sensing_radius: None,
                deadline: None,
                prize: None,
                trajectory: Some(trace),
            }
        })
        .collect();
    Ok(ProblemInstance {
        variant: Variant::P1MobilePath,
        nodes,
        charger: Charger {
            depot: params.area.center(),
            end_point: Point::new(params.area.x1, params.area.y1),
            speed: params.charger_speed,
            transfer_rate: params.transfer_rate,
            travel_energy: params.travel_energy,
            energy_capacity: None,
            timespan: Some(timespan),
        },
        alpha: params.alpha,
        epsilon_charge: params.epsilon_charge,
        coverage_k: None,
        area: params.area,
        t0: params.t0,
        rng_seed: seed,
    })
}

/// Random-waypoint trace: waypoints uniform in the area, per-leg speed
/// uniform in (0, max]; pre-sampled to cover `[t0, horizon]`.
fn random_waypoint_trace(
    params: &GenParams,
    t0: f64,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> MobilityTrace {
    let mut waypoints = vec![(t0, uniform_point(&params.area, rng))];
    let mut clock = t0;
    while clock < horizon {
        let target = uniform_point(&params.area, rng);
        let speed = rng.gen_range(params.node_max_speed * 0.01..=params.node_max_speed);
        let current = waypoints.last().unwrap().1;
        let dist = current.distance(target);
        if dist < 1e-9 {
            continue;
        }
        clock += dist / speed;
        waypoints.push((clock, target));
    }
    MobilityTrace {
        waypoints,
        max_speed: params.node_max_speed,
    }
}

fn generate_p2(n: usize, params: &GenParams, seed: u64, rng: &mut ChaCha8Rng) -> ProblemInstance {
    let nodes = (0..n)
        .map(|id| {
            // Residual uniform in (0, B].
            let frac = 1.0 - rng.gen_range(0.0..1.0);
            let residual = frac * params.battery_capacity;
            let mut node = SensorNode::stationary(
                id,
                uniform_point(&params.area, rng),
                params.battery_capacity,
                residual,
            );
            if residual <= params.alpha * params.battery_capacity {
                node.prize = Some(prize_of(&node, n));
            }
            node
        })
        .collect();
    let depot = params.area.center();
    ProblemInstance {
        variant: Variant::P2FullyChargingReward,
        nodes,
        charger: Charger {
            depot,
            end_point: depot,
            speed: params.charger_speed,
            transfer_rate: params.transfer_rate,
            travel_energy: params.travel_energy,
            energy_capacity: params.energy_capacity.or(Some(300_000.0)),
            timespan: None,
        },
        alpha: params.alpha,
        epsilon_charge: 0.0,
        coverage_k: None,
        area: params.area,
        t0: params.t0,
        rng_seed: seed,
    }
}

fn generate_p3(
    n: usize,
    params: &GenParams,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<ProblemInstance> {
    let k = params
        .coverage_k
        .ok_or_else(|| Error::Validation("P3 generation needs coverage_k".into()))?;
    let depot = params.area.center();
    for _attempt in 0..params.coverage_retry_budget.max(1) {
        let nodes: Vec<SensorNode> = (0..n)
            .map(|id| {
                let frac =
                    rng.gen_range(params.residual_range.0..=params.residual_range.1);
                let residual = frac * params.battery_capacity;
                let beta = rng.gen_range(params.beta_range.0..=params.beta_range.1);
                let mut node = SensorNode::stationary(
                    id,
                    uniform_point(&params.area, rng),
                    params.battery_capacity,
                    residual,
                );
                node.sensing_radius = Some(params.sensing_radius);
                node.consumption_rate = beta;
                if residual <= params.alpha * params.battery_capacity {
                    node.deadline = Some(residual / beta);
                }
                node
            })
            .collect();
        let instance = ProblemInstance {
            variant: Variant::P3KCoverage,
            nodes,
            charger: Charger {
                depot,
                end_point: depot,
                speed: params.charger_speed,
                transfer_rate: params.transfer_rate,
                travel_energy: params.travel_energy,
                energy_capacity: None,
                timespan: None,
            },
            alpha: params.alpha,
            epsilon_charge: 0.0,
            coverage_k: Some(k),
            area: params.area,
            t0: params.t0,
            rng_seed: seed,
        };
        if geometry::verify_k_coverage(&instance)? {
            return Ok(instance);
        }
    }
    Err(Error::Infeasible(format!(
        "no {k}-covered deployment of {n} nodes found within {} attempts",
        params.coverage_retry_budget
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_instances() {
        let params = GenParams::defaults_for(Variant::P1MobilePath);
        assert!(matches!(
            generate_instance(Variant::P1MobilePath, 0, &params, 1),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        let a = generate_instance(Variant::P2FullyChargingReward, 20, &params, 7).unwrap();
        let b = generate_instance(Variant::P2FullyChargingReward, 20, &params, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(Variant::P2FullyChargingReward, 20, &params, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn p2_requesters_sit_below_threshold() {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        let inst = generate_instance(Variant::P2FullyChargingReward, 50, &params, 7).unwrap();
        assert_eq!(inst.n(), 50);
        for node in &inst.nodes {
            assert_eq!(
                node.prize.is_some(),
                node.residual <= 0.2 * node.battery_capacity,
                "node {} prize presence disagrees with threshold",
                node.id
            );
            assert!(node.residual > 0.0);
        }
    }

    #[test]
    fn p1_traces_cover_the_horizon() {
        let params = GenParams::defaults_for(Variant::P1MobilePath);
        let inst = generate_instance(Variant::P1MobilePath, 10, &params, 3).unwrap();
        for node in &inst.nodes {
            let trace = node.trajectory.as_ref().unwrap();
            assert!(trace.horizon_end() >= 1_800.0);
            trace.validate().unwrap();
        }
    }

    #[test]
    fn p3_deployment_is_k_covered_by_monte_carlo() {
        use rand::Rng;
        let mut params = GenParams::defaults_for(Variant::P3KCoverage);
        params.coverage_k = Some(2);
        params.coverage_retry_budget = 2_000;
        let inst = generate_instance(Variant::P3KCoverage, 32, &params, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100_000 {
            let q = crate::point::Point::new(
                rng.gen_range(inst.area.x0..inst.area.x1),
                rng.gen_range(inst.area.y0..inst.area.y1),
            );
            assert!(
                crate::geometry::coverage_count(&inst.nodes, q) >= 2,
                "point {q} under-covered"
            );
        }
    }

    #[test]
    fn p3_deadlines_match_residual_over_rate() {
        let mut params = GenParams::defaults_for(Variant::P3KCoverage);
        params.coverage_k = Some(2);
        let inst = generate_instance(Variant::P3KCoverage, 32, &params, 3).unwrap();
        for node in &inst.nodes {
            if let Some(d) = node.deadline {
                let implied = node.residual / node.consumption_rate;
                assert!((d - implied).abs() < 1e-12 * implied.max(1.0));
            }
        }
    }
}
