//! Cross-module invariants checked over randomized inputs.

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wrsn_core::baselines;
use wrsn_core::embed::{batch_loss_and_grads, EmbeddingParams, LossSample, FEATURE_WIDTH};
use wrsn_core::envs::{make_env, ChargingEnv};
use wrsn_core::graph::build_graph;
use wrsn_core::instances::{
    generate_instance, Charger, GenParams, ProblemInstance, SensorNode, Variant,
};
use wrsn_core::point::{Point, Rect};

/// Small P3 instance with blanket coverage so feasibility is about
/// deadlines, not geometry.
fn small_p3(seed: u64, n: usize, k: u32) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = Rect::square(120.0);
    let nodes = (0..n)
        .map(|id| {
            let residual = rng.gen_range(500.0..9_500.0);
            let mut node = SensorNode::stationary(
                id,
                Point::new(rng.gen_range(0.0..120.0), rng.gen_range(0.0..120.0)),
                10_800.0,
                residual,
            );
            node.sensing_radius = Some(220.0); // every disk covers the area
            node.consumption_rate = rng.gen_range(0.5..3.0);
            if residual <= 0.6 * 10_800.0 {
                node.deadline = Some(residual / node.consumption_rate);
            }
            node
        })
        .collect();
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
        alpha: 0.6,
        epsilon_charge: 0.0,
        coverage_k: Some(k),
        area,
        t0: 0.0,
        rng_seed: seed,
    }
}

fn random_episode(env: &dyn ChargingEnv, seed: u64) -> (f64, wrsn_core::envs::ScheduleState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = env.initial_state();
    let mut reward_sum = 0.0;
    loop {
        let actions = env.actions(&state);
        if actions.is_empty() {
            break;
        }
        let vertex = actions[rng.gen_range(0..actions.len())];
        let outcome = env.step(&state, vertex);
        if outcome.reward.is_finite() {
            reward_sum += outcome.reward;
        }
        state = outcome.next_state;
        if outcome.terminal {
            break;
        }
    }
    (reward_sum, state)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn p2_rewards_telescope_and_budget_holds(seed in 0u64..500) {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        let inst = generate_instance(Variant::P2FullyChargingReward, 25, &params, seed).unwrap();
        let budget = inst.charger.energy_capacity.unwrap();
        let xi = inst.charger.travel_energy;
        let env = make_env(inst).unwrap();
        let (rewards, terminal) = random_episode(env.as_ref(), seed);
        prop_assert!((rewards - env.objective(&terminal)).abs()
            <= 1e-9 * env.objective(&terminal).abs().max(1.0));
        let used = terminal.charge_energy_total + env.closed_distance(&terminal) * xi;
        prop_assert!(used <= budget + 1e-6);
    }

    #[test]
    fn p1_rewards_telescope_and_timespan_holds(seed in 0u64..500) {
        let mut params = GenParams::defaults_for(Variant::P1MobilePath);
        params.timespan = Some(900.0);
        let inst = generate_instance(Variant::P1MobilePath, 8, &params, seed).unwrap();
        let timespan = inst.charger.timespan.unwrap();
        let speed = inst.charger.speed;
        let end = inst.charger.end_point;
        let t0 = inst.t0;
        let env = make_env(inst).unwrap();
        let (rewards, terminal) = random_episode(env.as_ref(), seed);
        // Counting objective: exact integer equality.
        prop_assert_eq!(rewards, env.objective(&terminal));
        prop_assert_eq!(rewards as usize, terminal.visits.len());
        let head = terminal.head_position(end);
        let total_time = (terminal.clock - t0) + head.distance(end) / speed;
        prop_assert!(total_time <= timespan + 1e-9);
    }

    #[test]
    fn p3_rewards_telescope_and_deadlines_hold(seed in 0u64..500, n in 3usize..7, k in 1u32..3) {
        let inst = small_p3(seed, n, k);
        prop_assume!(wrsn_core::geometry::verify_k_coverage(&inst).unwrap());
        let env = make_env(inst.clone()).unwrap();
        let (rewards, terminal) = random_episode(env.as_ref(), seed);
        prop_assert!(!terminal.infeasible);
        prop_assert!((rewards - env.objective(&terminal)).abs()
            <= 1e-9 * env.objective(&terminal).abs().max(1.0));
        // Every accepted visit begins charging before its deadline.
        for visit in &terminal.visits {
            let deadline = inst.t0 + inst.nodes[visit.node].deadline.unwrap();
            prop_assert!(visit.arrival <= deadline + 1e-9);
        }
        // Restored coverage per the table implies restored coverage per a
        // fresh geometry pass with charged nodes healthy.
        if terminal.coverage_restored() {
            let mut healthy = inst.clone();
            for id in terminal.charged_nodes() {
                healthy.nodes[id].residual = healthy.nodes[id].battery_capacity;
                healthy.nodes[id].deadline = None;
            }
            prop_assert!(wrsn_core::geometry::verify_k_coverage(&healthy).unwrap());
        }
    }

    #[test]
    fn cached_state_equals_replay(seed in 0u64..300) {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        let inst = generate_instance(Variant::P2FullyChargingReward, 20, &params, seed).unwrap();
        let env = make_env(inst).unwrap();
        let (_, terminal) = random_episode(env.as_ref(), seed);
        let replayed = env.replay(&terminal.order());
        prop_assert!((terminal.travel_distance - replayed.travel_distance).abs() < 1e-9);
        prop_assert!((terminal.charge_energy_total - replayed.charge_energy_total).abs() < 1e-9);
        prop_assert!((terminal.clock - replayed.clock).abs() < 1e-9);
    }

    #[test]
    fn graph_weights_are_symmetric_with_triangle_inequality(seed in 0u64..300) {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        let inst = generate_instance(Variant::P2FullyChargingReward, 15, &params, seed).unwrap();
        let graph = build_graph(&inst).unwrap();
        let m = graph.vertex_count();
        for a in 0..m {
            for b in 0..m {
                prop_assert!((graph.weight(&inst, a, b) - graph.weight(&inst, b, a)).abs() < 1e-12);
                for c in 0..m {
                    prop_assert!(graph.weight(&inst, a, c)
                        <= graph.weight(&inst, a, b) + graph.weight(&inst, b, c) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn p3_insertion_matches_exhaustive_scan(seed in 0u64..200) {
        let inst = small_p3(seed, 6, 1);
        prop_assume!(wrsn_core::geometry::verify_k_coverage(&inst).unwrap());
        let graph = build_graph(&inst).unwrap();
        let env = wrsn_core::envs::P3Env::new(inst, graph).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        // Random partial path of accepted steps.
        let mut state = env.initial_state();
        for _ in 0..3 {
            let actions = env.actions(&state);
            if actions.is_empty() {
                break;
            }
            let v = actions[rng.gen_range(0..actions.len())];
            let outcome = env.step(&state, v);
            if outcome.rejected {
                break;
            }
            state = outcome.next_state;
            if outcome.terminal {
                break;
            }
        }
        for v in env.actions(&state) {
            if let Some((index, delta)) = env.best_feasible_insertion(&state, v) {
                // Oracle: evaluate every position by full replay.
                let order = state.order();
                let base = env.closed_distance(&state);
                let mut best_delta = f64::INFINITY;
                for i in 0..=order.len() {
                    let mut candidate = order.clone();
                    candidate.insert(i, v);
                    let replayed = env.replay(&candidate);
                    if replayed.infeasible {
                        continue;
                    }
                    let d = env.closed_distance(&replayed) - base;
                    if d < best_delta - 1e-12 {
                        best_delta = d;
                    }
                }
                prop_assert!((delta - best_delta).abs() < 1e-9,
                    "insertion at {index} delta {delta} vs oracle {best_delta}");
            }
        }
    }
}

#[test]
fn frozen_batch_loss_decreases_on_most_seeds() {
    let mut improving = 0;
    let seeds = 20;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = EmbeddingParams::init(4, 2, seed);
        let n = 6;
        let features = ndarray::Array2::from_shape_fn((n, FEATURE_WIDTH), |_| {
            rng.gen_range(-1.0..1.0)
        });
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.gen_bool(0.5) {
                    edges.push((a, b, rng.gen_range(0.05..1.0)));
                }
            }
        }
        let targets: Vec<(usize, f64)> = (0..4)
            .map(|i| (i, rng.gen_range(-1.0..1.0)))
            .collect();
        let loss_of = |params: &EmbeddingParams| {
            let samples: Vec<LossSample<'_>> = targets
                .iter()
                .map(|&(vertex, target)| LossSample {
                    features: &features,
                    edges: &edges,
                    vertex,
                    target,
                })
                .collect();
            batch_loss_and_grads(&samples, params)
        };
        let (initial, _) = loss_of(&params);
        for _ in 0..50 {
            let (_, grads) = loss_of(&params);
            params.apply_gradient(&grads, 0.01);
        }
        let (final_loss, _) = loss_of(&params);
        if final_loss < initial {
            improving += 1;
        }
    }
    assert!(
        improving * 100 >= seeds * 95,
        "loss decreased on only {improving}/{seeds} seeds"
    );
}

#[test]
fn dp_matches_dag_brute_force_on_small_instances() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 8 && seed < 200 {
        seed += 1;
        let inst = small_p3(seed, 5, 2);
        if !wrsn_core::geometry::verify_k_coverage(&inst).unwrap() {
            continue;
        }
        checked += 1;
        let dp = baselines::dp_kcoverage(&inst, &baselines::DpConfig::default());
        let oracle = baselines::brute_force_dag(&inst, 1.0, 8).unwrap();
        match (dp, oracle) {
            (Ok(state), Some(best)) => {
                let dp_total = state.travel_distance
                    + state
                        .visits
                        .last()
                        .map(|v| v.position.distance(inst.charger.depot))
                        .unwrap_or(0.0);
                assert!(
                    (dp_total - best).abs() < 1e-9,
                    "seed {seed}: dp {dp_total} vs oracle {best}"
                );
            }
            (Err(wrsn_core::Error::Infeasible(_)), None) => {}
            (dp, oracle) => panic!("seed {seed}: dp {dp:?} vs oracle {oracle:?} disagree"),
        }
    }
    assert!(checked >= 5, "too few covered deployments sampled");
}

#[test]
fn acs_incumbent_is_monotone() {
    let mut seed = 0;
    let mut checked = 0;
    while checked < 3 && seed < 100 {
        seed += 1;
        let inst = small_p3(seed, 6, 2);
        if !wrsn_core::geometry::verify_k_coverage(&inst).unwrap() {
            continue;
        }
        checked += 1;
        let env = make_env(inst).unwrap();
        let params = baselines::AcsParams {
            agents: 8,
            iterations: 40,
            seed,
            ..Default::default()
        };
        if let Ok((_, incumbents)) = baselines::acs_solve_traced(env.as_ref(), &params) {
            for pair in incumbents.windows(2) {
                assert!(pair[1] <= pair[0], "incumbent regressed: {pair:?}");
            }
        }
    }
}
