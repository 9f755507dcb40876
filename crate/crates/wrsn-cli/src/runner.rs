//! Uniform solver dispatch: run a named solver on an environment and
//! collect the comparison metrics.

use std::time::Instant;

use wrsn_core::baselines::{
    acs_solve, brute_force, cmst_solve, dp_kcoverage, greedy_solve, mst_solve, random_solve,
    AcsParams, DpConfig, DEFAULT_BRUTE_LIMIT,
};
use wrsn_core::dqn::{greedy_rollout, train, TrainConfig};
use wrsn_core::embed::EmbeddingParams;
use wrsn_core::envs::{ChargingEnv, ScheduleState};
use wrsn_core::instances::Variant;
use wrsn_core::Error;

/// Solvers applicable to each problem.
pub fn known_solvers(variant: Variant) -> &'static [&'static str] {
    match variant {
        Variant::P1MobilePath => &["dqn", "greedy", "random", "brute"],
        Variant::P2FullyChargingReward => &["dqn", "greedy", "random", "mst", "cmst", "brute"],
        Variant::P3KCoverage => &["dqn", "greedy", "random", "acs", "dp", "brute"],
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// DAG time unit for the exact P3 solver.
    pub dt: f64,
    pub seed: u64,
    /// Random-baseline restarts.
    pub restarts: usize,
    pub brute_limit: usize,
    pub acs: AcsParams,
    /// Trained value-function parameters; when absent, `dqn` trains on the
    /// given instance for `episodes` episodes first.
    pub dqn_params: Option<EmbeddingParams>,
    pub episodes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            dt: 1.0,
            seed: 0,
            restarts: 100,
            brute_limit: DEFAULT_BRUTE_LIMIT,
            acs: AcsParams::default(),
            dqn_params: None,
            episodes: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Infeasible,
    Failed(String),
}

impl RunStatus {
    pub fn tag(&self) -> &str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Failed(_) => "failed",
        }
    }
}

/// One solver execution with the uniform comparison record.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: String,
    pub status: RunStatus,
    pub feasible: bool,
    pub objective: f64,
    pub prize: u64,
    pub visits: usize,
    pub distance_m: f64,
    pub charge_energy_j: f64,
    pub travel_energy_j: f64,
    pub wall_ms: f64,
}

impl SolverRun {
    fn failed(solver: &str, status: RunStatus, wall_ms: f64) -> Self {
        SolverRun {
            solver: solver.to_string(),
            status,
            feasible: false,
            objective: 0.0,
            prize: 0,
            visits: 0,
            distance_m: 0.0,
            charge_energy_j: 0.0,
            travel_energy_j: 0.0,
            wall_ms,
        }
    }

    /// `solver, feasible, objective, distance_m, energy_J, wall_ms` plus a
    /// status column.
    pub fn csv_header() -> &'static str {
        "solver,status,feasible,objective,prize,visits,distance_m,charge_energy_J,travel_energy_J,wall_ms"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.solver,
            self.status.tag(),
            self.feasible,
            self.objective,
            self.prize,
            self.visits,
            self.distance_m,
            self.charge_energy_j,
            self.travel_energy_j,
            self.wall_ms
        )
    }
}

fn record(env: &dyn ChargingEnv, solver: &str, state: ScheduleState, wall_ms: f64) -> SolverRun {
    let feasible = match env.variant() {
        Variant::P3KCoverage => state.coverage_restored(),
        _ => !state.infeasible,
    };
    let distance = env.closed_distance(&state);
    SolverRun {
        solver: solver.to_string(),
        status: if feasible {
            RunStatus::Ok
        } else {
            RunStatus::Infeasible
        },
        feasible,
        objective: env.objective(&state),
        prize: state.prize_total,
        visits: state.visits.len(),
        distance_m: distance,
        charge_energy_j: state.charge_energy_total,
        travel_energy_j: distance * env.instance().charger.travel_energy,
        wall_ms,
    }
}

/// Run one named solver; failures become status rows, never panics.
pub fn run_solver(env: &dyn ChargingEnv, solver: &str, opts: &SolveOptions) -> SolverRun {
    let start = Instant::now();
    let wall = |start: Instant| start.elapsed().as_secs_f64() * 1e3;
    let outcome: Result<ScheduleState, Error> = match solver {
        "greedy" => Ok(greedy_solve(env)),
        "random" => Ok(random_solve(env, opts.seed, opts.restarts)),
        "brute" => brute_force(env, opts.brute_limit),
        "mst" => mst_solve(env),
        "cmst" => cmst_solve(env),
        "acs" => {
            let params = AcsParams {
                seed: opts.seed,
                ..opts.acs.clone()
            };
            acs_solve(env, &params)
        }
        "dp" => dp_kcoverage(
            env.instance(),
            &DpConfig {
                dt: opts.dt,
                ..DpConfig::default()
            },
        ),
        "dqn" => match &opts.dqn_params {
            Some(params) => Ok(greedy_rollout(env, params)),
            None => {
                // No checkpoint: self-train on this instance first.
                let envs: Vec<Box<dyn ChargingEnv>> =
                    vec![wrsn_core::envs::make_env(env.instance().clone())
                        .expect("instance already validated")];
                let mut config = TrainConfig::defaults_for(env.variant(), opts.episodes);
                config.seed = opts.seed;
                config.p = 32;
                config.rounds = 3;
                config.warmup = 64;
                train(&envs, &config).map(|result| greedy_rollout(env, &result.params))
            }
        },
        other => {
            return SolverRun::failed(
                other,
                RunStatus::Failed(format!("unknown solver `{other}`")),
                wall(start),
            )
        }
    };
    match outcome {
        Ok(state) => record(env, solver, state, wall(start)),
        Err(Error::Infeasible(_)) => SolverRun::failed(solver, RunStatus::Infeasible, wall(start)),
        Err(err) => SolverRun::failed(solver, RunStatus::Failed(err.to_string()), wall(start)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use wrsn_core::envs::make_env;
    use wrsn_core::instances::{generate_instance, GenParams};

    #[test]
    fn unknown_solver_is_a_status_row() {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        let inst = generate_instance(Variant::P2FullyChargingReward, 10, &params, 1).unwrap();
        let env = make_env(inst).unwrap();
        let run = run_solver(env.as_ref(), "does-not-exist", &SolveOptions::default());
        assert!(matches!(run.status, RunStatus::Failed(_)));
    }

    #[test]
    fn greedy_produces_a_feasible_p2_record() {
        let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
        let inst = generate_instance(Variant::P2FullyChargingReward, 30, &params, 3).unwrap();
        let env = make_env(inst).unwrap();
        let run = run_solver(env.as_ref(), "greedy", &SolveOptions::default());
        assert_eq!(run.status, RunStatus::Ok);
        assert!(run.feasible);
        assert_eq!(run.charge_energy_j, run.objective);
    }
}
