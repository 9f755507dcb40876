//! Experiment sweeps: one axis, several values, several repetitions, every
//! requested solver; per-run rows and aggregates go to CSV files.
//!
//! All result files are byte-deterministic for fixed seeds: wall-clock
//! timings are segregated into `timings.csv` so `runs.csv` and
//! `aggregate.csv` can be compared byte-for-byte across reruns.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use wrsn_core::dqn::{train, TrainConfig};
use wrsn_core::envs::{make_env, ChargingEnv};
use wrsn_core::exec;
use wrsn_core::instances::{generate_instance, GenParams, Variant};

use crate::runner::{known_solvers, run_solver, RunStatus, SolveOptions, SolverRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    NetworkSize,
    TimeStep,
    ChargerCapacity,
    CoverageK,
    Threshold,
}

impl SweepAxis {
    pub fn parse(tag: &str) -> Result<Self> {
        Ok(match tag {
            "n" => SweepAxis::NetworkSize,
            "dt" => SweepAxis::TimeStep,
            "ie" => SweepAxis::ChargerCapacity,
            "k" => SweepAxis::CoverageK,
            "alpha" => SweepAxis::Threshold,
            other => bail!("unknown sweep axis `{other}` (use n|dt|ie|k|alpha)"),
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SweepAxis::NetworkSize => "n",
            SweepAxis::TimeStep => "dt",
            SweepAxis::ChargerCapacity => "ie",
            SweepAxis::CoverageK => "k",
            SweepAxis::Threshold => "alpha",
        }
    }

    fn valid_for(&self, variant: Variant) -> bool {
        match self {
            SweepAxis::NetworkSize | SweepAxis::TimeStep => true,
            SweepAxis::ChargerCapacity => variant == Variant::P2FullyChargingReward,
            SweepAxis::CoverageK => variant == Variant::P3KCoverage,
            SweepAxis::Threshold => variant != Variant::P1MobilePath,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub variant: Variant,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub solvers: Vec<String>,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Node count when the axis is not `n`.
    pub n: usize,
    /// DQN training episodes per axis value.
    pub episodes: usize,
    /// Disjoint training instances per axis value.
    pub train_instances: usize,
    pub gen: GenParams,
    pub solve: SolveOptions,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            bail!("no solvers requested");
        }
        for solver in &self.solvers {
            if !known_solvers(self.variant).contains(&solver.as_str()) {
                bail!(
                    "solver `{solver}` does not apply to {}",
                    self.variant.tag()
                );
            }
        }
        if self.values.is_empty() {
            bail!("sweep needs at least one axis value");
        }
        if !self.axis.valid_for(self.variant) {
            bail!(
                "axis `{}` does not apply to {}",
                self.axis,
                self.variant.tag()
            );
        }
        if self.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        Ok(())
    }

    fn params_for(&self, value: f64) -> (GenParams, usize, SolveOptions) {
        let mut gen = self.gen.clone();
        let mut n = self.n;
        let mut solve = self.solve.clone();
        match self.axis {
            SweepAxis::NetworkSize => n = value.round() as usize,
            SweepAxis::TimeStep => solve.dt = value,
            SweepAxis::ChargerCapacity => gen.energy_capacity = Some(value),
            SweepAxis::CoverageK => gen.coverage_k = Some(value.round() as u32),
            SweepAxis::Threshold => gen.alpha = value,
        }
        (gen, n, solve)
    }
}

/// Deterministic per-cell seeds, disjoint between evaluation and training.
fn eval_seed(base: u64, value_idx: usize, rep: usize) -> u64 {
    base.wrapping_add(1_000 * value_idx as u64)
        .wrapping_add(rep as u64)
}

fn train_seed(base: u64, value_idx: usize, instance: usize) -> u64 {
    base.wrapping_add(900_000)
        .wrapping_add(10_000 * value_idx as u64)
        .wrapping_add(instance as u64)
}

struct CellResult {
    value: f64,
    rep: usize,
    seed: u64,
    runs: Vec<SolverRun>,
}

/// Run the sweep and write `runs.csv`, `aggregate.csv`, `timings.csv`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<()> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir)
        .with_context(|| format!("creating {}", spec.out_dir.display()))?;

    let wants_dqn = spec.solvers.iter().any(|s| s == "dqn");
    // Train once per axis value on a disjoint instance set.
    let mut trained: Vec<Option<wrsn_core::embed::EmbeddingParams>> = Vec::new();
    for (value_idx, &value) in spec.values.iter().enumerate() {
        if !wants_dqn {
            trained.push(None);
            continue;
        }
        let (gen, n, _) = spec.params_for(value);
        let mut envs: Vec<Box<dyn ChargingEnv>> = Vec::new();
        for i in 0..spec.train_instances.max(1) {
            let seed = train_seed(spec.base_seed, value_idx, i);
            match generate_instance(spec.variant, n, &gen, seed) {
                Ok(instance) => envs.push(make_env(instance)?),
                Err(_) => continue, // infeasible deployments are skipped
            }
        }
        if envs.is_empty() {
            trained.push(None);
            continue;
        }
        let mut config = TrainConfig::defaults_for(spec.variant, spec.episodes);
        config.seed = spec.base_seed.wrapping_add(value_idx as u64);
        config.p = 32;
        config.rounds = 3;
        config.warmup = 128;
        config.learning_rate = 5e-3;
        let result = train(&envs, &config)?;
        trained.push(Some(result.params));
    }

    // Evaluation cells run in the worker pool; output order is fixed by the
    // cell list, so files are reproducible regardless of thread count.
    let cells: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.repetitions).map(move |r| (v, r)))
        .collect();
    let trained_ref = &trained;
    let results: Vec<CellResult> = exec::map_collect(cells, |(value_idx, rep)| {
        let value = spec.values[value_idx];
        let (gen, n, mut solve) = spec.params_for(value);
        let seed = eval_seed(spec.base_seed, value_idx, rep);
        solve.seed = seed;
        solve.dqn_params = trained_ref[value_idx].clone();
        let runs = match generate_instance(spec.variant, n, &gen, seed) {
            Err(err) => spec
                .solvers
                .iter()
                .map(|solver| SolverRun {
                    solver: solver.clone(),
                    status: RunStatus::Failed(format!("generation failed: {err}")),
                    feasible: false,
                    objective: 0.0,
                    prize: 0,
                    visits: 0,
                    distance_m: 0.0,
                    charge_energy_j: 0.0,
                    travel_energy_j: 0.0,
                    wall_ms: 0.0,
                })
                .collect(),
            Ok(instance) => match make_env(instance) {
                Err(err) => spec
                    .solvers
                    .iter()
                    .map(|solver| SolverRun {
                        solver: solver.clone(),
                        status: RunStatus::Failed(err.to_string()),
                        feasible: false,
                        objective: 0.0,
                        prize: 0,
                        visits: 0,
                        distance_m: 0.0,
                        charge_energy_j: 0.0,
                        travel_energy_j: 0.0,
                        wall_ms: 0.0,
                    })
                    .collect(),
                Ok(env) => spec
                    .solvers
                    .iter()
                    .map(|solver| run_solver(env.as_ref(), solver, &solve))
                    .collect(),
            },
        };
        CellResult {
            value,
            rep,
            seed,
            runs,
        }
    });

    write_runs(&spec.out_dir.join("runs.csv"), spec, &results)?;
    write_aggregate(&spec.out_dir.join("aggregate.csv"), spec, &results)?;
    write_timings(&spec.out_dir.join("timings.csv"), spec, &results)?;
    Ok(())
}

fn write_runs(path: &Path, spec: &ExperimentSpec, results: &[CellResult]) -> Result<()> {
    let mut out = String::from(
        "variant,axis,value,rep,seed,solver,status,feasible,objective,prize,visits,distance_m,charge_energy_J,travel_energy_J\n",
    );
    for cell in results {
        for run in &cell.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                spec.variant.tag(),
                spec.axis,
                cell.value,
                cell.rep,
                cell.seed,
                run.solver,
                run.status.tag(),
                run.feasible,
                run.objective,
                run.prize,
                run.visits,
                run.distance_m,
                run.charge_energy_j,
                run.travel_energy_j,
            ));
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_aggregate(path: &Path, spec: &ExperimentSpec, results: &[CellResult]) -> Result<()> {
    let mut out = String::from(
        "variant,axis,value,solver,runs,feasible_runs,objective_mean,objective_std,distance_mean_m,travel_energy_mean_J,prize_mean\n",
    );
    for &value in &spec.values {
        for solver in &spec.solvers {
            let rows: Vec<&SolverRun> = results
                .iter()
                .filter(|cell| cell.value == value)
                .flat_map(|cell| cell.runs.iter())
                .filter(|run| &run.solver == solver)
                .collect();
            let feasible: Vec<&&SolverRun> = rows.iter().filter(|r| r.feasible).collect();
            let count = feasible.len();
            let mean = |f: &dyn Fn(&SolverRun) -> f64| -> f64 {
                if count == 0 {
                    0.0
                } else {
                    feasible.iter().map(|r| f(r)).sum::<f64>() / count as f64
                }
            };
            let obj_mean = mean(&|r| r.objective);
            let obj_std = if count == 0 {
                0.0
            } else {
                (feasible
                    .iter()
                    .map(|r| (r.objective - obj_mean).powi(2))
                    .sum::<f64>()
                    / count as f64)
                    .sqrt()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                spec.variant.tag(),
                spec.axis,
                value,
                solver,
                rows.len(),
                count,
                obj_mean,
                obj_std,
                mean(&|r| r.distance_m),
                mean(&|r| r.travel_energy_j),
                mean(&|r| r.prize as f64),
            ));
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_timings(path: &Path, spec: &ExperimentSpec, results: &[CellResult]) -> Result<()> {
    let mut out = String::from("variant,axis,value,rep,solver,wall_ms\n");
    for cell in results {
        for run in &cell.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                spec.variant.tag(),
                spec.axis,
                cell.value,
                cell.rep,
                run.solver,
                run.wall_ms
            ));
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
