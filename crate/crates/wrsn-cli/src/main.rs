use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wrsn_cli::config::{resolve, resolve_opt, ConfigFile};
use wrsn_cli::experiment::{run_experiment, ExperimentSpec, SweepAxis};
use wrsn_cli::runner::{known_solvers, run_solver, SolveOptions, SolverRun};
use wrsn_cli::init_thread_pool;
use wrsn_core::dqn::{train, TrainConfig};
use wrsn_core::embed::EmbeddingParams;
use wrsn_core::envs::{make_env, ChargingEnv};
use wrsn_core::geometry::build_subregions;
use wrsn_core::graph::{build_graph, build_time_expanded_dag};
use wrsn_core::instances::{
    generate_instance, load_instance, save_instance, GenParams, ProblemInstance, Variant,
};

/// Charger scheduling benchmark harness.
#[derive(Parser)]
#[command(name = "wrsn-sched", version, about)]
struct Cli {
    /// Config file with `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a randomized instance file.
    Gen(CommonArgs),
    /// Train DQN parameters and write a checkpoint plus a training log.
    Train(CommonArgs),
    /// Run solvers on one instance and print comparison rows.
    Solve(CommonArgs),
    /// Sweep one axis over several values and write CSV tables.
    Sweep(CommonArgs),
    /// Dump the charging graph (or, with --expanded, the time DAG) as CSV.
    DumpGraph(CommonArgs),
    /// Dump the coverage subregion table as CSV.
    DumpCoverage(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Problem variant: p1 | p2 | p3.
    #[arg(long)]
    variant: Option<String>,
    /// Node count for generated instances.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Coverage requirement (P3).
    #[arg(long)]
    k: Option<u32>,
    /// Request threshold (P2/P3) or required charge level (P1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Charger energy capacity in joules (P2).
    #[arg(long)]
    ie: Option<f64>,
    /// Charger timespan in seconds (P1).
    #[arg(long)]
    timespan: Option<f64>,
    /// Time unit in seconds (DAG solvers, dump-graph --expanded).
    #[arg(long)]
    dt: Option<f64>,
    /// Comma-separated solver list.
    #[arg(long)]
    solvers: Option<String>,
    /// DQN training episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter checkpoint to load (solve) or write (train).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Instance file to load instead of generating.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Sweep axis: n | dt | ie | k | alpha.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated sweep axis values.
    #[arg(long)]
    values: Option<String>,
    /// Repetitions per axis value.
    #[arg(long)]
    reps: Option<usize>,
    /// Training instances per axis value (sweep) or per training run.
    #[arg(long)]
    train_instances: Option<usize>,
    /// Random-baseline restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Dump the time-expanded DAG instead of the static graph.
    #[arg(long, default_value_t = false)]
    expanded: bool,
}

/// Flags merged with the config file.
struct Settings {
    variant: Variant,
    n: usize,
    seed: u64,
    dt: f64,
    episodes: usize,
    train_instances: usize,
    solvers: Vec<String>,
    out: PathBuf,
    checkpoint: Option<PathBuf>,
    instance: Option<PathBuf>,
    axis: SweepAxis,
    values: Vec<f64>,
    reps: usize,
    restarts: usize,
    gen: GenParams,
}

fn default_n(variant: Variant) -> usize {
    match variant {
        Variant::P1MobilePath => 10,
        Variant::P2FullyChargingReward => 30,
        // Random deployments need this many disks before the area corners
        // reach 2-coverage at the default radius.
        Variant::P3KCoverage => 48,
    }
}

fn default_values(variant: Variant, axis: SweepAxis) -> Vec<f64> {
    match (variant, axis) {
        (Variant::P1MobilePath, SweepAxis::NetworkSize) => vec![10.0, 15.0, 20.0],
        (Variant::P2FullyChargingReward, SweepAxis::NetworkSize) => vec![30.0, 60.0],
        (Variant::P3KCoverage, SweepAxis::NetworkSize) => vec![48.0, 64.0],
        (_, SweepAxis::CoverageK) => vec![2.0, 3.0],
        (_, SweepAxis::ChargerCapacity) => vec![200_000.0, 250_000.0, 300_000.0],
        (_, SweepAxis::Threshold) => vec![0.2, 0.4],
        (_, SweepAxis::TimeStep) => vec![1.0, 2.0],
    }
}

fn default_solvers(variant: Variant) -> Vec<String> {
    let list: &[&str] = match variant {
        Variant::P1MobilePath => &["dqn", "greedy", "random"],
        Variant::P2FullyChargingReward => &["dqn", "greedy", "random", "mst", "cmst"],
        Variant::P3KCoverage => &["dqn", "greedy", "random", "acs", "dp"],
    };
    list.iter().map(|s| s.to_string()).collect()
}

fn parse_list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn merge(args: &CommonArgs, config: &ConfigFile) -> Result<Settings> {
    let variant_tag: String = resolve(
        args.variant.clone(),
        config,
        "variant",
        "p2".to_string(),
    )?;
    let variant = Variant::from_tag(&variant_tag).map_err(|e| anyhow!(e.to_string()))?;

    let mut gen = GenParams::defaults_for(variant);
    if variant == Variant::P3KCoverage {
        // Desk-scale default: a low threshold keeps requester counts small
        // enough for the exact solver; the paper's 0.45 stays reachable.
        gen.alpha = 0.2;
    }
    if let Some(alpha) = resolve_opt(args.alpha, config, "alpha")? {
        gen.alpha = alpha;
    }
    if let Some(ie) = resolve_opt(args.ie, config, "ie")? {
        gen.energy_capacity = Some(ie);
    }
    if let Some(timespan) = resolve_opt(args.timespan, config, "timespan")? {
        gen.timespan = Some(timespan);
    }
    if let Some(k) = resolve_opt(args.k, config, "k")? {
        gen.coverage_k = Some(k);
    }

    let axis_tag: String = resolve(args.axis.clone(), config, "axis", "n".to_string())?;
    let axis = SweepAxis::parse(&axis_tag)?;
    let values = match resolve_opt(args.values.clone(), config, "values")? {
        Some(raw) => parse_list(&raw)
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| anyhow!("value `{v}`: {e}")))
            .collect::<Result<Vec<f64>>>()?,
        None => default_values(variant, axis),
    };
    let solvers = match resolve_opt(args.solvers.clone(), config, "solvers")? {
        Some(raw) => parse_list(&raw),
        None => default_solvers(variant),
    };

    Ok(Settings {
        variant,
        n: resolve(args.n, config, "n", default_n(variant))?,
        seed: resolve(args.seed, config, "seed", 0)?,
        dt: resolve(args.dt, config, "dt", 1.0)?,
        episodes: resolve(args.episodes, config, "episodes", 150)?,
        train_instances: resolve(args.train_instances, config, "train_instances", 10)?,
        solvers,
        out: resolve(
            args.out.clone(),
            config,
            "out",
            PathBuf::from("wrsn-out"),
        )?,
        checkpoint: resolve_opt(args.checkpoint.clone(), config, "checkpoint")?,
        instance: resolve_opt(args.instance.clone(), config, "instance")?,
        axis,
        values,
        reps: resolve(args.reps, config, "reps", 3)?,
        restarts: resolve(args.restarts, config, "restarts", 100)?,
        gen,
    })
}

fn obtain_instance(settings: &Settings) -> Result<ProblemInstance> {
    match &settings.instance {
        Some(path) => {
            load_instance(path).with_context(|| format!("loading {}", path.display()))
        }
        None => Ok(generate_instance(
            settings.variant,
            settings.n,
            &settings.gen,
            settings.seed,
        )?),
    }
}

fn instance_filename(instance: &ProblemInstance) -> String {
    format!(
        "wrsn_{}_n{}_seed{}.txt",
        instance.variant.tag(),
        instance.n(),
        instance.rng_seed
    )
}

fn cmd_gen(settings: &Settings) -> Result<i32> {
    let instance = generate_instance(
        settings.variant,
        settings.n,
        &settings.gen,
        settings.seed,
    )?;
    std::fs::create_dir_all(&settings.out)?;
    let path = settings.out.join(instance_filename(&instance));
    save_instance(&instance, &path)?;
    println!("{}", path.display());
    Ok(0)
}

fn cmd_train(settings: &Settings) -> Result<i32> {
    let mut envs: Vec<Box<dyn ChargingEnv>> = Vec::new();
    for i in 0..settings.train_instances.max(1) {
        let seed = settings.seed.wrapping_add(i as u64);
        match generate_instance(settings.variant, settings.n, &settings.gen, seed) {
            Ok(instance) => envs.push(make_env(instance)?),
            Err(err) => eprintln!("skipping training seed {seed}: {err}"),
        }
    }
    if envs.is_empty() {
        bail!("no training instances could be generated");
    }
    let mut config = TrainConfig::defaults_for(settings.variant, settings.episodes);
    config.seed = settings.seed;
    config.p = 32;
    config.rounds = 3;
    config.warmup = 128;
    config.learning_rate = 5e-3;
    let result = train(&envs, &config)?;
    std::fs::create_dir_all(&settings.out)?;
    let checkpoint = settings
        .checkpoint
        .clone()
        .unwrap_or_else(|| settings.out.join("params.txt"));
    result.params.save(&checkpoint)?;
    let log_path = settings.out.join("training_log.csv");
    std::fs::write(&log_path, result.log_csv())?;
    println!("{}", checkpoint.display());
    println!("{}", log_path.display());
    Ok(0)
}

fn cmd_solve(settings: &Settings) -> Result<i32> {
    let instance = obtain_instance(settings)?;
    let variant = instance.variant;
    for solver in &settings.solvers {
        if !known_solvers(variant).contains(&solver.as_str()) {
            bail!("solver `{solver}` does not apply to {}", variant.tag());
        }
    }
    let env = make_env(instance)?;
    let mut opts = SolveOptions {
        dt: settings.dt,
        seed: settings.seed,
        restarts: settings.restarts,
        episodes: settings.episodes,
        ..SolveOptions::default()
    };
    if let Some(path) = &settings.checkpoint {
        opts.dqn_params = Some(EmbeddingParams::load(path)?);
    }
    println!("{}", SolverRun::csv_header());
    let mut any_feasible = false;
    for solver in &settings.solvers {
        let run = run_solver(env.as_ref(), solver, &opts);
        any_feasible |= run.feasible;
        println!("{}", run.csv_row());
    }
    if variant == Variant::P3KCoverage && !any_feasible {
        return Ok(2); // feasibility was required and nobody found a path
    }
    Ok(0)
}

fn cmd_sweep(settings: &Settings) -> Result<i32> {
    let spec = ExperimentSpec {
        variant: settings.variant,
        axis: settings.axis,
        values: settings.values.clone(),
        solvers: settings.solvers.clone(),
        repetitions: settings.reps,
        base_seed: settings.seed,
        n: settings.n,
        episodes: settings.episodes,
        train_instances: settings.train_instances,
        gen: settings.gen.clone(),
        solve: SolveOptions {
            dt: settings.dt,
            restarts: settings.restarts,
            episodes: settings.episodes,
            ..SolveOptions::default()
        },
        out_dir: settings.out.clone(),
    };
    run_experiment(&spec)?;
    println!("{}", settings.out.join("runs.csv").display());
    println!("{}", settings.out.join("aggregate.csv").display());
    println!("{}", settings.out.join("timings.csv").display());
    Ok(0)
}

fn cmd_dump_graph(settings: &Settings, expanded: bool) -> Result<i32> {
    let instance = obtain_instance(settings)?;
    let csv = if expanded {
        build_time_expanded_dag(&instance, settings.dt)?.to_csv()
    } else {
        build_graph(&instance)?.to_csv(&instance)
    };
    emit(settings, "graph.csv", &csv)
}

fn cmd_dump_coverage(settings: &Settings) -> Result<i32> {
    let instance = obtain_instance(settings)?;
    let table = build_subregions(&instance)?;
    emit(settings, "coverage.csv", &table.to_csv())
}

fn emit(settings: &Settings, name: &str, text: &str) -> Result<i32> {
    if settings.out == PathBuf::from("-") {
        print!("{text}");
    } else {
        std::fs::create_dir_all(&settings.out)?;
        let path = settings.out.join(name);
        std::fs::write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(0)
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    init_thread_pool();
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let (args, command): (&CommonArgs, fn(&Settings) -> Result<i32>) = match &cli.command {
        Command::Gen(args) => (args, cmd_gen),
        Command::Train(args) => (args, cmd_train),
        Command::Solve(args) => (args, cmd_solve),
        Command::Sweep(args) => (args, cmd_sweep),
        Command::DumpGraph(args) => {
            let settings = merge(args, &config)?;
            return cmd_dump_graph(&settings, args.expanded);
        }
        Command::DumpCoverage(args) => (args, cmd_dump_coverage),
    };
    let settings = merge(args, &config)?;
    command(&settings)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            // Infeasible results use exit code 2; everything else is a
            // validation/usage failure.
            let code = if err
                .downcast_ref::<wrsn_core::Error>()
                .map(|e| matches!(e, wrsn_core::Error::Infeasible(_)))
                .unwrap_or(false)
            {
                2
            } else {
                1
            };
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
