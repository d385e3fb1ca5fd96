//! `ixg` command line: plan single queries, build lower-bound-graph caches,
//! and run benchmark sweeps.
//!
//! Exit codes: 0 solved, 2 infeasible, 3 budget exhausted, 4 input error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ixg::bench::{load_bench_spec, run_bench, write_csv};
use ixg::scenario::load_scenario;
use ixg::svg::emit_svg;
use ixg_core::graph::{GcsGraph, Query, DEFAULT_EDGE_MARGIN};
use ixg_core::lbg::{build_lbg, InterfaceCostMode, LbgTemplate, LowerBoundGraph};
use ixg_core::search::{plan_ixg, plan_ixg_star, PlanResult, PlanStatus, PlannerConfig};

#[derive(Parser)]
#[command(name = "ixg", about = "Planning on graphs of convex sets", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a single query on a scenario.
    Plan(PlanArgs),
    /// Build and save the lower-bound graph for a scenario.
    LbgBuild(LbgBuildArgs),
    /// Run a benchmark sweep described by a spec file.
    Bench(BenchArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Start point, comma separated (e.g. `0.5,0.5`).
    #[arg(long)]
    start: String,
    /// Goal point, comma separated.
    #[arg(long)]
    goal: String,
    /// Optional start velocity, comma separated.
    #[arg(long)]
    start_vel: Option<String>,
    /// Optional goal velocity, comma separated.
    #[arg(long)]
    goal_vel: Option<String>,
    #[arg(long, default_value = "ixgstar", value_parser = ["ixg", "ixgstar", "oracle"])]
    algo: String,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    continuity: u8,
    #[arg(long)]
    allow_cycles: bool,
    #[arg(long, default_value_t = 3)]
    max_visits: usize,
    /// Lower-bound-graph cache file (built on the fly when absent).
    #[arg(long)]
    lbg: Option<PathBuf>,
    /// Use zero-cost interface edges when building the LBG in memory.
    #[arg(long)]
    lbg_zero_interface: bool,
    /// Print the expansion log to stderr.
    #[arg(long)]
    trace: bool,
    /// Trajectory CSV output (`t,x1..xd` per line).
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG rendering of the world and solution (2D only).
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Planner statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Expansion budget.
    #[arg(long)]
    max_expansions: Option<usize>,
}

#[derive(Args)]
struct LbgBuildArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use the literal zero-cost interface edges.
    #[arg(long)]
    lbg_zero_interface: bool,
    #[arg(long, default_value_t = 3)]
    order: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(4)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Plan(args) => plan(args),
        Command::LbgBuild(args) => lbg_build(args),
        Command::Bench(args) => bench(args),
    }
}

fn parse_point(s: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| anyhow::anyhow!("bad {what} `{s}`: {e}"))
}

fn plan(args: PlanArgs) -> anyhow::Result<ExitCode> {
    let (scenario, warnings) = load_scenario(&args.scenario)?;
    for w in warnings {
        eprintln!("scenario warning: {w}");
    }
    let graph = GcsGraph::build(scenario.sets.clone(), DEFAULT_EDGE_MARGIN)?;

    let mut cfg = PlannerConfig::new(scenario.weights, scenario.vset.clone());
    cfg.epsilon = args.eps;
    cfg.order = args.order;
    cfg.continuity = args.continuity;
    cfg.allow_cycles = args.allow_cycles;
    cfg.max_visits_per_vertex = args.max_visits;
    cfg.max_expansions = args.max_expansions;
    cfg.trace = args.trace;

    let mode = if args.lbg_zero_interface {
        InterfaceCostMode::Zero
    } else {
        InterfaceCostMode::ChordLowerBound
    };
    let tpl = LbgTemplate::new(cfg.order, cfg.weights, cfg.vset.clone()).with_mode(mode);
    let lbg = match &args.lbg {
        Some(path) if path.exists() => LowerBoundGraph::load(path, tpl.cache_key(&graph))?,
        Some(path) => {
            let lbg = build_lbg(&graph, &tpl);
            lbg.save(path)?;
            eprintln!("lbg cache written to {}", path.display());
            lbg
        }
        None => build_lbg(&graph, &tpl),
    };

    let mut query = Query::point_to_point(
        parse_point(&args.start, "--start")?,
        parse_point(&args.goal, "--goal")?,
    );
    if let Some(v) = &args.start_vel {
        query = query.with_start_velocity(parse_point(v, "--start-vel")?);
    }
    if let Some(v) = &args.goal_vel {
        query = query.with_goal_velocity(parse_point(v, "--goal-vel")?);
    }

    let result: PlanResult = match args.algo.as_str() {
        "ixg" => plan_ixg(&graph, &lbg, &query, &cfg)?,
        "ixgstar" => plan_ixg_star(&graph, &lbg, &query, &cfg)?,
        "oracle" => ixg::oracle::oracle_enumerate(&graph, &query, cfg.max_visits_per_vertex, &cfg)?,
        other => anyhow::bail!("unknown algorithm `{other}`"),
    };

    if args.trace {
        for line in &result.stats.trace {
            eprintln!("{line}");
        }
    }
    match result.status {
        PlanStatus::Solved => println!(
            "solved: cost {:.6}, {} expansions, {} optimized edges, {:.1} ms",
            result.cost,
            result.stats.expansions,
            result.stats.optimized_edges,
            result.stats.wall_ms
        ),
        PlanStatus::Infeasible => println!("infeasible"),
        PlanStatus::BudgetExhausted => println!("budget exhausted"),
    }

    if let (Some(path), Some(traj)) = (&args.out, result.trajectory.as_ref()) {
        let mut f = std::fs::File::create(path)?;
        writeln!(
            f,
            "t,{}",
            (1..=scenario.dimension)
                .map(|i| format!("x{i}"))
                .collect::<Vec<_>>()
                .join(",")
        )?;
        for (t, p) in traj.sample(256) {
            let coords = p.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
            writeln!(f, "{t},{coords}")?;
        }
    }
    if let Some(path) = &args.svg {
        emit_svg(&scenario.sets, result.trajectory.as_ref(), Some(&lbg), path)?;
    }
    if let Some(path) = &args.stats {
        let doc = serde_json::json!({
            "status": result.status,
            "cost": if result.cost.is_finite() { Some(result.cost) } else { None },
            "path": result.path,
            "stats": result.stats,
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }

    Ok(match result.status {
        PlanStatus::Solved => ExitCode::SUCCESS,
        PlanStatus::Infeasible => ExitCode::from(2),
        PlanStatus::BudgetExhausted => ExitCode::from(3),
    })
}

fn lbg_build(args: LbgBuildArgs) -> anyhow::Result<ExitCode> {
    let (scenario, warnings) = load_scenario(&args.scenario)?;
    for w in warnings {
        eprintln!("scenario warning: {w}");
    }
    let graph = GcsGraph::build(scenario.sets.clone(), DEFAULT_EDGE_MARGIN)?;
    let mode = if args.lbg_zero_interface {
        InterfaceCostMode::Zero
    } else {
        InterfaceCostMode::ChordLowerBound
    };
    let tpl = LbgTemplate::new(args.order, scenario.weights, scenario.vset).with_mode(mode);
    let t0 = std::time::Instant::now();
    let lbg = build_lbg(&graph, &tpl);
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    lbg.save(&args.out)?;
    println!(
        "lbg: {} vertices, {} edges, {} cached triplets ({} infeasible), built in {:.1} ms",
        lbg.vertex_count(),
        lbg.edge_count(),
        lbg.triplet_count(),
        lbg.stats.triplets_infeasible,
        ms
    );
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let spec = load_bench_spec(&args.spec)?;
    let out = run_bench(&spec)?;
    let mut f = std::fs::File::create(&args.out)?;
    write_csv(&out.records, &mut f)?;
    println!("lbg build: {:.1} ms (excluded from planning times)", out.lbg_build_ms);
    println!("{}", out.summary);
    println!("{} records written to {}", out.records.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
