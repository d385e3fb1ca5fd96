//! Benchmark sweeps: seeded random queries over a scenario, a grid of
//! algorithms and epsilon values, CSV records and a summary table.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use ixg_core::graph::{GcsGraph, Query, DEFAULT_EDGE_MARGIN};
use ixg_core::lbg::{build_lbg, InterfaceCostMode, LbgTemplate, LowerBoundGraph};
use ixg_core::search::{plan_ixg, plan_ixg_star, PlanResult, PlanStatus, PlannerConfig};

use crate::oracle::{oracle_enumerate_capped, OracleError};
use crate::scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};

/// Queries stay this far inside facet boundaries to avoid degenerate wiring.
pub const QUERY_MARGIN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Graph(#[from] ixg_core::graph::GraphError),
    #[error(transparent)]
    Plan(#[from] ixg_core::search::PlanError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bench spec error: {0}")]
    Spec(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ixg,
    #[serde(rename = "ixgstar")]
    IxgStar,
    Oracle,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algo::Ixg => write!(f, "ixg"),
            Algo::IxgStar => write!(f, "ixgstar"),
            Algo::Oracle => write!(f, "oracle"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchSpec {
    /// Path to a scenario file, exclusive with `scenario_inline`.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default)]
    pub scenario_inline: Option<serde_json::Value>,
    pub queries: usize,
    pub seed: u64,
    pub eps: Vec<f64>,
    pub algos: Vec<Algo>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub continuity: u8,
    #[serde(default)]
    pub allow_cycles: bool,
    #[serde(default = "default_max_visits")]
    pub max_visits: usize,
    #[serde(default)]
    pub lbg_zero_interface: bool,
    #[serde(default = "default_oracle_visits")]
    pub oracle_max_visits: usize,
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: usize,
    #[serde(default)]
    pub max_expansions: Option<usize>,
}

fn default_order() -> usize {
    3
}
fn default_max_visits() -> usize {
    3
}
fn default_oracle_visits() -> usize {
    1
}
fn default_oracle_cap() -> usize {
    crate::oracle::DEFAULT_PATH_CAP
}

/// One row of the result log. Schema v1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub query_index: usize,
    pub algo: Algo,
    pub eps: f64,
    pub status: PlanStatus,
    pub cost: f64,
    pub wall_ms: f64,
    pub expansions: usize,
    pub optimized_edges: usize,
    pub max_subproblem_vars: usize,
}

pub const CSV_HEADER: &str =
    "schema,query_index,algo,eps,status,cost,wall_ms,expansions,optimized_edges,max_subproblem_vars";

pub fn write_csv<W: Write>(records: &[RunRecord], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{:?},{},{},{},{},{}",
            r.schema,
            r.query_index,
            r.algo,
            r.eps,
            r.status,
            r.cost,
            r.wall_ms,
            r.expansions,
            r.optimized_edges,
            r.max_subproblem_vars
        )?;
    }
    Ok(())
}

pub fn load_bench_spec<P: AsRef<Path>>(path: P) -> Result<BenchSpec, BenchError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub struct BenchOutput {
    pub records: Vec<RunRecord>,
    pub summary: String,
    pub lbg_build_ms: f64,
    pub queries: Vec<Query>,
}

/// Run the sweep: one record per (query, algo, eps). The LBG build is timed
/// separately and excluded from per-run wall times.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchOutput, BenchError> {
    let scenario = resolve_scenario(spec)?;
    let graph = GcsGraph::build(scenario.sets.clone(), DEFAULT_EDGE_MARGIN)?;
    let mut cfg = PlannerConfig::new(scenario.weights, scenario.vset.clone());
    cfg.order = spec.order;
    cfg.continuity = spec.continuity;
    cfg.allow_cycles = spec.allow_cycles;
    cfg.max_visits_per_vertex = spec.max_visits;
    cfg.max_expansions = spec.max_expansions;

    let tpl = LbgTemplate::new(spec.order, scenario.weights, scenario.vset.clone()).with_mode(
        if spec.lbg_zero_interface {
            InterfaceCostMode::Zero
        } else {
            InterfaceCostMode::ChordLowerBound
        },
    );
    let t0 = std::time::Instant::now();
    let lbg = build_lbg(&graph, &tpl);
    let lbg_build_ms = t0.elapsed().as_secs_f64() * 1e3;

    let queries = sample_queries(&scenario, spec.queries, spec.seed);
    let mut records = Vec::new();
    for (qi, q) in queries.iter().enumerate() {
        for algo in &spec.algos {
            for &eps in &spec.eps {
                let mut cfg = cfg.clone();
                cfg.epsilon = eps;
                let result = run_one(&graph, &lbg, q, &cfg, *algo, spec)?;
                records.push(RunRecord {
                    schema: 1,
                    query_index: qi,
                    algo: *algo,
                    eps,
                    status: result.status,
                    cost: result.cost,
                    wall_ms: result.stats.wall_ms,
                    expansions: result.stats.expansions,
                    optimized_edges: result.stats.optimized_edges,
                    max_subproblem_vars: result.stats.max_subproblem_vars,
                });
            }
        }
    }
    let summary = summarize(&records);
    Ok(BenchOutput {
        records,
        summary,
        lbg_build_ms,
        queries,
    })
}

fn resolve_scenario(spec: &BenchSpec) -> Result<Scenario, BenchError> {
    match (&spec.scenario, &spec.scenario_inline) {
        (Some(path), None) => {
            let (s, warnings) = load_scenario(path)?;
            for w in warnings {
                eprintln!("scenario warning: {w}");
            }
            Ok(s)
        }
        (None, Some(value)) => {
            let (s, warnings) = parse_scenario(&value.to_string())?;
            for w in warnings {
                eprintln!("scenario warning: {w}");
            }
            Ok(s)
        }
        _ => Err(BenchError::Spec(
            "exactly one of `scenario` and `scenario_inline` required".into(),
        )),
    }
}

fn run_one(
    graph: &GcsGraph,
    lbg: &LowerBoundGraph,
    q: &Query,
    cfg: &PlannerConfig,
    algo: Algo,
    spec: &BenchSpec,
) -> Result<PlanResult, BenchError> {
    Ok(match algo {
        Algo::Ixg => plan_ixg(graph, lbg, q, cfg)?,
        Algo::IxgStar => plan_ixg_star(graph, lbg, q, cfg)?,
        Algo::Oracle => {
            oracle_enumerate_capped(graph, q, spec.oracle_max_visits, cfg, spec.oracle_cap)?
        }
    })
}

/// Rejection-sample query endpoints strictly inside the set cover.
pub fn sample_queries(scenario: &Scenario, count: usize, seed: u64) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<Arc<_>> = scenario.sets.iter().cloned().map(Arc::new).collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let si = rng.gen_range(0..sets.len());
        let gi = rng.gen_range(0..sets.len());
        let start = sets[si].sample_interior(&mut rng, QUERY_MARGIN, 128);
        let goal = sets[gi].sample_interior(&mut rng, QUERY_MARGIN, 128);
        out.push(Query::point_to_point(start, goal));
    }
    out
}

/// Aggregate table in the style of the planner-vs-baseline comparisons:
/// success rate, mean cost, mean time, mean optimized edges per column.
fn summarize(records: &[RunRecord]) -> String {
    use std::collections::BTreeMap;
    let mut cols: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cols.entry(format!("{} (eps={})", r.algo, r.eps))
            .or_default()
            .push(r);
    }
    let mut s = String::new();
    let w = 24;
    s.push_str(&format!("{:<w$}", "", w = w));
    for name in cols.keys() {
        s.push_str(&format!("{name:>w$}"));
    }
    s.push('\n');
    let rows: [(&str, Box<dyn Fn(&[&RunRecord]) -> String>); 4] = [
        (
            "Success Rate (%)",
            Box::new(|rs: &[&RunRecord]| {
                let ok = rs.iter().filter(|r| r.status == PlanStatus::Solved).count();
                format!("{:.1}", 100.0 * ok as f64 / rs.len().max(1) as f64)
            }),
        ),
        (
            "Solution Cost",
            Box::new(|rs: &[&RunRecord]| {
                mean(rs.iter().filter(|r| r.status == PlanStatus::Solved).map(|r| r.cost))
            }),
        ),
        (
            "Planning Time (s)",
            Box::new(|rs: &[&RunRecord]| mean(rs.iter().map(|r| r.wall_ms / 1e3))),
        ),
        (
            "# Optimized Edges",
            Box::new(|rs: &[&RunRecord]| mean(rs.iter().map(|r| r.optimized_edges as f64))),
        ),
    ];
    for (name, f) in rows {
        s.push_str(&format!("{name:<w$}"));
        for rs in cols.values() {
            s.push_str(&format!("{:>w$}", f(rs)));
        }
        s.push('\n');
    }
    s
}

fn mean(values: impl Iterator<Item = f64>) -> String {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        "-".to_string()
    } else {
        format!("{:.4}", v.iter().sum::<f64>() / v.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> BenchSpec {
        BenchSpec {
            scenario: None,
            scenario_inline: Some(serde_json::json!({
                "dimension": 2,
                "generator": { "maze": { "rows": 2, "cols": 3, "seed": 4 } },
                "velocity": { "vmax": 1.0 },
                "weights": { "a": 1.0, "b": 0.1 }
            })),
            queries: 4,
            seed: 11,
            eps: vec![1.0],
            algos: vec![Algo::IxgStar, Algo::Oracle],
            order: 1,
            continuity: 0,
            allow_cycles: false,
            max_visits: 1,
            lbg_zero_interface: false,
            oracle_max_visits: 1,
            oracle_cap: 100_000,
            max_expansions: None,
        }
    }

    #[test]
    fn bench_runs_and_oracle_dominates() {
        let out = run_bench(&small_spec()).unwrap();
        assert_eq!(out.records.len(), 8);
        for qi in 0..4 {
            let star = out
                .records
                .iter()
                .find(|r| r.query_index == qi && r.algo == Algo::IxgStar)
                .unwrap();
            let oracle = out
                .records
                .iter()
                .find(|r| r.query_index == qi && r.algo == Algo::Oracle)
                .unwrap();
            assert_eq!(star.status, PlanStatus::Solved);
            assert_eq!(oracle.status, PlanStatus::Solved);
            assert!(star.cost >= oracle.cost - 1e-6);
        }
        assert!(out.summary.contains("Success Rate"));
    }

    #[test]
    fn bench_is_deterministic_modulo_time() {
        let a = run_bench(&small_spec()).unwrap();
        let b = run_bench(&small_spec()).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.query_index, y.query_index);
            assert_eq!(x.status, y.status);
            assert_eq!(x.cost, y.cost);
            assert_eq!(x.expansions, y.expansions);
            assert_eq!(x.optimized_edges, y.optimized_edges);
        }
    }

    #[test]
    fn csv_round_trip_shape() {
        let out = run_bench(&small_spec()).unwrap();
        let mut buf = Vec::new();
        write_csv(&out.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), out.records.len() + 1);
        assert!(text.starts_with(CSV_HEADER));
    }
}
