//! Seeded experiment sweeps: build graph + problem deterministically, solve
//! the reference, evaluate the certificate, run an engine, and collect
//! per-run rows plus per-point averages. Runs execute concurrently; the
//! output order is fixed by the configuration, so identical configurations
//! produce byte-identical files.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use qcadmm_core::admm::{run, Engine, RunConfig, RunRecord};
use qcadmm_core::analysis::{
    box_gradient_bound, box_q0, compute_certificate, delta_x_box, delta_x_l1, g_norm,
    optimal_point, CertificateInputs, ConvergenceCertificate, DEFAULT_MU,
};
use qcadmm_core::graph::{
    build_matrices, random_connected_graph, spectral_quantities, NetworkGraph,
};
use qcadmm_core::objectives::{build_problem_instance, LocalObjective, Scenario};
use qcadmm_core::oracle::{solve_reference, ReferenceSolution};

pub const REFERENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    QuadraticBox,
    Lasso,
}

impl From<ScenarioKind> for Scenario {
    fn from(s: ScenarioKind) -> Scenario {
        match s {
            ScenarioKind::QuadraticBox => Scenario::QuadraticBox,
            ScenarioKind::Lasso => Scenario::Lasso,
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioKind::QuadraticBox => write!(f, "quadratic_box"),
            ScenarioKind::Lasso => write!(f, "lasso"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    CAdmm,
    QcAdmm,
}

impl From<EngineKind> for Engine {
    fn from(e: EngineKind) -> Engine {
        match e {
            EngineKind::CAdmm => Engine::CAdmm,
            EngineKind::QcAdmm => Engine::QcAdmm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Delta,
    Rho,
    E,
}

fn default_engine() -> EngineKind {
    EngineKind::QcAdmm
}

fn default_mu() -> f64 {
    DEFAULT_MU
}

/// One experiment: a base point plus an optional one-dimensional sweep over
/// `delta`, `rho` or the edge count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub n: usize,
    pub e: usize,
    pub m: usize,
    pub delta: f64,
    pub rho: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub param: Option<SweepParam>,
    #[serde(default)]
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub max_iterations: usize,
    #[serde(default = "default_engine")]
    pub engine: EngineKind,
    #[serde(default)]
    pub output_path: Option<String>,
}

/// Fully-resolved parameters of a single run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPoint {
    pub scenario: ScenarioKind,
    pub n: usize,
    pub e: usize,
    pub m: usize,
    pub delta: f64,
    pub rho: f64,
    pub mu: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub engine: EngineKind,
}

impl RunPoint {
    pub fn from_config(cfg: &ExperimentConfig, seed: u64) -> Self {
        Self {
            scenario: cfg.scenario,
            n: cfg.n,
            e: cfg.e,
            m: cfg.m,
            delta: cfg.delta,
            rho: cfg.rho,
            mu: cfg.mu,
            seed,
            max_iterations: cfg.max_iterations,
            engine: cfg.engine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub n: usize,
    pub e: usize,
    pub m: usize,
    pub delta: f64,
    pub rho: f64,
    pub seed: u64,
    pub final_error: Option<f64>,
    pub iters_to_fixed_point: Option<usize>,
    pub error_bound: Option<f64>,
    pub iter_bound: Option<u64>,
    pub bound_ok: bool,
    /// Per-run failure, recorded without aborting the sweep.
    pub error: Option<String>,
}

/// Arithmetic means over the seeds of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAverage {
    pub delta: f64,
    pub rho: f64,
    pub e: usize,
    pub runs: usize,
    pub avg_final_error: Option<f64>,
    /// Runs that never confirmed a fixed point count as `max_iterations`.
    pub avg_iterations: f64,
    pub avg_error_bound: Option<f64>,
    pub avg_iteration_bound: Option<f64>,
    pub all_bounds_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub averages: Vec<PointAverage>,
}

/// Everything a single run produces, for callers that want the trace.
pub struct SingleRunOutput {
    pub row: SweepRow,
    pub record: RunRecord,
    pub certificate: Option<ConvergenceCertificate>,
    pub graph: NetworkGraph,
    pub objectives: Vec<LocalObjective>,
    pub reference: ReferenceSolution,
}

fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64, usize)>> {
    match cfg.param {
        None => Ok(vec![(cfg.delta, cfg.rho, cfg.e)]),
        Some(param) => {
            if cfg.values.is_empty() {
                bail!("sweep requires a nonempty value list");
            }
            Ok(cfg
                .values
                .iter()
                .map(|&v| match param {
                    SweepParam::Delta => (v, cfg.rho, cfg.e),
                    SweepParam::Rho => (cfg.delta, v, cfg.e),
                    SweepParam::E => (cfg.delta, cfg.rho, v as usize),
                })
                .collect())
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    if cfg.seeds.is_empty() {
        bail!("experiment requires a nonempty seed list");
    }
    let points = sweep_points(cfg)?;
    let tasks: Vec<RunPoint> = points
        .iter()
        .flat_map(|&(delta, rho, e)| {
            cfg.seeds.iter().map(move |&seed| RunPoint {
                scenario: cfg.scenario,
                n: cfg.n,
                e,
                m: cfg.m,
                delta,
                rho,
                mu: cfg.mu,
                seed,
                max_iterations: cfg.max_iterations,
                engine: cfg.engine,
            })
        })
        .collect();

    let rows: Vec<SweepRow> = tasks.par_iter().map(run_row).collect();

    let averages = points
        .iter()
        .map(|&(delta, rho, e)| {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.delta == delta && r.rho == rho && r.e == e)
                .collect();
            point_average(delta, rho, e, cfg.max_iterations, &group)
        })
        .collect();

    Ok(SweepSummary { config: cfg.clone(), rows, averages })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().sum::<f64>() / collected.len() as f64)
    }
}

fn point_average(
    delta: f64,
    rho: f64,
    e: usize,
    max_iterations: usize,
    rows: &[&SweepRow],
) -> PointAverage {
    PointAverage {
        delta,
        rho,
        e,
        runs: rows.len(),
        avg_final_error: mean(rows.iter().filter_map(|r| r.final_error)),
        avg_iterations: mean(
            rows.iter()
                .map(|r| r.iters_to_fixed_point.unwrap_or(max_iterations) as f64),
        )
        .unwrap_or(0.0),
        avg_error_bound: mean(rows.iter().filter_map(|r| r.error_bound)),
        avg_iteration_bound: mean(rows.iter().filter_map(|r| r.iter_bound.map(|v| v as f64))),
        all_bounds_ok: rows.iter().all(|r| r.bound_ok),
    }
}

/// One run, errors folded into the row.
pub fn run_row(point: &RunPoint) -> SweepRow {
    match run_single(point) {
        Ok(out) => out.row,
        Err(err) => SweepRow {
            scenario: point.scenario.to_string(),
            n: point.n,
            e: point.e,
            m: point.m,
            delta: point.delta,
            rho: point.rho,
            seed: point.seed,
            final_error: None,
            iters_to_fixed_point: None,
            error_bound: None,
            iter_bound: None,
            bound_ok: false,
            error: Some(err.to_string()),
        },
    }
}

pub fn run_single(point: &RunPoint) -> Result<SingleRunOutput> {
    run_single_with_objectives(point, None)
}

/// Deterministically prepared context of one run: topology, instance,
/// ground truth, and the smooth-only fixed point the certificates use.
pub struct Prepared {
    pub graph: NetworkGraph,
    pub objectives: Vec<LocalObjective>,
    pub reference: ReferenceSolution,
    pub smooth_reference: ReferenceSolution,
    pub u_prime: qcadmm_core::analysis::OptimalPoint,
}

pub fn prepare(point: &RunPoint, objectives: Option<Vec<LocalObjective>>) -> Result<Prepared> {
    let graph = random_connected_graph(point.n, point.e, point.seed)
        .map_err(|e| anyhow::anyhow!("graph: {e}"))?;
    let objs = match objectives {
        Some(o) => o,
        None => build_problem_instance(point.scenario.into(), point.n, point.m, point.seed)
            .map_err(|e| anyhow::anyhow!("problem: {e}"))?,
    };
    let reference = solve_reference(&objs, false, REFERENCE_TOL)
        .map_err(|e| anyhow::anyhow!("reference: {e}"))?;
    // both scenario families carry non-smooth parts, so certificates are
    // evaluated at the fixed point of the smooth-only problem
    let smooth_reference = solve_reference(&objs, true, REFERENCE_TOL)
        .map_err(|e| anyhow::anyhow!("smooth reference: {e}"))?;
    let u_prime = optimal_point(&graph, &objs, &smooth_reference.x_star)
        .map_err(|e| anyhow::anyhow!("fixed point: {e}"))?;
    Ok(Prepared { graph, objectives: objs, reference, smooth_reference, u_prime })
}

/// Certificate for a prepared context (zero initialization assumed for the
/// distance term).
pub fn certify_prepared(prep: &Prepared, point: &RunPoint) -> Result<ConvergenceCertificate> {
    let mats = build_matrices(&prep.graph);
    let spectral = spectral_quantities(&mats).map_err(|e| anyhow::anyhow!("{e}"))?;
    let delta_x = general_case_delta_x(&prep.graph, &prep.objectives, point)?;
    let u0 = g_norm(&prep.u_prime.z_star, &prep.u_prime.beta_star, point.rho);
    compute_certificate(&CertificateInputs {
        spectral: &spectral,
        objs: &prep.objectives,
        e_edges: prep.graph.num_edges(),
        delta: point.delta,
        rho: point.rho,
        mu: point.mu,
        u0_distance: u0,
        delta_x: Some(delta_x),
    })
    .map_err(|e| anyhow::anyhow!("certificate: {e}"))
}

/// As [`run_single`] but with externally supplied objectives (problem
/// replay); the graph still comes from the seed.
pub fn run_single_with_objectives(
    point: &RunPoint,
    objectives: Option<Vec<LocalObjective>>,
) -> Result<SingleRunOutput> {
    let prep = prepare(point, objectives)?;
    let quantized = matches!(point.engine, EngineKind::QcAdmm) && point.delta > 0.0;
    let certificate =
        if quantized { Some(certify_prepared(&prep, point)?) } else { None };
    let Prepared { graph, objectives: objs, reference, smooth_reference: _, u_prime } = prep;

    let zeros = vec![0.0; point.n * point.m];
    let cfg = RunConfig {
        rho: point.rho,
        delta: point.delta,
        max_iterations: point.max_iterations,
        detect_fixed_point: true,
    };
    let record = run(
        point.engine.into(),
        &cfg,
        &graph,
        &objs,
        &zeros,
        &zeros,
        Some(&reference.x_star),
        Some(&u_prime),
    )
    .map_err(|e| anyhow::anyhow!("run: {e}"))?;

    let final_error = record.final_rms_error();
    let iters = record.converged_at();
    let (error_bound, iter_bound) = match &certificate {
        Some(c) => (Some(c.consensus_error_bound), c.iteration_bound),
        None => (None, None),
    };
    let bound_ok = match &certificate {
        None => true, // no quantization: no bound applies
        Some(c) => {
            let err_ok = final_error.is_some_and(|e| e <= c.consensus_error_bound);
            let iter_ok = match (iters, c.iteration_bound) {
                (Some(k), Some(bound)) => (k as u64) <= bound,
                _ => false,
            };
            err_ok && iter_ok
        }
    };

    let row = SweepRow {
        scenario: point.scenario.to_string(),
        n: point.n,
        e: point.e,
        m: point.m,
        delta: point.delta,
        rho: point.rho,
        seed: point.seed,
        final_error,
        iters_to_fixed_point: iters,
        error_bound,
        iter_bound,
        bound_ok,
        error: None,
    };
    Ok(SingleRunOutput { row, record, certificate, graph, objectives: objs, reference })
}

/// Non-smooth x-update shift bound for the scenario families.
fn general_case_delta_x(
    graph: &NetworkGraph,
    objs: &[LocalObjective],
    point: &RunPoint,
) -> Result<f64> {
    let m_g_min = objs.iter().map(LocalObjective::m_g).fold(f64::INFINITY, f64::min);
    match point.scenario {
        ScenarioKind::Lasso => {
            let xi: Vec<f64> = objs.iter().map(LocalObjective::l1_weight).collect();
            Ok(delta_x_l1(&xi, m_g_min, point.rho, graph.min_degree(), point.m))
        }
        ScenarioKind::QuadraticBox => {
            let n = graph.n_agents();
            let alpha0 = vec![0.0; n]; // zero initialization
            let t_bounds: Vec<f64> = objs
                .iter()
                .map(|o| box_gradient_bound(o).context("box objective expected"))
                .collect::<Result<_>>()?;
            let degrees: Vec<usize> = (0..n).map(|i| graph.degree(i)).collect();
            let (lo, hi) = objs[0].box_bounds().context("box objective expected")?;
            let q0 = box_q0(lo, hi, point.delta);
            let m_gs: Vec<f64> = objs.iter().map(LocalObjective::m_g).collect();
            delta_x_box(&alpha0, &t_bounds, point.rho, &degrees, q0, &m_gs, point.m)
                .map_err(|e| anyhow::anyhow!("{e}"))
        }
    }
}

pub const SWEEP_CSV_HEADER: &str =
    "scenario,n,e,m,delta,rho,seed,final_error,iters_to_fixed_point,error_bound,iter_bound,bound_ok";

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

pub fn summary_to_csv(summary: &SweepSummary) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in &summary.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.n,
            r.e,
            r.m,
            r.delta,
            r.rho,
            r.seed,
            opt_str(&r.final_error),
            opt_str(&r.iters_to_fixed_point),
            opt_str(&r.error_bound),
            opt_str(&r.iter_bound),
            r.bound_ok
        ));
    }
    out
}

pub fn emit_csv(summary: &SweepSummary, path: &Path) -> Result<()> {
    fs::write(path, summary_to_csv(summary))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn emit_json(summary: &SweepSummary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
