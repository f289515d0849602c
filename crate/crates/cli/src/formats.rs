//! File formats: graph and problem JSON, per-iteration run traces
//! (CSV/JSON), sweep summaries (CSV/JSON) and certificate JSON.
//!
//! All emitters are bit-stable for fixed inputs: floats go through the
//! shortest round-trip formatting, row order is deterministic, and absent
//! values serialize as empty CSV fields / JSON nulls.

use anyhow::{Context, Result};
use qcadmm_core::admm::RunRecord;
use qcadmm_core::analysis::ConvergenceCertificate;
use qcadmm_core::graph::{NetworkGraph, SpectralData};
use qcadmm_core::linalg::DenseMat;
use qcadmm_core::objectives::LocalObjective;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Wire form of a topology: `{"n": 5, "edges": [[0,1],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GraphFile {
    pub fn from_graph(g: &NetworkGraph) -> Self {
        Self { n: g.n_agents(), edges: g.edges().to_vec() }
    }

    pub fn to_graph(&self) -> Result<NetworkGraph> {
        NetworkGraph::new(self.n, &self.edges).map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading graph file {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing graph file {}", path.display()))
    }
}

/// Serializable objective, one entry per agent.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ObjectiveFile {
    ScaledQuadratic { a: f64, b: Vec<f64> },
    LeastSquaresL1 { a_mat: Vec<Vec<f64>>, y_vec: Vec<f64>, xi: f64 },
    QuadraticBox { a: f64, b: Vec<f64>, lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    pub objectives: Vec<ObjectiveFile>,
}

impl ProblemFile {
    pub fn from_objectives(objs: &[LocalObjective]) -> Self {
        let objectives = objs
            .iter()
            .map(|o| match o {
                LocalObjective::ScaledQuadratic(q) => {
                    ObjectiveFile::ScaledQuadratic { a: q.a(), b: q.b().to_vec() }
                }
                LocalObjective::LeastSquaresL1(l) => {
                    let m = l.a_mat().rows();
                    let rows = (0..m)
                        .map(|r| (0..m).map(|c| l.a_mat()[(r, c)]).collect())
                        .collect();
                    ObjectiveFile::LeastSquaresL1 {
                        a_mat: rows,
                        y_vec: l.y_vec().to_vec(),
                        xi: l.xi(),
                    }
                }
                LocalObjective::QuadraticBox(q) => {
                    let (lo, hi) = q.bounds();
                    ObjectiveFile::QuadraticBox {
                        a: q.a(),
                        b: q.b().to_vec(),
                        lo: lo.to_vec(),
                        hi: hi.to_vec(),
                    }
                }
            })
            .collect();
        Self { objectives }
    }

    pub fn to_objectives(&self) -> Result<Vec<LocalObjective>> {
        self.objectives
            .iter()
            .map(|o| {
                let built = match o.clone() {
                    ObjectiveFile::ScaledQuadratic { a, b } => {
                        LocalObjective::scaled_quadratic(a, b)
                    }
                    ObjectiveFile::LeastSquaresL1 { a_mat, y_vec, xi } => {
                        let rows = a_mat.len();
                        let cols = a_mat.first().map_or(0, Vec::len);
                        let flat: Vec<f64> = a_mat.into_iter().flatten().collect();
                        let mat = DenseMat::from_rows(rows, cols, flat)
                            .map_err(|e| anyhow::anyhow!("{e}"))?;
                        LocalObjective::least_squares_l1(mat, y_vec, xi)
                    }
                    ObjectiveFile::QuadraticBox { a, b, lo, hi } => {
                        LocalObjective::quadratic_box(a, b, lo, hi)
                    }
                };
                built.map_err(|e| anyhow::anyhow!("{e}"))
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading problem file {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing problem file {}", path.display()))
    }
}

pub const RUN_CSV_HEADER: &str =
    "iter,max_agent_error,rms_error,g_norm_u_error,alpha_sum_norm,consensus,fixed_point";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-iteration trace as CSV, one row per iteration starting at 0;
/// reference-dependent columns stay blank when no reference was supplied.
pub fn run_record_to_csv(rec: &RunRecord) -> String {
    let mut out = String::from(RUN_CSV_HEADER);
    out.push('\n');
    for r in &rec.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.iter,
            opt(r.max_agent_error),
            opt(r.rms_error),
            opt(r.g_norm_u_error),
            r.alpha_sum_norm,
            r.consensus,
            r.fixed_point
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRowFile {
    pub iter: usize,
    pub max_agent_error: Option<f64>,
    pub rms_error: Option<f64>,
    pub g_norm_u_error: Option<f64>,
    pub alpha_sum_norm: f64,
    pub consensus: bool,
    pub fixed_point: bool,
}

/// JSON mirror of the CSV columns.
pub fn run_record_to_json(rec: &RunRecord) -> Result<String> {
    let rows: Vec<RunRowFile> = rec
        .rows
        .iter()
        .map(|r| RunRowFile {
            iter: r.iter,
            max_agent_error: r.max_agent_error,
            rms_error: r.rms_error,
            g_norm_u_error: r.g_norm_u_error,
            alpha_sum_norm: r.alpha_sum_norm,
            consensus: r.consensus,
            fixed_point: r.fixed_point,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&serde_json::json!({ "rows": rows }))?)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertificateFile {
    pub mu: f64,
    pub delta_rate: f64,
    pub eta: f64,
    pub tau0: f64,
    pub tau1: Option<f64>,
    pub consensus_error_bound: f64,
    pub omega: Option<f64>,
    pub iteration_bound: Option<u64>,
    pub u0_distance: f64,
}

impl CertificateFile {
    pub fn from_certificate(c: &ConvergenceCertificate) -> Self {
        Self {
            mu: c.mu,
            delta_rate: c.delta_rate,
            eta: c.eta,
            tau0: c.tau0,
            tau1: c.tau1,
            consensus_error_bound: c.consensus_error_bound,
            omega: c.omega,
            iteration_bound: c.iteration_bound,
            u0_distance: c.u0_distance,
        }
    }
}

/// Output of the `graph` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectralFile {
    pub n: usize,
    pub e: usize,
    pub sigma_max_m_plus: f64,
    pub sigma_max_m_minus: f64,
    pub sigma_min_nonzero_m_minus: f64,
}

impl SpectralFile {
    pub fn new(g: &NetworkGraph, s: &SpectralData) -> Self {
        Self {
            n: g.n_agents(),
            e: g.num_edges(),
            sigma_max_m_plus: s.sigma_max_m_plus,
            sigma_max_m_minus: s.sigma_max_m_minus,
            sigma_min_nonzero_m_minus: s.sigma_min_nonzero_m_minus,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcadmm_core::graph::random_connected_graph;
    use qcadmm_core::objectives::{build_problem_instance, Scenario};

    #[test]
    fn graph_file_round_trip() {
        let g = random_connected_graph(7, 11, 4).unwrap();
        let file = GraphFile::from_graph(&g);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: GraphFile = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.to_graph().unwrap(), g);
    }

    #[test]
    fn problem_file_round_trip_both_scenarios() {
        for scenario in [Scenario::QuadraticBox, Scenario::Lasso] {
            let objs = build_problem_instance(scenario, 3, 2, 17).unwrap();
            let file = ProblemFile::from_objectives(&objs);
            let text = serde_json::to_string(&file).unwrap();
            let parsed: ProblemFile = serde_json::from_str(&text).unwrap();
            let rebuilt = parsed.to_objectives().unwrap();
            assert_eq!(rebuilt, objs);
        }
    }

    #[test]
    fn graph_json_shape_is_stable() {
        let g = NetworkGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let text = serde_json::to_string(&GraphFile::from_graph(&g)).unwrap();
        assert_eq!(text, r#"{"n":3,"edges":[[0,1],[1,2]]}"#);
    }
}
