//! Synchronous consensus iteration engines.
//!
//! One step of the quantized engine, for every agent `i` in parallel from
//! iteration-k values:
//!
//! ```text
//! x-update:  ∂f_i(x_i⁺) + 2ρ|N_i| x_i⁺ + α_i − ρ(|N_i| q_i + Σ_j q_j) = 0
//! quantize:  q_i⁺ = Q(x_i⁺)              (own value included)
//! α-update:  α_i⁺ = α_i + ρ(|N_i| q_i⁺ − Σ_j q_j⁺)
//! ```
//!
//! where `q = x_[Q]` are the lattice values agents actually transmit. The
//! exact engine is the same recursion with the identity quantizer, reading
//! the stored real iterates. Alongside the per-agent state the engine
//! tracks the auxiliary pair `z_Q = ½M₊ᵀ x_[Q]` and
//! `β_Q⁺ = β_Q + (ρ/2) M₋ᵀ x_[Q]⁺`, whose G-norm trajectory is the object
//! the convergence certificates speak about.
//!
//! A quantized fixed point is detected exactly: the lattice vectors must be
//! literally unchanged by a step and all agents equal (the latter is the
//! consensus condition `L₋ x_[Q] = 0` on a connected graph, which freezes
//! the α-update).

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::analysis::{g_norm, recover_beta, OptimalPoint};
use crate::error::{invalid, Error, Result};
use crate::graph::{
    build_matrices, is_in_column_space_l_minus, membership_tol, NetworkGraph,
};
use crate::linalg::{axpy, norm2, DenseMat};
use crate::objectives::LocalObjective;
use crate::quantizer::{quantize_vector, QuantizerConfig};

/// Per-agent iterates: the real solution of the local subproblem, its
/// lattice image (what the agent transmits), and the running dual.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: Vec<f64>,
    pub x_q: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub agents: Vec<AgentState>,
    pub iteration: usize,
    /// `½ M₊ᵀ x_[Q]`, kept consistent with the agents after every step.
    pub z_q: Vec<f64>,
    /// Dual companion of α: `α = M₋ β` throughout.
    pub beta_q: Vec<f64>,
}

impl NetworkState {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    /// Block length of each agent vector.
    pub fn dim(&self) -> usize {
        self.agents.first().map_or(0, |a| a.x.len())
    }

    pub fn stacked_x(&self) -> Vec<f64> {
        self.agents.iter().flat_map(|a| a.x.iter().copied()).collect()
    }

    pub fn stacked_x_q(&self) -> Vec<f64> {
        self.agents.iter().flat_map(|a| a.x_q.iter().copied()).collect()
    }

    pub fn stacked_alpha(&self) -> Vec<f64> {
        self.agents.iter().flat_map(|a| a.alpha.iter().copied()).collect()
    }

    /// Exact consensus test on the lattice: all agents carry the same
    /// quantized vector (equivalently `L₋ x_[Q] = 0` on a connected graph).
    pub fn consensus_reached(&self) -> bool {
        let first = &self.agents[0].x_q;
        self.agents.iter().all(|a| a.x_q == *first)
    }

    /// `‖Σᵢ αᵢ‖₂`; stays at zero (up to accumulation) whenever the initial
    /// dual lies in the column space of the signed Laplacian.
    pub fn alpha_sum_norm(&self) -> f64 {
        let m = self.dim();
        let mut sum = vec![0.0; m];
        for a in &self.agents {
            for l in 0..m {
                sum[l] += a.alpha[l];
            }
        }
        norm2(&sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub rho: f64,
    pub delta: f64,
    pub max_iterations: usize,
    /// Stop the quantized engine once a fixed point is confirmed.
    pub detect_fixed_point: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    CAdmm,
    QcAdmm,
}

/// Initial state from stacked `x⁰` and `α⁰` (both length `n·m`). `α⁰` must
/// lie in the column space of the signed Laplacian; the matching minimum-norm
/// dual `β⁰` is recovered from it (zero for the default all-zero start).
pub fn init_state(
    x0: &[f64],
    alpha0: &[f64],
    g: &NetworkGraph,
    q: &QuantizerConfig,
) -> Result<NetworkState> {
    let n = g.n_agents();
    if x0.is_empty() || x0.len() % n != 0 {
        return Err(Error::DimensionMismatch { expected: n, actual: x0.len() });
    }
    if alpha0.len() != x0.len() {
        return Err(Error::DimensionMismatch { expected: x0.len(), actual: alpha0.len() });
    }
    let m = x0.len() / n;
    let beta_q = if alpha0.iter().all(|&v| v == 0.0) {
        vec![0.0; g.num_arcs() * m]
    } else {
        let matrices = build_matrices(g);
        if !is_in_column_space_l_minus(alpha0, &matrices, membership_tol(alpha0))? {
            return Err(invalid(
                "initial dual must lie in the column space of the signed Laplacian",
            ));
        }
        recover_beta(alpha0, &matrices)?
    };
    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let x = x0[i * m..(i + 1) * m].to_vec();
        let (x_q, _) = quantize_vector(&x, q)?;
        let alpha = alpha0[i * m..(i + 1) * m].to_vec();
        agents.push(AgentState { x, x_q, alpha });
    }
    let state = NetworkState { agents, iteration: 0, z_q: Vec::new(), beta_q };
    let z_q = g.half_m_plus_tr(&state.stacked_x_q())?;
    Ok(NetworkState { z_q, ..state })
}

/// One synchronous step of the exact engine: agents exchange their real
/// iterates (no quantization anywhere).
pub fn c_admm_step(
    s: &NetworkState,
    g: &NetworkGraph,
    objs: &[LocalObjective],
    rho: f64,
) -> Result<NetworkState> {
    step_inner(s, g, objs, rho, None)
}

/// One synchronous step of the quantized engine: the x-update reads the
/// iteration-k lattice values (the agent's own included), the fresh iterate
/// is quantized, and the α-update uses the fresh lattice values.
pub fn qc_admm_step(
    s: &NetworkState,
    g: &NetworkGraph,
    objs: &[LocalObjective],
    rho: f64,
    q: &QuantizerConfig,
) -> Result<NetworkState> {
    step_inner(s, g, objs, rho, Some(q))
}

fn step_inner(
    s: &NetworkState,
    g: &NetworkGraph,
    objs: &[LocalObjective],
    rho: f64,
    quantizer: Option<&QuantizerConfig>,
) -> Result<NetworkState> {
    let n = g.n_agents();
    if s.agents.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: s.agents.len() });
    }
    if objs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: objs.len() });
    }
    let m = s.dim();
    let lattice = quantizer.is_some();
    let identity = QuantizerConfig::identity();
    let q = quantizer.unwrap_or(&identity);

    fn shared(agent: &AgentState, lattice: bool) -> &[f64] {
        if lattice {
            &agent.x_q
        } else {
            &agent.x
        }
    }

    // synchronous x-update from iteration-k values
    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let d = g.degree(i);
        let own = shared(&s.agents[i], lattice);
        let mut nbr_sum: Vec<f64> = own.iter().map(|v| d as f64 * v).collect();
        for &j in g.neighbors(i) {
            for (acc, v) in nbr_sum.iter_mut().zip(shared(&s.agents[j], lattice)) {
                *acc += v;
            }
        }
        let x = objs[i].solve_x_update_from(
            rho,
            d,
            &nbr_sum,
            &s.agents[i].alpha,
            Some(&s.agents[i].x),
        )?;
        let (x_q, _) = quantize_vector(&x, q)?;
        agents.push(AgentState { x, x_q, alpha: Vec::new() });
    }

    // α-update from the fresh (quantized) values
    for i in 0..n {
        let d = g.degree(i);
        let own = if lattice { &agents[i].x_q } else { &agents[i].x };
        let mut disagreement: Vec<f64> = own.iter().map(|v| d as f64 * v).collect();
        for &j in g.neighbors(i) {
            let other = if lattice { &agents[j].x_q } else { &agents[j].x };
            for (acc, v) in disagreement.iter_mut().zip(other) {
                *acc -= v;
            }
        }
        let mut alpha = s.agents[i].alpha.clone();
        axpy(&mut alpha, rho, &disagreement);
        agents[i].alpha = alpha;
    }

    let state = NetworkState { agents, iteration: s.iteration + 1, z_q: Vec::new(), beta_q: Vec::new() };
    let transmitted =
        if lattice { state.stacked_x_q() } else { state.stacked_x() };
    let z_q = g.half_m_plus_tr(&transmitted)?;
    let mut beta_q = s.beta_q.clone();
    let incr = g.m_minus_tr(&transmitted)?;
    axpy(&mut beta_q, 0.5 * rho, &incr);
    debug_assert_eq!(m, state.dim());
    Ok(NetworkState { z_q, beta_q, ..state })
}

/// Three-block update of the constrained reformulation in stacked matrix
/// form, with the extended incidence blocks materialized densely. Used as
/// the independent route for equivalence checks against the decentralized
/// recursion.
#[derive(Debug, Clone)]
pub struct CentralizedAdmm {
    /// Tail selector, `2EM × NM`.
    a1: DenseMat,
    /// Head selector, `2EM × NM`.
    a2: DenseMat,
    degrees: Vec<usize>,
    m: usize,
}

/// State of the three-block update: primal `x`, consensus copies `z`, and
/// the dual pair `λ = [β; γ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl CentralizedAdmm {
    pub fn new(g: &NetworkGraph, m: usize) -> Self {
        let n = g.n_agents();
        let arcs = g.num_arcs();
        let mut a1 = DenseMat::zeros(arcs * m, n * m);
        let mut a2 = DenseMat::zeros(arcs * m, n * m);
        for (qi, (tail, head)) in g.arcs().enumerate() {
            for l in 0..m {
                a1[(qi * m + l, tail * m + l)] = 1.0;
                a2[(qi * m + l, head * m + l)] = 1.0;
            }
        }
        let degrees = (0..n).map(|i| g.degree(i)).collect();
        Self { a1, a2, degrees, m }
    }

    /// Initialization that makes the matrix form track the decentralized
    /// recursion: `z⁰ = ½M₊ᵀx⁰` and `λ⁰ = [β⁰; −β⁰]` with `β⁰` in the
    /// column space of `M₋ᵀ`.
    pub fn init_state(&self, x0: &[f64], beta0: &[f64]) -> Result<CentralizedState> {
        let mut z = self.a1.matvec(x0)?;
        let a2x = self.a2.matvec(x0)?;
        for (zi, v) in z.iter_mut().zip(&a2x) {
            *zi = 0.5 * (*zi + v);
        }
        if beta0.len() != z.len() {
            return Err(Error::DimensionMismatch { expected: z.len(), actual: beta0.len() });
        }
        let gamma = beta0.iter().map(|v| -v).collect();
        Ok(CentralizedState { x: x0.to_vec(), z, beta: beta0.to_vec(), gamma })
    }

    pub fn step(
        &self,
        s: &CentralizedState,
        objs: &[LocalObjective],
        rho: f64,
    ) -> Result<CentralizedState> {
        let n = self.degrees.len();
        if objs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: objs.len() });
        }
        // x-update: ∂f(x) + Aᵀλ + ρAᵀ(Ax + Bz) = 0. With AᵀA block-diagonal
        // (2·degree per agent) the minimization separates per agent, with
        // the linear term read off the dense products Aᵀλ and M₊z.
        let mut at_lambda = self.a1.tr_matvec(&s.beta)?;
        let at_gamma = self.a2.tr_matvec(&s.gamma)?;
        for (v, w) in at_lambda.iter_mut().zip(&at_gamma) {
            *v += w;
        }
        let mut m_plus_z = self.a1.tr_matvec(&s.z)?;
        let m_plus_z2 = self.a2.tr_matvec(&s.z)?;
        for (v, w) in m_plus_z.iter_mut().zip(&m_plus_z2) {
            *v += w;
        }
        let m = self.m;
        let mut x = Vec::with_capacity(n * m);
        for i in 0..n {
            let xi = objs[i].solve_x_update_from(
                rho,
                self.degrees[i],
                &m_plus_z[i * m..(i + 1) * m],
                &at_lambda[i * m..(i + 1) * m],
                Some(&s.x[i * m..(i + 1) * m]),
            )?;
            x.extend(xi);
        }
        // z-update: Bᵀλ + ρBᵀ(Ax + Bz⁺) = 0 ⇒ z⁺ = ((β+γ)/ρ + M₊ᵀx)/2
        let a1x = self.a1.matvec(&x)?;
        let a2x = self.a2.matvec(&x)?;
        let mut z = Vec::with_capacity(a1x.len());
        for k in 0..a1x.len() {
            z.push(0.5 * ((s.beta[k] + s.gamma[k]) / rho + a1x[k] + a2x[k]));
        }
        // λ-update: λ⁺ = λ + ρ(Ax + Bz⁺)
        let mut beta = s.beta.clone();
        let mut gamma = s.gamma.clone();
        for k in 0..z.len() {
            beta[k] += rho * (a1x[k] - z[k]);
            gamma[k] += rho * (a2x[k] - z[k]);
        }
        Ok(CentralizedState { x, z, beta, gamma })
    }
}

/// Per-iteration diagnostics row. Error columns are only present when the
/// corresponding reference was supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub iter: usize,
    /// `max_i ‖x_{i[Q]} − x̃*‖₂`
    pub max_agent_error: Option<f64>,
    /// `‖x_[Q] − 1ₙ x̃*‖₂ / √N`
    pub rms_error: Option<f64>,
    /// `‖u_Q − u*‖_G`
    pub g_norm_u_error: Option<f64>,
    pub alpha_sum_norm: f64,
    pub consensus: bool,
    pub fixed_point: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
    pub final_state: NetworkState,
}

impl RunRecord {
    /// Iteration at which the trajectory first provably sat on its limit:
    /// the detector fires at step `k` when the lattice state did not move
    /// between `k−1` and `k`, so the limit was reached at `k−1`.
    pub fn converged_at(&self) -> Option<usize> {
        self.rows.iter().find(|r| r.fixed_point).map(|r| r.iter.saturating_sub(1))
    }

    pub fn final_rms_error(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rms_error)
    }
}

/// Drives one engine for `max_iterations` steps (or until a quantized fixed
/// point when `detect_fixed_point` is set), recording diagnostics per
/// iteration. `x_ref` is the true optimizer used for the agent error
/// columns; `u_ref` is the fixed point used for the G-norm column.
#[allow(clippy::too_many_arguments)]
pub fn run(
    engine: Engine,
    cfg: &RunConfig,
    g: &NetworkGraph,
    objs: &[LocalObjective],
    x0: &[f64],
    alpha0: &[f64],
    x_ref: Option<&[f64]>,
    u_ref: Option<&OptimalPoint>,
) -> Result<RunRecord> {
    if !(cfg.rho > 0.0) || !cfg.rho.is_finite() {
        return Err(invalid("rho must be finite and positive"));
    }
    let q = match engine {
        Engine::CAdmm => QuantizerConfig::identity(),
        Engine::QcAdmm => QuantizerConfig::new(cfg.delta)?,
    };
    let mut state = init_state(x0, alpha0, g, &q)?;
    let mut rows = Vec::with_capacity(cfg.max_iterations + 1);
    rows.push(make_row(&state, cfg.rho, x_ref, u_ref, false));
    for _ in 0..cfg.max_iterations {
        let next = match engine {
            Engine::CAdmm => c_admm_step(&state, g, objs, cfg.rho)?,
            Engine::QcAdmm => qc_admm_step(&state, g, objs, cfg.rho, &q)?,
        };
        let unchanged = next
            .agents
            .iter()
            .zip(&state.agents)
            .all(|(a, b)| a.x_q == b.x_q);
        let fixed = unchanged && next.consensus_reached();
        rows.push(make_row(&next, cfg.rho, x_ref, u_ref, fixed));
        state = next;
        if fixed && cfg.detect_fixed_point && engine == Engine::QcAdmm {
            break;
        }
    }
    Ok(RunRecord { rows, final_state: state })
}

fn make_row(
    s: &NetworkState,
    rho: f64,
    x_ref: Option<&[f64]>,
    u_ref: Option<&OptimalPoint>,
    fixed_point: bool,
) -> RunRow {
    let (max_err, rms) = match x_ref {
        Some(xs) => {
            let mut max_err = 0.0_f64;
            let mut total_sq = 0.0;
            for a in &s.agents {
                let mut d_sq = 0.0;
                for (v, r) in a.x_q.iter().zip(xs) {
                    d_sq += (v - r) * (v - r);
                }
                max_err = max_err.max(d_sq.sqrt());
                total_sq += d_sq;
            }
            (Some(max_err), Some((total_sq / s.n_agents() as f64).sqrt()))
        }
        None => (None, None),
    };
    let g_err = u_ref.map(|u| {
        let dz: Vec<f64> = s.z_q.iter().zip(&u.z_star).map(|(a, b)| a - b).collect();
        let db: Vec<f64> = s.beta_q.iter().zip(&u.beta_star).map(|(a, b)| a - b).collect();
        g_norm(&dz, &db, rho)
    });
    RunRow {
        iter: s.iteration,
        max_agent_error: max_err,
        rms_error: rms,
        g_norm_u_error: g_err,
        alpha_sum_norm: s.alpha_sum_norm(),
        consensus: s.consensus_reached(),
        fixed_point,
    }
}
