//! Closed-form convergence certificates for the quantized consensus
//! recursion, plus the G-norm machinery they are stated in.
//!
//! The exact recursion contracts the auxiliary vector `u = [z; β]` in the
//! block-weighted norm `‖u‖_G = √(ρ‖z‖² + ‖β‖²/ρ)` with factor `1/(1+η)`,
//! `η = √(1+δ) − 1`. Quantization perturbs each update by a term whose
//! G-norm is bounded by `τ₀` (smooth objectives) or `τ₁` (general
//! objectives), which yields a consensus-error bound independent of the
//! network size and an iteration-count bound `⌈log_{1+η} Ω⌉`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::graph::{
    build_matrices, is_in_column_space_l_minus, membership_tol, GraphMatrices, NetworkGraph,
    SpectralData,
};
use crate::linalg::{pinv_apply, symmetric_eigen};
use crate::objectives::LocalObjective;

/// Default curvature parameter for the contraction certificate.
pub const DEFAULT_MU: f64 = 1.5;
/// Default step parameter.
pub const DEFAULT_RHO: f64 = 1.0;

/// Relative eigenvalue cutoff for pseudoinverse solves.
const PINV_CUTOFF: f64 = 1e-10;

/// Every closed-form bound for one configured instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCertificate {
    pub mu: f64,
    /// Contraction margin δ.
    pub delta_rate: f64,
    /// Linear rate η = √(1+δ) − 1; per-step contraction factor is 1/(1+η).
    pub eta: f64,
    /// Per-step G-norm bound on the quantization error term, smooth case.
    pub tau0: f64,
    /// General-case counterpart (requires a bound Δₓ on the x-update shift
    /// induced by the non-smooth part).
    pub tau1: Option<f64>,
    /// Upper bound on the distance between the consensus value and the true
    /// optimum.
    pub consensus_error_bound: f64,
    /// Ω, the argument of the iteration-count bound (undefined for Δ = 0).
    pub omega: Option<f64>,
    /// `⌈log_{1+η} Ω⌉` (undefined for Δ = 0).
    pub iteration_bound: Option<u64>,
    /// `‖u⁰ − u*‖_G` used when evaluating Ω.
    pub u0_distance: f64,
}

/// The fixed point of the exact recursion, expressed in every coordinate
/// system the diagnostics need: the optimizer `x̃*`, its arc copy
/// `z* = ½M₊ᵀ(1ₙ ⊗ x̃*)`, the dual limit `α* = −∇g(1ₙ ⊗ x̃*)` and the
/// matching minimum-norm `β*` with `M₋ β* = α*`.
///
/// The sign of `α*` is forced by the x-update: at consensus the curvature
/// and neighborhood terms cancel, leaving `∇g_i(x̃*) + α_i* = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPoint {
    pub x_star: Vec<f64>,
    pub z_star: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub beta_star: Vec<f64>,
}

/// `√(ρ‖z‖² + ‖β‖²/ρ)`.
pub fn g_norm(z: &[f64], beta: &[f64], rho: f64) -> f64 {
    debug_assert!(rho > 0.0);
    let zz: f64 = z.iter().map(|v| v * v).sum();
    let bb: f64 = beta.iter().map(|v| v * v).sum();
    (rho * zz + bb / rho).sqrt()
}

/// Contraction margin δ and rate η for given spectral data, extreme moduli
/// `m_g = min_i m_{g_i}`, `M_g = max_i M_{g_i}`, and parameters `ρ`, `μ > 1`.
pub fn compute_eta(
    spec: &SpectralData,
    m_g: f64,
    big_m_g: f64,
    rho: f64,
    mu: f64,
) -> Result<(f64, f64)> {
    if !(mu > 1.0) {
        return Err(invalid("mu must be > 1"));
    }
    if !(rho > 0.0) || !(m_g > 0.0) || big_m_g < m_g {
        return Err(invalid("need rho > 0 and 0 < m_g <= M_g"));
    }
    let s2_plus = spec.sigma_max_m_plus * spec.sigma_max_m_plus;
    let s2_min_minus = spec.sigma_min_nonzero_m_minus * spec.sigma_min_nonzero_m_minus;
    let first = (mu - 1.0) * s2_min_minus / (mu * s2_plus);
    let second =
        4.0 * rho * m_g * s2_min_minus / (rho * rho * s2_plus * s2_min_minus + mu * big_m_g * big_m_g);
    let delta = first.min(second);
    Ok((delta, (1.0 + delta).sqrt() - 1.0))
}

/// `τ₀ = ¼ Δ √(ρ M (σ²max(M₊) + σ²max(M₋)))`.
pub fn compute_tau0(delta_q: f64, rho: f64, m_dim: usize, spec: &SpectralData) -> f64 {
    let s2 = spec.sigma_max_m_plus * spec.sigma_max_m_plus
        + spec.sigma_max_m_minus * spec.sigma_max_m_minus;
    0.25 * delta_q * (rho * m_dim as f64 * s2).sqrt()
}

/// `τ₁ = (½Δₓ + ¼Δ√M) √(ρσ²max(M₊) + σ²max(M₋)/ρ)`.
pub fn compute_tau1(
    delta_x: f64,
    delta_q: f64,
    m_dim: usize,
    rho: f64,
    spec: &SpectralData,
) -> f64 {
    let s2_plus = spec.sigma_max_m_plus * spec.sigma_max_m_plus;
    let s2_minus = spec.sigma_max_m_minus * spec.sigma_max_m_minus;
    (0.5 * delta_x + 0.25 * delta_q * (m_dim as f64).sqrt())
        * (rho * s2_plus + s2_minus / rho).sqrt()
}

/// `(½ + ρ·2E / Σᵢ m_{g_i}) √M Δ`.
pub fn consensus_error_bound(
    rho: f64,
    e_edges: usize,
    sum_m_g: f64,
    m_dim: usize,
    delta_q: f64,
) -> f64 {
    (0.5 + rho * 2.0 * e_edges as f64 / sum_m_g) * (m_dim as f64).sqrt() * delta_q
}

/// Iteration-count bound: returns `(Ω, ⌈log_{1+η} Ω⌉)` where
///
/// ```text
/// Ω = max{ 3√ρ σmax(M₋)(1+η)² (u0 + τ) / (ηΔ),
///          3(1+η)(u0 + τ) / (√(2ρE) ηΔ) }
/// ```
///
/// `τ` is `τ₀` for smooth objectives and `τ₁` in general. Undefined for
/// Δ = 0 (the recursion only freezes onto a lattice point when there is a
/// lattice).
pub fn iteration_bound(
    eta: f64,
    delta_q: f64,
    rho: f64,
    e_edges: usize,
    spec: &SpectralData,
    u0_distance: f64,
    tau: f64,
) -> Result<(f64, u64)> {
    if delta_q <= 0.0 {
        return Err(invalid("iteration bound requires a positive quantization resolution"));
    }
    if !(eta > 0.0) || !(rho > 0.0) || e_edges == 0 {
        return Err(invalid("need eta > 0, rho > 0 and at least one edge"));
    }
    let reach = u0_distance + tau;
    let first =
        3.0 * rho.sqrt() * spec.sigma_max_m_minus * (1.0 + eta) * (1.0 + eta) * reach
            / (eta * delta_q);
    let second =
        3.0 * (1.0 + eta) * reach / ((2.0 * rho * e_edges as f64).sqrt() * eta * delta_q);
    let omega = first.max(second);
    let iterations = (omega.ln() / (1.0 + eta).ln()).ceil().max(0.0) as u64;
    Ok((omega, iterations))
}

/// Bound on the x-update shift induced by ℓ1 terms:
/// `√(M Σᵢ ξᵢ²) / (m_g + 2ρ|N|min)`.
pub fn delta_x_l1(
    xi_weights: &[f64],
    m_g: f64,
    rho: f64,
    min_degree: usize,
    m_dim: usize,
) -> f64 {
    let sum_sq: f64 = xi_weights.iter().map(|x| x * x).sum();
    (m_dim as f64 * sum_sq).sqrt() / (m_g + 2.0 * rho * min_degree as f64)
}

/// Bound on the x-update shift induced by box indicators:
///
/// ```text
/// Σᵢ max{‖α⁰ᵢ‖₂ + tᵢ + 6ρ|Nᵢ|Q₀, (√M+1)tᵢ + (4+6√M)ρ|Nᵢ|Q₀} / (m_{g_i} + 2ρ|Nᵢ|)
/// ```
///
/// with `Q₀ = sup{‖x‖₂ : x in box} + ½Δ√M` and `tᵢ ≥ sup over the box of
/// `‖∇g_i‖₂` (see [`box_gradient_bound`]).
pub fn delta_x_box(
    alpha0_norms: &[f64],
    t_bounds: &[f64],
    rho: f64,
    degrees: &[usize],
    q0: f64,
    m_g_list: &[f64],
    m_dim: usize,
) -> Result<f64> {
    let n = alpha0_norms.len();
    if t_bounds.len() != n || degrees.len() != n || m_g_list.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: t_bounds.len() });
    }
    let sqrt_m = (m_dim as f64).sqrt();
    let mut total = 0.0;
    for i in 0..n {
        let d = degrees[i] as f64;
        let first = alpha0_norms[i] + t_bounds[i] + 6.0 * rho * d * q0;
        let second = (sqrt_m + 1.0) * t_bounds[i] + (4.0 + 6.0 * sqrt_m) * rho * d * q0;
        total += first.max(second) / (m_g_list[i] + 2.0 * rho * d);
    }
    Ok(total)
}

/// Exact `sup_{x in box} ‖∇g_i(x)‖₂` for the constrained quadratic variant:
/// with `∇g = 2a·x + b` the square decomposes per coordinate, so each
/// coordinate maximum sits at an endpoint.
pub fn box_gradient_bound(obj: &LocalObjective) -> Option<f64> {
    let (lo, hi) = obj.box_bounds()?;
    if let LocalObjective::QuadraticBox(q) = obj {
        let two_a = 2.0 * q.a();
        let mut acc = 0.0;
        for l in 0..lo.len() {
            let at_lo = two_a * lo[l] + q.b()[l];
            let at_hi = two_a * hi[l] + q.b()[l];
            acc += (at_lo * at_lo).max(at_hi * at_hi);
        }
        Some(acc.sqrt())
    } else {
        None
    }
}

/// `Q₀` for a box: the largest Euclidean norm inside it plus the worst-case
/// quantization shift `½Δ√M`.
pub fn box_q0(lo: &[f64], hi: &[f64], delta_q: f64) -> f64 {
    let m = lo.len() as f64;
    let sup_sq: f64 = lo.iter().zip(hi).map(|(l, h)| (l * l).max(h * h)).sum();
    sup_sq.sqrt() + 0.5 * delta_q * m.sqrt()
}

/// Minimum-norm `β` with `M₋ β = α`, computed per coordinate slice through
/// the pseudoinverse of `2L₋`; the result lies in the column space of `M₋ᵀ`.
pub fn recover_beta(alpha: &[f64], m: &GraphMatrices) -> Result<Vec<f64>> {
    if !is_in_column_space_l_minus(alpha, m, membership_tol(alpha))? {
        return Err(invalid("alpha lies outside the column space of the signed Laplacian"));
    }
    let n = m.l_minus.rows();
    let block = alpha.len() / n;
    let arcs = m.m_minus.cols();
    // β = M₋ᵀ w with 2L₋ w = α, sliced per coordinate
    let eig = symmetric_eigen(&m.l_minus.scaled(2.0))?;
    let mut beta = vec![0.0; arcs * block];
    for l in 0..block {
        let slice: Vec<f64> = (0..n).map(|i| alpha[i * block + l]).collect();
        let w = pinv_apply(&eig, &slice, PINV_CUTOFF)?;
        let beta_slice = m.m_minus.tr_matvec(&w)?;
        for q in 0..arcs {
            beta[q * block + l] = beta_slice[q];
        }
    }
    Ok(beta)
}

/// Assembles the fixed point of the exact recursion from the optimizer of
/// the (smooth part of the) aggregate objective.
pub fn optimal_point(
    g: &NetworkGraph,
    objs: &[LocalObjective],
    x_star: &[f64],
) -> Result<OptimalPoint> {
    if objs.len() != g.n_agents() {
        return Err(Error::DimensionMismatch { expected: g.n_agents(), actual: objs.len() });
    }
    let m = x_star.len();
    let mut alpha_star = Vec::with_capacity(g.n_agents() * m);
    for obj in objs {
        alpha_star.extend(obj.gradient_smooth(x_star)?.iter().map(|v| -v));
    }
    let mut consensus = Vec::with_capacity(g.n_agents() * m);
    for _ in 0..g.n_agents() {
        consensus.extend_from_slice(x_star);
    }
    let z_star = g.half_m_plus_tr(&consensus)?;
    let matrices = build_matrices(g);
    let beta_star = recover_beta(&alpha_star, &matrices)?;
    Ok(OptimalPoint { x_star: x_star.to_vec(), z_star, alpha_star, beta_star })
}

/// Inputs for [`compute_certificate`]. `delta_x` selects the general-case
/// route (τ₁ and the bound evaluated at the smooth-only fixed point);
/// `u0_distance` is `‖u⁰ − u*‖_G` against whichever fixed point applies.
#[derive(Debug, Clone, Copy)]
pub struct CertificateInputs<'a> {
    pub spectral: &'a SpectralData,
    pub objs: &'a [LocalObjective],
    pub e_edges: usize,
    pub delta: f64,
    pub rho: f64,
    pub mu: f64,
    pub u0_distance: f64,
    pub delta_x: Option<f64>,
}

pub fn compute_certificate(inp: &CertificateInputs<'_>) -> Result<ConvergenceCertificate> {
    if inp.objs.is_empty() {
        return Err(invalid("certificate needs at least one objective"));
    }
    let m_dim = inp.objs[0].dim();
    let m_g = inp.objs.iter().map(LocalObjective::m_g).fold(f64::INFINITY, f64::min);
    let big_m_g = inp.objs.iter().map(LocalObjective::big_m_g).fold(0.0, f64::max);
    let sum_m_g: f64 = inp.objs.iter().map(LocalObjective::m_g).sum();
    let (delta_rate, eta) = compute_eta(inp.spectral, m_g, big_m_g, inp.rho, inp.mu)?;
    let tau0 = compute_tau0(inp.delta, inp.rho, m_dim, inp.spectral);
    let tau1 = inp
        .delta_x
        .map(|dx| compute_tau1(dx, inp.delta, m_dim, inp.rho, inp.spectral));
    let bound = consensus_error_bound(inp.rho, inp.e_edges, sum_m_g, m_dim, inp.delta);
    let (omega, iterations) = if inp.delta > 0.0 {
        let tau = tau1.unwrap_or(tau0);
        let (omega, iters) = iteration_bound(
            eta,
            inp.delta,
            inp.rho,
            inp.e_edges,
            inp.spectral,
            inp.u0_distance,
            tau,
        )?;
        (Some(omega), Some(iters))
    } else {
        (None, None)
    };
    Ok(ConvergenceCertificate {
        mu: inp.mu,
        delta_rate,
        eta,
        tau0,
        tau1,
        consensus_error_bound: bound,
        omega,
        iteration_bound: iterations,
        u0_distance: inp.u0_distance,
    })
}
