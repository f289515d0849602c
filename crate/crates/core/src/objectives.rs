//! Per-agent objectives `f_i = g_i + h_i` and the x-update subproblem.
//!
//! Every engine iteration asks each agent for the unique minimizer of
//!
//! ```text
//! f_i(x) + ρ|N_i| ‖x‖² + (α − ρ s)ᵀ x,    s = |N_i| x_i + Σ_{j∈N_i} x_j
//! ```
//!
//! which is the root of `∂f_i(x) + 2ρ|N_i| x + α − ρ s = 0`. For quadratic
//! smooth parts this is closed-form (clamped entrywise when a box constraint
//! is present, valid because the Hessian is a positive multiple of the
//! identity); the ℓ1-regularized least-squares variant runs an accelerated
//! proximal-gradient loop to a tight residual tolerance.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm2, symmetric_eigen, DenseMat};

/// Problem families for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Scaled quadratics with a box constraint.
    QuadraticBox,
    /// ℓ1-regularized least squares.
    Lasso,
}

/// `g(x) = a‖x‖² + bᵀx`, smooth with `m_g = M_g = 2a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledQuadratic {
    a: f64,
    b: Vec<f64>,
}

impl ScaledQuadratic {
    pub fn new(a: f64, b: Vec<f64>) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(invalid("quadratic coefficient must be finite and positive"));
        }
        if b.is_empty() || b.iter().any(|v| !v.is_finite()) {
            return Err(invalid("linear coefficient must be nonempty and finite"));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }
}

/// `g(x) = ½‖Ax − y‖²`, `h(x) = ξ‖x‖₁`, with `A` square and full rank so
/// that `m_g = λ_min(AᵀA) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresL1 {
    a_mat: DenseMat,
    y_vec: Vec<f64>,
    xi: f64,
    m_g: f64,
    big_m_g: f64,
}

impl LeastSquaresL1 {
    pub fn new(a_mat: DenseMat, y_vec: Vec<f64>, xi: f64) -> Result<Self> {
        let m = a_mat.rows();
        if m == 0 || a_mat.cols() != m {
            return Err(invalid("measurement matrix must be square and nonempty"));
        }
        if y_vec.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: y_vec.len() });
        }
        if !xi.is_finite() || xi < 0.0 {
            return Err(invalid("l1 weight must be finite and >= 0"));
        }
        if a_mat.data().iter().any(|v| !v.is_finite()) || y_vec.iter().any(|v| !v.is_finite()) {
            return Err(invalid("measurement data must be finite"));
        }
        let gram = a_mat.gram_left();
        let eig = symmetric_eigen(&gram)?;
        let lambda_min = eig.values[0];
        let lambda_max = eig.values[m - 1];
        if lambda_min <= 1e-12 * lambda_max.max(1.0) {
            return Err(invalid("measurement matrix is rank deficient"));
        }
        Ok(Self { a_mat, y_vec, xi, m_g: lambda_min, big_m_g: lambda_max })
    }

    pub fn a_mat(&self) -> &DenseMat {
        &self.a_mat
    }

    pub fn y_vec(&self) -> &[f64] {
        &self.y_vec
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// Quadratic smooth part plus the indicator of the box `{lo ⪯ x ⪯ hi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBox {
    a: f64,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl QuadraticBox {
    pub fn new(a: f64, b: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let quad = ScaledQuadratic::new(a, b)?;
        let m = quad.b.len();
        if lo.len() != m || hi.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: lo.len().max(hi.len()) });
        }
        let ok = lo
            .iter()
            .zip(&hi)
            .all(|(l, h)| l.is_finite() && h.is_finite() && l <= h);
        if !ok {
            return Err(invalid("box must be nonempty and compact"));
        }
        Ok(Self { a: quad.a, b: quad.b, lo, hi })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalObjective {
    ScaledQuadratic(ScaledQuadratic),
    LeastSquaresL1(LeastSquaresL1),
    QuadraticBox(QuadraticBox),
}

impl LocalObjective {
    pub fn scaled_quadratic(a: f64, b: Vec<f64>) -> Result<Self> {
        Ok(Self::ScaledQuadratic(ScaledQuadratic::new(a, b)?))
    }

    pub fn least_squares_l1(a_mat: DenseMat, y_vec: Vec<f64>, xi: f64) -> Result<Self> {
        Ok(Self::LeastSquaresL1(LeastSquaresL1::new(a_mat, y_vec, xi)?))
    }

    pub fn quadratic_box(a: f64, b: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Ok(Self::QuadraticBox(QuadraticBox::new(a, b, lo, hi)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::ScaledQuadratic(q) => q.b.len(),
            Self::LeastSquaresL1(l) => l.y_vec.len(),
            Self::QuadraticBox(q) => q.b.len(),
        }
    }

    /// Strong-convexity modulus of the smooth part.
    pub fn m_g(&self) -> f64 {
        match self {
            Self::ScaledQuadratic(q) => 2.0 * q.a,
            Self::LeastSquaresL1(l) => l.m_g,
            Self::QuadraticBox(q) => 2.0 * q.a,
        }
    }

    /// Lipschitz modulus of the smooth gradient.
    pub fn big_m_g(&self) -> f64 {
        match self {
            Self::ScaledQuadratic(q) => 2.0 * q.a,
            Self::LeastSquaresL1(l) => l.big_m_g,
            Self::QuadraticBox(q) => 2.0 * q.a,
        }
    }

    /// ℓ1 weight of the non-smooth part (zero if none).
    pub fn l1_weight(&self) -> f64 {
        match self {
            Self::LeastSquaresL1(l) => l.xi,
            _ => 0.0,
        }
    }

    pub fn box_bounds(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Self::QuadraticBox(q) => Some(q.bounds()),
            _ => None,
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, Self::ScaledQuadratic(_))
    }

    /// `∇g_i(x)`.
    pub fn gradient_smooth(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match self {
            Self::ScaledQuadratic(q) => {
                Ok(x.iter().zip(&q.b).map(|(xi, bi)| 2.0 * q.a * xi + bi).collect())
            }
            Self::QuadraticBox(q) => {
                Ok(x.iter().zip(&q.b).map(|(xi, bi)| 2.0 * q.a * xi + bi).collect())
            }
            Self::LeastSquaresL1(l) => {
                let mut r = l.a_mat.matvec(x)?;
                for (ri, yi) in r.iter_mut().zip(&l.y_vec) {
                    *ri -= yi;
                }
                l.a_mat.tr_matvec(&r)
            }
        }
    }

    /// `f_i(x)`; infinite outside the box for the constrained variant.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        match self {
            Self::ScaledQuadratic(q) => Ok(q.a * dot(x, x) + dot(&q.b, x)),
            Self::QuadraticBox(q) => {
                let inside =
                    x.iter().zip(q.lo.iter().zip(&q.hi)).all(|(v, (l, h))| l <= v && v <= h);
                if inside {
                    Ok(q.a * dot(x, x) + dot(&q.b, x))
                } else {
                    Ok(f64::INFINITY)
                }
            }
            Self::LeastSquaresL1(l) => {
                let mut r = l.a_mat.matvec(x)?;
                for (ri, yi) in r.iter_mut().zip(&l.y_vec) {
                    *ri -= yi;
                }
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                Ok(0.5 * dot(&r, &r) + l.xi * l1)
            }
        }
    }

    /// Minimizer of `f_i(x) + ρ·degree·‖x‖² + (α − ρ·neighborhood_sum)ᵀ x`,
    /// where `neighborhood_sum = |N_i| x_i + Σ_{j∈N_i} x_j` is precomputed by
    /// the caller.
    pub fn solve_x_update(
        &self,
        rho: f64,
        degree: usize,
        neighborhood_sum: &[f64],
        alpha: &[f64],
    ) -> Result<Vec<f64>> {
        self.solve_x_update_from(rho, degree, neighborhood_sum, alpha, None)
    }

    /// Same subproblem with an optional warm start for the inner solver.
    pub fn solve_x_update_from(
        &self,
        rho: f64,
        degree: usize,
        neighborhood_sum: &[f64],
        alpha: &[f64],
        start: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(invalid("rho must be finite and positive"));
        }
        if degree == 0 {
            return Err(invalid("agent degree must be positive"));
        }
        self.check_dim(neighborhood_sum)?;
        self.check_dim(alpha)?;
        let d = degree as f64;
        match self {
            Self::ScaledQuadratic(q) => {
                let denom = 2.0 * q.a + 2.0 * rho * d;
                Ok((0..q.b.len())
                    .map(|l| (rho * neighborhood_sum[l] - alpha[l] - q.b[l]) / denom)
                    .collect())
            }
            Self::QuadraticBox(q) => {
                let denom = 2.0 * q.a + 2.0 * rho * d;
                Ok((0..q.b.len())
                    .map(|l| {
                        let v = (rho * neighborhood_sum[l] - alpha[l] - q.b[l]) / denom;
                        v.max(q.lo[l]).min(q.hi[l])
                    })
                    .collect())
            }
            Self::LeastSquaresL1(l) => {
                // minimize ½‖Ax−y‖² + ρd‖x‖² + cᵀx + ξ‖x‖₁
                let c: Vec<f64> = (0..l.y_vec.len())
                    .map(|i| alpha[i] - rho * neighborhood_sum[i])
                    .collect();
                let two_rho_d = 2.0 * rho * d;
                let grad = |x: &[f64]| -> Vec<f64> {
                    let mut r = l.a_mat.matvec(x).expect("dims checked");
                    for (ri, yi) in r.iter_mut().zip(&l.y_vec) {
                        *ri -= yi;
                    }
                    let mut g = l.a_mat.tr_matvec(&r).expect("dims checked");
                    for (gi, (xi, ci)) in g.iter_mut().zip(x.iter().zip(&c)) {
                        *gi += two_rho_d * xi + ci;
                    }
                    g
                };
                let lip = l.big_m_g + two_rho_d;
                let zeros;
                let start = match start {
                    Some(s) => s,
                    None => {
                        zeros = vec![0.0; l.y_vec.len()];
                        &zeros[..]
                    }
                };
                accelerated_prox_gradient(
                    &grad,
                    lip,
                    l.xi,
                    None,
                    start,
                    X_UPDATE_TOL,
                    X_UPDATE_MAX_ITERS,
                )
            }
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: v.len() });
        }
        Ok(())
    }
}

const X_UPDATE_TOL: f64 = 1e-10;
const X_UPDATE_MAX_ITERS: usize = 100_000;

/// Soft-threshold then clamp; the exact proximal map of
/// `ξ‖·‖₁ + indicator(box)` since both parts are separable.
pub(crate) fn prox_step(v: &mut [f64], shrink: f64, bounds: Option<(&[f64], &[f64])>) {
    if shrink > 0.0 {
        for x in v.iter_mut() {
            *x = if *x > shrink {
                *x - shrink
            } else if *x < -shrink {
                *x + shrink
            } else {
                0.0
            };
        }
    }
    if let Some((lo, hi)) = bounds {
        for (x, (l, h)) in v.iter_mut().zip(lo.iter().zip(hi)) {
            *x = x.max(*l).min(*h);
        }
    }
}

/// Accelerated proximal gradient (FISTA momentum with gradient-based
/// restart) for `smooth(x) + ξ‖x‖₁ + indicator(box)`. Stops when the
/// prox-gradient residual `‖x − prox(x − s∇)‖/s` drops below
/// `tol · (1 + ‖x‖₂)`; the returned point is the one that passed the check.
pub(crate) fn accelerated_prox_gradient(
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    lip: f64,
    l1: f64,
    bounds: Option<(&[f64], &[f64])>,
    start: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let step = 1.0 / lip;
    let shrink = step * l1;
    let mut x = start.to_vec();
    let mut y = x.clone();
    let mut t = 1.0;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let gx = grad(&x);
        let mut p = x.clone();
        for (pi, gi) in p.iter_mut().zip(&gx) {
            *pi -= step * gi;
        }
        prox_step(&mut p, shrink, bounds);
        let mut diff_sq = 0.0;
        for (xi, pi) in x.iter().zip(&p) {
            diff_sq += (xi - pi) * (xi - pi);
        }
        residual = diff_sq.sqrt() / step;
        if residual <= tol * (1.0 + norm2(&x)) {
            return Ok(x);
        }

        let gy = grad(&y);
        let mut x_next = y.clone();
        for (xi, gi) in x_next.iter_mut().zip(&gy) {
            *xi -= step * gi;
        }
        prox_step(&mut x_next, shrink, bounds);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        let mut restart_dot = 0.0;
        for ((yi, xn), xo) in y.iter().zip(&x_next).zip(&x) {
            restart_dot += (yi - xn) * (xn - xo);
        }
        if restart_dot > 0.0 {
            t = 1.0;
            y = x_next.clone();
        } else {
            t = t_next;
            y = x_next.iter().zip(&x).map(|(xn, xo)| xn + beta * (xn - xo)).collect();
        }
        x = x_next;
    }
    Err(Error::NonConvergence { residual, iterations: max_iters })
}

/// Deterministic problem instance for a scenario. All distribution
/// parameters are variances; draws happen in a fixed order (per agent), so
/// identical `(scenario, n, m, seed)` always produce identical instances.
///
/// * `QuadraticBox`: `a_i = |N(0,1)|` (redrawn while `|a_i| < 1e-6`),
///   `b_i ~ N(0, n⁴)` entrywise, box `[−n, n]` per coordinate.
/// * `Lasso`: `A_i` entrywise `N(0,1)` (redrawn while nearly rank
///   deficient), `y_i ~ N(0, n²)`, `ξ_i = |N(0, n²)|`.
pub fn build_problem_instance(
    scenario: Scenario,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<LocalObjective>> {
    if n == 0 || m == 0 {
        return Err(invalid("instance needs n >= 1 agents and dimension m >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid");
    let nf = n as f64;
    let mut objs = Vec::with_capacity(n);
    match scenario {
        Scenario::QuadraticBox => {
            let b_dist = Normal::new(0.0, nf * nf).expect("valid"); // variance n⁴
            for _ in 0..n {
                let mut a = std_normal.sample(&mut rng).abs();
                while a < 1e-6 {
                    a = std_normal.sample(&mut rng).abs();
                }
                let b: Vec<f64> = (0..m).map(|_| b_dist.sample(&mut rng)).collect();
                objs.push(LocalObjective::quadratic_box(a, b, vec![-nf; m], vec![nf; m])?);
            }
        }
        Scenario::Lasso => {
            let data_dist = Normal::new(0.0, nf).expect("valid"); // variance n²
            for _ in 0..n {
                let a_mat = loop {
                    let data: Vec<f64> =
                        (0..m * m).map(|_| std_normal.sample(&mut rng)).collect();
                    let cand = DenseMat::from_rows(m, m, data)?;
                    let eig = symmetric_eigen(&cand.gram_left())?;
                    if eig.values[0] > 1e-8 {
                        break cand;
                    }
                };
                let y: Vec<f64> = (0..m).map(|_| data_dist.sample(&mut rng)).collect();
                let xi = data_dist.sample(&mut rng).abs();
                objs.push(LocalObjective::least_squares_l1(a_mat, y, xi)?);
            }
        }
    }
    Ok(objs)
}

/// Well-conditioned random smooth quadratics (no constraint, no ℓ1 part),
/// used by diagnostics and contraction checks: `a_i = 0.1 + |N(0,1)|`,
/// `b_i ~ N(0, 100)` entrywise. The linear-term spread keeps the aggregate
/// optimizer a few unit lattice cells away from the origin so quantized
/// runs exercise real transitions. Deterministic per seed.
pub fn random_smooth_quadratics(n: usize, m: usize, seed: u64) -> Result<Vec<LocalObjective>> {
    if n == 0 || m == 0 {
        return Err(invalid("instance needs n >= 1 agents and dimension m >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid");
    let b_dist = Normal::new(0.0, 10.0).expect("valid");
    (0..n)
        .map(|_| {
            let a = 0.1 + std_normal.sample(&mut rng).abs();
            let b: Vec<f64> = (0..m).map(|_| b_dist.sample(&mut rng)).collect();
            LocalObjective::scaled_quadratic(a, b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_worked_quadratic() {
        // ∇g = x + 1.5 at x = −2.5 is −1
        let obj = LocalObjective::scaled_quadratic(0.5, vec![1.5]).unwrap();
        let g = obj.gradient_smooth(&[-2.5]).unwrap();
        assert_eq!(g, vec![-1.0]);
    }

    #[test]
    fn identity_least_squares_gradient_is_x() {
        let obj =
            LocalObjective::least_squares_l1(DenseMat::identity(3), vec![0.0; 3], 0.0).unwrap();
        let x = [1.0, -2.0, 0.5];
        let g = obj.gradient_smooth(&x).unwrap();
        for (gi, xi) in g.iter().zip(&x) {
            assert!((gi - xi).abs() < 1e-15);
        }
    }

    #[test]
    fn x_update_closed_form_two_agents() {
        // 3x + 4.5 = 0 for both agents of the worked two-node instance
        let first = LocalObjective::scaled_quadratic(0.5, vec![1.5]).unwrap();
        let x1 = first.solve_x_update(1.0, 1, &[-2.0], &[1.0]).unwrap();
        assert!((x1[0] + 1.5).abs() < 1e-15);
        let second = LocalObjective::scaled_quadratic(0.5, vec![3.5]).unwrap();
        let x2 = second.solve_x_update(1.0, 1, &[-2.0], &[-1.0]).unwrap();
        assert!((x2[0] + 1.5).abs() < 1e-15);
    }

    #[test]
    fn box_solve_clamps() {
        let obj = LocalObjective::quadratic_box(0.5, vec![10.0], vec![-1.0], vec![1.0]).unwrap();
        // unconstrained answer (ρs − α − b)/(2a + 2ρd) = −10/3, clamped to −1
        let x = obj.solve_x_update(1.0, 1, &[0.0], &[0.0]).unwrap();
        assert_eq!(x, vec![-1.0]);
    }

    #[test]
    fn first_order_condition_holds_for_l1_solve() {
        let a = DenseMat::from_rows(2, 2, vec![2.0, 0.3, -0.4, 1.5]).unwrap();
        let obj = LocalObjective::least_squares_l1(a, vec![1.0, -2.0], 0.7).unwrap();
        let rho = 1.3;
        let degree = 2;
        let nbr = [0.4, -1.1];
        let alpha = [0.2, 0.6];
        let x = obj.solve_x_update(rho, degree, &nbr, &alpha).unwrap();
        // prox-gradient residual of the subproblem at the returned point
        let d = degree as f64;
        let mut g = obj.gradient_smooth(&x).unwrap();
        for l in 0..2 {
            g[l] += 2.0 * rho * d * x[l] + alpha[l] - rho * nbr[l];
        }
        let lip = obj.big_m_g() + 2.0 * rho * d;
        let step = 1.0 / lip;
        let mut p: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
        prox_step(&mut p, step * obj.l1_weight(), None);
        let res = norm2(&crate::linalg::sub(&x, &p)) / step;
        assert!(res <= 1e-8 * (1.0 + norm2(&x)), "residual {res}");
    }

    #[test]
    fn moduli_are_ordered_and_positive() {
        for seed in 0..5 {
            for objs in [
                build_problem_instance(Scenario::QuadraticBox, 6, 3, seed).unwrap(),
                build_problem_instance(Scenario::Lasso, 4, 3, seed).unwrap(),
                random_smooth_quadratics(5, 2, seed).unwrap(),
            ] {
                for o in &objs {
                    assert!(o.m_g() > 0.0);
                    assert!(o.m_g() <= o.big_m_g() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn instances_are_deterministic() {
        let a = build_problem_instance(Scenario::Lasso, 3, 2, 99).unwrap();
        let b = build_problem_instance(Scenario::Lasso, 3, 2, 99).unwrap();
        assert_eq!(a, b);
        let c = build_problem_instance(Scenario::Lasso, 3, 2, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn quadratic_box_instance_shape() {
        let objs = build_problem_instance(Scenario::QuadraticBox, 40, 3, 1).unwrap();
        assert_eq!(objs.len(), 40);
        for o in &objs {
            assert_eq!(o.dim(), 3);
            assert!(o.m_g() > 0.0);
            let (lo, hi) = o.box_bounds().unwrap();
            assert!(lo.iter().all(|&v| v == -40.0));
            assert!(hi.iter().all(|&v| v == 40.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let obj = LocalObjective::scaled_quadratic(1.0, vec![0.0, 0.0]).unwrap();
        assert!(obj.gradient_smooth(&[1.0]).is_err());
        assert!(obj.solve_x_update(1.0, 1, &[0.0], &[0.0, 0.0]).is_err());
    }
}
