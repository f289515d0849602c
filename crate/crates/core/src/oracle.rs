//! Centralized ground-truth solver for the aggregate problem
//! `min_x Σᵢ f_i(x)`; distributed runs are measured against its output.
//!
//! Purely quadratic families have the closed form `x* = −(Σbᵢ)/(2Σaᵢ)`,
//! clamped into the intersection of the agents' boxes when present (valid
//! because the aggregate Hessian is a positive multiple of the identity).
//! Anything involving least-squares terms is solved by a direct
//! normal-equations solve for the smooth part, refined by the accelerated
//! proximal-gradient loop when ℓ1 terms or boxes are active.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, pinv_apply, sub, symmetric_eigen, DenseMat};
use crate::objectives::{accelerated_prox_gradient, prox_step, LocalObjective};

const MAX_REFERENCE_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub objective_value: f64,
    pub optimality_residual: f64,
    /// True when the non-smooth parts were dropped and only `Σ g_i` was
    /// minimized.
    pub smooth_only: bool,
}

struct Aggregate<'a> {
    objs: &'a [LocalObjective],
    m: usize,
    /// Σ 2aᵢ over quadratic-family agents.
    quad_curvature: f64,
    /// Σ bᵢ over quadratic-family agents.
    quad_linear: Vec<f64>,
    has_least_squares: bool,
    sum_xi: f64,
    /// Entrywise intersection of all boxes, if any agent has one.
    boxes: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> Aggregate<'a> {
    fn build(objs: &'a [LocalObjective]) -> Result<Self> {
        let Some(first) = objs.first() else {
            return Err(invalid("need at least one objective"));
        };
        let m = first.dim();
        if objs.iter().any(|o| o.dim() != m) {
            return Err(invalid("objectives must share one dimension"));
        }
        let mut quad_curvature = 0.0;
        let mut quad_linear = vec![0.0; m];
        let mut has_least_squares = false;
        let mut sum_xi = 0.0;
        let mut boxes: Option<(Vec<f64>, Vec<f64>)> = None;
        for obj in objs {
            sum_xi += obj.l1_weight();
            match obj {
                LocalObjective::ScaledQuadratic(q) => {
                    quad_curvature += 2.0 * q.a();
                    for (acc, b) in quad_linear.iter_mut().zip(q.b()) {
                        *acc += b;
                    }
                }
                LocalObjective::QuadraticBox(q) => {
                    quad_curvature += 2.0 * q.a();
                    for (acc, b) in quad_linear.iter_mut().zip(q.b()) {
                        *acc += b;
                    }
                    let (lo, hi) = q.bounds();
                    boxes = Some(match boxes {
                        None => (lo.to_vec(), hi.to_vec()),
                        Some((mut l, mut h)) => {
                            for i in 0..m {
                                l[i] = l[i].max(lo[i]);
                                h[i] = h[i].min(hi[i]);
                            }
                            (l, h)
                        }
                    });
                }
                LocalObjective::LeastSquaresL1(_) => has_least_squares = true,
            }
        }
        if let Some((lo, hi)) = &boxes {
            if lo.iter().zip(hi).any(|(l, h)| l > h) {
                return Err(invalid("box intersection is empty"));
            }
        }
        Ok(Self { objs, m, quad_curvature, quad_linear, has_least_squares, sum_xi, boxes })
    }

    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.m];
        for obj in self.objs {
            let gi = obj.gradient_smooth(x).expect("dims checked");
            for (acc, v) in g.iter_mut().zip(&gi) {
                *acc += v;
            }
        }
        g
    }

    fn smooth_lipschitz(&self) -> f64 {
        self.objs.iter().map(LocalObjective::big_m_g).sum()
    }

    /// Natural residual `‖x − prox_h(x − ∇g(x))‖` (unit step); reduces to
    /// the gradient norm when no non-smooth part is active.
    fn residual(&self, x: &[f64], with_nonsmooth: bool) -> f64 {
        let g = self.smooth_gradient(x);
        let mut p = sub(x, &g);
        if with_nonsmooth {
            let bounds = self.boxes.as_ref().map(|(l, h)| (l.as_slice(), h.as_slice()));
            prox_step(&mut p, self.sum_xi, bounds);
        }
        norm2(&sub(x, &p))
    }

    /// Direct solve of `∇(Σ g_i)(x) = 0` through the aggregate normal
    /// equations `H x = rhs`.
    fn solve_smooth_direct(&self) -> Result<Vec<f64>> {
        let mut h = DenseMat::zeros(self.m, self.m);
        for i in 0..self.m {
            h[(i, i)] = self.quad_curvature;
        }
        let mut rhs: Vec<f64> = self.quad_linear.iter().map(|v| -v).collect();
        for obj in self.objs {
            if let LocalObjective::LeastSquaresL1(l) = obj {
                let gram = l.a_mat().gram_left();
                for i in 0..self.m {
                    for j in 0..self.m {
                        h[(i, j)] += gram[(i, j)];
                    }
                }
                let aty = l.a_mat().tr_matvec(l.y_vec())?;
                for (r, v) in rhs.iter_mut().zip(&aty) {
                    *r += v;
                }
            }
        }
        let eig = symmetric_eigen(&h)?;
        if eig.values[0] <= 0.0 {
            return Err(Error::Numerical("aggregate smooth part is not strongly convex".into()));
        }
        pinv_apply(&eig, &rhs, 1e-14)
    }
}

/// Ground-truth minimizer of `Σ f_i` (or `Σ g_i` when `smooth_only`).
/// The tolerance is applied in scale-invariant form: the returned point has
/// residual at most `tol · (1 + ‖x*‖₂)`.
pub fn solve_reference(
    objs: &[LocalObjective],
    smooth_only: bool,
    tol: f64,
) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let agg = Aggregate::build(objs)?;
    let with_nonsmooth = !smooth_only;

    let x_star = if !agg.has_least_squares {
        // pure quadratic family: closed form, clamped into the box
        let mut x: Vec<f64> =
            agg.quad_linear.iter().map(|b| -b / agg.quad_curvature).collect();
        if with_nonsmooth {
            if let Some((lo, hi)) = &agg.boxes {
                for i in 0..agg.m {
                    x[i] = x[i].max(lo[i]).min(hi[i]);
                }
            }
        }
        x
    } else {
        let smooth = agg.solve_smooth_direct()?;
        let needs_refine =
            with_nonsmooth && (agg.sum_xi > 0.0 || agg.boxes.is_some());
        if needs_refine {
            let grad = |x: &[f64]| agg.smooth_gradient(x);
            let bounds = agg.boxes.as_ref().map(|(l, h)| (l.as_slice(), h.as_slice()));
            accelerated_prox_gradient(
                &grad,
                agg.smooth_lipschitz(),
                agg.sum_xi,
                bounds,
                &smooth,
                tol,
                MAX_REFERENCE_ITERS,
            )?
        } else {
            smooth
        }
    };

    let residual = agg.residual(&x_star, with_nonsmooth);
    if residual > tol * (1.0 + norm2(&x_star)) {
        return Err(Error::NonConvergence { residual, iterations: 0 });
    }
    let objective_value = if smooth_only {
        // value of Σ g_i only
        let mut acc = 0.0;
        for obj in objs {
            acc += match obj {
                LocalObjective::LeastSquaresL1(l) => {
                    let mut r = l.a_mat().matvec(&x_star)?;
                    for (ri, yi) in r.iter_mut().zip(l.y_vec()) {
                        *ri -= yi;
                    }
                    0.5 * crate::linalg::dot(&r, &r)
                }
                // box indicator dropped in smooth-only mode
                LocalObjective::ScaledQuadratic(q) => {
                    q.a() * crate::linalg::dot(&x_star, &x_star)
                        + crate::linalg::dot(q.b(), &x_star)
                }
                LocalObjective::QuadraticBox(q) => {
                    q.a() * crate::linalg::dot(&x_star, &x_star)
                        + crate::linalg::dot(q.b(), &x_star)
                }
            };
        }
        acc
    } else {
        let mut acc = 0.0;
        for obj in objs {
            acc += obj.value(&x_star)?;
        }
        acc
    };
    Ok(ReferenceSolution { x_star, objective_value, optimality_residual: residual, smooth_only })
}

/// Whether zero lies within `tol` of the aggregate subdifferential at `x`,
/// measured by the unit-step natural residual (gradient norm in the smooth
/// case, soft-threshold/projection residual otherwise).
pub fn verify_optimality(objs: &[LocalObjective], x: &[f64], tol: f64) -> Result<bool> {
    let agg = Aggregate::build(objs)?;
    if x.len() != agg.m {
        return Err(Error::DimensionMismatch { expected: agg.m, actual: x.len() });
    }
    Ok(agg.residual(x, true) <= tol)
}
