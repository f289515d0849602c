//! Gradient, moduli and x-update checks against independent oracles
//! (central finite differences, monotonicity sampling, grid search).

use qcadmm_core::linalg::{dot, norm2, sub, DenseMat};
use qcadmm_core::objectives::{
    build_problem_instance, random_smooth_quadratics, LocalObjective, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth part only (the finite-difference oracle must not see h).
fn smooth_value(obj: &LocalObjective, x: &[f64]) -> f64 {
    match obj {
        LocalObjective::ScaledQuadratic(q) => q.a() * dot(x, x) + dot(q.b(), x),
        LocalObjective::QuadraticBox(q) => q.a() * dot(x, x) + dot(q.b(), x),
        LocalObjective::LeastSquaresL1(l) => {
            let mut r = l.a_mat().matvec(x).unwrap();
            for (ri, yi) in r.iter_mut().zip(l.y_vec()) {
                *ri -= yi;
            }
            0.5 * dot(&r, &r)
        }
    }
}

fn sample_objectives(seed: u64) -> Vec<LocalObjective> {
    let mut objs = random_smooth_quadratics(3, 3, seed).unwrap();
    objs.extend(build_problem_instance(Scenario::Lasso, 2, 3, seed).unwrap());
    objs.extend(build_problem_instance(Scenario::QuadraticBox, 2, 3, seed).unwrap());
    objs
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for seed in 0..5u64 {
        for obj in sample_objectives(seed) {
            let m = obj.dim();
            for _ in 0..4 {
                let x: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
                let g = obj.gradient_smooth(&x).unwrap();
                for l in 0..m {
                    let h = 1e-6 * (1.0 + x[l].abs());
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[l] += h;
                    xm[l] -= h;
                    let fd = (smooth_value(&obj, &xp) - smooth_value(&obj, &xm)) / (2.0 * h);
                    let denom = g[l].abs().max(1.0);
                    assert!(
                        (fd - g[l]).abs() / denom < 1e-5,
                        "seed {seed} coord {l}: fd {fd} vs grad {}",
                        g[l]
                    );
                }
            }
        }
    }
}

#[test]
fn moduli_bracket_gradient_variation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let objs = sample_objectives(3);
    for obj in &objs {
        let m = obj.dim();
        for _ in 0..1500 {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let diff = sub(&x, &y);
            let d2 = dot(&diff, &diff);
            if d2 < 1e-20 {
                continue;
            }
            let gd = sub(
                &obj.gradient_smooth(&x).unwrap(),
                &obj.gradient_smooth(&y).unwrap(),
            );
            let inner = dot(&gd, &diff);
            assert!(inner >= obj.m_g() * d2 - 1e-9 * d2, "strong convexity violated");
            assert!(
                norm2(&gd) <= obj.big_m_g() * d2.sqrt() * (1.0 + 1e-9),
                "Lipschitz bound violated"
            );
        }
    }
}

#[test]
fn x_update_first_order_conditions_all_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..3u64 {
        for obj in sample_objectives(seed) {
            let m = obj.dim();
            let rho = rng.random_range(0.2..3.0);
            let degree = rng.random_range(1..5usize);
            let nbr: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
            let alpha: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
            let x = obj.solve_x_update(rho, degree, &nbr, &alpha).unwrap();
            // stationarity residual, projected for constrained variants:
            // r = x − prox(x − s(∇g + 2ρd x + α − ρ nbr))
            let d = degree as f64;
            let mut grad = obj.gradient_smooth(&x).unwrap();
            for l in 0..m {
                grad[l] += 2.0 * rho * d * x[l] + alpha[l] - rho * nbr[l];
            }
            let step = 1.0 / (obj.big_m_g() + 2.0 * rho * d);
            let mut p: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
            let shrink = step * obj.l1_weight();
            for v in p.iter_mut() {
                *v = if *v > shrink {
                    *v - shrink
                } else if *v < -shrink {
                    *v + shrink
                } else {
                    0.0
                };
            }
            if let Some((lo, hi)) = obj.box_bounds() {
                for (v, (l, h)) in p.iter_mut().zip(lo.iter().zip(hi)) {
                    *v = v.max(*l).min(*h);
                }
            }
            let res = norm2(&sub(&x, &p)) / step;
            assert!(res <= 1e-8 * (1.0 + norm2(&x)), "residual {res}");
        }
    }
}

#[test]
fn l1_x_update_matches_grid_search_oracle() {
    // two-dimensional subproblem scanned on a coarse-then-fine grid
    let a = DenseMat::from_rows(2, 2, vec![1.4, -0.3, 0.2, 0.9]).unwrap();
    let obj = LocalObjective::least_squares_l1(a, vec![0.8, -1.1], 0.6).unwrap();
    let rho = 1.0;
    let degree = 2;
    let nbr = [0.5, -0.25];
    let alpha = [-0.3, 0.4];
    let solved = obj.solve_x_update(rho, degree, &nbr, &alpha).unwrap();

    let phi = |x: &[f64; 2]| -> f64 {
        let d = degree as f64;
        let mut c = 0.0;
        for l in 0..2 {
            c += (alpha[l] - rho * nbr[l]) * x[l];
        }
        obj.value(x).unwrap() + rho * d * dot(x, x) + c
    };

    let refine = |center: [f64; 2], half: f64, steps: usize| -> ([f64; 2], f64) {
        let mut best = ([0.0; 2], f64::INFINITY);
        for i in 0..=steps {
            for j in 0..=steps {
                let x = [
                    center[0] - half + 2.0 * half * i as f64 / steps as f64,
                    center[1] - half + 2.0 * half * j as f64 / steps as f64,
                ];
                let v = phi(&x);
                if v < best.1 {
                    best = (x, v);
                }
            }
        }
        best
    };

    let (coarse, _) = refine([0.0, 0.0], 2.0, 400);
    let (fine, fine_val) = refine(coarse, 0.02, 400);
    let (finest, finest_val) = refine(fine, 0.001, 200);
    assert!((finest[0] - solved[0]).abs() < 1e-5, "{finest:?} vs {solved:?}");
    assert!((finest[1] - solved[1]).abs() < 1e-5);
    // the solver's value is at least as good as anything the grid found
    assert!(phi(&[solved[0], solved[1]]) <= finest_val.min(fine_val) + 1e-12);
}
