//! The decentralized recursion against the stacked three-block update, the
//! zero-resolution degeneration, and the G-norm contraction certificate.

use qcadmm_core::admm::{
    c_admm_step, init_state, qc_admm_step, run, CentralizedAdmm, Engine, RunConfig,
};
use qcadmm_core::analysis::{compute_eta, optimal_point, recover_beta};
use qcadmm_core::graph::{build_matrices, random_connected_graph, spectral_quantities};
use qcadmm_core::objectives::{random_smooth_quadratics, LocalObjective};
use qcadmm_core::oracle::solve_reference;
use qcadmm_core::quantizer::QuantizerConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random dual admissible for the recursion: α = L₋ b per coordinate slice.
fn random_range_dual(
    g: &qcadmm_core::graph::NetworkGraph,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mats = build_matrices(g);
    let n = g.n_agents();
    let mut alpha = vec![0.0; n * m];
    for l in 0..m {
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let slice = mats.l_minus.matvec(&b).unwrap();
        for i in 0..n {
            alpha[i * m + l] = slice[i];
        }
    }
    alpha
}

#[test]
fn decentralized_matches_centralized_over_thirty_iterations() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(777));
        let n = 3 + (seed as usize % 6); // 3..=8
        let max_e = n * (n - 1) / 2;
        let e = (n - 1) + (seed as usize) % (max_e - n + 2);
        let m = if seed % 2 == 0 { 1 } else { 3 };
        let g = random_connected_graph(n, e, seed).unwrap();
        let objs = random_smooth_quadratics(n, m, seed).unwrap();

        let x0: Vec<f64> = (0..n * m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let alpha0 = random_range_dual(&g, m, &mut rng);
        let mats = build_matrices(&g);
        let beta0 = recover_beta(&alpha0, &mats).unwrap();

        let mut dec =
            init_state(&x0, &alpha0, &g, &QuantizerConfig::identity()).unwrap();
        let engine = CentralizedAdmm::new(&g, m);
        let mut cen = engine.init_state(&x0, &beta0).unwrap();

        for k in 0..30 {
            dec = c_admm_step(&dec, &g, &objs, 1.0).unwrap();
            cen = engine.step(&cen, &objs, 1.0).unwrap();
            let dx = dec.stacked_x();
            for (a, b) in dx.iter().zip(&cen.x) {
                assert!((a - b).abs() < 1e-9, "seed {seed} iter {k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn zero_resolution_runs_are_bit_identical() {
    for seed in 0..10u64 {
        let n = 4 + (seed as usize % 4);
        let e = (n - 1) + (seed as usize) % n;
        let g = random_connected_graph(n, e, seed).unwrap();
        let m = 2;
        let objs = random_smooth_quadratics(n, m, seed).unwrap();
        let cfg = RunConfig { rho: 1.0, delta: 0.0, max_iterations: 40, detect_fixed_point: false };
        let zeros = vec![0.0; n * m];
        let exact = run(Engine::CAdmm, &cfg, &g, &objs, &zeros, &zeros, None, None).unwrap();
        let degenerate = run(Engine::QcAdmm, &cfg, &g, &objs, &zeros, &zeros, None, None).unwrap();
        assert_eq!(exact.rows.len(), degenerate.rows.len());
        for (a, b) in exact.final_state.agents.iter().zip(&degenerate.final_state.agents) {
            let bits = |v: &[f64]| -> Vec<u64> { v.iter().map(|x| x.to_bits()).collect() };
            assert_eq!(bits(&a.x), bits(&b.x), "seed {seed}");
            assert_eq!(bits(&a.x_q), bits(&b.x_q));
            assert_eq!(bits(&a.alpha), bits(&b.alpha));
        }
        let zb = |v: &[f64]| -> Vec<u64> { v.iter().map(|x| x.to_bits()).collect() };
        assert_eq!(zb(&exact.final_state.z_q), zb(&degenerate.final_state.z_q));
        assert_eq!(zb(&exact.final_state.beta_q), zb(&degenerate.final_state.beta_q));
    }
}

#[test]
fn g_norm_distance_contracts_at_certified_rate() {
    // exact engine on smooth instances: per-step contraction factor of
    // ‖u − u*‖_G never exceeds 1/(1+η)
    for seed in 0..10u64 {
        let n = 4 + (seed as usize % 5);
        let e = (n - 1) + (seed as usize * 3) % n;
        let m = if seed % 2 == 0 { 1 } else { 2 };
        let g = random_connected_graph(n, e, seed).unwrap();
        let objs = random_smooth_quadratics(n, m, seed).unwrap();
        let mats = build_matrices(&g);
        let spec = spectral_quantities(&mats).unwrap();
        let m_g = objs.iter().map(LocalObjective::m_g).fold(f64::INFINITY, f64::min);
        let big_m_g = objs.iter().map(LocalObjective::big_m_g).fold(0.0, f64::max);
        let (_, eta) = compute_eta(&spec, m_g, big_m_g, 1.0, 1.5).unwrap();
        let factor = 1.0 / (1.0 + eta);

        let reference = solve_reference(&objs, false, 1e-12).unwrap();
        let u_star = optimal_point(&g, &objs, &reference.x_star).unwrap();
        let zeros = vec![0.0; n * m];
        let cfg =
            RunConfig { rho: 1.0, delta: 0.0, max_iterations: 400, detect_fixed_point: false };
        let rec =
            run(Engine::CAdmm, &cfg, &g, &objs, &zeros, &zeros, Some(&reference.x_star), Some(&u_star))
                .unwrap();
        let dist: Vec<f64> = rec.rows.iter().map(|r| r.g_norm_u_error.unwrap()).collect();
        let mut checked = 0;
        for w in dist.windows(2) {
            if w[0] < 1e-10 {
                break;
            }
            assert!(
                w[1] <= factor * w[0] + 1e-9,
                "seed {seed}: ratio {} factor {factor}",
                w[1] / w[0]
            );
            checked += 1;
        }
        assert!(checked > 5, "seed {seed}: trajectory too short ({checked} steps)");
        // the distance actually collapses, confirming the fixed point used
        assert!(*dist.last().unwrap() < 1e-8, "seed {seed}: final {}", dist.last().unwrap());
    }
}

#[test]
fn quantized_runs_respect_certified_bounds_small() {
    // small-scale bound dominance: fixed point reached, consensus error and
    // iteration count within the certificate
    use qcadmm_core::analysis::{compute_certificate, g_norm, CertificateInputs};
    for seed in 0..10u64 {
        let g = random_connected_graph(10, 20, seed).unwrap();
        let m = 2;
        let objs = random_smooth_quadratics(10, m, seed).unwrap();
        let mats = build_matrices(&g);
        let spec = spectral_quantities(&mats).unwrap();
        let reference = solve_reference(&objs, false, 1e-12).unwrap();
        let u_star = optimal_point(&g, &objs, &reference.x_star).unwrap();
        let u0 = g_norm(&u_star.z_star, &u_star.beta_star, 1.0); // zero init
        let cert = compute_certificate(&CertificateInputs {
            spectral: &spec,
            objs: &objs,
            e_edges: g.num_edges(),
            delta: 1.0,
            rho: 1.0,
            mu: 1.5,
            u0_distance: u0,
            delta_x: None,
        })
        .unwrap();

        let zeros = vec![0.0; 10 * m];
        let cfg =
            RunConfig { rho: 1.0, delta: 1.0, max_iterations: 20_000, detect_fixed_point: true };
        let rec = run(
            Engine::QcAdmm,
            &cfg,
            &g,
            &objs,
            &zeros,
            &zeros,
            Some(&reference.x_star),
            Some(&u_star),
        )
        .unwrap();
        let converged = rec.converged_at().expect("fixed point");
        assert!(converged as u64 <= cert.iteration_bound.unwrap(), "seed {seed}");
        let err = rec.final_rms_error().unwrap();
        assert!(err <= cert.consensus_error_bound, "seed {seed}: {err} > bound");
        assert!(rec.final_state.consensus_reached());
    }
}

#[test]
fn quantized_fixed_point_is_idempotent() {
    let g = random_connected_graph(7, 12, 5).unwrap();
    let objs = random_smooth_quadratics(7, 2, 5).unwrap();
    let q = QuantizerConfig::new(0.5).unwrap();
    let zeros = vec![0.0; 14];
    let mut s = init_state(&zeros, &zeros, &g, &q).unwrap();
    let mut fixed_at = None;
    for k in 1..=2000 {
        let next = qc_admm_step(&s, &g, &objs, 1.0, &q).unwrap();
        let unchanged = next.agents.iter().zip(&s.agents).all(|(a, b)| a.x_q == b.x_q);
        s = next;
        if unchanged && s.consensus_reached() {
            fixed_at = Some(k);
            break;
        }
    }
    let k = fixed_at.expect("fixed point reached");
    for extra in 0..10 {
        let next = qc_admm_step(&s, &g, &objs, 1.0, &q).unwrap();
        for (a, b) in next.agents.iter().zip(&s.agents) {
            assert_eq!(a.x_q, b.x_q, "state moved at {k}+{extra}");
            assert_eq!(a.alpha, b.alpha);
        }
        s = next;
    }
}
