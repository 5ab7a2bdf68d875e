//! Equivalence web: every fused sweep reproduces its generic driver
//! configuration, the two relaxed variants coincide when one part of the
//! objective vanishes, and the damped methods approach their undamped
//! limits.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ripg::prox::ConstraintSet;
use ripg::ripg::{
    abs_components, dist_components, gradient_art_components, huber_components,
    indicator_components, quadratic_components, quadratic_tv_components, run, Control, Schedule,
    SolveConfig, Variant, block_ls_components,
};
use ripg::rowaction::{
    art_sweep, block_kaczmarz_sweep, damped_art_sweep, preconditioned_ripg1_sweep,
    robust_art_sweep, Preconditioner,
};
use ripg::sparse::{BlockPartition, SparseMatrix};
use ripg::tv::build_diff_operator;

fn random_system(seed: u64, m: usize, n: usize) -> (SparseMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    (SparseMatrix::from_dense(&rows).unwrap(), b)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Runs the generic driver for `cycles` cycles recording every cycle.
fn generic_cycles(
    components: &[ripg::ripg::ComponentSpec],
    x0: &[f64],
    rho: f64,
    t: f64,
    c: &ConstraintSet,
    variant: Variant,
    cycles: usize,
) -> Vec<Vec<f64>> {
    let cfg = SolveConfig::new(
        rho,
        Schedule::Constant(t),
        Control::Cyclic,
        c.clone(),
        cycles,
        variant,
    )
    .unwrap()
    .with_snapshot_stride(1);
    let trace = run(components, x0, &cfg, None).unwrap();
    trace.snapshots.into_iter().map(|(_, x)| x).collect()
}

#[test]
fn art_matches_generic_indicator_components_bit_for_bit() {
    let (a, b) = random_system(201, 30, 20);
    let comps = indicator_components(&a, &b).unwrap();
    for &rho in &[0.8, 1.0, 1.7] {
        let c = ConstraintSet::NonNeg;
        let generic = generic_cycles(&comps, &vec![0.0; 20], rho, 1.0, &c, Variant::Ripg1, 5);
        let mut x = vec![0.0; 20];
        for cycle in 0..5 {
            x = art_sweep(&a, &b, &x, rho, &c).unwrap();
            assert_eq!(x, generic[cycle], "cycle {cycle} rho {rho}");
        }
    }
}

#[test]
fn damped_art_matches_generic_quadratic_components() {
    let (a, b) = random_system(202, 30, 20);
    let comps = quadratic_components(&a, &b).unwrap();
    let c = ConstraintSet::uniform_box(-2.0, 2.0, 20).unwrap();
    for &(rho, t) in &[(0.5, 0.05), (1.0, 0.2), (1.9, 0.01)] {
        let generic = generic_cycles(&comps, &vec![0.0; 20], rho, t, &c, Variant::Ripg1, 5);
        let mut x = vec![0.0; 20];
        for cycle in 0..5 {
            x = damped_art_sweep(&a, &b, &x, rho, t, &c).unwrap();
            assert!(
                max_abs_diff(&x, &generic[cycle]) <= 1e-14,
                "cycle {cycle} rho {rho}"
            );
            assert_eq!(x, generic[cycle]);
        }
    }
}

#[test]
fn robust_sweeps_match_generic_components() {
    let (a, b) = random_system(203, 30, 20);
    let c = ConstraintSet::AllSpace;
    // mu = 0: the least-absolute-value method vs abs components
    let abs = abs_components(&a, &b).unwrap();
    let generic = generic_cycles(&abs, &vec![0.0; 20], 1.2, 0.03, &c, Variant::Ripg1, 5);
    let mut x = vec![0.0; 20];
    for cycle in 0..5 {
        x = robust_art_sweep(&a, &b, &x, 1.2, 0.03, 0.0, &c).unwrap();
        assert_eq!(x, generic[cycle], "l1 cycle {cycle}");
    }
    // mu > 0: the Huber method vs huber components
    let hub = huber_components(&a, &b, 0.4).unwrap();
    let generic = generic_cycles(&hub, &vec![0.0; 20], 0.9, 0.08, &c, Variant::Ripg1, 5);
    let mut x = vec![0.0; 20];
    for cycle in 0..5 {
        x = robust_art_sweep(&a, &b, &x, 0.9, 0.08, 0.4, &c).unwrap();
        assert_eq!(x, generic[cycle], "huber cycle {cycle}");
    }
}

#[test]
fn size_one_blocks_match_art_and_generic() {
    let (a, b) = random_system(204, 30, 20);
    let parts = BlockPartition::uniform(30, 30).unwrap();
    let c = ConstraintSet::NonNeg;
    let comps = indicator_components(&a, &b).unwrap();
    let generic = generic_cycles(&comps, &vec![0.0; 20], 1.4, 1.0, &c, Variant::Ripg1, 5);
    let mut x_art = vec![0.0; 20];
    let mut x_blk = vec![0.0; 20];
    for cycle in 0..5 {
        x_art = art_sweep(&a, &b, &x_art, 1.4, &c).unwrap();
        x_blk = block_kaczmarz_sweep(&a, &b, &parts, &x_blk, 1.4, None, &c).unwrap();
        assert_eq!(x_art, x_blk, "cycle {cycle}");
        assert_eq!(x_blk, generic[cycle], "cycle {cycle}");
    }
}

#[test]
fn damped_blocks_match_generic_block_components() {
    let (a, b) = random_system(205, 30, 20);
    let parts = BlockPartition::uniform(30, 6).unwrap();
    let comps = block_ls_components(Arc::new(a.clone()), Arc::new(b.clone()), &parts).unwrap();
    let c = ConstraintSet::uniform_box(-1.5, 1.5, 20).unwrap();
    let generic = generic_cycles(&comps, &vec![0.0; 20], 1.1, 0.3, &c, Variant::Ripg1, 5);
    let mut x = vec![0.0; 20];
    for cycle in 0..5 {
        x = block_kaczmarz_sweep(&a, &b, &parts, &x, 1.1, Some(0.3), &c).unwrap();
        assert_eq!(x, generic[cycle], "cycle {cycle}");
    }
}

#[test]
fn variants_produce_identical_sequences_when_h_or_g_vanishes() {
    let (a, b) = random_system(206, 30, 20);
    let c = ConstraintSet::uniform_box(-1.0, 1.0, 20).unwrap();
    let x0 = vec![0.1; 20];
    // h == 0 everywhere
    for comps in [
        quadratic_components(&a, &b).unwrap(),
        abs_components(&a, &b).unwrap(),
        dist_components(&a, &b).unwrap(),
    ] {
        let s1 = generic_cycles(&comps, &x0, 1.3, 0.07, &c, Variant::Ripg1, 5);
        let s2 = generic_cycles(&comps, &x0, 1.3, 0.07, &c, Variant::Ripg2, 5);
        for (p, q) in s1.iter().zip(&s2) {
            assert!(max_abs_diff(p, q) <= 1e-14);
        }
    }
    // g == 0 everywhere
    let comps = gradient_art_components(&a, &b).unwrap();
    let s1 = generic_cycles(&comps, &x0, 0.7, 0.4, &c, Variant::Ripg1, 5);
    let s2 = generic_cycles(&comps, &x0, 0.7, 0.4, &c, Variant::Ripg2, 5);
    for (p, q) in s1.iter().zip(&s2) {
        assert!(max_abs_diff(p, q) <= 1e-14);
    }
}

#[test]
fn art_gradient_and_projection_forms_coincide() {
    let (a, b) = random_system(207, 25, 15);
    let c = ConstraintSet::NonNeg;
    let proj_form = indicator_components(&a, &b).unwrap();
    let grad_form = gradient_art_components(&a, &b).unwrap();
    for &rho in &[0.6, 1.0, 1.5] {
        // gradient form with t = 1 is exactly one hyperplane projection
        let p = generic_cycles(&proj_form, &vec![0.0; 15], rho, 1.0, &c, Variant::Ripg1, 5);
        let g = generic_cycles(&grad_form, &vec![0.0; 15], rho, 1.0, &c, Variant::Ripg1, 5);
        for (x, y) in p.iter().zip(&g) {
            assert_eq!(x, y, "rho {rho}");
        }
    }
}

#[test]
fn damped_art_large_t_tracks_art_per_step() {
    let (a, b) = random_system(208, 30, 20);
    let c = ConstraintSet::AllSpace;
    let mut x_art = vec![0.0; 20];
    let mut x_damped = vec![0.0; 20];
    for _ in 0..5 {
        x_art = art_sweep(&a, &b, &x_art, 1.0, &c).unwrap();
        x_damped = damped_art_sweep(&a, &b, &x_damped, 1.0, 1e12, &c).unwrap();
        assert!(max_abs_diff(&x_art, &x_damped) < 1e-6);
    }
}

#[test]
fn damped_block_large_t_tracks_undamped() {
    let (a, b) = random_system(209, 24, 20);
    let parts = BlockPartition::uniform(24, 4).unwrap();
    let c = ConstraintSet::AllSpace;
    let mut undamped = vec![0.0; 20];
    let mut damped = vec![0.0; 20];
    for _ in 0..3 {
        undamped = block_kaczmarz_sweep(&a, &b, &parts, &undamped, 1.0, None, &c).unwrap();
        damped = block_kaczmarz_sweep(&a, &b, &parts, &damped, 1.0, Some(1e12), &c).unwrap();
        assert!(max_abs_diff(&undamped, &damped) < 1e-5);
    }
}

#[test]
fn whole_matrix_block_lands_on_least_squares_solution() {
    // One full-row-rank block, rho = 1, free space: a single sweep applies
    // x - A^+ (A x - b), whose result agrees with the dense pseudoinverse.
    let (a, b) = random_system(210, 12, 30);
    let parts = BlockPartition::uniform(12, 1).unwrap();
    let x0: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(211);
        (0..30).map(|_| rng.sample(StandardNormal)).collect()
    };
    let x =
        block_kaczmarz_sweep(&a, &b, &parts, &x0, 1.0, None, &ConstraintSet::AllSpace).unwrap();

    let am = DMatrix::from_fn(12, 30, |i, j| a.to_dense()[i][j]);
    let pinv = am.clone().svd(true, true).pseudo_inverse(1e-12).unwrap();
    let r = &am * DVector::from_column_slice(&x0) - DVector::from_column_slice(&b);
    let expect = DVector::from_column_slice(&x0) - &pinv * r;
    for j in 0..30 {
        assert!((x[j] - expect[j]).abs() < 1e-9);
    }
    // the residual vanishes on a full-row-rank underdetermined system
    let res = a
        .matvec(&x)
        .unwrap()
        .iter()
        .zip(&b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    assert!(res < 1e-9);
}

#[test]
fn consistent_system_converges_and_reaches_minimum_norm() {
    // classical Kaczmarz on a consistent 3x2 system drives the residual to
    // zero; from x0 = 0 the limit is the minimum-norm solution
    let a = SparseMatrix::from_dense(&[
        vec![1.0, 2.0],
        vec![3.0, -1.0],
        vec![2.0, 1.0],
    ])
    .unwrap();
    let x_true = vec![0.7, -0.4];
    let b = a.matvec(&x_true).unwrap();
    let comps = indicator_components(&a, &b).unwrap();
    let cfg = SolveConfig::new(
        1.0,
        Schedule::Constant(1.0),
        Control::Cyclic,
        ConstraintSet::AllSpace,
        500,
        Variant::Ripg1,
    )
    .unwrap();
    let trace = run(&comps, &[0.0, 0.0], &cfg, None).unwrap();
    let res: f64 = a
        .matvec(&trace.final_x)
        .unwrap()
        .iter()
        .zip(&b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    assert!(res <= 1e-10, "res={res}");
    // minimum-norm oracle via dense pseudoinverse
    let am = DMatrix::from_fn(3, 2, |i, j| a.to_dense()[i][j]);
    let pinv = am.svd(true, true).pseudo_inverse(1e-12).unwrap();
    let mn = &pinv * DVector::from_column_slice(&b);
    for j in 0..2 {
        assert!((trace.final_x[j] - mn[j]).abs() < 1e-8);
    }
}

#[test]
fn trajectories_depend_continuously_on_rho() {
    let (a, b) = random_system(212, 30, 20);
    let comps = quadratic_components(&a, &b).unwrap();
    let c = ConstraintSet::uniform_box(-1.0, 1.0, 20).unwrap();
    let base = generic_cycles(&comps, &vec![0.0; 20], 1.0, 0.1, &c, Variant::Ripg1, 5);
    let bumped = generic_cycles(&comps, &vec![0.0; 20], 1.0 + 1e-9, 0.1, &c, Variant::Ripg1, 5);
    for (p, q) in base.iter().zip(&bumped) {
        assert!(max_abs_diff(p, q) < 1e-6);
    }
}

#[test]
fn preconditioned_identity_matches_generic_tv_splitting() {
    let n = 4; // 4x4 image, 16 pixels
    let (a, b) = random_system(213, 12, n * n);
    let op = Arc::new(build_diff_operator(n, n));
    let lambda = 0.8;
    let tau = 1e-3;
    let comps = quadratic_tv_components(&a, &b, Arc::clone(&op), lambda, tau).unwrap();
    let c = ConstraintSet::NonNeg;
    let (rho, t) = (1.3, 0.15);
    let generic = generic_cycles(&comps, &vec![0.0; n * n], rho, t, &c, Variant::Ripg1, 3);
    let t_pre = Preconditioner::identity(n * n);
    let mut x = vec![0.0; n * n];
    for cycle in 0..3 {
        x = preconditioned_ripg1_sweep(&a, &b, &t_pre, &x, rho, t, lambda, &op, tau, &c).unwrap();
        assert_eq!(x, generic[cycle], "cycle {cycle}");
    }
}

#[test]
fn scalar_preconditioner_is_a_step_reparametrization() {
    // T = c I rescales the damping metric: the x-space trajectory with
    // (T = cI, t) coincides with (T = I, c^2 t).
    let n = 4;
    let (a, b) = random_system(214, 10, n * n);
    let op = build_diff_operator(n, n);
    let (rho, t, lambda, tau) = (1.1, 0.08, 0.5, 1e-3);
    let c_set = ConstraintSet::NonNeg;
    let scale_c = 1.7;
    let t_scaled = Preconditioner::new(vec![scale_c; n * n]).unwrap();
    let t_id = Preconditioner::identity(n * n);
    let mut x1 = vec![0.0; n * n];
    let mut x2 = vec![0.0; n * n];
    for _ in 0..3 {
        x1 = preconditioned_ripg1_sweep(
            &a, &b, &t_scaled, &x1, rho, t, lambda, &op, tau, &c_set,
        )
        .unwrap();
        x2 = preconditioned_ripg1_sweep(
            &a,
            &b,
            &t_id,
            &x2,
            rho,
            scale_c * scale_c * t,
            lambda,
            &op,
            tau,
            &c_set,
        )
        .unwrap();
        assert!(max_abs_diff(&x1, &x2) < 1e-10);
    }
}

#[test]
fn rho_one_reproduces_unrelaxed_compositions() {
    // R-IPG1 at rho = 1 equals proj_C(w - t grad_h(w)) with w = prox(x).
    use ripg::ripg::{ripg1_step, ComponentSpec, GFun, HFun, SparseVec};
    use ripg::tv::{tv_subgradient, SmoothingMode};
    let op = Arc::new(build_diff_operator(3, 3));
    let a: Vec<f64> = (0..9).map(|i| ((i % 4) as f64) - 1.5).collect();
    let comp = ComponentSpec::new(
        GFun::QuadraticResidual {
            a: SparseVec::from_dense(&a),
            b: 0.4,
        },
        HFun::ScaledTvSubgrad {
            op: Arc::clone(&op),
            weight: 0.2,
            tau: 1e-3,
        },
    );
    let c = ConstraintSet::NonNeg;
    let x: Vec<f64> = (0..9).map(|i| (i as f64) / 10.0).collect();
    let t = 0.3;
    let (x1, w, _) = ripg1_step(&x, &comp, t, 1.0, &c).unwrap();
    // independent composition
    let w_hand = ripg::prox::prox_quadratic_residual(&a, 0.4, t, &x).unwrap().point;
    assert_eq!(w, w_hand);
    let sg = tv_subgradient(&op, &w_hand, 1e-3, SmoothingMode::Floor).unwrap();
    let z_hand: Vec<f64> = w_hand
        .iter()
        .zip(&sg)
        .map(|(&wj, &g)| wj - (t * 0.2) * g)
        .collect();
    let expect = ripg::prox::project(&c, &z_hand);
    assert!(max_abs_diff(&x1, &expect) <= 1e-15);
}
