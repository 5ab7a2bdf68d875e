//! Oracle suites for the prox catalog and the small linear-algebra solves.
//!
//! Every closed-form row prox minimizes t g(u) + 1/2 |u - x|^2 over a line
//! segment from x to the hyperplane projection of x, so a golden-section
//! search over that segment is an independent oracle: the prox result must
//! not lose more than 1e-8 of objective against it. Dense solves are
//! checked against nalgebra factorizations.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ripg::prox::{
    project, project_hyperplane, prox_abs_residual, prox_block_ls, prox_dist, prox_dist_sq,
    prox_huber_residual, prox_quadratic_residual, ConstraintSet, ProxResult,
};
use ripg::sparse::{solve_dense_spd, solve_small_spd, solve_tridiag_spd, DenseMatrix, SparseMatrix};

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Golden-section search for the minimizer of a unimodal function on [0, 1].
fn golden_section(f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy)]
enum RowProx {
    Quadratic,
    Dist,
    DistTheta,
    Abs,
    Huber(f64),
}

impl RowProx {
    fn g(&self, res: f64, row_norm: f64) -> f64 {
        match self {
            RowProx::Quadratic => 0.5 * res * res,
            RowProx::Dist | RowProx::DistTheta => {
                if row_norm == 0.0 {
                    0.0
                } else {
                    res.abs() / row_norm
                }
            }
            RowProx::Abs => res.abs(),
            RowProx::Huber(mu) => {
                if res.abs() < *mu {
                    res * res / (2.0 * mu)
                } else {
                    res.abs() - mu / 2.0
                }
            }
        }
    }

    fn eval(&self, a: &[f64], b: f64, t: f64, x: &[f64]) -> ProxResult {
        match self {
            RowProx::Quadratic => prox_quadratic_residual(a, b, t, x).unwrap(),
            RowProx::Dist => prox_dist(a, b, t, x).unwrap(),
            RowProx::DistTheta => prox_dist_sq(a, b, t, x).unwrap(),
            RowProx::Abs => prox_abs_residual(a, b, t, x).unwrap(),
            RowProx::Huber(mu) => prox_huber_residual(a, b, *mu, t, x).unwrap(),
        }
    }
}

/// Runs `cases` random instances of one row prox against the line-segment
/// golden-section oracle; panics if the prox ever loses more than `gap`.
fn run_row_prox_suite(kind: RowProx, cases: usize, seed: u64, gap: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = rng.random_range(2..8);
        let a = normal_vec(&mut rng, n);
        let b: f64 = rng.sample(StandardNormal);
        let x = normal_vec(&mut rng, n);
        let t = 10f64.powf(rng.random_range(-2.0..2.0));
        let row_norm = dot(&a, &a).sqrt();
        if row_norm < 1e-9 {
            continue;
        }
        let proj = project_hyperplane(&a, b, &x).unwrap();
        let objective = |u: &[f64]| t * kind.g(dot(&a, u) - b, row_norm) + 0.5 * dist_sq(u, &x);
        let on_segment = |theta: f64| -> Vec<f64> {
            x.iter()
                .zip(&proj)
                .map(|(&xj, &pj)| xj + theta * (pj - xj))
                .collect()
        };
        let theta_star = golden_section(|theta| objective(&on_segment(theta)));
        let oracle_obj = objective(&on_segment(theta_star));
        let got = kind.eval(&a, b, t, &x);
        let got_obj = objective(&got.point);
        assert!(
            got_obj <= oracle_obj + gap,
            "case {case}: prox objective {got_obj} vs oracle {oracle_obj}"
        );
        // implicit subgradient definition
        for j in 0..n {
            let expect = (x[j] - got.point[j]) / t;
            assert!((got.implicit_subgradient[j] - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }
}

#[test]
fn quadratic_prox_beats_oracle() {
    run_row_prox_suite(RowProx::Quadratic, 300, 101, 1e-8);
}

#[test]
fn dist_prox_beats_oracle() {
    run_row_prox_suite(RowProx::Dist, 300, 102, 1e-8);
}

#[test]
fn dist_theta_prox_beats_oracle() {
    run_row_prox_suite(RowProx::DistTheta, 300, 103, 1e-8);
}

#[test]
fn abs_prox_beats_oracle() {
    run_row_prox_suite(RowProx::Abs, 300, 104, 1e-8);
}

#[test]
fn huber_prox_beats_oracle() {
    run_row_prox_suite(RowProx::Huber(0.37), 300, 105, 1e-8);
}

#[test]
fn hyperplane_projection_matches_dense_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..200 {
        let n = rng.random_range(2..8);
        let a = normal_vec(&mut rng, n);
        if dot(&a, &a).sqrt() < 1e-9 {
            continue;
        }
        let b: f64 = rng.sample(StandardNormal);
        let x = normal_vec(&mut rng, n);
        let got = project_hyperplane(&a, b, &x).unwrap();

        // KKT system [I a; a' 0] [u; nu] = [x; b]
        let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
        for j in 0..n {
            kkt[(j, j)] = 1.0;
            kkt[(j, n)] = a[j];
            kkt[(n, j)] = a[j];
        }
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for j in 0..n {
            rhs[j] = x[j];
        }
        rhs[n] = b;
        let sol = kkt.lu().solve(&rhs).unwrap();
        for j in 0..n {
            assert!((got[j] - sol[j]).abs() < 1e-10);
        }
        // the result lies on the hyperplane
        let res = dot(&a, &got) - b;
        let scale = dot(&a, &a).sqrt() * dot(&x, &x).sqrt() + b.abs();
        assert!(res.abs() <= 1e-10 * scale.max(1.0));
    }
}

#[test]
fn block_ls_prox_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for _ in 0..200 {
        let rows = rng.random_range(1..6);
        let n = rng.random_range(rows..9);
        let dense: Vec<Vec<f64>> = (0..rows).map(|_| normal_vec(&mut rng, n)).collect();
        let a = SparseMatrix::from_dense(&dense).unwrap();
        let b = normal_vec(&mut rng, rows);
        let x = normal_vec(&mut rng, n);
        let t = 10f64.powf(rng.random_range(-2.0..2.0));
        let got = prox_block_ls(a.block(0..rows), &b, t, &x).unwrap();

        // oracle: (I + t A'A) u = x + t A'b
        let am = DMatrix::from_fn(rows, n, |i, j| dense[i][j]);
        let sys = DMatrix::<f64>::identity(n, n) + t * am.transpose() * &am;
        let rhs = DVector::from_column_slice(&x) + t * am.transpose() * DVector::from_column_slice(&b);
        let u = sys.lu().solve(&rhs).unwrap();

        let objective = |u: &[f64]| {
            let r: Vec<f64> = (0..rows).map(|i| dot(&dense[i], u) - b[i]).collect();
            t * 0.5 * r.iter().map(|v| v * v).sum::<f64>() + 0.5 * dist_sq(u, &x)
        };
        let got_obj = objective(&got.point);
        let oracle_obj = objective(u.as_slice());
        assert!(got_obj <= oracle_obj + 1e-8, "{got_obj} vs {oracle_obj}");
    }
}

#[test]
fn block_ls_large_t_approaches_pseudoinverse_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for _ in 0..50 {
        let rows = rng.random_range(1..5);
        let n = rng.random_range(rows + 2..10);
        let dense: Vec<Vec<f64>> = (0..rows).map(|_| normal_vec(&mut rng, n)).collect();
        let a = SparseMatrix::from_dense(&dense).unwrap();
        let b = normal_vec(&mut rng, rows);
        let x = normal_vec(&mut rng, n);
        let got = prox_block_ls(a.block(0..rows), &b, 1e12, &x).unwrap();

        let am = DMatrix::from_fn(rows, n, |i, j| dense[i][j]);
        let pinv = am.clone().svd(true, true).pseudo_inverse(1e-12).unwrap();
        let r = &am * DVector::from_column_slice(&x) - DVector::from_column_slice(&b);
        let expect = DVector::from_column_slice(&x) - pinv * r;
        for j in 0..n {
            assert!(
                (got.point[j] - expect[j]).abs() < 1e-5,
                "{} vs {}",
                got.point[j],
                expect[j]
            );
        }
    }
}

#[test]
fn firm_nonexpansiveness_spot_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for kind in [
        RowProx::Quadratic,
        RowProx::Dist,
        RowProx::DistTheta,
        RowProx::Abs,
        RowProx::Huber(0.2),
    ] {
        for _ in 0..200 {
            let n = rng.random_range(2..6);
            let a = normal_vec(&mut rng, n);
            let b: f64 = rng.sample(StandardNormal);
            let x = normal_vec(&mut rng, n);
            let y = normal_vec(&mut rng, n);
            let t = 10f64.powf(rng.random_range(-1.5..1.5));
            let px = kind.eval(&a, b, t, &x);
            let py = kind.eval(&a, b, t, &y);
            let lhs = dist_sq(&px.point, &py.point).sqrt();
            let rhs = dist_sq(&x, &y).sqrt();
            assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
        }
    }
}

#[test]
fn huber_branch_boundary_is_continuous() {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    for _ in 0..100 {
        let n = rng.random_range(2..5);
        let a = normal_vec(&mut rng, n);
        let nsq = dot(&a, &a);
        if nsq < 1e-6 {
            continue;
        }
        let t = 10f64.powf(rng.random_range(-1.0..1.0));
        let mu = 10f64.powf(rng.random_range(-1.0..0.5));
        // place x so that a'x - b sits exactly at the branch boundary
        let boundary = mu + t * nsq;
        let x = normal_vec(&mut rng, n);
        let b = dot(&a, &x) - boundary;
        for delta in [-1e-9, 1e-9] {
            let shifted = b - delta; // residual = boundary + delta
            let lo = prox_huber_residual(&a, shifted, mu, t, &x).unwrap();
            let hi = prox_huber_residual(&a, b, mu, t, &x).unwrap();
            let dev = dist_sq(&lo.point, &hi.point).sqrt();
            assert!(dev < 1e-6, "dev={dev}");
        }
    }
}

#[test]
fn quadratic_implicit_subgradient_is_analytic() {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    for _ in 0..200 {
        let n = rng.random_range(2..6);
        let a = normal_vec(&mut rng, n);
        let b: f64 = rng.sample(StandardNormal);
        let x = normal_vec(&mut rng, n);
        let t = 10f64.powf(rng.random_range(-1.0..1.0));
        let r = prox_quadratic_residual(&a, b, t, &x).unwrap();
        let res = dot(&a, &r.point) - b;
        for j in 0..n {
            let analytic = a[j] * res;
            assert!(
                (r.implicit_subgradient[j] - analytic).abs() <= 1e-10 * analytic.abs().max(1.0)
            );
        }
    }
}

#[test]
fn projection_is_idempotent_on_random_boxes() {
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    for _ in 0..200 {
        let n = rng.random_range(1..7);
        let lo = normal_vec(&mut rng, n);
        let hi: Vec<f64> = lo.iter().map(|&l| l + rng.random_range(0.0..2.0)).collect();
        let c = ConstraintSet::boxed(lo, hi).unwrap();
        let x = normal_vec(&mut rng, n);
        let once = project(&c, &x);
        assert_eq!(project(&c, &once), once);
        assert!(c.contains(&once));
    }
}

#[test]
fn small_spd_solve_matches_nalgebra_cholesky() {
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    for _ in 0..100 {
        let n = rng.random_range(2..9);
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let spd = &g * g.transpose() + DMatrix::<f64>::identity(n, n) * (n as f64);
        let rhs = normal_vec(&mut rng, n);
        let m = DenseMatrix::from_rows(
            &(0..n)
                .map(|i| (0..n).map(|j| spd[(i, j)]).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        let got = solve_small_spd(&m, &rhs).unwrap();
        let oracle = spd
            .clone()
            .cholesky()
            .unwrap()
            .solve(&DVector::from_column_slice(&rhs));
        let x_norm = oracle.norm();
        for j in 0..n {
            assert!((got[j] - oracle[j]).abs() <= 1e-10 * x_norm.max(1.0));
        }
        // residual bound from the contract
        let res = (&spd * DVector::from_column_slice(&got) - DVector::from_column_slice(&rhs))
            .norm();
        let bound = 1e-10
            * (m.frobenius_norm() * x_norm + DVector::from_column_slice(&rhs).norm()).max(1.0);
        assert!(res <= bound, "res={res} bound={bound}");
    }
}

#[test]
fn tridiagonal_path_agrees_with_dense_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(114);
    for _ in 0..100 {
        let n: usize = rng.random_range(1..12);
        // random SPD tridiagonal: diagonally dominant
        let off: Vec<f64> = (0..n.saturating_sub(1))
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let mut d = 1.0 + rng.random_range(0.0..2.0);
                if i > 0 {
                    d += off[i - 1].abs();
                }
                if i < n - 1 {
                    d += off[i].abs();
                }
                d
            })
            .collect();
        let rhs = normal_vec(&mut rng, n);
        let fast = solve_tridiag_spd(&diag, &off, &rhs).unwrap();
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, diag[i]);
            if i + 1 < n {
                m.set(i, i + 1, off[i]);
                m.set(i + 1, i, off[i]);
            }
        }
        let dense = solve_dense_spd(&m, &rhs).unwrap();
        let scale = fast.iter().map(|v| v.abs()).fold(1.0_f64, f64::max);
        for j in 0..n {
            assert!((fast[j] - dense[j]).abs() <= 1e-10 * scale);
        }
        // the router picks the fast path and agrees too
        let routed = solve_small_spd(&m, &rhs).unwrap();
        assert_eq!(routed, fast);
    }
}
