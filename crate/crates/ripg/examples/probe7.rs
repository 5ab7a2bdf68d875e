use ripg::prox::ConstraintSet;
use ripg::rowaction::{art_sweep, damped_art_sweep};
use ripg::tomo::{make_sinogram, Geometry};

fn mae_split(x: &[f64], x_exact: &[f64], n: usize) -> (f64, f64) {
    let c = (n as f64 - 1.0) / 2.0;
    let r_in = n as f64 / 2.0;
    let (mut inside, mut outside) = ((0.0, 0usize), (0.0, 0usize));
    for j in 0..n {
        for i in 0..n {
            let r = (((i as f64 - c).powi(2) + (j as f64 - c).powi(2))).sqrt();
            let e = (x[j * n + i] - x_exact[j * n + i]).abs();
            if r > r_in { outside.0 += e; outside.1 += 1; } else { inside.0 += e; inside.1 += 1; }
        }
    }
    (inside.0 / inside.1 as f64, outside.0 / outside.1 as f64)
}

fn main() {
    let geom = Geometry::parallel(32, 36, 32).unwrap();
    for seed in [1u64, 2, 3] {
        let prob = make_sinogram(&geom, 0.08, seed).unwrap();
        let max_nsq = prob.a.row_norms().iter().map(|v| v * v).fold(0.0f64, f64::max);
        let t = 1.0 / (0.1 * max_nsq);
        let c = ConstraintSet::AllSpace;
        let mut xa = vec![0.0; 1024];
        let mut xd = vec![0.0; 1024];
        for _ in 0..8 {
            xa = art_sweep(&prob.a, &prob.b, &xa, 1.0, &c).unwrap();
            xd = damped_art_sweep(&prob.a, &prob.b, &xd, 1.0, t, &c).unwrap();
        }
        let (ia, oa) = mae_split(&xa, &prob.x_exact, 32);
        let (id, od) = mae_split(&xd, &prob.x_exact, 32);
        println!("seed {seed}: t={t:.4} art inside {ia:.4} outside {oa:.4} | damped inside {id:.4} outside {od:.4} | out_ratio {:.3} in_reldiff {:.4}", od/oa, (id-ia).abs()/ia);
    }
}
