use ripg::prox::ConstraintSet;
use ripg::rowaction::art_sweep;
use ripg::tomo::{make_sinogram, Geometry};

fn main() {
    let geom = Geometry::parallel(32, 36, 32).unwrap();
    let prob = make_sinogram(&geom, 0.08, 1).unwrap();
    let norms = prob.a.row_norms();
    let mut sorted: Vec<f64> = norms.iter().copied().filter(|&v| v > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    println!("row norms: min {:.2e} p5 {:.2e} median {:.2e} max {:.2e}, zero rows {}",
        sorted[0], sorted[sorted.len()/20], sorted[sorted.len()/2], sorted[sorted.len()-1],
        norms.iter().filter(|&&v| v == 0.0).count());
    let c = ConstraintSet::AllSpace;
    let mut x = vec![0.0; 1024];
    for cyc in 0..8 {
        x = art_sweep(&prob.a, &prob.b, &x, 1.0, &c).unwrap();
        let err: Vec<f64> = x.iter().zip(&prob.x_exact).map(|(a,b)| (a-b).abs()).collect();
        let mut es = err.clone(); es.sort_by(f64::total_cmp);
        println!("cycle {}: max|x| {:.1} err median {:.3} p90 {:.3} max {:.1}",
            cyc+1, x.iter().fold(0.0f64,|a,&b|a.max(b.abs())),
            es[512], es[921], es[1023]);
    }
    // error by radius band
    let n = 32usize;
    let cpix = (n as f64 - 1.0)/2.0;
    let mut bands = vec![(0.0f64, 0usize); 4];
    for j in 0..n { for i in 0..n {
        let r = ((i as f64 - cpix).powi(2) + (j as f64 - cpix).powi(2)).sqrt();
        let band = ((r / (n as f64/2.0) * 2.0).floor() as usize).min(3);
        bands[band].0 += (x[j*n+i] - prob.x_exact[j*n+i]).abs();
        bands[band].1 += 1;
    }}
    for (k, (s, c)) in bands.iter().enumerate() {
        println!("radius band {k} ({} px): mae {:.3}", c, s / *c as f64);
    }
}
