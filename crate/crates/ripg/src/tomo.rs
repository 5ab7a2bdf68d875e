//! Parallel-beam tomography test problems.
//!
//! The image occupies the square [-N/2, N/2]^2 so pixels have unit side and
//! the stored intersection lengths are in pixel units (average row norms of
//! order 10 at the scales used in the experiments). A projection at angle
//! theta consists of `rays` parallel lines offset along the rotated
//! detector axis; the detector spans [-N/sqrt(2), N/sqrt(2)] so corner rays
//! exist. Rows are ordered ray-major within each angle, matching the
//! column-wise vectorization of the sinogram.
//!
//! Measurement synthesis avoids the inverse crime: the noise-free sinogram
//! is computed on a finer grid (round(sqrt(3) N) pixels) with more detector
//! samples (round(sqrt(2) r)), then linearly interpolated down to the
//! requested detector before seeded Gaussian noise is added at an exact
//! relative level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::sparse::{BlockPartition, SparseMatrix};
use crate::{invalid, Result};

/// Parallel-beam scan geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geometry {
    /// Image side length in pixels.
    pub n: usize,
    /// Number of projection angles, equally spaced in [0, 180) degrees.
    pub projections: usize,
    /// Rays per projection.
    pub rays: usize,
}

impl Geometry {
    pub fn parallel(n: usize, projections: usize, rays: usize) -> Result<Self> {
        if n < 1 || projections < 1 || rays < 1 {
            return Err(invalid("geometry dimensions must be positive"));
        }
        Ok(Self {
            n,
            projections,
            rays,
        })
    }

    /// Projection angles in radians: theta_j = j * pi / p.
    pub fn angles(&self) -> Vec<f64> {
        (0..self.projections)
            .map(|j| j as f64 * std::f64::consts::PI / self.projections as f64)
            .collect()
    }

    /// Half-width of the detector, covering the image diagonal.
    pub fn detector_half_span(&self) -> f64 {
        self.n as f64 / 2.0 * std::f64::consts::SQRT_2
    }

    pub fn num_rows(&self) -> usize {
        self.projections * self.rays
    }

    pub fn num_pixels(&self) -> usize {
        self.n * self.n
    }
}

/// A generated test problem: projector, phantom, clean and noisy data.
#[derive(Debug, Clone, PartialEq)]
pub struct TomoProblem {
    pub a: SparseMatrix,
    pub x_exact: Vec<f64>,
    pub b_exact: Vec<f64>,
    pub b: Vec<f64>,
    pub eta: f64,
    pub seed: u64,
    pub geometry: Geometry,
}

impl TomoProblem {
    /// One contiguous block of rows per projection angle.
    pub fn projection_blocks(&self) -> BlockPartition {
        BlockPartition::uniform(self.geometry.num_rows(), self.geometry.projections)
            .expect("rows divide evenly into projections")
    }
}

/// Modified Shepp-Logan ellipse table:
/// (value, semi-axis a, semi-axis b, x0, y0, rotation degrees).
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.605, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// N x N Shepp-Logan phantom sampled at pixel centers of [-1, 1]^2,
/// vectorized column-major (pixel (i, j) at index j N + i), clipped to be
/// nonnegative.
pub fn shepp_logan(n: usize) -> Vec<f64> {
    assert!(n >= 8, "phantom needs at least 8 pixels per side");
    let mut img = vec![0.0f64; n * n];
    let trig: Vec<(f64, f64)> = SHEPP_LOGAN
        .iter()
        .map(|e| {
            let phi = e.5.to_radians();
            (phi.cos(), phi.sin())
        })
        .collect();
    for j in 0..n {
        let x = -1.0 + (2.0 * j as f64 + 1.0) / n as f64;
        for i in 0..n {
            let y = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let mut v = 0.0;
            for (e, &(cos_phi, sin_phi)) in SHEPP_LOGAN.iter().zip(&trig) {
                let dx = x - e.3;
                let dy = y - e.4;
                let u = dx * cos_phi + dy * sin_phi;
                let w = -dx * sin_phi + dy * cos_phi;
                if (u / e.1) * (u / e.1) + (w / e.2) * (w / e.2) <= 1.0 {
                    v += e.0;
                }
            }
            img[j * n + i] = v.max(0.0);
        }
    }
    img
}

/// Exact ray-pixel intersection lengths for one ray through the square
/// [-h, h]^2 divided into `grid_n` x `grid_n` pixels. The ray passes
/// through `offset * (cos, sin)` with direction `(-sin, cos)`. Emits
/// (pixel index, length) pairs via the callback.
fn trace_ray(
    grid_n: usize,
    half_width: f64,
    cos_t: f64,
    sin_t: f64,
    offset: f64,
    mut emit: impl FnMut(usize, f64),
) {
    let h = half_width;
    let px = offset * cos_t;
    let py = offset * sin_t;
    let (dx, dy) = (-sin_t, cos_t);

    // clip to the square
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < 1e-14 {
            if p < -h || p > h {
                return;
            }
        } else {
            let t1 = (-h - p) / d;
            let t2 = (h - p) / d;
            t_lo = t_lo.max(t1.min(t2));
            t_hi = t_hi.min(t1.max(t2));
        }
    }
    if !(t_hi > t_lo) {
        return;
    }

    // all cell-boundary crossings inside [t_lo, t_hi]
    let pixel = 2.0 * h / grid_n as f64;
    let mut cuts = Vec::with_capacity(2 * grid_n + 2);
    cuts.push(t_lo);
    cuts.push(t_hi);
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < 1e-14 {
            continue;
        }
        for k in 1..grid_n {
            let plane = -h + k as f64 * pixel;
            let t = (plane - p) / d;
            if t > t_lo && t < t_hi {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);

    for pair in cuts.windows(2) {
        let len = pair[1] - pair[0];
        if len <= 0.0 {
            continue;
        }
        let tm = 0.5 * (pair[0] + pair[1]);
        let xm = px + tm * dx;
        let ym = py + tm * dy;
        let col = (((xm + h) / pixel).floor() as isize).clamp(0, grid_n as isize - 1) as usize;
        let row = (((h - ym) / pixel).floor() as isize).clamp(0, grid_n as isize - 1) as usize;
        emit(col * grid_n + row, len);
    }
}

/// Projector for an arbitrary grid resolution over a fixed physical square
/// of the given half-width. Used both for the problem matrix (grid_n = n,
/// half_width = n/2, unit pixels) and the finer simulation grid.
fn projector_for_grid(
    grid_n: usize,
    projections: usize,
    rays: usize,
    half_width: f64,
    oversample: usize,
) -> SparseMatrix {
    assert!(oversample >= 1, "oversample must be at least 1");
    let span = half_width * std::f64::consts::SQRT_2;
    let cell = 2.0 * span / rays as f64;
    let weight = 1.0 / oversample as f64;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (j, theta) in (0..projections)
        .map(|j| j as f64 * std::f64::consts::PI / projections as f64)
        .enumerate()
    {
        let (sin_t, cos_t) = theta.sin_cos();
        for q in 0..rays {
            let row = j * rays + q;
            let center = -span + (q as f64 + 0.5) * cell;
            for k in 0..oversample {
                let offset =
                    center + ((k as f64 + 0.5) / oversample as f64 - 0.5) * cell;
                trace_ray(grid_n, half_width, cos_t, sin_t, offset, |pix, len| {
                    triplets.push((row, pix, len * weight));
                });
            }
        }
    }
    SparseMatrix::from_triplets(projections * rays, grid_n * grid_n, &triplets)
        .expect("ray tracer emits in-range indices")
}

/// Sparse projector of the geometry: entry (ray, pixel) is the intersection
/// length of the ray with the pixel, in pixel units. With `oversample > 1`
/// each detector sample averages that many equally spaced sub-rays across
/// the detector cell.
pub fn build_projector(geometry: &Geometry, oversample: usize) -> SparseMatrix {
    projector_for_grid(
        geometry.n,
        geometry.projections,
        geometry.rays,
        geometry.n as f64 / 2.0,
        oversample,
    )
}

/// Generates a complete test problem: phantom, projector, inverse-crime-
/// avoiding noise-free sinogram and seeded noisy data with
/// |b - b_exact| / |b_exact| = eta exactly.
pub fn make_sinogram(geometry: &Geometry, eta: f64, seed: u64) -> Result<TomoProblem> {
    if geometry.n < 8 {
        return Err(invalid("sinogram synthesis needs n >= 8"));
    }
    if !(eta >= 0.0) {
        return Err(invalid(format!("noise level must be >= 0, got {eta}")));
    }
    let n = geometry.n;
    let p = geometry.projections;
    let r = geometry.rays;
    let half_width = n as f64 / 2.0;

    // fine simulation grid
    let n_fine = (3.0f64.sqrt() * n as f64).round() as usize;
    let r_fine = (std::f64::consts::SQRT_2 * r as f64).round() as usize;
    let a_fine = projector_for_grid(n_fine, p, r_fine, half_width, 1);
    let x_fine = shepp_logan(n_fine);
    let b_fine = a_fine.matvec(&x_fine)?;

    // per-angle linear interpolation down to r detector samples
    let span = geometry.detector_half_span();
    let cell_fine = 2.0 * span / r_fine as f64;
    let first_fine = -span + 0.5 * cell_fine;
    let cell = 2.0 * span / r as f64;
    let mut b_exact = vec![0.0f64; p * r];
    for j in 0..p {
        let col = &b_fine[j * r_fine..(j + 1) * r_fine];
        for q in 0..r {
            let s = -span + (q as f64 + 0.5) * cell;
            let u = (s - first_fine) / cell_fine;
            let l = (u.floor() as isize).clamp(0, r_fine as isize - 2) as usize;
            let frac = u - l as f64;
            b_exact[j * r + q] = (1.0 - frac) * col[l] + frac * col[l + 1];
        }
    }

    let a = build_projector(geometry, 1);
    let x_exact = shepp_logan(n);

    let b = if eta > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e: Vec<f64> = (0..p * r).map(|_| rng.sample(StandardNormal)).collect();
        let norm_b = b_exact.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_e = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm_e > 0.0 { eta * norm_b / norm_e } else { 0.0 };
        b_exact
            .iter()
            .zip(&e)
            .map(|(&bi, &ei)| bi + scale * ei)
            .collect()
    } else {
        b_exact.clone()
    };

    Ok(TomoProblem {
        a,
        x_exact,
        b_exact,
        b,
        eta,
        seed,
        geometry: geometry.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phantom_corners_are_outside_the_head() {
        let n = 16;
        let img = shepp_logan(n);
        for (i, j) in [(0, 0), (0, n - 1), (n - 1, 0), (n - 1, n - 1)] {
            assert_eq!(img[j * n + i], 0.0);
        }
    }

    #[test]
    fn phantom_max_intensity_near_one() {
        let img = shepp_logan(64);
        let max = img.iter().fold(0.0f64, |a, &b| a.max(b));
        assert!((0.9..=1.1).contains(&max), "max={max}");
        assert!(img.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn phantom_mass_nearly_mirror_symmetric() {
        // The axis-aligned centered ellipses are exactly mirror symmetric;
        // the tilted ventricles and the off-center dots have unequal areas,
        // which puts the full-image half-mass imbalance near 4%.
        let n = 64;
        let img = shepp_logan(n);
        let mut asym = 0.0f64;
        let mut left = 0.0;
        let mut right = 0.0;
        for j in 0..n {
            for i in 0..n {
                let v = img[j * n + i];
                let mirrored = img[(n - 1 - j) * n + i];
                asym = asym.max((v - mirrored).abs());
                if j < n / 2 {
                    left += v;
                } else {
                    right += v;
                }
            }
        }
        assert!(asym > 0.0, "tilted ellipses must break exact symmetry");
        // measured imbalance of the standard table is ~8% of one half
        assert!((left - right).abs() / right < 0.10, "left={left} right={right}");

        // Symmetric subset: dropping the tilted/off-center ellipses gives an
        // exactly mirror-symmetric image.
        let mut sym = vec![0.0f64; n * n];
        for j in 0..n {
            let x = -1.0 + (2.0 * j as f64 + 1.0) / n as f64;
            for i in 0..n {
                let y = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let mut v: f64 = 0.0;
                for e in SHEPP_LOGAN.iter().filter(|e| e.3 == 0.0 && e.5 == 0.0) {
                    let dx = x - e.3;
                    let dy = y - e.4;
                    if (dx / e.1) * (dx / e.1) + (dy / e.2) * (dy / e.2) <= 1.0 {
                        v += e.0;
                    }
                }
                sym[j * n + i] = v.max(0.0);
            }
        }
        for j in 0..n {
            for i in 0..n {
                assert_eq!(sym[j * n + i], sym[(n - 1 - j) * n + i]);
            }
        }
    }

    #[test]
    fn axis_aligned_rays_cover_full_columns() {
        // theta = 0: vertical rays; interior rays cross the full square so
        // the intersection lengths sum to the side length n.
        let geom = Geometry::parallel(8, 2, 8).unwrap();
        let a = build_projector(&geom, 1);
        let span = geom.detector_half_span();
        let cell = 2.0 * span / 8.0;
        for q in 0..8 {
            let offset = -span + (q as f64 + 0.5) * cell;
            let sum: f64 = a.row(q).values.iter().sum();
            if offset.abs() < 4.0 {
                assert!((sum - 8.0).abs() < 1e-9, "q={q} sum={sum}");
            } else {
                assert_eq!(a.row(q).nnz(), 0, "ray q={q} should miss the image");
            }
        }
    }

    #[test]
    fn diagonal_chord_lengths_match_geometry() {
        // 45 degree rays: chord(s) = 2 sqrt(2) h - 2|s| inside the corner
        // radius. The projector applied to the constant-1 image returns
        // every ray's chord length.
        let n = 32;
        let geom = Geometry::parallel(n, 4, 48).unwrap();
        let a = build_projector(&geom, 1);
        let ones = vec![1.0; n * n];
        let sums = a.matvec(&ones).unwrap();
        let h = n as f64 / 2.0;
        let span = geom.detector_half_span();
        let cell = 2.0 * span / 48.0;
        let j = 1; // 45 degrees
        for q in 0..48 {
            let s = -span + (q as f64 + 0.5) * cell;
            let expect = (2.0 * std::f64::consts::SQRT_2 * h - 2.0 * s.abs()).max(0.0);
            let got = sums[j * 48 + q];
            assert!(
                (got - expect).abs() < 1e-9,
                "q={q} s={s} got={got} expect={expect}"
            );
        }
    }

    #[test]
    fn projector_values_positive_and_deterministic() {
        let geom = Geometry::parallel(16, 6, 20).unwrap();
        let a1 = build_projector(&geom, 1);
        let a2 = build_projector(&geom, 1);
        assert_eq!(a1, a2);
        assert!(a1.values().iter().all(|&v| v > 0.0));
        assert_eq!(a1.nrows(), geom.num_rows());
        assert_eq!(a1.ncols(), geom.num_pixels());
    }

    #[test]
    fn oversampling_averages_subrays() {
        // A detector with `os` sub-rays per cell is exactly the row-average
        // of a detector with os * rays single rays.
        let os = 4;
        let rays = 12;
        let geom = Geometry::parallel(16, 3, rays).unwrap();
        let coarse = build_projector(&geom, os);
        let fine = build_projector(&Geometry::parallel(16, 3, rays * os).unwrap(), 1);
        let ones = vec![1.0; 256];
        let coarse_sums = coarse.matvec(&ones).unwrap();
        let fine_sums = fine.matvec(&ones).unwrap();
        for j in 0..3 {
            for q in 0..rays {
                let avg: f64 = (0..os)
                    .map(|k| fine_sums[j * rays * os + q * os + k])
                    .sum::<f64>()
                    / os as f64;
                let got = coarse_sums[j * rays + q];
                assert!((got - avg).abs() < 1e-9, "j={j} q={q} got={got} avg={avg}");
            }
        }
    }

    #[test]
    fn sinogram_noise_level_exact() {
        let geom = Geometry::parallel(16, 8, 16).unwrap();
        let clean = make_sinogram(&geom, 0.0, 7).unwrap();
        assert_eq!(clean.b, clean.b_exact);
        let noisy = make_sinogram(&geom, 0.05, 7).unwrap();
        let num = noisy
            .b
            .iter()
            .zip(&noisy.b_exact)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den = noisy.b_exact.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((num / den - 0.05).abs() < 1e-12);
    }

    #[test]
    fn sinogram_deterministic_per_seed() {
        let geom = Geometry::parallel(16, 4, 12).unwrap();
        let p1 = make_sinogram(&geom, 0.03, 11).unwrap();
        let p2 = make_sinogram(&geom, 0.03, 11).unwrap();
        assert_eq!(p1, p2);
        let p3 = make_sinogram(&geom, 0.03, 12).unwrap();
        assert_ne!(p1.b, p3.b);
    }

    #[test]
    fn projection_blocks_are_per_angle() {
        let geom = Geometry::parallel(16, 4, 12).unwrap();
        let prob = make_sinogram(&geom, 0.0, 0).unwrap();
        let blocks = prob.projection_blocks();
        assert_eq!(blocks.num_blocks(), 4);
        assert_eq!(blocks.block_range(1), 12..24);
    }
}
