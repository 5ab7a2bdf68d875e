//! Discrete total-variation machinery.
//!
//! The difference operator stacks, for every pixel, one forward difference
//! per grid direction (Neumann boundary: the out-of-range direction
//! contributes a zero row). Pixels are ordered column-major, pixel (i, j)
//! of an h x w image maps to index j*h + i, matching the phantom
//! vectorization in [`crate::tomo`].

use std::sync::OnceLock;

use crate::sparse::SparseMatrix;
use crate::{invalid, Error, Result};

/// Seed of the fixed power iteration used for the operator-norm estimate.
const OPNORM_SEED: u64 = 0x7d1f_f00d;
const OPNORM_ITERS: usize = 20;

/// Weight rule for the smoothed TV subgradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingMode {
    /// w_i = max(tau, |D_i x|); the resulting field is the exact gradient
    /// of the Huber-smoothed seminorm.
    Floor,
    /// w_i = |D_i x| + tau.
    Shift,
}

/// Stacked finite-difference operator D of shape (d n) x n.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    matrix: SparseMatrix,
    directions: usize,
    grid: Vec<usize>,
    opnorm: OnceLock<f64>,
}

impl DiffOperator {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Number of difference directions per pixel (2 for images).
    pub fn directions(&self) -> usize {
        self.directions
    }

    /// Grid extents, [height, width] for d = 2.
    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    pub fn pixel_count(&self) -> usize {
        self.matrix.ncols()
    }

    /// Cached power-iteration estimate of |D| (20 iterations, fixed seed).
    pub fn opnorm_estimate(&self) -> f64 {
        *self.opnorm.get_or_init(|| {
            crate::reference::estimate_opnorm(&self.matrix, OPNORM_ITERS, OPNORM_SEED)
        })
    }
}

/// Builds the forward-difference operator of an h x w image with Neumann
/// boundary rows. Row 2p of D is the vertical difference at pixel p, row
/// 2p + 1 the horizontal one.
pub fn build_diff_operator(height: usize, width: usize) -> DiffOperator {
    assert!(height >= 1 && width >= 1, "grid must be nonempty");
    let n = height * width;
    let mut triplets = Vec::with_capacity(4 * n);
    for j in 0..width {
        for i in 0..height {
            let p = j * height + i;
            if i + 1 < height {
                triplets.push((2 * p, p, -1.0));
                triplets.push((2 * p, p + 1, 1.0));
            }
            if j + 1 < width {
                triplets.push((2 * p + 1, p, -1.0));
                triplets.push((2 * p + 1, p + height, 1.0));
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(2 * n, n, &triplets)
        .expect("difference stencil indices are in range");
    DiffOperator {
        matrix,
        directions: 2,
        grid: vec![height, width],
        opnorm: OnceLock::new(),
    }
}

fn check_dims(op: &DiffOperator, x: &[f64]) -> Result<()> {
    if x.len() != op.pixel_count() {
        return Err(Error::DimensionMismatch {
            context: "tv input",
            expected: op.pixel_count(),
            got: x.len(),
        });
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(invalid(format!("smoothing tau must be positive, got {tau}")));
    }
    Ok(())
}

/// TV seminorm psi(x) = sum over pixels of |D_i x|_2.
pub fn tv_seminorm(op: &DiffOperator, x: &[f64]) -> f64 {
    check_dims(op, x).expect("dimension mismatch in tv_seminorm");
    let dx = op.matrix().matvec(x).expect("checked dims");
    let d = op.directions();
    dx.chunks(d)
        .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum()
}

/// Smoothed TV subgradient D' diag(w)^-1 D x with per-pixel weights given
/// by the smoothing mode. In floor mode this is the exact gradient of
/// [`huber_tv`].
pub fn tv_subgradient(
    op: &DiffOperator,
    x: &[f64],
    tau: f64,
    mode: SmoothingMode,
) -> Result<Vec<f64>> {
    check_dims(op, x)?;
    check_tau(tau)?;
    let mut dx = op.matrix().matvec(x)?;
    let d = op.directions();
    for g in dx.chunks_mut(d) {
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let w = match mode {
            SmoothingMode::Floor => norm.max(tau),
            SmoothingMode::Shift => norm + tau,
        };
        for v in g {
            *v /= w;
        }
    }
    op.matrix().matvec_t(&dx)
}

/// Huber-smoothed TV seminorm: sum of phi_tau(|D_i x|) with
/// phi_tau(u) = u^2 / (2 tau) for |u| <= tau and |u| - tau/2 otherwise.
pub fn huber_tv(op: &DiffOperator, x: &[f64], tau: f64) -> Result<f64> {
    check_dims(op, x)?;
    check_tau(tau)?;
    let dx = op.matrix().matvec(x)?;
    let d = op.directions();
    Ok(dx
        .chunks(d)
        .map(|g| {
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= tau {
                norm * norm / (2.0 * tau)
            } else {
                norm - tau / 2.0
            }
        })
        .sum())
}

/// Scale-aware default smoothing parameter:
/// 1e-4 times the dynamic range of `x`, floored at 1.
pub fn default_tau(x: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in x {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = if hi > lo { hi - lo } else { 0.0 };
    1e-4 * range.max(1.0)
}
