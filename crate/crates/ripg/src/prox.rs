//! Catalog of proximal operators and projections.
//!
//! Every row-type operator here reduces to the same shape: compute the row
//! residual a'x - b and the squared row norm in ascending column order, pick
//! a scalar step from the operator's closed form, and subtract `a * scale`
//! from `x` on the row's support. The fused sweeps in [`crate::rowaction`]
//! and the generic drivers in [`crate::ripg`] call the same kernels, so the
//! two formulations of each method produce bit-identical iterates.
//!
//! Zero-row convention: any row with zero norm makes every row prox the
//! identity map, as does a zero residual.

use crate::sparse::{block_gram, solve_dense_spd, solve_tridiag_spd, BlockView, Gram};
use crate::sparse::BLOCK_ROW_CAP;
use crate::tv::DiffOperator;
use crate::{invalid, Error, Result};

/// Closed convex constraint set with a cheap projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    /// No constraint; the projection is the identity.
    AllSpace,
    /// Componentwise nonnegativity.
    NonNeg,
    /// Componentwise bounds, `lower[j] <= x[j] <= upper[j]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl ConstraintSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "box bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(invalid("box requires lower <= upper elementwise"));
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn uniform_box(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::boxed(vec![lo; n], vec![hi; n])
    }

    /// Clamp one component. NaN propagates so divergence stays visible.
    #[inline]
    pub(crate) fn clamp_component(&self, j: usize, v: f64) -> f64 {
        match self {
            ConstraintSet::AllSpace => v,
            ConstraintSet::NonNeg => {
                if v < 0.0 {
                    0.0
                } else {
                    v
                }
            }
            ConstraintSet::Box { lower, upper } => {
                if v < lower[j] {
                    lower[j]
                } else if v > upper[j] {
                    upper[j]
                } else {
                    v
                }
            }
        }
    }

    /// Exact membership test (clamp semantics, no tolerance).
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(j, &v)| self.clamp_component(j, v) == v)
    }

    pub fn is_dim_compatible(&self, n: usize) -> bool {
        match self {
            ConstraintSet::Box { lower, .. } => lower.len() == n,
            _ => true,
        }
    }
}

/// Euclidean projection onto a constraint set (elementwise clamp).
pub fn project(c: &ConstraintSet, x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(j, &v)| c.clamp_component(j, v))
        .collect()
}

/// Result of a proximal step: the point and the implicit (sub)gradient
/// (x - point) / t, which belongs to the subdifferential at the point.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub point: Vec<f64>,
    pub implicit_subgradient: Vec<f64>,
}

impl ProxResult {
    fn new(input: &[f64], point: Vec<f64>, t: f64) -> Self {
        let implicit_subgradient = input
            .iter()
            .zip(&point)
            .map(|(&xi, &pi)| (xi - pi) / t)
            .collect();
        Self {
            point,
            implicit_subgradient,
        }
    }

    fn identity(input: &[f64]) -> Self {
        Self {
            point: input.to_vec(),
            implicit_subgradient: vec![0.0; input.len()],
        }
    }
}

/// Row-operator kernels shared by the prox catalog, the generic R-IPG
/// components and the fused sweeps. All take the row as parallel
/// (indices, values) slices sorted by index.
pub(crate) mod kernel {
    #[inline]
    pub fn residual(indices: &[usize], values: &[f64], b: f64, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&j, &v) in indices.iter().zip(values) {
            acc += v * x[j];
        }
        acc - b
    }

    #[inline]
    pub fn norm_sq(values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &v in values {
            acc += v * v;
        }
        acc
    }

    /// out = x - a * scale on the row support.
    #[inline]
    pub fn sub_scaled(indices: &[usize], values: &[f64], scale: f64, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for (&j, &v) in indices.iter().zip(values) {
            out[j] -= v * scale;
        }
        out
    }

    /// Hyperplane projection step; identity on zero rows and zero residuals.
    pub fn indicator_point(indices: &[usize], values: &[f64], b: f64, x: &[f64]) -> Vec<f64> {
        let nsq = norm_sq(values);
        let res = residual(indices, values, b, x);
        if nsq == 0.0 || res == 0.0 {
            return x.to_vec();
        }
        sub_scaled(indices, values, res / nsq, x)
    }

    /// Damped row step x - a res / (|a|^2 + 1/t).
    pub fn quadratic_point(
        indices: &[usize],
        values: &[f64],
        b: f64,
        t: f64,
        x: &[f64],
    ) -> Vec<f64> {
        let nsq = norm_sq(values);
        let res = residual(indices, values, b, x);
        if nsq == 0.0 || res == 0.0 {
            return x.to_vec();
        }
        sub_scaled(indices, values, res / (nsq + 1.0 / t), x)
    }

    /// Prox of the hyperplane distance: move toward the projection by at
    /// most t. The printed case expressions use a strict test, so ties go
    /// to the bounded-step branch.
    pub fn dist_point(indices: &[usize], values: &[f64], b: f64, t: f64, x: &[f64]) -> Vec<f64> {
        let nsq = norm_sq(values);
        let res = residual(indices, values, b, x);
        if nsq == 0.0 || res == 0.0 {
            return x.to_vec();
        }
        let norm = nsq.sqrt();
        if res.abs() < t * norm {
            sub_scaled(indices, values, res / nsq, x)
        } else {
            sub_scaled(indices, values, t * res.signum() / norm, x)
        }
    }

    /// Prox of |a'x - b|: full projection for small residuals, otherwise a
    /// bounded step of length t |a|.
    pub fn abs_point(indices: &[usize], values: &[f64], b: f64, t: f64, x: &[f64]) -> Vec<f64> {
        let nsq = norm_sq(values);
        let res = residual(indices, values, b, x);
        if nsq == 0.0 || res == 0.0 {
            return x.to_vec();
        }
        if res.abs() < t * nsq {
            sub_scaled(indices, values, res / nsq, x)
        } else {
            sub_scaled(indices, values, t * res.signum(), x)
        }
    }

    /// Prox of the Huber penalty of the row residual. Reduces bitwise to
    /// `abs_point` when mu = 0.
    pub fn huber_point(
        indices: &[usize],
        values: &[f64],
        b: f64,
        mu: f64,
        t: f64,
        x: &[f64],
    ) -> Vec<f64> {
        let nsq = norm_sq(values);
        let res = residual(indices, values, b, x);
        if nsq == 0.0 || res == 0.0 {
            return x.to_vec();
        }
        if res.abs() < mu + t * nsq {
            sub_scaled(indices, values, res / (mu / t + nsq), x)
        } else {
            sub_scaled(indices, values, t * res.signum(), x)
        }
    }

    /// Normalized-residual gradient a (a'x - b) / |a|^2 as a scatter scale;
    /// returns None on zero rows or zero residuals.
    pub fn normalized_grad_scale(
        indices: &[usize],
        values: &[f64],
        b: f64,
        x: &[f64],
    ) -> Option<f64> {
        let nsq = norm_sq(values);
        let res = residual(indices, values, b, x);
        if nsq == 0.0 || res == 0.0 {
            return None;
        }
        Some(res / nsq)
    }
}

fn dense_indices(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn check_row_dims(a: &[f64], x: &[f64], what: &'static str) -> Result<()> {
    if a.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: x.len(),
            got: a.len(),
        });
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(invalid(format!("prox parameter t must be positive, got {t}")));
    }
    Ok(())
}

/// Euclidean projection of `x` onto the hyperplane a'u = b.
///
/// Errors on zero rows; callers must route those to the identity update.
pub fn project_hyperplane(a: &[f64], b: f64, x: &[f64]) -> Result<Vec<f64>> {
    check_row_dims(a, x, "project_hyperplane")?;
    let idx = dense_indices(a.len());
    let nsq = kernel::norm_sq(a);
    if nsq == 0.0 {
        return Err(Error::ZeroRow);
    }
    let res = kernel::residual(&idx, a, b, x);
    Ok(kernel::sub_scaled(&idx, a, res / nsq, x))
}

/// Prox of t/2 (a'u - b)^2: the damped hyperplane step
/// x - a (a'x - b) / (|a|^2 + 1/t).
pub fn prox_quadratic_residual(a: &[f64], b: f64, t: f64, x: &[f64]) -> Result<ProxResult> {
    check_row_dims(a, x, "prox_quadratic_residual")?;
    check_t(t)?;
    let idx = dense_indices(a.len());
    let point = kernel::quadratic_point(&idx, a, b, t, x);
    Ok(ProxResult::new(x, point, t))
}

/// Prox of t dist(u, H): moves toward the hyperplane projection by step
/// length min(t, dist(x, H)).
pub fn prox_dist(a: &[f64], b: f64, t: f64, x: &[f64]) -> Result<ProxResult> {
    check_row_dims(a, x, "prox_dist")?;
    check_t(t)?;
    let idx = dense_indices(a.len());
    let point = kernel::dist_point(&idx, a, b, t, x);
    Ok(ProxResult::new(x, point, t))
}

/// The hyperplane-distance prox in its theta form,
/// theta = min(1, t |a| / |a'x - b|).
///
/// Note that t |a| / |a'x - b| = t / dist(x, H), so this operator and
/// [`prox_dist`] compute the same map; both are kept because they are
/// reached through different method configurations.
pub fn prox_dist_sq(a: &[f64], b: f64, t: f64, x: &[f64]) -> Result<ProxResult> {
    check_row_dims(a, x, "prox_dist_sq")?;
    check_t(t)?;
    let idx = dense_indices(a.len());
    let point = kernel::dist_point(&idx, a, b, t, x);
    Ok(ProxResult::new(x, point, t))
}

/// Prox of t |a'u - b|: a relaxed projection when the residual is small,
/// otherwise a bounded step x - t a sgn(a'x - b).
pub fn prox_abs_residual(a: &[f64], b: f64, t: f64, x: &[f64]) -> Result<ProxResult> {
    check_row_dims(a, x, "prox_abs_residual")?;
    check_t(t)?;
    let idx = dense_indices(a.len());
    let point = kernel::abs_point(&idx, a, b, t, x);
    Ok(ProxResult::new(x, point, t))
}

/// Prox of t phi_mu(a'u - b) with the Huber penalty phi_mu. Equals
/// [`prox_abs_residual`] when mu = 0.
pub fn prox_huber_residual(a: &[f64], b: f64, mu: f64, t: f64, x: &[f64]) -> Result<ProxResult> {
    check_row_dims(a, x, "prox_huber_residual")?;
    check_t(t)?;
    if mu < 0.0 {
        return Err(invalid(format!("huber parameter mu must be >= 0, got {mu}")));
    }
    let idx = dense_indices(a.len());
    let point = kernel::huber_point(&idx, a, b, mu, t, x);
    Ok(ProxResult::new(x, point, t))
}

/// Prox point of t/2 |A_i u - b_i|^2 computed through the m_i x m_i system
/// (A_i A_i' + t^-1 I) y = A_i x - b_i, so damped block Kaczmarz and this
/// prox share one code path. Shift = 1/t; an exact zero shift gives the
/// undamped Gram system used by block Kaczmarz.
pub(crate) fn block_ls_point(
    block: &BlockView<'_>,
    bi: &[f64],
    shift: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    if bi.len() != block.nrows() {
        return Err(Error::DimensionMismatch {
            context: "block rhs length",
            expected: block.nrows(),
            got: bi.len(),
        });
    }
    if x.len() != block.ncols() {
        return Err(Error::DimensionMismatch {
            context: "block prox input",
            expected: block.ncols(),
            got: x.len(),
        });
    }
    if block.nrows() > BLOCK_ROW_CAP {
        return Err(Error::BlockTooLarge {
            rows: block.nrows(),
            cap: BLOCK_ROW_CAP,
        });
    }
    let r = block.residual(x, bi);
    let y = match block_gram(block, shift) {
        Gram::Tridiag { diag, off } => solve_tridiag_spd(&diag, &off, &r)?,
        Gram::Dense(g) => solve_dense_spd(&g, &r)?,
    };
    let mut out = x.to_vec();
    for p in 0..block.nrows() {
        let yp = y[p];
        let row = block.row(p);
        for (&j, &v) in row.indices.iter().zip(row.values) {
            out[j] -= v * yp;
        }
    }
    Ok(out)
}

/// Prox of t/2 |A_i u - b_i|^2 for a block of rows, using the tridiagonal
/// Gram fast path when the block sparsity permits it.
pub fn prox_block_ls(block: BlockView<'_>, bi: &[f64], t: f64, x: &[f64]) -> Result<ProxResult> {
    check_t(t)?;
    let point = block_ls_point(&block, bi, 1.0 / t, x)?;
    Ok(ProxResult::new(x, point, t))
}

/// Outcome of the iterative TV-denoising prox.
#[derive(Debug, Clone)]
pub struct TvProx {
    pub prox: ProxResult,
    /// False when the iteration cap was reached before the tolerance.
    pub converged: bool,
    pub iterations: usize,
}

/// Prox of lambda_t |D u|_{1,2}: the TV denoising problem
/// argmin_u lambda_t |Du|_{1,2} + 1/2 |u - x|^2, solved on the dual by an
/// accelerated projected gradient iteration with step 1/|D|^2 (power
/// iteration estimate; a 2% pad covers the estimate's downward bias).
///
/// Terminates when the relative dual gradient-map norm drops below
/// `inner_tol` or after `inner_max_iter` iterations, in which case the
/// result is flagged non-converged.
pub fn prox_tv(
    op: &DiffOperator,
    lambda_t: f64,
    x: &[f64],
    inner_tol: f64,
    inner_max_iter: usize,
) -> Result<TvProx> {
    if x.len() != op.pixel_count() {
        return Err(Error::DimensionMismatch {
            context: "prox_tv input",
            expected: op.pixel_count(),
            got: x.len(),
        });
    }
    if !(lambda_t >= 0.0) {
        return Err(invalid(format!(
            "prox_tv weight must be nonnegative, got {lambda_t}"
        )));
    }
    let d = op.matrix();
    if lambda_t == 0.0 || d.nnz() == 0 {
        return Ok(TvProx {
            prox: ProxResult::identity(x),
            converged: true,
            iterations: 0,
        });
    }
    let sigma = op.opnorm_estimate();
    let step = 1.0 / (1.02 * sigma * sigma);
    let x_scale = {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        n.max(1.0)
    };

    let dual_dim = d.nrows();
    let mut q = vec![0.0; dual_dim];
    let mut q_extrap = q.clone();
    let mut momentum = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=inner_max_iter {
        iterations = iter;
        // gradient of the dual objective 1/2 |D'q - x|^2 at the
        // extrapolated point, negated: D (x - D' q_extrap)
        let primal = {
            let dtq = d.matvec_t(&q_extrap).expect("dual dims fixed");
            x.iter().zip(&dtq).map(|(&xi, &di)| xi - di).collect::<Vec<f64>>()
        };
        let ascent = d.matvec(&primal).expect("dual dims fixed");
        let mut q_next = vec![0.0; dual_dim];
        for i in 0..dual_dim {
            q_next[i] = q_extrap[i] + step * ascent[i];
        }
        project_group_balls(&mut q_next, op.directions(), lambda_t);

        let gm = q_next
            .iter()
            .zip(&q_extrap)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / (step * x_scale);

        let momentum_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let mix = (momentum - 1.0) / momentum_next;
        for i in 0..dual_dim {
            q_extrap[i] = q_next[i] + mix * (q_next[i] - q[i]);
        }
        momentum = momentum_next;
        q = q_next;

        if gm <= inner_tol {
            converged = true;
            break;
        }
    }

    let dtq = d.matvec_t(&q).expect("dual dims fixed");
    let point: Vec<f64> = x.iter().zip(&dtq).map(|(&xi, &di)| xi - di).collect();
    Ok(TvProx {
        prox: ProxResult::new(x, point, lambda_t),
        converged,
        iterations,
    })
}

/// Projects each consecutive group of `d` dual components onto the
/// Euclidean ball of the given radius.
fn project_group_balls(q: &mut [f64], d: usize, radius: f64) {
    for chunk in q.chunks_mut(d) {
        let norm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            let scale = radius / norm;
            for v in chunk {
                *v *= scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn project_all_space_is_identity() {
        let x = vec![-1.0, 2.0, f64::NAN];
        let p = project(&ConstraintSet::AllSpace, &x);
        assert_eq!(p[0], -1.0);
        assert_eq!(p[1], 2.0);
        assert!(p[2].is_nan());
    }

    #[test]
    fn project_clamps() {
        assert_eq!(project(&ConstraintSet::NonNeg, &[-1.0, 2.0]), vec![0.0, 2.0]);
        let c = ConstraintSet::uniform_box(0.0, 1.0, 3).unwrap();
        assert_eq!(project(&c, &[-0.5, 0.5, 2.0]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn project_idempotent_exactly() {
        let c = ConstraintSet::uniform_box(-0.3, 0.7, 4).unwrap();
        let x = vec![-1.5, 0.1, 0.9, 0.7];
        let once = project(&c, &x);
        let twice = project(&c, &once);
        assert_eq!(once, twice);
    }

    #[test]
    fn box_requires_ordered_bounds() {
        assert!(ConstraintSet::boxed(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn hyperplane_examples() {
        assert_eq!(
            project_hyperplane(&[1.0, 0.0], 2.0, &[0.0, 0.0]).unwrap(),
            vec![2.0, 0.0]
        );
        assert_eq!(
            project_hyperplane(&[1.0, 1.0], 0.0, &[1.0, 1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_close(
            &project_hyperplane(&[3.0, 4.0], 5.0, &[0.0, 0.0]).unwrap(),
            &[0.6, 0.8],
            1e-15,
        );
        assert!(matches!(
            project_hyperplane(&[0.0, 0.0], 1.0, &[1.0, 1.0]),
            Err(Error::ZeroRow)
        ));
    }

    #[test]
    fn quadratic_residual_examples() {
        // zero residual -> identity
        let r = prox_quadratic_residual(&[1.0, 1.0], 2.0, 0.7, &[1.0, 1.0]).unwrap();
        assert_eq!(r.point, vec![1.0, 1.0]);
        assert_eq!(r.implicit_subgradient, vec![0.0, 0.0]);
        // a=(1,0), b=0, x=(1,0), t=1 -> (0.5, 0)
        let r = prox_quadratic_residual(&[1.0, 0.0], 0.0, 1.0, &[1.0, 0.0]).unwrap();
        assert_close(&r.point, &[0.5, 0.0], 1e-15);
        // large t approaches the hyperplane projection
        let r = prox_quadratic_residual(&[1.0, 0.0], 0.0, 1e12, &[1.0, 0.0]).unwrap();
        assert_close(&r.point, &[0.0, 0.0], 1e-6);
        assert!(prox_quadratic_residual(&[1.0], 0.0, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn dist_examples() {
        let r = prox_dist(&[1.0, 0.0], 3.0, 1.0, &[3.0, 5.0]).unwrap();
        assert_eq!(r.point, vec![3.0, 5.0]);
        let r = prox_dist(&[1.0, 0.0], 0.0, 1.0, &[3.0, 0.0]).unwrap();
        assert_close(&r.point, &[2.0, 0.0], 1e-15);
        // t >= dist gives the exact projection
        let r = prox_dist(&[1.0, 0.0], 0.0, 5.0, &[3.0, 0.0]).unwrap();
        assert_close(&r.point, &[0.0, 0.0], 1e-15);
    }

    #[test]
    fn dist_sq_matches_theta_form() {
        // theta = min(1, t|a|/|res|) = 0.5 here
        let r = prox_dist_sq(&[0.0, 1.0], 0.0, 1.0, &[0.0, 2.0]).unwrap();
        assert_close(&r.point, &[0.0, 1.0], 1e-15);
        // saturation at theta = 1
        let r = prox_dist_sq(&[0.0, 1.0], 0.0, 100.0, &[0.0, 2.0]).unwrap();
        assert_close(&r.point, &[0.0, 0.0], 1e-15);
        // the two distance proxes are the same map
        let a = [0.7, -0.3, 1.1];
        let x = [0.2, 1.4, -0.9];
        let p1 = prox_dist(&a, 0.4, 0.23, &x).unwrap();
        let p2 = prox_dist_sq(&a, 0.4, 0.23, &x).unwrap();
        assert_eq!(p1.point, p2.point);
    }

    #[test]
    fn abs_residual_examples() {
        let r = prox_abs_residual(&[1.0, 1.0], 2.0, 0.5, &[1.0, 1.0]).unwrap();
        assert_eq!(r.point, vec![1.0, 1.0]);
        // theta* = min(1, t|a|^2/|res|) = min(1, 12.5/25) = 0.5
        let r = prox_abs_residual(&[3.0, 4.0], 0.0, 0.5, &[3.0, 4.0]).unwrap();
        assert_close(&r.point, &[1.5, 2.0], 1e-12);
        // small residual -> exact hyperplane projection
        let r = prox_abs_residual(&[1.0, 0.0], 0.0, 10.0, &[2.0, 1.0]).unwrap();
        assert_close(&r.point, &[0.0, 1.0], 1e-15);
    }

    #[test]
    fn huber_examples() {
        // mu = 0 is bitwise the abs-residual prox
        let a = [0.3, -1.2, 0.8];
        let x = [1.0, 0.5, -0.25];
        let h = prox_huber_residual(&a, 0.1, 0.0, 0.7, &x).unwrap();
        let l = prox_abs_residual(&a, 0.1, 0.7, &x).unwrap();
        assert_eq!(h.point, l.point);
        // zero residual -> identity
        let h = prox_huber_residual(&[1.0, 0.0], 2.0, 1.0, 1.0, &[2.0, 9.0]).unwrap();
        assert_eq!(h.point, vec![2.0, 9.0]);
        // branch test: |2| < mu + t|a|^2 = 2 is false -> bounded step
        let h = prox_huber_residual(&[1.0, 0.0], 0.0, 1.0, 1.0, &[2.0, 0.0]).unwrap();
        assert_close(&h.point, &[1.0, 0.0], 1e-15);
        assert!(prox_huber_residual(&[1.0], 0.0, -0.1, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn block_ls_examples() {
        use crate::sparse::SparseMatrix;
        // Ai = I (2x2), bi = (1,1), x = 0, t = 1 -> (0.5, 0.5)
        let a = SparseMatrix::identity(2);
        let r = prox_block_ls(a.block(0..2), &[1.0, 1.0], 1.0, &[0.0, 0.0]).unwrap();
        assert_close(&r.point, &[0.5, 0.5], 1e-15);
        // zero block residual -> identity
        let r = prox_block_ls(a.block(0..2), &[2.0, 3.0], 1.0, &[2.0, 3.0]).unwrap();
        assert_close(&r.point, &[2.0, 3.0], 1e-15);
    }

    #[test]
    fn implicit_subgradient_matches_definition() {
        let x = [1.0, -2.0, 0.5];
        let r = prox_quadratic_residual(&[1.0, 2.0, -1.0], 0.3, 0.9, &x).unwrap();
        for j in 0..3 {
            let expect = (x[j] - r.point[j]) / 0.9;
            assert!((r.implicit_subgradient[j] - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn tv_prox_trivial_cases() {
        use crate::tv::build_diff_operator;
        let op = build_diff_operator(2, 2);
        let x = vec![0.3, 0.3, 0.3, 0.3];
        // lambda_t = 0 -> identity
        let r = prox_tv(&op, 0.0, &x, 1e-8, 100).unwrap();
        assert_eq!(r.prox.point, x);
        assert!(r.converged);
        // constant image is a fixed point for any lambda_t
        let r = prox_tv(&op, 2.5, &x, 1e-10, 200).unwrap();
        assert_close(&r.prox.point, &x, 1e-12);
        assert!(r.converged);
    }
}
