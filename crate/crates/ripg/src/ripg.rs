//! Generic relaxed incremental proximal gradient drivers.
//!
//! A problem is a list of components f_i = g_i + h_i; the g part is handled
//! by its prox, the h part by a (sub)gradient step. One R-IPG1 step is
//!
//! ```text
//! w = prox_{t g_i}(x)
//! z = w - t grad_h(w)
//! x_next = proj_C(rho z + (1 - rho) x)
//! ```
//!
//! and R-IPG2 swaps the first two stages. Both reduce to the same sequence
//! when either part vanishes. The relaxation blend short-circuits
//! componentwise when z == x so that zero rows and zero residuals are exact
//! fixed points of the feasible iteration.

use std::ops::Range;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::prox::{kernel, prox_tv, ConstraintSet};
use crate::sparse::{BlockPartition, RowView, SparseMatrix};
use crate::tv::{tv_seminorm, tv_subgradient, DiffOperator, SmoothingMode};
use crate::{invalid, Error, Result};

/// Default inner tolerance of the TV denoising prox inside a driver run.
pub const DEFAULT_TV_INNER_TOL: f64 = 1e-6;
/// Default inner iteration cap of the TV denoising prox.
pub const DEFAULT_TV_INNER_MAX_ITER: usize = 500;

/// Owned sparse row: parallel index/value arrays sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVec {
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "sparse vector arrays",
                expected: indices.len(),
                got: values.len(),
            });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices.iter().any(|&j| j >= dim) {
            return Err(invalid("sparse vector indices must be sorted and in range"));
        }
        Ok(Self {
            dim,
            indices,
            values,
        })
    }

    /// Dense slice as a full-support sparse vector (zeros kept; adding an
    /// exact zero never changes a sum, so results match dense arithmetic).
    pub fn from_dense(a: &[f64]) -> Self {
        Self {
            dim: a.len(),
            indices: (0..a.len()).collect(),
            values: a.to_vec(),
        }
    }

    /// Copies one CSR row.
    pub fn from_row(row: RowView<'_>, dim: usize) -> Self {
        Self {
            dim,
            indices: row.indices.to_vec(),
            values: row.values.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Prox-capable part of a component.
#[derive(Debug, Clone)]
pub enum GFun {
    Zero,
    /// Indicator of the hyperplane a'x = b; prox is the projection.
    IndicatorHyperplane { a: SparseVec, b: f64 },
    /// 1/2 (a'x - b)^2; prox is the damped row step.
    QuadraticResidual { a: SparseVec, b: f64 },
    /// dist(x, H); prox moves toward the projection by at most t.
    Dist { a: SparseVec, b: f64 },
    /// The distance prox in its theta form (same map as `Dist`).
    DistSq { a: SparseVec, b: f64 },
    /// |a'x - b|.
    AbsResidual { a: SparseVec, b: f64 },
    /// Huber penalty of the row residual.
    HuberResidual { a: SparseVec, b: f64, mu: f64 },
    /// 1/2 |A_i x - b_i|^2 over a contiguous block of rows of a shared
    /// matrix; prox solves the damped Gram system.
    BlockLs {
        matrix: Arc<SparseMatrix>,
        b: Arc<Vec<f64>>,
        rows: Range<usize>,
    },
    /// weight * |D x|_{1,2}; prox is iterative TV denoising.
    ScaledTv {
        op: Arc<DiffOperator>,
        weight: f64,
        inner_tol: f64,
        inner_max_iter: usize,
    },
}

/// Subgradient-capable part of a component.
#[derive(Debug, Clone)]
pub enum HFun {
    Zero,
    /// 1/2 (a'x - b)^2 / |a|^2 (the ART gradient form).
    QuadraticResidualNormalized { a: SparseVec, b: f64 },
    /// weight * psi(x) stepped with the tau-smoothed TV subgradient
    /// (floor mode).
    ScaledTvSubgrad {
        op: Arc<DiffOperator>,
        weight: f64,
        tau: f64,
    },
}

/// One summand f_i = g_i + h_i of the objective.
#[derive(Debug, Clone)]
pub struct ComponentSpec {
    pub g: GFun,
    pub h: HFun,
}

impl ComponentSpec {
    pub fn new(g: GFun, h: HFun) -> Self {
        Self { g, h }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let check_dim = |dim: usize, what: &'static str| -> Result<()> {
            if dim != n {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: n,
                    got: dim,
                });
            }
            Ok(())
        };
        match &self.g {
            GFun::Zero => {}
            GFun::IndicatorHyperplane { a, .. }
            | GFun::QuadraticResidual { a, .. }
            | GFun::Dist { a, .. }
            | GFun::DistSq { a, .. }
            | GFun::AbsResidual { a, .. } => check_dim(a.dim(), "component row")?,
            GFun::HuberResidual { a, mu, .. } => {
                check_dim(a.dim(), "component row")?;
                if *mu < 0.0 {
                    return Err(invalid("huber mu must be >= 0"));
                }
            }
            GFun::BlockLs { matrix, b, rows } => {
                check_dim(matrix.ncols(), "block component")?;
                if rows.end > matrix.nrows() || rows.start >= rows.end {
                    return Err(invalid("block row range out of bounds"));
                }
                if b.len() != matrix.nrows() {
                    return Err(Error::DimensionMismatch {
                        context: "block rhs",
                        expected: matrix.nrows(),
                        got: b.len(),
                    });
                }
            }
            GFun::ScaledTv { op, weight, .. } => {
                check_dim(op.pixel_count(), "tv component")?;
                if *weight < 0.0 {
                    return Err(invalid("tv weight must be >= 0"));
                }
            }
        }
        match &self.h {
            HFun::Zero => {}
            HFun::QuadraticResidualNormalized { a, .. } => check_dim(a.dim(), "component row")?,
            HFun::ScaledTvSubgrad { op, weight, tau } => {
                check_dim(op.pixel_count(), "tv component")?;
                if *weight < 0.0 {
                    return Err(invalid("tv weight must be >= 0"));
                }
                if !(*tau > 0.0) {
                    return Err(invalid("tv smoothing tau must be positive"));
                }
            }
        }
        Ok(())
    }

    /// prox_{t g}(x).
    pub(crate) fn prox_point(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match &self.g {
            GFun::Zero => x.to_vec(),
            GFun::IndicatorHyperplane { a, b } => {
                kernel::indicator_point(a.indices(), a.values(), *b, x)
            }
            GFun::QuadraticResidual { a, b } => {
                kernel::quadratic_point(a.indices(), a.values(), *b, t, x)
            }
            GFun::Dist { a, b } | GFun::DistSq { a, b } => {
                kernel::dist_point(a.indices(), a.values(), *b, t, x)
            }
            GFun::AbsResidual { a, b } => kernel::abs_point(a.indices(), a.values(), *b, t, x),
            GFun::HuberResidual { a, b, mu } => {
                kernel::huber_point(a.indices(), a.values(), *b, *mu, t, x)
            }
            GFun::BlockLs { matrix, b, rows } => crate::prox::block_ls_point(
                &matrix.block(rows.clone()),
                &b[rows.clone()],
                1.0 / t,
                x,
            )?,
            GFun::ScaledTv {
                op,
                weight,
                inner_tol,
                inner_max_iter,
            } => {
                prox_tv(op, t * weight, x, *inner_tol, *inner_max_iter)?
                    .prox
                    .point
            }
        })
    }

    /// z = w - t grad_h(w).
    pub(crate) fn h_step(&self, t: f64, w: &[f64]) -> Result<Vec<f64>> {
        Ok(match &self.h {
            HFun::Zero => w.to_vec(),
            HFun::QuadraticResidualNormalized { a, b } => {
                match kernel::normalized_grad_scale(a.indices(), a.values(), *b, w) {
                    None => w.to_vec(),
                    Some(s) => {
                        let mut z = w.to_vec();
                        for (&j, &v) in a.indices().iter().zip(a.values()) {
                            z[j] -= t * (v * s);
                        }
                        z
                    }
                }
            }
            HFun::ScaledTvSubgrad { op, weight, tau } => {
                let sg = tv_subgradient(op, w, *tau, SmoothingMode::Floor)?;
                let coef = t * weight;
                w.iter().zip(&sg).map(|(&wj, &gj)| wj - coef * gj).collect()
            }
        })
    }

    pub fn g_value(&self, x: &[f64]) -> f64 {
        match &self.g {
            GFun::Zero => 0.0,
            GFun::IndicatorHyperplane { a, b } => {
                let res = kernel::residual(a.indices(), a.values(), *b, x);
                if res == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            GFun::QuadraticResidual { a, b } => {
                let res = kernel::residual(a.indices(), a.values(), *b, x);
                0.5 * res * res
            }
            GFun::Dist { a, b } | GFun::DistSq { a, b } => {
                let nsq = kernel::norm_sq(a.values());
                if nsq == 0.0 {
                    0.0
                } else {
                    kernel::residual(a.indices(), a.values(), *b, x).abs() / nsq.sqrt()
                }
            }
            GFun::AbsResidual { a, b } => kernel::residual(a.indices(), a.values(), *b, x).abs(),
            GFun::HuberResidual { a, b, mu } => {
                let res = kernel::residual(a.indices(), a.values(), *b, x);
                if res.abs() < *mu {
                    res * res / (2.0 * mu)
                } else {
                    res.abs() - mu / 2.0
                }
            }
            GFun::BlockLs { matrix, b, rows } => {
                let block = matrix.block(rows.clone());
                let r = block.residual(x, &b[rows.clone()]);
                0.5 * r.iter().map(|v| v * v).sum::<f64>()
            }
            GFun::ScaledTv { op, weight, .. } => weight * tv_seminorm(op, x),
        }
    }

    pub fn h_value(&self, x: &[f64]) -> f64 {
        match &self.h {
            HFun::Zero => 0.0,
            HFun::QuadraticResidualNormalized { a, b } => {
                let nsq = kernel::norm_sq(a.values());
                if nsq == 0.0 {
                    0.0
                } else {
                    let res = kernel::residual(a.indices(), a.values(), *b, x);
                    0.5 * res * res / nsq
                }
            }
            HFun::ScaledTvSubgrad { op, weight, .. } => weight * tv_seminorm(op, x),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.g_value(x) + self.h_value(x)
    }
}

/// f(x) = sum of all component values.
pub fn objective_value(components: &[ComponentSpec], x: &[f64]) -> f64 {
    components.iter().map(|c| c.value(x)).sum()
}

/// |x - reference| / |reference| (plain |x - reference| when the reference
/// is the zero vector).
pub fn relative_error(x: &[f64], reference: &[f64]) -> f64 {
    let num = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Index control rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Control {
    Cyclic,
    Random { seed: u64 },
    Shuffled { seed: u64 },
}

/// Step-size schedule; both rules are constant within a cycle.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// t_k = t0 / ceil((k + 1) / m): the per-cycle harmonic rule.
    Diminishing(f64),
}

impl Schedule {
    fn t0(&self) -> f64 {
        match self {
            Schedule::Constant(t) | Schedule::Diminishing(t) => *t,
        }
    }
}

/// t_k for 0-based step k with m components per cycle.
pub fn step_size(schedule: &Schedule, k: usize, m: usize) -> f64 {
    match schedule {
        Schedule::Constant(t) => *t,
        Schedule::Diminishing(t0) => t0 / (k / m + 1) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Ripg1,
    Ripg2,
}

/// Stateful index selector implementing the control rule.
#[derive(Debug, Clone)]
pub struct ControlState {
    m: usize,
    rule: Control,
    rng: Option<ChaCha8Rng>,
    perm: Vec<usize>,
}

impl ControlState {
    pub fn new(rule: &Control, m: usize) -> Self {
        assert!(m >= 1, "control requires at least one component");
        let rng = match rule {
            Control::Cyclic => None,
            Control::Random { seed } | Control::Shuffled { seed } => {
                Some(ChaCha8Rng::seed_from_u64(*seed))
            }
        };
        Self {
            m,
            rule: rule.clone(),
            rng,
            perm: Vec::new(),
        }
    }

    /// Component index for 0-based step k. Shuffled control draws a fresh
    /// permutation at each cycle start and keeps it for the whole cycle.
    pub fn next_index(&mut self, k: usize) -> usize {
        match self.rule {
            Control::Cyclic => k % self.m,
            Control::Random { .. } => {
                let rng = self.rng.as_mut().expect("seeded");
                rng.random_range(0..self.m)
            }
            Control::Shuffled { .. } => {
                if k % self.m == 0 || self.perm.is_empty() {
                    let rng = self.rng.as_mut().expect("seeded");
                    self.perm = (0..self.m).collect();
                    self.perm.shuffle(rng);
                }
                self.perm[k % self.m]
            }
        }
    }
}

/// Driver configuration.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub rho: f64,
    pub schedule: Schedule,
    pub control: Control,
    pub constraint: ConstraintSet,
    pub cycles: usize,
    pub variant: Variant,
    /// Record an iterate snapshot every this many cycles.
    pub snapshot_stride: Option<usize>,
}

impl SolveConfig {
    pub fn new(
        rho: f64,
        schedule: Schedule,
        control: Control,
        constraint: ConstraintSet,
        cycles: usize,
        variant: Variant,
    ) -> Result<Self> {
        let cfg = Self {
            rho,
            schedule,
            control,
            constraint,
            cycles,
            variant,
            snapshot_stride: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = Some(stride);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 2.0) {
            return Err(invalid(format!(
                "relaxation rho must lie in (0, 2), got {}",
                self.rho
            )));
        }
        if !(self.schedule.t0() > 0.0) {
            return Err(invalid("step size t0 must be positive"));
        }
        if self.cycles < 1 {
            return Err(invalid("cycle budget must be at least 1"));
        }
        Ok(())
    }
}

/// Per-cycle run record.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub initial_relative_error: Option<f64>,
    pub initial_objective: f64,
    /// One entry per completed cycle (empty without a reference).
    pub relative_errors: Vec<f64>,
    pub objectives: Vec<f64>,
    pub step_sizes: Vec<f64>,
    /// Per-cycle maxima of the implicit g-subgradient norms.
    pub max_g_subgrad_norms: Vec<f64>,
    /// Per-cycle maxima of the h-subgradient norms.
    pub max_h_subgrad_norms: Vec<f64>,
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub final_x: Vec<f64>,
}

impl IterationTrace {
    pub(crate) fn empty() -> Self {
        Self {
            initial_relative_error: None,
            initial_objective: 0.0,
            relative_errors: Vec::new(),
            objectives: Vec::new(),
            step_sizes: Vec::new(),
            max_g_subgrad_norms: Vec::new(),
            max_h_subgrad_norms: Vec::new(),
            snapshots: Vec::new(),
            final_x: Vec::new(),
        }
    }
}

/// Relaxation blend followed by the projection,
/// proj_C(rho z + (1 - rho) x) componentwise. Components where z == x pass
/// through the blend untouched so fixed points stay exact.
pub(crate) fn relax_project(c: &ConstraintSet, rho: f64, x: &[f64], z: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(j, &xj)| {
            let zj = z[j];
            let v = if zj == xj {
                xj
            } else {
                rho * zj + (1.0 - rho) * xj
            };
            c.clamp_component(j, v)
        })
        .collect()
}

/// One R-IPG1 step; returns (x_next, w, z) for tracing and bound checks.
pub fn ripg1_step(
    x: &[f64],
    comp: &ComponentSpec,
    t: f64,
    rho: f64,
    c: &ConstraintSet,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if !(t > 0.0) {
        return Err(invalid("step size t must be positive"));
    }
    let w = comp.prox_point(t, x)?;
    let z = comp.h_step(t, &w)?;
    let x_next = relax_project(c, rho, x, &z);
    Ok((x_next, w, z))
}

/// One R-IPG2 step (subgradient stage first); returns (x_next, w, z).
pub fn ripg2_step(
    x: &[f64],
    comp: &ComponentSpec,
    t: f64,
    rho: f64,
    c: &ConstraintSet,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if !(t > 0.0) {
        return Err(invalid("step size t must be positive"));
    }
    let w = comp.h_step(t, x)?;
    let z = comp.prox_point(t, &w)?;
    let x_next = relax_project(c, rho, x, &z);
    Ok((x_next, w, z))
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn scaled_dist(a: &[f64], b: &[f64], t: f64) -> f64 {
    let d = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    d / t
}

/// Runs `cfg.cycles` full cycles of the chosen variant over the component
/// list, recording one trace entry per completed cycle. Aborts with a
/// diagnostic naming the step index when a non-finite iterate appears.
pub fn run(
    components: &[ComponentSpec],
    x0: &[f64],
    cfg: &SolveConfig,
    reference: Option<&[f64]>,
) -> Result<IterationTrace> {
    cfg.validate()?;
    if components.is_empty() {
        return Err(invalid("component list must be nonempty"));
    }
    let n = x0.len();
    for comp in components {
        comp.validate(n)?;
    }
    if !cfg.constraint.is_dim_compatible(n) {
        return Err(Error::DimensionMismatch {
            context: "constraint set",
            expected: n,
            got: 0,
        });
    }
    if !all_finite(x0) {
        return Err(invalid("x0 must be finite"));
    }
    if let Some(r) = reference {
        if r.len() != n {
            return Err(Error::DimensionMismatch {
                context: "reference vector",
                expected: n,
                got: r.len(),
            });
        }
    }

    let m = components.len();
    let mut control = ControlState::new(&cfg.control, m);
    let mut x = x0.to_vec();

    let mut trace = IterationTrace::empty();
    trace.initial_objective = objective_value(components, &x);
    trace.initial_relative_error = reference.map(|r| relative_error(&x, r));

    let mut cycle_t = step_size(&cfg.schedule, 0, m);
    let mut max_g = 0.0f64;
    let mut max_h = 0.0f64;

    for k in 0..cfg.cycles * m {
        if k % m == 0 {
            cycle_t = step_size(&cfg.schedule, k, m);
            max_g = 0.0;
            max_h = 0.0;
        }
        let t = step_size(&cfg.schedule, k, m);
        let i = control.next_index(k);
        let comp = &components[i];
        let (x_next, w, z) = match cfg.variant {
            Variant::Ripg1 => ripg1_step(&x, comp, t, cfg.rho, &cfg.constraint)?,
            Variant::Ripg2 => ripg2_step(&x, comp, t, cfg.rho, &cfg.constraint)?,
        };
        if !all_finite(&z) || !all_finite(&x_next) {
            return Err(Error::NonFiniteIterate { step: k });
        }
        let first_stage = scaled_dist(&x, &w, t);
        let second_stage = scaled_dist(&w, &z, t);
        let (g_sub, h_sub) = match cfg.variant {
            Variant::Ripg1 => (first_stage, second_stage),
            Variant::Ripg2 => (second_stage, first_stage),
        };
        max_g = max_g.max(g_sub);
        max_h = max_h.max(h_sub);
        x = x_next;

        if k % m == m - 1 {
            let cycle = k / m + 1;
            if let Some(r) = reference {
                trace.relative_errors.push(relative_error(&x, r));
            }
            trace.objectives.push(objective_value(components, &x));
            trace.step_sizes.push(cycle_t);
            trace.max_g_subgrad_norms.push(max_g);
            trace.max_h_subgrad_norms.push(max_h);
            if let Some(stride) = cfg.snapshot_stride {
                if stride > 0 && cycle % stride == 0 {
                    trace.snapshots.push((cycle, x.clone()));
                }
            }
        }
    }
    trace.final_x = x;
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Component-list builders for the standard problem splittings.
// ---------------------------------------------------------------------------

fn check_system(a: &SparseMatrix, b: &[f64]) -> Result<()> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "right-hand side",
            expected: a.nrows(),
            got: b.len(),
        });
    }
    Ok(())
}

fn row_components(
    a: &SparseMatrix,
    b: &[f64],
    make: impl Fn(SparseVec, f64) -> GFun,
) -> Result<Vec<ComponentSpec>> {
    check_system(a, b)?;
    Ok((0..a.nrows())
        .map(|i| {
            ComponentSpec::new(
                make(SparseVec::from_row(a.row(i), a.ncols()), b[i]),
                HFun::Zero,
            )
        })
        .collect())
}

/// One indicator-hyperplane component per row (the projection form of ART).
pub fn indicator_components(a: &SparseMatrix, b: &[f64]) -> Result<Vec<ComponentSpec>> {
    row_components(a, b, |a, b| GFun::IndicatorHyperplane { a, b })
}

/// One quadratic-residual component per row (damped ART).
pub fn quadratic_components(a: &SparseMatrix, b: &[f64]) -> Result<Vec<ComponentSpec>> {
    row_components(a, b, |a, b| GFun::QuadraticResidual { a, b })
}

/// One absolute-residual component per row (least-absolute-value fitting).
pub fn abs_components(a: &SparseMatrix, b: &[f64]) -> Result<Vec<ComponentSpec>> {
    row_components(a, b, |a, b| GFun::AbsResidual { a, b })
}

/// One Huber-residual component per row.
pub fn huber_components(a: &SparseMatrix, b: &[f64], mu: f64) -> Result<Vec<ComponentSpec>> {
    if mu < 0.0 {
        return Err(invalid("huber mu must be >= 0"));
    }
    row_components(a, b, move |a, b| GFun::HuberResidual { a, b, mu })
}

/// One hyperplane-distance component per row.
pub fn dist_components(a: &SparseMatrix, b: &[f64]) -> Result<Vec<ComponentSpec>> {
    row_components(a, b, |a, b| GFun::Dist { a, b })
}

/// The distance components in their theta form.
pub fn dist_sq_components(a: &SparseMatrix, b: &[f64]) -> Result<Vec<ComponentSpec>> {
    row_components(a, b, |a, b| GFun::DistSq { a, b })
}

/// The gradient form of ART: g = 0,
/// h = 1/2 (a'x - b)^2 / |a|^2 per row.
pub fn gradient_art_components(a: &SparseMatrix, b: &[f64]) -> Result<Vec<ComponentSpec>> {
    check_system(a, b)?;
    Ok((0..a.nrows())
        .map(|i| {
            ComponentSpec::new(
                GFun::Zero,
                HFun::QuadraticResidualNormalized {
                    a: SparseVec::from_row(a.row(i), a.ncols()),
                    b: b[i],
                },
            )
        })
        .collect())
}

/// One block least-squares component per partition block.
pub fn block_ls_components(
    a: Arc<SparseMatrix>,
    b: Arc<Vec<f64>>,
    partition: &BlockPartition,
) -> Result<Vec<ComponentSpec>> {
    check_system(&a, &b)?;
    Ok((0..partition.num_blocks())
        .map(|i| {
            ComponentSpec::new(
                GFun::BlockLs {
                    matrix: Arc::clone(&a),
                    b: Arc::clone(&b),
                    rows: partition.block_range(i),
                },
                HFun::Zero,
            )
        })
        .collect())
}

/// The m-component splitting of the TV-regularized problem:
/// g_i = 1/2 (a_i'x - b_i)^2 and h_i = (lambda/m) psi per row.
pub fn quadratic_tv_components(
    a: &SparseMatrix,
    b: &[f64],
    op: Arc<DiffOperator>,
    lambda: f64,
    tau: f64,
) -> Result<Vec<ComponentSpec>> {
    check_system(a, b)?;
    if lambda < 0.0 {
        return Err(invalid("lambda must be >= 0"));
    }
    let weight = lambda / a.nrows() as f64;
    Ok((0..a.nrows())
        .map(|i| {
            ComponentSpec::new(
                GFun::QuadraticResidual {
                    a: SparseVec::from_row(a.row(i), a.ncols()),
                    b: b[i],
                },
                HFun::ScaledTvSubgrad {
                    op: Arc::clone(&op),
                    weight,
                    tau,
                },
            )
        })
        .collect())
}

/// The block splitting of the TV-regularized problem:
/// g_i = 1/2 |A_i x - b_i|^2 and h_i = (lambda/p) psi per block.
pub fn block_tv_components(
    a: Arc<SparseMatrix>,
    b: Arc<Vec<f64>>,
    partition: &BlockPartition,
    op: Arc<DiffOperator>,
    lambda: f64,
    tau: f64,
) -> Result<Vec<ComponentSpec>> {
    check_system(&a, &b)?;
    if lambda < 0.0 {
        return Err(invalid("lambda must be >= 0"));
    }
    let weight = lambda / partition.num_blocks() as f64;
    Ok((0..partition.num_blocks())
        .map(|i| {
            ComponentSpec::new(
                GFun::BlockLs {
                    matrix: Arc::clone(&a),
                    b: Arc::clone(&b),
                    rows: partition.block_range(i),
                },
                HFun::ScaledTvSubgrad {
                    op: Arc::clone(&op),
                    weight,
                    tau,
                },
            )
        })
        .collect())
}

/// A single TV-denoising prox component g = weight * psi (the extra
/// component of the m+s splitting, s = 1).
pub fn tv_prox_component(op: Arc<DiffOperator>, weight: f64) -> Result<ComponentSpec> {
    if weight < 0.0 {
        return Err(invalid("tv weight must be >= 0"));
    }
    Ok(ComponentSpec::new(
        GFun::ScaledTv {
            op,
            weight,
            inner_tol: DEFAULT_TV_INNER_TOL,
            inner_max_iter: DEFAULT_TV_INNER_MAX_ITER,
        },
        HFun::Zero,
    ))
}
