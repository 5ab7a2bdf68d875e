//! Convergence-theory constants and an empirical harness for the per-cycle
//! descent bound.
//!
//! The bound states that after one full cyclic pass of m steps with
//! relaxation rho and step t,
//!
//! ```text
//! |x_{k+m} - y|^2 <= |x_k - y|^2 - 2 rho t (f(x_k) - f(y))
//!                    + beta rho^2 t^2 m^2 c^2
//! ```
//!
//! for every feasible y, where c bounds the subgradient norms and
//! function-difference ratios along the cycle. The harness replays one
//! recorded cycle, extracts the smallest empirical c the assumptions allow,
//! assembles the right-hand side and reports whether the bound holds.
//!
//! The alpha constant uses 1/(2 - rho) up to rho = 3/2 and 4(rho - 1)
//! above (the positive upper branch from the bound's derivation; the two
//! branches agree at rho = 3/2 where both equal 2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::prox::ConstraintSet;
use crate::ripg::{
    objective_value, quadratic_components, ripg1_step, ripg2_step, ComponentSpec, HFun,
    SparseVec, Variant,
};
use crate::sparse::SparseMatrix;
use crate::{invalid, Result};

/// Distance floor used in the empirical function-difference ratios.
const DIST_FLOOR: f64 = 1e-12;

/// The relaxation constant alpha(rho) on (0, 2).
pub fn alpha(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 2.0) {
        return Err(invalid(format!("alpha requires rho in (0, 2), got {rho}")));
    }
    Ok(if rho <= 1.5 {
        1.0 / (2.0 - rho)
    } else {
        4.0 * (rho - 1.0)
    })
}

/// The per-cycle bound constant beta(rho, m) of each variant.
pub fn beta(rho: f64, m: usize, variant: Variant) -> Result<f64> {
    if m < 1 {
        return Err(invalid("beta requires m >= 1"));
    }
    let a = alpha(rho)?;
    let m = m as f64;
    Ok(match variant {
        Variant::Ripg1 => 4.0 + (1.0 - rho + a) / (rho * m),
        Variant::Ripg2 => 4.0 + (4.0 * (1.0 - rho) + a) / (rho * m),
    })
}

/// Per-step record of one cycle: the prox/subgradient stage outputs and the
/// relaxed projected iterate.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub x_next: Vec<f64>,
}

/// One full recorded cycle starting from `x_start`.
#[derive(Debug, Clone)]
pub struct CycleTrace {
    pub x_start: Vec<f64>,
    pub steps: Vec<StepTrace>,
}

impl CycleTrace {
    pub fn x_end(&self) -> &[f64] {
        &self.steps.last().expect("cycle has steps").x_next
    }
}

/// Runs one cyclic pass (component order 0..m) recording every stage.
pub fn record_cycle(
    components: &[ComponentSpec],
    x_start: &[f64],
    t: f64,
    rho: f64,
    c: &ConstraintSet,
    variant: Variant,
) -> Result<CycleTrace> {
    if components.is_empty() {
        return Err(invalid("component list must be nonempty"));
    }
    let mut x = x_start.to_vec();
    let mut steps = Vec::with_capacity(components.len());
    for comp in components {
        let (x_next, w, z) = match variant {
            Variant::Ripg1 => ripg1_step(&x, comp, t, rho, c)?,
            Variant::Ripg2 => ripg2_step(&x, comp, t, rho, c)?,
        };
        steps.push(StepTrace {
            w,
            z,
            x_next: x_next.clone(),
        });
        x = x_next;
    }
    Ok(CycleTrace {
        x_start: x_start.to_vec(),
        steps,
    })
}

/// Outcome of one bound check.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// |x_{k+m} - y|^2.
    pub lhs: f64,
    /// The assembled right-hand side of the bound.
    pub rhs: f64,
    /// Smallest constant the assumptions admit along this cycle.
    pub c_empirical: f64,
    pub holds: bool,
    pub slack: f64,
}


fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Checks the per-cycle bound on a recorded cycle against a feasible point
/// `y`. The empirical constant is the maximum of every quantity the
/// relevant assumption bounds: implicit subgradient norms at the stage
/// points and positive function-difference ratios (with a 1e-12 distance
/// floor).
pub fn check_prop1_bound(
    components: &[ComponentSpec],
    trace: &CycleTrace,
    y: &[f64],
    rho: f64,
    t: f64,
    variant: Variant,
) -> Result<BoundReport> {
    let m = components.len();
    if trace.steps.len() != m {
        return Err(invalid(format!(
            "cycle trace has {} steps for {m} components",
            trace.steps.len()
        )));
    }
    if y.len() != trace.x_start.len() {
        return Err(invalid("y dimension does not match the trace"));
    }
    if !(t > 0.0) {
        return Err(invalid("t must be positive"));
    }

    let x_start = &trace.x_start;
    let mut c_emp = 0.0f64;

    let mut x_before = x_start.clone();
    for (j, step) in trace.steps.iter().enumerate() {
        let comp = &components[j];
        // Stage-displacement subgradient norms: |x-w|/t and |w-z|/t play
        // the g/h roles in variant order.
        c_emp = c_emp.max(dist(&x_before, &step.w) / t);
        c_emp = c_emp.max(dist(&step.w, &step.z) / t);

        match variant {
            Variant::Ripg1 => {
                let d = dist(x_start, &step.w).max(DIST_FLOOR);
                let dg = comp.g_value(x_start) - comp.g_value(&step.w);
                let dh = comp.h_value(x_start) - comp.h_value(&step.w);
                if dg > 0.0 {
                    c_emp = c_emp.max(dg / d);
                }
                if dh > 0.0 {
                    c_emp = c_emp.max(dh / d);
                }
            }
            Variant::Ripg2 => {
                let d = dist(x_start, &x_before).max(DIST_FLOOR);
                let dg = comp.g_value(x_start) - comp.g_value(&x_before);
                let dh = comp.h_value(x_start) - comp.h_value(&x_before);
                if dg > 0.0 {
                    c_emp = c_emp.max(dg / d);
                }
                if dh > 0.0 {
                    c_emp = c_emp.max(dh / d);
                }
                let dz = dist(&x_before, &step.z).max(DIST_FLOOR);
                let dgz = comp.g_value(&x_before) - comp.g_value(&step.z);
                if dgz > 0.0 {
                    c_emp = c_emp.max(dgz / dz);
                }
            }
        }
        x_before = step.x_next.clone();
    }

    let lhs = dist(trace.x_end(), y).powi(2);
    let f_start = objective_value(components, x_start);
    let f_y = objective_value(components, y);
    let b = beta(rho, m, variant)?;
    let m_f = m as f64;
    let rhs = dist(x_start, y).powi(2) - 2.0 * rho * t * (f_start - f_y)
        + b * rho * rho * t * t * m_f * m_f * c_emp * c_emp;
    let slack = rhs - lhs;
    let holds = slack >= -1e-9 * rhs.abs().max(1.0);
    Ok(BoundReport {
        lhs,
        rhs,
        c_empirical: c_emp,
        holds,
        slack,
    })
}

/// Configuration of the randomized bound suite: `cases` random problems of
/// size m x n with box constraints, quadratic-residual g components and
/// normalized-residual h components, checked for every rho and both
/// variants.
#[derive(Debug, Clone)]
pub struct BoundSuiteConfig {
    pub cases: usize,
    pub m: usize,
    pub n: usize,
    pub rhos: Vec<f64>,
    pub t: f64,
    pub box_half_width: f64,
    pub seed: u64,
}

impl Default for BoundSuiteConfig {
    fn default() -> Self {
        Self {
            cases: 100,
            m: 5,
            n: 3,
            rhos: vec![0.3, 1.0, 1.7],
            t: 0.01,
            box_half_width: 1.0,
            seed: 0x0b5e_55ed,
        }
    }
}

/// One entry of the suite report.
#[derive(Debug, Clone)]
pub struct BoundSuiteCase {
    pub case_index: usize,
    pub variant: Variant,
    pub rho: f64,
    pub m: usize,
    pub n: usize,
    pub t: f64,
    pub beta: f64,
    pub report: BoundReport,
}

/// Runs the randomized suite; returns one entry per (case, rho, variant).
pub fn run_bound_suite(cfg: &BoundSuiteConfig) -> Result<Vec<BoundSuiteCase>> {
    if cfg.m < 1 || cfg.n < 1 {
        return Err(invalid("suite sizes must be positive"));
    }
    if !(cfg.t > 0.0) || !(cfg.box_half_width > 0.0) {
        return Err(invalid("suite t and box width must be positive"));
    }
    let mut out = Vec::new();
    for case in 0..cfg.cases {
        // per-case stream so cases are independent of evaluation order
        let mut rng =
            ChaCha8Rng::seed_from_u64(cfg.seed ^ (case as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        let rows: Vec<Vec<f64>> = (0..cfg.m)
            .map(|_| (0..cfg.n).map(|_| normal()).collect())
            .collect();
        let a = SparseMatrix::from_dense(&rows)?;
        let b: Vec<f64> = (0..cfg.m).map(|_| normal()).collect();
        let w = cfg.box_half_width;
        let clamp = |v: f64| v.clamp(-w, w);
        let x_start: Vec<f64> = (0..cfg.n).map(|_| clamp(normal())).collect();
        let y: Vec<f64> = (0..cfg.n).map(|_| clamp(normal())).collect();

        // quadratic g plus normalized-residual h on the same rows
        let mut components = quadratic_components(&a, &b)?;
        for (i, comp) in components.iter_mut().enumerate() {
            comp.h = HFun::QuadraticResidualNormalized {
                a: SparseVec::from_row(a.row(i), a.ncols()),
                b: b[i],
            };
        }
        let constraint = ConstraintSet::uniform_box(-w, w, cfg.n)?;

        for &rho in &cfg.rhos {
            for variant in [Variant::Ripg1, Variant::Ripg2] {
                let trace = record_cycle(&components, &x_start, cfg.t, rho, &constraint, variant)?;
                let report = check_prop1_bound(&components, &trace, &y, rho, cfg.t, variant)?;
                out.push(BoundSuiteCase {
                    case_index: case,
                    variant,
                    rho,
                    m: cfg.m,
                    n: cfg.n,
                    t: cfg.t,
                    beta: beta(rho, cfg.m, variant)?,
                    report,
                });
            }
        }
    }
    Ok(out)
}
