//! Full-data and coreset solves over a fixed constraint domain.

use std::fmt;
use std::sync::Arc;

use crate::coreset::{approximation_ratio, MultiResponseInstance, RatioNorm, RegressionInstance};
use crate::error::{Error, Result};
use crate::linalg::{pseudoinverse_or_zero, Matrix, Vector};
use crate::sparsify::CoresetOperator;

pub const NNLS_MAX_ITERATIONS: usize = 100_000;

/// Minimiser of `‖Mx − v‖²` over a fixed feasible set.
///
/// The feasible set must not depend on `(M, v)`: the same set is used for the
/// full-data and the coreset problem. Implementations must be reentrant.
pub trait DomainMinimizer: Send + Sync {
    fn minimize(&self, m: &Matrix, v: &Vector) -> Result<Vector>;

    fn name(&self) -> &str {
        "custom"
    }
}

#[derive(Clone, Default)]
pub enum ConstraintDomain {
    #[default]
    Unconstrained,
    Nonnegative,
    Custom(Arc<dyn DomainMinimizer>),
}

impl fmt::Debug for ConstraintDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl ConstraintDomain {
    pub fn name(&self) -> &str {
        match self {
            ConstraintDomain::Unconstrained => "unconstrained",
            ConstraintDomain::Nonnegative => "nnls",
            ConstraintDomain::Custom(m) => m.name(),
        }
    }

    pub fn minimize(&self, m: &Matrix, v: &Vector) -> Result<Vector> {
        if m.nrows() != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "system has {} rows but target has length {}",
                m.nrows(),
                v.len()
            )));
        }
        match self {
            ConstraintDomain::Unconstrained => Ok(pseudoinverse_or_zero(m)? * v),
            ConstraintDomain::Nonnegative => solve_nnls(m, v),
            ConstraintDomain::Custom(inner) => inner.minimize(m, v),
        }
    }
}

/// Minimum-norm least-squares solution `A⁺B`.
pub fn solve_unconstrained(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} rows but the target has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(pseudoinverse_or_zero(a)? * b)
}

/// Largest violation of the NNLS optimality conditions, relative to the
/// gradient scale `max(‖g‖∞, ‖2Aᵀb‖∞, 1)`.
pub fn nnls_kkt_violation(a: &Matrix, b: &Vector, x: &Vector) -> f64 {
    let g = 2.0 * a.transpose() * (a * x - b);
    let scale = g
        .amax()
        .max((2.0 * a.transpose() * b).amax())
        .max(1.0);
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let v = if x[i] < 0.0 {
            -x[i] / scale.max(x.amax())
        } else if x[i] == 0.0 {
            (-g[i]).max(0.0) / scale
        } else {
            g[i].abs() / scale
        };
        worst = worst.max(v);
    }
    worst
}

/// Non-negative least squares: projected gradient with Barzilai–Borwein steps,
/// finished by a Lawson–Hanson active-set pass warm-started from the gradient
/// phase's support.
pub fn solve_nnls(a: &Matrix, b: &Vector) -> Result<Vector> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} rows but b has length {}",
            a.nrows(),
            b.len()
        )));
    }
    let d = a.ncols();
    let gram = a.transpose() * a;
    let atb = a.transpose() * b;
    let objective = |x: &Vector| (a * x - b).norm_squared();
    let gradient = |x: &Vector| 2.0 * (&gram * x - &atb);

    let mut x = Vector::zeros(d);
    let mut g = gradient(&x);
    let lipschitz = 2.0 * gram.diagonal().sum().max(f64::MIN_POSITIVE);
    let mut step = 1.0 / lipschitz;
    let mut iterations = 0;
    let tol = 1e-10 * g.amax().max(1.0);

    // Gradient phase: cheap approach to the optimal face.
    for _ in 0..(50 * d + 200) {
        iterations += 1;
        let projected = (&x - step * &g).map(|v| v.max(0.0));
        let s = &projected - &x;
        if s.amax() <= tol * step.max(1.0) {
            break;
        }
        let mut candidate = projected;
        let f_now = objective(&x);
        let mut f_cand = objective(&candidate);
        let mut trial = step;
        while f_cand > f_now && trial > 1e-30 {
            trial *= 0.5;
            candidate = (&x - trial * &g).map(|v| v.max(0.0));
            f_cand = objective(&candidate);
        }
        let g_new = gradient(&candidate);
        let s = &candidate - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        step = if sy > 0.0 { s.norm_squared() / sy } else { 1.0 / lipschitz };
        x = candidate;
        g = g_new;
    }

    let mut passive: Vec<bool> = x.iter().map(|v| *v > 0.0).collect();
    loop {
        // Inner loop: move toward the passive-set LS solution while staying feasible.
        loop {
            iterations += 1;
            if iterations > NNLS_MAX_ITERATIONS {
                return Err(Error::NoConvergence {
                    iterations,
                    objective: objective(&x),
                    kkt_violation: nnls_kkt_violation(a, b, &x),
                });
            }
            let z = passive_solution(a, b, &passive)?;
            let mut blocking: Option<(usize, f64)> = None;
            for i in (0..d).filter(|&i| passive[i] && z[i] <= 0.0) {
                let denom = x[i] - z[i];
                let alpha = if denom > 0.0 { x[i] / denom } else { 0.0 };
                if blocking.is_none_or(|(_, best)| alpha < best) {
                    blocking = Some((i, alpha));
                }
            }
            let Some((hit, alpha)) = blocking else {
                x = z;
                break;
            };
            x = &x + alpha.clamp(0.0, 1.0) * (&z - &x);
            let floor = 1e-15 * x.amax().max(f64::MIN_POSITIVE);
            for i in 0..d {
                if passive[i] && (i == hit || x[i] <= floor) {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
        let w = a.transpose() * (b - a * &x);
        let w_tol = 1e-11 * atb.amax().max(w.amax()).max(f64::MIN_POSITIVE);
        let entering = (0..d)
            .filter(|&i| !passive[i] && w[i] > w_tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        match entering {
            Some(i) => passive[i] = true,
            None => return Ok(x),
        }
    }
}

fn passive_solution(a: &Matrix, b: &Vector, passive: &[bool]) -> Result<Vector> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let mut z = Vector::zeros(passive.len());
    if cols.is_empty() {
        return Ok(z);
    }
    let sub = a.select_columns(&cols);
    let sol = pseudoinverse_or_zero(&sub)? * b;
    for (slot, &c) in cols.iter().enumerate() {
        z[c] = sol[slot];
    }
    Ok(z)
}

/// Minimiser over the domain of `‖DS(Ax − b)‖²`.
pub fn solve_on_coreset(
    op: &CoresetOperator,
    inst: &RegressionInstance,
    domain: &ConstraintDomain,
) -> Result<Vector> {
    let sampled_a = op.apply(&inst.a)?;
    let sampled_b = op.apply_vector(&inst.b)?;
    domain.minimize(&sampled_a, &sampled_b)
}

pub fn solve_full(inst: &RegressionInstance, domain: &ConstraintDomain) -> Result<Vector> {
    domain.minimize(&inst.a, &inst.b)
}

/// `(DSA)⁺·DSB`.
pub fn solve_multi_on_coreset(op: &CoresetOperator, inst: &MultiResponseInstance) -> Result<Matrix> {
    solve_unconstrained(&op.apply(&inst.a)?, &op.apply(&inst.b)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x_opt: Matrix,
    pub x_tilde: Matrix,
    pub full_error_sq: f64,
    /// Full-data squared error of the coreset solution.
    pub coreset_error_sq: f64,
    /// Value of the coreset objective at the coreset solution.
    pub coreset_objective: Option<f64>,
    pub achieved_ratio: f64,
    pub predicted_bound: f64,
}

impl SolveReport {
    pub fn within_bound(&self, slack: f64) -> bool {
        self.achieved_ratio <= self.predicted_bound + slack
    }
}

pub fn evaluate(
    inst: &RegressionInstance,
    x_opt: &Vector,
    x_tilde: &Vector,
    predicted_bound: f64,
    op: Option<&CoresetOperator>,
) -> Result<SolveReport> {
    if x_opt.len() != inst.d() || x_tilde.len() != inst.d() {
        return Err(Error::DimensionMismatch(
            "solution length differs from the number of columns".into(),
        ));
    }
    let full = (&inst.a * x_opt - &inst.b).norm_squared();
    let coreset = (&inst.a * x_tilde - &inst.b).norm_squared();
    let coreset_objective = match op {
        Some(op) => Some(op.apply_vector(&(&inst.a * x_tilde - &inst.b))?.norm_squared()),
        None => None,
    };
    Ok(SolveReport {
        x_opt: crate::linalg::column_matrix(x_opt),
        x_tilde: crate::linalg::column_matrix(x_tilde),
        full_error_sq: full,
        coreset_error_sq: coreset,
        coreset_objective,
        achieved_ratio: approximation_ratio(full, coreset, inst.b.norm_squared()),
        predicted_bound,
    })
}

pub fn evaluate_multi(
    inst: &MultiResponseInstance,
    x_opt: &Matrix,
    x_tilde: &Matrix,
    predicted_bound: f64,
    norm: RatioNorm,
) -> Result<SolveReport> {
    let shape = (inst.d(), inst.omega());
    if x_opt.shape() != shape || x_tilde.shape() != shape {
        return Err(Error::DimensionMismatch(format!(
            "solutions must be {}x{}",
            shape.0, shape.1
        )));
    }
    let full = norm.squared(&(&inst.a * x_opt - &inst.b));
    let coreset = norm.squared(&(&inst.a * x_tilde - &inst.b));
    Ok(SolveReport {
        x_opt: x_opt.clone(),
        x_tilde: x_tilde.clone(),
        full_error_sq: full,
        coreset_error_sq: coreset,
        coreset_objective: None,
        achieved_ratio: approximation_ratio(full, coreset, norm.squared(&inst.b)),
        predicted_bound,
    })
}
