//! Mode dispatch shared by every subcommand.

use rand::Rng;
use richcore::coreset::{
    agnostic_coreset, approximation_ratio, arbitrary_constrained_coreset, column_average,
    lift_block_diagonal, multi_objective_coreset, multiple_frobenius_coreset,
    multiple_spectral_coreset, simple_coreset, CoresetBundle, CoresetMode, MultiResponseInstance,
    RatioNorm, RegressionInstance,
};
use richcore::linalg::{numerical_rank, Matrix, Vector};
use richcore::solvers::{solve_multi_on_coreset, solve_unconstrained, ConstraintDomain};
use richcore::sparsify::{CoresetOperator, Pick};

use crate::error::{CliError, CliResult};
use crate::input::Problem;

pub fn norm_name(norm: RatioNorm) -> &'static str {
    match norm {
        RatioNorm::Spectral => "spectral",
        RatioNorm::Frobenius => "frobenius",
    }
}

/// Norm the mode's guarantee is stated in; only agnostic mode lets the caller pick.
pub fn resolve_norm(mode: CoresetMode, requested: Option<RatioNorm>) -> CliResult<RatioNorm> {
    let fixed = match mode {
        CoresetMode::Agnostic => return Ok(requested.unwrap_or(RatioNorm::Spectral)),
        CoresetMode::MultipleSpectral => RatioNorm::Spectral,
        _ => RatioNorm::Frobenius,
    };
    match requested {
        Some(n) if n != fixed => Err(CliError::Usage(format!(
            "mode {mode} reports the {} norm only",
            norm_name(fixed)
        ))),
        _ => Ok(fixed),
    }
}

pub fn check_domain(mode: CoresetMode, domain: &ConstraintDomain) -> CliResult<()> {
    let constrained_ok = matches!(
        mode,
        CoresetMode::Simple | CoresetMode::MultiObjective | CoresetMode::ArbitraryConstrained
    );
    if !constrained_ok && !matches!(domain, ConstraintDomain::Unconstrained) {
        return Err(CliError::Usage(format!(
            "mode {mode} supports the unconstrained domain only"
        )));
    }
    Ok(())
}

fn targets(problem: &Problem, mode: CoresetMode) -> CliResult<&Matrix> {
    problem
        .b
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("mode {mode} needs a target (--target or --target-col)")))
}

fn single_target(problem: &Problem, mode: CoresetMode) -> CliResult<RegressionInstance> {
    let b = targets(problem, mode)?;
    if b.ncols() != 1 {
        return Err(CliError::Usage(format!(
            "mode {mode} takes exactly one target column, got {}",
            b.ncols()
        )));
    }
    Ok(RegressionInstance::new(problem.a.clone(), b.column(0).into_owned())?)
}

fn multi_target(problem: &Problem, mode: CoresetMode) -> CliResult<MultiResponseInstance> {
    Ok(MultiResponseInstance::new(problem.a.clone(), targets(problem, mode)?.clone())?)
}

pub fn build(mode: CoresetMode, problem: &Problem, r: usize) -> CliResult<CoresetBundle> {
    let bundle = match mode {
        CoresetMode::Simple => simple_coreset(&single_target(problem, mode)?, r)?,
        CoresetMode::MultiObjective => multi_objective_coreset(&multi_target(problem, mode)?, r)?,
        CoresetMode::ArbitraryConstrained => {
            arbitrary_constrained_coreset(&multi_target(problem, mode)?, r)?
        }
        CoresetMode::MultipleSpectral => {
            multiple_spectral_coreset(&multi_target(problem, mode)?, r)?
        }
        CoresetMode::MultipleFrobenius => {
            multiple_frobenius_coreset(&multi_target(problem, mode)?, r)?
        }
        CoresetMode::Agnostic => agnostic_coreset(&problem.a, r)?,
    };
    Ok(bundle)
}

/// Subspace dimension the size precondition is measured against.
pub fn subspace_dim(mode: CoresetMode, problem: &Problem) -> usize {
    let k = numerical_rank(&problem.a);
    match mode {
        CoresetMode::ArbitraryConstrained => k * problem.b.as_ref().map_or(1, |b| b.ncols()),
        _ => k,
    }
}

/// Rows the coreset operator draws from: `n`, or `n·ω` for the lifted problem.
pub fn source_rows(mode: CoresetMode, problem: &Problem) -> usize {
    let n = problem.a.nrows();
    match mode {
        CoresetMode::ArbitraryConstrained => n * problem.b.as_ref().map_or(1, |b| b.ncols()),
        _ => n,
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub full_error: f64,
    pub coreset_error: f64,
    pub ratio: f64,
    /// Per-column ratios (agnostic mode).
    pub per_target: Vec<f64>,
}

fn columnwise(a: &Matrix, b: &Matrix, domain: &ConstraintDomain) -> CliResult<Matrix> {
    let mut x = Matrix::zeros(a.ncols(), b.ncols());
    for (j, col) in b.column_iter().enumerate() {
        x.set_column(j, &domain.minimize(a, &col.into_owned())?);
    }
    Ok(x)
}

/// Full-data error of the coreset solution against the full optimum.
pub fn evaluate(
    mode: CoresetMode,
    problem: &Problem,
    op: &CoresetOperator,
    domain: &ConstraintDomain,
    norm: RatioNorm,
) -> CliResult<Evaluation> {
    let simple_eval = |inst: &RegressionInstance, b_full: &Matrix| -> CliResult<(f64, f64)> {
        let x_opt = domain.minimize(&inst.a, &inst.b)?;
        let x_tilde = domain.minimize(&op.apply(&inst.a)?, &op.apply_vector(&inst.b)?)?;
        let err = |x: &Vector| {
            let fit = &inst.a * x;
            b_full.column_iter().map(|c| (&fit - c).norm_squared()).sum::<f64>()
        };
        Ok((err(&x_opt), err(&x_tilde)))
    };
    let (full, coreset, target_sq, per_target) = match mode {
        CoresetMode::Simple => {
            let inst = single_target(problem, mode)?;
            let b = Matrix::from_column_slice(inst.n(), 1, inst.b.as_slice());
            let (f, c) = simple_eval(&inst, &b)?;
            (f, c, b.norm_squared(), Vec::new())
        }
        CoresetMode::MultiObjective => {
            let multi = multi_target(problem, mode)?;
            let inst = RegressionInstance {
                a: multi.a.clone(),
                b: column_average(&multi.b),
                k: multi.k,
            };
            let (f, c) = simple_eval(&inst, &multi.b)?;
            (f, c, multi.b.norm_squared(), Vec::new())
        }
        CoresetMode::ArbitraryConstrained => {
            let multi = multi_target(problem, mode)?;
            let lifted = lift_block_diagonal(&multi)?;
            // The lifted objective separates by column for column-separable domains.
            let x_opt = columnwise(&multi.a, &multi.b, domain)?;
            let x_tilde_vec =
                domain.minimize(&op.apply(&lifted.a_hat)?, &op.apply_vector(&lifted.b_hat)?)?;
            let full = (&lifted.a_hat * richcore::coreset::stretch(&x_opt) - &lifted.b_hat).norm_squared();
            let coreset = (&lifted.a_hat * x_tilde_vec - &lifted.b_hat).norm_squared();
            (full, coreset, multi.b.norm_squared(), Vec::new())
        }
        CoresetMode::MultipleSpectral | CoresetMode::MultipleFrobenius | CoresetMode::Agnostic => {
            let multi = multi_target(problem, mode)?;
            let x_opt = solve_unconstrained(&multi.a, &multi.b)?;
            let x_tilde = solve_multi_on_coreset(op, &multi)?;
            let r_opt = &multi.a * &x_opt - &multi.b;
            let r_tilde = &multi.a * &x_tilde - &multi.b;
            let per_target = if mode == CoresetMode::Agnostic {
                (0..multi.omega())
                    .map(|j| {
                        approximation_ratio(
                            r_opt.column(j).norm_squared(),
                            r_tilde.column(j).norm_squared(),
                            multi.b.column(j).norm_squared(),
                        )
                    })
                    .collect()
            } else {
                Vec::new()
            };
            (norm.squared(&r_opt), norm.squared(&r_tilde), norm.squared(&multi.b), per_target)
        }
    };
    Ok(Evaluation {
        full_error: full,
        coreset_error: coreset,
        ratio: approximation_ratio(full, coreset, target_sq),
        per_target,
    })
}

/// `r` rows drawn uniformly with replacement, each scaled by `√(N/r)`.
pub fn uniform_baseline<R: Rng + ?Sized>(source_rows: usize, r: usize, rng: &mut R) -> CliResult<CoresetOperator> {
    let scale = (source_rows as f64 / r as f64).sqrt();
    let picks = (0..r)
        .map(|_| Pick {
            row: rng.random_range(0..source_rows),
            scale,
        })
        .collect();
    Ok(CoresetOperator::new(picks, source_rows)?)
}
