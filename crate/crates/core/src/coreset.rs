//! Coreset constructions for simple, multi-objective, arbitrarily constrained
//! and unconstrained multiple-response regression.
//!
//! Each construction returns a [`CoresetBundle`]: the operator plus the
//! multiplicative bound it guarantees on the squared full-data error. The
//! additive guarantees of the multiple-response constructions are reported
//! as `1 + factor`.

use crate::error::{Error, Result};
use crate::linalg::{
    column_matrix, hstack, numerical_rank, pseudoinverse_or_zero, spectral_norm,
    thin_svd_default, Matrix, Vector,
};
use crate::sparsify::{
    dual_set_spectral, dual_set_spectral_frobenius, single_set_spectral, CoresetOperator,
    DualSetInput,
};

/// Entry cap on the materialised block-diagonal lift.
pub const DEFAULT_LIFT_LIMIT: usize = 10_000_000;

/// Relative threshold under which a full-data optimum counts as zero.
pub const ZERO_RESIDUAL_REL: f64 = 1e-14;

/// Simple regression problem `min ‖Ax − b‖²`.
#[derive(Debug, Clone)]
pub struct RegressionInstance {
    pub a: Matrix,
    pub b: Vector,
    pub k: usize,
}

impl RegressionInstance {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        check_data(&a)?;
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "A has {} rows but b has length {}",
                a.nrows(),
                b.len()
            )));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let k = numerical_rank(&a);
        Ok(Self { a, b, k })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }
}

/// Multiple-response problem with target matrix `B` (n × ω).
#[derive(Debug, Clone)]
pub struct MultiResponseInstance {
    pub a: Matrix,
    pub b: Matrix,
    pub k: usize,
}

impl MultiResponseInstance {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        check_data(&a)?;
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "A has {} rows but B has {}",
                a.nrows(),
                b.nrows()
            )));
        }
        if b.ncols() == 0 {
            return Err(Error::EmptyMatrix {
                rows: b.nrows(),
                cols: 0,
            });
        }
        crate::linalg::ensure_finite(&b)?;
        let k = numerical_rank(&a);
        Ok(Self { a, b, k })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn omega(&self) -> usize {
        self.b.ncols()
    }
}

fn check_data(a: &Matrix) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::EmptyMatrix {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    crate::linalg::ensure_finite(a)?;
    if numerical_rank(a) == 0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoresetMode {
    Simple,
    MultiObjective,
    ArbitraryConstrained,
    MultipleSpectral,
    MultipleFrobenius,
    Agnostic,
}

impl CoresetMode {
    pub const ALL: [CoresetMode; 6] = [
        CoresetMode::Simple,
        CoresetMode::MultiObjective,
        CoresetMode::ArbitraryConstrained,
        CoresetMode::MultipleSpectral,
        CoresetMode::MultipleFrobenius,
        CoresetMode::Agnostic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoresetMode::Simple => "simple",
            CoresetMode::MultiObjective => "multi_objective",
            CoresetMode::ArbitraryConstrained => "arbitrary_constrained",
            CoresetMode::MultipleSpectral => "multiple_spectral",
            CoresetMode::MultipleFrobenius => "multiple_frobenius",
            CoresetMode::Agnostic => "agnostic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl std::fmt::Display for CoresetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioNorm {
    Spectral,
    Frobenius,
}

impl RatioNorm {
    pub fn squared(self, m: &Matrix) -> f64 {
        match self {
            RatioNorm::Spectral => spectral_norm(m).powi(2),
            RatioNorm::Frobenius => m.norm_squared(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoresetBundle {
    pub op: CoresetOperator,
    pub predicted_bound: f64,
    pub mode: CoresetMode,
}

fn bundle(op: CoresetOperator, predicted_bound: f64, mode: CoresetMode) -> CoresetBundle {
    debug_assert!(predicted_bound.is_finite() && predicted_bound >= 1.0);
    CoresetBundle {
        op,
        predicted_bound,
        mode,
    }
}

/// `(r + k + 1 + 2√(r(k+1))) / (r + k + 1 − 2√(r(k+1)))`, defined for `r > k + 1`.
pub fn simple_ratio_bound(k: usize, r: usize) -> Result<f64> {
    let (rf, l) = (r as f64, (k + 1) as f64);
    let cross = 2.0 * (rf * l).sqrt();
    let denom = rf + l - cross;
    if r <= k + 1 || denom <= 0.0 {
        return Err(Error::CoresetTooSmall {
            r,
            min_exclusive: k + 1,
        });
    }
    Ok((rf + l + cross) / denom)
}

/// `1 + ((1 + √(ω/r)) / (1 − √(k/r)))²`.
pub fn multiple_spectral_bound(k: usize, omega: usize, r: usize) -> f64 {
    let rf = r as f64;
    let factor = (1.0 + (omega as f64 / rf).sqrt()) / (1.0 - (k as f64 / rf).sqrt());
    1.0 + factor * factor
}

/// `1 + 1 / (1 − √(k/r))²`.
pub fn multiple_frobenius_bound(k: usize, r: usize) -> f64 {
    let low = 1.0 - (k as f64 / r as f64).sqrt();
    1.0 + 1.0 / (low * low)
}

/// `1 + ((1 + √(n/r)) / (1 − √(k/r)))²`.
pub fn agnostic_bound(k: usize, n: usize, r: usize) -> f64 {
    multiple_spectral_bound(k, n, r)
}

fn check_multi_range(k: usize, n: usize, r: usize, min_exclusive: usize) -> Result<()> {
    if r <= min_exclusive {
        return Err(Error::CoresetTooSmall { r, min_exclusive });
    }
    if r > n {
        return Err(Error::CoresetTooLarge { r, n });
    }
    debug_assert!(k <= min_exclusive);
    Ok(())
}

pub fn simple_coreset(inst: &RegressionInstance, r: usize) -> Result<CoresetBundle> {
    let predicted = simple_ratio_bound(inst.k, r)?;
    let y = hstack(&inst.a, &column_matrix(&inst.b))?;
    // ℓ = rank([A, b]) ≤ k + 1; the reported bound stays at k + 1.
    let u = thin_svd_default(&y)?.u;
    let op = single_set_spectral(&u, r)?;
    Ok(bundle(op, predicted, CoresetMode::Simple))
}

/// Column average `B·1/ω`.
pub fn column_average(b: &Matrix) -> Vector {
    let omega = b.ncols() as f64;
    Vector::from_iterator(b.nrows(), b.row_iter().map(|row| row.sum() / omega))
}

pub fn multi_objective_coreset(inst: &MultiResponseInstance, r: usize) -> Result<CoresetBundle> {
    let b_avg = column_average(&inst.b);
    let simple = RegressionInstance {
        a: inst.a.clone(),
        b: b_avg,
        k: inst.k,
    };
    let inner = simple_coreset(&simple, r)?;
    let factor = inner.predicted_bound;
    Ok(bundle(inner.op, factor * factor, CoresetMode::MultiObjective))
}

/// `ω‖Ax − b_avg‖²` and `Σ_i ‖b_avg − B⁽ⁱ⁾‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDecomposition {
    pub fit_term: f64,
    pub spread_term: f64,
}

impl ErrorDecomposition {
    pub fn total(&self) -> f64 {
        self.fit_term + self.spread_term
    }
}

pub fn multi_objective_error_decomposition(
    inst: &MultiResponseInstance,
    x: &Vector,
) -> Result<ErrorDecomposition> {
    if x.len() != inst.d() {
        return Err(Error::DimensionMismatch(format!(
            "x has length {} but A has {} columns",
            x.len(),
            inst.d()
        )));
    }
    let b_avg = column_average(&inst.b);
    let fit_term = inst.omega() as f64 * (&inst.a * x - &b_avg).norm_squared();
    let spread_term = inst
        .b
        .column_iter()
        .map(|col| (&b_avg - col).norm_squared())
        .sum();
    Ok(ErrorDecomposition {
        fit_term,
        spread_term,
    })
}

/// Position of one lifted row inside `B`: row `q` of the block-diagonal
/// problem is entry `(q mod n, q div n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftedIndex {
    pub data_row: usize,
    pub response_col: usize,
}

impl LiftedIndex {
    pub fn decode(q: usize, n: usize) -> Self {
        Self {
            data_row: q % n,
            response_col: q / n,
        }
    }

    pub fn encode(self, n: usize) -> usize {
        self.response_col * n + self.data_row
    }
}

/// Column-stacked vectorisation of `X`.
pub fn stretch(x: &Matrix) -> Vector {
    Vector::from_column_slice(x.as_slice())
}

/// Inverse of [`stretch`].
pub fn unstretch(v: &Vector, rows: usize, cols: usize) -> Result<Matrix> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(Matrix::from_column_slice(rows, cols, v.as_slice()))
}

#[derive(Debug, Clone)]
pub struct LiftedProblem {
    pub a_hat: Matrix,
    pub b_hat: Vector,
    pub n: usize,
    pub d: usize,
    pub omega: usize,
}

pub fn lift_block_diagonal(inst: &MultiResponseInstance) -> Result<LiftedProblem> {
    lift_block_diagonal_with_limit(inst, DEFAULT_LIFT_LIMIT)
}

pub fn lift_block_diagonal_with_limit(
    inst: &MultiResponseInstance,
    limit: usize,
) -> Result<LiftedProblem> {
    let (n, d, omega) = (inst.n(), inst.d(), inst.omega());
    let entries = (n * omega)
        .checked_mul(d * omega)
        .ok_or(Error::LiftedTooLarge {
            entries: usize::MAX,
            limit,
        })?;
    if entries > limit {
        return Err(Error::LiftedTooLarge { entries, limit });
    }
    let mut a_hat = Matrix::zeros(n * omega, d * omega);
    for j in 0..omega {
        a_hat.view_mut((j * n, j * d), (n, d)).copy_from(&inst.a);
    }
    Ok(LiftedProblem {
        a_hat,
        b_hat: stretch(&inst.b),
        n,
        d,
        omega,
    })
}

pub fn arbitrary_constrained_coreset(
    inst: &MultiResponseInstance,
    r: usize,
) -> Result<CoresetBundle> {
    let lifted = lift_block_diagonal(inst)?;
    // rank(Â) = ω·rank(A) exactly, so the lifted instance needs no second SVD for k̂.
    let simple = RegressionInstance {
        a: lifted.a_hat,
        b: lifted.b_hat,
        k: inst.k * inst.omega(),
    };
    let inner = simple_coreset(&simple, r)?;
    Ok(bundle(
        inner.op,
        inner.predicted_bound,
        CoresetMode::ArbitraryConstrained,
    ))
}

/// Left singular basis `U_A` and the unconstrained residual `E = U_A U_Aᵀ B − B`.
pub fn residual_basis(inst: &MultiResponseInstance) -> Result<(Matrix, Matrix)> {
    let u_a = thin_svd_default(&inst.a)?.u;
    let e = &u_a * (u_a.transpose() * &inst.b) - &inst.b;
    Ok((u_a, e))
}

pub fn multiple_spectral_coreset(inst: &MultiResponseInstance, r: usize) -> Result<CoresetBundle> {
    check_multi_range(inst.k, inst.n(), r, inst.k + 1)?;
    let (u_a, e) = residual_basis(inst)?;
    let op = dual_set_spectral(&DualSetInput::new(u_a, e, r)?)?;
    Ok(bundle(
        op,
        multiple_spectral_bound(inst.k, inst.omega(), r),
        CoresetMode::MultipleSpectral,
    ))
}

pub fn multiple_frobenius_coreset(
    inst: &MultiResponseInstance,
    r: usize,
) -> Result<CoresetBundle> {
    check_multi_range(inst.k, inst.n(), r, inst.k + 1)?;
    let (u_a, e) = residual_basis(inst)?;
    let op = dual_set_spectral_frobenius(&DualSetInput::new(u_a, e, r)?)?;
    Ok(bundle(
        op,
        multiple_frobenius_bound(inst.k, r),
        CoresetMode::MultipleFrobenius,
    ))
}

/// Target-agnostic construction from `A` alone; the bound holds for every `B`.
pub fn agnostic_coreset(a: &Matrix, r: usize) -> Result<CoresetBundle> {
    check_data(a)?;
    let svd = thin_svd_default(a)?;
    let (n, k) = (a.nrows(), svd.rank());
    check_multi_range(k, n, r, k)?;
    let op = dual_set_spectral(&DualSetInput::new(svd.u, Matrix::identity(n, n), r)?)?;
    Ok(bundle(op, agnostic_bound(k, n, r), CoresetMode::Agnostic))
}

/// Squared-error quotient with the zero-residual convention: when the
/// full-data optimum is below `1e-14·‖B‖²` the ratio is 1 if the coreset
/// error is too, and `+∞` otherwise.
pub fn approximation_ratio(full_error_sq: f64, coreset_error_sq: f64, target_norm_sq: f64) -> f64 {
    let floor = ZERO_RESIDUAL_REL * target_norm_sq;
    if full_error_sq <= floor {
        if coreset_error_sq <= floor {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        coreset_error_sq / full_error_sq
    }
}

/// Both sides of the generic coreset error bound:
/// `lhs = ‖AX̃ − B‖²`, `rhs = ‖AX_opt − B‖² + ‖(DS·U_A)⁺·DS(AX_opt − B)‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl GenericBound {
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.lhs <= self.rhs + rel_slack * self.rhs
    }
}

pub fn generic_bound_check(
    inst: &MultiResponseInstance,
    op: &CoresetOperator,
    norm: RatioNorm,
) -> Result<GenericBound> {
    let (u_a, e) = residual_basis(inst)?;
    let sampled_basis = op.apply(&u_a)?;
    let rank = numerical_rank(&sampled_basis);
    if rank < inst.k {
        return Err(Error::SampledRankLost { rank, k: inst.k });
    }
    let sampled_a = op.apply(&inst.a)?;
    let x_tilde = pseudoinverse_or_zero(&sampled_a)? * op.apply(&inst.b)?;
    let lhs = norm.squared(&(&inst.a * x_tilde - &inst.b));
    let tail = pseudoinverse_or_zero(&sampled_basis)? * op.apply(&e)?;
    let rhs = norm.squared(&e) + norm.squared(&tail);
    Ok(GenericBound { lhs, rhs })
}
