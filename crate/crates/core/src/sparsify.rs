//! Deterministic barrier-potential row selection.
//!
//! All three samplers share one engine. Rows `v_i` of an orthonormal
//! `n × k` matrix satisfy `Σ v_i v_iᵀ = I_k`. The engine runs exactly `r`
//! steps; each step shifts a lower barrier `L` under the spectrum of
//! `X = Σ s_i v_i v_iᵀ` by one and an upper barrier on the second set by
//! `δ_U`, then adds a rank-one term for the index whose upper increment is
//! dominated by its lower increment. After `r` steps the weights are
//! normalised by `(1 − √(k/r)) / r`, which places the lower bound at
//! `(1 − √(k/r))²`.
//!
//! Upper sides:
//! - spectral: rows `u_i` of an orthonormal basis of `span(Ψ)`, potential
//!   `tr((U·I − Y)⁻¹)` with `Y = Σ s_i u_i u_iᵀ`;
//! - trace: `tr(Y)` controlled directly, increment `‖ψ_i‖² / δ_U`.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::{
    check_orthonormal, numerical_rank, thin_svd_default, Matrix, ORTHONORMAL_TOL,
};

/// One output row of a coreset operator: `scale · e_rowᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pick {
    pub row: usize,
    pub scale: f64,
}

/// The composite sample-and-rescale operator `DS`.
///
/// Repeated rows are kept as separate picks, so the operator always has one
/// output row per pick.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetOperator {
    picks: Vec<Pick>,
    source_rows: usize,
}

impl CoresetOperator {
    pub fn new(picks: Vec<Pick>, source_rows: usize) -> Result<Self> {
        if picks.is_empty() {
            return Err(Error::InvalidArgument(
                "coreset operator needs at least one pick".into(),
            ));
        }
        for p in &picks {
            if p.row >= source_rows {
                return Err(Error::InvalidArgument(format!(
                    "pick row {} out of range for {} source rows",
                    p.row, source_rows
                )));
            }
            if !(p.scale.is_finite() && p.scale > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "pick scale must be positive and finite, got {}",
                    p.scale
                )));
            }
        }
        Ok(Self { picks, source_rows })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "identity operator needs at least one row");
        Self {
            picks: (0..n).map(|row| Pick { row, scale: 1.0 }).collect(),
            source_rows: n,
        }
    }

    /// Unit-weight selection of the given rows.
    pub fn from_rows(rows: &[usize], source_rows: usize) -> Result<Self> {
        Self::new(
            rows.iter().map(|&row| Pick { row, scale: 1.0 }).collect(),
            source_rows,
        )
    }

    pub fn picks(&self) -> &[Pick] {
        &self.picks
    }

    pub fn size(&self) -> usize {
        self.picks.len()
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    /// Distinct source rows, ascending.
    pub fn distinct_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.picks.iter().map(|p| p.row).collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    /// Output row `j` is `scale_j` times source row `row_j`.
    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if m.nrows() != self.source_rows {
            return Err(Error::DimensionMismatch(format!(
                "operator expects {} rows, matrix has {}",
                self.source_rows,
                m.nrows()
            )));
        }
        let mut out = Matrix::zeros(self.picks.len(), m.ncols());
        for (j, p) in self.picks.iter().enumerate() {
            let mut row = out.row_mut(j);
            row.copy_from(&m.row(p.row));
            row.scale_mut(p.scale);
        }
        Ok(out)
    }

    pub fn apply_vector(&self, v: &crate::linalg::Vector) -> Result<crate::linalg::Vector> {
        if v.len() != self.source_rows {
            return Err(Error::DimensionMismatch(format!(
                "operator expects length {}, vector has {}",
                self.source_rows,
                v.len()
            )));
        }
        Ok(crate::linalg::Vector::from_iterator(
            self.picks.len(),
            self.picks.iter().map(|p| p.scale * v[p.row]),
        ))
    }
}

/// Inputs of a dual-set sparsification: an orthonormal `V` (n × k) and a
/// second matrix `Ψ` (n × ℓ₂) whose norm must not grow much.
#[derive(Debug, Clone)]
pub struct DualSetInput {
    v_rows: Matrix,
    psi: Matrix,
    r: usize,
}

impl DualSetInput {
    pub fn new(v_rows: Matrix, psi: Matrix, r: usize) -> Result<Self> {
        if v_rows.nrows() == 0 || v_rows.ncols() == 0 {
            return Err(Error::EmptyMatrix {
                rows: v_rows.nrows(),
                cols: v_rows.ncols(),
            });
        }
        if psi.nrows() != v_rows.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "V has {} rows but Ψ has {}",
                v_rows.nrows(),
                psi.nrows()
            )));
        }
        crate::linalg::ensure_finite(&psi)?;
        if let Err(err) = check_orthonormal(&v_rows, ORTHONORMAL_TOL) {
            let rank = numerical_rank(&v_rows);
            if rank < v_rows.ncols() {
                return Err(Error::RankDeficient {
                    rank,
                    expected: v_rows.ncols(),
                });
            }
            return Err(err);
        }
        let k = v_rows.ncols();
        if r <= k {
            return Err(Error::CoresetTooSmall { r, min_exclusive: k });
        }
        Ok(Self { v_rows, psi, r })
    }

    pub fn v_rows(&self) -> &Matrix {
        &self.v_rows
    }

    pub fn psi(&self) -> &Matrix {
        &self.psi
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.v_rows.ncols()
    }
}

/// Two-sided singular-value interval `[1 − √(ℓ/r), 1 + √(ℓ/r)]` of the
/// single-set guarantee.
pub fn single_set_interval(ell: usize, r: usize) -> (f64, f64) {
    let s = (ell as f64 / r as f64).sqrt();
    (1.0 - s, 1.0 + s)
}

/// Upper bound factor `1 + √(ρ/r)` on the spectral norm of the sampled `Ψ`.
pub fn spectral_growth_factor(rho: usize, r: usize) -> f64 {
    1.0 + (rho as f64 / r as f64).sqrt()
}

/// Lower bound `1 − √(k/r)` on the smallest sampled singular value of `V`.
pub fn lower_singular_bound(k: usize, r: usize) -> f64 {
    1.0 - (k as f64 / r as f64).sqrt()
}

pub fn single_set_spectral(u: &Matrix, r: usize) -> Result<CoresetOperator> {
    if u.nrows() == 0 || u.ncols() == 0 {
        return Err(Error::EmptyMatrix {
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    check_orthonormal(u, ORTHONORMAL_TOL)?;
    let ell = u.ncols();
    if r <= ell {
        return Err(Error::CoresetTooSmall {
            r,
            min_exclusive: ell,
        });
    }
    barrier_select(u, UpperSide::Spectral { basis: u.clone() }, r)
}

pub fn dual_set_spectral(input: &DualSetInput) -> Result<CoresetOperator> {
    let upper = match thin_svd_default(input.psi()) {
        Ok(svd) => UpperSide::Spectral { basis: svd.u },
        Err(Error::ZeroMatrix) | Err(Error::EmptyMatrix { .. }) => UpperSide::Unbounded,
        Err(e) => return Err(e),
    };
    barrier_select(input.v_rows(), upper, input.r())
}

pub fn dual_set_spectral_frobenius(input: &DualSetInput) -> Result<CoresetOperator> {
    let psi = input.psi();
    let row_mass: Vec<f64> = (0..psi.nrows())
        .map(|i| psi.row(i).norm_squared())
        .collect();
    let total: f64 = row_mass.iter().sum();
    let upper = if total > 0.0 {
        UpperSide::Trace { row_mass, total }
    } else {
        UpperSide::Unbounded
    };
    barrier_select(input.v_rows(), upper, input.r())
}

enum UpperSide {
    /// Orthonormal `n × ρ` basis of the controlled column space.
    Spectral { basis: Matrix },
    Trace { row_mass: Vec<f64>, total: f64 },
    Unbounded,
}

/// `Σ_j p_j² / (λ_j − shift)^power` for each row of `proj`.
fn resolvent_forms(proj: &Matrix, gaps: &[f64], power: i32) -> Vec<f64> {
    (0..proj.nrows())
        .map(|i| {
            gaps.iter()
                .enumerate()
                .map(|(j, g)| proj[(i, j)] * proj[(i, j)] / g.powi(power))
                .sum()
        })
        .collect()
}

fn barrier_select(v: &Matrix, upper: UpperSide, r: usize) -> Result<CoresetOperator> {
    let n = v.nrows();
    let k = v.ncols();
    let rf = r as f64;
    let lower_ratio = (k as f64 / rf).sqrt();

    let mut lower = -(rf * k as f64).sqrt();
    let (delta_upper, mut upper_pos) = match &upper {
        UpperSide::Spectral { basis } => {
            let rho = basis.ncols() as f64;
            let delta = (1.0 + (rho / rf).sqrt()) / (1.0 - lower_ratio);
            (delta, delta * (rho * rf).sqrt())
        }
        UpperSide::Trace { total, .. } => (total / (1.0 - lower_ratio), 0.0),
        UpperSide::Unbounded => (0.0, 0.0),
    };

    let mut x_acc = Matrix::zeros(k, k);
    let mut y_acc = match &upper {
        UpperSide::Spectral { basis } => Matrix::zeros(basis.ncols(), basis.ncols()),
        _ => Matrix::zeros(0, 0),
    };
    let mut weights: Vec<(usize, f64)> = Vec::with_capacity(r);

    for step in 0..r {
        let next_lower = lower + 1.0;
        let eig = SymmetricEigen::new(x_acc.clone());
        let gaps_next: Vec<f64> = eig.eigenvalues.iter().map(|l| l - next_lower).collect();
        if gaps_next.iter().any(|g| *g <= 0.0) {
            return Err(Error::NumericalFault { step });
        }
        let phi_now: f64 = eig.eigenvalues.iter().map(|l| 1.0 / (l - lower)).sum();
        let phi_next: f64 = gaps_next.iter().map(|g| 1.0 / g).sum();
        let proj = v * &eig.eigenvectors;
        let first = resolvent_forms(&proj, &gaps_next, 1);
        let second = resolvent_forms(&proj, &gaps_next, 2);
        let lower_fn: Vec<f64> = (0..n)
            .map(|i| second[i] / (phi_next - phi_now) - first[i])
            .collect();

        let next_upper = upper_pos + delta_upper;
        let upper_fn: Vec<f64> = match &upper {
            UpperSide::Spectral { basis } => {
                let eig_y = SymmetricEigen::new(y_acc.clone());
                let gaps: Vec<f64> = eig_y.eigenvalues.iter().map(|m| next_upper - m).collect();
                if gaps.iter().any(|g| *g <= 0.0) {
                    return Err(Error::NumericalFault { step });
                }
                let psi_now: f64 = eig_y.eigenvalues.iter().map(|m| 1.0 / (upper_pos - m)).sum();
                let psi_next: f64 = gaps.iter().map(|g| 1.0 / g).sum();
                let proj_y = basis * &eig_y.eigenvectors;
                let first_y = resolvent_forms(&proj_y, &gaps, 1);
                let second_y = resolvent_forms(&proj_y, &gaps, 2);
                (0..n)
                    .map(|i| second_y[i] / (psi_now - psi_next) + first_y[i])
                    .collect()
            }
            UpperSide::Trace { row_mass, .. } => {
                row_mass.iter().map(|m| m / delta_upper).collect()
            }
            UpperSide::Unbounded => vec![0.0; n],
        };

        // Largest slack wins; strict comparison keeps the smallest index on ties.
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let (lo, up) = (lower_fn[i], upper_fn[i]);
            if !(lo.is_finite() && up.is_finite()) || lo <= 0.0 || lo < up {
                continue;
            }
            let slack = lo - up;
            if best.is_none_or(|(_, s)| slack > s) {
                best = Some((i, slack));
            }
        }
        let (j, _) = best.ok_or(Error::NumericalFault { step })?;
        let weight = 2.0 / (lower_fn[j] + upper_fn[j]);

        let vj = v.row(j).transpose();
        x_acc += weight * &vj * vj.transpose();
        if let UpperSide::Spectral { basis } = &upper {
            let uj = basis.row(j).transpose();
            y_acc += weight * &uj * uj.transpose();
        }
        weights.push((j, weight));
        lower = next_lower;
        upper_pos = next_upper;
    }

    let normalisation = (1.0 - lower_ratio) / rf;
    let picks = weights
        .into_iter()
        .map(|(row, w)| Pick {
            row,
            scale: (w * normalisation).sqrt(),
        })
        .collect();
    CoresetOperator::new(picks, n)
}
