//! Dense linear-algebra substrate.
//!
//! Everything downstream works against the thin SVD contract below: the left
//! and right factors have orthonormal columns, the singular values are
//! strictly positive and sorted descending, and values under the relative
//! rank cut are dropped. Singular-vector signs are not fixed, so callers only
//! compare sign-invariant quantities.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Orthonormality tolerance used when validating caller-supplied bases.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Relative singular-value cut: `σ_i` is kept iff `σ_i > threshold · σ_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance {
    relative_threshold: f64,
}

impl RankTolerance {
    pub fn new(relative_threshold: f64) -> Result<Self> {
        if !(relative_threshold > 0.0 && relative_threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "relative rank threshold must lie in (0, 1), got {relative_threshold}"
            )));
        }
        Ok(Self { relative_threshold })
    }

    /// Machine epsilon scaled by the larger dimension.
    pub fn for_shape(rows: usize, cols: usize) -> Self {
        let scale = rows.max(cols).max(1) as f64;
        Self {
            relative_threshold: (f64::EPSILON * scale).min(0.5),
        }
    }

    pub fn for_matrix(m: &Matrix) -> Self {
        Self::for_shape(m.nrows(), m.ncols())
    }

    pub fn relative_threshold(&self) -> f64 {
        self.relative_threshold
    }
}

/// Thin SVD `M = U · diag(σ) · Vᵀ` truncated at the numerical rank.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

pub fn ensure_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn ensure_nonempty(m: &Matrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::EmptyMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Full (untruncated) SVD with singular triplets sorted by decreasing value.
fn sorted_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let values = svd.singular_values;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let u_sorted = Matrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let v_sorted = Matrix::from_fn(v_t.ncols(), order.len(), |i, j| v_t[(order[j], i)]);
    let sigma = order.iter().map(|&j| values[j]).collect();
    (u_sorted, sigma, v_sorted)
}

pub fn thin_svd(m: &Matrix, tol: RankTolerance) -> Result<ThinSvd> {
    ensure_nonempty(m)?;
    ensure_finite(m)?;
    let (u, sigma, v) = sorted_svd(m);
    let top = sigma.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let cut = tol.relative_threshold() * top;
    let rank = sigma.iter().take_while(|&&s| s > cut).count();
    Ok(ThinSvd {
        u: u.columns(0, rank).into_owned(),
        sigma: sigma[..rank].to_vec(),
        v: v.columns(0, rank).into_owned(),
    })
}

/// Thin SVD at the default rank cut for the matrix shape.
pub fn thin_svd_default(m: &Matrix) -> Result<ThinSvd> {
    thin_svd(m, RankTolerance::for_matrix(m))
}

/// Numerical rank at the default cut; zero for the zero matrix or an empty one.
pub fn numerical_rank(m: &Matrix) -> usize {
    match thin_svd_default(m) {
        Ok(svd) => svd.rank(),
        Err(_) => 0,
    }
}

/// Moore-Penrose pseudoinverse `V · diag(1/σ) · Uᵀ`.
pub fn pseudoinverse(m: &Matrix) -> Result<Matrix> {
    let svd = thin_svd_default(m)?;
    Ok(pseudoinverse_from_svd(&svd))
}

pub fn pseudoinverse_from_svd(svd: &ThinSvd) -> Matrix {
    let mut v_scaled = svd.v.clone();
    for (j, s) in svd.sigma.iter().enumerate() {
        v_scaled.column_mut(j).scale_mut(1.0 / s);
    }
    v_scaled * svd.u.transpose()
}

/// Pseudoinverse that maps the zero matrix to the zero transpose.
pub fn pseudoinverse_or_zero(m: &Matrix) -> Result<Matrix> {
    match pseudoinverse(m) {
        Err(Error::ZeroMatrix) => Ok(Matrix::zeros(m.ncols(), m.nrows())),
        other => other,
    }
}

/// Largest entry of `|UᵀU − I|`.
pub fn orthonormality_deviation(u: &Matrix) -> f64 {
    let gram = u.transpose() * u;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

pub fn check_orthonormal(u: &Matrix, tol: f64) -> Result<()> {
    ensure_finite(u)?;
    let deviation = orthonormality_deviation(u);
    if deviation <= tol {
        Ok(())
    } else {
        Err(Error::NotOrthonormal { deviation })
    }
}

/// Orthonormal basis `Q` (n × (n−ρ)) of the complement of `span(U)`.
///
/// For square `U` the result has zero columns.
pub fn orthonormal_complement(u: &Matrix) -> Result<Matrix> {
    check_orthonormal(u, ORTHONORMAL_TOL)?;
    let n = u.nrows();
    let rho = u.ncols();
    if rho > n {
        return Err(Error::DimensionMismatch(format!(
            "orthonormal basis cannot have more columns ({rho}) than rows ({n})"
        )));
    }
    let missing = n - rho;
    if missing == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    // Eigenvalues of I − UUᵀ are 1 on the complement and 0 on span(U).
    let projector = Matrix::identity(n, n) - u * u.transpose();
    let eig = SymmetricEigen::new(projector);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    Ok(Matrix::from_fn(n, missing, |i, j| {
        eig.eigenvectors[(i, order[j])]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub spectral: f64,
    pub frobenius: f64,
}

pub fn norms(m: &Matrix) -> Norms {
    Norms {
        spectral: spectral_norm(m),
        frobenius: m.norm(),
    }
}

pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn min_singular_value(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `[left | right]`.
pub fn hstack(left: &Matrix, right: &Matrix) -> Result<Matrix> {
    if left.nrows() != right.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot stack {} rows beside {} rows",
            left.nrows(),
            right.nrows()
        )));
    }
    let mut out = Matrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols()).copy_from(right);
    Ok(out)
}

pub fn column_matrix(v: &Vector) -> Matrix {
    Matrix::from_column_slice(v.len(), 1, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    fn max_abs(m: &Matrix) -> f64 {
        m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    #[test]
    fn identity_svd() {
        let svd = thin_svd_default(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(svd.sigma, vec![1.0, 1.0, 1.0]);
        assert!(max_abs(&(svd.reconstruct() - Matrix::identity(3, 3))) < 1e-12);
        assert!(orthonormality_deviation(&svd.u) < 1e-12);
    }

    #[test]
    fn diagonal_rank_one() {
        let m = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0]);
        let svd = thin_svd_default(&m).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.sigma[0] - 3.0).abs() < 1e-14);
        assert!((svd.u[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(svd.u[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let err = thin_svd_default(&Matrix::zeros(3, 2)).unwrap_err();
        assert_eq!(err.to_string(), "zero matrix has no thin SVD");
        assert!(pseudoinverse(&Matrix::zeros(2, 2)).is_err());
        assert!(thin_svd_default(&Matrix::zeros(3, 0)).is_err());
    }

    #[test]
    fn non_finite_is_rejected() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(thin_svd_default(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn tolerance_bounds() {
        assert!(RankTolerance::new(0.0).is_err());
        assert!(RankTolerance::new(1.0).is_err());
        assert!(RankTolerance::new(1e-6).is_ok());
    }

    #[test]
    fn rank_three_product_matches_gram_eigencheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = gaussian(20, 3, &mut rng) * gaussian(3, 4, &mut rng);
        let svd = thin_svd_default(&m).unwrap();
        assert_eq!(svd.rank(), 3);
        // Gram eigen oracle: MᵀM has three eigenvalues matching σ² and one ~0.
        let eig = SymmetricEigen::new(m.transpose() * &m);
        let mut lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        for (s, l) in svd.sigma.iter().zip(&lam) {
            assert!((s * s - l).abs() <= 1e-9 * lam[0]);
        }
        assert!(lam[3].abs() <= 1e-10 * lam[0]);
        let rel = (svd.reconstruct() - &m).norm() / m.norm();
        assert!(rel < 1e-10);
        assert!(orthonormality_deviation(&svd.u) < 1e-10);
        assert!(orthonormality_deviation(&svd.v) < 1e-10);
    }

    #[test]
    fn pseudoinverse_small_cases() {
        let p = pseudoinverse(&Matrix::identity(3, 3)).unwrap();
        assert!(max_abs(&(p - Matrix::identity(3, 3))) < 1e-14);
        let p = pseudoinverse(&Matrix::from_element(1, 1, 2.0)).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pseudoinverse_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = gaussian(10, 3, &mut rng);
        let p = pseudoinverse(&m).unwrap();
        let normal = (m.transpose() * &m).try_inverse().unwrap() * m.transpose();
        assert!(max_abs(&(&p - normal)) < 1e-8);
        // Penrose conditions
        assert!(max_abs(&(&m * &p * &m - &m)) < 1e-8);
        assert!(max_abs(&(&p * &m * &p - &p)) < 1e-8);
        let mp = &m * &p;
        assert!(max_abs(&(&mp - mp.transpose())) < 1e-8);
        let pm = &p * &m;
        assert!(max_abs(&(&pm - pm.transpose())) < 1e-8);
    }

    #[test]
    fn complement_of_first_basis_vector() {
        let u = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let q = orthonormal_complement(&u).unwrap();
        assert_eq!(q.shape(), (2, 1));
        assert!(q[(0, 0)].abs() < 1e-12);
        assert!((q[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complement_of_constant_vector() {
        let u = Matrix::from_element(4, 1, 0.5);
        let q = orthonormal_complement(&u).unwrap();
        assert_eq!(q.shape(), (4, 3));
        for j in 0..3 {
            assert!(q.column(j).sum().abs() < 1e-8);
        }
        assert!(orthonormality_deviation(&q) < 1e-8);
        assert!(max_abs(&(u.transpose() * &q)) < 1e-8);
        let total = &u * u.transpose() + &q * q.transpose();
        assert!(max_abs(&(total - Matrix::identity(4, 4))) < 1e-8);
    }

    #[test]
    fn complement_of_square_basis_is_empty() {
        let q = orthonormal_complement(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(q.shape(), (3, 0));
    }

    #[test]
    fn complement_rejects_non_orthonormal() {
        let u = Matrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(
            orthonormal_complement(&u),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn norm_examples() {
        let n = norms(&Matrix::identity(3, 3));
        assert!((n.spectral - 1.0).abs() < 1e-14);
        assert!((n.frobenius - 3f64.sqrt()).abs() < 1e-14);
        let n = norms(&Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]));
        assert!((n.spectral - 4.0).abs() < 1e-14);
        assert!((n.frobenius - 5.0).abs() < 1e-14);
    }

    #[test]
    fn frobenius_matches_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = gaussian(8, 5, &mut rng);
        let s = singular_values(&m);
        let from_sigma = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n = norms(&m);
        assert!((n.frobenius - from_sigma).abs() < 1e-10);
        assert!(n.spectral <= n.frobenius);
        assert!(n.frobenius <= (s.len() as f64).sqrt() * n.spectral + 1e-12);
    }
}
