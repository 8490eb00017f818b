//! Lower-bound instances for target-agnostic coresets.
//!
//! Both constructions use a data matrix with orthonormal columns whose first
//! column is `1_n/√n`. A target supported only off the coreset forces the
//! coreset solution to zero while the full-data fit is good.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::QR;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coreset::{approximation_ratio, RegressionInstance};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::solvers::{solve_on_coreset, ConstraintDomain};
use crate::sparsify::CoresetOperator;

/// Largest `n` for which coresets or targets are enumerated.
pub const ENUMERATION_LIMIT: usize = 16;

/// Largest `n` for exact binomial bounds.
pub const BINOMIAL_LIMIT: usize = 64;

const COMPLETION_SEED: u64 = 0x7e57_c0de;

#[derive(Debug, Clone)]
pub struct AgnosticHardInstance {
    pub a: Matrix,
    pub b: Vector,
    pub coreset_indices: Vec<usize>,
    pub guaranteed_ratio: f64,
}

/// `n × d` matrix with orthonormal columns, the first equal to `1_n/√n`.
///
/// Remaining columns come from a QR of `[1/√n | gaussian]` with a fixed seed.
pub fn constant_first_orthonormal(n: usize, d: usize) -> Result<Matrix> {
    if d == 0 || d > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ d ≤ n for an orthonormal completion (n = {n}, d = {d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(COMPLETION_SEED);
    let inv_sqrt = 1.0 / (n as f64).sqrt();
    let seed_cols = Matrix::from_fn(n, d, |_, j| {
        if j == 0 {
            inv_sqrt
        } else {
            StandardNormal.sample(&mut rng)
        }
    });
    let qr = QR::new(seed_cols);
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q.column_mut(0).fill(inv_sqrt);
    Ok(q)
}

fn validate_index_set(indices: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(Error::InvalidArgument(format!("index {i} out of range for n = {n}")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidArgument(format!("index {i} repeated")));
        }
    }
    Ok(())
}

pub fn hard_instance_for_coreset(
    n: usize,
    d: usize,
    coreset_indices: &[usize],
) -> Result<AgnosticHardInstance> {
    let r = coreset_indices.len();
    if r >= n {
        return Err(Error::InvalidArgument(format!(
            "coreset size r = {r} must be below n = {n}"
        )));
    }
    if r == 0 {
        return Err(Error::InvalidArgument("coreset must be non-empty".into()));
    }
    validate_index_set(coreset_indices, n)?;
    let a = constant_first_orthonormal(n, d)?;
    let level = 1.0 / ((n - r) as f64).sqrt();
    let mut b = Vector::from_element(n, level);
    for &i in coreset_indices {
        b[i] = 0.0;
    }
    let mut coreset_indices = coreset_indices.to_vec();
    coreset_indices.sort_unstable();
    Ok(AgnosticHardInstance {
        a,
        b,
        coreset_indices,
        guaranteed_ratio: n as f64 / r as f64,
    })
}

/// Full-data ratio of the coreset solution for a unit-weight coreset.
///
/// The sampled target is identically zero, so the coreset solution is zero
/// under every positive reweighting; this is checked, not assumed.
pub fn coreset_ratio(instance: &AgnosticHardInstance) -> Result<f64> {
    let n = instance.a.nrows();
    let op = CoresetOperator::from_rows(&instance.coreset_indices, n)?;
    if op.apply_vector(&instance.b)?.iter().any(|v| *v != 0.0) {
        return Err(Error::InvalidArgument(
            "sampled target is not identically zero".into(),
        ));
    }
    let inst = RegressionInstance::new(instance.a.clone(), instance.b.clone())?;
    let x_tilde = solve_on_coreset(&op, &inst, &ConstraintDomain::Unconstrained)?;
    let coreset_err = (&inst.a * &x_tilde - &inst.b).norm_squared();
    // Orthonormal columns: x_opt = Aᵀb.
    let x_opt = inst.a.transpose() * &inst.b;
    let full_err = (&inst.a * x_opt - &inst.b).norm_squared();
    Ok(approximation_ratio(full_err, coreset_err, inst.b.norm_squared()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedCoresetSweep {
    pub worst_ratio: f64,
    pub worst_coreset: Vec<usize>,
    pub coresets_checked: usize,
    pub floor: f64,
}

/// Minimum ratio over every size-`r` coreset of its hard target.
pub fn verify_theorem7(n: usize, d: usize, r: usize) -> Result<FixedCoresetSweep> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(format!(
            "n = {n} exceeds the enumeration limit {ENUMERATION_LIMIT}"
        )));
    }
    if r == 0 || r >= n {
        return Err(Error::InvalidArgument(format!("need 0 < r < n (n = {n}, r = {r})")));
    }
    let mut worst = (f64::INFINITY, Vec::new());
    let mut count = 0;
    for subset in (0..n).combinations(r) {
        let inst = hard_instance_for_coreset(n, d, &subset)?;
        let ratio = coreset_ratio(&inst)?;
        count += 1;
        if ratio < worst.0 {
            worst = (ratio, subset);
        }
    }
    Ok(FixedCoresetSweep {
        worst_ratio: worst.0,
        worst_coreset: worst.1,
        coresets_checked: count,
        floor: n as f64 / r as f64,
    })
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// Exact `C(n−r, ℓ) / C(n, ℓ)`.
pub fn miss_probability_bound(n: usize, r: usize, ell: usize) -> Result<BigRational> {
    if n > BINOMIAL_LIMIT {
        return Err(Error::EnumerationTooLarge(format!(
            "n = {n} exceeds the exact-binomial limit {BINOMIAL_LIMIT}"
        )));
    }
    if r > n || ell > n {
        return Err(Error::InvalidArgument(format!(
            "need r, ℓ ≤ n (n = {n}, r = {r}, ℓ = {ell})"
        )));
    }
    Ok(BigRational::new(
        BigInt::from(binomial(n - r, ell)),
        BigInt::from(binomial(n, ell)),
    ))
}

/// Distribution over size-`r` index sets, keyed by the sorted set.
pub type CoresetDistribution = BTreeMap<Vec<usize>, f64>;

pub fn uniform_coreset_distribution(n: usize, r: usize) -> Result<CoresetDistribution> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(format!(
            "n = {n} exceeds the enumeration limit {ENUMERATION_LIMIT}"
        )));
    }
    let total = binomial(n, r).to_f64().unwrap_or(f64::INFINITY);
    Ok((0..n).combinations(r).map(|c| (c, 1.0 / total)).collect())
}

#[derive(Debug, Clone)]
pub struct HardTarget {
    pub t_star: Vec<usize>,
    pub b: Vector,
    pub success_probability_lower_bound: f64,
    pub exact_bound: BigRational,
    /// Probability under the sampler that the coreset meets `T*`.
    pub hit_probability: f64,
    /// `Σ_T P(coreset meets T)` over all size-ℓ targets.
    pub total_hit_mass: f64,
    /// Ratio forced whenever the coreset misses `T*`.
    pub ratio_floor: f64,
}

fn mask_of(set: &[usize]) -> u32 {
    set.iter().fold(0u32, |m, &i| m | (1 << i))
}

/// Target set least likely to be touched by the sampler, and its indicator.
pub fn hard_target_for_sampler(
    n: usize,
    r: usize,
    ell: usize,
    coreset_probabilities: &CoresetDistribution,
) -> Result<HardTarget> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(format!(
            "n = {n} exceeds the enumeration limit {ENUMERATION_LIMIT}"
        )));
    }
    if ell == 0 {
        return Err(Error::InvalidArgument("target size ℓ must be at least 1".into()));
    }
    if r >= n || ell > n - r {
        return Err(Error::InvalidArgument(format!(
            "need r < n and ℓ ≤ n − r (n = {n}, r = {r}, ℓ = {ell})"
        )));
    }
    let mut mass = 0.0;
    let mut coresets = Vec::with_capacity(coreset_probabilities.len());
    for (set, &p) in coreset_probabilities {
        if set.len() != r {
            return Err(Error::InvalidArgument(format!(
                "coreset {set:?} does not have size {r}"
            )));
        }
        validate_index_set(set, n)?;
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid probability {p}")));
        }
        mass += p;
        coresets.push((mask_of(set), p));
    }
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "coreset probabilities sum to {mass}, expected 1"
        )));
    }

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut total_hit_mass = 0.0;
    for target in (0..n).combinations(ell) {
        let t = mask_of(&target);
        let hit: f64 = coresets
            .iter()
            .filter(|(c, _)| c & t != 0)
            .map(|(_, p)| p)
            .sum();
        total_hit_mass += hit;
        if best.as_ref().is_none_or(|(_, h)| hit < *h) {
            best = Some((target, hit));
        }
    }
    let (t_star, hit_probability) = best.expect("at least one target set");
    let mut b = Vector::zeros(n);
    let level = 1.0 / (ell as f64).sqrt();
    for &i in &t_star {
        b[i] = level;
    }
    let exact_bound = miss_probability_bound(n, r, ell)?;
    Ok(HardTarget {
        t_star,
        b,
        success_probability_lower_bound: exact_bound.to_f64().unwrap_or(f64::NAN),
        exact_bound,
        hit_probability,
        total_hit_mass,
        ratio_floor: n as f64 / (n - ell) as f64,
    })
}

/// Fraction of `draws` uniform size-`r` coresets that miss `target`.
pub fn uniform_miss_frequency<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    target: &[usize],
    draws: usize,
    rng: &mut R,
) -> f64 {
    let mut in_target = vec![false; n];
    for &i in target {
        in_target[i] = true;
    }
    let misses = (0..draws)
        .filter(|_| {
            rand::seq::index::sample(rng, n, r)
                .iter()
                .all(|i| !in_target[i])
        })
        .count();
    misses as f64 / draws as f64
}

/// Two data points `(1, 1)` and `(−1, 1)`: the best fit is `x = 0`, yet every
/// single-point coreset moves it.
pub fn two_point_instance() -> RegressionInstance {
    RegressionInstance::new(
        Matrix::from_column_slice(2, 1, &[1.0, -1.0]),
        Vector::from_vec(vec![1.0, 1.0]),
    )
    .expect("two-point instance is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_deviation;
    use crate::solvers::solve_full;
    use crate::sparsify::Pick;

    #[test]
    fn completion_is_orthonormal() {
        for (n, d) in [(4, 1), (6, 3), (10, 10)] {
            let a = constant_first_orthonormal(n, d).unwrap();
            assert!(orthonormality_deviation(&a) < 1e-8);
            let c = 1.0 / (n as f64).sqrt();
            assert!(a.column(0).iter().all(|v| (v - c).abs() < 1e-12));
        }
        assert!(constant_first_orthonormal(3, 4).is_err());
    }

    #[test]
    fn hard_target_n4() {
        let inst = hard_instance_for_coreset(4, 2, &[0, 1]).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(inst.b.as_slice(), &[0.0, 0.0, h, h]);
        assert!((inst.b.norm() - 1.0).abs() < 1e-10);
        assert!(orthonormality_deviation(&inst.a) < 1e-8);
    }

    #[test]
    fn hard_target_n2() {
        let inst = hard_instance_for_coreset(2, 1, &[0]).unwrap();
        assert_eq!(inst.b.as_slice(), &[0.0, 1.0]);
        let op = CoresetOperator::from_rows(&[0], 2).unwrap();
        let reg = RegressionInstance::new(inst.a.clone(), inst.b.clone()).unwrap();
        let x = solve_on_coreset(&op, &reg, &ConstraintDomain::Unconstrained).unwrap();
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn hard_instance_rejects_bad_sets() {
        assert!(hard_instance_for_coreset(3, 1, &[0, 1, 2]).is_err());
        assert!(hard_instance_for_coreset(5, 1, &[0, 0]).is_err());
        assert!(hard_instance_for_coreset(5, 1, &[7]).is_err());
    }

    #[test]
    fn hard_instance_ratio_n10() {
        let inst = hard_instance_for_coreset(10, 2, &[1, 3, 5, 7, 9]).unwrap();
        assert!(coreset_ratio(&inst).unwrap() >= 2.0 - 1e-9);
    }

    #[test]
    fn sampled_target_zero_under_any_weights() {
        let inst = hard_instance_for_coreset(8, 3, &[2, 5, 6]).unwrap();
        let reg = RegressionInstance::new(inst.a.clone(), inst.b.clone()).unwrap();
        for w in [0.1, 1.0, 7.5] {
            let op = CoresetOperator::new(
                vec![
                    Pick { row: 2, scale: w },
                    Pick { row: 5, scale: 2.0 * w },
                    Pick { row: 6, scale: 0.3 },
                ],
                8,
            )
            .unwrap();
            assert!(op.apply_vector(&inst.b).unwrap().iter().all(|v| *v == 0.0));
            let x = solve_on_coreset(&op, &reg, &ConstraintDomain::Unconstrained).unwrap();
            assert!(x.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn exhaustive_small_sweeps() {
        let sweep = verify_theorem7(6, 2, 3).unwrap();
        assert_eq!(sweep.coresets_checked, 20);
        assert!(sweep.worst_ratio >= 2.0 - 1e-6);
        let sweep = verify_theorem7(8, 2, 7).unwrap();
        assert!(sweep.worst_ratio >= 8.0 / 7.0 - 1e-6);
        assert!(verify_theorem7(17, 2, 3).is_err());
    }

    #[test]
    fn one_column_matches_algebra() {
        // d = 1: A = 1/√n, residual of b is 1 − (Σb)²/n = 1 − (n−r)/n = r/n, ratio n/r exactly.
        let sweep = verify_theorem7(4, 1, 2).unwrap();
        assert_eq!(sweep.coresets_checked, 6);
        assert!((sweep.worst_ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), BigUint::from(15u32));
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(3, 5), BigUint::ZERO);
        assert_eq!(binomial(64, 32).to_string(), "1832624140942590534");
    }

    #[test]
    fn uniform_bound_n6() {
        let dist = uniform_coreset_distribution(6, 2).unwrap();
        let target = hard_target_for_sampler(6, 2, 2, &dist).unwrap();
        assert_eq!(
            target.exact_bound,
            BigRational::new(BigInt::from(2), BigInt::from(5))
        );
        assert_eq!(target.success_probability_lower_bound, 0.4);
        assert!(1.0 - target.hit_probability >= 0.4 - 1e-12);
        assert!((target.b.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_target_rejected() {
        let dist = uniform_coreset_distribution(6, 2).unwrap();
        assert!(hard_target_for_sampler(6, 2, 0, &dist).is_err());
        assert!(hard_target_for_sampler(6, 2, 5, &dist).is_err());
    }

    #[test]
    fn counting_identity_for_skewed_sampler() {
        let (n, r, ell) = (7, 3, 2);
        let sets: Vec<Vec<usize>> = (0..n).combinations(r).collect();
        let raw: Vec<f64> = (0..sets.len()).map(|i| ((i * 37) % 11 + 1) as f64).collect();
        let total: f64 = raw.iter().sum();
        let dist: CoresetDistribution = sets.into_iter().zip(raw.iter().map(|w| w / total)).collect();
        let target = hard_target_for_sampler(n, r, ell, &dist).unwrap();
        let expected = binomial(n, ell).to_f64().unwrap() - binomial(n - r, ell).to_f64().unwrap();
        assert!((target.total_hit_mass - expected).abs() < 1e-9);
        assert!(1.0 - target.hit_probability >= target.success_probability_lower_bound - 1e-12);
    }

    #[test]
    fn missed_target_forces_ratio_floor() {
        let (n, ell) = (8, 2);
        let a = constant_first_orthonormal(n, 2).unwrap();
        let dist = uniform_coreset_distribution(n, 3).unwrap();
        let target = hard_target_for_sampler(n, 3, ell, &dist).unwrap();
        let reg = RegressionInstance::new(a, target.b.clone()).unwrap();
        let missing: Vec<usize> = (0..n).filter(|i| !target.t_star.contains(i)).take(3).collect();
        let op = CoresetOperator::from_rows(&missing, n).unwrap();
        let x_tilde = solve_on_coreset(&op, &reg, &ConstraintDomain::Unconstrained).unwrap();
        let x_opt = solve_full(&reg, &ConstraintDomain::Unconstrained).unwrap();
        let ratio = (&reg.a * x_tilde - &reg.b).norm_squared() / (&reg.a * x_opt - &reg.b).norm_squared();
        assert!(ratio >= target.ratio_floor - 1e-9);
    }

    #[test]
    fn monte_carlo_miss_rate() {
        let (n, r, ell) = (8, 3, 2);
        let dist = uniform_coreset_distribution(n, r).unwrap();
        let target = hard_target_for_sampler(n, r, ell, &dist).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let freq = uniform_miss_frequency(n, r, &target.t_star, 100_000, &mut rng);
        let exact = 10.0 / 28.0;
        assert!((target.success_probability_lower_bound - exact).abs() < 1e-15);
        assert!(freq >= 0.99 * exact);
    }

    #[test]
    fn two_point_example() {
        let inst = two_point_instance();
        let x_opt = solve_full(&inst, &ConstraintDomain::Unconstrained).unwrap();
        assert!(x_opt[0].abs() < 1e-15);
        assert!(((&inst.a * &x_opt - &inst.b).norm_squared() - 2.0).abs() < 1e-14);
        for (row, expected) in [(0usize, 1.0), (1, -1.0)] {
            for w in [0.5, 1.0, 3.0] {
                let op = CoresetOperator::new(vec![Pick { row, scale: w }], 2).unwrap();
                let x = solve_on_coreset(&op, &inst, &ConstraintDomain::Unconstrained).unwrap();
                assert!((x[0] - expected).abs() < 1e-14);
                assert!(((&inst.a * &x - &inst.b).norm_squared() - 4.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn first_order_miss_asymptotics() {
        // C(n−r, ℓ)/C(n, ℓ) ≈ exp(−rℓ/n) for r, ℓ = O(√n).
        let n = 2000usize;
        let mut exact_vals = Vec::new();
        for (r, ell) in [(10usize, 10usize), (30, 20), (45, 45)] {
            let ratio = (binomial(n - r, ell).to_f64().unwrap()) / binomial(n, ell).to_f64().unwrap();
            let first_order = (-((r * ell) as f64) / n as f64).exp();
            assert!((ratio - first_order).abs() <= 0.05 * first_order, "r={r} ℓ={ell}");
            exact_vals.push(ratio);
        }
        assert!(exact_vals.windows(2).all(|w| w[1] < w[0]));
    }
}
