//! Hoffman-constant machinery: exact subset-enumeration Hoffman constants,
//! the LASSO certificate matrix C(A, λ), the Łojasiewicz (τ) lower bound it
//! yields, and the closed-form deterioration rates for the LASSO problem.
//!
//! The Hoffman constant of a matrix C is
//!
//!   H(C) = max over row subsets I with C_I full row rank of 1/σ_{|I|}(C_I),
//!
//! where σ_{|I|} is the smallest singular value of the submatrix. There is
//! no known polynomial algorithm; exactness matters here because H feeds a
//! lower bound on the curvature constant τ, so the max is taken by explicit
//! enumeration of all row subsets (capped at 22 rows).

use alloc::vec::Vec;
use core::f64::consts::E;
use core::fmt;

use nalgebra::DMatrix;

use crate::bounds::RateFn;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// Enumeration cap: 2²² subsets of tiny matrices is the largest job worth
/// doing exactly.
pub const MAX_ROWS: usize = 22;

/// Relative singular-value threshold for the full-row-rank decision.
const RANK_RTOL: f64 = 1e-10;

const SQRT2: f64 = core::f64::consts::SQRT_2;

/// Result of an exact Hoffman-constant computation.
#[derive(Debug, Clone, PartialEq)]
pub struct HoffmanResult {
    pub h: f64,
    /// Row indices of a subset achieving the max (lexicographically smallest
    /// among ties).
    pub witness_subset: Vec<usize>,
    /// Number of subsets whose submatrix was actually factorized (subsets
    /// with more rows than columns cannot have full row rank and are
    /// skipped without a factorization).
    pub n_subsets_checked: usize,
}

/// The certificate matrix C(A, λ) whose Hoffman constant lower-bounds the
/// LASSO curvature. Rows, in order: the 2^q sign vectors (±1,…,±1)
/// augmented with −1, a zero row with trailing 1, the design matrix A padded
/// with a zero column, and a zero row with trailing λ.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoCertificate {
    pub matrix: DMatrix<f64>,
    pub q: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoffmanError {
    /// More rows than the enumeration cap.
    EnumerationTooLarge,
    /// No row subset has full row rank (the matrix is all zeros).
    NoFullRankSubset,
    /// The certificate would exceed the enumeration cap (design dimension > 4).
    CertificateTooLarge,
    /// A parameter was out of range.
    InvalidParams,
}

impl fmt::Display for HoffmanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HoffmanError::EnumerationTooLarge => write!(f, "enumeration too large"),
            HoffmanError::NoFullRankSubset => write!(f, "no full-row-rank subset"),
            HoffmanError::CertificateTooLarge => {
                write!(f, "certificate design dimension exceeds 4")
            }
            HoffmanError::InvalidParams => write!(f, "parameter out of range"),
        }
    }
}

impl core::error::Error for HoffmanError {}

/// Exact Hoffman constant by enumeration of all nonempty row subsets.
///
/// A subset counts as full row rank when its smallest singular value exceeds
/// 1e-10 times its largest. Ties in the max keep the lexicographically
/// smallest witness, so the result is independent of enumeration order.
pub fn hoffman_constant(c: &DMatrix<f64>) -> Result<HoffmanResult, HoffmanError> {
    let rows = c.nrows();
    let cols = c.ncols();
    if rows == 0 || cols == 0 {
        return Err(HoffmanError::NoFullRankSubset);
    }
    if rows > MAX_ROWS {
        return Err(HoffmanError::EnumerationTooLarge);
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut checked = 0usize;
    for mask in 1u32..(1u32 << rows) {
        if (mask.count_ones() as usize) > cols {
            continue;
        }
        let subset: Vec<usize> = (0..rows).filter(|i| mask >> i & 1 == 1).collect();
        let sub = c.select_rows(subset.iter());
        checked += 1;
        let sv = sub.singular_values();
        let smax = sv.iter().fold(0.0_f64, |m, &v| m.max(v));
        let smin = sv.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if !(smax > 0.0) || smin <= RANK_RTOL * smax {
            continue;
        }
        let candidate = 1.0 / smin;
        let better = match &best {
            None => true,
            Some((b, w)) => candidate > *b || (candidate == *b && subset < *w),
        };
        if better {
            best = Some((candidate, subset));
        }
    }
    best.map(|(h, witness_subset)| HoffmanResult {
        h,
        witness_subset,
        n_subsets_checked: checked,
    })
    .ok_or(HoffmanError::NoFullRankSubset)
}

/// Assembles the LASSO certificate matrix C(A, λ) of shape
/// (2^q + 1 + p + 1) × (q + 1) from the p×q design matrix A.
///
/// The sign block enumerates masks 0..2^q with bit j set meaning coordinate
/// j is −1, so q = 1 produces rows (1, −1) then (−1, −1).
pub fn build_lasso_certificate(
    a: &DMatrix<f64>,
    lambda: f64,
) -> Result<LassoCertificate, HoffmanError> {
    let q = a.ncols();
    let p = a.nrows();
    if q == 0 {
        return Err(HoffmanError::InvalidParams);
    }
    if q > 4 {
        return Err(HoffmanError::CertificateTooLarge);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(HoffmanError::InvalidParams);
    }
    let sign_rows = 1usize << q;
    let rows = sign_rows + 1 + p + 1;
    let mut m = DMatrix::zeros(rows, q + 1);
    for mask in 0..sign_rows {
        for j in 0..q {
            m[(mask, j)] = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
        }
        m[(mask, q)] = -1.0;
    }
    m[(sign_rows, q)] = 1.0;
    for i in 0..p {
        for j in 0..q {
            m[(sign_rows + 1 + i, j)] = a[(i, j)];
        }
    }
    m[(rows - 1, q)] = lambda;
    Ok(LassoCertificate {
        matrix: m,
        q,
        lambda,
    })
}

/// Curvature lower bound from the certificate's Hoffman constant:
///
///   τ ≥ 1 / (4H² [1 + λR + (R‖A‖ + √E[V²])(4R‖A‖ + √E[V²])]).
pub fn lasso_tau_lower_bound(h: f64, lambda: f64, r: f64, norm_a: f64, ev2: f64) -> f64 {
    debug_assert!(h > 0.0 && lambda > 0.0 && r > 0.0 && norm_a > 0.0 && ev2 > 0.0);
    let root = ev2.sqrt();
    1.0 / (4.0 * h * h * (1.0 + lambda * r + (r * norm_a + root) * (4.0 * r * norm_a + root)))
}

/// Closed-form deterioration rates for the LASSO problem: η(n) = 2e^{−c₁n}
/// controls the event that the empirical second moment of V stays within a
/// factor of its mean, and κ(n) = m·e^{−c₂n} controls the design-matrix
/// events, with
///
///   c₁ = ‖V‖₂⁴ / (2(e²‖V‖_{ψ2}⁴ + e‖V‖_{ψ2}²‖V‖₂²)),
///   c₂ = min of the analogous exponent at deviation (√2−1)‖V‖₂² and the
///        covariance-matrix exponent at c = min((√2−1)/(√2 H²), (√2−1)‖Cov_θ‖).
pub fn lasso_assumption_rates(
    psi2_theta: f64,
    psi2_v: f64,
    l2_v: f64,
    m: usize,
    h: f64,
    cov_norm: f64,
) -> (RateFn, RateFn) {
    debug_assert!(
        psi2_theta > 0.0 && psi2_v > 0.0 && l2_v > 0.0 && m >= 1 && h > 0.0 && cov_norm > 0.0
    );
    let v2 = l2_v * l2_v;
    let pv2 = psi2_v * psi2_v;
    let c1 = v2 * v2 / (2.0 * (E * E * pv2 * pv2 + E * pv2 * v2));
    let dev = (SQRT2 - 1.0) * v2;
    let exp1 = dev * dev / (2.0 * (E * E * pv2 * pv2 + E * pv2 * dev));
    let c = ((SQRT2 - 1.0) / (SQRT2 * h * h)).min((SQRT2 - 1.0) * cov_norm);
    let mf = m as f64;
    let pt2 = psi2_theta * psi2_theta;
    let exp2 = c * c / (2.0 * (E * E * mf * mf * pt2 * pt2 + E * mf * pt2 * c));
    (
        RateFn::ExpDecay {
            coeff: 2.0,
            rate: c1,
        },
        RateFn::ExpDecay {
            coeff: mf,
            rate: exp1.min(exp2),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: usize, cols: usize, entries: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, entries)
    }

    #[test]
    fn identity_and_diagonal_constants() {
        let r = hoffman_constant(&DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(r.h, 1.0, max_relative = 1e-12);
        assert_eq!(r.witness_subset, alloc::vec![0]);
        assert_eq!(r.n_subsets_checked, 3);

        let r = hoffman_constant(&mat(2, 2, &[2.0, 0.0, 0.0, 0.5])).unwrap();
        assert_relative_eq!(r.h, 2.0, max_relative = 1e-12);
        // {1} and {0,1} tie at 1/0.5; the lexicographic rule keeps {0,1}.
        assert_eq!(r.witness_subset, alloc::vec![0, 1]);

        let r = hoffman_constant(&mat(1, 1, &[-4.0])).unwrap();
        assert_relative_eq!(r.h, 0.25, max_relative = 1e-12);
        assert_eq!(r.n_subsets_checked, 1);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert_eq!(
            hoffman_constant(&DMatrix::zeros(3, 2)).unwrap_err(),
            HoffmanError::NoFullRankSubset
        );
        assert_eq!(
            hoffman_constant(&DMatrix::zeros(23, 2)).unwrap_err(),
            HoffmanError::EnumerationTooLarge
        );
    }

    #[test]
    fn scaling_and_permutation_invariance() {
        let c = mat(3, 2, &[1.0, 2.0, 3.0, -1.0, 0.5, 0.5]);
        let base = hoffman_constant(&c).unwrap();
        let doubled = hoffman_constant(&c.scale(2.0)).unwrap();
        assert_relative_eq!(doubled.h * 2.0, base.h, max_relative = 1e-12);
        let permuted = c.select_rows([2usize, 0, 1].iter());
        assert_relative_eq!(
            hoffman_constant(&permuted).unwrap().h,
            base.h,
            max_relative = 1e-12
        );
    }

    #[test]
    fn duplicate_rows_never_decrease_the_constant() {
        let c = mat(2, 2, &[1.0, 2.0, 3.0, -1.0]);
        let base = hoffman_constant(&c).unwrap();
        let mut stacked = DMatrix::zeros(3, 2);
        stacked.rows_mut(0, 2).copy_from(&c);
        stacked.row_mut(2).copy_from(&c.row(0));
        assert!(hoffman_constant(&stacked).unwrap().h >= base.h - 1e-12);
    }

    #[test]
    fn certificate_layout_matches_the_displayed_block_matrix() {
        let cert = build_lasso_certificate(&mat(1, 1, &[1.0]), 1.0).unwrap();
        let expected = mat(
            5,
            2,
            &[1.0, -1.0, -1.0, -1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0],
        );
        assert_eq!(cert.matrix, expected);

        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let cert = build_lasso_certificate(&a, 0.5).unwrap();
        assert_eq!(cert.matrix.nrows(), 9);
        assert_eq!(cert.matrix.ncols(), 3);
        // The sign block holds all four distinct ±1 vectors.
        let mut seen = alloc::vec::Vec::new();
        for i in 0..4 {
            let signs = (cert.matrix[(i, 0)], cert.matrix[(i, 1)]);
            assert!(!seen.contains(&signs));
            assert_eq!(cert.matrix[(i, 2)], -1.0);
            seen.push(signs);
        }
        assert_eq!(cert.matrix[(8, 2)], 0.5);

        assert_eq!(
            build_lasso_certificate(&DMatrix::zeros(1, 5), 1.0).unwrap_err(),
            HoffmanError::CertificateTooLarge
        );
        assert_eq!(
            build_lasso_certificate(&mat(1, 1, &[1.0]), 0.0).unwrap_err(),
            HoffmanError::InvalidParams
        );
    }

    #[test]
    fn certificate_constant_for_the_scalar_design() {
        // q=1, p=1, A=[1], λ=1: the exact Hoffman constant is the golden
        // ratio, achieved by the subset {(1,−1), (0,1)}-type pairs.
        let cert = build_lasso_certificate(&mat(1, 1, &[1.0]), 1.0).unwrap();
        let r = hoffman_constant(&cert.matrix).unwrap();
        assert_relative_eq!(r.h, 1.618033988749895, max_relative = 1e-12);
    }

    #[test]
    fn tau_lower_bound_pinned_value_and_scaling() {
        assert_relative_eq!(
            lasso_tau_lower_bound(1.0, 1.0, 1.0, 1.0, 1.0),
            1.0 / 48.0,
            max_relative = 1e-14
        );
        let b1 = lasso_tau_lower_bound(1.0, 0.3, 2.0, 1.5, 4.0);
        let b2 = lasso_tau_lower_bound(2.0, 0.3, 2.0, 1.5, 4.0);
        assert_relative_eq!(b2 * 4.0, b1, max_relative = 1e-14);
    }

    #[test]
    fn assumption_rates_pinned_values() {
        let (eta, kappa) = lasso_assumption_rates(1.0, 1.0, 1.0, 3, 2.0, 1.0);
        match eta {
            RateFn::ExpDecay { coeff, rate } => {
                assert_eq!(coeff, 2.0);
                assert_relative_eq!(rate, 0.0494690099007236, max_relative = 1e-12);
                assert_relative_eq!(rate, 1.0 / (2.0 * (E * E + E)), max_relative = 1e-14);
            }
            _ => panic!("eta should be a closed-form exponential"),
        }
        match kappa {
            RateFn::ExpDecay { coeff, rate } => {
                assert_eq!(coeff, 3.0);
                assert_relative_eq!(rate, 3.995351605207118e-5, max_relative = 1e-12);
            }
            _ => panic!("kappa should be a closed-form exponential"),
        }
        // At n = 0 the raw values are 2 and m; RateFn::eval clamps to 1.
        assert_eq!(eta.eval(0), 1.0);
        assert!(eta.eval(100) < eta.eval(50));
    }
}
