//! Pinned numeric values for the bound calculus, frozen from an independent
//! implementation of the same formulas. Every literal here was computed
//! outside this crate before the Rust code existed; these tests keep the
//! evaluators honest against silent formula drift.

use approx::assert_relative_eq;
use ermine_core::bounds::{
    corollary_b2a1_probability, derive_constants, expectation_bound, theorem_bound,
    theorem_bound_split, BoundQuery, BoundsError, ConcentrationParams, RateFn,
};
use ermine_core::orlicz::{
    matrix_bernstein_tail, mcdiarmid_extended_bound, sub_gamma_quantile, SubGammaParams,
};

fn params(beta: f64, alpha: f64, tau: f64, psi1_a: f64, diam_s: f64) -> ConcentrationParams {
    ConcentrationParams {
        beta,
        alpha,
        tau,
        j0: f64::INFINITY,
        psi1_a,
        diam_s,
        eta: RateFn::Zero,
        kappa: RateFn::Zero,
        iota: RateFn::Zero,
    }
}

#[test]
fn quadratic_growth_constants_are_pinned() {
    let p = params(2.0, 1.0, 1.0, 1.0, 1.0);
    let dc = derive_constants(&p).unwrap();
    assert_eq!(dc.q, 1.0);
    assert_eq!(dc.qq, 1.0);
    assert_eq!(dc.s, 1.0);
    assert_eq!(dc.l, 1.0);
    assert_eq!(dc.c1, 64.0);
    assert_eq!(dc.c2, 8.0);
    assert_eq!(dc.k, 36.0);

    // Shrinking the minimizer set to a point drops K to 4·c₂.
    let dc0 = derive_constants(&params(2.0, 1.0, 1.0, 1.0, 0.0)).unwrap();
    assert_eq!(dc0.k, 32.0);
}

#[test]
fn fractional_growth_constants_are_pinned() {
    let p = params(1.5, 1.0, 1.0, 1.0, 1.0);
    let dc = derive_constants(&p).unwrap();
    assert_eq!(dc.q, 0.5);
    assert_eq!(dc.qq, 1.0);
    assert_eq!(dc.s, 1.0);
    assert_relative_eq!(dc.c1, 1728.0, max_relative = 1e-12);
    assert_relative_eq!(dc.c2, 128.0, max_relative = 1e-12);
    assert_relative_eq!(dc.k, 516.0, max_relative = 1e-12);
}

#[test]
fn master_bound_values_are_pinned() {
    let p = params(2.0, 1.0, 1.0, 1.0, 0.0);
    let dc = derive_constants(&p).unwrap();
    let query = BoundQuery::new(100, (-1.0_f64).exp(), 0.0).unwrap();
    let v = theorem_bound(&p, &dc, &query).unwrap();
    assert_relative_eq!(v, 1.941_678_367_952_799_1, max_relative = 1e-12);

    let p = params(1.5, 1.0, 1.0, 1.0, 1.0);
    let dc = derive_constants(&p).unwrap();
    let query = BoundQuery::new(10_000, 0.05, 1e-6).unwrap();
    let v = theorem_bound(&p, &dc, &query).unwrap();
    assert_relative_eq!(v, 3.304_229_178_885_699, max_relative = 1e-12);
}

#[test]
fn split_terms_recombine_to_the_bound() {
    let p = params(1.5, 1.0, 2.0, 3.0, 1.0);
    let dc = derive_constants(&p).unwrap();
    let query = BoundQuery::new(777, 0.01, 1e-3).unwrap();
    let split = theorem_bound_split(&p, &dc, &query).unwrap();
    assert!(split.sampling_term > 0.0 && split.deterioration_term > 0.0);
    let direct = theorem_bound(&p, &dc, &query).unwrap();
    assert_relative_eq!(
        (split.sampling_term + split.deterioration_term).powf(1.0 / split.q),
        direct,
        max_relative = 1e-15
    );
    // With p_n = 0 the deterioration term vanishes exactly.
    let clean = BoundQuery::new(777, 0.01, 0.0).unwrap();
    assert_eq!(
        theorem_bound_split(&p, &dc, &clean).unwrap().deterioration_term,
        0.0
    );
}

#[test]
fn corollary_values_are_pinned() {
    let v = corollary_b2a1_probability(1.0, 0.0, 100, (-1.0_f64).exp(), 0.0);
    assert_relative_eq!(v, 2.48, max_relative = 1e-12);

    let v = corollary_b2a1_probability(1.0, 1.0, 400, 0.05, 0.01);
    assert_relative_eq!(v, 6.904_213_607_822_315_5, max_relative = 1e-12);
}

#[test]
fn corollary_dominates_the_exact_constant_bound() {
    // The corollary rounds every constant upward (8 ≥ 2e on the noise term,
    // 14L + 2√(L·diam) ≥ C p-coefficient at β=2, α=1), so on its own regime
    // it can never dip below the exact-constant master bound.
    for (l, diam) in [(1.0, 0.0), (0.5, 2.0), (3.0, 1.0)] {
        let p = params(2.0, 1.0, 1.0, l, diam);
        let dc = derive_constants(&p).unwrap();
        for n in [10usize, 100, 1000, 100_000] {
            for delta in [0.3, 0.05, 0.001] {
                for p_n in [0.0, 1e-4, 0.01] {
                    let query = BoundQuery::new(n, delta, p_n).unwrap();
                    let exact = theorem_bound(&p, &dc, &query).unwrap();
                    let rounded = corollary_b2a1_probability(l, diam, n, delta, p_n);
                    assert!(
                        rounded >= exact * (1.0 - 1e-12),
                        "corollary {rounded} < exact {exact} at n={n}, δ={delta}, p={p_n}"
                    );
                }
            }
        }
    }
}

#[test]
fn expectation_values_are_pinned() {
    let p = params(2.0, 1.0, 1.0, 1.0, 0.0);
    let dc = derive_constants(&p).unwrap();
    assert_relative_eq!(expectation_bound(&p, &dc, 100, 0.0), 0.64, max_relative = 1e-12);

    let p = params(2.0, 1.0, 1.0, 3.0, 2.0);
    let dc = derive_constants(&p).unwrap();
    let v = expectation_bound(&p, &dc, 50, 0.04);
    assert_relative_eq!(v, 73.92, max_relative = 1e-12);
    // Closed β=2/α=1 form of the same quantity: 2⁶L²/n + 4(L·diam + 8L²)√p.
    let l = 3.0_f64;
    let closed = 64.0 * l * l / 50.0 + 4.0 * (l * 2.0 + 8.0 * l * l) * 0.04_f64.sqrt();
    assert_relative_eq!(v, closed, max_relative = 1e-12);
}

#[test]
fn deviation_bound_values_are_pinned() {
    let v = mcdiarmid_extended_bound(100, 0.01, 0.01, 0.05).unwrap();
    assert_relative_eq!(v, 1.422_402_877_579_434_4, max_relative = 1e-12);

    // p = 0 collapses to the unconditional e·ψ₁(2√(n·ln(1/δ)) + ln(1/δ)).
    let v = mcdiarmid_extended_bound(50, 0.02, 0.0, (-1.0_f64).exp()).unwrap();
    assert_relative_eq!(v, 0.823_211_842_201_004_3, max_relative = 1e-12);
}

#[test]
fn sub_gamma_quantiles_are_pinned() {
    let g = SubGammaParams::new(1.0, 0.0).unwrap();
    let q = sub_gamma_quantile(&g, (-1.0_f64).exp()).unwrap();
    assert_relative_eq!(q, 2.0_f64.sqrt(), max_relative = 1e-12);

    let g = SubGammaParams::new(0.0, 3.0).unwrap();
    let q = sub_gamma_quantile(&g, (-2.0_f64).exp()).unwrap();
    assert_relative_eq!(q, 6.0, max_relative = 1e-12);
}

#[test]
fn matrix_deviation_tail_is_pinned() {
    let v = matrix_bernstein_tail(1, 100, 1.0, 1.0);
    assert_relative_eq!(v, 0.007_105_394_532_851_446, max_relative = 1e-12);
    // The same exponent drives the LASSO deterioration rates.
    assert_relative_eq!(v.ln(), -4.946_900_990_072_36, max_relative = 1e-12);
    // Small n clamps at the trivial tail.
    assert_eq!(matrix_bernstein_tail(5, 1, 1.0, 0.01), 1.0);
}

#[test]
fn bound_is_monotone_where_the_theory_says_so() {
    let p = params(2.0, 1.0, 1.0, 2.0, 1.0);
    let dc = derive_constants(&p).unwrap();
    let at = |n: usize, delta: f64, p_n: f64| {
        theorem_bound(&p, &dc, &BoundQuery::new(n, delta, p_n).unwrap()).unwrap()
    };
    // Decreasing in n, increasing as δ shrinks, increasing in p_n.
    assert!(at(100, 0.1, 0.0) > at(1_000, 0.1, 0.0));
    assert!(at(1_000, 0.1, 0.0) > at(100_000, 0.1, 0.0));
    assert!(at(1_000, 0.01, 0.0) > at(1_000, 0.1, 0.0));
    assert!(at(1_000, 0.1, 0.01) > at(1_000, 0.1, 0.0));
}

#[test]
fn out_of_regime_parameters_are_rejected() {
    let dc_ok = derive_constants(&params(2.0, 1.0, 1.0, 1.0, 0.0)).unwrap();

    assert_eq!(
        derive_constants(&params(1.0, 1.0, 1.0, 1.0, 0.0)).unwrap_err(),
        BoundsError::BetaEqualsAlpha
    );
    assert_eq!(
        derive_constants(&params(3.5, 1.0, 1.0, 1.0, 0.0)).unwrap_err(),
        BoundsError::RegimeViolated
    );
    assert_eq!(
        derive_constants(&params(2.0, 1.0, 0.0, 1.0, 0.0)).unwrap_err(),
        BoundsError::InvalidTau
    );

    assert_eq!(
        BoundQuery::new(0, 0.1, 0.0).unwrap_err(),
        BoundsError::InvalidParams
    );
    assert_eq!(
        BoundQuery::new(10, 0.0, 0.0).unwrap_err(),
        BoundsError::InvalidDelta
    );
    assert_eq!(
        BoundQuery::new(10, 1.0, 0.0).unwrap_err(),
        BoundsError::InvalidDelta
    );
    assert_eq!(
        BoundQuery::new(10, 0.1, 0.8).unwrap_err(),
        BoundsError::PnTooLarge
    );
    assert_eq!(
        BoundQuery::new(10, 0.1, f64::NAN).unwrap_err(),
        BoundsError::PnTooLarge
    );

    // β = α and regime violations surface through the split evaluator too.
    let bad = params(1.0, 1.0, 1.0, 1.0, 0.0);
    let query = BoundQuery::new(10, 0.1, 0.0).unwrap();
    assert_eq!(
        theorem_bound_split(&bad, &dc_ok, &query).unwrap_err(),
        BoundsError::BetaEqualsAlpha
    );
}

#[test]
fn confidence_accounts_for_both_failure_sources() {
    let q = BoundQuery::new(100, 0.05, 0.02).unwrap();
    assert_relative_eq!(q.confidence(), 0.93, max_relative = 1e-12);
    let q = BoundQuery::new(100, 0.5, 0.75).unwrap();
    assert_eq!(q.confidence(), 0.0);
}
