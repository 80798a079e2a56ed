//! The bound calculus: from problem-level concentration parameters, derive
//! the theorem constants and evaluate the master concentration bound, its
//! β=2/α=1 corollary, and the expectation bound.
//!
//! The master bound controls the set-to-set divergence ϑ(Ŝ;S) of empirical
//! minimizers Ŝ from population minimizers S. With q = min(β−α, 1),
//! Q = max(β−α, 1) and s = min(1, 2/(β−α) − 1), it reads
//!
//!   ϑ(Ŝ;S)^q ≤ L^{1/Q}(c₁^{q/β} n^{−α/(βQ)}
//!              + 2^{1/Q} e (2√(n^{−s} log(1/δ)) + n^{−s} log(1/δ)))
//!              + C p_n^{q/(2β)},
//!   C = L^{1/Q}(K^{q/β} + 2^{2+1/Q} n^{1−1/Q}),
//!
//! with probability at least 1 − p_n − δ, valid for 0 < β − α < 2 and
//! p_n ≤ 3/4.

use alloc::vec::Vec;
use core::f64::consts::E;
use core::fmt;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// A deterioration rate n ↦ [0,1], one of η, κ, ι.
///
/// The per-problem lemmas give these in closed exponential form; tabulated
/// values cover everything else.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFn {
    /// Identically zero.
    Zero,
    /// coeff · exp(−rate · n), clamped to [0, 1].
    ExpDecay { coeff: f64, rate: f64 },
    /// Piecewise-constant table of (n, value) pairs sorted by n; evaluates
    /// to the value at the largest tabulated n ≤ query, and to 1 before the
    /// first entry (no information yet).
    Table(Vec<(usize, f64)>),
}

impl RateFn {
    pub fn eval(&self, n: usize) -> f64 {
        let v = match self {
            RateFn::Zero => 0.0,
            RateFn::ExpDecay { coeff, rate } => coeff * (-rate * n as f64).exp(),
            RateFn::Table(rows) => rows
                .iter()
                .take_while(|(m, _)| *m <= n)
                .last()
                .map_or(1.0, |&(_, v)| v),
        };
        v.clamp(0.0, 1.0)
    }
}

/// Everything the bound calculus needs to know about one estimation
/// problem: curvature (β, α, τ, J₀), the envelope ‖a‖_{ψ1}, the diameter of
/// the minimizer set, and the deterioration rates η, κ, ι.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationParams {
    pub beta: f64,
    pub alpha: f64,
    pub tau: f64,
    /// Level below which the curvature assumptions hold; +∞ when global.
    pub j0: f64,
    pub psi1_a: f64,
    pub diam_s: f64,
    pub eta: RateFn,
    pub kappa: RateFn,
    pub iota: RateFn,
}

impl ConcentrationParams {
    /// Total deterioration probability η(n) + κ(n) + ι(n), clamped to [0,1].
    pub fn p_n(&self, n: usize) -> f64 {
        (self.eta.eval(n) + self.kappa.eval(n) + self.iota.eval(n)).clamp(0.0, 1.0)
    }
}

/// Constants derived from [`ConcentrationParams`]: the exponents (q, Q, s)
/// and the multipliers (L, K, c₁, c₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub q: f64,
    pub qq: f64,
    pub s: f64,
    pub l: f64,
    pub k: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Where the master bound is evaluated: sample size, failure budget δ, and
/// the deterioration probability p_n at that sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    pub n: usize,
    pub delta: f64,
    pub p_n: f64,
}

impl BoundQuery {
    pub fn new(n: usize, delta: f64, p_n: f64) -> Result<Self, BoundsError> {
        if n == 0 {
            return Err(BoundsError::InvalidParams);
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(BoundsError::InvalidDelta);
        }
        if !(0.0..=0.75).contains(&p_n) {
            return Err(BoundsError::PnTooLarge);
        }
        Ok(Self { n, delta, p_n })
    }

    /// The probability with which the evaluated bound holds: 1 − p_n − δ.
    pub fn confidence(&self) -> f64 {
        (1.0 - self.p_n - self.delta).max(0.0)
    }
}

/// The bound on ϑ^q split into the sampling term and the deterioration
/// term C·p_n^{q/(2β)}, which can dominate when β − α > 1; reports show the
/// two separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremSplit {
    /// L^{1/Q}(c₁^{q/β} n^{−α/(βQ)} + 2^{1/Q}e(...)) on the ϑ^q scale.
    pub sampling_term: f64,
    /// C p_n^{q/(2β)} on the ϑ^q scale.
    pub deterioration_term: f64,
    /// Exponent q: the total bounds ϑ^q, so ϑ ≤ total^{1/q}.
    pub q: f64,
}

impl TheoremSplit {
    /// The bound on ϑ itself.
    pub fn on_distance_scale(&self) -> f64 {
        (self.sampling_term + self.deterioration_term).powf(1.0 / self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsError {
    /// β = α is explicitly left aside by the theory.
    BetaEqualsAlpha,
    /// β − α outside (0, 2).
    RegimeViolated,
    /// τ must be positive.
    InvalidTau,
    /// δ must lie in (0, 1).
    InvalidDelta,
    /// p_n must lie in [0, 3/4].
    PnTooLarge,
    /// Some other parameter out of range (n = 0, negative norms, ...).
    InvalidParams,
}

impl fmt::Display for BoundsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundsError::BetaEqualsAlpha => write!(f, "the case beta = alpha is not covered"),
            BoundsError::RegimeViolated => write!(f, "theorem regime violated"),
            BoundsError::InvalidTau => write!(f, "tau must be positive"),
            BoundsError::InvalidDelta => write!(f, "delta must lie in (0, 1)"),
            BoundsError::PnTooLarge => write!(f, "p_n must lie in [0, 3/4]"),
            BoundsError::InvalidParams => write!(f, "parameter out of range"),
        }
    }
}

impl core::error::Error for BoundsError {}

/// Derives (q, Q, s, L, K, c₁, c₂) from the problem parameters:
///
///   c₁ = (4β/(β−α))^{β/(β−α)},
///   c₂ = 2·max(4α/(β−α), 1)^{α/(β−α)},
///   K  = 2^{max(0,α−1)+2} (L^{−α/(β−α)} diam(S)^α + c₂),  L = τ⁻¹‖a‖_{ψ1}.
pub fn derive_constants(p: &ConcentrationParams) -> Result<DerivedConstants, BoundsError> {
    let gap = p.beta - p.alpha;
    if gap == 0.0 {
        return Err(BoundsError::BetaEqualsAlpha);
    }
    if !(gap > 0.0 && gap < 2.0) {
        return Err(BoundsError::RegimeViolated);
    }
    if !(p.tau > 0.0) {
        return Err(BoundsError::InvalidTau);
    }
    if !(p.psi1_a >= 0.0 && p.diam_s >= 0.0 && p.alpha > 0.0) {
        return Err(BoundsError::InvalidParams);
    }
    let l = p.psi1_a / p.tau;
    let c1 = (4.0 * p.beta / gap).powf(p.beta / gap);
    let c2 = 2.0 * (4.0 * p.alpha / gap).max(1.0).powf(p.alpha / gap);
    // 0 · L^{−…} is 0 even when L = 0 (the bound is vacuous there anyway).
    let diam_term = if p.diam_s == 0.0 {
        0.0
    } else {
        l.powf(-p.alpha / gap) * p.diam_s.powf(p.alpha)
    };
    let k = 2.0_f64.powf((p.alpha - 1.0).max(0.0) + 2.0) * (diam_term + c2);
    Ok(DerivedConstants {
        q: gap.min(1.0),
        qq: gap.max(1.0),
        s: (2.0 / gap - 1.0).min(1.0),
        l,
        k,
        c1,
        c2,
    })
}

/// Evaluates the master bound on the ϑ^q scale, split into its sampling and
/// deterioration terms. Holds with probability ≥ `query.confidence()`.
///
/// The constant 2^{1/Q}e is kept exact here; the β=2/α=1 corollary evaluator
/// uses the rounded constants, so the corollary is always ≥ this value.
pub fn theorem_bound_split(
    p: &ConcentrationParams,
    dc: &DerivedConstants,
    query: &BoundQuery,
) -> Result<TheoremSplit, BoundsError> {
    let gap = p.beta - p.alpha;
    if gap == 0.0 {
        return Err(BoundsError::BetaEqualsAlpha);
    }
    if !(gap > 0.0 && gap < 2.0) {
        return Err(BoundsError::RegimeViolated);
    }
    if !(query.delta > 0.0 && query.delta < 1.0) {
        return Err(BoundsError::InvalidDelta);
    }
    if !(query.p_n >= 0.0 && query.p_n <= 0.75) {
        return Err(BoundsError::PnTooLarge);
    }
    let n = query.n as f64;
    let lg = (1.0 / query.delta).ln();
    let l_factor = dc.l.powf(1.0 / dc.qq);
    let rate_term = dc.c1.powf(dc.q / p.beta) * n.powf(-p.alpha / (p.beta * dc.qq));
    let ns = n.powf(-dc.s);
    let noise_term = 2.0_f64.powf(1.0 / dc.qq) * E * (2.0 * (ns * lg).sqrt() + ns * lg);
    let c = l_factor * (dc.k.powf(dc.q / p.beta) + 2.0_f64.powf(2.0 + 1.0 / dc.qq) * n.powf(1.0 - 1.0 / dc.qq));
    Ok(TheoremSplit {
        sampling_term: l_factor * (rate_term + noise_term),
        deterioration_term: c * query.p_n.powf(dc.q / (2.0 * p.beta)),
        q: dc.q,
    })
}

/// The master bound on the ϑ scale (q-th root of the ϑ^q bound), so that all
/// downstream comparisons are in distance units. Holds with probability
/// ≥ `query.confidence()`.
pub fn theorem_bound(
    p: &ConcentrationParams,
    dc: &DerivedConstants,
    query: &BoundQuery,
) -> Result<f64, BoundsError> {
    Ok(theorem_bound_split(p, dc, query)?.on_distance_scale())
}

/// The β=2, α=1 corollary with the rounded constants, directly on the ϑ
/// scale:
///
///   8L(n^{−1/2} + 2√(ln(1/δ)/n) + ln(1/δ)/n) + (14L + 2√(L diam(S))) p_n^{1/4}.
pub fn corollary_b2a1_probability(l: f64, diam_s: f64, n: usize, delta: f64, p_n: f64) -> f64 {
    debug_assert!(l >= 0.0 && diam_s >= 0.0 && n >= 1);
    debug_assert!(delta > 0.0 && delta <= 1.0);
    debug_assert!((0.0..=0.75).contains(&p_n));
    let nf = n as f64;
    let lg = (1.0 / delta).ln();
    8.0 * l * (nf.powf(-0.5) + 2.0 * (lg / nf).sqrt() + lg / nf)
        + (14.0 * l + 2.0 * (l * diam_s).sqrt()) * p_n.powf(0.25)
}

/// Expectation bound E[ϑ(Ŝ;S)^β | good event] ≤ L^{β/(β−α)}(c₁ n^{−α/(β−α)} + K√p_n).
///
/// With p_n = 0 the conditioning is void and this bounds the plain
/// expectation.
pub fn expectation_bound(
    p: &ConcentrationParams,
    dc: &DerivedConstants,
    n: usize,
    p_n: f64,
) -> f64 {
    debug_assert!(n >= 1 && (0.0..=0.75).contains(&p_n));
    let gap = p.beta - p.alpha;
    let nf = n as f64;
    dc.l.powf(p.beta / gap) * (dc.c1 * nf.powf(-p.alpha / gap) + dc.k * p_n.sqrt())
}
