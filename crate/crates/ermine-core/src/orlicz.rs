//! Concentration primitives: ψ_q Orlicz norms, sub-gamma tails, a matrix
//! Bernstein bound, and McDiarmid-type deviation bounds with a simulation
//! checker.
//!
//! The ψ_q norm of a random variable X is
//!
//!   ‖X‖_{ψq} = inf { c > 0 : E exp(|X/c|^q) ≤ 2 },
//!
//! with q=1 the sub-exponential and q=2 the sub-Gaussian scale. The
//! empirical version plugs the sample mean into the expectation and solves
//! for c by bisection; the map c ↦ mean exp(|x/c|^q) is strictly decreasing
//! and continuous, so bisection is exact.

use alloc::vec::Vec;
use core::f64::consts::E;
use core::fmt;

use rand_chacha::ChaCha12Rng;

use crate::space::RngSpec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

const LN_2: f64 = core::f64::consts::LN_2;

/// How a ψ-norm value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiMethod {
    /// Bisection on the plug-in empirical expectation.
    EmpiricalBisection,
    /// A closed form admitted by the generative family.
    ClosedForm,
}

/// A ψ_q norm estimate together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrliczEstimate {
    pub q: f64,
    pub value: f64,
    pub n_samples: usize,
    pub method: PsiMethod,
}

/// Sub-gamma tail parameters: variance factor σ² and scale M, so that
/// P(X > √(2σ²t) + Mt) ≤ e^{−t}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubGammaParams {
    pub variance_factor: f64,
    pub scale: f64,
}

impl SubGammaParams {
    pub fn new(variance_factor: f64, scale: f64) -> Result<Self, OrliczError> {
        if !(variance_factor.is_finite() && variance_factor >= 0.0)
            || !(scale.is_finite() && scale >= 0.0)
        {
            return Err(OrliczError::InvalidParams);
        }
        Ok(Self {
            variance_factor,
            scale,
        })
    }
}

/// Errors from the concentration primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrliczError {
    /// The sample list was empty.
    EmptySample,
    /// A sample was NaN or infinite.
    NonFiniteSample,
    /// The Orlicz order must satisfy q ≥ 1.
    InvalidOrder,
    /// δ must lie in (0, 1].
    InvalidDelta,
    /// A parameter was negative or non-finite.
    InvalidParams,
    /// The bad-set probability exceeded 3/4.
    OutsideTheoremRegime,
}

impl fmt::Display for OrliczError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrliczError::EmptySample => write!(f, "empty sample"),
            OrliczError::NonFiniteSample => write!(f, "non-finite sample"),
            OrliczError::InvalidOrder => write!(f, "Orlicz order must satisfy q >= 1"),
            OrliczError::InvalidDelta => write!(f, "delta must lie in (0, 1]"),
            OrliczError::InvalidParams => write!(f, "parameters must be finite and nonnegative"),
            OrliczError::OutsideTheoremRegime => write!(f, "outside theorem regime"),
        }
    }
}

impl core::error::Error for OrliczError {}

/// Empirical ψ_q norm: the smallest c with mean exp(|x/c|^q) ≤ 2, solved by
/// bisection to relative tolerance 1e-6 on the bracket
/// [max|x| / ln(2)^{1/q} / 64, max|x| · 64].
///
/// Internally the samples are normalized by max|x| and the bisection runs on
/// the unitless bracket, so scaling all samples by λ > 0 scales the estimate
/// by λ (to well below the bisection tolerance).
pub fn psi_norm_empirical(samples: &[f64], q: f64) -> Result<OrliczEstimate, OrliczError> {
    if samples.is_empty() {
        return Err(OrliczError::EmptySample);
    }
    if !(q.is_finite() && q >= 1.0) {
        return Err(OrliczError::InvalidOrder);
    }
    let mut scale = 0.0_f64;
    for &x in samples {
        if !x.is_finite() {
            return Err(OrliczError::NonFiniteSample);
        }
        let a = x.abs();
        if a > scale {
            scale = a;
        }
    }
    if scale == 0.0 {
        return Ok(OrliczEstimate {
            q,
            value: 0.0,
            n_samples: samples.len(),
            method: PsiMethod::EmpiricalBisection,
        });
    }

    let normalized: Vec<f64> = samples.iter().map(|x| x.abs() / scale).collect();
    let mean_exp = |c: f64| -> f64 {
        let inv = 1.0 / c;
        let mut acc = 0.0_f64;
        if q == 1.0 {
            for &y in &normalized {
                acc += (y * inv).exp();
            }
        } else if q == 2.0 {
            for &y in &normalized {
                let r = y * inv;
                acc += (r * r).exp();
            }
        } else {
            for &y in &normalized {
                acc += (y * inv).powf(q).exp();
            }
        }
        acc / normalized.len() as f64
    };

    let mut lo = 1.0 / (LN_2.powf(1.0 / q) * 64.0);
    let mut hi = 64.0_f64;
    let mut iterations = 0;
    while hi - lo > 1e-6 * lo && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mean_exp(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(OrliczEstimate {
        q,
        value: scale * 0.5 * (lo + hi),
        n_samples: samples.len(),
        method: PsiMethod::EmpiricalBisection,
    })
}

/// ψ₂ norm of a centered Gaussian scalar with standard deviation σ:
/// solving E exp((X/c)²) = 2 gives c = σ√(8/3).
///
/// For a Gaussian vector the directional norm sup_{‖u‖=1} ‖⟨Y,u⟩‖_{ψ2}
/// is the same expression with σ² the largest marginal variance.
pub fn psi2_gaussian(sigma: f64) -> OrliczEstimate {
    OrliczEstimate {
        q: 2.0,
        value: sigma * (8.0_f64 / 3.0).sqrt(),
        n_samples: 0,
        method: PsiMethod::ClosedForm,
    }
}

/// ψ_q envelope for a variable bounded by |X| ≤ b: c = b / ln(2)^{1/q}
/// makes E exp(|X/c|^q) ≤ exp(ln 2) = 2.
pub fn psi_bounded(bound: f64, q: f64) -> OrliczEstimate {
    OrliczEstimate {
        q,
        value: bound / LN_2.powf(1.0 / q),
        n_samples: 0,
        method: PsiMethod::ClosedForm,
    }
}

/// ψ₁ norm of an Exponential(rate) variable: E exp(X/c) = (1 − 1/(rate·c))⁻¹
/// equals 2 at c = 2/rate.
pub fn psi1_exponential(rate: f64) -> OrliczEstimate {
    OrliczEstimate {
        q: 1.0,
        value: 2.0 / rate,
        n_samples: 0,
        method: PsiMethod::ClosedForm,
    }
}

/// Sub-gamma right tail: P(X > t) ≤ exp(−t² / (2(σ² + Mt))).
///
/// Returns 1 at t = 0 and 0 when σ² = M = 0 with t > 0.
pub fn sub_gamma_tail(p: &SubGammaParams, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t == 0.0 {
        return 1.0;
    }
    let denom = 2.0 * (p.variance_factor + p.scale * t);
    if denom == 0.0 {
        return 0.0;
    }
    (-(t * t) / denom).exp().clamp(0.0, 1.0)
}

/// Sub-gamma quantile: the deviation √(2σ² ln(1/δ)) + M ln(1/δ), exceeded
/// with probability at most δ.
pub fn sub_gamma_quantile(p: &SubGammaParams, delta: f64) -> Result<f64, OrliczError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(OrliczError::InvalidDelta);
    }
    let t = (1.0 / delta).ln();
    Ok((2.0 * p.variance_factor * t).sqrt() + p.scale * t)
}

/// Matrix Bernstein tail for the operator-norm error of an empirical second
/// moment of a sub-Gaussian vector Z in R^d:
///
///   P(‖A − Â‖ > t) ≤ d · exp(−n t² / (2(e²d²‖Z‖⁴_{ψ2} + e d ‖Z‖²_{ψ2} t))),
///
/// clamped to [0, 1].
pub fn matrix_bernstein_tail(d: usize, n: usize, psi2: f64, t: f64) -> f64 {
    debug_assert!(d >= 1 && n >= 1 && psi2 > 0.0 && t >= 0.0);
    let df = d as f64;
    let nf = n as f64;
    let p2 = psi2 * psi2;
    let denom = 2.0 * (E * E * df * df * p2 * p2 + E * df * p2 * t);
    let bound = df * (-(nf * t * t) / denom).exp();
    bound.min(1.0)
}

/// Deviation bound for functions with ψ₁-bounded coordinate differences on
/// a good set B of probability ≥ 1 − p:
///
///   4n‖b‖_{ψ1}√p + e‖b‖_{ψ1}(2√(n ln(1/δ)) + ln(1/δ)),
///
/// exceeded (relative to the conditional mean given X ∈ B) with probability
/// at most p + δ. The theorem requires p ≤ 3/4.
pub fn mcdiarmid_extended_bound(
    n: usize,
    psi1_b: f64,
    p: f64,
    delta: f64,
) -> Result<f64, OrliczError> {
    if !(0.0..=0.75).contains(&p) {
        return Err(OrliczError::OutsideTheoremRegime);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(OrliczError::InvalidDelta);
    }
    if !(psi1_b >= 0.0 && psi1_b.is_finite()) {
        return Err(OrliczError::InvalidParams);
    }
    let nf = n as f64;
    let lg = (1.0 / delta).ln();
    Ok(4.0 * nf * psi1_b * p.sqrt() + E * psi1_b * (2.0 * (nf * lg).sqrt() + lg))
}

/// Which theoretical tail a McDiarmid simulation is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McdiarmidBound {
    /// Bernstein-type tail exp(−t² / (4e²σ² + 2eMt)) from the variance
    /// proxy σ² and scale M of the coordinate differences.
    Bernstein { sigma2: f64, scale: f64 },
    /// Bad-set form: the deviation of [`mcdiarmid_extended_bound`] inverted
    /// into a tail level p + δ(t).
    Extended { psi1_b: f64, bad_prob: f64 },
}

impl McdiarmidBound {
    /// The tail level the theory assigns to deviation t.
    pub fn tail(&self, n: usize, t: f64) -> f64 {
        match *self {
            McdiarmidBound::Bernstein { sigma2, scale } => {
                if t <= 0.0 {
                    return 1.0;
                }
                let denom = 4.0 * E * E * sigma2 + 2.0 * E * scale * t;
                if denom == 0.0 {
                    return 0.0;
                }
                (-(t * t) / denom).exp().clamp(0.0, 1.0)
            }
            McdiarmidBound::Extended { psi1_b, bad_prob } => {
                let nf = n as f64;
                let base = 4.0 * nf * psi1_b * bad_prob.sqrt();
                if t <= base || psi1_b == 0.0 {
                    return 1.0;
                }
                // Solve t = base + eψ(2√(n·u) + u) for u = ln(1/δ).
                let w = -nf.sqrt() + (nf + (t - base) / (E * psi1_b)).sqrt();
                let u = w * w;
                (bad_prob + (-u).exp()).clamp(0.0, 1.0)
            }
        }
    }
}

/// One row of a simulated tail table: deviation t, the empirical exceedance
/// fraction, and the theoretical tail level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
}

/// Simulates the tail of f(X) − reference over independent replications and
/// tabulates it against a McDiarmid-type bound.
///
/// The reference is the (conditional) mean of f estimated from a fresh batch
/// of `reps` independent replications, never from the test replications
/// themselves — reusing them would bias the comparison. Replication i draws
/// from substream i of `rng` and the reference batch from substreams
/// [reps, 2·reps), so results are independent of evaluation order.
///
/// For the `Extended` bound the reference conditions on the good set (draws
/// where `is_bad` is false); the empirical fraction stays unconditional, as
/// the bad-set tail level p + δ(t) accounts for bad draws.
#[allow(clippy::too_many_arguments)] // a simulation entry point: every knob is load-bearing
pub fn mcdiarmid_simulate<S, FSamp, F, FBad>(
    sampler: FSamp,
    f: F,
    is_bad: FBad,
    n: usize,
    reps: usize,
    t_grid: &[f64],
    bound: &McdiarmidBound,
    rng: &RngSpec,
) -> Vec<TailPoint>
where
    FSamp: Fn(&mut ChaCha12Rng) -> S,
    F: Fn(&[S]) -> f64,
    FBad: Fn(&[S]) -> bool,
{
    assert!(reps >= 1000, "simulation needs at least 1e3 replications");
    let draw = |stream: u64| -> (f64, bool) {
        let mut r = rng.substream(stream).rng();
        let xs: Vec<S> = (0..n).map(|_| sampler(&mut r)).collect();
        (f(&xs), is_bad(&xs))
    };

    let conditional = matches!(bound, McdiarmidBound::Extended { .. });
    let mut ref_sum = 0.0_f64;
    let mut ref_count = 0usize;
    for i in 0..reps {
        let (value, bad) = draw(reps as u64 + i as u64);
        if !(conditional && bad) {
            ref_sum += value;
            ref_count += 1;
        }
    }
    let reference = ref_sum / ref_count.max(1) as f64;

    let values: Vec<f64> = (0..reps).map(|i| draw(i as u64).0).collect();
    t_grid
        .iter()
        .map(|&t| {
            let exceed = values.iter().filter(|&&v| v - reference > t).count();
            TailPoint {
                t,
                empirical: exceed as f64 / reps as f64,
                bound: bound.tail(n, t),
            }
        })
        .collect()
}
