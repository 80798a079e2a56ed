//! Concrete estimation problems and the checks that validate their
//! concentration constants.
//!
//! Five problems implement [`EstimationProblem`](crate::space::EstimationProblem):
//!
//! * [`euclidean::EuclideanBarycenterProblem`] — the mean in R^d;
//! * [`spider::SpiderTreeBarycenterProblem`] — the median-like barycenter on
//!   a metric tree with one branch point;
//! * [`eigenvector::EigenvectorProblem`] — the leading covariance direction
//!   on the unit sphere;
//! * [`lasso::LassoProblem`] — ℓ₁-penalised linear regression;
//! * [`entropic::EntropicBarycenterProblem`] — the entropy-regularised
//!   Wasserstein barycenter of a finite pool of densities (solver in
//!   [`crate::transport`]).
//!
//! Each problem's bound rests on two inequalities that this module can check
//! numerically rather than take on faith:
//!
//! * the **quadruple inequality**: for parameters φ, ψ and samples x, y,
//!
//!   ```text
//!   l(φ,x) − l(ψ,x) − l(φ,y) + l(ψ,y) ≤ a(x,y) · ϑ(φ,ψ)^α
//!   ```
//!
//! * the **variance inequality**: on the level set [J ≤ J₀],
//!
//!   ```text
//!   τ · ϑ(φ, S)^β ≤ J(φ) − J*.
//!   ```
//!
//! The generic sweep engines live here; every problem wires its own loss,
//! sample law, and metric into them and exposes
//! `verify_quadruple_inequality` / `verify_variance_inequality` methods that
//! report the worst observed violation (negative when the inequality holds
//! with margin).

pub mod eigenvector;
pub mod entropic;
pub mod euclidean;
pub mod lasso;
pub mod spider;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use rand_chacha::ChaCha12Rng;

/// Worst signed violation of the quadruple inequality over random draws.
///
/// Draws `n_quadruples` tuples (φ, ψ, x, y) and returns the maximum of
/// `l(φ,x) − l(ψ,x) − l(φ,y) + l(ψ,y) − a(x,y)·ϑ(φ,ψ)^α`. A value ≤ 0 means
/// the inequality held on every draw; small positive values of floating-point
/// size are tolerated by callers. Zero draws yield −∞ (the sup over an empty
/// set).
#[allow(clippy::too_many_arguments)]
pub fn max_quadruple_violation<P, X>(
    n_quadruples: usize,
    rng: &mut ChaCha12Rng,
    mut draw_parameter: impl FnMut(&mut ChaCha12Rng) -> P,
    mut draw_sample: impl FnMut(&mut ChaCha12Rng) -> X,
    loss: impl Fn(&P, &X) -> f64,
    a: impl Fn(&X, &X) -> f64,
    distance: impl Fn(&P, &P) -> f64,
    alpha: f64,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_quadruples {
        let phi = draw_parameter(rng);
        let psi = draw_parameter(rng);
        let x = draw_sample(rng);
        let y = draw_sample(rng);
        let lhs = loss(&phi, &x) - loss(&psi, &x) - loss(&phi, &y) + loss(&psi, &y);
        let rhs = a(&x, &y) * distance(&phi, &psi).powf(alpha);
        let violation = lhs - rhs;
        if violation > worst {
            worst = violation;
        }
    }
    worst
}

/// Worst signed violation of the variance inequality over random draws.
///
/// Draws parameters, keeps those inside the level set [J ≤ j0], and returns
/// the maximum of `τ·ϑ(φ,S)^β − (J(φ) − j_star)`. Draws outside the level
/// set are skipped (the inequality says nothing about them); if every draw
/// is skipped the result is −∞.
#[allow(clippy::too_many_arguments)]
pub fn max_variance_violation<P>(
    n_points: usize,
    rng: &mut ChaCha12Rng,
    mut draw_parameter: impl FnMut(&mut ChaCha12Rng) -> P,
    objective: impl Fn(&P) -> f64,
    j_star: f64,
    j0: f64,
    distance_to_minimizers: impl Fn(&P) -> f64,
    tau: f64,
    beta: f64,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_points {
        let phi = draw_parameter(rng);
        let j_phi = objective(&phi);
        if j_phi > j0 {
            continue;
        }
        let violation = tau * distance_to_minimizers(&phi).powf(beta) - (j_phi - j_star);
        if violation > worst {
            worst = violation;
        }
    }
    worst
}

/// Errors from the matrix-perturbation helpers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifierError {
    /// The top two eigenvalues coincide, so the perturbation bound is vacuous.
    ZeroGap,
    /// The input matrix is not symmetric (beyond floating-point noise).
    NotSymmetric,
    /// Matrix dimensions are empty or inconsistent.
    BadShape,
}

impl core::fmt::Display for VerifierError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            VerifierError::ZeroGap => write!(f, "zero spectral gap"),
            VerifierError::NotSymmetric => write!(f, "matrix is not symmetric"),
            VerifierError::BadShape => write!(f, "empty or mismatched matrix shape"),
        }
    }
}

impl core::error::Error for VerifierError {}
