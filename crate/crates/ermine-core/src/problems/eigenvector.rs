//! The leading covariance direction as an estimation problem on the unit
//! sphere with the great-circle metric ϑ(φ, ψ) = arccos⟨φ, ψ⟩.
//!
//! Maximizing ⟨Cov φ, φ⟩ over the sphere is, after expanding the centered
//! covariance, the minimization of the pair loss
//!
//! ```text
//! l(φ, (y, z)) = −(⟨y, φ⟩² − ⟨y, φ⟩⟨z, φ⟩),     (y, z) ~ ν ⊗ ν,
//! ```
//!
//! whose double empirical average over one batch of draws collapses to the
//! quadratic form of the biased (1/n) centered sample covariance. The solver
//! therefore computes a full symmetric eigendecomposition — deterministic
//! and robust to small gaps — instead of iterating.
//!
//! Both the population and the empirical minimizer sets are antipodal pairs
//! {±u₁}; the sup-inf set divergence then reduces to arccos |⟨φ̂, u₁⟩|.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use super::{max_quadruple_violation, max_variance_violation, VerifierError};
use crate::bounds::{ConcentrationParams, RateFn};
use crate::space::{EstimationProblem, PointSet, RngSpec, SampleBatch, SolveError};

/// How far off unit length a vector may be before `sphere_distance` refuses
/// to renormalize it.
const UNIT_TOLERANCE: f64 = 1e-8;

/// Great-circle distance between two unit vectors: arccos of their inner
/// product, clamped to [−1, 1] against floating-point drift. Vectors within
/// 1e-8 of unit length are renormalized; anything further off is an error.
pub fn sphere_distance(phi: &[f64], psi: &[f64]) -> Result<f64, SolveError> {
    if phi.len() != psi.len() {
        return Err(SolveError::InvalidSample(format!(
            "dimension mismatch: {} vs {}",
            phi.len(),
            psi.len()
        )));
    }
    let np = norm(phi);
    let nq = norm(psi);
    if (np - 1.0).abs() > UNIT_TOLERANCE || (nq - 1.0).abs() > UNIT_TOLERANCE {
        return Err(SolveError::InvalidSample(format!(
            "sphere points must be unit vectors, got norms {np} and {nq}"
        )));
    }
    let cos = dot(phi, psi) / (np * nq);
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Unit-norm top eigenvector of the centered empirical covariance
/// (1/n)Σ(x_i − x̄)(x_i − x̄)ᵀ, sign-canonicalized so its first nonzero
/// coordinate is positive.
pub fn top_eigenvector_empirical(batch: &SampleBatch<Vec<f64>>) -> Result<Vec<f64>, SolveError> {
    let samples = batch.samples();
    let first = samples.first().ok_or(SolveError::EmptyBatch)?;
    let d = first.len();
    if samples.len() < 2 {
        return Err(SolveError::DegenerateCovariance);
    }
    for x in samples {
        if x.len() != d {
            return Err(SolveError::InvalidSample(format!(
                "dimension mismatch in batch: expected {d}, got {}",
                x.len()
            )));
        }
    }
    let n = samples.len() as f64;
    let mut mean = DVector::<f64>::zeros(d);
    for x in samples {
        mean += DVector::from_column_slice(x);
    }
    mean /= n;
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for x in samples {
        let c = DVector::from_column_slice(x) - &mean;
        cov += &c * c.transpose();
    }
    cov /= n;

    let eigen = cov.symmetric_eigen();
    let (top_index, top_value) = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    if top_value <= 0.0 {
        return Err(SolveError::DegenerateCovariance);
    }
    let mut v: Vec<f64> = eigen.eigenvectors.column(top_index).iter().copied().collect();
    let scale = norm(&v);
    for c in v.iter_mut() {
        *c /= scale;
    }
    canonicalize_sign(&mut v);
    Ok(v)
}

fn canonicalize_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|c| **c != 0.0) {
        if *first < 0.0 {
            for c in v.iter_mut() {
                *c = -*c;
            }
        }
    }
}

/// Worst violation of the gap inequality ‖v‖²⟨Au₁,u₁⟩ − ⟨Av,v⟩ ≥
/// (λ₁ − λ₂)‖v‖² over random v ⊥ u₁, where u₁ is A's top eigenvector.
/// Equality is attained at v = u₂, so the returned maximum is near zero
/// (never materially positive) for symmetric A; callers compare against
/// 1e-9·‖A‖.
pub fn verify_eigengap_lemma(
    a: &DMatrix<f64>,
    n_vectors: usize,
    rng: &mut ChaCha12Rng,
) -> Result<f64, VerifierError> {
    let (lambda1, lambda2, u1) = top_pair(a)?;
    let d = a.nrows();
    let quad_at_u1 = lambda1;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_vectors {
        let mut v = DVector::<f64>::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let along = u1.dot(&v);
        v -= &u1 * along;
        let norm2 = v.norm_squared();
        let quad_v = (a * &v).dot(&v);
        let violation = (lambda1 - lambda2) * norm2 - (norm2 * quad_at_u1 - quad_v);
        if violation > worst {
            worst = violation;
        }
    }
    Ok(worst)
}

/// The matrix-perturbation comparison bound 2√2·‖Δ‖₂→₂ / (λ₁ − λ₂): an upper
/// bound on the chordal distance min ‖φ̂ ∓ u₁‖₂ between top eigenvectors,
/// with the gap read from `cov_true`. Used for report comparison curves.
pub fn davis_kahan_bound(
    cov_true: &DMatrix<f64>,
    cov_emp: &DMatrix<f64>,
) -> Result<f64, VerifierError> {
    if cov_true.nrows() != cov_emp.nrows() || cov_true.ncols() != cov_emp.ncols() {
        return Err(VerifierError::BadShape);
    }
    let (lambda1, lambda2, _) = top_pair(cov_true)?;
    let gap = lambda1 - lambda2;
    if gap <= 0.0 {
        return Err(VerifierError::ZeroGap);
    }
    let delta = cov_emp - cov_true;
    Ok(2.0 * core::f64::consts::SQRT_2 * spectral_norm_symmetric(&delta) / gap)
}

/// Top two eigenvalues and the top eigenvector of a symmetric matrix.
fn top_pair(a: &DMatrix<f64>) -> Result<(f64, f64, DVector<f64>), VerifierError> {
    let d = a.nrows();
    if d < 2 || a.ncols() != d {
        return Err(VerifierError::BadShape);
    }
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..d {
        for j in (i + 1)..d {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale.max(1.0) {
                return Err(VerifierError::NotSymmetric);
            }
        }
    }
    let eigen = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eigen.eigenvalues[j]
            .partial_cmp(&eigen.eigenvalues[i])
            .expect("symmetric eigenvalues are finite")
    });
    let top = DVector::from_iterator(d, eigen.eigenvectors.column(order[0]).iter().copied());
    Ok((
        eigen.eigenvalues[order[0]],
        eigen.eigenvalues[order[1]],
        top,
    ))
}

/// Operator norm of a symmetric matrix: the largest absolute eigenvalue.
fn spectral_norm_symmetric(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Estimating the top eigenvector of Σ = diag(λ₁, …, λ_d) from Gaussian
/// draws Y ~ N(0, Σ). The axis-aligned form loses no generality for rate
/// experiments (rotating the data rotates the estimate equivariantly) and
/// keeps the true minimizers {±e₁} exact.
#[derive(Debug, Clone)]
pub struct EigenvectorProblem {
    eigenvalues: Vec<f64>,
}

impl EigenvectorProblem {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self, SolveError> {
        if eigenvalues.len() < 2 {
            return Err(SolveError::InvalidSample(
                "need dimension at least 2".into(),
            ));
        }
        if eigenvalues.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(SolveError::InvalidSample(
                "eigenvalues must be finite and nonnegative".into(),
            ));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(SolveError::InvalidSample(
                "eigenvalues must be sorted in decreasing order".into(),
            ));
        }
        if eigenvalues[0] <= eigenvalues[1] {
            return Err(SolveError::InvalidSample(
                "the top eigenvalue must be strictly separated".into(),
            ));
        }
        Ok(Self { eigenvalues })
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigengap(&self) -> f64 {
        self.eigenvalues[0] - self.eigenvalues[1]
    }

    /// The directional sub-Gaussian norm of Y: sup over unit u of
    /// ‖⟨Y, u⟩‖_{ψ2}, attained along the top direction, = √(8λ₁/3).
    pub fn psi2_y(&self) -> f64 {
        (self.eigenvalues[0] * 8.0 / 3.0).sqrt()
    }

    /// The population covariance as a matrix, for perturbation-bound
    /// comparisons.
    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues))
    }

    fn draw_y(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|l| {
                let z: f64 = rng.sample(StandardNormal);
                l.sqrt() * z
            })
            .collect()
    }

    fn draw_sphere(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.dimension())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let s = norm(&v);
            if s > 1e-12 {
                return v.into_iter().map(|c| c / s).collect();
            }
        }
    }

    /// The pair loss l(φ, (y, z)) = −(⟨y, φ⟩² − ⟨y, φ⟩⟨z, φ⟩).
    pub fn loss(&self, phi: &[f64], x: &(Vec<f64>, Vec<f64>)) -> f64 {
        let yp = dot(&x.0, phi);
        let zp = dot(&x.1, phi);
        -(yp * yp - yp * zp)
    }

    /// The quadruple envelope a(x, x′) = 2(‖y‖² + ‖y′‖² + ‖y‖‖z‖ + ‖y′‖‖z′‖)
    /// for x ≠ x′, and 0 on the diagonal (a pseudometric must vanish there).
    pub fn a_bound(&self, x: &(Vec<f64>, Vec<f64>), x2: &(Vec<f64>, Vec<f64>)) -> f64 {
        if x == x2 {
            return 0.0;
        }
        let (y, z) = x;
        let (y2, z2) = x2;
        let ny = norm(y);
        let ny2 = norm(y2);
        2.0 * (ny * ny + ny2 * ny2 + ny * norm(z) + ny2 * norm(z2))
    }

    /// Worst quadruple violation over pair samples drawn from ν ⊗ ν and
    /// parameters drawn uniformly on the sphere.
    pub fn verify_quadruple_inequality(&self, n_quadruples: usize, rng: &mut ChaCha12Rng) -> f64 {
        max_quadruple_violation(
            n_quadruples,
            rng,
            |r| self.draw_sphere(r),
            |r| (self.draw_y(r), self.draw_y(r)),
            |phi, x| self.loss(phi, x),
            |x, y| self.a_bound(x, y),
            |phi, psi| sphere_distance(phi, psi).expect("sphere draws are unit vectors"),
            1.0,
        )
    }

    /// Worst violation of τ·ϑ(φ,S)² ≤ J(φ) − J* with τ = (4/π²)(λ₁ − λ₂)
    /// over uniform sphere points, where J(φ) = −⟨Σφ, φ⟩ and J* = −λ₁.
    pub fn verify_variance_inequality(&self, n_points: usize, rng: &mut ChaCha12Rng) -> f64 {
        let lambda = self.eigenvalues.clone();
        let tau = self.params().tau;
        max_variance_violation(
            n_points,
            rng,
            |r| self.draw_sphere(r),
            |phi| {
                -phi.iter()
                    .zip(&lambda)
                    .map(|(c, l)| l * c * c)
                    .sum::<f64>()
            },
            -lambda[0],
            f64::INFINITY,
            |phi| {
                let cos = phi[0].abs().clamp(0.0, 1.0);
                cos.acos()
            },
            tau,
            2.0,
        )
    }
}

impl EstimationProblem for EigenvectorProblem {
    type Point = Vec<f64>;
    type Sample = Vec<f64>;

    fn sample(&self, rng: &RngSpec, n: usize) -> SampleBatch<Vec<f64>> {
        let mut r = rng.rng();
        let samples = (0..n).map(|_| self.draw_y(&mut r)).collect();
        SampleBatch::new(samples, rng.stream_id)
    }

    fn solve_empirical(
        &self,
        batch: &SampleBatch<Vec<f64>>,
    ) -> Result<PointSet<Vec<f64>>, SolveError> {
        let v = top_eigenvector_empirical(batch)?;
        let neg: Vec<f64> = v.iter().map(|c| -c).collect();
        PointSet::new(alloc::vec![v, neg]).map_err(|_| SolveError::EmptyBatch)
    }

    fn true_minimizers(&self) -> PointSet<Vec<f64>> {
        let d = self.dimension();
        let mut e1 = alloc::vec![0.0; d];
        e1[0] = 1.0;
        let mut neg = alloc::vec![0.0; d];
        neg[0] = -1.0;
        PointSet::new(alloc::vec![e1, neg]).expect("two points")
    }

    fn distance(&self, p: &Vec<f64>, q: &Vec<f64>) -> f64 {
        sphere_distance(p, q).expect("problem points are unit vectors")
    }

    fn params(&self) -> ConcentrationParams {
        let d = self.dimension() as f64;
        let gap = self.eigengap();
        let psi2 = self.psi2_y();
        let psi2_sq = psi2 * psi2;
        let e = core::f64::consts::E;
        // The deterioration rate comes from the matrix Bernstein tail
        // evaluated at t = gap/4 (the empirical gap then stays above half
        // the true gap by Weyl's inequality).
        let c = gap * gap
            / (32.0 * e * e * d * d * psi2_sq * psi2_sq + 8.0 * e * d * psi2_sq * gap);
        ConcentrationParams {
            beta: 2.0,
            alpha: 1.0,
            tau: 4.0 / (core::f64::consts::PI * core::f64::consts::PI) * gap,
            j0: f64::INFINITY,
            psi1_a: 8.0 * d * psi2_sq,
            // The minimizer set {±u₁} spans half the great circle.
            diam_s: core::f64::consts::PI,
            eta: RateFn::Zero,
            kappa: RateFn::ExpDecay { coeff: d, rate: c },
            iota: RateFn::Zero,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
