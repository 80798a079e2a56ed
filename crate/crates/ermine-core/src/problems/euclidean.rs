//! Barycenter estimation in R^d: the population minimizer of
//! E‖φ − X‖² is the mean, the empirical minimizer is the sample mean, and
//! the curvature constants are exact (τ = 1, β = 2, a = 2ρ).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use super::{max_quadruple_violation, max_variance_violation};
use crate::bounds::{ConcentrationParams, RateFn};
use crate::orlicz::{psi_bounded, psi_norm_empirical, OrliczEstimate};
use crate::space::{EstimationProblem, PointSet, RngSpec, SampleBatch, SolveError};

/// Pair draws used to calibrate ‖ρ(X,X′)‖_{ψ1} when no closed form exists.
const CALIBRATION_DRAWS: usize = 1_000_000;
/// Fixed stream for that calibration, so identical configurations report
/// identical constants irrespective of the run seed.
const CALIBRATION_SEED: u64 = 0x0ca1_1b8a;

/// The generative families the barycenter problem can sample from. All have
/// independent coordinates; `mean` is the population barycenter in each case.
#[derive(Debug, Clone, PartialEq)]
pub enum EuclideanSampler {
    /// X_j ~ N(mean_j, std_devs_j²).
    Gaussian { mean: Vec<f64>, std_devs: Vec<f64> },
    /// X_j uniform on [mean_j − half_widths_j, mean_j + half_widths_j].
    BoundedUniform {
        mean: Vec<f64>,
        half_widths: Vec<f64>,
    },
    /// X_j ~ mean_j + Laplace(scale_j): sub-exponential but unbounded.
    Laplace { mean: Vec<f64>, scales: Vec<f64> },
}

impl EuclideanSampler {
    fn mean_and_spread(&self) -> (&[f64], &[f64]) {
        match self {
            EuclideanSampler::Gaussian { mean, std_devs } => (mean, std_devs),
            EuclideanSampler::BoundedUniform { mean, half_widths } => (mean, half_widths),
            EuclideanSampler::Laplace { mean, scales } => (mean, scales),
        }
    }

    pub fn dimension(&self) -> usize {
        self.mean_and_spread().0.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean_and_spread().0
    }

    /// tr Cov(μ): the exact value of n·E‖φ̂ − φ*‖², used by rate checks.
    pub fn trace_cov(&self) -> f64 {
        match self {
            EuclideanSampler::Gaussian { std_devs, .. } => {
                std_devs.iter().map(|s| s * s).sum()
            }
            // Var of U[−h, h] is h²/3.
            EuclideanSampler::BoundedUniform { half_widths, .. } => {
                half_widths.iter().map(|h| h * h / 3.0).sum()
            }
            // Var of Laplace(s) is 2s².
            EuclideanSampler::Laplace { scales, .. } => {
                scales.iter().map(|s| 2.0 * s * s).sum()
            }
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        let (mean, spread) = self.mean_and_spread();
        if mean.is_empty() || mean.len() != spread.len() {
            return Err(SolveError::InvalidSample(format!(
                "sampler needs matching non-empty mean/scale vectors, got {}/{}",
                mean.len(),
                spread.len()
            )));
        }
        if mean.iter().chain(spread.iter()).any(|v| !v.is_finite())
            || spread.iter().any(|s| *s < 0.0)
        {
            return Err(SolveError::InvalidSample(
                "sampler parameters must be finite with nonnegative scales".into(),
            ));
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        match self {
            EuclideanSampler::Gaussian { mean, std_devs } => mean
                .iter()
                .zip(std_devs)
                .map(|(m, s)| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + s * z
                })
                .collect(),
            EuclideanSampler::BoundedUniform { mean, half_widths } => mean
                .iter()
                .zip(half_widths)
                .map(|(m, h)| m + rng.random_range(-1.0..=1.0) * h)
                .collect(),
            EuclideanSampler::Laplace { mean, scales } => mean
                .iter()
                .zip(scales)
                .map(|(m, s)| {
                    let e = -(1.0 - rng.random::<f64>()).ln();
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    m + sign * s * e
                })
                .collect(),
        }
    }
}

/// Estimating the mean of μ on R^d under the Euclidean metric.
#[derive(Debug, Clone)]
pub struct EuclideanBarycenterProblem {
    sampler: EuclideanSampler,
    psi1_rho: OrliczEstimate,
}

impl EuclideanBarycenterProblem {
    /// Builds the problem and fixes its ψ₁ envelope for ρ(X, X′) = ‖X − X′‖:
    /// a closed-form bound for compact support, a seeded-pair-draw estimate
    /// for the unbounded families.
    pub fn new(sampler: EuclideanSampler) -> Result<Self, SolveError> {
        sampler.validate()?;
        let psi1_rho = match &sampler {
            EuclideanSampler::BoundedUniform { half_widths, .. } => {
                let diameter = 2.0 * l2_norm(half_widths);
                psi_bounded(diameter, 1.0)
            }
            _ => {
                let mut rng = RngSpec::new(CALIBRATION_SEED, 0).rng();
                let rho: Vec<f64> = (0..CALIBRATION_DRAWS)
                    .map(|_| {
                        let x = sampler.draw(&mut rng);
                        let y = sampler.draw(&mut rng);
                        l2_distance(&x, &y)
                    })
                    .collect();
                psi_norm_empirical(&rho, 1.0).map_err(|e| {
                    SolveError::InvalidSample(format!("psi calibration failed: {e}"))
                })?
            }
        };
        Ok(Self { sampler, psi1_rho })
    }

    pub fn sampler(&self) -> &EuclideanSampler {
        &self.sampler
    }

    /// The fixed envelope ‖ρ(X,X′)‖_{ψ1} this instance reports.
    pub fn psi1_rho(&self) -> &OrliczEstimate {
        &self.psi1_rho
    }

    /// tr Cov(μ), the exact scale of the squared estimation error.
    pub fn trace_cov(&self) -> f64 {
        self.sampler.trace_cov()
    }

    /// The squared-distance loss l(φ, x) = ‖φ − x‖².
    pub fn loss(&self, phi: &[f64], x: &[f64]) -> f64 {
        let d = l2_distance(phi, x);
        d * d
    }

    /// The quadruple-inequality envelope a(x, y) = 2‖x − y‖.
    pub fn a_bound(&self, x: &[f64], y: &[f64]) -> f64 {
        2.0 * l2_distance(x, y)
    }

    fn draw_parameter(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        // Cover a region a few noise scales wide around the barycenter.
        let scale = 1.0 + self.trace_cov().sqrt();
        self.sampler
            .mean()
            .iter()
            .map(|m| {
                let z: f64 = rng.sample(StandardNormal);
                m + scale * z
            })
            .collect()
    }

    /// Worst violation of l(φ,x) − l(ψ,x) − l(φ,y) + l(ψ,y) ≤ a(x,y)·ϑ(φ,ψ)
    /// over random quadruples; ≤ 0 up to floating point because the bound is
    /// exactly Cauchy-Schwarz here.
    pub fn verify_quadruple_inequality(&self, n_quadruples: usize, rng: &mut ChaCha12Rng) -> f64 {
        max_quadruple_violation(
            n_quadruples,
            rng,
            |r| self.draw_parameter(r),
            |r| self.sampler.draw(r),
            |phi, x| self.loss(phi, x),
            |x, y| self.a_bound(x, y),
            |phi, psi| l2_distance(phi, psi),
            1.0,
        )
    }

    /// Worst violation of τ·ϑ(φ,S)² ≤ J(φ) − J*. The bias-variance identity
    /// J(φ) − J* = ‖φ − φ*‖² makes this exactly zero here, so the sweep
    /// doubles as a regression test for the objective evaluation.
    pub fn verify_variance_inequality(&self, n_points: usize, rng: &mut ChaCha12Rng) -> f64 {
        let mean: Vec<f64> = self.sampler.mean().to_vec();
        let trace = self.trace_cov();
        max_variance_violation(
            n_points,
            rng,
            |r| self.draw_parameter(r),
            |phi| {
                let d = l2_distance(phi, &mean);
                trace + d * d
            },
            trace,
            f64::INFINITY,
            |phi| l2_distance(phi, &mean),
            1.0,
            2.0,
        )
    }
}

impl EstimationProblem for EuclideanBarycenterProblem {
    type Point = Vec<f64>;
    type Sample = Vec<f64>;

    fn sample(&self, rng: &RngSpec, n: usize) -> SampleBatch<Vec<f64>> {
        let mut r = rng.rng();
        let samples = (0..n).map(|_| self.sampler.draw(&mut r)).collect();
        SampleBatch::new(samples, rng.stream_id)
    }

    fn solve_empirical(
        &self,
        batch: &SampleBatch<Vec<f64>>,
    ) -> Result<PointSet<Vec<f64>>, SolveError> {
        frechet_mean_euclidean(batch).map(PointSet::singleton)
    }

    fn true_minimizers(&self) -> PointSet<Vec<f64>> {
        PointSet::singleton(self.sampler.mean().to_vec())
    }

    fn distance(&self, p: &Vec<f64>, q: &Vec<f64>) -> f64 {
        l2_distance(p, q)
    }

    fn params(&self) -> ConcentrationParams {
        ConcentrationParams {
            beta: 2.0,
            alpha: 1.0,
            tau: 1.0,
            j0: f64::INFINITY,
            psi1_a: 2.0 * self.psi1_rho.value,
            diam_s: 0.0,
            eta: RateFn::Zero,
            kappa: RateFn::Zero,
            iota: RateFn::Zero,
        }
    }
}

/// The empirical barycenter in R^d: the coordinate-wise sample mean, with
/// compensated summation so the result is independent of batch length up to
/// a 1e-12-grade error.
pub fn frechet_mean_euclidean(batch: &SampleBatch<Vec<f64>>) -> Result<Vec<f64>, SolveError> {
    let samples = batch.samples();
    let first = samples.first().ok_or(SolveError::EmptyBatch)?;
    let d = first.len();
    let mut acc = vec![0.0_f64; d];
    let mut comp = vec![0.0_f64; d];
    for x in samples {
        if x.len() != d {
            return Err(SolveError::InvalidSample(format!(
                "dimension mismatch in batch: expected {d}, got {}",
                x.len()
            )));
        }
        for j in 0..d {
            let y = x[j] - comp[j];
            let t = acc[j] + y;
            comp[j] = (t - acc[j]) - y;
            acc[j] = t;
        }
    }
    let n = samples.len() as f64;
    Ok(acc.into_iter().map(|s| s / n).collect())
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn l2_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
