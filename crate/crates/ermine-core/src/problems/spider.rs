//! Barycenter estimation on a spider tree: k half-lines ("legs") glued at a
//! single origin. The metric is |t − s| along one leg and t + s across legs,
//! which makes the space a complete metric tree — negatively curved, so the
//! barycenter functional is as well-behaved as the Euclidean one while the
//! geometry is genuinely non-linear.
//!
//! The empirical barycenter has a closed form per leg: placing φ at distance
//! t ≥ 0 along leg j gives the objective
//!
//! ```text
//! (1/n) [ Σ_{leg(x_i)=j} (t − t_i)²  +  Σ_{leg(x_i)≠j} (t + t_i)² ]
//!      = Q/n + t² − 2t·(2S_j − T)/n,
//! ```
//!
//! a quadratic in t minimized at t̂_j = max(0, (2S_j − T)/n) where S_j is the
//! sample mass on leg j and T the total. The global minimizer is the leg with
//! the largest positive t̂_j; when every t̂_j ≤ 0 the barycenter is the
//! origin.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{max_quadruple_violation, max_variance_violation};
use crate::bounds::{ConcentrationParams, RateFn};
use crate::orlicz::psi_bounded;
use crate::space::{EstimationProblem, PointSet, RngSpec, SampleBatch, SolveError};

/// A point on the spider: a leg index and a distance t ≥ 0 from the origin.
/// The origin is canonicalized to `(leg 0, t 0)` so that equal points compare
/// equal regardless of which leg they were built on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiderPoint {
    leg: usize,
    t: f64,
}

impl SpiderPoint {
    pub fn new(leg: usize, t: f64) -> Result<Self, SolveError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(SolveError::InvalidSample(format!(
                "leg coordinate must be finite and nonnegative, got {t}"
            )));
        }
        Ok(if t == 0.0 {
            Self { leg: 0, t: 0.0 }
        } else {
            Self { leg, t }
        })
    }

    pub fn origin() -> Self {
        Self { leg: 0, t: 0.0 }
    }

    pub fn leg(&self) -> usize {
        self.leg
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// The tree itself: just the number of legs (leg lengths belong to the
/// sampling model, not the metric).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpiderTree {
    n_legs: usize,
}

impl SpiderTree {
    pub fn new(n_legs: usize) -> Result<Self, SolveError> {
        if n_legs == 0 {
            return Err(SolveError::InvalidSample("a spider needs legs".into()));
        }
        Ok(Self { n_legs })
    }

    pub fn n_legs(&self) -> usize {
        self.n_legs
    }

    fn check_on_tree(&self, p: &SpiderPoint) -> Result<(), SolveError> {
        if p.leg >= self.n_legs {
            return Err(SolveError::InvalidSample(format!(
                "point on leg {} but the tree has {} legs",
                p.leg, self.n_legs
            )));
        }
        Ok(())
    }
}

/// The tree metric: |t − s| within a leg, t + s across legs.
pub fn spider_distance(a: &SpiderPoint, b: &SpiderPoint) -> f64 {
    if a.leg == b.leg {
        (a.t - b.t).abs()
    } else {
        a.t + b.t
    }
}

/// The empirical barycenter on the tree.
///
/// Scans every leg's 1-D quadratic and returns the best interior point, or
/// the origin when no leg wants positive mass — symmetric data ties resolve
/// toward the origin through the coordinate canonicalization. The interior
/// winner is always unique: t̂_j > 0 requires 2S_j > T, and two legs cannot
/// both hold more than half the sample mass. The scan still tolerates exact
/// floating-point ties by preferring the lowest-indexed leg.
pub fn frechet_mean_spider(
    batch: &SampleBatch<SpiderPoint>,
    tree: &SpiderTree,
) -> Result<SpiderPoint, SolveError> {
    let (best_t, winners) = per_leg_optima(batch, tree)?;
    if best_t == 0.0 {
        return Ok(SpiderPoint::origin());
    }
    SpiderPoint::new(winners[0], best_t)
}

/// Shared leg scan: the best clamped offset and every leg attaining it.
fn per_leg_optima(
    batch: &SampleBatch<SpiderPoint>,
    tree: &SpiderTree,
) -> Result<(f64, Vec<usize>), SolveError> {
    let samples = batch.samples();
    if samples.is_empty() {
        return Err(SolveError::EmptyBatch);
    }
    let mut leg_sums = alloc::vec![0.0_f64; tree.n_legs];
    let mut total = 0.0_f64;
    for p in samples {
        tree.check_on_tree(p)?;
        leg_sums[p.leg] += p.t;
        total += p.t;
    }
    let n = samples.len() as f64;
    let mut best_t = 0.0_f64;
    let mut winners: Vec<usize> = Vec::new();
    for (j, s_j) in leg_sums.iter().enumerate() {
        let t_hat = ((2.0 * s_j - total) / n).max(0.0);
        if t_hat > best_t {
            best_t = t_hat;
            winners.clear();
            winners.push(j);
        } else if t_hat == best_t && t_hat > 0.0 {
            winners.push(j);
        }
    }
    if winners.is_empty() {
        winners.push(0);
    }
    Ok((best_t, winners))
}

/// Barycenter estimation on a spider tree with uniform leg laws: a sample
/// lands on leg j with probability p_j and sits at distance U[0, L] along it.
#[derive(Debug, Clone)]
pub struct SpiderTreeBarycenterProblem {
    tree: SpiderTree,
    leg_probabilities: Vec<f64>,
    leg_length: f64,
}

impl SpiderTreeBarycenterProblem {
    pub fn new(leg_probabilities: Vec<f64>, leg_length: f64) -> Result<Self, SolveError> {
        if leg_probabilities.len() < 2 {
            return Err(SolveError::InvalidSample(
                "a spider needs at least two legs".into(),
            ));
        }
        if !(leg_length > 0.0 && leg_length.is_finite()) {
            return Err(SolveError::InvalidSample(format!(
                "leg length must be positive and finite, got {leg_length}"
            )));
        }
        let sum: f64 = leg_probabilities.iter().sum();
        if leg_probabilities
            .iter()
            .any(|p| !(*p >= 0.0) || !p.is_finite())
            || (sum - 1.0).abs() > 1e-12
        {
            return Err(SolveError::InvalidSample(format!(
                "leg probabilities must be nonnegative and sum to 1, got sum {sum}"
            )));
        }
        let tree = SpiderTree::new(leg_probabilities.len())?;
        Ok(Self {
            tree,
            leg_probabilities,
            leg_length,
        })
    }

    pub fn tree(&self) -> &SpiderTree {
        &self.tree
    }

    pub fn leg_length(&self) -> f64 {
        self.leg_length
    }

    /// Unclamped population offsets 2m_j − M where m_j = p_j·L/2 is leg j's
    /// first-moment contribution and M = L/2 their total; the population
    /// barycenter sits at the clamped maximum.
    pub fn population_leg_offsets(&self) -> Vec<f64> {
        let m_total: f64 = self.leg_length / 2.0;
        self.leg_probabilities
            .iter()
            .map(|p| 2.0 * (p * self.leg_length / 2.0) - m_total)
            .collect()
    }

    /// The exact population objective J(φ) = E ρ²(φ, X) for φ = (leg j, t):
    /// t² + L²/3 + tL(1 − 2p_j).
    pub fn population_objective(&self, phi: &SpiderPoint) -> f64 {
        let l = self.leg_length;
        let p_j = self.leg_probabilities[phi.leg];
        phi.t * phi.t + l * l / 3.0 + phi.t * l * (1.0 - 2.0 * p_j)
    }

    /// The squared tree distance l(φ, x) = ρ²(φ, x).
    pub fn loss(&self, phi: &SpiderPoint, x: &SpiderPoint) -> f64 {
        let d = spider_distance(phi, x);
        d * d
    }

    /// The quadruple envelope a(x, y) = 2ρ(x, y).
    pub fn a_bound(&self, x: &SpiderPoint, y: &SpiderPoint) -> f64 {
        2.0 * spider_distance(x, y)
    }

    fn draw_on_tree(&self, rng: &mut ChaCha12Rng) -> SpiderPoint {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut leg = self.leg_probabilities.len() - 1;
        for (j, p) in self.leg_probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                leg = j;
                break;
            }
        }
        let t = rng.random_range(0.0..self.leg_length);
        SpiderPoint::new(leg, t).expect("uniform draw is on the tree")
    }

    /// Worst quadruple violation with a = 2ρ over random tree quadruples;
    /// tree (Hadamard) geometry makes this nonpositive up to floating point.
    pub fn verify_quadruple_inequality(&self, n_quadruples: usize, rng: &mut ChaCha12Rng) -> f64 {
        max_quadruple_violation(
            n_quadruples,
            rng,
            |r| self.draw_on_tree(r),
            |r| self.draw_on_tree(r),
            |phi, x| self.loss(phi, x),
            |x, y| self.a_bound(x, y),
            spider_distance,
            1.0,
        )
    }

    /// Worst violation of ϑ(φ, S)² ≤ J(φ) − J* over random tree points
    /// (τ = 1). Cross-leg comparisons leave slack p_j + p_{j*} ≤ 1, so the
    /// sweep should see only nonpositive values.
    pub fn verify_variance_inequality(&self, n_points: usize, rng: &mut ChaCha12Rng) -> f64 {
        let truth = self.population_minimizer();
        let j_star = self.population_objective(&truth);
        max_variance_violation(
            n_points,
            rng,
            |r| self.draw_on_tree(r),
            |phi| self.population_objective(phi),
            j_star,
            f64::INFINITY,
            |phi| spider_distance(phi, &truth),
            1.0,
            2.0,
        )
    }

    fn population_minimizer(&self) -> SpiderPoint {
        let offsets = self.population_leg_offsets();
        let mut best = SpiderPoint::origin();
        for (j, off) in offsets.iter().enumerate() {
            if *off > best.t {
                best = SpiderPoint::new(j, *off).expect("offset is positive and finite");
            }
        }
        best
    }
}

impl EstimationProblem for SpiderTreeBarycenterProblem {
    type Point = SpiderPoint;
    type Sample = SpiderPoint;

    fn sample(&self, rng: &RngSpec, n: usize) -> SampleBatch<SpiderPoint> {
        let mut r = rng.rng();
        let samples = (0..n).map(|_| self.draw_on_tree(&mut r)).collect();
        SampleBatch::new(samples, rng.stream_id)
    }

    fn solve_empirical(
        &self,
        batch: &SampleBatch<SpiderPoint>,
    ) -> Result<PointSet<SpiderPoint>, SolveError> {
        let (best_t, winners) = per_leg_optima(batch, &self.tree)?;
        if best_t == 0.0 {
            return Ok(PointSet::singleton(SpiderPoint::origin()));
        }
        let points = winners
            .into_iter()
            .map(|j| SpiderPoint::new(j, best_t))
            .collect::<Result<Vec<_>, _>>()?;
        PointSet::new(points).map_err(|_| SolveError::EmptyBatch)
    }

    fn true_minimizers(&self) -> PointSet<SpiderPoint> {
        PointSet::singleton(self.population_minimizer())
    }

    fn distance(&self, p: &SpiderPoint, q: &SpiderPoint) -> f64 {
        spider_distance(p, q)
    }

    fn params(&self) -> ConcentrationParams {
        // ρ is bounded by 2L on the sampled tree, so the ψ₁ envelope is the
        // closed-form bounded one and a = 2ρ doubles it.
        let psi1_rho = psi_bounded(2.0 * self.leg_length, 1.0);
        ConcentrationParams {
            beta: 2.0,
            alpha: 1.0,
            tau: 1.0,
            j0: f64::INFINITY,
            psi1_a: 2.0 * psi1_rho.value,
            diam_s: 0.0,
            eta: RateFn::Zero,
            kappa: RateFn::Zero,
            iota: RateFn::Zero,
        }
    }
}
