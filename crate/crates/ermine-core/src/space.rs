//! Metric point sets, the asymmetric set-to-set divergence, and the
//! estimation-problem interface.
//!
//! An estimation problem lives on a metric space (M, ϑ). Minimizer sets are
//! finite (every worked example has one or two minimizers), so both the true
//! set S and the empirical set Ŝ are [`PointSet`]s, and the quantity of
//! interest is the one-sided divergence
//!
//!   ϑ(E₁; E₂) = sup_{φ₁∈E₁} inf_{φ₂∈E₂} ϑ(φ₁, φ₂),
//!
//! which is zero exactly when E₁ ⊆ E₂ and satisfies the triangle inequality,
//! but is not symmetric.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// A non-empty finite set of points in some metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<P> {
    points: Vec<P>,
}

impl<P> PointSet<P> {
    /// Wraps a non-empty list of points.
    pub fn new(points: Vec<P>) -> Result<Self, SpaceError> {
        if points.is_empty() {
            return Err(SpaceError::EmptyPointSet);
        }
        Ok(Self { points })
    }

    /// A one-point set.
    pub fn singleton(point: P) -> Self {
        Self {
            points: alloc::vec![point],
        }
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // by construction
    }
}

/// The asymmetric sup-inf divergence between finite sets:
/// sup over `a` of the distance to the nearest point of `b`.
///
/// Returns 0 iff every point of `a` has a copy in `b` (so a ⊆ b), even when
/// the sets differ as sets.
pub fn set_distance<P>(
    a: &PointSet<P>,
    b: &PointSet<P>,
    metric: impl Fn(&P, &P) -> f64,
) -> f64 {
    let mut sup = 0.0_f64;
    for p in a.points() {
        let mut inf = f64::INFINITY;
        for q in b.points() {
            let d = metric(p, q);
            if d < inf {
                inf = d;
            }
        }
        if inf > sup {
            sup = inf;
        }
    }
    sup
}

/// Checks the triangle inequality ϑ(a;c) ≤ ϑ(a;b) + ϑ(b;c) for the sup-inf
/// divergence, with an absolute slack of 1e-12 for floating-point noise.
pub fn check_triangle<P>(
    a: &PointSet<P>,
    b: &PointSet<P>,
    c: &PointSet<P>,
    metric: impl Fn(&P, &P) -> f64,
) -> bool {
    let ac = set_distance(a, c, &metric);
    let ab = set_distance(a, b, &metric);
    let bc = set_distance(b, c, &metric);
    ac <= ab + bc + 1e-12
}

/// Deterministic randomness: a base seed for the whole run plus a stream id
/// per replication. Identical `(base_seed, stream_id)` pairs reproduce
/// identical sample sequences regardless of scheduling, so parallel and
/// serial runs agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub base_seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        Self {
            base_seed,
            stream_id,
        }
    }

    /// Derives the spec for a numbered substream (replication, calibration
    /// pass, …) of this stream.
    pub fn substream(&self, id: u64) -> Self {
        Self {
            base_seed: self.base_seed,
            stream_id: self.stream_id.wrapping_add(id),
        }
    }

    /// Instantiates the deterministic generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// An ordered batch of i.i.d. samples, carrying the stream id it was drawn
/// from (the base seed lives in the run configuration).
#[derive(Debug, Clone)]
pub struct SampleBatch<S> {
    samples: Vec<S>,
    seed: u64,
}

impl<S> SampleBatch<S> {
    pub fn new(samples: Vec<S>, seed: u64) -> Self {
        Self { samples, seed }
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    /// The stream id this batch was drawn from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }
}

/// An estimation problem: a sampling model μ, an empirical solver, the true
/// minimizer set, the metric ϑ on parameters, and the constants its
/// concentration bound consumes.
pub trait EstimationProblem {
    /// Parameter-space points (elements of M).
    type Point: Clone;
    /// Sample-space points (elements of X).
    type Sample: Clone;

    /// Draws n i.i.d. samples from μ on the given stream.
    fn sample(&self, rng: &RngSpec, n: usize) -> SampleBatch<Self::Sample>;

    /// Minimizers of the empirical risk for this batch. Deterministic given
    /// the batch.
    fn solve_empirical(
        &self,
        batch: &SampleBatch<Self::Sample>,
    ) -> Result<PointSet<Self::Point>, SolveError>;

    /// The population minimizer set S, known analytically or precomputed at
    /// a tolerance far below sampling error.
    fn true_minimizers(&self) -> PointSet<Self::Point>;

    /// The metric ϑ on parameter points.
    fn distance(&self, p: &Self::Point, q: &Self::Point) -> f64;

    /// The constants entering this problem's concentration bound.
    fn params(&self) -> crate::bounds::ConcentrationParams;
}

/// Failure of an empirical solver on one batch. Recorded per replication by
/// the experiment harness, never fatal there.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// The batch was empty.
    EmptyBatch,
    /// The empirical covariance vanished, so no leading direction exists.
    DegenerateCovariance,
    /// An iterative solver did not meet its stopping rule within its
    /// iteration budget; the message carries the last iterate.
    NonConvergence(String),
    /// A sample failed the problem's domain check (e.g. a point off the
    /// metric tree).
    InvalidSample(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::EmptyBatch => write!(f, "empty batch"),
            SolveError::DegenerateCovariance => write!(f, "degenerate covariance"),
            SolveError::NonConvergence(detail) => write!(f, "solver did not converge: {detail}"),
            SolveError::InvalidSample(detail) => write!(f, "invalid sample: {detail}"),
        }
    }
}

impl core::error::Error for SolveError {}

/// Errors from set-level operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceError {
    /// Point sets must be non-empty.
    EmptyPointSet,
}

impl fmt::Display for SpaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceError::EmptyPointSet => write!(f, "empty point set"),
        }
    }
}

impl core::error::Error for SpaceError {}
