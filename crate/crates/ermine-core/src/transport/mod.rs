//! Exact discrete optimal transport on bounded grids, Kantorovich
//! potentials, and the entropic-Wasserstein barycenter solver.
//!
//! Everything here is exact (network-flow LP, no Sinkhorn smoothing): the
//! quadruple-inequality and strong-convexity verifications downstream need
//! the genuine squared Wasserstein distance, and a regularized surrogate
//! would contaminate them.

pub mod entropic;
mod simplex;

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// Largest combined support for one exact transport solve.
pub const MAX_SUPPORT: usize = 2_000;

/// A uniform cell-centered grid over a bounded rectangle Ω in 1 or 2
/// dimensions. Node coordinates per axis are strictly increasing; every
/// cell has the same volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
    cell_volume: f64,
}

impl Grid {
    /// n cell-centered nodes on the segment [a, b].
    pub fn line(n: usize, a: f64, b: f64) -> Result<Self, TransportError> {
        Self::from_axes(alloc::vec![Self::centers(n, a, b)?])
    }

    /// nx × ny cell-centered nodes on the rectangle [ax, bx] × [ay, by].
    pub fn plane(
        nx: usize,
        ny: usize,
        (ax, bx): (f64, f64),
        (ay, by): (f64, f64),
    ) -> Result<Self, TransportError> {
        Self::from_axes(alloc::vec![
            Self::centers(nx, ax, bx)?,
            Self::centers(ny, ay, by)?
        ])
    }

    fn centers(n: usize, a: f64, b: f64) -> Result<Vec<f64>, TransportError> {
        if n == 0 || !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(TransportError::InvalidGrid);
        }
        let h = (b - a) / n as f64;
        Ok((0..n).map(|i| a + h * (i as f64 + 0.5)).collect())
    }

    /// Builds a grid from explicit per-axis node coordinates; nodes must be
    /// strictly increasing and uniformly spaced (relative 1e-9) so a single
    /// cell volume is well defined.
    pub fn from_axes(axes: Vec<Vec<f64>>) -> Result<Self, TransportError> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(TransportError::InvalidGrid);
        }
        let mut cell_volume = 1.0;
        for axis in &axes {
            if axis.is_empty() || axis.iter().any(|x| !x.is_finite()) {
                return Err(TransportError::InvalidGrid);
            }
            let spacing = if axis.len() == 1 {
                1.0
            } else {
                let h = axis[1] - axis[0];
                if !(h > 0.0) {
                    return Err(TransportError::InvalidGrid);
                }
                for w in axis.windows(2) {
                    if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
                        return Err(TransportError::InvalidGrid);
                    }
                }
                h
            };
            cell_volume *= spacing;
        }
        Ok(Self { axes, cell_volume })
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    /// Total number of nodes (product over axes).
    pub fn node_count(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Coordinates of node `idx`, with the first axis varying fastest; the
    /// second coordinate is 0 for 1-D grids.
    pub fn position(&self, idx: usize) -> (f64, f64) {
        let nx = self.axes[0].len();
        let x = self.axes[0][idx % nx];
        let y = if self.axes.len() == 2 {
            self.axes[1][idx / nx]
        } else {
            0.0
        };
        (x, y)
    }

    /// diam(Ω) over the node set: the spread is largest between opposite
    /// extreme corners, so it is the Euclidean norm of the per-axis spans.
    pub fn diameter(&self) -> f64 {
        self.axes
            .iter()
            .map(|axis| {
                let span = axis[axis.len() - 1] - axis[0];
                span * span
            })
            .sum::<f64>()
            .sqrt()
    }

    fn squared_distance(&self, i: usize, other: &Grid, j: usize) -> f64 {
        let (xi, yi) = self.position(i);
        let (xj, yj) = other.position(j);
        (xi - xj) * (xi - xj) + (yi - yj) * (yi - yj)
    }
}

/// A probability vector over the nodes of a grid; entry k is the density
/// value at node k times the cell volume.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDensity {
    grid: Grid,
    weights: Vec<f64>,
}

impl DiscreteDensity {
    /// Wraps an already-normalized weight vector: nonnegative entries
    /// summing to 1 within 1e-12.
    pub fn new(grid: Grid, weights: Vec<f64>) -> Result<Self, TransportError> {
        if weights.len() != grid.node_count() {
            return Err(TransportError::InvalidDensity);
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(TransportError::InvalidDensity);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(TransportError::InvalidDensity);
        }
        Ok(Self { grid, weights })
    }

    /// Normalizes a nonnegative weight vector with positive total mass.
    pub fn from_unnormalized(grid: Grid, values: &[f64]) -> Result<Self, TransportError> {
        if values.len() != grid.node_count()
            || values.iter().any(|&w| !(w >= 0.0) || !w.is_finite())
        {
            return Err(TransportError::InvalidDensity);
        }
        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return Err(TransportError::InvalidDensity);
        }
        let weights = values.iter().map(|w| w / total).collect();
        Ok(Self { grid, weights })
    }

    /// The uniform density on the grid.
    pub fn uniform(grid: Grid) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            weights: alloc::vec![1.0 / n as f64; n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ℓ₁ distance between the probability vectors, the grid quadrature of
    /// ∫|f − g| (twice the total-variation distance).
    pub fn l1_distance(&self, other: &DiscreteDensity) -> Result<f64, TransportError> {
        if self.grid != other.grid {
            return Err(TransportError::GridMismatch);
        }
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }
}

/// An optimal coupling with its cost and one pair of Kantorovich
/// potentials, normalized so the first source potential is 0 and extended
/// to zero-weight nodes by the c-transform (the one-sided derivative of the
/// cost in the weight).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// Coupling over the full node sets (zero rows/columns off-support).
    pub coupling: DMatrix<f64>,
    /// ⟨coupling, squared-distance cost⟩ = W₂²(a, b).
    pub cost: f64,
    /// Potential per node of the source density.
    pub potential_source: Vec<f64>,
    /// Potential per node of the target density.
    pub potential_target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransportError {
    /// Grid construction input invalid (empty, non-increasing, non-uniform).
    InvalidGrid,
    /// Weight vector invalid (wrong length, negative, not normalized).
    InvalidDensity,
    /// Operation requires both densities on the same grid.
    GridMismatch,
    /// Combined support exceeds [`MAX_SUPPORT`] nodes.
    SupportTooLarge,
    /// Marginal masses differ.
    InfeasibleMarginals,
    /// Entropy evaluation on a density with a nonpositive node.
    NonpositiveDensity,
    /// Barycenter weights invalid (length mismatch or not summing to 1).
    InvalidWeights,
    /// A solver parameter (λ, tolerance) out of range.
    InvalidParameter,
    /// The LP solver failed (basis degeneracy beyond the pivot cap).
    LpFailure(&'static str),
    /// Mirror descent did not converge; the best iterate is attached.
    NonConvergence { best: DiscreteDensity },
}

impl fmt::Display for TransportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportError::InvalidGrid => write!(f, "invalid grid axes"),
            TransportError::InvalidDensity => write!(f, "invalid density weights"),
            TransportError::GridMismatch => write!(f, "densities live on different grids"),
            TransportError::SupportTooLarge => {
                write!(f, "combined support exceeds {MAX_SUPPORT} nodes")
            }
            TransportError::InfeasibleMarginals => write!(f, "marginal masses differ"),
            TransportError::NonpositiveDensity => {
                write!(f, "entropy undefined on a nonpositive density")
            }
            TransportError::InvalidWeights => write!(f, "mixture weights must sum to 1"),
            TransportError::InvalidParameter => write!(f, "solver parameter out of range"),
            TransportError::LpFailure(msg) => write!(f, "transport LP failed: {msg}"),
            TransportError::NonConvergence { .. } => {
                write!(f, "barycenter solver did not converge")
            }
        }
    }
}

impl core::error::Error for TransportError {}

/// Exact squared 2-Wasserstein distance between two grid densities, with
/// the optimal coupling and dual potentials.
///
/// 1-D instances take the monotone-coupling fast path (optimal for the
/// convex cost |x−y|²); everything else runs the network simplex. Both
/// routes satisfy the same primal-dual gap guarantee and are compared
/// against each other in the test suite.
pub fn w2_exact(a: &DiscreteDensity, b: &DiscreteDensity) -> Result<TransportPlan, TransportError> {
    let sum_a: f64 = a.weights.iter().sum();
    let sum_b: f64 = b.weights.iter().sum();
    if (sum_a - sum_b).abs() > 1e-9 {
        return Err(TransportError::InfeasibleMarginals);
    }

    let support_a: Vec<usize> = (0..a.weights.len()).filter(|&i| a.weights[i] > 0.0).collect();
    let support_b: Vec<usize> = (0..b.weights.len()).filter(|&j| b.weights[j] > 0.0).collect();
    if support_a.len() + support_b.len() > MAX_SUPPORT {
        return Err(TransportError::SupportTooLarge);
    }
    if support_a.is_empty() || support_b.is_empty() {
        return Err(TransportError::InvalidDensity);
    }

    let wa: Vec<f64> = support_a.iter().map(|&i| a.weights[i]).collect();
    let wb: Vec<f64> = support_b.iter().map(|&j| b.weights[j]).collect();
    let mut cost = DMatrix::zeros(support_a.len(), support_b.len());
    for (r, &i) in support_a.iter().enumerate() {
        for (c, &j) in support_b.iter().enumerate() {
            cost[(r, c)] = a.grid.squared_distance(i, &b.grid, j);
        }
    }

    let one_dimensional = a.grid.dimension() == 1 && b.grid.dimension() == 1;
    let solution = if one_dimensional {
        simplex::monotone_chain(&wa, &wb, &cost)
    } else {
        simplex::transportation_simplex(&wa, &wb, &cost)
    }
    .map_err(TransportError::LpFailure)?;

    let mut coupling = DMatrix::zeros(a.weights.len(), b.weights.len());
    let mut total_cost = 0.0;
    for (r, &i) in support_a.iter().enumerate() {
        for (c, &j) in support_b.iter().enumerate() {
            let flow = solution.coupling[(r, c)];
            if flow > 0.0 {
                coupling[(i, j)] = flow;
                total_cost += flow * cost[(r, c)];
            }
        }
    }

    // Extend the potentials off-support by the c-transform, then normalize
    // the first source entry to 0.
    let mut potential_source = alloc::vec![0.0_f64; a.weights.len()];
    let mut potential_target = alloc::vec![0.0_f64; b.weights.len()];
    for (r, &i) in support_a.iter().enumerate() {
        potential_source[i] = solution.u[r];
    }
    for (c, &j) in support_b.iter().enumerate() {
        potential_target[j] = solution.v[c];
    }
    for (i, p) in potential_source.iter_mut().enumerate() {
        if a.weights[i] > 0.0 {
            continue;
        }
        *p = support_b
            .iter()
            .enumerate()
            .map(|(c, &j)| a.grid.squared_distance(i, &b.grid, j) - solution.v[c])
            .fold(f64::INFINITY, f64::min);
    }
    for (j, p) in potential_target.iter_mut().enumerate() {
        if b.weights[j] > 0.0 {
            continue;
        }
        *p = support_a
            .iter()
            .enumerate()
            .map(|(r, &i)| a.grid.squared_distance(i, &b.grid, j) - solution.u[r])
            .fold(f64::INFINITY, f64::min);
    }
    let shift = potential_source[0];
    for p in &mut potential_source {
        *p -= shift;
    }
    for p in &mut potential_target {
        *p += shift;
    }

    Ok(TransportPlan {
        coupling,
        cost: total_cost,
        potential_source,
        potential_target,
    })
}
