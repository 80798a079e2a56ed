//! Exact solvers for the discrete transportation LP
//!
//!   min Σ_{ij} c_{ij} π_{ij}   s.t.  π 1 = a,  πᵀ1 = b,  π ≥ 0,
//!
//! by network simplex on the bipartite support graph, plus the 1-D fast
//! path where the monotone (northwest-corner) coupling is already optimal
//! for convex costs and only the tree duals need to be read off.
//!
//! Both routes return the same data: the coupling restricted to the given
//! supports and one pair of Kantorovich potentials (u, v) with u_i + v_j =
//! c_{ij} on every basic edge, so the dual value Σ a_i u_i + Σ b_j v_j
//! matches the primal cost up to floating-point accumulation.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy)]
struct BasisEdge {
    i: usize,
    j: usize,
    flow: f64,
}

/// Coupling and potentials on the support-restricted problem.
pub(crate) struct LpSolution {
    pub coupling: DMatrix<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Northwest-corner initial basis: exactly m + n − 1 basic cells forming a
/// spanning tree, possibly with zero flows (degenerate).
///
/// When both supports are sorted by position this is the monotone coupling.
fn northwest_corner(a: &[f64], b: &[f64]) -> Vec<BasisEdge> {
    let (m, n) = (a.len(), b.len());
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut edges = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let f = ra[i].min(rb[j]);
        edges.push(BasisEdge { i, j, flow: f });
        ra[i] -= f;
        rb[j] -= f;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 {
            i += 1;
        } else if i == m - 1 {
            j += 1;
        } else if ra[i] <= 0.0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    edges
}

/// Tree duals: root u_0 = 0 and u_i + v_j = c_{ij} propagated along the
/// basis. Fails if the basis does not span the bipartite node set.
fn tree_duals(
    edges: &[BasisEdge],
    m: usize,
    n: usize,
    cost: &DMatrix<f64>,
) -> Result<(Vec<f64>, Vec<f64>), &'static str> {
    let nodes = m + n;
    let mut adjacency = vec![Vec::new(); nodes];
    for (e_idx, e) in edges.iter().enumerate() {
        adjacency[e.i].push(e_idx);
        adjacency[m + e.j].push(e_idx);
    }
    let mut u = vec![0.0_f64; m];
    let mut v = vec![0.0_f64; n];
    let mut visited = vec![false; nodes];
    let mut stack = vec![0usize];
    visited[0] = true;
    while let Some(node) = stack.pop() {
        for &e_idx in &adjacency[node] {
            let e = edges[e_idx];
            let other = if node == e.i { m + e.j } else { e.i };
            if !visited[other] {
                visited[other] = true;
                if other >= m {
                    v[other - m] = cost[(e.i, e.j)] - u[e.i];
                } else {
                    u[other] = cost[(e.i, e.j)] - v[e.j];
                }
                stack.push(other);
            }
        }
    }
    if visited.iter().all(|&x| x) {
        Ok((u, v))
    } else {
        Err("transport basis lost connectivity")
    }
}

fn assemble(edges: &[BasisEdge], m: usize, n: usize, u: Vec<f64>, v: Vec<f64>) -> LpSolution {
    let mut coupling = DMatrix::zeros(m, n);
    for e in edges {
        // Degenerate pivots can leave −0.0 or tiny negative round-off.
        coupling[(e.i, e.j)] = e.flow.max(0.0);
    }
    LpSolution { coupling, u, v }
}

/// Monotone-coupling fast path for 1-D problems with supports sorted by
/// position: the northwest-corner plan is optimal, so no pivoting.
pub(crate) fn monotone_chain(
    a: &[f64],
    b: &[f64],
    cost: &DMatrix<f64>,
) -> Result<LpSolution, &'static str> {
    let edges = northwest_corner(a, b);
    let (u, v) = tree_duals(&edges, a.len(), b.len(), cost)?;
    Ok(assemble(&edges, a.len(), b.len(), u, v))
}

/// Full network simplex: northwest-corner start, most-negative-reduced-cost
/// pricing with first-in-scan-order tie-break, cycle pivots with the
/// first-along-path leaving rule. Deterministic for fixed inputs.
pub(crate) fn transportation_simplex(
    a: &[f64],
    b: &[f64],
    cost: &DMatrix<f64>,
) -> Result<LpSolution, &'static str> {
    let (m, n) = (a.len(), b.len());
    let mut edges = northwest_corner(a, b);
    let cost_scale = cost.iter().fold(1.0_f64, |mx, &c| mx.max(c.abs()));
    let tol = 1e-12 * cost_scale;
    let max_pivots = 10_000 + 20 * m * n;

    for _ in 0..max_pivots {
        let (u, v) = tree_duals(&edges, m, n, cost)?;

        let mut entering: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            for j in 0..n {
                let rc = cost[(i, j)] - u[i] - v[j];
                if rc < -tol && entering.is_none_or(|(best, _, _)| rc < best) {
                    entering = Some((rc, i, j));
                }
            }
        }
        let Some((_, ei, ej)) = entering else {
            return Ok(assemble(&edges, m, n, u, v));
        };

        // Unique tree path from source ei to sink m + ej.
        let nodes = m + n;
        let mut adjacency = vec![Vec::new(); nodes];
        for (e_idx, e) in edges.iter().enumerate() {
            adjacency[e.i].push(e_idx);
            adjacency[m + e.j].push(e_idx);
        }
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes]; // (node, edge)
        let mut visited = vec![false; nodes];
        let mut stack = vec![ei];
        visited[ei] = true;
        while let Some(node) = stack.pop() {
            if node == m + ej {
                break;
            }
            for &e_idx in &adjacency[node] {
                let e = edges[e_idx];
                let other = if node == e.i { m + e.j } else { e.i };
                if !visited[other] {
                    visited[other] = true;
                    parent[other] = Some((node, e_idx));
                    stack.push(other);
                }
            }
        }
        let mut path = Vec::new(); // edge indices from ei toward m + ej
        let mut node = m + ej;
        while node != ei {
            let (prev, e_idx) = parent[node].ok_or("transport pivot path not found")?;
            path.push(e_idx);
            node = prev;
        }
        path.reverse();

        // Alternating cycle: the entering edge carries +θ, path edges
        // alternate −θ, +θ, ... starting from the entering source.
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None; // position in `path`
        for (t, &e_idx) in path.iter().enumerate() {
            if t % 2 == 0 && edges[e_idx].flow < theta {
                theta = edges[e_idx].flow;
                leaving = Some(t);
            }
        }
        let leaving = leaving.ok_or("transport pivot found no leaving edge")?;
        for (t, &e_idx) in path.iter().enumerate() {
            if t % 2 == 0 {
                edges[e_idx].flow -= theta;
            } else {
                edges[e_idx].flow += theta;
            }
        }
        edges[path[leaving]] = BasisEdge {
            i: ei,
            j: ej,
            flow: theta,
        };
    }
    Err("transport pivot limit exceeded")
}
