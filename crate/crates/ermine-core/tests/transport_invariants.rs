//! Metric-space structure of the exact transport solver: a pinned instance
//! with its primal-dual certificate, an independent staircase oracle for the
//! 1-D fast path, agreement between the monotone and simplex routes on the
//! same geometry, and the metric axioms (symmetry, triangle inequality,
//! convexity in the marginal) that every downstream barycenter computation
//! leans on.

use approx::assert_relative_eq;
use ermine_core::space::RngSpec;
use ermine_core::transport::entropic::verify_entropic_quadruple;
use ermine_core::transport::{w2_exact, DiscreteDensity, Grid};
use rand::Rng;

/// Eight equispaced nodes on [0, 1] at i/7, built from explicit coordinates
/// (so the node positions are exactly the rationals the pinned cost assumes).
fn eight_node_grid() -> Grid {
    Grid::from_axes(vec![(0..8).map(|i| i as f64 / 7.0).collect()]).unwrap()
}

/// Positive random weights summing to one: normalized exponential draws, so
/// every node carries mass and the support checks never trigger.
fn random_weights<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln() + 1e-9
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

fn random_density<R: Rng>(grid: &Grid, rng: &mut R) -> DiscreteDensity {
    let weights = random_weights(grid.node_count(), rng);
    DiscreteDensity::new(grid.clone(), weights).unwrap()
}

/// Independent oracle for 1-D optimal transport with cost |x−y|²: the
/// monotone (quantile) coupling, walked as a two-pointer staircase over the
/// sorted node masses. Optimality for convex costs is classical, so any
/// disagreement with the solver is a solver bug.
fn staircase_cost(xs: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut remaining_a = a.to_vec();
    let mut remaining_b = b.to_vec();
    let (mut i, mut j) = (0, 0);
    let mut cost = 0.0;
    while i < xs.len() && j < xs.len() {
        let moved = remaining_a[i].min(remaining_b[j]);
        if moved > 0.0 {
            let d = xs[i] - xs[j];
            cost += moved * d * d;
            remaining_a[i] -= moved;
            remaining_b[j] -= moved;
        }
        if remaining_a[i] <= 1e-15 {
            i += 1;
        }
        if j < xs.len() && remaining_b[j] <= 1e-15 {
            j += 1;
        }
    }
    cost
}

#[test]
fn pinned_instance_reproduces_its_cost_and_dual_certificate() {
    let grid = eight_node_grid();
    let a = DiscreteDensity::new(
        grid.clone(),
        vec![
            0.17837614211835057,
            0.17332959268814652,
            0.1769332604209774,
            0.020758858415255422,
            0.006413074916837146,
            0.10777766046252024,
            0.10460962029887755,
            0.23180179067903528,
        ],
    )
    .unwrap();
    let b = DiscreteDensity::new(
        grid.clone(),
        vec![
            0.013697637026178046,
            0.1807876378214879,
            0.012167485115563374,
            0.188122850088027,
            0.29907729059180294,
            0.0668339558602856,
            0.21274965852471758,
            0.026563484971937563,
        ],
    )
    .unwrap();

    let plan = w2_exact(&a, &b).unwrap();
    assert_relative_eq!(plan.cost, 0.037903006784887464, max_relative = 1e-12);

    // The coupling is a feasible transport plan: marginals match exactly up
    // to accumulation error.
    for (i, &ai) in a.weights().iter().enumerate() {
        let row: f64 = (0..8).map(|j| plan.coupling[(i, j)]).sum();
        assert_relative_eq!(row, ai, max_relative = 1e-9, epsilon = 1e-12);
    }
    for (j, &bj) in b.weights().iter().enumerate() {
        let col: f64 = (0..8).map(|i| plan.coupling[(i, j)]).sum();
        assert_relative_eq!(col, bj, max_relative = 1e-9, epsilon = 1e-12);
    }

    // The potentials certify optimality: feasible for the dual (u_i + v_j
    // never exceeds the pair cost) and with zero duality gap.
    for i in 0..8 {
        for j in 0..8 {
            let d = i as f64 / 7.0 - j as f64 / 7.0;
            assert!(
                plan.potential_source[i] + plan.potential_target[j] <= d * d + 1e-9,
                "dual infeasible at pair ({i}, {j})"
            );
        }
    }
    let dual_value: f64 = plan
        .potential_source
        .iter()
        .zip(a.weights())
        .map(|(u, w)| u * w)
        .sum::<f64>()
        + plan
            .potential_target
            .iter()
            .zip(b.weights())
            .map(|(v, w)| v * w)
            .sum::<f64>();
    assert_relative_eq!(dual_value, plan.cost, max_relative = 1e-9, epsilon = 1e-12);
}

#[test]
fn one_dimensional_cost_matches_the_independent_staircase_oracle() {
    let grid = Grid::line(64, 0.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..64).map(|i| grid.position(i).0).collect();
    for pair in 0..20 {
        let mut rng = RngSpec::new(301, pair).rng();
        let a = random_density(&grid, &mut rng);
        let b = random_density(&grid, &mut rng);
        let solver = w2_exact(&a, &b).unwrap().cost;
        let oracle = staircase_cost(&xs, a.weights(), b.weights());
        assert_relative_eq!(solver, oracle, max_relative = 1e-10, epsilon = 1e-14);
    }
}

#[test]
fn simplex_route_agrees_with_the_monotone_fast_path() {
    // The same node set once as a genuine 1-D grid (monotone coupling) and
    // once embedded as a 24 × 1 plane (network simplex): identical geometry,
    // disjoint code paths, equal optima.
    let line = Grid::line(24, 0.0, 2.0).unwrap();
    let xs: Vec<f64> = (0..24).map(|i| line.position(i).0).collect();
    let embedded = Grid::from_axes(vec![xs, vec![0.0]]).unwrap();
    for pair in 0..10 {
        let mut rng = RngSpec::new(302, pair).rng();
        let wa = random_weights(24, &mut rng);
        let wb = random_weights(24, &mut rng);
        let monotone = w2_exact(
            &DiscreteDensity::new(line.clone(), wa.clone()).unwrap(),
            &DiscreteDensity::new(line.clone(), wb.clone()).unwrap(),
        )
        .unwrap()
        .cost;
        let simplex = w2_exact(
            &DiscreteDensity::new(embedded.clone(), wa).unwrap(),
            &DiscreteDensity::new(embedded.clone(), wb).unwrap(),
        )
        .unwrap()
        .cost;
        assert_relative_eq!(simplex, monotone, max_relative = 1e-10, epsilon = 1e-14);
    }
}

#[test]
fn cost_is_symmetric_in_its_arguments() {
    let line = Grid::line(32, -1.0, 1.0).unwrap();
    for pair in 0..10 {
        let mut rng = RngSpec::new(303, pair).rng();
        let a = random_density(&line, &mut rng);
        let b = random_density(&line, &mut rng);
        let forward = w2_exact(&a, &b).unwrap().cost;
        let backward = w2_exact(&b, &a).unwrap().cost;
        assert_relative_eq!(forward, backward, max_relative = 1e-9, epsilon = 1e-12);
    }

    let plane = Grid::plane(3, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let mut rng = RngSpec::new(304, 0).rng();
    let a = random_density(&plane, &mut rng);
    let b = random_density(&plane, &mut rng);
    let forward = w2_exact(&a, &b).unwrap().cost;
    let backward = w2_exact(&b, &a).unwrap().cost;
    assert_relative_eq!(forward, backward, max_relative = 1e-9, epsilon = 1e-12);
}

#[test]
fn root_cost_satisfies_the_triangle_inequality() {
    let line = Grid::line(16, 0.0, 1.0).unwrap();
    for triple in 0..10 {
        let mut rng = RngSpec::new(305, triple).rng();
        let a = random_density(&line, &mut rng);
        let b = random_density(&line, &mut rng);
        let c = random_density(&line, &mut rng);
        let ac = w2_exact(&a, &c).unwrap().cost.sqrt();
        let ab = w2_exact(&a, &b).unwrap().cost.sqrt();
        let bc = w2_exact(&b, &c).unwrap().cost.sqrt();
        assert!(
            ac <= ab + bc + 1e-8,
            "triangle violated on the line: {ac} > {ab} + {bc}"
        );
    }

    let plane = Grid::plane(3, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
    for triple in 0..3 {
        let mut rng = RngSpec::new(306, triple).rng();
        let a = random_density(&plane, &mut rng);
        let b = random_density(&plane, &mut rng);
        let c = random_density(&plane, &mut rng);
        let ac = w2_exact(&a, &c).unwrap().cost.sqrt();
        let ab = w2_exact(&a, &b).unwrap().cost.sqrt();
        let bc = w2_exact(&b, &c).unwrap().cost.sqrt();
        assert!(
            ac <= ab + bc + 1e-8,
            "triangle violated on the plane: {ac} > {ab} + {bc}"
        );
    }
}

#[test]
fn squared_cost_is_convex_in_the_first_marginal() {
    // W₂² is jointly convex in its marginals, and the barycenter objective
    // inherits strict structure from exactly this inequality.
    let line = Grid::line(16, 0.0, 1.0).unwrap();
    for case in 0..8 {
        let mut rng = RngSpec::new(307, case).rng();
        let a = random_density(&line, &mut rng);
        let b = random_density(&line, &mut rng);
        let c = random_density(&line, &mut rng);
        let wa = w2_exact(&a, &c).unwrap().cost;
        let wb = w2_exact(&b, &c).unwrap().cost;
        for &t in &[0.25, 0.5, 0.75] {
            let mixed: Vec<f64> = a
                .weights()
                .iter()
                .zip(b.weights())
                .map(|(x, y)| (1.0 - t) * x + t * y)
                .collect();
            let mix = DiscreteDensity::from_unnormalized(line.clone(), &mixed).unwrap();
            let wm = w2_exact(&mix, &c).unwrap().cost;
            assert!(
                wm <= (1.0 - t) * wa + t * wb + 1e-9,
                "convexity violated at t = {t}: {wm} > {}",
                (1.0 - t) * wa + t * wb
            );
        }
    }
}

#[test]
fn plane_quadruples_respect_the_curvature_bound() {
    // The quadruple difference check on a genuinely 2-D grid drives the
    // network simplex through every call; the 1-D suites only ever touch
    // the monotone path.
    let plane = Grid::plane(4, 4, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let worst = verify_entropic_quadruple(&plane, 25, &RngSpec::new(31, 0)).unwrap();
    assert!(
        worst <= 1e-8,
        "quadruple inequality violated on the plane: worst slack {worst}"
    );
}

#[test]
fn plane_geometry_is_cell_centered() {
    let plane = Grid::plane(3, 2, (0.0, 3.0), (0.0, 1.0)).unwrap();
    assert_eq!(plane.dimension(), 2);
    assert_eq!(plane.node_count(), 6);
    // Cells are 1.0 × 0.5, nodes sit at cell centers, the first axis varies
    // fastest in the flat index.
    assert_relative_eq!(plane.cell_volume(), 0.5, max_relative = 1e-15);
    assert_eq!(plane.position(0), (0.5, 0.25));
    assert_eq!(plane.position(2), (2.5, 0.25));
    assert_eq!(plane.position(4), (1.5, 0.75));
    assert_relative_eq!(
        plane.diameter(),
        (2.0_f64 * 2.0 + 0.5 * 0.5).sqrt(),
        max_relative = 1e-15
    );
}
