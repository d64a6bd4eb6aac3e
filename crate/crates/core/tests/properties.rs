//! Property-based tests: operator identities and equivariances that must
//! hold on arbitrary (valid) inputs, not just the fixtures we thought of.

mod common;

use deq_core::boundary::{self, BoundaryCurve, FlatCurve};
use deq_core::flatten;
use deq_core::geometry::{Point2, Point3};
use deq_core::ops;
use deq_core::synth;
use deq_core::PlanarMap;
use proptest::prelude::*;

/// 5×5-vertex grid with every vertex displaced by the given fractions of the
/// cell size. Small enough fractions keep all faces positively oriented.
fn jittered_map(jitter: &[(f64, f64)]) -> PlanarMap {
    let cells = 4;
    let side = 2.0;
    let h = side / cells as f64;
    let base = synth::square_grid(cells, side);
    let coords = base
        .vertices()
        .iter()
        .zip(jitter)
        .map(|(p, &(jx, jy))| Point2::new(p.x + jx * h, p.y + jy * h))
        .collect();
    PlanarMap::new_land(coords, base.faces().to_vec()).expect("jittered grid stays valid")
}

fn jitter_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-0.22..0.22f64, -0.22..0.22f64), 25)
}

/// Closed star-shaped polygon in 3D: strictly increasing angles, wobbly
/// radii, and a mild height field.
fn star_polygon_strategy() -> impl Strategy<Value = Vec<Point3<f64>>> {
    (6usize..24)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(0.5..1.6f64, n),
                proptest::collection::vec(-0.25..0.25f64, n),
            )
        })
        .prop_map(|(radii, heights)| {
            let n = radii.len();
            radii
                .iter()
                .zip(&heights)
                .enumerate()
                .map(|(k, (&r, &z))| {
                    let theta = k as f64 / n as f64 * std::f64::consts::TAU;
                    Point3::new(r * theta.cos(), r * theta.sin(), z)
                })
                .collect()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// The face gradient of an affine field is that field's linear part,
    /// exactly, on every face of every valid map.
    #[test]
    fn face_gradient_reproduces_affine_fields(
        jitter in jitter_strategy(),
        a in -5.0..5.0f64,
        b in -5.0..5.0f64,
        c in -5.0..5.0f64,
    ) {
        let map = jittered_map(&jitter);
        prop_assume!((0..map.face_count()).all(|f| map.signed_face_area(f) > 1e-6));

        let u: Vec<f64> = map.coords.iter().map(|p| a * p.x + b * p.y + c).collect();
        let grads = ops::face_gradient(&map, &u).unwrap();
        let scale = a.abs().max(b.abs()).max(1.0);
        for g in &grads {
            prop_assert!((g.x - a).abs() <= 1e-9 * scale);
            prop_assert!((g.y - b).abs() <= 1e-9 * scale);
        }
    }

    /// Relabeling vertices must permute the Laplacian's entries and nothing
    /// else: L'[σ(i), σ(j)] = L[i, j].
    #[test]
    fn laplacian_is_permutation_equivariant(
        jitter in jitter_strategy(),
        seed_perm in proptest::collection::vec(0u64..u64::MAX, 25),
    ) {
        let map = jittered_map(&jitter);
        prop_assume!((0..map.face_count()).all(|f| map.signed_face_area(f) > 1e-6));
        let n = map.vertex_count();

        // Deterministic permutation from the drawn keys.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| seed_perm[v]);
        let mut sigma = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            sigma[old] = new;
        }

        let mut coords = vec![Point2::new(0.0, 0.0); n];
        for v in 0..n {
            coords[sigma[v]] = map.coords[v];
        }
        let faces = map
            .faces
            .iter()
            .map(|&[i, j, k]| [sigma[i], sigma[j], sigma[k]])
            .collect();
        let permuted = PlanarMap::new_land(coords, faces).unwrap();

        let lap = ops::cotan_laplacian(&map).unwrap();
        let lap_p = ops::cotan_laplacian(&permuted).unwrap();
        let dense = common::csr_to_dense(&lap.l);
        let dense_p = common::csr_to_dense(&lap_p.l);
        for i in 0..n {
            prop_assert!((lap.d[i] - lap_p.d[sigma[i]]).abs() <= 1e-12 * lap.d[i].abs());
            for j in 0..n {
                prop_assert!((dense[i][j] - dense_p[sigma[i]][sigma[j]]).abs() <= 1e-9);
            }
        }
    }

    /// All three face/vertex transition matrices are row-stochastic.
    #[test]
    fn transition_matrices_are_row_stochastic(jitter in jitter_strategy()) {
        let map = jittered_map(&jitter);
        prop_assume!((0..map.face_count()).all(|f| map.signed_face_area(f) > 1e-6));
        let t = ops::transitions(&map).unwrap();
        for m in [&t.m_vf, &t.m_fv, &t.w_fv] {
            for i in 0..m.n_rows() {
                let (_, values) = m.row(i);
                let sum: f64 = values.iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12, "row {i} sums to {sum}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Rescaled turning angles of any closed 3D polygon sum to exactly 2π,
    /// and the replayed curve is simple, closed, and convex.
    #[test]
    fn turning_angles_rescale_to_a_convex_curve(points in star_polygon_strategy()) {
        let n = points.len();
        let curve = BoundaryCurve::from_points(points, (0..n).collect()).unwrap();
        let kappa = match boundary::discrete_curvature(&curve) {
            Ok(k) => k,
            // Colinear reversals are rejected inputs, not failures.
            Err(_) => return Ok(()),
        };
        let rescaled = boundary::rescale_turning_angles(&kappa).unwrap();
        let sum: f64 = rescaled.iter().sum();
        prop_assert!((sum - std::f64::consts::TAU).abs() <= 1e-12);

        let flat = boundary::flatten_boundary(&curve).unwrap();
        let check = boundary::verify_convex_simple(&flat.points);
        prop_assert!(check.is_valid(), "replayed curve failed: {check:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    /// The harmonic system has zero interior row sums, so transforming the
    /// boundary affinely transforms the whole solution the same way.
    #[test]
    fn tutte_commutes_with_affine_boundary_maps(
        seed in 0u64..1024,
        m00 in 0.6..1.8f64,
        m01 in -0.5..0.5f64,
        m10 in -0.5..0.5f64,
        m11 in 0.6..1.8f64,
        tx in -3.0..3.0f64,
        ty in -3.0..3.0f64,
    ) {
        prop_assume!(m00 * m11 - m01 * m10 > 0.2);

        let mesh = synth::random_disk_mesh(seed);
        let curve = boundary::flatten_boundary(&BoundaryCurve::from_mesh(&mesh).unwrap()).unwrap();
        let base = flatten::tutte_flatten(&mesh, &curve).unwrap();

        let apply = |p: &Point2<f64>| Point2::new(
            m00 * p.x + m01 * p.y + tx,
            m10 * p.x + m11 * p.y + ty,
        );
        let moved = FlatCurve::from_points(
            curve.points.iter().map(&apply).collect(),
            curve.mesh_vertices.clone(),
        );
        let transformed = flatten::tutte_flatten(&mesh, &moved).unwrap();

        let scale = base
            .coords
            .iter()
            .map(|p| p.coords.norm())
            .fold(1.0, f64::max);
        for (p, q) in base.coords.iter().zip(&transformed.coords) {
            prop_assert!((apply(p) - q).norm() <= 1e-9 * scale);
        }
    }
}
