//! Interior flattening: extend a convex boundary placement to the whole mesh.
//!
//! Both flattening schemes here solve a linear "spring" system: every interior
//! vertex is placed at a weighted average of its neighbours, while boundary
//! vertices are pinned to a prescribed convex curve. They differ only in the
//! edge weights:
//!
//! * [`tutte_flatten`] uses uniform weights. With a convex boundary the result
//!   is a bijection onto the polygon (no flipped faces), which makes it a
//!   reliable default initial layout.
//! * [`authalic_flatten`] uses area-preserving weights computed from the
//!   original embedded mesh: for the directed edge `(i, j)` the weight is
//!   `(cot γ + cot δ) / |x_i − x_j|²`, where `γ` and `δ` are the angles at the
//!   `x_j` corner of the two incident triangles. This reproduces planar input
//!   exactly and starts curved input much closer to area-correct, but the
//!   system is non-symmetric and bijectivity is not guaranteed, so the flip
//!   count is reported to the caller.
//!
//! Boundary conditions are applied by Dirichlet elimination: pinned columns
//! move to the right-hand side and only interior unknowns are solved for. The
//! eliminated system is negated so that the Tutte matrix becomes positive
//! definite (diagonal = vertex degree) and is dispatched to the conjugate
//! gradient solver; the authalic system goes through the general solver.

use crate::boundary::FlatCurve;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::mesh::{PlanarMap, TriMesh};
use crate::sparse::{CsrMatrix, SolveOptions};

/// Magnitude cap for individual cotangents in the authalic weights. Angles
/// approaching 0 or π would otherwise inject near-infinite weights from a
/// single sliver triangle and destroy the conditioning of the solve.
pub const COT_CLAMP: f64 = 1e4;

/// Relative solver tolerance for the flattening systems. Tighter than the
/// solver default because positional error is conditioning × residual and the
/// planar-reproduction property of the authalic weights is asserted to 1e-10.
const FLATTEN_TOL: f64 = 1e-12;

/// Pin assignment for one flattening solve: `positions[v]` is `Some` exactly
/// when vertex `v` lies on the boundary curve.
struct Pins {
    positions: Vec<Option<Point2<f64>>>,
    interior: Vec<usize>,
    /// Dense vertex id → row in the interior system (usize::MAX for pinned).
    interior_id: Vec<usize>,
}

/// Matches the flat curve against the mesh boundary loop and returns the pin
/// table. Every boundary vertex must be pinned exactly once; the curve is
/// keyed by mesh vertex id, so its traversal order need not match the loop's
/// starting point.
fn build_pins(mesh: &TriMesh, curve: &FlatCurve) -> Result<Pins> {
    let loop_vertices = mesh.boundary_loop_ccw()?;
    let n = mesh.vertex_count();
    let mut positions: Vec<Option<Point2<f64>>> = vec![None; n];
    for (&v, &p) in curve.mesh_vertices.iter().zip(curve.points.iter()) {
        if v >= n || positions[v].is_some() {
            return Err(Error::BoundaryMismatch {
                expected: loop_vertices.len(),
                got: curve.mesh_vertices.len(),
            });
        }
        positions[v] = Some(p);
    }
    let pinned = positions.iter().filter(|p| p.is_some()).count();
    if pinned != loop_vertices.len() || loop_vertices.iter().any(|&v| positions[v].is_none()) {
        return Err(Error::BoundaryMismatch {
            expected: loop_vertices.len(),
            got: curve.mesh_vertices.len(),
        });
    }

    let mut interior = Vec::new();
    let mut interior_id = vec![usize::MAX; n];
    for v in 0..n {
        if positions[v].is_none() {
            interior_id[v] = interior.len();
            interior.push(v);
        }
    }
    Ok(Pins {
        positions,
        interior,
        interior_id,
    })
}

/// Eliminates the pinned vertices from the row-sum-zero system
/// `Σ_j w_ij (φ_j − φ_i) = 0` and returns the negated interior matrix together
/// with the right-hand sides for the x and y coordinates.
///
/// `weights` lists directed entries `(i, j, w_ij)` with `i ≠ j`; duplicates
/// accumulate. Negation makes the diagonal `Σ_j w_ij` positive for positive
/// weights, which is the convention the SPD solver path expects.
fn eliminate_pins(
    weights: &[(usize, usize, f64)],
    pins: &Pins,
) -> Result<(CsrMatrix, Vec<f64>, Vec<f64>)> {
    let m = pins.interior.len();
    let mut triplets = Vec::new();
    let mut rhs_x = vec![0.0; m];
    let mut rhs_y = vec![0.0; m];
    for &(i, j, w) in weights {
        let row = pins.interior_id[i];
        if row == usize::MAX {
            continue; // pinned row: replaced by the Dirichlet condition
        }
        // Row i of the negated system: (Σ_j w_ij) φ_i − Σ_j w_ij φ_j = 0.
        triplets.push((row, row, w));
        match pins.positions[j] {
            None => triplets.push((row, pins.interior_id[j], -w)),
            Some(p) => {
                rhs_x[row] += w * p.x;
                rhs_y[row] += w * p.y;
            }
        }
    }
    let matrix = CsrMatrix::assemble(m, m, &triplets)?;
    Ok((matrix, rhs_x, rhs_y))
}

/// Assembles the solved interior coordinates and the pins into a planar map
/// over the original face list. Face orientation is preserved as-is so that
/// flipped triangles remain visible to the caller.
fn build_map(mesh: &TriMesh, pins: &Pins, sol_x: &[f64], sol_y: &[f64]) -> Result<PlanarMap> {
    let coords = (0..mesh.vertex_count())
        .map(|v| match pins.positions[v] {
            Some(p) => p,
            None => {
                let id = pins.interior_id[v];
                Point2::new(sol_x[id], sol_y[id])
            }
        })
        .collect();
    PlanarMap::new_land(coords, mesh.faces().to_vec())
}

fn flatten_solve_options(m: usize) -> SolveOptions {
    SolveOptions {
        tolerance: FLATTEN_TOL,
        max_iterations: Some(20 * m.max(1)),
    }
}

/// Flattens the mesh interior onto the given convex boundary curve using
/// uniform (graph-Laplacian) weights.
///
/// Every interior vertex ends at the barycentre of its neighbours. For a
/// convex boundary the layout is a bijection, so the returned map has no
/// flipped faces; this is the robust default initialization.
pub fn tutte_flatten(mesh: &TriMesh, curve: &FlatCurve) -> Result<PlanarMap> {
    let pins = build_pins(mesh, curve)?;
    let mut weights = Vec::with_capacity(2 * mesh.edges().len());
    for &(a, b) in mesh.edges() {
        weights.push((a, b, 1.0));
        weights.push((b, a, 1.0));
    }
    let (matrix, rhs_x, rhs_y) = eliminate_pins(&weights, &pins)?;
    if pins.interior.is_empty() {
        return build_map(mesh, &pins, &[], &[]);
    }
    let opts = flatten_solve_options(pins.interior.len());
    let (sol_x, _) = crate::sparse::solve_spd(&matrix, &rhs_x, None, opts)?;
    let (sol_y, _) = crate::sparse::solve_spd(&matrix, &rhs_y, None, opts)?;
    build_map(mesh, &pins, &sol_x, &sol_y)
}

/// Directed authalic weights `(i, j) ↦ (cot γ + cot δ) / |x_i − x_j|²`
/// measured on the embedded (3D) mesh, with each cotangent clamped to
/// [`COT_CLAMP`]. `γ` and `δ` are the angles at the `x_j` corner of the two
/// triangles incident to the edge; boundary edges contribute a single term.
fn authalic_weights(mesh: &TriMesh) -> Vec<(usize, usize, f64)> {
    let vs = mesh.vertices();
    let mut weights = Vec::with_capacity(6 * mesh.face_count());
    let cot_at = |corner: usize, p: usize, q: usize| -> f64 {
        let u = vs[p] - vs[corner];
        let v = vs[q] - vs[corner];
        let cross = u.cross(&v).norm();
        if cross == 0.0 {
            return COT_CLAMP; // degenerate corner; validation keeps these out
        }
        (u.dot(&v) / cross).clamp(-COT_CLAMP, COT_CLAMP)
    };
    for face in mesh.faces() {
        let [a, b, c] = *face;
        // For each directed edge (i, j) of the face, the angle at j between
        // the edge and the third vertex contributes to w_ij.
        for (i, j, k) in [(a, b, c), (b, c, a), (c, a, b)] {
            let len2 = (vs[i] - vs[j]).norm_squared();
            weights.push((i, j, cot_at(j, i, k) / len2));
            weights.push((j, i, cot_at(i, j, k) / len2));
        }
    }
    weights
}

/// Flattens the mesh interior onto the given convex boundary curve using
/// area-preserving weights from the embedded mesh.
///
/// Returns the map together with the number of flipped faces. The weights
/// reproduce planar input exactly, and on curved input they typically land far
/// closer to an area-correct layout than uniform weights do — but they can be
/// negative, so the map is not guaranteed injective. Callers decide whether a
/// nonzero flip count is acceptable for their pipeline.
pub fn authalic_flatten(mesh: &TriMesh, curve: &FlatCurve) -> Result<(PlanarMap, usize)> {
    let pins = build_pins(mesh, curve)?;
    let weights = authalic_weights(mesh);
    let (matrix, rhs_x, rhs_y) = eliminate_pins(&weights, &pins)?;
    let map = if pins.interior.is_empty() {
        build_map(mesh, &pins, &[], &[])?
    } else {
        let opts = flatten_solve_options(pins.interior.len());
        let (sol_x, _) = crate::sparse::solve_general(&matrix, &rhs_x, opts)?;
        let (sol_y, _) = crate::sparse::solve_general(&matrix, &rhs_y, opts)?;
        build_map(mesh, &pins, &sol_x, &sol_y)?
    };
    let flipped = map.flipped_face_count();
    if flipped > 0 {
        log::warn!("area-preserving flattening produced {flipped} flipped face(s)");
    }
    Ok((map, flipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{self, BoundaryCurve};
    use crate::geometry::Point3;

    /// n×n planar grid of unit squares split into triangles, z = 0.
    fn grid_mesh(n: usize) -> TriMesh {
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point3::new(i as f64, j as f64, 0.0));
            }
        }
        let at = |i: usize, j: usize| j * (n + 1) + i;
        let mut faces = Vec::new();
        for j in 0..n {
            for i in 0..n {
                faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
                faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
            }
        }
        TriMesh::new(vertices, faces).unwrap()
    }

    /// The grid's own boundary polygon as a pin curve: the identity target.
    fn grid_boundary_curve(mesh: &TriMesh) -> FlatCurve {
        let loop_vertices = mesh.boundary_loop_ccw().unwrap();
        let points = loop_vertices
            .iter()
            .map(|&v| {
                let p = mesh.vertices()[v];
                Point2::new(p.x, p.y)
            })
            .collect::<Vec<_>>();
        FlatCurve::from_points(points, loop_vertices)
    }

    fn flatten_circle_curve(mesh: &TriMesh) -> FlatCurve {
        let curve = BoundaryCurve::from_mesh(mesh).unwrap();
        boundary::flatten_boundary(&curve).unwrap()
    }

    #[test]
    fn tutte_convex_boundary_has_no_flips() {
        let mesh = grid_mesh(6);
        let curve = flatten_circle_curve(&mesh);
        let map = tutte_flatten(&mesh, &curve).unwrap();
        assert_eq!(map.flipped_face_count(), 0);
        assert_eq!(map.coords.len(), mesh.vertex_count());
        // Pins survive the solve untouched.
        for (&v, &p) in curve.mesh_vertices.iter().zip(curve.points.iter()) {
            assert_eq!(map.coords[v], p);
        }
    }

    #[test]
    fn tutte_interior_is_neighbour_average() {
        let mesh = grid_mesh(3);
        let curve = flatten_circle_curve(&mesh);
        let map = tutte_flatten(&mesh, &curve).unwrap();
        let flags = mesh.boundary_flags();
        // Check the averaging property at every interior vertex directly.
        for v in 0..mesh.vertex_count() {
            if flags[v] {
                continue;
            }
            let mut sum = nalgebra::Vector2::zeros();
            let mut count = 0.0;
            for &(a, b) in mesh.edges() {
                let other = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                sum += map.coords[other].coords;
                count += 1.0;
            }
            let avg = sum / count;
            assert!((avg - map.coords[v].coords).norm() < 1e-9);
        }
    }

    #[test]
    fn authalic_reproduces_planar_input() {
        let mesh = grid_mesh(8);
        let curve = grid_boundary_curve(&mesh);
        let (map, flipped) = authalic_flatten(&mesh, &curve).unwrap();
        assert_eq!(flipped, 0);
        let mut worst: f64 = 0.0;
        for (v, p) in map.coords.iter().enumerate() {
            let q = mesh.vertices()[v];
            worst = worst.max((p.x - q.x).abs()).max((p.y - q.y).abs());
        }
        // The weights make the planar layout an exact equilibrium, so the
        // only deviation left is solver error.
        assert!(worst <= 1e-10, "identity deviation {worst:e}");
    }

    #[test]
    fn tutte_solution_is_affine_equivariant() {
        let mesh = grid_mesh(5);
        let curve = flatten_circle_curve(&mesh);
        let base = tutte_flatten(&mesh, &curve).unwrap();
        // Apply an affine map to the pins; row sums are zero, so the interior
        // solution must transform by the same map.
        let affine =
            |p: Point2<f64>| Point2::new(1.7 * p.x - 0.4 * p.y + 3.0, 0.2 * p.x + 2.1 * p.y - 1.0);
        let moved = FlatCurve::from_points(
            curve.points.iter().map(|&p| affine(p)).collect(),
            curve.mesh_vertices.clone(),
        );
        let mapped = tutte_flatten(&mesh, &moved).unwrap();
        for (a, b) in base.coords.iter().zip(mapped.coords.iter()) {
            let expect = affine(*a);
            assert!((expect - b).norm() < 1e-8);
        }
    }

    #[test]
    fn mismatched_curve_is_rejected() {
        let mesh = grid_mesh(3);
        let curve = flatten_circle_curve(&mesh);
        let mut short = curve.points.clone();
        let mut short_vertices = curve.mesh_vertices.clone();
        short.pop();
        short_vertices.pop();
        let bad = FlatCurve::from_points(short, short_vertices);
        assert!(matches!(
            tutte_flatten(&mesh, &bad),
            Err(Error::BoundaryMismatch { .. })
        ));
    }

    #[test]
    fn authalic_beats_tutte_on_area_distortion_for_curved_input() {
        // Lift the grid onto a shallow paraboloid: uniform weights squeeze
        // the rim triangles, the authalic weights compensate.
        let mut mesh = grid_mesh(8);
        let vertices = mesh
            .vertices()
            .iter()
            .map(|p| {
                let (x, y) = (p.x - 4.0, p.y - 4.0);
                Point3::new(p.x, p.y, 0.12 * (x * x + y * y))
            })
            .collect::<Vec<_>>();
        mesh = TriMesh::new(vertices, mesh.faces().to_vec()).unwrap();
        let curve = flatten_circle_curve(&mesh);

        let tutte = tutte_flatten(&mesh, &curve).unwrap();
        let (auth, _) = authalic_flatten(&mesh, &curve).unwrap();

        // Compare per-face area ratios (flat / original), normalized by the
        // overall scale; spread measured as the interquartile range of logs.
        let spread = |map: &PlanarMap| {
            let mut ratios: Vec<f64> = mesh
                .faces()
                .iter()
                .enumerate()
                .map(|(f, _)| map.face_areas()[f].abs() / mesh.face_area(f))
                .collect();
            let total: f64 = ratios.iter().sum::<f64>() / ratios.len() as f64;
            for r in &mut ratios {
                *r = (*r / total).ln();
            }
            ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ratios[3 * ratios.len() / 4] - ratios[ratios.len() / 4]
        };
        let (s_tutte, s_auth) = (spread(&tutte), spread(&auth));
        assert!(
            s_auth < s_tutte,
            "authalic IQR {s_auth:.4} should beat Tutte IQR {s_tutte:.4}"
        );
    }
}
