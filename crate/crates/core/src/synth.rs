//! Synthetic meshes and populations for tests, examples, and benchmarks.
//!
//! Everything here is deterministic: the randomized disk meshes take an
//! explicit seed and use a counter-based generator, so a failing case can be
//! reproduced from its seed alone.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, HasPosition, Point2 as SpadePoint, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3};
use crate::mesh::TriMesh;

/// Regular triangulation of the square `[0, side]²` with `cells × cells`
/// quads, each split along the same diagonal: `2·cells²` faces.
pub fn square_grid(cells: usize, side: f64) -> TriMesh {
    assert!(cells >= 1, "grid needs at least one cell");
    let n = cells;
    let h = side / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point3::new(i as f64 * h, j as f64 * h, 0.0));
        }
    }
    let at = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("regular grid is always a valid disk")
}

/// Per-face population `1 + exp(−|c_f − c̄|² / width)` where `c_f` is the face
/// centroid and `c̄` the centroid of the mesh bounding box. A smooth single
/// bump, strictly positive everywhere.
pub fn gaussian_population(mesh: &TriMesh, width: f64) -> Vec<f64> {
    assert!(width > 0.0);
    let vs = mesh.vertices();
    let (mut lo, mut hi) = (
        Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for v in vs {
        for c in 0..3 {
            lo[c] = lo[c].min(v[c]);
            hi[c] = hi[c].max(v[c]);
        }
    }
    let center = Point3::new(
        0.5 * (lo.x + hi.x),
        0.5 * (lo.y + hi.y),
        0.5 * (lo.z + hi.z),
    );
    mesh.faces()
        .iter()
        .map(|&[i, j, k]| {
            let cx = (vs[i].x + vs[j].x + vs[k].x) / 3.0;
            let cy = (vs[i].y + vs[j].y + vs[k].y) / 3.0;
            let d2 = (cx - center.x).powi(2) + (cy - center.y).powi(2);
            1.0 + (-d2 / width).exp()
        })
        .collect()
}

/// Gentle three-peak surface over `[−2, 2]²`: a regular grid lifted by three
/// Gaussian bumps that decay to numerical zero before the boundary, so the
/// outline stays an exact planar square. `cells = 45` gives 4050 faces.
pub fn multi_peak_surface(cells: usize) -> TriMesh {
    let base = square_grid(cells, 4.0);
    let peaks: [(f64, f64, f64, f64); 3] = [
        // (x, y, height, sigma) in the [−2, 2]² frame
        (-0.8, -0.7, 0.39, 0.55),
        (0.9, -0.4, 0.455, 0.60),
        (0.1, 0.9, 0.325, 0.50),
    ];
    let vertices = base
        .vertices()
        .iter()
        .map(|p| {
            let (x, y) = (p.x - 2.0, p.y - 2.0);
            // Smooth window that is exactly zero on the square's boundary, so
            // the outline stays planar no matter where the peaks sit.
            let window = (1.0 - (x / 2.0).powi(2)) * (1.0 - (y / 2.0).powi(2));
            let z: f64 = peaks
                .iter()
                .map(|&(px, py, h, s)| {
                    h * (-((x - px).powi(2) + (y - py).powi(2)) / (2.0 * s * s)).exp()
                })
                .sum::<f64>()
                * window;
            Point3::new(x, y, z)
        })
        .collect();
    TriMesh::new(vertices, base.faces().to_vec()).expect("lifting preserves connectivity")
}

/// Point wrapper for spade's Delaunay triangulation.
struct SitePoint {
    position: SpadePoint<f64>,
}

impl HasPosition for SitePoint {
    type Scalar = f64;
    fn position(&self) -> SpadePoint<f64> {
        self.position
    }
}

/// Random simply-connected open surface: a jittered grid clipped to a random
/// star-shaped outline, Delaunay-triangulated, and lifted by a smooth random
/// height field. Retries internally (reseeding deterministically) until the
/// result passes disk validation, so every seed yields a usable mesh.
pub fn random_disk_mesh(seed: u64) -> TriMesh {
    for attempt in 0..64u64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(attempt));
        if let Ok(mesh) = try_random_disk(&mut rng) {
            return mesh;
        }
    }
    // 64 independent retries failing would mean the generator itself is
    // broken, not that we were unlucky.
    unreachable!("random disk mesh generation failed for seed {seed}")
}

fn try_random_disk(rng: &mut ChaCha8Rng) -> Result<TriMesh> {
    // Star-shaped outline r(θ) = 1 + Σ a_k cos(kθ + φ_k), kept well positive.
    let modes: Vec<(f64, f64, f64)> = (2..=5)
        .map(|k| {
            (
                k as f64,
                rng.gen_range(-0.22..0.22) / (k as f64).sqrt(),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let radius = |theta: f64| -> f64 {
        1.0 + modes
            .iter()
            .map(|&(k, a, phi)| a * (k * theta + phi).cos())
            .sum::<f64>()
    };

    // Jittered grid restricted to the outline, with a safety margin so the
    // Delaunay boundary follows the star without slivers.
    let n = rng.gen_range(9..14usize);
    let h = 2.8 / n as f64;
    let mut points: Vec<Point2<f64>> = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let x = -1.4 + i as f64 * h + rng.gen_range(-0.3..0.3) * h;
            let y = -1.4 + j as f64 * h + rng.gen_range(-0.3..0.3) * h;
            let r = (x * x + y * y).sqrt();
            if r < radius(y.atan2(x)) - 0.25 * h {
                points.push(Point2::new(x, y));
            }
        }
    }
    if points.len() < 16 {
        return Err(Error::EmptyMesh);
    }

    let mut tri: DelaunayTriangulation<SitePoint> = DelaunayTriangulation::new();
    for p in &points {
        tri.insert(SitePoint {
            position: SpadePoint::new(p.x, p.y),
        })
        .map_err(|e| Error::SeaTriangulation {
            msg: format!("random mesh point rejected: {e:?}"),
        })?;
    }

    // Keep faces whose centroid is inside the star; compact the vertex set.
    let mut faces = Vec::new();
    for face in tri.inner_faces() {
        let ids = face.vertices().map(|v| v.fix().index());
        let c = face.center();
        let r = (c.x * c.x + c.y * c.y).sqrt();
        if r < radius(c.y.atan2(c.x)) - 0.2 * h {
            faces.push([ids[0], ids[1], ids[2]]);
        }
    }
    let mut remap = vec![usize::MAX; points.len()];
    let mut used = Vec::new();
    for face in &mut faces {
        for v in face.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = used.len();
                used.push(*v);
            }
            *v = remap[*v];
        }
    }

    // Smooth random lift; amplitudes small enough to keep the surface graph-like.
    let lift: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-0.25..0.25),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let vertices: Vec<Point3<f64>> = used
        .iter()
        .map(|&v| {
            let p = points[v];
            let z: f64 = lift
                .iter()
                .map(|&(a, fx, fy, phi)| a * (fx * p.x + fy * p.y + phi).sin())
                .sum();
            Point3::new(p.x, p.y, z)
        })
        .collect();

    if faces.len() < 24 {
        return Err(Error::EmptyMesh);
    }
    let mesh = TriMesh::new(vertices, faces)?;
    mesh.validate_disk_topology()?;
    // Boundary must be long enough to make the convexity statistics
    // meaningful and must avoid straight-angle corners.
    let boundary = mesh.boundary_loop_ccw()?;
    if boundary.len() < 8 {
        return Err(Error::BoundaryTooShort {
            count: boundary.len(),
        });
    }
    Ok(mesh)
}
