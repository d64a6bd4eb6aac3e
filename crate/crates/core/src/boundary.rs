//! Boundary curve flattening.
//!
//! The boundary loop of the surface is a closed 3D polyline. Its per-vertex
//! unsigned turning angles are rescaled to sum to one full turn and replayed
//! in the plane, which always yields a *convex* planar polygon with the same
//! edge lengths (up to the closure adjustment); non-convex and non-planar
//! wiggles in the input show up as curvature magnitude, never as sign, so the
//! replay turns consistently in one direction.

use crate::error::{Error, Result};
use crate::geometry::{self, Point2, Point3, Vector2};
use crate::mesh::TriMesh;

/// Closed 3D boundary polyline of a disk-topology mesh, in counterclockwise
/// (interior-left) order.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    /// Mesh vertex index behind each curve point.
    pub mesh_vertices: Vec<usize>,
    pub points: Vec<Point3<f64>>,
    /// `edge_lengths[m]` spans points `m -> m+1` (cyclically).
    pub edge_lengths: Vec<f64>,
    pub total_length: f64,
}

/// Convex planar polygon produced by [`flatten_boundary`], plus bookkeeping
/// for pinning it back onto the mesh boundary.
#[derive(Debug, Clone)]
pub struct FlatCurve {
    /// One planar point per boundary vertex, same order as the source curve.
    pub points: Vec<Point2<f64>>,
    /// Mesh vertex index behind each point.
    pub mesh_vertices: Vec<usize>,
    /// Magnitude of the endpoint mismatch before the closure adjustment,
    /// relative to nothing — an absolute length. Large values (more than a
    /// tenth of the perimeter) indicate a badly conditioned boundary.
    pub closure_gap: f64,
}

/// Report from [`verify_convex_simple`].
#[derive(Debug, Clone, Copy)]
pub struct CurveCheck {
    pub convex: bool,
    pub simple: bool,
    pub turning_number: i32,
}

impl CurveCheck {
    /// A curve suitable as a flattening target: convex, simple, one full turn.
    pub fn is_valid(&self) -> bool {
        self.convex && self.simple && self.turning_number == 1
    }
}

/// Turning angle below which two consecutive edges count as exactly reversed.
const REVERSAL_MARGIN: f64 = 1e-12;

impl BoundaryCurve {
    /// Extracts the boundary loop of a disk-topology mesh.
    pub fn from_mesh(mesh: &TriMesh) -> Result<Self> {
        let cycle = mesh.boundary_loop_ccw()?;
        let points: Vec<Point3<f64>> = cycle.iter().map(|&v| mesh.vertices()[v]).collect();
        Self::from_points(points, cycle)
    }

    /// Builds a curve from explicit points (mostly for tests and the planar
    /// shortcut). `mesh_vertices` records what each point pins to.
    pub fn from_points(points: Vec<Point3<f64>>, mesh_vertices: Vec<usize>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::BoundaryTooShort {
                count: points.len(),
            });
        }
        let n = points.len();
        let mut edge_lengths = Vec::with_capacity(n);
        for m in 0..n {
            let len = (points[(m + 1) % n] - points[m]).norm();
            if len == 0.0 {
                return Err(Error::ZeroLengthBoundaryEdge { edge: m });
            }
            edge_lengths.push(len);
        }
        let total_length = edge_lengths.iter().sum();
        Ok(BoundaryCurve {
            mesh_vertices,
            points,
            edge_lengths,
            total_length,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Unsigned turning angle at every curve point: the angle in `[0, pi)` between
/// the incoming and outgoing edge directions. A reversal (angle `pi`, i.e.
/// opposite-collinear edges) is rejected as ill-conditioned — the curvature
/// magnitude is fine but the flattening direction would be ambiguous.
pub fn discrete_curvature(curve: &BoundaryCurve) -> Result<Vec<f64>> {
    let n = curve.len();
    let mut kappa = Vec::with_capacity(n);
    for m in 0..n {
        let prev = curve.points[(m + n - 1) % n];
        let here = curve.points[m];
        let next = curve.points[(m + 1) % n];
        let angle = geometry::angle_between(here - prev, next - here);
        if angle >= std::f64::consts::PI - REVERSAL_MARGIN {
            return Err(Error::IllConditionedCorner { position: m });
        }
        kappa.push(angle);
    }
    Ok(kappa)
}

/// Rescales turning angles so that they sum to exactly one full turn.
pub fn rescale_turning_angles(kappa: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = kappa.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroTotalCurvature);
    }
    let scale = std::f64::consts::TAU / total;
    Ok(kappa.iter().map(|&k| k * scale).collect())
}

/// Flattens the boundary curve into a convex planar polygon.
///
/// Rescaled turning angles are accumulated at each vertex (the turn at a
/// vertex applies from its outgoing edge onward) and edge lengths are replayed
/// along the accumulated directions. The small endpoint mismatch is spread
/// along the curve proportionally to arc length, closing the polygon while
/// perturbing each edge by at most `gap * edge / perimeter`.
pub fn flatten_boundary(curve: &BoundaryCurve) -> Result<FlatCurve> {
    let n = curve.len();
    let kappa = rescale_turning_angles(&discrete_curvature(curve)?)?;

    let mut positions = Vec::with_capacity(n + 1);
    positions.push(Point2::new(0.0, 0.0));
    let mut theta = 0.0;
    for m in 0..n {
        theta += kappa[m];
        let dir = Vector2::new(theta.cos(), theta.sin());
        let prev = positions[m];
        positions.push(prev + dir * curve.edge_lengths[m]);
    }

    let gap_vec = positions[n] - positions[0];
    let gap = gap_vec.norm();
    if gap > 0.1 * curve.total_length {
        log::warn!(
            "boundary closure gap {:.3e} exceeds 10% of the perimeter {:.3e}; \
             the flattened outline may be badly distorted",
            gap,
            curve.total_length
        );
    }

    let mut arc = 0.0;
    let mut points = Vec::with_capacity(n);
    for m in 0..n {
        points.push(positions[m] - gap_vec * (arc / curve.total_length));
        arc += curve.edge_lengths[m];
    }

    Ok(FlatCurve {
        points,
        mesh_vertices: curve.mesh_vertices.clone(),
        closure_gap: gap,
    })
}

impl FlatCurve {
    /// Wraps explicit planar points as a flattening target (used for identity
    /// maps and tests). No convexity is enforced here; run
    /// [`verify_convex_simple`] if the caller needs the guarantee.
    pub fn from_points(points: Vec<Point2<f64>>, mesh_vertices: Vec<usize>) -> Self {
        FlatCurve {
            points,
            mesh_vertices,
            closure_gap: 0.0,
        }
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|m| (self.points[(m + 1) % n] - self.points[m]).norm())
            .sum()
    }
}

/// Checks convexity (with a relative tolerance), simplicity (exact segment
/// intersection tests on all non-adjacent edge pairs) and the turning number
/// (signed turns summed and divided by one full turn).
pub fn verify_convex_simple(points: &[Point2<f64>]) -> CurveCheck {
    let n = points.len();
    if n < 3 {
        return CurveCheck {
            convex: false,
            simple: false,
            turning_number: 0,
        };
    }

    let (lo, hi) = geometry::bounds(points);
    let scale = (hi - lo).norm();
    let tol = -1e-9 * scale * scale;

    let edge = |m: usize| points[(m + 1) % n] - points[m];

    let mut convex = true;
    let mut turning = 0.0;
    for m in 0..n {
        let e0 = edge(m);
        let e1 = edge((m + 1) % n);
        if e0.perp(&e1) < tol {
            convex = false;
        }
        turning += geometry::signed_turn(e0, e1);
    }
    let turning_number = (turning / std::f64::consts::TAU).round() as i32;

    let mut simple = true;
    'outer: for a in 0..n {
        for b in (a + 1)..n {
            // Skip adjacent edges (they share an endpoint by construction).
            if b == a + 1 || (a == 0 && b == n - 1) {
                continue;
            }
            if geometry::segments_intersect(
                points[a],
                points[(a + 1) % n],
                points[b],
                points[(b + 1) % n],
            ) {
                simple = false;
                break 'outer;
            }
        }
    }

    CurveCheck {
        convex,
        simple,
        turning_number,
    }
}
