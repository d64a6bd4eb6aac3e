//! Small planar/spatial primitives shared across the crate.
//!
//! Orientation-sensitive predicates go through the `robust` crate so their
//! *signs* are exact; magnitudes are ordinary floating point.

pub use nalgebra::{Point2, Point3, Vector2, Vector3};

/// `> 0` if `a`, `b`, `c` are counterclockwise, `< 0` clockwise, `0` collinear.
/// The sign is exact.
pub fn orient2d(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

/// Signed area of triangle `(a, b, c)`; positive when counterclockwise.
pub fn signed_area(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> f64 {
    0.5 * (b - a).perp(&(c - a))
}

/// Unsigned area of the 3D triangle `(a, b, c)`.
pub fn area3(a: Point3<f64>, b: Point3<f64>, c: Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Shoelace area of a closed polygon (positive when counterclockwise).
pub fn polygon_signed_area(points: &[Point2<f64>]) -> f64 {
    let n = points.len();
    let mut twice = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        twice += p.x * q.y - q.x * p.y;
    }
    0.5 * twice
}

/// Strict point-in-polygon test by winding number; points on the boundary
/// count as outside. The polygon may be non-convex but must be simple.
pub fn point_in_polygon(p: Point2<f64>, polygon: &[Point2<f64>]) -> bool {
    let n = polygon.len();
    let mut winding: i64 = 0;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let side = orient2d(a, b, p);
        if side == 0.0 && on_segment_collinear(a, b, p) {
            return false; // exactly on the boundary
        }
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// For collinear `a`, `b`, `p`: is `p` within the closed segment `[a, b]`?
fn on_segment_collinear(a: Point2<f64>, b: Point2<f64>, p: Point2<f64>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Whether closed segments `[a, b]` and `[c, d]` share any point.
/// Orientation signs are exact, so touching configurations are detected.
pub fn segments_intersect(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>, d: Point2<f64>) -> bool {
    let d1 = orient2d(c, d, a);
    let d2 = orient2d(c, d, b);
    let d3 = orient2d(a, b, c);
    let d4 = orient2d(a, b, d);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment_collinear(c, d, a))
        || (d2 == 0.0 && on_segment_collinear(c, d, b))
        || (d3 == 0.0 && on_segment_collinear(a, b, c))
        || (d4 == 0.0 && on_segment_collinear(a, b, d))
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Unsigned angle in `[0, pi]` between 3D vectors `u` and `v`.
pub fn angle_between(u: Vector3<f64>, v: Vector3<f64>) -> f64 {
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Signed turning angle in `(-pi, pi]` from 2D direction `u` to `v`.
pub fn signed_turn(u: Vector2<f64>, v: Vector2<f64>) -> f64 {
    u.perp(&v).atan2(u.dot(&v))
}

/// Rotate a 2D vector by +90 degrees.
pub fn rot90(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

/// Axis-aligned bounding box of a point set as `(min, max)`.
pub fn bounds(points: &[Point2<f64>]) -> (Point2<f64>, Point2<f64>) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_signs() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        let c = Point2::new(0.0, 1.0);
        assert!(orient2d(a, b, c) > 0.0);
        assert!(orient2d(a, c, b) < 0.0);
        assert_eq!(orient2d(a, b, Point2::new(2.0, 0.0)), 0.0);
    }

    #[test]
    fn point_in_nonconvex_polygon() {
        // L-shaped hexagon.
        let poly = [
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 2.0),
            Point2::new(0.0, 2.0),
        ];
        assert!(point_in_polygon(Point2::new(0.5, 0.5), &poly));
        assert!(point_in_polygon(Point2::new(1.5, 0.5), &poly));
        assert!(point_in_polygon(Point2::new(1.0, 0.5), &poly)); // interior of the bar
        assert!(!point_in_polygon(Point2::new(1.5, 1.5), &poly));
        assert!(!point_in_polygon(Point2::new(1.0, 1.5), &poly)); // on the reflex edge
        assert!(!point_in_polygon(Point2::new(3.0, 0.5), &poly));
    }

    #[test]
    fn segment_intersection_cases() {
        let p = |x, y| Point2::new(x, y);
        assert!(segments_intersect(
            p(0., 0.),
            p(1., 1.),
            p(0., 1.),
            p(1., 0.)
        ));
        assert!(!segments_intersect(
            p(0., 0.),
            p(1., 0.),
            p(0., 1.),
            p(1., 1.)
        ));
        // Touching at an endpoint counts as intersecting.
        assert!(segments_intersect(
            p(0., 0.),
            p(1., 0.),
            p(1., 0.),
            p(2., 1.)
        ));
        // Collinear overlap.
        assert!(segments_intersect(
            p(0., 0.),
            p(2., 0.),
            p(1., 0.),
            p(3., 0.)
        ));
        // Collinear, disjoint.
        assert!(!segments_intersect(
            p(0., 0.),
            p(1., 0.),
            p(2., 0.),
            p(3., 0.)
        ));
    }

    #[test]
    fn turning_angles() {
        let e = Vector2::new(1.0, 0.0);
        assert!(
            (signed_turn(e, Vector2::new(0.0, 1.0)) - std::f64::consts::FRAC_PI_2).abs() < 1e-15
        );
        assert!(
            (signed_turn(e, Vector2::new(0.0, -1.0)) + std::f64::consts::FRAC_PI_2).abs() < 1e-15
        );
        let u = Vector3::new(1.0, 0.0, 0.0);
        let v = Vector3::new(0.0, 0.0, 2.0);
        assert!((angle_between(u, v) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn segment_distance() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(2.0, 0.0);
        assert!((point_segment_distance(Point2::new(1.0, 1.0), a, b) - 1.0).abs() < 1e-15);
        assert!((point_segment_distance(Point2::new(-3.0, 4.0), a, b) - 5.0).abs() < 1e-15);
    }
}
