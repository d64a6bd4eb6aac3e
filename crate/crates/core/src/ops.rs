//! Discrete differential operators on a planar map.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * Cotangent Laplacian `L`: for edge `(i, j)` the weight is
//!   `cot a + cot b` with `a`, `b` the angles *opposite* the edge in its one
//!   or two incident faces; `L_ii = -sum_j L_ij`, so rows sum to zero and `L`
//!   is symmetric. `L` is the stiffness matrix of linear elements, hence
//!   negative semi-definite regardless of triangle quality.
//! * Mass diagonal `D_ii = 2 A(i)` with `A(i)` the barycentric vertex area
//!   (one third of incident face areas). The operator `D^{-1} L` is exact for
//!   quadratics at the center of a symmetric fan and reproduces affine
//!   functions at interior vertices.
//! * Face gradient of a vertex field `u`: the unique in-plane vector `g` with
//!   `<g, x_j - x_i> = u_j - u_i` and `<g, x_k - x_j> = u_k - u_j` on face
//!   `(i, j, k)`; in closed form (counterclockwise faces)
//!   `g = rot90(u_i e_jk + u_j e_ki + u_k e_ij) / (2 A)`.
//! * Transition matrices between face and vertex fields: `m_vf` averages a
//!   vertex field onto faces (rows `1/3`), `m_fv` averages a face field onto
//!   vertices (rows `1/count`), `w_fv` is the area-weighted variant. All three
//!   have rows summing to one, so constants pass through unchanged.

use crate::error::{Error, Result};
use crate::geometry::{self, Vector2};
use crate::mesh::PlanarMap;
use crate::sparse::CsrMatrix;

/// Cotangent Laplacian with its mass diagonal.
#[derive(Debug, Clone)]
pub struct LaplacianPair {
    /// Symmetric, zero row-sum stiffness matrix (`|V| x |V|`).
    pub l: CsrMatrix,
    /// Mass diagonal `D_ii = 2 A(i)`.
    pub d: Vec<f64>,
    /// Barycentric vertex areas `A(i)`.
    pub vertex_areas: Vec<f64>,
}

/// Face/vertex transition matrices.
#[derive(Debug, Clone)]
pub struct TransitionSet {
    /// `|F| x |V|`: vertex field to face field, plain average.
    pub m_vf: CsrMatrix,
    /// `|V| x |F|`: face field to vertex field, plain average.
    pub m_fv: CsrMatrix,
    /// `|V| x |F|`: face field to vertex field, area-weighted average.
    pub w_fv: CsrMatrix,
}

/// A density carried both per-face and per-vertex.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub rho_f: Vec<f64>,
    pub rho_v: Vec<f64>,
}

impl DensityField {
    /// Builds the vertex field from the face field via `m_fv`.
    /// Both fields must be strictly positive.
    pub fn from_faces(rho_f: Vec<f64>, transitions: &TransitionSet) -> Result<Self> {
        for (i, &v) in rho_f.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonPositivePopulation { index: i, value: v });
            }
        }
        let rho_v = transitions.m_fv.matvec(&rho_f)?;
        Ok(DensityField { rho_f, rho_v })
    }
}

/// Cotangent of the angle at `c` in triangle `(a, b, c)` — the angle opposite
/// edge `(a, b)`. Positive for well-shaped counterclockwise triangles.
fn cot_opposite(
    a: geometry::Point2<f64>,
    b: geometry::Point2<f64>,
    c: geometry::Point2<f64>,
) -> f64 {
    let u = a - c;
    let v = b - c;
    u.dot(&v) / u.perp(&v)
}

/// Assembles the cotangent Laplacian and mass diagonal of a map.
/// Boundary edges contribute a single cotangent (natural boundary treatment).
pub fn cotan_laplacian(map: &PlanarMap) -> Result<LaplacianPair> {
    let n = map.vertex_count();
    let mut triplets = Vec::with_capacity(map.face_count() * 12);
    let mut vertex_areas = vec![0.0; n];

    for (f, &[i, j, k]) in map.faces.iter().enumerate() {
        let area = map.signed_face_area(f);
        if area <= 0.0 {
            return Err(Error::ZeroAreaFace { face: f });
        }
        let third = area / 3.0;
        for &v in &map.faces[f] {
            vertex_areas[v] += third;
        }
        let (pi, pj, pk) = (map.coords[i], map.coords[j], map.coords[k]);
        // Each corner's cotangent weights the opposite edge.
        for &(a, b, pa, pb, pc) in &[(i, j, pi, pj, pk), (j, k, pj, pk, pi), (k, i, pk, pi, pj)] {
            let w = cot_opposite(pa, pb, pc);
            triplets.push((a, b, w));
            triplets.push((b, a, w));
            triplets.push((a, a, -w));
            triplets.push((b, b, -w));
        }
    }
    let l = CsrMatrix::assemble(n, n, &triplets)?;
    let d = vertex_areas.iter().map(|&a| 2.0 * a).collect();
    Ok(LaplacianPair { l, d, vertex_areas })
}

/// Assembles the three face/vertex transition matrices.
pub fn transitions(map: &PlanarMap) -> Result<TransitionSet> {
    let nv = map.vertex_count();
    let nf = map.face_count();

    let mut vf = Vec::with_capacity(3 * nf);
    for (f, tri) in map.faces.iter().enumerate() {
        for &v in tri {
            vf.push((f, v, 1.0 / 3.0));
        }
    }
    let m_vf = CsrMatrix::assemble(nf, nv, &vf)?;

    let mut counts = vec![0usize; nv];
    let mut area_sums = vec![0.0f64; nv];
    let areas = map.face_areas();
    for (f, tri) in map.faces.iter().enumerate() {
        for &v in tri {
            counts[v] += 1;
            area_sums[v] += areas[f];
        }
    }
    for (v, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::IsolatedVertex { vertex: v });
        }
    }

    let mut fv = Vec::with_capacity(3 * nf);
    let mut wfv = Vec::with_capacity(3 * nf);
    for (f, tri) in map.faces.iter().enumerate() {
        for &v in tri {
            fv.push((v, f, 1.0 / counts[v] as f64));
            wfv.push((v, f, areas[f] / area_sums[v]));
        }
    }
    let m_fv = CsrMatrix::assemble(nv, nf, &fv)?;
    let w_fv = CsrMatrix::assemble(nv, nf, &wfv)?;

    Ok(TransitionSet { m_vf, m_fv, w_fv })
}

/// Per-face gradient of a vertex field.
pub fn face_gradient(map: &PlanarMap, u: &[f64]) -> Result<Vec<Vector2<f64>>> {
    if u.len() != map.vertex_count() {
        return Err(Error::DimensionMismatch {
            rows: map.face_count(),
            cols: map.vertex_count(),
            len: u.len(),
        });
    }
    let mut grads = Vec::with_capacity(map.face_count());
    for (f, &[i, j, k]) in map.faces.iter().enumerate() {
        let area = map.signed_face_area(f);
        if area <= 0.0 {
            return Err(Error::ZeroAreaFace { face: f });
        }
        let (pi, pj, pk) = (map.coords[i], map.coords[j], map.coords[k]);
        let e_jk = pk - pj;
        let e_ki = pi - pk;
        let e_ij = pj - pi;
        let combo = e_jk * u[i] + e_ki * u[j] + e_ij * u[k];
        grads.push(geometry::rot90(combo) / (2.0 * area));
    }
    Ok(grads)
}

/// Applies `D^{-1} L` to a vertex field.
pub fn apply_laplacian(pair: &LaplacianPair, u: &[f64]) -> Result<Vec<f64>> {
    let mut out = pair.l.matvec(u)?;
    for (o, &d) in out.iter_mut().zip(&pair.d) {
        *o /= d;
    }
    Ok(out)
}
