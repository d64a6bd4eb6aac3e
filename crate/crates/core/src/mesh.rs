//! Mesh model: an immutable 3D triangle surface and its evolving planar image.
//!
//! [`TriMesh`] is validated on construction (index bounds, no repeated vertex
//! within a face, consistent orientation, edge-manifoldness, no degenerate
//! faces). Disk topology is a separate, queryable property so that callers can
//! inspect diagnostics for meshes that fail it.
//!
//! [`PlanarMap`] carries 2D coordinates, the face list, a per-face land mask
//! (`false` marks synthetic sea faces) and per-vertex provenance back to the
//! source surface.

use crate::error::{Error, Result};
use crate::geometry::{self, Point2, Point3};
use crate::topology::Connectivity;

/// Relative threshold under which a face counts as degenerate at load time.
pub const DEGENERATE_AREA_REL: f64 = 1e-14;

/// Immutable 3D triangle mesh with cached connectivity.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    conn: Connectivity,
}

/// Topology and quality report for a triangle mesh.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeshDiagnostics {
    pub vertex_count: usize,
    pub face_count: usize,
    pub edge_count: usize,
    pub euler_characteristic: i64,
    pub boundary_loop_count: usize,
    pub connected_components: usize,
    pub nonmanifold_edge_count: usize,
    pub nonmanifold_vertex_count: usize,
    pub min_face_area: f64,
}

impl MeshDiagnostics {
    /// A simply-connected open surface: one component, Euler characteristic 1,
    /// a single boundary loop and no non-manifold elements.
    pub fn is_disk(&self) -> bool {
        self.connected_components == 1
            && self.euler_characteristic == 1
            && self.boundary_loop_count == 1
            && self.nonmanifold_edge_count == 0
            && self.nonmanifold_vertex_count == 0
    }

    fn build(conn: &Connectivity, face_count: usize, min_face_area: f64) -> Self {
        MeshDiagnostics {
            vertex_count: conn.vertex_count,
            face_count,
            edge_count: conn.edges.len(),
            euler_characteristic: conn.euler_characteristic(face_count),
            boundary_loop_count: conn.boundary_loops.len(),
            connected_components: conn.face_components,
            nonmanifold_edge_count: conn.edge_face_count.iter().filter(|&&c| c > 2).count(),
            nonmanifold_vertex_count: conn.nonmanifold_vertices.len(),
            min_face_area,
        }
    }

    /// Errors unless the diagnostics describe a single disk-topology patch.
    pub fn require_disk(&self) -> Result<()> {
        if self.is_disk() {
            Ok(())
        } else {
            Err(Error::NotADisk {
                euler: self.euler_characteristic,
                boundary_loops: self.boundary_loop_count,
                components: self.connected_components,
                nonmanifold_vertices: self.nonmanifold_vertex_count,
            })
        }
    }
}

impl TriMesh {
    /// Validates the triangle soup and builds connectivity.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let conn = Connectivity::build(vertices.len(), &faces)?;
        let mesh = TriMesh {
            vertices,
            faces,
            conn,
        };
        let areas = mesh.face_areas();
        let total: f64 = areas.iter().sum();
        let threshold = DEGENERATE_AREA_REL * total;
        for (f, &a) in areas.iter().enumerate() {
            if a <= threshold {
                return Err(Error::DegenerateFace {
                    face: f,
                    area: a,
                    threshold,
                });
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Sorted unique undirected edges.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.conn.edges
    }

    /// Face indices incident to each vertex.
    pub fn vertex_faces(&self) -> &[Vec<usize>] {
        &self.conn.vertex_faces
    }

    /// `true` for every vertex that lies on a boundary edge.
    pub fn boundary_flags(&self) -> Vec<bool> {
        self.conn.boundary_flags()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [i, j, k] = self.faces[f];
        geometry::area3(self.vertices[i], self.vertices[j], self.vertices[k])
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Barycentric vertex areas: one third of the incident face areas.
    /// They partition the surface, so they sum to the total area.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.vertices.len()];
        for (f, tri) in self.faces.iter().enumerate() {
            let a = self.face_area(f) / 3.0;
            for &v in tri {
                areas[v] += a;
            }
        }
        areas
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        (self.vertices[a] - self.vertices[b]).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let sum: f64 = self
            .conn
            .edges
            .iter()
            .map(|&(a, b)| self.edge_length(a, b))
            .sum();
        sum / self.conn.edges.len() as f64
    }

    /// Non-failing topology/quality report.
    pub fn diagnostics(&self) -> MeshDiagnostics {
        let areas = self.face_areas();
        let min = areas.iter().copied().fold(f64::INFINITY, f64::min);
        MeshDiagnostics::build(&self.conn, self.faces.len(), min)
    }

    /// Diagnostics that must describe a disk; errors otherwise.
    pub fn validate_disk_topology(&self) -> Result<MeshDiagnostics> {
        let diag = self.diagnostics();
        diag.require_disk()?;
        Ok(diag)
    }

    /// The single boundary loop in face-orientation order (interior on the
    /// left), rotated to start at its smallest vertex index. For planar meshes
    /// with counterclockwise faces this traverses the outline counterclockwise.
    pub fn boundary_loop_ccw(&self) -> Result<Vec<usize>> {
        self.validate_disk_topology()?;
        let mut cycle = self.conn.boundary_loops[0].clone();
        if cycle.len() < 3 {
            return Err(Error::BoundaryTooShort { count: cycle.len() });
        }
        rotate_to_min(&mut cycle);
        Ok(cycle)
    }

    /// Whether all vertices lie in a constant-z plane (up to a relative
    /// tolerance of the bounding-box diagonal).
    pub fn is_planar(&self) -> bool {
        let (mut lo, mut hi) = (
            Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for v in &self.vertices {
            for c in 0..3 {
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
        let diag = (hi - lo).norm();
        (hi.z - lo.z) <= 1e-12 * diag.max(f64::MIN_POSITIVE)
    }

    /// Projects a planar mesh to 2D (drops z) and orients all faces
    /// counterclockwise. Provenance is the identity.
    pub fn project_planar(&self) -> Result<PlanarMap> {
        let coords = self
            .vertices
            .iter()
            .map(|v| Point2::new(v.x, v.y))
            .collect();
        let mut map = PlanarMap::new_land(coords, self.faces.clone())?;
        map.ensure_ccw()?;
        Ok(map)
    }
}

/// Planar image of a surface, possibly augmented with sea faces.
#[derive(Debug, Clone)]
pub struct PlanarMap {
    pub coords: Vec<Point2<f64>>,
    pub faces: Vec<[usize; 3]>,
    /// `true` for faces that image the original surface, `false` for sea.
    pub land_mask: Vec<bool>,
    /// Original surface vertex behind each map vertex, if any.
    pub provenance: Vec<Option<usize>>,
}

impl PlanarMap {
    /// A map whose every face is land and whose vertices correspond 1:1 with
    /// the source surface. Structural validation only; call [`ensure_ccw`]
    /// (or rely on the constructor of the producing stage) for orientation.
    ///
    /// [`ensure_ccw`]: PlanarMap::ensure_ccw
    pub fn new_land(coords: Vec<Point2<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Connectivity::build(coords.len(), &faces)?;
        let land_mask = vec![true; faces.len()];
        let provenance = (0..coords.len()).map(Some).collect();
        Ok(PlanarMap {
            coords,
            faces,
            land_mask,
            provenance,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn signed_face_area(&self, f: usize) -> f64 {
        let [i, j, k] = self.faces[f];
        geometry::signed_area(self.coords[i], self.coords[j], self.coords[k])
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len())
            .map(|f| self.signed_face_area(f))
            .collect()
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    pub fn land_area(&self) -> f64 {
        self.faces
            .iter()
            .enumerate()
            .filter(|&(f, _)| self.land_mask[f])
            .map(|(f, _)| self.signed_face_area(f))
            .sum()
    }

    pub fn face_centroid(&self, f: usize) -> Point2<f64> {
        let [i, j, k] = self.faces[f];
        let (a, b, c) = (self.coords[i], self.coords[j], self.coords[k]);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Reorders the indices of clockwise faces so that every face is
    /// counterclockwise. Returns how many faces were flipped; a face with
    /// exactly collinear vertices is an error.
    pub fn ensure_ccw(&mut self) -> Result<usize> {
        let mut flipped = 0;
        for f in 0..self.faces.len() {
            let [i, j, k] = self.faces[f];
            let o = geometry::orient2d(self.coords[i], self.coords[j], self.coords[k]);
            if o == 0.0 {
                return Err(Error::ZeroAreaFace { face: f });
            }
            if o < 0.0 {
                self.faces[f] = [i, k, j];
                flipped += 1;
            }
        }
        Ok(flipped)
    }

    /// Count of faces that are not strictly counterclockwise.
    pub fn flipped_face_count(&self) -> usize {
        (0..self.faces.len())
            .filter(|&f| self.signed_face_area(f) <= 0.0)
            .count()
    }

    pub fn connectivity(&self) -> Result<Connectivity> {
        Connectivity::build(self.coords.len(), &self.faces)
    }

    pub fn diagnostics(&self) -> Result<MeshDiagnostics> {
        let conn = self.connectivity()?;
        let min = self
            .face_areas()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok(MeshDiagnostics::build(&conn, self.faces.len(), min))
    }

    /// Checks that the map is a valid disk with counterclockwise faces.
    pub fn validate(&self) -> Result<MeshDiagnostics> {
        let diag = self.diagnostics()?;
        diag.require_disk()?;
        let flipped = self.flipped_face_count();
        if flipped > 0 {
            return Err(Error::FlippedFaces { count: flipped });
        }
        Ok(diag)
    }

    /// Outer boundary loop of the whole map, counterclockwise.
    pub fn boundary_loop_ccw(&self) -> Result<Vec<usize>> {
        let conn = self.connectivity()?;
        if conn.boundary_loops.len() != 1 {
            return Err(Error::NotADisk {
                euler: conn.euler_characteristic(self.faces.len()),
                boundary_loops: conn.boundary_loops.len(),
                components: conn.face_components,
                nonmanifold_vertices: conn.nonmanifold_vertices.len(),
            });
        }
        let mut cycle = conn.boundary_loops[0].clone();
        rotate_to_min(&mut cycle);
        Ok(cycle)
    }

    /// Boundary loop of the land submesh, counterclockwise. Equals
    /// [`boundary_loop_ccw`] for pure-land maps.
    ///
    /// [`boundary_loop_ccw`]: PlanarMap::boundary_loop_ccw
    pub fn land_boundary_loop(&self) -> Result<Vec<usize>> {
        if self.land_mask.iter().all(|&m| m) {
            return self.boundary_loop_ccw();
        }
        // Compact the land submesh onto its own vertex set: sea vertices would
        // otherwise trip the "no isolated vertex" structural check.
        let mut remap = vec![usize::MAX; self.coords.len()];
        let mut back = Vec::new();
        let mut compact = Vec::new();
        for (f, tri) in self.faces.iter().enumerate() {
            if !self.land_mask[f] {
                continue;
            }
            let mut c = [0usize; 3];
            for (slot, &v) in c.iter_mut().zip(tri) {
                if remap[v] == usize::MAX {
                    remap[v] = back.len();
                    back.push(v);
                }
                *slot = remap[v];
            }
            compact.push(c);
        }
        let conn = Connectivity::build(back.len(), &compact)?;
        if conn.boundary_loops.len() != 1 {
            return Err(Error::NotADisk {
                euler: conn.euler_characteristic(compact.len()),
                boundary_loops: conn.boundary_loops.len(),
                components: conn.face_components,
                nonmanifold_vertices: conn.nonmanifold_vertices.len(),
            });
        }
        let mut cycle: Vec<usize> = conn.boundary_loops[0].iter().map(|&v| back[v]).collect();
        rotate_to_min(&mut cycle);
        Ok(cycle)
    }

    /// Indices of vertices used by at least one land face.
    pub fn land_vertices(&self) -> Vec<usize> {
        let mut used = vec![false; self.coords.len()];
        for (f, tri) in self.faces.iter().enumerate() {
            if self.land_mask[f] {
                for &v in tri {
                    used[v] = true;
                }
            }
        }
        (0..self.coords.len()).filter(|&v| used[v]).collect()
    }

    /// Mean length of the unique edges of the land submesh.
    pub fn mean_land_edge_length(&self) -> f64 {
        let mut edges = std::collections::BTreeSet::new();
        for (f, tri) in self.faces.iter().enumerate() {
            if !self.land_mask[f] {
                continue;
            }
            for c in 0..3 {
                let (a, b) = (tri[c], tri[(c + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let sum: f64 = edges
            .iter()
            .map(|&(a, b)| (self.coords[a] - self.coords[b]).norm())
            .sum();
        sum / edges.len() as f64
    }
}

fn rotate_to_min(cycle: &mut Vec<usize>) {
    if let Some(pos) = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, &v)| v)
        .map(|(i, _)| i)
    {
        cycle.rotate_left(pos);
    }
}
