//! Combinatorial connectivity shared by the surface mesh and the planar map.
//!
//! Everything here works on face index triples alone; geometry never enters.
//! Faces are treated as oriented: face `(i, j, k)` traverses directed edges
//! `i->j`, `j->k`, `k->i`. A consistently oriented, edge-manifold mesh uses
//! every directed edge at most once and every undirected edge at most twice.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Connectivity summary of a triangle soup.
#[derive(Debug, Clone)]
pub struct Connectivity {
    pub vertex_count: usize,
    /// Sorted unique undirected edges.
    pub edges: Vec<(usize, usize)>,
    /// Number of incident faces per entry of `edges` (1 or 2 after validation).
    pub edge_face_count: Vec<usize>,
    /// Face indices incident to each vertex, sorted.
    pub vertex_faces: Vec<Vec<usize>>,
    /// Boundary loops, each a cyclic vertex list following face orientation
    /// (interior on the left). Empty when non-manifold vertices block the walk.
    pub boundary_loops: Vec<Vec<usize>>,
    /// Vertices where more than one boundary strip meets (e.g. bowtie pinch).
    pub nonmanifold_vertices: Vec<usize>,
    /// Number of edge-connected face components.
    pub face_components: usize,
}

impl Connectivity {
    /// Builds connectivity, enforcing the structural invariants every mesh in
    /// this crate must satisfy: indices in range, no repeated vertex within a
    /// face, consistent orientation and edge-manifoldness.
    pub fn build(vertex_count: usize, faces: &[[usize; 3]]) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                if v >= vertex_count {
                    return Err(Error::FaceIndexOutOfRange {
                        face: f,
                        index: v,
                        vertex_count,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::RepeatedVertexInFace { face: f });
            }
        }

        // Directed edge -> owning face; detects orientation conflicts.
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        // Undirected edge -> (face count, one incident face).
        let mut undirected: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut vertex_faces = vec![Vec::new(); vertex_count];

        for (f, tri) in faces.iter().enumerate() {
            for c in 0..3 {
                let a = tri[c];
                let b = tri[(c + 1) % 3];
                // A third incidence is non-manifold no matter how the face is
                // wound, so it outranks the orientation check.
                let key = (a.min(b), a.max(b));
                let count = undirected.entry(key).or_insert(0);
                *count += 1;
                if *count > 2 {
                    return Err(Error::NonManifoldEdge {
                        a: key.0,
                        b: key.1,
                        count: *count,
                    });
                }
                if directed.insert((a, b), f).is_some() {
                    return Err(Error::InconsistentOrientation { a, b });
                }
                vertex_faces[a].push(f);
            }
        }
        for v in 0..vertex_count {
            if vertex_faces[v].is_empty() {
                return Err(Error::IsolatedVertex { vertex: v });
            }
            vertex_faces[v].sort_unstable();
        }

        let edges: Vec<(usize, usize)> = undirected.keys().copied().collect();
        let edge_face_count: Vec<usize> = undirected.values().copied().collect();

        // Boundary directed edges follow their face's winding, so walking them
        // keeps the interior on the left.
        let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut boundary_edges: Vec<(usize, usize)> = Vec::new();
        for (&(a, b), _) in &directed {
            if !directed.contains_key(&(b, a)) {
                outgoing.entry(a).or_default().push(b);
                boundary_edges.push((a, b));
            }
        }

        let nonmanifold_vertices: Vec<usize> = outgoing
            .iter()
            .filter(|(_, heads)| heads.len() > 1)
            .map(|(&v, _)| v)
            .collect();

        let boundary_loops = if nonmanifold_vertices.is_empty() {
            walk_loops(&boundary_edges, &outgoing)
        } else {
            Vec::new()
        };

        let face_components = count_face_components(faces.len(), &directed, &undirected);

        Ok(Connectivity {
            vertex_count,
            edges,
            edge_face_count,
            vertex_faces,
            boundary_loops,
            nonmanifold_vertices,
            face_components,
        })
    }

    pub fn euler_characteristic(&self, face_count: usize) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + face_count as i64
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edge_face_count.iter().filter(|&&c| c == 1).count()
    }

    /// Whether a vertex lies on the boundary.
    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertex_count];
        for (e, &count) in self.edge_face_count.iter().enumerate() {
            if count == 1 {
                flags[self.edges[e].0] = true;
                flags[self.edges[e].1] = true;
            }
        }
        flags
    }
}

/// Decomposes boundary directed edges into closed loops. Every boundary vertex
/// has exactly one outgoing edge here (non-manifold vertices were screened out).
fn walk_loops(
    boundary_edges: &[(usize, usize)],
    outgoing: &BTreeMap<usize, Vec<usize>>,
) -> Vec<Vec<usize>> {
    let mut visited: BTreeMap<usize, bool> = outgoing.keys().map(|&v| (v, false)).collect();
    let mut loops = Vec::new();
    for &(start, _) in boundary_edges {
        if visited[&start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut v = start;
        loop {
            cycle.push(v);
            *visited.get_mut(&v).expect("boundary vertex") = true;
            v = outgoing[&v][0];
            if v == start {
                break;
            }
        }
        loops.push(cycle);
    }
    loops
}

fn count_face_components(
    face_count: usize,
    directed: &BTreeMap<(usize, usize), usize>,
    undirected: &BTreeMap<(usize, usize), usize>,
) -> usize {
    let mut parent: Vec<usize> = (0..face_count).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (&(a, b), &count) in undirected {
        if count == 2 {
            let f = directed[&(a, b)];
            let g = directed[&(b, a)];
            let (rf, rg) = (find(&mut parent, f), find(&mut parent, g));
            if rf != rg {
                parent[rf] = rg;
            }
        }
    }
    (0..face_count)
        .filter(|&f| find(&mut parent, f) == f)
        .count()
}
