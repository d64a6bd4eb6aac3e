//! OFF/OBJ readers and OBJ writers.
//!
//! Readers are line-based and report the offending line on parse errors.
//! Writers emit LF line endings and 17 significant digits, enough for f64
//! coordinates to round-trip bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::mesh::{PlanarMap, TriMesh};

/// Loads a triangle mesh, choosing the format by file extension
/// (`.off` or `.obj`, case-insensitive).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("off") => parse_off(path, &text),
        Some("obj") => parse_obj(path, &text),
        other => Err(Error::parse(
            path,
            0,
            format!(
                "unsupported mesh extension {:?} (expected .off or .obj)",
                other
            ),
        )),
    }
}

/// Saves a surface mesh as Wavefront OBJ.
pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", fmt(v.x), fmt(v.y), fmt(v.z)).unwrap();
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Saves a planar map as Wavefront OBJ with z = 0.
pub fn save_map(map: &PlanarMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for p in &map.coords {
        writeln!(out, "v {} {} 0", fmt(p.x), fmt(p.y)).unwrap();
    }
    for f in &map.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// 17 significant digits; round-trips every finite f64.
fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

fn parse_off(path: &Path, text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 0, "empty OFF file"))?;
    if header != "OFF" {
        return Err(Error::parse(path, line_no, "expected OFF header"));
    }
    let (line_no, counts) = lines
        .next()
        .ok_or_else(|| Error::parse(path, line_no, "missing count line"))?;
    let counts: Vec<&str> = counts.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(Error::parse(path, line_no, "count line needs `V F [E]`"));
    }
    let nv: usize = counts[0]
        .parse()
        .map_err(|_| Error::parse(path, line_no, "bad vertex count"))?;
    let nf: usize = counts[1]
        .parse()
        .map_err(|_| Error::parse(path, line_no, "bad face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, "unexpected end of file in vertex list"))?;
        let xyz = parse_floats(line);
        match xyz.as_deref() {
            Some([x, y, z]) => vertices.push(Point3::new(*x, *y, *z)),
            _ => {
                return Err(Error::parse(
                    path,
                    line_no,
                    "vertex line needs 3 coordinates",
                ))
            }
        }
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, "unexpected end of file in face list"))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "3" {
            return Err(Error::parse(
                path,
                line_no,
                "face line must be `3 i j k` (triangles only)",
            ));
        }
        let mut tri = [0usize; 3];
        for (slot, field) in tri.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|_| Error::parse(path, line_no, "bad face index"))?;
        }
        faces.push(tri);
    }
    TriMesh::new(vertices, faces)
}

fn parse_obj(path: &Path, text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let rest: Vec<&str> = fields.collect();
                if rest.len() < 3 {
                    return Err(Error::parse(
                        path,
                        line_no,
                        "vertex line needs 3 coordinates",
                    ));
                }
                let mut xyz = [0.0f64; 3];
                for (slot, field) in xyz.iter_mut().zip(&rest) {
                    *slot = field
                        .parse()
                        .map_err(|_| Error::parse(path, line_no, "bad coordinate"))?;
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let rest: Vec<&str> = fields.collect();
                if rest.len() != 3 {
                    return Err(Error::parse(path, line_no, "faces must be triangles"));
                }
                let mut tri = [0usize; 3];
                for (slot, field) in tri.iter_mut().zip(&rest) {
                    // Accept `i`, `i/..` and `i//..`; only the position index matters.
                    let head = field.split('/').next().unwrap_or(field);
                    let idx: i64 = head
                        .parse()
                        .map_err(|_| Error::parse(path, line_no, "bad face index"))?;
                    if idx < 1 {
                        return Err(Error::parse(path, line_no, "face indices are 1-based"));
                    }
                    *slot = (idx - 1) as usize;
                }
                faces.push(tri);
            }
            // Ignore normals, texture coordinates, groups, materials, etc.
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

fn parse_floats(line: &str) -> Option<Vec<f64>> {
    line.split_whitespace()
        .map(|f| f.parse::<f64>().ok())
        .collect()
}
