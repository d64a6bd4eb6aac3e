//! End-to-end pipelines: cartogram deformation, area-preserving
//! parameterization, and density-driven remeshing.
//!
//! [`density_equalize`] wires the full chain together: validate the input as
//! a topological disk, flatten it (skipped for planar input, which is taken
//! as its own initial layout), surround the result with the adaptive sea,
//! diffuse until the density is uniform, and strip the sea again. The other
//! entry points are thin recipes over it: [`area_preserving_parameterize`]
//! uses original face areas as population, and [`remesh_surface`] pulls a
//! uniform planar sampling of the equalized map back onto the input surface.

use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2 as SpadePoint, Triangulation};

use crate::boundary::{self, BoundaryCurve};
use crate::diffusion::{self, DensityStats, DiffusionConfig, DiffusionReport};
use crate::error::{Error, Result};
use crate::flatten;
use crate::geometry::{self, Point2, Point3};
use crate::mesh::{PlanarMap, TriMesh};
use crate::sea::{self, SeaConfig};
use serde::Serialize;

/// How the per-face population is prescribed.
#[derive(Debug, Clone)]
pub enum PopulationSpec {
    /// Every face carries population 1.
    Uniform,
    /// Every face carries its original (embedded) area — the recipe whose
    /// equalized map is an area-preserving parameterization.
    Area,
    /// Explicit per-face values.
    PerFace(Vec<f64>),
    /// Original areas, scaled per region: `labels` assigns a region id to
    /// every face and each `(region, multiplier)` rule multiplies the
    /// population of that region's faces. Rules for the same region compose.
    RegionScaled {
        labels: Vec<u64>,
        rules: Vec<(u64, f64)>,
    },
}

/// Initial flattening scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Tutte,
    Authalic,
}

/// Everything configurable about a pipeline run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub init: InitKind,
    /// Fall back to Tutte when the authalic initial map has flipped faces.
    /// Off by default: the flip count is warned about and the run continues,
    /// which typically fails later when operators reject flipped geometry.
    pub strict_init: bool,
    /// Weight the sea's density (the mean over land faces) by land face area
    /// instead of treating every face equally.
    pub sea_density_weighted: bool,
    pub sea: SeaConfig,
    pub diffusion: DiffusionConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            init: InitKind::Tutte,
            strict_init: false,
            sea_density_weighted: false,
            sea: SeaConfig::default(),
            diffusion: DiffusionConfig::default(),
        }
    }
}

/// Result of a pipeline run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Final equalized map, sea stripped: vertices and faces are index-for-
    /// index the land portion, with provenance back to the input mesh.
    pub land: PlanarMap,
    /// Final full map including the sea (useful for diagnostics/rendering).
    pub full: PlanarMap,
    pub report: DiffusionReport,
    /// Normalized final density per land face (population over final area,
    /// scaled so that a perfectly equalized map reads 1 everywhere). The
    /// report's `land_density` statistics summarize exactly these values.
    pub land_density: Vec<f64>,
    /// Flattening actually used (differs from the request after a strict
    /// fallback) and the flip count of the initial map.
    pub init_used: InitKind,
    pub init_flips: usize,
    /// Raw per-land-face ratios (original area / final area) — filled by
    /// [`area_preserving_parameterize`].
    pub area_ratio: Option<DensityStats>,
}

/// Resolves a population spec into strictly positive per-face values.
pub fn resolve_population(mesh: &TriMesh, spec: &PopulationSpec) -> Result<Vec<f64>> {
    match spec {
        PopulationSpec::Uniform => Ok(vec![1.0; mesh.face_count()]),
        PopulationSpec::Area => Ok(mesh.face_areas()),
        PopulationSpec::PerFace(values) => {
            if values.len() != mesh.face_count() {
                return Err(Error::PopulationCount {
                    expected: mesh.face_count(),
                    got: values.len(),
                });
            }
            for (i, &v) in values.iter().enumerate() {
                if !(v > 0.0) {
                    return Err(Error::NonPositivePopulation { index: i, value: v });
                }
            }
            Ok(values.clone())
        }
        PopulationSpec::RegionScaled { labels, rules } => {
            if labels.len() != mesh.face_count() {
                return Err(Error::RegionLabelCount {
                    expected: mesh.face_count(),
                    got: labels.len(),
                });
            }
            let mut population = mesh.face_areas();
            for &(region, multiplier) in rules {
                if !(multiplier > 0.0) {
                    return Err(Error::NonPositiveMultiplier {
                        region,
                        value: multiplier,
                    });
                }
                let mut matched = false;
                for (f, &label) in labels.iter().enumerate() {
                    if label == region {
                        population[f] *= multiplier;
                        matched = true;
                    }
                }
                if !matched {
                    return Err(Error::UnknownRegion { id: region });
                }
            }
            Ok(population)
        }
    }
}

/// Computes the initial land layout: planar meshes are their own layout;
/// curved meshes are flattened onto the curvature-derived convex boundary.
/// Returns the map, the scheme that produced it, and its flip count.
fn initial_map(mesh: &TriMesh, opts: &RunOptions) -> Result<(PlanarMap, InitKind, usize)> {
    if mesh.is_planar() {
        let map = mesh.project_planar()?;
        return Ok((map, opts.init, 0));
    }
    let curve = BoundaryCurve::from_mesh(mesh)?;
    let flat = boundary::flatten_boundary(&curve)?;
    match opts.init {
        InitKind::Tutte => Ok((flatten::tutte_flatten(mesh, &flat)?, InitKind::Tutte, 0)),
        InitKind::Authalic => {
            let (map, flips) = flatten::authalic_flatten(mesh, &flat)?;
            if flips > 0 && opts.strict_init {
                log::warn!(
                    "authalic initialization produced {flips} flipped face(s); falling back to Tutte"
                );
                Ok((flatten::tutte_flatten(mesh, &flat)?, InitKind::Tutte, flips))
            } else {
                Ok((map, InitKind::Authalic, flips))
            }
        }
    }
}

/// Full density-equalizing pipeline.
pub fn density_equalize(
    mesh: &TriMesh,
    spec: &PopulationSpec,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    mesh.validate_disk_topology()?;
    let population = resolve_population(mesh, spec)?;
    let (land0, init_used, init_flips) = initial_map(mesh, opts)?;

    // Initial density: prescribed population over the flattened face area.
    let rho_land: Vec<f64> = population
        .iter()
        .enumerate()
        .map(|(f, &p)| p / land0.signed_face_area(f))
        .collect();

    let aug = sea::build_sea(&land0, &opts.sea)?;
    let density = sea::extend_density(&aug, &rho_land, opts.sea_density_weighted)?;
    let (full, report) = diffusion::run_to_convergence(&aug, density, &opts.diffusion)?;
    let land_density = diffusion::normalized_land_density(&full, &population);

    // Strip the sea: the land block kept its indices through the whole
    // construction, so this is a plain prefix.
    let land = PlanarMap {
        coords: full.coords[..aug.land_vertex_count].to_vec(),
        faces: full.faces[..aug.land_face_count].to_vec(),
        land_mask: vec![true; aug.land_face_count],
        provenance: full.provenance[..aug.land_vertex_count].to_vec(),
    };

    Ok(RunOutcome {
        land,
        full,
        report,
        land_density,
        init_used,
        init_flips,
        area_ratio: None,
    })
}

/// Density-equalizing run with population = original face areas. On top of
/// the generic outcome, fills `area_ratio` with the raw per-face
/// original-over-final area ratios (1 everywhere = perfectly area-preserving).
pub fn area_preserving_parameterize(mesh: &TriMesh, opts: &RunOptions) -> Result<RunOutcome> {
    let mut outcome = density_equalize(mesh, &PopulationSpec::Area, opts)?;
    let ratios: Vec<f64> = (0..outcome.land.face_count())
        .map(|f| mesh.face_area(f) / outcome.land.signed_face_area(f))
        .collect();
    outcome.area_ratio = Some(diffusion::density_stats(&ratios));
    Ok(outcome)
}

/// Remeshing parameters.
#[derive(Debug, Clone, Default)]
pub struct RemeshSpec {
    /// Planar sample spacing; defaults to the map's mean land edge length.
    /// Triangulation is always Delaunay (constrained to the outline).
    pub spacing: Option<f64>,
}

/// Point wrapper for spade.
struct SitePoint {
    position: SpadePoint<f64>,
}

impl HasPosition for SitePoint {
    type Scalar = f64;
    fn position(&self) -> SpadePoint<f64> {
        self.position
    }
}

/// Uniform grid over the land faces for point location.
struct FaceLocator<'a> {
    map: &'a PlanarMap,
    lo: Point2<f64>,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> FaceLocator<'a> {
    fn build(map: &'a PlanarMap, cell: f64) -> Self {
        let (lo, hi) = geometry::bounds(&map.coords);
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (f, tri) in map.faces.iter().enumerate() {
            if !map.land_mask[f] {
                continue;
            }
            let xs = tri.map(|v| map.coords[v].x);
            let ys = tri.map(|v| map.coords[v].y);
            let x0 = (((xs.iter().cloned().fold(f64::INFINITY, f64::min) - lo.x) / cell) as usize)
                .min(nx - 1);
            let x1 = (((xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - lo.x) / cell)
                as usize)
                .min(nx - 1);
            let y0 = (((ys.iter().cloned().fold(f64::INFINITY, f64::min) - lo.y) / cell) as usize)
                .min(ny - 1);
            let y1 = (((ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - lo.y) / cell)
                as usize)
                .min(ny - 1);
            for gy in y0..=y1 {
                for gx in x0..=x1 {
                    buckets[gy * nx + gx].push(f);
                }
            }
        }
        FaceLocator {
            map,
            lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn candidates(&self, p: Point2<f64>) -> &[usize] {
        let gx = (((p.x - self.lo.x) / self.cell).floor() as i64).clamp(0, self.nx as i64 - 1);
        let gy = (((p.y - self.lo.y) / self.cell).floor() as i64).clamp(0, self.ny as i64 - 1);
        &self.buckets[gy as usize * self.nx + gx as usize]
    }

    /// Finds a land face containing `p` (boundary inclusive, by exact
    /// predicates) and returns it with barycentric coordinates.
    fn locate(&self, p: Point2<f64>) -> Option<(usize, [f64; 3])> {
        for &f in self.candidates(p) {
            let [i, j, k] = self.map.faces[f];
            let (a, b, c) = (self.map.coords[i], self.map.coords[j], self.map.coords[k]);
            let oab = geometry::orient2d(a, b, p);
            let obc = geometry::orient2d(b, c, p);
            let oca = geometry::orient2d(c, a, p);
            if oab >= 0.0 && obc >= 0.0 && oca >= 0.0 {
                return Some((f, barycentric(p, a, b, c)));
            }
        }
        None
    }

    /// Distance from `p` to the nearest candidate face (0 inside), with the
    /// face id; used for the snap rule on numerically-outside samples.
    fn nearest(&self, p: Point2<f64>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &f in self.candidates(p) {
            let [i, j, k] = self.map.faces[f];
            let (a, b, c) = (self.map.coords[i], self.map.coords[j], self.map.coords[k]);
            let d = geometry::point_segment_distance(p, a, b)
                .min(geometry::point_segment_distance(p, b, c))
                .min(geometry::point_segment_distance(p, c, a));
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((f, d));
            }
        }
        best
    }
}

/// Barycentric coordinates of `p` in triangle `(a, b, c)`.
fn barycentric(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> [f64; 3] {
    let total = geometry::signed_area(a, b, c);
    [
        geometry::signed_area(p, b, c) / total,
        geometry::signed_area(a, p, c) / total,
        geometry::signed_area(a, b, p) / total,
    ]
}

/// Resamples the equalized planar map uniformly and lifts the samples back
/// onto the original surface, producing a remeshed representation whose
/// vertex budget follows the prescribed population.
pub fn remesh_surface(mesh: &TriMesh, map: &PlanarMap, spec: &RemeshSpec) -> Result<TriMesh> {
    let spacing = match spec.spacing {
        Some(s) => {
            assert!(s > 0.0, "sample spacing must be positive");
            s
        }
        None => map.mean_land_edge_length(),
    };
    let boundary = map.land_boundary_loop()?;
    let polygon: Vec<Point2<f64>> = boundary.iter().map(|&v| map.coords[v]).collect();

    // 3D positions of the map's vertices, through provenance.
    let lift_vertex = |v: usize| -> Result<Point3<f64>> {
        let original = map.provenance[v].ok_or(Error::MissingProvenance { vertex: v })?;
        Ok(mesh.vertices()[original])
    };

    // Sample set: the boundary outline first (lifted exactly), then a
    // hexagonal lattice clipped to the polygon with spacing/2 clearance from
    // the outline so the triangulation stays well-shaped.
    let mut samples: Vec<Point2<f64>> = polygon.clone();
    let mut lifted: Vec<Point3<f64>> = boundary
        .iter()
        .map(|&v| lift_vertex(v))
        .collect::<Result<_>>()?;

    let locator = FaceLocator::build(map, spacing.max(1e-12));
    let (lo, hi) = geometry::bounds(&polygon);
    let dy = spacing * 3.0_f64.sqrt() / 2.0;
    let clearance = spacing / 2.0;
    let rows = ((hi.y - lo.y) / dy).ceil() as i64;
    let cols = ((hi.x - lo.x) / spacing).ceil() as i64;
    let mut dropped = 0usize;
    for j in 0..=rows {
        let y = lo.y + j as f64 * dy;
        let offset = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..=cols {
            let p = Point2::new(lo.x + (i as f64 + offset) * spacing, y);
            if !geometry::point_in_polygon(p, &polygon) {
                continue;
            }
            let near_outline = polygon
                .iter()
                .zip(polygon.iter().cycle().skip(1))
                .any(|(&a, &b)| geometry::point_segment_distance(p, a, b) < clearance);
            if near_outline {
                continue;
            }
            // Lift by barycentric interpolation in the containing face, with
            // the snap rule for samples that sit numerically outside.
            let located = locator.locate(p).or_else(|| {
                locator.nearest(p).and_then(|(f, d)| {
                    if d <= spacing / 10.0 {
                        let [i, j, k] = map.faces[f];
                        let bc = barycentric(p, map.coords[i], map.coords[j], map.coords[k]);
                        let clamped = bc.map(|w| w.max(0.0));
                        let sum: f64 = clamped.iter().sum();
                        Some((f, clamped.map(|w| w / sum)))
                    } else {
                        None
                    }
                })
            });
            let Some((f, bc)) = located else {
                dropped += 1;
                continue;
            };
            let [a, b, c] = map.faces[f];
            // A sample that lands (numerically) on a vertex lifts exactly.
            let exact = [(a, bc[0]), (b, bc[1]), (c, bc[2])]
                .iter()
                .find(|&&(_, w)| (w - 1.0).abs() < 1e-12)
                .map(|&(v, _)| v);
            let q = match exact {
                Some(v) => lift_vertex(v)?,
                None => {
                    let (pa, pb, pc) = (lift_vertex(a)?, lift_vertex(b)?, lift_vertex(c)?);
                    Point3::from(pa.coords * bc[0] + pb.coords * bc[1] + pc.coords * bc[2])
                }
            };
            samples.push(p);
            lifted.push(q);
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} remesh sample(s) could not be located in the map and were dropped");
    }

    // Constrained Delaunay over the samples; the outline ring bounds the
    // domain and faces outside it (concavities) are discarded.
    let mut cdt: ConstrainedDelaunayTriangulation<SitePoint> =
        ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(samples.len());
    for p in &samples {
        let h = cdt
            .insert(SitePoint {
                position: SpadePoint::new(p.x, p.y),
            })
            .map_err(|e| Error::SeaTriangulation {
                msg: format!("remesh point insertion failed: {e:?}"),
            })?;
        handles.push(h);
    }
    for m in 0..polygon.len() {
        cdt.add_constraint(handles[m], handles[(m + 1) % polygon.len()]);
    }

    let mut faces = Vec::new();
    for face in cdt.inner_faces() {
        let ids = face.vertices().map(|v| v.fix().index());
        let c = face.center();
        if geometry::point_in_polygon(Point2::new(c.x, c.y), &polygon) {
            faces.push(ids);
        }
    }

    // Compact away samples that lost every face (can happen in slivers).
    let mut remap = vec![usize::MAX; samples.len()];
    let mut vertices = Vec::new();
    for face in &mut faces {
        for v in face.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = vertices.len();
                vertices.push(lifted[*v]);
            }
            *v = remap[*v];
        }
    }

    TriMesh::new(vertices, faces)
        .and_then(|m| {
            m.validate_disk_topology()?;
            Ok(m)
        })
        .map_err(|e| Error::RemeshInvalid {
            source: Box::new(e),
        })
}
