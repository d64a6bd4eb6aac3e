//! Adaptive "sea" construction around a flattened land mesh.
//!
//! Diffusion needs room: without surroundings, density gradients at the land
//! boundary have nowhere to push, and the domain would drift or balloon. The
//! sea supplies that room adaptively:
//!
//! 1. [`normalize_into_disk`] — translate the land's area-weighted centroid to
//!    the origin and shrink it inside the unit circle (max radius
//!    [`SeaConfig::shrink_radius`], recording the scale).
//! 2. [`generate_gap_points`] — fill the annular gap between land and circle
//!    with a hexagonal lattice at the land's mean edge length, plus an evenly
//!    spaced ring exactly on the unit circle.
//! 3. [`triangulate_gap`] — constrained Delaunay triangulation of the gap with
//!    the land boundary edges as constraints; land connectivity is untouched.
//! 4. [`reflect_glue`] — mirror the whole triangulated disk through the circle
//!    inversion `g(z) = z / |z|²` and glue along the shared ring, producing an
//!    exterior whose triangles grow quadratically with radius.
//! 5. [`truncate_and_rescale`] — drop everything beyond
//!    [`SeaConfig::truncate_radius`], then scale uniformly about the origin so
//!    the land regains its original size.
//!
//! [`extend_density`] then assigns every sea face the mean land density, so
//! the sea neither attracts nor repels mass on average. [`build_sea`] chains
//! steps 1–5.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2 as SpadePoint, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{self, Point2, Vector2};
use crate::mesh::PlanarMap;
use crate::ops::{self, DensityField};

/// Parameters of the sea construction.
#[derive(Debug, Clone)]
pub struct SeaConfig {
    /// Maximum land radius inside the unit disk after normalization.
    /// Must lie in (0, 1); the remaining annulus hosts the gap lattice.
    pub shrink_radius: f64,
    /// Vertices beyond this radius (pre-rescale units, so the unit circle is
    /// the land/sea glue line) are cut away. Must exceed 1.
    pub truncate_radius: f64,
    /// How the gap lattice spacing is chosen.
    pub gap_spacing: GapSpacing,
    /// Seed for the jitter-and-retry fallback when the gap triangulation hits
    /// a degenerate point configuration. Has no effect on the common path.
    pub jitter_seed: u64,
}

/// Gap lattice spacing policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapSpacing {
    /// Use the mean edge length of the normalized land mesh.
    MeanEdgeLength,
}

impl Default for SeaConfig {
    fn default() -> Self {
        SeaConfig {
            shrink_radius: 0.7,
            truncate_radius: 5.0,
            gap_spacing: GapSpacing::MeanEdgeLength,
            jitter_seed: 0xD15C,
        }
    }
}

/// Minimum number of points on the unit circle for a usable sea.
const MIN_RING_POINTS: usize = 8;

/// Vertices closer to the origin than this are not mirrored: their images
/// would sit beyond any practical truncation radius anyway, and the inversion
/// is singular at zero.
const ORIGIN_EXCLUSION: f64 = 1e-6;

/// Land mesh surrounded by its sea.
#[derive(Debug, Clone)]
pub struct AugmentedMap {
    /// Land faces first (`land_mask` true), then sea faces; land vertices
    /// first, then gap/ring/mirror vertices.
    pub map: PlanarMap,
    /// Scale factor that was applied to normalize the land into the disk.
    /// The final rescale divides it back out, so post-rescale the glue ring
    /// sits at radius `1 / land_scale`.
    pub land_scale: f64,
    /// Indices of the vertices on the land/sea glue circle.
    pub circle_ring: Vec<usize>,
    pub land_vertex_count: usize,
    pub land_face_count: usize,
    /// Gap lattice spacing actually used (normalized units).
    pub gap_spacing: f64,
}

/// Gap-filling point set: the annulus lattice and the unit-circle ring.
#[derive(Debug, Clone)]
pub struct GapPoints {
    pub lattice: Vec<Point2<f64>>,
    pub ring: Vec<Point2<f64>>,
}

/// Translates the land's area-weighted centroid to the origin and scales the
/// mesh so its maximum vertex radius equals `cfg.shrink_radius`. Returns the
/// normalized map and the applied scale factor.
///
/// Precondition: `map` is land-only (every face marked land).
pub fn normalize_into_disk(map: &PlanarMap, cfg: &SeaConfig) -> Result<(PlanarMap, f64)> {
    debug_assert!(map.land_mask.iter().all(|&m| m), "expected a land-only map");
    let areas = map.face_areas();
    let mut total = 0.0;
    let mut weighted = Vector2::zeros();
    for (f, _) in map.faces.iter().enumerate() {
        // Absolute areas keep the centroid meaningful even if upstream chose
        // to continue past flipped faces.
        let a = areas[f].abs();
        total += a;
        weighted += a * map.face_centroid(f).coords;
    }
    if total <= 0.0 {
        return Err(Error::EmptyMesh);
    }
    let center = weighted / total;
    let max_radius = map
        .coords
        .iter()
        .map(|p| (p.coords - center).norm())
        .fold(0.0, f64::max);
    if max_radius <= 0.0 {
        return Err(Error::EmptyMesh);
    }
    let scale = cfg.shrink_radius / max_radius;
    let mut out = map.clone();
    for p in &mut out.coords {
        *p = Point2::from((p.coords - center) * scale);
    }
    Ok((out, scale))
}

/// Generates the gap lattice and circle ring for a normalized land map.
///
/// The lattice is hexagonal with the given spacing, clipped to radius
/// `1 − spacing/2`, and thinned so that no point lies inside the land polygon,
/// within `spacing/2` of a land vertex, or within `spacing/2` of a land
/// boundary edge (the last rule keeps the later triangulation's constraint
/// segments clean). The ring holds `⌈2π/spacing⌉` evenly spaced points on the
/// unit circle.
pub fn generate_gap_points(map: &PlanarMap, spacing: f64) -> Result<GapPoints> {
    let ring_count = (std::f64::consts::TAU / spacing).ceil() as usize;
    if ring_count < MIN_RING_POINTS {
        return Err(Error::GapSpacingTooCoarse {
            spacing,
            ring_points: ring_count,
        });
    }

    let boundary = map.boundary_loop_ccw()?;
    let polygon: Vec<Point2<f64>> = boundary.iter().map(|&v| map.coords[v]).collect();

    let clip = 1.0 - spacing / 2.0;
    let clearance2 = (spacing / 2.0) * (spacing / 2.0);
    let dy = spacing * 3.0_f64.sqrt() / 2.0;
    let rows = (clip / dy).ceil() as i64;
    let cols = (clip / spacing).ceil() as i64 + 1;

    let mut lattice = Vec::new();
    for j in -rows..=rows {
        let y = j as f64 * dy;
        let offset = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
        for i in -cols..=cols {
            let x = (i as f64 + offset) * spacing;
            if x * x + y * y > clip * clip {
                continue;
            }
            let p = Point2::new(x, y);
            if geometry::point_in_polygon(p, &polygon) {
                continue;
            }
            let near_vertex = map
                .coords
                .iter()
                .any(|q| (p - q).norm_squared() < clearance2);
            if near_vertex {
                continue;
            }
            let near_edge = polygon
                .iter()
                .zip(polygon.iter().cycle().skip(1))
                .any(|(&a, &b)| {
                    let d = geometry::point_segment_distance(p, a, b);
                    d * d < clearance2
                });
            if near_edge {
                continue;
            }
            lattice.push(p);
        }
    }

    let ring = (0..ring_count)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / ring_count as f64;
            Point2::new(theta.cos(), theta.sin())
        })
        .collect();
    Ok(GapPoints { lattice, ring })
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

/// Triangulates the gap between land and circle and merges the result with
/// the land mesh into one disk-shaped map.
///
/// The land boundary edges are constraint segments, so land connectivity
/// survives verbatim and no gap triangle straddles the land outline. Output
/// vertex order: land (original indices), then lattice, then ring. Returns
/// the combined map and the indices of the ring vertices.
///
/// A degenerate point configuration fails the first triangulation attempt;
/// the lattice is then jittered by `spacing/20` (deterministically) and tried
/// once more before giving up.
pub fn triangulate_gap(
    map: &PlanarMap,
    gap: &GapPoints,
    spacing: f64,
    jitter_seed: u64,
) -> Result<(PlanarMap, Vec<usize>)> {
    match triangulate_gap_attempt(map, gap) {
        Ok(result) => Ok(result),
        Err(first_err) => {
            log::warn!("gap triangulation failed ({first_err}); retrying with jitter");
            let mut rng = ChaCha8Rng::seed_from_u64(jitter_seed);
            let amp = spacing / 20.0;
            let jittered = GapPoints {
                lattice: gap
                    .lattice
                    .iter()
                    .map(|p| {
                        Point2::new(
                            p.x + rng.gen_range(-amp..amp),
                            p.y + rng.gen_range(-amp..amp),
                        )
                    })
                    .collect(),
                ring: gap.ring.clone(),
            };
            triangulate_gap_attempt(map, &jittered)
        }
    }
}

fn triangulate_gap_attempt(map: &PlanarMap, gap: &GapPoints) -> Result<(PlanarMap, Vec<usize>)> {
    let nl = map.coords.len();
    let boundary = map.boundary_loop_ccw()?;
    let polygon: Vec<Point2<f64>> = boundary.iter().map(|&v| map.coords[v]).collect();

    let mut cdt: ConstrainedDelaunayTriangulation<SitePoint> =
        ConstrainedDelaunayTriangulation::new();
    // handle index -> output vertex index
    let mut out_of: Vec<usize> = Vec::new();
    let mut insert = |cdt: &mut ConstrainedDelaunayTriangulation<SitePoint>,
                      p: Point2<f64>,
                      out_idx: usize|
     -> Result<spade::handles::FixedVertexHandle> {
        let handle = cdt
            .insert(SitePoint {
                position: SpadePoint::new(p.x, p.y),
            })
            .map_err(|e| Error::SeaTriangulation {
                msg: format!("point insertion failed: {e:?}"),
            })?;
        if handle.index() != out_of.len() {
            // The point coincided with an existing site; the clearance rules
            // should have prevented that.
            return Err(Error::SeaTriangulation {
                msg: format!("duplicate triangulation site at ({}, {})", p.x, p.y),
            });
        }
        out_of.push(out_idx);
        Ok(handle)
    };

    let mut boundary_handles = Vec::with_capacity(boundary.len());
    for &v in &boundary {
        boundary_handles.push(insert(&mut cdt, map.coords[v], v)?);
    }
    for (i, &p) in gap.lattice.iter().enumerate() {
        insert(&mut cdt, p, nl + i)?;
    }
    let ring_base = nl + gap.lattice.len();
    for (k, &p) in gap.ring.iter().enumerate() {
        insert(&mut cdt, p, ring_base + k)?;
    }
    for m in 0..boundary_handles.len() {
        let a = boundary_handles[m];
        let b = boundary_handles[(m + 1) % boundary_handles.len()];
        cdt.add_constraint(a, b);
    }

    // Collect gap faces; faces triangulating the land region are replaced by
    // the land mesh itself.
    let mut faces: Vec<[usize; 3]> = map.faces.clone();
    let land_faces = faces.len();
    for face in cdt.inner_faces() {
        let ids = face.vertices().map(|v| out_of[v.fix().index()]);
        let c = face.center();
        if geometry::point_in_polygon(Point2::new(c.x, c.y), &polygon) {
            continue;
        }
        faces.push(ids);
    }
    if faces.len() == land_faces {
        return Err(Error::SeaTriangulation {
            msg: "triangulation produced no sea faces".into(),
        });
    }

    let mut coords = map.coords.clone();
    coords.extend(gap.lattice.iter().copied());
    coords.extend(gap.ring.iter().copied());
    let mut land_mask = vec![true; land_faces];
    land_mask.resize(faces.len(), false);
    let mut provenance = map.provenance.clone();
    provenance.resize(coords.len(), None);

    let disk = PlanarMap {
        coords,
        faces,
        land_mask,
        provenance,
    };
    let ring_indices = (ring_base..ring_base + gap.ring.len()).collect();
    Ok((disk, ring_indices))
}

/// Circle inversion `g(z) = z / |z|²` (reflection through the unit circle).
pub fn invert(p: Point2<f64>) -> Point2<f64> {
    let r2 = p.coords.norm_squared();
    Point2::from(p.coords / r2)
}

/// Mirrors the triangulated disk through the unit circle and glues the copy
/// along the shared ring, yielding a closed mesh covering the whole plane.
///
/// Mirror faces take reversed index order: the inversion reverses orientation,
/// so reversing again keeps every face counterclockwise. Ring vertices are
/// fixed points and shared between the halves. Vertices within
/// [`ORIGIN_EXCLUSION`] of the origin are not mirrored (singularity); faces
/// touching them get no mirror, leaving a far-field hole that truncation
/// removes. Faces whose three vertices all lie on the ring are likewise not
/// mirrored (their mirror would coincide with them, flipped).
pub fn reflect_glue(disk: &PlanarMap, ring: &[usize]) -> Result<PlanarMap> {
    let n = disk.coords.len();
    let mut on_ring = vec![false; n];
    for &v in ring {
        on_ring[v] = true;
    }

    let mut coords = disk.coords.clone();
    let mut mirror = vec![usize::MAX; n];
    let mut skipped_origin = 0usize;
    for v in 0..n {
        if on_ring[v] {
            mirror[v] = v;
            continue;
        }
        if disk.coords[v].coords.norm() < ORIGIN_EXCLUSION {
            skipped_origin += 1;
            continue;
        }
        mirror[v] = coords.len();
        coords.push(invert(disk.coords[v]));
    }
    if skipped_origin > 0 {
        log::warn!("{skipped_origin} vertex(es) at the inversion singularity were not mirrored");
    }

    let mut faces = disk.faces.clone();
    let mut land_mask = disk.land_mask.clone();
    let mut all_ring_faces = 0usize;
    for &[i, j, k] in &disk.faces {
        if on_ring[i] && on_ring[j] && on_ring[k] {
            all_ring_faces += 1;
            continue;
        }
        if mirror[i] == usize::MAX || mirror[j] == usize::MAX || mirror[k] == usize::MAX {
            continue; // touches the singularity; truncation cleans up the hole
        }
        faces.push([mirror[k], mirror[j], mirror[i]]);
        land_mask.push(false);
    }
    if all_ring_faces > 0 {
        log::warn!("{all_ring_faces} face(s) with all vertices on the ring were not mirrored");
    }

    let mut provenance = disk.provenance.clone();
    provenance.resize(coords.len(), None);
    Ok(PlanarMap {
        coords,
        faces,
        land_mask,
        provenance,
    })
}

/// Removes everything beyond `cfg.truncate_radius` and rescales the remainder
/// about the origin by `1 / land_scale`, restoring the land's original size.
///
/// Faces are removed if any of their vertices is removed; vertices that lose
/// all their faces go too. The result must be a topological disk with
/// correctly oriented sea faces.
pub fn truncate_and_rescale(
    glued: &PlanarMap,
    land_scale: f64,
    ring: &[usize],
    cfg: &SeaConfig,
    land_vertex_count: usize,
    gap_spacing: f64,
) -> Result<AugmentedMap> {
    let n = glued.coords.len();
    let removed: Vec<bool> = glued
        .coords
        .iter()
        .map(|p| p.coords.norm() > cfg.truncate_radius)
        .collect();
    if !removed.iter().any(|&r| r) {
        // Coarse meshes can mirror entirely inside the truncation radius. The
        // result is only a valid domain when the singularity exclusion left a
        // rim; otherwise the disk check below reports the closed surface.
        log::warn!(
            "no vertex lies beyond the truncation radius {}; the mesh is too \
             coarse for a far field",
            cfg.truncate_radius
        );
    }

    let keep_face: Vec<bool> = glued
        .faces
        .iter()
        .map(|f| f.iter().all(|&v| !removed[v]))
        .collect();
    // Vertices orphaned by face removal disappear as well.
    let mut used = vec![false; n];
    for (f, face) in glued.faces.iter().enumerate() {
        if keep_face[f] {
            for &v in face {
                used[v] = true;
            }
        }
    }
    let mut remap = vec![usize::MAX; n];
    let mut coords = Vec::new();
    let mut provenance = Vec::new();
    for v in 0..n {
        if used[v] {
            remap[v] = coords.len();
            coords.push(Point2::from(glued.coords[v].coords / land_scale));
            provenance.push(glued.provenance[v]);
        }
    }
    let mut faces = Vec::new();
    let mut land_mask = Vec::new();
    for (f, face) in glued.faces.iter().enumerate() {
        if keep_face[f] {
            faces.push([remap[face[0]], remap[face[1]], remap[face[2]]]);
            land_mask.push(glued.land_mask[f]);
        }
    }

    // Land vertices occupy the low indices and are all inside the unit circle,
    // so the remap must leave them untouched.
    debug_assert!((0..land_vertex_count).all(|v| remap[v] == v));
    let land_face_count = land_mask.iter().filter(|&&m| m).count();

    let map = PlanarMap {
        coords,
        faces,
        land_mask,
        provenance,
    };
    let diag = map.diagnostics()?;
    diag.require_disk()?;
    // Sea faces were constructed counterclockwise; a flip there is a bug, not
    // an input property (land flips were warned about upstream).
    let areas = map.face_areas();
    let sea_flips = map
        .land_mask
        .iter()
        .zip(areas.iter())
        .filter(|&(&land, &a)| !land && a <= 0.0)
        .count();
    if sea_flips > 0 {
        return Err(Error::SeaTriangulation {
            msg: format!("{sea_flips} sea face(s) came out flipped"),
        });
    }

    let circle_ring = ring
        .iter()
        .map(|&v| remap[v])
        .filter(|&v| v != usize::MAX)
        .collect();
    Ok(AugmentedMap {
        map,
        land_scale,
        circle_ring,
        land_vertex_count,
        land_face_count,
        gap_spacing,
    })
}

/// Runs the whole sea pipeline on a land-only map.
pub fn build_sea(land: &PlanarMap, cfg: &SeaConfig) -> Result<AugmentedMap> {
    let (normalized, land_scale) = normalize_into_disk(land, cfg)?;
    let spacing = match cfg.gap_spacing {
        GapSpacing::MeanEdgeLength => normalized.mean_land_edge_length(),
    };
    let gap = generate_gap_points(&normalized, spacing)?;
    let (disk, ring) = triangulate_gap(&normalized, &gap, spacing, cfg.jitter_seed)?;
    let glued = reflect_glue(&disk, &ring)?;
    truncate_and_rescale(
        &glued,
        land_scale,
        &ring,
        cfg,
        normalized.coords.len(),
        spacing,
    )
}

/// Extends a per-land-face density over the sea: every sea face receives the
/// mean land density (unweighted by default; `area_weighted` switches to an
/// area-weighted mean over current land areas).
pub fn extend_density(
    aug: &AugmentedMap,
    rho_land: &[f64],
    area_weighted: bool,
) -> Result<DensityField> {
    if rho_land.len() != aug.land_face_count {
        return Err(Error::PopulationCount {
            expected: aug.land_face_count,
            got: rho_land.len(),
        });
    }
    for (i, &v) in rho_land.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonPositivePopulation { index: i, value: v });
        }
    }
    let sea_value = if area_weighted {
        let areas = aug.map.face_areas();
        let mut num = 0.0;
        let mut den = 0.0;
        for (f, &rho) in rho_land.iter().enumerate() {
            num += rho * areas[f].abs();
            den += areas[f].abs();
        }
        num / den
    } else {
        rho_land.iter().sum::<f64>() / rho_land.len() as f64
    };

    let mut rho_f = Vec::with_capacity(aug.map.face_count());
    rho_f.extend_from_slice(rho_land);
    rho_f.resize(aug.map.face_count(), sea_value);
    let transitions = ops::transitions(&aug.map)?;
    DensityField::from_faces(rho_f, &transitions)
}
