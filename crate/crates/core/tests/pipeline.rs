//! Stage-level integration tests: flattening fixed points, sea construction
//! audited against closed-form geometry, and diffusion invariants.

mod common;

use deq_core::boundary::{self, BoundaryCurve};
use deq_core::diffusion::{self, DiffusionConfig, DiffusionState};
use deq_core::flatten;
use deq_core::geometry::Point2;
use deq_core::ops::{self, DensityField};
use deq_core::sea::{self, SeaConfig};
use deq_core::synth;

/// A planar mesh flattened onto its own replayed boundary is a fixed point
/// of the authalic map, up to the rigid motion introduced by the replay.
/// Pairwise vertex distances are rigid-motion invariants, so they must
/// survive exactly.
#[test]
fn authalic_recovers_planar_mesh_up_to_rigid_motion() {
    let mesh = synth::square_grid(4, 2.0);
    let curve = boundary::flatten_boundary(&BoundaryCurve::from_mesh(&mesh).unwrap()).unwrap();
    let (map, flips) = flatten::authalic_flatten(&mesh, &curve).unwrap();
    assert_eq!(flips, 0, "planar fixed point must not flip faces");

    let vs = mesh.vertices();
    let mut worst = 0.0f64;
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            let d3 = (vs[i] - vs[j]).norm();
            let d2 = (map.coords[i] - map.coords[j]).norm();
            worst = worst.max((d3 - d2).abs());
        }
    }
    assert!(
        worst <= 1e-10,
        "pairwise distances drifted by {worst:.3e} on a flat input"
    );
}

/// On a curved surface the authalic initializer should spread area more
/// evenly than Tutte: compare the dispersion of normalized per-face density
/// (3D area over flattened area).
#[test]
fn authalic_init_spreads_area_better_than_tutte() {
    let mesh = synth::multi_peak_surface(20);
    let curve = boundary::flatten_boundary(&BoundaryCurve::from_mesh(&mesh).unwrap()).unwrap();
    let areas = mesh.face_areas();

    let tutte = flatten::tutte_flatten(&mesh, &curve).unwrap();
    let (authalic, _) = flatten::authalic_flatten(&mesh, &curve).unwrap();

    let iqr = |map: &deq_core::PlanarMap| {
        diffusion::density_stats(&diffusion::normalized_land_density(map, &areas)).iqr
    };
    let (iqr_tutte, iqr_authalic) = (iqr(&tutte), iqr(&authalic));
    assert!(
        iqr_authalic < iqr_tutte,
        "authalic IQR {iqr_authalic:.4} should beat Tutte IQR {iqr_tutte:.4}"
    );
}

/// Drives the sea construction stage by stage and audits each against
/// closed-form geometry: the normalized radius, the exact tiling of the
/// inscribed ring polygon, mirror orientation, and the truncation bound.
#[test]
fn sea_construction_passes_geometric_audit() {
    let map = synth::square_grid(5, 2.0).project_planar().unwrap();
    let cfg = SeaConfig::default();

    // Normalization: max vertex radius is exactly the shrink radius.
    let (disk, scale) = sea::normalize_into_disk(&map, &cfg).unwrap();
    let max_r = disk
        .coords
        .iter()
        .map(|p| p.coords.norm())
        .fold(0.0, f64::max);
    assert!((max_r - cfg.shrink_radius).abs() <= 1e-12);

    // Gap fill: land plus gap faces tile the polygon inscribed in the unit
    // circle through the ring points, whose area is (m/2)·sin(2π/m).
    let spacing = disk.mean_land_edge_length();
    let gap = sea::generate_gap_points(&disk, spacing).unwrap();
    let m = gap.ring.len();
    assert!(m >= 8, "ring must stay well resolved, got {m} points");
    let (glued_disk, ring) = sea::triangulate_gap(&disk, &gap, spacing, cfg.jitter_seed).unwrap();
    let tiled: f64 = (0..glued_disk.face_count())
        .map(|f| glued_disk.signed_face_area(f))
        .sum();
    let polygon = 0.5 * m as f64 * (std::f64::consts::TAU / m as f64).sin();
    assert!(
        (tiled - polygon).abs() <= 1e-9,
        "land+gap area {tiled:.12} vs inscribed {m}-gon {polygon:.12}"
    );

    // Reflection: ring vertices are fixed points, the original disk survives
    // as a prefix, and any face the vertex-wise inversion flipped (mirrors of
    // triangles near the origin land far out) must lie beyond the truncation
    // radius so the cut removes it.
    let glued = sea::reflect_glue(&glued_disk, &ring).unwrap();
    for &v in &ring {
        assert_eq!(glued.coords[v], glued_disk.coords[v], "ring vertex moved");
    }
    assert_eq!(
        &glued.faces[..glued_disk.face_count()],
        &glued_disk.faces[..]
    );
    for f in 0..glued.face_count() {
        if glued.signed_face_area(f) <= 0.0 {
            let beyond = glued.faces[f]
                .iter()
                .any(|&v| glued.coords[v].coords.norm() > cfg.truncate_radius);
            assert!(
                beyond,
                "face {f} is flipped yet inside the truncation radius"
            );
        }
    }

    // Truncation and rescale: radius bound and land restored exactly up to
    // one common translation.
    let aug =
        sea::truncate_and_rescale(&glued, scale, &ring, &cfg, map.vertex_count(), spacing).unwrap();
    let limit = cfg.truncate_radius / scale * (1.0 + 1e-9);
    let max_out = aug
        .map
        .coords
        .iter()
        .map(|p| p.coords.norm())
        .fold(0.0, f64::max);
    assert!(max_out <= limit, "sea radius {max_out} exceeds {limit}");
    let min_area = (0..aug.map.face_count())
        .map(|f| aug.map.signed_face_area(f))
        .fold(f64::INFINITY, f64::min);
    assert!(min_area > 0.0, "truncated map still has a flipped face");

    let shift = map.coords[0] - aug.map.coords[0];
    for v in 0..map.vertex_count() {
        let drift = (map.coords[v] - aug.map.coords[v] - shift).norm();
        assert!(
            drift <= 1e-12,
            "land vertex {v} moved {drift:.3e} beyond a pure translation"
        );
    }
}

/// The reflection z ↦ z/|z|² satisfies |g(z₁) − g(z₂)|·|z₁||z₂| = |z₁ − z₂|.
#[test]
fn inversion_satisfies_the_distance_identity() {
    let mut worst = 0.0f64;
    for i in 0..24 {
        for j in 0..24 {
            if i == j {
                continue;
            }
            let a = Point2::new(
                0.08 + 0.9 * (i as f64 / 24.0) * (1.1 * i as f64).cos(),
                0.9 * (i as f64 / 24.0) * (1.1 * i as f64).sin() + 0.05,
            );
            let b = Point2::new(
                0.7 * (j as f64 / 24.0 + 0.1) * (2.3 * j as f64).cos(),
                0.7 * (j as f64 / 24.0 + 0.1) * (2.3 * j as f64).sin() - 0.04,
            );
            let (ra, rb) = (a.coords.norm(), b.coords.norm());
            if ra < 1e-3 || rb < 1e-3 {
                continue;
            }
            let direct = (a - b).norm();
            let reflected = (sea::invert(a) - sea::invert(b)).norm();
            worst = worst.max((reflected * ra * rb - direct).abs());
        }
    }
    assert!(worst <= 1e-12, "distance identity violated by {worst:.3e}");
}

/// Mirrored sea triangles coarsen with radius: edges in the outer annulus
/// are on average longer than edges just outside the glue circle.
#[test]
fn sea_edges_grow_with_radius() {
    let map = synth::square_grid(8, 2.0).project_planar().unwrap();
    let aug = sea::build_sea(&map, &SeaConfig::default()).unwrap();

    let mut near = Vec::new(); // normalized radius in [1, 1.5]
    let mut far = Vec::new(); // normalized radius in [2, 5]
    for f in aug.land_face_count..aug.map.face_count() {
        let [i, j, k] = aug.map.faces[f];
        for (a, b) in [(i, j), (j, k), (k, i)] {
            let mid = nalgebra_mid(&aug.map.coords[a], &aug.map.coords[b]);
            let r = mid.coords.norm() * aug.land_scale;
            let len = (aug.map.coords[a] - aug.map.coords[b]).norm() * aug.land_scale;
            if (1.0..=1.5).contains(&r) {
                near.push(len);
            } else if (2.0..=5.0).contains(&r) {
                far.push(len);
            }
        }
    }
    assert!(
        near.len() > 10 && far.len() > 10,
        "annuli must be populated"
    );
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&far) > mean(&near),
        "far edges ({:.4}) should exceed near edges ({:.4})",
        mean(&far),
        mean(&near)
    );
}

fn nalgebra_mid(a: &Point2<f64>, b: &Point2<f64>) -> Point2<f64> {
    Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
}

/// Builds a ready-to-step diffusion state for the square example.
fn square_example_state() -> (DiffusionState, usize) {
    let mesh = synth::square_grid(8, 8.0);
    let population = synth::gaussian_population(&mesh, 40.0);
    let map = mesh.project_planar().unwrap();
    let rho_land: Vec<f64> = population
        .iter()
        .enumerate()
        .map(|(f, &p)| p / map.signed_face_area(f))
        .collect();
    let aug = sea::build_sea(&map, &SeaConfig::default()).unwrap();
    let density = sea::extend_density(&aug, &rho_land, false).unwrap();
    let dt = diffusion::compute_timestep(&density.rho_f, aug.map.land_area());
    let land_vertex_count = aug.land_vertex_count;
    (
        DiffusionState {
            map: aug.map,
            density,
            iteration: 0,
            dt,
            trace: Vec::new(),
        },
        land_vertex_count,
    )
}

/// Each backward-Euler solve conserves the lumped mass Σ D_ii·ρ_i measured
/// on the mesh the solve ran on.
#[test]
fn each_solve_conserves_lumped_mass() {
    let (mut state, _) = square_example_state();
    let cfg = DiffusionConfig::default();
    for _ in 0..4 {
        let pair = ops::cotan_laplacian(&state.map).unwrap();
        let mass_before: f64 = state
            .density
            .rho_v
            .iter()
            .zip(&pair.d)
            .map(|(&r, &d)| r * d)
            .sum();
        let next = diffusion::diffusion_step(&state, &cfg).unwrap();
        let mass_after: f64 = next
            .density
            .rho_v
            .iter()
            .zip(&pair.d)
            .map(|(&r, &d)| r * d)
            .sum();
        let rel = (mass_after - mass_before).abs() / mass_before;
        assert!(rel <= 1e-8, "solve leaked {rel:.3e} of the lumped mass");
        state = next;
    }
}

/// Implicit diffusion smooths: the new vertex densities stay within the old
/// range (discrete maximum principle, with a small tolerance because sea
/// triangles are not guaranteed Delaunay after mirroring).
#[test]
fn diffusion_respects_density_bounds() {
    let (mut state, _) = square_example_state();
    let cfg = DiffusionConfig::default();
    for step in 0..4 {
        let lo = state
            .density
            .rho_v
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let hi = state
            .density
            .rho_v
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let slack = 1e-9 * (hi - lo).max(hi.abs());
        let next = diffusion::diffusion_step(&state, &cfg).unwrap();
        for (v, &r) in next.density.rho_v.iter().enumerate() {
            assert!(
                r >= lo - slack && r <= hi + slack,
                "step {step}: vertex {v} density {r} escaped [{lo}, {hi}]"
            );
        }
        state = next;
    }
}

/// The stopping functional may wobble while land and sea exchange density,
/// but a mostly-monotone decay is part of the method working at all.
#[test]
fn stopping_functional_decays_nearly_monotonically() {
    let (mut state, _) = square_example_state();
    let cfg = DiffusionConfig::default();
    let mut previous = diffusion::stopping_functional(&state.density.rho_f);
    let mut increases = 0;
    while *state.trace.last().unwrap_or(&f64::INFINITY) >= cfg.epsilon
        && state.iteration < cfg.max_iterations
    {
        state = diffusion::diffusion_step(&state, &cfg).unwrap();
        let current = *state.trace.last().unwrap();
        if current > previous {
            increases += 1;
        }
        previous = current;
    }
    assert!(
        state.iteration < cfg.max_iterations,
        "square example failed to converge"
    );
    assert!(
        increases <= 2,
        "stopping functional rose {increases} times over {} iterations",
        state.iteration
    );
}

/// Per-face density projected to vertices and back stays strictly positive
/// and keeps the land/sea split intact end to end.
#[test]
fn extended_density_is_positive_and_sea_is_constant() {
    let map = synth::square_grid(6, 3.0).project_planar().unwrap();
    let population = synth::gaussian_population(&synth::square_grid(6, 3.0), 4.0);
    let rho_land: Vec<f64> = population
        .iter()
        .enumerate()
        .map(|(f, &p)| p / map.signed_face_area(f))
        .collect();
    let aug = sea::build_sea(&map, &SeaConfig::default()).unwrap();
    let density = sea::extend_density(&aug, &rho_land, false).unwrap();

    let land_mean = rho_land.iter().sum::<f64>() / rho_land.len() as f64;
    for f in aug.land_face_count..aug.map.face_count() {
        assert!((density.rho_f[f] - land_mean).abs() <= 1e-12 * land_mean);
    }
    assert!(density.rho_f.iter().all(|&r| r > 0.0));
    assert!(density.rho_v.iter().all(|&r| r > 0.0));

    // rho_v is the face-to-vertex average of rho_f by construction.
    let transitions = ops::transitions(&aug.map).unwrap();
    let expected = transitions.m_fv.matvec(&density.rho_f).unwrap();
    assert!(common::max_abs_diff(&density.rho_v, &expected) <= 1e-12);
    let _ = DensityField::from_faces(density.rho_f.clone(), &transitions).unwrap();
}
