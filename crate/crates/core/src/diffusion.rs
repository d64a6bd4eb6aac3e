//! Density-equalizing diffusion: the deformation loop.
//!
//! Each iteration diffuses the density one backward-Euler step and advects
//! every vertex along the induced flow:
//!
//! 1. assemble the Laplacian pair `(L, D)` on the **current** geometry;
//! 2. solve `(D − δt·L) ρ_n = D ρ_{n−1}` — algebraically the same update as
//!    `(I − δt·D⁻¹L) ρ_n = ρ_{n−1}`, but symmetric positive definite, so the
//!    conjugate-gradient path applies;
//! 3. rebuild per-face gradients of the new density and average them to
//!    vertices with the area-weighted transition;
//! 4. move vertices with velocity `v = −∇ρ/ρ` (Fick's law; see
//!    [`VelocityMode`] for the raw-gradient variant) scaled by `δt`;
//! 5. recompute the per-face density and record the stopping functional
//!    `sd(ρ^F)/mean(ρ^F)`.
//!
//! The loop stops when the functional drops below `epsilon` — checked before
//! the first step too, so an already-uniform density terminates immediately —
//! and finally rescales the map so the land area returns to its starting
//! value. Flipped land faces after a step are reported as a warning; a later
//! step on such a map fails when assembling the Laplacian, which is the
//! documented signal that the input population is too extreme for the mesh.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::PlanarMap;
use crate::ops::{self, DensityField};
use crate::sea::AugmentedMap;
use crate::sparse::{CsrMatrix, SolveOptions};

/// Velocity law used for advection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityMode {
    /// `v = −∇ρ / ρ`: dense regions expand, sparse regions contract.
    Fick,
    /// `v = +∇ρ`: no sign flip and no density normalization. Kept for
    /// comparison studies; not a sensible default.
    RawGradient,
}

/// Loop parameters.
#[derive(Debug, Clone)]
pub struct DiffusionConfig {
    /// Stopping threshold for sd/mean of the per-face density.
    pub epsilon: f64,
    /// Hard cap on iterations; hitting it yields a partial result + warning.
    pub max_iterations: usize,
    pub velocity_mode: VelocityMode,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            epsilon: 1e-3,
            max_iterations: 200,
            velocity_mode: VelocityMode::Fick,
        }
    }
}

/// One snapshot of the diffusion loop.
#[derive(Debug, Clone)]
pub struct DiffusionState {
    pub map: PlanarMap,
    pub density: DensityField,
    pub iteration: usize,
    /// Time step, fixed for the whole run (dimension: length²).
    pub dt: f64,
    /// Stopping-functional value after each completed iteration.
    pub trace: Vec<f64>,
}

/// Robust summary of a per-face density distribution.
///
/// Median and quartiles use linear interpolation between order statistics;
/// `sd_over_mean` uses the population (divide-by-N) standard deviation.
#[derive(Debug, Clone, Serialize)]
pub struct DensityStats {
    pub median: f64,
    pub iqr: f64,
    pub sd_over_mean: f64,
}

/// Outcome report of [`run_to_convergence`].
#[derive(Debug, Clone, Serialize)]
pub struct DiffusionReport {
    pub iterations: usize,
    pub converged: bool,
    pub dt: f64,
    pub trace: Vec<f64>,
    /// Stats of the final normalized land density (1 = perfectly equalized).
    pub land_density: DensityStats,
}

/// `δt = min{min ρ/mean ρ, mean ρ/max ρ} × area`: large enough to make
/// progress on near-uniform input (both ratios → 1 leave `δt = area`, the
/// natural diffusion scale), yet throttled by density contrast so extreme
/// inputs take smaller steps.
pub fn compute_timestep(rho_f: &[f64], total_area: f64) -> f64 {
    assert!(!rho_f.is_empty() && total_area > 0.0);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &r in rho_f {
        min = min.min(r);
        max = max.max(r);
        sum += r;
    }
    let mean = sum / rho_f.len() as f64;
    (min / mean).min(mean / max) * total_area
}

/// Dispersion of the per-face density: population standard deviation divided
/// by the mean. Zero iff all densities are equal; invariant under scaling.
pub fn stopping_functional(rho_f: &[f64]) -> f64 {
    let n = rho_f.len() as f64;
    let mean = rho_f.iter().sum::<f64>() / n;
    let var = rho_f.iter().map(|&r| (r - mean) * (r - mean)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Assembles the backward-Euler system `D − δt·L` in CSR form.
fn backward_euler_matrix(l: &CsrMatrix, d: &[f64], dt: f64) -> Result<CsrMatrix> {
    let n = d.len();
    let mut triplets = Vec::with_capacity(l.nnz() + n);
    for i in 0..n {
        let (cols, values) = l.row(i);
        for (&j, &v) in cols.iter().zip(values) {
            triplets.push((i, j, -dt * v));
        }
        triplets.push((i, i, d[i]));
    }
    CsrMatrix::assemble(n, n, &triplets)
}

/// Advances the state by one diffusion + advection step.
pub fn diffusion_step(state: &DiffusionState, cfg: &DiffusionConfig) -> Result<DiffusionState> {
    let map = &state.map;
    let pair = ops::cotan_laplacian(map)?;
    let system = backward_euler_matrix(&pair.l, &pair.d, state.dt)?;

    // Right-hand side D·ρ; the previous density is the natural warm start
    // (exact for uniform densities, where the step is the identity).
    let rhs: Vec<f64> = state
        .density
        .rho_v
        .iter()
        .zip(&pair.d)
        .map(|(&r, &d)| r * d)
        .collect();
    let (rho_v, _) = crate::sparse::solve_spd(
        &system,
        &rhs,
        Some(&state.density.rho_v),
        SolveOptions::default(),
    )?;

    let min_rho = rho_v.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_rho > 0.0) {
        return Err(Error::NonPositiveDensity {
            iteration: state.iteration + 1,
            min: min_rho,
        });
    }

    // Vertex velocities from face gradients of the fresh density.
    let grad_f = ops::face_gradient(map, &rho_v)?;
    let transitions = ops::transitions(map)?;
    let gx: Vec<f64> = grad_f.iter().map(|g| g.x).collect();
    let gy: Vec<f64> = grad_f.iter().map(|g| g.y).collect();
    let vx = transitions.w_fv.matvec(&gx)?;
    let vy = transitions.w_fv.matvec(&gy)?;

    let mut next_map = map.clone();
    for (v, p) in next_map.coords.iter_mut().enumerate() {
        let (ux, uy) = match cfg.velocity_mode {
            VelocityMode::Fick => (-vx[v] / rho_v[v], -vy[v] / rho_v[v]),
            VelocityMode::RawGradient => (vx[v], vy[v]),
        };
        p.x += state.dt * ux;
        p.y += state.dt * uy;
    }

    // Fresh per-face density on the moved mesh (the vertex-to-face transition
    // is purely combinatorial, so the pre-move matrices still apply).
    let rho_f = transitions.m_vf.matvec(&rho_v)?;

    let flipped: Vec<usize> = (0..next_map.face_count())
        .filter(|&f| next_map.land_mask[f] && next_map.signed_face_area(f) <= 0.0)
        .collect();
    if !flipped.is_empty() {
        log::warn!(
            "iteration {}: {} land face(s) flipped after advection: {:?}{}",
            state.iteration + 1,
            flipped.len(),
            &flipped[..flipped.len().min(16)],
            if flipped.len() > 16 { " …" } else { "" }
        );
    }

    let mut trace = state.trace.clone();
    trace.push(stopping_functional(&rho_f));
    Ok(DiffusionState {
        map: next_map,
        density: DensityField { rho_f, rho_v },
        iteration: state.iteration + 1,
        dt: state.dt,
        trace,
    })
}

/// Linear-interpolation quantile of an already-sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Stats of a value list (used for normalized densities and area ratios).
pub fn density_stats(values: &[f64]) -> DensityStats {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    DensityStats {
        median: quantile(&sorted, 0.5),
        iqr: quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
        sd_over_mean: stopping_functional(values),
    }
}

/// Normalized land density of a (possibly deformed) map: per-face
/// population/area, divided by the land-wide mean density, so a perfectly
/// equalized map reads 1 everywhere. `populations` are per land face.
pub fn normalized_land_density(map: &PlanarMap, populations: &[f64]) -> Vec<f64> {
    let mut total_pop = 0.0;
    let mut total_area = 0.0;
    let mut density = Vec::with_capacity(populations.len());
    let mut land = 0usize;
    for f in 0..map.face_count() {
        if !map.land_mask[f] {
            continue;
        }
        let area = map.signed_face_area(f);
        let pop = populations[land];
        land += 1;
        total_pop += pop;
        total_area += area;
        density.push(pop / area);
    }
    assert_eq!(land, populations.len(), "population count mismatch");
    let mean = total_pop / total_area;
    for d in &mut density {
        *d /= mean;
    }
    density
}

/// Runs the diffusion loop to convergence (or the iteration cap) and rescales
/// the result so the land area matches its pre-diffusion value.
///
/// Returns the final full map (land + sea) and the report. Non-convergence is
/// not an error: the partial result is returned with `converged = false` and
/// a warning, matching the use of the cap as a safety net.
pub fn run_to_convergence(
    aug: &AugmentedMap,
    density: DensityField,
    cfg: &DiffusionConfig,
) -> Result<(PlanarMap, DiffusionReport)> {
    assert!(cfg.epsilon > 0.0);
    let initial_land_area = aug.map.land_area();
    // Per-face populations are conserved through the deformation; they are
    // what the final density statistics must be measured against.
    let populations: Vec<f64> = (0..aug.land_face_count)
        .map(|f| density.rho_f[f] * aug.map.signed_face_area(f))
        .collect();
    let dt = compute_timestep(&density.rho_f, initial_land_area);

    let mut state = DiffusionState {
        map: aug.map.clone(),
        density,
        iteration: 0,
        dt,
        trace: Vec::new(),
    };

    // Check before the first step: an already-uniform density must terminate
    // at iteration zero with the identity map.
    let mut functional = stopping_functional(&state.density.rho_f);
    let mut converged = functional < cfg.epsilon;
    while !converged && state.iteration < cfg.max_iterations {
        state = diffusion_step(&state, cfg)?;
        functional = *state.trace.last().expect("step pushes onto trace");
        converged = functional < cfg.epsilon;
    }
    if !converged {
        log::warn!(
            "diffusion did not converge within {} iterations (sd/mean = {:.3e}, eps = {:.1e}); returning partial result",
            cfg.max_iterations,
            functional,
            cfg.epsilon
        );
    }

    // Rescale so the land area returns to its initial value. Areas scale with
    // the square of lengths, hence the square root.
    let mut map = state.map;
    let final_land_area = map.land_area();
    let scale = (initial_land_area / final_land_area).sqrt();
    for p in &mut map.coords {
        p.x *= scale;
        p.y *= scale;
    }

    let land_density = density_stats(&normalized_land_density(&map, &populations));
    let report = DiffusionReport {
        iterations: state.iteration,
        converged,
        dt,
        trace: state.trace,
        land_density,
    };
    Ok((map, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::ops;
    use crate::sea::{self, SeaConfig};
    use crate::synth;

    fn unit_square_map() -> PlanarMap {
        PlanarMap::new_land(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn timestep_examples() {
        assert!((compute_timestep(&[2.0, 2.0, 2.0], 7.0) - 7.0).abs() < 1e-15);
        // min/mean = 1/2, mean/max = 2/3 → 1/2 · 6 = 3.
        assert!((compute_timestep(&[1.0, 2.0, 3.0], 6.0) - 3.0).abs() < 1e-15);
        // Outlier-dominated: mean ≈ 1.99, mean/max ≈ 0.0199 beats min/mean.
        let mut rho = vec![1.0; 99];
        rho.push(100.0);
        let dt = compute_timestep(&rho, 1.0);
        assert!((dt - (1.99 / 100.0)).abs() < 1e-12);
    }

    #[test]
    fn stopping_functional_examples() {
        assert_eq!(stopping_functional(&[1.0, 1.0, 1.0]), 0.0);
        // Population sd of {1, 3} is 1, mean is 2.
        assert!((stopping_functional(&[1.0, 3.0]) - 0.5).abs() < 1e-15);
        let a = stopping_functional(&[1.0, 2.0, 5.0]);
        let b = stopping_functional(&[3.0, 6.0, 15.0]);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn constant_density_is_a_fixed_point() {
        let map = unit_square_map();
        let transitions = ops::transitions(&map).unwrap();
        let density = DensityField::from_faces(vec![2.5, 2.5], &transitions).unwrap();
        let state = DiffusionState {
            map: map.clone(),
            density,
            iteration: 0,
            dt: 1.0,
            trace: Vec::new(),
        };
        let next = diffusion_step(&state, &DiffusionConfig::default()).unwrap();
        for (a, b) in map.coords.iter().zip(next.map.coords.iter()) {
            assert!((a - b).norm() <= 1e-12);
        }
        for &r in &next.density.rho_v {
            assert!((r - 2.5).abs() <= 1e-12);
        }
        assert!(next.trace[0] <= 1e-12);
    }

    #[test]
    fn step_matches_dense_backward_euler() {
        // Two-triangle unit square, ρ^V = (1, 1, 1, 2); the sparse CG result
        // must match an LU solve of the same 4×4 system.
        let map = unit_square_map();
        let rho_v = vec![1.0, 1.0, 1.0, 2.0];
        let pair = ops::cotan_laplacian(&map).unwrap();
        let dt = 0.3;

        let n = 4;
        let mut dense = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            let (cols, values) = pair.l.row(i);
            for (&j, &v) in cols.iter().zip(values) {
                dense[(i, j)] -= dt * v;
            }
            dense[(i, i)] += pair.d[i];
        }
        let rhs =
            nalgebra::DVector::from_iterator(n, rho_v.iter().zip(&pair.d).map(|(&r, &d)| r * d));
        let expected = dense.lu().solve(&rhs).unwrap();

        let transitions = ops::transitions(&map).unwrap();
        let rho_f = transitions.m_vf.matvec(&rho_v).unwrap();
        let state = DiffusionState {
            map,
            density: DensityField { rho_f, rho_v },
            iteration: 0,
            dt,
            trace: Vec::new(),
        };
        let next = diffusion_step(&state, &DiffusionConfig::default()).unwrap();
        for (got, want) in next.density.rho_v.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_density_terminates_immediately() {
        let mesh = synth::square_grid(6, 2.0);
        let map = mesh.project_planar().unwrap();
        let aug = sea::build_sea(&map, &SeaConfig::default()).unwrap();
        let density = sea::extend_density(&aug, &vec![3.0; aug.land_face_count], false).unwrap();
        let (final_map, report) =
            run_to_convergence(&aug, density, &DiffusionConfig::default()).unwrap();
        assert_eq!(report.iterations, 0);
        assert!(report.converged);
        assert!(report.trace.is_empty());
        let movement = aug
            .map
            .coords
            .iter()
            .zip(final_map.coords.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(movement <= 1e-12);
        assert!((report.land_density.median - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quantile_conventions() {
        let stats = density_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert!((stats.median - 2.5).abs() < 1e-15);
        // Quartiles by linear interpolation: q25 = 1.75, q75 = 3.25.
        assert!((stats.iqr - 1.5).abs() < 1e-15);
    }

    #[test]
    fn linear_density_flattens() {
        // A single step on a linear density must strictly reduce dispersion.
        let mesh = synth::square_grid(8, 2.0);
        let map = mesh.project_planar().unwrap();
        let transitions = ops::transitions(&map).unwrap();
        let rho_f: Vec<f64> = (0..map.face_count())
            .map(|f| 1.0 + 0.5 * map.face_centroid(f).x)
            .collect();
        let density = DensityField::from_faces(rho_f, &transitions).unwrap();
        let before = stopping_functional(&density.rho_f);
        let dt = compute_timestep(&density.rho_f, map.total_area());
        let state = DiffusionState {
            map,
            density,
            iteration: 0,
            dt,
            trace: Vec::new(),
        };
        let next = diffusion_step(&state, &DiffusionConfig::default()).unwrap();
        assert!(next.trace[0] < before);
    }
}
