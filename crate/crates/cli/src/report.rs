//! Machine-readable run reports.
//!
//! One JSON document per run, with a fixed field order (struct declaration
//! order) and a schema version so downstream tooling can detect changes.
//! Apart from `wall_time_seconds`, identical inputs and flags produce
//! byte-identical documents.

use std::path::Path;

use deq_core::apps::{InitKind, RunOutcome};
use deq_core::diffusion::DensityStats;
use deq_core::{Error, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything a run wants to tell the world, JSON-shaped.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    /// Input mesh path as given on the command line.
    pub input: String,
    pub vertex_count: usize,
    pub face_count: usize,
    /// Flattening scheme actually used (after any strict-init fallback).
    pub init: InitKind,
    /// Flipped faces in the initial map (0 for Tutte).
    pub init_flips: usize,
    pub converged: bool,
    pub iterations: usize,
    pub dt: f64,
    pub wall_time_seconds: f64,
    /// Stopping functional (sd/mean over the full domain) after each step.
    pub trace: Vec<f64>,
    /// Statistics of the normalized final land density.
    pub land_density: DensityStats,
    /// Per-face original-over-final area ratio statistics (area-preserving
    /// runs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area_ratio: Option<DensityStats>,
    /// Echo of the flags that shaped the run.
    pub flags: FlagsEcho,
}

/// Resolved flag values, echoed verbatim into the report.
#[derive(Debug, Clone, Serialize)]
pub struct FlagsEcho {
    pub init: InitKind,
    pub strict_init: bool,
    pub eps: f64,
    pub max_iter: usize,
    pub velocity: String,
    pub shrink: f64,
    pub truncate_radius: f64,
    pub gap_spacing: String,
    pub sea_density_weighted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regions: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_rules: Option<String>,
}

impl RunReport {
    pub fn new(
        input: &Path,
        vertex_count: usize,
        face_count: usize,
        outcome: &RunOutcome,
        wall_time_seconds: f64,
        flags: FlagsEcho,
    ) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            input: input.display().to_string(),
            vertex_count,
            face_count,
            init: outcome.init_used,
            init_flips: outcome.init_flips,
            converged: outcome.report.converged,
            iterations: outcome.report.iterations,
            dt: outcome.report.dt,
            wall_time_seconds,
            trace: outcome.report.trace.clone(),
            land_density: outcome.report.land_density.clone(),
            area_ratio: outcome.area_ratio.clone(),
            flags,
        }
    }

    /// Serializes to pretty JSON, refusing non-finite numbers (which would
    /// otherwise serialize as nulls and poison downstream readers).
    pub fn to_json(&self) -> Result<String> {
        let finite = self.dt.is_finite()
            && self.wall_time_seconds.is_finite()
            && self.trace.iter().all(|t| t.is_finite())
            && [
                self.land_density.median,
                self.land_density.iqr,
                self.land_density.sd_over_mean,
            ]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFiniteReport);
        }
        let mut doc = serde_json::to_string_pretty(self).expect("report serializes");
        doc.push('\n');
        Ok(doc)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}
