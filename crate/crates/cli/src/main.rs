//! `deq` — density-equalizing flattening of disk-topology triangle meshes.
//!
//! Subcommands:
//! - `flatten`: full pipeline driven by a prescribed per-face population
//!   (uniform when no CSV is given).
//! - `areapreserve`: population = original 3D face areas, yielding an
//!   area-preserving parameterization.
//! - `remesh`: run the pipeline, then resample the planar image on a hex
//!   lattice and lift the samples back to 3D.
//! - `verify`: topology/quality report for an input mesh.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 finished without
//! converging (artifacts are still written).

mod popcsv;
mod report;
mod svg;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deq_core::apps::{self, InitKind, PopulationSpec, RemeshSpec, RunOptions, RunOutcome};
use deq_core::diffusion::{DiffusionConfig, VelocityMode};
use deq_core::sea::SeaConfig;
use deq_core::{io, Result, TriMesh};

use report::{FlagsEcho, RunReport};
use svg::SvgOptions;

#[derive(Debug, Parser)]
#[command(
    name = "deq",
    version,
    about = "Density-equalizing maps for open triangle meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flatten a mesh so the prescribed population spreads evenly.
    Flatten(RunArgs),
    /// Flatten a mesh so every face keeps its original area.
    Areapreserve(RunArgs),
    /// Flatten, resample on a hex lattice, and lift back to 3D.
    Remesh(RemeshArgs),
    /// Check that a mesh is a clean disk-topology patch.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Input mesh (.off or .obj).
    #[arg(long)]
    input: PathBuf,

    /// Per-face population CSV: `face_index,population`, 0-based.
    #[arg(long, conflicts_with = "regions")]
    population: Option<PathBuf>,

    /// Per-face region label CSV: `face_index,region_id`.
    #[arg(long, requires = "region_rules")]
    regions: Option<PathBuf>,

    /// Region multiplier CSV: `region_id,multiplier`; scales base face areas.
    #[arg(long, requires = "regions")]
    region_rules: Option<PathBuf>,

    /// Initial flattening (default: tutte for flatten/remesh, authalic for
    /// areapreserve).
    #[arg(long, value_enum)]
    init: Option<InitArg>,

    /// Fall back to Tutte when the authalic initializer flips faces.
    #[arg(long)]
    strict_init: bool,

    /// Stop when sd/mean of the density drops below this.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,

    /// Iteration cap; hitting it exits with code 2.
    #[arg(long, default_value_t = 200)]
    max_iter: usize,

    /// Tracer velocity law.
    #[arg(long, value_enum, default_value_t = VelocityArg::Fick)]
    velocity: VelocityArg,

    /// Land radius after normalization, in (0, 1).
    #[arg(long, default_value_t = 0.7)]
    shrink: f64,

    /// Sea truncation radius in normalized units, > 1.
    #[arg(long, default_value_t = 5.0)]
    truncate_radius: f64,

    /// Gap lattice spacing policy.
    #[arg(long, default_value = "auto", value_parser = ["auto"])]
    gap_spacing: String,

    /// Seed extended sea faces with the area-weighted land mean instead of
    /// the plain mean.
    #[arg(long)]
    sea_density_weighted: bool,

    /// Seed for the jitter-and-retry fallback in the gap triangulation; the
    /// pipeline is otherwise deterministic.
    #[arg(long)]
    seed: Option<u64>,

    /// Write the flattened land mesh here (.obj or .off).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Render the final map (land colored by the field, sea flat) to SVG.
    #[arg(long)]
    svg: Option<PathBuf>,

    /// Write the JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Dump the final per-face land density as CSV.
    #[arg(long)]
    dump_density: Option<PathBuf>,

    /// Draw faces without outlines.
    #[arg(long)]
    no_stroke: bool,
}

#[derive(Debug, Args)]
struct RemeshArgs {
    #[command(flatten)]
    run: RunArgs,

    /// Planar sample spacing (default: mean land edge length of the map).
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Input mesh (.off or .obj).
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Tutte,
    Authalic,
}

impl From<InitArg> for InitKind {
    fn from(arg: InitArg) -> Self {
        match arg {
            InitArg::Tutte => InitKind::Tutte,
            InitArg::Authalic => InitKind::Authalic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VelocityArg {
    Fick,
    RawGradient,
}

impl From<VelocityArg> for VelocityMode {
    fn from(arg: VelocityArg) -> Self {
        match arg {
            VelocityArg::Fick => VelocityMode::Fick,
            VelocityArg::RawGradient => VelocityMode::RawGradient,
        }
    }
}

impl VelocityArg {
    fn as_str(self) -> &'static str {
        match self {
            VelocityArg::Fick => "fick",
            VelocityArg::RawGradient => "raw-gradient",
        }
    }
}

/// Which pipeline a RunArgs bundle drives; decides the default initializer
/// and what the SVG colors mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Flatten,
    AreaPreserve,
    Remesh,
}

impl Mode {
    fn default_init(self) -> InitKind {
        match self {
            Mode::AreaPreserve => InitKind::Authalic,
            Mode::Flatten | Mode::Remesh => InitKind::Tutte,
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Flatten(args) => run_pipeline(args, Mode::Flatten),
        Command::Areapreserve(args) => run_pipeline(args, Mode::AreaPreserve),
        Command::Remesh(args) => run_remesh(args),
        Command::Verify(args) => run_verify(args),
    }
}

fn run_pipeline(args: RunArgs, mode: Mode) -> Result<i32> {
    if mode == Mode::AreaPreserve {
        for (flag, value) in [
            ("--population", &args.population),
            ("--regions", &args.regions),
            ("--region-rules", &args.region_rules),
        ] {
            if value.is_some() {
                eprintln!("error: {flag} cannot be combined with areapreserve; the population is the original face areas");
                return Ok(1);
            }
        }
    }

    let start = Instant::now();
    let mesh = io::load_mesh(&args.input)?;
    let opts = run_options(&args, mode);
    let outcome = match mode {
        Mode::AreaPreserve => apps::area_preserving_parameterize(&mesh, &opts)?,
        Mode::Flatten | Mode::Remesh => {
            let spec = population_spec(&args, &mesh)?;
            apps::density_equalize(&mesh, &spec, &opts)?
        }
    };
    let wall = start.elapsed().as_secs_f64();

    if let Some(out) = &args.out {
        io::save_map(&outcome.land, out)?;
    }
    write_common_artifacts(&args, &mesh, &outcome, wall, mode)?;
    Ok(exit_code(&outcome))
}

fn run_remesh(args: RemeshArgs) -> Result<i32> {
    let start = Instant::now();
    let mesh = io::load_mesh(&args.run.input)?;
    let opts = run_options(&args.run, Mode::Remesh);
    let spec = population_spec(&args.run, &mesh)?;
    let outcome = apps::density_equalize(&mesh, &spec, &opts)?;
    let remeshed = apps::remesh_surface(
        &mesh,
        &outcome.land,
        &RemeshSpec {
            spacing: args.spacing,
        },
    )?;
    let wall = start.elapsed().as_secs_f64();

    if let Some(out) = &args.run.out {
        io::save_mesh(&remeshed, out)?;
    }
    write_common_artifacts(&args.run, &mesh, &outcome, wall, Mode::Remesh)?;
    Ok(exit_code(&outcome))
}

fn run_verify(args: VerifyArgs) -> Result<i32> {
    let mesh = io::load_mesh(&args.input)?;
    let diag = mesh.diagnostics();
    println!("input: {}", args.input.display());
    println!("vertices: {}", diag.vertex_count);
    println!("faces: {}", diag.face_count);
    println!("edges: {}", diag.edge_count);
    println!("euler characteristic: {}", diag.euler_characteristic);
    println!("boundary loops: {}", diag.boundary_loop_count);
    println!("connected components: {}", diag.connected_components);
    println!("non-manifold edges: {}", diag.nonmanifold_edge_count);
    println!("non-manifold vertices: {}", diag.nonmanifold_vertex_count);
    println!("min face area: {:.3e}", diag.min_face_area);
    match diag.require_disk() {
        Ok(()) => {
            println!("disk topology: ok");
            Ok(0)
        }
        Err(e) => {
            println!("disk topology: FAILED ({e})");
            Ok(1)
        }
    }
}

/// Exit 0 on a converged run, 2 when the iteration cap was hit; artifacts
/// are written either way so a partial result can be inspected.
fn exit_code(outcome: &RunOutcome) -> i32 {
    if outcome.report.converged {
        0
    } else {
        2
    }
}

fn population_spec(args: &RunArgs, mesh: &TriMesh) -> Result<PopulationSpec> {
    if let Some(path) = &args.population {
        let values = popcsv::read_population_csv(path, mesh.face_count())?;
        return Ok(PopulationSpec::PerFace(values));
    }
    if let Some(path) = &args.regions {
        // clap guarantees region_rules is present alongside regions.
        let rules_path = args
            .region_rules
            .as_ref()
            .expect("clap enforces --region-rules");
        let labels = popcsv::read_region_labels(path, mesh.face_count())?;
        let rules = popcsv::read_region_rules(rules_path)?;
        return Ok(PopulationSpec::RegionScaled { labels, rules });
    }
    Ok(PopulationSpec::Uniform)
}

fn run_options(args: &RunArgs, mode: Mode) -> RunOptions {
    let mut sea = SeaConfig::default();
    sea.shrink_radius = args.shrink;
    sea.truncate_radius = args.truncate_radius;
    if let Some(seed) = args.seed {
        sea.jitter_seed = seed;
    }
    RunOptions {
        init: args
            .init
            .map(InitKind::from)
            .unwrap_or_else(|| mode.default_init()),
        strict_init: args.strict_init,
        sea_density_weighted: args.sea_density_weighted,
        sea,
        diffusion: DiffusionConfig {
            epsilon: args.eps,
            max_iterations: args.max_iter,
            velocity_mode: args.velocity.into(),
        },
    }
}

fn write_common_artifacts(
    args: &RunArgs,
    mesh: &TriMesh,
    outcome: &RunOutcome,
    wall_time_seconds: f64,
    mode: Mode,
) -> Result<()> {
    if let Some(path) = &args.svg {
        let (values, label) = match mode {
            Mode::AreaPreserve => (area_ratios(mesh, outcome), "area ratio"),
            Mode::Flatten | Mode::Remesh => (outcome.land_density.clone(), "density"),
        };
        let opts = SvgOptions {
            stroke: !args.no_stroke,
            field_label: label.to_string(),
        };
        svg::write_svg(&outcome.full, &values, &opts, path)?;
    }
    if let Some(path) = &args.dump_density {
        popcsv::write_density_csv(path, &outcome.land_density)?;
    }
    if let Some(path) = &args.report {
        let report = RunReport::new(
            &args.input,
            mesh.vertex_count(),
            mesh.face_count(),
            outcome,
            wall_time_seconds,
            flags_echo(args, mode),
        );
        report.write(path)?;
    }
    Ok(())
}

/// Per-face (original 3D area) / (final planar area), the field an
/// area-preserving run is judged by.
fn area_ratios(mesh: &TriMesh, outcome: &RunOutcome) -> Vec<f64> {
    (0..outcome.land.face_count())
        .map(|f| mesh.face_area(f) / outcome.land.signed_face_area(f))
        .collect()
}

fn flags_echo(args: &RunArgs, mode: Mode) -> FlagsEcho {
    let display = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    FlagsEcho {
        init: args
            .init
            .map(InitKind::from)
            .unwrap_or_else(|| mode.default_init()),
        strict_init: args.strict_init,
        eps: args.eps,
        max_iter: args.max_iter,
        velocity: args.velocity.as_str().to_string(),
        shrink: args.shrink,
        truncate_radius: args.truncate_radius,
        gap_spacing: args.gap_spacing.clone(),
        sea_density_weighted: args.sea_density_weighted,
        seed: args.seed,
        population: display(&args.population),
        regions: display(&args.regions),
        region_rules: display(&args.region_rules),
    }
}
