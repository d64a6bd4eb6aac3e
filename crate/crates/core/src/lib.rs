//! Density-equalizing flattening maps for simply-connected open triangle meshes.
//!
//! The pipeline turns a disk-topology surface mesh plus a per-face population
//! into a flat map whose face areas are proportional to population:
//!
//! 1. flatten the boundary curve to a convex planar polygon ([`boundary`]),
//! 2. flatten the interior onto it ([`flatten`]),
//! 3. surround the map with a triangulated "sea" so the boundary can move
//!    freely ([`sea`]),
//! 4. run a diffusion-based equalization loop until the density field is
//!    uniform ([`diffusion`]).
//!
//! [`apps`] wires the stages together and adds population handling and
//! surface remeshing on top; [`mesh`], [`sparse`] and [`ops`] hold the mesh
//! model, sparse linear algebra and discrete differential operators the
//! stages are built from.

pub mod apps;
pub mod boundary;
pub mod diffusion;
mod error;
pub mod flatten;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod ops;
pub mod sea;
pub mod sparse;
pub mod synth;
mod topology;

pub use error::{Error, Result};
pub use mesh::{MeshDiagnostics, PlanarMap, TriMesh};
