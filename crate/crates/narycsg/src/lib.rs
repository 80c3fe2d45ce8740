//! File formats, multi-threaded evaluation and experiment drivers for
//! `narycsg-core`.

pub mod bench;
pub mod cli;
pub mod grouped;
pub mod io;
pub mod parallel;

pub use narycsg_core as core;

use narycsg_core::mesh::{topology_pass, MeshError};
use narycsg_core::{Mesh, RawMesh};

/// Build every input's adjacency; returns the meshes and the elapsed seconds.
pub fn topology_all(raws: &[RawMesh]) -> Result<(Vec<Mesh>, f64), MeshError> {
    let t = std::time::Instant::now();
    let meshes = raws.iter().map(topology_pass).collect::<Result<Vec<_>, _>>()?;
    Ok((meshes, t.elapsed().as_secs_f64()))
}
