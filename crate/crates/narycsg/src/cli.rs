//! Command-line front end.
//!
//! Exit status: 0 when the result has no flagged errors, 2 when it was written
//! but some degeneracy or failure was counted, 1 when the inputs were rejected.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use narycsg_core::boolfn::{parse_expr, BoolFn};
use narycsg_core::jitter::{JitterConfig, Magnitude, DEFAULT_RELATIVE_TRANSLATION};
use narycsg_core::kdtree::ExplorationConfig;
use narycsg_core::pipeline::{PipelineConfig, VertexSearch};
use narycsg_core::reconstruct::Tesselation;

use crate::grouped::{run_grouped, ALL_AT_ONCE};
use crate::io::{read_mesh, write_mesh, write_stats};
use crate::parallel::{evaluate_parallel, TaskBudget};
use crate::topology_all;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_DEGRADED: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TesselateArg {
    None,
    Convex,
    Tri,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum JitterArg {
    None,
    Translate,
    Rotate,
    Both,
}

fn parse_grouping(s: &str) -> Result<usize, String> {
    if s == "inf" {
        return Ok(ALL_AT_ONCE);
    }
    match s.parse::<usize>() {
        Ok(g) if g >= 2 => Ok(g),
        _ => Err("expected an integer of at least 2, or 'inf'".into()),
    }
}

/// Boolean operations on closed polyhedral meshes.
///
/// Inputs are numbered in the order given; the expression refers to them as
/// P0, P1, ... and may use | & - ^ ~, union(..), inter(..) and min<k>(..),
/// with ranges such as P0..P9.
#[derive(Debug, Parser)]
#[command(name = "narycsg", version)]
pub struct Args {
    /// Input mesh (.off or .obj); repeat for each input.
    #[arg(long = "in", value_name = "FILE", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_name = "STRING")]
    pub expr: String,
    /// Result mesh (.off or .obj).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "convex")]
    pub tesselate: TesselateArg,
    #[arg(long, value_enum, default_value = "both")]
    pub jitter: JitterArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Test every facet pair and triple instead of exploring a KD subdivision.
    #[arg(long)]
    pub brute: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value_t = ExplorationConfig::default().fmax)]
    pub fmax: usize,
    #[arg(long, default_value_t = ExplorationConfig::default().seq_threshold)]
    pub seq_threshold: usize,
    /// Evaluate in groups of at least G meshes ('inf' for one call).
    #[arg(long, value_name = "G", value_parser = parse_grouping)]
    pub grouping: Option<usize>,
}

impl Args {
    pub fn pipeline_config(&self) -> PipelineConfig {
        let jitter = match self.jitter {
            JitterArg::None => JitterConfig::none(),
            JitterArg::Translate => {
                JitterConfig::translation_only(Magnitude::Relative(DEFAULT_RELATIVE_TRANSLATION), self.seed)
            }
            JitterArg::Rotate => JitterConfig::rotation_only(std::f64::consts::PI, self.seed),
            JitterArg::Both => JitterConfig::new(self.seed),
        };
        let tesselation = match self.tesselate {
            TesselateArg::None => Tesselation::None,
            TesselateArg::Convex => Tesselation::Convex,
            TesselateArg::Tri => Tesselation::Triangles,
        };
        PipelineConfig {
            jitter,
            exploration: ExplorationConfig { fmax: self.fmax, seq_threshold: self.seq_threshold, ..Default::default() },
            tesselation,
            search: if self.brute { VertexSearch::Brute } else { VertexSearch::Kd },
            ..Default::default()
        }
    }

    pub fn budget(&self, cfg: &PipelineConfig) -> TaskBudget {
        if self.threads == 0 {
            TaskBudget::auto(&cfg.exploration)
        } else {
            TaskBudget::new(self.threads, &cfg.exploration)
        }
    }
}

/// Outcome of a successful run.
pub struct Report {
    pub errors: u64,
    pub facets: usize,
    pub vertices: usize,
}

pub fn execute(args: &Args) -> Result<Report, String> {
    let f: BoolFn = parse_expr(&args.expr).map_err(|e| format!("expression: {e}"))?;
    if f.arity() > args.inputs.len() {
        return Err(format!("expression uses P{} but only {} inputs were given", f.arity() - 1, args.inputs.len()));
    }
    let mut raws = Vec::with_capacity(args.inputs.len());
    for p in &args.inputs {
        raws.push(read_mesh(p).map_err(|e| format!("{}: {e}", p.display()))?);
    }
    let (mut meshes, t_topology) = topology_all(&raws).map_err(|e| format!("input: {e}"))?;
    // Inputs the expression never mentions do not take part.
    meshes.truncate(f.arity());

    let cfg = args.pipeline_config();
    if !cfg.exploration.is_valid() {
        return Err("--fmax must be between 1 and --seq-threshold".into());
    }
    let budget = args.budget(&cfg);
    let (mesh, mut stats, errors) = match args.grouping {
        None => {
            let e = evaluate_parallel(&meshes, &f, &cfg, &budget).map_err(|e| e.to_string())?;
            (e.mesh, e.stats, e.counters.errors())
        }
        Some(g) => {
            let tree = f.to_csg_tree().ok_or("--grouping needs an expression without constants or bare negations")?;
            let r = run_grouped(&tree, &meshes, g, &cfg, &budget).map_err(|e| e.to_string())?;
            let mut stats = r.last.stats;
            stats.errors = r.counters.errors();
            (r.mesh, stats, r.counters.errors())
        }
    };
    stats.t_topology_s = t_topology;

    if let Some(p) = &args.out {
        write_mesh(p, &mesh.to_raw()).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    if let Some(p) = &args.stats {
        std::fs::write(p, write_stats(&stats)).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(Report { errors, facets: mesh.facets.len(), vertices: mesh.vertices.len() })
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&args) {
        Ok(r) => {
            eprintln!("{} facets, {} vertices, {} errors", r.facets, r.vertices, r.errors);
            if r.errors == 0 {
                EXIT_OK
            } else {
                EXIT_DEGRADED
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_values() {
        assert_eq!(parse_grouping("inf"), Ok(ALL_AT_ONCE));
        assert_eq!(parse_grouping("3"), Ok(3));
        assert!(parse_grouping("1").is_err());
    }

    #[test]
    fn missing_expr_is_invalid() {
        assert_eq!(run(["narycsg", "--in", "a.off"]), EXIT_INVALID);
    }

    #[test]
    fn help_is_not_an_error() {
        assert_eq!(run(["narycsg", "--help"]), EXIT_OK);
    }
}
