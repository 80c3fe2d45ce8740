//! Counters gathered during a run, and the summary record written to stats files.

use crate::math::log2;

/// Per-task counters; merged by addition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Degenerate facet/facet or segment/facet configurations (candidate skipped).
    pub degeneracies: u64,
    /// Points whose inside/outside bit could not be decided (candidate skipped).
    pub undecided: u64,
    /// Side resolutions that fell back to a global ray.
    pub orientation_fallbacks: u64,
    /// Side resolutions where even the fallback failed.
    pub orientation_failures: u64,
    /// Fragments touching a split plane without crossing it.
    pub split_touches: u64,
    /// Reverted vertices whose defining system was singular.
    pub singular: u64,
    pub incomplete_loops: u64,
    pub tesselation_failures: u64,
    pub duplicate_vertices: u64,

    /// Polygons cut by split planes (the `s` statistic).
    pub splits: u64,
    pub cells: u64,
    pub pruned: u64,
    pub single_mesh_cells: u64,
    pub leaves: u64,
    /// Leaves forced by the depth or size guard.
    pub depth_limited: u64,
    pub pair_tests: u64,
    pub intersecting_pairs: u64,
    pub triple_tests: u64,
}

impl Counters {
    pub fn merge(&mut self, o: &Counters) {
        self.degeneracies += o.degeneracies;
        self.undecided += o.undecided;
        self.orientation_fallbacks += o.orientation_fallbacks;
        self.orientation_failures += o.orientation_failures;
        self.split_touches += o.split_touches;
        self.singular += o.singular;
        self.incomplete_loops += o.incomplete_loops;
        self.tesselation_failures += o.tesselation_failures;
        self.duplicate_vertices += o.duplicate_vertices;
        self.splits += o.splits;
        self.cells += o.cells;
        self.pruned += o.pruned;
        self.single_mesh_cells += o.single_mesh_cells;
        self.leaves += o.leaves;
        self.depth_limited += o.depth_limited;
        self.pair_tests += o.pair_tests;
        self.intersecting_pairs += o.intersecting_pairs;
        self.triple_tests += o.triple_tests;
    }

    /// Flags that may have changed the output.
    pub fn errors(&self) -> u64 {
        self.degeneracies
            + self.undecided
            + self.orientation_failures
            + self.split_touches
            + self.singular
            + self.incomplete_loops
            + self.tesselation_failures
            + self.duplicate_vertices
    }

    /// The counters that must not depend on scheduling.
    pub fn structural(&self) -> Counters {
        self.clone()
    }
}

/// Summary of one evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatsRecord {
    /// Input facets.
    pub m: u64,
    /// Polygons split during exploration.
    pub s: u64,
    /// Output vertices of order 2 and 3.
    pub h: u64,
    pub t_topology_s: f64,
    pub t_vertices_s: f64,
    pub t_facets_s: f64,
    pub errors: u64,
}

impl StatsRecord {
    /// `(m + s) log2 h`, absent when `h` is zero.
    pub fn scaling(&self) -> Option<f64> {
        if self.h == 0 {
            None
        } else {
            Some((self.m + self.s) as f64 * log2(self.h as f64))
        }
    }
}
