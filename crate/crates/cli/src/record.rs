//! Certificate records emitted by `certify`.
//!
//! Serialized as pretty-printed JSON. Field order is the declaration order
//! below and never changes within a schema version.

use epigauge::stability::ChainReplay;
use epigauge::{ArgminSet, Cylinder, GaugeBound, MinimizerSource, Point, WindowCheck};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Key of the only field allowed to differ between two runs on the same
/// problem.
pub const TIMESTAMP_FIELD: &str = "generated_at";

#[derive(Debug, Clone, Serialize)]
pub struct CertificateRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub problem_name: Option<String>,
    pub problem_hash: String,
    pub generated_at: String,
    pub grid: GridRecord,
    pub cylinder: Cylinder,
    /// The bound used downstream: the smallest certified candidate, or the
    /// smallest candidate when none is certified.
    pub gauge: GaugeBound,
    pub gauge_candidates: Vec<GaugeBound>,
    pub oracle: OracleRecord,
    pub bracketing: Vec<BracketRecord>,
    pub growth: GrowthRecord,
    pub theorem_checks: Vec<TheoremCheck>,
    pub chain: ChainReplay,
    pub displacement: DisplacementRecord,
    pub window_checks: Vec<WindowCheck>,
    pub failures: Vec<String>,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRecord {
    pub dimension: usize,
    pub step: f64,
    pub level_step: f64,
    pub base_points: usize,
    pub level_points: usize,
}

/// Lattice maxima; lower bounds of the true suprema, never certificates.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRecord {
    pub grid_gauge: f64,
    pub grid_sup_abs_diff: f64,
    pub dist_xtilde_to_argmin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketRecord {
    pub function: String,
    pub checked: usize,
    pub failures: usize,
    pub first_failure: Option<Point>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRecord {
    pub mu: f64,
    pub radius: f64,
    pub inf_value: f64,
    pub argmin_set: ArgminSet,
    pub minimizer_mismatches: Vec<(Point, f64)>,
    pub falsification_header: String,
    pub falsification_checked: usize,
    pub falsification_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremCheck {
    pub at: String,
    pub point: Point,
    pub f_value: f64,
    pub g_value: f64,
    pub abs_diff: f64,
    /// `δ` when the window holds.
    pub certified_bound: Option<f64>,
    pub window_failure: Option<String>,
    /// `|F - F̃| ≤ δ + τ`, or vacuous outside the window.
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DisplacementRecord {
    pub bound: f64,
    pub slack: f64,
    pub bound_with_slack: f64,
    pub source: MinimizerSource,
    pub xstar: Point,
    pub xtilde: Point,
    pub oracle_dist: f64,
    pub within_bound: bool,
    pub detail: String,
}

impl CertificateRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }
}

/// Drops the timestamp line so two records can be compared.
pub fn strip_timestamp(json: &str) -> String {
    let key = format!("\"{TIMESTAMP_FIELD}\"");
    json.lines()
        .filter(|l| !l.trim_start().starts_with(&key))
        .collect::<Vec<_>>()
        .join("\n")
}
