//! Certified perturbation gauges for oracle objectives.
//!
//! Two objectives `F` (target) and `F̃` (surrogate) are compared through the
//! localized vertical epigraphic gauge
//!
//! ```text
//! G_{R,M}(F, F̃) = sup_{‖x‖ ≤ R, |t| ≤ M} |(F(x) - t)_+ - (F̃(x) - t)_+|
//! ```
//!
//! A bound `G_{R,M} ≤ δ` obtained from a certificate ([`certificates`]) gives
//! `|F(x) - F̃(x)| ≤ δ` wherever both values lie in `[-M, M]`, and under
//! quadratic growth of `F` with modulus `μ`, `dist(x̃★, X★) ≤ 2√(δ/μ)`
//! ([`stability`]). [`oracle`] holds brute-force lattice scans used as
//! independent ground truth, and [`constructions`] the explicit pairs that
//! show where these bounds are tight or cannot be improved.

pub mod certificates;
pub mod constructions;
pub mod epi;
pub mod error;
pub mod func;
pub mod oracle;
pub mod stability;

pub use certificates::{
    aggregate_cover, envelope_width_bound, gauge_from_tolerance_field, validate_bracketing,
    AggregatedEnvelope, BracketingReport, Cover, EnvelopeCert, LocalCert, ToleranceField,
};
pub use constructions::{
    build_impossibility_pair, build_sharpness_pair, build_strictness_pair, sharpness_sweep,
    BumpSite, ImpossibilityPair, SharpnessFamily, StrictnessPair, SweepRow, SweepTable,
};
pub use epi::{
    discrepancy_profile, gauge_from_value_bound, pointwise_discrepancy, pos_part,
    vertical_distance, Cylinder, GaugeBound, Point, Provenance, TAU,
};
pub use error::{Error, Result};
pub use func::{Func, FuncExpr};
pub use oracle::{
    dist_to_set, grid_argmin, grid_gauge, grid_sup_abs_diff, ArgminSet, Grid, GridArgmin,
    LevelGrid,
};
pub use stability::{
    displacement_bound, falsify_quadratic_growth, suboptimality_gap, value_gap_from_gauge,
    DisplacementCert, GrowthCert, GrowthReport, MinimizerSource, WindowCheck, WindowFailure,
};
