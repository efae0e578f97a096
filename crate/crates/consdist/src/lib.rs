//! Deterministic sandbox for studying multi-face ("janus") artifacts in
//! score distillation, together with the two mechanisms that suppress them:
//! prompt-space view injection and a similarity partial-order loss.
//!
//! The crate is organized bottom-up:
//!
//! * [`embedding`]: prompt-embedding algebra (projection, view residual
//!   extraction, prior elimination, azimuth-scheduled injection).
//! * [`geometry`]: azimuth normalization, front/rear regions, the injection
//!   weight schedule, mirrored references and expected view orderings.
//! * [`loss`]: cosine similarity, the ranked partial-order hinge loss with
//!   exact analytic gradients, and a finite-difference checker.
//! * [`toyworld`]: the azimuth-binned object, the view-biased teacher, and
//!   the measurement ops (janus metric, similarity profile).
//! * [`distill`]: prompt decomposition, the view-compatibility diagnostic,
//!   perpendicular negative guidance, and the distillation loop.
//! * [`config`] / [`output`]: run configuration parsing, CSV emission, and
//!   the six-cell ablation grid backing the `consdist` binary.
//!
//! Every entry point is deterministic for a fixed configuration and seed;
//! repeated runs produce byte-identical output files.

mod error;
mod vecmath;

pub mod config;
pub mod distill;
pub mod embedding;
pub mod geometry;
pub mod loss;
pub mod output;
pub mod toyworld;

pub use config::{apply_seed_override, parse_config, parse_config_str, ConfigError};
pub use distill::{
    compatibility, decompose_prompt, distill_step, perp_neg_combine, run_distillation,
    CompatibilityM, Conditioning, Manifest, Mode, RunConfig, RunResult, ScoreBundle, Snapshot,
    TracePoint,
};
pub use embedding::{
    eliminate_prior, extract_view_residual, inject_2d_back, inject_view, project, Embedding,
    InjectionWeights, ResidualSet, ViewLabel, ViewResidual,
};
pub use error::Error;
pub use geometry::{
    azimuthal_distance, classify_region, injection_weights, mirror_reference, expected_order,
    sample_cameras, CameraPose, OrderingPlan, RankedView, Region,
};
pub use loss::{
    cosine_sim, finite_difference_gradient, partial_order_loss, total_loss, FeatureVector,
    LossConfig, LossReport,
};
pub use output::{ablate, emit, emit_profile, run, OutputError};
pub use toyworld::{
    janus_metric, render, similarity_profile, teacher_probability, teacher_score, BiasedTeacher,
    RenderedFeature, ToyObject,
};

/// Norms at or below this are treated as zero throughout the crate: such a
/// direction cannot be projected onto, normalized, or compared by cosine.
pub const NORM_CUTOFF: f64 = 1e-12;

/// Relative tolerance for orthogonality checks (residual vs. base prompt,
/// subject vs. view bias). Scaled by the norms of both operands.
pub const ORTHO_TOL: f64 = 1e-9;
