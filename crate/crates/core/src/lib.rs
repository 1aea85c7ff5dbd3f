//! Reproducible image degradation: a cause/effect taxonomy over three operator
//! families, seeded operators with five native severity levels, full-reference
//! strength metrics, metric-space severity calibration and benchmark generation.

pub mod benchgen;
pub mod calibration;
pub mod degradations;
pub mod error;
pub mod image;
pub mod metrics;
pub mod ops;
pub mod rng;
pub mod synth;
pub mod taxonomy;

pub use benchgen::{
    execute_plan, plan_cartesian, plan_chain_factorial, plan_random_chains, plan_round_robin,
    report_severity_table, ExecuteOptions, GenerationPlan, ManifestRecord, OperatorRef, Protocol, SeverityReport,
    SourceImage,
};
pub use calibration::{
    derive_canonical_levels, extrapolate_levels, map_canonical_to_native, measure_strengths, Calibration,
    CanonicalAxis, DeltaPolicy, NamedImage, NativeMapping, StrengthTable,
};
pub use degradations::{
    apply_chain, apply_degradation, list_operators, ChainSpec, DegradationSpec, Degrader, OperatorDescriptor,
    Schedule, LEVELS,
};
pub use error::{Error, Result};
pub use image::{load_image, save_image, FileFormat, Image};
pub use metrics::{psnr, ssim, strength, ExternalScores, MetricId, Orientation, Strength};
pub use rng::{RngStream, StreamId};
pub use taxonomy::{validate_registry, Backend, Cause, Effect, GroupId, Registry, TaxonomyEntry, TaxonomyLabel};

/// Seed used when none is given ("imdeg" in ASCII).
pub const DEFAULT_SEED: u64 = 0x696d646567;
