//! Synthetic ground truth and verification suites.
//!
//! Every suite returns a [`SuiteReport`] with one [`Check`] per identity:
//! the measured error, its tolerance and whether it passed. Reports are
//! deterministic given the seed.

mod report;
mod sampling;
mod suites;
mod synthetic;

pub use report::{rel_err, Check, SuiteReport};
pub use sampling::{adaptive_simpson, angle_diff, random_angle, random_direction, random_plane, random_point, rng_for};
pub use suites::{
    bundle_average_worst, kernel_average_worst, multiplier_oracle, pipeline, round_trip, round_trip_cases,
    rotation_rate_worst, run_suite, run_suite_with, Pipeline, SuiteOptions, KERNEL_AVERAGE_MIN_COS, SUITES,
};
pub use synthetic::{
    forward_metric, make_density, Family, ForwardMetric, SyntheticDensity, SyntheticDensitySpec, FORWARD_RULE,
};
