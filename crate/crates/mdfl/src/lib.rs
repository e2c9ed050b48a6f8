//! Multipath-enhanced device-free localization (MDFL).
//!
//! Device-free localization (DFL) infers the position of a person who carries
//! no radio from the power changes they induce on links of a wireless node
//! network. This crate extends the classic line-of-sight treatment with
//! reflected propagation paths: every resolvable multipath component acts as
//! an additional virtual link, and its geometry is recovered from a floor
//! plan with the image-source method.
//!
//! The library covers the full chain:
//!
//! * [`geometry`] — reflecting surfaces, reflection sequences, virtual
//!   transmitter/receiver construction by iterated mirroring, visibility
//!   tracing, path lengths and excess path lengths;
//! * [`channel`] — band-limited pulse synthesis, matched-filter delay and
//!   amplitude estimation with successive cancellation, idle-channel
//!   initialization statistics;
//! * [`association`] — cut-off constrained optimal matching of estimated to
//!   expected path lengths, and the global measurement union;
//! * [`measurement`] — amplitude projection, dB power changes, and the
//!   exponential excess-path-length shadowing model;
//! * [`crlb`] — measurement Jacobians, Fisher information, and RMSE lower
//!   bounds on grids;
//! * [`scenario`] / [`experiments`] — scenario files, reference room setups,
//!   heatmaps, node-count sweeps, and Monte-Carlo bound validation.
//!
//! All quantities are SI (meters, seconds, Hz) except where a name carries a
//! `_db` suffix. Grid and Monte-Carlo evaluations are data-parallel when the
//! `parallel` feature (default) is enabled; results are ordered by index and
//! bit-identical to the sequential fallback.

pub mod association;
pub mod channel;
pub mod crlb;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod measurement;
pub mod scenario;

mod exec;

pub use error::{Error, Result};
pub use geometry::{Environment, Link, Point, Surface};
pub use measurement::ShadowingParams;
pub use scenario::Scenario;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
