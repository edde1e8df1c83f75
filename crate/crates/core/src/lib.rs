//! Uplink RIS-aided massive MIMO with transceiver hardware impairments and
//! RIS phase noise.
//!
//! * [`channel`]: array responses, LoS components, seeded channel draws.
//! * [`analytic`]: exact closed-form moments and the approximate ergodic rate.
//! * [`mc`]: Monte-Carlo oracle for every moment and the ergodic rate.
//! * [`ga`]: genetic algorithm for sum-rate and max-min phase design.
//! * [`scenario`] / [`sweep`]: scenario files, parameter sweeps, CSV output.

// Index loops mirror the element/antenna sums they implement.
#![allow(clippy::needless_range_loop)]

pub mod analytic;
pub mod channel;
pub mod config;
pub mod error;
pub mod ga;
pub mod mc;
pub mod phase_noise;
pub mod scenario;
pub mod sweep;

pub use analytic::{asymptotic_rate, RateBreakdown, RateModel, UserRate};
pub use config::{Angles, PhaseVector, ScenarioGeometry, SystemConfig};
pub use error::{Error, Result};
pub use ga::{ga_optimize, GaConfig, GaOutcome, GaTrace, Objective};
pub use mc::{McEstimate, Moment, MonteCarlo, RateMode};
