//! Vehicular ad hoc network simulator with guard-node Sybil attack
//! detection.
//!
//! A guard vehicle elected at the centroid of traffic estimates the regional
//! speed from Greenshield's model and flags identities whose beaconed speed
//! falls too far below it. Around that detector sit analytic delay and
//! detection-probability models, a seeded ring-road simulator, metrics, and
//! a sweep harness.

pub mod config;
pub mod delay;
pub mod detector;
pub mod error;
pub mod guard;
pub mod metrics;
pub mod model;
pub mod probability;
pub mod sim;
pub mod sweep;
pub mod trace;
pub mod traffic;

pub use config::{load_scenario, parse_scenario, ScenarioConfig};
pub use detector::{run_detection_round, DetectionRound, Detector, DetectorConfig, ThresholdPolicy};
pub use error::{Error, Result};
pub use metrics::SimReport;
pub use model::{BeaconMessage, Classification, Position, VehicleId, VehicleState};
pub use sim::run;
pub use sweep::{run_sweep, SweepSpec, SweepTable};
