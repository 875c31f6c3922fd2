//! Deterministic discrete-event simulation of a collar network: herd
//! mobility, LoRa uplinks to one or more gateways, gateway outages with
//! node-side buffering, and capacity-limited gateway and cloud ingest.

pub mod calibrate;
pub mod failures;
pub mod mobility;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod sweep;

pub use failures::FailureTimeline;
pub use mobility::{step_mobility, AnimalState};
pub use report::{Fate, FateCounts, MetricsReport};
pub use scenario::Scenario;
pub use sim::run;
pub use sweep::{failure_sweep, scale_for_herd, sweep, FailureRow, Stat, SweepRow};
