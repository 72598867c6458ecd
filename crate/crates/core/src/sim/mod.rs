//! Event-level Monte Carlo of a pair source, lossy channels and detectors,
//! plus the time-tag analysis applied to its output (or to real time-tagger
//! exports): coincidence counting, delay histograms and parameter scans.

mod config;
mod counting;
mod scan;
mod stream;

pub use config::{ExperimentConfig, FiberSpec};
pub use counting::{count_coincidences, delay_histogram, CoincidenceCounter, CountsRecord, DelayHistogram};
pub use scan::{derive_seed, parameter_names, run_counts, scan_grid, scan_point, ScanAxis, ScanParameter, ScanResult};
pub use stream::{simulate, DetectionEvent, EventStream, TimeTags};

pub use crate::state::Side as Channel;

/// Picoseconds per second.
pub const PS_PER_S: f64 = 1e12;

/// Seconds to whole picoseconds.
pub fn seconds_to_ps(seconds: f64) -> u64 {
    let ps = seconds * PS_PER_S;
    if ps <= 0.0 {
        0
    } else {
        (ps + 0.5) as u64
    }
}
