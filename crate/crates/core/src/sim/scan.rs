use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{seconds_to_ps, simulate, CoincidenceCounter, CountsRecord, ExperimentConfig};
use crate::analytic::db_to_transmissivity;
use crate::{Error, Result};

/// A numeric field of [`ExperimentConfig`] that a scan can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    /// Dead time of both detectors.
    DeadTimeNs,
    /// Same attenuation on both arms.
    AttenuationDb,
    AttenuationADb,
    AttenuationBDb,
    WindowPs,
    PairRateHz,
    TotalRateHz,
    /// Quantum efficiency of both detectors.
    EtaQ,
    DurationS,
}

impl ScanParameter {
    pub const ALL: [ScanParameter; 9] = [
        ScanParameter::DeadTimeNs,
        ScanParameter::AttenuationDb,
        ScanParameter::AttenuationADb,
        ScanParameter::AttenuationBDb,
        ScanParameter::WindowPs,
        ScanParameter::PairRateHz,
        ScanParameter::TotalRateHz,
        ScanParameter::EtaQ,
        ScanParameter::DurationS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::DeadTimeNs => "dead_time_ns",
            ScanParameter::AttenuationDb => "attenuation_db",
            ScanParameter::AttenuationADb => "attenuation_a_db",
            ScanParameter::AttenuationBDb => "attenuation_b_db",
            ScanParameter::WindowPs => "window_ps",
            ScanParameter::PairRateHz => "pair_rate_hz",
            ScanParameter::TotalRateHz => "total_rate_hz",
            ScanParameter::EtaQ => "eta_q",
            ScanParameter::DurationS => "duration_s",
        }
    }

    /// Writes `value` (in the unit named by the parameter) into `config`.
    pub fn apply(self, config: &mut ExperimentConfig, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::param(self.name(), "must be finite"));
        }
        match self {
            ScanParameter::DeadTimeNs => {
                config.detector_a.dead_time_s = value * 1e-9;
                config.detector_b.dead_time_s = value * 1e-9;
            }
            ScanParameter::AttenuationDb => {
                let g = db_to_transmissivity(value)?;
                config.rates.transmissivity_a = g;
                config.rates.transmissivity_b = g;
            }
            ScanParameter::AttenuationADb => config.rates.transmissivity_a = db_to_transmissivity(value)?,
            ScanParameter::AttenuationBDb => config.rates.transmissivity_b = db_to_transmissivity(value)?,
            ScanParameter::WindowPs => config.rates.window_s = value * 1e-12,
            ScanParameter::PairRateHz => config.rates.pair_rate_hz = value,
            ScanParameter::TotalRateHz => config.rates.total_rate_hz = value,
            ScanParameter::EtaQ => {
                config.detector_a.eta_q = value;
                config.detector_b.eta_q = value;
            }
            ScanParameter::DurationS => config.duration_s = value,
        }
        Ok(())
    }
}

impl fmt::Display for ScanParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScanParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanAxis {
    pub parameter: ScanParameter,
    pub values: Vec<f64>,
}

impl ScanAxis {
    pub fn new(parameter: &str, values: Vec<f64>) -> Result<Self> {
        Ok(ScanAxis {
            parameter: parameter.parse()?,
            values,
        })
    }
}

/// Counts for every grid cell; `records[i][j]` belongs to
/// `(axis1.values[i], axis2.values[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axis1: ScanAxis,
    pub axis2: ScanAxis,
    pub records: Vec<Vec<CountsRecord>>,
}

impl ScanResult {
    /// One observable as a row-major matrix.
    pub fn matrix(&self, f: impl Fn(&CountsRecord) -> f64) -> Vec<Vec<f64>> {
        self.records.iter().map(|row| row.iter().map(&f).collect()).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for grid cell `(i, j)`, independent of evaluation order.
pub fn derive_seed(base: u64, i: usize, j: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ i as u64) ^ (j as u64).rotate_left(32))
}

/// Simulates `config` and counts coincidences with its own window,
/// without materialising the event stream.
pub fn run_counts(config: &ExperimentConfig, offset_ps: i64) -> Result<CountsRecord> {
    let stream = simulate(config)?;
    let duration_ps = stream.duration_ps();
    let mut counter = CoincidenceCounter::new(seconds_to_ps(config.rates.window_s), offset_ps);
    for event in stream {
        counter.push(event)?;
    }
    Ok(counter.finish(duration_ps))
}

/// The configuration of grid cell `(i, j)`, seed included.
pub fn scan_point(base: &ExperimentConfig, axis1: &ScanAxis, axis2: &ScanAxis, i: usize, j: usize) -> Result<ExperimentConfig> {
    let mut config = base.clone();
    let v1 = *axis1
        .values
        .get(i)
        .ok_or_else(|| Error::param("scan index", "out of range"))?;
    let v2 = *axis2
        .values
        .get(j)
        .ok_or_else(|| Error::param("scan index", "out of range"))?;
    axis1.parameter.apply(&mut config, v1)?;
    axis2.parameter.apply(&mut config, v2)?;
    config.seed = derive_seed(base.seed, i, j);
    config.validate()?;
    Ok(config)
}

/// Runs every grid cell sequentially. Cells are independent, so callers
/// may instead evaluate [`scan_point`] + [`run_counts`] in parallel.
pub fn scan_grid(base: &ExperimentConfig, axis1: ScanAxis, axis2: ScanAxis, offset_ps: i64) -> Result<ScanResult> {
    let mut records = Vec::with_capacity(axis1.values.len());
    for i in 0..axis1.values.len() {
        let mut row = Vec::with_capacity(axis2.values.len());
        for j in 0..axis2.values.len() {
            row.push(run_counts(&scan_point(base, &axis1, &axis2, i, j)?, offset_ps)?);
        }
        records.push(row);
    }
    Ok(ScanResult { axis1, axis2, records })
}

/// Parameter names accepted by [`ScanParameter::from_str`].
pub fn parameter_names() -> String {
    let names: Vec<&str> = ScanParameter::ALL.iter().map(|p| p.name()).collect();
    names.join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{DetectorParams, RateSet};
    use crate::state::{BellKind, SourceStateModel};
    use alloc::vec;

    fn base() -> ExperimentConfig {
        let rates = RateSet {
            pair_rate_hz: 2e4,
            total_rate_hz: 4e4,
            transmissivity_a: 1.0,
            transmissivity_b: 1.0,
            window_s: 1e-9,
        };
        let mut c = ExperimentConfig::ideal(SourceStateModel::pure(BellKind::PhiPlus), rates, DetectorParams::ideal(0.5, 0.0), 0.05);
        c.seed = 11;
        c
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        assert_eq!(
            "dead_time_s".parse::<ScanParameter>().unwrap_err(),
            Error::UnknownParameter("dead_time_s".into())
        );
        for p in ScanParameter::ALL {
            assert_eq!(p.name().parse::<ScanParameter>().unwrap(), p);
        }
    }

    #[test]
    fn parameters_land_in_the_config() {
        let mut c = base();
        ScanParameter::AttenuationDb.apply(&mut c, 10.0).unwrap();
        assert!((c.rates.transmissivity_a - 0.1).abs() < 1e-15);
        assert!((c.rates.transmissivity_b - 0.1).abs() < 1e-15);
        ScanParameter::DeadTimeNs.apply(&mut c, 50.0).unwrap();
        assert!((c.detector_b.dead_time_s - 50e-9).abs() < 1e-22);
        ScanParameter::WindowPs.apply(&mut c, 250.0).unwrap();
        assert!((c.rates.window_s - 2.5e-10).abs() < 1e-24);
    }

    #[test]
    fn one_cell_grid_equals_direct_run() {
        let c = base();
        let a1 = ScanAxis::new("dead_time_ns", vec![20.0]).unwrap();
        let a2 = ScanAxis::new("attenuation_db", vec![3.0]).unwrap();
        let grid = scan_grid(&c, a1.clone(), a2.clone(), 0).unwrap();
        let direct = run_counts(&scan_point(&c, &a1, &a2, 0, 0).unwrap(), 0).unwrap();
        assert_eq!(grid.records, vec![vec![direct]]);

        let mut manual = c.clone();
        manual.detector_a.dead_time_s = 20e-9;
        manual.detector_b.dead_time_s = 20e-9;
        manual.rates.transmissivity_a = db_to_transmissivity(3.0).unwrap();
        manual.rates.transmissivity_b = manual.rates.transmissivity_a;
        manual.seed = derive_seed(c.seed, 0, 0);
        assert_eq!(run_counts(&manual, 0).unwrap(), direct);
    }

    #[test]
    fn streaming_counts_match_collected_tags() {
        let c = base();
        let tags = simulate(&c).unwrap().collect_tags();
        let batch = super::super::count_coincidences(&tags, seconds_to_ps(c.rates.window_s), 0).unwrap();
        assert_eq!(run_counts(&c, 0).unwrap(), batch);
    }

    #[test]
    fn seeds_differ_per_cell() {
        let mut seen = alloc::collections::BTreeSet::new();
        for i in 0..20 {
            for j in 0..20 {
                assert!(seen.insert(derive_seed(7, i, j)));
            }
        }
        assert_ne!(derive_seed(7, 0, 0), derive_seed(8, 0, 0));
    }
}
