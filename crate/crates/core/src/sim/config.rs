use serde::{Deserialize, Serialize};

use crate::analytic::{DetectorParams, RateSet};
use crate::error::non_negative;
use crate::state::{Axis, Side, SourceStateModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FiberSpec {
    pub length_km: f64,
    pub dispersion_ps_per_km_nm: f64,
}

impl FiberSpec {
    pub const NONE: FiberSpec = FiberSpec {
        length_km: 0.0,
        dispersion_ps_per_km_nm: 0.0,
    };

    /// Group-delay change per nm of detuning, `D L` in ps/nm.
    pub fn delay_per_nm(&self) -> f64 {
        self.length_km * self.dispersion_ps_per_km_nm
    }
}

/// Everything needed to generate one simulated acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub state: SourceStateModel,
    pub rates: RateSet,
    pub detector_a: DetectorParams,
    pub detector_b: DetectorParams,
    pub fiber_a: FiberSpec,
    pub fiber_b: FiberSpec,
    /// Spectral FWHM of the source.
    pub source_bandwidth_nm: f64,
    /// Polarizer in front of each detector; `None` lets every photon through.
    pub analyzer_a: Option<Axis>,
    pub analyzer_b: Option<Axis>,
    pub duration_s: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// A lossless, noise-free two-detector setup around the given source.
    pub fn ideal(state: SourceStateModel, rates: RateSet, detector: DetectorParams, duration_s: f64) -> Self {
        ExperimentConfig {
            state,
            rates,
            detector_a: detector,
            detector_b: detector,
            fiber_a: FiberSpec::NONE,
            fiber_b: FiberSpec::NONE,
            source_bandwidth_nm: 0.0,
            analyzer_a: None,
            analyzer_b: None,
            duration_s,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.state.validate()?;
        self.rates.validate()?;
        self.detector_a.validate()?;
        self.detector_b.validate()?;
        for fiber in [&self.fiber_a, &self.fiber_b] {
            non_negative("length_km", fiber.length_km)?;
            non_negative("dispersion_ps_per_km_nm", fiber.dispersion_ps_per_km_nm)?;
        }
        non_negative("source_bandwidth_nm", self.source_bandwidth_nm)?;
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::param("duration_s", "must be > 0"));
        }
        Ok(())
    }

    pub fn detector(&self, side: Side) -> &DetectorParams {
        match side {
            Side::A => &self.detector_a,
            Side::B => &self.detector_b,
        }
    }

    pub fn detector_mut(&mut self, side: Side) -> &mut DetectorParams {
        match side {
            Side::A => &mut self.detector_a,
            Side::B => &mut self.detector_b,
        }
    }
}
