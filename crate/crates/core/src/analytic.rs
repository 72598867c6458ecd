//! Closed-form rate predictions for a pair source seen through lossy channels
//! and dead-time limited detectors.
//!
//! All rates are in Hz and all times in seconds. Dark counts and afterpulses
//! are deliberately absent here; they are only modelled by the Monte Carlo in
//! [`crate::sim`].

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{non_negative, unit_interval};
use crate::{Error, Result};

/// Single-photon detector parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Quantum efficiency in `[0, 1]`.
    pub eta_q: f64,
    pub dead_time_s: f64,
    pub dark_rate_hz: f64,
    /// Probability that a registered detection spawns an afterpulse, `< 1`.
    pub afterpulse_prob: f64,
    /// Mean afterpulse delay.
    pub afterpulse_tau_s: f64,
    /// Standard deviation of the Gaussian timing jitter.
    pub jitter_sigma_s: f64,
}

impl DetectorParams {
    /// Noise-free detector with the given efficiency and dead time.
    pub fn ideal(eta_q: f64, dead_time_s: f64) -> Self {
        DetectorParams {
            eta_q,
            dead_time_s,
            dark_rate_hz: 0.0,
            afterpulse_prob: 0.0,
            afterpulse_tau_s: 0.0,
            jitter_sigma_s: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        unit_interval("eta_q", self.eta_q)?;
        non_negative("dead_time_s", self.dead_time_s)?;
        non_negative("dark_rate_hz", self.dark_rate_hz)?;
        non_negative("afterpulse_prob", self.afterpulse_prob)?;
        if self.afterpulse_prob >= 1.0 {
            return Err(Error::param("afterpulse_prob", "must be < 1"));
        }
        non_negative("afterpulse_tau_s", self.afterpulse_tau_s)?;
        non_negative("jitter_sigma_s", self.jitter_sigma_s)?;
        Ok(())
    }
}

/// Source rates, channel transmissivities and the coincidence window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    /// Photon pairs emitted per second, `R_C`.
    pub pair_rate_hz: f64,
    /// All photons emitted per second into each arm, `R >= R_C`.
    pub total_rate_hz: f64,
    pub transmissivity_a: f64,
    pub transmissivity_b: f64,
    pub window_s: f64,
}

impl RateSet {
    pub fn validate(&self) -> Result<()> {
        non_negative("pair_rate_hz", self.pair_rate_hz)?;
        non_negative("total_rate_hz", self.total_rate_hz)?;
        if self.pair_rate_hz > self.total_rate_hz {
            return Err(Error::param(
                "pair_rate_hz",
                format!(
                    "pair rate {} exceeds total rate {}",
                    self.pair_rate_hz, self.total_rate_hz
                ),
            ));
        }
        unit_interval("transmissivity_a", self.transmissivity_a)?;
        unit_interval("transmissivity_b", self.transmissivity_b)?;
        non_negative("window_s", self.window_s)?;
        Ok(())
    }

    /// Heralding ratio `R_C / R`; zero for a dark source.
    pub fn heralding(&self) -> f64 {
        if self.total_rate_hz > 0.0 {
            self.pair_rate_hz / self.total_rate_hz
        } else {
            0.0
        }
    }

    pub fn transmissivity(&self, arm: crate::state::Side) -> f64 {
        match arm {
            crate::state::Side::A => self.transmissivity_a,
            crate::state::Side::B => self.transmissivity_b,
        }
    }
}

/// `eta_Q / (1 + R eta_Q T_d)`: detection efficiency of a non-paralyzable
/// detector illuminated at `incident_rate_hz`.
pub fn total_efficiency(eta_q: f64, incident_rate_hz: f64, dead_time_s: f64) -> Result<f64> {
    unit_interval("eta_q", eta_q)?;
    non_negative("incident_rate_hz", incident_rate_hz)?;
    non_negative("dead_time_s", dead_time_s)?;
    Ok(eta_q / (1.0 + incident_rate_hz * eta_q * dead_time_s))
}

/// Efficiency of one whole arm (channel transmission times saturated
/// detector efficiency), i.e. the factor linking `R` to the measured singles.
pub fn arm_efficiency(rates: &RateSet, detector: &DetectorParams, arm: crate::state::Side) -> Result<f64> {
    let gamma = rates.transmissivity(arm);
    let incident = rates.total_rate_hz * gamma;
    Ok(gamma * total_efficiency(detector.eta_q, incident, detector.dead_time_s)?)
}

/// Predicted singles rate of one arm, `R gamma eta_T(R gamma)`.
pub fn expected_singles_rate(rates: &RateSet, detector: &DetectorParams, arm: crate::state::Side) -> Result<f64> {
    rates.validate()?;
    detector.validate()?;
    Ok(rates.total_rate_hz * arm_efficiency(rates, detector, arm)?)
}

/// `R_C eta_A eta_B gamma_A gamma_B / ((1 + R gamma_A T_d eta_A)(1 + R gamma_B T_d eta_B))`.
///
/// Each arm uses its own detector dead time.
pub fn expected_coincidence_rate(
    rates: &RateSet,
    det_a: &DetectorParams,
    det_b: &DetectorParams,
) -> Result<f64> {
    rates.validate()?;
    det_a.validate()?;
    det_b.validate()?;
    let ga = rates.transmissivity_a;
    let gb = rates.transmissivity_b;
    let r = rates.total_rate_hz;
    let num = rates.pair_rate_hz * det_a.eta_q * det_b.eta_q * ga * gb;
    let den = (1.0 + r * ga * det_a.dead_time_s * det_a.eta_q) * (1.0 + r * gb * det_b.dead_time_s * det_b.eta_q);
    Ok(num / den)
}

/// Accidental coincidence rate `R_MA R_MB dt`.
pub fn false_coincidence_rate(singles_a_hz: f64, singles_b_hz: f64, window_s: f64) -> Result<f64> {
    non_negative("singles_a_hz", singles_a_hz)?;
    non_negative("singles_b_hz", singles_b_hz)?;
    non_negative("window_s", window_s)?;
    Ok(singles_a_hz * singles_b_hz * window_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldingEstimate {
    pub value: f64,
    /// Set when the measured coincidences fall below the accidental estimate,
    /// which makes `value` negative.
    pub below_accidentals: bool,
}

/// `(R_MC - R_M1 R_M2 dt) / (sqrt(eta_T1 eta_T2) sqrt(R_M1 R_M2))`.
///
/// Negative estimates are returned unclamped and flagged.
pub fn heralding_probability(
    measured_coinc_hz: f64,
    singles_a_hz: f64,
    singles_b_hz: f64,
    window_s: f64,
    eta_total_a: f64,
    eta_total_b: f64,
) -> Result<HeraldingEstimate> {
    non_negative("measured_coinc_hz", measured_coinc_hz)?;
    non_negative("singles_a_hz", singles_a_hz)?;
    non_negative("singles_b_hz", singles_b_hz)?;
    non_negative("window_s", window_s)?;
    unit_interval("eta_total_a", eta_total_a)?;
    unit_interval("eta_total_b", eta_total_b)?;
    if singles_a_hz == 0.0 || singles_b_hz == 0.0 {
        return Err(Error::ZeroDenominator("singles rate is zero"));
    }
    if eta_total_a == 0.0 || eta_total_b == 0.0 {
        return Err(Error::ZeroDenominator("total efficiency is zero"));
    }
    let accidentals = singles_a_hz * singles_b_hz * window_s;
    let value = (measured_coinc_hz - accidentals)
        / ((eta_total_a * eta_total_b).sqrt() * (singles_a_hz * singles_b_hz).sqrt());
    Ok(HeraldingEstimate {
        value,
        below_accidentals: measured_coinc_hz < accidentals,
    })
}

/// Signal-to-noise ratio of true to false coincidences.
pub fn snr(true_coinc_hz: f64, false_coinc_hz: f64) -> Result<f64> {
    non_negative("true_coinc_hz", true_coinc_hz)?;
    non_negative("false_coinc_hz", false_coinc_hz)?;
    if false_coinc_hz == 0.0 {
        return Err(Error::ZeroDenominator("false coincidence rate is zero"));
    }
    Ok(true_coinc_hz / false_coinc_hz)
}

/// Arrival-delay spread `D L dλ` in ps added by a fiber of dispersion `D`
/// (ps/km/nm) and length `L` (km) for a source of bandwidth `dλ` (nm).
pub fn dispersion_broadening(dispersion_ps_per_km_nm: f64, length_km: f64, bandwidth_nm: f64) -> Result<f64> {
    non_negative("dispersion_ps_per_km_nm", dispersion_ps_per_km_nm)?;
    non_negative("length_km", length_km)?;
    non_negative("bandwidth_nm", bandwidth_nm)?;
    Ok(dispersion_ps_per_km_nm * length_km * bandwidth_nm)
}

/// `(1 - V) / 2`.
pub fn qber_from_visibility(v: f64) -> Result<f64> {
    if !(v.is_finite() && (-1.0..=1.0).contains(&v)) {
        return Err(Error::param("visibility", format!("must lie in [-1, 1], got {v}")));
    }
    Ok((1.0 - v) / 2.0)
}

/// Attenuation in dB to power transmissivity.
pub fn db_to_transmissivity(attenuation_db: f64) -> Result<f64> {
    non_negative("attenuation_db", attenuation_db)?;
    Ok(10.0.powf(-attenuation_db / 10.0))
}
