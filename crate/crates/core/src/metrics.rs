//! Entanglement metrics computed directly from measured counts.
//!
//! All metrics use count rates (counts divided by the acquisition time of
//! each setting), so settings measured for different durations can be mixed.
//! Binary entropies are in bits.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::analytic::{heralding_probability, HeraldingEstimate};
use crate::error::non_negative;
use crate::linalg::{solve_least_squares, Mat2};
use crate::sim::CountsRecord;
use crate::state::{shannon_bits, Axis, BellKind, BlochRotation, DensityMatrix, QubitState, Side, SourceStateModel};
use crate::{Error, Result};

/// Coincidences recorded at one analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub counts: f64,
    pub duration_s: f64,
    /// Expected accidental coincidences in this acquisition.
    #[serde(default)]
    pub accidentals: f64,
}

/// Coincidence counts keyed by `(axis_a, axis_b)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BasisCounts {
    settings: BTreeMap<(Axis, Axis), SettingCounts>,
}

impl BasisCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces one setting.
    pub fn insert(&mut self, axis_a: Axis, axis_b: Axis, counts: f64, duration_s: f64) -> Result<()> {
        self.insert_with_accidentals(axis_a, axis_b, counts, duration_s, 0.0)
    }

    pub fn insert_with_accidentals(
        &mut self,
        axis_a: Axis,
        axis_b: Axis,
        counts: f64,
        duration_s: f64,
        accidentals: f64,
    ) -> Result<()> {
        non_negative("counts", counts)?;
        non_negative("accidentals", accidentals)?;
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(Error::param("duration_s", format!("must be > 0, got {duration_s}")));
        }
        self.settings.insert(
            (axis_a, axis_b),
            SettingCounts {
                counts,
                duration_s,
                accidentals,
            },
        );
        Ok(())
    }

    /// Stores a counted acquisition together with its accidental estimate.
    pub fn insert_record(&mut self, axis_a: Axis, axis_b: Axis, record: &CountsRecord) -> Result<()> {
        self.insert_with_accidentals(
            axis_a,
            axis_b,
            record.coincidences as f64,
            record.duration_s,
            record.accidental_estimate,
        )
    }

    /// Expected (noise-free) counts `shots * Tr(rho P_a (x) P_b)` for every
    /// listed setting, each with unit duration.
    pub fn expected(rho: &DensityMatrix, settings: &[(Axis, Axis)], shots: f64) -> Self {
        let mut counts = BasisCounts::new();
        for &(a, b) in settings {
            counts.settings.insert(
                (a, b),
                SettingCounts {
                    counts: shots * rho.coincidence_probability(a, b),
                    duration_s: 1.0,
                    accidentals: 0.0,
                },
            );
        }
        counts
    }

    pub fn get(&self, axis_a: Axis, axis_b: Axis) -> Option<&SettingCounts> {
        self.settings.get(&(axis_a, axis_b))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Axis, Axis), &SettingCounts)> {
        self.settings.iter()
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    /// Copy with every count scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for s in out.settings.values_mut() {
            s.counts *= c;
            s.accidentals *= c;
        }
        out
    }

    /// Copy with the accidental estimate removed from every setting,
    /// clamped at zero.
    pub fn with_accidentals_subtracted(&self) -> Self {
        let mut out = self.clone();
        for s in out.settings.values_mut() {
            s.counts = (s.counts - s.accidentals).max(0.0);
            s.accidentals = 0.0;
        }
        out
    }

    /// Fails listing every absent setting.
    pub fn require(&self, settings: &[(Axis, Axis)]) -> Result<()> {
        let missing: Vec<String> = settings
            .iter()
            .filter(|k| !self.settings.contains_key(k))
            .map(|(a, b)| format!("{a}{b}"))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingSettings(missing.join(", ")))
        }
    }

    /// Coincidence rate of one setting in Hz.
    pub fn rate(&self, axis_a: Axis, axis_b: Axis) -> Result<f64> {
        self.get(axis_a, axis_b)
            .map(|s| s.counts / s.duration_s)
            .ok_or_else(|| Error::MissingSettings(format!("{axis_a}{axis_b}")))
    }
}

/// Raw contrast `(N_jj - N_jk) / (N_jj + N_jk)` with `k` orthogonal to `j`.
pub fn visibility(counts: &BasisCounts, j: Axis) -> Result<f64> {
    let k = j.partner();
    counts.require(&[(j, j), (j, k)])?;
    let same = counts.rate(j, j)?;
    let cross = counts.rate(j, k)?;
    if same + cross <= 0.0 {
        return Err(Error::ZeroDenominator("no coincidences at the visibility settings"));
    }
    Ok((same - cross) / (same + cross))
}

/// Poisson standard error of [`visibility`], `sqrt(4 N_jj N_jk / (N_jj + N_jk)^3)`.
pub fn visibility_standard_error(counts: &BasisCounts, j: Axis) -> Result<f64> {
    let k = j.partner();
    counts.require(&[(j, j), (j, k)])?;
    let a = counts.get(j, j).map_or(0.0, |s| s.counts);
    let b = counts.get(j, k).map_or(0.0, |s| s.counts);
    if a + b <= 0.0 {
        return Err(Error::ZeroDenominator("no coincidences at the visibility settings"));
    }
    Ok((4.0 * a * b / (a + b).powi(3)).sqrt())
}

/// Mean visibility of a basis (named by either of its axes), signed so that
/// the expected Bell state's correlation counts as positive.
pub fn average_visibility(counts: &BasisCounts, basis: Axis, expected: BellKind) -> Result<f64> {
    let (j, k) = (basis, basis.partner());
    counts.require(&[(j, j), (j, k), (k, k), (k, j)])?;
    let v = (visibility(counts, j)? + visibility(counts, k)?) / 2.0;
    Ok(expected.correlation_sign(basis) * v)
}

pub fn average_visibility_standard_error(counts: &BasisCounts, basis: Axis) -> Result<f64> {
    let a = visibility_standard_error(counts, basis)?;
    let b = visibility_standard_error(counts, basis.partner())?;
    Ok((a * a + b * b).sqrt() / 2.0)
}

/// Settings needed by [`qber`]: both linear bases, all four combinations.
pub fn linear_basis_settings() -> Vec<(Axis, Axis)> {
    let mut out = Vec::new();
    for (x, y) in [(Axis::H, Axis::V), (Axis::D, Axis::A)] {
        for a in [x, y] {
            for b in [x, y] {
                out.push((a, b));
            }
        }
    }
    out
}

/// Fraction of coincidences that contradict the expected Bell state's
/// correlations, pooled over the HV and DA bases.
pub fn qber(counts: &BasisCounts, expected: BellKind) -> Result<f64> {
    let settings = linear_basis_settings();
    counts.require(&settings)?;
    let (mut correct, mut wrong) = (0.0, 0.0);
    for (a, b) in settings {
        let rate = counts.rate(a, b)?;
        let correlated = expected.correlation_sign(a) > 0.0;
        if (a == b) == correlated {
            correct += rate;
        } else {
            wrong += rate;
        }
    }
    if correct + wrong <= 0.0 {
        return Err(Error::ZeroDenominator("no coincidences in the linear bases"));
    }
    Ok(wrong / (correct + wrong))
}

/// One-sided coincidence entropies, indexed in H, V, D, A order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub side: Side,
    /// `1 - H(p_jj, p_jk)` in bits.
    pub h_same: [f64; 4],
    /// `H(p_jl, p_jm)` in bits.
    pub h_cross: [f64; 4],
    pub total: f64,
}

fn binary_entropy(x: f64, y: f64) -> f64 {
    let n = x + y;
    shannon_bits(&[x / n, y / n]).min(1.0)
}

/// The settings with `side`'s analyzer fixed at `j` and the other arm at each
/// of `others`.
fn one_sided(side: Side, j: Axis, others: &[Axis]) -> Vec<(Axis, Axis)> {
    others
        .iter()
        .map(|&o| match side {
            Side::A => (j, o),
            Side::B => (o, j),
        })
        .collect()
}

/// Coincidence entropies for one arm. For `Side::A`, Alice's analyzer is
/// fixed at each linear axis `j` while Bob's takes `j`, its orthogonal
/// partner `k` and the two axes `l`, `m` at ±45°; `Side::B` swaps the roles.
pub fn coincidence_entropies(counts: &BasisCounts, side: Side) -> Result<EntropyReport> {
    let mut needed = Vec::new();
    for j in Axis::LINEAR {
        let (l, m) = j.diagonal_partners().expect("linear axis");
        needed.extend(one_sided(side, j, &[j, j.partner(), l, m]));
    }
    counts.require(&needed)?;

    let mut h_same = [0.0; 4];
    let mut h_cross = [0.0; 4];
    for (i, j) in Axis::LINEAR.into_iter().enumerate() {
        let (l, m) = j.diagonal_partners().expect("linear axis");
        let rates = one_sided(side, j, &[j, j.partner(), l, m])
            .into_iter()
            .map(|(a, b)| counts.rate(a, b))
            .collect::<Result<Vec<f64>>>()?;
        if rates[0] + rates[1] <= 0.0 || rates[2] + rates[3] <= 0.0 {
            return Err(Error::ZeroDenominator("no coincidences for a coincidence-entropy pair"));
        }
        h_same[i] = 1.0 - binary_entropy(rates[0], rates[1]);
        h_cross[i] = binary_entropy(rates[2], rates[3]);
    }
    let total = h_same.iter().chain(&h_cross).sum();
    Ok(EntropyReport {
        side,
        h_same,
        h_cross,
        total,
    })
}

/// Every setting needed by [`coincidence_entropies`] for both sides: all of
/// {H, V, D, A}².
pub fn entropy_settings() -> Vec<(Axis, Axis)> {
    let mut out = Vec::new();
    for a in Axis::LINEAR {
        for b in Axis::LINEAR {
            out.push((a, b));
        }
    }
    out
}

/// Heralding estimate from a counted acquisition and the total efficiency of
/// each arm.
pub fn heralding_from_counts(record: &CountsRecord, eta_total_a: f64, eta_total_b: f64) -> Result<HeraldingEstimate> {
    if !(record.duration_s > 0.0) {
        return Err(Error::ZeroDenominator("acquisition duration is zero"));
    }
    heralding_probability(
        record.coincidence_rate(),
        record.singles_rate(Side::A),
        record.singles_rate(Side::B),
        record.window_s,
        eta_total_a,
        eta_total_b,
    )
}

/// Singles counts on one arm while a linear polarizer is rotated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglesScan {
    pub arm: Side,
    /// `(polarizer angle in degrees, singles count)`.
    pub samples: Vec<(f64, f64)>,
    /// Label of the polarization-controller setting in front of the polarizer.
    pub pc_setting: String,
}

impl SinglesScan {
    /// Expected counts for a one-arm state, `total * Tr(rho P_theta)`.
    pub fn expected(arm: Side, state: &QubitState, angles_deg: &[f64], total: f64, pc_setting: &str) -> Self {
        let samples = angles_deg
            .iter()
            .map(|&t| (t, total * state.probability(&crate::state::linear_polarizer(t))))
            .collect();
        SinglesScan {
            arm,
            samples,
            pc_setting: pc_setting.into(),
        }
    }

    /// At least four distinct angles spanning at least 180°.
    pub fn validate(&self) -> Result<()> {
        let mut angles: Vec<f64> = self.samples.iter().map(|s| s.0).collect();
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("samples", "angles must be finite"));
        }
        for &(_, c) in &self.samples {
            non_negative("singles count", c)?;
        }
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        if angles.len() < 4 {
            return Err(Error::param("samples", "need at least 4 distinct polarizer angles"));
        }
        if angles[angles.len() - 1] - angles[0] < 180.0 - 1e-9 {
            return Err(Error::param("samples", "polarizer angles must span at least 180 degrees"));
        }
        Ok(())
    }
}

/// Least-squares fit of `y = c0 + c1 cos 2t + c2 sin 2t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    /// Angle of the maximum in degrees, in `[0, 180)`.
    pub phase_deg: f64,
}

impl SinusoidFit {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Result<Self> {
        let (rows, rhs): (Vec<Vec<f64>>, Vec<f64>) = points
            .map(|(t, y)| {
                let (s, c) = (2.0 * t.to_radians()).sin_cos();
                (vec![1.0, c, s], y)
            })
            .unzip();
        let c = solve_least_squares(&rows, &rhs)?;
        let amplitude = (c[1] * c[1] + c[2] * c[2]).sqrt();
        let mut phase_deg = (c[2].atan2(c[1]) / 2.0).to_degrees();
        if phase_deg < 0.0 {
            phase_deg += 180.0;
        }
        Ok(SinusoidFit {
            offset: c[0],
            amplitude,
            phase_deg,
        })
    }

    /// `(max - min) / (max + min)` of the fitted curve, with the minimum
    /// floored at zero.
    pub fn contrast(&self) -> f64 {
        let max = self.offset + self.amplitude;
        let min = (self.offset - self.amplitude).max(0.0);
        if max <= 0.0 {
            0.0
        } else {
            (max - min) / (max + min)
        }
    }

    pub fn evaluate(&self, angle_deg: f64) -> f64 {
        self.offset + self.amplitude * (2.0 * (angle_deg - self.phase_deg).to_radians()).cos()
    }
}

/// Contrast of the singles-vs-polarizer-angle curve.
pub fn single_photon_visibility(scan: &SinglesScan) -> Result<f64> {
    scan.validate()?;
    if scan.samples.iter().map(|s| s.1).sum::<f64>() <= 0.0 {
        return Err(Error::NoCounts);
    }
    Ok(SinusoidFit::fit(scan.samples.iter().copied())?.contrast())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityCurve {
    pub fit: SinusoidFit,
    pub visibility: f64,
    /// Set when the data carry no modulation (or cannot be fitted), in which
    /// case `visibility` is 0.
    pub degenerate: bool,
}

/// Fits coincidences against the relative polarizer angle `angle_b - angle_a`.
/// Points are `(angle_a_deg, angle_b_deg, coincidences)`.
pub fn visibility_curve(points: &[(f64, f64, f64)]) -> Result<VisibilityCurve> {
    if points.len() < 8 {
        return Err(Error::param("points", "need at least 8 settings"));
    }
    for &(a, b, c) in points {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::param("points", "angles must be finite"));
        }
        non_negative("coincidences", c)?;
    }
    let degenerate = |fit: SinusoidFit| VisibilityCurve {
        fit,
        visibility: 0.0,
        degenerate: true,
    };
    let fit = match SinusoidFit::fit(points.iter().map(|&(a, b, c)| (b - a, c))) {
        Ok(fit) => fit,
        Err(Error::Singular(_)) => {
            let mean = points.iter().map(|p| p.2).sum::<f64>() / points.len() as f64;
            return Ok(degenerate(SinusoidFit {
                offset: mean,
                amplitude: 0.0,
                phase_deg: 0.0,
            }));
        }
        Err(e) => return Err(e),
    };
    if fit.offset <= 0.0 || fit.amplitude <= 1e-12 * fit.offset {
        return Ok(degenerate(fit));
    }
    Ok(VisibilityCurve {
        fit,
        visibility: fit.contrast(),
        degenerate: false,
    })
}

/// Single-photon visibility of one arm behind a polarization controller:
/// the linear polarization degree of the rotated reduced state.
pub fn single_photon_visibility_of(rho: &DensityMatrix, arm: Side, pc: &Mat2) -> f64 {
    rho.partial_trace(arm).rotate(pc).linear_polarization_degree()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvExtremes {
    pub sv_max: f64,
    pub sv_min: f64,
    pub argmax_pc: BlochRotation,
    pub argmin_pc: BlochRotation,
}

/// Extremal single-photon visibility over a set of polarization-controller
/// settings.
pub fn sv_extremize(source: &SourceStateModel, arm: Side, pc_search: &[BlochRotation]) -> Result<SvExtremes> {
    if pc_search.is_empty() {
        return Err(Error::param("pc_search", "at least one controller setting is required"));
    }
    let rho = source.to_density_matrix()?;
    let reduced = rho.partial_trace(arm);
    let mut best: Option<SvExtremes> = None;
    for pc in pc_search {
        let sv = reduced.rotate(&pc.unitary()?).linear_polarization_degree();
        best = Some(match best {
            None => SvExtremes {
                sv_max: sv,
                sv_min: sv,
                argmax_pc: *pc,
                argmin_pc: *pc,
            },
            Some(mut b) => {
                if sv > b.sv_max {
                    b.sv_max = sv;
                    b.argmax_pc = *pc;
                }
                if sv < b.sv_min {
                    b.sv_min = sv;
                    b.argmin_pc = *pc;
                }
                b
            }
        });
    }
    Ok(best.expect("nonempty search set"))
}

/// Identity plus half-turns about `n` axes spread over the sphere by a
/// Fibonacci lattice. A half-turn about `u` sends the Stokes vector `s` to
/// `2(u.s)u - s`, so the set reaches every output direction to within the
/// lattice spacing.
pub fn default_pc_grid(n: usize) -> Vec<BlochRotation> {
    let golden = PI * (3.0 - 5.0.sqrt());
    let mut grid = Vec::with_capacity(n + 1);
    grid.push(BlochRotation::IDENTITY);
    for i in 0..n {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let (s, c) = (golden * i as f64).sin_cos();
        grid.push(BlochRotation {
            axis: [r * c, r * s, z],
            angle_deg: 180.0,
        });
    }
    grid
}

/// Number of half-turn axes in the default controller search.
pub const DEFAULT_PC_GRID_SIZE: usize = 400;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bell_state, mix, werner};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn all_settings() -> Vec<(Axis, Axis)> {
        let mut out = Vec::new();
        for a in Axis::ALL {
            for b in Axis::ALL {
                out.push((a, b));
            }
        }
        out
    }

    fn ideal(rho: &DensityMatrix) -> BasisCounts {
        BasisCounts::expected(rho, &all_settings(), 1e5)
    }

    fn raw(entries: &[(Axis, Axis, f64)]) -> BasisCounts {
        let mut c = BasisCounts::new();
        for &(a, b, n) in entries {
            c.insert(a, b, n, 1.0).unwrap();
        }
        c
    }

    #[test]
    fn visibility_examples() {
        let c = raw(&[(Axis::H, Axis::H, 5000.0), (Axis::H, Axis::V, 0.0)]);
        assert_eq!(visibility(&c, Axis::H).unwrap(), 1.0);
        let c = raw(&[(Axis::H, Axis::H, 70.0), (Axis::H, Axis::V, 70.0)]);
        assert_eq!(visibility(&c, Axis::H).unwrap(), 0.0);
        let c = ideal(&werner(0.9).unwrap());
        assert_abs_diff_eq!(visibility(&c, Axis::H).unwrap(), 0.9, epsilon = 1e-12);
        let c = raw(&[(Axis::H, Axis::H, 0.0), (Axis::H, Axis::V, 0.0)]);
        assert!(matches!(visibility(&c, Axis::H), Err(Error::ZeroDenominator(_))));
        assert!(matches!(visibility(&c, Axis::D), Err(Error::MissingSettings(_))));
    }

    #[test]
    fn different_durations_are_normalized() {
        let mut c = BasisCounts::new();
        c.insert(Axis::H, Axis::H, 2000.0, 2.0).unwrap();
        c.insert(Axis::H, Axis::V, 1000.0, 1.0).unwrap();
        assert_eq!(visibility(&c, Axis::H).unwrap(), 0.0);
    }

    #[test]
    fn average_visibility_examples() {
        let c = ideal(&bell_state(BellKind::PhiPlus));
        assert_abs_diff_eq!(average_visibility(&c, Axis::H, BellKind::PhiPlus).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(average_visibility(&c, Axis::D, BellKind::PhiPlus).unwrap(), 1.0, epsilon = 1e-12);
        let c = ideal(&werner(0.84).unwrap());
        assert_abs_diff_eq!(average_visibility(&c, Axis::D, BellKind::PhiPlus).unwrap(), 0.84, epsilon = 1e-12);
        for kind in BellKind::ALL {
            let c = ideal(&bell_state(kind));
            for basis in [Axis::H, Axis::D, Axis::R] {
                assert_abs_diff_eq!(average_visibility(&c, basis, kind).unwrap(), 1.0, epsilon = 1e-12);
            }
        }
        let mut c = raw(&[(Axis::H, Axis::H, 1.0), (Axis::H, Axis::V, 0.0), (Axis::V, Axis::V, 1.0)]);
        let err = average_visibility(&c, Axis::H, BellKind::PhiPlus).unwrap_err();
        assert_eq!(err, Error::MissingSettings("VH".into()));
        c.insert(Axis::V, Axis::H, 0.0, 1.0).unwrap();
        assert_eq!(average_visibility(&c, Axis::H, BellKind::PsiPlus).unwrap(), -1.0);
    }

    #[test]
    fn qber_examples() {
        assert_abs_diff_eq!(qber(&ideal(&bell_state(BellKind::PhiPlus)), BellKind::PhiPlus).unwrap(), 0.0, epsilon = 1e-12);
        let uniform = raw(&linear_basis_settings().into_iter().map(|(a, b)| (a, b, 10.0)).collect::<Vec<_>>());
        assert_eq!(qber(&uniform, BellKind::PhiPlus).unwrap(), 0.5);
        assert_abs_diff_eq!(qber(&ideal(&werner(0.94).unwrap()), BellKind::PhiPlus).unwrap(), 0.03, epsilon = 1e-12);
        for kind in BellKind::ALL {
            assert_abs_diff_eq!(qber(&ideal(&bell_state(kind)), kind).unwrap(), 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(qber(&ideal(&bell_state(BellKind::PsiMinus)), BellKind::PhiPlus).unwrap(), 1.0, epsilon = 1e-12);
    }

    /// Direct transcription of the entropy sum with Alice fixed and Bob scanning.
    fn entropy_oracle(rho: &DensityMatrix) -> f64 {
        let h = |p: f64| if p <= 0.0 || p >= 1.0 { 0.0 } else { -p * p.log2() - (1.0 - p) * (1.0 - p).log2() };
        let p = |a, b| rho.coincidence_probability(a, b);
        let mut total = 0.0;
        for (j, k, l, m) in [
            (Axis::H, Axis::V, Axis::D, Axis::A),
            (Axis::V, Axis::H, Axis::D, Axis::A),
            (Axis::D, Axis::A, Axis::H, Axis::V),
            (Axis::A, Axis::D, Axis::H, Axis::V),
        ] {
            total += 1.0 - h(p(j, j) / (p(j, j) + p(j, k)));
            total += h(p(j, l) / (p(j, l) + p(j, m)));
        }
        total
    }

    #[test]
    fn entropy_examples() {
        for kind in BellKind::ALL {
            let c = ideal(&bell_state(kind));
            for side in [Side::A, Side::B] {
                let r = coincidence_entropies(&c, side).unwrap();
                assert_abs_diff_eq!(r.total, 8.0, epsilon = 1e-9);
                for i in 0..4 {
                    assert_abs_diff_eq!(r.h_same[i], 1.0, epsilon = 1e-9);
                    assert_abs_diff_eq!(r.h_cross[i], 1.0, epsilon = 1e-9);
                }
            }
        }
        let r = coincidence_entropies(&ideal(&DensityMatrix::maximally_mixed()), Side::A).unwrap();
        assert_abs_diff_eq!(r.total, 4.0, epsilon = 1e-12);
        assert!(r.h_same.iter().all(|&h| h.abs() < 1e-12));

        let w = werner(0.92).unwrap();
        let a = coincidence_entropies(&ideal(&w), Side::A).unwrap();
        let b = coincidence_entropies(&ideal(&w), Side::B).unwrap();
        assert_abs_diff_eq!(a.total, b.total, epsilon = 1e-12);
        assert_abs_diff_eq!(a.total, entropy_oracle(&w), epsilon = 1e-12);
    }

    #[test]
    fn entropy_reports_all_missing_settings() {
        let mut c = ideal(&bell_state(BellKind::PhiPlus));
        c.settings.remove(&(Axis::H, Axis::D));
        c.settings.remove(&(Axis::A, Axis::V));
        assert_eq!(
            coincidence_entropies(&c, Side::A).unwrap_err(),
            Error::MissingSettings("HD, AV".into())
        );
        assert_eq!(
            coincidence_entropies(&c, Side::B).unwrap_err(),
            Error::MissingSettings("AV, HD".into())
        );
    }

    #[test]
    fn accidental_subtraction() {
        let mut c = BasisCounts::new();
        c.insert_with_accidentals(Axis::H, Axis::H, 1000.0, 1.0, 50.0).unwrap();
        c.insert_with_accidentals(Axis::H, Axis::V, 40.0, 1.0, 50.0).unwrap();
        let s = c.with_accidentals_subtracted();
        assert_eq!(s.get(Axis::H, Axis::H).unwrap().counts, 950.0);
        assert_eq!(s.get(Axis::H, Axis::V).unwrap().counts, 0.0);
        assert_eq!(visibility(&s, Axis::H).unwrap(), 1.0);
    }

    #[test]
    fn singles_visibility_examples() {
        let angles: Vec<f64> = (0..=8).map(|i| i as f64 * 22.5).collect();
        let flat = SinglesScan {
            arm: Side::A,
            samples: angles.iter().map(|&a| (a, 500.0)).collect(),
            pc_setting: "id".into(),
        };
        assert_abs_diff_eq!(single_photon_visibility(&flat).unwrap(), 0.0, epsilon = 1e-12);

        let polarized = SinglesScan::expected(Side::A, &QubitState::from_axis(Axis::D), &angles, 1000.0, "id");
        assert_abs_diff_eq!(single_photon_visibility(&polarized).unwrap(), 1.0, epsilon = 1e-9);

        let source = mix(
            &[
                bell_state(BellKind::PhiPlus),
                DensityMatrix::product(&QubitState::from_axis(Axis::H), &QubitState::from_axis(Axis::H)),
            ],
            &[0.9, 0.1],
        )
        .unwrap();
        let scan = SinglesScan::expected(Side::A, &source.partial_trace(Side::A), &angles, 1000.0, "id");
        assert_abs_diff_eq!(single_photon_visibility(&scan).unwrap(), 0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(single_photon_visibility_of(&source, Side::A, &Mat2::identity()), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn singles_scan_validation() {
        let narrow = SinglesScan {
            arm: Side::B,
            samples: vec![(0.0, 1.0), (30.0, 2.0), (60.0, 3.0), (90.0, 2.0), (120.0, 1.0)],
            pc_setting: String::new(),
        };
        assert!(single_photon_visibility(&narrow).is_err());
        let few = SinglesScan {
            arm: Side::B,
            samples: vec![(0.0, 1.0), (0.0, 2.0), (90.0, 3.0), (180.0, 2.0)],
            pc_setting: String::new(),
        };
        assert!(single_photon_visibility(&few).is_err());
        let zero = SinglesScan {
            arm: Side::B,
            samples: (0..5).map(|i| (i as f64 * 45.0, 0.0)).collect(),
            pc_setting: String::new(),
        };
        assert_eq!(single_photon_visibility(&zero).unwrap_err(), Error::NoCounts);
    }

    #[test]
    fn visibility_curve_examples() {
        let angles: Vec<f64> = (0..16).map(|i| i as f64 * 180.0 / 16.0).collect();
        let cos2: Vec<_> = angles.iter().map(|&b| (0.0, b, 1000.0 * b.to_radians().cos().powi(2))).collect();
        let fit = visibility_curve(&cos2).unwrap();
        assert!(!fit.degenerate);
        assert!((fit.visibility - 1.0).abs() < 1e-6);
        assert_abs_diff_eq!(fit.fit.phase_deg, 0.0, epsilon = 1e-9);

        let flat: Vec<_> = angles.iter().map(|&b| (0.0, b, 123.0)).collect();
        let fit = visibility_curve(&flat).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.visibility, 0.0);

        // Alice's polarizer at 30°, Bob's rotated; werner Born probabilities.
        let w = werner(0.9).unwrap();
        let pts: Vec<_> = angles
            .iter()
            .map(|&b| {
                let p = w.joint_probability(&crate::state::linear_polarizer(30.0), &crate::state::linear_polarizer(b));
                (30.0, b, 1e5 * p)
            })
            .collect();
        assert!((visibility_curve(&pts).unwrap().visibility - 0.9).abs() < 0.02);
        assert!(visibility_curve(&pts[..7]).is_err());
    }

    #[test]
    fn sv_extremize_examples() {
        let grid = default_pc_grid(DEFAULT_PC_GRID_SIZE);
        assert!(grid.len() >= 200);
        let r = sv_extremize(&SourceStateModel::pure(BellKind::PhiPlus), Side::A, &grid).unwrap();
        assert!(r.sv_max < 1e-12 && r.sv_min < 1e-12);
        for p in [0.0, 0.3, 0.8] {
            let mut s = SourceStateModel::pure(BellKind::PhiPlus);
            s.bell_fraction = p;
            s.depolarized_fraction = 1.0 - p;
            let r = sv_extremize(&s, Side::B, &grid).unwrap();
            assert!(r.sv_max < 1e-12, "{p}");
        }
        let mut s = SourceStateModel::pure(BellKind::PhiPlus);
        s.bell_fraction = 0.85;
        s.impurity_fraction = 0.15;
        s.impurity_stokes_a = [0.0, 0.0, 1.0];
        let r = sv_extremize(&s, Side::A, &grid).unwrap();
        assert!((r.sv_max - 0.15).abs() < 1e-3, "{}", r.sv_max);
        assert!(r.sv_min < 1e-12);
        assert_eq!(r.argmin_pc, BlochRotation::IDENTITY);
        assert!(sv_extremize(&s, Side::A, &[]).is_err());
    }

    #[test]
    fn heralding_from_counted_record() {
        let rec = CountsRecord {
            singles_a: 100_000,
            singles_b: 100_000,
            coincidences: 5000,
            duration_s: 1.0,
            window_s: 0.0,
            accidental_estimate: 0.0,
        };
        assert_abs_diff_eq!(heralding_from_counts(&rec, 0.1, 0.1).unwrap().value, 0.5, epsilon = 1e-12);
    }

    fn random_state() -> impl Strategy<Value = DensityMatrix> {
        proptest::collection::vec(-1.0f64..1.0, 32).prop_map(|v| {
            let mut g = crate::linalg::Mat4::zeros();
            for i in 0..4 {
                for j in 0..4 {
                    g.0[i][j] = crate::linalg::C64::new(v[8 * i + 2 * j], v[8 * i + 2 * j + 1]);
                }
            }
            let m = g * g.adjoint();
            let t = m.trace().re;
            DensityMatrix::project_psd(&m.scale(1.0 / t)).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn swapping_counts_negates_visibility(a in 0.0f64..1e6, b in 0.0f64..1e6) {
            prop_assume!(a + b > 0.0);
            let v = visibility(&raw(&[(Axis::D, Axis::D, a), (Axis::D, Axis::A, b)]), Axis::D).unwrap();
            let w = visibility(&raw(&[(Axis::D, Axis::D, b), (Axis::D, Axis::A, a)]), Axis::D).unwrap();
            prop_assert!((v + w).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&v));
        }

        #[test]
        fn metrics_are_scale_invariant(rho in random_state(), c in 1e-3f64..1e3) {
            let base = ideal(&rho);
            let scaled = base.scaled(c);
            for j in [Axis::H, Axis::D, Axis::R] {
                prop_assert!((visibility(&base, j).unwrap() - visibility(&scaled, j).unwrap()).abs() < 1e-9);
            }
            prop_assert!((qber(&base, BellKind::PhiPlus).unwrap() - qber(&scaled, BellKind::PhiPlus).unwrap()).abs() < 1e-9);
            let e1 = coincidence_entropies(&base, Side::A).unwrap().total;
            let e2 = coincidence_entropies(&scaled, Side::A).unwrap().total;
            prop_assert!((e1 - e2).abs() < 1e-9);
        }

        #[test]
        fn entropy_bounded_by_eight(rho in random_state()) {
            let c = ideal(&rho);
            for side in [Side::A, Side::B] {
                let r = coincidence_entropies(&c, side).unwrap();
                prop_assert!(r.total <= 8.0 + 1e-12 && r.total >= 0.0);
                for i in 0..4 {
                    prop_assert!((0.0..=1.0).contains(&r.h_same[i]));
                    prop_assert!((0.0..=1.0).contains(&r.h_cross[i]));
                }
            }
            prop_assert!((coincidence_entropies(&c, Side::A).unwrap().total - entropy_oracle(&rho)).abs() < 1e-9);
        }

        #[test]
        fn qber_matches_mean_visibility_when_balanced(p in 0.0f64..1.0) {
            // Werner states give equal same-basis totals in every setting.
            let c = ideal(&werner(p).unwrap());
            let mean = (average_visibility(&c, Axis::H, BellKind::PhiPlus).unwrap()
                + average_visibility(&c, Axis::D, BellKind::PhiPlus).unwrap()) / 2.0;
            prop_assert!((qber(&c, BellKind::PhiPlus).unwrap() - (1.0 - mean) / 2.0).abs() < 1e-12);
        }

        #[test]
        fn singles_fit_matches_stokes(s in proptest::array::uniform3(-0.57f64..0.57), shift in 0.0f64..90.0) {
            let q = QubitState::from_stokes(s).unwrap();
            let angles: Vec<f64> = (0..12).map(|i| shift + i as f64 * 180.0 / 11.0).collect();
            let scan = SinglesScan::expected(Side::A, &q, &angles, 1e4, "");
            let sv = single_photon_visibility(&scan).unwrap();
            prop_assert!((sv - q.linear_polarization_degree()).abs() < 1e-9);
        }
    }
}
