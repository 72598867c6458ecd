//! TOML run configuration.
//!
//! Keys carry their unit in the name (`dead_time_ns`, `window_ps`, ...).
//! Unknown keys are rejected, and every error points at a line of the file
//! when one can be identified.

use std::fmt;
use std::path::PathBuf;

use paircert_core::analytic::{db_to_transmissivity, DetectorParams, RateSet};
use paircert_core::metrics::DEFAULT_PC_GRID_SIZE;
use paircert_core::sim::{ExperimentConfig, FiberSpec, ScanAxis};
use paircert_core::state::{Axis, BellKind, BlochRotation, Side, SourceStateModel};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Names of the configurations compiled into the binary.
pub const PRESET_NAMES: [&str; 3] = ["high", "medium", "low"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "high" => Some(include_str!("../presets/high.toml")),
        "medium" => Some(include_str!("../presets/medium.toml")),
        "low" => Some(include_str!("../presets/low.toml")),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub source: SourceSection,
    #[serde(default)]
    pub channel_a: ChannelSection,
    #[serde(default)]
    pub channel_b: ChannelSection,
    /// Used for both arms unless `detector_b` is given.
    pub detector: DetectorSection,
    pub detector_b: Option<DetectorSection>,
    #[serde(default)]
    pub coincidence: CoincidenceSection,
    pub acquisition: AcquisitionSection,
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub histogram: HistogramSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub tomography: TomographySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default = "default_bell")]
    pub bell_state: BellKind,
    #[serde(default = "one")]
    pub bell_fraction: f64,
    #[serde(default)]
    pub depolarized_fraction: f64,
    #[serde(default)]
    pub impurity_fraction: f64,
    #[serde(default)]
    pub impurity_stokes_a: [f64; 3],
    #[serde(default)]
    pub impurity_stokes_b: [f64; 3],
    #[serde(default)]
    pub pre_rotation_a: BlochRotation,
    #[serde(default)]
    pub pre_rotation_b: BlochRotation,
    pub pair_rate_hz: f64,
    pub total_rate_hz: f64,
    #[serde(default)]
    pub bandwidth_nm: f64,
}

fn default_bell() -> BellKind {
    BellKind::PhiPlus
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default)]
    pub attenuation_db: f64,
    #[serde(default)]
    pub fiber_length_km: f64,
    #[serde(default)]
    pub dispersion_ps_per_km_nm: f64,
    /// Polarizer in front of the detector; absent means none.
    pub analyzer: Option<Axis>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub eta_q: f64,
    #[serde(default)]
    pub dead_time_ns: f64,
    #[serde(default)]
    pub dark_rate_hz: f64,
    #[serde(default)]
    pub afterpulse_prob: f64,
    #[serde(default)]
    pub afterpulse_tau_ns: f64,
    #[serde(default)]
    pub jitter_sigma_ps: f64,
}

impl DetectorSection {
    pub fn params(&self) -> DetectorParams {
        DetectorParams {
            eta_q: self.eta_q,
            dead_time_s: self.dead_time_ns * 1e-9,
            dark_rate_hz: self.dark_rate_hz,
            afterpulse_prob: self.afterpulse_prob,
            afterpulse_tau_s: self.afterpulse_tau_ns * 1e-9,
            jitter_sigma_s: self.jitter_sigma_ps * 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceSection {
    #[serde(default = "default_window")]
    pub window_ps: u64,
    #[serde(default)]
    pub offset_ps: i64,
}

fn default_window() -> u64 {
    1000
}

impl Default for CoincidenceSection {
    fn default() -> Self {
        CoincidenceSection {
            window_ps: default_window(),
            offset_ps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionSection {
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub axis1: AxisSection,
    pub axis2: AxisSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSection {
    #[serde(default = "default_bin")]
    pub bin_width_ps: u64,
    #[serde(default = "default_range")]
    pub range_ps: u64,
    /// Moving-average half width applied before the FWHM search.
    #[serde(default = "default_smooth")]
    pub smooth_bins: usize,
}

fn default_bin() -> u64 {
    100
}

fn default_range() -> u64 {
    10_000
}

fn default_smooth() -> usize {
    1
}

impl Default for HistogramSection {
    fn default() -> Self {
        HistogramSection {
            bin_width_ps: default_bin(),
            range_ps: default_range(),
            smooth_bins: default_smooth(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    /// Acquisition time per analyzer setting; defaults to the acquisition
    /// duration.
    pub duration_per_setting_s: Option<f64>,
    /// Bell state the correlations are judged against; defaults to the
    /// source's.
    pub expected_state: Option<BellKind>,
    #[serde(default)]
    pub subtract_accidentals: bool,
    #[serde(default = "default_sv_arm")]
    pub sv_arm: Side,
    #[serde(default = "default_grid")]
    pub pc_grid_size: usize,
}

fn default_sv_arm() -> Side {
    Side::A
}

fn default_grid() -> usize {
    DEFAULT_PC_GRID_SIZE
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            duration_per_setting_s: None,
            expected_state: None,
            subtract_accidentals: false,
            sv_arm: default_sv_arm(),
            pc_grid_size: default_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingSet {
    /// `{H, V, D, R}` on each arm.
    Standard,
    /// All six axes on each arm.
    Overcomplete,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    #[serde(default = "default_settings")]
    pub settings: SettingSet,
    /// When set, counts are Poisson draws around `shots * p(a, b)` instead of
    /// event-level simulation.
    pub shots_per_setting: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_settings() -> SettingSet {
    SettingSet::Standard
}

fn default_max_iter() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for TomographySection {
    fn default() -> Self {
        TomographySection {
            settings: default_settings(),
            shots_per_setting: None,
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// A parsed and validated configuration together with its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub experiment: ExperimentConfig,
    pub scan: Option<(ScanAxis, ScanAxis)>,
    /// SHA-256 of the configuration text, hex encoded.
    pub sha256: String,
    /// File path or `preset:<name>`.
    pub origin: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside `[section]` (top level for an empty section
/// name), falling back to the section header.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        let in_section = current == section || current.starts_with(&format!("{section}."));
        if in_section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn err(&self, section: &str, key: &str, message: impl fmt::Display) -> ConfigError {
        let name = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        ConfigError::at(key_line(self.text, section, key), format!("`{name}` {message}"))
    }

    fn non_negative(&self, section: &str, key: &str, v: f64) -> Result<(), ConfigError> {
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(self.err(section, key, format!("must be finite and >= 0, got {v}")))
        }
    }

    fn unit(&self, section: &str, key: &str, v: f64) -> Result<(), ConfigError> {
        if v.is_finite() && (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(self.err(section, key, format!("must lie in [0, 1], got {v}")))
        }
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<(), ConfigError> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(self.err(section, key, format!("must be > 0, got {v}")))
        }
    }

    fn source(&self, s: &SourceSection) -> Result<SourceStateModel, ConfigError> {
        let sec = "source";
        self.unit(sec, "bell_fraction", s.bell_fraction)?;
        self.unit(sec, "depolarized_fraction", s.depolarized_fraction)?;
        self.unit(sec, "impurity_fraction", s.impurity_fraction)?;
        let total = s.bell_fraction + s.depolarized_fraction + s.impurity_fraction;
        if (total - 1.0).abs() > 1e-9 {
            return Err(self.err(
                sec,
                "bell_fraction",
                format!("+ depolarized_fraction + impurity_fraction must equal 1, got {total}"),
            ));
        }
        for (key, stokes) in [("impurity_stokes_a", s.impurity_stokes_a), ("impurity_stokes_b", s.impurity_stokes_b)] {
            let norm = stokes.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm <= 1.0 + 1e-12) {
                return Err(self.err(sec, key, format!("must have length <= 1, got {norm}")));
            }
        }
        for (key, rot) in [("pre_rotation_a", s.pre_rotation_a), ("pre_rotation_b", s.pre_rotation_b)] {
            if let Err(e) = rot.unitary() {
                return Err(self.err(sec, key, e));
            }
        }
        self.non_negative(sec, "pair_rate_hz", s.pair_rate_hz)?;
        self.non_negative(sec, "total_rate_hz", s.total_rate_hz)?;
        if s.pair_rate_hz > s.total_rate_hz {
            return Err(self.err(sec, "pair_rate_hz", "must not exceed total_rate_hz"));
        }
        self.non_negative(sec, "bandwidth_nm", s.bandwidth_nm)?;
        Ok(SourceStateModel {
            bell_state: s.bell_state,
            bell_fraction: s.bell_fraction,
            depolarized_fraction: s.depolarized_fraction,
            impurity_fraction: s.impurity_fraction,
            impurity_stokes_a: s.impurity_stokes_a,
            impurity_stokes_b: s.impurity_stokes_b,
            pre_rotation_a: s.pre_rotation_a,
            pre_rotation_b: s.pre_rotation_b,
        })
    }

    fn channel(&self, sec: &str, c: &ChannelSection) -> Result<(f64, FiberSpec), ConfigError> {
        self.non_negative(sec, "attenuation_db", c.attenuation_db)?;
        self.non_negative(sec, "fiber_length_km", c.fiber_length_km)?;
        self.non_negative(sec, "dispersion_ps_per_km_nm", c.dispersion_ps_per_km_nm)?;
        let gamma = db_to_transmissivity(c.attenuation_db).map_err(|e| self.err(sec, "attenuation_db", e))?;
        Ok((
            gamma,
            FiberSpec {
                length_km: c.fiber_length_km,
                dispersion_ps_per_km_nm: c.dispersion_ps_per_km_nm,
            },
        ))
    }

    fn detector(&self, sec: &str, d: &DetectorSection) -> Result<DetectorParams, ConfigError> {
        self.unit(sec, "eta_q", d.eta_q)?;
        self.non_negative(sec, "dead_time_ns", d.dead_time_ns)?;
        self.non_negative(sec, "dark_rate_hz", d.dark_rate_hz)?;
        self.non_negative(sec, "afterpulse_prob", d.afterpulse_prob)?;
        if d.afterpulse_prob >= 1.0 {
            return Err(self.err(sec, "afterpulse_prob", "must be < 1"));
        }
        self.non_negative(sec, "afterpulse_tau_ns", d.afterpulse_tau_ns)?;
        self.non_negative(sec, "jitter_sigma_ps", d.jitter_sigma_ps)?;
        Ok(d.params())
    }

    fn axis(&self, sec: &str, a: &AxisSection) -> Result<ScanAxis, ConfigError> {
        let axis = ScanAxis::new(&a.parameter, a.values.clone()).map_err(|_| {
            self.err(
                sec,
                "parameter",
                format!(
                    "names an unknown parameter `{}` (expected one of {})",
                    a.parameter,
                    paircert_core::sim::parameter_names()
                ),
            )
        })?;
        if a.values.is_empty() {
            return Err(self.err(sec, "values", "must not be empty"));
        }
        if let Some(v) = a.values.iter().find(|v| !v.is_finite()) {
            return Err(self.err(sec, "values", format!("must be finite, got {v}")));
        }
        Ok(axis)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start));
            ConfigError::at(line, e.message().trim().to_string())
        })
    }

    /// Parses and validates every section; nothing is computed before this
    /// succeeds.
    pub fn load(text: &str, origin: impl Into<String>) -> Result<LoadedConfig, ConfigError> {
        let config = RunConfig::parse(text)?;
        let check = Checker { text };
        let state = check.source(&config.source)?;
        let (gamma_a, fiber_a) = check.channel("channel_a", &config.channel_a)?;
        let (gamma_b, fiber_b) = check.channel("channel_b", &config.channel_b)?;
        let detector_a = check.detector("detector", &config.detector)?;
        let detector_b = match &config.detector_b {
            Some(d) => check.detector("detector_b", d)?,
            None => detector_a,
        };
        check.positive("acquisition", "duration_s", config.acquisition.duration_s)?;
        if config.histogram.bin_width_ps == 0 {
            return Err(check.err("histogram", "bin_width_ps", "must be > 0"));
        }
        if config.histogram.range_ps == 0 {
            return Err(check.err("histogram", "range_ps", "must be > 0"));
        }
        if let Some(d) = config.metrics.duration_per_setting_s {
            check.positive("metrics", "duration_per_setting_s", d)?;
        }
        if config.metrics.pc_grid_size == 0 {
            return Err(check.err("metrics", "pc_grid_size", "must be > 0"));
        }
        if let Some(s) = config.tomography.shots_per_setting {
            check.positive("tomography", "shots_per_setting", s)?;
        }
        check.positive("tomography", "tol", config.tomography.tol)?;
        let scan = match &config.scan {
            Some(s) => Some((check.axis("scan.axis1", &s.axis1)?, check.axis("scan.axis2", &s.axis2)?)),
            None => None,
        };
        let experiment = ExperimentConfig {
            state,
            rates: RateSet {
                pair_rate_hz: config.source.pair_rate_hz,
                total_rate_hz: config.source.total_rate_hz,
                transmissivity_a: gamma_a,
                transmissivity_b: gamma_b,
                window_s: config.coincidence.window_ps as f64 * 1e-12,
            },
            detector_a,
            detector_b,
            fiber_a,
            fiber_b,
            source_bandwidth_nm: config.source.bandwidth_nm,
            analyzer_a: config.channel_a.analyzer,
            analyzer_b: config.channel_b.analyzer,
            duration_s: config.acquisition.duration_s,
            seed: config.seed,
        };
        experiment.validate().map_err(|e| ConfigError::at(None, e.to_string()))?;
        Ok(LoadedConfig {
            config,
            experiment,
            scan,
            sha256: sha256_hex(text.as_bytes()),
            origin: origin.into(),
        })
    }

    pub fn preset(name: &str) -> Result<LoadedConfig, ConfigError> {
        let text = preset_text(name).ok_or_else(|| {
            ConfigError::at(None, format!("unknown preset `{name}` (expected one of {})", PRESET_NAMES.join(", ")))
        })?;
        RunConfig::load(text, format!("preset:{name}"))
    }
}

impl LoadedConfig {
    pub fn seed(&self) -> u64 {
        self.experiment.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.experiment.seed = seed;
        self.config.seed = seed;
    }

    pub fn duration_per_setting_s(&self) -> f64 {
        self.config.metrics.duration_per_setting_s.unwrap_or(self.experiment.duration_s)
    }

    pub fn expected_state(&self) -> BellKind {
        self.config.metrics.expected_state.unwrap_or(self.experiment.state.bell_state)
    }
}

/// Parses a time such as `500`, `500ps`, `1.5ns`, `2us` or `2µs` into whole
/// picoseconds. A bare number is taken as picoseconds.
pub fn parse_time_ps(text: &str) -> Result<i64, String> {
    let t = text.trim();
    let (number, scale) = [("ps", 1.0), ("ns", 1e3), ("us", 1e6), ("µs", 1e6), ("ms", 1e9)]
        .into_iter()
        .find_map(|(suffix, scale)| t.strip_suffix(suffix).map(|n| (n, scale)))
        .unwrap_or((t, 1.0));
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("`{text}` is not a time (examples: 500ps, 1.5ns, 2us)"))?;
    let ps = value * scale;
    if !ps.is_finite() || ps.abs() > 9.0e18 {
        return Err(format!("`{text}` is out of range"));
    }
    let rounded = ps.round();
    if (ps - rounded).abs() > 1e-6 * ps.abs().max(1.0) {
        return Err(format!("`{text}` is not a whole number of picoseconds"));
    }
    Ok(rounded as i64)
}

/// [`parse_time_ps`] restricted to values `>= 0`.
pub fn parse_span_ps(text: &str) -> Result<u64, String> {
    let ps = parse_time_ps(text)?;
    u64::try_from(ps).map_err(|_| format!("`{text}` must not be negative"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[source]
pair_rate_hz = 1e5
total_rate_hz = 2e5

[detector]
eta_q = 0.5

[acquisition]
duration_s = 1.0
";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::load(MINIMAL, "test").unwrap();
        assert_eq!(c.experiment.state, SourceStateModel::pure(BellKind::PhiPlus));
        assert_eq!(c.experiment.rates.window_s, 1e-9);
        assert_eq!(c.experiment.detector_a, c.experiment.detector_b);
        assert_eq!(c.experiment.rates.transmissivity_a, 1.0);
        assert_eq!(c.config.tomography.settings, SettingSet::Standard);
        assert!(c.scan.is_none());
        assert_eq!(c.sha256, sha256_hex(MINIMAL.as_bytes()));
    }

    #[test]
    fn units_are_converted() {
        let text = MINIMAL.replace("eta_q = 0.5", "eta_q = 0.5\ndead_time_ns = 50\njitter_sigma_ps = 40\nafterpulse_tau_ns = 100")
            + "[channel_b]\nattenuation_db = 10\n";
        let c = RunConfig::load(&text, "test").unwrap();
        assert!((c.experiment.detector_a.dead_time_s - 50e-9).abs() < 1e-20);
        assert!((c.experiment.detector_b.jitter_sigma_s - 40e-12).abs() < 1e-24);
        assert!((c.experiment.detector_b.afterpulse_tau_s - 100e-9).abs() < 1e-20);
        assert!((c.experiment.rates.transmissivity_b - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = MINIMAL.replace("eta_q = 0.5", "eta_q = 0.5\ndead_time_s = 1e-7");
        let e = RunConfig::load(&text, "test").unwrap_err();
        assert_eq!(e.line, Some(7));
        assert!(e.message.contains("dead_time_s"), "{e}");
    }

    #[test]
    fn syntax_error_reports_its_line() {
        let text = MINIMAL.replace("duration_s = 1.0", "duration_s = = 1.0");
        assert_eq!(RunConfig::load(&text, "test").unwrap_err().line, Some(9));
    }

    #[test]
    fn invalid_value_reports_its_line() {
        let text = MINIMAL.replace("eta_q = 0.5", "eta_q = 1.5");
        let e = RunConfig::load(&text, "test").unwrap_err();
        assert_eq!(e.line, Some(6));
        assert!(e.to_string().starts_with("line 6: `detector.eta_q`"), "{e}");

        let text = MINIMAL.replace("pair_rate_hz = 1e5", "pair_rate_hz = 3e5");
        assert_eq!(RunConfig::load(&text, "test").unwrap_err().line, Some(2));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let text = MINIMAL.replace("[source]", "[source]\nbell_fraction = 0.9");
        let e = RunConfig::load(&text, "test").unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn scan_parameters_are_checked_before_running() {
        let text = format!("{MINIMAL}\n[scan.axis1]\nparameter = \"dead_time_ns\"\nvalues = [1, 2]\n\n[scan.axis2]\nparameter = \"colour\"\nvalues = [0]\n");
        let e = RunConfig::load(&text, "test").unwrap_err();
        assert_eq!(e.line, Some(16), "{e}");
        assert!(e.message.contains("colour"));
    }

    #[test]
    fn presets_load() {
        for name in PRESET_NAMES {
            RunConfig::preset(name).unwrap();
        }
        assert!(RunConfig::preset("perfect").is_err());
    }

    #[test]
    fn time_suffixes() {
        assert_eq!(parse_time_ps("500").unwrap(), 500);
        assert_eq!(parse_time_ps("500ps").unwrap(), 500);
        assert_eq!(parse_time_ps("1.5ns").unwrap(), 1500);
        assert_eq!(parse_time_ps("2us").unwrap(), 2_000_000);
        assert_eq!(parse_time_ps("2µs").unwrap(), 2_000_000);
        assert_eq!(parse_time_ps("-3ns").unwrap(), -3000);
        assert!(parse_time_ps("0.5").is_err());
        assert!(parse_time_ps("fast").is_err());
        assert!(parse_span_ps("-1").is_err());
    }
}
