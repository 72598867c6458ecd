//! The five subcommands. Each writes its files into an output directory and
//! returns the report it wrote.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use paircert_core::analytic::arm_efficiency;
use paircert_core::metrics::{
    average_visibility, average_visibility_standard_error, coincidence_entropies, default_pc_grid, heralding_from_counts, qber,
    single_photon_visibility, sv_extremize, BasisCounts,
};
use paircert_core::sim::{
    count_coincidences, delay_histogram, derive_seed, run_counts, scan_point, seconds_to_ps, simulate, CoincidenceCounter,
    CountsRecord, ExperimentConfig, ScanResult,
};
use paircert_core::state::{Axis, BellKind, Side};
use paircert_core::tomography::{
    mle_reconstruct, overcomplete_settings, qst_metrics, simulate_settings, standard_settings, state_visibility, MleOptions,
    TomographyCounts,
};
use rayon::prelude::*;

use crate::config::{sha256_hex, LoadedConfig, RunConfig, SettingSet};
use crate::formats::{self, TimestampWriter};
use crate::report::{
    render_table, to_json, AnalysisReport, CountsSummary, DirectMetrics, HistogramSummary, MetricsReport, Provenance, QstSummary,
    TomographyReport,
};
use crate::{CliError, Result};

/// Output directory used when neither `--out`, the environment nor the
/// config names one.
pub const DEFAULT_OUT_DIR: &str = "paircert-out";

/// Loads a config file or a bundled preset and applies a seed override.
pub fn load_config(path: Option<&Path>, preset: Option<&str>, seed: Option<u64>) -> Result<LoadedConfig> {
    let mut loaded = match (path, preset) {
        (Some(p), None) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::load(&text, p.display().to_string()).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        (None, Some(name)) => RunConfig::preset(name).map_err(|e| CliError::Config(e.to_string()))?,
        (Some(_), Some(_)) => return Err(CliError::Config("give either a config file or a preset, not both".into())),
        (None, None) => return Err(CliError::Config("a config file or a preset is required".into())),
    };
    if let Some(seed) = seed {
        loaded.set_seed(seed);
    }
    Ok(loaded)
}

/// `--out` (or its environment variable), else the config's `[output] dir`,
/// else [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(flag: Option<PathBuf>, config: Option<&LoadedConfig>) -> PathBuf {
    flag.or_else(|| config.and_then(|c| c.config.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn with_file<T>(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<T>) -> Result<T> {
    let (path, mut w) = create(dir, name)?;
    let out = f(&mut w).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(out)
}

fn config_provenance(cfg: &LoadedConfig) -> Provenance {
    let mut p = Provenance::new(cfg.origin.clone());
    p.config_sha256 = Some(cfg.sha256.clone());
    p.seed = Some(cfg.seed());
    p.window_ps = Some(cfg.config.coincidence.window_ps);
    p
}

fn read_input(path: &Path) -> Result<(Vec<u8>, String)> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let hash = sha256_hex(&bytes);
    Ok((bytes, hash))
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// `simulate`: writes `timestamps.csv` and `counts.json`.
pub fn simulate_cmd(cfg: &LoadedConfig, out: &Path) -> Result<CountsSummary> {
    let exp = &cfg.experiment;
    let offset_ps = cfg.config.coincidence.offset_ps;
    let window_ps = seconds_to_ps(exp.rates.window_s);
    let stream = simulate(exp)?;
    let duration_ps = stream.duration_ps();
    let mut counter = CoincidenceCounter::new(window_ps, offset_ps);
    let (path, file) = create(out, "timestamps.csv")?;
    let mut writer = TimestampWriter::new(file, duration_ps).map_err(|e| io_err(&path, e))?;
    for event in stream {
        writer.push(&event).map_err(|e| io_err(&path, e))?;
        counter.push(event)?;
    }
    writer.finish().map_err(|e| io_err(&path, e))?;
    let counts = counter.finish(duration_ps);
    let mut provenance = config_provenance(cfg);
    provenance.duration_per_setting_s = Some(exp.duration_s);
    let summary = CountsSummary {
        counts,
        window_ps,
        offset_ps,
        net_coincidences: counts.net_coincidences(),
        provenance,
    };
    write_text(out, "counts.json", &to_json(&summary))?;
    Ok(summary)
}

/// Counting and histogram settings for `analyze`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub window_ps: u64,
    pub offset_ps: i64,
    pub bin_width_ps: u64,
    pub range_ps: u64,
    pub smooth_bins: usize,
    /// Remove the accidental level from every histogram bin before the
    /// width search, and report it.
    pub subtract_accidentals: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            window_ps: 1000,
            offset_ps: 0,
            bin_width_ps: 100,
            range_ps: 10_000,
            smooth_bins: 1,
            subtract_accidentals: false,
        }
    }
}

impl AnalyzeOptions {
    pub fn from_config(cfg: &LoadedConfig) -> Self {
        AnalyzeOptions {
            window_ps: cfg.config.coincidence.window_ps,
            offset_ps: cfg.config.coincidence.offset_ps,
            bin_width_ps: cfg.config.histogram.bin_width_ps,
            range_ps: cfg.config.histogram.range_ps,
            smooth_bins: cfg.config.histogram.smooth_bins,
            subtract_accidentals: cfg.config.metrics.subtract_accidentals,
        }
    }
}

/// `analyze`: counts coincidences in a timestamp file and histograms the
/// delays; writes `analysis.json` and `histogram.csv`.
pub fn analyze_cmd(input: &Path, opts: &AnalyzeOptions, out: &Path) -> Result<AnalysisReport> {
    let (bytes, hash) = read_input(input)?;
    let tags = formats::read_timestamps(BufReader::new(&bytes[..])).map_err(|e| data_err(input, e))?;
    let counts = count_coincidences(&tags, opts.window_ps, opts.offset_ps)?;
    let hist = delay_histogram(&tags, opts.bin_width_ps, opts.range_ps)?;
    let floor = if opts.subtract_accidentals {
        hist.accidental_floor(&counts)
    } else {
        0.0
    };
    let mut provenance = Provenance::new(input.display().to_string());
    provenance.input_sha256 = Some(hash);
    provenance.window_ps = Some(opts.window_ps);
    provenance.accidentals_subtracted = opts.subtract_accidentals;
    let report = AnalysisReport {
        summary: CountsSummary {
            counts,
            window_ps: opts.window_ps,
            offset_ps: opts.offset_ps,
            net_coincidences: counts.net_coincidences(),
            provenance,
        },
        histogram: HistogramSummary {
            bin_width_ps: opts.bin_width_ps,
            range_ps: opts.range_ps,
            bins: hist.bins.len(),
            total: hist.total(),
            floor,
            smooth_bins: opts.smooth_bins,
            fwhm_ps: hist.fwhm_ps(floor, opts.smooth_bins),
        },
    };
    with_file(out, "histogram.csv", |w| formats::write_histogram(w, &hist, opts.subtract_accidentals.then_some(floor)))?;
    write_text(out, "analysis.json", &to_json(&report))?;
    Ok(report)
}

/// Heatmap file names, in the order singles A, singles B, coincidences.
pub const SCAN_FILES: [&str; 3] = ["scan_singles_a.csv", "scan_singles_b.csv", "scan_coincidences.csv"];

/// `scan`: runs the `[scan]` grid with cells in parallel; writes one heatmap
/// per observable and `scan.json`.
pub fn scan_cmd(cfg: &LoadedConfig, out: &Path) -> Result<ScanResult> {
    let (axis1, axis2) = cfg
        .scan
        .clone()
        .ok_or_else(|| CliError::Config(format!("{}: the scan command needs a [scan] section", cfg.origin)))?;
    let offset = cfg.config.coincidence.offset_ps;
    let cells: Vec<(usize, usize)> = (0..axis1.values.len())
        .flat_map(|i| (0..axis2.values.len()).map(move |j| (i, j)))
        .collect();
    let records = cells
        .par_iter()
        .map(|&(i, j)| {
            let point = scan_point(&cfg.experiment, &axis1, &axis2, i, j).map_err(|e| {
                CliError::Config(format!("scan cell ({}, {}): {e}", axis1.values[i], axis2.values[j]))
            })?;
            Ok(run_counts(&point, offset)?)
        })
        .collect::<Result<Vec<CountsRecord>>>()?;
    let records = records.chunks(axis2.values.len()).map(<[CountsRecord]>::to_vec).collect();
    let scan = ScanResult { axis1, axis2, records };
    let observables: [fn(&CountsRecord) -> f64; 3] =
        [|r| r.singles_a as f64, |r| r.singles_b as f64, |r| r.coincidences as f64];
    for (name, f) in SCAN_FILES.iter().zip(observables) {
        with_file(out, name, |w| formats::write_heatmap(w, &scan, f))?;
    }
    #[derive(serde::Serialize)]
    struct ScanFile<'a> {
        #[serde(flatten)]
        scan: &'a ScanResult,
        provenance: Provenance,
    }
    let mut provenance = config_provenance(cfg);
    provenance.duration_per_setting_s = Some(cfg.experiment.duration_s);
    write_text(out, "scan.json", &to_json(&ScanFile { scan: &scan, provenance }))?;
    Ok(scan)
}

fn axis_index(a: Axis) -> usize {
    Axis::ALL.iter().position(|&x| x == a).expect("axis listed in ALL")
}

/// Seed of the acquisition at one analyzer setting; `None` means no
/// analyzers. Independent of which other settings are simulated.
pub fn setting_seed(base: u64, setting: Option<(Axis, Axis)>) -> u64 {
    match setting {
        Some((a, b)) => derive_seed(base, axis_index(a) + 1, axis_index(b) + 1),
        None => derive_seed(base, 0, 0),
    }
}

/// Event-level acquisition at one analyzer setting.
pub fn acquire(exp: &ExperimentConfig, setting: Option<(Axis, Axis)>, duration_s: f64, offset_ps: i64) -> Result<CountsRecord> {
    let mut c = exp.clone();
    c.analyzer_a = setting.map(|s| s.0);
    c.analyzer_b = setting.map(|s| s.1);
    c.duration_s = duration_s;
    c.seed = setting_seed(exp.seed, setting);
    Ok(run_counts(&c, offset_ps)?)
}

/// Coincidences at every setting, each from its own simulated acquisition.
pub fn simulate_basis_counts(exp: &ExperimentConfig, settings: &[(Axis, Axis)], duration_s: f64, offset_ps: i64) -> Result<BasisCounts> {
    let records = settings
        .par_iter()
        .map(|&s| acquire(exp, Some(s), duration_s, offset_ps))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = BasisCounts::new();
    for (&(a, b), r) in settings.iter().zip(&records) {
        counts.insert_record(a, b, r)?;
    }
    Ok(counts)
}

/// Visibilities, QBER and coincidence entropies; heralding and single-photon
/// visibility are left empty.
pub fn direct_metrics(counts: &BasisCounts, expected: BellKind) -> Result<DirectMetrics> {
    Ok(DirectMetrics {
        heralding: None,
        v_hv: average_visibility(counts, Axis::H, expected)?,
        v_hv_standard_error: average_visibility_standard_error(counts, Axis::H)?,
        v_da: average_visibility(counts, Axis::D, expected)?,
        v_da_standard_error: average_visibility_standard_error(counts, Axis::D)?,
        qber: qber(counts, expected)?,
        entropy_a: coincidence_entropies(counts, Side::A)?,
        entropy_b: coincidence_entropies(counts, Side::B)?,
        sv_max: None,
        sv_min: None,
        sv_arm: None,
        sv_origin: None,
    })
}

/// Maximum-likelihood reconstruction summarized for the metrics report;
/// `None` when the counts lack the tomography settings.
pub fn qst_summary(counts: &BasisCounts, expected: BellKind, options: MleOptions) -> Result<Option<QstSummary>> {
    let Ok(t) = TomographyCounts::new(counts.clone()) else {
        return Ok(None);
    };
    let result = mle_reconstruct(&t, options)?;
    let signed = |j: Axis| {
        expected.correlation_sign(j) * (state_visibility(&result.rho, j) + state_visibility(&result.rho, j.partner())) / 2.0
    };
    Ok(Some(QstSummary {
        metrics: qst_metrics(&result.rho),
        v_hv: signed(Axis::H),
        v_da: signed(Axis::D),
        converged: result.converged,
        iterations: result.iterations,
        settings: counts.len(),
    }))
}

fn mle_options(cfg: Option<&LoadedConfig>) -> MleOptions {
    cfg.map(|c| MleOptions {
        max_iter: c.config.tomography.max_iter,
        tol: c.config.tomography.tol,
    })
    .unwrap_or_default()
}

/// One source of counts for `metrics`.
#[derive(Debug, Clone)]
pub enum MetricsInput {
    /// Counts are simulated at every analyzer setting.
    Config { label: String, config: Box<LoadedConfig> },
    /// Measured counts, optionally with polarizer scans of the singles.
    Counts {
        label: String,
        counts: PathBuf,
        singles: Option<PathBuf>,
        expected: BellKind,
        sv_arm: Side,
    },
}

fn label_for(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

impl MetricsInput {
    pub fn config(config: LoadedConfig) -> Self {
        let label = match config.origin.strip_prefix("preset:") {
            Some(name) => name.to_string(),
            None => label_for(Path::new(&config.origin)),
        };
        MetricsInput::Config {
            label,
            config: Box::new(config),
        }
    }

    pub fn counts(counts: PathBuf, singles: Option<PathBuf>, expected: BellKind, sv_arm: Side) -> Self {
        MetricsInput::Counts {
            label: label_for(&counts),
            counts,
            singles,
            expected,
            sv_arm,
        }
    }

    fn label(&self) -> &str {
        match self {
            MetricsInput::Config { label, .. } | MetricsInput::Counts { label, .. } => label,
        }
    }
}

fn metrics_from_config(label: &str, cfg: &LoadedConfig, subtract: bool, out: &Path) -> Result<MetricsReport> {
    let exp = &cfg.experiment;
    let offset = cfg.config.coincidence.offset_ps;
    let duration = cfg.duration_per_setting_s();
    let expected = cfg.expected_state();
    let subtract = subtract || cfg.config.metrics.subtract_accidentals;

    let raw = simulate_basis_counts(exp, &overcomplete_settings(), duration, offset)?;
    with_file(out, &format!("counts_{label}.csv"), |w| formats::write_counts(w, &raw))?;
    let counts = if subtract { raw.with_accidentals_subtracted() } else { raw };

    let mut direct = direct_metrics(&counts, expected)?;
    let open = acquire(exp, None, duration, offset)?;
    direct.heralding = heralding_from_counts(
        &open,
        arm_efficiency(&exp.rates, &exp.detector_a, Side::A)?,
        arm_efficiency(&exp.rates, &exp.detector_b, Side::B)?,
    )
    .ok()
    .map(|h| h.value);
    let arm = cfg.config.metrics.sv_arm;
    let sv = sv_extremize(&exp.state, arm, &default_pc_grid(cfg.config.metrics.pc_grid_size))?;
    direct.sv_max = Some(sv.sv_max);
    direct.sv_min = Some(sv.sv_min);
    direct.sv_arm = Some(arm);
    direct.sv_origin = Some("source model".into());

    let mut provenance = config_provenance(cfg);
    provenance.duration_per_setting_s = Some(duration);
    provenance.accidentals_subtracted = subtract;
    Ok(MetricsReport {
        label: label.to_string(),
        expected_state: expected,
        direct,
        qst: qst_summary(&counts, expected, mle_options(Some(cfg)))?,
        provenance,
    })
}

fn metrics_from_counts(
    label: &str,
    path: &Path,
    singles: Option<&Path>,
    expected: BellKind,
    arm: Side,
    subtract: bool,
) -> Result<MetricsReport> {
    let (bytes, hash) = read_input(path)?;
    let raw = formats::read_counts(BufReader::new(&bytes[..])).map_err(|e| data_err(path, e))?;
    let counts = if subtract { raw.with_accidentals_subtracted() } else { raw };
    let mut direct = direct_metrics(&counts, expected).map_err(|e| data_err(path, e))?;
    if let Some(sp) = singles {
        let (bytes, _) = read_input(sp)?;
        let scans = formats::read_singles(BufReader::new(&bytes[..])).map_err(|e| data_err(sp, e))?;
        let values = scans
            .iter()
            .filter(|s| s.arm == arm)
            .map(|s| single_photon_visibility(s).map_err(|e| data_err(sp, format!("scan `{}`: {e}", s.pc_setting))))
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(data_err(sp, format!("no singles scans for arm {arm}")));
        }
        direct.sv_max = values.iter().copied().reduce(f64::max);
        direct.sv_min = values.iter().copied().reduce(f64::min);
        direct.sv_arm = Some(arm);
        direct.sv_origin = Some("singles scans".into());
    }
    let mut provenance = Provenance::new(path.display().to_string());
    provenance.input_sha256 = Some(hash);
    provenance.accidentals_subtracted = subtract;
    Ok(MetricsReport {
        label: label.to_string(),
        expected_state: expected,
        direct,
        qst: qst_summary(&counts, expected, MleOptions::default()).map_err(|e| data_err(path, e))?,
        provenance,
    })
}

/// `metrics`: one report per input; writes `metrics.json` (an array),
/// `metrics.txt` and, for simulated inputs, `counts_<label>.csv`.
pub fn metrics_cmd(inputs: &[MetricsInput], subtract_accidentals: bool, out: &Path) -> Result<Vec<MetricsReport>> {
    if inputs.is_empty() {
        return Err(CliError::Config("metrics needs a config, a preset or a counts file".into()));
    }
    for (i, input) in inputs.iter().enumerate() {
        if inputs[..i].iter().any(|o| o.label() == input.label()) {
            return Err(CliError::Config(format!("two inputs share the label `{}`", input.label())));
        }
    }
    let reports = inputs
        .iter()
        .map(|input| match input {
            MetricsInput::Config { label, config } => metrics_from_config(label, config, subtract_accidentals, out),
            MetricsInput::Counts {
                label,
                counts,
                singles,
                expected,
                sv_arm,
            } => metrics_from_counts(label, counts, singles.as_deref(), *expected, *sv_arm, subtract_accidentals),
        })
        .collect::<Result<Vec<_>>>()?;
    write_text(out, "metrics.json", &to_json(&reports))?;
    write_text(out, "metrics.txt", &render_table(&reports))?;
    Ok(reports)
}

/// Where `tomography` gets its counts.
#[derive(Debug, Clone)]
pub enum TomographyInput {
    Config(Box<LoadedConfig>),
    Counts(PathBuf),
}

/// `tomography`: maximum-likelihood reconstruction; writes
/// `tomography.json`, `tomography.txt` and, for simulated counts,
/// `tomography_counts.csv`. A run that fails to converge still writes its
/// files and then returns [`CliError::NotConverged`].
pub fn tomography_cmd(input: &TomographyInput, subtract_accidentals: bool, out: &Path) -> Result<TomographyReport> {
    let (counts, provenance, options) = match input {
        TomographyInput::Config(cfg) => {
            let settings = match cfg.config.tomography.settings {
                SettingSet::Standard => standard_settings(),
                SettingSet::Overcomplete => overcomplete_settings(),
            };
            let mut provenance = config_provenance(cfg);
            let counts = match cfg.config.tomography.shots_per_setting {
                Some(shots) => {
                    provenance.window_ps = None;
                    let rho = cfg.experiment.state.to_density_matrix()?;
                    simulate_settings(&rho, &settings, shots, cfg.seed())?
                }
                None => {
                    let d = cfg.duration_per_setting_s();
                    provenance.duration_per_setting_s = Some(d);
                    simulate_basis_counts(&cfg.experiment, &settings, d, cfg.config.coincidence.offset_ps)?
                }
            };
            with_file(out, "tomography_counts.csv", |w| formats::write_counts(w, &counts))?;
            (counts, provenance, mle_options(Some(cfg)))
        }
        TomographyInput::Counts(path) => {
            let (bytes, hash) = read_input(path)?;
            let counts = formats::read_counts(BufReader::new(&bytes[..])).map_err(|e| data_err(path, e))?;
            let mut provenance = Provenance::new(path.display().to_string());
            provenance.input_sha256 = Some(hash);
            (counts, provenance, MleOptions::default())
        }
    };
    let subtract = subtract_accidentals
        || matches!(input, TomographyInput::Config(c) if c.config.metrics.subtract_accidentals);
    let counts = if subtract { counts.with_accidentals_subtracted() } else { counts };
    let mut provenance = provenance;
    provenance.accidentals_subtracted = subtract;
    let settings = counts.len();
    let t = TomographyCounts::new(counts).map_err(|e| CliError::Data(format!("{}: {e}", provenance.origin)))?;
    let mle = mle_reconstruct(&t, options)?;
    let report = TomographyReport {
        metrics: qst_metrics(&mle.rho),
        mle,
        settings,
        provenance,
    };
    write_text(out, "tomography.json", &to_json(&report))?;
    write_text(out, "tomography.txt", &report.render())?;
    if !report.mle.converged {
        return Err(CliError::NotConverged(format!(
            "maximum-likelihood fit stopped after {} iterations without converging",
            report.mle.iterations
        )));
    }
    Ok(report)
}
