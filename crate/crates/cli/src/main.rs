use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paircert::commands::{self, AnalyzeOptions, MetricsInput, TomographyInput};
use paircert::config::{parse_span_ps, parse_time_ps, LoadedConfig};
use paircert::report::render_table;
use paircert::CliError;
use paircert_core::state::{BellKind, Side};

/// Characterize polarization-entangled photon-pair sources: simulate
/// detector time tags, count coincidences, and compute entanglement metrics.
#[derive(Parser)]
#[command(name = "paircert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled configuration: high, medium or low.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "PAIRCERT_OUT_DIR")]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<LoadedConfig, CliError> {
        commands::load_config(self.config.as_deref(), self.preset.as_deref(), self.seed)
    }
}

fn parse_side(s: &str) -> Result<Side, String> {
    match s {
        "A" | "a" => Ok(Side::A),
        "B" | "b" => Ok(Side::B),
        _ => Err(format!("`{s}` is not an arm (A or B)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an acquisition; writes timestamps.csv and counts.json.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Count coincidences and histogram delays in a timestamp file.
    Analyze {
        /// Timestamp CSV (`channel,time_ps`).
        input: PathBuf,
        /// Supplies defaults for the options below.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Full coincidence window, e.g. 1ns or 500ps.
        #[arg(long, value_parser = parse_span_ps)]
        window_ps: Option<u64>,
        /// Delay added to channel A before matching, e.g. -2ns.
        #[arg(long, value_parser = parse_time_ps, allow_hyphen_values = true)]
        offset_ps: Option<i64>,
        #[arg(long, value_parser = parse_span_ps)]
        bin_width_ps: Option<u64>,
        /// Histogram covers delays in [-range, range].
        #[arg(long, value_parser = parse_span_ps)]
        range_ps: Option<u64>,
        /// Moving-average half width used before the FWHM search.
        #[arg(long)]
        smooth_bins: Option<usize>,
        /// Subtract the accidental level from every histogram bin.
        #[arg(long)]
        subtract_accidentals: bool,
        #[arg(long, env = "PAIRCERT_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Run the configured two-parameter scan; writes one heatmap CSV per
    /// observable.
    Scan {
        #[command(flatten)]
        common: Common,
    },
    /// Direct and tomographic entanglement metrics.
    Metrics {
        #[arg(long)]
        config: Vec<PathBuf>,
        /// Repeatable; each preset becomes one table row.
        #[arg(long)]
        preset: Vec<String>,
        /// Measured counts CSV (`axis_a,axis_b,counts,duration_s`).
        #[arg(long)]
        counts: Vec<PathBuf>,
        /// Polarizer scans of singles (`arm,pc_setting,angle_deg,counts`) for
        /// the counts file.
        #[arg(long, requires = "counts")]
        singles: Option<PathBuf>,
        /// Bell state expected for counts files.
        #[arg(long, default_value = "phi+")]
        expected: BellKind,
        /// Arm of the singles scans.
        #[arg(long, default_value = "A", value_parser = parse_side)]
        sv_arm: Side,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        subtract_accidentals: bool,
        #[arg(long, env = "PAIRCERT_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Maximum-likelihood state reconstruction.
    Tomography {
        #[command(flatten)]
        common: Common,
        /// Measured counts CSV instead of a configuration.
        #[arg(long, conflicts_with_all = ["config", "preset"])]
        counts: Option<PathBuf>,
        #[arg(long)]
        subtract_accidentals: bool,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = common.load()?;
            let out = commands::resolve_out_dir(common.out, Some(&cfg));
            Ok(commands::simulate_cmd(&cfg, &out)?.render())
        }
        Command::Analyze {
            input,
            config,
            window_ps,
            offset_ps,
            bin_width_ps,
            range_ps,
            smooth_bins,
            subtract_accidentals,
            out,
        } => {
            let cfg = match &config {
                Some(p) => Some(commands::load_config(Some(p), None, None)?),
                None => None,
            };
            let mut opts = cfg.as_ref().map(AnalyzeOptions::from_config).unwrap_or_default();
            opts.window_ps = window_ps.unwrap_or(opts.window_ps);
            opts.offset_ps = offset_ps.unwrap_or(opts.offset_ps);
            opts.bin_width_ps = bin_width_ps.unwrap_or(opts.bin_width_ps);
            opts.range_ps = range_ps.unwrap_or(opts.range_ps);
            opts.smooth_bins = smooth_bins.unwrap_or(opts.smooth_bins);
            opts.subtract_accidentals |= subtract_accidentals;
            let out = commands::resolve_out_dir(out, cfg.as_ref());
            let report = commands::analyze_cmd(&input, &opts, &out)?;
            let fwhm = match report.histogram.fwhm_ps {
                Some(w) => format!("{w:.1}"),
                None => "-".into(),
            };
            Ok(format!("{}fwhm_ps         {fwhm}\n", report.summary.render()))
        }
        Command::Scan { common } => {
            let cfg = common.load()?;
            let out = commands::resolve_out_dir(common.out, Some(&cfg));
            let scan = commands::scan_cmd(&cfg, &out)?;
            let mut text = String::from("coincidences:\n");
            for (v, row) in scan.axis1.values.iter().zip(&scan.records) {
                let cells: Vec<String> = row.iter().map(|r| r.coincidences.to_string()).collect();
                text.push_str(&format!("{}={v}: {}\n", scan.axis1.parameter, cells.join(" ")));
            }
            Ok(text)
        }
        Command::Metrics {
            config,
            preset,
            counts,
            singles,
            expected,
            sv_arm,
            seed,
            subtract_accidentals,
            out,
        } => {
            if singles.is_some() && counts.len() != 1 {
                return Err(CliError::Config("--singles goes with exactly one --counts file".into()));
            }
            let mut inputs = Vec::new();
            let mut first_config = None;
            for path in &config {
                let cfg = commands::load_config(Some(path), None, seed)?;
                first_config.get_or_insert_with(|| cfg.clone());
                inputs.push(MetricsInput::config(cfg));
            }
            for name in &preset {
                inputs.push(MetricsInput::config(commands::load_config(None, Some(name), seed)?));
            }
            for path in counts {
                inputs.push(MetricsInput::counts(path, singles.clone(), expected, sv_arm));
            }
            let out = commands::resolve_out_dir(out, first_config.as_ref());
            Ok(render_table(&commands::metrics_cmd(&inputs, subtract_accidentals, &out)?))
        }
        Command::Tomography {
            common,
            counts,
            subtract_accidentals,
        } => {
            let (input, cfg) = match counts {
                Some(path) => (TomographyInput::Counts(path), None),
                None => {
                    let cfg = common.load()?;
                    (TomographyInput::Config(Box::new(cfg.clone())), Some(cfg))
                }
            };
            let out = commands::resolve_out_dir(common.out, cfg.as_ref());
            let report = commands::tomography_cmd(&input, subtract_accidentals, &out)?;
            Ok(report.render())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("paircert: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
