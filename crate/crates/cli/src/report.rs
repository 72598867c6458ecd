//! Machine-readable reports and their plain-text tables.

use std::fmt::Write as _;

use paircert_core::metrics::EntropyReport;
use paircert_core::sim::CountsRecord;
use paircert_core::state::{BellKind, Side};
use paircert_core::tomography::{MleResult, QstMetrics};
use serde::{Deserialize, Serialize};

/// Where a report's numbers came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    /// Config file path, `preset:<name>`, or the counts file path.
    pub origin: String,
    pub config_sha256: Option<String>,
    pub input_sha256: Option<String>,
    pub seed: Option<u64>,
    pub duration_per_setting_s: Option<f64>,
    pub window_ps: Option<u64>,
    pub accidentals_subtracted: bool,
}

impl Provenance {
    pub fn new(origin: impl Into<String>) -> Self {
        Provenance {
            tool: concat!("paircert ", env!("CARGO_PKG_VERSION")).to_string(),
            origin: origin.into(),
            config_sha256: None,
            input_sha256: None,
            seed: None,
            duration_per_setting_s: None,
            window_ps: None,
            accidentals_subtracted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectMetrics {
    /// Heralding probability; needs an analyzer-free acquisition.
    pub heralding: Option<f64>,
    pub v_hv: f64,
    pub v_hv_standard_error: f64,
    pub v_da: f64,
    pub v_da_standard_error: f64,
    pub qber: f64,
    pub entropy_a: EntropyReport,
    pub entropy_b: EntropyReport,
    pub sv_max: Option<f64>,
    pub sv_min: Option<f64>,
    pub sv_arm: Option<Side>,
    /// `source model` or `singles scans`.
    pub sv_origin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QstSummary {
    #[serde(flatten)]
    pub metrics: QstMetrics,
    /// Visibilities predicted by the reconstructed state, signed like the
    /// direct ones.
    pub v_hv: f64,
    pub v_da: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Analyzer settings used by the reconstruction.
    pub settings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub expected_state: BellKind,
    pub direct: DirectMetrics,
    pub qst: Option<QstSummary>,
    pub provenance: Provenance,
}

/// Column headings in display order.
pub const TABLE_COLUMNS: [&str; 10] = ["p", "S", "Y_A", "V_HV", "V_DA", "QBER", "H_A", "H_B", "SV_max", "SV_min"];

impl MetricsReport {
    /// Values in [`TABLE_COLUMNS`] order; `None` where not measured.
    pub fn table_row(&self) -> [Option<f64>; 10] {
        let q = self.qst.as_ref();
        [
            q.map(|q| q.metrics.purity),
            q.map(|q| q.metrics.von_neumann_bits),
            q.map(|q| q.metrics.renyi2_a),
            Some(self.direct.v_hv),
            Some(self.direct.v_da),
            Some(self.direct.qber),
            Some(self.direct.entropy_a.total),
            Some(self.direct.entropy_b.total),
            self.direct.sv_max,
            self.direct.sv_min,
        ]
    }
}

/// Aligned text table, one row per report. `p`, `S` and `Y_A` come from
/// tomography; the remaining columns from direct measurement.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let label_width = reports.iter().map(|r| r.label.len()).chain([6]).max().unwrap_or(6);
    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "source");
    for c in TABLE_COLUMNS {
        let _ = write!(out, " {c:>7}");
    }
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{:<label_width$}", r.label);
        for v in r.table_row() {
            match v {
                Some(v) => {
                    let _ = write!(out, " {v:>7.3}");
                }
                None => {
                    let _ = write!(out, " {:>7}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Output of `simulate` and of the counting half of `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsSummary {
    pub counts: CountsRecord,
    pub window_ps: u64,
    pub offset_ps: i64,
    pub net_coincidences: f64,
    pub provenance: Provenance,
}

impl CountsSummary {
    pub fn render(&self) -> String {
        let c = &self.counts;
        format!(
            "duration_s      {}\nsingles_a       {}\nsingles_b       {}\ncoincidences    {}\naccidentals     {:.3}\nnet_coincidences {:.3}\nwindow_ps       {}\noffset_ps       {}\n",
            c.duration_s, c.singles_a, c.singles_b, c.coincidences, c.accidental_estimate, self.net_coincidences, self.window_ps, self.offset_ps
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub bin_width_ps: u64,
    pub range_ps: u64,
    pub bins: usize,
    pub total: u64,
    /// Per-bin accidental level subtracted before the width search.
    pub floor: f64,
    pub smooth_bins: usize,
    pub fwhm_ps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    #[serde(flatten)]
    pub summary: CountsSummary,
    pub histogram: HistogramSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub mle: MleResult,
    pub metrics: QstMetrics,
    pub settings: usize,
    pub provenance: Provenance,
}

impl TomographyReport {
    pub fn render(&self) -> String {
        let m = &self.metrics;
        let mut out = format!(
            "converged        {}\niterations       {}\nlog_likelihood   {:.6}\npurity           {:.6}\nS (bits)         {:.6}\nRenyi2 A (nats)  {:.6}\nRenyi2 B (nats)  {:.6}\nbell fidelity    {:.6} ({})\n\nrho (real, imag) in HH, HV, VH, VV order:\n",
            self.mle.converged,
            self.mle.iterations,
            self.mle.log_likelihood,
            m.purity,
            m.von_neumann_bits,
            m.renyi2_a,
            m.renyi2_b,
            m.bell_fidelity,
            m.nearest_bell.name(),
        );
        for i in 0..4 {
            for j in 0..4 {
                let z = self.mle.rho.element(i, j);
                let _ = write!(out, " {:>8.4}{:+.4}i", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entropy(side: Side, total: f64) -> EntropyReport {
        EntropyReport {
            side,
            h_same: [total / 8.0; 4],
            h_cross: [total / 8.0; 4],
            total,
        }
    }

    fn report(label: &str, with_qst: bool) -> MetricsReport {
        MetricsReport {
            label: label.into(),
            expected_state: BellKind::PhiPlus,
            direct: DirectMetrics {
                heralding: Some(0.5),
                v_hv: 0.96,
                v_hv_standard_error: 0.01,
                v_da: 0.95,
                v_da_standard_error: 0.01,
                qber: 0.03,
                entropy_a: entropy(Side::A, 7.3),
                entropy_b: entropy(Side::B, 7.25),
                sv_max: Some(0.04),
                sv_min: None,
                sv_arm: Some(Side::A),
                sv_origin: Some("source model".into()),
            },
            qst: with_qst.then(|| QstSummary {
                metrics: QstMetrics {
                    purity: 0.89,
                    von_neumann_bits: 0.33,
                    renyi2_a: 0.68,
                    renyi2_b: 0.68,
                    bell_fidelity: 0.94,
                    nearest_bell: BellKind::PhiPlus,
                },
                v_hv: 0.96,
                v_da: 0.95,
                converged: true,
                iterations: 12,
                settings: 16,
            }),
            provenance: Provenance::new("test"),
        }
    }

    #[test]
    fn table_has_every_column_in_order() {
        let text = render_table(&[report("o-band", true), report("narrow", false)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let header: Vec<&str> = lines[0].split_whitespace().collect();
        assert_eq!(header[0], "source");
        assert_eq!(&header[1..], &TABLE_COLUMNS);
        let row: Vec<&str> = lines[1].split_whitespace().collect();
        assert_eq!(row, ["o-band", "0.890", "0.330", "0.680", "0.960", "0.950", "0.030", "7.300", "7.250", "0.040", "-"]);
        assert!(lines[2].split_whitespace().skip(1).take(3).all(|v| v == "-"));
        // Columns line up.
        assert_eq!(lines[0].len(), lines[1].len());
    }

    #[test]
    fn report_json_round_trips() {
        let r = report("x", true);
        let back: MetricsReport = serde_json::from_str(&to_json(&r)).unwrap();
        assert_eq!(back, r);
    }
}
