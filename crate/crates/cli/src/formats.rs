//! Plain-text data files: time tags, per-setting counts, singles scans,
//! histograms and heatmaps.
//!
//! Every format is UTF-8 CSV with a header row naming the unit of each
//! column. Lines starting with `#` are comments; blank lines are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use paircert_core::metrics::{BasisCounts, SinglesScan};
use paircert_core::sim::{DelayHistogram, DetectionEvent, ScanResult, TimeTags};
use paircert_core::state::{Axis, Side};

pub const TIMESTAMP_HEADER: &str = "channel,time_ps";
pub const COUNTS_HEADER: &str = "axis_a,axis_b,counts,duration_s";
pub const COUNTS_HEADER_WITH_ACCIDENTALS: &str = "axis_a,axis_b,counts,duration_s,accidentals";
pub const SINGLES_HEADER: &str = "arm,pc_setting,angle_deg,counts";

/// A malformed or inconsistent input file.
#[derive(Debug)]
pub struct FormatError {
    /// 1-based line number, when the problem is tied to one line.
    pub line: Option<usize>,
    pub message: String,
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        FormatError {
            line: Some(line),
            message: message.into(),
        }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> Self {
        FormatError {
            line: None,
            message: e.to_string(),
        }
    }
}

/// Lines that carry data, with their 1-based numbers. Comment lines are
/// passed to `on_comment`.
fn data_lines<R: BufRead>(
    reader: R,
    mut on_comment: impl FnMut(usize, &str) -> Result<(), FormatError>,
) -> impl Iterator<Item = Result<(usize, String), FormatError>> {
    reader.lines().enumerate().filter_map(move |(i, line)| {
        let n = i + 1;
        match line {
            Err(e) => Some(Err(FormatError::at(n, e.to_string()))),
            Ok(l) => {
                let t = l.trim();
                if t.is_empty() {
                    None
                } else if let Some(c) = t.strip_prefix('#') {
                    on_comment(n, c.trim()).err().map(Err)
                } else {
                    Some(Ok((n, t.to_string())))
                }
            }
        }
    })
}

fn expect_header(line: usize, found: &str, accepted: &[&str]) -> Result<usize, FormatError> {
    let normalized: String = found.split(',').map(str::trim).collect::<Vec<_>>().join(",");
    accepted
        .iter()
        .position(|h| *h == normalized)
        .ok_or_else(|| FormatError::at(line, format!("expected header `{}`, found `{found}`", accepted[0])))
}

fn fields<const N: usize>(line: usize, text: &str) -> Result<[&str; N], FormatError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| FormatError::at(line, format!("expected {N} fields, found {}", p.len())))
}

fn parse_f64(line: usize, column: &str, text: &str) -> Result<f64, FormatError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(FormatError::at(line, format!("`{column}` is not a finite number: `{text}`"))),
    }
}

fn parse_axis(line: usize, column: &str, text: &str) -> Result<Axis, FormatError> {
    text.parse()
        .map_err(|_| FormatError::at(line, format!("`{column}` must be one of H, V, D, A, R, L; found `{text}`")))
}

fn parse_side(line: usize, text: &str) -> Result<Side, FormatError> {
    match text {
        "A" => Ok(Side::A),
        "B" => Ok(Side::B),
        _ => Err(FormatError::at(line, format!("channel must be `A` or `B`, found `{text}`"))),
    }
}

/// Streams detection events into a timestamp file.
pub struct TimestampWriter<W: Write> {
    out: W,
}

impl<W: Write> TimestampWriter<W> {
    pub fn new(mut out: W, duration_ps: u64) -> io::Result<Self> {
        writeln!(out, "# duration_ps={duration_ps}")?;
        writeln!(out, "{TIMESTAMP_HEADER}")?;
        Ok(TimestampWriter { out })
    }

    pub fn push(&mut self, event: &DetectionEvent) -> io::Result<()> {
        writeln!(self.out, "{},{}", event.channel, event.time_ps)
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Reads a timestamp file. Rows must be sorted by time across both
/// channels. The acquisition length comes from a `# duration_ps=N` comment,
/// or is taken as one past the last tag when the comment is absent.
pub fn read_timestamps<R: BufRead>(reader: R) -> Result<TimeTags, FormatError> {
    let mut duration: Option<u64> = None;
    let mut header_seen = false;
    let mut last: Option<u64> = None;
    let mut events = Vec::new();
    let lines = data_lines(reader, |n, comment| {
        if let Some(v) = comment.strip_prefix("duration_ps=") {
            let d = v
                .trim()
                .parse()
                .map_err(|_| FormatError::at(n, format!("bad duration_ps `{}`", v.trim())))?;
            duration = Some(d);
        }
        Ok(())
    });
    for item in lines {
        let (n, text) = item?;
        if !header_seen {
            expect_header(n, &text, &[TIMESTAMP_HEADER])?;
            header_seen = true;
            continue;
        }
        let [channel, time] = fields::<2>(n, &text)?;
        let channel = parse_side(n, channel)?;
        let time_ps: u64 = time
            .parse()
            .map_err(|_| FormatError::at(n, format!("time_ps must be a nonnegative integer, found `{time}`")))?;
        if last.is_some_and(|l| time_ps < l) {
            return Err(FormatError::at(n, format!("timestamps are not sorted: {time_ps} follows {}", last.unwrap())));
        }
        last = Some(time_ps);
        events.push(DetectionEvent { time_ps, channel });
    }
    let duration_ps = match (duration, last) {
        (Some(d), Some(l)) if l >= d => {
            return Err(FormatError {
                line: None,
                message: format!("tag at {l} ps lies beyond duration_ps={d}"),
            })
        }
        (Some(d), _) => d,
        (None, Some(l)) => l + 1,
        (None, None) => 0,
    };
    Ok(TimeTags::from_events(events, duration_ps))
}

pub fn write_counts<W: Write>(mut out: W, counts: &BasisCounts) -> io::Result<()> {
    writeln!(out, "{COUNTS_HEADER_WITH_ACCIDENTALS}")?;
    for ((a, b), s) in counts.iter() {
        writeln!(out, "{a},{b},{},{},{}", s.counts, s.duration_s, s.accidentals)?;
    }
    out.flush()
}

/// Reads per-setting coincidence counts; the `accidentals` column is
/// optional.
pub fn read_counts<R: BufRead>(reader: R) -> Result<BasisCounts, FormatError> {
    let mut counts = BasisCounts::new();
    let mut with_accidentals = None;
    for item in data_lines(reader, |_, _| Ok(())) {
        let (n, text) = item?;
        let Some(acc) = with_accidentals else {
            with_accidentals = Some(expect_header(n, &text, &[COUNTS_HEADER, COUNTS_HEADER_WITH_ACCIDENTALS])? == 1);
            continue;
        };
        let (a, b, c, d, accidentals) = if acc {
            let [a, b, c, d, x] = fields::<5>(n, &text)?;
            (a, b, c, d, parse_f64(n, "accidentals", x)?)
        } else {
            let [a, b, c, d] = fields::<4>(n, &text)?;
            (a, b, c, d, 0.0)
        };
        let (a, b) = (parse_axis(n, "axis_a", a)?, parse_axis(n, "axis_b", b)?);
        if counts.get(a, b).is_some() {
            return Err(FormatError::at(n, format!("setting {a}{b} appears twice")));
        }
        counts
            .insert_with_accidentals(a, b, parse_f64(n, "counts", c)?, parse_f64(n, "duration_s", d)?, accidentals)
            .map_err(|e| FormatError::at(n, e.to_string()))?;
    }
    if counts.is_empty() {
        return Err(FormatError {
            line: None,
            message: "counts file holds no settings".into(),
        });
    }
    Ok(counts)
}

/// Reads polarizer scans of singles counts, grouped by arm and
/// polarization-controller setting in order of first appearance.
pub fn read_singles<R: BufRead>(reader: R) -> Result<Vec<SinglesScan>, FormatError> {
    let mut order: Vec<(Side, String)> = Vec::new();
    let mut samples: BTreeMap<(Side, String), Vec<(f64, f64)>> = BTreeMap::new();
    let mut header_seen = false;
    for item in data_lines(reader, |_, _| Ok(())) {
        let (n, text) = item?;
        if !header_seen {
            expect_header(n, &text, &[SINGLES_HEADER])?;
            header_seen = true;
            continue;
        }
        let [arm, pc, angle, c] = fields::<4>(n, &text)?;
        let key = (parse_side(n, arm)?, pc.to_string());
        let counts = parse_f64(n, "counts", c)?;
        if counts < 0.0 {
            return Err(FormatError::at(n, "counts must be >= 0"));
        }
        if !samples.contains_key(&key) {
            order.push(key.clone());
        }
        samples.entry(key).or_default().push((parse_f64(n, "angle_deg", angle)?, counts));
    }
    Ok(order
        .into_iter()
        .map(|key| SinglesScan {
            arm: key.0,
            samples: samples.remove(&key).unwrap_or_default(),
            pc_setting: key.1,
        })
        .collect())
}

/// Histogram as `delay_ps,counts`; with a floor, a `net_counts` column holds
/// the counts minus that floor.
pub fn write_histogram<W: Write>(mut out: W, h: &DelayHistogram, floor: Option<f64>) -> io::Result<()> {
    match floor {
        Some(f) => {
            writeln!(out, "delay_ps,counts,net_counts")?;
            for (i, c) in h.bins.iter().enumerate() {
                writeln!(out, "{},{c},{}", h.bin_center_ps(i), *c as f64 - f)?;
            }
        }
        None => {
            writeln!(out, "delay_ps,counts")?;
            for (i, c) in h.bins.iter().enumerate() {
                writeln!(out, "{},{c}", h.bin_center_ps(i))?;
            }
        }
    }
    out.flush()
}

/// One observable of a scan as a matrix: the first row lists the second
/// axis, the first column the first axis.
pub fn write_heatmap<W: Write>(mut out: W, scan: &ScanResult, f: impl Fn(&paircert_core::sim::CountsRecord) -> f64) -> io::Result<()> {
    write!(out, "{}\\{}", scan.axis1.parameter, scan.axis2.parameter)?;
    for v in &scan.axis2.values {
        write!(out, ",{v}")?;
    }
    writeln!(out)?;
    for (v, row) in scan.axis1.values.iter().zip(scan.matrix(f)) {
        write!(out, "{v}")?;
        for x in row {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps_round_trip() {
        let events = [
            DetectionEvent { time_ps: 5, channel: Side::A },
            DetectionEvent { time_ps: 5, channel: Side::B },
            DetectionEvent { time_ps: 900, channel: Side::B },
        ];
        let mut w = TimestampWriter::new(Vec::new(), 1000).unwrap();
        for e in &events {
            w.push(e).unwrap();
        }
        let bytes = w.finish().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text, "# duration_ps=1000\nchannel,time_ps\nA,5\nB,5\nB,900\n");
        let tags = read_timestamps(&bytes[..]).unwrap();
        assert_eq!(tags, TimeTags::from_events(events, 1000));
    }

    #[test]
    fn timestamp_errors_name_the_line() {
        let cases = [
            ("channel,time_ps\nA,10\nC,20\n", 3),
            ("channel,time_ps\nA,10\n# note\nB,x\n", 4),
            ("channel,time_ps\nA,10\nB,5\n", 3),
            ("channel,time_ps\nA,10,3\n", 2),
            ("chan,t\nA,10\n", 1),
            ("channel,time_ps\nA,-4\n", 2),
            ("# duration_ps=ten\nchannel,time_ps\n", 1),
        ];
        for (text, line) in cases {
            let e = read_timestamps(text.as_bytes()).unwrap_err();
            assert_eq!(e.line, Some(line), "{text:?}: {e}");
        }
        assert!(read_timestamps("# duration_ps=10\nchannel,time_ps\nA,10\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_timestamp_file() {
        let tags = read_timestamps("".as_bytes()).unwrap();
        assert!(tags.a.is_empty() && tags.b.is_empty());
        assert_eq!(tags.duration_ps, 0);
        let tags = read_timestamps("# duration_ps=1000\nchannel,time_ps\n".as_bytes()).unwrap();
        assert_eq!(tags.duration_ps, 1000);
    }

    #[test]
    fn counts_round_trip() {
        let mut c = BasisCounts::new();
        c.insert_with_accidentals(Axis::H, Axis::V, 12.0, 0.5, 0.25).unwrap();
        c.insert(Axis::D, Axis::R, 7.0, 1.0).unwrap();
        let mut bytes = Vec::new();
        write_counts(&mut bytes, &c).unwrap();
        assert_eq!(read_counts(&bytes[..]).unwrap(), c);
    }

    #[test]
    fn counts_without_accidentals_column() {
        let c = read_counts("axis_a, axis_b, counts, duration_s\nH,H,10,1\n".as_bytes()).unwrap();
        assert_eq!(c.get(Axis::H, Axis::H).unwrap().counts, 10.0);
    }

    #[test]
    fn counts_errors_name_the_line() {
        let cases = [
            ("axis_a,axis_b,counts,duration_s\nH,H,10,1\nH,X,3,1\n", Some(3)),
            ("axis_a,axis_b,counts,duration_s\nH,H,10,1\nH,H,3,1\n", Some(3)),
            ("axis_a,axis_b,counts,duration_s\n\nH,H,-1,1\n", Some(3)),
            ("axis_a,axis_b,counts,duration_s\nH,H,1,0\n", Some(2)),
            ("axis_a,axis_b,counts\nH,H,1\n", Some(1)),
            ("axis_a,axis_b,counts,duration_s\n", None),
        ];
        for (text, line) in cases {
            assert_eq!(read_counts(text.as_bytes()).unwrap_err().line, line, "{text:?}");
        }
    }

    #[test]
    fn singles_are_grouped_by_arm_and_setting() {
        let text = "arm,pc_setting,angle_deg,counts\nA,p1,0,10\nB,p1,0,4\nA,p1,45,6\nA,p2,0,3\n";
        let scans = read_singles(text.as_bytes()).unwrap();
        assert_eq!(scans.len(), 3);
        assert_eq!(scans[0].arm, Side::A);
        assert_eq!(scans[0].samples, vec![(0.0, 10.0), (45.0, 6.0)]);
        assert_eq!(scans[1].arm, Side::B);
        assert_eq!(scans[2].pc_setting, "p2");
    }
}
