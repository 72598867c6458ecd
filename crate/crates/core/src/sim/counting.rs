use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{DetectionEvent, TimeTags, PS_PER_S};
use crate::state::Side;
use crate::{Error, Result};

/// Singles and coincidences of one acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub singles_a: u64,
    pub singles_b: u64,
    pub coincidences: u64,
    pub duration_s: f64,
    pub window_s: f64,
    /// Expected accidental coincidences, `R_MA R_MB dt T`.
    pub accidental_estimate: f64,
}

impl CountsRecord {
    fn new(singles_a: u64, singles_b: u64, coincidences: u64, duration_ps: u64, window_ps: u64) -> Self {
        let duration_s = duration_ps as f64 / PS_PER_S;
        let window_s = window_ps as f64 / PS_PER_S;
        let accidental_estimate = if duration_s > 0.0 {
            singles_a as f64 * singles_b as f64 * window_s / duration_s
        } else {
            0.0
        };
        CountsRecord {
            singles_a,
            singles_b,
            coincidences,
            duration_s,
            window_s,
            accidental_estimate,
        }
    }

    pub fn singles_rate(&self, side: Side) -> f64 {
        let n = match side {
            Side::A => self.singles_a,
            Side::B => self.singles_b,
        };
        n as f64 / self.duration_s
    }

    pub fn coincidence_rate(&self) -> f64 {
        self.coincidences as f64 / self.duration_s
    }

    /// Coincidences with the accidental estimate removed (may go negative).
    pub fn net_coincidences(&self) -> f64 {
        self.coincidences as f64 - self.accidental_estimate
    }
}

fn check_sorted(times: &[u64], channel: char) -> Result<()> {
    match times.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(Error::Unsorted { channel, index: i + 1 }),
        None => Ok(()),
    }
}

/// `|t_b - t_a - offset| <= window / 2`, evaluated in doubled integer units.
#[inline]
fn relative(a: u64, b: u64, offset_ps: i64) -> i128 {
    2 * (b as i128 - a as i128 - offset_ps as i128)
}

/// Greedy earliest-match pairing: each A event takes the earliest unused B
/// event inside the window; every event is used at most once.
pub fn count_coincidences(tags: &TimeTags, window_ps: u64, offset_ps: i64) -> Result<CountsRecord> {
    check_sorted(&tags.a, 'A')?;
    check_sorted(&tags.b, 'B')?;
    let w = window_ps as i128;
    let mut j = 0;
    let mut coincidences = 0;
    for &ta in &tags.a {
        while j < tags.b.len() && relative(ta, tags.b[j], offset_ps) < -w {
            j += 1;
        }
        if j < tags.b.len() && relative(ta, tags.b[j], offset_ps) <= w {
            coincidences += 1;
            j += 1;
        }
    }
    Ok(CountsRecord::new(
        tags.a.len() as u64,
        tags.b.len() as u64,
        coincidences,
        tags.duration_ps,
        window_ps,
    ))
}

/// Incremental version of [`count_coincidences`] for time-ordered event
/// streams; memory is bounded by the events inside one window.
#[derive(Debug, Clone)]
pub struct CoincidenceCounter {
    window_ps: u64,
    offset_ps: i64,
    pending_a: VecDeque<u64>,
    pending_b: VecDeque<u64>,
    singles: [u64; 2],
    coincidences: u64,
    last_time: u64,
    seen: usize,
}

impl CoincidenceCounter {
    pub fn new(window_ps: u64, offset_ps: i64) -> Self {
        CoincidenceCounter {
            window_ps,
            offset_ps,
            pending_a: VecDeque::new(),
            pending_b: VecDeque::new(),
            singles: [0, 0],
            coincidences: 0,
            last_time: 0,
            seen: 0,
        }
    }

    /// Feeds the next event; events must arrive in nondecreasing time order.
    pub fn push(&mut self, event: DetectionEvent) -> Result<()> {
        if event.time_ps < self.last_time {
            return Err(Error::Unsorted {
                channel: match event.channel {
                    Side::A => 'A',
                    Side::B => 'B',
                },
                index: self.seen,
            });
        }
        self.seen += 1;
        self.last_time = event.time_ps;
        match event.channel {
            Side::A => {
                self.singles[0] += 1;
                self.pending_a.push_back(event.time_ps);
            }
            Side::B => {
                self.singles[1] += 1;
                self.pending_b.push_back(event.time_ps);
            }
        }
        self.settle(Some(event.time_ps));
        Ok(())
    }

    /// Resolves every A event whose window is closed. `now = None` closes all.
    fn settle(&mut self, now: Option<u64>) {
        let w = self.window_ps as i128;
        let off = self.offset_ps as i128;
        while let Some(&ta) = self.pending_a.front() {
            if let Some(now) = now {
                // A later B event could still fall inside this A event's window.
                if 2 * now as i128 <= 2 * (ta as i128 + off) + w {
                    break;
                }
            }
            while let Some(&tb) = self.pending_b.front() {
                if relative(ta, tb, self.offset_ps) < -w {
                    self.pending_b.pop_front();
                } else {
                    break;
                }
            }
            if let Some(&tb) = self.pending_b.front() {
                if relative(ta, tb, self.offset_ps) <= w {
                    self.coincidences += 1;
                    self.pending_b.pop_front();
                }
            }
            self.pending_a.pop_front();
        }
        if let (true, Some(now)) = (self.pending_a.is_empty(), now) {
            // B events too early for any A event still to come.
            while let Some(&tb) = self.pending_b.front() {
                if 2 * (tb as i128 - off) + w < 2 * now as i128 {
                    self.pending_b.pop_front();
                } else {
                    break;
                }
            }
        }
    }

    pub fn finish(mut self, duration_ps: u64) -> CountsRecord {
        self.settle(None);
        CountsRecord::new(
            self.singles[0],
            self.singles[1],
            self.coincidences,
            duration_ps,
            self.window_ps,
        )
    }
}

/// Histogram of every A–B arrival difference `t_b - t_a` in `[-range, range)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayHistogram {
    pub bin_width_ps: u64,
    pub range_ps: u64,
    pub bins: Vec<u64>,
}

pub fn delay_histogram(tags: &TimeTags, bin_width_ps: u64, range_ps: u64) -> Result<DelayHistogram> {
    if bin_width_ps == 0 {
        return Err(Error::param("bin_width_ps", "must be > 0"));
    }
    check_sorted(&tags.a, 'A')?;
    check_sorted(&tags.b, 'B')?;
    let span = 2 * range_ps;
    let n_bins = span.div_ceil(bin_width_ps) as usize;
    let mut bins = vec![0u64; n_bins];
    let range = range_ps as i128;
    let mut lo = 0;
    for &ta in &tags.a {
        while lo < tags.b.len() && (tags.b[lo] as i128 - ta as i128) < -range {
            lo += 1;
        }
        for &tb in &tags.b[lo..] {
            let d = tb as i128 - ta as i128;
            if d >= range {
                break;
            }
            let idx = ((d + range) as u64 / bin_width_ps) as usize;
            if idx < n_bins {
                bins[idx] += 1;
            }
        }
    }
    Ok(DelayHistogram {
        bin_width_ps,
        range_ps,
        bins,
    })
}

impl DelayHistogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Delay at the centre of bin `i`.
    pub fn bin_center_ps(&self, i: usize) -> f64 {
        -(self.range_ps as f64) + (i as f64 + 0.5) * self.bin_width_ps as f64
    }

    /// Expected accidental counts per bin for uncorrelated streams,
    /// `R_A R_B w T`.
    pub fn accidental_floor(&self, counts: &CountsRecord) -> f64 {
        counts.singles_rate(Side::A) * counts.singles_rate(Side::B) * self.bin_width_ps as f64 / PS_PER_S * counts.duration_s
    }

    /// Mean of the outermost `fraction` of bins on both sides; an empirical floor.
    pub fn edge_floor(&self, fraction: f64) -> f64 {
        let n = self.bins.len();
        let k = ((n as f64 * fraction / 2.0) as usize).max(1).min(n / 2);
        if k == 0 {
            return 0.0;
        }
        let sum: u64 = self.bins[..k].iter().chain(&self.bins[n - k..]).sum();
        sum as f64 / (2 * k) as f64
    }

    /// Full width at half maximum of the peak after subtracting `floor`,
    /// optionally smoothing with a centred moving average of `smooth` bins
    /// on each side. `None` if the peak does not drop to half height within
    /// the histogram.
    pub fn fwhm_ps(&self, floor: f64, smooth: usize) -> Option<f64> {
        let n = self.bins.len();
        if n == 0 {
            return None;
        }
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(smooth);
                let hi = (i + smooth + 1).min(n);
                let s: u64 = self.bins[lo..hi].iter().sum();
                s as f64 / (hi - lo) as f64 - floor
            })
            .collect();
        let (peak, &top) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
        if top <= 0.0 {
            return None;
        }
        let half = top / 2.0;
        let w = self.bin_width_ps as f64;
        let mut left = None;
        for i in (0..peak).rev() {
            if y[i] <= half {
                let frac = (half - y[i]) / (y[i + 1] - y[i]);
                left = Some(self.bin_center_ps(i) + frac * w);
                break;
            }
        }
        let mut right = None;
        for i in (peak + 1)..n {
            if y[i] <= half {
                let frac = (y[i - 1] - half) / (y[i - 1] - y[i]);
                right = Some(self.bin_center_ps(i - 1) + frac * w);
                break;
            }
        }
        Some(right? - left?)
    }
}
