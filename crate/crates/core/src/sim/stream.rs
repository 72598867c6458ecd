//! Streaming event generator.
//!
//! Emission processes (pairs, unpaired photons per arm, dark counts per arm)
//! are independent Poisson clocks, each with its own random stream. Photons
//! are pushed into a time-ordered buffer with their channel delay and jitter
//! applied; an event leaves the buffer once no later emission can land before
//! it, then goes through the dead-time filter. Accepted detections may spawn
//! afterpulses, which re-enter the same buffer.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{seconds_to_ps, ExperimentConfig, PS_PER_S};
use crate::state::{analyzer_projector, Side};
use crate::Result;

/// Gaussian draws are truncated here so the reorder buffer has a finite horizon.
const GAUSS_CLIP: f64 = 8.0;
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub time_ps: u64,
    pub channel: Side,
}

/// Per-channel sorted time tags of one acquisition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimeTags {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub duration_ps: u64,
}

impl TimeTags {
    pub fn from_events(events: impl IntoIterator<Item = DetectionEvent>, duration_ps: u64) -> Self {
        let mut tags = TimeTags {
            duration_ps,
            ..Default::default()
        };
        for e in events {
            match e.channel {
                Side::A => tags.a.push(e.time_ps),
                Side::B => tags.b.push(e.time_ps),
            }
        }
        tags
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_ps as f64 / PS_PER_S
    }

    pub fn channel(&self, side: Side) -> &[u64] {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }
}

struct PoissonClock {
    next_ps: f64,
    mean_gap_ps: f64,
    rng: ChaCha8Rng,
}

impl PoissonClock {
    fn new(rate_hz: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mean_gap_ps = if rate_hz > 0.0 { PS_PER_S / rate_hz } else { f64::INFINITY };
        let mut clock = PoissonClock {
            next_ps: 0.0,
            mean_gap_ps,
            rng,
        };
        clock.next_ps = clock.gap();
        clock
    }

    fn gap(&mut self) -> f64 {
        if self.mean_gap_ps.is_finite() {
            let e: f64 = self.rng.sample(Exp1);
            e * self.mean_gap_ps
        } else {
            f64::INFINITY
        }
    }

    fn advance(&mut self) -> f64 {
        let now = self.next_ps;
        self.next_ps = now + self.gap();
        now
    }
}

#[derive(Clone, Copy)]
struct ArmModel {
    gamma: f64,
    eta: f64,
    jitter_ps: f64,
    delay_per_nm: f64,
    dead_ps: u64,
    afterpulse_prob: f64,
    afterpulse_tau_ps: f64,
}

struct Draws {
    survive: f64,
    detect: f64,
    jitter: f64,
}

fn clipped_normal(rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z.clamp(-GAUSS_CLIP, GAUSS_CLIP)
}

impl Draws {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        Draws {
            survive: rng.random(),
            detect: rng.random(),
            jitter: clipped_normal(rng),
        }
    }
}

const PAIR: usize = 0;
const SINGLE_A: usize = 1;
const SINGLE_B: usize = 2;
const DARK_A: usize = 3;
const DARK_B: usize = 4;

/// Time-ordered detection events of both channels. Deterministic for a given
/// configuration, seed included.
pub struct EventStream {
    duration_ps: u64,
    clocks: [PoissonClock; 5],
    arms: [ArmModel; 2],
    /// Cumulative probabilities of (pass A, pass B) outcomes for a pair:
    /// both, A only, B only.
    pair_cdf: [f64; 3],
    single_pass: [f64; 2],
    sigma_lambda_nm: f64,
    horizon_ps: f64,
    pending: BinaryHeap<Reverse<(u64, u8)>>,
    last_accepted: [Option<u64>; 2],
    afterpulse_rng: [ChaCha8Rng; 2],
}

fn side_index(side: Side) -> usize {
    match side {
        Side::A => 0,
        Side::B => 1,
    }
}

fn index_side(index: u8) -> Side {
    if index == 0 {
        Side::A
    } else {
        Side::B
    }
}

/// Starts a simulation; events are produced lazily by the returned iterator.
pub fn simulate(config: &ExperimentConfig) -> Result<EventStream> {
    config.validate()?;
    let rho = config.state.to_density_matrix()?;
    let pa = analyzer_projector(config.analyzer_a);
    let pb = analyzer_projector(config.analyzer_b);
    let both = rho.joint_probability(&pa, &pb);
    let a_any = rho.partial_trace(Side::A).probability(&pa);
    let b_any = rho.partial_trace(Side::B).probability(&pb);
    let a_only = (a_any - both).max(0.0);
    let b_only = (b_any - both).max(0.0);
    let pair_cdf = [both, both + a_only, both + a_only + b_only];

    let arm = |side: Side| {
        let det = config.detector(side);
        let fiber = match side {
            Side::A => config.fiber_a,
            Side::B => config.fiber_b,
        };
        ArmModel {
            gamma: config.rates.transmissivity(side),
            eta: det.eta_q,
            jitter_ps: det.jitter_sigma_s * PS_PER_S,
            delay_per_nm: fiber.delay_per_nm(),
            dead_ps: seconds_to_ps(det.dead_time_s),
            afterpulse_prob: det.afterpulse_prob,
            afterpulse_tau_ps: det.afterpulse_tau_s * PS_PER_S,
        }
    };
    let arms = [arm(Side::A), arm(Side::B)];
    let sigma_lambda_nm = config.source_bandwidth_nm / FWHM_PER_SIGMA;
    let horizon_ps = arms
        .iter()
        .map(|a| GAUSS_CLIP * (a.delay_per_nm.abs() * sigma_lambda_nm + a.jitter_ps))
        .fold(0.0, f64::max)
        + 1.0;

    let seed = config.seed;
    let unpaired = config.rates.total_rate_hz - config.rates.pair_rate_hz;
    let clocks = [
        PoissonClock::new(config.rates.pair_rate_hz, seed, 1),
        PoissonClock::new(unpaired, seed, 2),
        PoissonClock::new(unpaired, seed, 3),
        PoissonClock::new(config.detector_a.dark_rate_hz, seed, 4),
        PoissonClock::new(config.detector_b.dark_rate_hz, seed, 5),
    ];
    let afterpulse_rng = [6, 7].map(|stream| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    });

    Ok(EventStream {
        duration_ps: seconds_to_ps(config.duration_s),
        clocks,
        arms,
        pair_cdf,
        single_pass: [a_any, b_any],
        sigma_lambda_nm,
        horizon_ps,
        pending: BinaryHeap::new(),
        last_accepted: [None, None],
        afterpulse_rng,
    })
}

impl EventStream {
    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    /// Drains the stream into per-channel vectors.
    pub fn collect_tags(self) -> TimeTags {
        let duration_ps = self.duration_ps;
        TimeTags::from_events(self, duration_ps)
    }

    fn next_clock(&self) -> Option<usize> {
        let limit = self.duration_ps as f64;
        self.clocks
            .iter()
            .enumerate()
            .filter(|(_, c)| c.next_ps < limit)
            .min_by(|(_, x), (_, y)| x.next_ps.total_cmp(&y.next_ps))
            .map(|(i, _)| i)
    }

    fn push(&mut self, time_ps: f64, side: Side) {
        let t = time_ps.round();
        if t >= 0.0 && t < self.duration_ps as f64 {
            self.pending.push(Reverse((t as u64, side_index(side) as u8)));
        }
    }

    /// Channel transport of one photon that left the source at `emitted_ps`.
    fn transport(&mut self, emitted_ps: f64, side: Side, detuning_nm: f64, draws: &Draws) {
        let arm = self.arms[side_index(side)];
        if draws.survive < arm.gamma && draws.detect < arm.eta {
            let t = emitted_ps + arm.delay_per_nm * detuning_nm + arm.jitter_ps * draws.jitter;
            self.push(t, side);
        }
    }

    fn fire(&mut self, which: usize) {
        let t = self.clocks[which].advance();
        match which {
            PAIR => {
                let rng = &mut self.clocks[PAIR].rng;
                let u: f64 = rng.random();
                let detuning = self.sigma_lambda_nm * clipped_normal(rng);
                let da = Draws::sample(rng);
                let db = Draws::sample(rng);
                let (pass_a, pass_b) = if u < self.pair_cdf[0] {
                    (true, true)
                } else if u < self.pair_cdf[1] {
                    (true, false)
                } else if u < self.pair_cdf[2] {
                    (false, true)
                } else {
                    (false, false)
                };
                // Energy conservation: the partner photons are detuned in opposite directions.
                if pass_a {
                    self.transport(t, Side::A, detuning, &da);
                }
                if pass_b {
                    self.transport(t, Side::B, -detuning, &db);
                }
            }
            SINGLE_A | SINGLE_B => {
                let side = if which == SINGLE_A { Side::A } else { Side::B };
                let rng = &mut self.clocks[which].rng;
                let u: f64 = rng.random();
                let detuning = self.sigma_lambda_nm * clipped_normal(rng);
                let d = Draws::sample(rng);
                if u < self.single_pass[side_index(side)] {
                    self.transport(t, side, detuning, &d);
                }
            }
            DARK_A => self.push(t, Side::A),
            DARK_B => self.push(t, Side::B),
            _ => unreachable!(),
        }
    }
}

impl Iterator for EventStream {
    type Item = DetectionEvent;

    fn next(&mut self) -> Option<DetectionEvent> {
        loop {
            let upcoming = self.next_clock();
            let safe_before = upcoming.map_or(f64::INFINITY, |i| self.clocks[i].next_ps - self.horizon_ps);
            match self.pending.peek() {
                Some(&Reverse((t, _))) if (t as f64) < safe_before => {
                    let Reverse((t, ch)) = self.pending.pop()?;
                    let idx = ch as usize;
                    let arm = self.arms[idx];
                    let live = self.last_accepted[idx].map_or(true, |last| t - last >= arm.dead_ps);
                    if !live {
                        continue;
                    }
                    self.last_accepted[idx] = Some(t);
                    if arm.afterpulse_prob > 0.0 {
                        let rng = &mut self.afterpulse_rng[idx];
                        let u: f64 = rng.random();
                        let e: f64 = rng.sample(Exp1);
                        if u < arm.afterpulse_prob {
                            self.push(t as f64 + e * arm.afterpulse_tau_ps, index_side(ch));
                        }
                    }
                    return Some(DetectionEvent {
                        time_ps: t,
                        channel: index_side(ch),
                    });
                }
                _ => match upcoming {
                    Some(which) => self.fire(which),
                    None => return None,
                },
            }
        }
    }
}
