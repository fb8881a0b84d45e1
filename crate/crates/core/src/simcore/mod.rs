//! Deterministic discrete-event simulation of a frame pipeline.
//!
//! Time is integer nanoseconds throughout; every duration derived from a
//! floating-point rate is rounded up. Events at equal times run in the
//! order they were scheduled.
//!
//! Stage semantics:
//! - The sensor emits frame `k` at `k * period` and releases it after its
//!   readout latency.
//! - A link serializes one frame at a time in FIFO order and adds cable
//!   propagation. A link fed by a cut-through stage starts as soon as the
//!   head is available and finishes no earlier than the tail is released.
//! - Store-and-forward stages release a frame once its last byte arrived;
//!   cut-through stages release bytes as they arrive (plus the stage
//!   latency), buffering whatever the downstream rate cannot absorb.
//! - A full buffer never stalls its upstream link. Admission is decided when
//!   a frame's first byte arrives, against the planned fill and drain of
//!   every resident frame; the loser is dropped at the instant the buffer
//!   would overflow.

mod engine;
pub(crate) mod occupancy;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linkmodel::{effective_link_rate, LinkSpec};
use crate::metrics::SimReport;
use crate::time::{ceil_ns, SimTime};
use crate::timing::ClockModel;
use crate::topology::{Topology, PROPAGATION_NS_PER_M};

use occupancy::Residency;

/// Times a frame passed through one stage.
///
/// `head` and `ingress` are the arrival of the first and last byte;
/// `out_start` and `egress` the departure of the first and last byte. For a
/// link the "in" side is the serializer and the "out" side the far end of
/// the cable. Processors report processing start as `out_start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimes {
    pub head: SimTime,
    pub ingress: SimTime,
    pub out_start: SimTime,
    pub egress: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// The frame itself overflowed the buffer.
    BufferOverflow,
    /// Evicted to make room for a newer frame.
    Backpressure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Disposition {
    Delivered,
    Dropped {
        stage: usize,
        reason: DropReason,
        at: SimTime,
        /// First and last byte arrival at the dropping stage.
        arrival_head: SimTime,
        arrival_tail: SimTime,
    },
    InFlight,
}

/// A frame still waiting inside a buffering stage when the run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingResidency {
    pub stage: usize,
    pub head: SimTime,
    /// Planned arrival of the last byte, possibly after `stopped_at`.
    pub ingress: SimTime,
    pub stopped_at: SimTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: u64,
    /// Bytes.
    pub size: u64,
    /// True capture time.
    pub generated_at: SimTime,
    /// Camera clock reading for the capture.
    pub camera_timestamp: SimTime,
    #[serde(default)]
    pub timestamp_clamped: bool,
    /// One entry per stage fully traversed, in pipeline order.
    pub stage_times: Vec<StageTimes>,
    pub disposition: Disposition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<PendingResidency>,
}

impl FrameRecord {
    pub fn is_delivered(&self) -> bool {
        self.disposition == Disposition::Delivered
    }

    pub fn is_dropped(&self) -> bool {
        matches!(self.disposition, Disposition::Dropped { .. })
    }

    /// Sensor egress to processor egress, for delivered frames.
    pub fn latency(&self) -> Option<SimTime> {
        if !self.is_delivered() {
            return None;
        }
        let first = self.stage_times.first()?;
        let last = self.stage_times.last()?;
        Some(last.egress - first.egress)
    }

    /// Processor egress for delivered frames.
    pub fn delivered_at(&self) -> Option<SimTime> {
        if self.is_delivered() {
            self.stage_times.last().map(|s| s.egress)
        } else {
            None
        }
    }

    /// Checks the time ordering within and across stages.
    pub fn causality_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (k, st) in self.stage_times.iter().enumerate() {
            if !(st.head <= st.ingress && st.ingress <= st.egress) {
                errs.push(format!(
                    "frame {} stage {k}: in/out order {st:?}",
                    self.frame_id
                ));
            }
            if !(st.head <= st.out_start && st.out_start <= st.egress) {
                errs.push(format!(
                    "frame {} stage {k}: departure order {st:?}",
                    self.frame_id
                ));
            }
            if let Some(next) = self.stage_times.get(k + 1) {
                if st.egress > next.ingress || st.out_start > next.head {
                    errs.push(format!(
                        "frame {} stage {k}->{}: leaves after the next stage saw it",
                        self.frame_id,
                        k + 1
                    ));
                }
                if st.head > next.head {
                    errs.push(format!(
                        "frame {} stage {k}->{}: head order",
                        self.frame_id,
                        k + 1
                    ));
                }
            }
        }
        if let Some(first) = self.stage_times.first() {
            if first.head != self.generated_at {
                errs.push(format!(
                    "frame {}: sensor head != generation time",
                    self.frame_id
                ));
            }
        }
        if let Disposition::Dropped {
            stage,
            at,
            arrival_head,
            arrival_tail,
            ..
        } = self.disposition
        {
            if stage != self.stage_times.len() {
                errs.push(format!(
                    "frame {}: drop stage {stage} out of sequence",
                    self.frame_id
                ));
            }
            if arrival_head > arrival_tail || at < arrival_head {
                errs.push(format!("frame {}: drop before arrival", self.frame_id));
            }
            if let Some(prev) = self.stage_times.last() {
                if prev.egress > arrival_tail {
                    errs.push(format!(
                        "frame {}: drop arrival before upstream egress",
                        self.frame_id
                    ));
                }
            }
        }
        errs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCondition {
    /// Generate this many frames and run until all are resolved.
    NFrames(u64),
    /// Generate frames captured before this time and stop the clock there.
    DurationNs(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropPolicy {
    #[default]
    DropNewest,
    DropOldest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub stop: StopCondition,
    pub seed: u64,
    #[serde(default)]
    pub drop_policy: DropPolicy,
    #[serde(default)]
    pub clock: ClockModel,
}

impl SimConfig {
    pub fn frames(n: u64, seed: u64) -> Self {
        SimConfig {
            stop: StopCondition::NFrames(n),
            seed,
            drop_policy: DropPolicy::default(),
            clock: ClockModel::default(),
        }
    }

    pub fn duration(d: SimTime, seed: u64) -> Self {
        SimConfig {
            stop: StopCondition::DurationNs(d.as_nanos()),
            ..Self::frames(0, seed)
        }
    }

    pub fn with_policy(mut self, policy: DropPolicy) -> Self {
        self.drop_policy = policy;
        self
    }

    pub fn with_clock(mut self, clock: ClockModel) -> Self {
        self.clock = clock;
        self
    }
}

/// Time to put `size` bytes on the wire, rounded up to whole ns.
pub fn serialization_time(size: u64, link: &LinkSpec) -> Result<SimTime> {
    if size == 0 {
        return Err(invalid("transmission size must be positive"));
    }
    let rate = effective_link_rate(link)?;
    if rate <= 0.0 {
        return Err(invalid("link rate must be positive"));
    }
    // Gb/s is bits per ns
    Ok(SimTime(ceil_ns(size as f64 * 8.0 / rate)))
}

pub fn propagation_delay(link: &LinkSpec) -> SimTime {
    SimTime(ceil_ns(link.cable_length_m * PROPAGATION_NS_PER_M))
}

/// Serialization plus cable propagation.
pub fn transmission_time(size: u64, link: &LinkSpec) -> Result<SimTime> {
    Ok(serialization_time(size, link)? + propagation_delay(link))
}

/// Runs `cfg` over `t` and summarizes the result.
pub fn run(t: &Topology, cfg: &SimConfig) -> Result<SimReport> {
    let violations = crate::topology::validate(t);
    if !violations.is_empty() {
        return Err(Error::InvalidTopology(violations));
    }
    cfg.clock.validate()?;
    let frames = engine::Engine::new(t, cfg)?.run();
    Ok(SimReport::new(t.clone(), cfg.clone(), frames))
}

/// Residencies of every frame at buffering stage `stage`, plus the instants
/// at which the stage filled up and dropped the arriving frame.
pub(crate) fn stage_residencies(
    frames: &[FrameRecord],
    stage: usize,
) -> (Vec<Residency>, Vec<SimTime>) {
    let mut residents = Vec::new();
    let mut full_at = Vec::new();
    for f in frames {
        if let Some(st) = f.stage_times.get(stage) {
            residents.push(Residency {
                size: f.size,
                arrive: (st.head, st.ingress),
                depart: Some((st.out_start, st.egress)),
                until: None,
            });
        } else if let Disposition::Dropped {
            stage: s,
            reason,
            at,
            arrival_head,
            arrival_tail,
        } = f.disposition
        {
            if s == stage {
                residents.push(Residency {
                    size: f.size,
                    arrive: (arrival_head, arrival_tail),
                    depart: None,
                    until: Some(at),
                });
                if reason == DropReason::BufferOverflow && at > arrival_head {
                    full_at.push(at);
                }
            }
        } else if let Some(p) = f.pending.filter(|p| p.stage == stage) {
            // only the bytes that arrived before the clock stopped
            let arrive = (p.head, p.ingress.min(p.stopped_at.max(p.head)));
            let size = if arrive.1 == p.ingress {
                f.size
            } else {
                occupancy::ramp(f.size, (p.head, p.ingress), arrive.1)
            };
            residents.push(Residency {
                size,
                arrive,
                depart: None,
                until: None,
            });
        }
    }
    (residents, full_at)
}

/// Occupancy of a stage as `(time, bytes)` samples at every change point.
///
/// Non-buffering stages hold no frame copies and have an empty trace.
pub fn occupancy_trace(report: &SimReport, stage: usize) -> Result<Vec<(SimTime, u64)>> {
    stage_trace(&report.topology, &report.frames, stage)
}

pub(crate) fn stage_trace(
    t: &Topology,
    frames: &[FrameRecord],
    stage: usize,
) -> Result<Vec<(SimTime, u64)>> {
    let spec = t.stages.get(stage).ok_or(Error::UnknownStage(stage))?;
    if !spec.is_buffering() {
        return Ok(Vec::new());
    }
    let (residents, full_at) = stage_residencies(frames, stage);
    Ok(occupancy::sweep(&residents, &full_at, spec.capacity()))
}
