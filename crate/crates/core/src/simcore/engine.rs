use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::occupancy::{first_overflow, Residency};
use super::{
    propagation_delay, serialization_time, Disposition, DropPolicy, DropReason, FrameRecord,
    PendingResidency, SimConfig, StageTimes, StopCondition,
};
use crate::error::{invalid, Result};
use crate::rng::{NoiseStream, CLOCK_STREAM, PROCESSING_STREAM};
use crate::time::SimTime;
use crate::timing::sample_timestamp;
use crate::topology::{Forwarding, ProcessingTime, StageKind, Topology};

#[derive(Clone, Copy, Debug)]
enum Event {
    Generate {
        frame: usize,
    },
    Eligible {
        stage: usize,
        frame: usize,
    },
    Arrive {
        stage: usize,
        frame: usize,
        head: SimTime,
        tail: SimTime,
    },
    LinkDone {
        stage: usize,
    },
    ProcessorReady {
        frame: usize,
    },
    ProcessorDone,
    Deliver {
        frame: usize,
    },
}

struct Scheduled {
    at: SimTime,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // min-heap on (time, insertion order)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

#[derive(Clone, Copy, Debug)]
struct Resident {
    frame: usize,
    head: SimTime,
    tail: SimTime,
    out: Option<(SimTime, SimTime)>,
}

enum StageState {
    Sensor {
        latency: SimTime,
        ready: VecDeque<usize>,
    },
    Store {
        capacity: Option<u64>,
        forwarding: Forwarding,
        latency: SimTime,
        residents: Vec<Resident>,
        ready: VecDeque<usize>,
    },
    Link {
        serialization: SimTime,
        propagation: SimTime,
        busy_until: Option<SimTime>,
    },
    Processor {
        processing: ProcessingTime,
        latency: SimTime,
        waiting: VecDeque<usize>,
        busy: bool,
    },
}

struct FrameState {
    record: FrameRecord,
    /// Latest arrival `(head, tail)` at a processor.
    arrival: (SimTime, SimTime),
    resolved: bool,
}

pub(super) struct Engine {
    stages: Vec<StageState>,
    frames: Vec<FrameState>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: SimTime,
    frame_bytes: u64,
    period: SimTime,
    stop: StopCondition,
    policy: DropPolicy,
    cfg: SimConfig,
    processing_noise: NoiseStream,
    clock_noise: NoiseStream,
}

impl Engine {
    pub(super) fn new(t: &Topology, cfg: &SimConfig) -> Result<Self> {
        let frame_bytes = t.camera.frame_bytes();
        let generates = match cfg.stop {
            StopCondition::NFrames(n) => n > 0,
            StopCondition::DurationNs(d) => d > 0,
        };
        let period = if t.camera.frame_rate > 0.0 {
            SimTime(((1e9 / t.camera.frame_rate).round() as u64).max(1))
        } else if generates {
            return Err(invalid("simulating frames needs a positive frame rate"));
        } else {
            SimTime::ZERO
        };
        let stages = t
            .stages
            .iter()
            .map(|s| {
                let latency = SimTime(s.fixed_latency_ns);
                Ok(match &s.kind {
                    StageKind::Sensor => StageState::Sensor {
                        latency,
                        ready: VecDeque::new(),
                    },
                    StageKind::Buffer { .. }
                    | StageKind::FrameGrabber { .. }
                    | StageKind::HostMemory => StageState::Store {
                        capacity: s.capacity(),
                        forwarding: s.forwarding(),
                        latency,
                        residents: Vec::new(),
                        ready: VecDeque::new(),
                    },
                    StageKind::Link { link } => StageState::Link {
                        serialization: serialization_time(frame_bytes, link)?,
                        propagation: propagation_delay(link),
                        busy_until: None,
                    },
                    StageKind::Processor { processing } => StageState::Processor {
                        processing: *processing,
                        latency,
                        waiting: VecDeque::new(),
                        busy: false,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Engine {
            stages,
            frames: Vec::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            now: SimTime::ZERO,
            frame_bytes,
            period,
            stop: cfg.stop,
            policy: cfg.drop_policy,
            cfg: cfg.clone(),
            processing_noise: NoiseStream::new(cfg.seed, PROCESSING_STREAM),
            clock_noise: NoiseStream::new(cfg.seed, CLOCK_STREAM),
        })
    }

    fn schedule(&mut self, at: SimTime, event: Event) {
        debug_assert!(at >= self.now, "event scheduled in the past");
        self.queue.push(Scheduled {
            at,
            seq: self.seq,
            event,
        });
        self.seq += 1;
    }

    fn should_generate(&self, frame: usize) -> bool {
        let start = self.period.0.saturating_mul(frame as u64);
        match self.stop {
            StopCondition::NFrames(n) => (frame as u64) < n,
            StopCondition::DurationNs(d) => start < d,
        }
    }

    pub(super) fn run(mut self) -> Vec<FrameRecord> {
        if self.should_generate(0) {
            self.schedule(SimTime::ZERO, Event::Generate { frame: 0 });
        }
        let horizon = match self.stop {
            StopCondition::NFrames(_) => None,
            StopCondition::DurationNs(d) => Some(SimTime(d)),
        };
        while let Some(next) = self.queue.pop() {
            if horizon.is_some_and(|h| next.at > h) {
                break;
            }
            debug_assert!(next.at >= self.now);
            self.now = next.at;
            self.handle(next.event);
        }
        self.finish()
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::Generate { frame } => self.generate(frame),
            Event::Eligible { stage, frame } => {
                if self.frames[frame].resolved {
                    return;
                }
                match &mut self.stages[stage] {
                    StageState::Sensor { ready, .. } | StageState::Store { ready, .. } => {
                        ready.push_back(frame)
                    }
                    _ => unreachable!("only sensors and stores hold frames"),
                }
                self.forward(stage);
            }
            Event::Arrive {
                stage,
                frame,
                head,
                tail,
            } => self.arrive(stage, frame, head, tail),
            Event::LinkDone { stage } => {
                if let StageState::Link { busy_until, .. } = &mut self.stages[stage] {
                    *busy_until = None;
                }
                self.forward(stage - 1);
            }
            Event::ProcessorReady { frame } => {
                if let Some(StageState::Processor { waiting, .. }) = self.stages.last_mut() {
                    waiting.push_back(frame);
                }
                self.process();
            }
            Event::ProcessorDone => {
                if let Some(StageState::Processor { busy, .. }) = self.stages.last_mut() {
                    *busy = false;
                }
                self.process();
            }
            Event::Deliver { frame } => {
                let f = &mut self.frames[frame];
                f.record.disposition = Disposition::Delivered;
                f.resolved = true;
            }
        }
    }

    fn generate(&mut self, frame: usize) {
        let g = self.now;
        let StageState::Sensor { latency, .. } = self.stages[0] else {
            unreachable!("validated: stage 0 is the sensor");
        };
        let stamp = sample_timestamp(&self.cfg.clock, g, &self.clock_noise, frame as u64);
        let read_out = g + latency;
        self.frames.push(FrameState {
            record: FrameRecord {
                frame_id: frame as u64,
                size: self.frame_bytes,
                generated_at: g,
                camera_timestamp: stamp.value,
                timestamp_clamped: stamp.clamped,
                stage_times: vec![StageTimes {
                    head: g,
                    ingress: g,
                    out_start: read_out,
                    egress: read_out,
                }],
                disposition: Disposition::InFlight,
                pending: None,
            },
            arrival: (g, g),
            resolved: false,
        });
        self.schedule(read_out, Event::Eligible { stage: 0, frame });
        if self.should_generate(frame + 1) {
            self.schedule(g + self.period, Event::Generate { frame: frame + 1 });
        }
    }

    fn record(&mut self, frame: usize, times: StageTimes) {
        self.frames[frame].record.stage_times.push(times);
    }

    /// Earliest time the last byte of `r` may leave store stage `stage`.
    fn release(latency: SimTime, r: &Resident) -> SimTime {
        r.tail + latency
    }

    fn eligible_at(
        forwarding: Forwarding,
        latency: SimTime,
        head: SimTime,
        tail: SimTime,
    ) -> SimTime {
        match forwarding {
            Forwarding::StoreAndForward => tail + latency,
            Forwarding::CutThrough => head + latency,
        }
    }

    /// Moves ready frames out of `stage` into the next one.
    fn forward(&mut self, stage: usize) {
        let now = self.now;
        let next = stage + 1;
        if let StageState::Link {
            serialization,
            propagation,
            busy_until,
        } = self.stages[next]
        {
            if busy_until.is_some() {
                return;
            }
            let (frame, release, resident) = match &mut self.stages[stage] {
                StageState::Sensor { ready, .. } => {
                    let Some(frame) = ready.pop_front() else {
                        return;
                    };
                    let release = self.frames[frame].record.stage_times[0].egress;
                    (frame, release, None)
                }
                StageState::Store {
                    ready,
                    residents,
                    latency,
                    ..
                } => {
                    let Some(frame) = ready.pop_front() else {
                        return;
                    };
                    let r = residents
                        .iter_mut()
                        .find(|r| r.frame == frame)
                        .expect("ready frame is resident");
                    let release = Self::release(*latency, r);
                    (frame, release, Some(r))
                }
                _ => unreachable!("validated: links are fed by sensors or stores"),
            };
            let start = now;
            let end = (start + serialization).max(release);
            let stage_entry = resident.map(|r| {
                r.out = Some((start, end));
                StageTimes {
                    head: r.head,
                    ingress: r.tail,
                    out_start: start,
                    egress: end,
                }
            });
            if let Some(entry) = stage_entry {
                self.record(frame, entry);
            }
            if let StageState::Link { busy_until, .. } = &mut self.stages[next] {
                *busy_until = Some(end);
            }
            self.record(
                frame,
                StageTimes {
                    head: start,
                    ingress: end,
                    out_start: start + propagation,
                    egress: end + propagation,
                },
            );
            self.schedule(end, Event::LinkDone { stage: next });
            self.schedule(
                start + propagation,
                Event::Arrive {
                    stage: next + 1,
                    frame,
                    head: start + propagation,
                    tail: end + propagation,
                },
            );
            return;
        }

        let mut moved = Vec::new();
        match &mut self.stages[stage] {
            StageState::Sensor { ready, .. } => {
                moved.extend(ready.drain(..).map(|f| (f, None, (now, now))));
            }
            StageState::Store {
                ready,
                residents,
                forwarding,
                latency,
                ..
            } => {
                for frame in ready.drain(..) {
                    let r = residents
                        .iter_mut()
                        .find(|r| r.frame == frame)
                        .expect("ready frame is resident");
                    let out = match forwarding {
                        Forwarding::StoreAndForward => (now, now),
                        Forwarding::CutThrough => (now, Self::release(*latency, r).max(now)),
                    };
                    r.out = Some(out);
                    let entry = StageTimes {
                        head: r.head,
                        ingress: r.tail,
                        out_start: out.0,
                        egress: out.1,
                    };
                    moved.push((frame, Some(entry), out));
                }
            }
            _ => unreachable!("only sensors and stores forward"),
        }
        for (frame, entry, (head, tail)) in moved {
            if let Some(entry) = entry {
                self.record(frame, entry);
            }
            self.schedule(
                now,
                Event::Arrive {
                    stage: next,
                    frame,
                    head,
                    tail,
                },
            );
        }
    }

    fn arrive(&mut self, stage: usize, frame: usize, head: SimTime, tail: SimTime) {
        match &self.stages[stage] {
            StageState::Processor { .. } => {
                self.frames[frame].arrival = (head, tail);
                self.schedule(tail, Event::ProcessorReady { frame });
            }
            StageState::Store {
                capacity,
                forwarding,
                latency,
                ..
            } => {
                let (capacity, forwarding, latency) = (*capacity, *forwarding, *latency);
                let candidate = Resident {
                    frame,
                    head,
                    tail,
                    out: None,
                };
                if let Some(cap) = capacity {
                    if !self.admit(stage, candidate, cap) {
                        return;
                    }
                } else if let StageState::Store { residents, .. } = &mut self.stages[stage] {
                    residents.push(candidate);
                }
                let at = Self::eligible_at(forwarding, latency, head, tail);
                self.schedule(at, Event::Eligible { stage, frame });
            }
            _ => unreachable!("validated: frames arrive at stores and processors only"),
        }
    }

    /// Planned departure ramp of every resident of `stage`, in FIFO order.
    fn plan(&self, stage: usize, residents: &[Resident]) -> Vec<(SimTime, SimTime)> {
        let StageState::Store {
            forwarding,
            latency,
            ..
        } = self.stages[stage]
        else {
            unreachable!("planning only applies to stores");
        };
        let mut out = Vec::with_capacity(residents.len());
        match self.stages[stage + 1] {
            StageState::Link {
                serialization,
                busy_until,
                ..
            } => {
                let mut cursor = busy_until.unwrap_or(self.now).max(self.now);
                for r in residents {
                    if let Some(o) = r.out {
                        out.push(o);
                        continue;
                    }
                    let start = Self::eligible_at(forwarding, latency, r.head, r.tail).max(cursor);
                    let end = (start + serialization).max(Self::release(latency, r));
                    cursor = end;
                    out.push((start, end));
                }
            }
            _ => {
                for r in residents {
                    out.push(r.out.unwrap_or_else(|| {
                        let start = Self::eligible_at(forwarding, latency, r.head, r.tail);
                        match forwarding {
                            Forwarding::StoreAndForward => (start, start),
                            Forwarding::CutThrough => (start, Self::release(latency, r)),
                        }
                    }));
                }
            }
        }
        out
    }

    fn residencies(
        &self,
        residents: &[Resident],
        plan: &[(SimTime, SimTime)],
        depart_last: bool,
    ) -> Vec<Residency> {
        let n = residents.len();
        residents
            .iter()
            .zip(plan)
            .enumerate()
            .map(|(i, (r, &out))| Residency {
                size: self.frame_bytes,
                arrive: (r.head, r.tail),
                depart: if i + 1 == n && !depart_last {
                    None
                } else {
                    Some(out)
                },
                until: None,
            })
            .collect()
    }

    /// Admission control for a bounded store. Returns whether `candidate`
    /// was admitted; drops and evictions are recorded here.
    fn admit(&mut self, stage: usize, candidate: Resident, capacity: u64) -> bool {
        let now = self.now;
        if let StageState::Store { residents, .. } = &mut self.stages[stage] {
            residents.retain(|r| r.out.is_none_or(|(_, end)| end > now));
        }
        let StageState::Store { residents, .. } = &self.stages[stage] else {
            unreachable!();
        };
        let original = residents.clone();
        let window = (candidate.head, candidate.tail);

        let mut kept = original.clone();
        let mut evicted: Vec<(Resident, SimTime)> = Vec::new();
        loop {
            let mut all = kept.clone();
            all.push(candidate);
            let plan = self.plan(stage, &all);
            let occupancy = self.residencies(&all, &plan, true);
            let Some(full) = first_overflow(&occupancy, window, capacity) else {
                break;
            };
            if self.policy == DropPolicy::DropOldest {
                let victim = kept
                    .iter()
                    .zip(&plan)
                    .position(|(r, &(start, _))| r.out.is_none() && start > full);
                if let Some(pos) = victim {
                    evicted.push((kept.remove(pos), full));
                    continue;
                }
            }
            // The arriving frame loses: it never starts leaving, so find
            // where the buffer fills without its departure.
            let mut all = original.clone();
            all.push(candidate);
            let plan = self.plan(stage, &all);
            let occupancy = self.residencies(&all, &plan, false);
            let at = first_overflow(&occupancy, window, capacity).unwrap_or(full);
            self.drop_frame(stage, candidate, DropReason::BufferOverflow, at);
            return false;
        }

        for (victim, at) in evicted {
            if let StageState::Store { ready, .. } = &mut self.stages[stage] {
                ready.retain(|&f| f != victim.frame);
            }
            self.drop_frame(stage, victim, DropReason::Backpressure, at);
        }
        kept.push(candidate);
        if let StageState::Store { residents, .. } = &mut self.stages[stage] {
            *residents = kept;
        }
        true
    }

    fn drop_frame(&mut self, stage: usize, r: Resident, reason: DropReason, at: SimTime) {
        let f = &mut self.frames[r.frame];
        f.record.disposition = Disposition::Dropped {
            stage,
            reason,
            at,
            arrival_head: r.head,
            arrival_tail: r.tail,
        };
        f.resolved = true;
    }

    fn process(&mut self) {
        let now = self.now;
        let Some(StageState::Processor {
            processing,
            latency,
            waiting,
            busy,
        }) = self.stages.last_mut()
        else {
            unreachable!("validated: last stage is the processor");
        };
        if *busy {
            return;
        }
        let Some(frame) = waiting.pop_front() else {
            return;
        };
        *busy = true;
        let (processing, latency) = (*processing, *latency);
        let work = draw_processing(&processing, &self.processing_noise, frame as u64);
        let egress = now + work + latency;
        let (head, tail) = self.frames[frame].arrival;
        self.record(
            frame,
            StageTimes {
                head,
                ingress: tail,
                out_start: now,
                egress,
            },
        );
        self.schedule(now + work, Event::ProcessorDone);
        self.schedule(egress, Event::Deliver { frame });
    }

    fn finish(mut self) -> Vec<FrameRecord> {
        let stopped_at = match self.stop {
            StopCondition::DurationNs(d) => SimTime(d),
            StopCondition::NFrames(_) => self.now,
        };
        for (k, stage) in self.stages.iter().enumerate() {
            if let StageState::Store { residents, .. } = stage {
                for r in residents.iter().filter(|r| r.out.is_none()) {
                    let f = &mut self.frames[r.frame];
                    if !f.resolved {
                        f.record.pending = Some(PendingResidency {
                            stage: k,
                            head: r.head,
                            ingress: r.tail,
                            stopped_at,
                        });
                    }
                }
            }
        }
        self.frames.into_iter().map(|f| f.record).collect()
    }
}

pub(crate) fn draw_processing(p: &ProcessingTime, noise: &NoiseStream, index: u64) -> SimTime {
    match *p {
        ProcessingTime::Fixed { ns } => SimTime(ns),
        ProcessingTime::Uniform { min_ns, max_ns } => {
            SimTime(noise.draw(index).random_range(min_ns..=max_ns))
        }
        ProcessingTime::Normal { mean_ns, sigma_ns } => {
            if sigma_ns == 0.0 {
                return SimTime(mean_ns.round() as u64);
            }
            let normal = Normal::new(mean_ns, sigma_ns).expect("validated processing time");
            SimTime(normal.sample(&mut noise.draw(index)).round().max(0.0) as u64)
        }
    }
}
