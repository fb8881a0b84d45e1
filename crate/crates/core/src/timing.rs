//! Camera clock model, timestamp accuracy and deadline checks.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::SimReport;
use crate::rng::NoiseStream;
use crate::simcore::FrameRecord;
use crate::time::SimTime;

/// Camera timestamping clock relative to true time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    #[serde(default)]
    pub offset_ns: i64,
    #[serde(default)]
    pub drift_ppm: f64,
    /// Standard deviation of Gaussian read jitter, ns.
    #[serde(default)]
    pub jitter_sigma_ns: f64,
}

impl ClockModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma_ns.is_finite() && self.jitter_sigma_ns >= 0.0) {
            return Err(invalid(format!(
                "jitter sigma {} ns must be finite and non-negative",
                self.jitter_sigma_ns
            )));
        }
        if !self.drift_ppm.is_finite() {
            return Err(invalid("clock drift must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeadlineSpec {
    pub safety_deadline_ns: u64,
    pub control_deadline_ns: u64,
    pub timestamp_rms_budget_ns: f64,
}

impl Default for DeadlineSpec {
    fn default() -> Self {
        DeadlineSpec {
            safety_deadline_ns: 100_000,
            control_deadline_ns: 20_000_000,
            timestamp_rms_budget_ns: 50.0,
        }
    }
}

impl DeadlineSpec {
    pub fn validate(&self) -> Result<()> {
        if self.safety_deadline_ns == 0 || self.control_deadline_ns == 0 {
            return Err(invalid("deadlines must be strictly positive"));
        }
        if !(self.timestamp_rms_budget_ns.is_finite() && self.timestamp_rms_budget_ns > 0.0) {
            return Err(invalid("timestamp RMS budget must be strictly positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Timestamp {
    pub value: SimTime,
    /// The raw reading was negative and has been clamped to zero.
    pub clamped: bool,
}

/// Reads the camera clock at `true_time` using draw `index` of `noise`.
pub fn sample_timestamp(
    clock: &ClockModel,
    true_time: SimTime,
    noise: &NoiseStream,
    index: u64,
) -> Timestamp {
    let t = i128::from(true_time.as_nanos());
    let mut frac = clock.drift_ppm * 1e-6 * true_time.as_nanos() as f64;
    if clock.jitter_sigma_ns > 0.0 {
        // sigma was validated finite and positive
        let normal = Normal::new(0.0, clock.jitter_sigma_ns).expect("valid sigma");
        frac += normal.sample(&mut noise.draw(index));
    }
    let reading = t + i128::from(clock.offset_ns) + frac.round() as i128;
    if reading < 0 {
        Timestamp {
            value: SimTime::ZERO,
            clamped: true,
        }
    } else {
        Timestamp {
            value: SimTime(reading.min(i128::from(u64::MAX)) as u64),
            clamped: false,
        }
    }
}

/// Root-mean-square of camera timestamp minus true generation time, ns.
pub fn timestamp_rms(records: &[FrameRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("timestamp RMS needs at least one frame"));
    }
    let sum_sq: f64 = records
        .iter()
        .map(|r| {
            let err = r.camera_timestamp.as_nanos() as f64 - r.generated_at.as_nanos() as f64;
            err * err
        })
        .sum();
    Ok((sum_sq / records.len() as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeadlineViolation {
    Safety {
        frame_id: u64,
        latency_ns: u64,
        deadline_ns: u64,
    },
    Control {
        frame_id: u64,
        latency_ns: u64,
        deadline_ns: u64,
    },
    TimestampRms {
        rms_ns: f64,
        budget_ns: f64,
    },
}

impl DeadlineViolation {
    pub fn is_safety(&self) -> bool {
        matches!(self, DeadlineViolation::Safety { .. })
    }

    pub fn is_control(&self) -> bool {
        matches!(self, DeadlineViolation::Control { .. })
    }
}

/// Deadline and timestamp-budget violations of a run.
pub fn check_deadlines(report: &SimReport, d: &DeadlineSpec) -> Vec<DeadlineViolation> {
    deadline_violations(&report.frames, d)
}

/// Latency is measured from sensor egress (frame read out) to processor
/// egress; frames that were not delivered have no latency and cannot miss.
pub fn deadline_violations(frames: &[FrameRecord], d: &DeadlineSpec) -> Vec<DeadlineViolation> {
    let mut out = Vec::new();
    for frame in frames {
        let Some(latency) = frame.latency() else {
            continue;
        };
        let latency_ns = latency.as_nanos();
        if latency_ns > d.safety_deadline_ns {
            out.push(DeadlineViolation::Safety {
                frame_id: frame.frame_id,
                latency_ns,
                deadline_ns: d.safety_deadline_ns,
            });
        }
        if latency_ns > d.control_deadline_ns {
            out.push(DeadlineViolation::Control {
                frame_id: frame.frame_id,
                latency_ns,
                deadline_ns: d.control_deadline_ns,
            });
        }
    }
    if let Ok(rms) = timestamp_rms(frames) {
        if rms > d.timestamp_rms_budget_ns {
            out.push(DeadlineViolation::TimestampRms {
                rms_ns: rms,
                budget_ns: d.timestamp_rms_budget_ns,
            });
        }
    }
    out
}
