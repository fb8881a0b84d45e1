//! Pipeline graphs for the classic (frame grabber) and direct (PCIe camera)
//! acquisition chains.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::linkmodel::{CameraSpec, LinkSpec};
use crate::timing::DeadlineSpec;

/// Camera FPGA memory used by the prebuilt pipelines, bytes (256 MiB).
pub const DEFAULT_CAMERA_BUFFER_BYTES: u64 = 256 << 20;

/// Cable propagation delay for every link kind, ns per meter.
pub const PROPAGATION_NS_PER_M: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forwarding {
    StoreAndForward,
    CutThrough,
}

/// Per-frame processing time of a processor stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum ProcessingTime {
    Fixed {
        ns: u64,
    },
    /// Uniform over the closed range.
    Uniform {
        min_ns: u64,
        max_ns: u64,
    },
    /// Gaussian, truncated at zero.
    Normal {
        mean_ns: f64,
        sigma_ns: f64,
    },
}

impl Default for ProcessingTime {
    fn default() -> Self {
        ProcessingTime::Fixed { ns: 0 }
    }
}

impl ProcessingTime {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessingTime::Fixed { .. } => Ok(()),
            ProcessingTime::Uniform { min_ns, max_ns } if min_ns > max_ns => Err(invalid(format!(
                "uniform processing range {min_ns}..={max_ns} is empty"
            ))),
            ProcessingTime::Uniform { .. } => Ok(()),
            ProcessingTime::Normal { mean_ns, sigma_ns } => {
                if mean_ns.is_finite() && mean_ns >= 0.0 && sigma_ns.is_finite() && sigma_ns >= 0.0
                {
                    Ok(())
                } else {
                    Err(invalid(format!(
                        "normal processing time needs mean >= 0 and sigma >= 0, got {mean_ns}/{sigma_ns}"
                    )))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StageKind {
    Sensor,
    Buffer {
        capacity: u64,
        forwarding: Forwarding,
    },
    Link {
        link: LinkSpec,
    },
    /// Always store-and-forward: the grabber re-packs whole frames.
    FrameGrabber {
        capacity: u64,
    },
    /// Unbounded host RAM.
    HostMemory,
    Processor {
        #[serde(default)]
        processing: ProcessingTime,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub kind: StageKind,
    /// For sensors: readout time. For buffers: forwarding delay (the
    /// cut-through latency when cutting through). For processors: delivery
    /// delay after processing.
    #[serde(default)]
    pub fixed_latency_ns: u64,
}

impl StageSpec {
    pub fn new(kind: StageKind) -> Self {
        StageSpec {
            kind,
            fixed_latency_ns: 0,
        }
    }

    pub fn with_latency(mut self, ns: u64) -> Self {
        self.fixed_latency_ns = ns;
        self
    }

    pub fn sensor() -> Self {
        Self::new(StageKind::Sensor)
    }

    pub fn buffer(capacity: u64, forwarding: Forwarding) -> Self {
        Self::new(StageKind::Buffer {
            capacity,
            forwarding,
        })
    }

    pub fn link(link: LinkSpec) -> Self {
        Self::new(StageKind::Link { link })
    }

    pub fn frame_grabber(capacity: u64) -> Self {
        Self::new(StageKind::FrameGrabber { capacity })
    }

    pub fn host_memory() -> Self {
        Self::new(StageKind::HostMemory)
    }

    pub fn processor(processing: ProcessingTime) -> Self {
        Self::new(StageKind::Processor { processing })
    }

    /// Whether a whole frame is materialized in memory at this stage.
    pub fn is_buffering(&self) -> bool {
        matches!(
            self.kind,
            StageKind::Buffer { .. } | StageKind::FrameGrabber { .. } | StageKind::HostMemory
        )
    }

    /// Byte capacity for bounded buffering stages.
    pub fn capacity(&self) -> Option<u64> {
        match self.kind {
            StageKind::Buffer { capacity, .. } | StageKind::FrameGrabber { capacity } => {
                Some(capacity)
            }
            _ => None,
        }
    }

    pub fn forwarding(&self) -> Forwarding {
        match self.kind {
            StageKind::Buffer { forwarding, .. } => forwarding,
            _ => Forwarding::StoreAndForward,
        }
    }

    pub fn link_spec(&self) -> Option<&LinkSpec> {
        match &self.kind {
            StageKind::Link { link } => Some(link),
            _ => None,
        }
    }

    fn can_feed_link(&self) -> bool {
        matches!(
            self.kind,
            StageKind::Sensor | StageKind::Buffer { .. } | StageKind::FrameGrabber { .. }
        )
    }

    pub fn label(&self) -> String {
        match &self.kind {
            StageKind::Sensor => "sensor".into(),
            StageKind::Buffer { forwarding, .. } => match forwarding {
                Forwarding::StoreAndForward => "buffer (store-and-forward)".into(),
                Forwarding::CutThrough => "buffer (cut-through)".into(),
            },
            StageKind::Link { link } => format!("link {}", link.kind),
            StageKind::FrameGrabber { .. } => "frame grabber".into(),
            StageKind::HostMemory => "host memory".into(),
            StageKind::Processor { .. } => "processor".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub name: String,
    pub camera: CameraSpec,
    pub stages: Vec<StageSpec>,
    #[serde(default)]
    pub deadlines: DeadlineSpec,
}

impl Topology {
    /// Canonical JSON form; key order follows field declaration order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("topology serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }

    pub fn frame_grabbers(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| matches!(s.kind, StageKind::FrameGrabber { .. }))
            .count()
    }

    /// Index of the sensor stage whose egress starts deadline latency.
    pub fn sensor_index(&self) -> usize {
        0
    }

    pub fn processor_index(&self) -> usize {
        self.stages.len().saturating_sub(1)
    }

    /// Inserts `stage` before position `index`.
    pub fn insert_stage(&mut self, index: usize, stage: StageSpec) {
        self.stages.insert(index, stage);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NonEmpty,
    FirstStageSensor,
    LastStageProcessor,
    LinkPresent,
    LinkFedByEmitter,
    SingleSensor,
    SingleProcessor,
    PositiveCapacity,
    ValidLink,
    ValidCamera,
    ValidProcessing,
    ValidDeadlines,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::NonEmpty => "topology has stages",
            Rule::FirstStageSensor => "first stage is Sensor",
            Rule::LastStageProcessor => "last stage is Processor",
            Rule::LinkPresent => "at least one LinkStage present",
            Rule::LinkFedByEmitter => "LinkStage preceded by Sensor, BufferStage or FrameGrabber",
            Rule::SingleSensor => "Sensor only at the head",
            Rule::SingleProcessor => "Processor only at the tail",
            Rule::PositiveCapacity => "buffer capacity > 0",
            Rule::ValidLink => "link spec valid",
            Rule::ValidCamera => "camera spec valid",
            Rule::ValidProcessing => "processing time valid",
            Rule::ValidDeadlines => "deadlines strictly positive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Offending stage, when the rule concerns one.
    pub stage: Option<usize>,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Violation {
    fn at(stage: usize, rule: Rule) -> Self {
        Violation {
            stage: Some(stage),
            rule,
            detail: String::new(),
        }
    }

    fn global(rule: Rule) -> Self {
        Violation {
            stage: None,
            rule,
            detail: String::new(),
        }
    }

    fn detail(mut self, err: Error) -> Self {
        self.detail = err.to_string();
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(i) => write!(f, "stage {i}: {}", self.rule)?,
            None => write!(f, "{}", self.rule)?,
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Every rule the topology breaks; empty when it is valid.
pub fn validate(t: &Topology) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = t.camera.validate() {
        out.push(Violation::global(Rule::ValidCamera).detail(e));
    }
    if let Err(e) = t.deadlines.validate() {
        out.push(Violation::global(Rule::ValidDeadlines).detail(e));
    }
    let stages = &t.stages;
    if stages.is_empty() {
        out.push(Violation::global(Rule::NonEmpty));
        return out;
    }
    let last = stages.len() - 1;
    if !matches!(stages[0].kind, StageKind::Sensor) {
        out.push(Violation::at(0, Rule::FirstStageSensor));
    }
    if !matches!(stages[last].kind, StageKind::Processor { .. }) {
        out.push(Violation::at(last, Rule::LastStageProcessor));
    }
    if !stages
        .iter()
        .any(|s| matches!(s.kind, StageKind::Link { .. }))
    {
        out.push(Violation::global(Rule::LinkPresent));
    }
    for (i, stage) in stages.iter().enumerate() {
        match &stage.kind {
            StageKind::Sensor if i != 0 => out.push(Violation::at(i, Rule::SingleSensor)),
            StageKind::Processor { processing } => {
                if i != last {
                    out.push(Violation::at(i, Rule::SingleProcessor));
                }
                if let Err(e) = processing.validate() {
                    out.push(Violation::at(i, Rule::ValidProcessing).detail(e));
                }
            }
            StageKind::Link { link } => {
                if i == 0 || !stages[i - 1].can_feed_link() {
                    out.push(Violation::at(i, Rule::LinkFedByEmitter));
                }
                if let Err(e) = link.validate() {
                    out.push(Violation::at(i, Rule::ValidLink).detail(e));
                }
            }
            StageKind::Buffer { capacity: 0, .. } | StageKind::FrameGrabber { capacity: 0 } => {
                out.push(Violation::at(i, Rule::PositiveCapacity))
            }
            _ => {}
        }
    }
    out
}

/// Number of stages that hold a full copy of each frame.
pub fn copy_count(t: &Topology) -> usize {
    t.stages.iter().filter(|s| s.is_buffering()).count()
}

/// Knobs shared by the prebuilt pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub camera_buffer_capacity: u64,
    /// Defaults to store-and-forward for classic, cut-through for direct.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera_forwarding: Option<Forwarding>,
    pub sensor_latency_ns: u64,
    pub camera_buffer_latency_ns: u64,
    pub grabber_latency_ns: u64,
    pub host_latency_ns: u64,
    pub processor_latency_ns: u64,
    pub processing: ProcessingTime,
    pub deadlines: DeadlineSpec,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            camera_buffer_capacity: DEFAULT_CAMERA_BUFFER_BYTES,
            camera_forwarding: None,
            sensor_latency_ns: 0,
            camera_buffer_latency_ns: 0,
            grabber_latency_ns: 0,
            host_latency_ns: 0,
            processor_latency_ns: 0,
            processing: ProcessingTime::default(),
            deadlines: DeadlineSpec::default(),
        }
    }
}

fn finish(t: Topology) -> Result<Topology> {
    let violations = validate(&t);
    if violations.is_empty() {
        Ok(t)
    } else {
        Err(Error::InvalidTopology(violations))
    }
}

/// Sensor → camera buffer → camera interface → frame grabber → PCIe → host → processor.
pub fn build_classic(
    cam: CameraSpec,
    ci: LinkSpec,
    pcie: LinkSpec,
    grabber_capacity: u64,
) -> Result<Topology> {
    build_classic_with(cam, ci, pcie, grabber_capacity, &PipelineOptions::default())
}

pub fn build_classic_with(
    cam: CameraSpec,
    ci: LinkSpec,
    pcie: LinkSpec,
    grabber_capacity: u64,
    opts: &PipelineOptions,
) -> Result<Topology> {
    cam.validate()?;
    ci.validate()?;
    pcie.validate()?;
    if grabber_capacity == 0 {
        return Err(invalid("frame grabber capacity must be positive"));
    }
    let forwarding = opts
        .camera_forwarding
        .unwrap_or(Forwarding::StoreAndForward);
    finish(Topology {
        name: "classic".into(),
        camera: cam,
        stages: vec![
            StageSpec::sensor().with_latency(opts.sensor_latency_ns),
            StageSpec::buffer(opts.camera_buffer_capacity, forwarding)
                .with_latency(opts.camera_buffer_latency_ns),
            StageSpec::link(ci),
            StageSpec::frame_grabber(grabber_capacity).with_latency(opts.grabber_latency_ns),
            StageSpec::link(pcie),
            StageSpec::host_memory().with_latency(opts.host_latency_ns),
            StageSpec::processor(opts.processing).with_latency(opts.processor_latency_ns),
        ],
        deadlines: opts.deadlines,
    })
}

/// Sensor → camera buffer → PCIe → host → processor.
pub fn build_direct(cam: CameraSpec, pcie: LinkSpec) -> Result<Topology> {
    build_direct_with(cam, pcie, &PipelineOptions::default())
}

pub fn build_direct_with(
    cam: CameraSpec,
    pcie: LinkSpec,
    opts: &PipelineOptions,
) -> Result<Topology> {
    cam.validate()?;
    pcie.validate()?;
    let forwarding = opts.camera_forwarding.unwrap_or(Forwarding::CutThrough);
    finish(Topology {
        name: "direct".into(),
        camera: cam,
        stages: vec![
            StageSpec::sensor().with_latency(opts.sensor_latency_ns),
            StageSpec::buffer(opts.camera_buffer_capacity, forwarding)
                .with_latency(opts.camera_buffer_latency_ns),
            StageSpec::link(pcie),
            StageSpec::host_memory().with_latency(opts.host_latency_ns),
            StageSpec::processor(opts.processing).with_latency(opts.processor_latency_ns),
        ],
        deadlines: opts.deadlines,
    })
}
