//! Scenario files: a JSON description of cameras, architecture, clock,
//! deadlines and run settings that resolves to one simulation per camera.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmodel::{aggregate_rate, CameraSpec, LinkKind, LinkSpec, OverheadModel};
use crate::simcore::{DropPolicy, SimConfig, StopCondition};
use crate::timing::{ClockModel, DeadlineSpec};
use crate::topology::{
    build_classic_with, build_direct_with, validate, PipelineOptions, StageSpec, Topology,
};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    Classic {
        camera_interface: LinkSpec,
        pcie: LinkSpec,
        /// Bytes.
        grabber_capacity: u64,
    },
    Direct {
        pcie: LinkSpec,
    },
    Custom {
        stages: Vec<StageSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_frames: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ns: Option<u64>,
    pub seed: u64,
    #[serde(default)]
    pub drop_policy: DropPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub cameras: Vec<CameraSpec>,
    pub architecture: Architecture,
    /// Replaces the protocol efficiency of every PCIe link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhead: Option<OverheadModel>,
    #[serde(default)]
    pub clock: ClockModel,
    #[serde(default)]
    pub deadlines: DeadlineSpec,
    #[serde(default)]
    pub pipeline: PipelineOptions,
    pub sim: RunSettings,
}

/// One independent pipeline run produced by a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub name: String,
    pub topology: Topology,
    pub config: SimConfig,
}

fn scenario_err(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        if sc.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(scenario_err(format!(
                "unsupported schema_version {} (expected {SCENARIO_SCHEMA_VERSION})",
                sc.schema_version
            )));
        }
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Summed raw stream rate of every camera, Gb/s.
    pub fn aggregate_demand_gbps(&self) -> f64 {
        aggregate_rate(&self.cameras)
    }

    fn stop(&self) -> Result<StopCondition> {
        match (self.sim.n_frames, self.sim.duration_ns) {
            (Some(n), None) => Ok(StopCondition::NFrames(n)),
            (None, Some(d)) => Ok(StopCondition::DurationNs(d)),
            _ => Err(scenario_err(
                "sim needs exactly one of n_frames and duration_ns",
            )),
        }
    }

    fn tune(&self, link: LinkSpec) -> LinkSpec {
        match (self.overhead, link.kind) {
            (Some(o), LinkKind::Pcie { .. }) => link.with_efficiency(o.efficiency()),
            _ => link,
        }
    }

    fn topology(&self, cam: CameraSpec) -> Result<Topology> {
        let opts = PipelineOptions {
            deadlines: self.deadlines,
            ..self.pipeline.clone()
        };
        match &self.architecture {
            Architecture::Classic {
                camera_interface,
                pcie,
                grabber_capacity,
            } => build_classic_with(
                cam,
                self.tune(*camera_interface),
                self.tune(*pcie),
                *grabber_capacity,
                &opts,
            ),
            Architecture::Direct { pcie } => build_direct_with(cam, self.tune(*pcie), &opts),
            Architecture::Custom { stages } => {
                let mut stages = stages.clone();
                for s in &mut stages {
                    if let crate::topology::StageKind::Link { link } = &mut s.kind {
                        *link = self.tune(*link);
                    }
                }
                let t = Topology {
                    name: String::new(),
                    camera: cam,
                    stages,
                    deadlines: self.deadlines,
                };
                let violations = validate(&t);
                if violations.is_empty() {
                    Ok(t)
                } else {
                    Err(Error::InvalidTopology(violations))
                }
            }
        }
    }

    /// One run per camera. Camera `i` uses seed `seed + i` (wrapping) and is
    /// named `<name>.cam<i>` when there is more than one camera.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<Vec<Run>> {
        if self.cameras.is_empty() {
            return Err(scenario_err("at least one camera is required"));
        }
        if let Some(o) = &self.overhead {
            o.validate()?;
        }
        self.clock.validate()?;
        self.deadlines.validate()?;
        let stop = self.stop()?;
        let seed = seed_override.unwrap_or(self.sim.seed);
        let many = self.cameras.len() > 1;
        self.cameras
            .iter()
            .enumerate()
            .map(|(i, &cam)| {
                let name = if many {
                    format!("{}.cam{i}", self.name)
                } else {
                    self.name.clone()
                };
                let mut topology = self.topology(cam)?;
                topology.name = name.clone();
                Ok(Run {
                    name,
                    topology,
                    config: SimConfig {
                        stop,
                        seed: seed.wrapping_add(i as u64),
                        drop_policy: self.sim.drop_policy,
                        clock: self.clock,
                    },
                })
            })
            .collect()
    }
}
