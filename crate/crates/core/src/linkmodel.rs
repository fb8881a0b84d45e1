//! Camera stream rates and effective link throughput.
//!
//! All rates are decimal Gb/s (`1 Gb/s = 1e9 b/s`). PCIe rates follow the
//! standard transfer-rate ladder and line codes; the other interface presets
//! are configuration constants taken from the respective standards.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance used for every rate comparison, in Gb/s.
pub const RATE_TOLERANCE_GBPS: f64 = 1e-9;

/// Lane widths a PCIe link may be trained to.
pub const PCIE_LANE_WIDTHS: [u8; 5] = [1, 2, 4, 8, 16];

/// PCIe generations covered by the model.
pub const PCIE_GENERATIONS: std::ops::RangeInclusive<u8> = 1..=5;

/// Camera Link pixel clock, MHz.
pub const CAMERA_LINK_PIXEL_CLOCK_MHZ: f64 = 85.0;

/// CLHS per-lane rate, Gb/s.
pub const CLHS_LANE_GBPS: f64 = 10.3;

/// USB3 (SuperSpeed) signalling rate, Gb/s.
pub const USB3_GBPS: f64 = 5.0;

/// Sensor envelope; cameras outside it validate with a warning.
pub const RESOLUTION_ENVELOPE: (u64, u64) = (1_000_000, 8_000_000);
pub const FRAME_RATE_ENVELOPE: (f64, f64) = (50.0, 50_000.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub resolution_pixels: u64,
    pub bit_depth: u8,
    /// Frames per second.
    pub frame_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CameraWarning {
    ResolutionOutsideEnvelope(u64),
    FrameRateOutsideEnvelope(f64),
}

impl fmt::Display for CameraWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CameraWarning::ResolutionOutsideEnvelope(px) => write!(
                f,
                "resolution {px} px outside the {}..{} px envelope",
                RESOLUTION_ENVELOPE.0, RESOLUTION_ENVELOPE.1
            ),
            CameraWarning::FrameRateOutsideEnvelope(fps) => write!(
                f,
                "frame rate {fps} fps outside the {}..{} fps envelope",
                FRAME_RATE_ENVELOPE.0, FRAME_RATE_ENVELOPE.1
            ),
        }
    }
}

impl CameraSpec {
    pub fn new(resolution_pixels: u64, bit_depth: u8, frame_rate: f64) -> Result<Self> {
        let cam = CameraSpec {
            resolution_pixels,
            bit_depth,
            frame_rate,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Checks the hard invariants and returns soft envelope warnings.
    pub fn validate(&self) -> Result<Vec<CameraWarning>> {
        if self.resolution_pixels == 0 {
            return Err(invalid("camera resolution must be at least 1 pixel"));
        }
        if !(1..=64).contains(&self.bit_depth) {
            return Err(invalid(format!(
                "bit depth {} outside 1..=64",
                self.bit_depth
            )));
        }
        if !self.frame_rate.is_finite() || self.frame_rate < 0.0 {
            return Err(invalid(format!(
                "frame rate {} must be finite and non-negative",
                self.frame_rate
            )));
        }
        let mut warnings = Vec::new();
        if self.resolution_pixels < RESOLUTION_ENVELOPE.0
            || self.resolution_pixels > RESOLUTION_ENVELOPE.1
        {
            warnings.push(CameraWarning::ResolutionOutsideEnvelope(
                self.resolution_pixels,
            ));
        }
        if self.frame_rate < FRAME_RATE_ENVELOPE.0 || self.frame_rate > FRAME_RATE_ENVELOPE.1 {
            warnings.push(CameraWarning::FrameRateOutsideEnvelope(self.frame_rate));
        }
        Ok(warnings)
    }

    /// Bits in one frame.
    pub fn frame_bits(&self) -> u64 {
        self.resolution_pixels * u64::from(self.bit_depth)
    }

    /// Bytes in one frame, rounded up to whole bytes.
    pub fn frame_bytes(&self) -> u64 {
        self.frame_bits().div_ceil(8)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraLinkConfig {
    Base,
    Medium,
    Full,
}

impl CameraLinkConfig {
    /// Data bits carried per pixel clock.
    pub fn bits_per_clock(self) -> u32 {
        match self {
            CameraLinkConfig::Base => 24,
            CameraLinkConfig::Medium => 48,
            CameraLinkConfig::Full => 84,
        }
    }

    pub fn raw_rate_gbps(self) -> f64 {
        f64::from(self.bits_per_clock()) * CAMERA_LINK_PIXEL_CLOCK_MHZ / 1000.0
    }
}

/// CoaXPress speed grades.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CxpGrade {
    #[serde(rename = "CXP-1")]
    Cxp1,
    #[serde(rename = "CXP-2")]
    Cxp2,
    #[serde(rename = "CXP-3")]
    Cxp3,
    #[serde(rename = "CXP-5")]
    Cxp5,
    #[serde(rename = "CXP-6")]
    Cxp6,
    #[serde(rename = "CXP-10")]
    Cxp10,
    #[serde(rename = "CXP-12")]
    Cxp12,
}

impl CxpGrade {
    pub const ALL: [CxpGrade; 7] = [
        CxpGrade::Cxp1,
        CxpGrade::Cxp2,
        CxpGrade::Cxp3,
        CxpGrade::Cxp5,
        CxpGrade::Cxp6,
        CxpGrade::Cxp10,
        CxpGrade::Cxp12,
    ];

    /// Per-link bit rate, Gb/s.
    pub fn link_rate_gbps(self) -> f64 {
        match self {
            CxpGrade::Cxp1 => 1.25,
            CxpGrade::Cxp2 => 2.5,
            CxpGrade::Cxp3 => 3.125,
            CxpGrade::Cxp5 => 5.0,
            CxpGrade::Cxp6 => 6.25,
            CxpGrade::Cxp10 => 10.0,
            CxpGrade::Cxp12 => 12.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CxpGrade::Cxp1 => "CXP-1",
            CxpGrade::Cxp2 => "CXP-2",
            CxpGrade::Cxp3 => "CXP-3",
            CxpGrade::Cxp5 => "CXP-5",
            CxpGrade::Cxp6 => "CXP-6",
            CxpGrade::Cxp10 => "CXP-10",
            CxpGrade::Cxp12 => "CXP-12",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GigERate {
    #[serde(rename = "1G")]
    OneGig,
    #[serde(rename = "10G")]
    TenGig,
}

impl GigERate {
    pub fn rate_gbps(self) -> f64 {
        match self {
            GigERate::OneGig => 1.0,
            GigERate::TenGig => 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LinkKind {
    Pcie {
        generation: u8,
        lanes: u8,
    },
    CameraLink {
        config: CameraLinkConfig,
    },
    #[serde(rename = "coaxpress")]
    CoaXPress {
        grade: CxpGrade,
        links: u8,
    },
    #[serde(rename = "gige_vision")]
    GigEVision {
        rate: GigERate,
    },
    Clhs {
        lanes: u8,
    },
    Usb3,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LinkKind::Pcie { generation, lanes } => write!(f, "PCIe gen{generation} x{lanes}"),
            LinkKind::CameraLink { config } => write!(f, "Camera Link {config:?}"),
            LinkKind::CoaXPress { grade, links } => {
                write!(f, "CoaXPress {} x{links}", grade.label())
            }
            LinkKind::GigEVision { rate } => match rate {
                GigERate::OneGig => f.write_str("GigE Vision 1G"),
                GigERate::TenGig => f.write_str("GigE Vision 10G"),
            },
            LinkKind::Clhs { lanes } => write!(f, "CLHS x{lanes}"),
            LinkKind::Usb3 => f.write_str("USB3 Vision"),
        }
    }
}

fn unit_efficiency() -> f64 {
    1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// One camera-interface or PCIe link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub kind: LinkKind,
    /// Meters.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub cable_length_m: f64,
    #[serde(default = "unit_efficiency")]
    pub protocol_efficiency: f64,
    /// Replaces the preset raw rate (before protocol efficiency), Gb/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_rate_override_gbps: Option<f64>,
}

impl LinkSpec {
    pub fn new(kind: LinkKind) -> Self {
        LinkSpec {
            kind,
            cable_length_m: 0.0,
            protocol_efficiency: 1.0,
            raw_rate_override_gbps: None,
        }
    }

    pub fn pcie(generation: u8, lanes: u8) -> Self {
        Self::new(LinkKind::Pcie { generation, lanes })
    }

    pub fn camera_link(config: CameraLinkConfig) -> Self {
        Self::new(LinkKind::CameraLink { config })
    }

    pub fn with_efficiency(mut self, protocol_efficiency: f64) -> Self {
        self.protocol_efficiency = protocol_efficiency;
        self
    }

    pub fn with_cable(mut self, meters: f64) -> Self {
        self.cable_length_m = meters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LinkKind::Pcie { generation, lanes } => {
                check_generation(generation)?;
                if !PCIE_LANE_WIDTHS.contains(&lanes) {
                    return Err(invalid(format!(
                        "PCIe lane count {lanes} not one of {PCIE_LANE_WIDTHS:?}"
                    )));
                }
            }
            LinkKind::CoaXPress { links, .. } if !(1..=8).contains(&links) => {
                return Err(invalid(format!(
                    "CoaXPress link count {links} outside 1..=8"
                )));
            }
            LinkKind::Clhs { lanes } if !(1..=8).contains(&lanes) => {
                return Err(invalid(format!("CLHS lane count {lanes} outside 1..=8")));
            }
            _ => {}
        }
        if !self.cable_length_m.is_finite() || self.cable_length_m < 0.0 {
            return Err(invalid(format!(
                "cable length {} m must be finite and non-negative",
                self.cable_length_m
            )));
        }
        if !(self.protocol_efficiency > 0.0 && self.protocol_efficiency <= 1.0) {
            return Err(invalid(format!(
                "protocol efficiency {} outside (0, 1]",
                self.protocol_efficiency
            )));
        }
        if let Some(raw) = self.raw_rate_override_gbps {
            if !(raw.is_finite() && raw > 0.0) {
                return Err(invalid(format!(
                    "raw rate override {raw} Gb/s must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Line rate after encoding but before protocol efficiency, Gb/s.
    pub fn raw_rate_gbps(&self) -> Result<f64> {
        self.validate()?;
        if let Some(raw) = self.raw_rate_override_gbps {
            return Ok(raw);
        }
        Ok(match self.kind {
            LinkKind::Pcie { generation, lanes } => {
                f64::from(lanes) * raw_lane_rate(generation)? * encoding_efficiency(generation)?
            }
            LinkKind::CameraLink { config } => config.raw_rate_gbps(),
            LinkKind::CoaXPress { grade, links } => f64::from(links) * grade.link_rate_gbps(),
            LinkKind::GigEVision { rate } => rate.rate_gbps(),
            LinkKind::Clhs { lanes } => f64::from(lanes) * CLHS_LANE_GBPS,
            LinkKind::Usb3 => USB3_GBPS,
        })
    }
}

fn check_generation(generation: u8) -> Result<()> {
    if PCIE_GENERATIONS.contains(&generation) {
        Ok(())
    } else {
        Err(invalid(format!(
            "PCIe generation {generation} outside 1..=5"
        )))
    }
}

/// Packetization overhead of a PCIe link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    /// Bytes of payload per packet.
    pub max_payload: u32,
    /// Framing, header and CRC bytes per packet.
    pub header_overhead: u32,
    pub flow_control_factor: f64,
}

impl Default for OverheadModel {
    fn default() -> Self {
        OverheadModel {
            max_payload: 256,
            header_overhead: 28,
            flow_control_factor: 1.0,
        }
    }
}

impl OverheadModel {
    pub fn validate(&self) -> Result<()> {
        if self.max_payload == 0 {
            return Err(invalid("max payload must be positive"));
        }
        if !(self.flow_control_factor > 0.0 && self.flow_control_factor <= 1.0) {
            return Err(invalid(format!(
                "flow control factor {} outside (0, 1]",
                self.flow_control_factor
            )));
        }
        Ok(())
    }

    pub fn efficiency(&self) -> f64 {
        let payload = f64::from(self.max_payload);
        self.flow_control_factor * payload / (payload + f64::from(self.header_overhead))
    }
}

/// Raw PCIe transfer rate per lane, GT/s.
pub fn raw_lane_rate(generation: u8) -> Result<f64> {
    check_generation(generation)?;
    Ok(match generation {
        1 => 2.5,
        2 => 5.0,
        3 => 8.0,
        4 => 16.0,
        _ => 32.0,
    })
}

/// Line-code efficiency: 8b/10b through gen 2, 128b/130b from gen 3.
pub fn encoding_efficiency(generation: u8) -> Result<f64> {
    check_generation(generation)?;
    Ok(if generation <= 2 {
        8.0 / 10.0
    } else {
        128.0 / 130.0
    })
}

/// Payload throughput of a link, Gb/s.
pub fn effective_link_rate(spec: &LinkSpec) -> Result<f64> {
    Ok(spec.raw_rate_gbps()? * spec.protocol_efficiency)
}

/// Raw sensor output, Gb/s.
pub fn camera_stream_rate(cam: &CameraSpec) -> f64 {
    cam.resolution_pixels as f64 * f64::from(cam.bit_depth) * cam.frame_rate / 1e9
}

pub fn aggregate_rate(cams: &[CameraSpec]) -> f64 {
    cams.iter().map(camera_stream_rate).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Link rate minus camera demand, Gb/s.
    pub margin_gbps: f64,
}

pub fn feasible(cam: &CameraSpec, link: &LinkSpec) -> Result<Feasibility> {
    cam.validate()?;
    let margin_gbps = effective_link_rate(link)? - camera_stream_rate(cam);
    Ok(Feasibility {
        feasible: margin_gbps >= -RATE_TOLERANCE_GBPS,
        margin_gbps,
    })
}

/// Narrowest PCIe width of `generation` that carries the camera stream.
pub fn min_lanes(cam: &CameraSpec, generation: u8, overhead: &OverheadModel) -> Result<u8> {
    cam.validate()?;
    overhead.validate()?;
    check_generation(generation)?;
    let demand = camera_stream_rate(cam);
    for lanes in PCIE_LANE_WIDTHS {
        let link = LinkSpec::pcie(generation, lanes).with_efficiency(overhead.efficiency());
        if effective_link_rate(&link)? >= demand - RATE_TOLERANCE_GBPS {
            return Ok(lanes);
        }
    }
    Err(Error::NoFeasibleWidth {
        generation,
        demand_gbps: demand,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: f64 = RATE_TOLERANCE_GBPS;

    fn cam(px: u64, bits: u8, fps: f64) -> CameraSpec {
        CameraSpec::new(px, bits, fps).unwrap()
    }

    #[test]
    fn lane_rate_ladder() {
        assert_eq!(raw_lane_rate(3).unwrap(), 8.0);
        assert_eq!(raw_lane_rate(5).unwrap(), 32.0);
        assert!(matches!(raw_lane_rate(6), Err(Error::InvalidSpec(_))));
        assert!(raw_lane_rate(0).is_err());
    }

    #[test]
    fn line_codes() {
        assert!((encoding_efficiency(1).unwrap() - 0.8).abs() < EXACT);
        assert!((encoding_efficiency(3).unwrap() - 0.984_615_384_6).abs() < 1e-9);
        assert_eq!(encoding_efficiency(5).unwrap(), 128.0 / 130.0);
        assert!(encoding_efficiency(9).is_err());
    }

    #[test]
    fn pcie_rates_match_quoted_figures() {
        let gen3 = effective_link_rate(&LinkSpec::pcie(3, 1)).unwrap();
        assert!((gen3 - 7.877).abs() < 0.001, "{gen3}");
        assert!((gen3 - 8.0 * 128.0 / 130.0).abs() < EXACT);
        let gen5x16 = effective_link_rate(&LinkSpec::pcie(5, 16)).unwrap();
        assert!((gen5x16 - 504.123).abs() < 0.001, "{gen5x16}");
        let gen1 = effective_link_rate(&LinkSpec::pcie(1, 1)).unwrap();
        assert!((gen1 - 2.0).abs() < EXACT);
    }

    #[test]
    fn camera_link_presets() {
        let full = effective_link_rate(&LinkSpec::camera_link(CameraLinkConfig::Full)).unwrap();
        assert!((full - 7.14).abs() < EXACT);
        let base = effective_link_rate(&LinkSpec::camera_link(CameraLinkConfig::Base)).unwrap();
        assert!((base - 2.04).abs() < EXACT);
        let medium = effective_link_rate(&LinkSpec::camera_link(CameraLinkConfig::Medium)).unwrap();
        assert!((medium - 4.08).abs() < EXACT);
    }

    #[test]
    fn protocol_efficiency_scales_rate() {
        let link = LinkSpec::pcie(3, 4).with_efficiency(0.5);
        let full = effective_link_rate(&LinkSpec::pcie(3, 4)).unwrap();
        assert!((effective_link_rate(&link).unwrap() - full / 2.0).abs() < EXACT);
    }

    #[test]
    fn link_validation() {
        assert!(LinkSpec::pcie(3, 3).validate().is_err());
        assert!(LinkSpec::pcie(6, 1).validate().is_err());
        assert!(LinkSpec::pcie(3, 1)
            .with_efficiency(0.0)
            .validate()
            .is_err());
        assert!(LinkSpec::pcie(3, 1)
            .with_efficiency(1.01)
            .validate()
            .is_err());
        assert!(LinkSpec::pcie(3, 1).with_cable(-1.0).validate().is_err());
        assert!(LinkSpec::new(LinkKind::Clhs { lanes: 0 })
            .validate()
            .is_err());
        assert!(LinkSpec::new(LinkKind::CoaXPress {
            grade: CxpGrade::Cxp12,
            links: 4
        })
        .validate()
        .is_ok());
    }

    #[test]
    fn stream_rates() {
        assert_eq!(camera_stream_rate(&cam(1_000_000, 8, 1000.0)), 8.0);
        assert_eq!(camera_stream_rate(&cam(8_000_000, 8, 1000.0)), 64.0);
        assert_eq!(camera_stream_rate(&cam(3_000_000, 12, 0.0)), 0.0);
    }

    #[test]
    fn aggregates() {
        let one = cam(1_000_000, 8, 1000.0);
        assert_eq!(aggregate_rate(&[one; 10]), 80.0);
        assert_eq!(aggregate_rate(&[]), 0.0);
        let mixed = [one, cam(2_000_000, 12, 500.0)];
        assert!((aggregate_rate(&mixed) - 20.0).abs() < EXACT);
    }

    #[test]
    fn feasibility_margins() {
        let c = cam(1_000_000, 8, 1000.0);
        let cl = feasible(&c, &LinkSpec::camera_link(CameraLinkConfig::Full)).unwrap();
        assert!(!cl.feasible);
        assert!((cl.margin_gbps - (-0.86)).abs() < EXACT);

        let x2 = feasible(&c, &LinkSpec::pcie(3, 2)).unwrap();
        assert!(x2.feasible);
        assert!((x2.margin_gbps - (2.0 * 1024.0 / 130.0 - 8.0)).abs() < EXACT);
        assert!((x2.margin_gbps - 7.754).abs() < 1e-3);

        let idle = cam(1_000_000, 8, 0.0);
        let link = LinkSpec::pcie(2, 4);
        let f = feasible(&idle, &link).unwrap();
        assert!(f.feasible);
        assert_eq!(f.margin_gbps, effective_link_rate(&link).unwrap());
    }

    #[test]
    fn lane_selection() {
        let unity = OverheadModel {
            flow_control_factor: 1.0,
            max_payload: 256,
            header_overhead: 0,
        };
        assert_eq!(
            min_lanes(&cam(8_000_000, 8, 1000.0), 3, &unity).unwrap(),
            16
        );
        assert_eq!(min_lanes(&cam(1_000_000, 8, 1000.0), 4, &unity).unwrap(), 1);
        assert_eq!(min_lanes(&cam(1_000_000, 8, 0.0), 1, &unity).unwrap(), 1);
        let err = min_lanes(&cam(8_000_000, 64, 1000.0), 3, &unity).unwrap_err();
        assert!(matches!(err, Error::NoFeasibleWidth { generation: 3, .. }));
        assert!(min_lanes(&cam(1_000_000, 8, 1000.0), 0, &unity).is_err());
    }

    #[test]
    fn default_overhead() {
        let eff = OverheadModel::default().efficiency();
        assert!((eff - 256.0 / 284.0).abs() < EXACT);
        assert!((eff - 0.9014).abs() < 1e-4);
    }

    #[test]
    fn envelope_warnings_are_not_errors() {
        let small = CameraSpec::new(640 * 480, 8, 30.0).unwrap();
        let warnings = small.validate().unwrap();
        assert_eq!(warnings.len(), 2);
        assert!(CameraSpec::new(0, 8, 100.0).is_err());
        assert!(CameraSpec::new(1, 65, 100.0).is_err());
        assert!(CameraSpec::new(1, 8, -1.0).is_err());
        assert!(cam(1_000_000, 8, 1000.0).validate().unwrap().is_empty());
    }

    #[test]
    fn frame_bytes_round_up() {
        assert_eq!(cam(1_000_000, 8, 1.0).frame_bytes(), 1_000_000);
        assert_eq!(cam(3, 12, 1.0).frame_bytes(), 5);
    }

    #[test]
    fn link_spec_json_defaults() {
        let link: LinkSpec =
            serde_json::from_str(r#"{"kind":{"type":"pcie","generation":3,"lanes":4}}"#).unwrap();
        assert_eq!(link, LinkSpec::pcie(3, 4));
        let cxp: LinkSpec = serde_json::from_str(
            r#"{"kind":{"type":"coaxpress","grade":"CXP-12","links":4},"cable_length_m":40}"#,
        )
        .unwrap();
        assert!((effective_link_rate(&cxp).unwrap() - 50.0).abs() < EXACT);
    }
}
