//! Run reports, aggregates, run comparison, exports and link-budget tables.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmodel::{
    effective_link_rate, CameraLinkConfig, CxpGrade, GigERate, LinkKind, LinkSpec,
};
use crate::simcore::{
    stage_trace, Disposition, DropReason, FrameRecord, PendingResidency, SimConfig, StageTimes,
};
use crate::time::SimTime;
use crate::timing::{deadline_violations, timestamp_rms, DeadlineViolation};
use crate::topology::{copy_count, Topology};

/// Version of the report document layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub min_ns: u64,
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

impl LatencyStats {
    /// Nearest-rank statistics; zeroed for an empty sample.
    pub fn from_samples(samples: &[u64]) -> Self {
        if samples.is_empty() {
            return LatencyStats::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let sum: u128 = sorted.iter().map(|&x| u128::from(x)).sum();
        LatencyStats {
            min_ns: sorted[0],
            mean_ns: sum as f64 / sorted.len() as f64,
            p50_ns: nearest_rank(&sorted, 50),
            p99_ns: nearest_rank(&sorted, 99),
            max_ns: sorted[sorted.len() - 1],
        }
    }
}

/// Value at rank `ceil(p/100 * n)` of a sorted, non-empty sample.
pub fn nearest_rank(sorted: &[u64], percent: u32) -> u64 {
    let n = sorted.len();
    let rank = (u64::from(percent) * n as u64).div_ceil(100).max(1) as usize;
    sorted[rank.min(n) - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// No frame was generated.
    pub empty: bool,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    /// Delivered bits over elapsed time, Gb/s.
    pub throughput_gbps: f64,
    /// First generation to last delivery, ns.
    pub elapsed_ns: u64,
    pub latency: LatencyStats,
    pub copy_count: u64,
    /// Peak occupancy per stage, bytes; zero for non-buffering stages.
    pub high_water_bytes: Vec<u64>,
    pub safety_violations: u64,
    pub control_violations: u64,
    pub timestamp_rms_ns: f64,
    pub timestamp_budget_exceeded: bool,
    pub deadline_violations: Vec<DeadlineViolation>,
}

/// Aggregates as a pure function of the frame list and topology.
pub fn summarize(frames: &[FrameRecord], t: &Topology) -> Aggregates {
    let delivered: Vec<&FrameRecord> = frames.iter().filter(|f| f.is_delivered()).collect();
    let dropped = frames.iter().filter(|f| f.is_dropped()).count() as u64;
    let latencies: Vec<u64> = delivered
        .iter()
        .filter_map(|f| f.latency())
        .map(SimTime::as_nanos)
        .collect();

    let start = frames.iter().map(|f| f.generated_at).min();
    let end = delivered.iter().filter_map(|f| f.delivered_at()).max();
    let elapsed_ns = match (start, end) {
        (Some(s), Some(e)) => (e - s).as_nanos(),
        _ => 0,
    };
    let bits: u128 = delivered.iter().map(|f| u128::from(f.size) * 8).sum();
    let throughput_gbps = if elapsed_ns == 0 {
        0.0
    } else {
        bits as f64 / elapsed_ns as f64
    };

    let high_water_bytes = (0..t.stages.len())
        .map(|k| {
            stage_trace(t, frames, k)
                .map(|trace| trace.iter().map(|p| p.1).max().unwrap_or(0))
                .unwrap_or(0)
        })
        .collect();

    let violations = deadline_violations(frames, &t.deadlines);
    let count =
        |pred: fn(&DeadlineViolation) -> bool| violations.iter().filter(|v| pred(v)).count() as u64;
    Aggregates {
        empty: frames.is_empty(),
        generated: frames.len() as u64,
        delivered: delivered.len() as u64,
        dropped,
        in_flight: frames.len() as u64 - delivered.len() as u64 - dropped,
        throughput_gbps,
        elapsed_ns,
        latency: LatencyStats::from_samples(&latencies),
        copy_count: copy_count(t) as u64,
        high_water_bytes,
        safety_violations: count(DeadlineViolation::is_safety),
        control_violations: count(DeadlineViolation::is_control),
        timestamp_rms_ns: timestamp_rms(frames).unwrap_or(0.0),
        timestamp_budget_exceeded: violations
            .iter()
            .any(|v| matches!(v, DeadlineViolation::TimestampRms { .. })),
        deadline_violations: violations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub scenario: String,
    pub topology_digest: String,
    pub topology: Topology,
    pub config: SimConfig,
    pub aggregates: Aggregates,
    pub frames: Vec<FrameRecord>,
}

impl SimReport {
    pub fn new(topology: Topology, config: SimConfig, frames: Vec<FrameRecord>) -> Self {
        let aggregates = summarize(&frames, &topology);
        SimReport {
            schema_version: REPORT_SCHEMA_VERSION,
            scenario: topology.name.clone(),
            topology_digest: topology.digest(),
            topology,
            config,
            aggregates,
            frames,
        }
    }

    pub fn with_scenario(mut self, name: impl Into<String>) -> Self {
        self.scenario = name.into();
        self
    }

    /// Canonical structured form: fixed key order, shortest round-trip floats.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let report: SimReport = serde_json::from_str(s)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::InvalidSpec(format!(
                "unsupported report schema version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn has_violations(&self) -> bool {
        !self.aggregates.deadline_violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub metric: String,
    pub a: f64,
    pub b: f64,
    /// `b - a`.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub a: String,
    pub b: String,
    pub rows: Vec<DeltaRow>,
}

impl DeltaTable {
    pub fn get(&self, metric: &str) -> Option<&DeltaRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.delta == 0.0)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "a", "b", "delta"])?;
        for r in &self.rows {
            w.write_record([
                r.metric.clone(),
                r.a.to_string(),
                r.b.to_string(),
                r.delta.to_string(),
            ])?;
        }
        into_string(w)
    }
}

impl fmt::Display for DeltaTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "a: {}", self.a)?;
        writeln!(f, "b: {}", self.b)?;
        writeln!(
            f,
            "{:<24} {:>18} {:>18} {:>18}",
            "metric", "a", "b", "b - a"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:>18} {:>18} {:>18}",
                r.metric, r.a, r.b, r.delta
            )?;
        }
        Ok(())
    }
}

fn delta_metrics(a: &Aggregates) -> Vec<(&'static str, f64)> {
    vec![
        ("latency_min_ns", a.latency.min_ns as f64),
        ("latency_mean_ns", a.latency.mean_ns),
        ("latency_p50_ns", a.latency.p50_ns as f64),
        ("latency_p99_ns", a.latency.p99_ns as f64),
        ("latency_max_ns", a.latency.max_ns as f64),
        ("throughput_gbps", a.throughput_gbps),
        ("delivered", a.delivered as f64),
        ("dropped", a.dropped as f64),
        ("in_flight", a.in_flight as f64),
        ("copy_count", a.copy_count as f64),
        ("safety_violations", a.safety_violations as f64),
        ("control_violations", a.control_violations as f64),
        ("deadline_violations", a.deadline_violations.len() as f64),
        ("timestamp_rms_ns", a.timestamp_rms_ns),
    ]
}

/// Per-metric deltas `b - a` between two runs of the same camera and frame count.
pub fn compare(a: &SimReport, b: &SimReport) -> Result<DeltaTable> {
    if a.topology.camera != b.topology.camera {
        return Err(Error::Incomparable(format!(
            "camera specs differ: {:?} vs {:?}",
            a.topology.camera, b.topology.camera
        )));
    }
    if a.aggregates.generated != b.aggregates.generated {
        return Err(Error::Incomparable(format!(
            "frame counts differ: {} vs {}",
            a.aggregates.generated, b.aggregates.generated
        )));
    }
    let rows = delta_metrics(&a.aggregates)
        .into_iter()
        .zip(delta_metrics(&b.aggregates))
        .map(|((metric, va), (_, vb))| DeltaRow {
            metric: metric.to_string(),
            a: va,
            b: vb,
            delta: vb - va,
        })
        .collect();
    Ok(DeltaTable {
        a: a.scenario.clone(),
        b: b.scenario.clone(),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    /// One JSON document holding the whole report.
    Structured,
    /// Per-frame CSV plus an aggregates CSV.
    Tabular,
}

/// One exported file: a suffix appended to the report name, and its contents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub suffix: &'static str,
    pub contents: String,
}

pub fn export(report: &SimReport, format: ExportFormat) -> Result<Vec<Document>> {
    Ok(match format {
        ExportFormat::Structured => vec![Document {
            suffix: "report.json",
            contents: report.to_json(),
        }],
        ExportFormat::Tabular => vec![
            Document {
                suffix: "frames.csv",
                contents: frames_csv(report)?,
            },
            Document {
                suffix: "aggregates.csv",
                contents: aggregates_csv(&report.aggregates)?,
            },
        ],
    })
}

/// Writes each document as `<dir>/<stem>.<suffix>` and returns the paths.
pub fn write_exports(
    report: &SimReport,
    formats: &[ExportFormat],
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for &format in formats {
        for doc in export(report, format)? {
            let path = dir.join(format!("{stem}.{}", doc.suffix));
            fs::write(&path, doc.contents)?;
            paths.push(path);
        }
    }
    Ok(paths)
}

const FRAME_COLUMNS: [&str; 16] = [
    "frame_id",
    "size_bytes",
    "generated_at_ns",
    "camera_timestamp_ns",
    "timestamp_clamped",
    "disposition",
    "latency_ns",
    "drop_stage",
    "drop_reason",
    "drop_at_ns",
    "drop_arrival_head_ns",
    "drop_arrival_tail_ns",
    "pending_stage",
    "pending_head_ns",
    "pending_ingress_ns",
    "pending_stopped_ns",
];

const STAGE_FIELDS: [&str; 4] = ["head_ns", "ingress_ns", "out_start_ns", "egress_ns"];

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Tabular(e.error().to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Tabular(e.to_string()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flat per-frame table, one row per frame.
pub fn frames_csv(report: &SimReport) -> Result<String> {
    let n_stages = report.topology.stages.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = FRAME_COLUMNS.iter().map(|s| s.to_string()).collect();
    for k in 0..n_stages {
        header.extend(STAGE_FIELDS.iter().map(|f| format!("s{k}_{f}")));
    }
    w.write_record(&header)?;
    for f in &report.frames {
        let (disposition, drop) = match f.disposition {
            Disposition::Delivered => ("delivered", None),
            Disposition::InFlight => ("in_flight", None),
            Disposition::Dropped {
                stage,
                reason,
                at,
                arrival_head,
                arrival_tail,
            } => (
                "dropped",
                Some((stage, reason, at, arrival_head, arrival_tail)),
            ),
        };
        let mut row = vec![
            f.frame_id.to_string(),
            f.size.to_string(),
            f.generated_at.as_nanos().to_string(),
            f.camera_timestamp.as_nanos().to_string(),
            f.timestamp_clamped.to_string(),
            disposition.to_string(),
            opt(f.latency().map(SimTime::as_nanos)),
            opt(drop.map(|d| d.0)),
            opt(drop.map(|d| reason_name(d.1))),
            opt(drop.map(|d| d.2.as_nanos())),
            opt(drop.map(|d| d.3.as_nanos())),
            opt(drop.map(|d| d.4.as_nanos())),
            opt(f.pending.map(|p| p.stage)),
            opt(f.pending.map(|p| p.head.as_nanos())),
            opt(f.pending.map(|p| p.ingress.as_nanos())),
            opt(f.pending.map(|p| p.stopped_at.as_nanos())),
        ];
        for k in 0..n_stages {
            match f.stage_times.get(k) {
                Some(st) => row.extend(
                    [st.head, st.ingress, st.out_start, st.egress]
                        .map(|t| t.as_nanos().to_string()),
                ),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        w.write_record(&row)?;
    }
    into_string(w)
}

fn reason_name(r: DropReason) -> &'static str {
    match r {
        DropReason::BufferOverflow => "buffer_overflow",
        DropReason::Backpressure => "backpressure",
    }
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    row.get(i)
        .ok_or_else(|| Error::Tabular(format!("missing column {name}")))?
        .parse()
        .map_err(|_| Error::Tabular(format!("bad value in column {name}: {:?}", row.get(i))))
}

fn parse_opt<T: std::str::FromStr>(
    row: &csv::StringRecord,
    i: usize,
    name: &str,
) -> Result<Option<T>> {
    match row.get(i) {
        Some("") | None => Ok(None),
        Some(_) => parse_field(row, i, name).map(Some),
    }
}

fn ns(v: u64) -> SimTime {
    SimTime(v)
}

/// Parses a table written by [`frames_csv`].
pub fn read_frames_csv(text: &str) -> Result<Vec<FrameRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    let fixed = FRAME_COLUMNS.len();
    if header.len() < fixed
        || header.iter().take(fixed).ne(FRAME_COLUMNS.iter().copied())
        || !(header.len() - fixed).is_multiple_of(STAGE_FIELDS.len())
    {
        return Err(Error::Tabular("unexpected frame table header".into()));
    }
    let n_stages = (header.len() - fixed) / STAGE_FIELDS.len();
    let mut frames = Vec::new();
    for row in r.records() {
        let row = row?;
        let c = |i: usize| FRAME_COLUMNS[i];
        let disposition = match row.get(5) {
            Some("delivered") => Disposition::Delivered,
            Some("in_flight") => Disposition::InFlight,
            Some("dropped") => Disposition::Dropped {
                stage: parse_field(&row, 7, c(7))?,
                reason: match row.get(8) {
                    Some("buffer_overflow") => DropReason::BufferOverflow,
                    Some("backpressure") => DropReason::Backpressure,
                    other => return Err(Error::Tabular(format!("bad drop reason {other:?}"))),
                },
                at: ns(parse_field(&row, 9, c(9))?),
                arrival_head: ns(parse_field(&row, 10, c(10))?),
                arrival_tail: ns(parse_field(&row, 11, c(11))?),
            },
            other => return Err(Error::Tabular(format!("bad disposition {other:?}"))),
        };
        let pending = match parse_opt::<usize>(&row, 12, c(12))? {
            Some(stage) => Some(PendingResidency {
                stage,
                head: ns(parse_field(&row, 13, c(13))?),
                ingress: ns(parse_field(&row, 14, c(14))?),
                stopped_at: ns(parse_field(&row, 15, c(15))?),
            }),
            None => None,
        };
        let mut stage_times = Vec::new();
        for k in 0..n_stages {
            let base = fixed + k * STAGE_FIELDS.len();
            let Some(head) = parse_opt::<u64>(&row, base, &header[base])? else {
                break;
            };
            let at = |j: usize| parse_field::<u64>(&row, base + j, &header[base + j]).map(ns);
            stage_times.push(StageTimes {
                head: ns(head),
                ingress: at(1)?,
                out_start: at(2)?,
                egress: at(3)?,
            });
        }
        frames.push(FrameRecord {
            frame_id: parse_field(&row, 0, c(0))?,
            size: parse_field(&row, 1, c(1))?,
            generated_at: ns(parse_field(&row, 2, c(2))?),
            camera_timestamp: ns(parse_field(&row, 3, c(3))?),
            timestamp_clamped: parse_field(&row, 4, c(4))?,
            stage_times,
            disposition,
            pending,
        });
    }
    Ok(frames)
}

/// Aggregates as `(metric, value)` pairs, in the order exported.
pub fn aggregate_rows(a: &Aggregates) -> Vec<(String, String)> {
    let mut rows: Vec<(String, String)> = vec![
        ("empty".into(), a.empty.to_string()),
        ("generated".into(), a.generated.to_string()),
        ("delivered".into(), a.delivered.to_string()),
        ("dropped".into(), a.dropped.to_string()),
        ("in_flight".into(), a.in_flight.to_string()),
        ("throughput_gbps".into(), a.throughput_gbps.to_string()),
        ("elapsed_ns".into(), a.elapsed_ns.to_string()),
        ("latency_min_ns".into(), a.latency.min_ns.to_string()),
        ("latency_mean_ns".into(), a.latency.mean_ns.to_string()),
        ("latency_p50_ns".into(), a.latency.p50_ns.to_string()),
        ("latency_p99_ns".into(), a.latency.p99_ns.to_string()),
        ("latency_max_ns".into(), a.latency.max_ns.to_string()),
        ("copy_count".into(), a.copy_count.to_string()),
    ];
    rows.extend(
        a.high_water_bytes
            .iter()
            .enumerate()
            .map(|(k, b)| (format!("s{k}_high_water_bytes"), b.to_string())),
    );
    rows.extend([
        ("safety_violations".into(), a.safety_violations.to_string()),
        (
            "control_violations".into(),
            a.control_violations.to_string(),
        ),
        ("timestamp_rms_ns".into(), a.timestamp_rms_ns.to_string()),
        (
            "timestamp_budget_exceeded".into(),
            a.timestamp_budget_exceeded.to_string(),
        ),
    ]);
    rows
}

pub fn aggregates_csv(a: &Aggregates) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "value"])?;
    for (k, v) in aggregate_rows(a) {
        w.write_record([k, v])?;
    }
    into_string(w)
}

/// Parses a table written by [`aggregates_csv`].
pub fn read_aggregates_csv(text: &str) -> Result<Vec<(String, String)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    if r.headers()?.iter().ne(["metric", "value"]) {
        return Err(Error::Tabular("unexpected aggregates header".into()));
    }
    r.records()
        .map(|row| {
            let row = row?;
            match (row.get(0), row.get(1)) {
                (Some(k), Some(v)) => Ok((k.to_string(), v.to_string())),
                _ => Err(Error::Tabular("aggregates row needs two fields".into())),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub interface: String,
    /// PCIe generation; `None` for camera interfaces.
    pub generation: Option<u8>,
    pub lanes: Option<u8>,
    pub protocol_efficiency: f64,
    pub rate_gbps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetTable {
    pub rows: Vec<BudgetRow>,
}

impl BudgetTable {
    pub fn find(&self, interface: &str) -> Option<&BudgetRow> {
        self.rows.iter().find(|r| r.interface == interface)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "interface",
            "generation",
            "lanes",
            "protocol_efficiency",
            "rate_gbps",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.interface.clone(),
                opt(r.generation),
                opt(r.lanes),
                r.protocol_efficiency.to_string(),
                r.rate_gbps.to_string(),
            ])?;
        }
        into_string(w)
    }
}

impl fmt::Display for BudgetTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<24} {:>10} {:>12}",
            "interface", "efficiency", "rate (Gb/s)"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:>10.3} {:>12.3}",
                r.interface, r.protocol_efficiency, r.rate_gbps
            )?;
        }
        Ok(())
    }
}

/// Camera-interface presets listed after the PCIe grid.
pub fn interface_presets() -> Vec<LinkSpec> {
    let mut out: Vec<LinkSpec> = [
        CameraLinkConfig::Base,
        CameraLinkConfig::Medium,
        CameraLinkConfig::Full,
    ]
    .into_iter()
    .map(LinkSpec::camera_link)
    .collect();
    out.extend(
        CxpGrade::ALL
            .into_iter()
            .map(|grade| LinkSpec::new(LinkKind::CoaXPress { grade, links: 1 })),
    );
    out.extend(
        [GigERate::OneGig, GigERate::TenGig]
            .into_iter()
            .map(|rate| LinkSpec::new(LinkKind::GigEVision { rate })),
    );
    out.push(LinkSpec::new(LinkKind::Clhs { lanes: 1 }));
    out.push(LinkSpec::new(LinkKind::Usb3));
    out
}

/// Effective rate of every `(generation, lanes)` pair at `efficiency`,
/// optionally followed by the camera-interface presets at their own
/// nominal efficiency.
pub fn budget_table(
    generations: &[u8],
    lanes: &[u8],
    include_presets: bool,
    efficiency: f64,
) -> Result<BudgetTable> {
    let mut rows = Vec::new();
    for &g in generations {
        for &l in lanes {
            let link = LinkSpec::pcie(g, l).with_efficiency(efficiency);
            rows.push(BudgetRow {
                interface: link.kind.to_string(),
                generation: Some(g),
                lanes: Some(l),
                protocol_efficiency: efficiency,
                rate_gbps: effective_link_rate(&link)?,
            });
        }
    }
    if include_presets {
        for link in interface_presets() {
            rows.push(BudgetRow {
                interface: link.kind.to_string(),
                generation: None,
                lanes: None,
                protocol_efficiency: link.protocol_efficiency,
                rate_gbps: effective_link_rate(&link)?,
            });
        }
    }
    Ok(BudgetTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_by_hand() {
        let s = LatencyStats::from_samples(&[4, 2, 3, 1]);
        assert_eq!((s.min_ns, s.p50_ns, s.p99_ns, s.max_ns), (1, 2, 4, 4));
        assert_eq!(s.mean_ns, 2.5);
        let one = LatencyStats::from_samples(&[7]);
        assert_eq!(
            (one.min_ns, one.p50_ns, one.p99_ns, one.max_ns),
            (7, 7, 7, 7)
        );
        assert_eq!(LatencyStats::from_samples(&[]), LatencyStats::default());
        let hundred: Vec<u64> = (1..=100).collect();
        assert_eq!(nearest_rank(&hundred, 99), 99);
        assert_eq!(nearest_rank(&hundred, 50), 50);
    }

    #[test]
    fn budget_cells() {
        let t = budget_table(&[3, 4, 5], &[1, 16], true, 1.0).unwrap();
        let rate = |name: &str| t.find(name).unwrap().rate_gbps;
        assert!((rate("PCIe gen3 x1") - 7.877).abs() < 5e-4);
        assert!((rate("PCIe gen4 x1") - 15.754).abs() < 5e-4);
        assert!((rate("PCIe gen5 x1") - 31.508).abs() < 5e-4);
        assert!((rate("PCIe gen5 x16") - 504.123).abs() < 5e-4);
        assert!((rate("Camera Link Full") - 7.14).abs() < 1e-12);
        assert!(budget_table(&[7], &[1], false, 1.0).is_err());
    }
}
