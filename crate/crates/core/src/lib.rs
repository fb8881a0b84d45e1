//! Link budgets and a deterministic discrete-event model of camera image
//! acquisition pipelines.
//!
//! Two pipeline shapes are modeled: the classic chain, where a camera
//! interface feeds a frame grabber that re-packs frames onto PCIe, and the
//! direct chain, where the camera is itself a PCIe endpoint and DMAs frames
//! into host memory.
//!
//! Units are fixed across the crate:
//! - data rates are decimal, `1 Gb/s = 1e9 b/s`, carried as `f64`;
//! - buffer capacities and frame sizes are bytes (`u64`), with binary
//!   prefixes (`MiB`) wherever a prefix is used;
//! - simulated time is integer nanoseconds ([`SimTime`]).

pub mod error;
pub mod linkmodel;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod simcore;
pub mod time;
pub mod timing;
pub mod topology;

pub use error::{Error, Result};
pub use linkmodel::{
    aggregate_rate, camera_stream_rate, effective_link_rate, encoding_efficiency, feasible,
    min_lanes, raw_lane_rate, CameraLinkConfig, CameraSpec, CameraWarning, CxpGrade, Feasibility,
    GigERate, LinkKind, LinkSpec, OverheadModel,
};
pub use metrics::{
    aggregate_rows, aggregates_csv, budget_table, compare, export, frames_csv, read_aggregates_csv,
    read_frames_csv, summarize, write_exports, Aggregates, BudgetRow, BudgetTable, DeltaRow,
    DeltaTable, Document, ExportFormat, LatencyStats, SimReport,
};
pub use scenario::{Architecture, Run, RunSettings, Scenario};
pub use simcore::{
    occupancy_trace, run, transmission_time, Disposition, DropPolicy, DropReason, FrameRecord,
    SimConfig, StageTimes, StopCondition,
};
pub use time::SimTime;
pub use timing::{
    check_deadlines, sample_timestamp, timestamp_rms, ClockModel, DeadlineSpec, DeadlineViolation,
};
pub use topology::{
    build_classic, build_classic_with, build_direct, build_direct_with, copy_count, validate,
    Forwarding, PipelineOptions, ProcessingTime, StageKind, StageSpec, Topology, Violation,
};
