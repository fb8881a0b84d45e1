//! Random pipelines and the property checks run over them.
#![allow(dead_code)]

use acqsim_core::*;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

#[derive(Clone, Debug)]
pub struct Case {
    pub topology: Topology,
    pub config: SimConfig,
}

fn camera() -> impl Strategy<Value = CameraSpec> {
    (
        100u64..20_000,
        prop::sample::select(vec![8u8, 10, 12, 16]),
        1_000.0f64..200_000.0,
    )
        .prop_map(|(px, bits, fps)| CameraSpec {
            resolution_pixels: px,
            bit_depth: bits,
            frame_rate: fps.round(),
        })
}

fn link() -> impl Strategy<Value = LinkSpec> {
    prop_oneof![
        4 => (1u8..=5, prop::sample::select(vec![1u8, 2, 4, 8, 16]), 0.5f64..=1.0, 0.0f64..50.0)
            .prop_map(|(g, l, eff, m)| LinkSpec::pcie(g, l).with_efficiency(eff).with_cable(m.round())),
        1 => prop::sample::select(vec![
            CameraLinkConfig::Base,
            CameraLinkConfig::Medium,
            CameraLinkConfig::Full
        ])
        .prop_map(LinkSpec::camera_link),
    ]
}

fn processing() -> impl Strategy<Value = ProcessingTime> {
    prop_oneof![
        (0u64..20_000).prop_map(|ns| ProcessingTime::Fixed { ns }),
        (0u64..10_000, 0u64..10_000).prop_map(|(a, w)| ProcessingTime::Uniform {
            min_ns: a,
            max_ns: a + w
        }),
        (0.0f64..10_000.0, 0.0f64..5_000.0).prop_map(|(m, s)| ProcessingTime::Normal {
            mean_ns: m,
            sigma_ns: s
        }),
    ]
}

/// A stage that may sit in front of a link.
fn emitter(capacity: impl Strategy<Value = u64> + Clone) -> impl Strategy<Value = StageSpec> {
    prop_oneof![
        (capacity.clone(), any::<bool>(), 0u64..2_000).prop_map(|(c, ct, lat)| {
            let fwd = if ct {
                Forwarding::CutThrough
            } else {
                Forwarding::StoreAndForward
            };
            StageSpec::buffer(c, fwd).with_latency(lat)
        }),
        (capacity, 0u64..2_000).prop_map(|(c, lat)| StageSpec::frame_grabber(c).with_latency(lat)),
    ]
}

fn stages(capacity: impl Strategy<Value = u64> + Clone) -> impl Strategy<Value = Vec<StageSpec>> {
    (
        0u64..2_000,
        link(),
        prop::collection::vec((emitter(capacity.clone()), link()), 0..3),
        prop::option::of(emitter(capacity)),
        0u64..2_000,
        processing(),
        0u64..2_000,
    )
        .prop_map(|(sensor_lat, first, mid, tail, host_lat, proc, proc_lat)| {
            let mut s = vec![
                StageSpec::sensor().with_latency(sensor_lat),
                StageSpec::link(first),
            ];
            for (e, l) in mid {
                s.push(e);
                s.push(StageSpec::link(l));
            }
            s.extend(tail);
            s.push(StageSpec::host_memory().with_latency(host_lat));
            s.push(StageSpec::processor(proc).with_latency(proc_lat));
            s
        })
}

fn clock() -> impl Strategy<Value = ClockModel> {
    (-1_000i64..1_000, -50.0f64..50.0, 0.0f64..100.0).prop_map(|(o, d, j)| ClockModel {
        offset_ns: o,
        drift_ppm: d,
        jitter_sigma_ns: j,
    })
}

fn build(
    cam: CameraSpec,
    stages: Vec<StageSpec>,
    stop: StopCondition,
    seed: u64,
    oldest: bool,
    clock: ClockModel,
) -> Case {
    let topology = Topology {
        name: "random".into(),
        camera: cam,
        stages,
        deadlines: DeadlineSpec::default(),
    };
    let policy = if oldest {
        DropPolicy::DropOldest
    } else {
        DropPolicy::DropNewest
    };
    Case {
        topology,
        config: SimConfig {
            stop,
            seed,
            drop_policy: policy,
            clock,
        },
    }
}

fn stop() -> impl Strategy<Value = StopCondition> {
    prop_oneof![
        4 => (0u64..40).prop_map(StopCondition::NFrames),
        1 => (0u64..200_000).prop_map(StopCondition::DurationNs),
    ]
}

/// Random valid pipeline with buffers small enough to overflow now and then.
pub fn any_case() -> impl Strategy<Value = Case> {
    let capacity = prop_oneof![1_000u64..40_000, 1u64 << 30..1u64 << 31];
    (
        camera(),
        stages(capacity),
        stop(),
        any::<u64>(),
        any::<bool>(),
        clock(),
    )
        .prop_map(|(c, s, stop, seed, oldest, clock)| build(c, s, stop, seed, oldest, clock))
}

/// Random valid pipeline whose buffers never fill, run for a frame count.
pub fn drop_free_case() -> impl Strategy<Value = Case> {
    let capacity = Just(1u64 << 40);
    (camera(), stages(capacity), 1u64..30, any::<u64>(), clock()).prop_map(
        |(c, s, n, seed, clock)| build(c, s, StopCondition::NFrames(n), seed, false, clock),
    )
}

/// A stage to insert and the position to insert it at.
pub fn insertion() -> impl Strategy<Value = (StageSpec, prop::sample::Index)> {
    let stage = prop_oneof![
        emitter(Just(1u64 << 40)),
        (0u64..5_000).prop_map(|lat| StageSpec::host_memory().with_latency(lat)),
    ];
    (stage, any::<prop::sample::Index>())
}

fn simulate(c: &Case) -> Result<SimReport, TestCaseError> {
    prop_assert!(
        validate(&c.topology).is_empty(),
        "{:?}",
        validate(&c.topology)
    );
    run(&c.topology, &c.config).map_err(|e| TestCaseError::fail(e.to_string()))
}

pub fn check_conservation(c: &Case) -> Result<(), TestCaseError> {
    let r = simulate(c)?;
    let a = &r.aggregates;
    prop_assert_eq!(a.generated, a.delivered + a.dropped + a.in_flight);
    prop_assert_eq!(a.generated, r.frames.len() as u64);
    for (i, f) in r.frames.iter().enumerate() {
        prop_assert_eq!(f.frame_id, i as u64);
    }
    if let StopCondition::NFrames(n) = c.config.stop {
        prop_assert_eq!(a.generated, n);
        prop_assert_eq!(a.in_flight, 0);
    }
    Ok(())
}

pub fn check_causality(c: &Case) -> Result<(), TestCaseError> {
    let r = simulate(c)?;
    for f in &r.frames {
        let errs = f.causality_errors();
        prop_assert!(errs.is_empty(), "{:?}", errs);
        if f.is_delivered() {
            prop_assert_eq!(f.stage_times.len(), c.topology.stages.len());
        }
    }
    for (k, stage) in c.topology.stages.iter().enumerate() {
        if let Some(cap) = stage.capacity() {
            let peak = occupancy_trace(&r, k).unwrap().iter().map(|p| p.1).max();
            prop_assert!(
                peak.unwrap_or(0) <= cap,
                "stage {} peak {:?} > {}",
                k,
                peak,
                cap
            );
        }
        if stage.link_spec().is_some() {
            let mut busy: Vec<(u64, u64)> = r
                .frames
                .iter()
                .filter_map(|f| f.stage_times.get(k))
                .map(|st| (st.head.as_nanos(), st.ingress.as_nanos()))
                .collect();
            busy.sort_unstable();
            for w in busy.windows(2) {
                prop_assert!(w[0].1 <= w[1].0, "link {} overlaps {:?}", k, w);
            }
        }
    }
    Ok(())
}

pub fn check_lane_linearity(generation: u8, lanes: u8, eff: f64) -> Result<(), TestCaseError> {
    let one = effective_link_rate(&LinkSpec::pcie(generation, 1).with_efficiency(eff)).unwrap();
    let many =
        effective_link_rate(&LinkSpec::pcie(generation, lanes).with_efficiency(eff)).unwrap();
    let want = f64::from(lanes) * one;
    prop_assert!((many - want).abs() <= 1e-12 * want, "{} vs {}", many, want);
    let table = budget_table(&[generation], &[1, lanes], false, eff).unwrap();
    prop_assert_eq!(table.rows[1].rate_gbps, many);
    prop_assert_eq!(table.rows[0].rate_gbps, one);
    Ok(())
}

pub fn check_insertion_monotone(
    c: &Case,
    stage: &StageSpec,
    at: prop::sample::Index,
) -> Result<(), TestCaseError> {
    let base = simulate(c)?;
    let mut grown = c.clone();
    let stages = &grown.topology.stages;
    // host memory cannot feed a link
    let slots: Vec<usize> = (1..stages.len())
        .filter(|&i| {
            !(matches!(stage.kind, StageKind::HostMemory)
                && matches!(stages[i].kind, StageKind::Link { .. }))
        })
        .collect();
    grown
        .topology
        .insert_stage(slots[at.index(slots.len())], stage.clone());
    let after = simulate(&grown)?;
    prop_assert_eq!(base.aggregates.dropped, 0);
    prop_assert_eq!(after.aggregates.dropped, 0);
    for (a, b) in base.frames.iter().zip(&after.frames) {
        let (la, lb) = (a.latency().unwrap(), b.latency().unwrap());
        prop_assert!(lb >= la, "frame {}: {} -> {}", a.frame_id, la, lb);
    }
    Ok(())
}

pub fn check_determinism(c: &Case) -> Result<(), TestCaseError> {
    let a = simulate(c)?.to_json();
    let b = simulate(c)?.to_json();
    prop_assert!(a == b, "reports differ");
    Ok(())
}

pub fn check_aggregate_recompute(c: &Case) -> Result<(), TestCaseError> {
    let r = simulate(c)?;
    let structured = SimReport::from_json(&r.to_json()).unwrap();
    prop_assert_eq!(&structured, &r);
    let frames = read_frames_csv(&frames_csv(&r).unwrap()).unwrap();
    prop_assert_eq!(&frames, &r.frames);
    let again = summarize(&frames, &r.topology);
    prop_assert_eq!(&again, &r.aggregates);
    let rows = read_aggregates_csv(&aggregates_csv(&r.aggregates).unwrap()).unwrap();
    prop_assert_eq!(rows, aggregate_rows(&again));
    let bits: u64 = frames
        .iter()
        .filter(|f| f.is_delivered())
        .map(|f| f.size * 8)
        .sum();
    let a = &r.aggregates;
    let expect = if a.elapsed_ns == 0 {
        0.0
    } else {
        bits as f64 / a.elapsed_ns as f64
    };
    prop_assert!((a.throughput_gbps - expect).abs() <= 1e-9);
    Ok(())
}
