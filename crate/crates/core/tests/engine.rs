use acqsim_core::*;

/// ceil(bits / rate) in ns, for a rate given as an exact fraction of Gb/s.
fn ceil_div(bits: u128, gbps_num: u128, gbps_den: u128) -> u64 {
    (bits * gbps_den).div_ceil(gbps_num) as u64
}

fn chain(cam: CameraSpec, stages: Vec<StageSpec>) -> Topology {
    let t = Topology {
        name: "chain".into(),
        camera: cam,
        stages,
        deadlines: DeadlineSpec::default(),
    };
    assert!(validate(&t).is_empty(), "{:?}", validate(&t));
    t
}

fn gen2(lanes: u8) -> StageSpec {
    StageSpec::link(LinkSpec::pcie(2, lanes))
}

fn two_link(forwarding: Forwarding) -> Topology {
    chain(
        CameraSpec::new(1_000_000, 8, 100.0).unwrap(),
        vec![
            StageSpec::sensor(),
            gen2(2),
            StageSpec::buffer(64 << 20, forwarding),
            gen2(2),
            StageSpec::host_memory(),
            StageSpec::processor(ProcessingTime::default()),
        ],
    )
}

#[test]
fn store_and_forward_doubles_cut_through() {
    // 8e6 bits at 8 Gb/s
    let s = ceil_div(8_000_000, 8, 1);
    assert_eq!(s, 1_000_000);
    let saf = run(
        &two_link(Forwarding::StoreAndForward),
        &SimConfig::frames(1, 0),
    )
    .unwrap();
    let ct = run(&two_link(Forwarding::CutThrough), &SimConfig::frames(1, 0)).unwrap();
    assert_eq!(saf.frames[0].latency(), Some(SimTime(2 * s)));
    assert_eq!(ct.frames[0].latency(), Some(SimTime(s)));
}

/// 1000 B frames every 1000 ns into 8 Gb/s, drained at 4 Gb/s through 1 MiB.
fn overflow_topology() -> Topology {
    chain(
        CameraSpec::new(1000, 8, 1e6).unwrap(),
        vec![
            StageSpec::sensor(),
            gen2(2),
            StageSpec::buffer(1 << 20, Forwarding::CutThrough),
            gen2(1),
            StageSpec::host_memory(),
            StageSpec::processor(ProcessingTime::default()),
        ],
    )
}

fn first_drop(r: &SimReport) -> Option<(u64, SimTime, DropReason)> {
    r.frames.iter().find_map(|f| match f.disposition {
        Disposition::Dropped { at, reason, .. } => Some((f.frame_id, at, reason)),
        _ => None,
    })
}

#[test]
fn producer_consumer_overflow() {
    // 8,388,608 bits at a net fill of 4 Gb/s
    let oracle = ceil_div(8 * (1 << 20), 4, 1);
    assert_eq!(oracle, 2_097_152);
    let r = run(&overflow_topology(), &SimConfig::frames(2500, 1)).unwrap();
    let (id, at, reason) = first_drop(&r).expect("buffer overflows");
    assert_eq!(reason, DropReason::BufferOverflow);
    assert!(at.as_nanos().abs_diff(oracle) <= 1000, "first drop at {at}");
    assert_eq!(id, 2097);
    let trace = occupancy_trace(&r, 2).unwrap();
    assert!(trace.contains(&(at, 1 << 20)));
    assert!(trace.iter().all(|p| p.1 <= 1 << 20));
    assert_eq!(r.aggregates.high_water_bytes[2], 1 << 20);
    for f in &r.frames {
        assert!(
            f.causality_errors().is_empty(),
            "{:?}",
            f.causality_errors()
        );
    }
}

#[test]
fn drop_oldest_evicts_queued_frames() {
    let cfg = SimConfig::frames(2500, 1).with_policy(DropPolicy::DropOldest);
    let r = run(&overflow_topology(), &cfg).unwrap();
    let evicted: Vec<_> = r
        .frames
        .iter()
        .filter(|f| {
            matches!(
                f.disposition,
                Disposition::Dropped {
                    reason: DropReason::Backpressure,
                    ..
                }
            )
        })
        .collect();
    assert!(!evicted.is_empty());
    // the newest frames survive
    assert!(r.frames.last().unwrap().is_delivered());
    let a = &r.aggregates;
    assert_eq!(a.generated, a.delivered + a.dropped + a.in_flight);
    assert!(occupancy_trace(&r, 2)
        .unwrap()
        .iter()
        .all(|p| p.1 <= 1 << 20));
    for f in &r.frames {
        assert!(
            f.causality_errors().is_empty(),
            "{:?}",
            f.causality_errors()
        );
    }
}

#[test]
fn duration_run_leaves_frames_in_flight() {
    let r = run(
        &overflow_topology(),
        &SimConfig::duration(SimTime(10_500), 1),
    )
    .unwrap();
    let a = &r.aggregates;
    assert_eq!(a.generated, 11);
    assert!(a.in_flight > 0);
    assert_eq!(a.generated, a.delivered + a.dropped + a.in_flight);
}

#[test]
fn processing_queue_is_fifo() {
    let t = chain(
        CameraSpec::new(1000, 8, 1e6).unwrap(),
        vec![
            StageSpec::sensor(),
            gen2(2),
            StageSpec::host_memory(),
            StageSpec::processor(ProcessingTime::Fixed { ns: 3000 }),
        ],
    );
    let r = run(&t, &SimConfig::frames(4, 0)).unwrap();
    // frame k arrives at 1000k + 1000; the processor frees up every 3000 ns
    let done: Vec<u64> = r
        .frames
        .iter()
        .map(|f| f.delivered_at().unwrap().as_nanos())
        .collect();
    assert_eq!(done, vec![4000, 7000, 10_000, 13_000]);
}

#[test]
fn random_processing_is_seeded() {
    let cam = CameraSpec::new(1000, 8, 1000.0).unwrap();
    let t = build_direct_with(
        cam,
        LinkSpec::pcie(3, 1),
        &PipelineOptions {
            processing: ProcessingTime::Uniform {
                min_ns: 100,
                max_ns: 10_000,
            },
            ..Default::default()
        },
    )
    .unwrap();
    let a = run(&t, &SimConfig::frames(50, 3)).unwrap();
    let b = run(&t, &SimConfig::frames(50, 3)).unwrap();
    let c = run(&t, &SimConfig::frames(50, 4)).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn occupancy_stops_with_the_clock() {
    // a frame is still queued in the grabber while the next one starts arriving
    let t = chain(
        CameraSpec::new(15_821, 10, 174_707.0).unwrap(),
        vec![
            StageSpec::sensor().with_latency(711),
            StageSpec::link(
                LinkSpec::pcie(3, 2)
                    .with_efficiency(0.93020630791356)
                    .with_cable(45.0),
            ),
            StageSpec::frame_grabber(20_520).with_latency(216),
            StageSpec::link(LinkSpec::pcie(3, 4).with_efficiency(0.5)),
            StageSpec::host_memory(),
            StageSpec::processor(ProcessingTime::default()),
        ],
    );
    let r = run(&t, &SimConfig::duration(SimTime(98_109), 0)).unwrap();
    let pending: Vec<_> = r.frames.iter().filter_map(|f| f.pending).collect();
    assert_eq!(pending.len(), 2);
    assert!(pending.iter().all(|p| p.stopped_at == SimTime(98_109)));
    let trace = occupancy_trace(&r, 2).unwrap();
    assert!(trace.iter().all(|&(at, _)| at <= SimTime(98_109)));
    // a full frame plus the next one's first 216 ns of a 10,797 ns arrival
    let frame = 19_777u64;
    assert_eq!(r.aggregates.high_water_bytes[2], frame + frame * 216 / 10_797);
    assert!(r.aggregates.high_water_bytes[2] <= 20_520);
}
