//! Fixture pipelines shared by the benchmarks.

use acqsim_core::{
    build_classic, build_direct, CameraLinkConfig, CameraSpec, DeadlineSpec, Forwarding, LinkSpec,
    ProcessingTime, StageSpec, Topology,
};

/// 1 Mpx, 8-bit, 1000 fps.
pub fn megapixel_camera() -> CameraSpec {
    CameraSpec::new(1_000_000, 8, 1000.0).unwrap()
}

/// Camera Link Full into a grabber, then PCIe gen3 x1.
pub fn classic() -> Topology {
    build_classic(
        megapixel_camera(),
        LinkSpec::camera_link(CameraLinkConfig::Full),
        LinkSpec::pcie(3, 1),
        64 << 20,
    )
    .unwrap()
}

/// PCIe gen3 x1 straight into host memory.
pub fn direct() -> Topology {
    build_direct(megapixel_camera(), LinkSpec::pcie(3, 1)).unwrap()
}

/// Small frames at 1 MHz into a 1 MiB buffer drained at half the fill rate.
pub fn overflow() -> Topology {
    Topology {
        name: "overflow".into(),
        camera: CameraSpec::new(1000, 8, 1e6).unwrap(),
        stages: vec![
            StageSpec::sensor(),
            StageSpec::link(LinkSpec::pcie(2, 2)),
            StageSpec::buffer(1 << 20, Forwarding::CutThrough),
            StageSpec::link(LinkSpec::pcie(2, 1)),
            StageSpec::host_memory(),
            StageSpec::processor(ProcessingTime::Uniform {
                min_ns: 100,
                max_ns: 900,
            }),
        ],
        deadlines: DeadlineSpec::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use acqsim_core::validate;

    #[test]
    fn fixtures_are_valid() {
        for t in [classic(), direct(), overflow()] {
            assert!(validate(&t).is_empty(), "{}", t.name);
        }
    }
}
