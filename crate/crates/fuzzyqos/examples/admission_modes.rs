//! The same request hitting the three admission modes.
//!
//! Class 2 already holds 2432 kbit/s -- below the link capacity but close to
//! its 2560 kbit/s base share. A further 384 kbit/s request passes the
//! class-agnostic check, fails the fixed per-class partition, and passes
//! again when the adaptive threshold has grown to 2944 kbit/s.

use fuzzyqos::admission::{AdmissionMode, FlowRequest, LinkState};

fn main() -> fuzzyqos::Result<()> {
    let base = [1920.0, 2560.0, 1920.0];
    let adaptive = [1920.0, 2944.0, 1920.0];

    for (mode, limits) in [
        (AdmissionMode::ClassAgnostic, &base),
        (AdmissionMode::BasePolicy, &base),
        (AdmissionMode::FrbAdaptive, &adaptive),
    ] {
        let mut link = LinkState::new(6400.0, 3)?;
        // pre-existing load: 2432 kbit/s in class 2, 568 kbit/s in class 3
        for (id, class, bw) in [(1u64, 1usize, 2432.0), (2, 2, 568.0)] {
            let d = link.admit(
                &FlowRequest { id, class, bandwidth_kbps: bw, arrival_s: 0.0, lifetime_s: 60.0 },
                AdmissionMode::ClassAgnostic,
                &[],
            )?;
            assert!(d.accepted());
        }

        let req = FlowRequest {
            id: 100,
            class: 1,
            bandwidth_kbps: 384.0,
            arrival_s: 10.0,
            lifetime_s: 60.0,
        };
        let decision = link.admit(&req, mode, limits.as_slice())?;
        println!("{mode:<15} -> {decision:?}");
    }
    Ok(())
}
