//! Fixtures shared by the benchmarks.

use isexplore_core::synth::{PoseProfile, Region, SegmentProfile};
use isexplore_core::{generate_tracks, AudioFeatureTrack, LandmarkTrack, SynthSpec};

/// A synthetic recording of `duration_s` seconds at 25 fps with `audio_dim`
/// features per frame and one busier region in the middle.
pub fn recording(duration_s: u32, audio_dim: usize) -> (AudioFeatureTrack, LandmarkTrack) {
    let mut spec = SynthSpec::uniform(duration_s, 7, SegmentProfile::default());
    spec.audio_dim = audio_dim;
    let mid = duration_s / 2;
    spec.regions = vec![Region {
        start_s: mid,
        end_s: (mid + 10).min(duration_s),
        profile: SegmentProfile {
            audio_variance: 1.0,
            lip_low_amp: 1.0,
            lip_high_amp: 1.5,
            pose: PoseProfile::Jitter { freq_hz: 6.0, amp: 1.0 },
        },
    }];
    generate_tracks(&spec).expect("valid bench spec")
}
