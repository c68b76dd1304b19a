//! Informative segment selection for personalized talking-face training.
//!
//! Given per-frame audio features and 68-point facial landmarks of a long
//! reference video, pick the short window that best balances audio
//! diversity against lip and head motion complexity.
//!
//! ```no_run
//! use isexplore_core::{load_track, run_isexplore, SelectionConfig};
//!
//! let audio = load_track("voice.ftrk")?.into_audio()?;
//! let landmarks = load_track("face.ftrk")?.into_landmarks()?;
//! let report = run_isexplore(&audio, &landmarks, &SelectionConfig::default())?;
//! println!("{:.1}s .. {:.1}s", report.chosen.start_s, report.chosen.end_s);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod diversity;
pub mod report;
pub mod select;
pub mod spectral;
pub mod stats;
pub mod synth;
pub mod track;
pub mod window;

pub use diversity::{Diversity, DiversityError, DiversityMetricKind};
pub use report::report_to_json;
pub use select::{
    informativeness_score, run_isexplore, run_strategy, CandidateScore, SelectError, SelectionConfig,
    SelectionReport, StrategyKind, Timings,
};
pub use spectral::{hf_ratio, MotionComplexity, MotionSignals, SpectralConfig, SpectralError};
pub use stats::{fit_quality_relation, FitError, FitModel, FitResult};
pub use synth::{generate_tracks, Plant, SynthError, SynthSpec};
pub use track::{
    load_track, read_track, save_track, write_track, AudioFeatureTrack, LandmarkTrack, Track, TrackError,
    TrackHeader, TrackKind,
};
pub use window::{build_candidates, slice_track, CandidateWindow, WindowError};
