//! Parametric audio/landmark tracks with planted ground truth.
//!
//! A [`SynthSpec`] describes a talking head second by second: how spread
//! out the audio features are, how the mouth opens (a slow and a fast
//! sinusoid), and how the head moves. Controlled experiments plant one
//! "good" region (diverse audio, slow lips, still head) among contrastive
//! distractors and check which window a strategy picks.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::select::{run_strategy, window_diversity, window_motion, SelectError, SelectionConfig, StrategyKind};
use crate::spectral::MOUTH;
use crate::stats::{fit_quality_relation, FitError, FitModel, FitResult};
use crate::track::{AudioFeatureTrack, LandmarkTrack, TrackError};
use crate::window::{build_candidates, seconds_to_frames, CandidateWindow};

pub const LANDMARK_POINTS: usize = 68;
/// Mouth half-width and half-height at rest, in pixels.
pub const MOUTH_RADII: (f64, f64) = (30.0, 12.0);
const HEAD_ORIGIN: (f64, f64) = (320.0, 240.0);
const MOUTH_OFFSET_Y: f64 = 60.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("bad synth spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoseProfile {
    #[default]
    Static,
    /// Constant drift in pixels per second.
    Linear { vx: f64, vy: f64 },
    /// Sinusoidal shake around the current position.
    Jitter { freq_hz: f64, amp: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentProfile {
    /// Per-dimension variance of audio rows around the track mean.
    pub audio_variance: f64,
    /// Radial amplitude (pixels) of the slow mouth oscillation.
    pub lip_low_amp: f64,
    /// Radial amplitude (pixels) of the fast mouth oscillation.
    pub lip_high_amp: f64,
    pub pose: PoseProfile,
}

impl Default for SegmentProfile {
    fn default() -> Self {
        Self {
            audio_variance: 0.2,
            lip_low_amp: 2.0,
            lip_high_amp: 0.0,
            pose: PoseProfile::Static,
        }
    }
}

/// Seconds `[start_s, end_s)` that follow `profile` instead of the background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub start_s: u32,
    pub end_s: u32,
    #[serde(flatten)]
    pub profile: SegmentProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub duration_s: u32,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_audio_dim")]
    pub audio_dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_low_hz")]
    pub lip_low_hz: f64,
    #[serde(default = "default_high_hz")]
    pub lip_high_hz: f64,
    #[serde(default)]
    pub background: SegmentProfile,
    #[serde(default)]
    pub regions: Vec<Region>,
}

fn default_fps() -> f64 {
    25.0
}
fn default_audio_dim() -> usize {
    32
}
fn default_low_hz() -> f64 {
    1.0
}
fn default_high_hz() -> f64 {
    9.0
}

impl SynthSpec {
    pub fn uniform(duration_s: u32, seed: u64, background: SegmentProfile) -> Self {
        Self {
            duration_s,
            fps: default_fps(),
            audio_dim: default_audio_dim(),
            seed,
            lip_low_hz: default_low_hz(),
            lip_high_hz: default_high_hz(),
            background,
            regions: Vec::new(),
        }
    }

    pub fn frame_count(&self) -> usize {
        (f64::from(self.duration_s) * self.fps).round() as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadSpec(m));
        if self.duration_s == 0 {
            return bad("duration_s must be positive".into());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if self.frame_count() < 2 {
            return bad("spec yields fewer than 2 frames".into());
        }
        if self.audio_dim == 0 {
            return bad("audio_dim must be at least 1".into());
        }
        for (name, hz) in [("lip_low_hz", self.lip_low_hz), ("lip_high_hz", self.lip_high_hz)] {
            if !(hz.is_finite() && hz >= 0.0) {
                return bad(format!("{name} must be non-negative, got {hz}"));
            }
        }
        let check = |p: &SegmentProfile, at: &str| -> Result<(), SynthError> {
            let amps = [p.audio_variance, p.lip_low_amp, p.lip_high_amp];
            if amps.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return bad(format!("{at}: variances and amplitudes must be finite and >= 0"));
            }
            if p.lip_low_amp + p.lip_high_amp >= MOUTH_RADII.1 {
                return bad(format!(
                    "{at}: lip amplitudes must sum below the mouth half-height {}",
                    MOUTH_RADII.1
                ));
            }
            match p.pose {
                PoseProfile::Static => Ok(()),
                PoseProfile::Linear { vx, vy } if vx.is_finite() && vy.is_finite() => Ok(()),
                PoseProfile::Jitter { freq_hz, amp }
                    if freq_hz.is_finite() && freq_hz >= 0.0 && amp.is_finite() && amp >= 0.0 =>
                {
                    Ok(())
                }
                _ => bad(format!("{at}: invalid pose profile")),
            }
        };
        check(&self.background, "background")?;
        let mut sorted: Vec<&Region> = self.regions.iter().collect();
        sorted.sort_by_key(|r| r.start_s);
        for (i, r) in sorted.iter().enumerate() {
            let at = format!("region [{}, {})", r.start_s, r.end_s);
            if r.start_s >= r.end_s || r.end_s > self.duration_s {
                return bad(format!("{at} is empty or extends past duration {}", self.duration_s));
            }
            if i > 0 && sorted[i - 1].end_s > r.start_s {
                return bad(format!("{at} overlaps another region"));
            }
            check(&r.profile, &at)?;
        }
        Ok(())
    }

    /// Profile in effect during second `s`.
    pub fn profile_at(&self, s: u32) -> &SegmentProfile {
        self.regions
            .iter()
            .find(|r| r.start_s <= s && s < r.end_s)
            .map(|r| &r.profile)
            .unwrap_or(&self.background)
    }
}

/// Polar coordinates `(radius, angle)` of the 20 mouth points at rest.
fn mouth_shape() -> Vec<(f64, f64)> {
    (0..MOUTH.len())
        .map(|k| {
            let a = 2.0 * PI * k as f64 / MOUTH.len() as f64;
            let (x, y) = (MOUTH_RADII.0 * a.cos(), MOUTH_RADII.1 * a.sin());
            (x.hypot(y), y.atan2(x))
        })
        .collect()
}

/// Builds the audio and landmark tracks described by `spec`.
pub fn generate_tracks(spec: &SynthSpec) -> Result<(AudioFeatureTrack, LandmarkTrack), SynthError> {
    spec.validate()?;
    let frames = spec.frame_count();
    let dim = spec.audio_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mean: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let low_phase = rng.random_range(0.0..2.0 * PI);
    let high_phase = rng.random_range(0.0..2.0 * PI);
    let jitter_phase = rng.random_range(0.0..2.0 * PI);

    let second_of = |f: usize| ((f as f64 / spec.fps).floor() as u32).min(spec.duration_s - 1);

    let mut audio = Vec::with_capacity(frames * dim);
    for f in 0..frames {
        let sd = spec.profile_at(second_of(f)).audio_variance.sqrt();
        for m in &mean {
            let z: f64 = StandardNormal.sample(&mut rng);
            audio.push((m + sd * z) as f32);
        }
    }

    let shape = mouth_shape();
    let dt = 1.0 / spec.fps;
    let mut drift = (0.0, 0.0);
    let mut landmarks = Vec::with_capacity(frames * LANDMARK_POINTS * 2);
    for f in 0..frames {
        let t = f as f64 * dt;
        let p = spec.profile_at(second_of(f));
        let (jx, jy) = match p.pose {
            PoseProfile::Jitter { freq_hz, amp } => {
                let w = 2.0 * PI * freq_hz * t + jitter_phase;
                // unequal x/y rates: a circle would move at constant speed
                (amp * w.sin(), amp * (w * 1.3).cos())
            }
            _ => (0.0, 0.0),
        };
        let head = (HEAD_ORIGIN.0 + drift.0 + jx, HEAD_ORIGIN.1 + drift.1 + jy);
        if let PoseProfile::Linear { vx, vy } = p.pose {
            drift.0 += vx * dt;
            drift.1 += vy * dt;
        }
        let open = p.lip_low_amp * (2.0 * PI * spec.lip_low_hz * t + low_phase).sin()
            + p.lip_high_amp * (2.0 * PI * spec.lip_high_hz * t + high_phase).sin();

        for point in 0..LANDMARK_POINTS {
            let (x, y) = if MOUTH.contains(&point) {
                let (r, a) = shape[point - MOUTH.start];
                (
                    head.0 + (r + open) * a.cos(),
                    head.1 + MOUTH_OFFSET_Y + (r + open) * a.sin(),
                )
            } else {
                // rigid face contour around the head center
                let a = 2.0 * PI * point as f64 / MOUTH.start as f64;
                (head.0 + 90.0 * a.cos(), head.1 + 110.0 * a.sin())
            };
            landmarks.push(x as f32);
            landmarks.push(y as f32);
        }
    }

    Ok((
        AudioFeatureTrack::new(spec.fps, dim, audio)?,
        LandmarkTrack::new(spec.fps, LANDMARK_POINTS, landmarks)?,
    ))
}

/// The planted "good" region of a spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub start_s: u32,
    pub len_s: u32,
}

impl Plant {
    pub fn start_frame(&self, fps: f64) -> usize {
        seconds_to_frames(f64::from(self.start_s), fps)
    }

    pub fn len_frames(&self, fps: f64) -> usize {
        seconds_to_frames(f64::from(self.len_s), fps)
    }

    /// Fraction of `window` that overlaps the plant.
    pub fn overlap_fraction(&self, window: &CandidateWindow, fps: f64) -> f64 {
        let shared = window.overlap_frames(self.start_frame(fps), self.len_frames(fps));
        shared as f64 / window.len_frames as f64
    }

    pub fn is_recovered_by(&self, window: &CandidateWindow, fps: f64) -> bool {
        self.overlap_fraction(window, fps) >= RECOVERY_OVERLAP
    }
}

/// Minimum overlap, as a fraction of segment length, that counts as recovery.
pub const RECOVERY_OVERLAP: f64 = 0.8;

/// Profile of the planted region: diverse audio, slow lips, still head.
pub const PLANT_PROFILE: SegmentProfile = SegmentProfile {
    audio_variance: 1.0,
    lip_low_amp: 2.5,
    lip_high_amp: 0.0,
    pose: PoseProfile::Static,
};

/// Distractor profile: slightly more diverse audio than the plant, but fast
/// lip motion and a shaking head.
pub const DISTRACTOR_PROFILE: SegmentProfile = SegmentProfile {
    audio_variance: 1.1,
    lip_low_amp: 1.0,
    lip_high_amp: 2.0,
    pose: PoseProfile::Jitter { freq_hz: 8.0, amp: 1.5 },
};

/// Background: flat audio, mixed-speed lips, slow drift.
pub const BACKGROUND_PROFILE: SegmentProfile = SegmentProfile {
    audio_variance: 0.2,
    lip_low_amp: 2.0,
    lip_high_amp: 0.6,
    pose: PoseProfile::Linear { vx: 2.0, vy: -1.0 },
};

pub const STANDARD_DURATION_S: u32 = 104;
const STANDARD_SLOTS: [u32; 7] = [5, 20, 35, 50, 65, 80, 95];

/// The standard plant-recovery setup: 104 s (100 five-second windows at a
/// one-second stride) with one plant and two distractors, each 5 s long,
/// placed in distinct slots chosen by `seed`.
pub fn standard_plant_spec(seed: u64) -> (SynthSpec, Plant) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_91a7);
    let mut slots = STANDARD_SLOTS.to_vec();
    let mut take = || slots.remove(rng.random_range(0..slots.len()));
    let (plant_at, d1, d2) = (take(), take(), take());

    let region = |start_s: u32, profile: SegmentProfile| Region {
        start_s,
        end_s: start_s + 5,
        profile,
    };
    let mut spec = SynthSpec::uniform(STANDARD_DURATION_S, seed, BACKGROUND_PROFILE);
    spec.regions = vec![
        region(plant_at, PLANT_PROFILE),
        region(d1, DISTRACTOR_PROFILE),
        region(d2, DISTRACTOR_PROFILE),
    ];
    (spec, Plant { start_s: plant_at, len_s: 5 })
}

/// Runs `cfg.strategy` on tracks generated from `spec` and reports whether
/// the chosen window covers at least 80% of the plant.
pub fn planted_recovery_trial(
    spec: &SynthSpec,
    plant: Plant,
    cfg: &SelectionConfig,
) -> Result<bool, SynthError> {
    let (audio, landmarks) = generate_tracks(spec)?;
    let report = run_strategy(&audio, &landmarks, cfg)?;
    Ok(plant.is_recovered_by(&report.chosen, spec.fps))
}

/// One line of an ablation table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub chosen_start_s: f64,
    pub plant_start_s: Option<f64>,
    pub overlap_frac: Option<f64>,
    pub d: Option<f64>,
    pub mc: Option<f64>,
    pub i: Option<f64>,
}

pub const ABLATION_CSV_HEADER: &str = "strategy,seed,chosen_start_s,plant_start_s,overlap_frac,D,mc,I";

/// Runs each strategy in the order given. Seeded strategies run once per
/// seed in `seeds` (ascending); deterministic ones run once, with the first
/// seed recorded.
pub fn run_ablation(
    audio: &AudioFeatureTrack,
    landmarks: &LandmarkTrack,
    base: &SelectionConfig,
    strategies: &[StrategyKind],
    seeds: &[u64],
    plant: Option<Plant>,
) -> Result<Vec<AblationRow>, SynthError> {
    if seeds.is_empty() {
        return Err(SynthError::BadSpec("at least one seed is required".into()));
    }
    let mut sorted_seeds = seeds.to_vec();
    sorted_seeds.sort_unstable();
    let mut rows = Vec::new();
    for &strategy in strategies {
        let run_seeds = if strategy.is_seeded() {
            &sorted_seeds[..]
        } else {
            &sorted_seeds[..1]
        };
        for &seed in run_seeds {
            let cfg = SelectionConfig { strategy, seed, ..*base };
            let report = run_strategy(audio, landmarks, &cfg)?;
            let score = report.chosen_score();
            rows.push(AblationRow {
                strategy,
                seed,
                chosen_start_s: report.chosen.start_s,
                plant_start_s: plant.map(|p| f64::from(p.start_s)),
                overlap_frac: plant.map(|p| p.overlap_fraction(&report.chosen, audio.fps())),
                d: score.d,
                mc: score.mc(),
                i: score.i,
            });
        }
    }
    Ok(rows)
}

fn csv_num(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_ablation_csv<W: Write>(rows: &[AblationRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{ABLATION_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.strategy,
            r.seed,
            r.chosen_start_s,
            csv_num(r.plant_start_s),
            csv_num(r.overlap_frac),
            csv_num(r.d),
            csv_num(r.mc),
            csv_num(r.i),
        )?;
    }
    out.flush()
}

/// A spec whose per-region audio variance and lip profile are drawn
/// independently of each other: `regions` back-to-back regions of
/// `region_s` seconds.
pub fn independent_profiles_spec(seed: u64, regions: u32, region_s: u32) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1dea_5eed);
    let mut spec = SynthSpec::uniform(regions * region_s, seed, SegmentProfile::default());
    spec.regions = (0..regions)
        .map(|k| Region {
            start_s: k * region_s,
            end_s: (k + 1) * region_s,
            profile: SegmentProfile {
                audio_variance: rng.random_range(0.2..1.5),
                lip_low_amp: rng.random_range(0.5..3.0),
                lip_high_amp: rng.random_range(0.0..2.0),
                pose: PoseProfile::Static,
            },
        })
        .collect();
    spec
}

/// Scores non-overlapping windows for audio diversity and lip complexity and
/// fits a line relating the two.
pub fn diversity_vs_lip_fit(
    audio: &AudioFeatureTrack,
    landmarks: &LandmarkTrack,
    cfg: &SelectionConfig,
) -> Result<FitResult, SynthError> {
    let pool = build_candidates(audio.frame_count(), audio.fps(), cfg.segment_len_s, cfg.segment_len_s)
        .map_err(SelectError::from)?;
    let mut d = Vec::with_capacity(pool.len());
    let mut lip = Vec::with_capacity(pool.len());
    for w in &pool {
        d.push(window_diversity(audio, w, cfg.diversity_metric)?);
        lip.push(window_motion(landmarks, w, cfg)?.mc_lip);
    }
    Ok(fit_quality_relation(&d, &lip, FitModel::Linear)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let (spec, _) = standard_plant_spec(3);
        let a = generate_tracks(&spec).unwrap();
        let b = generate_tracks(&spec).unwrap();
        assert_eq!(a, b);
        let other = SynthSpec { seed: 4, ..spec };
        assert_ne!(generate_tracks(&other).unwrap().0, a.0);
    }

    #[test]
    fn shapes() {
        let spec = SynthSpec::uniform(10, 1, SegmentProfile::default());
        let (audio, lm) = generate_tracks(&spec).unwrap();
        assert_eq!(audio.frame_count(), 250);
        assert_eq!(audio.dim(), 32);
        assert_eq!(lm.frame_count(), 250);
        assert_eq!(lm.points(), 68);
    }

    #[test]
    fn spec_validation() {
        let ok = SynthSpec::uniform(10, 0, SegmentProfile::default());
        ok.validate().unwrap();
        let cases = [
            SynthSpec { duration_s: 0, ..ok.clone() },
            SynthSpec { fps: 0.0, ..ok.clone() },
            SynthSpec { audio_dim: 0, ..ok.clone() },
            SynthSpec {
                background: SegmentProfile { audio_variance: -1.0, ..Default::default() },
                ..ok.clone()
            },
            SynthSpec {
                background: SegmentProfile { lip_low_amp: 8.0, lip_high_amp: 5.0, ..Default::default() },
                ..ok.clone()
            },
            SynthSpec {
                regions: vec![Region { start_s: 8, end_s: 12, profile: Default::default() }],
                ..ok.clone()
            },
            SynthSpec {
                regions: vec![
                    Region { start_s: 1, end_s: 4, profile: Default::default() },
                    Region { start_s: 3, end_s: 6, profile: Default::default() },
                ],
                ..ok.clone()
            },
        ];
        for c in cases {
            assert!(matches!(generate_tracks(&c), Err(SynthError::BadSpec(_))), "{c:?}");
        }
    }

    #[test]
    fn spec_json_defaults() {
        let spec: SynthSpec = serde_json::from_str(
            r#"{"duration_s": 12, "regions": [{"start_s": 2, "end_s": 7, "audio_variance": 2.0,
                "pose": {"kind": "jitter", "freq_hz": 8.0, "amp": 1.0}}]}"#,
        )
        .unwrap();
        assert_eq!(spec.fps, 25.0);
        assert_eq!(spec.audio_dim, 32);
        assert_eq!(spec.regions[0].profile.audio_variance, 2.0);
        assert_eq!(spec.regions[0].profile.lip_low_amp, 2.0);
        assert_eq!(spec.profile_at(1), &spec.background);
        assert_eq!(spec.profile_at(6).audio_variance, 2.0);
        spec.validate().unwrap();
    }

    #[test]
    fn plant_slots_are_distinct() {
        for seed in 0..50 {
            let (spec, plant) = standard_plant_spec(seed);
            spec.validate().unwrap();
            assert_eq!(spec.regions[0].start_s, plant.start_s);
            assert!(spec.frame_count() == 2600);
        }
    }

    #[test]
    fn overlap_fraction() {
        let plant = Plant { start_s: 10, len_s: 5 };
        let w = |s: usize| CandidateWindow {
            index: 0,
            start_frame: s * 25,
            len_frames: 125,
            start_s: s as f64,
            end_s: s as f64 + 5.0,
        };
        assert_eq!(plant.overlap_fraction(&w(10), 25.0), 1.0);
        assert_eq!(plant.overlap_fraction(&w(11), 25.0), 0.8);
        assert!(plant.is_recovered_by(&w(9), 25.0));
        assert!(!plant.is_recovered_by(&w(12), 25.0));
    }

    #[test]
    fn csv_layout() {
        let rows = vec![AblationRow {
            strategy: StrategyKind::AudioOnly,
            seed: 0,
            chosen_start_s: 12.0,
            plant_start_s: None,
            overlap_frac: None,
            d: Some(1.5),
            mc: Some(0.25),
            i: Some(6.0),
        }];
        let mut buf = Vec::new();
        write_ablation_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "strategy,seed,chosen_start_s,plant_start_s,overlap_frac,D,mc,I\naudio,0,12,,,1.5,0.25,6\n"
        );
    }
}
