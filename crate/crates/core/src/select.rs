//! Informative-segment selection and the ablation strategy family.
//!
//! The production strategy ranks every candidate window by audio diversity
//! `D`, keeps the `top_m` most diverse, measures their motion complexity
//! `MC` from the mouth landmarks and returns the window maximizing
//! `I = D / (MC + epsilon)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diversity::{DiversityError, DiversityMetricKind};
use crate::spectral::{motion_complexity, motion_signals, MotionComplexity, SpectralConfig, SpectralError};
use crate::track::{AudioFeatureTrack, LandmarkTrack};
use crate::window::{build_candidates, CandidateWindow, SliceTrack, WindowError};

pub const DEFAULT_SEGMENT_LEN_S: f64 = 5.0;
pub const DEFAULT_STRIDE_S: f64 = 1.0;
pub const DEFAULT_TOP_M: usize = 5;
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_LIP_WEIGHT: f64 = 0.5;
pub const DEFAULT_POSE_WEIGHT: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Diversity(#[from] DiversityError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("track mismatch: {0}")]
    TrackMismatch(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

impl SelectError {
    pub fn is_insufficient_duration(&self) -> bool {
        matches!(self, SelectError::Window(WindowError::InsufficientDuration { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[serde(rename = "isexplore")]
    IsExplore,
    Random,
    AudioOnly,
    LipOnly,
    CameraOnly,
    LipAndCamera,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        Self::IsExplore,
        Self::Random,
        Self::AudioOnly,
        Self::LipOnly,
        Self::CameraOnly,
        Self::LipAndCamera,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::IsExplore => "isexplore",
            Self::Random => "random",
            Self::AudioOnly => "audio",
            Self::LipOnly => "lip",
            Self::CameraOnly => "camera",
            Self::LipAndCamera => "lip-camera",
        }
    }

    /// Whether the choice depends on `SelectionConfig::seed`.
    pub fn is_seeded(self) -> bool {
        self == Self::Random
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "isexplore" => Ok(Self::IsExplore),
            "random" => Ok(Self::Random),
            "audio" | "audio-only" => Ok(Self::AudioOnly),
            "lip" | "lip-only" => Ok(Self::LipOnly),
            "camera" | "camera-only" | "pose" => Ok(Self::CameraOnly),
            "lip-camera" | "lip-and-camera" => Ok(Self::LipAndCamera),
            other => Err(format!(
                "unknown strategy '{other}' (expected one of isexplore, random, audio, lip, camera, lip-camera)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub segment_len_s: f64,
    pub stride_s: f64,
    pub top_m: usize,
    pub diversity_metric: DiversityMetricKind,
    pub spectral: SpectralConfig,
    pub w_lip: f64,
    pub w_pose: f64,
    pub epsilon: f64,
    pub strategy: StrategyKind,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            segment_len_s: DEFAULT_SEGMENT_LEN_S,
            stride_s: DEFAULT_STRIDE_S,
            top_m: DEFAULT_TOP_M,
            diversity_metric: DiversityMetricKind::MeanPairwiseEuclidean,
            spectral: SpectralConfig::default(),
            w_lip: DEFAULT_LIP_WEIGHT,
            w_pose: DEFAULT_POSE_WEIGHT,
            epsilon: DEFAULT_EPSILON,
            strategy: StrategyKind::IsExplore,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), SelectError> {
        if self.top_m == 0 {
            return Err(SelectError::BadConfig("top_m must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(SelectError::BadConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        self.spectral.validate()?;
        let (wl, wp) = (self.w_lip, self.w_pose);
        if !(wl >= 0.0 && wp >= 0.0 && (wl + wp).is_finite() && wl + wp > 0.0) {
            return Err(SpectralError::BadWeights { w_lip: wl, w_pose: wp }.into());
        }
        match self.diversity_metric {
            DiversityMetricKind::PcaCumulativeVariance { k } | DiversityMetricKind::SemanticEntropy { k }
                if k == 0 =>
            {
                Err(SelectError::BadConfig("metric component/cluster count must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// `I = D / (MC + epsilon)`.
#[inline]
pub fn informativeness_score(d: f64, mc: f64, epsilon: f64) -> f64 {
    d / (mc + epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub window: CandidateWindow,
    pub d: Option<f64>,
    pub motion: Option<MotionComplexity>,
    pub i: Option<f64>,
    pub rank: usize,
}

impl CandidateScore {
    fn new(window: CandidateWindow) -> Self {
        Self {
            window,
            d: None,
            motion: None,
            i: None,
            rank: 0,
        }
    }

    pub fn mc(&self) -> Option<f64> {
        self.motion.map(|m| m.mc)
    }
}

/// Per-stage wall-clock times in milliseconds. Informational only.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub candidates_ms: f64,
    pub diversity_ms: f64,
    pub spectral_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub config: SelectionConfig,
    /// One entry per pool window, in pool order.
    pub candidates: Vec<CandidateScore>,
    pub chosen: CandidateWindow,
    pub timings: Option<Timings>,
}

impl SelectionReport {
    pub fn chosen_score(&self) -> &CandidateScore {
        &self.candidates[self.chosen.index]
    }
}

fn check_tracks(audio: &AudioFeatureTrack, landmarks: &LandmarkTrack) -> Result<(), SelectError> {
    if audio.fps() != landmarks.fps() {
        return Err(SelectError::TrackMismatch(format!(
            "audio fps {} differs from landmark fps {}",
            audio.fps(),
            landmarks.fps()
        )));
    }
    if audio.frame_count() != landmarks.frame_count() {
        return Err(SelectError::TrackMismatch(format!(
            "audio has {} frames, landmarks have {}",
            audio.frame_count(),
            landmarks.frame_count()
        )));
    }
    Ok(())
}

pub fn window_diversity(
    audio: &AudioFeatureTrack,
    window: &CandidateWindow,
    metric: DiversityMetricKind,
) -> Result<f64, SelectError> {
    Ok(metric.evaluate(audio.slice(window)?)?.value)
}

pub fn window_motion(
    landmarks: &LandmarkTrack,
    window: &CandidateWindow,
    cfg: &SelectionConfig,
) -> Result<MotionComplexity, SelectError> {
    let signals = motion_signals(landmarks.slice(window)?, landmarks.fps())?;
    Ok(motion_complexity(&signals, &cfg.spectral, cfg.w_lip, cfg.w_pose)?)
}

/// Descending by key, earliest window first on ties.
fn cmp_desc(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Ascending by key, earliest window first on ties.
fn cmp_asc(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

struct Stopwatch {
    start: Instant,
    timings: Timings,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            timings: Timings::default(),
        }
    }

    fn lap<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *slot += t.elapsed().as_secs_f64() * 1e3;
        out
    }

    fn finish(mut self) -> Timings {
        self.timings.total_ms = self.start.elapsed().as_secs_f64() * 1e3;
        self.timings
    }
}

fn score_diversity(
    audio: &AudioFeatureTrack,
    scores: &mut [CandidateScore],
    metric: DiversityMetricKind,
) -> Result<(), SelectError> {
    let values: Vec<f64> = scores
        .par_iter()
        .map(|s| window_diversity(audio, &s.window, metric))
        .collect::<Result<_, _>>()?;
    for (s, v) in scores.iter_mut().zip(values) {
        s.d = Some(v);
    }
    Ok(())
}

fn score_motion(
    landmarks: &LandmarkTrack,
    scores: &mut [CandidateScore],
    which: &[usize],
    cfg: &SelectionConfig,
) -> Result<(), SelectError> {
    let values: Vec<MotionComplexity> = which
        .par_iter()
        .map(|&i| window_motion(landmarks, &scores[i].window, cfg))
        .collect::<Result<_, _>>()?;
    for (&i, m) in which.iter().zip(values) {
        scores[i].motion = Some(m);
    }
    Ok(())
}

fn fill_score(scores: &mut [CandidateScore], epsilon: f64) {
    for s in scores {
        if let (Some(d), Some(m)) = (s.d, s.motion) {
            s.i = Some(informativeness_score(d, m.mc, epsilon));
        }
    }
}

fn assign_ranks(scores: &mut [CandidateScore], order: &[usize]) {
    debug_assert_eq!(order.len(), scores.len());
    for (rank, &i) in order.iter().enumerate() {
        scores[i].rank = rank + 1;
    }
}

/// Runs the production selection regardless of `cfg.strategy`.
pub fn run_isexplore(
    audio: &AudioFeatureTrack,
    landmarks: &LandmarkTrack,
    cfg: &SelectionConfig,
) -> Result<SelectionReport, SelectError> {
    cfg.validate()?;
    check_tracks(audio, landmarks)?;
    let mut clock = Stopwatch::new();

    let pool = Stopwatch::lap(&mut clock.timings.candidates_ms, || {
        build_candidates(audio.frame_count(), audio.fps(), cfg.segment_len_s, cfg.stride_s)
    })?;
    let mut scores: Vec<CandidateScore> = pool.into_iter().map(CandidateScore::new).collect();

    Stopwatch::lap(&mut clock.timings.diversity_ms, || {
        score_diversity(audio, &mut scores, cfg.diversity_metric)
    })?;
    let mut by_d: Vec<usize> = (0..scores.len()).collect();
    by_d.sort_by(|&a, &b| cmp_desc((scores[a].d.unwrap(), a), (scores[b].d.unwrap(), b)));
    let m = cfg.top_m.min(scores.len());
    let (kept, pruned) = by_d.split_at(m);

    Stopwatch::lap(&mut clock.timings.spectral_ms, || {
        score_motion(landmarks, &mut scores, kept, cfg)
    })?;
    fill_score(&mut scores, cfg.epsilon);

    let mut by_i = kept.to_vec();
    by_i.sort_by(|&a, &b| cmp_desc((scores[a].i.unwrap(), a), (scores[b].i.unwrap(), b)));
    let order: Vec<usize> = by_i.iter().chain(pruned).copied().collect();
    assign_ranks(&mut scores, &order);

    let chosen = scores[by_i[0]].window;
    Ok(SelectionReport {
        config: *cfg,
        candidates: scores,
        chosen,
        timings: Some(clock.finish()),
    })
}

/// Runs the strategy named in `cfg.strategy`.
pub fn run_strategy(
    audio: &AudioFeatureTrack,
    landmarks: &LandmarkTrack,
    cfg: &SelectionConfig,
) -> Result<SelectionReport, SelectError> {
    if cfg.strategy == StrategyKind::IsExplore {
        return run_isexplore(audio, landmarks, cfg);
    }
    cfg.validate()?;
    check_tracks(audio, landmarks)?;
    let mut clock = Stopwatch::new();

    let pool = Stopwatch::lap(&mut clock.timings.candidates_ms, || {
        build_candidates(audio.frame_count(), audio.fps(), cfg.segment_len_s, cfg.stride_s)
    })?;
    let mut scores: Vec<CandidateScore> = pool.into_iter().map(CandidateScore::new).collect();
    let all: Vec<usize> = (0..scores.len()).collect();

    let order: Vec<usize> = match cfg.strategy {
        StrategyKind::IsExplore => unreachable!(),
        StrategyKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let pick = rng.random_range(0..scores.len());
            std::iter::once(pick).chain(all.iter().copied().filter(|&i| i != pick)).collect()
        }
        StrategyKind::AudioOnly => {
            Stopwatch::lap(&mut clock.timings.diversity_ms, || {
                score_diversity(audio, &mut scores, cfg.diversity_metric)
            })?;
            let mut order = all;
            order.sort_by(|&a, &b| cmp_desc((scores[a].d.unwrap(), a), (scores[b].d.unwrap(), b)));
            order
        }
        StrategyKind::LipOnly | StrategyKind::CameraOnly | StrategyKind::LipAndCamera => {
            Stopwatch::lap(&mut clock.timings.spectral_ms, || {
                score_motion(landmarks, &mut scores, &all, cfg)
            })?;
            let key = |s: &CandidateScore| {
                let m = s.motion.unwrap();
                match cfg.strategy {
                    StrategyKind::LipOnly => m.mc_lip,
                    StrategyKind::CameraOnly => m.mc_pose,
                    _ => m.mc,
                }
            };
            let mut order = all;
            order.sort_by(|&a, &b| cmp_asc((key(&scores[a]), a), (key(&scores[b]), b)));
            order
        }
    };

    // Whatever the strategy skipped, the chosen window is always fully scored.
    let pick = order[0];
    if scores[pick].d.is_none() {
        let w = scores[pick].window;
        scores[pick].d = Some(Stopwatch::lap(&mut clock.timings.diversity_ms, || {
            window_diversity(audio, &w, cfg.diversity_metric)
        })?);
    }
    if scores[pick].motion.is_none() {
        let w = scores[pick].window;
        scores[pick].motion = Some(Stopwatch::lap(&mut clock.timings.spectral_ms, || {
            window_motion(landmarks, &w, cfg)
        })?);
    }
    fill_score(&mut scores, cfg.epsilon);
    assign_ranks(&mut scores, &order);

    let chosen = scores[pick].window;
    Ok(SelectionReport {
        config: *cfg,
        candidates: scores,
        chosen,
        timings: Some(clock.finish()),
    })
}
