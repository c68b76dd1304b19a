//! Lip and head-pose motion signals and their high-frequency ratio.

use std::cell::RefCell;
use std::ops::Range;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::track::LandmarkView;

/// The 20 mouth points of the 68-point landmark scheme (0-based).
pub const MOUTH: Range<usize> = 48..68;
pub const MOUTH_POINTS: usize = 20;
pub const DEFAULT_HF_THRESHOLD: f64 = 0.25;

/// Signals whose peak-to-peak spread is below this fraction of their
/// magnitude are treated as constant. Keeps rounding noise in a still face
/// from being read as high-frequency motion.
pub const CONSTANT_SIGNAL_RTOL: f64 = 1e-10;

/// Landmarks are stored as f32, so coordinates only resolve to about one
/// ulp of their magnitude. Motion channels whose spread stays within this
/// many ulps of the largest coordinate carry nothing but quantization noise.
pub const LANDMARK_RESOLUTION_ULPS: f64 = 32.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("landmark track has {0} points; mouth analysis needs at least 68")]
    TooFewLandmarks(usize),
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("signal of length {0} is too short; need at least 4 samples")]
    SignalTooShort(usize),
    #[error("signal contains a non-finite sample at {0}")]
    NonFiniteSignal(usize),
    #[error("high-frequency threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
    #[error("weights must be non-negative with a positive sum, got lip {w_lip}, pose {w_pose}")]
    BadWeights { w_lip: f64, w_pose: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    /// Cutoff as a fraction of the Nyquist frequency. Bins at or above it
    /// count as high frequency. DC is always excluded.
    pub hf_threshold: f64,
}

impl SpectralConfig {
    pub fn new(hf_threshold: f64) -> Result<Self, SpectralError> {
        let cfg = Self { hf_threshold };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.hf_threshold > 0.0 && self.hf_threshold < 1.0 {
            Ok(())
        } else {
            Err(SpectralError::BadThreshold(self.hf_threshold))
        }
    }
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            hf_threshold: DEFAULT_HF_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSignals {
    /// Distance of each mouth point to the mouth center, one channel per point.
    pub lip_channels: Vec<Vec<f64>>,
    /// Frame-to-frame displacement of the mouth center (length T - 1).
    pub pose_channel: Vec<f64>,
    pub fps: f64,
    /// Absolute spread below which a channel counts as constant.
    pub noise_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionComplexity {
    pub mc_lip: f64,
    pub mc_pose: f64,
    pub mc: f64,
}

fn check_mouth(landmarks: &LandmarkView<'_>) -> Result<usize, SpectralError> {
    if landmarks.points() < MOUTH.end {
        return Err(SpectralError::TooFewLandmarks(landmarks.points()));
    }
    match landmarks.frames() {
        t if t < 2 => Err(SpectralError::TooFewFrames(t)),
        t => Ok(t),
    }
}

fn mouth_center(landmarks: &LandmarkView<'_>, frame: usize) -> (f64, f64) {
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in MOUTH {
        let (x, y) = landmarks.point(frame, p);
        cx += f64::from(x);
        cy += f64::from(y);
    }
    (cx / MOUTH_POINTS as f64, cy / MOUTH_POINTS as f64)
}

/// Per-frame distance of each mouth landmark to the mouth's geometric
/// center. Returns 20 channels of length T.
pub fn lip_distance_series(landmarks: LandmarkView<'_>) -> Result<Vec<Vec<f64>>, SpectralError> {
    let t = check_mouth(&landmarks)?;
    let mut channels: Vec<Vec<f64>> = (0..MOUTH_POINTS).map(|_| Vec::with_capacity(t)).collect();
    for frame in 0..t {
        let (cx, cy) = mouth_center(&landmarks, frame);
        for (ch, p) in channels.iter_mut().zip(MOUTH) {
            let (x, y) = landmarks.point(frame, p);
            ch.push((f64::from(x) - cx).hypot(f64::from(y) - cy));
        }
    }
    Ok(channels)
}

/// Distance the mouth center travels between consecutive frames (length T - 1).
pub fn pose_center_series(landmarks: LandmarkView<'_>) -> Result<Vec<f64>, SpectralError> {
    let t = check_mouth(&landmarks)?;
    let centers: Vec<(f64, f64)> = (0..t).map(|f| mouth_center(&landmarks, f)).collect();
    Ok(centers
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .collect())
}

/// Coordinate resolution of a landmark window, see [`LANDMARK_RESOLUTION_ULPS`].
pub fn landmark_noise_floor(landmarks: &LandmarkView<'_>) -> f64 {
    let peak = landmarks
        .as_slice()
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(f64::from(v).abs()));
    LANDMARK_RESOLUTION_ULPS * f64::from(f32::EPSILON) * peak
}

pub fn motion_signals(landmarks: LandmarkView<'_>, fps: f64) -> Result<MotionSignals, SpectralError> {
    Ok(MotionSignals {
        lip_channels: lip_distance_series(landmarks)?,
        pose_channel: pose_center_series(landmarks)?,
        fps,
        noise_floor: landmark_noise_floor(&landmarks),
    })
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One-sided DFT magnitudes for bins `1..=N/2`.
pub fn magnitude_spectrum(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    buf[1..=n / 2].iter().map(|c| c.norm()).collect()
}

/// Whether bin `i` of an `n`-point DFT lies at or above the cutoff.
#[inline]
pub fn is_high_bin(i: usize, n: usize, hf_threshold: f64) -> bool {
    // bin frequency / Nyquist = (i * fps / n) / (fps / 2)
    2.0 * i as f64 / n as f64 >= hf_threshold
}

fn is_effectively_constant(signal: &[f64], abs_floor: f64) -> bool {
    let (lo, hi, mag) = signal.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64),
        |(lo, hi, mag), &x| (lo.min(x), hi.max(x), mag.max(x.abs())),
    );
    hi - lo <= (CONSTANT_SIGNAL_RTOL * mag).max(abs_floor)
}

/// Fraction of non-DC spectral magnitude at or above the cutoff.
///
/// The cutoff does not depend on `fps` once expressed relative to Nyquist;
/// `fps` is accepted so callers can keep frequencies in Hz if they wish.
pub fn hf_ratio(signal: &[f64], fps: f64, cfg: &SpectralConfig) -> Result<f64, SpectralError> {
    hf_ratio_above_floor(signal, fps, cfg, 0.0)
}

/// [`hf_ratio`], but signals whose peak-to-peak spread is at most
/// `abs_floor` score 0.
pub fn hf_ratio_above_floor(
    signal: &[f64],
    _fps: f64,
    cfg: &SpectralConfig,
    abs_floor: f64,
) -> Result<f64, SpectralError> {
    cfg.validate()?;
    let n = signal.len();
    if n < 4 {
        return Err(SpectralError::SignalTooShort(n));
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(SpectralError::NonFiniteSignal(i));
    }
    if is_effectively_constant(signal, abs_floor) {
        return Ok(0.0);
    }
    let mags = magnitude_spectrum(signal);
    let mut high = 0.0;
    let mut total = 0.0;
    for (k, m) in mags.iter().enumerate() {
        let bin = k + 1;
        total += m;
        if is_high_bin(bin, n, cfg.hf_threshold) {
            high += m;
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok((high / total).clamp(0.0, 1.0))
}

/// Motion complexity of one window: the mean lip-channel ratio, the pose
/// ratio, and their weighted combination.
pub fn motion_complexity(
    signals: &MotionSignals,
    cfg: &SpectralConfig,
    w_lip: f64,
    w_pose: f64,
) -> Result<MotionComplexity, SpectralError> {
    if !(w_lip >= 0.0 && w_pose >= 0.0 && w_lip + w_pose > 0.0 && (w_lip + w_pose).is_finite()) {
        return Err(SpectralError::BadWeights { w_lip, w_pose });
    }
    let mut lip_sum = 0.0;
    for ch in &signals.lip_channels {
        lip_sum += hf_ratio_above_floor(ch, signals.fps, cfg, signals.noise_floor)?;
    }
    let mc_lip = lip_sum / signals.lip_channels.len() as f64;
    let mc_pose =
        hf_ratio_above_floor(&signals.pose_channel, signals.fps, cfg, signals.noise_floor)?;
    let mc = if w_pose == 0.0 {
        mc_lip
    } else if w_lip == 0.0 {
        mc_pose
    } else {
        (w_lip * mc_lip + w_pose * mc_pose) / (w_lip + w_pose)
    };
    Ok(MotionComplexity { mc_lip, mc_pose, mc })
}
