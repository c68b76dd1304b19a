//! Fixed-length, fixed-stride candidate windows over a track timeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::track::{AudioFeatureTrack, FeatureView, LandmarkTrack, LandmarkView};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowError {
    #[error("insufficient duration: {total_frames} frames available, segment needs {segment_frames}")]
    InsufficientDuration {
        total_frames: usize,
        segment_frames: usize,
    },
    #[error("invalid window configuration: {0}")]
    BadConfig(String),
    #[error("window [{start}, {end}) out of range for a {frames}-frame track")]
    OutOfRange {
        start: usize,
        end: usize,
        frames: usize,
    },
}

/// One candidate segment: frames `[start_frame, start_frame + len_frames)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateWindow {
    pub index: usize,
    pub start_frame: usize,
    pub len_frames: usize,
    pub start_s: f64,
    pub end_s: f64,
}

impl CandidateWindow {
    pub fn end_frame(&self) -> usize {
        self.start_frame + self.len_frames
    }

    /// Number of frames shared with `[start, start + len)`.
    pub fn overlap_frames(&self, start: usize, len: usize) -> usize {
        let lo = self.start_frame.max(start);
        let hi = self.end_frame().min(start + len);
        hi.saturating_sub(lo)
    }
}

/// Seconds to frames, rounding to nearest.
pub fn seconds_to_frames(seconds: f64, fps: f64) -> usize {
    (seconds * fps).round().max(0.0) as usize
}

/// Builds the candidate pool: windows of `round(segment_len_s * fps)` frames
/// starting every `round(stride_s * fps)` frames. A trailing partial window
/// is dropped.
pub fn build_candidates(
    total_frames: usize,
    fps: f64,
    segment_len_s: f64,
    stride_s: f64,
) -> Result<Vec<CandidateWindow>, WindowError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(WindowError::BadConfig(format!("fps must be positive, got {fps}")));
    }
    if !(segment_len_s.is_finite() && segment_len_s > 0.0) {
        return Err(WindowError::BadConfig(format!(
            "segment length must be positive, got {segment_len_s}"
        )));
    }
    if !(stride_s.is_finite() && stride_s > 0.0) {
        return Err(WindowError::BadConfig(format!("stride must be positive, got {stride_s}")));
    }
    let len = seconds_to_frames(segment_len_s, fps);
    let stride = seconds_to_frames(stride_s, fps);
    if len < 2 {
        return Err(WindowError::BadConfig(format!(
            "segment of {segment_len_s} s is {len} frame(s) at {fps} fps; need at least 2"
        )));
    }
    if stride < 1 {
        return Err(WindowError::BadConfig(format!(
            "stride of {stride_s} s rounds to zero frames at {fps} fps"
        )));
    }
    build_candidates_frames(total_frames, fps, len, stride)
}

/// Same as [`build_candidates`] with length and stride already in frames.
pub fn build_candidates_frames(
    total_frames: usize,
    fps: f64,
    len: usize,
    stride: usize,
) -> Result<Vec<CandidateWindow>, WindowError> {
    if len < 2 || stride < 1 {
        return Err(WindowError::BadConfig(format!(
            "need len >= 2 and stride >= 1 frames, got len {len}, stride {stride}"
        )));
    }
    if total_frames < len {
        return Err(WindowError::InsufficientDuration {
            total_frames,
            segment_frames: len,
        });
    }
    let count = (total_frames - len) / stride + 1;
    Ok((0..count)
        .map(|index| {
            let start_frame = index * stride;
            CandidateWindow {
                index,
                start_frame,
                len_frames: len,
                start_s: start_frame as f64 / fps,
                end_s: (start_frame + len) as f64 / fps,
            }
        })
        .collect())
}

fn check_range(window: &CandidateWindow, frames: usize) -> Result<(), WindowError> {
    let end = window.start_frame.checked_add(window.len_frames);
    match end {
        Some(end) if end <= frames => Ok(()),
        _ => Err(WindowError::OutOfRange {
            start: window.start_frame,
            end: window.start_frame.saturating_add(window.len_frames),
            frames,
        }),
    }
}

/// Zero-copy access to the frames a window covers.
pub trait SliceTrack {
    type View<'a>
    where
        Self: 'a;

    fn slice(&self, window: &CandidateWindow) -> Result<Self::View<'_>, WindowError>;
}

impl SliceTrack for AudioFeatureTrack {
    type View<'a> = FeatureView<'a>;

    fn slice(&self, window: &CandidateWindow) -> Result<FeatureView<'_>, WindowError> {
        check_range(window, self.frame_count())?;
        Ok(self.view().sub(window.start_frame, window.len_frames))
    }
}

impl SliceTrack for LandmarkTrack {
    type View<'a> = LandmarkView<'a>;

    fn slice(&self, window: &CandidateWindow) -> Result<LandmarkView<'_>, WindowError> {
        check_range(window, self.frame_count())?;
        Ok(self.view().sub(window.start_frame, window.len_frames))
    }
}

pub fn slice_track<'a, T: SliceTrack>(
    track: &'a T,
    window: &CandidateWindow,
) -> Result<T::View<'a>, WindowError> {
    track.slice(window)
}
