//! FTRK: the fixed-layout binary container for per-frame feature tracks.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "FTRK"
//!      4     2  version (u16 LE)
//!      6     1  kind (0 = audio features, 1 = 2D landmarks)
//!      7     1  padding, always 0
//!      8     8  fps (f64 LE)
//!     16     8  frame_count (u64 LE)
//!     24     8  dim (u64 LE) -- feature width, or landmark point count
//!     32     -  payload, f32 LE, frame-major then point then coordinate
//! ```
//!
//! A file is accepted only if its length is exactly the header plus
//! `frame_count * dim * (2 for landmarks, 1 for audio) * 4` bytes.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"FTRK";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"FTRK\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown track kind {0}")]
    UnknownKind(u8),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("trailing bytes after payload")]
    TrailingData,
    #[error("non-finite value at frame {frame}, element {element}")]
    NonFiniteData { frame: usize, element: usize },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("expected a {expected:?} track, found {found:?}")]
    WrongKind { expected: TrackKind, found: TrackKind },
}

pub type Result<T> = std::result::Result<T, TrackError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum TrackKind {
    AudioFeatures = 0,
    Landmarks2D = 1,
}

impl TrackKind {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Self::AudioFeatures),
            1 => Ok(Self::Landmarks2D),
            other => Err(TrackError::UnknownKind(other)),
        }
    }

    /// f32 values stored per (frame, dim) cell.
    pub fn values_per_item(self) -> usize {
        match self {
            Self::AudioFeatures => 1,
            Self::Landmarks2D => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackHeader {
    pub version: u16,
    pub kind: TrackKind,
    pub fps: f64,
    pub frame_count: u64,
    pub dim: u64,
}

impl TrackHeader {
    pub fn new(kind: TrackKind, fps: f64, frame_count: u64, dim: u64) -> Self {
        Self {
            version: FORMAT_VERSION,
            kind,
            fps,
            frame_count,
            dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(TrackError::UnsupportedVersion(self.version));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(TrackError::InvalidHeader(format!(
                "fps must be finite and positive, got {}",
                self.fps
            )));
        }
        if self.frame_count == 0 {
            return Err(TrackError::InvalidHeader("frame_count must be >= 1".into()));
        }
        if self.dim == 0 {
            return Err(TrackError::InvalidHeader("dim must be >= 1".into()));
        }
        self.payload_values()?;
        Ok(())
    }

    /// Number of f32 values in the payload, or an error if it overflows.
    pub fn payload_values(&self) -> Result<usize> {
        self.frame_count
            .checked_mul(self.dim)
            .and_then(|n| n.checked_mul(self.kind.values_per_item() as u64))
            .and_then(|n| n.checked_mul(4).map(|_| n))
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| TrackError::InvalidHeader("payload size overflows".into()))
    }

    pub fn payload_bytes(&self) -> Result<u64> {
        Ok(self.payload_values()? as u64 * 4)
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count as f64 / self.fps
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut buf = [0u8; HEADER_LEN];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4..6].copy_from_slice(&self.version.to_le_bytes());
        buf[6] = self.kind as u8;
        buf[7] = 0;
        buf[8..16].copy_from_slice(&self.fps.to_le_bytes());
        buf[16..24].copy_from_slice(&self.frame_count.to_le_bytes());
        buf[24..32].copy_from_slice(&self.dim.to_le_bytes());
        buf
    }

    fn decode(buf: &[u8; HEADER_LEN]) -> Result<Self> {
        let magic: [u8; 4] = buf[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(TrackError::BadMagic(magic));
        }
        let version = u16::from_le_bytes(buf[4..6].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(TrackError::UnsupportedVersion(version));
        }
        let kind = TrackKind::from_byte(buf[6])?;
        if buf[7] != 0 {
            return Err(TrackError::InvalidHeader("padding byte must be zero".into()));
        }
        let header = Self {
            version,
            kind,
            fps: f64::from_le_bytes(buf[8..16].try_into().unwrap()),
            frame_count: u64::from_le_bytes(buf[16..24].try_into().unwrap()),
            dim: u64::from_le_bytes(buf[24..32].try_into().unwrap()),
        };
        header.validate()?;
        Ok(header)
    }
}

fn check_finite(data: &[f32], row_len: usize) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(TrackError::NonFiniteData {
            frame: i / row_len,
            element: i % row_len,
        }),
    }
}

/// Per-frame audio feature vectors, a `frame_count x dim` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFeatureTrack {
    header: TrackHeader,
    data: Vec<f32>,
}

impl AudioFeatureTrack {
    pub fn new(fps: f64, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(TrackError::Validation(format!(
                "data length {} is not a multiple of dim {dim}",
                data.len()
            )));
        }
        let header = TrackHeader::new(
            TrackKind::AudioFeatures,
            fps,
            (data.len() / dim) as u64,
            dim as u64,
        );
        header.validate()?;
        check_finite(&data, dim)?;
        Ok(Self { header, data })
    }

    pub fn header(&self) -> &TrackHeader {
        &self.header
    }

    pub fn fps(&self) -> f64 {
        self.header.fps
    }

    pub fn frame_count(&self) -> usize {
        self.header.frame_count as usize
    }

    pub fn dim(&self) -> usize {
        self.header.dim as usize
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, frame: usize) -> &[f32] {
        let d = self.dim();
        &self.data[frame * d..(frame + 1) * d]
    }

    pub fn view(&self) -> FeatureView<'_> {
        FeatureView {
            data: &self.data,
            dim: self.dim(),
        }
    }
}

/// Per-frame 2D landmarks, `frame_count x points x 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkTrack {
    header: TrackHeader,
    data: Vec<f32>,
}

impl LandmarkTrack {
    pub fn new(fps: f64, points: usize, data: Vec<f32>) -> Result<Self> {
        let row = points * 2;
        if points == 0 || data.len() % row != 0 {
            return Err(TrackError::Validation(format!(
                "data length {} is not a multiple of {points} points x 2",
                data.len()
            )));
        }
        let header = TrackHeader::new(
            TrackKind::Landmarks2D,
            fps,
            (data.len() / row) as u64,
            points as u64,
        );
        header.validate()?;
        check_finite(&data, row)?;
        Ok(Self { header, data })
    }

    pub fn header(&self) -> &TrackHeader {
        &self.header
    }

    pub fn fps(&self) -> f64 {
        self.header.fps
    }

    pub fn frame_count(&self) -> usize {
        self.header.frame_count as usize
    }

    pub fn points(&self) -> usize {
        self.header.dim as usize
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn view(&self) -> LandmarkView<'_> {
        LandmarkView {
            data: &self.data,
            points: self.points(),
        }
    }
}

/// Borrowed run of consecutive audio feature rows.
#[derive(Debug, Clone, Copy)]
pub struct FeatureView<'a> {
    data: &'a [f32],
    dim: usize,
}

impl<'a> FeatureView<'a> {
    pub fn from_slice(data: &'a [f32], dim: usize) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "ragged feature slice");
        Self { data, dim }
    }

    pub fn frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &'a [f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &'a [f32]> + 'a {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &'a [f32] {
        self.data
    }

    pub(crate) fn sub(&self, start: usize, len: usize) -> Self {
        Self {
            data: &self.data[start * self.dim..(start + len) * self.dim],
            dim: self.dim,
        }
    }
}

/// Borrowed run of consecutive landmark frames.
#[derive(Debug, Clone, Copy)]
pub struct LandmarkView<'a> {
    data: &'a [f32],
    points: usize,
}

impl<'a> LandmarkView<'a> {
    pub fn from_slice(data: &'a [f32], points: usize) -> Self {
        assert!(points > 0 && data.len() % (points * 2) == 0, "ragged landmark slice");
        Self { data, points }
    }

    pub fn frames(&self) -> usize {
        self.data.len() / (self.points * 2)
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `(x, y)` of landmark `point` at `frame`.
    pub fn point(&self, frame: usize, point: usize) -> (f32, f32) {
        let i = (frame * self.points + point) * 2;
        (self.data[i], self.data[i + 1])
    }

    pub fn as_slice(&self) -> &'a [f32] {
        self.data
    }

    pub(crate) fn sub(&self, start: usize, len: usize) -> Self {
        let row = self.points * 2;
        Self {
            data: &self.data[start * row..(start + len) * row],
            points: self.points,
        }
    }
}

/// Either kind of track, as returned by [`read_track`].
#[derive(Debug, Clone, PartialEq)]
pub enum Track {
    Audio(AudioFeatureTrack),
    Landmarks(LandmarkTrack),
}

impl Track {
    pub fn header(&self) -> &TrackHeader {
        match self {
            Track::Audio(t) => t.header(),
            Track::Landmarks(t) => t.header(),
        }
    }

    pub fn payload(&self) -> &[f32] {
        match self {
            Track::Audio(t) => t.data(),
            Track::Landmarks(t) => t.data(),
        }
    }

    pub fn into_audio(self) -> Result<AudioFeatureTrack> {
        match self {
            Track::Audio(t) => Ok(t),
            Track::Landmarks(_) => Err(TrackError::WrongKind {
                expected: TrackKind::AudioFeatures,
                found: TrackKind::Landmarks2D,
            }),
        }
    }

    pub fn into_landmarks(self) -> Result<LandmarkTrack> {
        match self {
            Track::Landmarks(t) => Ok(t),
            Track::Audio(_) => Err(TrackError::WrongKind {
                expected: TrackKind::Landmarks2D,
                found: TrackKind::AudioFeatures,
            }),
        }
    }
}

impl From<AudioFeatureTrack> for Track {
    fn from(t: AudioFeatureTrack) -> Self {
        Track::Audio(t)
    }
}

impl From<LandmarkTrack> for Track {
    fn from(t: LandmarkTrack) -> Self {
        Track::Landmarks(t)
    }
}

fn write_parts<W: Write>(header: &TrackHeader, payload: &[f32], mut sink: W) -> Result<u64> {
    header.validate()?;
    let row = header.dim as usize * header.kind.values_per_item();
    if payload.len() != header.payload_values()? {
        return Err(TrackError::Validation(format!(
            "payload has {} values, header implies {}",
            payload.len(),
            header.payload_values()?
        )));
    }
    check_finite(payload, row)?;

    sink.write_all(&header.encode())?;
    let mut buf = Vec::with_capacity(row.max(1) * 4 * 64);
    for chunk in payload.chunks(row.max(1) * 64) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
    }
    sink.flush()?;
    Ok(HEADER_LEN as u64 + payload.len() as u64 * 4)
}

/// Serializes `track` to `sink`, returning the number of bytes written.
pub fn write_track<W: Write>(track: &Track, sink: W) -> Result<u64> {
    write_parts(track.header(), track.payload(), sink)
}

/// Parses one track from `source`, which must contain exactly one FTRK
/// record and nothing after it.
pub fn read_track<R: Read>(mut source: R) -> Result<Track> {
    let mut head = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match source.read(&mut head[got..]) {
            Ok(0) => {
                if got >= 4 && head[0..4] != MAGIC {
                    return Err(TrackError::BadMagic(head[0..4].try_into().unwrap()));
                }
                return Err(TrackError::InvalidHeader(format!(
                    "file too short for header ({got} of {HEADER_LEN} bytes)"
                )))
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let header = TrackHeader::decode(&head)?;

    let expected = header.payload_bytes()?;
    let mut bytes = Vec::new();
    // Read incrementally so a lying header cannot force a huge allocation.
    (&mut source).take(expected).read_to_end(&mut bytes)?;
    if (bytes.len() as u64) < expected {
        return Err(TrackError::TruncatedPayload {
            expected,
            found: bytes.len() as u64,
        });
    }
    let mut probe = [0u8; 1];
    loop {
        match source.read(&mut probe) {
            Ok(0) => break,
            Ok(_) => return Err(TrackError::TrailingData),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }

    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let fps = header.fps;
    let dim = header.dim as usize;
    match header.kind {
        TrackKind::AudioFeatures => AudioFeatureTrack::new(fps, dim, data).map(Track::Audio),
        TrackKind::Landmarks2D => LandmarkTrack::new(fps, dim, data).map(Track::Landmarks),
    }
}

pub fn save_track(track: &Track, path: impl AsRef<Path>) -> Result<u64> {
    let file = File::create(path)?;
    write_track(track, BufWriter::new(file))
}

pub fn load_track(path: impl AsRef<Path>) -> Result<Track> {
    let file = File::open(path)?;
    read_track(BufReader::new(file))
}

/// Informational sidecar stored next to a track as `<stem>.meta.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackMeta {
    pub source: Option<String>,
    pub extractor: String,
    pub created_utc: String,
}

pub fn meta_path(track_path: impl AsRef<Path>) -> PathBuf {
    track_path.as_ref().with_extension("meta.json")
}

pub fn save_meta(meta: &TrackMeta, track_path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(meta).map_err(io::Error::from)?;
    std::fs::write(meta_path(track_path), json + "\n")?;
    Ok(())
}

/// Loads the sidecar if one exists and parses; missing or malformed
/// sidecars yield `None` since they are purely informational.
pub fn load_meta(track_path: impl AsRef<Path>) -> Option<TrackMeta> {
    let text = std::fs::read_to_string(meta_path(track_path)).ok()?;
    serde_json::from_str(&text).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn audio(frames: usize, dim: usize) -> AudioFeatureTrack {
        let data = (0..frames * dim).map(|i| i as f32 * 0.5 - 3.0).collect();
        AudioFeatureTrack::new(25.0, dim, data).unwrap()
    }

    fn encode(track: &Track) -> Vec<u8> {
        let mut buf = Vec::new();
        write_track(track, &mut buf).unwrap();
        buf
    }

    #[test]
    fn one_frame_two_dim_layout() {
        let t: Track = AudioFeatureTrack::new(25.0, 2, vec![1.0, -2.0]).unwrap().into();
        let bytes = encode(&t);
        assert_eq!(bytes.len(), 40);
        assert_eq!(&bytes[0..4], b"FTRK");
        assert_eq!(&bytes[4..6], &1u16.to_le_bytes());
        assert_eq!(bytes[6], 0);
        assert_eq!(bytes[7], 0);
        assert_eq!(&bytes[8..16], &25.0f64.to_le_bytes());
        assert_eq!(&bytes[16..24], &1u64.to_le_bytes());
        assert_eq!(&bytes[24..32], &2u64.to_le_bytes());
        assert_eq!(&bytes[32..36], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[36..40], &(-2.0f32).to_le_bytes());
    }

    #[test]
    fn landmark_payload_is_frame_point_coord_major() {
        let data = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let t: Track = LandmarkTrack::new(30.0, 2, data.clone()).unwrap().into();
        let bytes = encode(&t);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 4);
        assert_eq!(bytes[6], 1);
        for (i, v) in data.iter().enumerate() {
            let off = HEADER_LEN + i * 4;
            assert_eq!(&bytes[off..off + 4], &v.to_le_bytes());
        }
    }

    #[test]
    fn round_trip() {
        let t: Track = audio(7, 3).into();
        assert_eq!(read_track(&encode(&t)[..]).unwrap(), t);
    }

    #[test]
    fn nan_rejected_on_construction() {
        let err = AudioFeatureTrack::new(25.0, 2, vec![1.0, f32::NAN]).unwrap_err();
        assert!(matches!(err, TrackError::NonFiniteData { frame: 0, element: 1 }));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&audio(2, 2).into());
        bytes[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_track(&bytes[..]), Err(TrackError::BadMagic(m)) if &m == b"XXXX"));
    }

    #[test]
    fn unsupported_version() {
        let mut bytes = encode(&audio(2, 2).into());
        bytes[4..6].copy_from_slice(&2u16.to_le_bytes());
        assert!(matches!(read_track(&bytes[..]), Err(TrackError::UnsupportedVersion(2))));
    }

    #[test]
    fn unknown_kind() {
        let mut bytes = encode(&audio(2, 2).into());
        bytes[6] = 9;
        assert!(matches!(read_track(&bytes[..]), Err(TrackError::UnknownKind(9))));
    }

    #[test]
    fn truncated_by_one_frame() {
        let bytes = encode(&audio(100, 1).into());
        let short = &bytes[..bytes.len() - 4];
        match read_track(short) {
            Err(TrackError::TruncatedPayload { expected, found }) => {
                assert_eq!(expected, 400);
                assert_eq!(found, 396);
            }
            other => panic!("expected TruncatedPayload, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode(&audio(3, 2).into());
        bytes.push(0);
        assert!(matches!(read_track(&bytes[..]), Err(TrackError::TrailingData)));
    }

    #[test]
    fn nan_in_payload_rejected_on_read() {
        let mut bytes = encode(&audio(3, 2).into());
        let off = HEADER_LEN + 4 * 4;
        bytes[off..off + 4].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(
            read_track(&bytes[..]),
            Err(TrackError::NonFiniteData { frame: 2, element: 0 })
        ));
    }

    #[test]
    fn header_field_validation() {
        let mut bytes = encode(&audio(3, 2).into());
        bytes[8..16].copy_from_slice(&(-1.0f64).to_le_bytes());
        assert!(matches!(read_track(&bytes[..]), Err(TrackError::InvalidHeader(_))));

        let mut bytes = encode(&audio(3, 2).into());
        bytes[16..24].copy_from_slice(&0u64.to_le_bytes());
        assert!(matches!(read_track(&bytes[..]), Err(TrackError::InvalidHeader(_))));

        let mut bytes = encode(&audio(3, 2).into());
        bytes[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(read_track(&bytes[..]), Err(TrackError::InvalidHeader(_))));
    }

    #[test]
    fn short_header() {
        assert!(matches!(read_track(&b"FTRK\x01"[..]), Err(TrackError::InvalidHeader(_))));
    }

    #[test]
    fn sidecar_path_replaces_extension() {
        assert_eq!(meta_path("a/voice.ftrk"), PathBuf::from("a/voice.meta.json"));
    }
}
