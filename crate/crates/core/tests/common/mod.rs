//! Reference implementations used as test oracles.
//!
//! Everything here is written independently of the library's code paths:
//! O(N^2) DFT, direct pairwise loops, a Jacobi eigensolver and closed-form
//! Student-t probabilities. Only public constants are shared.

#![allow(dead_code)]

use std::f64::consts::PI;

use isexplore_core::spectral::{CONSTANT_SIGNAL_RTOL, LANDMARK_RESOLUTION_ULPS};
use isexplore_core::synth::{PoseProfile, Region, SegmentProfile, SynthSpec};
use isexplore_core::{AudioFeatureTrack, LandmarkTrack, SelectionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// |X_k| for k = 1..=N/2 by direct summation.
pub fn naive_dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (1..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let ang = -2.0 * PI * (k * t % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// High-frequency ratio from the naive DFT; bins with 2k/N >= threshold
/// are high. `floor` is an absolute spread below which the signal is constant.
pub fn naive_hf_ratio(x: &[f64], threshold: f64, floor: f64) -> f64 {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mag = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if hi - lo <= (CONSTANT_SIGNAL_RTOL * mag).max(floor) {
        return 0.0;
    }
    let n = x.len();
    let mags = naive_dft_magnitudes(x);
    let total: f64 = mags.iter().sum();
    let high: f64 = mags
        .iter()
        .enumerate()
        .filter(|(i, _)| 2.0 * (i + 1) as f64 / n as f64 >= threshold)
        .map(|(_, m)| m)
        .sum();
    if total == 0.0 {
        0.0
    } else {
        high / total
    }
}

pub fn naive_mean_pairwise(rows: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d2: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            sum += d2.sqrt();
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
#[allow(clippy::needless_range_loop)] // index form mirrors the textbook rotation
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i].max(0.0)).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// Sample covariance of rows, d x d.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let t = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / t as f64).collect();
    let mut c = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= (t - 1) as f64;
        }
    }
    c
}

pub fn eigen_cumulative_ratio(rows: &[Vec<f64>], k: usize) -> f64 {
    let eig = jacobi_eigenvalues(covariance(rows));
    let total: f64 = eig.iter().sum();
    eig[..k].iter().sum::<f64>() / total
}

/// Two-sided Student-t tail P(|T| >= t) for integer df via the classical
/// finite trigonometric series.
pub fn t_two_sided_closed_form(t: f64, df: u32) -> f64 {
    let theta = (t.abs() / f64::from(df).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let central = if df % 2 == 1 {
        let mut sum = 0.0;
        if df > 1 {
            let mut term = c;
            sum = term;
            let mut k = 3;
            while k + 2 <= df {
                term *= f64::from(k - 1) / f64::from(k) * c * c;
                sum += term;
                k += 2;
            }
        }
        2.0 / PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 2;
        while k + 2 <= df {
            term *= f64::from(k - 1) / f64::from(k) * c * c;
            sum += term;
            k += 2;
        }
        s * sum
    };
    1.0 - central
}

/// Scores for one window computed without touching library internals.
#[derive(Debug, Clone, Copy)]
pub struct OracleScore {
    pub start_frame: usize,
    pub d: f64,
    pub mc_lip: f64,
    pub mc_pose: f64,
    pub mc: f64,
    pub i: f64,
}

pub fn oracle_window_score(
    audio: &AudioFeatureTrack,
    landmarks: &LandmarkTrack,
    start: usize,
    len: usize,
    cfg: &SelectionConfig,
) -> OracleScore {
    let dim = audio.dim();
    let rows: Vec<Vec<f64>> = (start..start + len)
        .map(|f| audio.data()[f * dim..(f + 1) * dim].iter().map(|&v| f64::from(v)).collect())
        .collect();
    let d = naive_mean_pairwise(&rows);

    let p = landmarks.points();
    let lm = landmarks.data();
    let at = |f: usize, k: usize| {
        let i = (f * p + k) * 2;
        (f64::from(lm[i]), f64::from(lm[i + 1]))
    };
    let peak = lm[start * p * 2..(start + len) * p * 2]
        .iter()
        .fold(0.0f64, |m, &v| m.max(f64::from(v).abs()));
    let floor = LANDMARK_RESOLUTION_ULPS * f64::from(f32::EPSILON) * peak;

    let centers: Vec<(f64, f64)> = (start..start + len)
        .map(|f| {
            let (mut x, mut y) = (0.0, 0.0);
            for k in 48..68 {
                let (a, b) = at(f, k);
                x += a;
                y += b;
            }
            (x / 20.0, y / 20.0)
        })
        .collect();
    let thr = cfg.spectral.hf_threshold;
    let mut lip = 0.0;
    for k in 48..68 {
        let ch: Vec<f64> = (start..start + len)
            .zip(&centers)
            .map(|(f, c)| {
                let (x, y) = at(f, k);
                ((x - c.0).powi(2) + (y - c.1).powi(2)).sqrt()
            })
            .collect();
        lip += naive_hf_ratio(&ch, thr, floor);
    }
    let mc_lip = lip / 20.0;
    let pose: Vec<f64> = centers
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .collect();
    let mc_pose = naive_hf_ratio(&pose, thr, floor);
    let mc = if cfg.w_pose == 0.0 {
        mc_lip
    } else if cfg.w_lip == 0.0 {
        mc_pose
    } else {
        (cfg.w_lip * mc_lip + cfg.w_pose * mc_pose) / (cfg.w_lip + cfg.w_pose)
    };
    OracleScore {
        start_frame: start,
        d,
        mc_lip,
        mc_pose,
        mc,
        i: d / (mc + cfg.epsilon),
    }
}

/// Scores every window of the pool.
pub fn oracle_all_scores(audio: &AudioFeatureTrack, landmarks: &LandmarkTrack, cfg: &SelectionConfig) -> Vec<OracleScore> {
    let fps = audio.fps();
    let len = (cfg.segment_len_s * fps).round() as usize;
    let stride = (cfg.stride_s * fps).round() as usize;
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= audio.frame_count() {
        out.push(oracle_window_score(audio, landmarks, start, len, cfg));
        start += stride;
    }
    out
}

/// Index of the maximum of `key`, earliest on ties.
pub fn argmax_by(scores: &[OracleScore], key: impl Fn(&OracleScore) -> f64) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if key(s) > key(&scores[best]) {
            best = i;
        }
    }
    best
}

/// Indices of the `m` highest-D windows (earliest first on ties).
pub fn top_by_d(scores: &[OracleScore], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].d.total_cmp(&scores[a].d).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// Whether `got` is the argmax of I over `set`, allowing a near-tie
/// (relative 1e-9) between oracle and library arithmetic.
pub fn is_argmax_i(scores: &[OracleScore], set: &[usize], got: usize) -> bool {
    let best = set
        .iter()
        .copied()
        .fold(set[0], |b, i| if scores[i].i > scores[b].i || (scores[i].i == scores[b].i && i < b) { i } else { b });
    if best == got {
        return true;
    }
    set.contains(&got) && (scores[best].i - scores[got].i).abs() <= 1e-9 * scores[best].i.abs()
}

/// A random synthetic spec of 10..=24 seconds (250..=600 frames at 25 fps)
/// with a few random regions.
pub fn random_fixture_spec(seed: u64) -> SynthSpec {
    let mut r = rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xf17e_u64);
    let duration = r.random_range(10..=24u32);
    let profile = |r: &mut ChaCha8Rng| SegmentProfile {
        audio_variance: r.random_range(0.05..2.0),
        lip_low_amp: r.random_range(0.0..3.0),
        lip_high_amp: r.random_range(0.0..2.0),
        pose: match r.random_range(0..3) {
            0 => PoseProfile::Static,
            1 => PoseProfile::Linear {
                vx: r.random_range(-5.0..5.0),
                vy: r.random_range(-5.0..5.0),
            },
            _ => PoseProfile::Jitter {
                freq_hz: r.random_range(0.5..11.0),
                amp: r.random_range(0.1..3.0),
            },
        },
    };
    let mut spec = SynthSpec::uniform(duration, seed, profile(&mut r));
    spec.audio_dim = r.random_range(2..=24);
    let mut t = 0;
    while t < duration {
        let len = r.random_range(1..=4u32).min(duration - t);
        if r.random_bool(0.6) {
            spec.regions.push(Region {
                start_s: t,
                end_s: t + len,
                profile: profile(&mut r),
            });
        }
        t += len;
    }
    spec
}
