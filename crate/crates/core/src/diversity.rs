//! Diversity of a window's audio feature rows.
//!
//! Mean pairwise Euclidean distance is the production metric. The PCA
//! variance ratios and the clustering entropy are kept for ablations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::track::FeatureView;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiversityError {
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("component count {k} outside 1..={dim}")]
    BadComponentCount { k: usize, dim: usize },
    #[error("cluster count {k} outside 1..={frames}")]
    BadClusterCount { k: usize, frames: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiversityMetricKind {
    #[default]
    MeanPairwiseEuclidean,
    PcaTop1ExplainedVariance,
    PcaCumulativeVariance { k: usize },
    SemanticEntropy { k: usize },
}

pub const DEFAULT_ENTROPY_CLUSTERS: usize = 8;
pub const KMEANS_MAX_ITERS: usize = 50;

/// A metric value. `degenerate` is set when the window has zero total
/// variance and a variance ratio had to be defined by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diversity {
    pub value: f64,
    pub degenerate: bool,
}

impl DiversityMetricKind {
    pub fn evaluate(&self, features: FeatureView<'_>) -> Result<Diversity, DiversityError> {
        match *self {
            Self::MeanPairwiseEuclidean => Ok(Diversity {
                value: mean_pairwise_euclidean(features)?,
                degenerate: false,
            }),
            Self::PcaTop1ExplainedVariance => pca_top1_explained_variance(features),
            Self::PcaCumulativeVariance { k } => pca_cumulative_variance(features, k),
            Self::SemanticEntropy { k } => Ok(Diversity {
                value: semantic_entropy(features, k)?,
                degenerate: false,
            }),
        }
    }
}

fn require_frames(features: &FeatureView<'_>) -> Result<usize, DiversityError> {
    match features.frames() {
        t if t < 2 => Err(DiversityError::TooFewFrames(t)),
        t => Ok(t),
    }
}

fn to_f64_rows(features: &FeatureView<'_>) -> Vec<f64> {
    features.as_slice().iter().map(|&v| f64::from(v)).collect()
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean of `||f_i - f_j||` over all unordered pairs `i < j`.
pub fn mean_pairwise_euclidean(features: FeatureView<'_>) -> Result<f64, DiversityError> {
    let t = require_frames(&features)?;
    let d = features.dim();
    let rows = to_f64_rows(&features);
    let mut total = 0.0;
    for i in 0..t {
        let a = &rows[i * d..(i + 1) * d];
        let mut row_sum = 0.0;
        for j in i + 1..t {
            row_sum += squared_distance(a, &rows[j * d..(j + 1) * d]).sqrt();
        }
        total += row_sum;
    }
    let pairs = (t * (t - 1) / 2) as f64;
    Ok(total / pairs)
}

/// Eigenvalues of the centered scatter matrix in descending order, along
/// with a flag for zero total variance.
///
/// Uses whichever of `Xc Xc^T` (frames x frames) and `Xc^T Xc` (dim x dim)
/// is smaller; both share the same nonzero spectrum.
fn scatter_spectrum(features: &FeatureView<'_>) -> (Vec<f64>, bool) {
    let t = features.frames();
    let d = features.dim();
    let rows = to_f64_rows(features);
    let mut mean = vec![0.0; d];
    for row in rows.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t as f64);
    let centered = DMatrix::from_fn(t, d, |i, j| rows[i * d + j] - mean[j]);

    let scale = rows.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let total_ss: f64 = centered.iter().map(|v| v * v).sum();
    let floor = 16.0 * (t * d) as f64 * (f64::EPSILON * scale).powi(2);
    if total_ss <= floor {
        return (Vec::new(), true);
    }

    let scatter = if t <= d {
        &centered * centered.transpose()
    } else {
        centered.transpose() * &centered
    };
    let mut eig: Vec<f64> = scatter
        .symmetric_eigenvalues()
        .iter()
        .map(|&v| v.max(0.0))
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    (eig, false)
}

fn cumulative_ratio(eig: &[f64], k: usize) -> f64 {
    if k >= eig.len() {
        return 1.0;
    }
    let total: f64 = eig.iter().sum();
    let head: f64 = eig[..k].iter().sum();
    (head / total).clamp(0.0, 1.0)
}

/// Share of total variance carried by the largest principal component.
pub fn pca_top1_explained_variance(features: FeatureView<'_>) -> Result<Diversity, DiversityError> {
    pca_cumulative_variance(features, 1)
}

/// Share of total variance carried by the `k` largest principal components.
pub fn pca_cumulative_variance(
    features: FeatureView<'_>,
    k: usize,
) -> Result<Diversity, DiversityError> {
    require_frames(&features)?;
    if k == 0 || k > features.dim() {
        return Err(DiversityError::BadComponentCount {
            k,
            dim: features.dim(),
        });
    }
    let (eig, degenerate) = scatter_spectrum(&features);
    if degenerate {
        return Ok(Diversity {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(Diversity {
        value: cumulative_ratio(&eig, k),
        degenerate: false,
    })
}

/// Cluster assignment from the deterministic k-means used by
/// [`semantic_entropy`].
///
/// Centers start at row 0, then repeatedly the row farthest from all chosen
/// centers (lowest index on ties). Lloyd iterations run until assignments
/// stop changing or [`KMEANS_MAX_ITERS`] is reached. Empty clusters keep
/// their previous center.
pub fn deterministic_kmeans(features: FeatureView<'_>, k: usize) -> Result<Vec<usize>, DiversityError> {
    let t = require_frames(&features)?;
    if k == 0 || k > t {
        return Err(DiversityError::BadClusterCount { k, frames: t });
    }
    let d = features.dim();
    let rows = to_f64_rows(&features);
    let row = |i: usize| &rows[i * d..(i + 1) * d];

    let mut centers: Vec<f64> = row(0).to_vec();
    let mut nearest: Vec<f64> = (0..t).map(|i| squared_distance(row(i), row(0))).collect();
    for _ in 1..k {
        let mut far = 0;
        for (i, &n) in nearest.iter().enumerate().skip(1) {
            if n > nearest[far] {
                far = i;
            }
        }
        centers.extend_from_slice(row(far));
        for (i, n) in nearest.iter_mut().enumerate() {
            *n = n.min(squared_distance(row(i), row(far)));
        }
    }

    let mut assign = vec![usize::MAX; t];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, slot) in assign.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = squared_distance(row(i), &centers[c * d..(c + 1) * d]);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..d {
                    centers[c * d + j] = sums[c * d + j] / counts[c] as f64;
                }
            }
        }
    }
    Ok(assign)
}

/// Shannon entropy of the cluster-size distribution, normalized by `ln k`.
pub fn semantic_entropy(features: FeatureView<'_>, k: usize) -> Result<f64, DiversityError> {
    let assign = deterministic_kmeans(features, k)?;
    if k == 1 {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; k];
    for c in assign {
        counts[c] += 1;
    }
    let n = features.frames() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    Ok((h / (k as f64).ln()).clamp(0.0, 1.0))
}
