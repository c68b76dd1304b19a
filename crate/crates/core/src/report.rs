//! JSON encoding of selection reports.
//!
//! Every float is written in scientific notation with 17 significant
//! digits, so a report reproduces the exact f64 values it was built from
//! and identical runs produce identical bytes.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::diversity::DiversityMetricKind;
use crate::select::{SelectionConfig, SelectionReport, StrategyKind};

/// `v` with 17 significant digits, or `null` if it is not finite.
pub fn format_sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_owned()
    }
}

fn sig17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    RawValue::from_string(format_sig17(*v))
        .map_err(S::Error::custom)?
        .serialize(s)
}

fn sig17_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => sig17(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Serialize)]
struct MetricWire {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
}

impl From<DiversityMetricKind> for MetricWire {
    fn from(m: DiversityMetricKind) -> Self {
        let (kind, k) = match m {
            DiversityMetricKind::MeanPairwiseEuclidean => ("mean_pairwise_euclidean", None),
            DiversityMetricKind::PcaTop1ExplainedVariance => ("pca_top1_explained_variance", None),
            DiversityMetricKind::PcaCumulativeVariance { k } => ("pca_cumulative_variance", Some(k)),
            DiversityMetricKind::SemanticEntropy { k } => ("semantic_entropy", Some(k)),
        };
        Self { kind, k }
    }
}

#[derive(Serialize)]
struct SpectralWire {
    #[serde(serialize_with = "sig17")]
    hf_threshold: f64,
}

#[derive(Serialize)]
struct ConfigWire {
    #[serde(serialize_with = "sig17")]
    segment_len_s: f64,
    #[serde(serialize_with = "sig17")]
    stride_s: f64,
    top_m: usize,
    diversity_metric: MetricWire,
    spectral: SpectralWire,
    #[serde(serialize_with = "sig17")]
    w_lip: f64,
    #[serde(serialize_with = "sig17")]
    w_pose: f64,
    #[serde(serialize_with = "sig17")]
    epsilon: f64,
    strategy: StrategyKind,
    seed: u64,
}

impl From<&SelectionConfig> for ConfigWire {
    fn from(c: &SelectionConfig) -> Self {
        Self {
            segment_len_s: c.segment_len_s,
            stride_s: c.stride_s,
            top_m: c.top_m,
            diversity_metric: c.diversity_metric.into(),
            spectral: SpectralWire {
                hf_threshold: c.spectral.hf_threshold,
            },
            w_lip: c.w_lip,
            w_pose: c.w_pose,
            epsilon: c.epsilon,
            strategy: c.strategy,
            seed: c.seed,
        }
    }
}

#[derive(Serialize)]
struct CandidateWire {
    index: usize,
    #[serde(serialize_with = "sig17")]
    start_s: f64,
    #[serde(serialize_with = "sig17")]
    end_s: f64,
    #[serde(rename = "D", serialize_with = "sig17_opt")]
    d: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    mc_lip: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    mc_pose: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    mc: Option<f64>,
    #[serde(rename = "I", serialize_with = "sig17_opt")]
    i: Option<f64>,
    rank: usize,
}

#[derive(Serialize)]
struct ChosenWire {
    index: usize,
    #[serde(serialize_with = "sig17")]
    start_s: f64,
    #[serde(serialize_with = "sig17")]
    end_s: f64,
}

#[derive(Serialize)]
struct TimingsWire {
    #[serde(serialize_with = "sig17_opt")]
    candidates_ms: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    diversity_ms: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    spectral_ms: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    total_ms: Option<f64>,
}

#[derive(Serialize)]
struct ReportWire {
    config: ConfigWire,
    candidates: Vec<CandidateWire>,
    chosen: ChosenWire,
    timings: TimingsWire,
}

impl From<&SelectionReport> for ReportWire {
    fn from(r: &SelectionReport) -> Self {
        let t = r.timings;
        Self {
            config: (&r.config).into(),
            candidates: r
                .candidates
                .iter()
                .map(|c| CandidateWire {
                    index: c.window.index,
                    start_s: c.window.start_s,
                    end_s: c.window.end_s,
                    d: c.d,
                    mc_lip: c.motion.map(|m| m.mc_lip),
                    mc_pose: c.motion.map(|m| m.mc_pose),
                    mc: c.motion.map(|m| m.mc),
                    i: c.i,
                    rank: c.rank,
                })
                .collect(),
            chosen: ChosenWire {
                index: r.chosen.index,
                start_s: r.chosen.start_s,
                end_s: r.chosen.end_s,
            },
            timings: TimingsWire {
                candidates_ms: t.map(|t| t.candidates_ms),
                diversity_ms: t.map(|t| t.diversity_ms),
                spectral_ms: t.map(|t| t.spectral_ms),
                total_ms: t.map(|t| t.total_ms),
            },
        }
    }
}

/// Pretty-printed JSON for `report`, newline-terminated.
pub fn report_to_json(report: &SelectionReport) -> String {
    let wire = ReportWire::from(report);
    // Serialization of these plain structs cannot fail.
    let mut out = serde_json::to_string_pretty(&wire).expect("report serialization");
    out.push('\n');
    out
}
