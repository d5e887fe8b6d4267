//! Transferability metrics and source selection.
//!
//! A source model's features, evaluated on the target task's samples, score
//! `H_T(f_S)` against the target labels. Transferability normalizes that raw
//! score by an estimate of what is achievable on the target:
//!
//! * `exact_discrete`: the spectral optimum of the empirical joint between
//!   the discrete inputs and the labels, truncated at the source dimension.
//! * `proxy_self`: the H-score of the target's own features. Cheap, but a
//!   strong source can beat a weak target, so the ratio may exceed 1; the
//!   report flags that instead of clamping.
//! * `bound_k`: the structural ceiling `min(k, C - 1)` for `k` features and
//!   `C` classes.
//!
//! Source selection ranks candidates by raw H-score, which preserves the
//! ordering of any shared denominator. All of it assumes the downstream head
//! is linear; features tuned for a nonlinear head can rank differently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{FeatureMatrix, LabelVector};
use crate::linalg::InverseMode;
use crate::spectral;
use crate::stats;

/// A candidate source: its identifier and its features evaluated on the
/// target task's samples.
#[derive(Debug, Clone)]
pub struct TaskFeatureSet {
    pub id: String,
    pub features: FeatureMatrix,
}

impl TaskFeatureSet {
    pub fn new(id: impl Into<String>, features: FeatureMatrix) -> Self {
        Self {
            id: id.into(),
            features,
        }
    }
}

/// How the transferability denominator is obtained.
#[derive(Debug, Clone, Copy)]
pub enum DenominatorMode<'a> {
    /// Spectral optimum of the empirical joint between discrete inputs and
    /// labels, truncated at the source feature dimension.
    ExactDiscrete { x_samples: &'a [usize] },
    /// H-score of the target's own features on its own labels.
    ProxySelf { target_features: &'a FeatureMatrix },
    /// The structural ceiling `min(k, C - 1)`.
    BoundK,
}

impl DenominatorMode<'_> {
    fn name(&self) -> &'static str {
        match self {
            DenominatorMode::ExactDiscrete { .. } => "exact_discrete",
            DenominatorMode::ProxySelf { .. } => "proxy_self",
            DenominatorMode::BoundK => "bound_k",
        }
    }
}

/// A transferability measurement.
#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    /// Raw H-score of the source features on the target task.
    pub h_score: f64,
    /// The normalizer.
    pub denominator: f64,
    /// `h_score / denominator`, not clamped.
    pub transferability: f64,
    /// True when the ratio exceeds 1 beyond roundoff slack (possible under
    /// `proxy_self`).
    pub exceeds_unit_range: bool,
    /// Which denominator produced the ratio.
    pub denominator_mode: String,
}

/// Scores source features on the target task and normalizes per `mode`.
pub fn transferability(
    source_features: &FeatureMatrix,
    target_labels: &LabelVector,
    mode: DenominatorMode<'_>,
    inverse: InverseMode,
) -> Result<TransferReport> {
    let h = stats::h_score(source_features, target_labels, inverse)?.value;
    let denominator = match mode {
        DenominatorMode::ExactDiscrete { x_samples } => {
            if x_samples.len() != target_labels.len() {
                return Err(Error::LengthMismatch {
                    context: "discrete inputs vs labels".into(),
                    left: x_samples.len(),
                    right: target_labels.len(),
                });
            }
            let empirical = spectral::empirical_joint(x_samples, target_labels.labels())?;
            let spec = spectral::spectrum(&spectral::dtm(&empirical.joint))?;
            let keep = source_features.n_features().min(spec.rank());
            let denom: f64 = spec.sigma.iter().take(keep).map(|s| s * s).sum();
            if denom == 0.0 {
                return Err(Error::Degenerate {
                    message: "labels are empirically independent of the discrete inputs; \
                              the exact denominator is zero"
                        .into(),
                });
            }
            denom
        }
        DenominatorMode::ProxySelf { target_features } => {
            let denom = stats::h_score(target_features, target_labels, inverse)?.value;
            if denom <= 0.0 {
                return Err(Error::Degenerate {
                    message: format!(
                        "target's own features score {denom}; the proxy denominator is unusable"
                    ),
                });
            }
            denom
        }
        DenominatorMode::BoundK => {
            source_features
                .n_features()
                .min(target_labels.class_count() - 1) as f64
        }
    };
    let ratio = h / denominator;
    // The slack keeps a self-transfer ratio that lands on 1.0 plus a few ulps
    // of roundoff from being flagged as out of range.
    Ok(TransferReport {
        h_score: h,
        denominator,
        transferability: ratio,
        exceeds_unit_range: ratio > 1.0 + 1e-9,
        denominator_mode: mode.name().to_string(),
    })
}

/// One row of a source ranking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankEntry {
    /// 1-based position after sorting.
    pub rank: usize,
    pub task_id: String,
    pub h_score: f64,
    /// Populated only when a shared denominator is meaningful; raw H-scores
    /// already order the candidates.
    pub transferability: Option<f64>,
}

/// Candidates ordered by descending H-score on the target task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceRanking {
    pub entries: Vec<RankEntry>,
}

fn check_candidates(candidates: &[TaskFeatureSet], minimum: usize) -> Result<()> {
    if candidates.len() < minimum {
        return Err(Error::InvalidParameter {
            message: format!(
                "need at least {minimum} candidate feature sets, got {}",
                candidates.len()
            ),
        });
    }
    for (i, a) in candidates.iter().enumerate() {
        for b in candidates.iter().skip(i + 1) {
            if a.id == b.id {
                return Err(Error::Shape {
                    context: "source ranking".into(),
                    message: format!("duplicate task id `{}`", a.id),
                });
            }
        }
    }
    Ok(())
}

fn rank_scored(mut scored: Vec<(String, f64)>) -> SourceRanking {
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.cmp(&b.0))
    });
    let entries = scored
        .into_iter()
        .enumerate()
        .map(|(i, (task_id, h))| RankEntry {
            rank: i + 1,
            task_id,
            h_score: h,
            transferability: None,
        })
        .collect();
    SourceRanking { entries }
}

/// Ranks candidate sources by the H-score of their features on the target
/// task, descending; ties break lexicographically by task id.
pub fn select_source(
    candidates: &[TaskFeatureSet],
    target_labels: &LabelVector,
    inverse: InverseMode,
) -> Result<SourceRanking> {
    check_candidates(candidates, 1)?;
    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        let h = stats::h_score(&c.features, target_labels, inverse)?.value;
        scored.push((c.id.clone(), h));
    }
    Ok(rank_scored(scored))
}

/// Concatenates two candidates' features column-wise under the id `a+b`.
pub fn concat_features(a: &TaskFeatureSet, b: &TaskFeatureSet) -> Result<TaskFeatureSet> {
    let (ma, mb) = (a.features.n_samples(), b.features.n_samples());
    if ma != mb {
        return Err(Error::LengthMismatch {
            context: format!("samples of `{}` vs `{}`", a.id, b.id),
            left: ma,
            right: mb,
        });
    }
    let stacked = ndarray::concatenate(
        ndarray::Axis(1),
        &[a.features.values().view(), b.features.values().view()],
    )
    .expect("same row count checked above");
    Ok(TaskFeatureSet::new(
        format!("{}+{}", a.id, b.id),
        FeatureMatrix::new(stacked)?,
    ))
}

/// Ranks every unordered pair of candidates by the H-score of their
/// concatenated features. Concatenation never scores below either member,
/// so this surfaces complementary sources.
pub fn rank_pairs(
    candidates: &[TaskFeatureSet],
    target_labels: &LabelVector,
    inverse: InverseMode,
) -> Result<SourceRanking> {
    check_candidates(candidates, 2)?;
    let mut scored = Vec::new();
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let pair = concat_features(&candidates[i], &candidates[j])?;
            let h = stats::h_score(&pair.features, target_labels, inverse)?.value;
            scored.push((pair.id, h));
        }
    }
    Ok(rank_scored(scored))
}
