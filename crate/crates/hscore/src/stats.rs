//! Sample statistics and the H-score of a feature matrix.
//!
//! The H-score of features `f` against labels `y` is
//!
//! ```text
//! H(f) = tr( cov(f)^-1 . cov_Y( E[f | Y] ) )
//! ```
//!
//! with population-normalized covariances (1/m) and features centered
//! internally. It measures how much of the feature variance is between-class
//! structure: 0 when all class-conditional means coincide, and at most the
//! rank of `cov(f)` for any features.
//!
//! ## Determinism
//!
//! Every accumulation over samples (means, covariance, class sums) runs over
//! a canonical permutation of the rows (lexicographic order under the f64
//! total order), so all outputs are bit-identical under any permutation of
//! the input samples. The covariance Gram is accumulated in fixed-size row
//! blocks that may be computed in parallel but are always reduced in block
//! index order, so results also do not depend on thread count. The O(m k^2)
//! Gram pass dominates the cost; the canonical sort adds O(m log m)
//! first-column key comparisons, touching full rows only on ties.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{FeatureMatrix, LabelVector};
use crate::linalg::{self, InverseMode};

/// Rows per covariance block. Large enough that the per-block GEMM dominates
/// the gather, small enough that per-thread scratch stays in cache-friendly
/// territory.
const BLOCK_ROWS: usize = 4096;

/// The canonical sample permutation used by every accumulation in this
/// module: row indices sorted lexicographically under `f64::total_cmp`.
/// Exposed so callers can reason about (or pre-apply) the ordering.
pub fn canonical_sample_order(features: &FeatureMatrix) -> Vec<usize> {
    canonical_row_order(&features.values().view())
}

pub(crate) fn canonical_row_order(values: &ArrayView2<f64>) -> Vec<usize> {
    let m = values.nrows();
    if values.ncols() == 0 {
        return (0..m).collect();
    }
    // Sorting on a contiguous (first-column key, index) array touches the
    // full rows only on key ties, so the common case runs over 16-byte
    // entries instead of strided row views. The comparator realizes the same
    // total order as a stable full-row lexicographic sort: ties on the
    // entire row fall back to index order.
    let mut keyed: Vec<(f64, usize)> = values.column(0).iter().copied().zip(0..m).collect();
    keyed.sort_unstable_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            let ra = values.row(a.1);
            let rb = values.row(b.1);
            for (x, y) in ra.iter().zip(rb.iter()).skip(1) {
                match x.total_cmp(y) {
                    Ordering::Equal => continue,
                    other => return other,
                }
            }
            a.1.cmp(&b.1)
        })
    });
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Mean over rows, accumulated in `order`, reduced block by block.
pub(crate) fn ordered_mean(values: &ArrayView2<f64>, order: &[usize]) -> Array1<f64> {
    let k = values.ncols();
    let blocks: Vec<&[usize]> = order.chunks(BLOCK_ROWS).collect();
    let partials: Vec<Array1<f64>> = blocks
        .par_iter()
        .map(|chunk| {
            let mut acc = Array1::<f64>::zeros(k);
            for &i in *chunk {
                acc += &values.row(i);
            }
            acc
        })
        .collect();
    let mut total = Array1::<f64>::zeros(k);
    for p in partials {
        total += &p;
    }
    total / order.len() as f64
}

/// Population covariance (1/m) of rows taken in `order`, centered on `mean`.
pub(crate) fn ordered_covariance(
    values: &ArrayView2<f64>,
    order: &[usize],
    mean: &Array1<f64>,
) -> Array2<f64> {
    let k = values.ncols();
    let blocks: Vec<&[usize]> = order.chunks(BLOCK_ROWS).collect();
    let partials: Vec<Array2<f64>> = blocks
        .par_iter()
        .map(|chunk| {
            let mut buf = Array2::<f64>::zeros((chunk.len(), k));
            for (dst, &src) in chunk.iter().enumerate() {
                let mut row = buf.row_mut(dst);
                row.assign(&values.row(src));
                row -= mean;
            }
            buf.t().dot(&buf)
        })
        .collect();
    let mut gram = Array2::<f64>::zeros((k, k));
    for p in partials {
        gram += &p;
    }
    gram / order.len() as f64
}

/// Per-class counts and sums of rows taken in `order`.
pub(crate) fn class_sums_in_order(
    values: &ArrayView2<f64>,
    order: &[usize],
    labels: &[usize],
    class_count: usize,
) -> (Vec<usize>, Array2<f64>) {
    let k = values.ncols();
    let mut counts = vec![0usize; class_count];
    let mut sums = Array2::<f64>::zeros((class_count, k));
    for &i in order {
        let y = labels[i];
        counts[y] += 1;
        let mut row = sums.row_mut(y);
        row += &values.row(i);
    }
    (counts, sums)
}

/// Sample mean and population covariance of a feature matrix.
#[derive(Debug, Clone)]
pub struct SampleCovariance {
    pub mean: Array1<f64>,
    pub covariance: Array2<f64>,
}

/// Computes the sample mean and the population-normalized (1/m) covariance.
pub fn sample_covariance(features: &FeatureMatrix) -> Result<SampleCovariance> {
    let values = features.values().view();
    let order = canonical_row_order(&values);
    let mean = ordered_mean(&values, &order);
    let covariance = ordered_covariance(&values, &order, &mean);
    Ok(SampleCovariance { mean, covariance })
}

/// Class priors and class-conditional means.
#[derive(Debug, Clone)]
pub struct ClassStats {
    /// Empirical class priors, `counts / m`.
    pub priors: Array1<f64>,
    /// Row `c` is the mean feature vector of class `c`.
    pub means: Array2<f64>,
    /// Mean over all samples; equals the prior-weighted mean of class means
    /// up to roundoff.
    pub grand_mean: Array1<f64>,
    /// Per-class sample counts.
    pub counts: Vec<usize>,
}

/// Computes per-class priors and means.
pub fn class_conditional_stats(
    features: &FeatureMatrix,
    labels: &LabelVector,
) -> Result<ClassStats> {
    let values = features.values().view();
    let m = values.nrows();
    if labels.len() != m {
        return Err(Error::LengthMismatch {
            context: "features vs labels".into(),
            left: m,
            right: labels.len(),
        });
    }
    let order = canonical_row_order(&values);
    class_stats_in_order(&values, &order, labels)
}

fn class_stats_in_order(
    values: &ArrayView2<f64>,
    order: &[usize],
    labels: &LabelVector,
) -> Result<ClassStats> {
    let class_count = labels.class_count();
    let (counts, sums) = class_sums_in_order(values, order, labels.labels(), class_count);
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class });
    }
    let m = order.len() as f64;
    let mut means = sums;
    for (c, &count) in counts.iter().enumerate() {
        let mut row = means.row_mut(c);
        row /= count as f64;
    }
    let priors = Array1::from_iter(counts.iter().map(|&c| c as f64 / m));
    let grand_mean = ordered_mean(values, order);
    Ok(ClassStats {
        priors,
        means,
        grand_mean,
        counts,
    })
}

/// Covariance of the class-conditional means around the grand mean,
/// weighted by class priors.
pub fn between_class_covariance(stats: &ClassStats) -> Array2<f64> {
    let (class_count, k) = stats.means.dim();
    let mut between = Array2::<f64>::zeros((k, k));
    for c in 0..class_count {
        let p = stats.priors[c];
        let d: Array1<f64> = &stats.means.row(c) - &stats.grand_mean;
        for r in 0..k {
            if d[r] == 0.0 {
                continue;
            }
            let pr = p * d[r];
            for s in 0..k {
                between[[r, s]] += pr * d[s];
            }
        }
    }
    between
}

/// Everything `h_score` computed along the way.
#[derive(Debug, Clone)]
pub struct HScoreReport {
    /// The H-score itself.
    pub value: f64,
    /// Population covariance of the features.
    pub feature_cov: Array2<f64>,
    /// Prior-weighted covariance of the class-conditional means.
    pub between_cov: Array2<f64>,
    /// Rank estimate of `feature_cov` after the default tolerance cut.
    pub effective_rank: usize,
    /// How `feature_cov` was inverted.
    pub regularization: InverseMode,
}

/// H-score of a feature matrix against labels.
///
/// Requires `m >= C + 1` samples for `C` classes. Features are centered
/// internally; the inverse of the feature covariance follows `mode`
/// (Moore-Penrose with a relative eigenvalue cutoff by default, or ridge).
pub fn h_score(
    features: &FeatureMatrix,
    labels: &LabelVector,
    mode: InverseMode,
) -> Result<HScoreReport> {
    let values = features.values().view();
    let m = values.nrows();
    if labels.len() != m {
        return Err(Error::LengthMismatch {
            context: "features vs labels".into(),
            left: m,
            right: labels.len(),
        });
    }
    let class_count = labels.class_count();
    if m < class_count + 1 {
        return Err(Error::InsufficientSamples {
            samples: m,
            required: class_count + 1,
        });
    }
    let order = canonical_row_order(&values);
    let mean = ordered_mean(&values, &order);
    let feature_cov = ordered_covariance(&values, &order, &mean);
    let stats = class_stats_in_order(&values, &order, labels)?;
    let between_cov = between_class_covariance(&stats);
    let inverse = linalg::regularized_inverse(&feature_cov.view(), mode)?;
    // tr(inv . between) written as the prior-weighted sum of quadratic forms
    // of the class-mean offsets; identical by linearity, and cheaper than
    // materializing the product.
    let mut value = 0.0;
    for c in 0..class_count {
        let d: Array1<f64> = &stats.means.row(c) - &stats.grand_mean;
        let id = inverse.matrix.dot(&d);
        value += stats.priors[c] * d.dot(&id);
    }
    Ok(HScoreReport {
        value,
        feature_cov,
        between_cov,
        effective_rank: inverse.effective_rank,
        regularization: mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// 10 samples realizing the joint P(x=0,y=0)=P(x=1,y=1)=0.4,
    /// P(x=0,y=1)=P(x=1,y=0)=0.1 exactly, with f(x) = +1/-1.
    fn binary_symmetric() -> (FeatureMatrix, LabelVector) {
        let f = array![
            [1.0],
            [1.0],
            [1.0],
            [1.0],
            [-1.0],
            [1.0],
            [-1.0],
            [-1.0],
            [-1.0],
            [-1.0]
        ];
        let y = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        (
            FeatureMatrix::new(f).unwrap(),
            LabelVector::from_classes(y).unwrap(),
        )
    }

    /// Naive covariance: explicit double loop, no blocking, input order.
    fn naive_covariance(values: &Array2<f64>) -> Array2<f64> {
        let (m, k) = values.dim();
        let mut mean = vec![0.0; k];
        for r in 0..m {
            for c in 0..k {
                mean[c] += values[[r, c]];
            }
        }
        for v in mean.iter_mut() {
            *v /= m as f64;
        }
        let mut cov = Array2::<f64>::zeros((k, k));
        for r in 0..m {
            for a in 0..k {
                for b in 0..k {
                    cov[[a, b]] += (values[[r, a]] - mean[a]) * (values[[r, b]] - mean[b]);
                }
            }
        }
        cov / m as f64
    }

    #[test]
    fn binary_symmetric_h_score_is_036() {
        let (f, y) = binary_symmetric();
        let report = h_score(&f, &y, InverseMode::default()).unwrap();
        assert!(
            (report.value - 0.36).abs() < 1e-12,
            "H = {}, expected 0.36",
            report.value
        );
        assert!((report.feature_cov[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((report.between_cov[[0, 0]] - 0.36).abs() < 1e-12);
        assert_eq!(report.effective_rank, 1);
    }

    #[test]
    fn independent_feature_scores_zero() {
        // f = +/-1 and Y uniform independent, realized exactly by 4 samples.
        let f = FeatureMatrix::new(array![[1.0], [1.0], [-1.0], [-1.0]]).unwrap();
        let y = LabelVector::from_classes(vec![0, 1, 0, 1]).unwrap();
        let report = h_score(&f, &y, InverseMode::default()).unwrap();
        assert_eq!(report.value, 0.0, "class means coincide exactly");
    }

    #[test]
    fn covariance_matches_naive_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let values = Array2::from_shape_fn((37, 5), |_| rng.gen_range(-2.0..2.0));
        let naive = naive_covariance(&values);
        let fast = sample_covariance(&FeatureMatrix::new(values).unwrap()).unwrap();
        for (a, b) in naive.iter().zip(fast.covariance.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn class_stats_match_hand_values() {
        let f = FeatureMatrix::new(array![[1.0, 0.0], [3.0, 2.0], [5.0, 4.0]]).unwrap();
        let y = LabelVector::from_classes(vec![0, 0, 1]).unwrap();
        let stats = class_conditional_stats(&f, &y).unwrap();
        assert_eq!(stats.counts, vec![2, 1]);
        assert!((stats.means[[0, 0]] - 2.0).abs() < 1e-15);
        assert!((stats.means[[0, 1]] - 1.0).abs() < 1e-15);
        assert!((stats.means[[1, 0]] - 5.0).abs() < 1e-15);
        // Grand mean equals the prior-weighted class-mean average.
        let wm = 2.0 / 3.0 * 2.0 + 1.0 / 3.0 * 5.0;
        assert!((stats.grand_mean[0] - wm).abs() < 1e-10);
    }

    #[test]
    fn rejects_m_not_exceeding_class_count() {
        let f = FeatureMatrix::new(array![[1.0], [2.0], [3.0]]).unwrap();
        let y = LabelVector::from_classes(vec![0, 1, 2]).unwrap();
        let err = h_score(&f, &y, InverseMode::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientSamples {
                samples: 3,
                required: 4
            }
        ));
    }

    #[test]
    fn rejects_length_mismatch() {
        let f = FeatureMatrix::new(array![[1.0], [2.0], [3.0]]).unwrap();
        let y = LabelVector::from_classes(vec![0, 1]).unwrap();
        assert!(matches!(
            h_score(&f, &y, InverseMode::default()).unwrap_err(),
            Error::LengthMismatch { .. }
        ));
    }

    #[test]
    fn constant_column_leaves_pseudo_h_unchanged() {
        let (f, y) = binary_symmetric();
        let base = h_score(&f, &y, InverseMode::default()).unwrap().value;
        let m = f.n_samples();
        let mut wide = Array2::<f64>::zeros((m, 2));
        for r in 0..m {
            wide[[r, 0]] = f.values()[[r, 0]];
            wide[[r, 1]] = 7.5;
        }
        let wide = FeatureMatrix::new(wide).unwrap();
        let with_const = h_score(&wide, &y, InverseMode::default()).unwrap();
        assert!((with_const.value - base).abs() < 1e-12);
        assert_eq!(with_const.effective_rank, 1);
    }

    #[test]
    fn duplicate_column_leaves_pseudo_h_unchanged() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let values = Array2::from_shape_fn((40, 3), |_| rng.gen_range(-1.0..1.0));
        let y = LabelVector::from_classes((0..40).map(|i| i % 3).collect()).unwrap();
        let base = h_score(
            &FeatureMatrix::new(values.clone()).unwrap(),
            &y,
            InverseMode::default(),
        )
        .unwrap()
        .value;
        let mut wide = Array2::<f64>::zeros((40, 4));
        for r in 0..40 {
            for c in 0..3 {
                wide[[r, c]] = values[[r, c]];
            }
            wide[[r, 3]] = values[[r, 1]];
        }
        let dup = h_score(
            &FeatureMatrix::new(wide).unwrap(),
            &y,
            InverseMode::default(),
        )
        .unwrap()
        .value;
        assert!(
            (dup - base).abs() <= 1e-8 * base.abs().max(1.0),
            "duplicate column changed H: {base} -> {dup}"
        );
    }

    #[test]
    fn sample_permutation_is_bit_identical() {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let values = Array2::from_shape_fn((61, 4), |_| rng.gen_range(-3.0..3.0));
        let labels: Vec<usize> = (0..61).map(|i| i % 2).collect();
        let base = h_score(
            &FeatureMatrix::new(values.clone()).unwrap(),
            &LabelVector::from_classes(labels.clone()).unwrap(),
            InverseMode::default(),
        )
        .unwrap();
        let mut perm: Vec<usize> = (0..61).collect();
        perm.shuffle(&mut rng);
        let shuffled_values = Array2::from_shape_fn((61, 4), |(r, c)| values[[perm[r], c]]);
        let shuffled_labels: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        let shuffled = h_score(
            &FeatureMatrix::new(shuffled_values).unwrap(),
            &LabelVector::from_classes(shuffled_labels).unwrap(),
            InverseMode::default(),
        )
        .unwrap();
        assert_eq!(base.value.to_bits(), shuffled.value.to_bits());
        for (a, b) in base.feature_cov.iter().zip(shuffled.feature_cov.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in base.between_cov.iter().zip(shuffled.between_cov.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn ridge_mode_shrinks_the_score() {
        let (f, y) = binary_symmetric();
        let pseudo = h_score(&f, &y, InverseMode::default()).unwrap().value;
        let ridge = h_score(&f, &y, InverseMode::Ridge { lambda: 0.5 })
            .unwrap()
            .value;
        // cov = 1, so ridge gives 0.36 / 1.5.
        assert!((ridge - 0.24).abs() < 1e-12);
        assert!(ridge < pseudo);
    }
}
