//! Pixel-wise H-scores for image-output tasks.
//!
//! Image targets are reduced to per-pixel classification problems: a color
//! palette is learned over all pixel values (k-means), every pixel of every
//! image is quantized to its nearest palette entry, and then each pixel
//! position is scored as its own C-way task against the shared feature
//! matrix. The feature covariance and its inverse do not depend on the
//! labels, so they are computed once and shared across all positions; only
//! the between-class statistics vary per pixel.
//!
//! Positions whose label column is constant (fewer than two palette colors
//! across the samples) or degenerate (fewer samples than classes plus one)
//! are skipped and counted rather than scored. The aggregate is the mean over
//! scored positions.

use std::collections::HashSet;

use ndarray::{Array1, Array2, Array3, ArrayView2, ArrayView3};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{FeatureMatrix, ImageLabelSet};
use crate::linalg::{self, InverseMode};
use crate::stats;

/// Settings for palette learning.
#[derive(Debug, Clone)]
pub struct PaletteConfig {
    /// Number of palette colors (classes per pixel task).
    pub colors: usize,
    /// Seed for center initialization.
    pub seed: u64,
    /// Lloyd iteration cap.
    pub max_iter: usize,
    /// Stop when the inertia improves by less than this between sweeps.
    pub tol: f64,
    /// At most this many pixels are used to fit the palette; beyond it the
    /// pixel stream is strided down deterministically.
    pub subsample_cap: usize,
}

impl PaletteConfig {
    pub fn new(colors: usize) -> Self {
        Self {
            colors,
            seed: 0,
            max_iter: 100,
            tol: 1e-6,
            subsample_cap: 1_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.colors < 2 {
            return Err(Error::InvalidParameter {
                message: format!("palette needs at least 2 colors, got {}", self.colors),
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                message: "max_iter must be >= 1".into(),
            });
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidParameter {
                message: format!("tol must be finite and >= 0, got {}", self.tol),
            });
        }
        if self.subsample_cap < self.colors {
            return Err(Error::InvalidParameter {
                message: format!(
                    "subsample cap {} is below the number of colors {}",
                    self.subsample_cap, self.colors
                ),
            });
        }
        Ok(())
    }
}

/// A learned color palette.
#[derive(Debug, Clone)]
pub struct Palette {
    /// `colors x channels` center matrix.
    pub centers: Array2<f64>,
    /// Sum of squared distances of the training pixels to their centers.
    pub inertia: f64,
    /// Lloyd sweeps performed.
    pub iterations: usize,
    /// Seed the centers were initialized from.
    pub seed: u64,
}

/// Index of the nearest center, lowest index on ties.
fn nearest_center(centers: &Array2<f64>, point: &[f64]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.outer_iter().enumerate() {
        let d: f64 = center
            .iter()
            .zip(point.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// Index of the largest value, first index on ties.
fn farthest_point(dists: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &d) in dists.iter().enumerate() {
        if d > dists[best] {
            best = i;
        }
    }
    best
}

/// Learns a k-means palette over all pixel values of an image set.
///
/// Centers are seeded with distance-weighted sampling and refined by Lloyd
/// sweeps; an assignment sweep that empties a cluster reseeds that center to
/// the point farthest from its current center. Fails with
/// [`Error::PaletteDistinct`] when the training pixels hold fewer distinct
/// values than requested colors.
pub fn learn_palette(images: &ImageLabelSet, config: &PaletteConfig) -> Result<Palette> {
    config.validate()?;
    let (m, h, w, channels) = images.dim();
    let total = m * h * w;
    let stride = total.div_ceil(config.subsample_cap).max(1);
    let pixels = images.pixels();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(total.div_ceil(stride));
    let mut flat = 0usize;
    for i in 0..m {
        for y in 0..h {
            for x in 0..w {
                if flat % stride == 0 {
                    points.push((0..channels).map(|c| pixels[[i, y, x, c]]).collect());
                }
                flat += 1;
            }
        }
    }

    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for p in &points {
        seen.insert(p.iter().map(|v| v.to_bits()).collect());
        if seen.len() >= config.colors {
            break;
        }
    }
    if seen.len() < config.colors {
        return Err(Error::PaletteDistinct {
            distinct: seen.len(),
            requested: config.colors,
        });
    }

    // Distance-weighted seeding.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let n = points.len();
    let mut centers = Array2::<f64>::zeros((config.colors, channels));
    let first = rng.gen_range(0..n);
    for c in 0..channels {
        centers[[0, c]] = points[first][c];
    }
    let mut d_sq: Vec<f64> = points
        .iter()
        .map(|p| {
            p.iter()
                .zip(centers.row(0).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect();
    for next in 1..config.colors {
        let total_w: f64 = d_sq.iter().sum();
        let chosen = if total_w > 0.0 {
            let mut t = rng.gen::<f64>() * total_w;
            let mut pick = n - 1;
            for (i, &d) in d_sq.iter().enumerate() {
                t -= d;
                if t <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining mass sits on the chosen centers; the distinct
            // check above guarantees an unused value exists.
            points
                .iter()
                .position(|p| {
                    (0..next).all(|c| {
                        p.iter()
                            .zip(centers.row(c).iter())
                            .any(|(a, b)| a != b)
                    })
                })
                .expect("distinct count exceeds placed centers")
        };
        for c in 0..channels {
            centers[[next, c]] = points[chosen][c];
        }
        for (i, p) in points.iter().enumerate() {
            let d: f64 = p
                .iter()
                .zip(centers.row(next).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < d_sq[i] {
                d_sq[i] = d;
            }
        }
    }

    // Lloyd sweeps. Assignment is parallel and order-preserving; all
    // reductions run sequentially in point order so results do not depend on
    // thread count.
    let mut assignments: Vec<usize> = vec![usize::MAX; n];
    let mut inertia = f64::INFINITY;
    let mut iterations = 0usize;
    for _ in 0..config.max_iter {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = points
            .par_iter()
            .map(|p| nearest_center(&centers, p))
            .collect();
        let mut new_assignments = Vec::with_capacity(n);
        let mut dists = Vec::with_capacity(n);
        let mut new_inertia = 0.0;
        for (a, d) in assigned {
            new_assignments.push(a);
            dists.push(d);
            new_inertia += d;
        }
        let mut counts = vec![0usize; config.colors];
        let mut sums = Array2::<f64>::zeros((config.colors, channels));
        for (i, &a) in new_assignments.iter().enumerate() {
            counts[a] += 1;
            for c in 0..channels {
                sums[[a, c]] += points[i][c];
            }
        }
        let mut reseeded = false;
        for cluster in 0..config.colors {
            if counts[cluster] > 0 {
                for c in 0..channels {
                    centers[[cluster, c]] = sums[[cluster, c]] / counts[cluster] as f64;
                }
            } else {
                let far = farthest_point(&dists);
                for c in 0..channels {
                    centers[[cluster, c]] = points[far][c];
                }
                dists[far] = 0.0;
                new_assignments[far] = cluster;
                reseeded = true;
            }
        }
        let stable = !reseeded && new_assignments == assignments;
        let small_step = !reseeded && (inertia - new_inertia).abs() < config.tol;
        assignments = new_assignments;
        inertia = new_inertia;
        if stable || small_step {
            break;
        }
    }

    // Inertia for the centers actually returned.
    let final_inertia: f64 = points
        .par_iter()
        .map(|p| nearest_center(&centers, p).1)
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(Palette {
        centers,
        inertia: final_inertia,
        iterations,
        seed: config.seed,
    })
}

/// Quantizes every pixel of every image to its nearest palette entry
/// (lowest index on ties). Returns an `(images, height, width)` label cube.
pub fn quantize(images: &ImageLabelSet, palette: &Palette) -> Result<Array3<usize>> {
    let (m, h, w, channels) = images.dim();
    if palette.centers.ncols() != channels {
        return Err(Error::Shape {
            context: "quantize".into(),
            message: format!(
                "palette has {} channels, images have {channels}",
                palette.centers.ncols()
            ),
        });
    }
    let pixels = images.pixels();
    let coords: Vec<(usize, usize, usize)> = (0..m)
        .flat_map(|i| (0..h).flat_map(move |y| (0..w).map(move |x| (i, y, x))))
        .collect();
    let labels: Vec<usize> = coords
        .par_iter()
        .map(|&(i, y, x)| {
            let point: Vec<f64> = (0..channels).map(|c| pixels[[i, y, x, c]]).collect();
            nearest_center(&palette.centers, &point).0
        })
        .collect();
    Ok(Array3::from_shape_vec((m, h, w), labels).expect("coords enumerate the full cube"))
}

/// Per-position H-scores over an image task.
#[derive(Debug, Clone)]
pub struct PixelwiseReport {
    /// `(height, width)` score map; skipped positions hold NaN.
    pub scores: Array2<f64>,
    /// True where a position was skipped.
    pub skipped: Array2<bool>,
    pub skipped_count: usize,
    /// Mean over scored positions.
    pub mean: f64,
    /// Smallest scored value.
    pub min: f64,
    /// Largest scored value.
    pub max: f64,
}

/// Scores every pixel position as its own classification task.
///
/// The feature covariance inverse and the canonical sample order are shared
/// across positions. A position is skipped when its labels are constant or
/// when there are fewer than `classes + 1` samples; if every position is
/// skipped the whole computation is degenerate.
pub fn pixelwise_h_scores(
    features: &FeatureMatrix,
    label_maps: &ArrayView3<usize>,
    inverse: InverseMode,
) -> Result<PixelwiseReport> {
    let (lm, h, w) = label_maps.dim();
    let m = features.n_samples();
    if lm != m {
        return Err(Error::LengthMismatch {
            context: "feature rows vs label maps".into(),
            left: m,
            right: lm,
        });
    }
    let values = features.values().view();
    let order = stats::canonical_sample_order(features);
    let mean = stats::ordered_mean(&values, &order);
    let cov = stats::ordered_covariance(&values, &order, &mean);
    let reg = linalg::regularized_inverse(&cov.view(), inverse)?;

    let positions: Vec<(usize, usize)> = (0..h).flat_map(|y| (0..w).map(move |x| (y, x))).collect();
    let scored: Vec<Option<f64>> = positions
        .par_iter()
        .map(|&(y, x)| {
            pixel_h_score(
                &values,
                &order,
                &mean,
                &reg.matrix,
                label_maps,
                y,
                x,
            )
        })
        .collect();

    let mut scores = Array2::<f64>::from_elem((h, w), f64::NAN);
    let mut skipped = Array2::<bool>::from_elem((h, w), false);
    let mut skipped_count = 0usize;
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (&(y, x), value) in positions.iter().zip(scored.iter()) {
        match value {
            Some(v) => {
                scores[[y, x]] = *v;
                sum += v;
                count += 1;
                min = min.min(*v);
                max = max.max(*v);
            }
            None => {
                skipped[[y, x]] = true;
                skipped_count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Degenerate {
            message: format!(
                "all {skipped_count} pixel positions were skipped (constant or degenerate labels)"
            ),
        });
    }
    Ok(PixelwiseReport {
        scores,
        skipped,
        skipped_count,
        mean: sum / count as f64,
        min,
        max,
    })
}

/// H-score of one pixel position, or None when the position is skipped.
fn pixel_h_score(
    values: &ArrayView2<f64>,
    order: &[usize],
    mean: &Array1<f64>,
    inverse: &Array2<f64>,
    label_maps: &ArrayView3<usize>,
    y: usize,
    x: usize,
) -> Option<f64> {
    let m = values.nrows();
    let mut distinct: Vec<usize> = (0..m).map(|i| label_maps[[i, y, x]]).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let class_count = distinct.len();
    if class_count < 2 || m < class_count + 1 {
        return None;
    }
    let compact: Vec<usize> = (0..m)
        .map(|i| {
            distinct
                .binary_search(&label_maps[[i, y, x]])
                .expect("label collected above")
        })
        .collect();
    let (counts, sums) = stats::class_sums_in_order(values, order, &compact, class_count);
    let mf = m as f64;
    let mut value = 0.0;
    for c in 0..class_count {
        let count = counts[c] as f64;
        let class_mean = sums.row(c).map(|v| v / count);
        let d = &class_mean - mean;
        let id = inverse.dot(&d);
        value += count / mf * d.dot(&id);
    }
    Some(value)
}

/// Summary attached to a rendered heatmap.
#[derive(Debug, Clone, Serialize)]
pub struct HeatmapMeta {
    /// Smallest scored value (maps to black).
    pub min: f64,
    /// Largest scored value (maps to white).
    pub max: f64,
    pub skipped_count: usize,
    /// Palette seed the labels came from.
    pub seed: u64,
}

/// Builds the metadata block for a report rendered from `seed`.
pub fn heatmap_meta(report: &PixelwiseReport, seed: u64) -> HeatmapMeta {
    HeatmapMeta {
        min: report.min,
        max: report.max,
        skipped_count: report.skipped_count,
        seed,
    }
}

/// Gray level of a position: scored positions are min-max normalized so
/// lighter means higher, a flat map renders mid-gray, skipped positions
/// render black.
fn gray_level(report: &PixelwiseReport, y: usize, x: usize) -> u8 {
    if report.skipped[[y, x]] {
        return 0;
    }
    let range = report.max - report.min;
    if range == 0.0 {
        return 128;
    }
    let s = report.scores[[y, x]];
    ((s - report.min) / range * 255.0).round() as u8
}

/// Renders the score map as a binary PGM (P5) image.
pub fn render_pgm(report: &PixelwiseReport) -> Vec<u8> {
    let (h, w) = report.scores.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            out.push(gray_level(report, y, x));
        }
    }
    out
}

/// Renders the score map as an SVG of unit-square cells.
pub fn render_svg(report: &PixelwiseReport) -> String {
    let (h, w) = report.scores.dim();
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" shape-rendering=\"crispEdges\">\n"
    ));
    for y in 0..h {
        for x in 0..w {
            let g = gray_level(report, y, x);
            out.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"1\" height=\"1\" fill=\"#{g:02x}{g:02x}{g:02x}\"/>\n"
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array4};

    /// Four 2x2 single-channel images whose pixels are exactly 0 or 1.
    fn two_tone_images() -> ImageLabelSet {
        let mut pixels = Array4::<f64>::zeros((4, 2, 2, 1));
        for i in 0..4 {
            pixels[[i, 0, 0, 0]] = if i < 2 { 0.0 } else { 1.0 };
            pixels[[i, 0, 1, 0]] = 1.0;
            pixels[[i, 1, 0, 0]] = 0.0;
            pixels[[i, 1, 1, 0]] = if i % 2 == 0 { 0.0 } else { 1.0 };
        }
        ImageLabelSet::new(pixels).unwrap()
    }

    #[test]
    fn palette_recovers_exact_two_tone_centers() {
        let images = two_tone_images();
        let palette = learn_palette(&images, &PaletteConfig::new(2)).unwrap();
        let mut centers: Vec<f64> = palette.centers.column(0).to_vec();
        centers.sort_by(f64::total_cmp);
        assert!((centers[0] - 0.0).abs() < 1e-12);
        assert!((centers[1] - 1.0).abs() < 1e-12);
        assert!(palette.inertia < 1e-12);
    }

    #[test]
    fn palette_rejects_images_with_too_few_distinct_colors() {
        let pixels = Array4::<f64>::from_elem((3, 2, 2, 1), 0.5);
        let images = ImageLabelSet::new(pixels).unwrap();
        let err = learn_palette(&images, &PaletteConfig::new(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::PaletteDistinct {
                distinct: 1,
                requested: 2
            }
        ));
    }

    #[test]
    fn palette_is_deterministic_for_a_seed() {
        let images = two_tone_images();
        let a = learn_palette(&images, &PaletteConfig::new(2)).unwrap();
        let b = learn_palette(&images, &PaletteConfig::new(2)).unwrap();
        for (x, y) in a.centers.iter().zip(b.centers.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn quantize_breaks_ties_toward_the_lower_index() {
        let palette = Palette {
            centers: array![[0.0], [1.0]],
            inertia: 0.0,
            iterations: 1,
            seed: 0,
        };
        let pixels = Array4::<f64>::from_elem((2, 1, 1, 1), 0.5);
        let images = ImageLabelSet::new(pixels).unwrap();
        let labels = quantize(&images, &palette).unwrap();
        assert_eq!(labels[[0, 0, 0]], 0);
        assert_eq!(labels[[1, 0, 0]], 0);
    }

    #[test]
    fn farthest_point_takes_the_first_maximum() {
        assert_eq!(farthest_point(&[0.5, 2.0, 2.0, 1.0]), 1);
    }

    #[test]
    fn pixelwise_scores_and_skips_as_specified() {
        let features = FeatureMatrix::new(array![
            [1.0],
            [1.0],
            [1.0],
            [-1.0],
            [-1.0],
            [-1.0]
        ])
        .unwrap();
        // Pixel (0,0) splits with the features; pixel (0,1) is constant.
        let mut maps = Array3::<usize>::zeros((6, 1, 2));
        for i in 3..6 {
            maps[[i, 0, 0]] = 1;
        }
        let report =
            pixelwise_h_scores(&features, &maps.view(), InverseMode::default()).unwrap();
        assert!((report.scores[[0, 0]] - 1.0).abs() < 1e-12);
        assert!(report.scores[[0, 1]].is_nan());
        assert!(report.skipped[[0, 1]]);
        assert_eq!(report.skipped_count, 1);
        assert!((report.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pixel_score_matches_the_full_h_score_path() {
        use crate::io::LabelVector;
        let features = FeatureMatrix::new(array![
            [0.3, 1.2],
            [-0.7, 0.4],
            [1.5, -0.2],
            [0.1, 0.8],
            [-1.1, -0.6],
            [0.9, 0.0]
        ])
        .unwrap();
        let labels = vec![0usize, 1, 0, 1, 0, 1];
        let mut maps = Array3::<usize>::zeros((6, 1, 1));
        for (i, &l) in labels.iter().enumerate() {
            maps[[i, 0, 0]] = l;
        }
        let report =
            pixelwise_h_scores(&features, &maps.view(), InverseMode::default()).unwrap();
        let direct = stats::h_score(
            &features,
            &LabelVector::from_classes(labels).unwrap(),
            InverseMode::default(),
        )
        .unwrap();
        assert_eq!(report.scores[[0, 0]].to_bits(), direct.value.to_bits());
    }

    #[test]
    fn all_skipped_positions_is_an_error() {
        let features =
            FeatureMatrix::new(array![[1.0], [2.0], [3.0]]).unwrap();
        let maps = Array3::<usize>::zeros((3, 1, 2));
        let err =
            pixelwise_h_scores(&features, &maps.view(), InverseMode::default()).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }));
    }

    #[test]
    fn pgm_renders_flat_maps_mid_gray_and_skips_black() {
        let features = FeatureMatrix::new(array![
            [1.0],
            [1.0],
            [1.0],
            [-1.0],
            [-1.0],
            [-1.0]
        ])
        .unwrap();
        let mut maps = Array3::<usize>::zeros((6, 1, 2));
        for i in 3..6 {
            maps[[i, 0, 0]] = 1;
        }
        let report =
            pixelwise_h_scores(&features, &maps.view(), InverseMode::default()).unwrap();
        let pgm = render_pgm(&report);
        let header = b"P5\n2 1\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len()..], &[128u8, 0u8]);
    }

    #[test]
    fn svg_renders_one_cell_per_position() {
        let features = FeatureMatrix::new(array![
            [1.0],
            [1.0],
            [1.0],
            [-1.0],
            [-1.0],
            [-1.0]
        ])
        .unwrap();
        let mut maps = Array3::<usize>::zeros((6, 1, 2));
        for i in 3..6 {
            maps[[i, 0, 0]] = 1;
        }
        let report =
            pixelwise_h_scores(&features, &maps.view(), InverseMode::default()).unwrap();
        let svg = render_svg(&report);
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.contains("fill=\"#808080\""));
        assert!(svg.contains("fill=\"#000000\""));
        let meta = heatmap_meta(&report, 42);
        assert_eq!(meta.skipped_count, 1);
        assert_eq!(meta.seed, 42);
    }
}
