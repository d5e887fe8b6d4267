//! Transfer curricula over task collections: pairwise relatedness, a minimum
//! spanning forest of training order, agglomerative task clustering, and
//! rank-agreement measures for validating curricula against references.
//!
//! For tasks sharing one sample set, the raw relatedness `raw[i][j]` is the
//! H-score of task i's features against task j's labels, and the normalized
//! matrix is `M[i][j] = raw[i][j] / raw[j][j]`, so `M[i][j]` reads "how much
//! of task j's own score do task i's features recover". Pairs whose stronger
//! direction reaches a threshold alpha become graph edges with weight
//! `1 - max(M[i][j], M[j][i])`; the minimum spanning forest of that graph,
//! with each edge oriented along its stronger transfer direction, is the
//! suggested training order.

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{FeatureMatrix, LabelVector};
use crate::linalg::InverseMode;
use crate::stats;

/// A task in a shared-sample collection: its features and its labels, both
/// over the same samples as every other task.
#[derive(Debug, Clone)]
pub struct CurriculumTask {
    pub id: String,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
}

/// Raw and normalized pairwise relatedness.
#[derive(Debug, Clone)]
pub struct RelatednessMatrix {
    /// `raw[[i, j]]` is the H-score of task i's features on task j's labels.
    pub raw: Array2<f64>,
    /// `raw[[i, j]] / raw[[j, j]]`; the diagonal is 1 by construction.
    pub normalized: Array2<f64>,
}

/// Scores every task's features against every task's labels.
///
/// Fails when a task's own features score zero on its own labels, since the
/// normalization divides by the diagonal.
pub fn relatedness_matrix(
    tasks: &[CurriculumTask],
    inverse: InverseMode,
) -> Result<RelatednessMatrix> {
    if tasks.len() < 2 {
        return Err(Error::InvalidParameter {
            message: format!("need at least 2 tasks, got {}", tasks.len()),
        });
    }
    let m = tasks[0].features.n_samples();
    for t in tasks {
        if t.features.n_samples() != m || t.labels.len() != m {
            return Err(Error::LengthMismatch {
                context: format!("task `{}` vs shared sample count", t.id),
                left: t.features.n_samples(),
                right: m,
            });
        }
    }
    let n = tasks.len();
    let mut raw = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            raw[[i, j]] = stats::h_score(&tasks[i].features, &tasks[j].labels, inverse)?.value;
        }
    }
    for j in 0..n {
        if raw[[j, j]] <= 0.0 {
            return Err(Error::Degenerate {
                message: format!(
                    "task `{}` scores {} on its own labels; relatedness cannot be normalized",
                    tasks[j].id,
                    raw[[j, j]]
                ),
            });
        }
    }
    let mut normalized = raw.clone();
    for j in 0..n {
        let denom = raw[[j, j]];
        for i in 0..n {
            normalized[[i, j]] /= denom;
        }
    }
    Ok(RelatednessMatrix { raw, normalized })
}

/// Threshold chosen as a percentile (0 to 100, linear interpolation) of the
/// pairwise affinities `max(M[i][j], M[j][i])` over unordered pairs.
pub fn percentile_alpha(normalized: &ArrayView2<f64>, percentile: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&percentile) || !percentile.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("percentile must lie in [0, 100], got {percentile}"),
        });
    }
    let n = check_square(normalized)?;
    let mut affinities = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            affinities.push(normalized[[i, j]].max(normalized[[j, i]]));
        }
    }
    affinities.sort_by(f64::total_cmp);
    let position = percentile / 100.0 * (affinities.len() - 1) as f64;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    let frac = position - lo as f64;
    Ok(affinities[lo] + frac * (affinities[hi] - affinities[lo]))
}

/// One oriented curriculum edge: train `src` before `dst`.
#[derive(Debug, Clone, Serialize)]
pub struct CurriculumEdge {
    pub src: usize,
    pub dst: usize,
    /// `1 - max(M[src][dst], M[dst][src])`.
    pub weight: f64,
    /// Normalized transfer from `src` onto `dst`; at least `m_ji`.
    pub m_ij: f64,
    /// Normalized transfer from `dst` onto `src`.
    pub m_ji: f64,
}

/// A minimum spanning forest of the thresholded relatedness graph.
#[derive(Debug, Clone, Serialize)]
pub struct Curriculum {
    /// Threshold the graph was built with.
    pub alpha: f64,
    /// Forest edges in the order the spanning pass accepted them.
    pub edges: Vec<CurriculumEdge>,
    /// Connected components as sorted task-index lists, ordered by their
    /// smallest member.
    pub components: Vec<Vec<usize>>,
}

fn check_square(m: &ArrayView2<f64>) -> Result<usize> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape {
            context: "relatedness matrix".into(),
            message: format!("expected square, got {n} x {}", m.ncols()),
        });
    }
    if n < 2 {
        return Err(Error::Shape {
            context: "relatedness matrix".into(),
            message: "need at least 2 tasks".into(),
        });
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "relatedness matrix".into(),
        });
    }
    Ok(n)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Builds the curriculum forest from a normalized relatedness matrix.
///
/// Unordered pairs whose stronger direction reaches `alpha` become edges
/// weighted `1 - max(M[i][j], M[j][i])`; the spanning pass takes them in
/// (weight, smaller index, larger index) order, and each accepted edge is
/// oriented along its stronger direction (toward the higher index on exact
/// ties).
pub fn transfer_curriculum(normalized: &ArrayView2<f64>, alpha: f64) -> Result<Curriculum> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("alpha must be finite, got {alpha}"),
        });
    }
    let n = check_square(normalized)?;
    let mut candidates = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let affinity = normalized[[i, j]].max(normalized[[j, i]]);
            if affinity >= alpha {
                candidates.push((1.0 - affinity, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut uf = UnionFind::new(n);
    let mut edges = Vec::new();
    for (weight, i, j) in candidates {
        if !uf.union(i, j) {
            continue;
        }
        let forward = normalized[[i, j]];
        let backward = normalized[[j, i]];
        let (src, dst) = if forward >= backward { (i, j) } else { (j, i) };
        edges.push(CurriculumEdge {
            src,
            dst,
            weight,
            m_ij: normalized[[src, dst]],
            m_ji: normalized[[dst, src]],
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in 0..n {
        let root = uf.find(t);
        members[root].push(t);
    }
    let mut components: Vec<Vec<usize>> = members.into_iter().filter(|c| !c.is_empty()).collect();
    components.sort_by_key(|c| c[0]);
    Ok(Curriculum {
        alpha,
        edges,
        components,
    })
}

/// Renders the curriculum as a Graphviz digraph, labeling edges with their
/// weights.
pub fn render_dot(curriculum: &Curriculum, ids: &[String]) -> Result<String> {
    let needed = curriculum
        .components
        .iter()
        .flat_map(|c| c.iter())
        .copied()
        .max()
        .map_or(0, |m| m + 1);
    if ids.len() < needed {
        return Err(Error::LengthMismatch {
            context: "task ids vs curriculum".into(),
            left: ids.len(),
            right: needed,
        });
    }
    let mut out = String::from("digraph curriculum {\n");
    for component in &curriculum.components {
        for &t in component {
            out.push_str(&format!("  \"{}\";\n", ids[t]));
        }
    }
    for e in &curriculum.edges {
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"{:.6}\"];\n",
            ids[e.src], ids[e.dst], e.weight
        ));
    }
    out.push_str("}\n");
    Ok(out)
}

// ---------------------------------------------------------------------------
// agglomerative clustering of tasks
// ---------------------------------------------------------------------------

/// One agglomeration step. Cluster ids follow the usual linkage convention:
/// leaves are `0..n`, the cluster created by step s is `n + s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    /// Smaller cluster id of the merged pair.
    pub left: usize,
    /// Larger cluster id of the merged pair.
    pub right: usize,
    /// Average-linkage distance between the pair at merge time.
    pub distance: f64,
    /// Member count of the new cluster.
    pub size: usize,
}

/// Average-linkage clustering of tasks by their transfer profiles.
///
/// Task t's profile is the column `raw[.., t]`: how every source scores on
/// target t. Distances are Euclidean; cluster distances follow average
/// linkage (the mean of pairwise point distances), updated incrementally.
/// Equal distances break toward the lexicographically smallest id pair, so
/// the merge sequence is deterministic. Average linkage is monotone: merge
/// distances never decrease.
pub fn cluster_tasks(raw: &ArrayView2<f64>) -> Result<Vec<Merge>> {
    let n = check_square(raw)?;
    // dist[a][b] between active clusters, indexed by creation id.
    let total = 2 * n - 1;
    let mut dist = vec![vec![0.0_f64; total]; total];
    for a in 0..n {
        for b in a + 1..n {
            let d: f64 = (0..n)
                .map(|i| (raw[[i, a]] - raw[[i, b]]).powi(2))
                .sum::<f64>()
                .sqrt();
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; total];
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in active.iter().skip(ai + 1) {
                let (lo, hi) = (a.min(b), a.max(b));
                let d = dist[lo][hi];
                let better = match best {
                    None => true,
                    Some((bd, bl, bh)) => {
                        d < bd || (d == bd && (lo, hi) < (bl, bh))
                    }
                };
                if better {
                    best = Some((d, lo, hi));
                }
            }
        }
        let (d, left, right) = best.expect("at least two active clusters");
        let new_id = n + step;
        sizes[new_id] = sizes[left] + sizes[right];
        // Average-linkage update: the distance from the merged cluster to
        // any other is the size-weighted mean of the parts' distances.
        for &other in &active {
            if other == left || other == right {
                continue;
            }
            let dl = dist[left.min(other)][left.max(other)];
            let dr = dist[right.min(other)][right.max(other)];
            let combined = (sizes[left] as f64 * dl + sizes[right] as f64 * dr)
                / (sizes[left] + sizes[right]) as f64;
            dist[other][new_id] = combined;
            dist[new_id][other] = combined;
        }
        active.retain(|&c| c != left && c != right);
        active.push(new_id);
        merges.push(Merge {
            left,
            right,
            distance: d,
            size: sizes[new_id],
        });
    }
    Ok(merges)
}

// ---------------------------------------------------------------------------
// rank agreement
// ---------------------------------------------------------------------------

/// Average ranks (1-based, ascending) with ties sharing their mean position.
fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation between two score vectors, with average ranks
/// for ties: `1 - 6 sum(d^2) / (n (n^2 - 1))`.
pub fn spearman(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch {
            context: "score vectors".into(),
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    let n = scores_a.len();
    if n < 2 {
        return Err(Error::Shape {
            context: "spearman".into(),
            message: format!("need at least 2 items, got {n}"),
        });
    }
    if !scores_a.iter().chain(scores_b.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "score vectors".into(),
        });
    }
    let ra = average_ranks(scores_a);
    let rb = average_ranks(scores_b);
    let d_sq: f64 = ra
        .iter()
        .zip(rb.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let nf = n as f64;
    Ok(1.0 - 6.0 * d_sq / (nf * (nf * nf - 1.0)))
}

/// How gains decay with reference rank in [`dcg_agreement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainScheme {
    /// Relevance `n - rank_ref`.
    Linear,
    /// Relevance `2^(n - rank_ref) - 1`.
    Exponential,
}

/// Discounted cumulative gain of an evaluated ranking against a reference.
#[derive(Debug, Clone, Serialize)]
pub struct DcgReport {
    pub dcg: f64,
    /// DCG of the reference ordering itself.
    pub ideal: f64,
    /// `dcg / ideal`; defined as 1 when the ideal is zero, since an
    /// all-zero-relevance reference cannot be missed.
    pub normalized: f64,
}

/// Scores `order` against `reference` (both permutations of the same items,
/// best first). An item's relevance comes from its reference rank; its
/// discount from its evaluated rank, `1 / log2(rank + 1)`.
pub fn dcg_agreement(
    order: &[usize],
    reference: &[usize],
    scheme: GainScheme,
) -> Result<DcgReport> {
    if order.len() != reference.len() {
        return Err(Error::LengthMismatch {
            context: "ranking vs reference".into(),
            left: order.len(),
            right: reference.len(),
        });
    }
    if order.is_empty() {
        return Err(Error::Shape {
            context: "dcg".into(),
            message: "empty ranking".into(),
        });
    }
    let mut sorted_a = order.to_vec();
    let mut sorted_b = reference.to_vec();
    sorted_a.sort_unstable();
    sorted_b.sort_unstable();
    sorted_a.dedup();
    if sorted_a.len() != order.len() || sorted_a != sorted_b {
        return Err(Error::Shape {
            context: "dcg".into(),
            message: "orderings must be permutations of the same items".into(),
        });
    }
    let n = order.len();
    let relevance = |rank_ref: usize| -> f64 {
        let r = (n - rank_ref) as f64;
        match scheme {
            GainScheme::Linear => r,
            GainScheme::Exponential => r.exp2() - 1.0,
        }
    };
    // rank in the reference, 1-based, per item.
    let mut ref_rank = std::collections::HashMap::with_capacity(n);
    for (pos, &item) in reference.iter().enumerate() {
        ref_rank.insert(item, pos + 1);
    }
    let mut dcg = 0.0;
    for (pos, item) in order.iter().enumerate() {
        let rel = relevance(ref_rank[item]);
        dcg += rel / ((pos + 2) as f64).log2();
    }
    let mut ideal = 0.0;
    for pos in 0..n {
        ideal += relevance(pos + 1) / ((pos + 2) as f64).log2();
    }
    let normalized = if ideal == 0.0 { 1.0 } else { dcg / ideal };
    Ok(DcgReport {
        dcg,
        ideal,
        normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn example_m() -> Array2<f64> {
        array![[1.0, 0.9, 0.2], [0.7, 1.0, 0.5], [0.1, 0.6, 1.0]]
    }

    #[test]
    fn complete_graph_spanning_tree_and_orientation() {
        let m = example_m();
        let c = transfer_curriculum(&m.view(), 0.0).unwrap();
        assert_eq!(c.edges.len(), 2);
        // Lightest edge first: pair (0,1) at weight 0.1, oriented 0 -> 1
        // because M[0][1] = 0.9 beats M[1][0] = 0.7.
        assert_eq!((c.edges[0].src, c.edges[0].dst), (0, 1));
        assert!((c.edges[0].weight - 0.1).abs() < 1e-12);
        assert!((c.edges[0].m_ij - 0.9).abs() < 1e-12);
        assert!((c.edges[0].m_ji - 0.7).abs() < 1e-12);
        // Pair (1,2) at weight 0.4, oriented 2 -> 1.
        assert_eq!((c.edges[1].src, c.edges[1].dst), (2, 1));
        assert!((c.edges[1].weight - 0.4).abs() < 1e-12);
        assert_eq!(c.components, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn threshold_prunes_pairs_before_spanning() {
        let m = example_m();
        let c = transfer_curriculum(&m.view(), 0.5).unwrap();
        // Only (0,1) and (1,2) reach affinity 0.5; same tree as before.
        assert_eq!(c.edges.len(), 2);
        let c_high = transfer_curriculum(&m.view(), 0.95).unwrap();
        assert!(c_high.edges.is_empty());
        assert_eq!(c_high.components, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn orientation_ties_point_toward_the_higher_index() {
        let m = array![[1.0, 0.8], [0.8, 1.0]];
        let c = transfer_curriculum(&m.view(), 0.0).unwrap();
        assert_eq!((c.edges[0].src, c.edges[0].dst), (0, 1));
    }

    #[test]
    fn percentile_interpolates_linearly() {
        let m = example_m();
        // Pair affinities: {0.9, 0.2, 0.6}.
        let v = m.view();
        assert!((percentile_alpha(&v, 0.0).unwrap() - 0.2).abs() < 1e-12);
        assert!((percentile_alpha(&v, 50.0).unwrap() - 0.6).abs() < 1e-12);
        assert!((percentile_alpha(&v, 100.0).unwrap() - 0.9).abs() < 1e-12);
        assert!((percentile_alpha(&v, 25.0).unwrap() - 0.4).abs() < 1e-12);
        assert!(percentile_alpha(&v, 101.0).is_err());
    }

    #[test]
    fn relatedness_diagonal_normalizes_to_one() {
        let strong = FeatureMatrix::new(array![
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
        ])
        .unwrap();
        let weak = FeatureMatrix::new(array![
            [1.0],
            [-1.0],
            [1.0],
            [-1.0],
            [1.0],
            [-1.0],
            [1.0],
            [-1.0],
            [1.0],
            [-1.0]
        ])
        .unwrap();
        let y = LabelVector::from_classes(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]).unwrap();
        let tasks = vec![
            CurriculumTask {
                id: "strong".into(),
                features: strong,
                labels: y.clone(),
            },
            CurriculumTask {
                id: "weak".into(),
                features: weak,
                labels: y,
            },
        ];
        let rel = relatedness_matrix(&tasks, InverseMode::default()).unwrap();
        assert!((rel.raw[[0, 0]] - 0.36).abs() < 1e-12);
        assert!((rel.raw[[1, 1]] - 0.04).abs() < 1e-12);
        assert!((rel.normalized[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((rel.normalized[[1, 1]] - 1.0).abs() < 1e-12);
        // The strong features recover 9x the weak task's own score.
        assert!((rel.normalized[[0, 1]] - 9.0).abs() < 1e-9);
    }

    #[test]
    fn dot_rendering_names_every_task_and_edge() {
        let m = example_m();
        let c = transfer_curriculum(&m.view(), 0.0).unwrap();
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let dot = render_dot(&c, &ids).unwrap();
        assert!(dot.starts_with("digraph curriculum {"));
        assert!(dot.contains("\"a\" -> \"b\" [label=\"0.100000\"];"));
        assert!(dot.contains("\"c\" -> \"b\""));
    }

    #[test]
    fn cluster_merges_follow_the_linkage_convention() {
        // Profiles are columns; distances between targets 0, 1, 2 are the
        // column distances 1, 10, 9.5-ish on this line-like matrix.
        let raw = array![[0.0, 1.0, 10.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let merges = cluster_tasks(&raw.view()).unwrap();
        assert_eq!(merges.len(), 2);
        assert_eq!((merges[0].left, merges[0].right), (0, 1));
        assert!((merges[0].distance - 1.0).abs() < 1e-12);
        assert_eq!(merges[0].size, 2);
        assert_eq!((merges[1].left, merges[1].right), (2, 3));
        assert!((merges[1].distance - 9.5).abs() < 1e-12);
        assert_eq!(merges[1].size, 3);
    }

    /// Direct-definition average linkage: cluster distance is the mean of
    /// pairwise point distances, recomputed from scratch each step.
    fn cluster_tasks_by_definition(raw: &ArrayView2<f64>) -> Vec<Merge> {
        let n = raw.nrows();
        let point = |t: usize| -> Vec<f64> { (0..n).map(|i| raw[[i, t]]).collect() };
        let pair_dist = |a: usize, b: usize| -> f64 {
            point(a)
                .iter()
                .zip(point(b).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let mut clusters: Vec<(usize, Vec<usize>)> =
            (0..n).map(|t| (t, vec![t])).collect();
        let mut merges = Vec::new();
        for step in 0..n - 1 {
            let mut best: Option<(f64, usize, usize)> = None;
            for x in 0..clusters.len() {
                for y in x + 1..clusters.len() {
                    let (ida, ma) = &clusters[x];
                    let (idb, mb) = &clusters[y];
                    let mut sum = 0.0;
                    for &a in ma {
                        for &b in mb {
                            sum += pair_dist(a, b);
                        }
                    }
                    let d = sum / (ma.len() * mb.len()) as f64;
                    let (lo, hi) = (*ida.min(idb), *ida.max(idb));
                    let better = match best {
                        None => true,
                        Some((bd, bl, bh)) => d < bd || (d == bd && (lo, hi) < (bl, bh)),
                    };
                    if better {
                        best = Some((d, lo, hi));
                    }
                }
            }
            let (d, lo, hi) = best.unwrap();
            let pos_a = clusters.iter().position(|(id, _)| *id == lo).unwrap();
            let pos_b = clusters.iter().position(|(id, _)| *id == hi).unwrap();
            let mut merged = clusters[pos_a].1.clone();
            merged.extend(clusters[pos_b].1.iter().copied());
            let size = merged.len();
            clusters.retain(|(id, _)| *id != lo && *id != hi);
            clusters.push((n + step, merged));
            merges.push(Merge {
                left: lo,
                right: hi,
                distance: d,
                size,
            });
        }
        merges
    }

    #[test]
    fn incremental_linkage_matches_the_definition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let n = rng.gen_range(3..7);
            let raw = Array2::from_shape_fn((n, n), |_| rng.gen_range(0.0..1.0));
            let fast = cluster_tasks(&raw.view()).unwrap();
            let slow = cluster_tasks_by_definition(&raw.view());
            assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(slow.iter()) {
                assert_eq!((a.left, a.right, a.size), (b.left, b.right, b.size));
                assert!((a.distance - b.distance).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn linkage_distances_never_decrease() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let n = rng.gen_range(3..8);
            let raw = Array2::from_shape_fn((n, n), |_| rng.gen_range(0.0..1.0));
            let merges = cluster_tasks(&raw.view()).unwrap();
            for w in merges.windows(2) {
                assert!(w[1].distance >= w[0].distance - 1e-12);
            }
        }
    }

    #[test]
    fn spearman_known_values() {
        let identity = spearman(&[4.0, 3.0, 2.0, 1.0], &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!((identity - 1.0).abs() < 1e-12);
        let reversed = spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!((reversed + 1.0).abs() < 1e-12);
        // One adjacent swap on four items: 1 - 6*2/60.
        let swapped = spearman(&[4.0, 3.0, 2.0, 1.0], &[4.0, 3.0, 1.0, 2.0]).unwrap();
        assert!((swapped - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spearman_averages_tied_ranks() {
        // Ranks of b are (1, 2.5, 2.5, 4): sum d^2 = 0.5.
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 20.0, 40.0]).unwrap();
        assert!((rho - 0.95).abs() < 1e-12);
    }

    #[test]
    fn dcg_reversed_three_items() {
        let report = dcg_agreement(&[2, 1, 0], &[0, 1, 2], GainScheme::Linear).unwrap();
        assert!((report.dcg - (1.0 / 3.0_f64.log2() + 1.0)).abs() < 1e-12);
        assert!((report.ideal - (2.0 + 1.0 / 3.0_f64.log2())).abs() < 1e-12);
        assert!((report.normalized - 0.61985).abs() < 1e-4, "{}", report.normalized);
    }

    #[test]
    fn dcg_identity_is_one_and_exponential_gains_differ() {
        let identity = dcg_agreement(&[0, 1, 2], &[0, 1, 2], GainScheme::Linear).unwrap();
        assert!((identity.normalized - 1.0).abs() < 1e-12);
        let exp = dcg_agreement(&[2, 1, 0], &[0, 1, 2], GainScheme::Exponential).unwrap();
        // Relevances 3, 1, 0: dcg = 1/log2(3) + 3/2, ideal = 3 + 1/log2(3).
        let expected_dcg = 1.0 / 3.0_f64.log2() + 1.5;
        let expected_ideal = 3.0 + 1.0 / 3.0_f64.log2();
        assert!((exp.dcg - expected_dcg).abs() < 1e-12);
        assert!((exp.ideal - expected_ideal).abs() < 1e-12);
        assert!((exp.normalized - expected_dcg / expected_ideal).abs() < 1e-12);
    }

    #[test]
    fn dcg_single_item_reference_is_degenerate_but_defined() {
        let report = dcg_agreement(&[0], &[0], GainScheme::Linear).unwrap();
        assert_eq!(report.ideal, 0.0);
        assert_eq!(report.normalized, 1.0);
    }

    #[test]
    fn dcg_rejects_mismatched_item_sets() {
        assert!(dcg_agreement(&[0, 1], &[0, 2], GainScheme::Linear).is_err());
        assert!(dcg_agreement(&[0, 0], &[0, 1], GainScheme::Linear).is_err());
        assert!(dcg_agreement(&[0, 1], &[0, 1, 2], GainScheme::Linear).is_err());
    }
}
