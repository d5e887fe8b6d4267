//! Exact-distribution analysis of a discrete joint: the divergence transition
//! matrix (DTM), its spectrum, optimal features, and the alternating
//! conditional expectation (ACE) iteration.
//!
//! For a joint distribution P over (X, Y) with positive marginals, the DTM is
//!
//! ```text
//! B[y, x] = P(y, x) / (sqrt(P_Y(y)) sqrt(P_X(x)))  -  sqrt(P_Y(y)) sqrt(P_X(x))
//! ```
//!
//! Structural facts used throughout: `B . sqrt(P_X) = 0` and
//! `sqrt(P_Y)^T . B = 0` (the trivial mode is subtracted off), every singular
//! value is at most 1, and the rank is at most `min(|X|, |Y|) - 1`.
//!
//! The top-k singular subspaces of B give the k-dimensional feature functions
//! with maximal H-score: `f_i(x) = v_i(x) / sqrt(P_X(x))` scores
//! `h_opt = sigma_1^2 + ... + sigma_k^2`, and the HGR maximal correlation of
//! (X, Y) at dimension k is `sigma_1 + ... + sigma_k`. The ACE iteration
//! reaches the same subspaces without forming B's SVD by alternating
//! `g <- E[f(X) | Y]` and `f <- E[g(Y) | X]` with re-centering and whitening
//! under the marginals after each half-step; the two routes cross-validate
//! each other in the test suite.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, InverseMode};

/// Singular values at or below `max(RANK_TOL_ABS, RANK_TOL_REL * sigma_max)`
/// are treated as structural zeros and excluded from reported spectra.
const RANK_TOL_REL: f64 = 1e-12;
const RANK_TOL_ABS: f64 = 1e-14;

/// Tolerance on the total mass of a probability table.
const MASS_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// joint distributions
// ---------------------------------------------------------------------------

/// A validated discrete joint distribution over (X, Y).
///
/// The table is stored |Y| x |X| with strictly positive marginals: rows and
/// columns whose marginal is exactly zero are pruned at construction and
/// their original indices recorded, so downstream feature tables align with
/// the pruned alphabet.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    table: Array2<f64>,
    p_x: Array1<f64>,
    p_y: Array1<f64>,
    pruned_x: Vec<usize>,
    pruned_y: Vec<usize>,
}

impl JointDistribution {
    /// Validates and wraps a |Y| x |X| probability table: entries >= 0,
    /// total mass 1 within 1e-12, zero-marginal rows/columns pruned.
    pub fn from_table(table: Array2<f64>) -> Result<Self> {
        if table.nrows() == 0 || table.ncols() == 0 {
            return Err(Error::Shape {
                context: "JointDistribution".into(),
                message: "empty table".into(),
            });
        }
        for (index, &v) in table.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "joint probability table".into(),
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeProbability { value: v, index });
            }
        }
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::DistributionSum {
                sum,
                tol: MASS_TOL,
            });
        }
        let row_mass: Vec<f64> = table
            .axis_iter(Axis(0))
            .map(|row| row.iter().sum())
            .collect();
        let col_mass: Vec<f64> = table
            .axis_iter(Axis(1))
            .map(|col| col.iter().sum())
            .collect();
        let keep_y: Vec<usize> = (0..table.nrows()).filter(|&r| row_mass[r] > 0.0).collect();
        let keep_x: Vec<usize> = (0..table.ncols()).filter(|&c| col_mass[c] > 0.0).collect();
        let pruned_y: Vec<usize> = (0..table.nrows()).filter(|&r| row_mass[r] == 0.0).collect();
        let pruned_x: Vec<usize> = (0..table.ncols()).filter(|&c| col_mass[c] == 0.0).collect();
        let pruned = Array2::from_shape_fn((keep_y.len(), keep_x.len()), |(r, c)| {
            table[[keep_y[r], keep_x[c]]]
        });
        let p_y = Array1::from_iter(keep_y.iter().map(|&r| row_mass[r]));
        let p_x = Array1::from_iter(keep_x.iter().map(|&c| col_mass[c]));
        Ok(Self {
            table: pruned,
            p_x,
            p_y,
            pruned_x,
            pruned_y,
        })
    }

    /// Builds a joint from non-negative counts, normalizing by the total.
    pub fn from_counts(counts: &ArrayView2<f64>) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Degenerate {
                message: format!("count table total is {total}, expected > 0"),
            });
        }
        Self::from_table(counts.map(|&v| v / total))
    }

    /// P(y, x) table, |Y| x |X|.
    pub fn table(&self) -> &Array2<f64> {
        &self.table
    }

    /// Marginal over X (strictly positive).
    pub fn p_x(&self) -> &Array1<f64> {
        &self.p_x
    }

    /// Marginal over Y (strictly positive).
    pub fn p_y(&self) -> &Array1<f64> {
        &self.p_y
    }

    /// Alphabet sizes (|X|, |Y|) after pruning.
    pub fn alphabet_sizes(&self) -> (usize, usize) {
        (self.table.ncols(), self.table.nrows())
    }

    /// Original column indices removed for having zero marginal mass.
    pub fn pruned_x(&self) -> &[usize] {
        &self.pruned_x
    }

    /// Original row indices removed for having zero marginal mass.
    pub fn pruned_y(&self) -> &[usize] {
        &self.pruned_y
    }
}

/// An empirical joint built from paired discrete samples, together with the
/// observed symbol alphabets (sorted ascending; table indices refer to these).
#[derive(Debug, Clone)]
pub struct EmpiricalJoint {
    pub joint: JointDistribution,
    pub x_symbols: Vec<usize>,
    pub y_symbols: Vec<usize>,
}

/// Counts paired samples into a normalized joint over the observed symbols.
pub fn empirical_joint(x_samples: &[usize], y_samples: &[usize]) -> Result<EmpiricalJoint> {
    if x_samples.len() != y_samples.len() {
        return Err(Error::LengthMismatch {
            context: "x samples vs y samples".into(),
            left: x_samples.len(),
            right: y_samples.len(),
        });
    }
    if x_samples.is_empty() {
        return Err(Error::Shape {
            context: "empirical_joint".into(),
            message: "no samples".into(),
        });
    }
    let mut x_symbols: Vec<usize> = x_samples.to_vec();
    x_symbols.sort_unstable();
    x_symbols.dedup();
    let mut y_symbols: Vec<usize> = y_samples.to_vec();
    y_symbols.sort_unstable();
    y_symbols.dedup();
    let mut counts = Array2::<f64>::zeros((y_symbols.len(), x_symbols.len()));
    for (&x, &y) in x_samples.iter().zip(y_samples.iter()) {
        let xi = x_symbols.binary_search(&x).expect("symbol collected above");
        let yi = y_symbols.binary_search(&y).expect("symbol collected above");
        counts[[yi, xi]] += 1.0;
    }
    let joint = JointDistribution::from_counts(&counts.view())?;
    Ok(EmpiricalJoint {
        joint,
        x_symbols,
        y_symbols,
    })
}

// ---------------------------------------------------------------------------
// the divergence transition matrix and its spectrum
// ---------------------------------------------------------------------------

/// The DTM of a joint, with the square-root marginals it was built from.
#[derive(Debug, Clone)]
pub struct Dtm {
    matrix: Array2<f64>,
    sqrt_p_x: Array1<f64>,
    sqrt_p_y: Array1<f64>,
}

impl Dtm {
    /// The |Y| x |X| matrix itself.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn sqrt_p_x(&self) -> &Array1<f64> {
        &self.sqrt_p_x
    }

    pub fn sqrt_p_y(&self) -> &Array1<f64> {
        &self.sqrt_p_y
    }

    /// Squared Frobenius norm; the total spectral energy available to any
    /// feature set on this joint.
    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum()
    }
}

/// Builds the divergence transition matrix of a joint.
pub fn dtm(joint: &JointDistribution) -> Dtm {
    let sqrt_p_x = joint.p_x().map(|&p| p.sqrt());
    let sqrt_p_y = joint.p_y().map(|&p| p.sqrt());
    let (nx, ny) = joint.alphabet_sizes();
    let mut matrix = Array2::<f64>::zeros((ny, nx));
    for y in 0..ny {
        for x in 0..nx {
            matrix[[y, x]] =
                joint.table()[[y, x]] / (sqrt_p_y[y] * sqrt_p_x[x]) - sqrt_p_y[y] * sqrt_p_x[x];
        }
    }
    Dtm {
        matrix,
        sqrt_p_x,
        sqrt_p_y,
    }
}

/// Singular triples of a DTM with the structural zero modes removed:
/// only singular values above `max(1e-14, 1e-12 * sigma_max)` are kept.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Left singular vectors, one column per retained singular value.
    pub left: Array2<f64>,
    /// Retained singular values, descending.
    pub sigma: Array1<f64>,
    /// Right singular vectors, one column per retained singular value.
    pub right: Array2<f64>,
}

impl SpectralDecomposition {
    /// Number of retained singular values.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }
}

/// Full SVD of the DTM, truncated to its numerical rank.
pub fn spectrum(dtm: &Dtm) -> Result<SpectralDecomposition> {
    let svd = linalg::svd(&dtm.matrix().view())?;
    let sigma_max = svd.sigma.iter().cloned().fold(0.0_f64, f64::max);
    let cut = RANK_TOL_ABS.max(RANK_TOL_REL * sigma_max);
    let rank = svd.sigma.iter().take_while(|&&s| s > cut).count();
    let left = svd.u.slice(ndarray::s![.., ..rank]).to_owned();
    let right = svd.v.slice(ndarray::s![.., ..rank]).to_owned();
    let sigma = svd.sigma.slice(ndarray::s![..rank]).to_owned();
    Ok(SpectralDecomposition { left, sigma, right })
}

/// The k-dimensional feature functions with maximal H-score on a joint.
#[derive(Debug, Clone)]
pub struct OptimalFeatures {
    /// |X| x k table; column i is `f_i(x) = v_i(x) / sqrt(P_X(x))`.
    pub f_table: Array2<f64>,
    /// |Y| x k table; column i is `g_i(y) = u_i(y) / sqrt(P_Y(y))`.
    pub g_table: Array2<f64>,
    /// Sum of the top k squared singular values; the maximal H-score.
    pub h_opt: f64,
    /// Sum of the top k singular values; the HGR maximal correlation.
    pub rho: f64,
}

/// Top-k optimal features from the DTM spectrum. Errors if `k` exceeds the
/// numerical rank.
pub fn optimal_features(joint: &JointDistribution, k: usize) -> Result<OptimalFeatures> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            message: "k must be >= 1".into(),
        });
    }
    let d = dtm(joint);
    let spec = spectrum(&d)?;
    if k > spec.rank() {
        return Err(Error::RankExceeded {
            requested: k,
            rank: spec.rank(),
        });
    }
    let (nx, ny) = joint.alphabet_sizes();
    let mut f_table = Array2::<f64>::zeros((nx, k));
    let mut g_table = Array2::<f64>::zeros((ny, k));
    for i in 0..k {
        for x in 0..nx {
            f_table[[x, i]] = spec.right[[x, i]] / d.sqrt_p_x[x];
        }
        for y in 0..ny {
            g_table[[y, i]] = spec.left[[y, i]] / d.sqrt_p_y[y];
        }
    }
    let h_opt = spec.sigma.iter().take(k).map(|s| s * s).sum();
    let rho = spec.sigma.iter().take(k).sum();
    Ok(OptimalFeatures {
        f_table,
        g_table,
        h_opt,
        rho,
    })
}

/// HGR maximal correlation of (X, Y) at feature dimension k: the sum of the
/// top k singular values of the DTM.
pub fn hgr_correlation(joint: &JointDistribution, k: usize) -> Result<f64> {
    optimal_features(joint, k).map(|o| o.rho)
}

// ---------------------------------------------------------------------------
// exact-distribution H-score and the projection-route identities
// ---------------------------------------------------------------------------

fn validate_f_table(joint: &JointDistribution, f_table: &ArrayView2<f64>) -> Result<()> {
    let (nx, _) = joint.alphabet_sizes();
    if f_table.nrows() != nx {
        return Err(Error::Shape {
            context: "feature table".into(),
            message: format!(
                "table has {} rows, joint X alphabet has {nx}",
                f_table.nrows()
            ),
        });
    }
    if f_table.ncols() == 0 {
        return Err(Error::Shape {
            context: "feature table".into(),
            message: "no feature columns".into(),
        });
    }
    if !f_table.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "feature table".into(),
        });
    }
    Ok(())
}

/// Centers a feature table under the X-marginal.
fn center_under(weights: &Array1<f64>, f_table: &ArrayView2<f64>) -> Array2<f64> {
    let (n, k) = f_table.dim();
    let mut mean = vec![0.0; k];
    for x in 0..n {
        let w = weights[x];
        for j in 0..k {
            mean[j] += w * f_table[[x, j]];
        }
    }
    let mut centered = f_table.to_owned();
    for x in 0..n {
        for j in 0..k {
            centered[[x, j]] -= mean[j];
        }
    }
    centered
}

/// Covariance of a centered table under a weight vector: `F^T diag(w) F`.
fn weighted_gram(weights: &Array1<f64>, centered: &Array2<f64>) -> Array2<f64> {
    let (n, k) = centered.dim();
    let mut cov = Array2::<f64>::zeros((k, k));
    for x in 0..n {
        let w = weights[x];
        if w == 0.0 {
            continue;
        }
        for a in 0..k {
            let wa = w * centered[[x, a]];
            if wa == 0.0 {
                continue;
            }
            for b in a..k {
                cov[[a, b]] += wa * centered[[x, b]];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            cov[[a, b]] = cov[[b, a]];
        }
    }
    cov
}

/// H-score of a feature table evaluated on the exact joint (covariances taken
/// under the distribution instead of samples).
pub fn exact_h_score(
    joint: &JointDistribution,
    f_table: &ArrayView2<f64>,
    mode: InverseMode,
) -> Result<f64> {
    validate_f_table(joint, f_table)?;
    let centered = center_under(joint.p_x(), f_table);
    let cov = weighted_gram(joint.p_x(), &centered);
    let inverse = linalg::regularized_inverse(&cov.view(), mode)?;
    let (_, ny) = joint.alphabet_sizes();
    let k = centered.ncols();
    let mut value = 0.0;
    for y in 0..ny {
        let p_y = joint.p_y()[y];
        let mut mu_y = Array1::<f64>::zeros(k);
        for x in 0..centered.nrows() {
            let w = joint.table()[[y, x]] / p_y;
            if w == 0.0 {
                continue;
            }
            for j in 0..k {
                mu_y[j] += w * centered[[x, j]];
            }
        }
        let iv = inverse.matrix.dot(&mu_y);
        value += p_y * mu_y.dot(&iv);
    }
    Ok(value)
}

/// A feature table embedded in the DTM's row space:
/// `phi = diag(sqrt(P_X)) . (f - E[f])`.
#[derive(Debug, Clone)]
pub struct PhiEmbedding {
    /// |X| x k embedded table.
    pub phi: Array2<f64>,
}

/// Embeds a feature table (centered under the X-marginal first, so the
/// embedding is orthogonal to the DTM's structural null direction).
pub fn phi_embedding(joint: &JointDistribution, f_table: &ArrayView2<f64>) -> Result<PhiEmbedding> {
    validate_f_table(joint, f_table)?;
    let centered = center_under(joint.p_x(), f_table);
    let (n, k) = centered.dim();
    let mut phi = centered;
    for x in 0..n {
        let s = joint.p_x()[x].sqrt();
        for j in 0..k {
            phi[[x, j]] *= s;
        }
    }
    Ok(PhiEmbedding { phi })
}

/// H-score via the projection route: `|| B . phi (phi^T phi)^{-1/2} ||_F^2`,
/// the squared norm of the DTM's projection onto the embedded feature span.
/// Agrees with [`exact_h_score`] under the default pseudo-inverse.
pub fn h_score_from_embedding(d: &Dtm, embedding: &PhiEmbedding) -> Result<f64> {
    let b_phi = d.matrix().dot(&embedding.phi);
    let gram = embedding.phi.t().dot(&embedding.phi);
    let half = linalg::inverse_sqrt(&gram.view(), InverseMode::default())?;
    let projected = b_phi.dot(&half);
    Ok(projected.iter().map(|v| v * v).sum())
}

/// The least-squares optimal response table `psi = B . phi (phi^T phi)^{-1}`:
/// the Y-side embedding that best reproduces the DTM from the feature span.
pub fn optimal_psi(d: &Dtm, embedding: &PhiEmbedding) -> Result<Array2<f64>> {
    let b_phi = d.matrix().dot(&embedding.phi);
    let gram = embedding.phi.t().dot(&embedding.phi);
    let inv = linalg::regularized_inverse(&gram.view(), InverseMode::default())?;
    Ok(b_phi.dot(&inv.matrix))
}

/// How much spectral energy the feature span leaves on the table: the
/// Frobenius energy of the DTM minus the H-score of the features. A proxy for
/// the log-loss a linear head on these features cannot remove.
pub fn residual_logloss_proxy(joint: &JointDistribution, f_table: &ArrayView2<f64>) -> Result<f64> {
    let d = dtm(joint);
    let embedding = phi_embedding(joint, f_table)?;
    let captured = h_score_from_embedding(&d, &embedding)?;
    Ok(d.frobenius_sq() - captured)
}

// ---------------------------------------------------------------------------
// alternating conditional expectations
// ---------------------------------------------------------------------------

/// Re-centers and whitens a table so that under `weights` each column has
/// mean 0 and the columns have identity covariance (null directions project
/// to zero columns).
fn center_whiten(weights: &Array1<f64>, table: &Array2<f64>) -> Result<Array2<f64>> {
    let centered = center_under(weights, &table.view());
    let cov = weighted_gram(weights, &centered);
    let half = linalg::inverse_sqrt(&cov.view(), InverseMode::default())?;
    Ok(centered.dot(&half))
}

/// Alternating conditional expectations on the exact joint.
///
/// Starts from a seeded Gaussian table, alternates `g <- E[f(X) | Y]` and
/// `f <- E[g(Y) | X]` with re-centering and whitening under the marginals
/// after each half-step, and stops when the correlation objective
/// `E[f(X)^T g(Y)]` changes by less than `tol` between sweeps. Converges to
/// the same top-k subspaces as [`optimal_features`]; because repeated
/// singular values make individual vectors arbitrary, consumers should
/// compare subspaces and scalar sums, never vector entries.
pub fn ace(
    joint: &JointDistribution,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<OptimalFeatures> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            message: "k must be >= 1".into(),
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter {
            message: format!("tol must be > 0, got {tol}"),
        });
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter {
            message: "max_iter must be >= 1".into(),
        });
    }
    // Rank precondition via the spectral path; the iteration below never
    // reads the decomposition.
    let rank = spectrum(&dtm(joint))?.rank();
    if k > rank {
        return Err(Error::RankExceeded { requested: k, rank });
    }

    let (nx, ny) = joint.alphabet_sizes();
    let p = joint.table();
    let p_x = joint.p_x();
    let p_y = joint.p_y();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut f = Array2::<f64>::from_shape_fn((nx, k), |_| normal.sample(&mut rng));
    f = center_whiten(p_x, &f)?;

    let mut g = Array2::<f64>::zeros((ny, k));
    let mut prev = f64::NEG_INFINITY;
    let mut objective = f64::NEG_INFINITY;
    let mut converged = false;
    let mut sweeps = 0;
    for _ in 0..max_iter {
        sweeps += 1;
        // g(y) <- E[f(X) | Y = y], then re-center and whiten under P_Y.
        let mut g_raw = p.dot(&f);
        for y in 0..ny {
            let mut row = g_raw.row_mut(y);
            row /= p_y[y];
        }
        g = center_whiten(p_y, &g_raw)?;
        // f(x) <- E[g(Y) | X = x], then re-center and whiten under P_X.
        let mut f_raw = p.t().dot(&g);
        for x in 0..nx {
            let mut row = f_raw.row_mut(x);
            row /= p_x[x];
        }
        f = center_whiten(p_x, &f_raw)?;
        // E[f(X)^T g(Y)] over the joint.
        objective = f.t().dot(&p.t().dot(&g)).diag().sum();
        if (objective - prev).abs() < tol {
            converged = true;
            break;
        }
        prev = objective;
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: sweeps,
            last_objective: objective,
        });
    }
    let h_opt = exact_h_score(joint, &f.view(), InverseMode::default())?;
    Ok(OptimalFeatures {
        f_table: f,
        g_table: g,
        h_opt,
        rho: objective,
    })
}

/// Principal angles (radians, ascending) between the column spans of two
/// orthonormal bases with the same row dimension.
pub fn principal_angles(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Shape {
            context: "principal_angles".into(),
            message: format!("row dimensions differ: {} vs {}", a.nrows(), b.nrows()),
        });
    }
    let cross = a.t().dot(b);
    let svd = linalg::svd(&cross.view())?;
    let mut angles: Vec<f64> = svd
        .sigma
        .iter()
        .map(|&c| c.clamp(-1.0, 1.0).acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}
