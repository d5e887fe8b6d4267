//! Error exponents of binary hypothesis testing in a local neighborhood, and
//! a Monte Carlo harness that checks the analytic rates against simulated
//! error probabilities.
//!
//! A local pair consists of a strictly positive reference distribution `P0`
//! and two hypotheses `P1`, `P2` within chi-square distance `epsilon^2` of
//! it. Writing the perturbation vectors
//!
//! ```text
//! phi_i(x) = (P_i(x) - P0(x)) / (epsilon * sqrt(P0(x)))
//! ```
//!
//! the best achievable error exponent for deciding between the hypotheses
//! from i.i.d. samples is `(epsilon^2 / 8) * ||phi_1 - phi_2||^2`, and a
//! decision rule that only sees a k-dimensional feature `f` achieves
//!
//! ```text
//! E_f = (epsilon^2 / 8) * sum_i <xi_i, phi_1 - phi_2>^2
//! ```
//!
//! where `xi_i = sqrt(P0) * f_i` are the information vectors of the feature
//! coordinates after centering and whitening under `P0`. Orthonormality of
//! the `xi_i` makes `E_f <= E_opt` a Bessel inequality, with equality when
//! the feature span contains the likelihood-ratio direction.
//!
//! The simulator draws multinomial count vectors, applies the
//! nearest-class-mean rule to the feature sample mean, and fits the decay
//! slope of `-ln P_e` against the sample size.

use ndarray::{Array1, Array2, ArrayView2};
use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_distr::Binomial;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, InverseMode};
use crate::spectral::JointDistribution;

/// Tolerance on the total mass of each distribution in a pair.
const MASS_TOL: f64 = 1e-12;

/// Relative slack on the neighborhood radius check.
const NEIGHBORHOOD_SLACK: f64 = 1e-9;

/// Trials processed per RNG chunk; error counts are integers, so the chunk
/// partition never changes the result, only how it is parallelized.
const TRIAL_CHUNK: usize = 256;

/// A reference distribution with two hypotheses in its epsilon-neighborhood.
#[derive(Debug, Clone)]
pub struct LocalPair {
    p0: Array1<f64>,
    p1: Array1<f64>,
    p2: Array1<f64>,
    epsilon: f64,
}

impl LocalPair {
    /// Validates a local pair: equal lengths, unit mass, `p0` strictly
    /// positive, hypotheses non-negative and within chi-square distance
    /// `epsilon^2` of the reference.
    pub fn new(p0: Array1<f64>, p1: Array1<f64>, p2: Array1<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                message: format!("epsilon must be > 0, got {epsilon}"),
            });
        }
        let n = p0.len();
        if n < 2 {
            return Err(Error::Shape {
                context: "local pair".into(),
                message: format!("alphabet size {n}, need at least 2"),
            });
        }
        for (name, p) in [("p1", &p1), ("p2", &p2)] {
            if p.len() != n {
                return Err(Error::LengthMismatch {
                    context: format!("p0 vs {name}"),
                    left: n,
                    right: p.len(),
                });
            }
        }
        for (name, p) in [("p0", &p0), ("p1", &p1), ("p2", &p2)] {
            for (index, &v) in p.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!("distribution {name}"),
                    });
                }
                if v < 0.0 {
                    return Err(Error::NegativeProbability { value: v, index });
                }
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > MASS_TOL {
                return Err(Error::DistributionSum {
                    sum,
                    tol: MASS_TOL,
                });
            }
        }
        if p0.iter().any(|&v| v == 0.0) {
            return Err(Error::Degenerate {
                message: "reference distribution must be strictly positive".into(),
            });
        }
        let bound = epsilon * epsilon * (1.0 + NEIGHBORHOOD_SLACK);
        for (which, p) in [(1usize, &p1), (2usize, &p2)] {
            let chi_sq: f64 = p0
                .iter()
                .zip(p.iter())
                .map(|(&r, &q)| (q - r) * (q - r) / r)
                .sum();
            if chi_sq > bound {
                return Err(Error::Neighborhood {
                    which,
                    chi_sq,
                    bound: epsilon * epsilon,
                });
            }
        }
        Ok(Self { p0, p1, p2, epsilon })
    }

    pub fn p0(&self) -> &Array1<f64> {
        &self.p0
    }

    pub fn p1(&self) -> &Array1<f64> {
        &self.p1
    }

    pub fn p2(&self) -> &Array1<f64> {
        &self.p2
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Alphabet size.
    pub fn alphabet(&self) -> usize {
        self.p0.len()
    }

    /// Perturbation vectors `phi_1`, `phi_2` of the two hypotheses.
    pub fn perturbation_vectors(&self) -> (Array1<f64>, Array1<f64>) {
        let phi = |p: &Array1<f64>| {
            Array1::from_shape_fn(self.p0.len(), |x| {
                (p[x] - self.p0[x]) / (self.epsilon * self.p0[x].sqrt())
            })
        };
        (phi(&self.p1), phi(&self.p2))
    }

    /// The joint distribution of (hypothesis, observation) under equal
    /// priors; its rows are `p1 / 2` and `p2 / 2`. Symbols with zero mass
    /// under both hypotheses are pruned by the joint's constructor.
    pub fn detection_joint(&self) -> Result<JointDistribution> {
        let n = self.alphabet();
        let mut table = Array2::<f64>::zeros((2, n));
        for x in 0..n {
            table[[0, x]] = 0.5 * self.p1[x];
            table[[1, x]] = 0.5 * self.p2[x];
        }
        JointDistribution::from_table(table)
    }
}

/// The best achievable error exponent for the pair:
/// `(epsilon^2 / 8) * ||phi_1 - phi_2||^2`.
pub fn optimal_exponent(pair: &LocalPair) -> f64 {
    let (phi1, phi2) = pair.perturbation_vectors();
    let diff_sq: f64 = phi1
        .iter()
        .zip(phi2.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    pair.epsilon * pair.epsilon / 8.0 * diff_sq
}

/// Centers and whitens a feature table under the reference distribution, so
/// its information vectors are orthonormal. Rank-deficient tables lose their
/// redundant directions to zero columns.
pub fn whitened_features(pair: &LocalPair, f_table: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = pair.alphabet();
    if f_table.nrows() != n {
        return Err(Error::Shape {
            context: "feature table".into(),
            message: format!("table has {} rows, alphabet has {n}", f_table.nrows()),
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
    let k = f_table.ncols();
    let mut mean = vec![0.0; k];
    for x in 0..n {
        for j in 0..k {
            mean[j] += pair.p0[x] * f_table[[x, j]];
        }
    }
    let mut centered = f_table.to_owned();
    for x in 0..n {
        for j in 0..k {
            centered[[x, j]] -= mean[j];
        }
    }
    let mut cov = Array2::<f64>::zeros((k, k));
    for x in 0..n {
        let w = pair.p0[x];
        for a in 0..k {
            for b in a..k {
                cov[[a, b]] += w * centered[[x, a]] * centered[[x, b]];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            cov[[a, b]] = cov[[b, a]];
        }
    }
    let half = linalg::inverse_sqrt(&cov.view(), InverseMode::default())?;
    Ok(centered.dot(&half))
}

/// Information vectors of a whitened feature table: `xi_i = sqrt(P0) * f_i`.
pub fn information_vectors(pair: &LocalPair, whitened: &ArrayView2<f64>) -> Array2<f64> {
    let (n, k) = whitened.dim();
    Array2::from_shape_fn((n, k), |(x, j)| pair.p0[x].sqrt() * whitened[[x, j]])
}

/// The error exponent achieved by deciding from the feature sample mean:
/// `(epsilon^2 / 8) * sum_i <xi_i, phi_1 - phi_2>^2` with the features
/// centered and whitened under the reference internally. Never exceeds
/// [`optimal_exponent`].
pub fn mismatched_exponent(pair: &LocalPair, f_table: &ArrayView2<f64>) -> Result<f64> {
    let whitened = whitened_features(pair, f_table)?;
    let xi = information_vectors(pair, &whitened.view());
    let (phi1, phi2) = pair.perturbation_vectors();
    let diff = &phi1 - &phi2;
    let k = xi.ncols();
    let mut total = 0.0;
    for j in 0..k {
        let inner: f64 = xi.column(j).dot(&diff);
        total += inner * inner;
    }
    Ok(pair.epsilon * pair.epsilon / 8.0 * total)
}

/// Outcome of a Monte Carlo error-rate run.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    /// Sample sizes simulated, in the order given.
    pub sizes: Vec<usize>,
    /// Empirical error probability at each size (both hypotheses pooled).
    pub error_rates: Vec<f64>,
    /// Sizes excluded from the slope fit because no errors were observed.
    pub dropped: Vec<usize>,
    /// Fitted decay rate of `-ln P_e` per sample.
    pub slope: f64,
    /// Fitted intercept of `-ln P_e` at size zero.
    pub intercept: f64,
    /// Trials per hypothesis per size.
    pub trials: usize,
}

/// Deterministic per-chunk stream key; mixes the run seed with the chunk
/// coordinates so chunks are independent and reproducible.
fn chunk_seed(seed: u64, size: usize, hypothesis: usize, chunk: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
    let mut s = mix(seed);
    s = mix(s ^ size as u64);
    s = mix(s ^ hypothesis as u64);
    mix(s ^ chunk as u64)
}

/// Multinomial counts via chained binomials.
fn sample_counts(
    rng: &mut rand_chacha::ChaCha8Rng,
    m: usize,
    probs: &Array1<f64>,
) -> Vec<u64> {
    let n = probs.len();
    let mut counts = vec![0u64; n];
    let mut remaining = m as u64;
    let mut rest = 1.0_f64;
    for x in 0..n - 1 {
        if remaining == 0 {
            break;
        }
        let p = if rest > 0.0 {
            (probs[x] / rest).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, p)
            .expect("clamped probability is valid")
            .sample(rng);
        counts[x] = draw;
        remaining -= draw;
        rest -= probs[x];
    }
    counts[n - 1] += remaining;
    counts
}

/// Simulates the nearest-class-mean decision rule on the feature sample mean
/// and fits the error decay slope.
///
/// For each size and each hypothesis, `trials` multinomial count vectors are
/// drawn and classified by comparing the feature sample mean against the two
/// exact class means in whitened coordinates. The fit regresses `-ln P_e` on
/// the sample size, always excluding the smallest size (where the
/// pre-exponential factor distorts the slope most) and any size with zero
/// observed errors. Results depend only on `(seed, sizes, trials)`, not on
/// thread count.
pub fn simulate_error_rate(
    pair: &LocalPair,
    f_table: &ArrayView2<f64>,
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<SimulationResult> {
    if sizes.len() < 3 {
        return Err(Error::InvalidParameter {
            message: format!("need at least 3 sample sizes for a slope fit, got {}", sizes.len()),
        });
    }
    if sizes.iter().any(|&m| m == 0) {
        return Err(Error::InvalidParameter {
            message: "sample sizes must be >= 1".into(),
        });
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            message: "sample sizes must be strictly increasing".into(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter {
            message: "trials must be >= 1".into(),
        });
    }
    let whitened = whitened_features(pair, f_table)?;
    let k = whitened.ncols();
    // Exact class means of the whitened features under each hypothesis.
    let class_mean = |p: &Array1<f64>| -> Vec<f64> {
        (0..k)
            .map(|j| (0..pair.alphabet()).map(|x| p[x] * whitened[[x, j]]).sum())
            .collect()
    };
    let mu = [class_mean(&pair.p1), class_mean(&pair.p2)];

    let mut error_rates = Vec::with_capacity(sizes.len());
    for &m in sizes {
        let mut total_errors = 0u64;
        for (hyp_index, p) in [(0usize, &pair.p1), (1usize, &pair.p2)] {
            let chunks: Vec<usize> = (0..trials.div_ceil(TRIAL_CHUNK)).collect();
            let errors: u64 = chunks
                .par_iter()
                .map(|&chunk| {
                    let lo = chunk * TRIAL_CHUNK;
                    let hi = ((chunk + 1) * TRIAL_CHUNK).min(trials);
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(chunk_seed(
                        seed, m, hyp_index, chunk,
                    ));
                    let mut errs = 0u64;
                    for _ in lo..hi {
                        let counts = sample_counts(&mut rng, m, p);
                        // Feature sample mean from the counts.
                        let mut mean = vec![0.0; k];
                        for (x, &c) in counts.iter().enumerate() {
                            if c == 0 {
                                continue;
                            }
                            let w = c as f64 / m as f64;
                            for j in 0..k {
                                mean[j] += w * whitened[[x, j]];
                            }
                        }
                        let dist_sq = |target: &[f64]| -> f64 {
                            mean.iter()
                                .zip(target.iter())
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum()
                        };
                        let decided = if dist_sq(&mu[0]) <= dist_sq(&mu[1]) { 0 } else { 1 };
                        if decided != hyp_index {
                            errs += 1;
                        }
                    }
                    errs
                })
                .sum();
            total_errors += errors;
        }
        error_rates.push(total_errors as f64 / (2.0 * trials as f64));
    }

    // Fit -ln(P_e) = slope * m + intercept over the retained sizes.
    let mut dropped = Vec::new();
    let mut points = Vec::new();
    for (i, (&m, &rate)) in sizes.iter().zip(error_rates.iter()).enumerate() {
        if rate == 0.0 {
            dropped.push(m);
            continue;
        }
        if i == 0 {
            continue;
        }
        points.push((m as f64, -rate.ln()));
    }
    if points.len() < 2 {
        return Err(Error::Degenerate {
            message: format!(
                "only {} usable sizes for the slope fit; increase trials or sizes",
                points.len()
            ),
        });
    }
    let n = points.len() as f64;
    let mean_x: f64 = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y: f64 = points.iter().map(|p| p.1).sum::<f64>() / n;
    let var_x: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let cov_xy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = cov_xy / var_x;
    let intercept = mean_y - slope * mean_x;
    Ok(SimulationResult {
        sizes: sizes.to_vec(),
        error_rates,
        dropped,
        slope,
        intercept,
        trials,
    })
}
