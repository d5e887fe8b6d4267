//! Dense decompositions used by the statistical modules.
//!
//! Both factorizations are cyclic Jacobi iterations implemented in-crate: a
//! two-sided Jacobi eigensolver for symmetric matrices and a one-sided
//! Hestenes rotation scheme for the SVD. Jacobi methods trade asymptotic
//! speed for accuracy and simplicity; the matrices here are small (feature
//! dimension or alphabet size on a side), so robustness wins. Every SVD is
//! verified against its input before it is returned.
//!
//! Conventions pinned for the rest of the crate:
//!
//! * eigenvalues and singular values sorted descending, ties broken by the
//!   original index so identical inputs always produce identical output;
//! * vector signs canonicalized (first entry of absolute value above 1e-12
//!   made positive), so decompositions are reproducible run to run;
//! * pseudo-inverses cut eigenvalues relative to the largest one.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff used by pseudo-inverses when the caller does
/// not supply one.
pub const DEFAULT_PSEUDO_TOL: f64 = 1e-10;

/// Relative threshold below which a negative eigenvalue is treated as
/// roundoff rather than evidence the matrix is not PSD.
const PSD_SLACK: f64 = 1e-9;

/// Sweep budget for the Jacobi iterations. Cyclic Jacobi converges
/// quadratically once rotations get small; realistic inputs finish in under
/// ten sweeps, so the budget only guards against pathological inputs.
const JACOBI_MAX_SWEEPS: usize = 64;

/// The eigen iteration stops when the off-diagonal Frobenius mass falls
/// below this multiple of the input's Frobenius norm. That bound is also the
/// reconstruction error of `V diag(d) V^T`, so no separate check is needed.
const EIGEN_OFF_TOL: f64 = 1e-15;

/// Two columns count as numerically orthogonal when their inner product is
/// below this multiple of the product of their norms.
const ORTHO_TOL: f64 = 1e-14;

/// Relative Frobenius reconstruction error above which an SVD result is
/// rejected as inconsistent.
const SVD_VERIFY_TOL: f64 = 1e-10;

/// How a (near-)singular positive semidefinite matrix is inverted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseMode {
    /// Moore-Penrose inverse: eigenvalues at or below `rel_tol` times the
    /// largest eigenvalue are zeroed instead of inverted.
    Pseudo { rel_tol: f64 },
    /// Tikhonov ridge: invert `A + lambda * I`.
    Ridge { lambda: f64 },
}

impl Default for InverseMode {
    fn default() -> Self {
        InverseMode::Pseudo {
            rel_tol: DEFAULT_PSEUDO_TOL,
        }
    }
}

impl InverseMode {
    /// Validates the mode's parameter.
    pub fn validate(&self) -> Result<()> {
        match *self {
            InverseMode::Pseudo { rel_tol } => {
                if !(rel_tol.is_finite() && rel_tol >= 0.0) {
                    return Err(Error::InvalidParameter {
                        message: format!("pseudo-inverse tolerance must be >= 0, got {rel_tol}"),
                    });
                }
            }
            InverseMode::Ridge { lambda } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(Error::InvalidParameter {
                        message: format!(
                            "ridge lambda must be > 0 (use pseudo mode for an unregularized inverse), got {lambda}"
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Flips sign columns of `vectors` so the first entry with |v| > 1e-12 is
/// positive. Purely cosmetic, but makes decompositions reproducible.
fn canonicalize_signs(vectors: &mut Array2<f64>, paired: Option<&mut Array2<f64>>) {
    let (n, k) = (vectors.nrows(), vectors.ncols());
    let mut flip = vec![false; k];
    for j in 0..k {
        for i in 0..n {
            let v = vectors[[i, j]];
            if v.abs() > 1e-12 {
                flip[j] = v < 0.0;
                break;
            }
        }
    }
    for j in 0..k {
        if flip[j] {
            for i in 0..n {
                vectors[[i, j]] = -vectors[[i, j]];
            }
        }
    }
    if let Some(other) = paired {
        for j in 0..k.min(other.ncols()) {
            if flip[j] {
                for i in 0..other.nrows() {
                    other[[i, j]] = -other[[i, j]];
                }
            }
        }
    }
}

/// Stable root of `t^2 + 2*theta*t - 1 = 0`; the rotation tangent that
/// zeroes the targeted off-diagonal entry while keeping |t| <= 1.
fn rotation_tangent(theta: f64) -> f64 {
    if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
    }
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            acc += 2.0 * a[[p, q]] * a[[p, q]];
        }
    }
    acc.sqrt()
}

/// Cyclic two-sided Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns unsorted eigenvalues with their eigenvectors in the columns of an
/// orthogonal matrix. Each rotation zeroes one off-diagonal pair; updates
/// touch symmetric entries with identical arithmetic, so the iterate stays
/// exactly symmetric. On return the off-diagonal mass is below
/// `EIGEN_OFF_TOL` times the input norm, which directly bounds
/// `||A - V diag(d) V^T||_F`.
fn jacobi_eigen(mut a: Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    let mut v = Array2::<f64>::eye(n);
    let norm: f64 = a.iter().map(|e| e * e).sum::<f64>().sqrt();
    if n < 2 || norm == 0.0 {
        return Ok((a.diag().to_owned(), v));
    }
    let mut sweep = 0;
    let mut off = off_diagonal_norm(&a);
    while off > EIGEN_OFF_TOL * norm {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::NonConvergence {
                iterations: sweep,
                last_objective: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = rotation_tangent(theta);
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                // The rotation was chosen to zero this pair; writing the
                // zeros removes the roundoff residue.
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
        sweep += 1;
        off = off_diagonal_norm(&a);
    }
    Ok((a.diag().to_owned(), v))
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues, largest first.
    pub values: Array1<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: Array2<f64>,
}

/// Decomposes `0.5 * (A + A^T)`; the symmetrization makes behavior
/// well-defined for matrices that are symmetric only up to roundoff.
pub fn symmetric_eigen(a: &ArrayView2<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Shape {
            context: "symmetric_eigen".into(),
            message: format!("matrix is {}x{}, expected square", n, a.ncols()),
        });
    }
    let sym = Array2::from_shape_fn((n, n), |(r, c)| 0.5 * (a[[r, c]] + a[[c, r]]));
    let (d, vecs) = jacobi_eigen(sym)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| d[i]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[[r, dst]] = vecs[[r, src]];
        }
    }
    canonicalize_signs(&mut vectors, None);
    Ok(SymEigen { values, vectors })
}

/// Fills each zero column of `u` (marked by `sigma[j] == 0`) with a unit
/// vector orthogonal to every other column, so `u` is orthonormal even when
/// the input was rank-deficient. Candidates are standard basis vectors; the
/// one with the largest residual after projection is chosen, which is
/// deterministic and always has positive norm because fewer than `m` columns
/// are filled.
fn complete_zero_columns(u: &mut Array2<f64>, sigma: &Array1<f64>) {
    let (m, n) = u.dim();
    for j in 0..n {
        if sigma[j] != 0.0 {
            continue;
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for cand in 0..m {
            let mut r = vec![0.0; m];
            r[cand] = 1.0;
            for col in 0..n {
                if col == j || (sigma[col] == 0.0 && col > j) {
                    continue;
                }
                let dot: f64 = (0..m).map(|k| u[[k, col]] * r[k]).sum();
                for k in 0..m {
                    r[k] -= dot * u[[k, col]];
                }
            }
            let norm_sq: f64 = r.iter().map(|e| e * e).sum();
            if best.as_ref().is_none_or(|(b, _)| norm_sq > *b) {
                best = Some((norm_sq, r));
            }
        }
        let (norm_sq, r) = best.expect("basis candidates are nonempty");
        let norm = norm_sq.sqrt();
        for k in 0..m {
            u[[k, j]] = r[k] / norm;
        }
    }
}

/// One-sided Hestenes-Jacobi SVD of a tall-or-square matrix (rows >= cols).
///
/// Right rotations are applied until all column pairs are mutually
/// orthogonal; the column norms are then the singular values, the normalized
/// columns the left vectors, and the accumulated rotations the right
/// vectors. The reconstruction is verified before returning.
fn hestenes_svd_tall(a: Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (m, n) = a.dim();
    let mut w = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let mut sweep = 0;
    loop {
        let mut max_cos = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for k in 0..m {
                    let wp = w[[k, p]];
                    let wq = w[[k, q]];
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                let denom = (alpha * beta).sqrt();
                if denom == 0.0 || gamma.abs() <= ORTHO_TOL * denom {
                    continue;
                }
                max_cos = max_cos.max(gamma.abs() / denom);
                let t = rotation_tangent((beta - alpha) / (2.0 * gamma));
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..m {
                    let wp = w[[k, p]];
                    let wq = w[[k, q]];
                    w[[k, p]] = c * wp - s * wq;
                    w[[k, q]] = s * wp + c * wq;
                }
                for k in 0..n {
                    let vp = v[[k, p]];
                    let vq = v[[k, q]];
                    v[[k, p]] = c * vp - s * vq;
                    v[[k, q]] = s * vp + c * vq;
                }
            }
        }
        if max_cos == 0.0 {
            break;
        }
        sweep += 1;
        if sweep > JACOBI_MAX_SWEEPS {
            return Err(Error::NonConvergence {
                iterations: sweep,
                last_objective: max_cos,
            });
        }
    }
    let mut sigma = Array1::<f64>::zeros(n);
    let mut u = Array2::<f64>::zeros((m, n));
    for j in 0..n {
        let norm: f64 = w.column(j).iter().map(|e| e * e).sum::<f64>().sqrt();
        sigma[j] = norm;
        if norm > 0.0 {
            for k in 0..m {
                u[[k, j]] = w[[k, j]] / norm;
            }
        }
    }
    complete_zero_columns(&mut u, &sigma);
    let norm: f64 = a.iter().map(|e| e * e).sum::<f64>().sqrt();
    let mut err_sq = 0.0;
    for r in 0..m {
        for c in 0..n {
            let mut recon = 0.0;
            for j in 0..n {
                recon += u[[r, j]] * sigma[j] * v[[c, j]];
            }
            let d = a[[r, c]] - recon;
            err_sq += d * d;
        }
    }
    if err_sq.sqrt() > SVD_VERIFY_TOL * (norm + 1e-30) {
        return Err(Error::NonConvergence {
            iterations: sweep,
            last_objective: err_sq.sqrt(),
        });
    }
    Ok((u, sigma, v))
}

/// Thin SVD with singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, one column per singular value.
    pub u: Array2<f64>,
    /// Singular values, largest first. All of them, including (near-)zeros.
    pub sigma: Array1<f64>,
    /// Right singular vectors, one column per singular value.
    pub v: Array2<f64>,
}

pub fn svd(a: &ArrayView2<f64>) -> Result<Svd> {
    let (rows, cols) = a.dim();
    // The kernel wants rows >= cols; a wide input is decomposed through its
    // transpose, which swaps the roles of u and v.
    let (mut u, sigma, mut v) = if rows >= cols {
        hestenes_svd_tall(a.to_owned())?
    } else {
        let (ut, sigma, vt) = hestenes_svd_tall(a.t().to_owned())?;
        (vt, sigma, ut)
    };
    let p = sigma.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let sigma = Array1::from_iter(order.iter().map(|&i| sigma[i]));
    let mut u_sorted = Array2::zeros(u.dim());
    let mut v_sorted = Array2::zeros(v.dim());
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..u.nrows() {
            u_sorted[[r, dst]] = u[[r, src]];
        }
        for r in 0..v.nrows() {
            v_sorted[[r, dst]] = v[[r, src]];
        }
    }
    u = u_sorted;
    v = v_sorted;
    // Sign convention anchored on the right vectors; left vectors follow so
    // that u * diag(sigma) * v^T still reconstructs the input.
    canonicalize_signs(&mut v, Some(&mut u));
    Ok(Svd { u, sigma, v })
}

/// Result of inverting a PSD matrix under an [`InverseMode`].
#[derive(Debug, Clone)]
pub struct RegularizedInverse {
    /// The (pseudo-)inverse matrix.
    pub matrix: Array2<f64>,
    /// Number of eigenvalues above the default relative cutoff; a rank
    /// estimate of the input, independent of the inversion mode.
    pub effective_rank: usize,
    /// The mode that produced this inverse.
    pub mode: InverseMode,
}

fn check_psd(values: &Array1<f64>) -> Result<f64> {
    let lambda_max = values.iter().cloned().fold(0.0_f64, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    // Absolute floor keeps an exactly-zero matrix (or one with eigenvalues at
    // the level of underflow noise) from being rejected.
    if min < -(PSD_SLACK * lambda_max + 1e-30) {
        return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
    }
    Ok(lambda_max)
}

fn spectral_map(
    eig: &SymEigen,
    lambda_max: f64,
    mode: InverseMode,
    f: impl Fn(f64) -> f64,
) -> (Array2<f64>, usize) {
    let n = eig.values.len();
    let effective_rank = eig
        .values
        .iter()
        .filter(|&&v| v > DEFAULT_PSEUDO_TOL * lambda_max && v > 0.0)
        .count();
    let mapped: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| match mode {
            InverseMode::Pseudo { rel_tol } => {
                if v > rel_tol * lambda_max && v > 0.0 {
                    f(v)
                } else {
                    0.0
                }
            }
            InverseMode::Ridge { lambda } => f(v.max(0.0) + lambda),
        })
        .collect();
    let mut out = Array2::zeros((n, n));
    for r in 0..n {
        for c in r..n {
            let mut acc = 0.0;
            for (j, &d) in mapped.iter().enumerate() {
                if d != 0.0 {
                    acc += eig.vectors[[r, j]] * d * eig.vectors[[c, j]];
                }
            }
            out[[r, c]] = acc;
            out[[c, r]] = acc;
        }
    }
    (out, effective_rank)
}

/// Inverts a symmetric PSD matrix under the given mode.
///
/// Rejects inputs whose smallest eigenvalue is below `-1e-9` relative to the
/// largest as not positive semidefinite. A zero matrix pseudo-inverts to the
/// zero matrix. Ridge mode inverts `A + lambda I` with small negative
/// eigenvalues clamped to zero first.
pub fn regularized_inverse(a: &ArrayView2<f64>, mode: InverseMode) -> Result<RegularizedInverse> {
    mode.validate()?;
    let eig = symmetric_eigen(a)?;
    let lambda_max = check_psd(&eig.values)?;
    let (matrix, effective_rank) = spectral_map(&eig, lambda_max, mode, |v| 1.0 / v);
    Ok(RegularizedInverse {
        matrix,
        effective_rank,
        mode,
    })
}

/// Inverse square root of a symmetric PSD matrix (pseudo: null directions
/// map to zero). Used for whitening.
pub fn inverse_sqrt(a: &ArrayView2<f64>, mode: InverseMode) -> Result<Array2<f64>> {
    mode.validate()?;
    let eig = symmetric_eigen(a)?;
    let lambda_max = check_psd(&eig.values)?;
    let (matrix, _) = spectral_map(&eig, lambda_max, mode, |v| 1.0 / v.sqrt());
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_matches_hand_diagonalization() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1 with vectors (1,1)/sqrt2, (1,-1)/sqrt2.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let eig = symmetric_eigen(&a.view()).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((eig.vectors[[0, 0]] - s).abs() < 1e-12);
        assert!((eig.vectors[[1, 0]] - s).abs() < 1e-12);
        assert!((eig.vectors[[0, 1]] - s).abs() < 1e-12);
        assert!((eig.vectors[[1, 1]] + s).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_random_symmetric_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &n in &[2usize, 3, 5, 8, 13] {
            let raw = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
            let a = &raw + &raw.t();
            let eig = symmetric_eigen(&a.view()).unwrap();
            let mut recon = Array2::<f64>::zeros((n, n));
            for j in 0..n {
                for r in 0..n {
                    for c in 0..n {
                        recon[[r, c]] += eig.vectors[[r, j]] * eig.values[j] * eig.vectors[[c, j]];
                    }
                }
            }
            let err: f64 = (&a - &recon).iter().map(|e| e * e).sum::<f64>().sqrt();
            assert!(err < 1e-12, "{n}x{n} reconstruction error {err}");
            let gram = eig.vectors.t().dot(&eig.vectors);
            let ortho: f64 = (&gram - &Array2::<f64>::eye(n))
                .iter()
                .map(|e| e * e)
                .sum::<f64>()
                .sqrt();
            assert!(ortho < 1e-13, "eigenvector orthonormality error {ortho}");
        }
    }

    #[test]
    fn eigen_of_repeated_values_keeps_index_order() {
        let a = array![[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        let eig = symmetric_eigen(&a.view()).unwrap();
        assert_eq!(eig.values.to_vec(), vec![2.0, 2.0, 1.0]);
        assert_eq!(eig.vectors, Array2::eye(3));
    }

    #[test]
    fn svd_reconstructs_input() {
        let a = array![[1.0, 2.0, 0.5], [-0.3, 0.4, 1.1]];
        let d = svd(&a.view()).unwrap();
        let mut recon = Array2::<f64>::zeros((2, 3));
        for j in 0..d.sigma.len() {
            for r in 0..2 {
                for c in 0..3 {
                    recon[[r, c]] += d.u[[r, j]] * d.sigma[j] * d.v[[c, j]];
                }
            }
        }
        let err: f64 = (&a - &recon).iter().map(|e| e * e).sum::<f64>().sqrt();
        assert!(err < 1e-12, "reconstruction error {err}");
        assert!(d.sigma.windows(2).into_iter().all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_reconstructs_random_tall_and_wide_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for &(rows, cols) in &[(5usize, 4usize), (4, 5), (6, 2), (2, 6), (3, 3)] {
            for _ in 0..5 {
                let a = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0));
                let d = svd(&a.view()).unwrap();
                let mut recon = Array2::<f64>::zeros((rows, cols));
                for j in 0..d.sigma.len() {
                    for r in 0..rows {
                        for c in 0..cols {
                            recon[[r, c]] += d.u[[r, j]] * d.sigma[j] * d.v[[c, j]];
                        }
                    }
                }
                let err: f64 = (&a - &recon).iter().map(|e| e * e).sum::<f64>().sqrt();
                assert!(err < 1e-10, "{rows}x{cols} reconstruction error {err}");
            }
        }
    }

    #[test]
    fn svd_of_rank_deficient_matrix_completes_left_basis() {
        // Second column is zero: sigma[1] = 0 and u's second column must
        // still be a unit vector orthogonal to the first.
        let a = array![[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let d = svd(&a.view()).unwrap();
        assert!((d.sigma[0] - 14.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(d.sigma[1], 0.0);
        let n0: f64 = d.u.column(0).iter().map(|e| e * e).sum();
        let n1: f64 = d.u.column(1).iter().map(|e| e * e).sum();
        let dot: f64 = (0..3).map(|k| d.u[[k, 0]] * d.u[[k, 1]]).sum();
        assert!((n0 - 1.0).abs() < 1e-12);
        assert!((n1 - 1.0).abs() < 1e-12);
        assert!(dot.abs() < 1e-12, "completed column not orthogonal: {dot}");
    }

    #[test]
    fn pseudo_inverse_of_singular_matrix() {
        // Rank-1 matrix [[1,1],[1,1]]: pinv = [[0.25,0.25],[0.25,0.25]].
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let inv = regularized_inverse(&a.view(), InverseMode::default()).unwrap();
        assert_eq!(inv.effective_rank, 1);
        for &v in inv.matrix.iter() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_pseudo_inverts_to_zero() {
        let a = Array2::<f64>::zeros((3, 3));
        let inv = regularized_inverse(&a.view(), InverseMode::default()).unwrap();
        assert_eq!(inv.effective_rank, 0);
        assert!(inv.matrix.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ridge_matches_closed_form() {
        // (A + lambda I)^-1 for A = diag(2, 0), lambda = 0.5: diag(0.4, 2).
        let a = array![[2.0, 0.0], [0.0, 0.0]];
        let inv = regularized_inverse(&a.view(), InverseMode::Ridge { lambda: 0.5 }).unwrap();
        assert!((inv.matrix[[0, 0]] - 0.4).abs() < 1e-12);
        assert!((inv.matrix[[1, 1]] - 2.0).abs() < 1e-12);
        assert!(inv.matrix[[0, 1]].abs() < 1e-12);
    }

    #[test]
    fn non_psd_input_rejected() {
        let a = array![[1.0, 0.0], [0.0, -1.0]];
        let err = regularized_inverse(&a.view(), InverseMode::default()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveSemidefinite { .. }));
    }

    #[test]
    fn inverse_sqrt_whitens() {
        let a = array![[4.0, 0.0], [0.0, 9.0]];
        let w = inverse_sqrt(&a.view(), InverseMode::default()).unwrap();
        assert!((w[[0, 0]] - 0.5).abs() < 1e-12);
        assert!((w[[1, 1]] - 1.0 / 3.0).abs() < 1e-12);
    }
}
