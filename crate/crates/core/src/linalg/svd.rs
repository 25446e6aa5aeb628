use ndarray::{s, Array1, Array2, ArrayView2};

use super::eigen::{top_eigenpairs_op, EigenOptions, SpectralSubspace};
use super::matrix::{Dilation, RectMatrix};
use crate::error::{Error, Result};

/// Top-`r` singular triplets of a rectangular matrix.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub left: SpectralSubspace,
    pub right: SpectralSubspace,
    /// Singular values, descending.
    pub values: Vec<f64>,
    /// Set when `σ_r < tol · σ_1`; the trailing factors are then not unique.
    pub rank_deficient: bool,
}

impl TruncatedSvd {
    /// `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut us = self.left.basis().to_owned();
        for (k, s) in self.values.iter().enumerate() {
            us.column_mut(k).mapv_inplace(|x| x * s);
        }
        us.dot(&self.right.basis().t())
    }
}

/// Truncated SVD through the symmetric dilation `[[0, M], [Mᵀ, 0]]`, whose
/// top eigenvectors are `(u_k; v_k)/√2` with eigenvalues `σ_k`.
pub fn truncated_svd(m: &RectMatrix, r: usize, opts: &EigenOptions) -> Result<TruncatedSvd> {
    let (n1, n2) = m.shape();
    if r == 0 || r > n1.min(n2) {
        return Err(Error::invalid(format!(
            "rank {r} must lie in 1..={}",
            n1.min(n2)
        )));
    }
    let dil = Dilation::new(m);
    let sub = top_eigenpairs_op(&dil, r, 0, opts)?;
    let root2 = std::f64::consts::SQRT_2;
    let basis = sub.basis();
    let u = basis.slice(s![..n1, ..]).mapv(|x| x * root2);
    let v = basis.slice(s![n1.., ..]).mapv(|x| x * root2);
    let values = sub.values().to_vec();
    let sigma1 = values[0];
    let rank_deficient = sigma1 <= 0.0 || values[r - 1] < opts.tol * sigma1;
    let residuals = sub.residuals().to_vec();
    Ok(TruncatedSvd {
        left: SpectralSubspace::new_unchecked(values.clone(), u, 0, residuals.clone()),
        right: SpectralSubspace::new_unchecked(values.clone(), v, 0, residuals),
        values,
        rank_deficient,
    })
}

/// Full SVD of a small dense matrix by one-sided (Hestenes) Jacobi rotations.
///
/// Returns `(U, σ, V)` with `A = U diag(σ) Vᵀ`, `σ` descending, for an
/// `m × n` input with `m >= n`. Columns of `U` for zero singular values are
/// completed to an orthonormal set.
pub fn jacobi_svd(a: ArrayView2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (m, n) = a.dim();
    if m < n {
        return Err(Error::invalid(
            "jacobi_svd needs at least as many rows as columns",
        ));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let mut u = a.to_owned();
    let mut v = Array2::<f64>::eye(n);
    const MAX_SWEEPS: usize = 60;
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = u.column(p).dot(&u.column(p));
                let beta = u.column(q).dot(&u.column(q));
                let gamma = u.column(p).dot(&u.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut u, &mut v] {
                    for row in 0..mat.nrows() {
                        let xp = mat[(row, p)];
                        let xq = mat[(row, q)];
                        mat[(row, p)] = c * xp - sn * xq;
                        mat[(row, q)] = sn * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: MAX_SWEEPS,
            residuals: Vec::new(),
        });
    }

    let sigma: Vec<f64> = (0..n)
        .map(|j| u.column(j).dot(&u.column(j)).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let scale = sigma.iter().fold(0.0f64, |x, &y| x.max(y));
    let mut uo = Array2::zeros((m, n));
    let mut vo = Array2::zeros((n, n));
    let mut so = Array1::zeros(n);
    for (k, &j) in order.iter().enumerate() {
        so[k] = sigma[j];
        vo.column_mut(k).assign(&v.column(j));
        if sigma[j] > f64::EPSILON * scale.max(f64::MIN_POSITIVE) * m as f64 {
            uo.column_mut(k).assign(&u.column(j).mapv(|x| x / sigma[j]));
        }
    }
    complete_orthonormal(&mut uo, &so, scale * f64::EPSILON * m as f64);
    Ok((uo, so, vo))
}

/// Replace columns whose singular value is below `thresh` by unit vectors
/// orthogonal to everything else.
fn complete_orthonormal(u: &mut Array2<f64>, sigma: &Array1<f64>, thresh: f64) {
    let (m, n) = u.dim();
    for k in 0..n {
        if sigma[k] > thresh && sigma[k] > 0.0 {
            continue;
        }
        for e in 0..m {
            let mut cand = Array1::<f64>::zeros(m);
            cand[e] = 1.0;
            for _ in 0..2 {
                for j in 0..n {
                    if j == k {
                        continue;
                    }
                    let c = u.column(j).dot(&cand);
                    cand.scaled_add(-c, &u.column(j));
                }
            }
            let norm = cand.dot(&cand).sqrt();
            if norm > 0.5 {
                u.column_mut(k).assign(&(cand / norm));
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense, SymmetricMatrix};
    use crate::rng;

    fn random_rect(n1: usize, n2: usize, seed: u64) -> Array2<f64> {
        let mut r = rng::seeded(seed);
        Array2::from_shape_fn((n1, n2), |_| rng::std_normal(&mut r))
    }

    #[test]
    fn diagonal_example() {
        let m = RectMatrix::from_dense(ndarray::array![[5.0, 0.0], [0.0, 2.0]]);
        let svd = truncated_svd(&m, 2, &EigenOptions::default()).unwrap();
        assert!((svd.values[0] - 5.0).abs() < 1e-12);
        assert!((svd.values[1] - 2.0).abs() < 1e-12);
        assert!((svd.left.basis()[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((svd.right.basis()[(1, 1)].abs() - 1.0).abs() < 1e-12);
        assert!(!svd.rank_deficient);
    }

    #[test]
    fn singular_values_match_gram_oracle() {
        let a = random_rect(20, 30, 5);
        let svd = truncated_svd(
            &RectMatrix::from_dense(a.clone()),
            5,
            &EigenOptions::default(),
        )
        .unwrap();
        let gram = a.t().dot(&a);
        let (ev, _) =
            dense::symmetric_eigen(&SymmetricMatrix::from_dense_lower(gram.view()).unwrap())
                .unwrap();
        for k in 0..5 {
            assert!((svd.values[k] - ev[k].max(0.0).sqrt()).abs() < 1e-10);
        }
        let best: f64 = ev[5..].iter().map(|x| x.max(0.0)).sum::<f64>().sqrt();
        let err = (&svd.reconstruct() - &a).mapv(|x| x * x).sum().sqrt();
        assert!((err - best).abs() < 1e-8, "{err} vs {best}");
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let a = ndarray::array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let svd = truncated_svd(&RectMatrix::from_dense(a), 2, &EigenOptions::default()).unwrap();
        assert!(svd.rank_deficient);
    }

    #[test]
    fn jacobi_reconstructs() {
        for seed in 0..5 {
            let a = random_rect(4, 4, seed);
            let (u, s, v) = jacobi_svd(a.view()).unwrap();
            let rec = u.dot(&Array2::from_diag(&s)).dot(&v.t());
            assert!((&rec - &a).iter().all(|x| x.abs() < 1e-12));
            assert!(s.windows(2).into_iter().all(|w| w[0] >= w[1]));
            let ut = u.t().dot(&u);
            assert!((&ut - &Array2::<f64>::eye(4))
                .iter()
                .all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn jacobi_completes_null_columns() {
        let a = ndarray::array![[1.0, 0.0], [0.0, 0.0]];
        let (u, s, _) = jacobi_svd(a.view()).unwrap();
        assert_eq!(s[1], 0.0);
        let ut = u.t().dot(&u);
        assert!((&ut - &Array2::<f64>::eye(2))
            .iter()
            .all(|x| x.abs() < 1e-12));
    }
}
