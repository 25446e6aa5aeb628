use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, truncated_svd, EigenOptions, RectMatrix};
use crate::rng::{self, Stream};

/// A low-rank signal `M* = U* Σ* V*ᵀ` with its exact factorization.
#[derive(Debug, Clone)]
pub struct LowRankSignal {
    m_star: Array2<f64>,
    u: Array2<f64>,
    sigma: Vec<f64>,
    v: Array2<f64>,
}

/// Thin QR by twice-iterated Gram-Schmidt: returns `(Q, R)` with `A = QR`.
fn thin_qr(a: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let (n, r) = a.dim();
    let mut q = a.to_owned();
    let mut rr = Array2::zeros((r, r));
    for j in 0..r {
        for _ in 0..2 {
            for i in 0..j {
                let c = q.column(i).dot(&q.column(j));
                rr[(i, j)] += c;
                let qi = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-c, &qi);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm <= 1e-14 * (n as f64).sqrt() {
            return Err(Error::invalid("factor matrix is rank deficient"));
        }
        rr[(j, j)] = norm;
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    Ok((q, rr))
}

impl LowRankSignal {
    /// `M* = M_L M_Rᵀ`, factorized exactly through thin QR of both factors.
    pub fn from_factors(m_l: ArrayView2<f64>, m_r: ArrayView2<f64>) -> Result<Self> {
        if m_l.ncols() != m_r.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m_l.ncols(),
                found: m_r.ncols(),
            });
        }
        let (ql, rl) = thin_qr(m_l)?;
        let (qr, rr) = thin_qr(m_r)?;
        let core = rl.dot(&rr.t());
        let (cu, s, cv) = jacobi_svd(core.view())?;
        let mut u = ql.dot(&cu);
        let mut v = qr.dot(&cv);
        align_signs(&mut u, &mut v);
        Ok(LowRankSignal {
            m_star: m_l.dot(&m_r.t()),
            u,
            sigma: s.to_vec(),
            v,
        })
    }

    /// Rank-`r` signal from an explicit matrix via truncated SVD. The matrix is
    /// stored as given, so it should have rank `r`.
    pub fn from_matrix(m: Array2<f64>, r: usize) -> Result<Self> {
        let svd = truncated_svd(
            &RectMatrix::from_dense(m.clone()),
            r,
            &EigenOptions::default(),
        )?;
        let mut u = svd.left.basis().to_owned();
        let mut v = svd.right.basis().to_owned();
        align_signs(&mut u, &mut v);
        Ok(LowRankSignal {
            m_star: m,
            u,
            sigma: svd.values,
            v,
        })
    }

    pub fn m_star(&self) -> ArrayView2<'_, f64> {
        self.m_star.view()
    }

    pub fn u(&self) -> ArrayView2<'_, f64> {
        self.u.view()
    }

    pub fn v(&self) -> ArrayView2<'_, f64> {
        self.v.view()
    }

    /// Singular values, descending.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.m_star.dim()
    }

    pub fn max_abs(&self) -> f64 {
        self.m_star.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// Make the largest-magnitude entry of each `u_k` positive, flipping `v_k` along.
fn align_signs(u: &mut Array2<f64>, v: &mut Array2<f64>) {
    for k in 0..u.ncols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &x in u.column(k).iter() {
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            u.column_mut(k).mapv_inplace(|x| -x);
            v.column_mut(k).mapv_inplace(|x| -x);
        }
    }
}

/// Standard deviation of the factor entries in the planted completion
/// experiment: the factors have variance `20/√n`.
pub fn nmc_entry_scale(n: usize) -> f64 {
    (20.0 / (n as f64).sqrt()).sqrt()
}

/// `M_L M_Rᵀ` with `M_L, M_R ∈ R^{n×r}` having i.i.d. `N(0, scale²)` entries.
pub fn planted_signal(n: usize, r: usize, scale: f64, rng: &mut Stream) -> Result<LowRankSignal> {
    if r == 0 || r > n {
        return Err(Error::invalid(format!("rank {r} must lie in 1..={n}")));
    }
    let m_l = Array2::from_shape_fn((n, r), |_| scale * rng::std_normal(rng));
    let m_r = Array2::from_shape_fn((n, r), |_| scale * rng::std_normal(rng));
    LowRankSignal::from_factors(m_l.view(), m_r.view())
}

/// Dense planted rank-`r` matrix `M_L M_Rᵀ`.
pub fn planted_lowrank(n: usize, r: usize, scale: f64, seed: u64) -> Result<RectMatrix> {
    let sig = planted_signal(n, r, scale, &mut rng::seeded(seed))?;
    Ok(RectMatrix::from_dense(sig.m_star))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization_is_exact() {
        let sig = planted_signal(60, 4, 1.0, &mut rng::seeded(1)).unwrap();
        let mut us = sig.u().to_owned();
        for (k, s) in sig.sigma().iter().enumerate() {
            us.column_mut(k).mapv_inplace(|x| x * s);
        }
        let rec = us.dot(&sig.v().t());
        let err = (&rec - &sig.m_star())
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(err < 1e-12 * sig.max_abs());
        let g = sig.u().t().dot(&sig.u());
        assert!((&g - &Array2::<f64>::eye(4))
            .iter()
            .all(|x| x.abs() < 1e-12));
        let g = sig.v().t().dot(&sig.v());
        assert!((&g - &Array2::<f64>::eye(4))
            .iter()
            .all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn planted_rank_is_exact() {
        let n = 500;
        let m = planted_lowrank(n, 5, nmc_entry_scale(n), 2).unwrap();
        let svd = truncated_svd(&m, 6, &EigenOptions::default()).unwrap();
        assert!(svd.values[5] / svd.values[0] < 1e-10);
    }

    #[test]
    fn full_rank_identity_factors() {
        let eye = Array2::<f64>::eye(5);
        let sig = LowRankSignal::from_factors(eye.view(), eye.view()).unwrap();
        assert_eq!(sig.rank(), 5);
        assert!(sig.sigma().iter().all(|s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn frobenius_moment() {
        // E‖M_L M_Rᵀ‖_F² = n² r scale⁴.
        let (n, r, scale) = (40, 3, 0.7);
        let draws = 100;
        let mut total = 0.0;
        let mut rng = rng::seeded(7);
        for _ in 0..draws {
            let s = planted_signal(n, r, scale, &mut rng).unwrap();
            total += s.m_star().iter().map(|x| x * x).sum::<f64>();
        }
        let mean = total / draws as f64;
        let expected = (n * n * r) as f64 * scale.powi(4);
        assert!((mean / expected - 1.0).abs() < 0.1, "{mean} vs {expected}");
    }
}
