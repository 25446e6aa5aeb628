//! Block Lanczos with full reorthogonalization and Rayleigh-Ritz extraction.
//!
//! The Krylov basis is grown one vector at a time in block order
//! (`A q_0, A q_1, ...` for an initial random block). Every new vector is
//! orthogonalized twice against the whole basis; when a candidate collapses
//! (an invariant subspace was found) it is dropped, and once every candidate is
//! exhausted a fresh random vector is injected. The projected matrix
//! `G = Qᵀ A Q` is assembled from the same inner products, so Ritz pairs stay
//! exact even across restarts.

use super::matrix::SymOperator;
use super::{axpy, dense, dot, norm2};
use crate::error::{Error, Result};
use crate::rng::{self, SOLVER_SEED};

pub(crate) struct RitzPairs {
    /// Descending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Largest Ritz value magnitude: a lower bound on `‖A‖₂`.
    pub scale: f64,
}

struct Krylov<'a> {
    op: &'a dyn SymOperator,
    q: Vec<Vec<f64>>,
    aq: Vec<Vec<f64>>,
    /// `g[j][i] = q_iᵀ A q_j` for `i <= j`.
    g: Vec<Vec<f64>>,
    matvecs: usize,
    scale: f64,
}

impl Krylov<'_> {
    /// Orthogonalize `v` against the basis and append it; returns false when
    /// the candidate lies (numerically) in the span of the basis.
    fn push(&mut self, mut v: Vec<f64>) -> bool {
        let original = norm2(&v);
        if original == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for qi in &self.q {
                let c = dot(qi, &v);
                axpy(-c, qi, &mut v);
            }
        }
        let nv = norm2(&v);
        if nv <= 1e-10 * original.max(self.scale) {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut w = vec![0.0; v.len()];
        self.op.apply(&v, &mut w);
        self.matvecs += 1;
        self.scale = self.scale.max(norm2(&w));
        let mut col: Vec<f64> = self.q.iter().map(|qi| dot(qi, &w)).collect();
        col.push(dot(&v, &w));
        self.g.push(col);
        self.q.push(v);
        self.aq.push(w);
        true
    }

    fn ritz(&self, want: usize) -> Result<RitzPairs> {
        let m = self.q.len();
        let mut g = vec![0.0; m * m];
        for (j, col) in self.g.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                // Average the two computed copies of each off-diagonal entry.
                let x = if i < j {
                    0.5 * (x + dot(&self.q[j], &self.aq[i]))
                } else {
                    x
                };
                g[i * m + j] = x;
                g[j * m + i] = x;
            }
        }
        let (vals, vecs) = dense::eigh_row_major(g, m)?;
        let n = self.op.dim();
        let take = want.min(m);
        let mut out = RitzPairs {
            values: Vec::with_capacity(take),
            vectors: Vec::with_capacity(take),
            residuals: Vec::with_capacity(take),
            scale: vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
        };
        for t in 0..take {
            let col = m - 1 - t;
            let theta = vals[col];
            let mut u = vec![0.0; n];
            let mut au = vec![0.0; n];
            for k in 0..m {
                let y = vecs[k * m + col];
                axpy(y, &self.q[k], &mut u);
                axpy(y, &self.aq[k], &mut au);
            }
            axpy(-theta, &u, &mut au);
            out.values.push(theta);
            out.residuals.push(norm2(&au));
            out.vectors.push(u);
        }
        Ok(out)
    }
}

/// The `want` algebraically largest eigenpairs of `op`.
///
/// Converged when every requested Ritz pair has `‖Au − θu‖ ≤ tol·max|θ|`.
/// `max_iter` bounds the number of operator applications.
pub(crate) fn largest(
    op: &dyn SymOperator,
    want: usize,
    tol: f64,
    max_iter: usize,
) -> Result<RitzPairs> {
    let n = op.dim();
    debug_assert!(want >= 1 && want <= n);
    let block = want;
    let mut rng = rng::stream(SOLVER_SEED, "lanczos", &[n as u64, want as u64], 0);
    let mut random_vector = || -> Vec<f64> { (0..n).map(|_| rng::std_normal(&mut rng)).collect() };

    let mut k = Krylov {
        op,
        q: Vec::new(),
        aq: Vec::new(),
        g: Vec::new(),
        matvecs: 0,
        scale: 0.0,
    };
    while k.q.len() < block && k.matvecs < max_iter {
        k.push(random_vector());
    }

    let min_dim = n.min(2 * want + 10);
    let mut next_check = min_dim.max(block);
    let mut next_expand = 0;
    let mut best: Option<RitzPairs> = None;
    loop {
        let m = k.q.len();
        if m >= next_check || m == n {
            let pairs = k.ritz(want)?;
            let done = pairs.values.len() == want
                && pairs
                    .residuals
                    .iter()
                    .all(|&r| r <= tol * pairs.scale || r == 0.0);
            if done {
                return Ok(pairs);
            }
            best = Some(pairs);
            if m == n {
                break;
            }
            next_check = (m + 5).max((m as f64 * 1.15).ceil() as usize);
        }
        if k.matvecs >= max_iter {
            break;
        }
        if next_expand < k.q.len() {
            let cand = k.aq[next_expand].clone();
            next_expand += 1;
            k.push(cand);
        } else {
            // Invariant subspace: restart in its orthogonal complement.
            let v = random_vector();
            if !k.push(v) {
                break;
            }
        }
    }
    let residuals = match k.ritz(want) {
        Ok(p) if p.values.len() == want => p.residuals,
        _ => best.map(|b| b.residuals).unwrap_or_default(),
    };
    Err(Error::NonConvergence {
        iterations: k.matvecs,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;

    #[test]
    fn finds_repeated_top_eigenvalue() {
        // diag(5, 5, 4, 3, ..., ) stored sparse: the duplicate needs the block start.
        let n = 40;
        let mut t = vec![(0, 0, 5.0), (1, 1, 5.0)];
        for i in 2..n {
            t.push((i, i, 5.0 - i as f64 * 0.1));
        }
        let a = SymmetricMatrix::from_upper_triplets(n, &t).unwrap();
        let r = largest(&a, 3, 1e-10, 5 * n).unwrap();
        assert!((r.values[0] - 5.0).abs() < 1e-10);
        assert!((r.values[1] - 5.0).abs() < 1e-10);
        assert!((r.values[2] - 4.8).abs() < 1e-10);
    }

    #[test]
    fn zero_matrix() {
        let a = SymmetricMatrix::from_upper_triplets(10, &[]).unwrap();
        let r = largest(&a, 2, 1e-10, 50).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
    }

    #[test]
    fn reports_non_convergence() {
        let n = 200;
        let mut rng = crate::rng::seeded(4);
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                t.push((i, j, crate::rng::std_normal(&mut rng)));
            }
        }
        let a = SymmetricMatrix::from_upper_triplets(n, &t).unwrap();
        match largest(&a, 1, 1e-14, 8) {
            Err(Error::NonConvergence {
                iterations,
                residuals,
            }) => {
                assert!(iterations <= 8);
                assert_eq!(residuals.len(), 1);
                assert!(residuals[0] > 0.0);
            }
            _ => panic!("expected non-convergence"),
        }
    }
}
