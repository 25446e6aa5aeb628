use ndarray::{Array2, ArrayView1, ArrayView2};

use super::dense::{self, normalize_sign};
use super::lanczos;
use super::matrix::{SymOperator, SymmetricMatrix};
use crate::error::{Error, Result};

/// Largest dimension solved by the dense path under [`Solver::Auto`].
pub const DENSE_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Sparse inputs use Lanczos; dense inputs up to [`DENSE_LIMIT`] use the
    /// dense solver.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    /// Operator applications allowed; `None` means `5·n`.
    pub max_iter: Option<usize>,
    pub solver: Solver,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_iter: None,
            solver: Solver::Auto,
        }
    }
}

/// A window of eigenpairs `(λ_{s+1}, u_{s+1}), …, (λ_{s+r}, u_{s+r})`.
#[derive(Debug, Clone)]
pub struct SpectralSubspace {
    values: Vec<f64>,
    basis: Array2<f64>,
    window_start: usize,
    residuals: Vec<f64>,
    ties: Vec<usize>,
}

impl SpectralSubspace {
    pub(crate) fn new_unchecked(
        values: Vec<f64>,
        basis: Array2<f64>,
        window_start: usize,
        residuals: Vec<f64>,
    ) -> Self {
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let ties = values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0] - w[1]).abs() <= 1e-10 * scale)
            .map(|(i, _)| i)
            .collect();
        SpectralSubspace {
            values,
            basis,
            window_start,
            residuals,
            ties,
        }
    }

    /// Build a subspace from known eigenpairs (e.g. a closed-form population
    /// model). Values must be descending and the basis column-orthonormal.
    pub fn from_parts(values: Vec<f64>, basis: Array2<f64>, window_start: usize) -> Result<Self> {
        if basis.ncols() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: basis.ncols(),
            });
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("eigenvalues must be in descending order"));
        }
        let gram = basis.t().dot(&basis);
        for ((i, j), g) in gram.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            if (g - target).abs() > 1e-8 {
                return Err(Error::invalid("basis columns are not orthonormal"));
            }
        }
        let r = values.len();
        Ok(Self::new_unchecked(
            values,
            basis,
            window_start,
            vec![0.0; r],
        ))
    }

    /// Same eigenvalues with a different basis of the same span, e.g. after
    /// flipping column signs.
    pub fn with_basis(&self, basis: Array2<f64>) -> Result<Self> {
        if basis.dim() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.len(),
                found: basis.len(),
            });
        }
        Ok(SpectralSubspace {
            basis,
            ..self.clone()
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis(&self) -> ArrayView2<'_, f64> {
        self.basis.view()
    }

    pub fn column(&self, k: usize) -> ArrayView1<'_, f64> {
        self.basis.column(k)
    }

    pub fn window_start(&self) -> usize {
        self.window_start
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Positions `i` where `values[i]` and `values[i + 1]` coincide numerically.
    pub fn ties(&self) -> &[usize] {
        &self.ties
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }
}

fn check_window(n: usize, k: usize, window_start: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if window_start + k > n {
        return Err(Error::invalid(format!(
            "window {}..{} exceeds dimension {n}",
            window_start + 1,
            window_start + k
        )));
    }
    Ok(())
}

fn residual(op: &dyn SymOperator, lambda: f64, v: ArrayView1<f64>) -> f64 {
    let x = v.to_vec();
    let mut y = vec![0.0; x.len()];
    op.apply(&x, &mut y);
    y.iter()
        .zip(&x)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn dense_window(
    a: &SymmetricMatrix,
    op: &dyn SymOperator,
    k: usize,
    window_start: usize,
) -> Result<SpectralSubspace> {
    let (vals, vecs) = dense::symmetric_eigen(a)?;
    let range = window_start..window_start + k;
    let values = vals[range.clone()].to_vec();
    let basis = vecs.slice(ndarray::s![.., range]).to_owned();
    let residuals = values
        .iter()
        .enumerate()
        .map(|(c, &l)| residual(op, l, basis.column(c)))
        .collect();
    Ok(SpectralSubspace::new_unchecked(
        values,
        basis,
        window_start,
        residuals,
    ))
}

fn lanczos_window(
    op: &dyn SymOperator,
    k: usize,
    window_start: usize,
    opts: &EigenOptions,
) -> Result<SpectralSubspace> {
    let n = op.dim();
    let want = window_start + k;
    let max_iter = opts.max_iter.unwrap_or(5 * n).max(1);
    let pairs = lanczos::largest(op, want, opts.tol, max_iter)?;
    let mut basis = Array2::zeros((n, k));
    for (c, v) in pairs.vectors[window_start..].iter().enumerate() {
        for (r, &x) in v.iter().enumerate() {
            basis[(r, c)] = x;
        }
        normalize_sign(basis.column_mut(c));
    }
    let values = pairs.values[window_start..].to_vec();
    let residuals = values
        .iter()
        .enumerate()
        .map(|(c, &l)| residual(op, l, basis.column(c)))
        .collect();
    Ok(SpectralSubspace::new_unchecked(
        values,
        basis,
        window_start,
        residuals,
    ))
}

fn materialize(op: &dyn SymOperator) -> SymmetricMatrix {
    let n = op.dim();
    let mut cols = Array2::zeros((n, n));
    let mut e = vec![0.0; n];
    let mut y = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut y);
        e[j] = 0.0;
        for i in 0..n {
            cols[(i, j)] = y[i];
        }
    }
    SymmetricMatrix::from_lower_fn(n, |i, j| 0.5 * (cols[(i, j)] + cols[(j, i)]))
}

/// Eigenpairs `window_start + 1 ..= window_start + k` of `a`, ranked by
/// algebraic value in descending order. Eigenvectors are normalized so that
/// their largest-magnitude entry is positive.
pub fn top_eigenpairs(
    a: &SymmetricMatrix,
    k: usize,
    window_start: usize,
    opts: &EigenOptions,
) -> Result<SpectralSubspace> {
    let n = a.dim();
    check_window(n, k, window_start)?;
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let use_dense = match opts.solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => !a.is_sparse() && n <= DENSE_LIMIT,
    };
    if use_dense {
        if a.is_dense() {
            dense_window(a, a, k, window_start)
        } else {
            let d = SymmetricMatrix::from_lower_fn(n, |i, j| a.get(i, j));
            dense_window(&d, a, k, window_start)
        }
    } else {
        lanczos_window(a, k, window_start, opts)
    }
}

/// As [`top_eigenpairs`] for an implicit operator. The dense path
/// materializes the operator column by column.
pub fn top_eigenpairs_op(
    op: &dyn SymOperator,
    k: usize,
    window_start: usize,
    opts: &EigenOptions,
) -> Result<SpectralSubspace> {
    let n = op.dim();
    check_window(n, k, window_start)?;
    let use_dense = match opts.solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => n <= DENSE_LIMIT,
    };
    if use_dense {
        let d = materialize(op);
        dense_window(&d, op, k, window_start)
    } else {
        lanczos_window(op, k, window_start, opts)
    }
}
