use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// A symmetric linear map that can be applied to a vector.
pub trait SymOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Real symmetric matrix. Only one triangle is ever supplied by callers, so
/// `entry(i, j) == entry(j, i)` holds by construction.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    n: usize,
    storage: SymStorage,
}

#[derive(Debug, Clone)]
enum SymStorage {
    /// Packed lower triangle, row by row: `(i, j)` with `j <= i` lives at `i(i+1)/2 + j`.
    Dense(Vec<f64>),
    /// Compressed rows holding both triangles (mirrored from the supplied one).
    Sparse(Csr),
    /// `Σ_k values[k] f_k f_kᵀ`; used for population matrices.
    LowRank {
        factors: Array2<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Csr {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    fn from_triplets(rows: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            row_ptr,
            col_idx,
            values,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `y = Mᵀ x` for the matrix this CSR represents.
    fn mul_t_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    fn nnz(&self) -> usize {
        self.values.len()
    }
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if j > i { (j, i) } else { (i, j) };
    i * (i + 1) / 2 + j
}

impl SymmetricMatrix {
    /// Dense matrix from a function evaluated on the lower triangle (`j <= i`).
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        SymmetricMatrix {
            n,
            storage: SymStorage::Dense(data),
        }
    }

    /// Dense matrix built from the lower triangle of a square array. The upper
    /// triangle is ignored.
    pub fn from_dense_lower(a: ArrayView2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        Ok(Self::from_lower_fn(r, |i, j| a[(i, j)]))
    }

    /// Sparse matrix from `(i, j, value)` entries with `i <= j`; entries below
    /// the diagonal are rejected so every off-diagonal pair is specified once.
    pub fn from_upper_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            if i > j || j >= n {
                return Err(Error::invalid(format!(
                    "triplet ({i}, {j}) is not in the upper triangle of a {n}x{n} matrix"
                )));
            }
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        Ok(SymmetricMatrix {
            n,
            storage: SymStorage::Sparse(Csr::from_triplets(n, full)),
        })
    }

    /// `Σ_k values[k] · factors[:, k] factors[:, k]ᵀ`.
    pub fn low_rank(factors: Array2<f64>, values: Vec<f64>) -> Result<Self> {
        if factors.ncols() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: factors.ncols(),
                found: values.len(),
            });
        }
        Ok(SymmetricMatrix {
            n: factors.nrows(),
            storage: SymStorage::LowRank { factors, values },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, SymStorage::Sparse(_))
    }

    pub fn is_finite(&self) -> bool {
        match &self.storage {
            SymStorage::Dense(d) => d.iter().all(|x| x.is_finite()),
            SymStorage::Sparse(c) => c.values.iter().all(|x| x.is_finite()),
            SymStorage::LowRank { factors, values } => {
                factors.iter().chain(values).all(|x| x.is_finite())
            }
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, SymStorage::Dense(_))
    }

    /// Stored nonzeros (both triangles for sparse storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            SymStorage::Dense(d) => d.iter().filter(|v| **v != 0.0).count(),
            SymStorage::Sparse(c) => c.nnz(),
            SymStorage::LowRank { .. } => self.n * self.n,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            SymStorage::Dense(d) => d[packed(i, j)],
            SymStorage::Sparse(c) => c.get(i, j),
            SymStorage::LowRank { factors, values } => values
                .iter()
                .enumerate()
                .map(|(k, l)| l * factors[(i, k)] * factors[(j, k)])
                .sum(),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n;
        match &self.storage {
            SymStorage::Dense(d) => {
                let mut a = Array2::zeros((n, n));
                for i in 0..n {
                    for j in 0..=i {
                        let v = d[packed(i, j)];
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
                a
            }
            SymStorage::Sparse(c) => {
                let mut a = Array2::zeros((n, n));
                for i in 0..n {
                    let (cols, vals) = c.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        a[(i, j)] = v;
                    }
                }
                a
            }
            SymStorage::LowRank { factors, values } => {
                let mut scaled = factors.clone();
                for (k, l) in values.iter().enumerate() {
                    scaled.column_mut(k).mapv_inplace(|v| v * l);
                }
                scaled.dot(&factors.t())
            }
        }
    }

    /// Same matrix in compressed-row storage, dropping exact zeros.
    pub fn to_sparse(&self) -> Self {
        let mut triplets = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_upper_triplets(self.n, &triplets).expect("indices are in range")
    }

    /// Upper-triangle entries `(i, j, value)` with `i <= j`, skipping zeros.
    pub fn upper_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        match &self.storage {
            SymStorage::Sparse(c) => {
                for i in 0..self.n {
                    let (cols, vals) = c.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j >= i && v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
            }
            _ => {
                for i in 0..self.n {
                    for j in i..self.n {
                        let v = self.get(i, j);
                        if v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest row ℓ2 norm.
    pub fn two_to_inf(&self) -> f64 {
        let n = self.n;
        let row_sq: Vec<f64> = match &self.storage {
            SymStorage::Dense(_) => (0..n)
                .map(|i| (0..n).map(|j| self.get(i, j).powi(2)).sum())
                .collect(),
            SymStorage::Sparse(c) => (0..n)
                .map(|i| c.row(i).1.iter().map(|v| v * v).sum())
                .collect(),
            SymStorage::LowRank { factors, values } => {
                let gram = factors.t().dot(factors);
                let r = values.len();
                (0..n)
                    .map(|i| {
                        let mut acc = 0.0;
                        for k in 0..r {
                            for l in 0..r {
                                acc += values[k]
                                    * values[l]
                                    * factors[(i, k)]
                                    * factors[(i, l)]
                                    * gram[(k, l)];
                            }
                        }
                        acc
                    })
                    .collect()
            }
        };
        row_sq
            .into_iter()
            .fold(0.0f64, |a, v| a.max(v))
            .max(0.0)
            .sqrt()
    }

    /// Row sums `A 1`.
    pub fn row_sums(&self) -> Vec<f64> {
        let ones = vec![1.0; self.n];
        let mut y = vec![0.0; self.n];
        self.apply(&ones, &mut y);
        y
    }

    /// Copy with row and column `m` set to zero (the leave-one-out matrix).
    pub fn without_row_col(&self, m: usize) -> Result<Self> {
        if m >= self.n {
            return Err(Error::invalid(format!("index {m} outside [0, {})", self.n)));
        }
        Ok(match &self.storage {
            SymStorage::Sparse(_) => {
                let t: Vec<_> = self
                    .upper_triplets()
                    .into_iter()
                    .filter(|&(i, j, _)| i != m && j != m)
                    .collect();
                Self::from_upper_triplets(self.n, &t)?
            }
            _ => Self::from_lower_fn(self.n, |i, j| {
                if i == m || j == m {
                    0.0
                } else {
                    self.get(i, j)
                }
            }),
        })
    }
}

impl SymOperator for SymmetricMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        match &self.storage {
            SymStorage::Dense(d) => {
                y.iter_mut().for_each(|v| *v = 0.0);
                let mut k = 0;
                for i in 0..self.n {
                    let row = &d[k..k + i + 1];
                    let xi = x[i];
                    let mut acc = 0.0;
                    for (j, &a) in row[..i].iter().enumerate() {
                        acc += a * x[j];
                        y[j] += a * xi;
                    }
                    y[i] += acc + row[i] * xi;
                    k += i + 1;
                }
            }
            SymStorage::Sparse(c) => c.mul_vec(x, y),
            SymStorage::LowRank { factors, values } => {
                let r = values.len();
                let mut coef = vec![0.0; r];
                for (i, &xi) in x.iter().enumerate() {
                    for k in 0..r {
                        coef[k] += factors[(i, k)] * xi;
                    }
                }
                for k in 0..r {
                    coef[k] *= values[k];
                }
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = (0..r).map(|k| factors[(i, k)] * coef[k]).sum();
                }
            }
        }
    }
}

/// Real `n1 × n2` matrix, dense or stored as observed triplets.
#[derive(Debug, Clone)]
pub struct RectMatrix {
    n1: usize,
    n2: usize,
    storage: RectStorage,
}

#[derive(Debug, Clone)]
enum RectStorage {
    Dense(Array2<f64>),
    Sparse(Csr),
}

impl RectMatrix {
    pub fn from_dense(a: Array2<f64>) -> Self {
        let (n1, n2) = a.dim();
        RectMatrix {
            n1,
            n2,
            storage: RectStorage::Dense(a),
        }
    }

    pub fn from_triplets(n1: usize, n2: usize, triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= n1 || j >= n2) {
            return Err(Error::invalid(format!(
                "triplet ({i}, {j}) outside a {n1}x{n2} matrix"
            )));
        }
        Ok(RectMatrix {
            n1,
            n2,
            storage: RectStorage::Sparse(Csr::from_triplets(n1, triplets)),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, RectStorage::Sparse(_))
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            RectStorage::Dense(a) => a.iter().filter(|v| **v != 0.0).count(),
            RectStorage::Sparse(c) => c.nnz(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            RectStorage::Dense(a) => a[(i, j)],
            RectStorage::Sparse(c) => c.get(i, j),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match &self.storage {
            RectStorage::Dense(a) => a.clone(),
            RectStorage::Sparse(c) => {
                let mut a = Array2::zeros((self.n1, self.n2));
                for i in 0..self.n1 {
                    let (cols, vals) = c.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        a[(i, j)] = v;
                    }
                }
                a
            }
        }
    }

    /// Dense view when the storage is dense.
    pub fn as_dense(&self) -> Option<ArrayView2<'_, f64>> {
        match &self.storage {
            RectStorage::Dense(a) => Some(a.view()),
            RectStorage::Sparse(_) => None,
        }
    }

    /// Stored entries `(i, j, value)` in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match &self.storage {
            RectStorage::Dense(a) => a
                .indexed_iter()
                .filter(|(_, v)| **v != 0.0)
                .map(|((i, j), v)| (i, j, *v))
                .collect(),
            RectStorage::Sparse(c) => {
                let mut out = Vec::with_capacity(c.nnz());
                for i in 0..self.n1 {
                    let (cols, vals) = c.row(i);
                    out.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
                }
                out
            }
        }
    }

    /// `y = M x` with `x` of length `n2`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        match &self.storage {
            RectStorage::Dense(a) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = a.row(i).iter().zip(x).map(|(m, v)| m * v).sum();
                }
            }
            RectStorage::Sparse(c) => c.mul_vec(x, y),
        }
    }

    /// `y = Mᵀ x` with `x` of length `n1`.
    pub fn mul_t_vec(&self, x: &[f64], y: &mut [f64]) {
        match &self.storage {
            RectStorage::Dense(a) => {
                y.iter_mut().for_each(|v| *v = 0.0);
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    for (yj, m) in y.iter_mut().zip(a.row(i)) {
                        *yj += m * xi;
                    }
                }
            }
            RectStorage::Sparse(c) => c.mul_t_vec(x, y),
        }
    }

    /// Same matrix with rows permuted: row `i` of the result is row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n1 {
            return Err(Error::DimensionMismatch {
                expected: self.n1,
                found: perm.len(),
            });
        }
        let mut inverse = vec![0usize; self.n1];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        Ok(match &self.storage {
            RectStorage::Dense(a) => {
                let mut out = Array2::zeros(a.dim());
                for (i, &p) in perm.iter().enumerate() {
                    out.row_mut(i).assign(&a.row(p));
                }
                RectMatrix::from_dense(out)
            }
            RectStorage::Sparse(_) => {
                let t = self
                    .triplets()
                    .into_iter()
                    .map(|(i, j, v)| (inverse[i], j, v))
                    .collect();
                RectMatrix::from_triplets(self.n1, self.n2, t)?
            }
        })
    }
}

/// The symmetric dilation `[[0, M], [Mᵀ, 0]]`, applied without materializing it.
pub struct Dilation<'a> {
    m: &'a RectMatrix,
}

impl<'a> Dilation<'a> {
    pub fn new(m: &'a RectMatrix) -> Self {
        Dilation { m }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let (n1, n2) = self.m.shape();
        let md = self.m.to_dense();
        let mut a = Array2::zeros((n1 + n2, n1 + n2));
        a.slice_mut(ndarray::s![..n1, n1..]).assign(&md);
        a.slice_mut(ndarray::s![n1.., ..n1]).assign(&md.t());
        a
    }
}

impl SymOperator for Dilation<'_> {
    fn dim(&self) -> usize {
        let (n1, n2) = self.m.shape();
        n1 + n2
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (n1, _) = self.m.shape();
        let (y1, y2) = y.split_at_mut(n1);
        self.m.mul_vec(&x[n1..], y1);
        self.m.mul_t_vec(&x[..n1], y2);
    }
}
