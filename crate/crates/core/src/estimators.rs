//! Vanilla spectral estimators and the first-order linearization `A U* (Λ*)⁻¹`.

use ndarray::{Array2, ArrayView1};

use crate::ensembles::PopulationModel;
use crate::error::{Error, Result};
use crate::linalg::{
    top_eigenpairs, top_eigenpairs_op, truncated_svd, Aligner, EigenOptions, RectMatrix, Solver,
    SpectralSubspace, SymOperator, SymmetricMatrix, TruncatedSvd, DENSE_LIMIT,
};

/// ±1 labels read off the signs of one eigenvector.
#[derive(Debug, Clone)]
pub struct LabelEstimate {
    pub labels: Vec<i8>,
    /// `√n · min_i s·truth_i·u_i` for the sign `s` that best matches the
    /// truth; only present when the truth was supplied.
    pub margin: Option<f64>,
    /// 1-based index (in descending algebraic order) of the eigenvector used.
    pub source_eigen_index: usize,
    /// The eigenvector the labels were read from.
    pub eigenvector: Vec<f64>,
    pub eigenvalue: f64,
    pub warnings: Vec<String>,
}

/// Which matrix the two-block estimator decomposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SbmMode {
    /// Second eigenvector of the adjacency matrix `A`.
    #[default]
    Raw,
    /// Leading eigenvector of `A − (d̂/n)11ᵀ` with `d̂ = Σ_ij A_ij / n`.
    Centered,
}

/// `sgn` with `sgn(0) = +1`.
pub fn sign_labels(u: ArrayView1<f64>) -> Vec<i8> {
    u.iter().map(|&x| if x < 0.0 { -1 } else { 1 }).collect()
}

/// `√n · min_i s·truth_i·u_i`, with `s` the global sign that minimizes the
/// number of disagreements between `sgn(u)` and `truth` (ties broken toward
/// the larger margin).
pub fn sign_margin(u: ArrayView1<f64>, truth: &[i8]) -> Result<f64> {
    if u.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: u.len(),
        });
    }
    let n = u.len() as f64;
    let labels = sign_labels(u);
    let agree = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
    let disagree = labels.len() - agree;
    let margin_for = |s: f64| {
        u.iter()
            .zip(truth)
            .map(|(&x, &t)| s * f64::from(t) * x)
            .fold(f64::INFINITY, f64::min)
            * n.sqrt()
    };
    Ok(match agree.cmp(&disagree) {
        std::cmp::Ordering::Greater => margin_for(1.0),
        std::cmp::Ordering::Less => margin_for(-1.0),
        std::cmp::Ordering::Equal => margin_for(1.0).max(margin_for(-1.0)),
    })
}

fn estimate_from(
    sub: &SpectralSubspace,
    col: usize,
    truth: Option<&[i8]>,
    warnings: Vec<String>,
) -> Result<LabelEstimate> {
    let u = sub.column(col);
    Ok(LabelEstimate {
        labels: sign_labels(u),
        margin: truth.map(|t| sign_margin(u, t)).transpose()?,
        source_eigen_index: sub.window_start() + col + 1,
        eigenvector: u.to_vec(),
        eigenvalue: sub.values()[col],
        warnings,
    })
}

/// `x̂ = sgn(u)` for the leading eigenvector `u` of `Y`.
pub fn z2_estimate(
    y: &SymmetricMatrix,
    truth: Option<&[i8]>,
    opts: &EigenOptions,
) -> Result<LabelEstimate> {
    let sub = top_eigenpairs(y, 1, 0, opts)?;
    estimate_from(&sub, 0, truth, Vec::new())
}

struct Centered<'a> {
    a: &'a SymmetricMatrix,
    shift: f64,
}

impl SymOperator for Centered<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply(x, y);
        let s = self.shift * x.iter().sum::<f64>();
        y.iter_mut().for_each(|v| *v -= s);
    }
}

struct Deflated<'a> {
    a: &'a SymmetricMatrix,
    sub: &'a SpectralSubspace,
}

impl SymOperator for Deflated<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply(x, y);
        for (k, &l) in self.sub.values().iter().enumerate() {
            let u = self.sub.column(k);
            let c = l * u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            y.iter_mut().zip(u.iter()).for_each(|(v, &ui)| *v -= c * ui);
        }
    }
}

// Top two pairs to full tolerance plus λ3 for the ambiguity check.
// λ3 sits at the bulk edge and converges slowly, so on large inputs it is
// first located loosely on the deflated operator; the tight three-pair
// solve only runs when that estimate cannot rule out a near tie.
fn raw_top_pairs(
    a: &SymmetricMatrix,
    opts: &EigenOptions,
) -> Result<(SpectralSubspace, Option<f64>)> {
    let n = a.dim();
    if n < 3 {
        return Ok((top_eigenpairs(a, 2, 0, opts)?, None));
    }
    let exact = |opts: &EigenOptions| -> Result<(SpectralSubspace, Option<f64>)> {
        let all = top_eigenpairs(a, 3, 0, opts)?;
        let l3 = all.values()[2];
        let basis = all.basis().slice(ndarray::s![.., 0..2]).to_owned();
        let two = SpectralSubspace::from_parts(all.values()[..2].to_vec(), basis, 0)?;
        Ok((two, Some(l3)))
    };
    if n <= DENSE_LIMIT || opts.solver == Solver::Dense {
        return exact(opts);
    }
    let sub = top_eigenpairs(a, 2, 0, opts)?;
    let loose = EigenOptions {
        tol: opts.tol.max(1e-4),
        ..*opts
    };
    let third = top_eigenpairs_op(&Deflated { a, sub: &sub }, 1, 0, &loose);
    let v = sub.values();
    match third {
        Ok(t) if v[1] - t.values()[0] > 1e-8 * v[0].abs() + 10.0 * t.residuals()[0] => {
            Ok((sub, Some(t.values()[0])))
        }
        _ => exact(opts),
    }
}

/// `ẑ = sgn(u2)` where `u2` belongs to the second largest eigenvalue of `A`
/// (or, in centered mode, the leading eigenvector of the centered matrix).
///
/// A warning is attached when the selected eigenvalue is within
/// `1e-8·λ1` of its lower neighbour, since the eigenvector is then ambiguous.
pub fn sbm_estimate(
    a: &SymmetricMatrix,
    truth: Option<&[i8]>,
    mode: SbmMode,
    opts: &EigenOptions,
) -> Result<LabelEstimate> {
    let n = a.dim();
    if n < 2 {
        return Err(Error::invalid("need at least two nodes"));
    }
    let mut warnings = Vec::new();
    match mode {
        SbmMode::Raw => {
            let (sub, lambda3) = raw_top_pairs(a, opts)?;
            let v = sub.values();
            if let Some(l3) = lambda3.filter(|&l3| v[1] - l3 < 1e-8 * v[0].abs()) {
                warnings.push(format!(
                    "lambda2 - lambda3 = {:e} is below 1e-8 * lambda1; u2 is ambiguous",
                    v[1] - l3
                ));
            }
            let u2 = sub.column(1);
            Ok(LabelEstimate {
                labels: sign_labels(u2),
                margin: truth.map(|t| sign_margin(u2, t)).transpose()?,
                source_eigen_index: 2,
                eigenvector: u2.to_vec(),
                eigenvalue: v[1],
                warnings,
            })
        }
        SbmMode::Centered => {
            let total: f64 = a.row_sums().iter().sum();
            let d_hat = total / n as f64;
            let op = Centered {
                a,
                shift: d_hat / n as f64,
            };
            let sub = top_eigenpairs_op(&op, 2, 0, opts)?;
            let v = sub.values();
            if v[0] - v[1] < 1e-8 * v[0].abs() {
                warnings.push(format!(
                    "top two eigenvalues of the centered matrix differ by {:e}",
                    v[0] - v[1]
                ));
            }
            estimate_from(&sub, 0, truth, warnings)
        }
    }
}

/// Row embedding from eigenvectors 2 and 3 of a three-block SBM.
#[derive(Debug, Clone)]
pub struct Sbm3Embedding {
    /// `U = (u2, u3)`, `n × 2`.
    pub embedding: Array2<f64>,
    pub eigenvalues: Vec<f64>,
    /// `Q = sgn(UᵀU*)ᵀ`.
    pub q: Array2<f64>,
    /// `min_{j≠z_i} ‖U_i − v_j Q‖ − ‖U_i − v_{z_i} Q‖` per node.
    pub separation: Vec<f64>,
}

impl Sbm3Embedding {
    pub fn min_separation(&self) -> f64 {
        self.separation
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn all_separated(&self) -> bool {
        self.separation.iter().all(|&s| s > 0.0)
    }
}

/// Population rows of `(u2*, u3*)` for blocks 1, 2, 3.
pub fn sbm3_centers(n: usize) -> [[f64; 2]; 3] {
    let n = n as f64;
    let a = (2.0 / n).sqrt();
    let b = 1.0 / (2.0 * n).sqrt();
    let c = (3.0 / (2.0 * n)).sqrt();
    [[a, 0.0], [-b, c], [-b, -c]]
}

/// Embed nodes by eigenvectors 2 and 3 of `A` and measure, against the known
/// labels, how far each node sits closer to its own center than to others.
pub fn sbm3_embed(
    a: &SymmetricMatrix,
    labels: &[u8],
    opts: &EigenOptions,
) -> Result<Sbm3Embedding> {
    let n = a.dim();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if labels.iter().any(|&z| !(1..=3).contains(&z)) {
        return Err(Error::invalid("labels must lie in {1, 2, 3}"));
    }
    let sub = top_eigenpairs(a, 2, 1, opts)?;
    let centers = sbm3_centers(n);
    let u_star = Array2::from_shape_fn((n, 2), |(i, k)| centers[(labels[i] - 1) as usize][k]);
    let u = sub.basis().to_owned();
    let aligner = Aligner::new(u.view(), u_star.view())?;
    let q = aligner.sign().t().to_owned();
    let rotated: Vec<[f64; 2]> = centers
        .iter()
        .map(|v| {
            [
                v[0] * q[(0, 0)] + v[1] * q[(1, 0)],
                v[0] * q[(0, 1)] + v[1] * q[(1, 1)],
            ]
        })
        .collect();
    let separation = (0..n)
        .map(|i| {
            let d: Vec<f64> = rotated
                .iter()
                .map(|c| ((u[(i, 0)] - c[0]).powi(2) + (u[(i, 1)] - c[1]).powi(2)).sqrt())
                .collect();
            let own = (labels[i] - 1) as usize;
            let other = (0..3)
                .filter(|&j| j != own)
                .map(|j| d[j])
                .fold(f64::INFINITY, f64::min);
            other - d[own]
        })
        .collect();
    Ok(Sbm3Embedding {
        embedding: u,
        eigenvalues: sub.values().to_vec(),
        q,
        separation,
    })
}

/// Top-`r` singular triplets of the observation and `U Σ Vᵀ`.
#[derive(Debug, Clone)]
pub struct CompletionEstimate {
    pub svd: TruncatedSvd,
    pub reconstruction: RectMatrix,
    pub warnings: Vec<String>,
}

impl CompletionEstimate {
    pub fn left(&self) -> &SpectralSubspace {
        &self.svd.left
    }

    pub fn right(&self) -> &SpectralSubspace {
        &self.svd.right
    }

    pub fn values(&self) -> &[f64] {
        &self.svd.values
    }
}

pub fn nmc_estimate(m: &RectMatrix, r: usize, opts: &EigenOptions) -> Result<CompletionEstimate> {
    let svd = truncated_svd(m, r, opts)?;
    let mut warnings = Vec::new();
    if svd.rank_deficient {
        warnings.push(format!(
            "sigma_r / sigma_1 = {:e} is below the tolerance; trailing factors are not unique",
            svd.values[r - 1] / svd.values[0]
        ));
    }
    let reconstruction = RectMatrix::from_dense(svd.reconstruct());
    Ok(CompletionEstimate {
        svd,
        reconstruction,
        warnings,
    })
}

/// `A U* (Λ*)⁻¹`, one operator application per column.
pub fn linearize(a: &dyn SymOperator, pop: &PopulationModel) -> Result<Array2<f64>> {
    let n = pop.dim();
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.dim(),
        });
    }
    let lambda = pop.lambda_star();
    if let Some(k) = lambda.iter().position(|&l| l == 0.0) {
        return Err(Error::invalid(format!("population eigenvalue {k} is zero")));
    }
    let u = pop.u_star();
    let mut out = Array2::zeros((n, lambda.len()));
    let mut y = vec![0.0; n];
    for (k, &l) in lambda.iter().enumerate() {
        let x = u.column(k).to_vec();
        a.apply(&x, &mut y);
        for i in 0..n {
            out[(i, k)] = y[i] / l;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{population, sample, EnsembleSpec, Sbm2Spec, Sbm3Spec, Z2Spec};
    use crate::rng;

    #[test]
    fn sign_of_zero_is_positive() {
        let u = ndarray::array![0.0, -1.0, 2.0];
        assert_eq!(sign_labels(u.view()), vec![1, -1, 1]);
    }

    #[test]
    fn z2_noiseless_recovers_x() {
        let s = Z2Spec::random(30, 0.0, &mut rng::seeded(1));
        let x = s.x.clone();
        let spec = EnsembleSpec::Z2(s);
        let (obs, _) = sample(&spec, 1).unwrap();
        let est =
            z2_estimate(obs.symmetric().unwrap(), Some(&x), &EigenOptions::default()).unwrap();
        let flip = est.labels[0] != x[0];
        for (l, t) in est.labels.iter().zip(&x) {
            assert_eq!(*l, if flip { -*t } else { *t });
        }
        assert!((est.margin.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sbm_on_population_is_exact() {
        let s = Sbm2Spec::random(8, 3.0, 1.0, &mut rng::seeded(2));
        let labels = s.labels.clone();
        let pop = population(&EnsembleSpec::Sbm2(s)).unwrap();
        let a = SymmetricMatrix::from_dense_lower(pop.a_star().to_dense().view()).unwrap();
        for mode in [SbmMode::Raw, SbmMode::Centered] {
            let est = sbm_estimate(&a, Some(&labels), mode, &EigenOptions::default()).unwrap();
            assert!((est.margin.unwrap() - 1.0).abs() < 1e-10, "{mode:?}");
            let flip = est.labels[0] != labels[0];
            for (l, t) in est.labels.iter().zip(&labels) {
                assert_eq!(*l, if flip { -*t } else { *t });
            }
        }
    }

    #[test]
    fn sbm_estimate_warns_on_ties() {
        let a = SymmetricMatrix::from_upper_triplets(4, &[(0, 0, 3.0), (1, 1, 1.0), (2, 2, 1.0)])
            .unwrap();
        let est = sbm_estimate(&a, None, SbmMode::Raw, &EigenOptions::default()).unwrap();
        assert_eq!(est.warnings.len(), 1);
    }

    #[test]
    fn linearize_population_returns_u_star() {
        let s = Sbm2Spec::random(20, 4.0, 1.0, &mut rng::seeded(3));
        let pop = population(&EnsembleSpec::Sbm2(s)).unwrap();
        let lin = linearize(pop.a_star(), &pop).unwrap();
        let diff = &lin - &pop.u_star();
        assert!(diff.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn linearize_sbm_row_sum_form() {
        let n = 200;
        let (a_, b_) = (9.0, 2.0);
        let s = Sbm2Spec::random(n, a_, b_, &mut rng::seeded(4));
        let labels = s.labels.clone();
        let spec = EnsembleSpec::Sbm2(s);
        let pop = population(&spec).unwrap();
        let (obs, _) = sample(&spec, 5).unwrap();
        let a = obs.symmetric().unwrap();
        let lin = linearize(a, &pop).unwrap();
        let l = (n as f64).ln();
        for i in 0..n {
            let diff: f64 = (0..n).map(|j| f64::from(labels[j]) * a.get(i, j)).sum();
            let expect = 2.0 / ((a_ - b_) * (n as f64).sqrt() * l) * diff;
            assert!((lin[(i, 0)] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn linearize_z2_form() {
        let n = 50;
        let s = Z2Spec::random(n, 0.7, &mut rng::seeded(6));
        let x = s.x.clone();
        let spec = EnsembleSpec::Z2(s);
        let pop = population(&spec).unwrap();
        let (obs, _) = sample(&spec, 7).unwrap();
        let y = obs.symmetric().unwrap();
        let lin = linearize(y, &pop).unwrap();
        let nf = n as f64;
        for i in 0..n {
            // u* + σWu*/n with σW = Y − xxᵀ.
            let noise: f64 = (0..n)
                .map(|j| (y.get(i, j) - f64::from(x[i] * x[j])) * f64::from(x[j]) / nf.sqrt())
                .sum();
            let expect = f64::from(x[i]) / nf.sqrt() + noise / nf;
            assert!((lin[(i, 0)] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn sbm3_population_margins() {
        let n = 60;
        let s = Sbm3Spec::random(n, 12.0, 2.0, &mut rng::seeded(8));
        let labels = s.labels.clone();
        let pop = population(&EnsembleSpec::Sbm3(s)).unwrap();
        let a = SymmetricMatrix::from_dense_lower(pop.a_star().to_dense().view()).unwrap();
        let emb = sbm3_embed(&a, &labels, &EigenOptions::default()).unwrap();
        // Each node sits on its own center; the other two are √(6/n) away.
        let expect = (6.0 / n as f64).sqrt();
        for s in &emb.separation {
            assert!((s - expect).abs() < 1e-8, "{s} vs {expect}");
        }
    }

    #[test]
    fn nmc_full_noiseless_observation() {
        let m = crate::ensembles::planted_lowrank(30, 3, 1.0, 9).unwrap();
        let est = nmc_estimate(&m, 3, &EigenOptions::default()).unwrap();
        let d = est.reconstruction.to_dense() - m.to_dense();
        assert!(d.iter().all(|x| x.abs() < 1e-8));
        assert!(est.warnings.is_empty());
    }
}
