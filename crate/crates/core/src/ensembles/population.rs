use ndarray::{Array2, ArrayView2};

use super::{ln, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::{SpectralSubspace, SymmetricMatrix};

/// `A* = E A` with its eigen-structure, target window, eigen-gap and
/// condition number.
#[derive(Debug, Clone)]
pub struct PopulationModel {
    a_star: SymmetricMatrix,
    subspace: SpectralSubspace,
    spectrum: Vec<f64>,
    gap: f64,
    kappa: f64,
}

impl PopulationModel {
    /// `A*` itself; for completion models its symmetric dilation.
    pub fn a_star(&self) -> &SymmetricMatrix {
        &self.a_star
    }

    /// `(Λ*, U*)` for the window the estimator targets.
    pub fn subspace(&self) -> &SpectralSubspace {
        &self.subspace
    }

    pub fn u_star(&self) -> ArrayView2<'_, f64> {
        self.subspace.basis()
    }

    pub fn lambda_star(&self) -> &[f64] {
        self.subspace.values()
    }

    /// Nonzero eigenvalues of `A*`, descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// `Δ*`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// `κ = max |λ*_{s+i}| / Δ*`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn window_start(&self) -> usize {
        self.subspace.window_start()
    }

    pub fn rank(&self) -> usize {
        self.subspace.rank()
    }

    pub fn dim(&self) -> usize {
        self.a_star.dim()
    }

    /// Build from an orthonormal eigenbasis of the nonzero spectrum.
    pub fn from_eigenpairs(
        factors: Array2<f64>,
        values: Vec<f64>,
        window_start: usize,
        rank: usize,
    ) -> Result<Self> {
        let n = factors.nrows();
        if window_start + rank > n || rank == 0 {
            return Err(Error::invalid("population window exceeds the dimension"));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
        let full = full_spectrum(&values, n);
        let gap = eigen_gap(&full, window_start, rank);

        // Window columns: indices of the full spectrum that fall on nonzero
        // eigenvalues come from `factors`; a window reaching into the zero
        // block is not supported.
        let positives = values.iter().filter(|&&v| v > 0.0).count();
        if window_start + rank > positives {
            return Err(Error::invalid(
                "population window must lie within the positive eigenvalues",
            ));
        }
        let cols = &order[window_start..window_start + rank];
        let mut basis = Array2::zeros((n, rank));
        let mut lambda = Vec::with_capacity(rank);
        for (c, &k) in cols.iter().enumerate() {
            basis.column_mut(c).assign(&factors.column(k));
            lambda.push(values[k]);
        }
        let kappa = lambda.iter().fold(0.0f64, |a, v| a.max(v.abs())) / gap;
        let subspace = SpectralSubspace::from_parts(lambda, basis, window_start)?;
        let mut spectrum: Vec<f64> = values.clone();
        spectrum.sort_by(|a, b| b.total_cmp(a));
        Ok(PopulationModel {
            a_star: SymmetricMatrix::low_rank(factors, values)?,
            subspace,
            spectrum,
            gap,
            kappa,
        })
    }
}

/// All `n` eigenvalues, descending, from the nonzero ones.
fn full_spectrum(nonzero: &[f64], n: usize) -> Vec<f64> {
    let mut full = nonzero.to_vec();
    full.resize(n, 0.0);
    full.sort_by(|a, b| b.total_cmp(a));
    full
}

/// `Δ* = (λ_s − λ_{s+1}) ∧ (λ_{s+r} − λ_{s+r+1}) ∧ min_i |λ_{s+i}|` with
/// `λ_0 = +∞` and `λ_{n+1} = −∞`; `spectrum` holds `λ_1 ≥ … ≥ λ_n`.
pub fn eigen_gap(spectrum: &[f64], s: usize, r: usize) -> f64 {
    let n = spectrum.len();
    let lam = |k: usize| -> f64 {
        if k == 0 {
            f64::INFINITY
        } else if k > n {
            f64::NEG_INFINITY
        } else {
            spectrum[k - 1]
        }
    };
    let upper = lam(s) - lam(s + 1);
    let lower = lam(s + r) - lam(s + r + 1);
    let smallest = (1..=r)
        .map(|i| lam(s + i).abs())
        .fold(f64::INFINITY, f64::min);
    upper.min(lower).min(smallest)
}

/// Closed-form population model for each ensemble.
pub fn population(spec: &EnsembleSpec) -> Result<PopulationModel> {
    spec.validate()?;
    match spec {
        EnsembleSpec::Z2(s) => {
            let n = s.n as f64;
            let f = Array2::from_shape_fn((s.n, 1), |(i, _)| f64::from(s.x[i]) / n.sqrt());
            PopulationModel::from_eigenpairs(f, vec![n], 0, 1)
        }
        EnsembleSpec::Sbm2(s) => {
            let n = s.n as f64;
            let l = ln(s.n);
            let c = 1.0 / n.sqrt();
            let f = Array2::from_shape_fn((s.n, 2), |(i, k)| {
                if k == 0 {
                    c
                } else {
                    c * f64::from(s.labels[i])
                }
            });
            let values = vec![(s.a + s.b) / 2.0 * l, (s.a - s.b) / 2.0 * l];
            PopulationModel::from_eigenpairs(f, values, 1, 1)
        }
        EnsembleSpec::Sbm3(s) => {
            let n = s.n as f64;
            let l = ln(s.n);
            let c2 = 1.0 / (2.0 * n).sqrt();
            let c3 = (3.0 / (2.0 * n)).sqrt();
            let f = Array2::from_shape_fn((s.n, 3), |(i, k)| match (k, s.labels[i]) {
                (0, _) => 1.0 / n.sqrt(),
                (1, 1) => 2.0 * c2,
                (1, _) => -c2,
                (2, 1) => 0.0,
                (2, 2) => c3,
                (2, _) => -c3,
                _ => unreachable!(),
            });
            let lam2 = (s.a - s.b) * l / 3.0;
            let values = vec![(s.a + 2.0 * s.b) * l / 3.0, lam2, lam2];
            PopulationModel::from_eigenpairs(f, values, 1, 2)
        }
        EnsembleSpec::Nmc(s) => {
            let sig = &s.signal;
            let (n1, n2) = sig.shape();
            let r = sig.rank();
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let mut f = Array2::zeros((n1 + n2, 2 * r));
            for k in 0..r {
                for i in 0..n1 {
                    f[(i, k)] = h * sig.u()[(i, k)];
                    f[(i, r + k)] = h * sig.u()[(i, k)];
                }
                for j in 0..n2 {
                    f[(n1 + j, k)] = h * sig.v()[(j, k)];
                    f[(n1 + j, r + k)] = -h * sig.v()[(j, k)];
                }
            }
            let mut values = sig.sigma().to_vec();
            values.extend(sig.sigma().iter().map(|s| -s));
            PopulationModel::from_eigenpairs(f, values, 0, r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{LowRankSignal, NmcSpec, Sbm2Spec, Sbm3Spec, Z2Spec};
    use crate::linalg::symmetric_eigen;
    use crate::rng;
    use std::sync::Arc;

    fn brute_force_gap(pop: &PopulationModel) -> f64 {
        let d = pop.a_star().to_dense();
        let (vals, _) =
            symmetric_eigen(&SymmetricMatrix::from_dense_lower(d.view()).unwrap()).unwrap();
        eigen_gap(&vals, pop.window_start(), pop.rank())
    }

    #[test]
    fn sbm2_closed_form() {
        let n = 5000;
        let spec = EnsembleSpec::Sbm2(Sbm2Spec::random(n, 4.5, 0.25, &mut rng::seeded(1)));
        let pop = population(&spec).unwrap();
        let l = (n as f64).ln();
        assert!((pop.spectrum()[0] - 2.375 * l).abs() < 1e-12);
        assert!((pop.lambda_star()[0] - 2.125 * l).abs() < 1e-12);
        let labels = match &spec {
            EnsembleSpec::Sbm2(s) => s.labels.clone(),
            _ => unreachable!(),
        };
        for i in 0..n {
            let expect = f64::from(labels[i]) / (n as f64).sqrt();
            assert!((pop.u_star()[(i, 0)] - expect).abs() < 1e-15);
        }
        // Δ* = (b ∧ (a−b)/2) log n, κ = ((a−b)/2)/(b ∧ (a−b)/2).
        assert!((pop.gap() - 0.25 * l).abs() < 1e-12);
        assert!((pop.kappa() - 2.125 / 0.25).abs() < 1e-10);
    }

    #[test]
    fn sbm2_matches_dense_population() {
        let n = 8;
        let s = Sbm2Spec::random(n, 1.5, 0.5, &mut rng::seeded(2));
        let (p, q) = (s.p(), s.q());
        let labels = s.labels.clone();
        let pop = population(&EnsembleSpec::Sbm2(s)).unwrap();
        let d = pop.a_star().to_dense();
        for i in 0..n {
            for j in 0..n {
                let e = if labels[i] == labels[j] { p } else { q };
                assert!((d[(i, j)] - e).abs() < 1e-14);
            }
        }
        assert!((pop.spectrum()[0] - (p + q) * 4.0).abs() < 1e-14);
        assert!((pop.lambda_star()[0] - (p - q) * 4.0).abs() < 1e-14);
    }

    #[test]
    fn gaps_match_brute_force() {
        let mut g = rng::seeded(3);
        let specs = vec![
            EnsembleSpec::Z2(Z2Spec::random(17, 1.0, &mut g)),
            EnsembleSpec::Sbm2(Sbm2Spec::random(64, 3.0, 2.5, &mut g)),
            EnsembleSpec::Sbm2(Sbm2Spec::random(40, 9.0, 1.0, &mut g)),
            EnsembleSpec::Sbm3(Sbm3Spec::random(63, 5.0, 1.0, &mut g)),
            EnsembleSpec::Sbm3(Sbm3Spec::random(30, 2.0, 1.5, &mut g)),
        ];
        for spec in specs {
            let pop = population(&spec).unwrap();
            let bf = brute_force_gap(&pop);
            assert!(
                (pop.gap() - bf).abs() < 1e-10 * bf.max(1.0),
                "{} vs {bf}",
                pop.gap()
            );
            assert!(pop.kappa() >= 1.0);
        }
    }

    #[test]
    fn z2_gap_and_kappa() {
        let spec = EnsembleSpec::Z2(Z2Spec::random(50, 0.3, &mut rng::seeded(4)));
        let pop = population(&spec).unwrap();
        assert_eq!(pop.gap(), 50.0);
        assert_eq!(pop.kappa(), 1.0);
    }

    #[test]
    fn sbm3_patterns() {
        let n = 12;
        let s = Sbm3Spec::random(n, 4.0, 1.0, &mut rng::seeded(5));
        let labels = s.labels.clone();
        let pop = population(&EnsembleSpec::Sbm3(s)).unwrap();
        let u = pop.u_star();
        let nf = n as f64;
        for i in 0..n {
            let (e2, e3) = match labels[i] {
                1 => ((2.0 / nf).sqrt(), 0.0),
                2 => (-1.0 / (2.0 * nf).sqrt(), (3.0 / (2.0 * nf)).sqrt()),
                _ => (-1.0 / (2.0 * nf).sqrt(), -(3.0 / (2.0 * nf)).sqrt()),
            };
            assert!((u[(i, 0)] - e2).abs() < 1e-15);
            assert!((u[(i, 1)] - e3).abs() < 1e-15);
        }
        let g = u.t().dot(&u);
        assert!((&g - &Array2::<f64>::eye(2))
            .iter()
            .all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn nmc_dilation_population() {
        let m = ndarray::array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let sig = Arc::new(LowRankSignal::from_matrix(m, 2).unwrap());
        let spec = EnsembleSpec::Nmc(NmcSpec {
            signal: sig,
            p: 0.5,
            sigma: 0.0,
        });
        let pop = population(&spec).unwrap();
        assert_eq!(pop.dim(), 5);
        assert!((pop.lambda_star()[0] - 3.0).abs() < 1e-12);
        assert!((pop.gap() - 1.0).abs() < 1e-12);
        assert!((pop.kappa() - 3.0).abs() < 1e-12);
        assert!((brute_force_gap(&pop) - 1.0).abs() < 1e-10);
    }
}
