use crate::ensembles::PopulationModel;
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, top_eigenpairs, two_to_inf, Aligner, EigenOptions, Solver, SymmetricMatrix,
};

/// Largest dimension accepted by [`leave_one_out_probe`].
pub const LOO_MAX_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LooProbe {
    pub m: usize,
    /// `‖U sgn(H) − U⁽ᵐ⁾‖_F` with `H = UᵀU⁽ᵐ⁾`; for one column this is
    /// `min_s ‖u − s u⁽ᵐ⁾‖₂`.
    pub dist_u: f64,
    /// `‖UUᵀ − U⁽ᵐ⁾U⁽ᵐ⁾ᵀ‖_F`.
    pub subspace_dist: f64,
    /// `‖U‖_{2→∞}`, the scale `dist_u` is compared against.
    pub u_two_to_inf: f64,
}

/// Zeroes row and column `m` of `a`, re-solves the population window densely
/// and compares the two eigenspaces.
pub fn leave_one_out_probe(
    a: &SymmetricMatrix,
    pop: &PopulationModel,
    m: usize,
    opts: &EigenOptions,
) -> Result<LooProbe> {
    let n = a.dim();
    if n > LOO_MAX_DIM {
        return Err(Error::invalid(format!(
            "leave-one-out probe is limited to n <= {LOO_MAX_DIM}, got {n}"
        )));
    }
    if n != pop.dim() {
        return Err(Error::DimensionMismatch {
            expected: pop.dim(),
            found: n,
        });
    }
    let loo = a.without_row_col(m)?;
    let dense = EigenOptions {
        solver: Solver::Dense,
        ..*opts
    };
    let (k, ws) = (pop.rank(), pop.window_start());
    let full = top_eigenpairs(a, k, ws, &dense)?;
    let left = top_eigenpairs(&loo, k, ws, &dense)?;
    let (u, um) = (full.basis(), left.basis());

    let dist_u = if k == 1 {
        let d = |s: f64| {
            u.column(0)
                .iter()
                .zip(um.column(0))
                .map(|(x, y)| (x - s * y).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        d(1.0).min(d(-1.0))
    } else {
        let al = Aligner::new(u, um)?;
        frobenius((&al.align(u) - &um).view())
    };
    let proj = u.dot(&u.t()) - um.dot(&um.t());
    Ok(LooProbe {
        m,
        dist_u,
        subspace_dist: frobenius(proj.view()),
        u_two_to_inf: two_to_inf(u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{population, EnsembleSpec, Sbm2Spec};
    use crate::rng;

    #[test]
    fn rejects_bad_index_and_large_n() {
        let spec = EnsembleSpec::Sbm2(Sbm2Spec::random(20, 6.0, 1.0, &mut rng::seeded(1)));
        let pop = population(&spec).unwrap();
        let a = SymmetricMatrix::from_dense_lower(pop.a_star().to_dense().view()).unwrap();
        assert!(leave_one_out_probe(&a, &pop, 20, &EigenOptions::default()).is_err());
        let p = leave_one_out_probe(&a, &pop, 3, &EigenOptions::default()).unwrap();
        assert!(p.dist_u > 0.0 && p.dist_u <= 2f64.sqrt());

        let big = EnsembleSpec::Sbm2(Sbm2Spec::random(600, 6.0, 1.0, &mut rng::seeded(1)));
        let bpop = population(&big).unwrap();
        let ba = SymmetricMatrix::from_upper_triplets(600, &[]).unwrap();
        assert!(leave_one_out_probe(&ba, &bpop, 0, &EigenOptions::default()).is_err());
    }
}
