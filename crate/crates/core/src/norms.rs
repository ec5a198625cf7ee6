//! Worst-case and average-case Trotter error constants from the nested
//! commutators of `T` and `V`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{pairwise_sum, C64};
use crate::pauli::{commutator, PauliSum};
use crate::sector::{
    lowest_eigenpairs_of, LanczosOptions, NegatedAbs, PauliColumns, SectorBasis, SectorOperator,
};

/// Default sample count for the Frobenius estimator.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Relative residual target of the abs-matrix eigensolve.
pub const BOUND_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    SpectralBound,
    FrobeniusSampled,
    FrobeniusExact,
    DenseExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    /// eV^3 for the nested commutators.
    pub value: f64,
    /// Zero for deterministic estimates.
    pub standard_error: f64,
    pub kind: NormKind,
    pub sample_count: usize,
    pub rng_seed: Option<u64>,
    pub converged: bool,
}

impl NormEstimate {
    fn exact(value: f64, kind: NormKind) -> Self {
        Self {
            value,
            standard_error: 0.0,
            kind,
            sample_count: 0,
            rng_seed: None,
            converged: true,
        }
    }
}

/// `(O_VTV, O_VTT) = ([[V,T],V], [[V,T],T])`.
///
/// [`commutator`] returns `D` with `[A,B] = iD`, so a double commutator
/// picks up `i^2 = -1`.
pub fn nested_commutators(t_op: &PauliSum, v_op: &PauliSum) -> Result<(PauliSum, PauliSum)> {
    let vt = commutator(v_op, t_op)?;
    let vtv = commutator(&vt, v_op)?.scaled(-1.0);
    let vtt = commutator(&vt, t_op)?.scaled(-1.0);
    Ok((vtv, vtt))
}

/// Largest eigenvalue of `abs(O)` on the sector, an upper bound on `||O||`.
///
/// Matrix elements are formed and their absolute values taken on the fly.
/// If the solver stops short of [`BOUND_REL_TOL`], the best Ritz value is
/// returned with `converged = false`.
pub fn spectral_norm_bound(op: &PauliSum, basis: &Arc<SectorBasis>) -> Result<NormEstimate> {
    let sector_op = SectorOperator::from_pauli(op, basis.clone())?;
    spectral_norm_bound_sector(&sector_op)
}

pub fn spectral_norm_bound_sector(op: &SectorOperator) -> Result<NormEstimate> {
    if op.is_diagonal() {
        let value = op.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        return Ok(NormEstimate::exact(value, NormKind::SpectralBound));
    }
    let opts = LanczosOptions {
        rel_tol: BOUND_REL_TOL,
        krylov_dim: 40,
        ..LanczosOptions::default()
    };
    let solve = lowest_eigenpairs_of(&NegatedAbs(op), 1, &opts)?;
    Ok(NormEstimate {
        value: -solve.pairs[0].energy,
        standard_error: 0.0,
        kind: NormKind::SpectralBound,
        sample_count: solve.matvecs,
        rng_seed: None,
        converged: solve.converged,
    })
}

/// Exact `||O||` on the sector by dense diagonalization.
pub fn dense_spectral_norm(op: &PauliSum, basis: &Arc<SectorBasis>) -> Result<NormEstimate> {
    let m = SectorOperator::from_pauli(op, basis.clone())?.to_dense();
    let m: DMatrix<C64> = (&m + m.adjoint()).scale(0.5);
    let eig = m.symmetric_eigenvalues();
    let value = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    Ok(NormEstimate::exact(value, NormKind::DenseExact))
}

/// `||O||_F / sqrt(d)` on the sector from `samples` uniformly drawn basis
/// states.
///
/// Sample `k` draws from its own ChaCha stream `(seed, k)`, so the result is
/// independent of the number of worker threads. The standard error follows
/// from the sample variance of `||O|i>||^2` by the delta method.
pub fn frobenius_sampled(
    op: &PauliSum,
    basis: &SectorBasis,
    samples: usize,
    seed: u64,
) -> Result<NormEstimate> {
    if samples < 2 {
        return Err(invalid("samples", "at least 2 samples are required"));
    }
    check_qubits(op, basis)?;
    let cols = PauliColumns::new(op)?;
    let dim = basis.dimension();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let i = rng.gen_range(0..dim);
            cols.column_norm_sqr(basis.state(i))
        })
        .collect();
    let (value, standard_error) = sqrt_mean_with_error(&values);
    Ok(NormEstimate {
        value,
        standard_error,
        kind: NormKind::FrobeniusSampled,
        sample_count: samples,
        rng_seed: Some(seed),
        converged: true,
    })
}

/// `||O||_F / sqrt(d)` summed over every basis state of the sector.
pub fn frobenius_exact(op: &PauliSum, basis: &SectorBasis) -> Result<NormEstimate> {
    check_qubits(op, basis)?;
    let cols = PauliColumns::new(op)?;
    let values: Vec<f64> = (0..basis.dimension())
        .into_par_iter()
        .map(|i| cols.column_norm_sqr(basis.state(i)))
        .collect();
    let mean = pairwise_sum(&values) / values.len() as f64;
    Ok(NormEstimate::exact(mean.sqrt(), NormKind::FrobeniusExact))
}

/// `sqrt(mean(x))` and its delta-method standard error.
pub fn sqrt_mean_with_error(x: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mean = pairwise_sum(x) / k;
    let dev: Vec<f64> = x.iter().map(|v| (v - mean).powi(2)).collect();
    let var = if x.len() > 1 {
        pairwise_sum(&dev) / (k - 1.0)
    } else {
        0.0
    };
    let root = mean.sqrt();
    let se = if root > 0.0 {
        (var / k).sqrt() / (2.0 * root)
    } else {
        0.0
    };
    (root, se)
}

fn check_qubits(op: &PauliSum, basis: &SectorBasis) -> Result<()> {
    if op.qubit_count() != basis.qubit_count() {
        return Err(Error::QubitMismatch {
            left: op.qubit_count(),
            right: basis.qubit_count(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    Worst,
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    SplitOperator,
    Tile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorConstant {
    pub kind: ConstantKind,
    pub scheme: SchemeKind,
    /// eV^3.
    pub value: f64,
    pub standard_error: f64,
    /// True when the value is a sum of separately bounded pieces.
    pub upper_bound: bool,
    /// The pieces the value was assembled from.
    pub components: Vec<(String, f64)>,
}

/// `W_SO = ||O_VTV|| / 24 + ||O_VTT|| / 12`.
pub fn worst_case_constant(vtv: &NormEstimate, vtt: &NormEstimate) -> ErrorConstant {
    so_constant(ConstantKind::Worst, vtv, vtt)
}

/// `A_SO` from the normalized Frobenius norms, with the same weights.
pub fn average_case_constant(vtv: &NormEstimate, vtt: &NormEstimate) -> ErrorConstant {
    so_constant(ConstantKind::Average, vtv, vtt)
}

fn so_constant(kind: ConstantKind, vtv: &NormEstimate, vtt: &NormEstimate) -> ErrorConstant {
    let value = vtv.value / 24.0 + vtt.value / 12.0;
    let standard_error =
        ((vtv.standard_error / 24.0).powi(2) + (vtt.standard_error / 12.0).powi(2)).sqrt();
    ErrorConstant {
        kind,
        scheme: SchemeKind::SplitOperator,
        value,
        standard_error,
        upper_bound: false,
        components: vec![("vtv".into(), vtv.value), ("vtt".into(), vtt.value)],
    }
}

/// `W_tile <= W_SO + W_T` (or the average-case analogue).
pub fn tile_constant(so: &ErrorConstant, kinetic: &ErrorConstant) -> Result<ErrorConstant> {
    if so.kind != kinetic.kind {
        return Err(Error::KindMismatch(format!(
            "{:?} split-operator constant combined with {:?} kinetic constant",
            so.kind, kinetic.kind
        )));
    }
    Ok(ErrorConstant {
        kind: so.kind,
        scheme: SchemeKind::Tile,
        value: so.value + kinetic.value,
        standard_error: so.standard_error.hypot(kinetic.standard_error),
        upper_bound: true,
        components: vec![("so".into(), so.value), ("kinetic".into(), kinetic.value)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector::enumerate_sector;

    fn estimate(value: f64) -> NormEstimate {
        NormEstimate::exact(value, NormKind::DenseExact)
    }

    #[test]
    fn constant_weights() {
        assert_eq!(
            worst_case_constant(&estimate(24.0), &estimate(12.0)).value,
            2.0
        );
        assert_eq!(
            average_case_constant(&estimate(24.0), &estimate(12.0)).value,
            2.0
        );
        assert_eq!(
            worst_case_constant(&estimate(0.0), &estimate(0.0)).value,
            0.0
        );
        let w = worst_case_constant(&estimate(2665.0), &estimate(2684.0));
        assert!((w.value - 334.7083).abs() < 1e-3);
        let a = average_case_constant(&estimate(298.6), &estimate(361.1));
        assert!((a.value - 42.5333).abs() < 1e-3);
    }

    #[test]
    fn tile_constant_checks_kind() {
        let w = worst_case_constant(&estimate(2665.0), &estimate(2684.0));
        let a = average_case_constant(&estimate(1.0), &estimate(1.0));
        assert!(matches!(tile_constant(&w, &a), Err(Error::KindMismatch(_))));
        let mut zero = w.clone();
        zero.value = 0.0;
        let tile = tile_constant(&w, &zero).unwrap();
        assert_eq!(tile.value, w.value);
        assert!(tile.upper_bound);
    }

    #[test]
    fn identity_frobenius_is_one() {
        let basis = enumerate_sector(4, 4, 0).unwrap();
        let id = PauliSum::identity(8).unwrap();
        let e = frobenius_sampled(&id, &basis, 50, 3).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.standard_error, 0.0);
    }

    #[test]
    fn zero_operands() {
        let t = PauliSum::new(8).unwrap();
        let mut v = PauliSum::new(8).unwrap();
        v.add_term(crate::pauli::PauliString::z(0), 1.0);
        let (a, b) = nested_commutators(&t, &v).unwrap();
        assert!(a.is_empty() && b.is_empty());
        let (a, b) = nested_commutators(&v, &t).unwrap();
        assert!(a.is_empty() && b.is_empty());
    }
}
