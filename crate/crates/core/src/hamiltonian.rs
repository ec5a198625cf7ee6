//! Pariser-Parr-Pople Hamiltonian and the particle-number symmetry shift.
//!
//! `H = T + V` with nearest-neighbour hopping
//! `T = -tau sum_{<ij>,s} (a+_{is} a_{js} + h.c.)` and density interaction
//! `V = u sum_i n_{i up} n_{i dn} + sum_{i<j} v_ij (n_i - 1)(n_j - 1)`,
//! where `v_ij = u / sqrt(1 + alpha r_ij^2)` is the Ohno potential.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{Lattice, BOND_LENGTH};
use crate::pauli::{PauliString, PauliSum, PRUNE_TOLERANCE};

/// Relative tolerance for treating two coefficients as the same value.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PppParams {
    /// Hopping integral, eV.
    pub tau: f64,
    /// On-site repulsion, eV.
    pub u: f64,
    /// Ohno screening, 1/Angstrom^2.
    pub alpha: f64,
    /// Carbon-carbon distance, Angstrom.
    pub bond_length: f64,
}

impl Default for PppParams {
    fn default() -> Self {
        Self {
            tau: 2.4,
            u: 11.13,
            alpha: 0.6117,
            bond_length: BOND_LENGTH,
        }
    }
}

impl PppParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau", self.tau),
            ("u", self.u),
            ("alpha", self.alpha),
            ("bond_length", self.bond_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    name,
                    format!("must be finite and positive, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Ohno interaction at distance `r` (Angstrom).
    pub fn ohno(&self, r: f64) -> f64 {
        self.u / (1.0 + self.alpha * r * r).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

/// `coeff * (a+_{i,spin} a_{j,spin} + a+_{j,spin} a_{i,spin})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingTerm {
    pub i: usize,
    pub j: usize,
    pub spin: Spin,
    pub coeff: f64,
}

/// `v * (n_i - 1)(n_j - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermionHamiltonian {
    pub site_count: usize,
    pub params: PppParams,
    pub kinetic: Vec<HoppingTerm>,
    /// On-site `u` per site.
    pub onsite: Vec<f64>,
    pub pairwise: Vec<PairTerm>,
}

impl FermionHamiltonian {
    /// Symmetric `N x N` matrix of `v_ij` with zero diagonal.
    pub fn interaction_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.site_count;
        let mut m = vec![vec![0.0; n]; n];
        for p in &self.pairwise {
            m[p.i][p.j] = p.v;
            m[p.j][p.i] = p.v;
        }
        m
    }

    /// Single-spin hopping matrix `A` with `A_ij = coeff` on bonds.
    pub fn hopping_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.site_count;
        let mut m = vec![vec![0.0; n]; n];
        for h in self.kinetic.iter().filter(|h| h.spin == Spin::Up) {
            m[h.i][h.j] += h.coeff;
            m[h.j][h.i] += h.coeff;
        }
        m
    }
}

pub fn build_ppp(lattice: &Lattice, params: &PppParams) -> Result<FermionHamiltonian> {
    params.validate()?;
    let n = lattice.site_count();
    let mut kinetic = Vec::with_capacity(2 * lattice.bonds.len());
    for spin in Spin::BOTH {
        for &(i, j) in &lattice.bonds {
            kinetic.push(HoppingTerm {
                i,
                j,
                spin,
                coeff: -params.tau,
            });
        }
    }
    let mut pairwise = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairwise.push(PairTerm {
                i,
                j,
                v: params.ohno(lattice.distance(i, j)),
            });
        }
    }
    Ok(FermionHamiltonian {
        site_count: n,
        params: *params,
        kinetic,
        onsite: vec![params.u; n],
        pairwise,
    })
}

/// Coefficients of `V' = V + c1 N + c2 N^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShiftParams {
    pub c1: f64,
    pub c2: f64,
}

/// The shifted potential with its identity component split off.
#[derive(Debug, Clone)]
pub struct ShiftedPotential {
    /// Non-identity strings only.
    pub operator: PauliSum,
    /// Identity coefficient, eV.
    pub offset: f64,
    pub shift: ShiftParams,
}

impl ShiftedPotential {
    pub fn term_count(&self) -> usize {
        self.operator.term_count()
    }
}

/// Number operator `sum_p (1 - Z_p)/2` on `qubit_count` spin orbitals.
pub fn number_operator(qubit_count: usize) -> Result<PauliSum> {
    let mut n = PauliSum::new(qubit_count)?;
    n.add_term(PauliString::IDENTITY, qubit_count as f64 / 2.0);
    for p in 0..qubit_count {
        n.add_term(PauliString::z(p), -0.5);
    }
    Ok(n)
}

/// Groups values that agree within [`COEFFICIENT_TOLERANCE`] and returns the
/// most frequent group's mean. Ties go to the larger magnitude.
pub fn modal_value(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut best: Option<(usize, f64)> = None;
    let mut start = 0;
    while start < v.len() {
        let mut end = start + 1;
        while end < v.len() && same_value(v[start], v[end]) {
            end += 1;
        }
        let count = end - start;
        let mean = v[start..end].iter().sum::<f64>() / count as f64;
        best = match best {
            None => Some((count, mean)),
            Some((bc, bm)) if count > bc || (count == bc && mean.abs() > bm.abs()) => {
                Some((count, mean))
            }
            keep => keep,
        };
        start = end;
    }
    best.map(|(_, m)| m)
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= COEFFICIENT_TOLERANCE * a.abs().max(b.abs())
}

/// Picks `c2` to cancel the most frequent two-qubit `ZZ` class and then `c1`
/// to cancel the most frequent single-`Z` class.
pub fn choose_shift(potential: &PauliSum) -> Result<ShiftParams> {
    let zz: Vec<f64> = potential
        .iter()
        .filter(|(p, _)| p.is_diagonal() && p.weight() == 2)
        .map(|(_, c)| *c)
        .collect();
    // N^2 contributes +c2/2 to every Z_p Z_q.
    let c2 = modal_value(&zz).map_or(0.0, |w| -2.0 * w);
    let partial = add_number_terms(potential, 0.0, c2)?;
    let z1: Vec<f64> = partial
        .iter()
        .filter(|(p, _)| p.is_diagonal() && p.weight() == 1)
        .map(|(_, c)| *c)
        .collect();
    // N contributes -c1/2 to every Z_p.
    let c1 = modal_value(&z1).map_or(0.0, |h| 2.0 * h);
    Ok(ShiftParams { c1, c2 })
}

fn add_number_terms(potential: &PauliSum, c1: f64, c2: f64) -> Result<PauliSum> {
    let q = potential.qubit_count();
    let n_op = number_operator(q)?;
    let mut out = potential.clone();
    if c1 != 0.0 {
        out.add_assign_scaled(&n_op, c1)?;
    }
    if c2 != 0.0 {
        let n2 = n_op.anticommutator_half(&n_op)?;
        out.add_assign_scaled(&n2, c2)?;
    }
    Ok(out.pruned())
}

/// `V + c1 N + c2 N^2` with the identity split into a scalar offset.
pub fn apply_shift(
    potential: &PauliSum,
    shift: &ShiftParams,
    n_sites: usize,
) -> Result<ShiftedPotential> {
    if potential.qubit_count() != 2 * n_sites {
        return Err(crate::error::Error::QubitMismatch {
            left: potential.qubit_count(),
            right: 2 * n_sites,
        });
    }
    let mut operator = add_number_terms(potential, shift.c1, shift.c2)?;
    let offset = operator.remove_term(&PauliString::IDENTITY).unwrap_or(0.0);
    operator.prune(PRUNE_TOLERANCE);
    Ok(ShiftedPotential {
        operator,
        offset,
        shift: *shift,
    })
}
