use serde::{Deserialize, Serialize};

use super::{Mask, PauliString, PauliSum};
use crate::error::Result;
use crate::hamiltonian::{FermionHamiltonian, Spin};

/// Map from (site, spin) to qubit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinOrdering {
    /// `site0 up, site0 down, site1 up, ...`
    #[default]
    Interleaved,
    /// All up orbitals first, then all down orbitals.
    Blocked,
}

pub fn orbital_index(site: usize, spin: Spin, n_sites: usize, ordering: SpinOrdering) -> usize {
    match ordering {
        SpinOrdering::Interleaved => 2 * site + spin.index(),
        SpinOrdering::Blocked => spin.index() * n_sites + site,
    }
}

/// Jordan-Wigner images `(T, V)` in the interleaved ordering. `V` keeps its
/// identity component.
pub fn jordan_wigner(ham: &FermionHamiltonian) -> Result<(PauliSum, PauliSum)> {
    jordan_wigner_ordered(ham, SpinOrdering::Interleaved)
}

pub fn jordan_wigner_ordered(
    ham: &FermionHamiltonian,
    ordering: SpinOrdering,
) -> Result<(PauliSum, PauliSum)> {
    let n = ham.site_count;
    let nq = 2 * n;
    let orb = |site, spin| orbital_index(site, spin, n, ordering);

    let mut kinetic = PauliSum::new(nq)?;
    for h in &ham.kinetic {
        let (p, q) = (orb(h.i, h.spin), orb(h.j, h.spin));
        for (s, c) in hopping_strings(p, q) {
            kinetic.add_term(s, h.coeff * c);
        }
    }

    let mut potential = PauliSum::new(nq)?;
    for (i, &u) in ham.onsite.iter().enumerate() {
        let (a, b) = (orb(i, Spin::Up), orb(i, Spin::Down));
        let q = u / 4.0;
        potential.add_term(PauliString::IDENTITY, q);
        potential.add_term(PauliString::z(a), -q);
        potential.add_term(PauliString::z(b), -q);
        potential.add_term(zz(a, b), q);
    }
    for pt in &ham.pairwise {
        let q = pt.v / 4.0;
        for si in Spin::BOTH {
            for sj in Spin::BOTH {
                potential.add_term(zz(orb(pt.i, si), orb(pt.j, sj)), q);
            }
        }
    }
    Ok((kinetic.pruned(), potential.pruned()))
}

fn zz(a: usize, b: usize) -> PauliString {
    let mut z = Mask::single(a);
    z.set(b);
    PauliString::from_masks(Mask::ZERO, z)
}

/// `a+_p a_q + a+_q a_p = (X Z..Z X + Y Z..Z Y) / 2`.
pub(crate) fn hopping_strings(p: usize, q: usize) -> [(PauliString, f64); 2] {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let mut x = Mask::single(lo);
    x.set(hi);
    let chain = Mask::range(lo + 1, hi);
    [
        (PauliString::from_masks(x, chain), 0.5),
        (PauliString::from_masks(x, chain.or(&x)), 0.5),
    ]
}
