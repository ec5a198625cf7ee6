//! A molecule's PPP model in every representation the analyses need.

use std::sync::Arc;

use crate::error::Result;
use crate::hamiltonian::{
    apply_shift, build_ppp, choose_shift, FermionHamiltonian, PppParams, ShiftedPotential,
};
use crate::lattice::{Lattice, Molecule};
use crate::pauli::{jordan_wigner_ordered, PauliSum, SpinOrdering};
use crate::sector::{SectorBasis, SectorOperator, SectorSpec};

#[derive(Debug, Clone)]
pub struct Model {
    pub molecule: Molecule,
    pub lattice: Lattice,
    pub fermion: FermionHamiltonian,
    pub ordering: SpinOrdering,
    /// Jordan-Wigner image of `T`.
    pub kinetic: PauliSum,
    /// Jordan-Wigner image of `V`, identity included.
    pub potential: PauliSum,
}

impl Model {
    pub fn new(molecule: Molecule, params: &PppParams) -> Result<Self> {
        Self::with_ordering(molecule, params, SpinOrdering::Interleaved)
    }

    pub fn with_ordering(
        molecule: Molecule,
        params: &PppParams,
        ordering: SpinOrdering,
    ) -> Result<Self> {
        let lattice = molecule.build()?;
        let fermion = build_ppp(&lattice, params)?;
        let (kinetic, potential) = jordan_wigner_ordered(&fermion, ordering)?;
        Ok(Self {
            molecule,
            lattice,
            fermion,
            ordering,
            kinetic,
            potential,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.site_count()
    }

    pub fn hamiltonian(&self) -> Result<PauliSum> {
        self.kinetic.add(&self.potential)
    }

    pub fn shifted_potential(&self) -> Result<ShiftedPotential> {
        let shift = choose_shift(&self.potential)?;
        apply_shift(&self.potential, &shift, self.n_sites())
    }

    /// Half filling, lowest `|S_z|`, in this model's ordering.
    pub fn half_filling(&self) -> SectorSpec {
        SectorSpec::half_filling(self.n_sites()).with_ordering(self.ordering)
    }

    pub fn basis(&self, spec: SectorSpec) -> Result<Arc<SectorBasis>> {
        Ok(Arc::new(SectorBasis::new(spec)?))
    }

    /// `(T, V, H)` on a sector.
    pub fn sector_operators(&self, basis: &Arc<SectorBasis>) -> Result<SectorTriple> {
        let t = SectorOperator::from_pauli(&self.kinetic, basis.clone())?;
        let v = SectorOperator::from_pauli(&self.potential, basis.clone())?;
        let h = t.add_scaled(&v, 1.0);
        Ok(SectorTriple { t, v, h })
    }
}

#[derive(Debug, Clone)]
pub struct SectorTriple {
    pub t: SectorOperator,
    pub v: SectorOperator,
    pub h: SectorOperator,
}
