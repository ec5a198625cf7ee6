//! Fixed particle-number, fixed S_z computational bases and the linear
//! algebra restricted to them.
//!
//! Basis states are ordered lexicographically on `(up occupation, down
//! occupation)` read as integers, so the index of a state is
//! `rank(up) * C(N, n_dn) + rank(dn)` with `rank` the combinatorial number
//! system.

mod krylov;
mod lanczos;
mod operator;
mod snapshot;
mod spin;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::Spin;
use crate::pauli::SpinOrdering;

pub use krylov::{expm_apply, propagate, Factor, KRYLOV_TOLERANCE};
pub use lanczos::{
    lowest_eigenpairs, lowest_eigenpairs_of, EigenSolve, Eigenpair, LanczosOptions, NegatedAbs,
    SymmetricOperator,
};
pub use operator::{PauliColumns, SectorOperator, DENSE_LIMIT, STORED_ENTRY_LIMIT};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};
pub use spin::{spin_label, total_spin_expectation};

/// Sites supported by the 64-bit state encoding.
pub const MAX_SITES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorSpec {
    pub n_sites: usize,
    pub electrons: usize,
    /// Twice the S_z quantum number.
    pub sz_twice: i32,
    pub ordering: SpinOrdering,
}

impl SectorSpec {
    /// Half filling with the lowest `|S_z|`.
    pub fn half_filling(n_sites: usize) -> Self {
        Self {
            n_sites,
            electrons: n_sites,
            sz_twice: (n_sites % 2) as i32,
            ordering: SpinOrdering::Interleaved,
        }
    }

    pub fn with_sz_twice(self, sz_twice: i32) -> Self {
        Self { sz_twice, ..self }
    }

    pub fn with_ordering(self, ordering: SpinOrdering) -> Self {
        Self { ordering, ..self }
    }

    pub fn spin_counts(&self) -> Result<(usize, usize)> {
        let e = self.electrons as i64;
        let s = self.sz_twice as i64;
        if (e + s) % 2 != 0 || e + s < 0 || e - s < 0 {
            return Err(Error::InfeasibleSector(format!(
                "{} electrons cannot have 2Sz = {}",
                self.electrons, self.sz_twice
            )));
        }
        let (up, dn) = (((e + s) / 2) as usize, ((e - s) / 2) as usize);
        if up > self.n_sites || dn > self.n_sites {
            return Err(Error::InfeasibleSector(format!(
                "{up} up / {dn} down electrons on {} sites",
                self.n_sites
            )));
        }
        Ok((up, dn))
    }
}

#[derive(Debug, Clone)]
pub struct SectorBasis {
    spec: SectorSpec,
    n_up: usize,
    n_dn: usize,
    /// Up occupations as site masks, ascending.
    ups: Vec<u64>,
    dns: Vec<u64>,
    /// The same occupations spread onto qubit positions.
    ups_q: Vec<u64>,
    dns_q: Vec<u64>,
    up_qmask: u64,
    dn_qmask: u64,
    binom: Vec<Vec<u64>>,
    /// `rank` for every site mask, present when `2^N` is small.
    rank_table: Option<(Vec<u32>, Vec<u32>)>,
}

const RANK_TABLE_MAX_SITES: usize = 24;

/// Enumerates the sector basis.
pub fn enumerate_sector(n_sites: usize, electrons: usize, sz_twice: i32) -> Result<SectorBasis> {
    SectorBasis::new(SectorSpec {
        n_sites,
        electrons,
        sz_twice,
        ordering: SpinOrdering::Interleaved,
    })
}

impl SectorBasis {
    pub fn new(spec: SectorSpec) -> Result<Self> {
        if spec.n_sites == 0 || spec.n_sites > MAX_SITES {
            return Err(invalid("n_sites", format!("must be in 1..={MAX_SITES}")));
        }
        if spec.electrons > 2 * spec.n_sites {
            return Err(Error::InfeasibleSector(format!(
                "{} electrons exceed {} spin orbitals",
                spec.electrons,
                2 * spec.n_sites
            )));
        }
        let (n_up, n_dn) = spec.spin_counts()?;
        let n = spec.n_sites;
        let ups = combinations(n, n_up);
        let dns = combinations(n, n_dn);
        let spread = |m: u64, s: Spin| spread_sites(m, s, n, spec.ordering);
        let ups_q = ups.iter().map(|&m| spread(m, Spin::Up)).collect();
        let dns_q = dns.iter().map(|&m| spread(m, Spin::Down)).collect();
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let rank_table = (n <= RANK_TABLE_MAX_SITES).then(|| {
            let table = |list: &[u64]| {
                let mut t = vec![u32::MAX; 1usize << n];
                for (r, &m) in list.iter().enumerate() {
                    t[m as usize] = r as u32;
                }
                t
            };
            (table(&ups), table(&dns))
        });
        Ok(Self {
            spec,
            n_up,
            n_dn,
            ups,
            dns,
            ups_q,
            dns_q,
            up_qmask: spread(all, Spin::Up),
            dn_qmask: spread(all, Spin::Down),
            binom: binomial_table(n),
            rank_table,
        })
    }

    pub fn spec(&self) -> SectorSpec {
        self.spec
    }

    pub fn n_sites(&self) -> usize {
        self.spec.n_sites
    }

    pub fn qubit_count(&self) -> usize {
        2 * self.spec.n_sites
    }

    pub fn electrons(&self) -> usize {
        self.spec.electrons
    }

    pub fn sz_twice(&self) -> i32 {
        self.spec.sz_twice
    }

    pub fn ordering(&self) -> SpinOrdering {
        self.spec.ordering
    }

    pub fn spin_counts(&self) -> (usize, usize) {
        (self.n_up, self.n_dn)
    }

    pub fn dimension(&self) -> usize {
        self.ups.len() * self.dns.len()
    }

    /// Qubit bitstring of basis state `index`.
    #[inline]
    pub fn state(&self, index: usize) -> u64 {
        let nd = self.dns.len();
        self.ups_q[index / nd] | self.dns_q[index % nd]
    }

    pub fn states(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.dimension()).map(move |i| self.state(i))
    }

    #[inline]
    pub fn contains(&self, state: u64) -> bool {
        state & !(self.up_qmask | self.dn_qmask) == 0
            && (state & self.up_qmask).count_ones() as usize == self.n_up
            && (state & self.dn_qmask).count_ones() as usize == self.n_dn
    }

    /// Index of `state`, or `None` if it lies outside the sector.
    #[inline]
    pub fn index(&self, state: u64) -> Option<usize> {
        if !self.contains(state) {
            return None;
        }
        let (up, dn) = self.split(state);
        match &self.rank_table {
            Some((tu, td)) => {
                Some(tu[up as usize] as usize * self.dns.len() + td[dn as usize] as usize)
            }
            None => Some(self.rank(up) * self.dns.len() + self.rank(dn)),
        }
    }

    /// Site masks `(up, down)` of a qubit bitstring.
    #[inline]
    pub fn split(&self, state: u64) -> (u64, u64) {
        match self.spec.ordering {
            SpinOrdering::Interleaved => (compress_even(state), compress_even(state >> 1)),
            SpinOrdering::Blocked => {
                let n = self.spec.n_sites;
                let low = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                (state & low, state >> n)
            }
        }
    }

    #[inline]
    fn rank(&self, mask: u64) -> usize {
        let mut r = 0u64;
        let mut m = mask;
        let mut k = 1;
        while m != 0 {
            let c = m.trailing_zeros() as usize;
            r += self.binom[c][k];
            k += 1;
            m &= m - 1;
        }
        r as usize
    }

    /// Qubit index of orbital `(site, spin)`.
    pub fn orbital(&self, site: usize, spin: Spin) -> usize {
        crate::pauli::orbital_index(site, spin, self.spec.n_sites, self.spec.ordering)
    }
}

fn spread_sites(mask: u64, spin: Spin, n: usize, ordering: SpinOrdering) -> u64 {
    let mut out = 0u64;
    for site in 0..n {
        if (mask >> site) & 1 == 1 {
            out |= 1u64 << crate::pauli::orbital_index(site, spin, n, ordering);
        }
    }
    out
}

/// Gathers the even bits of `x` into the low half.
#[inline]
fn compress_even(x: u64) -> u64 {
    let mut x = x & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x >> 4)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x >> 8)) & 0x0000_ffff_0000_ffff;
    (x | (x >> 16)) & 0x0000_0000_ffff_ffff
}

/// All `k`-subsets of `n` bits in increasing numeric order (Gosper's hack).
fn combinations(n: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut v: u64 = (1u64 << k) - 1;
    let limit: u64 = 1u64 << n;
    while v < limit {
        out.push(v);
        let t = v | (v - 1);
        let next = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
        if next <= v {
            break;
        }
        v = next;
    }
    out
}

fn binomial_table(n: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; n + 2]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
        }
    }
    c
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(enumerate_sector(6, 6, 0).unwrap().dimension(), 400);
        assert_eq!(enumerate_sector(10, 10, 0).unwrap().dimension(), 63504);
        assert_eq!(
            enumerate_sector(13, 13, 1).unwrap().dimension() as u64,
            binomial(13, 7) * binomial(13, 6)
        );
    }

    #[test]
    fn infeasible() {
        assert!(enumerate_sector(6, 6, 1).is_err());
        assert!(enumerate_sector(6, 13, 1).is_err());
        assert!(enumerate_sector(3, 6, 4).is_err());
    }

    #[test]
    fn index_round_trip() {
        for ordering in [SpinOrdering::Interleaved, SpinOrdering::Blocked] {
            let spec = SectorSpec {
                n_sites: 7,
                electrons: 6,
                sz_twice: 2,
                ordering,
            };
            let b = SectorBasis::new(spec).unwrap();
            let mut prev = None;
            for i in 0..b.dimension() {
                let s = b.state(i);
                assert_eq!(b.index(s), Some(i));
                let (up, dn) = b.split(s);
                assert_eq!(up.count_ones(), 4);
                assert_eq!(dn.count_ones(), 2);
                if let Some(p) = prev {
                    assert!(p < (up, dn));
                }
                prev = Some((up, dn));
            }
            assert_eq!(b.index(0b1), None);
        }
    }

    #[test]
    fn gosper_counts() {
        assert_eq!(combinations(10, 5).len(), 252);
        assert_eq!(combinations(4, 0), vec![0]);
        assert_eq!(combinations(4, 4), vec![0b1111]);
    }
}
