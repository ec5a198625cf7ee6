use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::SectorBasis;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::pauli::{PauliSum, MAX_QUBITS};

/// Sectors at or below this dimension are handled with dense matrices.
pub const DENSE_LIMIT: usize = 5000;

/// All strings sharing one X-mask: they map a basis state `b` to the single
/// target `b ^ x`.
#[derive(Debug, Clone)]
struct Group {
    x: u64,
    z: Vec<u64>,
    /// `c * i^{|x & z|}`, split into parts.
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Group {
    /// `<b ^ x| O_g |b>`.
    #[inline]
    fn amplitude(&self, b: u64) -> C64 {
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..self.z.len() {
            if (self.z[k] & b).count_ones() & 1 == 0 {
                re += self.re[k];
                im += self.im[k];
            } else {
                re -= self.re[k];
                im -= self.im[k];
            }
        }
        C64::new(re, im)
    }

    #[inline]
    fn amplitude_real(&self, b: u64) -> f64 {
        let mut re = 0.0;
        for k in 0..self.z.len() {
            if (self.z[k] & b).count_ones() & 1 == 0 {
                re += self.re[k];
            } else {
                re -= self.re[k];
            }
        }
        re
    }
}

/// A Pauli sum grouped by X-mask, for evaluating `O|b>` on single basis
/// states without any sector-sized storage.
#[derive(Debug, Clone)]
pub struct PauliColumns {
    diagonal: Option<Group>,
    groups: Vec<Group>,
}

impl PauliColumns {
    pub fn new(op: &PauliSum) -> Result<Self> {
        if op.qubit_count() > 64 {
            return Err(Error::TooManyQubits {
                requested: op.qubit_count(),
                limit: 64.min(MAX_QUBITS),
            });
        }
        let mut by_x: BTreeMap<u64, Group> = BTreeMap::new();
        for (p, c) in op.sorted_terms() {
            let x = p.x_mask().low_u64();
            let z = p.z_mask().low_u64();
            let phase = crate::pauli::i_power((x & z).count_ones()) * c;
            let g = by_x.entry(x).or_insert_with(|| Group {
                x,
                z: Vec::new(),
                re: Vec::new(),
                im: Vec::new(),
            });
            g.z.push(z);
            g.re.push(phase.re);
            g.im.push(phase.im);
        }
        let diagonal = by_x.remove(&0);
        Ok(Self {
            diagonal,
            groups: by_x.into_values().collect(),
        })
    }

    /// Number of distinct X-masks, the diagonal included.
    pub fn group_count(&self) -> usize {
        self.groups.len() + usize::from(self.diagonal.is_some())
    }

    /// Nonzero entries `(target, <target|O|b>)` of `O|b>`.
    pub fn column(&self, b: u64) -> Vec<(u64, C64)> {
        let mut out = Vec::with_capacity(self.groups.len() + 1);
        for g in self.diagonal.iter().chain(&self.groups) {
            let a = g.amplitude(b);
            if a.norm_sqr() > 0.0 {
                out.push((b ^ g.x, a));
            }
        }
        out
    }

    /// `||O|b>||^2`. Distinct X-masks reach distinct targets, so the groups
    /// contribute independently.
    pub fn column_norm_sqr(&self, b: u64) -> f64 {
        self.diagonal
            .iter()
            .chain(&self.groups)
            .map(|g| g.amplitude(b).norm_sqr())
            .sum()
    }
}

/// Stored off-diagonal elements, row `r` holding `O_{r,t}`.
#[derive(Debug, Clone)]
struct Rows {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Off-diagonal entries above this count are generated on the fly instead of
/// stored.
pub const STORED_ENTRY_LIMIT: usize = 40_000_000;

/// A Hermitian Pauli sum acting on a sector, with off-diagonal elements
/// stored as sparse rows when they fit [`STORED_ENTRY_LIMIT`] and generated
/// matrix-free otherwise.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    basis: Arc<SectorBasis>,
    diagonal: Vec<f64>,
    groups: Vec<Group>,
    real: bool,
    rows: Option<Rows>,
}

impl SectorOperator {
    pub fn from_pauli(op: &PauliSum, basis: Arc<SectorBasis>) -> Result<Self> {
        if op.qubit_count() != basis.qubit_count() {
            return Err(Error::QubitMismatch {
                left: op.qubit_count(),
                right: basis.qubit_count(),
            });
        }
        let PauliColumns {
            diagonal: diag_group,
            groups,
        } = PauliColumns::new(op)?;
        let real = groups.iter().all(|g| g.im.iter().all(|&v| v == 0.0));
        let dim = basis.dimension();
        let diagonal = match diag_group {
            Some(g) => (0..dim)
                .into_par_iter()
                .map(|i| g.amplitude_real(basis.state(i)))
                .collect(),
            None => vec![0.0; dim],
        };
        let mut op = Self {
            basis,
            diagonal,
            groups,
            real,
            rows: None,
        };
        op.store_rows();
        Ok(op)
    }

    fn store_rows(&mut self) {
        self.rows = None;
        let dim = self.dimension();
        if self.groups.is_empty()
            || dim.saturating_mul(self.groups.len()) > STORED_ENTRY_LIMIT
            || dim > u32::MAX as usize
        {
            return;
        }
        let basis = &self.basis;
        let per_row: Vec<Vec<(u32, f64, f64)>> = (0..dim)
            .into_par_iter()
            .map(|r| {
                let b = basis.state(r);
                let mut row = Vec::new();
                for g in &self.groups {
                    if let Some(t) = basis.index(b ^ g.x) {
                        let a = g.amplitude(b).conj();
                        if a.norm_sqr() > 0.0 {
                            row.push((t as u32, a.re, a.im));
                        }
                    }
                }
                row
            })
            .collect();
        let nnz: usize = per_row.iter().map(Vec::len).sum();
        let mut rows = Rows {
            offsets: Vec::with_capacity(dim + 1),
            cols: Vec::with_capacity(nnz),
            re: Vec::with_capacity(nnz),
            im: if self.real {
                Vec::new()
            } else {
                Vec::with_capacity(nnz)
            },
        };
        rows.offsets.push(0);
        for row in per_row {
            for (c, re, im) in row {
                rows.cols.push(c);
                rows.re.push(re);
                if !self.real {
                    rows.im.push(im);
                }
            }
            rows.offsets.push(rows.cols.len());
        }
        self.rows = Some(rows);
    }

    /// A purely diagonal operator given by its values on the basis.
    pub fn from_diagonal(diagonal: Vec<f64>, basis: Arc<SectorBasis>) -> Result<Self> {
        if diagonal.len() != basis.dimension() {
            return Err(crate::error::invalid(
                "diagonal",
                "length differs from sector dimension",
            ));
        }
        Ok(Self {
            basis,
            diagonal,
            groups: Vec::new(),
            real: true,
            rows: None,
        })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_diagonal(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Number of distinct off-diagonal X-masks.
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Sum with a scaled copy of `other` on the same basis.
    pub fn add_scaled(&self, other: &SectorOperator, factor: f64) -> SectorOperator {
        let mut out = self.clone();
        for (d, o) in out.diagonal.iter_mut().zip(&other.diagonal) {
            *d += factor * o;
        }
        for g in &other.groups {
            let mut g = g.clone();
            g.re.iter_mut().for_each(|v| *v *= factor);
            g.im.iter_mut().for_each(|v| *v *= factor);
            match out.groups.iter_mut().find(|h| h.x == g.x) {
                Some(h) => {
                    h.z.extend(g.z);
                    h.re.extend(g.re);
                    h.im.extend(g.im);
                }
                None => out.groups.push(g),
            }
        }
        out.groups.sort_by_key(|g| g.x);
        out.real = self.real && other.real;
        out.store_rows();
        out
    }

    /// `y = O x` for a real operator and real vector.
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        assert!(self.real, "apply_real on an operator with complex elements");
        if let Some(rows) = &self.rows {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| {
                let mut acc = self.diagonal[r] * x[r];
                for k in rows.offsets[r]..rows.offsets[r + 1] {
                    acc += rows.re[k] * x[rows.cols[k] as usize];
                }
                *yr = acc;
            });
            return;
        }
        let basis = &self.basis;
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            let b = basis.state(r);
            let mut acc = self.diagonal[r] * x[r];
            for g in &self.groups {
                if let Some(t) = basis.index(b ^ g.x) {
                    acc += g.amplitude_real(b) * x[t];
                }
            }
            *yr = acc;
        });
    }

    /// `y = |O| x`, with absolute values taken per matrix element.
    pub fn apply_abs(&self, x: &[f64], y: &mut [f64]) {
        if let Some(rows) = &self.rows {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| {
                let mut acc = self.diagonal[r].abs() * x[r];
                for k in rows.offsets[r]..rows.offsets[r + 1] {
                    let a = if self.real {
                        rows.re[k].abs()
                    } else {
                        rows.re[k].hypot(rows.im[k])
                    };
                    acc += a * x[rows.cols[k] as usize];
                }
                *yr = acc;
            });
            return;
        }
        let basis = &self.basis;
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            let b = basis.state(r);
            let mut acc = self.diagonal[r].abs() * x[r];
            for g in &self.groups {
                if let Some(t) = basis.index(b ^ g.x) {
                    acc += g.amplitude(b).norm() * x[t];
                }
            }
            *yr = acc;
        });
    }

    /// `y = O x` for complex vectors.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        if let Some(rows) = &self.rows {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| {
                let mut acc = x[r] * self.diagonal[r];
                for k in rows.offsets[r]..rows.offsets[r + 1] {
                    let a = if self.real {
                        C64::new(rows.re[k], 0.0)
                    } else {
                        C64::new(rows.re[k], rows.im[k])
                    };
                    acc += a * x[rows.cols[k] as usize];
                }
                *yr = acc;
            });
            return;
        }
        let basis = &self.basis;
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            let b = basis.state(r);
            let mut acc = x[r] * self.diagonal[r];
            for g in &self.groups {
                if let Some(t) = basis.index(b ^ g.x) {
                    // O_{r,t} = conj(O_{t,r}) by hermiticity.
                    acc += g.amplitude(b).conj() * x[t];
                }
            }
            *yr = acc;
        });
    }

    /// Nonzero elements `(target index, <target|O|b>)` of column `index`.
    pub fn column(&self, index: usize) -> Vec<(usize, C64)> {
        let b = self.basis.state(index);
        let mut out = Vec::with_capacity(self.groups.len() + 1);
        if self.diagonal[index] != 0.0 {
            out.push((index, C64::new(self.diagonal[index], 0.0)));
        }
        for g in &self.groups {
            if let Some(t) = self.basis.index(b ^ g.x) {
                let a = g.amplitude(b);
                if a.norm_sqr() > 0.0 {
                    out.push((t, a));
                }
            }
        }
        out
    }

    /// `||O|b>||^2` for basis state `index`.
    pub fn column_norm_sqr(&self, index: usize) -> f64 {
        let b = self.basis.state(index);
        let mut acc = self.diagonal[index].powi(2);
        for g in &self.groups {
            if self.basis.contains(b ^ g.x) {
                acc += g.amplitude(b).norm_sqr();
            }
        }
        acc
    }

    /// Weight of `O|b>` that falls outside the sector.
    pub fn leak_weight(&self, index: usize) -> f64 {
        let b = self.basis.state(index);
        self.groups
            .iter()
            .filter(|g| !self.basis.contains(b ^ g.x))
            .map(|g| g.amplitude(b).norm_sqr())
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dimension();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for c in 0..n {
            for (r, a) in self.column(c) {
                m[(r, c)] += a;
            }
        }
        m
    }

    /// Dense real matrix; errors when any element is complex.
    pub fn to_dense_real(&self) -> Result<DMatrix<f64>> {
        let m = self.to_dense();
        let worst = m.iter().fold(0.0f64, |w, z| w.max(z.im.abs()));
        if worst > 1e-12 * m.iter().fold(1.0f64, |w, z| w.max(z.norm())) {
            return Err(Error::PhaseResolution {
                term: "dense sector matrix".into(),
                residue: worst,
            });
        }
        Ok(m.map(|z| z.re))
    }

    /// Dense matrix of element-wise absolute values.
    pub fn to_dense_abs(&self) -> DMatrix<f64> {
        self.to_dense().map(|z| z.norm())
    }
}
