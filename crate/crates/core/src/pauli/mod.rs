//! Sparse Pauli-sum algebra with real coefficients.
//!
//! A [`PauliString`] stores an X-mask and a Z-mask; the operator it denotes is
//! `i^{|x & z|} X^x Z^z`, so a qubit with both bits set is a `Y`. Every stored
//! string is therefore Hermitian and a real-coefficient sum is Hermitian.

mod jw;
mod mask;
mod text;

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use jw::{jordan_wigner, jordan_wigner_ordered, orbital_index, SpinOrdering};
pub use mask::{Mask, MAX_QUBITS};

/// Default relative pruning threshold.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

/// Terms of `a` per parallel work unit in [`commutator`]. Fixed so the
/// reduction order does not depend on the worker count.
const COMMUTATOR_CHUNK: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    x: Mask,
    z: Mask,
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString {
        x: Mask::ZERO,
        z: Mask::ZERO,
    };

    pub fn from_masks(x: Mask, z: Mask) -> Self {
        Self { x, z }
    }

    pub fn from_letters(letters: &[(usize, Letter)]) -> Self {
        let mut p = PauliString::IDENTITY;
        for &(q, l) in letters {
            p.set(q, l);
        }
        p
    }

    pub fn x(q: usize) -> Self {
        Self::from_letters(&[(q, Letter::X)])
    }

    pub fn y(q: usize) -> Self {
        Self::from_letters(&[(q, Letter::Y)])
    }

    pub fn z(q: usize) -> Self {
        Self::from_letters(&[(q, Letter::Z)])
    }

    pub fn x_mask(&self) -> &Mask {
        &self.x
    }

    pub fn z_mask(&self) -> &Mask {
        &self.z
    }

    pub fn set(&mut self, q: usize, letter: Letter) {
        let (xb, zb) = match letter {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        };
        if self.x.get(q) != xb {
            self.x.flip(q);
        }
        if self.z.get(q) != zb {
            self.z.flip(q);
        }
    }

    pub fn letter(&self, q: usize) -> Letter {
        match (self.x.get(q), self.z.get(q)) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// True when the string contains only `I` and `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.x.is_zero()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        self.x.or(&self.z).count_ones()
    }

    /// Number of qubits needed to hold the string.
    pub fn width(&self) -> usize {
        self.x.width().max(self.z.width())
    }

    #[inline]
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        (self.x.overlap_parity(&other.z) ^ self.z.overlap_parity(&other.x)) == 0
    }

    /// `self * other = i^k * result`, returning `(k mod 4, result)`.
    #[inline]
    pub fn multiply(&self, other: &PauliString) -> (u32, PauliString) {
        let x = self.x.xor(&other.x);
        let z = self.z.xor(&other.z);
        let k = self.x.and(&self.z).count_ones()
            + other.x.and(&other.z).count_ones()
            + 2 * self.z.and(&other.x).count_ones()
            + 4 * MAX_QUBITS as u32
            - x.and(&z).count_ones();
        (k % 4, PauliString { x, z })
    }

    /// Action on a computational basis state: `P|b> = phase * |b ^ x>`,
    /// where `phase = i^k` and `k` is returned modulo 4.
    #[inline]
    pub fn apply_u64(&self, b: u64) -> (u32, u64) {
        let x = self.x.low_u64();
        let z = self.z.low_u64();
        let k = (x & z).count_ones() + 2 * (z & b).count_ones();
        (k % 4, b ^ x)
    }

    pub fn letters(&self) -> impl Iterator<Item = (usize, Letter)> + '_ {
        self.x
            .or(&self.z)
            .ones()
            .map(move |q| (q, self.letter(q)))
            .collect::<Vec<_>>()
            .into_iter()
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("I");
        }
        let mut first = true;
        for (q, l) in self.letters() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let c = match l {
                Letter::I => 'I',
                Letter::X => 'X',
                Letter::Y => 'Y',
                Letter::Z => 'Z',
            };
            write!(f, "{c}{q}")?;
        }
        Ok(())
    }
}

/// A real linear combination of Pauli strings on `qubit_count` qubits.
#[derive(Clone, Default, PartialEq)]
pub struct PauliSum {
    qubit_count: usize,
    terms: HashMap<PauliString, f64>,
}

impl PauliSum {
    pub fn new(qubit_count: usize) -> Result<Self> {
        if qubit_count > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                requested: qubit_count,
                limit: MAX_QUBITS,
            });
        }
        Ok(Self {
            qubit_count,
            terms: HashMap::new(),
        })
    }

    pub fn identity(qubit_count: usize) -> Result<Self> {
        let mut s = Self::new(qubit_count)?;
        s.add_term(PauliString::IDENTITY, 1.0);
        Ok(s)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    /// Number of stored strings, identity included.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of non-identity strings.
    pub fn term_count(&self) -> usize {
        self.terms.len() - usize::from(self.terms.contains_key(&PauliString::IDENTITY))
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.coefficient(&PauliString::IDENTITY)
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    /// Adds `coeff * p`. Panics if `p` does not fit the qubit count.
    pub fn add_term(&mut self, p: PauliString, coeff: f64) {
        assert!(
            p.width() <= self.qubit_count,
            "string {p} exceeds {} qubits",
            self.qubit_count
        );
        *self.terms.entry(p).or_insert(0.0) += coeff;
    }

    pub fn remove_term(&mut self, p: &PauliString) -> Option<f64> {
        self.terms.remove(p)
    }

    /// Unordered iteration over stored terms.
    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &f64)> {
        self.terms.iter()
    }

    /// Terms in canonical order (by Z-mask then X-mask, lowest first).
    pub fn sorted_terms(&self) -> Vec<(PauliString, f64)> {
        let mut v: Vec<_> = self.terms.iter().map(|(p, c)| (*p, *c)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Sum of absolute coefficients, a triangle-inequality bound on the norm.
    pub fn one_norm(&self) -> f64 {
        let mut c: Vec<f64> = self.terms.values().map(|c| c.abs()).collect();
        c.sort_by(f64::total_cmp);
        c.iter().sum()
    }

    /// True when every string is diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(PauliString::is_diagonal)
    }

    /// Drops coefficients with `|c| <= rel_tol * max|c|`, and exact zeros.
    pub fn prune(&mut self, rel_tol: f64) {
        let cut = rel_tol * self.max_abs_coefficient();
        self.terms.retain(|_, c| *c != 0.0 && c.abs() > cut);
    }

    pub fn pruned(mut self) -> Self {
        self.prune(PRUNE_TOLERANCE);
        self
    }

    pub fn scale(&mut self, factor: f64) {
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale(factor);
        self
    }

    pub fn add_assign_scaled(&mut self, other: &PauliSum, factor: f64) -> Result<()> {
        self.check_qubits(other)?;
        for (p, c) in other.sorted_terms() {
            *self.terms.entry(p).or_insert(0.0) += factor * c;
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = self.clone();
        out.add_assign_scaled(other, 1.0)?;
        Ok(out.pruned())
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = self.clone();
        out.add_assign_scaled(other, -1.0)?;
        Ok(out.pruned())
    }

    fn check_qubits(&self, other: &PauliSum) -> Result<()> {
        if self.qubit_count != other.qubit_count {
            return Err(Error::QubitMismatch {
                left: self.qubit_count,
                right: other.qubit_count,
            });
        }
        Ok(())
    }

    /// Hermitian part of the product, `(ab + ba)/2`. Anti-Hermitian pieces
    /// cancel exactly and are never formed.
    pub fn anticommutator_half(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_qubits(other)?;
        let mut out = PauliSum::new(self.qubit_count)?;
        for (p, cp) in self.sorted_terms() {
            for (q, cq) in other.sorted_terms() {
                if !p.commutes_with(&q) {
                    continue;
                }
                let (k, r) = p.multiply(&q);
                let sign = match k {
                    0 => 1.0,
                    2 => -1.0,
                    _ => {
                        return Err(Error::PhaseResolution {
                            term: r.to_string(),
                            residue: cp * cq,
                        })
                    }
                };
                *out.terms.entry(r).or_insert(0.0) += sign * cp * cq;
            }
        }
        Ok(out.pruned())
    }

    /// Largest qubit index used plus one.
    pub fn support_width(&self) -> usize {
        self.terms.keys().map(PauliString::width).max().unwrap_or(0)
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PauliSum({} qubits, {} terms)",
            self.qubit_count,
            self.len()
        )
    }
}

/// Returns `D` with `[a, b] = ab - ba = i D`. `D` is Hermitian for Hermitian
/// inputs, so nested commutators of real sums stay real.
pub fn commutator(a: &PauliSum, b: &PauliSum) -> Result<PauliSum> {
    a.check_qubits(b)?;
    let a_terms = a.sorted_terms();
    let b_terms = b.sorted_terms();
    let partials: Vec<Result<HashMap<PauliString, f64>>> = a_terms
        .par_chunks(COMMUTATOR_CHUNK)
        .map(|chunk| {
            let mut acc: HashMap<PauliString, f64> = HashMap::new();
            for (p, cp) in chunk {
                for (q, cq) in &b_terms {
                    if p.commutes_with(q) {
                        continue;
                    }
                    // pq - qp = 2 pq = 2 i^k r; divide by i.
                    let (k, r) = p.multiply(q);
                    let sign = match k {
                        1 => 1.0,
                        3 => -1.0,
                        _ => {
                            return Err(Error::PhaseResolution {
                                term: r.to_string(),
                                residue: 2.0 * cp * cq,
                            })
                        }
                    };
                    *acc.entry(r).or_insert(0.0) += 2.0 * sign * cp * cq;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut out = PauliSum::new(a.qubit_count)?;
    for partial in partials {
        let mut part: Vec<_> = partial?.into_iter().collect();
        part.sort_by(|x, y| x.0.cmp(&y.0));
        for (r, c) in part {
            *out.terms.entry(r).or_insert(0.0) += c;
        }
    }
    Ok(out.pruned())
}

/// Sparse image `op|b>` as `(bitstring, amplitude)` pairs, sorted by bitstring.
/// Bitstrings are limited to 64 qubits.
pub fn apply_to_basis_state(op: &PauliSum, b: u64) -> Result<Vec<(u64, num_complex::Complex64)>> {
    use num_complex::Complex64;
    if op.qubit_count > 64 {
        return Err(Error::TooManyQubits {
            requested: op.qubit_count,
            limit: 64,
        });
    }
    let mut acc: HashMap<u64, Complex64> = HashMap::new();
    for (p, c) in op.sorted_terms() {
        let (k, target) = p.apply_u64(b);
        *acc.entry(target).or_insert(Complex64::new(0.0, 0.0)) += i_power(k) * c;
    }
    let mut out: Vec<_> = acc
        .into_iter()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .collect();
    out.sort_by_key(|e| e.0);
    Ok(out)
}

#[inline]
pub(crate) fn i_power(k: u32) -> num_complex::Complex64 {
    use num_complex::Complex64;
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}
