use std::fmt;

pub(crate) const WORDS: usize = 4;

/// Maximum number of qubits a [`Mask`] can address.
pub const MAX_QUBITS: usize = 64 * WORDS;

/// Fixed-width bit set over qubit indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Mask(pub(crate) [u64; WORDS]);

impl Mask {
    pub const ZERO: Mask = Mask([0; WORDS]);

    pub fn from_u64(bits: u64) -> Self {
        let mut w = [0; WORDS];
        w[0] = bits;
        Mask(w)
    }

    pub fn single(q: usize) -> Self {
        let mut m = Mask::ZERO;
        m.set(q);
        m
    }

    /// Bits `lo..hi` set.
    pub fn range(lo: usize, hi: usize) -> Self {
        let mut m = Mask::ZERO;
        for q in lo..hi {
            m.set(q);
        }
        m
    }

    #[inline]
    pub fn get(&self, q: usize) -> bool {
        (self.0[q / 64] >> (q % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, q: usize) {
        self.0[q / 64] |= 1 << (q % 64);
    }

    #[inline]
    pub fn flip(&mut self, q: usize) {
        self.0[q / 64] ^= 1 << (q % 64);
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    #[inline]
    pub fn and(&self, other: &Mask) -> Mask {
        let mut w = self.0;
        for (a, b) in w.iter_mut().zip(other.0.iter()) {
            *a &= b;
        }
        Mask(w)
    }

    #[inline]
    pub fn or(&self, other: &Mask) -> Mask {
        let mut w = self.0;
        for (a, b) in w.iter_mut().zip(other.0.iter()) {
            *a |= b;
        }
        Mask(w)
    }

    #[inline]
    pub fn xor(&self, other: &Mask) -> Mask {
        let mut w = self.0;
        for (a, b) in w.iter_mut().zip(other.0.iter()) {
            *a ^= b;
        }
        Mask(w)
    }

    /// Parity of `popcount(self & other)`.
    #[inline]
    pub fn overlap_parity(&self, other: &Mask) -> u32 {
        let mut acc = 0u64;
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            acc ^= a & b;
        }
        acc.count_ones() & 1
    }

    /// Index one past the highest set bit.
    pub fn width(&self) -> usize {
        for i in (0..WORDS).rev() {
            if self.0[i] != 0 {
                return 64 * i + 64 - self.0[i].leading_zeros() as usize;
            }
        }
        0
    }

    /// Lowest word; only meaningful when the mask fits in 64 bits.
    #[inline]
    pub fn low_u64(&self) -> u64 {
        self.0[0]
    }

    pub fn fits_u64(&self) -> bool {
        self.0[1..].iter().all(|&w| w == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(64 * i + b)
                }
            })
        })
    }
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ones: Vec<usize> = self.ones().collect();
        write!(f, "Mask{ones:?}")
    }
}
