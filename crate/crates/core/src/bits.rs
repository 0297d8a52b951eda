//! Fixed-length bit-strings up to 128 bits, leftmost bit first.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_BITS: usize = 128;

/// A bit-string of length `len`. Position 0 is the leftmost bit and lives in
/// bit 0 of `word`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    word: u128,
}

pub(crate) fn low_mask(len: usize) -> u128 {
    if len >= 128 {
        u128::MAX
    } else {
        (1u128 << len) - 1
    }
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_BITS, "bit-string longer than {MAX_BITS}");
        Self { len, word: 0 }
    }

    pub fn from_word(len: usize, word: u128) -> Self {
        assert!(len <= MAX_BITS, "bit-string longer than {MAX_BITS}");
        Self { len, word: word & low_mask(len) }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self::from_word(len, rng.random::<u128>())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn word(&self) -> u128 {
        self.word
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.word >> i) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        if value {
            self.word |= 1 << i;
        } else {
            self.word &= !(1 << i);
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.word ^= 1 << i;
    }

    pub fn flipped(mut self, i: usize) -> Self {
        self.flip(i);
        self
    }

    pub fn swapped(mut self, i: usize, j: usize) -> Self {
        let (a, b) = (self.get(i), self.get(j));
        self.set(i, b);
        self.set(j, a);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Unsigned value of `width` bits starting at `start`, most significant first.
    pub fn read_msb_first(&self, start: usize, width: usize) -> u64 {
        (start..start + width).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    pub fn write_msb_first(&mut self, start: usize, width: usize, value: u64) {
        for t in 0..width {
            let bit = (value >> (width - 1 - t)) & 1 == 1;
            self.set(start + t, bit);
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > MAX_BITS {
            return Err(Error::Parse(format!("bit-string longer than {MAX_BITS}")));
        }
        let mut out = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i, true),
                other => return Err(Error::Parse(format!("invalid bit character {other:?}"))),
            }
        }
        Ok(out)
    }
}
