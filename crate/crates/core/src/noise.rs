//! Alice's private noise generators and the fixed-point attribute codec.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Every generated noise value lands on this grid.
pub const NOISE_GRID: f64 = 1.0 / 1024.0;

/// Upper end of R4's redraw interval for positive draws.
///
/// Exact zero mean would need `2 * sqrt(2/pi) ~ 1.5958`; with this constant
/// the mean sits at roughly `-0.0006 * delta`.
pub const R4_POSITIVE_SPAN: f64 = 1.5934;

/// Round half away from zero onto the 1/1024 grid.
pub fn round_to_grid(x: f64) -> f64 {
    (x / NOISE_GRID).round() * NOISE_GRID
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorKind {
    /// Uniform on `[-d, d]`.
    R0,
    /// R0 pushed `0.5d` away from zero.
    R1,
    /// R0, positives doubled, negatives shifted by `-0.5d`.
    R2,
    /// Normal with mean 0 and standard deviation `d`.
    R3,
    /// R3, positives redrawn uniformly from `(0, 1.5934d]`.
    R4,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] =
        [GeneratorKind::R0, GeneratorKind::R1, GeneratorKind::R2, GeneratorKind::R3, GeneratorKind::R4];
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "R0" => Ok(Self::R0),
            "R1" => Ok(Self::R1),
            "R2" => Ok(Self::R2),
            "R3" => Ok(Self::R3),
            "R4" => Ok(Self::R4),
            other => Err(Error::Parse(format!("unknown generator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGenerator {
    kind: GeneratorKind,
    delta: f64,
}

impl NoiseGenerator {
    pub fn new(kind: GeneratorKind, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Param(format!("noise delta must be positive, got {delta}")));
        }
        Ok(Self { kind, delta })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// One draw, rounded to the 1/1024 grid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        round_to_grid(self.sample_raw(rng))
    }

    pub fn sample_vec<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        (0..k).map(|_| self.sample(rng)).collect()
    }

    fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let d = self.delta;
        let uniform = |rng: &mut R| rng.random_range(-d..=d);
        let normal = |rng: &mut R| Normal::new(0.0, d).expect("positive sd").sample(rng);
        match self.kind {
            GeneratorKind::R0 => uniform(rng),
            GeneratorKind::R1 => {
                let r = uniform(rng);
                if r > 0.0 {
                    r + 0.5 * d
                } else if r < 0.0 {
                    r - 0.5 * d
                } else {
                    r
                }
            }
            GeneratorKind::R2 => {
                let r = uniform(rng);
                if r > 0.0 {
                    2.0 * r
                } else if r < 0.0 {
                    r - 0.5 * d
                } else {
                    r
                }
            }
            GeneratorKind::R3 => normal(rng),
            GeneratorKind::R4 => {
                let r = normal(rng);
                if r > 0.0 {
                    // 1 - U with U in [0, 1) lands in (0, 1].
                    R4_POSITIVE_SPAN * d * (1.0 - rng.random::<f64>())
                } else {
                    r
                }
            }
        }
    }
}

impl fmt::Display for NoiseGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:delta={}", self.kind, self.delta)
    }
}

/// Parses `"R2:delta=0.5"`; `delta` also accepts `a/b` fractions.
impl FromStr for NoiseGenerator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected KIND:delta=VALUE, got {s:?}")))?;
        let value = rest
            .trim()
            .strip_prefix("delta=")
            .ok_or_else(|| Error::Parse(format!("missing delta= in {s:?}")))?;
        Self::new(kind.parse()?, parse_real(value)?)
    }
}

/// Accepts plain reals and `a/b` fractions such as `1/1024`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid number {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0.0 {
                return Err(bad());
            }
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Unsigned fixed-point encoding with `n` bits, `n1` of them before the
/// binary point, applied to `value + offset`. Most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointCodec {
    n: usize,
    n1: usize,
    offset: f64,
}

impl FixedPointCodec {
    pub fn new(n: usize, n1: usize, offset: f64) -> Result<Self> {
        if n1 == 0 || n1 > n || n > 63 {
            return Err(Error::Param(format!("codec needs 1 <= n1 <= n <= 63, got n={n}, n1={n1}")));
        }
        if !offset.is_finite() {
            return Err(Error::Param("codec offset must be finite".into()));
        }
        Ok(Self { n, n1, offset })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Grid spacing `2^(n1 - n)`.
    pub fn resolution(&self) -> f64 {
        (2.0f64).powi(self.n1 as i32 - self.n as i32)
    }

    /// Encodable real interval `[lo, hi)`.
    pub fn range(&self) -> (f64, f64) {
        (-self.offset, (2.0f64).powi(self.n1 as i32) - self.offset)
    }

    pub fn contains(&self, value: f64) -> bool {
        let (lo, hi) = self.range();
        value >= lo && value < hi
    }

    fn level(&self, value: f64) -> Result<u64> {
        if !self.contains(value) {
            let (lo, hi) = self.range();
            return Err(Error::Range { value, lo, hi });
        }
        let top = (1u64 << self.n) - 1;
        let q = ((value + self.offset) / self.resolution()).round() as u64;
        Ok(q.min(top))
    }

    /// Nearest representable value.
    pub fn snap(&self, value: f64) -> Result<f64> {
        Ok(self.level(value)? as f64 * self.resolution() - self.offset)
    }

    pub fn encode(&self, value: f64) -> Result<BitString> {
        let mut bits = BitString::zeros(self.n);
        bits.write_msb_first(0, self.n, self.level(value)?);
        Ok(bits)
    }

    pub fn decode(&self, bits: &BitString) -> Result<f64> {
        if bits.len() != self.n {
            return Err(Error::BitLength { expected: self.n, got: bits.len() });
        }
        Ok(self.decode_field(bits, 0))
    }

    fn decode_field(&self, bits: &BitString, start: usize) -> f64 {
        bits.read_msb_first(start, self.n) as f64 * self.resolution() - self.offset
    }

    /// Concatenates the encodings of each attribute.
    pub fn encode_vec(&self, values: &[f64]) -> Result<BitString> {
        let mut bits = BitString::zeros(self.n * values.len());
        for (j, &v) in values.iter().enumerate() {
            bits.write_msb_first(j * self.n, self.n, self.level(v)?);
        }
        Ok(bits)
    }

    pub fn decode_vec(&self, bits: &BitString) -> Result<Vec<f64>> {
        if !bits.len().is_multiple_of(self.n) {
            return Err(Error::BitLength { expected: self.n * (bits.len() / self.n + 1), got: bits.len() });
        }
        Ok((0..bits.len() / self.n).map(|j| self.decode_field(bits, j * self.n)).collect())
    }

    /// Decodes attribute `j` (0-based) of a packed example without allocating.
    pub fn decode_attribute(&self, bits: &BitString, j: usize) -> f64 {
        self.decode_field(bits, j * self.n)
    }
}

impl fmt::Display for FixedPointCodec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={},n1={},offset={}", self.n, self.n1, self.offset)
    }
}
