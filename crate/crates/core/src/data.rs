//! The three synthetic training sets and dataset CSV I/O.
//!
//! Generated attributes are snapped to the codec grid, so the fixed-point
//! encoding of every example decodes to exactly the stored value.
//!
//! Defaults:
//!
//! | set | recipe |
//! |-----|--------|
//! | 1 | `N/2` per class, class 0 ~ N((2,6), I), class 1 ~ N((6,2), I); redrawn until separable |
//! | 2 | both coordinates ~ N(3, 2^2), label `2*x1 - x2 - 3 > 0`, points within 0.2 of the boundary redrawn |
//! | 3 | `x2 = r2`, `x1 = x2 + r1` with `r1 ~ U[0,0.5]`, `r2 ~ U[0,8]`; fair coin for the class; class 1 gets `x1 += 1.5` |

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::noise::FixedPointCodec;
use crate::perceptron::{classify, train_classical, Classifier};

/// Codec used unless a dataset asks for another: 16 bits, 5 integer bits,
/// values shifted by 8 (range `[-8, 24)`, resolution `2^-11`).
pub fn default_codec() -> FixedPointCodec {
    FixedPointCodec::new(16, 5, 8.0).expect("valid default codec")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub c: bool,
}

impl Example {
    pub fn new(x: Vec<f64>, c: bool) -> Self {
        Self { x, c }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    examples: Vec<Example>,
    k: usize,
    codec: FixedPointCodec,
}

impl TrainingSet {
    pub fn new(examples: Vec<Example>, codec: FixedPointCodec) -> Result<Self> {
        let first = examples.first().ok_or(Error::Empty("training set"))?;
        let k = first.x.len();
        if k == 0 {
            return Err(Error::Param("examples need at least one attribute".into()));
        }
        for e in &examples {
            if e.x.len() != k {
                return Err(Error::Dimension { expected: k, got: e.x.len() });
            }
            for &v in &e.x {
                if !codec.contains(v) {
                    let (lo, hi) = codec.range();
                    return Err(Error::Range { value: v, lo, hi });
                }
            }
        }
        Ok(Self { examples, k, codec })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn codec(&self) -> FixedPointCodec {
        self.codec
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.examples.iter().filter(|e| e.c).count();
        (self.len() - ones, ones)
    }

    /// Pads to the next power of two by duplicating uniformly chosen examples.
    pub fn padded_to_power_of_two<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let target = self.len().next_power_of_two();
        let mut examples = self.examples.clone();
        while examples.len() < target {
            let e = self.examples.choose(rng).expect("non-empty").clone();
            examples.push(e);
        }
        Self { examples, ..self.clone() }
    }

    /// Re-encodes under a different codec, snapping every value to its grid.
    pub fn requantized(&self, codec: FixedPointCodec) -> Result<Self> {
        let examples = self
            .examples
            .iter()
            .map(|e| Ok(Example::new(e.x.iter().map(|&v| codec.snap(v)).collect::<Result<_>>()?, e.c)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(examples, codec)
    }

    pub fn separated_by(&self, c: &Classifier) -> bool {
        self.examples.iter().all(|e| classify(c, &e.x).map(|d| d == e.c).unwrap_or(false))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header: Vec<String> = (1..=self.k).map(|j| format!("x{j}")).collect();
        header.push("class".into());
        w.write_record(&header)?;
        for e in &self.examples {
            let mut row: Vec<String> = e.x.iter().map(|v| v.to_string()).collect();
            row.push((e.c as u8).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, codec: FixedPointCodec) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers()?.clone();
        let k = header.len().checked_sub(1).filter(|&k| k > 0).ok_or_else(|| bad_header(&header))?;
        let expected = (1..=k).map(|j| format!("x{j}")).chain(std::iter::once("class".to_string()));
        if !header.iter().map(str::trim).eq(expected) {
            return Err(bad_header(&header));
        }
        let mut examples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != k + 1 {
                return Err(Error::Dimension { expected: k + 1, got: rec.len() });
            }
            let x = rec
                .iter()
                .take(k)
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad attribute {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let c = match rec[k].trim() {
                "0" => false,
                "1" => true,
                s => return Err(Error::Parse(format!("bad class {s:?}"))),
            };
            examples.push(Example::new(x, c));
        }
        Self::new(examples, codec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>, codec: FixedPointCodec) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, codec)
    }
}

fn bad_header(h: &csv::StringRecord) -> Error {
    Error::Parse(format!("expected header x1,...,xk,class, got {:?}", h.iter().collect::<Vec<_>>()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Set1Params {
    pub mean0: [f64; 2],
    pub mean1: [f64; 2],
    pub sd: f64,
}

impl Default for Set1Params {
    fn default() -> Self {
        Self { mean0: [2.0, 6.0], mean1: [6.0, 2.0], sd: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Set2Params {
    pub mean: f64,
    pub sd: f64,
    pub margin: f64,
}

impl Default for Set2Params {
    fn default() -> Self {
        Self { mean: 3.0, sd: 2.0, margin: 0.2 }
    }
}

/// Labeler of set 2.
pub fn set2_labeler() -> Classifier {
    Classifier::new(vec![2.0, -1.0], -3.0)
}

fn draw_in_range<R: Rng + ?Sized>(codec: &FixedPointCodec, dist: &Normal<f64>, rng: &mut R) -> f64 {
    loop {
        let v = dist.sample(rng);
        if let Ok(s) = codec.snap(v) {
            return s;
        }
    }
}

pub fn generate_set1<R: Rng + ?Sized>(n: usize, params: &Set1Params, codec: FixedPointCodec, rng: &mut R) -> Result<TrainingSet> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Param(format!("set 1 needs an even positive size, got {n}")));
    }
    let axes = |mean: [f64; 2]| -> Result<[Normal<f64>; 2]> {
        let d = |mu| Normal::new(mu, params.sd).map_err(|e| Error::Param(e.to_string()));
        Ok([d(mean[0])?, d(mean[1])?])
    };
    let classes = [(axes(params.mean0)?, false), (axes(params.mean1)?, true)];
    loop {
        let mut examples = Vec::with_capacity(n);
        for (dists, c) in &classes {
            for _ in 0..n / 2 {
                let x = dists.iter().map(|d| draw_in_range(&codec, d, rng)).collect();
                examples.push(Example::new(x, *c));
            }
        }
        let set = TrainingSet::new(examples, codec)?;
        let (_, rec) = train_classical(set.examples(), 10_000)?;
        if rec.success {
            return Ok(set);
        }
    }
}

pub fn generate_set2<R: Rng + ?Sized>(n: usize, params: &Set2Params, codec: FixedPointCodec, rng: &mut R) -> Result<TrainingSet> {
    if n == 0 {
        return Err(Error::Param("set 2 needs a positive size".into()));
    }
    let d = Normal::new(params.mean, params.sd).map_err(|e| Error::Param(e.to_string()))?;
    let labeler = set2_labeler();
    let mut examples = Vec::with_capacity(n);
    while examples.len() < n {
        let x = vec![draw_in_range(&codec, &d, rng), draw_in_range(&codec, &d, rng)];
        if (2.0 * x[0] - x[1] - 3.0).abs() < params.margin {
            continue;
        }
        let c = classify(&labeler, &x)?;
        examples.push(Example::new(x, c));
    }
    TrainingSet::new(examples, codec)
}

pub fn generate_set3<R: Rng + ?Sized>(n: usize, codec: FixedPointCodec, rng: &mut R) -> Result<TrainingSet> {
    if n == 0 {
        return Err(Error::Param("set 3 needs a positive size".into()));
    }
    let mut examples = Vec::with_capacity(n);
    for _ in 0..n {
        let r1 = codec.snap(rng.random_range(0.0..=0.5))?;
        let r2 = codec.snap(rng.random_range(0.0..=8.0))?;
        let c: bool = rng.random();
        let x1 = r2 + r1 + if c { 1.5 } else { 0.0 };
        examples.push(Example::new(vec![x1, r2], c));
    }
    TrainingSet::new(examples, codec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetKind {
    Set1,
    Set2,
    Set3,
}

impl SetKind {
    pub const ALL: [SetKind; 3] = [SetKind::Set1, SetKind::Set2, SetKind::Set3];

    pub fn generate<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Result<TrainingSet> {
        let codec = default_codec();
        match self {
            SetKind::Set1 => generate_set1(n, &Set1Params::default(), codec, rng),
            SetKind::Set2 => generate_set2(n, &Set2Params::default(), codec, rng),
            SetKind::Set3 => generate_set3(n, codec, rng),
        }
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetKind::Set1 => "set1",
            SetKind::Set2 => "set2",
            SetKind::Set3 => "set3",
        })
    }
}

impl FromStr for SetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "set1" | "gen1" | "1" => Ok(SetKind::Set1),
            "set2" | "gen2" | "2" => Ok(SetKind::Set2),
            "set3" | "gen3" | "3" => Ok(SetKind::Set3),
            _ => Err(Error::Parse(format!("unknown dataset {s:?}"))),
        }
    }
}

/// `gen1:N=64:seed=7` or `file:path/to.csv`.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Generated { kind: SetKind, n: usize, seed: u64 },
    File(String),
}

impl DatasetSpec {
    pub fn load(&self) -> Result<TrainingSet> {
        match self {
            DatasetSpec::Generated { kind, n, seed } => kind.generate(*n, &mut ChaCha8Rng::seed_from_u64(*seed)),
            DatasetSpec::File(path) => TrainingSet::load(path, default_codec()),
        }
    }
}

impl FromStr for DatasetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(DatasetSpec::File(path.to_string()));
        }
        let mut parts = s.split(':');
        let kind: SetKind = parts.next().unwrap_or_default().parse()?;
        let (mut n, mut seed) = (64, 0);
        for p in parts {
            let (key, value) = p.split_once('=').ok_or_else(|| Error::Parse(format!("bad dataset field {p:?}")))?;
            let value: u64 = value.parse().map_err(|_| Error::Parse(format!("bad value in {p:?}")))?;
            match key {
                "N" | "n" => n = value as usize,
                "seed" => seed = value,
                _ => return Err(Error::Parse(format!("unknown dataset field {key:?}"))),
            }
        }
        Ok(DatasetSpec::Generated { kind, n, seed })
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Generated { kind, n, seed } => write!(f, "{kind}:N={n}:seed={seed}"),
            DatasetSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

/// Pearson correlation of two equal-length samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn set1_is_balanced_and_separable() {
        let s = generate_set1(64, &Set1Params::default(), default_codec(), &mut rng(1)).unwrap();
        assert_eq!(s.class_counts(), (32, 32));
        assert!(train_classical(s.examples(), 40_000).unwrap().1.success);
        let two = generate_set1(2, &Set1Params::default(), default_codec(), &mut rng(2)).unwrap();
        assert_eq!(two.class_counts(), (1, 1));
        assert!(generate_set1(3, &Set1Params::default(), default_codec(), &mut rng(2)).is_err());
    }

    #[test]
    fn set2_labels_follow_labeler() {
        let s = generate_set2(64, &Set2Params::default(), default_codec(), &mut rng(3)).unwrap();
        assert!(s.separated_by(&set2_labeler()));
        for e in s.examples() {
            assert!((2.0 * e.x[0] - e.x[1] - 3.0).abs() >= 0.2);
        }
    }

    #[test]
    fn set3_recipe_bounds() {
        let s = generate_set3(1024, default_codec(), &mut rng(4)).unwrap();
        assert!(s.separated_by(&Classifier::new(vec![1.0, -1.0], -1.0)));
        for class in [false, true] {
            let (a, b): (Vec<f64>, Vec<f64>) =
                s.examples().iter().filter(|e| e.c == class).map(|e| (e.x[0], e.x[1])).unzip();
            assert!(correlation(&a, &b) > 0.9);
            for (x1, x2) in a.iter().zip(&b) {
                let d = x1 - x2;
                if class {
                    assert!((1.5..=2.0).contains(&d));
                } else {
                    assert!((0.0..=0.5).contains(&d));
                }
            }
        }
    }

    #[test]
    fn generated_values_are_exact_under_codec() {
        let s = SetKind::Set2.generate(64, &mut rng(5)).unwrap();
        let codec = s.codec();
        for e in s.examples() {
            let bits = codec.encode_vec(&e.x).unwrap();
            assert_eq!(codec.decode_vec(&bits).unwrap(), e.x);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        for kind in SetKind::ALL {
            assert_eq!(kind.generate(32, &mut rng(9)).unwrap(), kind.generate(32, &mut rng(9)).unwrap());
        }
    }

    #[test]
    fn padding_and_requantizing() {
        let s = SetKind::Set3.generate(48, &mut rng(6)).unwrap();
        let p = s.padded_to_power_of_two(&mut rng(7));
        assert_eq!(p.len(), 64);
        assert!(p.examples()[48..].iter().all(|e| s.examples().contains(e)));
        let coarse = FixedPointCodec::new(8, 5, 8.0).unwrap();
        let q = s.requantized(coarse).unwrap();
        for e in q.examples() {
            for &v in &e.x {
                assert_eq!((v * 8.0).fract(), 0.0);
            }
        }
    }

    #[test]
    fn spec_strings() {
        let s: DatasetSpec = "gen1:N=64:seed=7".parse().unwrap();
        assert_eq!(s, DatasetSpec::Generated { kind: SetKind::Set1, n: 64, seed: 7 });
        assert_eq!(s.to_string().parse::<DatasetSpec>().unwrap(), s);
        assert_eq!("file:a.csv".parse::<DatasetSpec>().unwrap(), DatasetSpec::File("a.csv".into()));
        assert!("gen4".parse::<DatasetSpec>().is_err());
        assert!("gen1:M=3".parse::<DatasetSpec>().is_err());
    }
}
