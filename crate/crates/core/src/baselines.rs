//! Classical randomization baselines: publish `x + r` with a public noise
//! distribution, optionally reconstruct the per-class attribute density
//! from the distorted samples, and train the plain perceptron.
//!
//! Reconstruction is the iterative Bayes update
//!
//! ```text
//! h'(a) = (1/N) * sum_s  L_s(a) h(a) / sum_a' L_s(a') h(a')
//! ```
//!
//! where `L_s(a)` is the probability of observing sample `s` given that the
//! original value lies uniformly in cell `a`. Cells are the product of `L`
//! equal intervals per axis over `[min - 3d, max + 3d]` of the distorted
//! samples.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;

use crate::data::{Example, TrainingSet};
use crate::error::{Error, Result};
use crate::noise::{round_to_grid, GeneratorKind, NoiseGenerator};
use crate::perceptron::{classifies_all, train_classical, TrainRecord};
use crate::privacy::privacy_amount_uniform;

/// Standard deviation factor giving normal noise the uniform method's
/// 95% privacy amount.
pub const NORMAL_SD_FACTOR: f64 = 0.484;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    UniformNoRecon,
    NormalNoRecon,
    Uniform1DRecon,
    Uniform2DRecon,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] =
        [BaselineKind::UniformNoRecon, BaselineKind::NormalNoRecon, BaselineKind::Uniform1DRecon, BaselineKind::Uniform2DRecon];
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::UniformNoRecon => "uniform",
            BaselineKind::NormalNoRecon => "normal",
            BaselineKind::Uniform1DRecon => "uniform-1d-recon",
            BaselineKind::Uniform2DRecon => "uniform-2d-recon",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown baseline {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineMethod {
    pub kind: BaselineKind,
    pub delta: f64,
    pub l: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl BaselineMethod {
    pub fn new(kind: BaselineKind, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::Param(format!("delta {delta} must be finite and >= 0")));
        }
        Ok(Self { kind, delta, l: 20, max_iterations: 1000, tolerance: 1e-4 })
    }

    pub fn with_grid(mut self, l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Param(format!("grid needs L >= 2, got {l}")));
        }
        self.l = l;
        Ok(self)
    }

    pub fn noise(&self) -> NoiseModel {
        match self.kind {
            BaselineKind::NormalNoRecon => NoiseModel::Normal { sd: NORMAL_SD_FACTOR * self.delta },
            _ => NoiseModel::uniform(self.delta),
        }
    }

    /// Both methods sit at `1.9 delta` at 95% confidence.
    pub fn privacy_amount(&self) -> f64 {
        privacy_amount_uniform(self.delta, 95.0).unwrap_or(0.0)
    }
}

/// Public noise distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    Uniform { delta: f64 },
    Normal { sd: f64 },
}

impl NoiseModel {
    pub fn uniform(delta: f64) -> Self {
        if delta == 0.0 {
            NoiseModel::None
        } else {
            NoiseModel::Uniform { delta }
        }
    }

    /// Draw rounded to the 1/1024 grid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = match *self {
            NoiseModel::None => return 0.0,
            NoiseModel::Uniform { delta } => NoiseGenerator::new(GeneratorKind::R0, delta),
            NoiseModel::Normal { sd } if sd > 0.0 => NoiseGenerator::new(GeneratorKind::R3, sd),
            NoiseModel::Normal { .. } => return 0.0,
        };
        g.map(|g| g.sample(rng)).unwrap_or(0.0)
    }

    fn spread(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { delta } => delta,
            NoiseModel::Normal { sd } => sd,
        }
    }

    /// Probability density of observing `s` when the original value is
    /// uniform on `[a, b)`.
    fn cell_likelihood(&self, s: f64, a: f64, b: f64) -> Result<f64> {
        match *self {
            NoiseModel::None => Ok(if s >= a && s < b { 1.0 } else { 0.0 }),
            NoiseModel::Uniform { delta } => {
                let overlap = ((s + delta).min(b) - (s - delta).max(a)).max(0.0);
                Ok(overlap / ((b - a) * 2.0 * delta))
            }
            NoiseModel::Normal { .. } => {
                Err(Error::Param("reconstruction is implemented for uniform or no noise".into()))
            }
        }
    }
}

/// Adds independent public noise to every attribute; labels are kept.
pub fn distort<R: Rng + ?Sized>(examples: &[Example], noise: NoiseModel, rng: &mut R) -> Vec<Example> {
    examples
        .iter()
        .map(|e| Example::new(e.x.iter().map(|&v| round_to_grid(v + noise.sample(rng))).collect(), e.c))
        .collect()
}

/// Piecewise-constant density over an axis-aligned grid with `l` cells per
/// axis. Masses are stored row-major, the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    lo: Vec<f64>,
    width: Vec<f64>,
    l: usize,
    masses: Vec<f64>,
}

impl DensityGrid {
    /// Uniform density over `[lo, hi)` per axis.
    pub fn uniform(lo: Vec<f64>, hi: &[f64], l: usize) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Dimension { expected: lo.len(), got: hi.len() });
        }
        if l < 2 {
            return Err(Error::Param(format!("grid needs L >= 2, got {l}")));
        }
        let width: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| ((b - a) / l as f64).max(f64::MIN_POSITIVE)).collect();
        let cells = l.pow(lo.len() as u32);
        Ok(Self { lo, width, l, masses: vec![1.0 / cells as f64; cells] })
    }

    /// Grid covering `points` widened by `margin` on both sides of every axis.
    pub fn covering(points: &[&[f64]], margin: f64, l: usize) -> Result<Self> {
        let dims = points.first().ok_or(Error::Empty("sample set"))?.len();
        let mut lo = vec![f64::INFINITY; dims];
        let mut hi = vec![f64::NEG_INFINITY; dims];
        for p in points {
            if p.len() != dims {
                return Err(Error::Dimension { expected: dims, got: p.len() });
            }
            for d in 0..dims {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        for d in 0..dims {
            lo[d] -= margin;
            hi[d] += margin;
            // Keep the largest sample strictly inside the last cell.
            let pad = ((hi[d] - lo[d]) * 1e-9).max(1e-9);
            hi[d] += pad;
        }
        Self::uniform(lo, &hi, l)
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bounds(&self, axis: usize, i: usize) -> (f64, f64) {
        let a = self.lo[axis] + i as f64 * self.width[axis];
        (a, a + self.width[axis])
    }

    fn axis_index(&self, axis: usize, v: f64) -> Option<usize> {
        let t = ((v - self.lo[axis]) / self.width[axis]).floor();
        (t >= 0.0 && t < self.l as f64).then_some(t as usize)
    }

    pub fn cell_of(&self, p: &[f64]) -> Option<usize> {
        if p.len() != self.dims() {
            return None;
        }
        let mut idx = 0;
        for (axis, &v) in p.iter().enumerate() {
            idx = idx * self.l + self.axis_index(axis, v)?;
        }
        Some(idx)
    }

    fn cell_axes(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims()];
        for axis in (0..self.dims()).rev() {
            out[axis] = idx % self.l;
            idx /= self.l;
        }
        out
    }

    /// Same grid, masses set to the empirical histogram of `points`
    /// (points outside the grid are dropped before normalizing).
    pub fn histogram_of(&self, points: &[&[f64]]) -> Result<Self> {
        let mut masses = vec![0.0; self.masses.len()];
        let mut inside = 0usize;
        for p in points {
            if let Some(c) = self.cell_of(p) {
                masses[c] += 1.0;
                inside += 1;
            }
        }
        if inside == 0 {
            return Err(Error::Empty("points inside grid"));
        }
        masses.iter_mut().for_each(|m| *m /= inside as f64);
        Ok(Self { masses, ..self.clone() })
    }

    /// Product of one-dimensional marginals on their own grids.
    pub fn product(marginals: &[DensityGrid]) -> Result<Self> {
        let l = marginals.first().ok_or(Error::Empty("marginals"))?.l;
        if marginals.iter().any(|m| m.dims() != 1 || m.l != l) {
            return Err(Error::Param("product needs 1-D marginals with equal L".into()));
        }
        let mut masses = vec![1.0];
        for m in marginals {
            masses = masses.iter().flat_map(|a| m.masses.iter().map(move |b| a * b)).collect();
        }
        Ok(Self {
            lo: marginals.iter().map(|m| m.lo[0]).collect(),
            width: marginals.iter().map(|m| m.width[0]).collect(),
            l,
            masses,
        })
    }

    /// Sum of absolute mass differences; both grids must share geometry.
    pub fn l1_distance(&self, other: &DensityGrid) -> Result<f64> {
        if self.lo != other.lo || self.width != other.width || self.l != other.l {
            return Err(Error::Param("grids differ in geometry".into()));
        }
        Ok(self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs()).sum())
    }

    /// A point drawn from the density: a cell by mass, then uniform inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut u = rng.random::<f64>();
        let mut cell = self.masses.len() - 1;
        for (i, &m) in self.masses.iter().enumerate() {
            if u < m {
                cell = i;
                break;
            }
            u -= m;
        }
        self.cell_axes(cell)
            .into_iter()
            .enumerate()
            .map(|(axis, i)| {
                let (a, _) = self.bounds(axis, i);
                a + rng.random::<f64>() * self.width[axis]
            })
            .collect()
    }

    /// CSV with columns `cell,center_1..center_d,mass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["cell".to_string()];
        header.extend((1..=self.dims()).map(|d| format!("center_{d}")));
        header.push("mass".into());
        w.write_record(&header)?;
        for (cell, m) in self.masses.iter().enumerate() {
            let mut row = vec![cell.to_string()];
            for (axis, i) in self.cell_axes(cell).into_iter().enumerate() {
                let (a, b) = self.bounds(axis, i);
                row.push(((a + b) / 2.0).to_string());
            }
            row.push(m.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconOptions {
    pub l: usize,
    pub max_iterations: usize,
    /// Stop once the L1 change of one update falls below this.
    pub tolerance: f64,
}

impl Default for ReconOptions {
    fn default() -> Self {
        Self { l: 20, max_iterations: 1000, tolerance: 1e-4 }
    }
}

/// Reconstructs the joint density of `samples` (all of one dimension) on a
/// product grid. Cost per iteration is `O(N L^d)`.
pub fn reconstruct(samples: &[&[f64]], noise: NoiseModel, opts: ReconOptions) -> Result<DensityGrid> {
    let mut grid = DensityGrid::covering(samples, 3.0 * noise.spread(), opts.l)?;
    let dims = grid.dims();
    let l = grid.l;
    // Per-sample, per-axis likelihood rows, laid out as [sample][axis][cell].
    let mut like = vec![0.0; samples.len() * dims * l];
    for (s, p) in samples.iter().enumerate() {
        for axis in 0..dims {
            for i in 0..l {
                let (a, b) = grid.bounds(axis, i);
                like[(s * dims + axis) * l + i] = noise.cell_likelihood(p[axis], a, b)?;
            }
        }
    }

    let cells = grid.masses.len();
    let mut joint = vec![0.0; cells];
    let mut next = vec![0.0; cells];
    for _ in 0..opts.max_iterations {
        next.iter_mut().for_each(|m| *m = 0.0);
        for s in 0..samples.len() {
            let rows = &like[s * dims * l..(s + 1) * dims * l];
            for (c, j) in joint.iter_mut().enumerate() {
                let mut v = 1.0;
                let mut rest = c;
                for axis in (0..dims).rev() {
                    v *= rows[axis * l + rest % l];
                    rest /= l;
                }
                *j = v * grid.masses[c];
            }
            let z: f64 = joint.iter().sum();
            if z > 0.0 {
                for (n, j) in next.iter_mut().zip(&joint) {
                    *n += j / z;
                }
            }
        }
        let total: f64 = next.iter().sum();
        if total == 0.0 {
            return Err(Error::Param("no sample has positive likelihood".into()));
        }
        let mut change = 0.0;
        for (m, n) in grid.masses.iter_mut().zip(&next) {
            let v = n / total;
            change += (v - *m).abs();
            *m = v;
        }
        if change < opts.tolerance {
            break;
        }
    }
    Ok(grid)
}

/// One-attribute reconstruction.
pub fn reconstruct_1d(samples: &[f64], noise: NoiseModel, opts: ReconOptions) -> Result<DensityGrid> {
    let rows: Vec<[f64; 1]> = samples.iter().map(|&v| [v]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    reconstruct(&refs, noise, opts)
}

/// Joint reconstruction of two-attribute samples.
pub fn reconstruct_2d(samples: &[[f64; 2]], noise: NoiseModel, opts: ReconOptions) -> Result<DensityGrid> {
    let refs: Vec<&[f64]> = samples.iter().map(|r| r.as_slice()).collect();
    reconstruct(&refs, noise, opts)
}

/// Per-axis reconstructions combined as a product density.
fn reconstruct_marginals(samples: &[&[f64]], noise: NoiseModel, opts: ReconOptions) -> Result<DensityGrid> {
    let dims = samples.first().ok_or(Error::Empty("sample set"))?.len();
    let marginals = (0..dims)
        .map(|d| reconstruct_1d(&samples.iter().map(|p| p[d]).collect::<Vec<_>>(), noise, opts))
        .collect::<Result<Vec<_>>>()?;
    DensityGrid::product(&marginals)
}

/// L1 error of the per-axis and the joint reconstruction of one class
/// against the class's original histogram on the joint grid. The per-axis
/// product lives on the same grid because both use the same covering rule.
pub fn reconstruction_errors(original: &[&[f64]], distorted: &[&[f64]], noise: NoiseModel, opts: ReconOptions) -> Result<(f64, f64)> {
    let joint = reconstruct(distorted, noise, opts)?;
    let product = reconstruct_marginals(distorted, noise, opts)?;
    let truth = joint.histogram_of(original)?;
    Ok((product.l1_distance(&truth)?, joint.l1_distance(&truth)?))
}

/// Class-weighted reconstruction errors `(per-axis, joint)` on a whole set.
pub fn set_reconstruction_errors<R: Rng + ?Sized>(set: &TrainingSet, delta: f64, opts: ReconOptions, rng: &mut R) -> Result<(f64, f64)> {
    let noise = NoiseModel::uniform(delta);
    let distorted = distort(set.examples(), noise, rng);
    let (mut e1, mut e2) = (0.0, 0.0);
    for class in [false, true] {
        let orig: Vec<&[f64]> = set.examples().iter().filter(|e| e.c == class).map(|e| e.x.as_slice()).collect();
        if orig.is_empty() {
            continue;
        }
        let dist: Vec<&[f64]> = distorted.iter().filter(|e| e.c == class).map(|e| e.x.as_slice()).collect();
        let (a, b) = reconstruction_errors(&orig, &dist, noise, opts)?;
        let w = orig.len() as f64 / set.len() as f64;
        e1 += w * a;
        e2 += w * b;
    }
    Ok((e1, e2))
}

/// Synthetic set with each class's size preserved, drawn from that class's
/// reconstructed density.
fn resample<R: Rng + ?Sized>(distorted: &[Example], method: &BaselineMethod, rng: &mut R) -> Result<Vec<Example>> {
    let opts = ReconOptions { l: method.l, max_iterations: method.max_iterations, tolerance: method.tolerance };
    let noise = method.noise();
    let mut out = Vec::with_capacity(distorted.len());
    for class in [false, true] {
        let pts: Vec<&[f64]> = distorted.iter().filter(|e| e.c == class).map(|e| e.x.as_slice()).collect();
        if pts.is_empty() {
            continue;
        }
        let density = match method.kind {
            BaselineKind::Uniform2DRecon => reconstruct(&pts, noise, opts)?,
            _ => reconstruct_marginals(&pts, noise, opts)?,
        };
        out.extend((0..pts.len()).map(|_| Example::new(density.sample(rng), class)));
    }
    Ok(out)
}

/// `reps` independent randomize / reconstruct / learn runs. Success is
/// judged on the original examples.
pub fn train_baseline<R: Rng + ?Sized>(
    set: &TrainingSet,
    method: &BaselineMethod,
    max_rounds: usize,
    reps: usize,
    rng: &mut R,
) -> Result<Vec<TrainRecord>> {
    (0..reps)
        .map(|_| {
            let distorted = distort(set.examples(), method.noise(), rng);
            let training = match method.kind {
                BaselineKind::UniformNoRecon | BaselineKind::NormalNoRecon => distorted,
                BaselineKind::Uniform1DRecon | BaselineKind::Uniform2DRecon => resample(&distorted, method, rng)?,
            };
            let (clf, mut rec) = train_classical(&training, max_rounds)?;
            rec.success = rec.terminated && classifies_all(&clf, set.examples());
            Ok(rec)
        })
        .collect()
}
