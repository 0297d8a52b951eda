//! Classical perceptron and the privacy-preserving quantum training loop.

use rand::Rng;

use crate::bits::BitString;
use crate::data::{Example, TrainingSet};
use crate::error::{Error, Result};
use crate::noise::{FixedPointCodec, NoiseGenerator};
use crate::protocol::{run_data_system, BobStrategy, ProtocolParams, Streams};
use crate::qstate::RegisterLayout;

/// Default cap on outer loops.
pub const DEFAULT_MAX_ROUNDS: usize = 40_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Classifier {
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        Self { w, b }
    }

    pub fn zero(k: usize) -> Self {
        Self { w: vec![0.0; k], b: 0.0 }
    }

    fn score(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    /// `w += step * x`, `b += step`.
    fn update(&mut self, step: f64, x: &[f64]) {
        for (w, x) in self.w.iter_mut().zip(x) {
            *w += step * x;
        }
        self.b += step;
    }

    fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|w| w.is_finite())
    }
}

/// 1 iff `w . x + b > 0`.
pub fn classify(c: &Classifier, x: &[f64]) -> Result<bool> {
    if x.len() != c.w.len() {
        return Err(Error::Dimension { expected: c.w.len(), got: x.len() });
    }
    Ok(c.score(x) > 0.0)
}

/// Whether `c` labels every example correctly.
pub fn classifies_all(c: &Classifier, examples: &[Example]) -> bool {
    examples.iter().all(|e| e.x.len() == c.w.len() && (c.score(&e.x) > 0.0) == e.c)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainRecord {
    /// A full pass made no update before the round cap.
    pub terminated: bool,
    /// Outer loops executed.
    pub rounds: usize,
    pub updates: usize,
    /// Terminated and the classifier labels the original set correctly.
    pub success: bool,
    pub detection_events: usize,
    /// Honest-mode steps where the protocol answer differed from a direct
    /// evaluation of the current classifier.
    pub s1_mismatches: usize,
}

fn step(c: bool, d: bool) -> f64 {
    c as u8 as f64 - d as u8 as f64
}

/// Plain perceptron over `examples` in order, at most `max_rounds` passes.
pub fn train_classical(examples: &[Example], max_rounds: usize) -> Result<(Classifier, TrainRecord)> {
    let k = examples.first().ok_or(Error::Empty("training set"))?.x.len();
    let mut clf = Classifier::zero(k);
    let mut rec = TrainRecord::default();
    while rec.rounds < max_rounds {
        rec.rounds += 1;
        let mut changed = false;
        for e in examples {
            let d = classify(&clf, &e.x)?;
            if d != e.c {
                clf.update(step(e.c, d), &e.x);
                rec.updates += 1;
                changed = true;
            }
        }
        if !changed {
            rec.terminated = true;
            break;
        }
    }
    rec.success = rec.terminated && classifies_all(&clf, examples);
    Ok((clf, rec))
}

/// One protocol execution Bob attacked with a non-empty readout.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakEntry {
    pub round: usize,
    pub example: usize,
    pub bits: Vec<(usize, bool)>,
    pub detected: bool,
}

/// Per-execution record of what Bob learned about Alice's examples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LeakLedger {
    pub entries: Vec<LeakEntry>,
}

impl LeakLedger {
    /// Undetected executions in which Bob read at least `min_bits` correct
    /// bits of the real input.
    pub fn examples_leaked(&self, min_bits: usize) -> usize {
        self.entries.iter().filter(|e| !e.detected && e.bits.len() >= min_bits).count()
    }

    pub fn total_bits(&self) -> usize {
        self.entries.iter().map(|e| e.bits.len()).sum()
    }

    /// Leaked bit count per example index.
    pub fn per_example(&self, n_examples: usize) -> Vec<usize> {
        let mut out = vec![0; n_examples];
        for e in &self.entries {
            out[e.example] += e.bits.len();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRun {
    pub classifier: Classifier,
    pub record: TrainRecord,
    pub leaks: LeakLedger,
}

fn score_bits(c: &Classifier, codec: &FixedPointCodec, bits: &BitString) -> bool {
    let s: f64 = c.w.iter().enumerate().map(|(j, w)| w * codec.decode_attribute(bits, j)).sum();
    s + c.b > 0.0
}

/// Quantum-protocol training. Each outer loop Alice draws an XOR mask `u`
/// and visits `i ^ u` for `i in 0..N`; Bob learns `d = f(x)` through one
/// data-system execution and updates with Alice's distorted `x + r`.
/// Training aborts on the first detection.
pub fn train_quantum<R: Rng>(
    set: &TrainingSet,
    generator: &NoiseGenerator,
    max_rounds: usize,
    strategy: &BobStrategy,
    streams: &mut Streams<R>,
) -> Result<QuantumRun> {
    let n = set.len();
    if !n.is_power_of_two() {
        return Err(Error::Param(format!("quantum training needs a power-of-two set size, got {n}")));
    }
    let k = set.k();
    let codec = set.codec();
    let layout = RegisterLayout::new(codec.n(), k)?;
    strategy.validate(layout)?;
    let encoded: Vec<BitString> = set.examples().iter().map(|e| codec.encode_vec(&e.x)).collect::<Result<_>>()?;

    let mut clf = Classifier::zero(k);
    let mut rec = TrainRecord::default();
    let mut leaks = LeakLedger::default();
    let mut noisy = vec![0.0; k];

    'outer: while rec.rounds < max_rounds {
        rec.rounds += 1;
        let mask = streams.alice.random_range(0..n);
        let mut changed = false;
        for i in 0..n {
            let j = i ^ mask;
            let example = &set.examples()[j];
            for (v, x) in noisy.iter_mut().zip(&example.x) {
                *v = x + generator.sample(&mut streams.alice);
            }
            let params = ProtocolParams::new(layout, |bits: &BitString| score_bits(&clf, &codec, bits));
            let outcome = run_data_system(&encoded[j], &params, strategy, streams)?;
            if !outcome.leaked_bits.is_empty() {
                leaks.entries.push(LeakEntry {
                    round: rec.rounds,
                    example: j,
                    bits: outcome.leaked_bits.clone(),
                    detected: outcome.detected,
                });
            }
            let Some(d) = outcome.answer else {
                rec.detection_events += 1;
                break 'outer;
            };
            if strategy.is_honest() && d != classify(&clf, &example.x)? {
                rec.s1_mismatches += 1;
            }
            if d != example.c {
                clf.update(step(example.c, d), &noisy);
                rec.updates += 1;
                changed = true;
            }
        }
        if !changed {
            rec.terminated = true;
            break;
        }
        if !clf.is_finite() {
            break;
        }
    }
    rec.success = rec.terminated && classifies_all(&clf, set.examples());
    Ok(QuantumRun { classifier: clf, record: rec, leaks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{default_codec, SetKind};
    use crate::noise::GeneratorKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn classify_examples() {
        let c = Classifier::new(vec![2.0, -1.0], -3.0);
        assert!(classify(&c, &[3.0, 1.0]).unwrap());
        assert!(!classify(&c, &[1.0, 0.0]).unwrap());
        assert!(!classify(&Classifier::zero(2), &[5.0, 5.0]).unwrap());
        assert!(classify(&c, &[1.0]).is_err());
    }

    #[test]
    fn classical_one_dimensional() {
        let d = vec![Example::new(vec![0.0], false), Example::new(vec![2.0], true)];
        let (c, rec) = train_classical(&d, 100).unwrap();
        assert!(rec.terminated && rec.success);
        assert!(classifies_all(&c, &d));
    }

    #[test]
    fn all_zero_class_stops_after_one_pass() {
        let d = vec![Example::new(vec![1.0, 2.0], false), Example::new(vec![3.0, -1.0], false)];
        let (c, rec) = train_classical(&d, 100).unwrap();
        assert_eq!(rec.rounds, 1);
        assert_eq!(rec.updates, 0);
        assert_eq!(c, Classifier::zero(2));
    }

    #[test]
    fn classical_on_set2() {
        let set = SetKind::Set2.generate(64, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(train_classical(set.examples(), DEFAULT_MAX_ROUNDS).unwrap().1.success);
    }

    #[test]
    fn quantum_honest_tiny_noise_matches_direct_evaluation() {
        let set = SetKind::Set1.generate(64, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let g = NoiseGenerator::new(GeneratorKind::R0, 1.0 / 4096.0).unwrap();
        let mut streams = Streams::from_seed(3);
        let run = train_quantum(&set, &g, DEFAULT_MAX_ROUNDS, &BobStrategy::Honest, &mut streams).unwrap();
        assert!(run.record.success);
        assert_eq!(run.record.s1_mismatches, 0);
        assert_eq!(run.record.detection_events, 0);
        assert!(run.leaks.entries.is_empty());
    }

    #[test]
    fn quantum_requires_power_of_two() {
        let set = SetKind::Set3.generate(48, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let g = NoiseGenerator::new(GeneratorKind::R0, 1.0).unwrap();
        let mut streams = Streams::from_seed(5);
        assert!(train_quantum(&set, &g, 10, &BobStrategy::Honest, &mut streams).is_err());
    }

    #[test]
    fn measuring_attack_aborts_training() {
        let set = SetKind::Set1.generate(64, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let set = set.requantized(FixedPointCodec::new(8, 5, default_codec().offset()).unwrap()).unwrap();
        let layout = RegisterLayout::new(8, 2).unwrap();
        let attack = BobStrategy::MeasureSubset {
            qubits: BobStrategy::example_scope_qubits(layout, 8).unwrap(),
            rounds: Default::default(),
        };
        let g = NoiseGenerator::new(GeneratorKind::R0, 1.0).unwrap();
        let mut streams = Streams::from_seed(7);
        let run = train_quantum(&set, &g, DEFAULT_MAX_ROUNDS, &attack, &mut streams).unwrap();
        assert_eq!(run.record.detection_events, 1);
        assert!(!run.record.terminated && !run.record.success);
    }
}
