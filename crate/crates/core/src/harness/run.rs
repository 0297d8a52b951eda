use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::row::{mean_se, rate, ResultRow};
use super::spec::{AttackSpec, ExperimentKind, ExperimentSpec};
use super::{cell_seed, dataset_seed};
use crate::baselines::{set_reconstruction_errors, train_baseline, BaselineMethod, ReconOptions};
use crate::bits::BitString;
use crate::data::{SetKind, TrainingSet};
use crate::error::Result;
use crate::noise::{GeneratorKind, NoiseGenerator};
use crate::perceptron::{train_quantum, TrainRecord};
use crate::privacy::{detection_probability, expected_leak_count, Scope};
use crate::protocol::{certain_pass_trial, run_data_system, BobStrategy, DetectionSite, ProtocolParams, Streams};
use crate::qstate::RegisterLayout;

/// Monte Carlo trials are split into chunks of this size, each with its own
/// derived stream, so results do not depend on the thread count.
pub const CHUNK: usize = 4096;

/// Bob's oracle in the protocol experiments: parity of the input bits.
pub fn parity(bits: &BitString) -> bool {
    bits.word().count_ones() % 2 == 1
}

fn chunks(trials: usize) -> Vec<(usize, usize)> {
    (0..trials.div_ceil(CHUNK)).map(|c| (c, CHUNK.min(trials - c * CHUNK))).collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::ProtocolDetection => protocol_detection(spec),
        ExperimentKind::Thm2Sweep => thm2_sweep(spec),
        ExperimentKind::LeakExpectation => leak_expectation(spec),
        ExperimentKind::Fig3Rounds => fig3_rounds(spec),
        ExperimentKind::Fig4Compare => fig4_compare(spec),
        ExperimentKind::ReconCompare => recon_compare(spec),
    }
}

#[derive(Default, Clone, Copy)]
struct DetectionTally {
    trials: usize,
    detected: usize,
    data_mismatch: usize,
    test_mismatch: usize,
    correct: usize,
    leaked_bits: usize,
    certain_pass: usize,
}

impl DetectionTally {
    fn add(mut self, o: DetectionTally) -> Self {
        self.trials += o.trials;
        self.detected += o.detected;
        self.data_mismatch += o.data_mismatch;
        self.test_mismatch += o.test_mismatch;
        self.correct += o.correct;
        self.leaked_bits += o.leaked_bits;
        self.certain_pass += o.certain_pass;
        self
    }
}

fn detection_chunk(layout: RegisterLayout, strategy: &BobStrategy, seed: u64, trials: usize, certain: bool) -> Result<DetectionTally> {
    let params = ProtocolParams::new(layout, parity);
    let mut streams = Streams::from_seed(seed);
    let mut t = DetectionTally { trials, ..Default::default() };
    for _ in 0..trials {
        let x = BitString::random(layout.data_qubits(), &mut streams.alice);
        let o = run_data_system(&x, &params, strategy, &mut streams)?;
        match o.detection_site {
            DetectionSite::None => t.correct += (o.answer == Some(parity(&x))) as usize,
            DetectionSite::DataMismatch => t.data_mismatch += 1,
            DetectionSite::TestMismatch => t.test_mismatch += 1,
        }
        t.detected += o.detected as usize;
        t.leaked_bits += o.leaked_bits.len();
        if certain {
            t.certain_pass += certain_pass_trial(&params, strategy, &mut streams)? as usize;
        }
    }
    Ok(t)
}

/// Runs `trials` executions of one strategy in parallel chunks.
pub fn detection_tally(layout: RegisterLayout, strategy: &BobStrategy, master: u64, cell: u64, trials: usize, certain: bool) -> Result<(usize, usize, usize)> {
    let t = tally(layout, strategy, master, cell, trials, certain)?;
    Ok((t.detected, t.certain_pass, t.trials))
}

fn tally(layout: RegisterLayout, strategy: &BobStrategy, master: u64, cell: u64, trials: usize, certain: bool) -> Result<DetectionTally> {
    let parts = chunks(trials)
        .into_par_iter()
        .map(|(c, len)| detection_chunk(layout, strategy, cell_seed(master, cell, c as u64), len, certain))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().fold(DetectionTally::default(), DetectionTally::add))
}

fn protocol_detection(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let layout = spec.layout()?;
    let mut rows = Vec::new();
    for (cell, attack) in spec.attacks.iter().enumerate() {
        let strategy = attack.strategy(layout)?;
        let t = tally(layout, &strategy, spec.seed, cell as u64, spec.trials, true)?;
        let undetected = t.trials - t.detected;
        let metrics = [
            ("detection_rate", rate(t.detected, t.trials), t.trials),
            ("pass_rate", rate(undetected, t.trials), t.trials),
            ("data_mismatch_rate", rate(t.data_mismatch, t.trials), t.trials),
            ("test_mismatch_rate", rate(t.test_mismatch, t.trials), t.trials),
            ("answer_correct_rate", rate(t.correct, undetected), undetected),
            ("certain_pass_rate", rate(t.certain_pass, t.trials), t.trials),
            ("leaked_bits_mean", (t.leaked_bits as f64 / t.trials as f64, 0.0), t.trials),
        ];
        for (name, (v, se), count) in metrics {
            let mut r = ResultRow::new(spec.kind.to_string(), name, v, se, count);
            r.attack = Some(attack.to_string());
            r.n = Some(spec.n);
            r.k = Some(spec.k);
            rows.push(r);
        }
    }
    Ok(rows)
}

fn thm2_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let layout = spec.layout()?;
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &n2 in &spec.n2 {
        for scope in [Scope::Attribute, Scope::Example] {
            let attack = AttackSpec::Scoped { scope, n2 };
            let measured = match scope {
                Scope::Attribute => BobStrategy::attribute_scope_qubits(layout, n2)?,
                Scope::Example => BobStrategy::example_scope_qubits(layout, n2)?,
            };
            // With nothing to measure the attack is the honest protocol.
            let strategy = if measured.is_empty() { BobStrategy::Honest } else { attack.strategy(layout)? };
            let formula = detection_probability(spec.n, 0, n2, spec.k, scope)?;
            let t = tally(layout, &strategy, spec.seed, cell, spec.trials, false)?;
            cell += 1;
            let (v, se) = rate(t.detected, t.trials);
            for (metric, value, err) in [("detection_rate", v, se), ("detection_formula", formula, 0.0)] {
                let mut r = ResultRow::new(spec.kind.to_string(), metric, value, err, t.trials);
                r.method = Some(scope.to_string());
                r.attack = Some(attack.to_string());
                r.n = Some(spec.n);
                r.k = Some(spec.k);
                r.n2 = Some(n2);
                rows.push(r);
            }
        }
    }
    Ok(rows)
}

/// Undetected example-scope readouts before the first detection.
fn leak_sequence(layout: RegisterLayout, strategy: &BobStrategy, scope_bits: usize, streams: &mut Streams<ChaCha8Rng>) -> Result<usize> {
    let params = ProtocolParams::new(layout, parity);
    let mut leaked = 0;
    loop {
        let x = BitString::random(layout.data_qubits(), &mut streams.alice);
        let o = run_data_system(&x, &params, strategy, streams)?;
        if o.detected {
            return Ok(leaked);
        }
        leaked += (o.leaked_bits.len() == scope_bits) as usize;
    }
}

fn leak_expectation(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let layout = spec.layout()?;
    let mut rows = Vec::new();
    for (cell, &n2) in spec.n2.iter().enumerate() {
        let attack = AttackSpec::Scoped { scope: Scope::Example, n2 };
        let strategy = attack.strategy(layout)?;
        let BobStrategy::MeasureSubset { qubits, .. } = &strategy else { unreachable!() };
        let scope_bits = qubits.len();
        let counts: Vec<f64> = chunks(spec.trials)
            .into_par_iter()
            .map(|(c, len)| {
                let mut streams = Streams::from_seed(cell_seed(spec.seed, cell as u64, c as u64));
                (0..len).map(|_| leak_sequence(layout, &strategy, scope_bits, &mut streams).map(|v| v as f64)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .concat();
        let (mean, se) = mean_se(&counts);
        let formula = expected_leak_count(spec.n, n2, spec.k)?;
        for (metric, v, e) in [("leaked_examples_mean", mean, se), ("leaked_examples_formula", formula, 0.0)] {
            let mut r = ResultRow::new(spec.kind.to_string(), metric, v, e, counts.len());
            r.attack = Some(attack.to_string());
            r.n = Some(spec.n);
            r.k = Some(spec.k);
            r.n2 = Some(n2);
            rows.push(r);
        }
    }
    Ok(rows)
}

fn dataset(spec: &ExperimentSpec, kind: SetKind, rep: usize) -> Result<TrainingSet> {
    let idx = SetKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64;
    kind.generate(spec.set_size, &mut ChaCha8Rng::seed_from_u64(dataset_seed(spec.seed, idx, rep as u64)))
}

fn quantum_record(spec: &ExperimentSpec, set: &TrainingSet, g: GeneratorKind, delta: f64, seed: u64) -> Result<TrainRecord> {
    let generator = NoiseGenerator::new(g, delta)?;
    let mut streams = Streams::from_seed(seed);
    Ok(train_quantum(set, &generator, spec.max_rounds, &BobStrategy::Honest, &mut streams)?.record)
}

fn training_rows(spec: &ExperimentSpec, recs: &[TrainRecord], fill: impl Fn(&mut ResultRow)) -> Vec<ResultRow> {
    let n = recs.len();
    let (avg_rounds, se_rounds) = mean_se(&recs.iter().map(|r| r.rounds as f64).collect::<Vec<_>>());
    let (avg_updates, se_updates) = mean_se(&recs.iter().map(|r| r.updates as f64).collect::<Vec<_>>());
    let (term, se_term) = rate(recs.iter().filter(|r| r.terminated).count(), n);
    let (succ, se_succ) = rate(recs.iter().filter(|r| r.success).count(), n);
    let metrics = [
        ("avg_rounds", avg_rounds, se_rounds),
        ("avg_updates", avg_updates, se_updates),
        ("terminating_probability", term, se_term),
        ("success_probability", succ, se_succ),
    ];
    metrics
        .into_iter()
        .map(|(m, v, e)| {
            let mut r = ResultRow::new(spec.kind.to_string(), m, v, e, n);
            fill(&mut r);
            r
        })
        .collect()
}

fn fig3_rounds(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let mut cells = Vec::new();
    for &d in &spec.datasets {
        for &g in &spec.generators {
            for &delta in &spec.deltas {
                cells.push((d, g, delta));
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..spec.reps).map(move |r| (c, r))).collect();
    let recs = jobs
        .par_iter()
        .map(|&(c, rep)| {
            let (d, g, delta) = cells[c];
            let set = dataset(spec, d, rep)?;
            quantum_record(spec, &set, g, delta, cell_seed(spec.seed, c as u64, rep as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (c, &(d, g, delta)) in cells.iter().enumerate() {
        let slice = &recs[c * spec.reps..(c + 1) * spec.reps];
        rows.extend(training_rows(spec, slice, |r| {
            r.dataset = Some(d.to_string());
            r.generator = Some(g.to_string());
            r.method = Some("quantum".into());
            r.delta = Some(delta);
            r.attack = Some("honest".into());
        }));
    }
    Ok(rows)
}

/// Method label of the quantum series in the comparison.
pub const QUANTUM_R0: &str = "quantum-R0";

fn fig4_compare(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let mut methods: Vec<Option<crate::baselines::BaselineKind>> = vec![None];
    methods.extend(spec.methods.iter().copied().map(Some));
    let mut cells = Vec::new();
    for &d in &spec.datasets {
        for &delta in &spec.deltas {
            for &m in &methods {
                cells.push((d, delta, m));
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..spec.reps).map(move |r| (c, r))).collect();
    let recs = jobs
        .par_iter()
        .map(|&(c, rep)| {
            let (d, delta, m) = cells[c];
            let set = dataset(spec, d, rep)?;
            let seed = cell_seed(spec.seed, c as u64, rep as u64);
            match m {
                None => quantum_record(spec, &set, GeneratorKind::R0, delta, seed),
                Some(kind) => {
                    let method = BaselineMethod::new(kind, delta)?.with_grid(spec.grid)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    Ok(train_baseline(&set, &method, spec.max_rounds, 1, &mut rng)?.remove(0))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (c, &(d, delta, m)) in cells.iter().enumerate() {
        let slice = &recs[c * spec.reps..(c + 1) * spec.reps];
        rows.extend(training_rows(spec, slice, |r| {
            r.dataset = Some(d.to_string());
            r.method = Some(m.map_or(QUANTUM_R0.to_string(), |k| k.to_string()));
            r.generator = m.is_none().then(|| "R0".to_string());
            r.delta = Some(delta);
        }));
    }
    Ok(rows)
}

fn recon_compare(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let opts = ReconOptions { l: spec.grid, ..Default::default() };
    let mut rows = Vec::new();
    for &d in &spec.datasets {
        for (c, &delta) in spec.deltas.iter().enumerate() {
            let errs = (0..spec.reps)
                .into_par_iter()
                .map(|rep| {
                    let set = dataset(spec, d, rep)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(spec.seed, c as u64, rep as u64));
                    set_reconstruction_errors(&set, delta, opts, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            let one: Vec<f64> = errs.iter().map(|e| e.0).collect();
            let two: Vec<f64> = errs.iter().map(|e| e.1).collect();
            let wins = errs.iter().filter(|e| e.1 < e.0).count();
            let (m1, s1) = mean_se(&one);
            let (m2, s2) = mean_se(&two);
            for (metric, v, e) in [("l1_error_1d", m1, s1), ("l1_error_2d", m2, s2), ("joint_better_count", wins as f64, 0.0)] {
                let mut r = ResultRow::new(spec.kind.to_string(), metric, v, e, spec.reps);
                r.dataset = Some(d.to_string());
                r.delta = Some(delta);
                r.method = Some(format!("L={}", spec.grid));
                r.n = Some(spec.set_size);
                rows.push(r);
            }
        }
    }
    Ok(rows)
}
