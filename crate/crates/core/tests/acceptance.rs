//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset
//! (`cargo test --test acceptance -- 2 9`).

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::statistics::{Data, OrderStatistics, RankTieBreaker};

use qperceptron::baselines::{reconstruct_2d, BaselineKind, NoiseModel, ReconOptions};
use qperceptron::data::{correlation, SetKind};
use qperceptron::harness::{detection_tally, run_experiment, write_rows, ExperimentKind, ExperimentSpec, ResultRow, QUANTUM_R0};
use qperceptron::noise::GeneratorKind;
use qperceptron::privacy::{detection_probability, expected_leak_count, Scope};
use qperceptron::protocol::{run_with_secret, AliceSecret, BobStrategy, ProtocolParams, Streams};
use qperceptron::qstate::trace::{exact_distribution_branch, exact_distribution_dense, run_trace_branch, Record, Trace, TraceOp};
use qperceptron::qstate::{Gate, RegisterLayout, MAX_DENSE_QUBITS};
use qperceptron::{BitString, Result};

const SEED: u64 = 20_140_101;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn truth_table(table: u64) -> impl Fn(&BitString) -> bool {
    move |x: &BitString| (table >> (x.word() as u64 % 64)) & 1 == 1
}

fn all_secrets(layout: RegisterLayout) -> Vec<AliceSecret> {
    let nk = layout.data_qubits();
    let mut out = Vec::new();
    for data_round in 1..=3 {
        for y in 0..1u128 << nk {
            for u in [false, true] {
                for m in 1..=nk {
                    out.push(AliceSecret { data_round, y: BitString::from_word(nk, y), u, m });
                }
            }
        }
    }
    out
}

/// Honest Bob, every input, every secret, a family of functions.
fn c1_honest_completeness() -> Result<Verdict> {
    let mut runs = 0usize;
    let mut failures = 0usize;
    let mut streams = Streams::from_seed(SEED);
    let mut check = |layout: RegisterLayout, tables: &[u64]| -> Result<()> {
        let nk = layout.data_qubits();
        let secrets = all_secrets(layout);
        for &t in tables {
            let f = truth_table(t);
            let params = ProtocolParams::new(layout, &f);
            for x in 0..1u128 << nk {
                let x = BitString::from_word(nk, x);
                for s in &secrets {
                    let o = run_with_secret(&x, *s, &params, &BobStrategy::Honest, &mut streams)?;
                    runs += 1;
                    if o.detected || o.answer != Some(f(&x)) {
                        failures += 1;
                    }
                }
            }
        }
        Ok(())
    };
    // n=2, k=1: all 16 Boolean functions of 2 bits.
    check(RegisterLayout::new(2, 1)?, &(0..16).collect::<Vec<_>>())?;
    // n=2, k=2: 16 inputs; constants, parity, single bits and random tables.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut tables = vec![0, 0xFFFF, 0x6996, 0xAAAA, 0xCCCC, 0xF0F0, 0xFF00];
    tables.extend((0..5).map(|_| rng.random::<u64>() & 0xFFFF));
    check(RegisterLayout::new(2, 2)?, &tables)?;
    verdict(failures == 0, format!("{runs} executions, {failures} detected or wrong (tolerance 0)"))
}

fn c2_detection_rates() -> Result<Verdict> {
    let layout = RegisterLayout::new(8, 2)?;
    let trials = 100_000;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (si, scope) in [Scope::Attribute, Scope::Example].into_iter().enumerate() {
        for (ni, n2) in [2usize, 4, 8].into_iter().enumerate() {
            let qubits = match scope {
                Scope::Attribute => BobStrategy::attribute_scope_qubits(layout, n2)?,
                Scope::Example => BobStrategy::example_scope_qubits(layout, n2)?,
            };
            let strategy = BobStrategy::MeasureSubset { qubits, rounds: qperceptron::protocol::RoundSet::ALL };
            let (det, _, n) = detection_tally(layout, &strategy, SEED, (si * 3 + ni) as u64, trials, false)?;
            let emp = det as f64 / n as f64;
            let formula = detection_probability(8, 5, n2, 2, scope)?;
            worst = worst.max((emp - formula).abs());
            parts.push(format!("{scope}/n2={n2}: {emp:.4} vs {formula:.4}"));
        }
    }
    verdict(worst <= 0.01, format!("max |emp-formula| = {worst:.4} (tolerance 0.01); {}", parts.join(", ")))
}

fn row<'a>(rows: &'a [ResultRow], metric: &str) -> &'a ResultRow {
    rows.iter().find(|r| r.metric == metric).expect("metric present")
}

fn c3_leak_expectation() -> Result<Verdict> {
    let mut spec = ExperimentSpec::preset(ExperimentKind::LeakExpectation, false);
    spec.n = 8;
    spec.k = 2;
    spec.n2 = vec![4];
    spec.trials = 10_000;
    let rows = run_experiment(&spec)?;
    let mean = row(&rows, "leaked_examples_mean").value;
    let expected = expected_leak_count(8, 4, 2)?;
    let rel = (mean - expected).abs() / expected;
    verdict(rel <= 0.03, format!("mean {mean:.4} vs {expected:.4}, relative error {rel:.4} (tolerance 0.03)"))
}

fn c4_resend_bound() -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (cell, (n, k)) in [(4usize, 1usize), (8, 2)].into_iter().enumerate() {
        let layout = RegisterLayout::new(n, k)?;
        let (det, _, trials) = detection_tally(layout, &BobStrategy::MeasureAndResend, SEED, 100 + cell as u64, 100_000, false)?;
        let pass = 1.0 - det as f64 / trials as f64;
        let bound = (n * k + 3) as f64 / (4 * n * k) as f64;
        ok &= pass <= bound + 0.01;
        parts.push(format!("(n,k)=({n},{k}): pass {pass:.4} <= {bound:.4}+0.01"));
    }
    verdict(ok, parts.join(", "))
}

fn c5_guess_mu() -> Result<Verdict> {
    let layout = RegisterLayout::new(8, 2)?;
    let (_, certain, trials) = detection_tally(layout, &BobStrategy::GuessMu, SEED, 200, 100_000, true)?;
    let r = certain as f64 / trials as f64;
    let target = 1.0 / 32.0;
    verdict((r - target).abs() <= 0.005, format!("rate {r:.5} vs {target:.5} (tolerance 0.005)"))
}

fn c6_quantum_always_succeeds() -> Result<Verdict> {
    let mut spec = ExperimentSpec::preset(ExperimentKind::Fig3Rounds, false);
    spec.deltas = vec![1.0 / 1024.0, 0.25, 1.0, 8.0, 64.0];
    spec.reps = 20;
    let rows = run_experiment(&spec)?;
    let probs: Vec<&ResultRow> =
        rows.iter().filter(|r| r.metric == "terminating_probability" || r.metric == "success_probability").collect();
    let bad = probs.iter().filter(|r| r.value != 1.0).count();
    verdict(bad == 0, format!("{} cells x 2 probabilities, {bad} below 1 (tolerance 0)", probs.len() / 2))
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = Data::new(x.to_vec()).ranks(RankTieBreaker::Average);
    let ry = Data::new(y.to_vec()).ranks(RankTieBreaker::Average);
    correlation(&rx, &ry)
}

fn c7_rounds_trend() -> Result<Verdict> {
    let mut spec = ExperimentSpec::preset(ExperimentKind::Fig3Rounds, false);
    spec.deltas = vec![8.0, 16.0, 32.0, 64.0, 128.0];
    spec.datasets = vec![SetKind::Set2];
    spec.reps = 20;
    let rows = run_experiment(&spec)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for g in GeneratorKind::ALL {
        let cells: Vec<&ResultRow> =
            rows.iter().filter(|r| r.metric == "avg_rounds" && r.generator.as_deref() == Some(&g.to_string())).collect();
        let d: Vec<f64> = cells.iter().map(|r| r.delta.unwrap_or(0.0)).collect();
        let v: Vec<f64> = cells.iter().map(|r| r.value).collect();
        let rho = spearman(&d, &v);
        ok &= rho > 0.0;
        parts.push(format!("{g}: rho={rho:.2}"));
    }
    verdict(ok, format!("Spearman rho of avg rounds vs delta on set2 (> 0): {}", parts.join(", ")))
}

fn c8_separation() -> Result<Verdict> {
    let mut spec = ExperimentSpec::preset(ExperimentKind::Fig4Compare, false);
    spec.reps = 20;
    let rows = run_experiment(&spec)?;
    let success = |d: &str, method: &str, delta: f64| {
        rows.iter()
            .find(|r| {
                r.metric == "success_probability"
                    && r.dataset.as_deref() == Some(d)
                    && r.method.as_deref() == Some(method)
                    && r.delta == Some(delta)
            })
            .map(|r| r.value)
    };
    let mut wins = [0usize; 4];
    let mut parts = Vec::new();
    for d in SetKind::ALL {
        let d = d.to_string();
        let Some(top) = spec.deltas.iter().copied().filter(|&x| success(&d, QUANTUM_R0, x) == Some(1.0)).reduce(f64::max) else {
            parts.push(format!("{d}: quantum never at 1"));
            continue;
        };
        let mut cls = Vec::new();
        for (i, m) in BaselineKind::ALL.into_iter().enumerate() {
            let s = success(&d, &m.to_string(), top).unwrap_or(1.0);
            if s < 1.0 {
                wins[i] += 1;
            }
            cls.push(format!("{m}={s:.2}"));
        }
        parts.push(format!("{d}@delta={top}: {}", cls.join(" ")));
    }
    let ok = wins.iter().all(|&w| w >= 2);
    verdict(ok, format!("each classical method below quantum on >= 2 of 3 sets; {}", parts.join("; ")))
}

fn random_trace(rng: &mut ChaCha8Rng) -> Trace {
    loop {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=3);
        let base = 1 + n * k;
        if base > MAX_DENSE_QUBITS {
            continue;
        }
        let ancillas = rng.random_range(0..=(MAX_DENSE_QUBITS - base).min(4));
        let layout = RegisterLayout::with_ancillas(n, k, ancillas).expect("layout");
        let total = layout.total_qubits();
        let input = BitString::random(n * k, rng);
        let mut ops = Vec::new();
        for _ in 0..rng.random_range(3..=10) {
            let q = rng.random_range(0..total);
            let op = match rng.random_range(0..10) {
                0..=2 => {
                    let t = (q + rng.random_range(1..total.max(2))) % total;
                    if t == q {
                        continue;
                    }
                    TraceOp::Gate(Gate::Cnot { control: q, target: t })
                }
                3 => TraceOp::Gate(Gate::Z { qubit: q }),
                4 => TraceOp::Gate(Gate::Swap { a: q, b: rng.random_range(0..total) }),
                5 | 6 => {
                    TraceOp::Oracle(Arc::new(truth_table(rng.random())))
                }
                7 | 8 => {
                    let mut qs: Vec<usize> = (0..total).collect();
                    qs.shuffle(rng);
                    qs.truncate(rng.random_range(1..=total.min(4)));
                    TraceOp::Measure(qs)
                }
                _ => TraceOp::MeasurePm,
            };
            ops.push(op);
        }
        if !ops.iter().any(|o| matches!(o, TraceOp::Measure(_) | TraceOp::MeasurePm)) {
            ops.push(TraceOp::MeasurePm);
        }
        return Trace { layout, input, ops };
    }
}

/// Pearson chi-square p-value of `counts` against `probs`, pooling cells
/// with expected count below 5.
fn chi_square_p(counts: &BTreeMap<Record, usize>, probs: &BTreeMap<Record, f64>, samples: usize) -> f64 {
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (rec, &p) in probs {
        let obs = counts.get(rec).copied().unwrap_or(0) as f64;
        let exp = p * samples as f64;
        if exp < 5.0 {
            pool_obs += obs;
            pool_exp += exp;
        } else {
            stat += (obs - exp).powi(2) / exp;
            cells += 1;
        }
    }
    let unexpected: usize = counts.iter().filter(|(r, _)| !probs.contains_key(*r)).map(|(_, c)| c).sum();
    if unexpected > 0 {
        return 0.0;
    }
    if pool_exp > 0.0 {
        if pool_exp >= 1e-9 {
            stat += (pool_obs - pool_exp).powi(2) / pool_exp.max(1e-9);
        }
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    ChiSquared::new((cells - 1) as f64).expect("dof").sf(stat)
}

fn c9_branch_vs_dense() -> Result<Verdict> {
    const TRACES: usize = 1000;
    const SAMPLES: usize = 100_000;
    const ALPHA: f64 = 0.001;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut max_diff: f64 = 0.0;
    let mut min_p: f64 = 1.0;
    let mut below_alpha = 0;
    for _ in 0..TRACES {
        let trace = random_trace(&mut rng);
        let dense = exact_distribution_dense(&trace)?;
        let branch = exact_distribution_branch(&trace)?;
        for key in dense.keys().chain(branch.keys()) {
            let a = dense.get(key).copied().unwrap_or(0.0);
            let b = branch.get(key).copied().unwrap_or(0.0);
            max_diff = max_diff.max((a - b).abs());
        }
        let mut counts: BTreeMap<Record, usize> = BTreeMap::new();
        for _ in 0..SAMPLES {
            *counts.entry(run_trace_branch(&trace, &mut rng)?.1).or_default() += 1;
        }
        let p = chi_square_p(&counts, &dense, SAMPLES);
        min_p = min_p.min(p);
        if p <= ALPHA {
            below_alpha += 1;
        }
    }
    let corrected = ALPHA / TRACES as f64;
    verdict(
        max_diff <= 1e-9 && min_p > corrected,
        format!(
            "{TRACES} traces: max exact difference {max_diff:.2e} (tolerance 1e-9); min p {min_p:.2e} > {corrected:.0e} (p > {ALPHA} with Bonferroni over {TRACES}); {below_alpha} traces at p <= {ALPHA}"
        ),
    )
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn c10_reconstruction() -> Result<Verdict> {
    let spec = ExperimentSpec::preset(ExperimentKind::ReconCompare, false);
    let rows = run_experiment(&spec)?;
    let wins = row(&rows, "joint_better_count").value as usize;

    let set = SetKind::Set3.generate(1024, &mut ChaCha8Rng::seed_from_u64(SEED))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let noise = NoiseModel::uniform(1.0);
    let samples: Vec<[f64; 2]> =
        set.examples().iter().map(|e| [e.x[0] + noise.sample(&mut rng), e.x[1] + noise.sample(&mut rng)]).collect();
    let ls = [10usize, 20, 40, 80];
    let mut times = Vec::new();
    for &l in &ls {
        let opts = ReconOptions { l, max_iterations: 20, tolerance: 0.0 };
        let best = (0..3)
            .map(|_| {
                let t = Instant::now();
                reconstruct_2d(&samples, noise, opts).map(|_| t.elapsed())
            })
            .collect::<Result<Vec<Duration>>>()?
            .into_iter()
            .min()
            .unwrap_or_default();
        times.push(best.as_secs_f64());
    }
    let lx: Vec<f64> = ls.iter().map(|&l| (l as f64).ln()).collect();
    let ly: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let s = slope(&lx, &ly);
    verdict(
        wins >= 18 && (s - 2.0).abs() <= 0.3,
        format!("2D better in {wins}/20 reps (need >= 18); runtime log-log slope {s:.2} over L={ls:?} (need 2 +- 0.3)"),
    )
}

fn csv_bytes(spec: &ExperimentSpec) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_rows(&run_experiment(spec)?, &mut buf)?;
    Ok(buf)
}

fn c11_determinism() -> Result<Verdict> {
    let mut specs = Vec::new();
    let mut s = ExperimentSpec::preset(ExperimentKind::ProtocolDetection, false);
    s.trials = 10_000;
    specs.push(s);
    let mut s = ExperimentSpec::preset(ExperimentKind::Thm2Sweep, false);
    s.trials = 10_000;
    specs.push(s);
    let mut s = ExperimentSpec::preset(ExperimentKind::LeakExpectation, false);
    s.trials = 1_000;
    specs.push(s);
    let mut s = ExperimentSpec::preset(ExperimentKind::Fig3Rounds, false);
    s.deltas = vec![1.0, 64.0];
    s.reps = 3;
    specs.push(s);
    let mut s = ExperimentSpec::preset(ExperimentKind::Fig4Compare, false);
    s.deltas = vec![1.0, 32.0];
    s.reps = 3;
    specs.push(s);
    let mut s = ExperimentSpec::preset(ExperimentKind::ReconCompare, false);
    s.reps = 3;
    s.set_size = 256;
    specs.push(s);

    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().expect("pool");
    let mut same = 0;
    for spec in &specs {
        let a = single.install(|| csv_bytes(spec))?;
        let b = multi.install(|| csv_bytes(spec))?;
        let c = csv_bytes(spec)?;
        if a == b && b == c && !a.is_empty() {
            same += 1;
        }
    }
    verdict(same == specs.len(), format!("{same}/{} experiments byte-identical across 3 reruns (1, 4 and default threads)", specs.len()))
}

type Criterion = fn() -> Result<Verdict>;

fn main() -> ExitCode {
    let criteria: [(usize, &str, Criterion); 11] = [
        (1, "honest completeness", c1_honest_completeness),
        (2, "detection rates", c2_detection_rates),
        (3, "expected leaked examples", c3_leak_expectation),
        (4, "measure-and-resend bound", c4_resend_bound),
        (5, "guess-mu certain pass", c5_guess_mu),
        (6, "quantum training succeeds", c6_quantum_always_succeeds),
        (7, "rounds grow with delta", c7_rounds_trend),
        (8, "classical separation", c8_separation),
        (9, "branch vs dense", c9_branch_vs_dense),
        (10, "reconstruction", c10_reconstruction),
        (11, "determinism", c11_determinism),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}  {name} [{:.1}s]: {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
