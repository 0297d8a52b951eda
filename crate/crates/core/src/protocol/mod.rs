//! Alice's three-round data system and the per-round procedures of both
//! parties.
//!
//! One execution answers a single query `f(x)`. Alice hides the real input
//! in one of three rounds; the other two carry the same decoy test state.
//! She aborts when a round's data register does not come back as expected,
//! or when the two decoys disagree on the result bit.

mod bob;
mod strategy;
pub mod transcript;

pub use bob::Bob;
pub use strategy::{BobStrategy, RoundSet};
pub use transcript::{RoundRole, Transcript};

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::qstate::{prepare_test_state, uncompute_gates, BranchState, RegisterLayout};
use transcript::Event;

/// Bob's classifier oracle and the register layout.
pub struct ProtocolParams<F> {
    pub layout: RegisterLayout,
    pub oracle: F,
    pub record_transcript: bool,
}

impl<F: Fn(&BitString) -> bool> ProtocolParams<F> {
    pub fn new(layout: RegisterLayout, oracle: F) -> Self {
        Self { layout, oracle, record_transcript: false }
    }

    pub fn with_transcript(mut self) -> Self {
        self.record_transcript = true;
        self
    }
}

/// Alice's and Bob's private randomness. They never share a stream.
#[derive(Debug, Clone)]
pub struct Streams<R> {
    pub alice: R,
    pub bob: R,
}

impl Streams<ChaCha8Rng> {
    /// Two ChaCha streams over one key: stream 0 for Alice, 1 for Bob.
    pub fn from_seed(seed: u64) -> Self {
        let mut alice = ChaCha8Rng::seed_from_u64(seed);
        let mut bob = alice.clone();
        alice.set_stream(0);
        bob.set_stream(1);
        Self { alice, bob }
    }
}

/// Alice's per-execution secret: the position of the real round and the
/// shared decoy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AliceSecret {
    pub data_round: usize,
    pub y: BitString,
    pub u: bool,
    pub m: usize,
}

impl AliceSecret {
    pub fn draw<R: Rng + ?Sized>(layout: RegisterLayout, rng: &mut R) -> Self {
        let nk = layout.data_qubits();
        Self {
            data_round: rng.random_range(1..=3),
            y: BitString::random(nk, rng),
            u: rng.random(),
            m: rng.random_range(1..=nk),
        }
    }

    fn round_input(&self, round: usize, x: &BitString) -> (RoundRole, BitString, bool, usize) {
        if round == self.data_round {
            (RoundRole::Data, *x, false, 0)
        } else {
            (RoundRole::Test, self.y, self.u, self.m)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectionSite {
    None,
    /// A round's data register differed from what Alice sent.
    DataMismatch,
    /// The two test rounds returned different result bits.
    TestMismatch,
}

impl fmt::Display for DetectionSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectionSite::None => "none",
            DetectionSite::DataMismatch => "data-mismatch",
            DetectionSite::TestMismatch => "test-mismatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub answer: Option<bool>,
    pub detected: bool,
    pub detection_site: DetectionSite,
    /// Bits Bob recorded during the real round that match Alice's input.
    pub leaked_bits: Vec<(usize, bool)>,
    pub rounds_executed: usize,
    pub round_results: Vec<bool>,
    pub secret: AliceSecret,
    pub transcript: Transcript,
}

/// What Alice learns from one call of her round procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    /// `None` when the data register check failed.
    pub result: Option<bool>,
    pub detected: bool,
    pub data_outcome: BitString,
}

fn check_input(layout: RegisterLayout, x: &BitString) -> Result<()> {
    if x.len() != layout.data_qubits() {
        return Err(Error::BitLength { expected: layout.data_qubits(), got: x.len() });
    }
    Ok(())
}

/// One round of Alice's procedure with Bob's session state carried across rounds.
#[allow(clippy::too_many_arguments)]
fn run_round<F, R>(
    round: usize,
    role: RoundRole,
    (y, u, m): (BitString, bool, usize),
    params: &ProtocolParams<F>,
    bob: &mut Bob<'_>,
    streams: &mut Streams<R>,
    transcript: &mut Option<Transcript>,
) -> Result<RoundReport>
where
    F: Fn(&BitString) -> bool,
    R: Rng,
{
    let layout = params.layout;
    let state = prepare_test_state(layout, &y, u, m)?;
    if let Some(t) = transcript.as_mut() {
        t.push(round, role, Event::Prepare { y, u, m, gates: crate::qstate::preparation_gates(u, m) });
    }

    let mut state: BranchState = bob.act(round, state, &params.oracle, &mut streams.bob)?;
    if let Some(t) = transcript.as_mut() {
        t.push(round, role, Event::Bob { strategy: bob.strategy().name(), read: bob.reads(round).to_vec() });
    }

    let undo = uncompute_gates(u, m);
    state.apply_gates(&undo)?;
    let data_qubits: Vec<usize> = (1..=layout.data_qubits()).collect();
    let data = state.measure(&data_qubits, &mut streams.alice)?.outcome;
    let ok = data == y;
    let copies = bob.read_copies(round, &mut state, &mut streams.bob)?;
    if let Some(t) = transcript.as_mut() {
        t.push(round, role, Event::Uncompute { gates: undo });
        t.push(round, role, Event::Data { outcome: data, ok });
        if !copies.is_empty() {
            t.push(round, role, Event::Ancilla { read: copies });
        }
    }
    if !ok {
        return Ok(RoundReport { result: None, detected: true, data_outcome: data });
    }

    let (pm, _) = state.measure_result_pm(&mut streams.alice)?;
    if let Some(t) = transcript.as_mut() {
        t.push(round, role, Event::Result { outcome: pm });
    }
    Ok(RoundReport { result: Some(pm.bit()), detected: false, data_outcome: data })
}

/// A single round of Alice's procedure against a fresh Bob: prepare
/// `psi(y, u, m)`, hand it to Bob, undo the preparation, check the data
/// register, and read the result qubit in the `±` basis (`+` = 0).
pub fn alice_compute<F, R>(
    input: (BitString, bool, usize),
    params: &ProtocolParams<F>,
    strategy: &BobStrategy,
    streams: &mut Streams<R>,
) -> Result<RoundReport>
where
    F: Fn(&BitString) -> bool,
    R: Rng,
{
    check_input(params.layout, &input.0)?;
    strategy.validate(params.layout)?;
    let role = if input.2 == 0 { RoundRole::Data } else { RoundRole::Test };
    let mut bob = Bob::new(strategy);
    run_round(1, role, input, params, &mut bob, streams, &mut None)
}

/// Bob's action on one received state with no memory of other rounds.
/// Returns the state sent back and the bits he recorded.
pub fn bob_act<F, R>(
    state: BranchState,
    oracle: &F,
    strategy: &BobStrategy,
    rng: &mut R,
) -> Result<(BranchState, Vec<(usize, bool)>)>
where
    F: Fn(&BitString) -> bool + ?Sized,
    R: Rng + ?Sized,
{
    strategy.validate(state.layout())?;
    let mut bob = Bob::new(strategy);
    let mut out = bob.act(1, state, oracle, rng)?;
    let copies = bob.read_copies(1, &mut out, rng)?;
    let reads = if copies.is_empty() { bob.reads(1).to_vec() } else { copies };
    Ok((out, reads))
}

/// Full three-round execution with Alice's secret drawn from her stream.
pub fn run_data_system<F, R>(
    x: &BitString,
    params: &ProtocolParams<F>,
    strategy: &BobStrategy,
    streams: &mut Streams<R>,
) -> Result<ProtocolOutcome>
where
    F: Fn(&BitString) -> bool,
    R: Rng,
{
    check_input(params.layout, x)?;
    strategy.validate(params.layout)?;
    let secret = AliceSecret::draw(params.layout, &mut streams.alice);
    run_with_secret(x, secret, params, strategy, streams)
}

/// Three-round execution under a caller-chosen secret (used for exhaustive checks).
pub fn run_with_secret<F, R>(
    x: &BitString,
    secret: AliceSecret,
    params: &ProtocolParams<F>,
    strategy: &BobStrategy,
    streams: &mut Streams<R>,
) -> Result<ProtocolOutcome>
where
    F: Fn(&BitString) -> bool,
    R: Rng,
{
    check_input(params.layout, x)?;
    let nk = params.layout.data_qubits();
    if !(1..=3).contains(&secret.data_round) || secret.m == 0 || secret.m > nk || secret.y.len() != nk {
        return Err(Error::Param(format!("invalid Alice secret {secret:?}")));
    }
    let mut transcript = params.record_transcript.then(Transcript::default);
    let mut bob = Bob::new(strategy);
    let mut results = Vec::with_capacity(3);
    let mut site = DetectionSite::None;
    let mut rounds_executed = 0;

    for round in 1..=3 {
        let (role, y, u, m) = secret.round_input(round, x);
        let report = run_round(round, role, (y, u, m), params, &mut bob, streams, &mut transcript)?;
        rounds_executed = round;
        match report.result {
            Some(bit) => results.push(bit),
            None => {
                site = DetectionSite::DataMismatch;
                break;
            }
        }
    }

    if site == DetectionSite::None {
        let tests: Vec<bool> =
            (1..=3).filter(|&r| r != secret.data_round).map(|r| results[r - 1]).collect();
        if tests[0] != tests[1] {
            site = DetectionSite::TestMismatch;
        }
    }
    let detected = site != DetectionSite::None;
    let answer = (!detected).then(|| results[secret.data_round - 1]);

    let leaked_bits = if rounds_executed >= secret.data_round {
        bob.reads(secret.data_round).iter().copied().filter(|&(q, b)| x.get(q - 1) == b).collect()
    } else {
        Vec::new()
    };

    let mut transcript = transcript.unwrap_or_default();
    if params.record_transcript {
        transcript.push_verdict(site, answer);
    }
    Ok(ProtocolOutcome {
        answer,
        detected,
        detection_site: site,
        leaked_bits,
        rounds_executed,
        round_results: results,
        secret,
        transcript,
    })
}

fn certain_outcome(state: &BranchState, u: bool, m: usize) -> Result<Option<(BitString, bool)>> {
    let mut s = state.clone();
    s.apply_gates(&uncompute_gates(u, m))?;
    let qubits: Vec<usize> = (1..=s.layout().data_qubits()).collect();
    let dist = s.outcome_distribution(&qubits)?;
    let [(data, _)] = dist.as_slice() else {
        return Ok(None);
    };
    let (plus, minus) = s.pm_probabilities();
    let result = if (plus - 1.0).abs() < 1e-9 {
        false
    } else if (minus - 1.0).abs() < 1e-9 {
        true
    } else {
        return Ok(None);
    };
    Ok(Some((*data, result)))
}

/// True when the state Bob returned for test `(y, u, m)` gives Alice, with
/// probability 1, the same data readout and result bit as an honest Bob's.
pub fn matches_honest_with_certainty<F>(returned: &BranchState, y: &BitString, u: bool, m: usize, oracle: &F) -> Result<bool>
where
    F: Fn(&BitString) -> bool + ?Sized,
{
    let mut honest = prepare_test_state(returned.layout(), y, u, m)?;
    honest.apply_uf(oracle);
    let expected = certain_outcome(&honest, u, m)?;
    let got = certain_outcome(returned, u, m)?;
    Ok(expected.is_some() && got == expected)
}

/// One test round against `strategy` with a fresh test `(y, u, m)` from
/// Alice's stream: whether Bob's returned state is indistinguishable from
/// an honest reply with certainty.
pub fn certain_pass_trial<F, R>(params: &ProtocolParams<F>, strategy: &BobStrategy, streams: &mut Streams<R>) -> Result<bool>
where
    F: Fn(&BitString) -> bool,
    R: Rng,
{
    let secret = AliceSecret::draw(params.layout, &mut streams.alice);
    let state = prepare_test_state(params.layout, &secret.y, secret.u, secret.m)?;
    let mut bob = Bob::new(strategy);
    let returned = bob.act(1, state, &params.oracle, &mut streams.bob)?;
    matches_honest_with_certainty(&returned, &secret.y, secret.u, secret.m, &params.oracle)
}
