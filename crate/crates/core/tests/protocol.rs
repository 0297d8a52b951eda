use qperceptron::protocol::{run_data_system, BobStrategy, DetectionSite, ProtocolParams, RoundSet, Streams};
use qperceptron::qstate::RegisterLayout;
use qperceptron::BitString;

fn msb(b: &BitString) -> bool {
    b.get(0)
}

#[test]
fn honest_bob_is_never_detected() {
    let layout = RegisterLayout::new(4, 2).unwrap();
    let params = ProtocolParams::new(layout, msb);
    let mut streams = Streams::from_seed(11);
    for w in 0..256u128 {
        let x = BitString::from_word(8, w);
        let o = run_data_system(&x, &params, &BobStrategy::Honest, &mut streams).unwrap();
        assert!(!o.detected);
        assert_eq!(o.answer, Some(x.get(0)));
        assert!(o.leaked_bits.is_empty());
        assert_eq!(o.rounds_executed, 3);
    }
}

#[test]
fn data_mismatch_stops_early() {
    // A resent state built from a wrong guess fails the data check.
    let layout = RegisterLayout::new(2, 1).unwrap();
    let params = ProtocolParams::new(layout, msb);
    let x = BitString::from_word(2, 0);
    let mut seen = 0;
    for seed in 0..200 {
        let o = run_data_system(&x, &params, &BobStrategy::MeasureAndResend, &mut Streams::from_seed(seed)).unwrap();
        if o.detection_site == DetectionSite::DataMismatch {
            assert_eq!(o.round_results.len(), o.rounds_executed - 1);
            assert_eq!(o.answer, None);
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn measuring_everything_is_caught_at_known_rate() {
    let layout = RegisterLayout::new(4, 1).unwrap();
    let params = ProtocolParams::new(layout, msb);
    let mut streams = Streams::from_seed(5);
    let strategy = BobStrategy::measure_all(layout);
    let trials = 20_000;
    let mut detected = 0;
    for i in 0..trials {
        let x = BitString::from_word(4, i as u128 % 16);
        let o = run_data_system(&x, &params, &strategy, &mut streams).unwrap();
        detected += o.detected as usize;
        assert_eq!(o.leaked_bits.len(), if o.rounds_executed >= o.secret.data_round { 4 } else { 0 });
    }
    // Both test results become independent coin flips, so they differ half the time.
    let rate = detected as f64 / trials as f64;
    assert!((rate - 0.5).abs() < 0.02, "rate {rate}");
}

#[test]
fn entangling_attack_is_detectable() {
    let layout = RegisterLayout::new(2, 1).unwrap();
    let params = ProtocolParams::new(layout, msb);
    let mut streams = Streams::from_seed(9);
    let strategy = BobStrategy::entangle_all(layout);
    let detected = (0..2000)
        .filter(|_| run_data_system(&BitString::from_word(2, 1), &params, &strategy, &mut streams).unwrap().detected)
        .count();
    assert!(detected > 500);
}

#[test]
fn same_seed_same_outcome() {
    let layout = RegisterLayout::new(3, 1).unwrap();
    let params = ProtocolParams::new(layout, msb).with_transcript();
    let x = BitString::from_word(3, 5);
    let strategy = BobStrategy::measure_all(layout);
    let a = run_data_system(&x, &params, &strategy, &mut Streams::from_seed(42)).unwrap();
    let b = run_data_system(&x, &params, &strategy, &mut Streams::from_seed(42)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.transcript.to_string(), b.transcript.to_string());
}

#[test]
fn transcript_ends_with_verdict() {
    let layout = RegisterLayout::new(2, 1).unwrap();
    let params = ProtocolParams::new(layout, msb).with_transcript();
    let o = run_data_system(&BitString::from_word(2, 2), &params, &BobStrategy::Honest, &mut Streams::from_seed(1)).unwrap();
    let text = o.transcript.to_string();
    let last = text.lines().last().unwrap();
    assert_eq!(last, "round=- role=- event=verdict detected=none answer=0");
    assert_eq!(text.lines().filter(|l| l.contains("event=prepare")).count(), 3);
}

#[test]
fn invalid_strategies_rejected() {
    let layout = RegisterLayout::new(2, 1).unwrap();
    let params = ProtocolParams::new(layout, msb);
    let x = BitString::from_word(2, 0);
    for s in [
        BobStrategy::MeasureSubset { qubits: vec![], rounds: RoundSet::ALL },
        BobStrategy::MeasureSubset { qubits: vec![0], rounds: RoundSet::ALL },
        BobStrategy::EntangleCopy { qubits: vec![1, 1], rounds: RoundSet::ALL },
    ] {
        assert!(run_data_system(&x, &params, &s, &mut Streams::from_seed(0)).is_err());
    }
    assert!(RoundSet::new(&[4]).is_err());
}
