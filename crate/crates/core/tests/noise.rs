use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qperceptron::noise::{parse_real, round_to_grid, FixedPointCodec, GeneratorKind, NoiseGenerator, NOISE_GRID};

fn draws(kind: GeneratorKind, delta: f64, n: usize) -> Vec<f64> {
    let g = NoiseGenerator::new(kind, delta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(kind as u64 + 1);
    (0..n).map(|_| g.sample(&mut rng)).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn every_generator_has_mean_zero() {
    for kind in GeneratorKind::ALL {
        let xs = draws(kind, 2.0, 400_000);
        let m = mean(&xs);
        assert!(m.abs() < 0.02, "{kind}: mean {m}");
    }
}

#[test]
fn draws_sit_on_grid() {
    for kind in GeneratorKind::ALL {
        for x in draws(kind, 0.3, 1000) {
            assert_eq!(round_to_grid(x), x);
            assert_eq!((x / NOISE_GRID).fract(), 0.0);
        }
    }
}

#[test]
fn supports() {
    let d = 1.0;
    assert!(draws(GeneratorKind::R0, d, 10_000).iter().all(|x| x.abs() <= d));
    assert!(draws(GeneratorKind::R1, d, 10_000).iter().all(|x| *x == 0.0 || (0.5..=1.5).contains(&x.abs())));
    assert!(draws(GeneratorKind::R2, d, 10_000).iter().all(|x| (-1.5..=2.0).contains(x)));
    assert!(draws(GeneratorKind::R4, d, 10_000).iter().filter(|x| **x > 0.0).all(|x| *x <= 1.5934 + NOISE_GRID));
}

#[test]
fn normal_spread() {
    let xs = draws(GeneratorKind::R3, 3.0, 200_000);
    let m = mean(&xs);
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    assert!((sd - 3.0).abs() < 0.05, "sd {sd}");
}

#[test]
fn parse_generators() {
    let g: NoiseGenerator = "R2:delta=1/4".parse().unwrap();
    assert_eq!(g.kind(), GeneratorKind::R2);
    assert_eq!(g.delta(), 0.25);
    assert_eq!(g.to_string(), "R2:delta=0.25");
    assert!("R5:delta=1".parse::<NoiseGenerator>().is_err());
    assert!("R0:delta=0".parse::<NoiseGenerator>().is_err());
    assert!("R0".parse::<NoiseGenerator>().is_err());
    assert_eq!(parse_real("1/1024").unwrap(), 1.0 / 1024.0);
    assert!(parse_real("1/0").is_err());
}

#[test]
fn codec_round_trip() {
    let c = FixedPointCodec::new(16, 5, 8.0).unwrap();
    let (lo, hi) = c.range();
    assert!(lo <= -8.0 && hi > 23.0);
    for v in [-8.0, -1.5, 0.0, 3.25, 6.0 + c.resolution(), 20.0] {
        let bits = c.encode(v).unwrap();
        assert_eq!(bits.len(), 16);
        assert_eq!(c.decode(&bits).unwrap(), v);
    }
    let bits = c.encode_vec(&[1.0, 2.5]).unwrap();
    assert_eq!(c.decode_vec(&bits).unwrap(), vec![1.0, 2.5]);
    assert_eq!(c.decode_attribute(&bits, 1), 2.5);
    assert!(c.encode(1000.0).is_err());
    assert_eq!(c.snap(1.0 + c.resolution() / 3.0).unwrap(), 1.0);
}

#[test]
fn codec_is_monotone_msb_first() {
    let c = FixedPointCodec::new(4, 4, 0.0).unwrap();
    let words: Vec<u64> = (0..16).map(|v| c.encode(v as f64).unwrap().read_msb_first(0, 4)).collect();
    assert!(words.windows(2).all(|w| w[0] < w[1]));
}
