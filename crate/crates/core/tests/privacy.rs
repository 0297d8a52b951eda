use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qperceptron::privacy::{detection_probability, expected_leak_count, formula_row, privacy_amount_uniform, PrivacyReport, Scope};

#[test]
fn detection_formulas() {
    assert_eq!(detection_probability(8, 5, 4, 2, Scope::Attribute).unwrap(), 3.0 / 32.0);
    assert_eq!(detection_probability(8, 5, 4, 2, Scope::Example).unwrap(), 7.0 / 32.0);
    assert_eq!(detection_probability(8, 5, 1, 2, Scope::Attribute).unwrap(), 0.0);
    assert!(detection_probability(8, 5, 9, 2, Scope::Example).is_err());
}

#[test]
fn leak_count_formula() {
    assert!((expected_leak_count(8, 4, 2).unwrap() - 25.0 / 7.0).abs() < 1e-12);
    assert!(expected_leak_count(1, 1, 1).unwrap().is_infinite());
}

/// Undetected leaks before the first detection are geometric: simulate the
/// sequence directly and compare with the closed form.
#[test]
fn geometric_monte_carlo_matches_formula() {
    let p = detection_probability(8, 5, 4, 2, Scope::Example).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let sequences = 1_000_000;
    let mut total = 0u64;
    for _ in 0..sequences {
        while !rng.random_bool(p) {
            total += 1;
        }
    }
    let mean = total as f64 / sequences as f64;
    let expected = expected_leak_count(8, 4, 2).unwrap();
    assert!((mean - expected).abs() / expected < 0.01, "mean {mean}");
}

#[test]
fn uniform_privacy_amount() {
    // Width of the c% interval of U[-d, d] is 2dc/100.
    assert!((privacy_amount_uniform(1.0, 95.0).unwrap() - 1.9).abs() < 1e-12);
    assert!(privacy_amount_uniform(1.0, 150.0).is_err());
    assert!(PrivacyReport::new(1.0, 95.0, "uniform").is_ok());
    assert!(PrivacyReport::new(-1.0, 95.0, "uniform").is_err());
}

#[test]
fn table_rows() {
    let r = formula_row(8, 5, 8, 2).unwrap();
    assert_eq!(r.attribute_detection, 7.0 / 32.0);
    assert_eq!(r.example_detection, 15.0 / 32.0);
    assert!((r.expected_leaks - 17.0 / 15.0).abs() < 1e-12);
}

#[test]
fn scope_names() {
    for s in [Scope::Attribute, Scope::Example] {
        assert_eq!(s.to_string().parse::<Scope>().unwrap(), s);
    }
    assert!("row".parse::<Scope>().is_err());
}
