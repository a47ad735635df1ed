//! Integration tests for the channel layer: closed-form information measures,
//! log-base handling, projection, and validation.

use maec_core::{
    ratio, Alpha, ChannelSpec, DivisorLattice, Error, ExactChannel, ExactMass, FloatChannel,
    LogBase, MaecDistribution,
};

fn case1() -> ExactChannel {
    MaecDistribution::from_divisor_masses(
        6,
        &[(2, ratio(3, 10)), (3, ratio(3, 5)), (6, ratio(1, 10))],
    )
    .unwrap()
}

fn case1_float() -> FloatChannel {
    MaecDistribution::from_divisor_masses(6, &[(2, 0.3), (3, 0.6), (6, 0.1)]).unwrap()
}

const CAPACITY_TOLERANCE: f64 = 1e-12;

#[test]
fn order_one_capacity_matches_the_entropy_sum() {
    let eps = case1();
    // sum_d eps_d * ln d, here 0.3 ln 2 + 0.6 ln 3 + 0.1 ln 6.
    let expected_nats = 0.3 * 2f64.ln() + 0.6 * 3f64.ln() + 0.1 * 6f64.ln();
    let nats = eps.alpha_capacity(Alpha::One, LogBase::Natural);
    assert!((nats - expected_nats).abs() < CAPACITY_TOLERANCE);
    assert!((nats - 1.046287).abs() < 1e-6);
    // Base conversions are exact scalings of the natural-log value.
    let bits = eps.alpha_capacity(Alpha::One, LogBase::Binary);
    let normalized = eps.alpha_capacity(Alpha::One, LogBase::AlphabetSize);
    assert!((bits - nats / 2f64.ln()).abs() < CAPACITY_TOLERANCE);
    assert!((normalized - nats / 6f64.ln()).abs() < CAPACITY_TOLERANCE);
}

#[test]
fn extreme_order_capacities_use_support_and_mean() {
    let eps = case1();
    // Order 0: log of the smallest revealed modulus with positive mass.
    let zero = eps.alpha_capacity(Alpha::Zero, LogBase::Natural);
    assert!((zero - 2f64.ln()).abs() < CAPACITY_TOLERANCE);
    // Order infinity: log of the mean revealed modulus 0.3*2 + 0.6*3 + 0.1*6 = 3.
    let inf = eps.alpha_capacity(Alpha::Infinity, LogBase::Natural);
    assert!((inf - 3f64.ln()).abs() < CAPACITY_TOLERANCE);
    // The deferred-log arguments expose both quantities exactly.
    assert_eq!(eps.capacity_log_argument(Alpha::Zero), Some(ratio(2, 1)));
    assert_eq!(eps.capacity_log_argument(Alpha::Infinity), Some(ratio(3, 1)));
    assert_eq!(eps.capacity_log_argument(Alpha::One), None);
}

#[test]
fn finite_order_capacities_match_the_power_mean_form() {
    let eps = case1_float();
    // alpha/(alpha-1) * ln( sum_d d^((alpha-1)/alpha) eps_d )
    for alpha in [0.5, 2.0, 3.0, 0.25] {
        let exponent = (alpha - 1.0) / alpha;
        let arg: f64 = [(2u64, 0.3), (3, 0.6), (6, 0.1)]
            .iter()
            .map(|(d, e)| (*d as f64).powf(exponent) * e)
            .sum();
        let expected = alpha / (alpha - 1.0) * arg.ln();
        let got = eps.alpha_capacity(Alpha::finite(alpha).unwrap(), LogBase::Natural);
        assert!(
            (got - expected).abs() < CAPACITY_TOLERANCE,
            "alpha = {alpha}"
        );
    }
    // Orders with dedicated variants normalize instead of erroring.
    assert_eq!(Alpha::finite(1.0).unwrap(), Alpha::One);
    assert_eq!(Alpha::finite(0.0).unwrap(), Alpha::Zero);
    assert_eq!(Alpha::finite(f64::INFINITY).unwrap(), Alpha::Infinity);
    assert!(Alpha::finite(-0.5).is_err());
    assert!(Alpha::finite(f64::NAN).is_err());
}

#[test]
fn capacity_is_nondecreasing_in_the_order() {
    for eps in [
        case1_float(),
        MaecDistribution::from_divisor_masses(
            12,
            &[(1, 0.15), (2, 0.2), (3, 0.05), (4, 0.25), (6, 0.05), (12, 0.3)],
        )
        .unwrap(),
    ] {
        let grid = [
            Alpha::Zero,
            Alpha::finite(0.5).unwrap(),
            Alpha::One,
            Alpha::finite(2.0).unwrap(),
            Alpha::Infinity,
        ];
        let values: Vec<f64> = grid
            .iter()
            .map(|a| eps.alpha_capacity(*a, LogBase::Natural))
            .collect();
        for pair in values.windows(2) {
            assert!(pair[0] <= pair[1] + CAPACITY_TOLERANCE, "{values:?}");
        }
    }
}

#[test]
fn uniform_channel_has_the_known_reliability_parameters() {
    let lattice = DivisorLattice::shared(6).unwrap();
    let eps: ExactChannel = MaecDistribution::uniform(lattice);
    assert_eq!(eps.bhattacharyya(), ratio(2, 5));
    assert_eq!(eps.error_probability(), ratio(1, 2));
    assert_eq!(eps.mean_revealed_size(), ratio(3, 1));
}

#[test]
fn binary_alphabet_reduces_to_the_classical_erasure_forms() {
    for (num, den) in [(1i64, 2u64), (1, 3), (2, 3), (9, 10)] {
        let e = ratio(num, den);
        let eps: ExactChannel = MaecDistribution::from_divisor_masses(
            2,
            &[(1, e.clone()), (2, ratio(1, 1) - e.clone())],
        )
        .unwrap();
        assert_eq!(eps.bhattacharyya(), e);
        assert_eq!(eps.error_probability(), e / ratio(2, 1));
        let bits = eps.alpha_capacity(Alpha::One, LogBase::Binary);
        let erased = num as f64 / den as f64;
        assert!((bits - (1.0 - erased)).abs() < CAPACITY_TOLERANCE);
    }
}

#[test]
fn noiseless_and_fully_erased_channels_sit_at_the_extremes() {
    let lattice = DivisorLattice::shared(12).unwrap();
    let noiseless: ExactChannel = MaecDistribution::noiseless(lattice.clone());
    assert_eq!(noiseless.bhattacharyya(), ratio(0, 1));
    assert_eq!(noiseless.error_probability(), ratio(0, 1));
    for alpha in [Alpha::Zero, Alpha::One, Alpha::Infinity] {
        let c = noiseless.alpha_capacity(alpha, LogBase::AlphabetSize);
        assert!((c - 1.0).abs() < CAPACITY_TOLERANCE);
    }
    let erased: ExactChannel =
        MaecDistribution::from_divisor_masses(12, &[(1, ratio(1, 1))]).unwrap();
    assert_eq!(erased.bhattacharyya(), ratio(1, 1));
    assert_eq!(erased.error_probability(), ratio(11, 12));
    for alpha in [Alpha::Zero, Alpha::One, Alpha::Infinity] {
        assert!(erased.alpha_capacity(alpha, LogBase::AlphabetSize).abs() < CAPACITY_TOLERANCE);
    }
}

#[test]
fn projection_groups_masses_and_cannot_gain_information() {
    let eps = case1();
    let reduced = eps.reduce_mod(3).unwrap();
    assert_eq!(reduced.q(), 3);
    assert_eq!(reduced.mass_of_divisor(1), Some(&ratio(3, 10)));
    assert_eq!(reduced.mass_of_divisor(3), Some(&ratio(7, 10)));
    // Data processing: the projected channel carries no more information,
    // compared in a base that does not depend on the alphabet size.
    let before = eps.alpha_capacity(Alpha::One, LogBase::Natural);
    let after = reduced.alpha_capacity(Alpha::One, LogBase::Natural);
    assert!(after <= before + CAPACITY_TOLERANCE);
    // Projecting onto the full alphabet is the identity.
    assert_eq!(eps.reduce_mod(6).unwrap(), eps);
    // The one-symbol quotient is outside the alphabet domain (size >= 2), as
    // is any non-divisor.
    assert!(matches!(eps.reduce_mod(1), Err(Error::AlphabetSize(1))));
    assert!(matches!(eps.reduce_mod(4), Err(Error::NotADivisor { .. })));
}

#[test]
fn validation_rejects_malformed_mass_vectors() {
    let lattice = DivisorLattice::shared(6).unwrap();
    let wrong_count = MaecDistribution::<ExactMass>::new(lattice.clone(), vec![ratio(1, 1)]);
    assert!(matches!(wrong_count, Err(Error::MassCount { .. })));
    let negative = MaecDistribution::new(
        lattice.clone(),
        vec![ratio(-1, 2), ratio(1, 2), ratio(1, 2), ratio(1, 2)],
    );
    assert!(matches!(negative, Err(Error::NegativeMass { .. })));
    let short_sum = MaecDistribution::new(
        lattice.clone(),
        vec![ratio(1, 4), ratio(1, 4), ratio(1, 4), ratio(0, 1)],
    );
    assert!(matches!(short_sum, Err(Error::MassSum { .. })));
    // Float mode tolerates rounding-level deviation from 1 but not more.
    let nearly: Result<FloatChannel, _> = MaecDistribution::new(
        lattice.clone(),
        vec![0.25, 0.25, 0.25, 0.25 + 1e-14],
    );
    assert!(nearly.is_ok());
    let off: Result<FloatChannel, _> =
        MaecDistribution::new(lattice, vec![0.25, 0.25, 0.25, 0.26]);
    assert!(off.is_err());
}

#[test]
fn channel_files_round_trip_bit_for_bit() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/q6_case1.json"
    ))
    .unwrap();
    let eps = ChannelSpec::from_json(&text).unwrap().build::<ExactMass>().unwrap();
    assert_eq!(eps, case1());
    let emitted = maec_core::channel_spec::emit_json(&eps);
    let again = ChannelSpec::from_json(&emitted)
        .unwrap()
        .build::<ExactMass>()
        .unwrap();
    assert_eq!(again, eps);
    // The TOML mirror builds the identical channel.
    let toml_text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/q6_case1.toml"
    ))
    .unwrap();
    let from_toml = ChannelSpec::from_toml(&toml_text)
        .unwrap()
        .build::<ExactMass>()
        .unwrap();
    assert_eq!(from_toml, eps);
}
