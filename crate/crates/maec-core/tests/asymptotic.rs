//! Integration tests for the limiting-distribution solver: the sweep on a
//! three-prime alphabet against a fully worked reference trace, the two-prime
//! closed form, prime-power conservation, and error paths.

use maec_core::{
    asymptotic_masses, chain_sweep, chain_sweep_with_trace, prime_power_limit, ratio,
    semiprime_limit, AsymptoticMethod, ChannelSpec, Error, ExactChannel, ExactMass,
    MaecDistribution,
};

fn load(name: &str) -> ExactChannel {
    let path = format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"));
    ChannelSpec::from_path(std::path::Path::new(&path))
        .unwrap()
        .build::<ExactMass>()
        .unwrap()
}

/// Expected full limit for the 36-divisor ramp channel: all other divisors
/// carry zero mass.
const RAMP_LIMIT: [(u64, i64, u64); 8] = [
    (1, 29, 150),
    (5, 1, 15),
    (15, 11, 150),
    (30, 9, 50),
    (150, 11, 75),
    (450, 1, 150),
    (900, 7, 75),
    (4500, 6, 25),
];

#[test]
fn three_prime_ramp_resolves_to_the_known_limit() {
    let eps = load("q4500_ramp.json");
    let limit = asymptotic_masses(&eps).unwrap();
    assert_eq!(limit.method(), AsymptoticMethod::ChainSweep);
    let expected: Vec<ExactMass> = (0..eps.lattice().len())
        .map(|pos| {
            let d = eps.lattice().divisor(pos);
            RAMP_LIMIT
                .iter()
                .find(|(divisor, _, _)| *divisor == d)
                .map(|(_, n, m)| ratio(*n, *m))
                .unwrap_or_else(|| ratio(0, 1))
        })
        .collect();
    assert_eq!(limit.masses(), expected.as_slice());
    assert!(limit.chain_is_monotone());
    assert_eq!(limit.support_divisors(), vec![1, 5, 15, 30, 150, 450, 900, 4500]);
}

/// One recorded solver iteration: thresholds at recording time, the divisor
/// receiving mass, the running total before, the released mass, the slot
/// stepped afterwards, and both inner comparisons as
/// (first slot, second slot, first-only mass, second-only mass, second wins).
struct ExpectedStep {
    tuple: [u32; 3],
    divisor: u64,
    before: (i64, u64),
    assigned: (i64, u64),
    slot: usize,
    comparisons: [(usize, usize, (i64, u64), (i64, u64), bool); 2],
}

const EXPECTED_TRACE: [ExpectedStep; 8] = [
    ExpectedStep {
        tuple: [0, 0, 0],
        divisor: 1,
        before: (0, 1),
        assigned: (29, 150),
        slot: 3,
        comparisons: [
            (1, 2, (16, 75), (43, 150), true),
            (2, 3, (1, 6), (7, 30), true),
        ],
    },
    ExpectedStep {
        tuple: [0, 0, 1],
        divisor: 5,
        before: (29, 150),
        assigned: (1, 15),
        slot: 2,
        comparisons: [
            (1, 2, (16, 75), (43, 150), true),
            (2, 3, (61, 150), (23, 150), false),
        ],
    },
    ExpectedStep {
        tuple: [0, 1, 1],
        divisor: 15,
        before: (13, 50),
        assigned: (11, 150),
        slot: 1,
        comparisons: [
            (1, 2, (11, 25), (17, 150), false),
            (1, 3, (17, 50), (4, 25), false),
        ],
    },
    ExpectedStep {
        tuple: [1, 1, 1],
        divisor: 30,
        before: (1, 3),
        assigned: (9, 50),
        slot: 3,
        comparisons: [
            (1, 2, (37, 150), (19, 75), true),
            (2, 3, (9, 50), (49, 150), true),
        ],
    },
    ExpectedStep {
        tuple: [1, 1, 2],
        divisor: 150,
        before: (77, 150),
        assigned: (11, 75),
        slot: 2,
        comparisons: [
            (1, 2, (37, 150), (19, 75), true),
            (2, 3, (4, 15), (1, 6), false),
        ],
    },
    ExpectedStep {
        tuple: [1, 2, 2],
        divisor: 450,
        before: (33, 50),
        assigned: (1, 150),
        slot: 1,
        comparisons: [
            (1, 2, (1, 3), (0, 1), false),
            (1, 3, (11, 50), (19, 150), false),
        ],
    },
    ExpectedStep {
        tuple: [2, 2, 2],
        divisor: 900,
        before: (2, 3),
        assigned: (7, 75),
        slot: 3,
        comparisons: [
            (1, 2, (0, 1), (0, 1), true),
            (2, 3, (0, 1), (6, 25), true),
        ],
    },
    ExpectedStep {
        tuple: [2, 2, 3],
        divisor: 4500,
        before: (19, 25),
        assigned: (6, 25),
        slot: 3,
        comparisons: [
            (1, 2, (0, 1), (0, 1), true),
            (2, 3, (0, 1), (0, 1), true),
        ],
    },
];

#[test]
fn three_prime_ramp_trace_reproduces_every_intermediate_value() {
    let eps = load("q4500_ramp.json");
    let (_, trace) = chain_sweep_with_trace(&eps).unwrap();
    assert_eq!(trace.q, 4500);
    assert!(!trace.padded);
    assert_eq!(trace.steps.len(), EXPECTED_TRACE.len());
    let mut running = ratio(0, 1);
    for (step, expected) in trace.steps.iter().zip(EXPECTED_TRACE.iter()) {
        let label = format!("step {} (divisor {})", step.index, expected.divisor);
        assert_eq!(step.tuple, expected.tuple, "{label}: thresholds");
        assert_eq!(step.divisor, expected.divisor, "{label}: divisor");
        assert_eq!(
            step.running_total_before,
            ratio(expected.before.0, expected.before.1),
            "{label}: running total"
        );
        assert_eq!(
            step.assigned,
            ratio(expected.assigned.0, expected.assigned.1),
            "{label}: released mass"
        );
        assert_eq!(step.incremented_slot, expected.slot, "{label}: stepped slot");
        assert_eq!(step.comparisons.len(), 2, "{label}: comparison count");
        for (cmp, exp) in step.comparisons.iter().zip(expected.comparisons.iter()) {
            assert_eq!((cmp.first_slot, cmp.second_slot), (exp.0, exp.1), "{label}: slots");
            assert_eq!(cmp.first_only, ratio(exp.2 .0, exp.2 .1), "{label}: first-only");
            assert_eq!(cmp.second_only, ratio(exp.3 .0, exp.3 .1), "{label}: second-only");
            assert_eq!(cmp.candidate_is_second, exp.4, "{label}: branch");
        }
        assert_eq!(step.running_total_before, running, "{label}: chained total");
        running += step.assigned.clone();
    }
    assert_eq!(running, ratio(1, 1), "final running total");
}

#[test]
fn trace_json_is_complete_and_stringly_exact() {
    let eps = load("q4500_ramp.json");
    let (_, trace) = chain_sweep_with_trace(&eps).unwrap();
    let json = trace.to_json();
    assert_eq!(json["q"], 4500);
    assert_eq!(json["padded"], false);
    let steps = json["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 8);
    assert_eq!(steps[0]["assigned"], "29/150");
    assert_eq!(steps[1]["divisor"], 5);
    assert_eq!(steps[2]["running_total_before"], "13/50");
    assert_eq!(steps[3]["comparisons"][1]["first_only"], "9/50");
    assert_eq!(steps[7]["incremented_slot"], 3);
}

#[test]
fn two_prime_two_level_channel_splits_evenly() {
    let eps = load("q45_two_level.json");
    let limit = asymptotic_masses(&eps).unwrap();
    let expected: Vec<ExactMass> = [
        (0, 1),  // 1
        (1, 3),  // 3
        (0, 1),  // 5
        (0, 1),  // 9
        (1, 3),  // 15
        (1, 3),  // 45
    ]
    .iter()
    .map(|(n, m)| ratio(*n, *m))
    .collect();
    assert_eq!(limit.masses(), expected.as_slice());
    assert_eq!(limit.support_divisors(), vec![3, 15, 45]);
}

#[test]
fn semiprime_closed_form_matches_the_sweep() {
    for name in ["q6_case1.json", "q6_uniform.json"] {
        let eps = load(name);
        let direct = semiprime_limit(&eps).unwrap();
        let swept = chain_sweep(&eps).unwrap();
        assert_eq!(direct.masses(), swept.masses(), "{name}");
    }
    let case1 = semiprime_limit(&load("q6_case1.json")).unwrap();
    let expected: Vec<ExactMass> =
        [(3, 10), (0, 1), (3, 10), (2, 5)].iter().map(|(n, m)| ratio(*n, *m)).collect();
    assert_eq!(case1.masses(), expected.as_slice());
    let uniform = semiprime_limit(&load("q6_uniform.json")).unwrap();
    let expected: Vec<ExactMass> =
        [(1, 2), (0, 1), (0, 1), (1, 2)].iter().map(|(n, m)| ratio(*n, *m)).collect();
    assert_eq!(uniform.masses(), expected.as_slice());
    // Alphabets with a squared prime have no two-prime closed form.
    assert!(matches!(
        semiprime_limit(&load("q45_two_level.json")),
        Err(Error::NotSemiprime { q: 45 })
    ));
}

#[test]
fn prime_power_alphabets_conserve_the_starting_vector() {
    let eps = load("q512_uniform.json");
    let limit = asymptotic_masses(&eps).unwrap();
    assert_eq!(limit.method(), AsymptoticMethod::PrimePower);
    assert_eq!(limit.masses(), eps.masses());
    // Forcing the generic sweep through the padded lattice agrees.
    let swept = chain_sweep(&eps).unwrap();
    assert_eq!(swept.masses(), eps.masses());
    assert_eq!(swept.method(), AsymptoticMethod::ChainSweep);
    let (_, trace) = chain_sweep_with_trace(&eps).unwrap();
    assert!(trace.padded);
}

#[test]
fn limiting_masses_conserve_every_prime_valuation() {
    // The valuation-weighted mass per prime slot is invariant from start to
    // limit; the limit also never has more positive masses than one plus the
    // total prime multiplicity.
    for name in ["q4500_ramp.json", "q45_two_level.json", "q6_case1.json"] {
        let eps = load(name);
        let limit = asymptotic_masses(&eps).unwrap();
        let lattice = eps.lattice();
        for slot in 0..lattice.factorization().slots() {
            let weighted = |masses: &[ExactMass]| -> ExactMass {
                masses
                    .iter()
                    .enumerate()
                    .map(|(pos, m)| ratio(i64::from(lattice.exponents(pos)[slot]), 1) * m.clone())
                    .fold(ratio(0, 1), |acc, x| acc + x)
            };
            assert_eq!(
                weighted(eps.masses()),
                weighted(limit.masses()),
                "{name}, slot {slot}"
            );
        }
        let positive = limit.masses().iter().filter(|m| **m > ratio(0, 1)).count();
        let bound = lattice.factorization().prime_factor_count() as usize + 1;
        assert!(positive <= bound, "{name}: {positive} positive masses");
    }
}

#[test]
fn float_masses_cannot_enter_the_limit_solver() {
    let eps: MaecDistribution<f64> =
        MaecDistribution::from_divisor_masses(6, &[(2, 0.3), (3, 0.6), (6, 0.1)]).unwrap();
    assert!(matches!(
        asymptotic_masses(&eps),
        Err(Error::ExactRequired { .. })
    ));
    assert!(matches!(
        chain_sweep_with_trace(&eps),
        Err(Error::ExactRequired { .. })
    ));
}

#[test]
fn noiseless_and_erased_channels_are_fixed_points() {
    let noiseless: ExactChannel =
        MaecDistribution::from_divisor_masses(12, &[(12, ratio(1, 1))]).unwrap();
    assert_eq!(asymptotic_masses(&noiseless).unwrap().masses(), noiseless.masses());
    let erased: ExactChannel =
        MaecDistribution::from_divisor_masses(12, &[(1, ratio(1, 1))]).unwrap();
    assert_eq!(asymptotic_masses(&erased).unwrap().masses(), erased.masses());
    // Prime-power dispatch shares the same fixed-point behavior.
    let binary: ExactChannel =
        MaecDistribution::from_divisor_masses(2, &[(1, ratio(1, 3)), (2, ratio(2, 3))]).unwrap();
    let limit = prime_power_limit(&binary);
    assert_eq!(limit.masses(), binary.masses());
}
