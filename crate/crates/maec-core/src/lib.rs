//! Erasure channels on integers mod `q` that reveal their input up to a
//! divisor coset, and the calculus that polar transforms induce on them.
//!
//! The crate models a channel as a probability vector over the divisors of
//! `q`: with probability `eps_d` the output is the input's coset modulo `d`.
//! On these vectors it provides:
//!
//! - closed-form channel parameters (order-α capacities, Bhattacharyya
//!   average, error probability) — [`channel`];
//! - the worse/better polar transform pair as gcd/lcm mass convolutions,
//!   exhaustive and sampled walks of the transform tree, and the quadrant
//!   aggregates whose recursions govern deep polarization — [`polar`];
//! - the limiting distribution of the per-divisor branch means, by
//!   conservation on prime powers and by the threshold mass sweep in
//!   general — [`asymptotic`];
//! - a brute-force cross-check that materializes channels as transition
//!   matrices and verifies the closed forms and the output-merging
//!   equivalences from the definitions — [`oracle`];
//! - serialization of channel files and exact/floating mass arithmetic
//!   behind one trait — [`channel_spec`], [`scalar`].
//!
//! Mass arithmetic is generic: [`ExactMass`] (arbitrary-precision rationals)
//! keeps every identity exact, `f64`/`f32` trade exactness for speed. The
//! aliases [`ExactChannel`] and [`FloatChannel`] cover the two common
//! instantiations.

pub mod asymptotic;
pub mod channel;
pub mod channel_spec;
pub mod error;
pub mod lattice;
pub mod oracle;
pub mod polar;
pub mod scalar;

pub use asymptotic::{
    asymptotic_masses, chain_sweep, chain_sweep_with_trace, limit_aggregates, prime_power_limit,
    semiprime_limit, AsymptoticDistribution, AsymptoticMethod, SweepComparison, SweepStep,
    SweepTrace,
};
pub use channel::{Alpha, LogBase, MaecDistribution, FLOAT_MASS_TOLERANCE};
pub use channel_spec::{emit_json, emit_toml, ChannelSpec, MassLiteral};
pub use error::{Error, Result};
pub use lattice::{DivisorLattice, Factorization, MAX_ALPHABET};
pub use polar::{
    aggregates, enumerate, enumerate_with_guard, evolve, minus_transform, plus_transform,
    prime_tail, transform, AggregateQuad, Branch, EnsembleSource, ErasureTailSplit,
    PolarEnsemble, ProportionSummary, Sign, DEFAULT_STEP_GUARD,
};
pub use oracle::{
    backward_channel, channels_identical, compose, crt_solve, dmc_alpha_capacity,
    dmc_bhattacharyya, dmc_error_probability, generic_minus, generic_plus, maec_to_dmc,
    max_deviation, merge_better_outputs, merge_worse_outputs, output_distribution,
    split_better_outputs, split_worse_outputs, units_of, verify_equivalences, Dmc,
    EquivalenceReport, Label, Unit, ORACLE_MAX_DIVISORS, ORACLE_MAX_Q, ORACLE_TOLERANCE,
};
pub use scalar::{
    abs_diff_f64, is_negative, max_mass, min_mass, positive_part, ratio, sum_is_one, ExactMass,
    Mass,
};

/// Channel with arbitrary-precision rational masses: every identity exact.
pub type ExactChannel = MaecDistribution<ExactMass>;

/// Channel with `f64` masses: fast, with the usual rounding caveats.
pub type FloatChannel = MaecDistribution<f64>;
