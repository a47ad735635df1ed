//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building or operating on channels.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// The input alphabet size is outside the supported range `2..=2^32`.
    #[error("alphabet size must lie in 2..=2^32, got {0}")]
    AlphabetSize(u64),

    /// A divisor key does not divide the alphabet size.
    #[error("{divisor} does not divide {q}")]
    NotADivisor { divisor: u64, q: u64 },

    /// A mass vector has the wrong number of entries for its divisor lattice.
    #[error("expected {expected} masses for the divisors of {q}, got {got}")]
    MassCount { q: u64, expected: usize, got: usize },

    /// A probability mass is negative.
    #[error("mass for divisor {divisor} is negative ({value})")]
    NegativeMass { divisor: u64, value: String },

    /// The masses do not form a probability vector.
    #[error("masses must sum to 1, got {sum}")]
    MassSum { sum: String },

    /// Two channels that must share an input alphabet do not.
    #[error("mismatched input alphabets: {0} vs {1}")]
    AlphabetMismatch(u64, u64),

    /// A rational-only operation was invoked on floating-point masses.
    #[error("{operation} requires exact rational masses; rerun in exact mode")]
    ExactRequired { operation: &'static str },

    /// A decimal literal appeared where exact arithmetic is requested.
    #[error("decimal literal {0:?} would be rounded; exact masses must be integers or fractions like \"3/10\"")]
    DecimalInExact(String),

    /// A mass literal could not be parsed at all.
    #[error("cannot parse mass literal {0:?}")]
    BadMassLiteral(String),

    /// A channel file contains a key that is not a divisor of its `q`.
    #[error("mass key {key:?} is not a divisor of {q}")]
    UnknownDivisorKey { key: String, q: u64 },

    /// A channel file could not be decoded.
    #[error("cannot read channel file: {0}")]
    BadChannelFile(String),

    /// Transform-step count exceeds the enumeration guard.
    #[error("{steps} transform steps would enumerate 2^{steps} branches; the guard allows at most {limit}")]
    StepGuard { steps: u32, limit: u32 },

    /// The requested element is not invertible modulo `q`.
    #[error("{value} is not a unit modulo {q}")]
    NotAUnit { value: u64, q: u64 },

    /// The explicit-matrix oracle is restricted to small alphabets.
    #[error("explicit-matrix oracle supports q <= {max_q} and at most {max_divisors} divisors; got q = {q} with {divisors} divisors")]
    OracleSize { q: u64, divisors: usize, max_q: u64, max_divisors: usize },

    /// An operation needs a prime-power alphabet.
    #[error("q = {q} has {distinct_primes} distinct prime factors; this operation needs a prime power")]
    NotPrimePower { q: u64, distinct_primes: usize },

    /// An operation needs a product of two distinct primes.
    #[error("q = {q} is not a product of two distinct primes")]
    NotSemiprime { q: u64 },

    /// Aggregate prime indices are out of range or not strictly increasing.
    #[error("prime indices must satisfy 1 <= i < j <= {m}, got ({i}, {j})")]
    PrimeIndices { i: usize, j: usize, m: usize },

    /// The limiting-mass sweep failed to exhaust the total mass within its budget.
    #[error("mass sweep stopped after {iterations} iterations with running total {running_total}; input is not a valid probability vector")]
    SweepStalled { iterations: usize, running_total: String },

    /// Two explicit channels cannot be composed or compared.
    #[error("channel shapes do not line up: {0}")]
    ChannelShape(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
