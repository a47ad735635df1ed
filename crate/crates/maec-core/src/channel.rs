//! Erasure channels on the additive group of integers mod `q`.
//!
//! A channel here is a probability vector `(eps_d)` over the divisors of `q`:
//! on input `x` it reveals the coset `x + d Z/qZ` with probability `eps_d`.
//! The divisor `d = q` identifies `x` exactly; `d = 1` reveals nothing. All
//! channel parameters (order-α capacities, average Bhattacharyya distance,
//! error probability) have closed forms in the masses, implemented below.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::DivisorLattice;
use crate::scalar::{is_negative, sum_is_one, Mass};

/// Sum-to-one slack accepted when validating floating-point mass vectors.
pub const FLOAT_MASS_TOLERANCE: f64 = 1e-12;

/// Order of a capacity `I_alpha`. Finite orders other than 0 and 1 are kept as
/// `f64` exponents; the three special orders have their own closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    /// Order 0: log of the smallest divisor carrying mass.
    Zero,
    /// Order 1: the mutual-information capacity.
    One,
    /// Order infinity: log of the mean revealed-coset size.
    Infinity,
    /// Any other positive finite order.
    Finite(f64),
}

impl Alpha {
    /// Validate a finite order: must be positive, finite, and not 1 or 0
    /// (those have dedicated variants).
    pub fn finite(value: f64) -> Result<Self> {
        if value == 0.0 {
            return Ok(Self::Zero);
        }
        if value == 1.0 {
            return Ok(Self::One);
        }
        if value.is_infinite() && value > 0.0 {
            return Ok(Self::Infinity);
        }
        if value.is_finite() && value > 0.0 {
            return Ok(Self::Finite(value));
        }
        Err(Error::BadMassLiteral(format!("capacity order {value}")))
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Alpha::Zero => write!(f, "0"),
            Alpha::One => write!(f, "1"),
            Alpha::Infinity => write!(f, "inf"),
            Alpha::Finite(a) => write!(f, "{a}"),
        }
    }
}

/// Base of the logarithms in reported capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    /// Base `q`: capacities land in `[0, 1]`.
    AlphabetSize,
    /// Natural log (nats).
    Natural,
    /// Base 2 (bits).
    Binary,
}

impl LogBase {
    pub(crate) fn ln_of_base(self, q: u64) -> f64 {
        match self {
            LogBase::AlphabetSize => (q as f64).ln(),
            LogBase::Natural => 1.0,
            LogBase::Binary => 2f64.ln(),
        }
    }
}

/// A probability vector over the divisor lattice of `q`, defining the erasure
/// channel that reveals cosets modulo its divisors.
#[derive(Debug, Clone)]
pub struct MaecDistribution<S> {
    lattice: Arc<DivisorLattice>,
    masses: Vec<S>,
}

impl<S: Mass> PartialEq for MaecDistribution<S> {
    fn eq(&self, other: &Self) -> bool {
        self.q() == other.q() && self.masses == other.masses
    }
}

impl<S: Mass> MaecDistribution<S> {
    /// Validate and wrap a mass vector aligned with `lattice.divisors()`.
    ///
    /// Masses must be nonnegative and sum to 1 — exactly for rational masses,
    /// within [`FLOAT_MASS_TOLERANCE`] for floats.
    pub fn new(lattice: Arc<DivisorLattice>, masses: Vec<S>) -> Result<Self> {
        if masses.len() != lattice.len() {
            return Err(Error::MassCount {
                q: lattice.q(),
                expected: lattice.len(),
                got: masses.len(),
            });
        }
        let mut sum = S::zero();
        for (pos, mass) in masses.iter().enumerate() {
            if is_negative(mass) {
                return Err(Error::NegativeMass {
                    divisor: lattice.divisor(pos),
                    value: mass.to_string(),
                });
            }
            sum += mass.clone();
        }
        if !sum_is_one(&sum, FLOAT_MASS_TOLERANCE) {
            return Err(Error::MassSum { sum: sum.to_string() });
        }
        Ok(Self { lattice, masses })
    }

    /// Wrap masses that are correct by construction (transform outputs and
    /// regroupings conserve total mass algebraically; floats may drift past
    /// the input-validation tolerance after many steps, which is expected).
    pub(crate) fn unchecked(lattice: Arc<DivisorLattice>, masses: Vec<S>) -> Self {
        debug_assert_eq!(masses.len(), lattice.len());
        Self { lattice, masses }
    }

    /// Build over the lattice of `q` from `(divisor, mass)` pairs; omitted
    /// divisors get zero mass.
    pub fn from_divisor_masses(q: u64, pairs: &[(u64, S)]) -> Result<Self> {
        let lattice = DivisorLattice::shared(q)?;
        let mut masses = vec![S::zero(); lattice.len()];
        for (d, mass) in pairs {
            let pos = lattice
                .position_of(*d)
                .ok_or(Error::NotADivisor { divisor: *d, q })?;
            masses[pos] += mass.clone();
        }
        Self::new(lattice, masses)
    }

    /// The channel that always reveals the input (all mass on `d = q`).
    pub fn noiseless(lattice: Arc<DivisorLattice>) -> Self {
        let mut masses = vec![S::zero(); lattice.len()];
        let last = masses.len() - 1;
        masses[last] = S::one();
        Self { lattice, masses }
    }

    /// The uniform vector `1/tau` on every divisor.
    pub fn uniform(lattice: Arc<DivisorLattice>) -> Self {
        let tau = lattice.len() as u64;
        let masses = vec![S::from_ratio(1, tau); lattice.len()];
        Self { lattice, masses }
    }

    /// Input alphabet size.
    pub fn q(&self) -> u64 {
        self.lattice.q()
    }

    /// Shared divisor lattice.
    pub fn lattice(&self) -> &Arc<DivisorLattice> {
        &self.lattice
    }

    /// Masses aligned with `lattice().divisors()`.
    pub fn masses(&self) -> &[S] {
        &self.masses
    }

    /// Mass at a lattice position.
    pub fn mass(&self, pos: usize) -> &S {
        &self.masses[pos]
    }

    /// Mass of a divisor value, if it is one.
    pub fn mass_of_divisor(&self, d: u64) -> Option<&S> {
        self.lattice.position_of(d).map(|pos| &self.masses[pos])
    }

    /// Rebuild this vector over a padded lattice of the same `q` (identical
    /// divisors and masses; exponent tuples gain a zero column on prime
    /// powers). Used by consumers that need two prime slots.
    pub fn with_padded_lattice(&self) -> Result<Self> {
        let lattice = Arc::new(DivisorLattice::new_padded(self.q())?);
        Ok(Self { lattice, masses: self.masses.clone() })
    }

    /// Capacity of order `alpha` in the requested log base, evaluated in
    /// `f64` (logarithms leave the rational field; exact mode converts masses
    /// at this boundary only). With base [`LogBase::AlphabetSize`] the result
    /// lies in `[0, 1]`.
    pub fn alpha_capacity(&self, alpha: Alpha, base: LogBase) -> f64 {
        capacity_from_masses(&self.lattice, &self.masses, alpha, base)
    }

    /// The exact argument whose logarithm is the capacity, where one exists:
    /// the smallest supported divisor for order 0, the mean revealed-coset
    /// size for order infinity. Other orders mix logarithms of distinct
    /// integers and have no single rational argument.
    pub fn capacity_log_argument(&self, alpha: Alpha) -> Option<S> {
        match alpha {
            Alpha::Zero => self.support_min_divisor().map(S::from_integer),
            Alpha::Infinity => Some(self.mean_revealed_size()),
            _ => None,
        }
    }

    /// Average Bhattacharyya distance between distinct inputs:
    /// `(sum_d (q/d) eps_d - 1) / (q - 1)`, exact in the mass arithmetic.
    pub fn bhattacharyya(&self) -> S {
        let q = self.q();
        let mut sum = S::zero();
        for (pos, mass) in self.masses.iter().enumerate() {
            let d = self.lattice.divisor(pos);
            sum += S::from_integer(q / d) * mass.clone();
        }
        (sum - S::one()) / S::from_integer(q - 1)
    }

    /// Maximum-likelihood error probability under uniform inputs:
    /// `1 - sum_d (d/q) eps_d`, exact in the mass arithmetic.
    pub fn error_probability(&self) -> S {
        S::one() - self.mean_revealed_size() / S::from_integer(self.q())
    }

    /// `sum_d d * eps_d`, the mean number of coset representatives revealed.
    pub fn mean_revealed_size(&self) -> S {
        let mut sum = S::zero();
        for (pos, mass) in self.masses.iter().enumerate() {
            sum += S::from_integer(self.lattice.divisor(pos)) * mass.clone();
        }
        sum
    }

    /// Smallest divisor with positive mass.
    fn support_min_divisor(&self) -> Option<u64> {
        support_min_divisor(&self.lattice, &self.masses)
    }

    /// Project the channel onto the subgroup quotient `Z/dZ` for a divisor
    /// `d | q`: observing a coset modulo `d2` pins the input modulo
    /// `gcd(d2, d)`, so the reduced channel groups masses by that gcd.
    pub fn reduce_mod(&self, d: u64) -> Result<MaecDistribution<S>> {
        let q = self.q();
        if d == 0 || q % d != 0 {
            return Err(Error::NotADivisor { divisor: d, q });
        }
        let reduced = DivisorLattice::shared(d)?;
        let mut masses = vec![S::zero(); reduced.len()];
        for (pos, mass) in self.masses.iter().enumerate() {
            let d2 = self.lattice.divisor(pos);
            let g = num_integer::gcd(d2, d);
            let target = reduced
                .position_of(g)
                .expect("gcd with d divides d, so it is on the reduced lattice");
            masses[target] += mass.clone();
        }
        Ok(MaecDistribution::unchecked(reduced, masses))
    }
}

fn support_min_divisor<S: Mass>(lattice: &DivisorLattice, masses: &[S]) -> Option<u64> {
    masses
        .iter()
        .enumerate()
        .find(|(_, mass)| **mass > S::zero())
        .map(|(pos, _)| lattice.divisor(pos))
}

/// Capacity of order `alpha` for a raw mass slice over `lattice`, without
/// wrapping it in a channel value. Shared by the channel method and by bulk
/// consumers holding flattened mass rows.
pub(crate) fn capacity_from_masses<S: Mass>(
    lattice: &DivisorLattice,
    masses: &[S],
    alpha: Alpha,
    base: LogBase,
) -> f64 {
    let q = lattice.q();
    let ln_base = base.ln_of_base(q);
    let nats = match alpha {
        Alpha::Zero => {
            let d = support_min_divisor(lattice, masses)
                .expect("a probability vector has at least one positive mass");
            (d as f64).ln()
        }
        Alpha::One => masses
            .iter()
            .enumerate()
            .map(|(pos, mass)| {
                let d = lattice.divisor(pos) as f64;
                mass.to_f64() * d.ln()
            })
            .sum(),
        Alpha::Infinity => {
            let mean: f64 = masses
                .iter()
                .enumerate()
                .map(|(pos, mass)| lattice.divisor(pos) as f64 * mass.to_f64())
                .sum();
            mean.ln()
        }
        Alpha::Finite(a) => {
            let exponent = (a - 1.0) / a;
            let sum: f64 = masses
                .iter()
                .enumerate()
                .map(|(pos, mass)| {
                    let d = lattice.divisor(pos) as f64;
                    mass.to_f64() * d.powf(exponent)
                })
                .sum();
            (a / (a - 1.0)) * sum.ln()
        }
    };
    nats / ln_base
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn case1() -> MaecDistribution<crate::scalar::ExactMass> {
        MaecDistribution::from_divisor_masses(
            6,
            &[(2, ratio(3, 10)), (3, ratio(3, 5)), (6, ratio(1, 10))],
        )
        .unwrap()
    }

    #[test]
    fn validates_mass_sums() {
        let lattice = DivisorLattice::shared(6).unwrap();
        let bad = vec![ratio(1, 2), ratio(1, 2), ratio(1, 2), ratio(0, 1)];
        assert!(matches!(
            MaecDistribution::new(lattice, bad),
            Err(Error::MassSum { .. })
        ));
    }

    #[test]
    fn capacity_log_arguments_are_exact() {
        let eps = case1();
        assert_eq!(eps.capacity_log_argument(Alpha::Zero), Some(ratio(2, 1)));
        // 2*(3/10) + 3*(3/5) + 6*(1/10) = 3
        assert_eq!(eps.capacity_log_argument(Alpha::Infinity), Some(ratio(3, 1)));
        assert_eq!(eps.capacity_log_argument(Alpha::One), None);
    }

    #[test]
    fn reduction_regroups_by_gcd() {
        let reduced = case1().reduce_mod(2).unwrap();
        assert_eq!(reduced.q(), 2);
        // gcd(1,2)=gcd(3,2)=1 and gcd(2,2)=gcd(6,2)=2: (0+3/5, 3/10+1/10).
        assert_eq!(reduced.masses(), &[ratio(3, 5), ratio(2, 5)]);
    }
}
