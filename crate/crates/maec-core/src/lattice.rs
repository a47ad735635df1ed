//! The divisor lattice of the input alphabet size.
//!
//! Channel masses are indexed by the positive divisors of `q`. This module
//! factorizes `q`, enumerates its divisors in ascending order, and precomputes
//! dense gcd/lcm tables over divisor *positions* so that the quadratic
//! transform convolutions are pure table lookups. Positions also carry their
//! prime-exponent tuples, which the aggregate sums and the limiting-mass sweep
//! consume directly.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported input alphabet size (inclusive).
pub const MAX_ALPHABET: u64 = 1 << 32;

/// Prime factorization `q = p_1^{r_1} ... p_m^{r_m}` with `p_1 < p_2 < ...`.
///
/// A factorization may carry a trailing *padding* prime with exponent 0; this
/// leaves the divisor set untouched but makes every exponent tuple at least
/// two coordinates long, which the limiting-mass sweep needs on prime powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    q: u64,
    primes: Vec<u64>,
    exponents: Vec<u32>,
}

impl Factorization {
    /// Factorize by trial division. Errors unless `2 <= q <= 2^32`.
    pub fn of(q: u64) -> Result<Self> {
        if !(2..=MAX_ALPHABET).contains(&q) {
            return Err(Error::AlphabetSize(q));
        }
        let mut primes = Vec::new();
        let mut exponents = Vec::new();
        let mut rest = q;
        let mut p: u64 = 2;
        while p * p <= rest {
            if rest % p == 0 {
                let mut r = 0;
                while rest % p == 0 {
                    rest /= p;
                    r += 1;
                }
                primes.push(p);
                exponents.push(r);
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if rest > 1 {
            primes.push(rest);
            exponents.push(1);
        }
        Ok(Self { q, primes, exponents })
    }

    /// Like [`Factorization::of`], but guaranteeing at least two prime slots by
    /// appending the smallest prime not dividing `q` with exponent 0.
    pub fn of_padded(q: u64) -> Result<Self> {
        let mut f = Self::of(q)?;
        f.pad();
        Ok(f)
    }

    /// Append a zero-exponent prime slot if there is only one.
    pub fn pad(&mut self) {
        if self.primes.len() == 1 {
            let filler = [2u64, 3, 5].into_iter().find(|p| self.q % p != 0).expect(
                "q has a single prime factor, so one of 2, 3, 5 does not divide it",
            );
            self.primes.push(filler);
            self.exponents.push(0);
        }
    }

    /// The factored number.
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Prime bases in ascending order (padding slot included, if any).
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Exponents aligned with [`Factorization::primes`].
    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Number of prime slots, counting a padding slot.
    pub fn slots(&self) -> usize {
        self.primes.len()
    }

    /// Number of distinct primes actually dividing `q` (padding excluded).
    pub fn distinct_prime_count(&self) -> usize {
        self.exponents.iter().filter(|&&r| r > 0).count()
    }

    /// Number of prime factors counted with multiplicity.
    pub fn prime_factor_count(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Number of positive divisors.
    pub fn divisor_count(&self) -> usize {
        self.exponents.iter().map(|&r| r as usize + 1).product()
    }

    /// True when `q` is a prime power (padding ignored).
    pub fn is_prime_power(&self) -> bool {
        self.distinct_prime_count() == 1
    }
}

/// Divisors of `q` in ascending order, with dense-position gcd/lcm tables and
/// per-position prime-exponent tuples.
#[derive(Debug)]
pub struct DivisorLattice {
    factorization: Factorization,
    divisors: Vec<u64>,
    /// Row-major `len x slots` exponent tuples, aligned with `divisors`.
    tuples: Vec<u32>,
    /// Row-major `len x len` tables of divisor positions.
    gcd_table: Vec<u32>,
    lcm_table: Vec<u32>,
}

impl DivisorLattice {
    /// Build the lattice for `q`.
    pub fn new(q: u64) -> Result<Self> {
        Self::from_factorization(Factorization::of(q)?)
    }

    /// Build the lattice for `q` with a padded factorization (prime powers get
    /// a second, zero-exponent prime slot; the divisor set is identical).
    pub fn new_padded(q: u64) -> Result<Self> {
        Self::from_factorization(Factorization::of_padded(q)?)
    }

    /// Convenience constructor returning the shared handle used by channels.
    pub fn shared(q: u64) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::new(q)?))
    }

    /// Build from an explicit factorization.
    pub fn from_factorization(factorization: Factorization) -> Result<Self> {
        let m = factorization.slots();
        let count = factorization.divisor_count();

        // Enumerate exponent tuples in odometer order, then sort by divisor value.
        let mut entries: Vec<(u64, Vec<u32>)> = Vec::with_capacity(count);
        let mut tuple = vec![0u32; m];
        loop {
            let mut d: u64 = 1;
            for (slot, &t) in tuple.iter().enumerate() {
                d *= factorization.primes()[slot].pow(t);
            }
            entries.push((d, tuple.clone()));
            // Advance the odometer; stop after the all-max tuple.
            let mut slot = 0;
            loop {
                if slot == m {
                    break;
                }
                if tuple[slot] < factorization.exponents()[slot] {
                    tuple[slot] += 1;
                    break;
                }
                tuple[slot] = 0;
                slot += 1;
            }
            if slot == m {
                break;
            }
        }
        entries.sort_by_key(|&(d, _)| d);

        let divisors: Vec<u64> = entries.iter().map(|&(d, _)| d).collect();
        let mut tuples = Vec::with_capacity(count * m);
        for (_, t) in &entries {
            tuples.extend_from_slice(t);
        }

        // Mixed-radix code -> sorted position, for assembling the pair tables.
        let mut strides = vec![1usize; m];
        for slot in 1..m {
            strides[slot] =
                strides[slot - 1] * (factorization.exponents()[slot - 1] as usize + 1);
        }
        let code_of = |t: &[u32]| -> usize {
            t.iter()
                .enumerate()
                .map(|(slot, &e)| e as usize * strides[slot])
                .sum()
        };
        let mut pos_of_code = vec![0u32; count];
        for (pos, (_, t)) in entries.iter().enumerate() {
            pos_of_code[code_of(t)] = pos as u32;
        }

        let mut gcd_table = vec![0u32; count * count];
        let mut lcm_table = vec![0u32; count * count];
        let mut meet = vec![0u32; m];
        let mut join = vec![0u32; m];
        for i in 0..count {
            let ti = &tuples[i * m..(i + 1) * m];
            for j in 0..count {
                let tj = &tuples[j * m..(j + 1) * m];
                for slot in 0..m {
                    meet[slot] = ti[slot].min(tj[slot]);
                    join[slot] = ti[slot].max(tj[slot]);
                }
                gcd_table[i * count + j] = pos_of_code[code_of(&meet)];
                lcm_table[i * count + j] = pos_of_code[code_of(&join)];
            }
        }

        Ok(Self { factorization, divisors, tuples, gcd_table, lcm_table })
    }

    /// The alphabet size this lattice belongs to.
    pub fn q(&self) -> u64 {
        self.factorization.q()
    }

    /// Number of divisors.
    pub fn len(&self) -> usize {
        self.divisors.len()
    }

    /// A divisor lattice is never empty (1 and `q` always divide `q`).
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The factorization backing this lattice (padding slot visible, if any).
    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    /// Divisors in ascending order.
    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    /// The divisor at a position.
    pub fn divisor(&self, pos: usize) -> u64 {
        self.divisors[pos]
    }

    /// Position of a divisor value, if it is one.
    pub fn position_of(&self, d: u64) -> Option<usize> {
        self.divisors.binary_search(&d).ok()
    }

    /// Position of `gcd(divisor(i), divisor(j))`.
    #[inline]
    pub fn gcd_position(&self, i: usize, j: usize) -> usize {
        self.gcd_table[i * self.divisors.len() + j] as usize
    }

    /// Position of `lcm(divisor(i), divisor(j))`.
    #[inline]
    pub fn lcm_position(&self, i: usize, j: usize) -> usize {
        self.lcm_table[i * self.divisors.len() + j] as usize
    }

    /// Prime-exponent tuple of the divisor at `pos`, aligned with
    /// `factorization().primes()`.
    pub fn exponents(&self, pos: usize) -> &[u32] {
        let m = self.factorization.slots();
        &self.tuples[pos * m..(pos + 1) * m]
    }

    /// Position of the divisor with the given exponent tuple.
    pub fn position_of_exponents(&self, tuple: &[u32]) -> Option<usize> {
        if tuple.len() != self.factorization.slots() {
            return None;
        }
        let mut d: u64 = 1;
        for (slot, &t) in tuple.iter().enumerate() {
            if t > self.factorization.exponents()[slot] {
                return None;
            }
            d = d.checked_mul(self.factorization.primes()[slot].checked_pow(t)?)?;
        }
        self.position_of(d)
    }
}
