//! Polar transforms of erasure channels and the statistics of their branches.
//!
//! One polarization step turns a pair of channels into a *worse* and a
//! *better* synthetic channel. For coset-erasure channels both stay in the
//! family: the worse channel's mass at divisor `d` convolves the input masses
//! over gcd, the better over lcm, independently of which unit scales the
//! combining map. Iterating over sign sequences grows a binary tree of
//! channels; this module walks that tree exhaustively or by seeded sampling
//! and reports per-divisor means and the proportions of near-noiseless,
//! near-useless, and in-between branches. It also provides the quadrant
//! aggregates of the prime-exponent tuples, whose one-step recursions and
//! limits drive the asymptotic analysis.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{capacity_from_masses, Alpha, LogBase, MaecDistribution};
use crate::error::{Error, Result};
use crate::lattice::DivisorLattice;
use crate::scalar::{min_mass, positive_part, Mass};

/// Largest step count the enumeration walk accepts by default (2^26 leaves).
pub const DEFAULT_STEP_GUARD: u32 = 26;

/// One polarization step: keep the worse or the better synthetic channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    /// The worse (gcd-convolution) branch.
    Minus,
    /// The better (lcm-convolution) branch.
    Plus,
}

impl Sign {
    /// `'-'` or `'+'`.
    pub fn symbol(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Plus => '+',
        }
    }
}

/// A sign sequence identifying one branch of the polarization tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Branch(Vec<Sign>);

impl Branch {
    /// The empty sequence (the root channel).
    pub fn root() -> Self {
        Self(Vec::new())
    }

    /// Wrap an explicit sign sequence.
    pub fn from_signs(signs: Vec<Sign>) -> Self {
        Self(signs)
    }

    /// Reconstruct the branch with the given `weight` at depth `len`: the
    /// weight read as `len` binary digits, minus = 0 and plus = 1, first
    /// transform in the most significant position.
    pub fn from_weight(weight: u64, len: u32) -> Self {
        assert!(len <= 63, "branch depth limited to 63");
        assert!(len == 64 || weight < 1u64 << len, "weight out of range for depth");
        let signs = (0..len)
            .rev()
            .map(|bit| if weight >> bit & 1 == 1 { Sign::Plus } else { Sign::Minus })
            .collect();
        Self(signs)
    }

    /// The signs, first transform first.
    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True for the root sequence.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Append one step.
    pub fn push(&mut self, sign: Sign) {
        self.0.push(sign);
    }

    /// Drop the last step.
    pub fn pop(&mut self) -> Option<Sign> {
        self.0.pop()
    }

    /// The branch index: doubling per step, plus one on a better-branch step.
    /// Bijective onto `0..2^len` and equal to reading the sequence as binary
    /// with plus as 1.
    pub fn weight(&self) -> u64 {
        assert!(self.0.len() <= 63, "weight overflows past 63 steps");
        self.0.iter().fold(0, |w, sign| match sign {
            Sign::Minus => 2 * w,
            Sign::Plus => 2 * w + 1,
        })
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for sign in &self.0 {
            write!(f, "{}", sign.symbol())?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '-' => Ok(Sign::Minus),
                '+' => Ok(Sign::Plus),
                other => Err(Error::BadMassLiteral(format!("branch sign {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

fn check_same_alphabet<S: Mass>(
    a: &MaecDistribution<S>,
    b: &MaecDistribution<S>,
) -> Result<()> {
    if a.q() != b.q() {
        return Err(Error::AlphabetMismatch(a.q(), b.q()));
    }
    Ok(())
}

/// The worse synthetic channel of a (possibly distinct) channel pair: mass at
/// `d` is the sum of `a_i * b_j` over divisor pairs with `gcd = d`.
pub fn minus_transform<S: Mass>(
    a: &MaecDistribution<S>,
    b: &MaecDistribution<S>,
) -> Result<MaecDistribution<S>> {
    check_same_alphabet(a, b)?;
    let lattice = a.lattice();
    let n = lattice.len();
    let mut out = vec![S::zero(); n];
    // Fixed i-then-j ascending accumulation order for bit-reproducible floats.
    for i in 0..n {
        for j in 0..n {
            out[lattice.gcd_position(i, j)] += a.mass(i).clone() * b.mass(j).clone();
        }
    }
    Ok(MaecDistribution::unchecked(Arc::clone(lattice), out))
}

/// The better synthetic channel: as [`minus_transform`], but over `lcm = d`.
pub fn plus_transform<S: Mass>(
    a: &MaecDistribution<S>,
    b: &MaecDistribution<S>,
) -> Result<MaecDistribution<S>> {
    check_same_alphabet(a, b)?;
    let lattice = a.lattice();
    let n = lattice.len();
    let mut out = vec![S::zero(); n];
    for i in 0..n {
        for j in 0..n {
            out[lattice.lcm_position(i, j)] += a.mass(i).clone() * b.mass(j).clone();
        }
    }
    Ok(MaecDistribution::unchecked(Arc::clone(lattice), out))
}

/// Apply the transform selected by `sign` to a channel pair.
pub fn transform<S: Mass>(
    sign: Sign,
    a: &MaecDistribution<S>,
    b: &MaecDistribution<S>,
) -> Result<MaecDistribution<S>> {
    match sign {
        Sign::Minus => minus_transform(a, b),
        Sign::Plus => plus_transform(a, b),
    }
}

/// Follow one branch of the stationary polarization tree: each step pairs the
/// current channel with itself and keeps the branch selected by the sign.
pub fn evolve<S: Mass>(
    eps: &MaecDistribution<S>,
    signs: &[Sign],
) -> Result<MaecDistribution<S>> {
    let mut current = eps.clone();
    for &sign in signs {
        current = transform(sign, &current, &current)?;
    }
    Ok(current)
}

/// Walk the full polarization tree to depth `steps`, invoking the visitor on
/// every node (the root included; leaves are the nodes at depth `steps`).
/// Visits children worse-branch first, so leaves arrive in ascending branch
/// weight. Guarded by [`DEFAULT_STEP_GUARD`]; see [`enumerate_with_guard`].
pub fn enumerate<S, F>(eps: &MaecDistribution<S>, steps: u32, visit: F) -> Result<()>
where
    S: Mass,
    F: FnMut(&Branch, &MaecDistribution<S>),
{
    enumerate_with_guard(eps, steps, DEFAULT_STEP_GUARD, visit)
}

/// [`enumerate`] with an explicit guard for callers that really mean it.
pub fn enumerate_with_guard<S, F>(
    eps: &MaecDistribution<S>,
    steps: u32,
    guard: u32,
    mut visit: F,
) -> Result<()>
where
    S: Mass,
    F: FnMut(&Branch, &MaecDistribution<S>),
{
    if steps > guard {
        return Err(Error::StepGuard { steps, limit: guard });
    }
    let mut path = Branch::root();
    walk(eps, steps, &mut path, &mut visit)?;
    Ok(())
}

fn walk<S, F>(
    node: &MaecDistribution<S>,
    depth_left: u32,
    path: &mut Branch,
    visit: &mut F,
) -> Result<()>
where
    S: Mass,
    F: FnMut(&Branch, &MaecDistribution<S>),
{
    visit(path, node);
    if depth_left == 0 {
        return Ok(());
    }
    let worse = minus_transform(node, node)?;
    path.push(Sign::Minus);
    walk(&worse, depth_left - 1, path, visit)?;
    path.pop();
    drop(worse);
    let better = plus_transform(node, node)?;
    path.push(Sign::Plus);
    walk(&better, depth_left - 1, path, visit)?;
    path.pop();
    Ok(())
}

/// How a [`PolarEnsemble`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleSource {
    /// All `2^steps` branches, in ascending branch weight.
    Exhaustive,
    /// `samples` branches drawn with the seeded per-branch generator.
    Sampled { samples: usize, seed: u64 },
}

/// Counts of branches against the `delta` thresholds for one divisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProportionSummary {
    /// Branches with mass strictly above `1 - delta`.
    pub near_one: usize,
    /// Branches with mass strictly below `delta`.
    pub near_zero: usize,
    /// Everything in between.
    pub intermediate: usize,
}

impl ProportionSummary {
    /// Total branches counted.
    pub fn total(&self) -> usize {
        self.near_one + self.near_zero + self.intermediate
    }

    /// Fraction of branches near mass 1.
    pub fn fraction_near_one(&self) -> f64 {
        self.near_one as f64 / self.total() as f64
    }

    /// Fraction of branches near mass 0.
    pub fn fraction_near_zero(&self) -> f64 {
        self.near_zero as f64 / self.total() as f64
    }

    /// Fraction of branches in between.
    pub fn fraction_intermediate(&self) -> f64 {
        self.intermediate as f64 / self.total() as f64
    }
}

/// The set of depth-`steps` synthetic channels of one starting channel,
/// materialized for statistics: per-divisor branch means, threshold
/// proportions, and per-branch capacities.
#[derive(Debug, Clone)]
pub struct PolarEnsemble<S> {
    lattice: Arc<DivisorLattice>,
    steps: u32,
    source: EnsembleSource,
    /// Row-major `count x tau` leaf masses.
    leaves: Vec<S>,
    /// Branch weights for sampled ensembles; exhaustive ensembles use the row
    /// index itself.
    weights: Option<Vec<u64>>,
}

impl<S: Mass> PolarEnsemble<S> {
    /// Enumerate all `2^steps` branches.
    pub fn exhaustive(eps: &MaecDistribution<S>, steps: u32) -> Result<Self> {
        Self::exhaustive_with_guard(eps, steps, DEFAULT_STEP_GUARD)
    }

    /// [`PolarEnsemble::exhaustive`] with an explicit step guard.
    pub fn exhaustive_with_guard(
        eps: &MaecDistribution<S>,
        steps: u32,
        guard: u32,
    ) -> Result<Self> {
        let tau = eps.lattice().len();
        let mut leaves = Vec::with_capacity((1usize << steps.min(guard)) * tau);
        enumerate_with_guard(eps, steps, guard, |branch, node| {
            if branch.len() == steps as usize {
                leaves.extend_from_slice(node.masses());
            }
        })?;
        Ok(Self {
            lattice: Arc::clone(eps.lattice()),
            steps,
            source: EnsembleSource::Exhaustive,
            leaves,
            weights: None,
        })
    }

    /// Draw `samples` branches of depth `steps`. Branch `k` gets its own
    /// generator stream keyed by `(seed, k)`, so results are independent of
    /// visiting order and reproducible bit-for-bit for a fixed seed.
    pub fn sampled(
        eps: &MaecDistribution<S>,
        steps: u32,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let tau = eps.lattice().len();
        let mut leaves = Vec::with_capacity(samples * tau);
        let mut weights = Vec::with_capacity(samples);
        for k in 0..samples {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut branch = Branch::root();
            for _ in 0..steps {
                // Low bit of the next generator word; explicit so the sign
                // stream is pinned to the generator's documented output.
                let sign = if rng.next_u32() & 1 == 1 { Sign::Plus } else { Sign::Minus };
                branch.push(sign);
            }
            let node = evolve(eps, branch.signs())?;
            leaves.extend_from_slice(node.masses());
            weights.push(branch.weight());
        }
        Ok(Self {
            lattice: Arc::clone(eps.lattice()),
            steps,
            source: EnsembleSource::Sampled { samples, seed },
            leaves,
            weights: Some(weights),
        })
    }

    /// Number of branches held.
    pub fn len(&self) -> usize {
        if self.lattice.len() == 0 {
            0
        } else {
            self.leaves.len() / self.lattice.len()
        }
    }

    /// True when no branches are held (zero samples requested).
    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Depth of every branch.
    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// How the ensemble was produced.
    pub fn source(&self) -> EnsembleSource {
        self.source
    }

    /// The divisor lattice shared by all branches.
    pub fn lattice(&self) -> &Arc<DivisorLattice> {
        &self.lattice
    }

    /// Mass vector of branch `row`.
    pub fn vector(&self, row: usize) -> &[S] {
        let tau = self.lattice.len();
        &self.leaves[row * tau..(row + 1) * tau]
    }

    /// Branch weight of `row` (for exhaustive ensembles, the row index).
    pub fn weight(&self, row: usize) -> u64 {
        match &self.weights {
            Some(w) => w[row],
            None => row as u64,
        }
    }

    /// Sign sequence of `row`.
    pub fn branch(&self, row: usize) -> Branch {
        Branch::from_weight(self.weight(row), self.steps)
    }

    /// Mean mass at a lattice position over all branches — the step-`n`
    /// average that converges to the limiting distribution.
    pub fn mean_mass(&self, pos: usize) -> S {
        let count = self.len();
        let mut sum = S::zero();
        for row in 0..count {
            sum += self.vector(row)[pos].clone();
        }
        sum / S::from_integer(count as u64)
    }

    /// All per-divisor means.
    pub fn mean_masses(&self) -> Vec<S> {
        (0..self.lattice.len()).map(|pos| self.mean_mass(pos)).collect()
    }

    /// Standard error of [`PolarEnsemble::mean_mass`] for a sampled ensemble
    /// (sample standard deviation over `sqrt(count)`), in `f64`.
    pub fn mean_mass_standard_error(&self, pos: usize) -> f64 {
        let count = self.len();
        if count < 2 {
            return f64::INFINITY;
        }
        let mean = self.mean_mass(pos).to_f64();
        let ss: f64 = (0..count)
            .map(|row| {
                let x = self.vector(row)[pos].to_f64();
                (x - mean) * (x - mean)
            })
            .sum();
        (ss / (count as f64 - 1.0)).sqrt() / (count as f64).sqrt()
    }

    /// Count branches against the `delta` thresholds at one position.
    pub fn proportions(&self, pos: usize, delta: &S) -> ProportionSummary {
        let near_one_bound = S::one() - delta.clone();
        let mut summary = ProportionSummary { near_one: 0, near_zero: 0, intermediate: 0 };
        for row in 0..self.len() {
            let mass = &self.vector(row)[pos];
            if *mass > near_one_bound {
                summary.near_one += 1;
            } else if *mass < *delta {
                summary.near_zero += 1;
            } else {
                summary.intermediate += 1;
            }
        }
        summary
    }

    /// Capacity of the requested order for every branch, in branch order.
    pub fn capacities(&self, alpha: Alpha, base: LogBase) -> Vec<f64> {
        (0..self.len())
            .map(|row| capacity_from_masses(&self.lattice, self.vector(row), alpha, base))
            .collect()
    }
}

/// Masses of the four quadrants cut by thresholds `(a, b)` on a pair of
/// prime-exponent coordinates: `both` has coordinate `i >= a` and `j >= b`,
/// `first_only` has `i >= a` and `j < b`, `second_only` the mirror, and
/// `neither` the rest. The four always sum to the total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateQuad<S> {
    /// Mass with `t_i >= a` and `t_j >= b`.
    pub both: S,
    /// Mass with `t_i >= a` and `t_j < b`.
    pub first_only: S,
    /// Mass with `t_i < a` and `t_j >= b`.
    pub second_only: S,
    /// Mass with `t_i < a` and `t_j < b`.
    pub neither: S,
}

impl<S: Mass> AggregateQuad<S> {
    /// Sum of the four quadrants.
    pub fn total(&self) -> S {
        self.both.clone()
            + self.first_only.clone()
            + self.second_only.clone()
            + self.neither.clone()
    }

    /// Exact one-step update of the quadrant masses under a polarization
    /// step: quadratic recursions in the four current values.
    pub fn one_step(&self, sign: Sign) -> Self {
        let two = S::from_integer(2);
        let t = self.both.clone();
        let l = self.first_only.clone();
        let r = self.second_only.clone();
        let b = self.neither.clone();
        match sign {
            Sign::Minus => Self {
                both: t.clone() * t.clone(),
                first_only: l.clone() * (l.clone() + two.clone() * t.clone()),
                second_only: r.clone() * (r.clone() + two.clone() * t.clone()),
                neither: b.clone() * (two - b) + l * r * S::from_integer(2),
            },
            Sign::Plus => Self {
                both: t.clone() * (two.clone() - t.clone()) + l.clone() * r.clone() * S::from_integer(2),
                first_only: l.clone() * (l.clone() + two.clone() * b.clone()),
                second_only: r.clone() * (r + two * b.clone()),
                neither: b.clone() * b,
            },
        }
    }

    /// Limits of the quadrant masses along almost every branch: the smaller
    /// of the two single-coordinate quadrants drains into the corners.
    pub fn limit(&self) -> Self {
        let shared = min_mass(self.first_only.clone(), self.second_only.clone());
        Self {
            both: self.both.clone() + shared.clone(),
            first_only: positive_part(self.first_only.clone() - self.second_only.clone()),
            second_only: positive_part(self.second_only.clone() - self.first_only.clone()),
            neither: self.neither.clone() + shared,
        }
    }
}

/// Quadrant masses of `eps` for prime slots `i < j` (1-based into
/// `factorization().primes()`) at thresholds `(a, b)`.
pub fn aggregates<S: Mass>(
    eps: &MaecDistribution<S>,
    i: usize,
    j: usize,
    a: u32,
    b: u32,
) -> Result<AggregateQuad<S>> {
    let m = eps.lattice().factorization().slots();
    if i < 1 || i >= j || j > m {
        return Err(Error::PrimeIndices { i, j, m });
    }
    let mut quad = AggregateQuad {
        both: S::zero(),
        first_only: S::zero(),
        second_only: S::zero(),
        neither: S::zero(),
    };
    for (pos, mass) in eps.masses().iter().enumerate() {
        let tuple = eps.lattice().exponents(pos);
        let hi_i = tuple[i - 1] >= a;
        let hi_j = tuple[j - 1] >= b;
        let slot = match (hi_i, hi_j) {
            (true, true) => &mut quad.both,
            (true, false) => &mut quad.first_only,
            (false, true) => &mut quad.second_only,
            (false, false) => &mut quad.neither,
        };
        *slot += mass.clone();
    }
    Ok(quad)
}

/// Split of a prime-power channel's mass at exponent threshold `a`: `tail` is
/// the mass revealing at least `p^a`, `head` the rest. Under a polarization
/// step the pair evolves like a two-level erasure probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureTailSplit<S> {
    /// Mass on exponents `>= a`.
    pub tail: S,
    /// Mass on exponents `< a`.
    pub head: S,
}

impl<S: Mass> ErasureTailSplit<S> {
    /// One-step update: the tail squares on the worse branch and reflects on
    /// the better branch.
    pub fn one_step(&self, sign: Sign) -> Self {
        let two = S::from_integer(2);
        let t = self.tail.clone();
        let h = self.head.clone();
        match sign {
            Sign::Minus => Self {
                tail: t.clone() * t.clone(),
                head: h.clone() * (h + two * t),
            },
            Sign::Plus => Self {
                tail: t.clone() * (t + two * h.clone()),
                head: h.clone() * h,
            },
        }
    }
}

/// Tail/head split of a prime-power channel at exponent threshold `a`.
pub fn prime_tail<S: Mass>(eps: &MaecDistribution<S>, a: u32) -> Result<ErasureTailSplit<S>> {
    let f = eps.lattice().factorization();
    if f.distinct_prime_count() != 1 {
        return Err(Error::NotPrimePower {
            q: eps.q(),
            distinct_primes: f.distinct_prime_count(),
        });
    }
    let mut split = ErasureTailSplit { tail: S::zero(), head: S::zero() };
    for (pos, mass) in eps.masses().iter().enumerate() {
        let exp = eps.lattice().exponents(pos)[0];
        if exp >= a {
            split.tail += mass.clone();
        } else {
            split.head += mass.clone();
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, ExactMass};

    fn uniform6() -> MaecDistribution<ExactMass> {
        MaecDistribution::uniform(DivisorLattice::shared(6).unwrap())
    }

    #[test]
    fn branch_weights_read_as_binary() {
        let b: Branch = "+-+".parse().unwrap();
        assert_eq!(b.weight(), 5);
        assert_eq!(Branch::from_weight(5, 3), b);
        assert_eq!(Branch::root().weight(), 0);
    }

    #[test]
    fn uniform_transforms_hit_the_closed_counts() {
        let eps = uniform6();
        let worse = minus_transform(&eps, &eps).unwrap();
        assert_eq!(
            worse.masses(),
            &[ratio(9, 16), ratio(3, 16), ratio(3, 16), ratio(1, 16)]
        );
        let better = plus_transform(&eps, &eps).unwrap();
        assert_eq!(
            better.masses(),
            &[ratio(1, 16), ratio(3, 16), ratio(3, 16), ratio(9, 16)]
        );
    }

    #[test]
    fn binary_worse_branch_erases_harder() {
        let eps = MaecDistribution::from_divisor_masses(
            2,
            &[(1, ratio(1, 2)), (2, ratio(1, 2))],
        )
        .unwrap();
        let worse = minus_transform(&eps, &eps).unwrap();
        // Erasure unless both copies reveal: 1 - (1/2)^2.
        assert_eq!(worse.masses(), &[ratio(3, 4), ratio(1, 4)]);
    }

    #[test]
    fn leaves_arrive_in_weight_order() {
        let eps = uniform6();
        let mut seen = Vec::new();
        enumerate(&eps, 3, |branch, _| {
            if branch.len() == 3 {
                seen.push(branch.weight());
            }
        })
        .unwrap();
        assert_eq!(seen, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn quadrants_partition_all_mass() {
        let eps = uniform6();
        let quad = aggregates(&eps, 1, 2, 1, 1).unwrap();
        assert_eq!(quad.total(), ratio(1, 1));
        assert_eq!(quad.both, ratio(1, 4)); // only d = 6
    }
}
