//! The limiting distribution of deep polarization.
//!
//! As the polarization tree deepens, the per-divisor branch means converge.
//! For prime-power alphabets the mean vector never moves at all, so the limit
//! is the starting vector. For general alphabets the limit is computed by a
//! mass sweep over prime-exponent thresholds: repeatedly pick, via pairwise
//! quadrant comparisons, which exponent threshold to advance, and record the
//! mass the advance releases. The recorded tuples form a chain in the divisor
//! lattice, so at most one more divisor than the total prime multiplicity of
//! `q` ever receives mass. The sweep relies on exact comparisons and is
//! therefore restricted to exact mass arithmetic.

use std::sync::Arc;

use crate::channel::MaecDistribution;
use crate::error::{Error, Result};
use crate::polar::{aggregates, AggregateQuad};
use crate::scalar::{is_negative, min_mass, positive_part, Mass};

/// Which closed form or procedure produced an [`AsymptoticDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticMethod {
    /// Prime-power alphabet: the branch means are conserved, the limit is the
    /// starting vector.
    PrimePower,
    /// General alphabet: the threshold-advancing mass sweep.
    ChainSweep,
    /// Two distinct primes, exponent one each: direct min/difference formulas.
    SemiprimeClosedForm,
}

impl AsymptoticMethod {
    /// Stable identifier used in rendered output.
    pub fn tag(self) -> &'static str {
        match self {
            AsymptoticMethod::PrimePower => "prime-power",
            AsymptoticMethod::ChainSweep => "chain-sweep",
            AsymptoticMethod::SemiprimeClosedForm => "semiprime-closed-form",
        }
    }
}

/// The limiting distribution of the per-divisor branch means, with the chain
/// of exponent tuples that carry positive mass.
#[derive(Debug, Clone)]
pub struct AsymptoticDistribution<S> {
    distribution: MaecDistribution<S>,
    support_chain: Vec<Vec<u32>>,
    method: AsymptoticMethod,
}

impl<S: Mass> AsymptoticDistribution<S> {
    /// The limit as a channel-shaped probability vector over the divisors.
    pub fn distribution(&self) -> &MaecDistribution<S> {
        &self.distribution
    }

    /// Masses aligned with the divisor lattice of the input.
    pub fn masses(&self) -> &[S] {
        self.distribution.masses()
    }

    /// Input alphabet size.
    pub fn q(&self) -> u64 {
        self.distribution.q()
    }

    /// Exponent tuples of the positive-mass divisors, in sweep order (one
    /// column per distinct prime of `q`).
    pub fn support_chain(&self) -> &[Vec<u32>] {
        &self.support_chain
    }

    /// Divisors carrying positive limiting mass, ascending.
    pub fn support_divisors(&self) -> Vec<u64> {
        let lattice = self.distribution.lattice();
        (0..lattice.len())
            .filter(|&pos| *self.distribution.mass(pos) > S::zero())
            .map(|pos| lattice.divisor(pos))
            .collect()
    }

    /// How the limit was computed.
    pub fn method(&self) -> AsymptoticMethod {
        self.method
    }

    /// True when the support tuples are pairwise comparable componentwise —
    /// the chain structure the sweep guarantees.
    pub fn chain_is_monotone(&self) -> bool {
        self.support_chain.windows(2).all(|pair| {
            pair[0]
                .iter()
                .zip(pair[1].iter())
                .all(|(lo, hi)| lo <= hi)
        })
    }
}

/// One pairwise quadrant comparison inside a sweep iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepComparison<S> {
    /// First prime slot compared (1-based).
    pub first_slot: usize,
    /// Second prime slot compared (1-based).
    pub second_slot: usize,
    /// Mass exceeding the first threshold only.
    pub first_only: S,
    /// Mass exceeding the second threshold only.
    pub second_only: S,
    /// True when the second slot became the increment candidate (the
    /// first-only mass did not exceed the second-only mass).
    pub candidate_is_second: bool,
}

/// One recorded iteration of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep<S> {
    /// Iteration counter, from 0.
    pub index: usize,
    /// Threshold tuple at recording time (before the increment), one column
    /// per slot of the sweep lattice.
    pub tuple: Vec<u32>,
    /// Divisor the tuple names.
    pub divisor: u64,
    /// Accumulated mass entering the iteration.
    pub running_total_before: S,
    /// Mass assigned to `divisor` this iteration.
    pub assigned: S,
    /// Slot whose threshold was advanced afterwards (1-based).
    pub incremented_slot: usize,
    /// The pairwise comparisons that selected the slot.
    pub comparisons: Vec<SweepComparison<S>>,
}

/// Full record of a sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace<S> {
    /// Alphabet size swept.
    pub q: u64,
    /// Whether a zero-exponent slot was appended to give the sweep a second
    /// prime column.
    pub padded: bool,
    /// The iterations in order.
    pub steps: Vec<SweepStep<S>>,
}

impl<S: Mass> SweepTrace<S> {
    /// Render the trace as a JSON value; masses keep their exact text form.
    pub fn to_json(&self) -> serde_json::Value {
        let steps: Vec<serde_json::Value> = self
            .steps
            .iter()
            .map(|step| {
                let comparisons: Vec<serde_json::Value> = step
                    .comparisons
                    .iter()
                    .map(|c| {
                        serde_json::json!({
                            "first_slot": c.first_slot,
                            "second_slot": c.second_slot,
                            "first_only": c.first_only.to_string(),
                            "second_only": c.second_only.to_string(),
                            "candidate_is_second": c.candidate_is_second,
                        })
                    })
                    .collect();
                serde_json::json!({
                    "step": step.index,
                    "tuple": step.tuple,
                    "divisor": step.divisor,
                    "running_total_before": step.running_total_before.to_string(),
                    "assigned": step.assigned.to_string(),
                    "incremented_slot": step.incremented_slot,
                    "comparisons": comparisons,
                })
            })
            .collect();
        serde_json::json!({
            "q": self.q,
            "padded": self.padded,
            "steps": steps,
        })
    }
}

/// Limiting distribution of the branch means of `eps`, dispatching on the
/// alphabet: prime powers return the conserved vector, everything else runs
/// the mass sweep. Exact arithmetic only.
pub fn asymptotic_masses<S: Mass>(
    eps: &MaecDistribution<S>,
) -> Result<AsymptoticDistribution<S>> {
    if !S::IS_EXACT {
        return Err(Error::ExactRequired { operation: "limiting distribution" });
    }
    if eps.lattice().factorization().is_prime_power() {
        Ok(prime_power_limit(eps))
    } else {
        chain_sweep(eps)
    }
}

/// The conserved limit on a prime-power alphabet (the branch means of every
/// divisor never move, so the limit equals the start).
pub fn prime_power_limit<S: Mass>(eps: &MaecDistribution<S>) -> AsymptoticDistribution<S> {
    let lattice = eps.lattice();
    let support_chain = (0..lattice.len())
        .filter(|&pos| *eps.mass(pos) > S::zero())
        .map(|pos| lattice.exponents(pos).to_vec())
        .collect();
    AsymptoticDistribution {
        distribution: eps.clone(),
        support_chain,
        method: AsymptoticMethod::PrimePower,
    }
}

/// Run the mass sweep and keep only the resulting distribution.
pub fn chain_sweep<S: Mass>(eps: &MaecDistribution<S>) -> Result<AsymptoticDistribution<S>> {
    chain_sweep_with_trace(eps).map(|(dist, _)| dist)
}

/// Run the mass sweep, also returning the full iteration record.
///
/// Iterations advance one exponent threshold each; the released mass lands on
/// the divisor named by the thresholds at recording time. The run must finish
/// within two more iterations than the total prime multiplicity of `q`, or it
/// is reported as stalled. Exact arithmetic only — the slot selection
/// compares masses for exact order.
pub fn chain_sweep_with_trace<S: Mass>(
    eps: &MaecDistribution<S>,
) -> Result<(AsymptoticDistribution<S>, SweepTrace<S>)> {
    if !S::IS_EXACT {
        return Err(Error::ExactRequired { operation: "limiting-distribution sweep" });
    }
    let lattice = eps.lattice();
    let needs_padding = lattice.factorization().slots() < 2;
    let swept = if needs_padding { eps.with_padded_lattice()? } else { eps.clone() };
    let sweep_fact = swept.lattice().factorization().clone();
    let m = sweep_fact.slots();
    let real_slots = lattice.factorization().slots();
    let cap = lattice.factorization().prime_factor_count() as usize + 2;

    let mut accumulated = vec![S::zero(); lattice.len()];
    let mut xi = S::zero();
    let mut thresholds = vec![0u32; m];
    let mut steps: Vec<SweepStep<S>> = Vec::new();

    while xi < S::one() {
        if steps.len() >= cap {
            return Err(Error::SweepStalled {
                iterations: steps.len(),
                running_total: xi.to_string(),
            });
        }
        let mut i = 1usize;
        let mut j = 2usize;
        let mut k = 0usize;
        let mut l = 0usize;
        let mut comparisons = Vec::new();
        while j <= m {
            let quad = aggregates(
                &swept,
                i,
                j,
                thresholds[i - 1] + 1,
                thresholds[j - 1] + 1,
            )?;
            let candidate_is_second = quad.first_only <= quad.second_only;
            comparisons.push(SweepComparison {
                first_slot: i,
                second_slot: j,
                first_only: quad.first_only,
                second_only: quad.second_only,
                candidate_is_second,
            });
            if candidate_is_second {
                k = j;
                l = i;
                i += 1;
                j += 1;
            } else {
                k = i;
                l = i;
                j += 1;
            }
        }
        let closing = aggregates(
            &swept,
            l,
            m,
            thresholds[l - 1] + 1,
            thresholds[m - 1] + 1,
        )?;
        let value = closing.neither + min_mass(closing.first_only, closing.second_only);
        let assigned = value - xi.clone();
        if is_negative(&assigned) {
            return Err(Error::ChannelShape(format!(
                "sweep released negative mass {assigned} at thresholds {thresholds:?}"
            )));
        }

        let divisor = divisor_of_tuple(sweep_fact.primes(), &thresholds);
        match lattice.position_of(divisor) {
            Some(pos) => accumulated[pos] += assigned.clone(),
            None if assigned == S::zero() => {}
            None => {
                return Err(Error::ChannelShape(format!(
                    "sweep released mass onto {divisor}, which does not divide {}",
                    lattice.q()
                )));
            }
        }

        steps.push(SweepStep {
            index: steps.len(),
            tuple: thresholds.clone(),
            divisor,
            running_total_before: xi.clone(),
            assigned: assigned.clone(),
            incremented_slot: k,
            comparisons,
        });
        xi += assigned;
        thresholds[k - 1] += 1;
    }

    if xi != S::one() {
        return Err(Error::ChannelShape(format!(
            "sweep halted with total mass {xi} instead of 1"
        )));
    }

    let support_chain = steps
        .iter()
        .filter(|step| step.assigned > S::zero())
        .map(|step| step.tuple[..real_slots].to_vec())
        .collect();
    let distribution = MaecDistribution::new(Arc::clone(lattice), accumulated)?;
    let trace = SweepTrace { q: lattice.q(), padded: needs_padding, steps };
    Ok((
        AsymptoticDistribution {
            distribution,
            support_chain,
            method: AsymptoticMethod::ChainSweep,
        },
        trace,
    ))
}

fn divisor_of_tuple(primes: &[u64], tuple: &[u32]) -> u64 {
    primes
        .iter()
        .zip(tuple.iter())
        .fold(1u64, |d, (p, e)| d.saturating_mul(p.saturating_pow(*e)))
}

/// Quadrant masses of `eps` in the deep-polarization limit: the starting
/// quadrants with the smaller single-coordinate quadrant drained into the
/// corners.
pub fn limit_aggregates<S: Mass>(
    eps: &MaecDistribution<S>,
    i: usize,
    j: usize,
    a: u32,
    b: u32,
) -> Result<AggregateQuad<S>> {
    Ok(aggregates(eps, i, j, a, b)?.limit())
}

/// Closed-form limit when `q` is a product of two distinct primes `p * r`:
/// the full-reveal mass gains the smaller of the two partial-reveal masses,
/// the larger partial keeps the difference, the smaller empties, and the
/// no-reveal mass gains the same shared amount.
pub fn semiprime_limit<S: Mass>(eps: &MaecDistribution<S>) -> Result<AsymptoticDistribution<S>> {
    let f = eps.lattice().factorization();
    if f.slots() != 2 || f.exponents() != [1, 1] {
        return Err(Error::NotSemiprime { q: eps.q() });
    }
    // Lattice order for p < r: 1, p, r, pr.
    let e1 = eps.mass(0).clone();
    let ep = eps.mass(1).clone();
    let er = eps.mass(2).clone();
    let eq = eps.mass(3).clone();
    let shared = min_mass(ep.clone(), er.clone());
    let masses = vec![
        e1 + shared.clone(),
        positive_part(ep.clone() - er.clone()),
        positive_part(er - ep),
        eq + shared,
    ];
    let lattice = eps.lattice();
    let support_chain = (0..lattice.len())
        .filter(|&pos| masses[pos] > S::zero())
        .map(|pos| lattice.exponents(pos).to_vec())
        .collect();
    Ok(AsymptoticDistribution {
        distribution: MaecDistribution::new(Arc::clone(lattice), masses)?,
        support_chain,
        method: AsymptoticMethod::SemiprimeClosedForm,
    })
}
