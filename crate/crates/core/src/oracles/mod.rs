//! Ground truth: exhaustive optima, exact transport distances, sensitivity
//! estimators and random-walk diagnostics.

pub mod diagnostics;
pub mod emd;
pub mod sensitivity;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::csp::{Assignment, Instance, Label};
use crate::error::{Error, Result};

pub use diagnostics::{powering_diagnostics, DiagnosticsReport};
pub use emd::{emd_exact, emd_upper_product, TransportPlan, EMD_SUPPORT_CAP};
pub use sensitivity::{
    algorithm_by_spec, compare_runs, default_swap, estimate_sensitivity, neighbor, run_samples, swap_paths, Algorithm,
    ConstantAlgorithm, EdgeReport, ExactSolver, NeighborPolicy, NoisySolver, ParityFlipAlgorithm,
    RandomizedGreedy, SensitivityReport, SwapPath,
};

/// Default cap on the assignment space for exhaustive search.
pub const BRUTE_FORCE_CAP: u128 = 20_000_000;

struct Space {
    labels: Vec<Vec<Label>>,
    total: u128,
    /// Constraint masses scaled to integers over a common denominator.
    masses: Vec<u128>,
}

impl Space {
    fn new(inst: &Instance, cap: u128) -> Result<Space> {
        if inst.constraints.is_empty() || inst.total_mass().is_zero() {
            return Err(Error::EmptyInstance);
        }
        let total = (0..inst.num_vars()).fold(1u128, |acc, v| acc.saturating_mul(inst.alphabet_of(v).size()));
        if total > cap {
            return Err(Error::TooLarge(format!("{total} assignments exceed the brute-force cap {cap}")));
        }
        let labels = (0..inst.num_vars())
            .map(|v| inst.alphabet_of(v).labels(cap))
            .collect::<Result<Vec<_>>>()?;
        let ms: Vec<BigRational> = inst.constraints.iter().map(|c| c.mass()).collect();
        let lcm = ms.iter().fold(BigInt::one(), |acc, m| acc.lcm(m.denom()));
        let masses = ms
            .iter()
            .map(|m| (m.numer() * (&lcm / m.denom())).to_u128())
            .collect::<Option<Vec<u128>>>()
            .ok_or_else(|| Error::TooLarge("constraint weights overflow 128-bit scaling".into()))?;
        if masses.iter().try_fold(0u128, |a, &b| a.checked_add(b)).is_none() {
            return Err(Error::TooLarge("constraint weights overflow 128-bit scaling".into()));
        }
        Ok(Space { labels, total, masses })
    }

    fn decode(&self, mut idx: u128, out: &mut Assignment) {
        for v in (0..self.labels.len()).rev() {
            let k = self.labels[v].len() as u128;
            out[v] = self.labels[v][(idx % k) as usize].clone();
            idx /= k;
        }
    }

    /// Advance in lexicographic order (last variable fastest).
    fn next(&self, idx: &mut [usize], out: &mut Assignment) {
        for v in (0..idx.len()).rev() {
            idx[v] += 1;
            if idx[v] < self.labels[v].len() {
                out[v] = self.labels[v][idx[v]].clone();
                return;
            }
            idx[v] = 0;
            out[v] = self.labels[v][0].clone();
        }
    }

    fn satisfied_mass(&self, inst: &Instance, sigma: &[Label]) -> u128 {
        inst.constraints
            .iter()
            .zip(&self.masses)
            .filter(|(c, _)| c.satisfied(sigma))
            .map(|(_, m)| *m)
            .sum()
    }

    /// Calls `f(index, satisfied mass, assignment)` over a contiguous range.
    fn scan<T: Send>(
        &self,
        inst: &Instance,
        init: impl Fn() -> T + Sync,
        f: impl Fn(&mut T, u128, u128, &Assignment) + Sync,
        merge: impl Fn(T, T) -> T + Sync + Send,
    ) -> T {
        let chunks = 64u128.min(self.total).max(1);
        let size = self.total.div_ceil(chunks);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * size;
                let hi = ((c + 1) * size).min(self.total);
                let mut acc = init();
                if lo >= hi {
                    return acc;
                }
                let mut sigma: Assignment = self.labels.iter().map(|l| l[0].clone()).collect();
                self.decode(lo, &mut sigma);
                let mut idx: Vec<usize> = sigma
                    .iter()
                    .zip(&self.labels)
                    .map(|(s, ls)| ls.iter().position(|l| l == s).expect("decoded label"))
                    .collect();
                for i in lo..hi {
                    let m = self.satisfied_mass(inst, &sigma);
                    f(&mut acc, i, m, &sigma);
                    if i + 1 < hi {
                        self.next(&mut idx, &mut sigma);
                    }
                }
                acc
            })
            .reduce(&init, merge)
    }
}

/// Exact optimum with the lexicographically first optimal assignment.
pub fn brute_force_opt(inst: &Instance) -> Result<(BigRational, Assignment)> {
    brute_force_opt_with_cap(inst, BRUTE_FORCE_CAP)
}

pub fn brute_force_opt_with_cap(inst: &Instance, cap: u128) -> Result<(BigRational, Assignment)> {
    let space = Space::new(inst, cap)?;
    let (best, idx) = space.scan(
        inst,
        || (0u128, u128::MAX),
        |acc, i, m, _| {
            if acc.1 == u128::MAX || m > acc.0 {
                *acc = (m, i);
            }
        },
        |a, b| {
            if a.1 == u128::MAX {
                b
            } else if b.1 == u128::MAX || a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                a
            } else {
                b
            }
        },
    );
    let mut sigma: Assignment = space.labels.iter().map(|l| l[0].clone()).collect();
    space.decode(idx, &mut sigma);
    let total: u128 = space.masses.iter().sum();
    let value = BigRational::new(BigInt::from(best), BigInt::from(total));
    Ok((value, sigma))
}

/// Every assignment attaining the optimum, in lexicographic order.
pub fn optimal_assignments(inst: &Instance, cap: u128) -> Result<(BigRational, Vec<Assignment>)> {
    let space = Space::new(inst, cap)?;
    let (best, mut all) = space.scan(
        inst,
        || (0u128, Vec::new()),
        |acc, i, m, s| {
            if m > acc.0 || acc.1.is_empty() {
                *acc = (m, vec![(i, s.clone())]);
            } else if m == acc.0 {
                acc.1.push((i, s.clone()));
            }
        },
        |a, b| {
            if a.1.is_empty() || b.0 > a.0 {
                b
            } else if b.1.is_empty() || a.0 > b.0 {
                a
            } else {
                let mut v = a.1;
                v.extend(b.1);
                (a.0, v)
            }
        },
    );
    all.sort_by_key(|x| x.0);
    let total: u128 = space.masses.iter().sum();
    Ok((BigRational::new(BigInt::from(best), BigInt::from(total)), all.into_iter().map(|x| x.1).collect()))
}

/// Satisfying assignments (empty when the optimum is below one).
pub fn satisfying_assignments(inst: &Instance, cap: u128) -> Result<Vec<Assignment>> {
    let (v, all) = optimal_assignments(inst, cap)?;
    Ok(if v.is_one() { all } else { Vec::new() })
}
