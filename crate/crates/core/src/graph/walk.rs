use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng as _;
use rayon::prelude::*;

use super::Graph;
use crate::error::{Error, Result};
use crate::util::{rat, Rng};

/// Default cap on the number of enumerated walks.
pub const WALK_ENUM_CAP: u128 = 10_000_000;
/// Kernel rows are dense; above this many vertices they are refused.
pub const KERNEL_CAP: usize = 4096;

/// A walk as a start vertex plus (edge id, vertex reached) per move.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Walk {
    pub start: usize,
    pub steps: Vec<(usize, usize)>,
}

impl Walk {
    pub fn end(&self) -> usize {
        self.steps.last().map_or(self.start, |s| s.1)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Directed traversals (from, to, edge id) in walk order.
    pub fn traversals(&self) -> Vec<(usize, usize, usize)> {
        let mut prev = self.start;
        self.steps
            .iter()
            .map(|&(e, w)| {
                let t = (prev, w, e);
                prev = w;
                t
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AsrwOutcome {
    Kept(Walk),
    /// The walk made more than B moves; `moves` is its full length.
    Discarded { moves: usize },
}

/// Per-row stopping distributions of a BSRW halted within t steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkKernel {
    pub t: usize,
    pub rows: Vec<Vec<BigRational>>,
}

impl WalkKernel {
    pub fn row(&self, v: usize) -> &[BigRational] {
        &self.rows[v]
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }
}

/// w_l = (1/t)(1 - 1/t)^(l-1) for l = 1..t.
pub fn bsrw_weights(t: usize) -> Vec<BigRational> {
    let t = t as i64;
    let q = rat(t - 1, t);
    let mut w = rat(1, t);
    let mut out = Vec::with_capacity(t as usize);
    for _ in 0..t {
        out.push(w.clone());
        w *= &q;
    }
    out
}

pub fn bsrw_kernel(g: &Graph, t: usize) -> Result<WalkKernel> {
    if t == 0 {
        return Err(Error::Invalid("walk horizon must be at least 1".into()));
    }
    if g.n() > KERNEL_CAP {
        return Err(Error::TooLarge(format!("kernel on {} vertices", g.n())));
    }
    let d = match g.regular_degree() {
        Some(d) if d > 0 => d,
        _ => return Err(Error::NotRegular),
    };
    let weights = bsrw_weights(t);
    let total: BigRational = weights.iter().sum();
    let inv_d = rat(1, d as i64);
    let rows = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let mut x = vec![BigRational::zero(); g.n()];
            x[v] = BigRational::one();
            let mut acc = vec![BigRational::zero(); g.n()];
            for w in &weights {
                let mut y = vec![BigRational::zero(); g.n()];
                for (u, xu) in x.iter().enumerate() {
                    if xu.is_zero() {
                        continue;
                    }
                    let share = xu * &inv_d;
                    for &(to, _) in g.incidences(u) {
                        y[to] += &share;
                    }
                }
                for (a, yi) in acc.iter_mut().zip(&y) {
                    *a += yi * w;
                }
                x = y;
            }
            acc.into_iter().map(|a| a / &total).collect()
        })
        .collect();
    Ok(WalkKernel { t, rows })
}

/// Untruncated ASRW: before each move halt with probability 1/t.
pub fn sample_asrw_full(g: &Graph, t: usize, start: usize, rng: &mut Rng) -> Walk {
    let mut walk = Walk { start, steps: Vec::new() };
    let mut at = start;
    loop {
        if t <= 1 || rng.gen_range(0..t) == 0 {
            return walk;
        }
        let inc = g.incidences(at);
        if inc.is_empty() {
            return walk;
        }
        let (to, e) = inc[rng.gen_range(0..inc.len())];
        walk.steps.push((e, to));
        at = to;
    }
}

/// ASRW discarded when it makes more than `max_len` moves.
pub fn sample_asrw(g: &Graph, t: usize, max_len: usize, start: usize, rng: &mut Rng) -> AsrwOutcome {
    let w = sample_asrw_full(g, t, start, rng);
    if w.len() > max_len {
        AsrwOutcome::Discarded { moves: w.len() }
    } else {
        AsrwOutcome::Kept(w)
    }
}

/// Every kept ASRW from `start` with its exact probability, in
/// lexicographic order of incidence choices.
pub fn enumerate_walks(
    g: &Graph,
    start: usize,
    t: usize,
    max_len: usize,
    cap: u128,
) -> Result<Vec<(Walk, BigRational)>> {
    let d = match g.regular_degree() {
        Some(d) if d > 0 => d,
        _ => return Err(Error::NotRegular),
    };
    if t == 0 {
        return Err(Error::Invalid("walk horizon must be at least 1".into()));
    }
    let mut count: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..=max_len {
        count = count.saturating_add(pow);
        pow = pow.saturating_mul(d as u128);
    }
    if count > cap {
        return Err(Error::TooLarge(format!("{count} walks exceed the enumeration cap; use sampled mode")));
    }
    let stop = rat(1, t as i64);
    let step = BigRational::new(BigInt::from(t as i64 - 1), BigInt::from((t * d) as i64));
    let mut out = Vec::with_capacity(count as usize);
    let mut walk = Walk { start, steps: Vec::new() };
    fn rec(
        g: &Graph,
        walk: &mut Walk,
        p: BigRational,
        stop: &BigRational,
        step: &BigRational,
        left: usize,
        out: &mut Vec<(Walk, BigRational)>,
    ) {
        out.push((walk.clone(), &p * stop));
        if left == 0 || step.is_zero() {
            return;
        }
        let at = walk.end();
        for &(to, e) in g.incidences(at) {
            walk.steps.push((e, to));
            rec(g, walk, &p * step, stop, step, left - 1, out);
            walk.steps.pop();
        }
    }
    rec(g, &mut walk, BigRational::one(), &stop, &step, max_len, &mut out);
    Ok(out)
}
