use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::csp::{Alphabet, Assignment, Constraint, Instance, Label, Relation, WalkCheck};
use crate::error::{Error, Result};
use crate::graph::{sample_asrw, AsrwOutcome, Graph};
use crate::util::{bits_for, mix, rng};

/// Cap on (vertex, visited-set) states explored per start in exact mode.
pub const POWER_STATE_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerMode {
    /// Every kept walk, weighted by its exact probability.
    Exact,
    /// `count` kept walks drawn with the given seed, unit weight each.
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerInfo {
    pub t: usize,
    /// Maximum number of moves of a kept walk.
    pub b: usize,
    pub d: usize,
    /// (dt)^B as a decimal string.
    pub degree_d: String,
    /// Common denominator n (dt)^B of exact weights, decimal.
    pub denominator: String,
    pub constraints: usize,
    pub sampled: bool,
}

/// B = 10 t ceil(log2 |Sigma|), with |Sigma| at least 2.
pub fn walk_bound(t: usize, sigma: u128) -> usize {
    10 * t * bits_for(sigma.max(2)) as usize
}

fn ball_alphabet(inst: &Instance, g: &Graph, v: usize, t: usize) -> Alphabet {
    let ball = g.ball(v, t);
    let bases = ball.iter().map(|&w| inst.alphabet_of(w).clone()).collect();
    Alphabet::Ball { center: v, radius: t, ball, bases }
}

fn check_of(inst: &Instance, (a, b, e): (usize, usize, usize)) -> WalkCheck {
    let c = &inst.constraints[e];
    WalkCheck { a, b, edge: e, relation: c.relation.clone(), reversed: (a, b) != (c.vars[0], c.vars[1]) }
}

/// Graph powering. Variables keep their ids; vertex v gets the alphabet of
/// views on its radius-t ball. Input weights and multiplicities are ignored:
/// every constraint is one edge of the regular base graph.
pub fn power(inst: &Instance, t: usize, mode: PowerMode) -> Result<(Instance, PowerInfo)> {
    if t == 0 {
        return Err(Error::Invalid("powering horizon must be at least 1".into()));
    }
    let g = Graph::of_instance(inst)?;
    let d = match g.regular_degree() {
        Some(d) if d > 0 => d,
        _ => return Err(Error::NotRegular),
    };
    if !g.is_connected() {
        return Err(Error::NotConnected);
    }
    let n = g.n();
    let b = walk_bound(t, inst.max_alphabet());
    let dist: Vec<Vec<usize>> = (0..n).into_par_iter().map(|v| g.distances(v)).collect();
    let td = BigInt::from(t * d);
    let degree_d: BigInt = Pow::pow(&td, b);
    let denom = &degree_d * BigInt::from(n) * BigInt::from(t);
    let mut out = Instance {
        alphabets: (0..n).map(|v| ball_alphabet(inst, &g, v, t)).collect(),
        var_alphabet: (0..n).collect(),
        constraints: Vec::new(),
        marked: inst.marked.clone(),
    };
    let sampled = matches!(mode, PowerMode::Sampled { .. });
    match mode {
        PowerMode::Exact => {
            let per_start: Vec<Vec<((usize, Vec<(usize, usize, usize)>), BigInt)>> = (0..n)
                .into_par_iter()
                .map(|v| exact_from(inst, &g, &dist, v, t, d, b))
                .collect::<Result<_>>()?;
            let denom_r = BigRational::from_integer(denom.clone());
            for (v, rows) in per_start.into_iter().enumerate() {
                for ((w, checks), num) in rows {
                    let checks: Vec<WalkCheck> = checks.into_iter().map(|x| check_of(inst, x)).collect();
                    out.push(Constraint {
                        vars: vec![v, w],
                        relation: Relation::Walk(Arc::new(checks)),
                        weight: BigRational::from_integer(num) / &denom_r,
                        mult: 1,
                    })?;
                }
            }
        }
        PowerMode::Sampled { count, seed } => {
            let mut merged: BTreeMap<(usize, usize, Vec<(usize, usize, usize)>), u64> = BTreeMap::new();
            let mut kept = 0usize;
            let mut draw = 0u64;
            while kept < count {
                let mut r = rng(mix(seed, draw));
                draw += 1;
                if draw > 1000 * count as u64 + 1000 {
                    return Err(Error::TooLarge("sampled powering discards nearly every walk".into()));
                }
                let start = r.gen_range(0..n);
                if let AsrwOutcome::Kept(walk) = sample_asrw(&g, t, b, start, &mut r) {
                    let w = walk.end();
                    let mut checks: Vec<(usize, usize, usize)> = walk
                        .traversals()
                        .into_iter()
                        .filter(|&(a, bb, e)| {
                            dist[start][a] <= t && dist[w][bb] <= t && !inst.constraints[e].relation.is_trivial()
                        })
                        .collect();
                    checks.sort_unstable();
                    checks.dedup();
                    *merged.entry((start, w, checks)).or_insert(0) += 1;
                    kept += 1;
                }
            }
            for ((v, w, checks), mult) in merged {
                let checks: Vec<WalkCheck> = checks.into_iter().map(|x| check_of(inst, x)).collect();
                out.push(Constraint {
                    vars: vec![v, w],
                    relation: Relation::Walk(Arc::new(checks)),
                    weight: BigRational::one(),
                    mult,
                })?;
            }
        }
    }
    let info = PowerInfo {
        t,
        b,
        d,
        degree_d: degree_d.to_string(),
        denominator: denom.to_string(),
        constraints: out.num_constraints(),
        sampled,
    };
    Ok((out, info))
}

type Rows = Vec<((usize, Vec<(usize, usize, usize)>), BigInt)>;

/// Dynamic program over (vertex, set of relevant traversals seen) for the
/// walks from `v`. A walk of l moves has probability
/// (t-1)^l (td)^(B-l) / (n t (td)^B); the returned numerators use that
/// common denominator.
fn exact_from(inst: &Instance, g: &Graph, dist: &[Vec<usize>], v: usize, t: usize, d: usize, b: usize) -> Result<Rows> {
    let mut bit_of: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut trav: Vec<(usize, usize, usize)> = Vec::new();
    let mut moves: Vec<Vec<(usize, Option<usize>)>> = vec![Vec::new(); g.n()];
    for (x, mv) in moves.iter_mut().enumerate() {
        for &(y, e) in g.incidences(x) {
            let bit = if dist[v][x] <= t && !inst.constraints[e].relation.is_trivial() {
                let key = (x, y, e);
                Some(*bit_of.entry(key).or_insert_with(|| {
                    trav.push(key);
                    trav.len() - 1
                }))
            } else {
                None
            };
            mv.push((y, bit));
        }
    }
    if trav.len() > 128 {
        return Err(Error::TooLarge(format!("{} relevant traversals from vertex {v}", trav.len())));
    }
    let coeff = |l: usize| -> BigInt {
        Pow::pow(BigInt::from(t - 1), l) * Pow::pow(BigInt::from(t * d), b - l)
    };
    let mut level: HashMap<(usize, u128), u128> = HashMap::from([((v, 0u128), 1u128)]);
    let mut ends: HashMap<(usize, u128), BigInt> = HashMap::new();
    let mut explored = 0usize;
    let max_moves = if t == 1 { 0 } else { b };
    for l in 0..=max_moves {
        let c = coeff(l);
        for (&(x, mask), &cnt) in &level {
            let m = filter_mask(mask, &trav, &dist[x], t);
            *ends.entry((x, m)).or_insert_with(BigInt::zero) += &c * BigInt::from(cnt);
        }
        if l == max_moves {
            break;
        }
        let mut next: HashMap<(usize, u128), u128> = HashMap::with_capacity(level.len() * 2);
        for (&(x, mask), &cnt) in &level {
            for &(y, bit) in &moves[x] {
                let m = bit.map_or(mask, |i| mask | (1u128 << i));
                let slot = next.entry((y, m)).or_insert(0);
                *slot = slot
                    .checked_add(cnt)
                    .ok_or_else(|| Error::TooLarge("walk counts overflow; use sampled mode".into()))?;
            }
        }
        explored += next.len();
        if explored > POWER_STATE_CAP {
            return Err(Error::TooLarge(format!(
                "exact powering from vertex {v} exceeds {POWER_STATE_CAP} states; use sampled mode"
            )));
        }
        level = next;
    }
    let mut rows: Vec<((usize, Vec<(usize, usize, usize)>), BigInt)> = ends
        .into_iter()
        .map(|((w, m), num)| {
            let checks = (0..trav.len()).filter(|i| (m >> i) & 1 == 1).map(|i| trav[i]).collect();
            ((w, checks), num)
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(rows)
}

fn filter_mask(mask: u128, trav: &[(usize, usize, usize)], dist_end: &[usize], t: usize) -> u128 {
    let mut m = mask;
    let mut rest = mask;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        if dist_end[trav[i].1] > t {
            m &= !(1u128 << i);
        }
    }
    m
}

/// sigma'(v) = sigma restricted to the radius-t ball of v.
pub fn lift_power(inst: &Instance, sigma: &[Label], t: usize) -> Result<Assignment> {
    inst.check_assignment(sigma)?;
    let g = Graph::of_instance(inst)?;
    Ok((0..g.n())
        .map(|v| Label::view(g.ball(v, t).into_iter().map(|w| (w, sigma[w].clone())).collect()))
        .collect())
}
