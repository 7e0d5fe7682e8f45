use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng as _;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::emd::emd_exact;
use crate::csp::{hamming, Assignment, AssignmentDistribution, Instance, Label, Relation};
use crate::error::{Error, Result};
use crate::util::{format_rational, mix, rng, Rng};

/// A replayable randomized map from instances to assignments.
pub trait Algorithm: Sync {
    fn name(&self) -> String;
    fn run(&self, inst: &Instance, rng: &mut Rng) -> Result<Assignment>;
}

/// Ignores the instance.
pub struct ConstantAlgorithm;

impl Algorithm for ConstantAlgorithm {
    fn name(&self) -> String {
        "constant".into()
    }
    fn run(&self, inst: &Instance, _: &mut Rng) -> Result<Assignment> {
        Ok(inst.first_assignment())
    }
}

/// Exhaustive search returning the lexicographically first optimum.
pub struct ExactSolver;

impl Algorithm for ExactSolver {
    fn name(&self) -> String {
        "exact".into()
    }
    fn run(&self, inst: &Instance, _: &mut Rng) -> Result<Assignment> {
        Ok(super::brute_force_opt(inst)?.1)
    }
}

/// All zeros when the edge count is odd, all ones when it is even.
pub struct ParityFlipAlgorithm;

impl Algorithm for ParityFlipAlgorithm {
    fn name(&self) -> String {
        "parity-flip".into()
    }
    fn run(&self, inst: &Instance, _: &mut Rng) -> Result<Assignment> {
        let b = (inst.num_constraints() % 2 == 0) as u32;
        Ok(vec![Label::Atom(b); inst.num_vars()])
    }
}

/// Exact optimum, then each variable resampled uniformly with probability p.
pub struct NoisySolver {
    pub p: f64,
}

impl Algorithm for NoisySolver {
    fn name(&self) -> String {
        format!("noisy-exact({})", self.p)
    }
    fn run(&self, inst: &Instance, rng: &mut Rng) -> Result<Assignment> {
        let mut s = super::brute_force_opt(inst)?.1;
        for (v, l) in s.iter_mut().enumerate() {
            if rng.gen_bool(self.p) {
                *l = inst.alphabet_of(v).random_label(rng);
            }
        }
        Ok(s)
    }
}

/// Parses `constant`, `exact`, `parity-flip`, `noisy:P` or `greedy[:K]`.
pub fn algorithm_by_spec(spec: &str) -> Result<Box<dyn Algorithm>> {
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let bad = || Error::Invalid(format!("bad algorithm {spec}"));
    Ok(match name {
        "constant" => Box::new(ConstantAlgorithm),
        "exact" => Box::new(ExactSolver),
        "parity-flip" => Box::new(ParityFlipAlgorithm),
        "noisy" => {
            let p: f64 = arg.parse().map_err(|_| bad())?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad());
            }
            Box::new(NoisySolver { p })
        }
        "greedy" => Box::new(RandomizedGreedy { sweeps: if arg.is_empty() { 2 } else { arg.parse().map_err(|_| bad())? } }),
        _ => return Err(bad()),
    })
}

/// Random start followed by greedy sweeps in random order.
pub struct RandomizedGreedy {
    pub sweeps: usize,
}

impl Algorithm for RandomizedGreedy {
    fn name(&self) -> String {
        format!("greedy({})", self.sweeps)
    }
    fn run(&self, inst: &Instance, rng: &mut Rng) -> Result<Assignment> {
        let mut s = inst.random_assignment(rng);
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); inst.num_vars()];
        for (i, c) in inst.constraints.iter().enumerate() {
            let vs: BTreeSet<usize> = c.vars.iter().copied().collect();
            for v in vs {
                incident[v].push(i);
            }
        }
        let mut order: Vec<usize> = (0..inst.num_vars()).collect();
        for _ in 0..self.sweeps {
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
            for &v in &order {
                let labels = inst.alphabet_of(v).labels(1 << 12)?;
                let mut best: Option<(BigRational, Label)> = None;
                for l in labels {
                    s[v] = l.clone();
                    let m: BigRational = incident[v]
                        .iter()
                        .filter(|&&i| inst.constraints[i].satisfied(&s))
                        .map(|&i| inst.constraints[i].mass())
                        .sum();
                    if best.as_ref().is_none_or(|b| m > b.0) {
                        best = Some((m, l));
                    }
                }
                s[v] = best.expect("non-empty alphabet").1;
            }
        }
        Ok(s)
    }
}

/// How a neighbor instance is formed from an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeighborPolicy {
    Delete,
    Swap,
}

impl NeighborPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            NeighborPolicy::Delete => "delete",
            NeighborPolicy::Swap => "swap",
        }
    }
}

/// A relation differing from constraint `e`'s as a predicate.
pub fn default_swap(inst: &Instance, e: usize) -> Result<Relation> {
    let c = inst.constraints.get(e).ok_or(Error::UnknownEdge(e))?;
    Ok(match &c.relation {
        Relation::Parity2(b) => Relation::Parity2(1 - b),
        Relation::Xor { arity, b } => Relation::Xor { arity: *arity, b: 1 - b },
        Relation::Clause(neg) => {
            let mut n = neg.clone();
            n[0] = !n[0];
            Relation::Clause(n)
        }
        Relation::Projection(map) if !map.is_empty() => {
            let k = inst.alphabet_of(c.vars[1]).size() as u32;
            let mut m = (**map).clone();
            m[0] = (m[0] + 1) % k.max(1);
            Relation::projection(m)
        }
        r => {
            let alph: Vec<_> = c.vars.iter().map(|&v| inst.alphabet_of(v)).collect();
            let total = alph.iter().fold(1u128, |a, x| a.saturating_mul(x.size()));
            if total > 1 << 16 {
                return Err(Error::TooLarge("relation too large to complement".into()));
            }
            let lists: Vec<Vec<Label>> = alph.iter().map(|a| a.labels(1 << 16)).collect::<Result<_>>()?;
            let mut accept = BTreeSet::new();
            let mut idx = vec![0usize; lists.len()];
            'outer: loop {
                let t: Vec<&Label> = idx.iter().zip(&lists).map(|(i, l)| &l[*i]).collect();
                if !r.accepts(&t) {
                    let atoms: Option<Vec<u32>> = t.iter().map(|l| l.as_atom()).collect();
                    accept.insert(atoms.ok_or_else(|| Error::Invalid("cannot complement view labels".into()))?);
                }
                for p in (0..idx.len()).rev() {
                    idx[p] += 1;
                    if idx[p] < lists[p].len() {
                        continue 'outer;
                    }
                    idx[p] = 0;
                }
                break;
            }
            Relation::Tuples { arity: c.vars.len(), accept: std::sync::Arc::new(accept) }
        }
    })
}

pub fn neighbor(inst: &Instance, e: usize, policy: NeighborPolicy) -> Result<Instance> {
    match policy {
        NeighborPolicy::Delete => inst.delete_constraint(e),
        NeighborPolicy::Swap => inst.swap_constraint(e, default_swap(inst, e)?),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeReport {
    pub edge: usize,
    pub policy: NeighborPolicy,
    /// Exact transport distance between the two empirical output laws.
    pub emd: BigRational,
    /// Mean Hamming distance of outputs paired by shared seeds.
    pub coupling: BigRational,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SensitivityReport {
    pub algorithm: String,
    pub policy: NeighborPolicy,
    pub samples: usize,
    pub seed: u64,
    pub edges: Vec<EdgeReport>,
}

impl SensitivityReport {
    pub fn max_emd(&self) -> BigRational {
        self.edges.iter().map(|e| e.emd.clone()).max().unwrap_or_else(BigRational::zero)
    }

    pub fn max_coupling(&self) -> BigRational {
        self.edges.iter().map(|e| e.coupling.clone()).max().unwrap_or_else(BigRational::zero)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "algorithm": self.algorithm,
            "policy": self.policy.as_str(),
            "samples": self.samples,
            "seed": self.seed,
            "max_emd": format_rational(&self.max_emd()),
            "max_coupling": format_rational(&self.max_coupling()),
            "edges": self.edges.iter().map(|e| json!({
                "edge": e.edge,
                "emd": format_rational(&e.emd),
                "coupling": format_rational(&e.coupling),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["edge", "policy", "emd", "coupling", "samples"]).map_err(io)?;
        for e in &self.edges {
            w.write_record([
                e.edge.to_string(),
                e.policy.as_str().to_string(),
                format_rational(&e.emd),
                format_rational(&e.coupling),
                e.samples.to_string(),
            ])
            .map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Outputs of `alg` on `inst` for sample seeds derived from `seed`.
pub fn run_samples(alg: &dyn Algorithm, inst: &Instance, samples: usize, seed: u64) -> Result<Vec<Assignment>> {
    (0..samples).map(|s| alg.run(inst, &mut rng(mix(seed, s as u64)))).collect()
}

/// Transport distance between empirical laws plus the shared-seed coupling bound.
pub fn compare_runs(a: &[Assignment], b: &[Assignment]) -> Result<(BigRational, BigRational)> {
    let da = AssignmentDistribution::from_samples(a.to_vec());
    let db = AssignmentDistribution::from_samples(b.to_vec());
    let (emd, _) = emd_exact(&da, &db)?;
    let mut h = 0usize;
    for (x, y) in a.iter().zip(b) {
        h += hamming(x, y)?;
    }
    let coupling = BigRational::new(BigInt::from(h), BigInt::from(a.len().max(1)));
    Ok((emd, coupling))
}

/// Per-edge distance between A(I) and A(neighbor) with common random numbers.
pub fn estimate_sensitivity(
    alg: &dyn Algorithm,
    inst: &Instance,
    policy: NeighborPolicy,
    samples: usize,
    seed: u64,
    edges: Option<&[usize]>,
) -> Result<SensitivityReport> {
    if samples == 0 {
        return Err(Error::Invalid("need at least one sample".into()));
    }
    let base = run_samples(alg, inst, samples, seed)?;
    let list: Vec<usize> = match edges {
        Some(e) => e.to_vec(),
        None => (0..inst.num_constraints()).collect(),
    };
    let rows = list
        .par_iter()
        .map(|&e| {
            let nb = neighbor(inst, e, policy)?;
            let out = run_samples(alg, &nb, samples, seed)?;
            let (emd, coupling) = compare_runs(&base, &out)?;
            Ok(EdgeReport { edge: e, policy, emd, coupling, samples })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityReport { algorithm: alg.name(), policy, samples, seed, edges: rows })
}

/// The swap path I -> I - e -> I^{e<-R} for one edge, all measured on
/// the same seeds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwapPath {
    pub edge: usize,
    pub swap: BigRational,
    pub delete_from_original: BigRational,
    pub delete_from_swapped: BigRational,
}

impl SwapPath {
    pub fn holds(&self) -> bool {
        self.swap <= &self.delete_from_original + &self.delete_from_swapped
    }
}

pub fn swap_paths(alg: &dyn Algorithm, inst: &Instance, samples: usize, seed: u64, edges: &[usize]) -> Result<Vec<SwapPath>> {
    let base = run_samples(alg, inst, samples, seed)?;
    edges
        .par_iter()
        .map(|&e| {
            let swapped = neighbor(inst, e, NeighborPolicy::Swap)?;
            let deleted = inst.delete_constraint(e)?;
            let s = run_samples(alg, &swapped, samples, seed)?;
            let d = run_samples(alg, &deleted, samples, seed)?;
            Ok(SwapPath {
                edge: e,
                swap: compare_runs(&base, &s)?.0,
                delete_from_original: compare_runs(&base, &d)?.0,
                delete_from_swapped: compare_runs(&s, &d)?.0,
            })
        })
        .collect()
}
