//! Instance families: parity cycles, the adversarial cycle pair, random
//! and planted instances, random regular graphs and label-cover instances.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::csp::{Alphabet, Assignment, Instance, Label, Relation};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::util::{mix, rng};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleSpec {
    pub n: usize,
    pub pattern: Vec<u8>,
}

impl CycleSpec {
    pub fn ones(n: usize) -> CycleSpec {
        CycleSpec { n, pattern: vec![1; n] }
    }

    pub fn zeros(n: usize) -> CycleSpec {
        CycleSpec { n, pattern: vec![0; n] }
    }
}

/// Parity constraints around a cycle of any length (edge i joins i, i+1).
pub fn parity_cycle(pattern: &[u8]) -> Instance {
    let n = pattern.len();
    let mut inst = Instance::uniform(n, Alphabet::Boolean);
    for (i, &b) in pattern.iter().enumerate() {
        inst.add(vec![i, (i + 1) % n], Relation::Parity2(b & 1)).expect("valid cycle edge");
    }
    inst
}

pub fn e2lin_cycle(spec: &CycleSpec) -> Result<Instance> {
    if spec.n < 4 || spec.n % 2 == 1 {
        return Err(Error::OddLength(spec.n));
    }
    if spec.pattern.len() != spec.n {
        return Err(Error::SizeMismatch(spec.n, spec.pattern.len()));
    }
    Ok(parity_cycle(&spec.pattern))
}

/// Edge indices swapped to parity 0 in the second instance of the pair:
/// (v_{n/2}, v_{n/2+1}) and (v_n, v_1) in one-based vertex names.
pub fn lemma41_edges(n: usize) -> [usize; 2] {
    [n / 2 - 1, n - 1]
}

/// The all-ones even cycle and its two-swap neighbor.
pub fn lemma41_pair(n: usize) -> Result<(Instance, Instance)> {
    let i = e2lin_cycle(&CycleSpec::ones(n))?;
    let mut j = i.clone();
    for e in lemma41_edges(n) {
        j = j.swap_constraint(e, Relation::Parity2(0))?;
    }
    Ok((i, j))
}

/// The two satisfying assignments of a satisfiable parity cycle, derived
/// by propagation from v_1 = 0 and v_1 = 1.
pub fn cycle_solutions(inst: &Instance) -> Vec<Assignment> {
    let n = inst.num_vars();
    let mut out = Vec::new();
    for start in 0..2u32 {
        let mut bits = vec![start; n];
        for i in 0..n - 1 {
            let b = match inst.constraints[i].relation {
                Relation::Parity2(b) => b as u32,
                _ => return Vec::new(),
            };
            bits[i + 1] = bits[i] ^ b;
        }
        let sigma: Assignment = bits.into_iter().map(Label::Atom).collect();
        if inst.value(&sigma).map(|v| v == crate::util::one()).unwrap_or(false) {
            out.push(sigma);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationFamily {
    /// Each tuple accepted independently with probability 1/2.
    Random,
    /// Parity constraints with random targets over Booleans.
    Parity,
    /// Random relations that all contain a planted assignment's tuple.
    Planted,
    /// Random projections consistent with a planted assignment.
    PlantedProjection,
}

impl std::str::FromStr for RelationFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(RelationFamily::Random),
            "parity" => Ok(RelationFamily::Parity),
            "planted" | "satisfiable-planted" => Ok(RelationFamily::Planted),
            "projection" => Ok(RelationFamily::PlantedProjection),
            _ => Err(Error::Invalid(format!("unknown relation family {s}"))),
        }
    }
}

/// The planted assignment used by the planted families for `seed`.
pub fn planted_assignment(n: usize, q: u32, seed: u64) -> Assignment {
    let mut r = rng(mix(seed, 0x9a17));
    (0..n).map(|_| Label::Atom(r.gen_range(0..q))).collect()
}

fn random_relation(
    family: RelationFamily,
    q: u32,
    planted: Option<(u32, u32)>,
    r: &mut crate::util::Rng,
) -> Relation {
    match family {
        RelationFamily::Parity => Relation::Parity2(r.gen_range(0..2)),
        RelationFamily::Random | RelationFamily::Planted => {
            let mut accept = BTreeSet::new();
            for a in 0..q {
                for b in 0..q {
                    if r.gen_bool(0.5) {
                        accept.insert(vec![a, b]);
                    }
                }
            }
            if let Some((a, b)) = planted {
                accept.insert(vec![a, b]);
            }
            Relation::tuples(2, accept)
        }
        RelationFamily::PlantedProjection => {
            let mut map: Vec<u32> = (0..q).map(|_| r.gen_range(0..q)).collect();
            if let Some((a, b)) = planted {
                map[a as usize] = b;
            }
            Relation::projection(map)
        }
    }
}

/// Binary instance on `n` variables with `m` uniformly random edges.
pub fn random_instance(n: usize, m: usize, q: u32, family: RelationFamily, seed: u64) -> Result<Instance> {
    if n == 0 || q == 0 {
        return Err(Error::Invalid("random_instance needs n, q positive".into()));
    }
    let q = if family == RelationFamily::Parity { 2 } else { q };
    let planted = planted_assignment(n, q, seed);
    let mut r = rng(seed);
    let mut inst = Instance::uniform(n, Alphabet::range(q));
    for _ in 0..m {
        let u = r.gen_range(0..n);
        let v = if n > 1 {
            (u + r.gen_range(1..n)) % n
        } else {
            u
        };
        let p = match family {
            RelationFamily::Planted | RelationFamily::PlantedProjection => {
                Some((planted[u].as_atom().expect("atom"), planted[v].as_atom().expect("atom")))
            }
            _ => None,
        };
        inst.add(vec![u, v], random_relation(family, q, p, &mut r))?;
    }
    Ok(inst)
}

/// A uniformly sampled simple d-regular graph (configuration model with
/// rejection of loops and parallel edges).
pub fn random_regular_graph(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if (n * d) % 2 == 1 || d >= n {
        return Err(Error::Invalid(format!("no simple {d}-regular graph on {n} vertices")));
    }
    for attempt in 0..10_000u64 {
        let mut r = rng(mix(seed, attempt));
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        stubs.shuffle(&mut r);
        let mut seen = BTreeSet::new();
        let mut ok = true;
        for p in stubs.chunks(2) {
            let (a, b) = (p[0].min(p[1]), p[0].max(p[1]));
            if a == b || !seen.insert((a, b)) {
                ok = false;
                break;
            }
        }
        if ok {
            let edges: Vec<(usize, usize)> = stubs.chunks(2).map(|p| (p[0], p[1])).collect();
            return Graph::from_edges(n, &edges);
        }
    }
    Err(Error::Invalid(format!("could not sample a simple {d}-regular graph on {n} vertices")))
}

/// Random simple graph with up to `m` edges and maximum degree `max_degree`:
/// candidate pairs are scanned in random order and kept while both
/// endpoints have room.
pub fn random_bounded_graph(n: usize, m: usize, max_degree: usize, seed: u64) -> Result<Graph> {
    let mut r = rng(mix(seed, 0xb0d));
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    pairs.shuffle(&mut r);
    let mut deg = vec![0usize; n];
    let mut edges = Vec::new();
    for (a, b) in pairs {
        if edges.len() == m {
            break;
        }
        if deg[a] < max_degree && deg[b] < max_degree {
            deg[a] += 1;
            deg[b] += 1;
            edges.push((a, b));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Binary instance on a random simple d-regular graph.
pub fn random_regular_instance(
    n: usize,
    d: usize,
    q: u32,
    family: RelationFamily,
    seed: u64,
) -> Result<Instance> {
    let g = random_regular_graph(n, d, seed)?;
    instance_on_graph(&g, q, family, seed)
}

pub fn instance_on_graph(g: &Graph, q: u32, family: RelationFamily, seed: u64) -> Result<Instance> {
    let q = if family == RelationFamily::Parity { 2 } else { q };
    let planted = planted_assignment(g.n(), q, seed);
    let mut r = rng(mix(seed, 0x7e1a));
    let mut inst = Instance::uniform(g.n(), Alphabet::range(q));
    for &(u, v) in g.edges() {
        let p = match family {
            RelationFamily::Planted | RelationFamily::PlantedProjection => {
                Some((planted[u].as_atom().expect("atom"), planted[v].as_atom().expect("atom")))
            }
            _ => None,
        };
        inst.add(vec![u, v], random_relation(family, q, p, &mut r))?;
    }
    Ok(inst)
}

/// Bipartite label cover: left vars 0..nu over [su], right vars
/// nu..nu+nv over [sv], `m` projection edges (left, right) consistent with
/// a planted assignment.
pub fn label_cover(nu: usize, nv: usize, m: usize, su: u32, sv: u32, seed: u64) -> Result<(Instance, Assignment)> {
    if nu == 0 || nv == 0 || su == 0 || sv == 0 {
        return Err(Error::Invalid("label cover sizes must be positive".into()));
    }
    let mut r = rng(seed);
    let mut sigma: Assignment = (0..nu).map(|_| Label::Atom(r.gen_range(0..su))).collect();
    sigma.extend((0..nv).map(|_| Label::Atom(r.gen_range(0..sv))));
    let mut inst = Instance {
        alphabets: vec![Alphabet::range(su), Alphabet::range(sv)],
        var_alphabet: std::iter::repeat_n(0, nu).chain(std::iter::repeat_n(1, nv)).collect(),
        constraints: Vec::new(),
        marked: None,
    };
    for _ in 0..m {
        let u = r.gen_range(0..nu);
        let v = nu + r.gen_range(0..nv);
        let mut map: Vec<u32> = (0..su).map(|_| r.gen_range(0..sv)).collect();
        map[sigma[u].as_atom().expect("atom") as usize] = sigma[v].as_atom().expect("atom");
        inst.add(vec![u, v], Relation::projection(map))?;
    }
    inst.normalize_alphabets();
    Ok((inst, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{atoms, hamming};
    use crate::util::{one, rat};

    #[test]
    fn cycle_fixture_shape() {
        let i = e2lin_cycle(&CycleSpec::ones(4)).unwrap();
        assert_eq!(i.num_constraints(), 4);
        assert_eq!(i.constraints[3].vars, vec![3, 0]);
        assert_eq!(i.value(&atoms(&[0, 1, 0, 1])).unwrap(), one());
        assert!(matches!(e2lin_cycle(&CycleSpec::ones(5)), Err(Error::OddLength(5))));
    }

    #[test]
    fn one_flipped_bit_is_three_quarters() {
        let mut spec = CycleSpec::ones(4);
        spec.pattern[2] = 0;
        let i = e2lin_cycle(&spec).unwrap();
        // every assignment violates an odd number of edges; one suffices
        let best = (0..16u32)
            .map(|m| i.value(&atoms(&[m & 1, (m >> 1) & 1, (m >> 2) & 1, (m >> 3) & 1])).unwrap())
            .max()
            .unwrap();
        assert_eq!(best, rat(3, 4));
    }

    #[test]
    fn pair_is_two_swaps_apart() {
        let (i, j) = lemma41_pair(8).unwrap();
        assert_eq!(i.swap_distance(&j).unwrap(), 2);
        let (si, sj) = (cycle_solutions(&i), cycle_solutions(&j));
        assert_eq!((si.len(), sj.len()), (2, 2));
        assert_eq!(hamming(&si[0], &si[1]).unwrap(), 8);
        for a in &si {
            for b in &sj {
                assert!(hamming(a, b).unwrap() >= 4);
            }
        }
    }

    #[test]
    fn random_instances_replay() {
        let a = random_instance(6, 9, 3, RelationFamily::Random, 4).unwrap();
        assert_eq!(a, random_instance(6, 9, 3, RelationFamily::Random, 4).unwrap());
        assert_eq!(random_instance(6, 0, 3, RelationFamily::Random, 4).unwrap().num_constraints(), 0);
    }

    #[test]
    fn planted_instances_are_satisfied_by_the_plant() {
        let i = random_instance(7, 20, 3, RelationFamily::Planted, 11).unwrap();
        assert_eq!(i.value(&planted_assignment(7, 3, 11)).unwrap(), one());
        let i = random_regular_instance(8, 3, 2, RelationFamily::PlantedProjection, 2).unwrap();
        assert_eq!(i.value(&planted_assignment(8, 2, 2)).unwrap(), one());
        assert_eq!(i.degrees(), vec![3; 8]);
    }

    #[test]
    fn label_cover_plant() {
        let (i, s) = label_cover(3, 3, 6, 3, 2, 5).unwrap();
        assert_eq!(i.value(&s).unwrap(), one());
        assert_eq!(i.alphabet_of(0).size(), 3);
        assert_eq!(i.alphabet_of(4).size(), 2);
    }
}
