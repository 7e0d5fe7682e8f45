//! Assignment-side maps back through each reduction.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::csp::{Assignment, AssignmentDistribution, Instance, Label, Marginal};
use crate::error::{Error, Result};
use crate::graph::WalkKernel;
use crate::graph::Graph;
use crate::transforms::{hadamard, AlphabetMap, CloudMap, FglssLegend};
use crate::util::{format_rational, rat, rat_int, uniform_dyadic, Rng};

fn point(l: Label) -> Marginal {
    vec![(l, BigRational::one())]
}

/// Per original variable, the label histogram of its cloud.
pub fn recover_degree(map: &CloudMap, sigma: &[Label]) -> Result<AssignmentDistribution> {
    if sigma.len() != map.owner.len() {
        return Err(Error::DomainMismatch(format!("expected {} labels, got {}", map.owner.len(), sigma.len())));
    }
    let marginals = map
        .clouds
        .iter()
        .enumerate()
        .map(|(u, cloud)| {
            if cloud.is_empty() {
                return point(map.fallback[u].clone());
            }
            let share = rat(1, cloud.len() as i64);
            cloud.iter().map(|&w| (sigma[w].clone(), share.clone())).collect()
        })
        .collect();
    Ok(AssignmentDistribution::product(marginals))
}

pub fn recover_expanderize(sigma: &[Label]) -> AssignmentDistribution {
    AssignmentDistribution::Point(sigma.to_vec())
}

pub fn recover_serial(sigma: &[Label]) -> Assignment {
    sigma.to_vec()
}

pub fn recover_3lin(sigma: &[Label]) -> Assignment {
    sigma.to_vec()
}

/// Opinion distribution of one vertex before and after truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedOpinion {
    pub mu: Marginal,
    pub mu_star: Marginal,
    /// Sum of the truncated masses, A_v.
    pub denominator: BigRational,
}

impl TruncatedOpinion {
    pub fn to_json(&self) -> Value {
        let table = |m: &Marginal| -> Value {
            m.iter().map(|(l, p)| json!([l.to_string(), format_rational(p)])).collect()
        };
        json!({ "mu": table(&self.mu), "mu_star": table(&self.mu_star), "denominator": format_rational(&self.denominator) })
    }
}

/// Drops mass below `cutoff` from every label and renormalizes.
pub fn truncate(mu: &Marginal, cutoff: &BigRational) -> Result<TruncatedOpinion> {
    let kept: Vec<(Label, BigRational)> =
        mu.iter().filter(|(_, p)| p > cutoff).map(|(l, p)| (l.clone(), p - cutoff)).collect();
    let denominator: BigRational = kept.iter().map(|(_, p)| p.clone()).sum();
    if denominator.is_zero() {
        return Err(Error::Invalid("truncation removed all mass".into()));
    }
    let mu_star = kept.into_iter().map(|(l, p)| (l, p / &denominator)).collect();
    Ok(TruncatedOpinion { mu: mu.clone(), mu_star, denominator })
}

/// Exact opinions mu_v and their truncations for a powered assignment.
/// The cutoff is 1/(10 |Sigma|) with |Sigma| the largest input alphabet.
pub fn power_opinions(inst: &Instance, kernel: &WalkKernel, sigma: &[Label]) -> Result<Vec<TruncatedOpinion>> {
    let n = inst.num_vars();
    if sigma.len() != n || kernel.n() != n {
        return Err(Error::DomainMismatch(format!("{n} vertices, {} labels, kernel on {}", sigma.len(), kernel.n())));
    }
    let cutoff = BigRational::one() / (rat_int(inst.max_alphabet()) * rat(10, 1));
    (0..n)
        .into_par_iter()
        .map(|v| {
            let mut mu: BTreeMap<Label, BigRational> = BTreeMap::new();
            for (w, k) in kernel.row(v).iter().enumerate() {
                if k.is_zero() {
                    continue;
                }
                let op = sigma[w].opinion(v).ok_or_else(|| {
                    Error::DomainMismatch(format!("vertex {w} holds no opinion on {v}"))
                })?;
                *mu.entry(op.clone()).or_insert_with(BigRational::zero) += k;
            }
            truncate(&mu.into_iter().collect(), &cutoff)
        })
        .collect()
}

/// Independent draws from each truncated opinion.
pub fn recover_power(inst: &Instance, kernel: &WalkKernel, sigma: &[Label]) -> Result<AssignmentDistribution> {
    let ops = power_opinions(inst, kernel, sigma)?;
    Ok(AssignmentDistribution::product(ops.into_iter().map(|o| o.mu_star).collect()))
}

/// Decoding of one X block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecode {
    pub label: Label,
    pub distance: usize,
    /// 4 delta_u = 4 dist / ell, the threshold above which u falls back.
    pub threshold: BigRational,
    /// Pr[label is output] = max(0, 1 - 4 delta_u).
    pub p: BigRational,
}

pub fn decode_blocks(map: &AlphabetMap, sigma: &[Label]) -> Result<Vec<BlockDecode>> {
    map.blocks
        .iter()
        .enumerate()
        .map(|(u, block)| {
            let word = block
                .iter()
                .map(|&x| match sigma.get(x).and_then(Label::as_atom) {
                    Some(b @ (0 | 1)) => Ok(b == 1),
                    _ => Err(Error::BlockMissing(u)),
                })
                .collect::<Result<Vec<bool>>>()?;
            let a = map.alphabet_of(u);
            let (msg, distance) = hadamard::decode(&word, a.size());
            let label = a.label_at(msg).expect("decode stays in range");
            let threshold = rat(4 * distance as i64, map.ell as i64);
            let p = if threshold >= BigRational::one() { BigRational::zero() } else { BigRational::one() - &threshold };
            Ok(BlockDecode { label, distance, threshold, p })
        })
        .collect()
}

fn regime(decodes: &[BlockDecode], fallback: &[Label], tau: &BigRational) -> Assignment {
    decodes
        .iter()
        .zip(fallback)
        .map(|(d, r)| if d.threshold <= *tau { d.label.clone() } else { r.clone() })
        .collect()
}

fn fallbacks(map: &AlphabetMap) -> Vec<Label> {
    (0..map.blocks.len()).map(|u| map.alphabet_of(u).first_label()).collect()
}

/// The exact joint law under one shared uniform threshold tau: one
/// assignment per interval between consecutive distinct thresholds.
pub fn recover_alphabet(map: &AlphabetMap, sigma: &[Label]) -> Result<AssignmentDistribution> {
    let decodes = decode_blocks(map, sigma)?;
    let fb = fallbacks(map);
    let mut cuts: Vec<BigRational> =
        decodes.iter().map(|d| d.threshold.clone()).filter(|t| *t < BigRational::one()).collect();
    cuts.push(BigRational::zero());
    cuts.push(BigRational::one());
    cuts.sort();
    cuts.dedup();
    let items = cuts
        .windows(2)
        .map(|w| (regime(&decodes, &fb, &w[0]), &w[1] - &w[0]))
        .collect();
    Ok(AssignmentDistribution::empirical(items))
}

/// Exact per-vertex marginals (the product of these is not the joint law).
pub fn alphabet_marginals(map: &AlphabetMap, sigma: &[Label]) -> Result<Vec<Marginal>> {
    let decodes = decode_blocks(map, sigma)?;
    Ok(decodes
        .into_iter()
        .zip(fallbacks(map))
        .map(|(d, r)| {
            let q = BigRational::one() - &d.p;
            let mut m = vec![(d.label, d.p), (r, q)];
            m.retain(|(_, p)| !p.is_zero());
            if m.len() == 2 && m[0].0 == m[1].0 {
                return point(m[0].0.clone());
            }
            m.sort_by(|a, b| a.0.cmp(&b.0));
            m
        })
        .collect())
}

/// One draw: a single tau shared by every vertex.
pub fn sample_alphabet(map: &AlphabetMap, sigma: &[Label], rng: &mut Rng) -> Result<Assignment> {
    let decodes = decode_blocks(map, sigma)?;
    let tau = uniform_dyadic(rng);
    Ok(regime(&decodes, &fallbacks(map), &tau))
}

/// Labels read off a clique of the FGLSS graph; untouched variables get
/// their first label.
pub fn recover_fglss(inst: &Instance, g: &Graph, legend: &FglssLegend, clique: &[usize]) -> Result<Assignment> {
    if clique.iter().any(|&v| v >= legend.vertices.len()) || !crate::transforms::is_clique(g, clique) {
        return Err(Error::NotAClique);
    }
    let mut out: Vec<Option<Label>> = vec![None; legend.num_vars];
    for &x in clique {
        let (e, a, b) = &legend.vertices[x];
        let (u, v) = legend.endpoints[*e];
        for (var, l) in [(u, a), (v, b)] {
            match &out[var] {
                Some(prev) if prev != l => return Err(Error::InconsistentClique),
                _ => out[var] = Some(l.clone()),
            }
        }
    }
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(v, l)| l.unwrap_or_else(|| inst.alphabet_of(v).first_label()))
        .collect())
}

pub use crate::transforms::recover_e3sat;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{atoms, tv_distance, Alphabet};
    use crate::generators::{label_cover, planted_assignment, random_regular_instance, RelationFamily};
    use crate::graph::bsrw_kernel;
    use crate::transforms::{
        alphabet_reduce, canonical_clique, degree_reduce, fglss, lift_alphabet, lift_degree, lift_power, power,
        AlphabetConfig, PowerMode,
    };
    use crate::util::rng;

    #[test]
    fn degree_histograms() {
        let i = random_regular_instance(6, 3, 3, RelationFamily::Planted, 2).unwrap();
        let s = planted_assignment(6, 3, 2);
        let (r, map) = degree_reduce(&i, 4, 1).unwrap();
        let lifted = lift_degree(&map, &s).unwrap();
        let d = recover_degree(&map, &lifted).unwrap();
        assert_eq!(d, points(&s));
        // Flipping one copy moves that vertex by exactly 1/|cloud|.
        let mut bad = lifted.clone();
        let w = map.clouds[0][0];
        bad[w] = r.alphabet_of(w).label_at(1).unwrap();
        let d2 = recover_degree(&map, &bad).unwrap();
        let tv: BigRational = (0..6).map(|u| tv_distance(&d.marginal(u), &d2.marginal(u))).sum();
        assert_eq!(tv, rat(1, map.clouds[0].len() as i64));
    }

    #[test]
    fn degree_half_half() {
        let map = CloudMap { clouds: vec![vec![0, 1, 2, 3]], owner: vec![0; 4], fallback: atoms(&[0]) };
        let d = recover_degree(&map, &atoms(&[0, 0, 1, 1])).unwrap();
        assert_eq!(d.marginal(0), vec![(Label::Atom(0), rat(1, 2)), (Label::Atom(1), rat(1, 2))]);
    }

    #[test]
    fn truncation_arithmetic() {
        let cut = rat(1, 20);
        let t = truncate(&vec![(Label::Atom(0), rat(24, 25)), (Label::Atom(1), rat(1, 25))], &cut).unwrap();
        assert_eq!(t.mu_star, vec![(Label::Atom(0), one())]);
        let t = truncate(&vec![(Label::Atom(0), rat(1, 2)), (Label::Atom(1), rat(1, 2))], &cut).unwrap();
        assert_eq!(t.mu_star, vec![(Label::Atom(0), rat(1, 2)), (Label::Atom(1), rat(1, 2))]);
        assert_eq!(t.denominator, rat(9, 10));
    }

    fn one() -> BigRational {
        BigRational::one()
    }

    fn points(s: &[Label]) -> AssignmentDistribution {
        AssignmentDistribution::product(s.iter().map(|l| point(l.clone())).collect())
    }

    #[test]
    fn power_round_trip_and_single_change() {
        let i = random_regular_instance(6, 3, 3, RelationFamily::Planted, 4).unwrap();
        let s = planted_assignment(6, 3, 4);
        let (p, _) = power(&i, 1, PowerMode::Exact).unwrap();
        let g = Graph::of_instance(&i).unwrap();
        let k = bsrw_kernel(&g, 1).unwrap();
        let lifted = lift_power(&i, &s, 1).unwrap();
        p.check_assignment(&lifted).unwrap();
        assert_eq!(recover_power(&i, &k, &lifted).unwrap(), points(&s));
        let mut bad = lifted.clone();
        let other: Vec<_> = match &bad[2] {
            Label::View(v) => v.iter().map(|(w, l)| (*w, if *w == 3 { i.alphabet_of(3).label_at(1).unwrap() } else { l.clone() })).collect(),
            _ => unreachable!(),
        };
        bad[2] = Label::view(other);
        let a = power_opinions(&i, &k, &lifted).unwrap();
        let b = power_opinions(&i, &k, &bad).unwrap();
        let l1: BigRational = a.iter().zip(&b).map(|(x, y)| tv_distance(&x.mu_star, &y.mu_star) * rat(2, 1)).sum();
        assert!(l1 <= rat(8, 1));
        for (x, y) in a.iter().zip(&b) {
            assert!(x.denominator >= rat(9, 10));
            assert!(tv_distance(&x.mu_star, &y.mu_star) <= tv_distance(&x.mu, &y.mu) * rat(4, 1));
        }
    }

    fn small_alphabet_case() -> (Instance, AlphabetMap, Instance, Assignment) {
        let (i, s) = label_cover(2, 2, 3, 4, 4, 3).unwrap();
        let (r, map) = alphabet_reduce(&i, &AlphabetConfig::default()).unwrap();
        (i, map, r, s)
    }

    #[test]
    fn codeword_blocks_decode_exactly() {
        let (i, map, r, s) = small_alphabet_case();
        let lifted = lift_alphabet(&i, &map, r.num_vars(), &s).unwrap();
        assert_eq!(recover_alphabet(&map, &lifted).unwrap(), AssignmentDistribution::empirical(vec![(s.clone(), one())]));
        let mut g = rng(3);
        assert_eq!(sample_alphabet(&map, &lifted, &mut g).unwrap(), s);
    }

    #[test]
    fn one_flip_gives_half() {
        // ell = 4 here, so a single flipped bit is delta = 1/4: always fallback.
        // With ell = 8 (|Sigma| = 5..8), one flip is delta = 1/8 and p = 1/2.
        let (i, s) = label_cover(1, 1, 1, 6, 6, 5).unwrap();
        let (r, map) = alphabet_reduce(&i, &AlphabetConfig::default()).unwrap();
        assert_eq!(map.ell, 8);
        let mut lifted = lift_alphabet(&i, &map, r.num_vars(), &s).unwrap();
        let x = map.blocks[0][3];
        lifted[x] = Label::Atom(1 - lifted[x].as_atom().unwrap());
        let ds = decode_blocks(&map, &lifted).unwrap();
        assert_eq!(ds[0].p, rat(1, 2));
        assert_eq!(ds[0].label, s[0]);
        let joint = recover_alphabet(&map, &lifted).unwrap();
        let m = alphabet_marginals(&map, &lifted).unwrap();
        for u in 0..2 {
            assert_eq!(joint.marginal(u), m[u]);
        }
        assert_eq!(joint.support_size(), 2);
    }

    #[test]
    fn far_blocks_fall_back() {
        let (i, map, r, s) = small_alphabet_case();
        let mut lifted = lift_alphabet(&i, &map, r.num_vars(), &s).unwrap();
        let x = map.blocks[1][0];
        lifted[x] = Label::Atom(1 - lifted[x].as_atom().unwrap());
        let m = alphabet_marginals(&map, &lifted).unwrap();
        assert_eq!(m[1], point(i.alphabet_of(1).first_label()));
        let mut short = lifted.clone();
        short.truncate(map.blocks[1][0]);
        assert!(matches!(recover_alphabet(&map, &short), Err(Error::BlockMissing(_))));
    }

    #[test]
    fn fglss_recovery() {
        let (i, s) = label_cover(3, 3, 6, 3, 2, 4).unwrap();
        let (g, leg) = fglss(&i).unwrap();
        let c = canonical_clique(&leg, &s);
        let got = recover_fglss(&i, &g, &leg, &c).unwrap();
        for c in &i.constraints {
            for &v in &c.vars {
                assert_eq!(got[v], s[v]);
            }
        }
        let empty = recover_fglss(&i, &g, &leg, &[]).unwrap();
        assert_eq!(empty, i.first_assignment());
        let single = recover_fglss(&i, &g, &leg, &[0]).unwrap();
        assert!(i.constraints[leg.vertices[0].0].satisfied(&single));
        let cloud = &leg.clouds[0];
        if cloud.len() >= 2 {
            assert!(matches!(recover_fglss(&i, &g, &leg, &cloud[..2]), Err(Error::NotAClique)));
        }
    }

    #[test]
    fn identities() {
        let inst = Instance::uniform(3, Alphabet::Boolean);
        let mut g = rng(1);
        for _ in 0..3 {
            let a = inst.random_assignment(&mut g);
            assert_eq!(recover_serial(&a), a);
            assert_eq!(recover_3lin(&a), a);
            assert_eq!(recover_expanderize(&a), AssignmentDistribution::Point(a.clone()));
        }
    }
}
