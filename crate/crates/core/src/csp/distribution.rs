use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::util::{rat, Rng};

use super::{Assignment, Instance, Label};

/// Finite distribution over one variable's labels, sorted by label.
pub type Marginal = Vec<(Label, BigRational)>;

/// A finitely supported distribution over assignments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AssignmentDistribution {
    Point(Assignment),
    /// Independent per-variable marginals.
    Product(Vec<Marginal>),
    /// Explicit support with exact probabilities.
    Empirical(Vec<(Assignment, BigRational)>),
}

fn merge(mut items: Vec<(Label, BigRational)>) -> Marginal {
    items.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Marginal = Vec::new();
    for (l, p) in items {
        if p.is_zero() {
            continue;
        }
        match out.last_mut() {
            Some((ll, pp)) if *ll == l => *pp += p,
            _ => out.push((l, p)),
        }
    }
    out
}

/// Total-variation distance between two marginals.
pub fn tv_distance(a: &Marginal, b: &Marginal) -> BigRational {
    let mut diff: BTreeMap<&Label, BigRational> = BTreeMap::new();
    for (l, p) in a {
        *diff.entry(l).or_insert_with(BigRational::zero) += p;
    }
    for (l, p) in b {
        *diff.entry(l).or_insert_with(BigRational::zero) -= p;
    }
    let s: BigRational = diff.values().map(|x| x.abs()).sum();
    s / rat(2, 1)
}

impl AssignmentDistribution {
    pub fn product(marginals: Vec<Marginal>) -> AssignmentDistribution {
        AssignmentDistribution::Product(marginals.into_iter().map(merge).collect())
    }

    /// Empirical distribution with duplicate assignments merged.
    pub fn empirical(items: Vec<(Assignment, BigRational)>) -> AssignmentDistribution {
        let mut map: BTreeMap<Assignment, BigRational> = BTreeMap::new();
        for (a, p) in items {
            if !p.is_zero() {
                *map.entry(a).or_insert_with(BigRational::zero) += p;
            }
        }
        AssignmentDistribution::Empirical(map.into_iter().collect())
    }

    /// Uniform empirical distribution over samples (with repeats).
    pub fn from_samples(samples: Vec<Assignment>) -> AssignmentDistribution {
        let n = samples.len() as i64;
        Self::empirical(samples.into_iter().map(|s| (s, rat(1, n))).collect())
    }

    pub fn num_vars(&self) -> usize {
        match self {
            AssignmentDistribution::Point(a) => a.len(),
            AssignmentDistribution::Product(m) => m.len(),
            AssignmentDistribution::Empirical(items) => items.first().map_or(0, |(a, _)| a.len()),
        }
    }

    /// Probabilities are non-negative, sum to exactly one, and (when an
    /// instance is given) every supported label is in its alphabet.
    pub fn validate(&self, instance: Option<&Instance>) -> Result<()> {
        let check_label = |v: usize, l: &Label| -> Result<()> {
            if let Some(inst) = instance {
                if v >= inst.num_vars() || !inst.alphabet_of(v).contains(l) {
                    return Err(Error::InvalidLabel { var: v, label: l.to_string() });
                }
            }
            Ok(())
        };
        if let Some(inst) = instance {
            if self.num_vars() != inst.num_vars() {
                return Err(Error::DomainMismatch("distribution and instance sizes differ".into()));
            }
        }
        match self {
            AssignmentDistribution::Point(a) => {
                for (v, l) in a.iter().enumerate() {
                    check_label(v, l)?;
                }
            }
            AssignmentDistribution::Product(ms) => {
                for (v, m) in ms.iter().enumerate() {
                    let mut s = BigRational::zero();
                    for (l, p) in m {
                        if p.is_negative() {
                            return Err(Error::Invalid(format!("negative probability at {v}")));
                        }
                        check_label(v, l)?;
                        s += p;
                    }
                    if !s.is_one() {
                        return Err(Error::Invalid(format!("marginal {v} sums to {s}")));
                    }
                }
            }
            AssignmentDistribution::Empirical(items) => {
                let mut s = BigRational::zero();
                let n = self.num_vars();
                for (a, p) in items {
                    if p.is_negative() {
                        return Err(Error::Invalid("negative probability".into()));
                    }
                    if a.len() != n {
                        return Err(Error::DomainMismatch("ragged empirical support".into()));
                    }
                    for (v, l) in a.iter().enumerate() {
                        check_label(v, l)?;
                    }
                    s += p;
                }
                if !s.is_one() {
                    return Err(Error::Invalid(format!("probabilities sum to {s}")));
                }
            }
        }
        Ok(())
    }

    pub fn marginal(&self, v: usize) -> Marginal {
        match self {
            AssignmentDistribution::Point(a) => vec![(a[v].clone(), BigRational::one())],
            AssignmentDistribution::Product(ms) => ms[v].clone(),
            AssignmentDistribution::Empirical(items) => {
                merge(items.iter().map(|(a, p)| (a[v].clone(), p.clone())).collect())
            }
        }
    }

    pub fn marginals(&self) -> Vec<Marginal> {
        (0..self.num_vars()).map(|v| self.marginal(v)).collect()
    }

    /// Number of assignments with positive probability (saturating).
    pub fn support_size(&self) -> u128 {
        match self {
            AssignmentDistribution::Point(_) => 1,
            AssignmentDistribution::Product(ms) => {
                ms.iter().fold(1u128, |acc, m| acc.saturating_mul(m.len() as u128))
            }
            AssignmentDistribution::Empirical(items) => items.len() as u128,
        }
    }

    /// Explicit support; products are expanded when their support fits `cap`.
    pub fn to_empirical(&self, cap: u128) -> Result<Vec<(Assignment, BigRational)>> {
        match self {
            AssignmentDistribution::Point(a) => Ok(vec![(a.clone(), BigRational::one())]),
            AssignmentDistribution::Empirical(items) => Ok(items.clone()),
            AssignmentDistribution::Product(ms) => {
                let size = self.support_size();
                if size > cap {
                    return Err(Error::SupportTooLarge(size.min(usize::MAX as u128) as usize));
                }
                let mut out: Vec<(Assignment, BigRational)> = vec![(Vec::new(), BigRational::one())];
                for m in ms {
                    let mut next = Vec::with_capacity(out.len() * m.len());
                    for (a, p) in &out {
                        for (l, q) in m {
                            let mut a2 = a.clone();
                            a2.push(l.clone());
                            next.push((a2, p * q));
                        }
                    }
                    out = next;
                }
                Ok(out)
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Assignment {
        fn pick<'a, T>(items: &'a [(T, BigRational)], rng: &mut Rng) -> &'a T {
            // exact inverse-CDF draw against a 64-bit dyadic threshold
            let u = crate::util::uniform_dyadic(rng);
            let mut acc = BigRational::zero();
            for (x, p) in items {
                acc += p;
                if u < acc {
                    return x;
                }
            }
            &items.last().expect("non-empty support").0
        }
        match self {
            AssignmentDistribution::Point(a) => a.clone(),
            AssignmentDistribution::Product(ms) => ms.iter().map(|m| pick(m, rng).clone()).collect(),
            AssignmentDistribution::Empirical(items) => pick(items, rng).clone(),
        }
    }

    /// Exact expected value E[val_I(sigma)] under this distribution.
    pub fn expected_value(&self, inst: &Instance) -> Result<BigRational> {
        let total = inst.total_mass();
        if inst.constraints.is_empty() || total.is_zero() {
            return Err(Error::EmptyInstance);
        }
        if self.num_vars() != inst.num_vars() {
            return Err(Error::DomainMismatch("distribution and instance sizes differ".into()));
        }
        match self {
            AssignmentDistribution::Point(a) => inst.value(a),
            AssignmentDistribution::Empirical(items) => {
                let mut acc = BigRational::zero();
                for (a, p) in items {
                    acc += inst.value(a)? * p;
                }
                Ok(acc)
            }
            AssignmentDistribution::Product(ms) => {
                let mut acc = BigRational::zero();
                for c in &inst.constraints {
                    let mut distinct: Vec<usize> = c.vars.clone();
                    distinct.sort_unstable();
                    distinct.dedup();
                    let mut prob = BigRational::zero();
                    let mut idx = vec![0usize; distinct.len()];
                    let mut sigma: BTreeMap<usize, &Label> = BTreeMap::new();
                    'outer: loop {
                        let mut p = BigRational::one();
                        for (k, &v) in distinct.iter().enumerate() {
                            let (l, q) = &ms[v][idx[k]];
                            sigma.insert(v, l);
                            p *= q;
                        }
                        let t: Vec<&Label> = c.vars.iter().map(|v| sigma[v]).collect();
                        if c.relation.accepts(&t) {
                            prob += p;
                        }
                        let mut k = 0;
                        loop {
                            if k == idx.len() {
                                break 'outer;
                            }
                            idx[k] += 1;
                            if idx[k] < ms[distinct[k]].len() {
                                break;
                            }
                            idx[k] = 0;
                            k += 1;
                        }
                    }
                    acc += prob * c.mass();
                }
                Ok(acc / total)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{atoms, Alphabet, Relation};
    use crate::util::rng;

    fn bern(p: BigRational) -> Marginal {
        vec![(Label::Atom(0), BigRational::one() - &p), (Label::Atom(1), p)]
    }

    #[test]
    fn validate_catches_bad_sums() {
        let d = AssignmentDistribution::Product(vec![vec![(Label::Atom(0), rat(1, 2))]]);
        assert!(d.validate(None).is_err());
        let d = AssignmentDistribution::product(vec![bern(rat(1, 3))]);
        assert!(d.validate(None).is_ok());
    }

    #[test]
    fn product_expands_exactly() {
        let d = AssignmentDistribution::product(vec![bern(rat(1, 3)), bern(rat(1, 2))]);
        let e = d.to_empirical(16).unwrap();
        assert_eq!(e.len(), 4);
        let s: BigRational = e.iter().map(|x| x.1.clone()).sum();
        assert!(s.is_one());
        assert!(d.to_empirical(3).is_err());
    }

    #[test]
    fn expected_value_matches_enumeration() {
        let mut inst = Instance::uniform(3, Alphabet::Boolean);
        inst.add(vec![0, 1], Relation::Parity2(1)).unwrap();
        inst.add(vec![1, 2], Relation::Equality).unwrap();
        inst.add(vec![2, 2], Relation::Equality).unwrap();
        let d = AssignmentDistribution::product(vec![bern(rat(1, 3)), bern(rat(1, 4)), bern(rat(2, 5))]);
        let via_product = d.expected_value(&inst).unwrap();
        let e = AssignmentDistribution::Empirical(d.to_empirical(64).unwrap());
        assert_eq!(via_product, e.expected_value(&inst).unwrap());
    }

    #[test]
    fn tv_of_point_masses() {
        let a = vec![(Label::Atom(0), BigRational::one())];
        let b = vec![(Label::Atom(1), BigRational::one())];
        assert_eq!(tv_distance(&a, &b), rat(1, 1));
        assert_eq!(tv_distance(&a, &a), rat(0, 1));
        assert_eq!(tv_distance(&bern(rat(1, 3)), &bern(rat(2, 3))), rat(1, 3));
    }

    #[test]
    fn empirical_merges_and_samples_support() {
        let d = AssignmentDistribution::from_samples(vec![atoms(&[0]), atoms(&[1]), atoms(&[0])]);
        assert_eq!(d.marginal(0), bern(rat(1, 3)));
        let mut r = rng(3);
        for _ in 0..20 {
            let s = d.sample(&mut r);
            assert!(s == atoms(&[0]) || s == atoms(&[1]));
        }
    }
}
