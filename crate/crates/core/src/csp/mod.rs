//! CSP instances, assignments and the elementary quantities on them:
//! value, cost, swap distance and Hamming distance.

mod alphabet;
mod distribution;
pub mod format;
mod relation;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub use alphabet::{Alphabet, Label};
pub use distribution::{tv_distance, AssignmentDistribution, Marginal};
pub use relation::{Relation, WalkCheck};

use crate::error::{Error, Result};
use crate::util::Rng;

pub type VarId = usize;

/// A total labeling, indexed by variable id.
pub type Assignment = Vec<Label>;

/// Default cap on tuple-space enumeration for extensional relation checks.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub vars: Vec<VarId>,
    pub relation: Relation,
    pub weight: BigRational,
    pub mult: u64,
}

impl Constraint {
    pub fn unit(vars: Vec<VarId>, relation: Relation) -> Constraint {
        Constraint { vars, relation, weight: BigRational::one(), mult: 1 }
    }

    /// Weight times multiplicity.
    pub fn mass(&self) -> BigRational {
        &self.weight * BigRational::from_integer(BigInt::from(self.mult))
    }

    pub fn satisfied(&self, sigma: &[Label]) -> bool {
        let t: Vec<&Label> = self.vars.iter().map(|&v| &sigma[v]).collect();
        self.relation.accepts(&t)
    }
}

/// A weighted hypergraph CSP instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub alphabets: Vec<Alphabet>,
    /// Alphabet index of each variable.
    pub var_alphabet: Vec<usize>,
    pub constraints: Vec<Constraint>,
    pub marked: Option<BTreeSet<VarId>>,
}

impl Instance {
    /// `n` variables over one shared alphabet and no constraints.
    pub fn uniform(n: usize, alphabet: Alphabet) -> Instance {
        Instance {
            alphabets: vec![alphabet],
            var_alphabet: vec![0; n],
            constraints: Vec::new(),
            marked: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_alphabet.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn alphabet_of(&self, v: VarId) -> &Alphabet {
        &self.alphabets[self.var_alphabet[v]]
    }

    /// Adds a constraint after checking variable ids and arity.
    pub fn push(&mut self, c: Constraint) -> Result<()> {
        for &v in &c.vars {
            if v >= self.num_vars() {
                return Err(Error::UnknownVariable(v));
            }
        }
        if c.vars.len() != c.relation.arity() {
            return Err(Error::ArityMismatch { expected: c.relation.arity(), found: c.vars.len() });
        }
        if c.weight < BigRational::zero() || c.mult == 0 {
            return Err(Error::Invalid("weights must be non-negative and multiplicities positive".into()));
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn add(&mut self, vars: Vec<VarId>, relation: Relation) -> Result<()> {
        self.push(Constraint::unit(vars, relation))
    }

    pub fn validate(&self) -> Result<()> {
        for &a in &self.var_alphabet {
            if a >= self.alphabets.len() {
                return Err(Error::Invalid(format!("alphabet index {a} out of range")));
            }
        }
        for c in &self.constraints {
            for &v in &c.vars {
                if v >= self.num_vars() {
                    return Err(Error::UnknownVariable(v));
                }
            }
            if c.vars.len() != c.relation.arity() {
                return Err(Error::ArityMismatch { expected: c.relation.arity(), found: c.vars.len() });
            }
        }
        if let Some(m) = &self.marked {
            if let Some(&v) = m.iter().find(|&&v| v >= self.num_vars()) {
                return Err(Error::UnknownVariable(v));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> BigRational {
        self.constraints.iter().map(Constraint::mass).sum()
    }

    pub fn is_unweighted(&self) -> bool {
        self.constraints.iter().all(|c| c.weight.is_one())
    }

    pub fn is_binary(&self) -> bool {
        self.constraints.iter().all(|c| c.vars.len() == 2)
    }

    pub fn check_assignment(&self, sigma: &[Label]) -> Result<()> {
        if sigma.len() != self.num_vars() {
            return Err(Error::DomainMismatch(format!(
                "assignment has {} entries, instance has {} variables",
                sigma.len(),
                self.num_vars()
            )));
        }
        for (v, l) in sigma.iter().enumerate() {
            if !self.alphabet_of(v).contains(l) {
                return Err(Error::InvalidLabel { var: v, label: l.to_string() });
            }
        }
        Ok(())
    }

    /// Weighted, multiplicity-counted fraction of satisfied constraints.
    pub fn value(&self, sigma: &[Label]) -> Result<BigRational> {
        let total = self.total_mass();
        if self.constraints.is_empty() || total.is_zero() {
            return Err(Error::EmptyInstance);
        }
        self.check_assignment(sigma)?;
        let sat: BigRational = self
            .constraints
            .iter()
            .filter(|c| c.satisfied(sigma))
            .map(Constraint::mass)
            .sum();
        Ok(sat / total)
    }

    pub fn cost(&self, sigma: &[Label]) -> Result<BigRational> {
        Ok(BigRational::one() - self.value(sigma)?)
    }

    /// Total mass of violated constraints.
    pub fn violated_mass(&self, sigma: &[Label]) -> BigRational {
        self.constraints
            .iter()
            .filter(|c| !c.satisfied(sigma))
            .map(Constraint::mass)
            .sum()
    }

    /// I^{e<-R}: the same instance with the relation of edge `e` replaced.
    pub fn swap_constraint(&self, e: usize, relation: Relation) -> Result<Instance> {
        let c = self.constraints.get(e).ok_or(Error::UnknownEdge(e))?;
        if relation.arity() != c.vars.len() {
            return Err(Error::ArityMismatch { expected: c.vars.len(), found: relation.arity() });
        }
        let mut out = self.clone();
        out.constraints[e].relation = relation;
        Ok(out)
    }

    /// I - e.
    pub fn delete_constraint(&self, e: usize) -> Result<Instance> {
        if e >= self.constraints.len() {
            return Err(Error::UnknownEdge(e));
        }
        let mut out = self.clone();
        out.constraints.remove(e);
        Ok(out)
    }

    /// Number of edge positions whose relations differ as predicates.
    /// Both instances must share variables, alphabets, hyperedges, weights
    /// and multiplicities.
    pub fn swap_distance(&self, other: &Instance) -> Result<usize> {
        self.swap_distance_with_cap(other, DEFAULT_ENUM_CAP)
    }

    pub fn swap_distance_with_cap(&self, other: &Instance, cap: u128) -> Result<usize> {
        if self.num_vars() != other.num_vars() {
            return Err(Error::HypergraphMismatch("variable counts differ".into()));
        }
        for v in 0..self.num_vars() {
            if self.alphabet_of(v) != other.alphabet_of(v) {
                return Err(Error::HypergraphMismatch(format!("alphabet of variable {v} differs")));
            }
        }
        if self.constraints.len() != other.constraints.len() {
            return Err(Error::HypergraphMismatch("edge counts differ".into()));
        }
        let mut d = 0;
        for (i, (a, b)) in self.constraints.iter().zip(&other.constraints).enumerate() {
            if a.vars != b.vars || a.weight != b.weight || a.mult != b.mult {
                return Err(Error::HypergraphMismatch(format!("edge {i} differs in shape")));
            }
            let alph: Vec<&Alphabet> = a.vars.iter().map(|&v| self.alphabet_of(v)).collect();
            if !a.relation.equivalent(&b.relation, &alph, cap) {
                d += 1;
            }
        }
        Ok(d)
    }

    /// Per-variable count of incident constraint endpoints.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vars()];
        for c in &self.constraints {
            for &v in &c.vars {
                deg[v] += 1;
            }
        }
        deg
    }

    /// Canonical form: alphabets deduplicated in order of first use,
    /// constraints sorted by (tuple, relation fingerprint, weight, mult).
    pub fn canonical(&self) -> Instance {
        let mut out = self.clone();
        out.normalize_alphabets();
        let mut keyed: Vec<(String, Constraint)> = self
            .constraints
            .iter()
            .map(|c| (format::relation_fingerprint(&c.relation), c.clone()))
            .collect();
        keyed.sort_by(|(fa, a), (fb, b)| {
            a.vars
                .cmp(&b.vars)
                .then_with(|| fa.cmp(fb))
                .then_with(|| a.weight.cmp(&b.weight))
                .then_with(|| a.mult.cmp(&b.mult))
        });
        out.constraints = keyed.into_iter().map(|(_, c)| c).collect();
        out
    }

    /// Deduplicates alphabets and orders them by first use.
    pub fn normalize_alphabets(&mut self) {
        let mut alphabets: Vec<Alphabet> = Vec::new();
        let mut var_alphabet = Vec::with_capacity(self.num_vars());
        for v in 0..self.num_vars() {
            let a = self.alphabet_of(v);
            let idx = match alphabets.iter().position(|x| x == a) {
                Some(i) => i,
                None => {
                    alphabets.push(a.clone());
                    alphabets.len() - 1
                }
            };
            var_alphabet.push(idx);
        }
        if alphabets.is_empty() {
            alphabets = self.alphabets.first().cloned().into_iter().collect();
        }
        self.alphabets = alphabets;
        self.var_alphabet = var_alphabet;
    }

    pub fn random_assignment(&self, rng: &mut Rng) -> Assignment {
        (0..self.num_vars()).map(|v| self.alphabet_of(v).random_label(rng)).collect()
    }

    pub fn first_assignment(&self) -> Assignment {
        (0..self.num_vars()).map(|v| self.alphabet_of(v).first_label()).collect()
    }

    /// Largest alphabet size over all variables.
    pub fn max_alphabet(&self) -> u128 {
        (0..self.num_vars()).map(|v| self.alphabet_of(v).size()).max().unwrap_or(0)
    }

    /// Summary counts used in reports.
    pub fn stats(&self) -> BTreeMap<String, serde_json::Value> {
        let deg = self.degrees();
        let mut m = BTreeMap::new();
        m.insert("n".into(), self.num_vars().into());
        m.insert("m".into(), self.num_constraints().into());
        m.insert("min_degree".into(), deg.iter().copied().min().unwrap_or(0).into());
        m.insert("max_degree".into(), deg.iter().copied().max().unwrap_or(0).into());
        m.insert("max_alphabet".into(), self.max_alphabet().to_string().into());
        m.insert("max_arity".into(), self.constraints.iter().map(|c| c.vars.len()).max().unwrap_or(0).into());
        m.insert("unweighted".into(), self.is_unweighted().into());
        m.insert("total_mass".into(), crate::util::format_rational(&self.total_mass()).into());
        m
    }
}

/// Number of variables on which two assignments disagree.
pub fn hamming(a: &[Label], b: &[Label]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::DomainMismatch(format!("lengths {} and {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Atom assignment from raw label ids.
pub fn atoms(xs: &[u32]) -> Assignment {
    xs.iter().map(|&x| Label::Atom(x)).collect()
}
