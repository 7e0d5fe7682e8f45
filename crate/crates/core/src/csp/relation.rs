use std::collections::BTreeSet;
use std::sync::Arc;

use super::alphabet::{Alphabet, Label};
use super::VarId;

/// One check of a walk-consistency constraint: the opinion of the first
/// endpoint about `a` and the opinion of the second endpoint about `b` must
/// satisfy `relation`, taken in the order of the underlying base edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WalkCheck {
    pub a: VarId,
    pub b: VarId,
    /// Index of the base constraint the walk traversed.
    pub edge: usize,
    pub relation: Relation,
    /// True when the traversal ran against the base edge's orientation,
    /// in which case the relation is evaluated on (b's value, a's value).
    pub reversed: bool,
}

/// A constraint predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    /// Explicit accepted tuples over atoms.
    Tuples { arity: usize, accept: Arc<BTreeSet<Vec<u32>>> },
    /// x + y = b (mod 2).
    Parity2(u8),
    /// Sum of all entries = b (mod 2).
    Xor { arity: usize, b: u8 },
    Equality,
    Trivial(usize),
    /// Accepts (a, map[a]).
    Projection(Arc<Vec<u32>>),
    /// Disjunction of literals; entry i is true iff x_i = 1 xor negated[i].
    Clause(Vec<bool>),
    /// All parts must hold; each part reads the listed tuple positions.
    Conjunction { arity: usize, parts: Arc<Vec<(Relation, Vec<usize>)>> },
    /// Walk consistency between two powered (view) labels.
    Walk(Arc<Vec<WalkCheck>>),
    /// Binary constraint between a local-view variable (an atom whose bit i
    /// holds tuple entry i) and the variable at `position` of `inner`.
    Sparse { inner: Arc<Relation>, position: usize },
}

impl Relation {
    pub fn arity(&self) -> usize {
        match self {
            Relation::Tuples { arity, .. } => *arity,
            Relation::Parity2(_) | Relation::Equality | Relation::Projection(_) => 2,
            Relation::Walk(_) | Relation::Sparse { .. } => 2,
            Relation::Xor { arity, .. } => *arity,
            Relation::Trivial(arity) => *arity,
            Relation::Clause(neg) => neg.len(),
            Relation::Conjunction { arity, .. } => *arity,
        }
    }

    pub fn tuples(arity: usize, accept: impl IntoIterator<Item = Vec<u32>>) -> Relation {
        Relation::Tuples { arity, accept: Arc::new(accept.into_iter().collect()) }
    }

    pub fn projection(map: Vec<u32>) -> Relation {
        Relation::Projection(Arc::new(map))
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            Relation::Trivial(_) => true,
            Relation::Walk(checks) => checks.iter().all(|c| c.relation.is_trivial()),
            Relation::Conjunction { parts, .. } => parts.iter().all(|(r, _)| r.is_trivial()),
            _ => false,
        }
    }

    /// Membership test. Total: ill-typed tuples are rejected, never panic.
    pub fn accepts(&self, t: &[&Label]) -> bool {
        if t.len() != self.arity() {
            return false;
        }
        match self {
            Relation::Tuples { accept, .. } => {
                let mut key = Vec::with_capacity(t.len());
                for l in t {
                    match l.as_atom() {
                        Some(a) => key.push(a),
                        None => return false,
                    }
                }
                accept.contains(&key)
            }
            Relation::Parity2(b) => match (t[0].as_atom(), t[1].as_atom()) {
                (Some(x), Some(y)) => ((x ^ y) & 1) as u8 == *b,
                _ => false,
            },
            Relation::Xor { b, .. } => {
                let mut acc = 0u32;
                for l in t {
                    match l.as_atom() {
                        Some(a) => acc ^= a & 1,
                        None => return false,
                    }
                }
                acc as u8 == *b
            }
            Relation::Equality => t[0] == t[1],
            Relation::Trivial(_) => true,
            Relation::Projection(map) => match (t[0].as_atom(), t[1].as_atom()) {
                (Some(a), Some(b)) => map.get(a as usize) == Some(&b),
                _ => false,
            },
            Relation::Clause(neg) => t.iter().zip(neg).any(|(l, n)| match l.as_atom() {
                Some(a) => (a == 1) != *n,
                None => false,
            }),
            Relation::Conjunction { parts, .. } => parts.iter().all(|(r, pos)| {
                let sub: Vec<&Label> = pos.iter().map(|&p| t[p]).collect();
                r.accepts(&sub)
            }),
            Relation::Walk(checks) => checks.iter().all(|c| {
                match (t[0].opinion(c.a), t[1].opinion(c.b)) {
                    (Some(x), Some(y)) => {
                        if c.reversed {
                            c.relation.accepts(&[y, x])
                        } else {
                            c.relation.accepts(&[x, y])
                        }
                    }
                    _ => false,
                }
            }),
            Relation::Sparse { inner, position } => match (t[0].as_atom(), t[1].as_atom()) {
                (Some(mask), Some(x)) => {
                    let k = inner.arity();
                    if k > 31 || mask >> k != 0 {
                        return false;
                    }
                    let bits: Vec<Label> = (0..k).map(|i| Label::Atom((mask >> i) & 1)).collect();
                    let refs: Vec<&Label> = bits.iter().collect();
                    (mask >> position) & 1 == x && inner.accepts(&refs)
                }
                _ => false,
            },
        }
    }

    /// Extensional comparison over the given per-position alphabets when the
    /// tuple space fits under `cap`; structural comparison otherwise.
    pub fn equivalent(&self, other: &Relation, alphabets: &[&Alphabet], cap: u128) -> bool {
        if self == other {
            return true;
        }
        if self.arity() != other.arity() || alphabets.len() != self.arity() {
            return false;
        }
        let total = alphabets.iter().fold(1u128, |acc, a| acc.saturating_mul(a.size()));
        if total > cap {
            return false;
        }
        let sizes: Vec<u128> = alphabets.iter().map(|a| a.size()).collect();
        let mut idx = vec![0u128; sizes.len()];
        loop {
            let labels: Vec<Label> = idx
                .iter()
                .zip(alphabets)
                .map(|(i, a)| a.label_at(*i).expect("in range"))
                .collect();
            let refs: Vec<&Label> = labels.iter().collect();
            if self.accepts(&refs) != other.accepts(&refs) {
                return false;
            }
            let mut p = 0;
            loop {
                if p == idx.len() {
                    return true;
                }
                idx[p] += 1;
                if idx[p] < sizes[p] {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    /// Short human-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Relation::Tuples { .. } => "tuples",
            Relation::Parity2(_) => "parity2",
            Relation::Xor { .. } => "xor",
            Relation::Equality => "eq",
            Relation::Trivial(_) => "trivial",
            Relation::Projection(_) => "projection",
            Relation::Clause(_) => "clause",
            Relation::Conjunction { .. } => "conj",
            Relation::Walk(_) => "walk",
            Relation::Sparse { .. } => "sparse",
        }
    }
}
