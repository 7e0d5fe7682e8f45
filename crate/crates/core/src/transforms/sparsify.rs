use std::collections::HashMap;
use std::sync::Arc;

use num_rational::BigRational;

use crate::csp::{Alphabet, Constraint, Instance, Relation, VarId};
use crate::error::{Error, Result};

/// Largest arity a local-view variable can hold (|Sigma_0| <= 64).
pub const MAX_SPARSE_ARITY: usize = 6;

/// Builds an instance whose variables are addressed by stable names.
#[derive(Clone, Debug, Default)]
pub struct NamedBuilder {
    pub names: Vec<String>,
    index: HashMap<String, VarId>,
    alphabets: Vec<Alphabet>,
    var_alphabet: Vec<usize>,
    constraints: Vec<Constraint>,
}

impl NamedBuilder {
    pub fn new() -> NamedBuilder {
        NamedBuilder::default()
    }

    /// Id of the variable called `name`, created on first use.
    pub fn var(&mut self, name: &str, alphabet: &Alphabet) -> VarId {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let a = match self.alphabets.iter().position(|x| x == alphabet) {
            Some(a) => a,
            None => {
                self.alphabets.push(alphabet.clone());
                self.alphabets.len() - 1
            }
        };
        let v = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        self.var_alphabet.push(a);
        v
    }

    pub fn get(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn finish(self) -> Result<(Instance, Vec<String>)> {
        let mut inst = Instance {
            alphabets: if self.alphabets.is_empty() { vec![Alphabet::Boolean] } else { self.alphabets },
            var_alphabet: self.var_alphabet,
            constraints: Vec::new(),
            marked: None,
        };
        for c in self.constraints {
            inst.push(c)?;
        }
        Ok((inst, self.names))
    }
}

/// Replaces the Boolean constraint `relation(vars)` by a local-view
/// variable `w_name` and one binary Sparse constraint per position.
pub fn sparsify_into(
    b: &mut NamedBuilder,
    vars: &[VarId],
    relation: &Relation,
    weight: &BigRational,
    mult: u64,
    w_name: &str,
) -> Result<VarId> {
    let arity = vars.len();
    if arity > MAX_SPARSE_ARITY {
        return Err(Error::ArityTooHigh(arity));
    }
    let w = b.var(w_name, &Alphabet::Product { base: Box::new(Alphabet::Boolean), count: arity });
    let inner = Arc::new(relation.clone());
    for (p, &v) in vars.iter().enumerate() {
        b.push(Constraint {
            vars: vec![w, v],
            relation: Relation::Sparse { inner: inner.clone(), position: p },
            weight: weight.clone(),
            mult,
        });
    }
    Ok(w)
}

/// Sparsifies a Boolean instance of arity at most 6. Original variables
/// keep their ids; the local-view variable of constraint i is n + i.
pub fn sparsify(inst: &Instance) -> Result<Instance> {
    let mut b = NamedBuilder::new();
    for v in 0..inst.num_vars() {
        if inst.alphabet_of(v).size() != 2 {
            return Err(Error::DomainMismatch(format!("variable {v} is not Boolean")));
        }
        b.var(&format!("v{v}"), &Alphabet::Boolean);
    }
    for (i, c) in inst.constraints.iter().enumerate() {
        sparsify_into(&mut b, &c.vars, &c.relation, &c.weight, c.mult, &format!("w{i}"))?;
    }
    let (mut out, _) = b.finish()?;
    out.marked = inst.marked.clone();
    Ok(out)
}

/// Local-view mask of a tuple of Boolean atoms (bit i = entry i).
pub fn local_view(values: &[u32]) -> u32 {
    values.iter().enumerate().fold(0, |acc, (i, &x)| acc | ((x & 1) << i))
}

/// Extends a Boolean assignment with the true local views.
pub fn lift_sparsify(inst: &Instance, sigma: &[crate::csp::Label]) -> Result<crate::csp::Assignment> {
    inst.check_assignment(sigma)?;
    let mut out = sigma.to_vec();
    for c in &inst.constraints {
        let vals: Vec<u32> = c.vars.iter().map(|&v| sigma[v].as_atom().unwrap_or(0)).collect();
        out.push(crate::csp::Label::Atom(local_view(&vals)));
    }
    Ok(out)
}
