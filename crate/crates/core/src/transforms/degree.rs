use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::csp::{Assignment, Constraint, Instance, Label, Relation, VarId};
use crate::error::{Error, Result};
use crate::graph::build_expander;
use crate::util::mix;

/// Original variable -> its cloud, and the inverse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CloudMap {
    pub clouds: Vec<Vec<VarId>>,
    pub owner: Vec<VarId>,
    /// Label used for an original variable whose cloud is empty.
    #[serde(skip)]
    pub fallback: Vec<Label>,
}

impl CloudMap {
    pub fn cloud_sizes(&self) -> Vec<usize> {
        self.clouds.iter().map(Vec::len).collect()
    }
}

/// Replaces every variable by a cloud of deg(v) copies wired by a
/// certified d0-regular expander of Equality constraints. Constraint i of
/// the input becomes constraint i of the output (between the cloud copies
/// owning its two endpoint slots); cloud edges follow, cloud by cloud.
pub fn degree_reduce(inst: &Instance, d0: usize, seed: u64) -> Result<(Instance, CloudMap)> {
    if let Some(i) = inst.constraints.iter().position(|c| c.vars.len() != 2) {
        return Err(Error::NonBinaryInstance(i));
    }
    let n = inst.num_vars();
    let deg = inst.degrees();
    let mut clouds = Vec::with_capacity(n);
    let mut owner = Vec::new();
    for v in 0..n {
        let start = owner.len();
        clouds.push((start..start + deg[v]).collect::<Vec<_>>());
        owner.extend(std::iter::repeat_n(v, deg[v]));
    }
    let mut out = Instance {
        alphabets: inst.alphabets.clone(),
        var_alphabet: owner.iter().map(|&v| inst.var_alphabet[v]).collect(),
        constraints: Vec::with_capacity(inst.num_constraints() * (d0 + 1)),
        marked: None,
    };
    let mut next_slot = vec![0usize; n];
    for c in &inst.constraints {
        let mut vars = Vec::with_capacity(2);
        for &v in &c.vars {
            vars.push(clouds[v][next_slot[v]]);
            next_slot[v] += 1;
        }
        out.push(Constraint { vars, relation: c.relation.clone(), weight: c.weight.clone(), mult: c.mult })?;
    }
    let mean_weight = if inst.constraints.is_empty() {
        BigRational::from_integer(1.into())
    } else {
        inst.constraints.iter().map(|c| c.weight.clone()).sum::<BigRational>()
            / BigRational::from_integer(BigInt::from(inst.num_constraints()))
    };
    for (v, cloud) in clouds.iter().enumerate() {
        if cloud.is_empty() {
            continue;
        }
        let g = build_expander(cloud.len(), d0, mix(seed, v as u64))?;
        for &(a, b) in g.edges() {
            out.push(Constraint {
                vars: vec![cloud[a], cloud[b]],
                relation: Relation::Equality,
                weight: mean_weight.clone(),
                mult: 1,
            })?;
        }
    }
    if let Some(m) = &inst.marked {
        let s: BTreeSet<VarId> = m.iter().flat_map(|&v| clouds[v].iter().copied()).collect();
        out.marked = Some(s);
    }
    let fallback = (0..n).map(|v| inst.alphabet_of(v).first_label()).collect();
    Ok((out, CloudMap { clouds, owner, fallback }))
}

/// Copies each label to its whole cloud.
pub fn lift_degree(map: &CloudMap, sigma: &[Label]) -> Result<Assignment> {
    if sigma.len() != map.clouds.len() {
        return Err(Error::DomainMismatch("assignment does not match the cloud map".into()));
    }
    Ok(map.owner.iter().map(|&v| sigma[v].clone()).collect())
}
