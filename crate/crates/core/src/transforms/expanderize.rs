use num_bigint::BigInt;
use num_rational::BigRational;

use crate::csp::{Constraint, Instance, Relation};
use crate::error::{Error, Result};
use crate::graph::{build_expander, Graph};

/// Superimposes a certified d0-regular expander of Trivial constraints on
/// a d-regular binary instance. Input constraints keep their indices.
pub fn expanderize(inst: &Instance, d0: usize, seed: u64) -> Result<(Instance, Graph)> {
    let g = Graph::of_instance(inst)?;
    if g.regular_degree().is_none() {
        return Err(Error::NotRegular);
    }
    let h = build_expander(inst.num_vars(), d0, seed)?;
    let mean_weight = if inst.constraints.is_empty() {
        BigRational::from_integer(1.into())
    } else {
        inst.constraints.iter().map(|c| c.weight.clone()).sum::<BigRational>()
            / BigRational::from_integer(BigInt::from(inst.num_constraints()))
    };
    let mut out = inst.clone();
    for &(a, b) in h.edges() {
        out.push(Constraint { vars: vec![a, b], relation: Relation::Trivial(2), weight: mean_weight.clone(), mult: 1 })?;
    }
    Ok((out, h))
}
