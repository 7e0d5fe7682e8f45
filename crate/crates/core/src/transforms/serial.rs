use std::sync::Arc;

use rand::Rng as _;
use serde::Serialize;

use crate::csp::{Constraint, Instance, Relation};
use crate::error::{Error, Result};
use crate::util::{mix, rng};

#[derive(Clone, Debug, Serialize)]
pub struct SerialInfo {
    pub t: usize,
    pub m_out: usize,
    /// Number of repeated constraints each input constraint appears in.
    pub usage: Vec<usize>,
    pub max_usage: usize,
    /// 2 t M / m.
    pub usage_bound: f64,
}

/// M constraints, each the conjunction of t input constraints drawn
/// uniformly with replacement. Variables are shared with the input.
pub fn serial_repeat(inst: &Instance, t: usize, m_out: usize, seed: u64) -> Result<(Instance, SerialInfo)> {
    let m = inst.num_constraints();
    if m == 0 {
        return Err(Error::EmptyInstance);
    }
    if t == 0 {
        return Err(Error::Invalid("repetition count must be positive".into()));
    }
    let mut out = Instance { constraints: Vec::with_capacity(m_out), ..inst.clone() };
    let mut usage = vec![0usize; m];
    for j in 0..m_out {
        let mut r = rng(mix(seed, j as u64));
        let mut vars = Vec::new();
        let mut parts = Vec::with_capacity(t);
        let mut seen = Vec::with_capacity(t);
        for _ in 0..t {
            let e = r.gen_range(0..m);
            let c = &inst.constraints[e];
            let pos: Vec<usize> = (vars.len()..vars.len() + c.vars.len()).collect();
            vars.extend_from_slice(&c.vars);
            parts.push((c.relation.clone(), pos));
            if !seen.contains(&e) {
                seen.push(e);
                usage[e] += 1;
            }
        }
        let arity = vars.len();
        out.push(Constraint::unit(vars, Relation::Conjunction { arity, parts: Arc::new(parts) }))?;
    }
    let max_usage = usage.iter().copied().max().unwrap_or(0);
    let info = SerialInfo { t, m_out, usage, max_usage, usage_bound: 2.0 * (t * m_out) as f64 / m as f64 };
    Ok((out, info))
}
