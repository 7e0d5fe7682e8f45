//! Boolean gadgets: label cover to E3SAT, and E3SAT to 3LIN.

use serde::Serialize;

use crate::csp::{Alphabet, Assignment, Constraint, Instance, Label, Relation, VarId};
use crate::error::{Error, Result};
use crate::util::bits_for;

/// Bit layout of an E3SAT encoding.
#[derive(Clone, Debug, Serialize)]
pub struct E3SatEncoding {
    /// First bit variable and bit count of each original variable.
    pub blocks: Vec<(VarId, u32)>,
    #[serde(skip)]
    pub alphabets: Vec<Alphabet>,
    pub aux_vars: usize,
    /// Clauses per compiled constraint.
    pub k: usize,
    pub width: usize,
}

/// A literal: variable and negation flag.
type Lit = (VarId, bool);

/// Clauses emitted for one wide clause: 2 for width 2 (with a fresh helper),
/// 1 for width 3, w - 2 for a Tseitin chain otherwise.
fn clauses_for(width: usize) -> usize {
    match width {
        0 | 1 => panic!("clauses have width at least 2"),
        2 => 2,
        3 => 1,
        w => w - 2,
    }
}

fn decode_bits(bits: &[bool], alphabet: &Alphabet) -> Label {
    let idx = bits.iter().enumerate().fold(0u128, |a, (i, &b)| a | ((b as u128) << i));
    alphabet.label_at(idx).unwrap_or_else(|| alphabet.first_label())
}

/// Encodes each label in ceil(log2 |Sigma|) bits (out-of-range patterns read
/// as the first label) and compiles every binary constraint into exactly K
/// three-literal clauses forbidding its rejected bit patterns.
pub fn to_e3sat(inst: &Instance) -> Result<(Instance, E3SatEncoding)> {
    if let Some(i) = inst.constraints.iter().position(|c| c.vars.len() != 2) {
        return Err(Error::NotLabelCover(format!("constraint {i} is not binary")));
    }
    let mut blocks = Vec::with_capacity(inst.num_vars());
    let mut next = 0;
    for v in 0..inst.num_vars() {
        let b = bits_for(inst.alphabet_of(v).size());
        if b > 12 {
            return Err(Error::TooLarge(format!("variable {v} needs {b} bits")));
        }
        blocks.push((next, b));
        next += b as usize;
    }
    let width = inst
        .constraints
        .iter()
        .map(|c| (blocks[c.vars[0]].1 + blocks[c.vars[1]].1) as usize)
        .max()
        .unwrap_or(2);
    let k = (1usize << width) * clauses_for(width);
    // Helpers live in a fixed slot per (constraint, bit pattern) so that
    // changing one constraint leaves every other block untouched.
    let per_pattern = (width.max(4) - 3).max(1);
    let slot = (1usize << width) * per_pattern;
    let total_vars = next + slot * inst.num_constraints();
    let mut compiled: Vec<Vec<[Lit; 3]>> = Vec::with_capacity(inst.num_constraints());
    for (e, c) in inst.constraints.iter().enumerate() {
        let (u, v) = (c.vars[0], c.vars[1]);
        let (au, av) = (inst.alphabet_of(u), inst.alphabet_of(v));
        let (bu, bv) = (blocks[u].1 as usize, blocks[v].1 as usize);
        let mut lits_of = Vec::new();
        for i in 0..bu {
            lits_of.push(blocks[u].0 + i);
        }
        for i in 0..bv {
            lits_of.push(blocks[v].0 + i);
        }
        let mut out: Vec<[Lit; 3]> = Vec::new();
        for pu in 0..1usize << bu {
            let bits_u: Vec<bool> = (0..bu).map(|i| (pu >> i) & 1 == 1).collect();
            let lu = decode_bits(&bits_u, au);
            for pv in 0..1usize << bv {
                let bits_v: Vec<bool> = (0..bv).map(|i| (pv >> i) & 1 == 1).collect();
                let lv = decode_bits(&bits_v, av);
                let same_var_clash = u == v && pu != pv;
                if same_var_clash || c.relation.accepts(&[&lu, &lv]) {
                    continue;
                }
                // Clause true unless the bits equal this rejected pattern.
                let wide: Vec<Lit> = bits_u
                    .iter()
                    .chain(&bits_v)
                    .zip(&lits_of)
                    .map(|(&bit, &var)| (var, bit))
                    .collect();
                let mut aux = next + e * slot + ((pv << bu) | pu) * per_pattern;
                out.extend(narrow(&wide, &mut aux));
            }
        }
        compiled.push(out);
    }
    let mut res = Instance::uniform(total_vars, Alphabet::Boolean);
    for (e, mut block) in compiled.into_iter().enumerate() {
        if block.len() > k {
            return Err(Error::Invalid(format!("constraint {e} compiled to {} clauses", block.len())));
        }
        if block.is_empty() {
            let p = blocks[inst.constraints[e].vars[0]].0;
            block.push([(p, false), (p, true), (p, false)]);
        }
        let first = block[0];
        block.resize(k, first);
        for cl in block {
            res.push(Constraint::unit(cl.iter().map(|l| l.0).collect(), Relation::Clause(cl.iter().map(|l| l.1).collect())))?;
        }
    }
    let enc = E3SatEncoding { blocks, alphabets: (0..inst.num_vars()).map(|v| inst.alphabet_of(v).clone()).collect(), aux_vars: total_vars - next, k, width };
    Ok((res, enc))
}

/// Width-3 clauses equivalent (over fresh helpers) to the clause `wide`.
fn narrow(wide: &[Lit], aux: &mut usize) -> Vec<[Lit; 3]> {
    match wide.len() {
        2 => {
            let p = *aux;
            *aux += 1;
            vec![[wide[0], wide[1], (p, false)], [wide[0], wide[1], (p, true)]]
        }
        3 => vec![[wide[0], wide[1], wide[2]]],
        w => {
            let mut out = Vec::with_capacity(w - 2);
            let mut y = *aux;
            *aux += 1;
            out.push([wide[0], wide[1], (y, false)]);
            for &l in &wide[2..w - 2] {
                let y2 = *aux;
                *aux += 1;
                out.push([(y, true), l, (y2, false)]);
                y = y2;
            }
            out.push([(y, true), wide[w - 2], wide[w - 1]]);
            out
        }
    }
}

/// Bits of sigma with helper variables set to satisfy every clause.
pub fn lift_e3sat(sat: &Instance, enc: &E3SatEncoding, sigma: &[Label]) -> Result<Assignment> {
    let mut out = vec![Label::Atom(0); sat.num_vars()];
    for (v, l) in sigma.iter().enumerate() {
        let idx = enc.alphabets[v]
            .index_of(l)
            .ok_or_else(|| Error::InvalidLabel { var: v, label: l.to_string() })?;
        let (start, b) = enc.blocks[v];
        for i in 0..b as usize {
            out[start + i] = Label::Atom(((idx >> i) & 1) as u32);
        }
    }
    let n_bits: usize = enc.blocks.iter().map(|b| b.1 as usize).sum();
    // Helpers: chains are satisfied left to right by propagating truth.
    let truth = |out: &[Label], (v, neg): Lit| (out[v] == Label::Atom(1)) != neg;
    for _ in 0..3 {
        for c in &sat.constraints {
            let Relation::Clause(neg) = &c.relation else { continue };
            let lits: Vec<Lit> = c.vars.iter().copied().zip(neg.iter().copied()).collect();
            if lits.iter().any(|&l| truth(&out, l)) {
                continue;
            }
            if let Some(&(v, n)) = lits.iter().rev().find(|(v, _)| *v >= n_bits) {
                out[v] = Label::Atom(if n { 0 } else { 1 });
            }
        }
    }
    Ok(out)
}

/// Decodes the bit blocks; helpers are ignored.
pub fn recover_e3sat(enc: &E3SatEncoding, bits: &[Label]) -> Assignment {
    enc.blocks
        .iter()
        .zip(&enc.alphabets)
        .map(|(&(start, b), a)| {
            let v: Vec<bool> = (0..b as usize).map(|i| bits[start + i] == Label::Atom(1)).collect();
            decode_bits(&v, a)
        })
        .collect()
}

/// Seven parity constraints per clause: every non-empty subset S of the
/// literals gets sum_{l in S} l = 1. A satisfied clause meets exactly 4.
pub fn e3sat_to_3lin(sat: &Instance) -> Result<Instance> {
    let mut out = Instance { constraints: Vec::with_capacity(7 * sat.num_constraints()), ..sat.clone() };
    for (i, c) in sat.constraints.iter().enumerate() {
        let Relation::Clause(neg) = &c.relation else {
            return Err(Error::NotE3Sat(format!("constraint {i} is not a clause")));
        };
        if neg.len() != 3 {
            return Err(Error::NotE3Sat(format!("clause {i} has {} literals", neg.len())));
        }
        for subset in 1..8u32 {
            let pos: Vec<usize> = (0..3).filter(|p| (subset >> p) & 1 == 1).collect();
            let negs = pos.iter().filter(|&&p| neg[p]).count() as u8;
            out.push(Constraint {
                vars: pos.iter().map(|&p| c.vars[p]).collect(),
                relation: Relation::Xor { arity: pos.len(), b: (1 + negs) % 2 },
                weight: c.weight.clone(),
                mult: c.mult,
            })?;
        }
    }
    Ok(out)
}
