use std::collections::BTreeMap;

use serde::Serialize;

use super::circuit::{Circuit, CircuitBuilder};
use super::hadamard;
use super::sparsify::NamedBuilder;
use super::tester::{emit_tester, EdgeTester, TesterConfig, TesterLayout};
use crate::csp::{format::relation_fingerprint, Alphabet, Assignment, Instance, Label, Relation, VarId};
use crate::error::{Error, Result};
use crate::util::{bits_for, format_rational};

/// Largest message length b (codewords of 2^b bits).
pub const MAX_LABEL_BITS: u32 = 12;
/// Cap on label pairs for truth-table relation circuits.
pub const RELATION_TABLE_CAP: u128 = 1 << 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AlphabetConfig {
    pub tester: TesterConfig,
    /// Pad every edge circuit to at least this many gates.
    pub pad_to: Option<usize>,
}

/// Maps the reduced instance back to the original variables.
#[derive(Clone, Debug)]
pub struct AlphabetMap {
    pub b: u32,
    pub ell: usize,
    /// X block (ell Boolean variables) of each original variable.
    pub blocks: Vec<Vec<VarId>>,
    pub alphabets: Vec<Alphabet>,
    pub var_alphabet: Vec<usize>,
    pub names: Vec<String>,
    pub testers: Vec<EdgeTester>,
}

impl AlphabetMap {
    pub fn alphabet_of(&self, v: usize) -> &Alphabet {
        &self.alphabets[self.var_alphabet[v]]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphabetSummary {
    pub b: u32,
    /// Codeword length 2^b used for X blocks.
    pub ell: usize,
    /// The literal 4 ceil(log2 |Sigma|), reported for comparison.
    pub ell_log_rule: usize,
    pub circuit_size: usize,
    pub k: usize,
    pub variables: usize,
    pub constraints: usize,
    pub layouts: Vec<TesterLayout>,
}

impl AlphabetMap {
    pub fn summary(&self, out: &Instance) -> AlphabetSummary {
        let first = self.testers.first().map(|t| &t.layout);
        AlphabetSummary {
            b: self.b,
            ell: self.ell,
            ell_log_rule: 4 * self.b as usize,
            circuit_size: first.map_or(0, |l| l.gates),
            k: first.map_or(0, |l| l.k),
            variables: out.num_vars(),
            constraints: out.num_constraints(),
            layouts: self.testers.iter().map(|t| t.layout.clone()).collect(),
        }
    }
}

fn is_boolean_indexed(a: &Alphabet) -> bool {
    a.size() == 2 && a.index_of(&Label::Atom(0)) == Some(0) && a.index_of(&Label::Atom(1)) == Some(1)
}

/// Circuit over two Hadamard blocks (wires 0..ell and ell..2 ell) that
/// accepts iff both blocks are codewords of in-range labels related by `rel`.
pub fn edge_circuit(rel: &Relation, au: &Alphabet, av: &Alphabet, b: u32) -> Result<Circuit> {
    let ell = 1usize << b;
    let mut c = CircuitBuilder::new(2 * ell);
    let bits_u: Vec<usize> = (0..b).map(|i| 1usize << i).collect();
    let bits_v: Vec<usize> = (0..b).map(|i| ell + (1usize << i)).collect();
    let mut parts = Vec::new();
    for off in [0, ell] {
        parts.push(c.not(off));
        for s in 1..ell {
            let low = s & s.wrapping_neg();
            if low == s {
                continue;
            }
            let x = c.xor(off + (s ^ low), off + low);
            parts.push(c.xnor(off + s, x));
        }
    }
    for (bits, a) in [(&bits_u, au), (&bits_v, av)] {
        if a.size() < 1u128 << b {
            parts.push(less_than(&mut c, bits, a.size()));
        }
    }
    let r = relation_wire(&mut c, rel, au, av, &bits_u, &bits_v)?;
    parts.push(r);
    let out = c.and_all(&parts);
    Ok(c.finish(out))
}

/// Wire for (bits as little-endian integer) < m, with 0 < m < 2^bits.len().
fn less_than(c: &mut CircuitBuilder, bits: &[usize], m: u128) -> usize {
    let mut lt: Option<usize> = None;
    let mut eq: Option<usize> = None;
    for i in (0..bits.len()).rev() {
        let x = bits[i];
        if (m >> i) & 1 == 1 {
            let nx = c.not(x);
            let here = match eq {
                Some(e) => c.and(e, nx),
                None => nx,
            };
            lt = Some(match lt {
                Some(l) => c.or(l, here),
                None => here,
            });
            eq = Some(match eq {
                Some(e) => c.and(e, x),
                None => x,
            });
        } else {
            let nx = c.not(x);
            eq = Some(match eq {
                Some(e) => c.and(e, nx),
                None => nx,
            });
        }
    }
    lt.unwrap_or_else(|| c.constant(false))
}

fn relation_wire(
    c: &mut CircuitBuilder,
    rel: &Relation,
    au: &Alphabet,
    av: &Alphabet,
    bu: &[usize],
    bv: &[usize],
) -> Result<usize> {
    if rel.is_trivial() {
        return Ok(c.constant(true));
    }
    match rel {
        Relation::Equality if au == av => {
            let eqs: Vec<usize> = bu.iter().zip(bv).map(|(&x, &y)| c.xnor(x, y)).collect();
            return Ok(c.and_all(&eqs));
        }
        Relation::Parity2(p) if is_boolean_indexed(au) && is_boolean_indexed(av) => {
            let x = c.xor(bu[0], bv[0]);
            return Ok(if *p & 1 == 1 { x } else { c.not(x) });
        }
        _ => {}
    }
    let (su, sv) = (au.size(), av.size());
    if su.saturating_mul(sv) > RELATION_TABLE_CAP {
        return Err(Error::TesterTooLarge(format!("relation table {su} x {sv} exceeds the cap")));
    }
    let lu = au.labels(su)?;
    let lv = av.labels(sv)?;
    let neg_u: Vec<usize> = bu.iter().map(|&x| c.not(x)).collect();
    let neg_v: Vec<usize> = bv.iter().map(|&x| c.not(x)).collect();
    let mut terms = Vec::new();
    for (i, x) in lu.iter().enumerate() {
        for (j, y) in lv.iter().enumerate() {
            if !rel.accepts(&[x, y]) {
                continue;
            }
            let mut lits = Vec::with_capacity(bu.len() * 2);
            for p in 0..bu.len() {
                lits.push(if (i >> p) & 1 == 1 { bu[p] } else { neg_u[p] });
                lits.push(if (j >> p) & 1 == 1 { bv[p] } else { neg_v[p] });
            }
            terms.push(c.and_all(&lits));
        }
    }
    Ok(c.or_all(&terms))
}

/// Alphabet reduction: every variable becomes a block of 2^b Boolean
/// variables holding the Hadamard codeword of its label index; every
/// constraint becomes a sparsified assignment tester over its circuit.
pub fn alphabet_reduce(inst: &Instance, cfg: &AlphabetConfig) -> Result<(Instance, AlphabetMap)> {
    if let Some(i) = inst.constraints.iter().position(|c| c.vars.len() != 2) {
        return Err(Error::NonBinaryInstance(i));
    }
    let b = bits_for(inst.max_alphabet());
    if b > MAX_LABEL_BITS {
        return Err(Error::TesterTooLarge(format!("labels need {b} bits; at most {MAX_LABEL_BITS} are supported")));
    }
    let ell = 1usize << b;
    let mut builder = NamedBuilder::new();
    let block_names: Vec<Vec<String>> =
        (0..inst.num_vars()).map(|u| (0..ell).map(|j| format!("x{u}.{j}")).collect()).collect();
    let blocks: Vec<Vec<VarId>> = block_names
        .iter()
        .map(|names| names.iter().map(|n| builder.var(n, &Alphabet::Boolean)).collect())
        .collect();
    let mut circuits = inst
        .constraints
        .iter()
        .map(|c| edge_circuit(&c.relation, inst.alphabet_of(c.vars[0]), inst.alphabet_of(c.vars[1]), b))
        .collect::<Result<Vec<_>>>()?;
    let size = circuits.iter().map(Circuit::size).max().unwrap_or(0).max(cfg.pad_to.unwrap_or(0));
    for c in &mut circuits {
        c.pad_to(size);
    }
    let mut testers = Vec::with_capacity(circuits.len());
    for (e, (c, circuit)) in inst.constraints.iter().zip(&circuits).enumerate() {
        let x_names: Vec<String> =
            block_names[c.vars[0]].iter().chain(&block_names[c.vars[1]]).cloned().collect();
        let t = emit_tester(circuit, &x_names, &format!("e{e}."), &cfg.tester, &c.mass(), &mut builder)?;
        testers.push(t);
    }
    let (mut out, names) = builder.finish()?;
    if let Some(m) = &inst.marked {
        out.marked = Some(m.iter().flat_map(|&u| blocks[u].iter().copied()).collect());
    }
    let map = AlphabetMap {
        b,
        ell,
        blocks,
        alphabets: inst.alphabets.clone(),
        var_alphabet: inst.var_alphabet.clone(),
        names,
        testers,
    };
    Ok((out, map))
}

/// Hadamard blocks for sigma plus honest tester tables on every edge.
pub fn lift_alphabet(inst: &Instance, map: &AlphabetMap, out_vars: usize, sigma: &[Label]) -> Result<Assignment> {
    inst.check_assignment(sigma)?;
    let mut out = vec![Label::Atom(0); out_vars];
    let words: Vec<Vec<bool>> = sigma
        .iter()
        .enumerate()
        .map(|(u, l)| hadamard::encode(inst.alphabet_of(u).index_of(l).expect("checked"), map.b))
        .collect();
    for (u, block) in map.blocks.iter().enumerate() {
        for (&v, &bit) in block.iter().zip(&words[u]) {
            out[v] = Label::Atom(bit as u32);
        }
    }
    for (c, t) in inst.constraints.iter().zip(&map.testers) {
        let x: Vec<bool> = words[c.vars[0]].iter().chain(&words[c.vars[1]]).copied().collect();
        t.lift_into(&x, &mut out);
    }
    Ok(out)
}

/// Size of the multiset difference between two instances whose variables
/// are identified by name (max of the two one-sided differences).
pub fn named_constraint_diff(a: &Instance, an: &[String], b: &Instance, bn: &[String]) -> usize {
    fn keyed(i: &Instance, names: &[String]) -> BTreeMap<(Vec<String>, String, String), i64> {
        let mut m = BTreeMap::new();
        for c in &i.constraints {
            let key = (
                c.vars.iter().map(|&v| names[v].clone()).collect(),
                relation_fingerprint(&c.relation),
                format_rational(&c.mass()),
            );
            *m.entry(key).or_insert(0) += 1;
        }
        m
    }
    let (ka, kb) = (keyed(a, an), keyed(b, bn));
    let mut only_a = 0i64;
    let mut only_b = 0i64;
    for (k, &n) in &ka {
        let d = n - kb.get(k).copied().unwrap_or(0);
        if d > 0 {
            only_a += d;
        }
    }
    for (k, &n) in &kb {
        let d = n - ka.get(k).copied().unwrap_or(0);
        if d > 0 {
            only_b += d;
        }
    }
    only_a.max(only_b) as usize
}

/// Largest circuit size over both instances, for padding pairs alike.
pub fn common_pad(insts: &[&Instance]) -> Result<usize> {
    let mut size = 0;
    for inst in insts {
        let b = bits_for(inst.max_alphabet());
        for c in &inst.constraints {
            let circ = edge_circuit(&c.relation, inst.alphabet_of(c.vars[0]), inst.alphabet_of(c.vars[1]), b)?;
            size = size.max(circ.size());
        }
    }
    Ok(size)
}
