//! Assignment tester over a circuit: a linearity-tested Hadamard table L of
//! the full wire assignment z = (x, y), a table Q of z (x) z, tensor and
//! circuit-polynomial checks, and consistency with the input block X.
//!
//! Table cells are addressed by index vectors. Small dimensions use explicit
//! bit vectors. Large ones use recipes (seeded random vectors, basis
//! vectors, tensors, random combinations of the circuit polynomials) whose
//! canonical form names the cell; inner products with z are evaluated
//! lazily, so tables of size 2^k are never materialized.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::circuit::{Circuit, Poly};
use super::sparsify::{local_view, sparsify_into, NamedBuilder};
use crate::csp::{Alphabet, Assignment, Instance, Label, Relation, VarId};
use crate::error::{Error, Result};
use crate::util::{mix, mix3, rat};

/// Dimensions up to this many bits use explicit index vectors.
pub const EXPLICIT_DIM: usize = 22;
/// Families with at most this many constraints are enumerated in full.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 12;
/// Exhaustive soundness evaluation refuses families larger than this.
pub const EXHAUSTIVE_CAP: u128 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TesterConfig {
    /// Constraints drawn per family when it is too large to enumerate.
    pub samples: usize,
    pub enum_cap: u128,
    pub seed: u64,
}

impl Default for TesterConfig {
    fn default() -> Self {
        TesterConfig { samples: 16, enum_cap: DEFAULT_ENUM_CAP, seed: 0x7e57 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Family {
    Linearity,
    QuadLinearity,
    Tensor,
    Circuit,
    Consistency,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::Linearity, Family::QuadLinearity, Family::Tensor, Family::Circuit, Family::Consistency];

    pub fn arity(self) -> usize {
        match self {
            Family::Linearity | Family::QuadLinearity | Family::Consistency => 3,
            Family::Tensor => 6,
            Family::Circuit => 4,
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyLayout {
    pub family: Family,
    pub arity: usize,
    /// Size of the full family, e.g. "2^18" or "2^3*2".
    pub full_count: String,
    pub enumerated: bool,
    pub emitted: usize,
    /// Weight of one emitted constraint.
    pub weight: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TesterLayout {
    pub k: usize,
    pub x_len: usize,
    pub gates: usize,
    pub polynomials: usize,
    pub explicit_l: bool,
    pub explicit_q: bool,
    pub families: Vec<FamilyLayout>,
    /// Per-constraint weights of the full families, as powers of two.
    pub nominal_weights: Vec<String>,
    /// lcm of the full-family weight denominators.
    pub normalizer: String,
    /// Max occurrences of one table cell among emitted circuit checks.
    pub alpha: usize,
    /// Trivial padding per circuit-check slot, alpha * w4 * N; recorded,
    /// not materialized.
    pub padding_per_slot: String,
    /// Max occurrences of one X variable among emitted constraints.
    pub x_degree: usize,
    pub binary_constraints: usize,
}

/// Recipe atom of a symbolic index vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Basis(usize),
    Seeded(u64),
    Tensor(u64, u64),
    Lin(u64),
    Quad(u64),
}

/// An index vector into L (dimension k) or Q (dimension k^2).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IndexVector {
    Explicit(u128),
    Symbolic(Vec<Atom>),
}

impl IndexVector {
    fn add(&self, other: &IndexVector) -> IndexVector {
        match (self, other) {
            (IndexVector::Explicit(a), IndexVector::Explicit(b)) => IndexVector::Explicit(a ^ b),
            (IndexVector::Symbolic(a), IndexVector::Symbolic(b)) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    if j == b.len() || (i < a.len() && a[i] < b[j]) {
                        out.push(a[i].clone());
                        i += 1;
                    } else if i == a.len() || b[j] < a[i] {
                        out.push(b[j].clone());
                        j += 1;
                    } else {
                        i += 1;
                        j += 1;
                    }
                }
                IndexVector::Symbolic(out)
            }
            _ => unreachable!("explicit and symbolic vectors never share a table"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    L(IndexVector),
    Q(IndexVector),
    X(usize),
}

/// Random coefficient vector r over the polynomials.
#[derive(Clone, Copy, Debug)]
enum RVal {
    Bits(u128),
    Seeded(u64),
}

/// One emitted (pre-sparsification) constraint.
#[derive(Clone, Debug)]
pub struct Emitted {
    pub family: Family,
    pub cells: Vec<Cell>,
    pub vars: Vec<VarId>,
    pub relation: Relation,
    pub w_var: VarId,
}

/// Everything needed to lift an accepting input into the tester.
#[derive(Clone, Debug)]
pub struct EdgeTester {
    pub circuit: Arc<Circuit>,
    pub layout: TesterLayout,
    pub emitted: Vec<Emitted>,
    space_seed: u64,
}

fn mask(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

fn tensor_relation() -> Relation {
    let accept = (0..64u32).filter_map(|m| {
        let b: Vec<u32> = (0..6).map(|i| (m >> i) & 1).collect();
        (((b[0] ^ b[1]) & (b[2] ^ b[3])) == (b[4] ^ b[5])).then_some(b)
    });
    Relation::tuples(6, accept)
}

struct Space {
    polys: Vec<Poly>,
    k: usize,
    l_explicit: bool,
    q_explicit: bool,
    seed: u64,
    cache: HashMap<u64, (u64, u64)>,
}

impl Space {
    fn new(circuit: &Circuit, seed: u64) -> Space {
        let k = circuit.wires();
        Space {
            polys: circuit.polynomials(),
            k,
            l_explicit: k <= EXPLICIT_DIM,
            q_explicit: k * k <= EXPLICIT_DIM,
            seed,
            cache: HashMap::new(),
        }
    }

    fn l_word(&self, id: u64, j: usize) -> u64 {
        mix3(mix(self.seed, 0x11), id, j as u64)
    }

    fn q_word(&self, id: u64, row: usize, j: usize) -> u64 {
        mix3(mix(mix(self.seed, 0x22), id), row as u64, j as u64)
    }

    fn explicit_l(&self, id: u64) -> u128 {
        (self.l_word(id, 0) as u128 | (self.l_word(id, 1) as u128) << 64) & mask(self.k)
    }

    fn seeded_l(&self, id: u64) -> IndexVector {
        if self.l_explicit {
            IndexVector::Explicit(self.explicit_l(id))
        } else {
            IndexVector::Symbolic(vec![Atom::Seeded(id)])
        }
    }

    fn seeded_q(&self, id: u64) -> IndexVector {
        if self.q_explicit {
            IndexVector::Explicit((self.q_word(id, 0, 0) as u128) & mask(self.k * self.k))
        } else {
            IndexVector::Symbolic(vec![Atom::Seeded(id)])
        }
    }

    fn basis(&self, i: usize) -> IndexVector {
        if self.l_explicit {
            IndexVector::Explicit(1u128 << i)
        } else {
            IndexVector::Symbolic(vec![Atom::Basis(i)])
        }
    }

    fn tensor_explicit(&self, x: u128, y: u128) -> u128 {
        let mut out = 0u128;
        for i in 0..self.k {
            for j in 0..self.k {
                if (x >> i) & 1 == 1 && (y >> j) & 1 == 1 {
                    out |= 1u128 << (i * self.k + j);
                }
            }
        }
        out
    }

    fn tensor(&self, xid: u64, yid: u64) -> IndexVector {
        if self.q_explicit {
            IndexVector::Explicit(self.tensor_explicit(self.explicit_l(xid), self.explicit_l(yid)))
        } else {
            IndexVector::Symbolic(vec![Atom::Tensor(xid, yid)])
        }
    }

    fn r_bit(&self, r: RVal, p: usize) -> bool {
        match r {
            RVal::Bits(b) => (b >> p) & 1 == 1,
            RVal::Seeded(id) => mix3(mix(self.seed, 0x33), id, p as u64) & 1 == 1,
        }
    }

    /// (constant, linear positions, quadratic positions) of sum r_P P.
    fn combination(&self, r: RVal) -> (bool, BTreeSet<usize>, BTreeSet<usize>) {
        let (mut c, mut lin, mut quad) = (false, BTreeSet::new(), BTreeSet::new());
        for (p, poly) in self.polys.iter().enumerate() {
            if !self.r_bit(r, p) {
                continue;
            }
            c ^= poly.constant;
            for &i in &poly.linear {
                if !lin.remove(&i) {
                    lin.insert(i);
                }
            }
            for &(i, j) in &poly.quadratic {
                let pos = i * self.k + j;
                if !quad.remove(&pos) {
                    quad.insert(pos);
                }
            }
        }
        (c, lin, quad)
    }

    /// (s0, s, t) with the vectors in this space's representation.
    fn circuit_check(&mut self, r: RVal) -> (bool, IndexVector, IndexVector) {
        let (c, lin, quad) = self.combination(r);
        let s = if self.l_explicit {
            IndexVector::Explicit(lin.iter().fold(0u128, |a, &i| a | 1u128 << i))
        } else {
            let RVal::Seeded(id) = r else { unreachable!("symbolic spaces sample r") };
            self.cache.entry(id).or_insert_with(|| (hash_set(&lin), hash_set(&quad)));
            IndexVector::Symbolic(vec![Atom::Lin(id)])
        };
        let t = if self.q_explicit {
            IndexVector::Explicit(quad.iter().fold(0u128, |a, &i| a | 1u128 << i))
        } else {
            let RVal::Seeded(id) = r else { unreachable!("symbolic spaces sample r") };
            self.cache.entry(id).or_insert_with(|| (hash_set(&lin), hash_set(&quad)));
            IndexVector::Symbolic(vec![Atom::Quad(id)])
        };
        (c, s, t)
    }

    fn name(&self, prefix: &str, cell: &Cell, x_names: &[String]) -> String {
        let (table, v) = match cell {
            Cell::X(i) => return x_names[*i].clone(),
            Cell::L(v) => ('L', v),
            Cell::Q(v) => ('Q', v),
        };
        match v {
            IndexVector::Explicit(bits) => format!("{prefix}{table}{bits:x}"),
            IndexVector::Symbolic(atoms) if atoms.is_empty() => format!("{prefix}{table}0"),
            IndexVector::Symbolic(atoms) => {
                let parts: Vec<String> = atoms
                    .iter()
                    .map(|a| match a {
                        Atom::Basis(i) => format!("e{i}"),
                        Atom::Seeded(id) => format!("s{id:x}"),
                        Atom::Tensor(x, y) => format!("t{x:x}.{y:x}"),
                        Atom::Lin(id) => format!("l{:x}", self.cache[id].0),
                        Atom::Quad(id) => format!("q{:x}", self.cache[id].1),
                    })
                    .collect();
                format!("{prefix}{table}{}", parts.join("+"))
            }
        }
    }
}

fn hash_set(s: &BTreeSet<usize>) -> u64 {
    s.iter().fold(0x5eed_u64 ^ s.len() as u64, |h, &i| mix(h, i as u64))
}

fn pow2_count(e: u128) -> u128 {
    if e >= 127 {
        u128::MAX
    } else {
        1u128 << e
    }
}

/// Exact family sizes, saturating.
fn family_count(f: Family, k: usize, x_len: usize, polys: usize) -> u128 {
    let (k, p) = (k as u128, polys as u128);
    match f {
        Family::Linearity => pow2_count(2 * k),
        Family::QuadLinearity => pow2_count(2 * k * k),
        Family::Tensor => pow2_count(4 * k + k * k),
        Family::Circuit => pow2_count(p + k + k * k),
        Family::Consistency => pow2_count(k).saturating_mul(x_len as u128),
    }
}

fn family_exponent(f: Family, k: usize, polys: usize) -> usize {
    match f {
        Family::Linearity => 2 * k,
        Family::QuadLinearity => 2 * k * k,
        Family::Tensor => 4 * k + k * k,
        Family::Circuit => polys + k + k * k,
        Family::Consistency => k,
    }
}

/// Emits the five families of the tester for `circuit`, whose input wire i
/// is the existing Boolean variable `x_names[i]`. Table and local-view
/// variables are named with `prefix`. Each family carries total weight
/// `scale`.
pub fn emit_tester(
    circuit: &Circuit,
    x_names: &[String],
    prefix: &str,
    cfg: &TesterConfig,
    scale: &BigRational,
    b: &mut NamedBuilder,
) -> Result<EdgeTester> {
    circuit.validate()?;
    if x_names.len() != circuit.inputs {
        return Err(Error::Invalid("one X variable per circuit input".into()));
    }
    let mut sp = Space::new(circuit, cfg.seed);
    let k = sp.k;
    let x_len = circuit.inputs;
    let npoly = sp.polys.len();
    if !sp.l_explicit && cfg.samples == 0 {
        return Err(Error::TesterTooLarge(format!("k = {k} needs a positive sample budget")));
    }
    let tensor_rel = tensor_relation();
    let mut emitted = Vec::new();
    let mut families = Vec::new();
    for f in Family::ALL {
        let full = family_count(f, k, x_len, npoly);
        let enumerate = full <= cfg.enum_cap;
        let mut rows: Vec<(Vec<Cell>, Relation)> = Vec::new();
        let id = |s: usize, slot: u64| mix3(cfg.seed, f.tag(), (s as u64) * 8 + slot);
        let xor3 = Relation::Xor { arity: 3, b: 0 };
        match f {
            Family::Linearity => {
                let pairs: Vec<(IndexVector, IndexVector)> = if enumerate {
                    let n = 1u128 << k;
                    (0..n)
                        .flat_map(|x| (0..n).map(move |y| (IndexVector::Explicit(x), IndexVector::Explicit(y))))
                        .collect()
                } else {
                    (0..cfg.samples).map(|s| (sp.seeded_l(id(s, 0)), sp.seeded_l(id(s, 1)))).collect()
                };
                for (x, y) in pairs {
                    let xy = x.add(&y);
                    rows.push((vec![Cell::L(x), Cell::L(y), Cell::L(xy)], xor3.clone()));
                }
            }
            Family::QuadLinearity => {
                let pairs: Vec<(IndexVector, IndexVector)> = if enumerate {
                    let n = 1u128 << (k * k);
                    (0..n)
                        .flat_map(|x| (0..n).map(move |y| (IndexVector::Explicit(x), IndexVector::Explicit(y))))
                        .collect()
                } else {
                    (0..cfg.samples).map(|s| (sp.seeded_q(id(s, 0)), sp.seeded_q(id(s, 1)))).collect()
                };
                for (x, y) in pairs {
                    let xy = x.add(&y);
                    rows.push((vec![Cell::Q(x), Cell::Q(y), Cell::Q(xy)], xor3.clone()));
                }
            }
            Family::Tensor => {
                let mut push = |x: IndexVector, x2: IndexVector, y: IndexVector, y2: IndexVector, xy: IndexVector, q: IndexVector| {
                    let cells = vec![
                        Cell::L(x.add(&x2)),
                        Cell::L(x2),
                        Cell::L(y.add(&y2)),
                        Cell::L(y2),
                        Cell::Q(xy.add(&q)),
                        Cell::Q(q),
                    ];
                    rows.push((cells, tensor_rel.clone()));
                };
                if enumerate {
                    let n = 1u128 << k;
                    for x in 0..n {
                        for x2 in 0..n {
                            for y in 0..n {
                                for y2 in 0..n {
                                    let xy = sp.tensor_explicit(x, y);
                                    for q in 0..1u128 << (k * k) {
                                        push(
                                            IndexVector::Explicit(x),
                                            IndexVector::Explicit(x2),
                                            IndexVector::Explicit(y),
                                            IndexVector::Explicit(y2),
                                            IndexVector::Explicit(xy),
                                            IndexVector::Explicit(q),
                                        );
                                    }
                                }
                            }
                        }
                    }
                } else {
                    for s in 0..cfg.samples {
                        let (xi, yi) = (id(s, 0), id(s, 2));
                        push(
                            sp.seeded_l(xi),
                            sp.seeded_l(id(s, 1)),
                            sp.seeded_l(yi),
                            sp.seeded_l(id(s, 3)),
                            sp.tensor(xi, yi),
                            sp.seeded_q(id(s, 4)),
                        );
                    }
                }
            }
            Family::Circuit => {
                let draws: Vec<(RVal, IndexVector, IndexVector)> = if enumerate {
                    let mut v = Vec::new();
                    for r in 0..1u128 << npoly {
                        for x in 0..1u128 << k {
                            for q in 0..1u128 << (k * k) {
                                v.push((RVal::Bits(r), IndexVector::Explicit(x), IndexVector::Explicit(q)));
                            }
                        }
                    }
                    v
                } else {
                    (0..cfg.samples)
                        .map(|s| (RVal::Seeded(id(s, 0)), sp.seeded_l(id(s, 1)), sp.seeded_q(id(s, 2))))
                        .collect()
                };
                for (r, x, q) in draws {
                    let (s0, s, t) = sp.circuit_check(r);
                    let cells = vec![Cell::L(s.add(&x)), Cell::L(x), Cell::Q(t.add(&q)), Cell::Q(q)];
                    rows.push((cells, Relation::Xor { arity: 4, b: s0 as u8 }));
                }
            }
            Family::Consistency => {
                let draws: Vec<(IndexVector, usize)> = if enumerate {
                    (0..1u128 << k)
                        .flat_map(|x| (0..x_len).map(move |i| (IndexVector::Explicit(x), i)))
                        .collect()
                } else {
                    (0..cfg.samples)
                        .map(|s| (sp.seeded_l(id(s, 0)), (id(s, 7) % x_len as u64) as usize))
                        .collect()
                };
                for (x, i) in draws {
                    let ei = sp.basis(i).add(&x);
                    rows.push((vec![Cell::L(ei), Cell::L(x), Cell::X(i)], xor3.clone()));
                }
            }
        }
        let weight = rat(1, rows.len() as i64) * scale;
        let full_count = match f {
            Family::Consistency => format!("2^{k}*{x_len}"),
            _ => format!("2^{}", family_exponent(f, k, npoly)),
        };
        families.push(FamilyLayout {
            family: f,
            arity: f.arity(),
            full_count,
            enumerated: enumerate,
            emitted: rows.len(),
            weight: crate::util::format_rational(&weight),
        });
        for (idx, (cells, relation)) in rows.into_iter().enumerate() {
            let vars: Vec<VarId> = cells
                .iter()
                .map(|c| {
                    let name = sp.name(prefix, c, x_names);
                    b.var(&name, &Alphabet::Boolean)
                })
                .collect();
            let w_name = format!("{prefix}w{}.{idx}", f.tag());
            let w_var = sparsify_into(b, &vars, &relation, &weight, 1, &w_name)?;
            emitted.push(Emitted { family: f, cells, vars, relation, w_var });
        }
    }
    let mut step4: HashMap<VarId, usize> = HashMap::new();
    let mut xdeg: HashMap<VarId, usize> = HashMap::new();
    for e in &emitted {
        for (c, &v) in e.cells.iter().zip(&e.vars) {
            match c {
                Cell::X(_) => *xdeg.entry(v).or_insert(0) += 1,
                _ if e.family == Family::Circuit => *step4.entry(v).or_insert(0) += 1,
                _ => {}
            }
        }
    }
    let alpha = step4.values().copied().max().unwrap_or(0);
    let exps: Vec<usize> = Family::ALL.iter().map(|&f| family_exponent(f, k, npoly)).collect();
    let nominal_weights: Vec<String> = Family::ALL
        .iter()
        .zip(&exps)
        .map(|(&f, e)| if f == Family::Consistency { format!("2^-{e}/{x_len}") } else { format!("2^-{e}") })
        .collect();
    let nexp = *exps.iter().max().expect("five families");
    let odd = {
        let mut m = x_len;
        let mut e2 = 0;
        while m % 2 == 0 {
            m /= 2;
            e2 += 1;
        }
        (m, e2)
    };
    let n_exp = nexp.max(k + odd.1);
    let normalizer = if odd.0 == 1 { format!("2^{n_exp}") } else { format!("{}*2^{n_exp}", odd.0) };
    let pad_exp = n_exp - exps[3];
    let padding_per_slot = if odd.0 == 1 {
        format!("{alpha}*2^{pad_exp}")
    } else {
        format!("{}*2^{pad_exp}", alpha * odd.0)
    };
    let layout = TesterLayout {
        k,
        x_len,
        gates: circuit.size(),
        polynomials: npoly,
        explicit_l: sp.l_explicit,
        explicit_q: sp.q_explicit,
        families,
        nominal_weights,
        normalizer,
        alpha,
        padding_per_slot,
        x_degree: xdeg.values().copied().max().unwrap_or(0),
        binary_constraints: emitted.iter().map(|e| e.vars.len()).sum(),
    };
    Ok(EdgeTester { circuit: Arc::new(circuit.clone()), layout, emitted, space_seed: cfg.seed })
}

/// Lazily evaluates inner products against a fixed wire assignment z.
struct Evaluator {
    sp: Space,
    z: Vec<bool>,
    words: Vec<u64>,
    support: Vec<usize>,
    lin: Vec<bool>,
    quad: Vec<bool>,
}

impl Evaluator {
    fn new(circuit: &Circuit, seed: u64, z: Vec<bool>) -> Evaluator {
        let sp = Space::new(circuit, seed);
        let mut words = vec![0u64; z.len().div_ceil(64)];
        for (i, &b) in z.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        let support = (0..z.len()).filter(|&i| z[i]).collect();
        let lin = sp.polys.iter().map(|p| p.linear.iter().fold(false, |a, &i| a ^ z[i])).collect();
        let quad = sp.polys.iter().map(|p| p.quadratic.iter().fold(false, |a, &(i, j)| a ^ (z[i] & z[j]))).collect();
        Evaluator { sp, z, words, support, lin, quad }
    }

    fn seeded_l(&self, id: u64) -> bool {
        let mut acc = 0u32;
        for (j, w) in self.words.iter().enumerate() {
            acc ^= (self.sp.l_word(id, j) & w).count_ones();
        }
        acc & 1 == 1
    }

    fn l(&self, v: &IndexVector) -> bool {
        match v {
            IndexVector::Explicit(bits) => (0..self.sp.k).fold(false, |a, i| a ^ ((bits >> i) & 1 == 1 && self.z[i])),
            IndexVector::Symbolic(atoms) => atoms.iter().fold(false, |acc, a| {
                acc ^ match a {
                    Atom::Basis(i) => self.z[*i],
                    Atom::Seeded(id) => self.seeded_l(*id),
                    Atom::Lin(id) => (0..self.lin.len()).fold(false, |x, p| x ^ (self.lin[p] && self.sp.r_bit(RVal::Seeded(*id), p))),
                    Atom::Tensor(..) | Atom::Quad(_) => unreachable!("not an L index"),
                }
            }),
        }
    }

    fn q(&self, v: &IndexVector) -> bool {
        let k = self.sp.k;
        match v {
            IndexVector::Explicit(bits) => (0..k * k).fold(false, |a, p| a ^ ((bits >> p) & 1 == 1 && self.z[p / k] && self.z[p % k])),
            IndexVector::Symbolic(atoms) => atoms.iter().fold(false, |acc, a| {
                acc ^ match a {
                    Atom::Seeded(id) => {
                        let mut par = 0u32;
                        for &i in &self.support {
                            for (j, w) in self.words.iter().enumerate() {
                                par ^= (self.sp.q_word(*id, i, j) & w).count_ones();
                            }
                        }
                        par & 1 == 1
                    }
                    Atom::Tensor(x, y) => {
                        let xv = if self.sp.l_explicit { self.l(&IndexVector::Explicit(self.sp.explicit_l(*x))) } else { self.seeded_l(*x) };
                        let yv = if self.sp.l_explicit { self.l(&IndexVector::Explicit(self.sp.explicit_l(*y))) } else { self.seeded_l(*y) };
                        xv & yv
                    }
                    Atom::Quad(id) => (0..self.quad.len()).fold(false, |x, p| x ^ (self.quad[p] && self.sp.r_bit(RVal::Seeded(*id), p))),
                    Atom::Basis(_) | Atom::Lin(_) => unreachable!("not a Q index"),
                }
            }),
        }
    }
}

impl EdgeTester {
    /// Writes the honest tables and local views for input `x` into `out`
    /// (which must already hold the X variables).
    pub fn lift_into(&self, x: &[bool], out: &mut [Label]) {
        let z = self.circuit.eval(x);
        let ev = Evaluator::new(&self.circuit, self.space_seed, z);
        for e in &self.emitted {
            let mut vals = Vec::with_capacity(e.cells.len());
            for (c, &v) in e.cells.iter().zip(&e.vars) {
                let bit = match c {
                    Cell::L(iv) => ev.l(iv),
                    Cell::Q(iv) => ev.q(iv),
                    Cell::X(i) => ev.z[*i],
                };
                out[v] = Label::Atom(bit as u32);
                vals.push(bit as u32);
            }
            out[e.w_var] = Label::Atom(local_view(&vals));
        }
    }
}

/// Stand-alone tester instance over fresh X variables x0..x{n-1}.
#[derive(Clone, Debug)]
pub struct TesterInstance {
    pub instance: Instance,
    pub names: Vec<String>,
    pub x_vars: Vec<VarId>,
    pub tester: EdgeTester,
}

pub fn assignment_tester(circuit: &Circuit, cfg: &TesterConfig) -> Result<TesterInstance> {
    let mut b = NamedBuilder::new();
    let x_names: Vec<String> = (0..circuit.inputs).map(|i| format!("x{i}")).collect();
    let x_vars = x_names.iter().map(|n| b.var(n, &Alphabet::Boolean)).collect();
    let tester = emit_tester(circuit, &x_names, "", cfg, &BigRational::from_integer(1.into()), &mut b)?;
    let (instance, names) = b.finish()?;
    Ok(TesterInstance { instance, names, x_vars, tester })
}

impl TesterInstance {
    /// Honest proof for input `x` (all zeros elsewhere first).
    pub fn lift(&self, x: &[bool]) -> Assignment {
        let mut out = vec![Label::Atom(0); self.instance.num_vars()];
        for (&v, &bit) in self.x_vars.iter().zip(x) {
            out[v] = Label::Atom(bit as u32);
        }
        self.tester.lift_into(x, &mut out);
        out
    }
}

/// Violated fractions of the full families for explicit tables, plus the
/// violated weight of the sparsified tester under the best local views.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableViolation {
    pub per_family: Vec<BigRational>,
    /// Average over the five families.
    pub unsparsified: BigRational,
    /// Violated binary weight over total binary weight; every violated
    /// family constraint costs exactly one binary constraint.
    pub sparsified: BigRational,
}

/// Exhaustive evaluation of the full tester on explicit tables: `l` has
/// 2^k entries, `q` has 2^(k^2), indices as bit vectors (bit i*k+j of a Q
/// index pairs wires i and j).
pub fn exhaustive_violation(circuit: &Circuit, alpha: &[bool], l: &[bool], q: &[bool]) -> Result<TableViolation> {
    let k = circuit.wires();
    let polys = circuit.polynomials();
    for f in Family::ALL {
        if family_count(f, k, circuit.inputs, polys.len()) > EXHAUSTIVE_CAP {
            return Err(Error::TesterTooLarge(format!("family {f:?} too large for exhaustive evaluation at k = {k}")));
        }
    }
    if l.len() != 1 << k || q.len() != 1 << (k * k) || alpha.len() != circuit.inputs {
        return Err(Error::DomainMismatch("table sizes must be 2^k and 2^(k^2)".into()));
    }
    let nl = 1usize << k;
    let nq = 1usize << (k * k);
    let tensor = |x: usize, y: usize| {
        let mut out = 0usize;
        for i in 0..k {
            for j in 0..k {
                if (x >> i) & 1 == 1 && (y >> j) & 1 == 1 {
                    out |= 1 << (i * k + j);
                }
            }
        }
        out
    };
    let mut bad = [0u128; 5];
    for x in 0..nl {
        for y in 0..nl {
            bad[0] += (l[x] ^ l[y] ^ l[x ^ y]) as u128;
        }
    }
    for x in 0..nq {
        for y in 0..nq {
            bad[1] += (q[x] ^ q[y] ^ q[x ^ y]) as u128;
        }
    }
    for x in 0..nl {
        for x2 in 0..nl {
            let a = l[x ^ x2] ^ l[x2];
            for y in 0..nl {
                let t = tensor(x, y);
                for y2 in 0..nl {
                    let prod = a & (l[y ^ y2] ^ l[y2]);
                    for qq in 0..nq {
                        bad[2] += (prod != (q[t ^ qq] ^ q[qq])) as u128;
                    }
                }
            }
        }
    }
    for r in 0..1usize << polys.len() {
        let (mut c, mut s, mut t) = (false, 0usize, 0usize);
        for (p, poly) in polys.iter().enumerate() {
            if (r >> p) & 1 == 1 {
                c ^= poly.constant;
                for &i in &poly.linear {
                    s ^= 1 << i;
                }
                for &(i, j) in &poly.quadratic {
                    t ^= 1 << (i * k + j);
                }
            }
        }
        for x in 0..nl {
            for qq in 0..nq {
                bad[3] += (c ^ l[s ^ x] ^ l[x] ^ q[t ^ qq] ^ q[qq]) as u128;
            }
        }
    }
    for x in 0..nl {
        for (i, &a) in alpha.iter().enumerate() {
            bad[4] += (l[x ^ (1 << i)] ^ l[x] ^ a) as u128;
        }
    }
    let per_family: Vec<BigRational> = Family::ALL
        .iter()
        .zip(bad)
        .map(|(&f, b)| {
            BigRational::new(BigInt::from(b), BigInt::from(family_count(f, k, circuit.inputs, polys.len())))
        })
        .collect();
    let sum: BigRational = per_family.iter().sum();
    let arity_total: usize = Family::ALL.iter().map(|f| f.arity()).sum();
    Ok(TableViolation {
        unsparsified: &sum / BigRational::from_integer(BigInt::from(5)),
        sparsified: &sum / BigRational::from_integer(BigInt::from(arity_total)),
        per_family,
    })
}

/// Honest explicit tables for wire assignment z (k = z.len()).
pub fn hadamard_tables(z: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let k = z.len();
    let zl = z.iter().enumerate().fold(0usize, |a, (i, &b)| a | ((b as usize) << i));
    let l = (0..1usize << k).map(|x| (x & zl).count_ones() % 2 == 1).collect();
    let mut zz = 0usize;
    for i in 0..k {
        for j in 0..k {
            if z[i] && z[j] {
                zz |= 1 << (i * k + j);
            }
        }
    }
    let q = (0..1usize << (k * k)).map(|x| (x & zz).count_ones() % 2 == 1).collect();
    (l, q)
}

/// Total weight check helper: every family sums to one.
pub fn family_mass(inst: &Instance, tester: &EdgeTester, f: Family) -> BigRational {
    let ws: BTreeSet<VarId> = tester.emitted.iter().filter(|e| e.family == f).map(|e| e.w_var).collect();
    inst.constraints
        .iter()
        .filter(|c| ws.contains(&c.vars[0]))
        .map(|c| c.mass())
        .sum::<BigRational>()
        / BigRational::from_integer(BigInt::from(f.arity()))
}
