use serde::Serialize;

use crate::error::{Error, Result};

/// A gate reading earlier wires. Wires 0..inputs are the inputs; gate g
/// drives wire inputs + g.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Gate {
    And(usize, usize),
    Or(usize, usize),
    Not(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Circuit {
    pub inputs: usize,
    pub gates: Vec<Gate>,
    pub output: usize,
}

/// A GF(2) quadratic c + sum of linear terms + sum of products over wires.
/// The circuit accepts an input iff every polynomial vanishes on the full
/// wire assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub constant: bool,
    pub linear: Vec<usize>,
    pub quadratic: Vec<(usize, usize)>,
}

impl Poly {
    pub fn eval(&self, z: &[bool]) -> bool {
        let mut acc = self.constant;
        for &i in &self.linear {
            acc ^= z[i];
        }
        for &(i, j) in &self.quadratic {
            acc ^= z[i] & z[j];
        }
        acc
    }
}

impl Circuit {
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Number of wires, i.e. k = |X| + |C|.
    pub fn wires(&self) -> usize {
        self.inputs + self.gates.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (g, gate) in self.gates.iter().enumerate() {
            let w = self.inputs + g;
            let ok = match *gate {
                Gate::And(a, b) | Gate::Or(a, b) => a < w && b < w,
                Gate::Not(a) => a < w,
            };
            if !ok {
                return Err(Error::Invalid(format!("gate {g} reads a later wire")));
            }
        }
        if self.output >= self.wires() {
            return Err(Error::Invalid("output wire out of range".into()));
        }
        Ok(())
    }

    /// All wire values.
    pub fn eval(&self, x: &[bool]) -> Vec<bool> {
        let mut z = Vec::with_capacity(self.wires());
        z.extend_from_slice(&x[..self.inputs]);
        for gate in &self.gates {
            let v = match *gate {
                Gate::And(a, b) => z[a] & z[b],
                Gate::Or(a, b) => z[a] | z[b],
                Gate::Not(a) => !z[a],
            };
            z.push(v);
        }
        z
    }

    pub fn accepts(&self, x: &[bool]) -> bool {
        self.eval(x)[self.output]
    }

    /// Appends no-op gates AND(w0, w0) up to `size` gates.
    pub fn pad_to(&mut self, size: usize) {
        while self.gates.len() < size {
            self.gates.push(Gate::And(0, 0));
        }
    }

    /// One polynomial per gate plus z_out + 1.
    pub fn polynomials(&self) -> Vec<Poly> {
        let mut out: Vec<Poly> = self
            .gates
            .iter()
            .enumerate()
            .map(|(g, gate)| {
                let w = self.inputs + g;
                match *gate {
                    Gate::And(a, b) => Poly { constant: false, linear: vec![w], quadratic: vec![(a, b)] },
                    Gate::Or(a, b) => Poly { constant: false, linear: vec![a, b, w], quadratic: vec![(a, b)] },
                    Gate::Not(a) => Poly { constant: true, linear: vec![a, w], quadratic: vec![] },
                }
            })
            .collect();
        out.push(Poly { constant: true, linear: vec![self.output], quadratic: vec![] });
        out
    }
}

/// Incremental circuit construction.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    inputs: usize,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(inputs: usize) -> CircuitBuilder {
        assert!(inputs > 0, "a circuit needs at least one input");
        CircuitBuilder { inputs, gates: Vec::new() }
    }

    fn push(&mut self, g: Gate) -> usize {
        self.gates.push(g);
        self.inputs + self.gates.len() - 1
    }

    pub fn and(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::And(a, b))
    }

    pub fn or(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Or(a, b))
    }

    pub fn not(&mut self, a: usize) -> usize {
        self.push(Gate::Not(a))
    }

    pub fn xor(&mut self, a: usize, b: usize) -> usize {
        let o = self.or(a, b);
        let n = self.and(a, b);
        let nn = self.not(n);
        self.and(o, nn)
    }

    pub fn xnor(&mut self, a: usize, b: usize) -> usize {
        let x = self.xor(a, b);
        self.not(x)
    }

    pub fn constant(&mut self, value: bool) -> usize {
        let n = self.not(0);
        if value {
            self.or(0, n)
        } else {
            self.and(0, n)
        }
    }

    /// Conjunction of `ws`; true on an empty list.
    pub fn and_all(&mut self, ws: &[usize]) -> usize {
        match ws.split_first() {
            None => self.constant(true),
            Some((&first, rest)) => rest.iter().fold(first, |acc, &w| self.and(acc, w)),
        }
    }

    /// Disjunction of `ws`; false on an empty list.
    pub fn or_all(&mut self, ws: &[usize]) -> usize {
        match ws.split_first() {
            None => self.constant(false),
            Some((&first, rest)) => rest.iter().fold(first, |acc, &w| self.or(acc, w)),
        }
    }

    pub fn finish(self, output: usize) -> Circuit {
        Circuit { inputs: self.inputs, gates: self.gates, output }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_inputs(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u32 << n).map(move |m| (0..n).map(|i| (m >> i) & 1 == 1).collect())
    }

    #[test]
    fn gadgets_evaluate() {
        let mut b = CircuitBuilder::new(2);
        let x = b.xor(0, 1);
        let e = b.xnor(0, 1);
        let t = b.constant(true);
        let f = b.constant(false);
        let out = b.and_all(&[x, t]);
        let c = b.finish(out);
        c.validate().unwrap();
        for v in all_inputs(2) {
            let z = c.eval(&v);
            assert_eq!(z[x], v[0] ^ v[1]);
            assert_eq!(z[e], v[0] == v[1]);
            assert!(z[t] && !z[f]);
        }
    }

    #[test]
    fn polynomials_vanish_exactly_on_accepting_runs() {
        let mut b = CircuitBuilder::new(3);
        let o = b.or(0, 1);
        let n = b.not(2);
        let a = b.and(o, n);
        let mut c = b.finish(a);
        c.pad_to(6);
        let ps = c.polynomials();
        assert_eq!(ps.len(), c.size() + 1);
        for v in all_inputs(3) {
            let z = c.eval(&v);
            assert_eq!(ps.iter().all(|p| !p.eval(&z)), c.accepts(&v));
            // Any other setting of the gate wires breaks some gate equation.
            for flip in c.inputs..c.wires() {
                let mut z2 = z.clone();
                z2[flip] = !z2[flip];
                assert!(ps[..c.size()].iter().any(|p| p.eval(&z2)));
            }
        }
    }

    #[test]
    fn validate_rejects_forward_reference() {
        let c = Circuit { inputs: 1, gates: vec![Gate::And(0, 1)], output: 1 };
        assert!(c.validate().is_err());
    }
}
