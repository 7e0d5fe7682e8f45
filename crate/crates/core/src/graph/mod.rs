//! Multigraphs, spectral expansion, certified random expanders and exact
//! random-walk kernels.

mod walk;

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;

use crate::csp::Instance;
use crate::error::{Error, Result};
use crate::util::{mix, rng};

pub use walk::{
    bsrw_kernel, bsrw_weights, enumerate_walks, sample_asrw, sample_asrw_full, AsrwOutcome, Walk,
    WalkKernel, KERNEL_CAP, WALK_ENUM_CAP,
};

/// Dense eigensolve cap.
pub const DENSE_CAP: usize = 4096;
/// Retry cap for expander certification.
pub const EXPANDER_ATTEMPTS: u64 = 64;

/// An undirected multigraph. Self-loops add two to the degree and appear
/// twice in the incidence list, matching a diagonal adjacency entry of 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    pub fn new(n: usize) -> Graph {
        Graph { n, edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<usize> {
        if u >= self.n || v >= self.n {
            return Err(Error::UnknownVariable(u.max(v)));
        }
        let id = self.edges.len();
        self.edges.push((u, v));
        self.adj[u].push((v, id));
        self.adj[v].push((u, id));
        Ok(id)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Incidences at `v` as (other endpoint, edge id).
    pub fn incidences(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// The common degree, if every vertex has the same one.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first().map_or(0, Vec::len);
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            if u == v {
                a[(u, u)] += 2.0;
            } else {
                a[(u, v)] += 1.0;
                a[(v, u)] += 1.0;
            }
        }
        a
    }

    /// BFS distances from `s`; unreachable vertices get `usize::MAX`.
    pub fn distances(&self, s: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.n];
        let mut q = VecDeque::new();
        d[s] = 0;
        q.push_back(s);
        while let Some(u) = q.pop_front() {
            for &(w, _) in &self.adj[u] {
                if d[w] == usize::MAX {
                    d[w] = d[u] + 1;
                    q.push_back(w);
                }
            }
        }
        d
    }

    /// Vertices within distance `t` of `v`, sorted.
    pub fn ball(&self, v: usize, t: usize) -> Vec<usize> {
        let d = self.distances(v);
        (0..self.n).filter(|&w| d[w] <= t).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.distances(0).iter().all(|&d| d != usize::MAX)
    }

    /// The graph with edge `e` removed (edge ids above `e` shift down).
    pub fn remove_edge(&self, e: usize) -> Result<Graph> {
        if e >= self.edges.len() {
            return Err(Error::UnknownEdge(e));
        }
        let mut edges = self.edges.clone();
        edges.remove(e);
        Graph::from_edges(self.n, &edges)
    }

    /// Edge-list text: header `n d` (d is the max degree), then `u v` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.max_degree());
        for (u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Graph> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let perr = |line: usize, m: &str| Error::Parse { location: format!("line {}", line + 1), message: m.into() };
        let (hl, header) = lines.next().ok_or_else(|| perr(0, "missing header"))?;
        let n: usize = header
            .split_whitespace()
            .next()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| perr(hl, "header must be `n d`"))?;
        let mut g = Graph::new(n);
        for (i, l) in lines {
            let mut it = l.split_whitespace().map(|x| x.parse::<usize>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) if u < n && v < n => {
                    g.add_edge(u, v)?;
                }
                _ => return Err(perr(i, "expected `u v` with endpoints below n")),
            }
        }
        Ok(g)
    }

    /// Underlying graph of a binary instance: one edge per constraint,
    /// edge id equal to the constraint index.
    pub fn of_instance(inst: &Instance) -> Result<Graph> {
        let mut g = Graph::new(inst.num_vars());
        for (i, c) in inst.constraints.iter().enumerate() {
            if c.vars.len() != 2 {
                return Err(Error::NonBinaryInstance(i));
            }
            g.add_edge(c.vars[0], c.vars[1])?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v).expect("in range");
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            g.add_edge(u, (u + 1) % n).expect("in range");
        }
        g
    }
}

/// lambda(G) = max(lambda_2, |lambda_n|) with a residual-based error bound.
#[derive(Clone, Debug)]
pub struct Lambda {
    pub value: f64,
    /// Every reported eigenvalue lies within this distance of a true one.
    pub error_bound: f64,
    /// Full spectrum, descending, when the dense solver ran.
    pub spectrum: Option<Vec<f64>>,
}

pub fn lambda(g: &Graph) -> Result<Lambda> {
    lambda_with_cap(g, DENSE_CAP)
}

pub fn lambda_with_cap(g: &Graph, cap: usize) -> Result<Lambda> {
    if g.n == 0 {
        return Err(Error::Invalid("lambda of an empty graph".into()));
    }
    if g.n > cap {
        return lambda_iterative(g);
    }
    let a = g.adjacency();
    let eig = SymmetricEigen::new(a.clone());
    let mut err = 0f64;
    for i in 0..g.n {
        let v = eig.eigenvectors.column(i);
        let r = &a * v - v * eig.eigenvalues[i];
        err = err.max(r.norm() / v.norm());
    }
    let mut spec: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    spec.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    let value = if g.n == 1 { 0.0 } else { spec[1].max(spec[g.n - 1].abs()) };
    Ok(Lambda { value, error_bound: err, spectrum: Some(spec) })
}

/// Power iteration on A - (d/n)J for regular graphs above the dense cap.
fn lambda_iterative(g: &Graph) -> Result<Lambda> {
    let d = g.regular_degree().ok_or_else(|| {
        Error::TooLarge(format!("n = {} above the dense cap and the graph is irregular", g.n))
    })? as f64;
    let n = g.n;
    let apply = |x: &[f64]| -> Vec<f64> {
        let mean: f64 = x.iter().sum::<f64>() / n as f64;
        let mut y = vec![0.0; n];
        for (u, inc) in g.adj.iter().enumerate() {
            y[u] = inc.iter().map(|&(w, _)| x[w]).sum::<f64>() - d * mean;
        }
        y
    };
    let mut r = rng(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut r, -1.0..1.0)).collect();
    let mut mu = 0.0;
    let mut resid = f64::INFINITY;
    for _ in 0..5000 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let y = apply(&x);
        mu = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        resid = y.iter().zip(&x).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt();
        // iterate on B^2 so that the dominant |eigenvalue| wins regardless of sign
        x = apply(&y);
        if resid < 1e-10 {
            break;
        }
    }
    Ok(Lambda { value: mu.abs(), error_bound: resid, spectrum: None })
}

/// A d0-regular multigraph on n vertices certified to satisfy
/// lambda <= d0/2, from the configuration model with per-attempt seeds.
pub fn build_expander(n: usize, d0: usize, seed: u64) -> Result<Graph> {
    if n == 0 || d0 == 0 || (n * d0) % 2 == 1 {
        return Err(Error::ExpanderNotFound { n, d0 });
    }
    if n == 1 {
        let mut g = Graph::new(1);
        for _ in 0..d0 / 2 {
            g.add_edge(0, 0)?;
        }
        return Ok(g);
    }
    let bound = d0 as f64 / 2.0 + 1e-9;
    for attempt in 0..EXPANDER_ATTEMPTS {
        let mut r = rng(mix(seed, attempt));
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d0)).collect();
        stubs.shuffle(&mut r);
        let mut g = Graph::new(n);
        for p in stubs.chunks(2) {
            g.add_edge(p[0], p[1])?;
        }
        let l = lambda(&g)?;
        if l.value + l.error_bound <= bound {
            return Ok(g);
        }
    }
    Err(Error::ExpanderNotFound { n, d0 })
}

/// Multigraph union on a shared vertex set.
pub fn superimpose(g: &Graph, h: &Graph) -> Result<Graph> {
    if g.n != h.n {
        return Err(Error::SizeMismatch(g.n, h.n));
    }
    let mut out = g.clone();
    for &(u, v) in &h.edges {
        out.add_edge(u, v)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_spectrum() {
        let l = lambda(&Graph::complete(4)).unwrap();
        assert!((l.value - 1.0).abs() < 1e-9);
        let s = l.spectrum.unwrap();
        assert!((s[0] - 3.0).abs() < 1e-9);
        assert!(l.error_bound <= 1e-9);
    }

    #[test]
    fn cycle_spectrum() {
        let l = lambda(&Graph::cycle(4)).unwrap();
        assert!((l.value - 2.0).abs() < 1e-9);
        let s = l.spectrum.unwrap();
        for (x, y) in s.iter().zip([2.0, 0.0, 0.0, -2.0]) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn regular_top_eigenvalue_is_degree() {
        let g = build_expander(16, 16, 3).unwrap();
        let s = lambda(&g).unwrap().spectrum.unwrap();
        assert!((s[0] - 16.0).abs() < 1e-9);
    }

    #[test]
    fn iterative_lambda_matches_dense() {
        let g = build_expander(12, 12, 5).unwrap();
        let dense = lambda(&g).unwrap();
        let it = lambda_with_cap(&g, 4).unwrap();
        assert!((dense.value - it.value).abs() < 1e-6, "{} vs {}", dense.value, it.value);
    }

    #[test]
    fn expander_examples() {
        let g = build_expander(2, 3, 0).unwrap();
        assert_eq!(g.regular_degree(), Some(3));
        assert!(lambda(&g).unwrap().value <= 1.5 + 1e-9);
        let g = build_expander(1, 4, 0).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.degree(0), 4);
        assert!(matches!(build_expander(1, 3, 0), Err(Error::ExpanderNotFound { .. })));
        assert!(matches!(build_expander(3, 3, 0), Err(Error::ExpanderNotFound { .. })));
        assert_eq!(build_expander(10, 12, 9).unwrap(), build_expander(10, 12, 9).unwrap());
        // small degrees cannot be certified on larger vertex sets
        assert!(matches!(build_expander(16, 3, 1), Err(Error::ExpanderNotFound { .. })));
    }

    #[test]
    fn superimpose_examples() {
        let c = Graph::cycle(4);
        assert_eq!(superimpose(&c, &Graph::new(4)).unwrap(), c);
        let cc = superimpose(&c, &c).unwrap();
        assert_eq!(cc.regular_degree(), Some(4));
        assert!(matches!(superimpose(&c, &Graph::new(3)), Err(Error::SizeMismatch(4, 3))));
    }

    #[test]
    fn text_round_trip() {
        let g = build_expander(6, 8, 1).unwrap();
        let back = Graph::from_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert!(Graph::from_text("3 2\n0 7\n").is_err());
    }

    #[test]
    fn balls_and_distances() {
        let g = Graph::cycle(8);
        assert_eq!(g.ball(0, 1), vec![0, 1, 7]);
        assert_eq!(g.distances(0)[4], 4);
        assert!(g.is_connected());
        assert!(!Graph::new(2).is_connected());
    }
}
