//! Locality-t algorithms and the edge-deletion sensitivity bound they obey.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Pow, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::csp::{hamming, Assignment, AssignmentDistribution, Label};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::oracles::emd_exact;
use crate::util::{format_rational, mix, mix3, rat, rat_int};

/// The radius-t view of one vertex: the induced subgraph on its ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallView {
    pub center: usize,
    pub t: usize,
    /// Sorted vertex ids.
    pub vertices: Vec<usize>,
    /// Distance from the center, aligned with `vertices`.
    pub depth: Vec<usize>,
    /// Induced edges as (u, v) vertex ids, u <= v, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl BallView {
    pub fn degree_of(&self, v: usize) -> usize {
        self.edges.iter().map(|&(a, b)| (a == v) as usize + (b == v) as usize).sum()
    }
}

pub fn extract_ball(g: &Graph, v: usize, t: usize) -> BallView {
    let d = g.distances(v);
    let vertices: Vec<usize> = (0..g.n()).filter(|&w| d[w] <= t).collect();
    let depth = vertices.iter().map(|&w| d[w]).collect();
    let mut edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|&&(a, b)| d[a] <= t && d[b] <= t)
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    BallView { center: v, t, vertices, depth, edges }
}

type Rule = dyn Fn(&BallView, u64) -> Label + Send + Sync;

/// A per-vertex rule applied to the vertex's t-ball and a shared seed. The
/// rule never sees anything else, so locality holds by construction.
#[derive(Clone)]
pub struct LocalAlgorithm {
    pub name: String,
    pub t: usize,
    rule: Arc<Rule>,
}

impl std::fmt::Debug for LocalAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LocalAlgorithm({}, t={})", self.name, self.t)
    }
}

impl LocalAlgorithm {
    pub fn new(name: &str, t: usize, rule: impl Fn(&BallView, u64) -> Label + Send + Sync + 'static) -> Self {
        LocalAlgorithm { name: name.into(), t, rule: Arc::new(rule) }
    }

    pub fn constant(label: u32) -> Self {
        LocalAlgorithm::new("constant", 0, move |_, _| Label::Atom(label))
    }

    /// In the set iff the center's degree is even.
    pub fn even_degree() -> Self {
        LocalAlgorithm::new("even-degree", 1, |b, _| Label::Atom((b.degree_of(b.center) % 2 == 0) as u32))
    }

    /// In the set iff the center's seeded priority beats every other vertex
    /// of its t-ball (an independent set for t >= 1).
    pub fn local_max(t: usize) -> Self {
        LocalAlgorithm::new("local-max", t, |b, seed| {
            let p = |v: usize| mix(seed, v as u64);
            let mine = p(b.center);
            Label::Atom(b.vertices.iter().all(|&w| w == b.center || p(w) < mine) as u32)
        })
    }

    /// A seeded color in 0..3 per vertex, then the parity of the number of
    /// ball edges whose endpoints share a color.
    pub fn color_parity(t: usize) -> Self {
        LocalAlgorithm::new("color-parity", t, |b, seed| {
            let c = |v: usize| mix3(seed, 0xc0, v as u64) % 3;
            let mono = b.edges.iter().filter(|&&(x, y)| c(x) == c(y)).count();
            Label::Atom((mono % 2) as u32)
        })
    }

    pub fn by_name(name: &str, t: usize) -> Result<Self> {
        match name {
            "constant" => Ok(LocalAlgorithm::constant(0)),
            "even-degree" => Ok(LocalAlgorithm::even_degree()),
            "local-max" => Ok(LocalAlgorithm::local_max(t)),
            "color-parity" => Ok(LocalAlgorithm::color_parity(t)),
            _ => Err(Error::Invalid(format!("unknown local rule {name}"))),
        }
    }
}

pub fn run_local(alg: &LocalAlgorithm, g: &Graph, seed: u64) -> Assignment {
    (0..g.n()).into_par_iter().map(|v| (alg.rule)(&extract_ball(g, v, alg.t), seed)).collect()
}

/// Vertices whose induced t-ball contains edge e.
pub fn affected_set(g: &Graph, e: usize, t: usize) -> Result<Vec<usize>> {
    let &(a, b) = g.edges().get(e).ok_or(Error::UnknownEdge(e))?;
    let (da, db) = (g.distances(a), g.distances(b));
    Ok((0..g.n()).filter(|&v| da[v] <= t && db[v] <= t).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeCheck {
    pub edge: usize,
    pub affected: usize,
    /// Mean Hamming distance with shared seeds.
    pub coupling: BigRational,
    /// Exact distance between the two empirical output laws.
    pub emd: BigRational,
    /// Vertices outside the affected set that changed (must be none).
    pub leaked: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonsignalReport {
    pub algorithm: String,
    pub t: usize,
    pub max_degree: usize,
    /// 2 Delta^t.
    pub bound: BigRational,
    pub edges: Vec<EdgeCheck>,
}

impl NonsignalReport {
    pub fn holds(&self) -> bool {
        self.edges.iter().all(|e| {
            rat_int(e.affected as u128) <= self.bound
                && e.coupling <= rat_int(e.affected as u128)
                && e.emd <= e.coupling
                && e.leaked == 0
        })
    }

    pub fn max_affected(&self) -> usize {
        self.edges.iter().map(|e| e.affected).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "algorithm": self.algorithm,
            "t": self.t,
            "max_degree": self.max_degree,
            "bound": format_rational(&self.bound),
            "holds": self.holds(),
            "edges": self.edges.iter().map(|e| json!({
                "edge": e.edge,
                "affected": e.affected,
                "coupling": format_rational(&e.coupling),
                "emd": format_rational(&e.emd),
                "leaked": e.leaked,
            })).collect::<Vec<_>>(),
        })
    }
}

/// For every edge e: the affected set, and the shared-seed distance between
/// runs on G and G - e over `samples` seeds.
pub fn check_nonsignaling_sensitivity(alg: &LocalAlgorithm, g: &Graph, samples: usize, seed: u64) -> Result<NonsignalReport> {
    if samples == 0 {
        return Err(Error::Invalid("at least one sample is required".into()));
    }
    let delta = g.max_degree();
    let bound = rat(2, 1) * Pow::pow(rat_int(delta as u128), alg.t);
    let seeds: Vec<u64> = (0..samples).map(|s| mix(seed, s as u64)).collect();
    let base: Vec<Assignment> = seeds.iter().map(|&s| run_local(alg, g, s)).collect();
    let edges = (0..g.num_edges())
        .into_par_iter()
        .map(|e| {
            let affected: BTreeSet<usize> = affected_set(g, e, alg.t)?.into_iter().collect();
            let h = g.remove_edge(e)?;
            let other: Vec<Assignment> = seeds.iter().map(|&s| run_local(alg, &h, s)).collect();
            let mut total = 0usize;
            let mut leaked = 0usize;
            for (a, b) in base.iter().zip(&other) {
                total += hamming(a, b)?;
                leaked += (0..a.len()).filter(|&v| a[v] != b[v] && !affected.contains(&v)).count();
            }
            let coupling = rat(total as i64, samples as i64);
            let emd = if coupling.is_zero() {
                BigRational::zero()
            } else {
                emd_exact(
                    &AssignmentDistribution::from_samples(base.clone()),
                    &AssignmentDistribution::from_samples(other),
                )?
                .0
            };
            Ok(EdgeCheck { edge: e, affected: affected.len(), coupling, emd, leaked })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NonsignalReport { algorithm: alg.name.clone(), t: alg.t, max_degree: delta, bound, edges })
}
