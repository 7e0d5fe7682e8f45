use std::collections::BTreeSet;

use serde::Serialize;

use crate::csp::{Instance, Label, VarId};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Enumeration cap on labels per variable.
pub const FGLSS_LABEL_CAP: u128 = 1 << 12;

/// Graph vertex -> (constraint, its two endpoint labels).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FglssLegend {
    #[serde(skip)]
    pub vertices: Vec<(usize, Label, Label)>,
    /// Graph vertices of each constraint's cloud.
    pub clouds: Vec<Vec<usize>>,
    /// Constraint endpoints, copied for decoding.
    #[serde(skip)]
    pub endpoints: Vec<(VarId, VarId)>,
    pub num_vars: usize,
}

fn consistent(e1: (VarId, VarId), a1: (&Label, &Label), e2: (VarId, VarId), a2: (&Label, &Label)) -> bool {
    let l = [(e1.0, a1.0), (e1.1, a1.1)];
    let r = [(e2.0, a2.0), (e2.1, a2.1)];
    l.iter().all(|(x, lx)| r.iter().all(|(y, ly)| x != y || lx == ly))
}

/// The FGLSS graph: one vertex per (constraint, accepted label pair), edges
/// between vertices of distinct constraints that agree on shared variables.
pub fn fglss(inst: &Instance) -> Result<(Graph, FglssLegend)> {
    if let Some(i) = inst.constraints.iter().position(|c| c.vars.len() != 2) {
        return Err(Error::NotLabelCover(format!("constraint {i} is not binary")));
    }
    let mut vertices = Vec::new();
    let mut clouds = Vec::new();
    for (e, c) in inst.constraints.iter().enumerate() {
        let lu = inst.alphabet_of(c.vars[0]).labels(FGLSS_LABEL_CAP)?;
        let lv = inst.alphabet_of(c.vars[1]).labels(FGLSS_LABEL_CAP)?;
        let mut cloud = Vec::new();
        for a in &lu {
            for b in &lv {
                let ok = if c.vars[0] == c.vars[1] { a == b && c.relation.accepts(&[a, b]) } else { c.relation.accepts(&[a, b]) };
                if ok {
                    cloud.push(vertices.len());
                    vertices.push((e, a.clone(), b.clone()));
                }
            }
        }
        clouds.push(cloud);
    }
    let endpoints: Vec<(VarId, VarId)> = inst.constraints.iter().map(|c| (c.vars[0], c.vars[1])).collect();
    let mut g = Graph::new(vertices.len());
    for i in 0..vertices.len() {
        let (ei, ai, bi) = &vertices[i];
        for j in i + 1..vertices.len() {
            let (ej, aj, bj) = &vertices[j];
            if ei != ej && consistent(endpoints[*ei], (ai, bi), endpoints[*ej], (aj, bj)) {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok((g, FglssLegend { vertices, clouds, endpoints, num_vars: inst.num_vars() }))
}

/// Adjacency sets of a loop-free simple graph.
fn neighbor_sets(g: &Graph) -> Vec<BTreeSet<usize>> {
    (0..g.n())
        .map(|v| g.incidences(v).iter().map(|&(w, _)| w).filter(|&w| w != v).collect())
        .collect()
}

pub fn is_clique(g: &Graph, vs: &[usize]) -> bool {
    let nb = neighbor_sets(g);
    vs.iter().enumerate().all(|(i, &a)| vs[i + 1..].iter().all(|&b| a != b && nb[a].contains(&b)))
}

/// Maximum clique by Bron-Kerbosch with pivoting (smallest vertex set
/// among maxima, by lexicographic order).
pub fn max_clique(g: &Graph) -> Vec<usize> {
    let nb = neighbor_sets(g);
    let mut best: Vec<usize> = Vec::new();
    fn rec(nb: &[BTreeSet<usize>], r: &mut Vec<usize>, p: BTreeSet<usize>, mut x: BTreeSet<usize>, best: &mut Vec<usize>) {
        if p.is_empty() && x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            if c.len() > best.len() || (c.len() == best.len() && c < *best) {
                *best = c;
            }
            return;
        }
        if r.len() + p.len() < best.len() {
            return;
        }
        let pivot = p.iter().chain(&x).copied().max_by_key(|u| p.intersection(&nb[*u]).count()).expect("non-empty");
        let cands: Vec<usize> = p.difference(&nb[pivot]).copied().collect();
        let mut p = p;
        for v in cands {
            r.push(v);
            rec(nb, r, p.intersection(&nb[v]).copied().collect(), x.intersection(&nb[v]).copied().collect(), best);
            r.pop();
            p.remove(&v);
            x.insert(v);
        }
    }
    rec(&nb, &mut Vec::new(), (0..g.n()).collect(), BTreeSet::new(), &mut best);
    best
}

/// Every maximal clique (for small graphs).
pub fn maximal_cliques(g: &Graph) -> Vec<Vec<usize>> {
    let nb = neighbor_sets(g);
    let mut out = Vec::new();
    fn rec(nb: &[BTreeSet<usize>], r: &mut Vec<usize>, mut p: BTreeSet<usize>, mut x: BTreeSet<usize>, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() && x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let cands: Vec<usize> = p.iter().copied().collect();
        for v in cands {
            r.push(v);
            rec(nb, r, p.intersection(&nb[v]).copied().collect(), x.intersection(&nb[v]).copied().collect(), out);
            r.pop();
            p.remove(&v);
            x.insert(v);
        }
    }
    rec(&nb, &mut Vec::new(), (0..g.n()).collect(), BTreeSet::new(), &mut out);
    out.sort();
    out
}

/// The clique {v_(e, sigma(u), sigma(v))} of a satisfying assignment.
pub fn canonical_clique(legend: &FglssLegend, sigma: &[Label]) -> Vec<usize> {
    legend
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, (e, a, b))| {
            let (u, v) = legend.endpoints[*e];
            sigma[u] == *a && sigma[v] == *b
        })
        .map(|(i, _)| i)
        .collect()
}

/// Number of graph edges touching the cloud of constraint e, i.e. the
/// edges that disappear when e is deleted.
pub fn cloud_edge_count(g: &Graph, legend: &FglssLegend, e: usize) -> usize {
    legend.clouds[e].iter().map(|&v| g.degree(v)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::label_cover;

    #[test]
    fn sizes_and_canonical_clique() {
        let (i, s) = label_cover(3, 3, 6, 3, 2, 4).unwrap();
        let (g, leg) = fglss(&i).unwrap();
        assert_eq!(g.n(), 3 * 6);
        let c = canonical_clique(&leg, &s);
        assert_eq!(c.len(), 6);
        assert!(is_clique(&g, &c));
        assert_eq!(max_clique(&g).len(), 6);
        for cloud in &leg.clouds {
            assert!(!cloud.iter().any(|&a| cloud.iter().any(|&b| a < b && is_clique(&g, &[a, b]))));
        }
    }

    #[test]
    fn deletion_removes_cloud_edges() {
        let (i, _) = label_cover(3, 3, 5, 2, 2, 8).unwrap();
        let (g, leg) = fglss(&i).unwrap();
        let (g2, _) = fglss(&i.delete_constraint(2).unwrap()).unwrap();
        assert_eq!(g.num_edges() - g2.num_edges(), cloud_edge_count(&g, &leg, 2));
    }

    #[test]
    fn clique_search_matches_enumeration() {
        let (i, _) = label_cover(2, 3, 5, 2, 2, 11).unwrap();
        let (g, _) = fglss(&i).unwrap();
        let all = maximal_cliques(&g);
        let m = all.iter().map(Vec::len).max().unwrap();
        assert_eq!(max_clique(&g).len(), m);
    }
}
