use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::csp::{hamming, tv_distance, Assignment, AssignmentDistribution};
use crate::error::{Error, Result};

/// Largest support either side of an exact transport problem may have.
pub const EMD_SUPPORT_CAP: usize = 256;

/// An optimal coupling between two finite supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportPlan {
    pub left: Vec<(Assignment, BigRational)>,
    pub right: Vec<(Assignment, BigRational)>,
    /// Non-zero flows (left index, right index, mass).
    pub flow: Vec<(usize, usize, BigRational)>,
    pub cost: BigRational,
}

impl TransportPlan {
    /// Row and column sums equal the marginals and the cost matches.
    pub fn audit(&self) -> bool {
        let mut rows = vec![BigRational::zero(); self.left.len()];
        let mut cols = vec![BigRational::zero(); self.right.len()];
        let mut cost = BigRational::zero();
        for (i, j, f) in &self.flow {
            if f.is_negative() {
                return false;
            }
            rows[*i] += f;
            cols[*j] += f;
            let h = hamming(&self.left[*i].0, &self.right[*j].0).unwrap_or(usize::MAX);
            cost += f * BigRational::from_integer((h as i64).into());
        }
        rows.iter().zip(&self.left).all(|(r, l)| *r == l.1)
            && cols.iter().zip(&self.right).all(|(c, r)| *c == r.1)
            && cost == self.cost
    }
}

fn support(d: &AssignmentDistribution) -> Result<Vec<(Assignment, BigRational)>> {
    let s = d.to_empirical(EMD_SUPPORT_CAP as u128)?;
    if s.len() > EMD_SUPPORT_CAP {
        return Err(Error::SupportTooLarge(s.len()));
    }
    Ok(s.into_iter().filter(|(_, p)| !p.is_zero()).collect())
}

/// Exact earth mover's distance under the Hamming metric, by successive
/// shortest paths (Dijkstra with potentials) on the bipartite support graph.
pub fn emd_exact(d1: &AssignmentDistribution, d2: &AssignmentDistribution) -> Result<(BigRational, TransportPlan)> {
    if d1.num_vars() != d2.num_vars() {
        return Err(Error::DomainMismatch(format!("{} vs {} variables", d1.num_vars(), d2.num_vars())));
    }
    let left = support(d1)?;
    let right = support(d2)?;
    let (n1, n2) = (left.len(), right.len());
    let mut cost = vec![vec![0i64; n2]; n1];
    for (i, (a, _)) in left.iter().enumerate() {
        for (j, (b, _)) in right.iter().enumerate() {
            cost[i][j] = hamming(a, b)? as i64;
        }
    }
    let mut ra: Vec<BigRational> = left.iter().map(|x| x.1.clone()).collect();
    let mut rb: Vec<BigRational> = right.iter().map(|x| x.1.clone()).collect();
    let mut flow = vec![vec![BigRational::zero(); n2]; n1];
    // nodes: 0 = source, 1..=n1 left, n1+1..=n1+n2 right, n1+n2+1 = sink
    let nn = n1 + n2 + 2;
    let sink = nn - 1;
    let mut pot = vec![0i64; nn];
    const INF: i64 = i64::MAX / 4;
    loop {
        if ra.iter().all(Zero::is_zero) {
            break;
        }
        let mut dist = vec![INF; nn];
        let mut prev = vec![usize::MAX; nn];
        let mut done = vec![false; nn];
        dist[0] = 0;
        loop {
            let mut u = usize::MAX;
            for v in 0..nn {
                if !done[v] && dist[v] < INF && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            let mut relax = |v: usize, c: i64, dist: &mut Vec<i64>| {
                let nd = dist[u] + c + pot[u] - pot[v];
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                }
            };
            if u == 0 {
                for i in 0..n1 {
                    if !ra[i].is_zero() {
                        relax(1 + i, 0, &mut dist);
                    }
                }
            } else if u <= n1 {
                let i = u - 1;
                for j in 0..n2 {
                    relax(1 + n1 + j, cost[i][j], &mut dist);
                }
            } else if u < sink {
                let j = u - 1 - n1;
                for i in 0..n1 {
                    if !flow[i][j].is_zero() {
                        relax(1 + i, -cost[i][j], &mut dist);
                    }
                }
                if !rb[j].is_zero() {
                    relax(sink, 0, &mut dist);
                }
            }
        }
        if dist[sink] >= INF {
            return Err(Error::Invalid("transport problem infeasible (masses differ)".into()));
        }
        for v in 0..nn {
            pot[v] += dist[v].min(dist[sink]);
        }
        // bottleneck along the path
        let mut path = vec![sink];
        while *path.last().expect("non-empty") != 0 {
            path.push(prev[*path.last().expect("non-empty")]);
        }
        path.reverse();
        let first = path[1] - 1;
        let last = path[path.len() - 2] - 1 - n1;
        let mut amt = ra[first].clone().min(rb[last].clone());
        for w in path[1..path.len() - 1].windows(2) {
            if w[0] > n1 {
                let (j, i) = (w[0] - 1 - n1, w[1] - 1);
                amt = amt.min(flow[i][j].clone());
            }
        }
        ra[first] -= &amt;
        rb[last] -= &amt;
        for w in path[1..path.len() - 1].windows(2) {
            if w[0] <= n1 {
                flow[w[0] - 1][w[1] - 1 - n1] += &amt;
            } else {
                flow[w[1] - 1][w[0] - 1 - n1] -= &amt;
            }
        }
    }
    let mut total = BigRational::zero();
    let mut fl = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            if !flow[i][j].is_zero() {
                total += &flow[i][j] * BigRational::from_integer(cost[i][j].into());
                fl.push((i, j, flow[i][j].clone()));
            }
        }
    }
    Ok((total.clone(), TransportPlan { left, right, flow: fl, cost: total }))
}

/// Sum over variables of marginal total-variation distances; an upper
/// bound on the exact distance.
pub fn emd_upper_product(d1: &AssignmentDistribution, d2: &AssignmentDistribution) -> Result<BigRational> {
    if d1.num_vars() != d2.num_vars() {
        return Err(Error::DomainMismatch(format!("{} vs {} variables", d1.num_vars(), d2.num_vars())));
    }
    Ok((0..d1.num_vars()).map(|v| tv_distance(&d1.marginal(v), &d2.marginal(v))).sum())
}
