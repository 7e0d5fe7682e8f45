use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::csp::{Instance, Label};
use crate::error::{Error, Result};
use crate::graph::{sample_asrw_full, Graph};
use crate::util::{mix, rng};

/// Monte Carlo statistics of ASRW walks against a fixed assignment.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub t: usize,
    pub b: usize,
    pub samples: usize,
    pub seed: u64,
    pub faulty_edges: usize,
    /// S counts halting rounds, i.e. moves + 1.
    pub mean_s: f64,
    pub se_s: f64,
    pub p_s_gt_b: f64,
    pub se_p_s_gt_b: f64,
    pub expected_p_s_gt_b: f64,
    pub mean_n: f64,
    pub mean_nstar: f64,
    pub se_nstar: f64,
    pub mean_nstar_sq: f64,
    pub se_nstar_sq: f64,
    pub p_nstar_pos: f64,
    pub se_p_nstar_pos: f64,
    /// E[N*]^2 / E[N*^2] (zero when N* never fires).
    pub second_moment_bound: f64,
    /// One standard error of p_nstar_pos - second_moment_bound.
    pub second_moment_sigma: f64,
    /// E[N*] (1600 |Sigma|^2 m) / (t |F|); reported only.
    pub lower_bound_ratio: f64,
}

impl DiagnosticsReport {
    /// Pr[N* > 0] >= E[N*]^2 / E[N*^2] - 3 sigma.
    pub fn second_moment_holds(&self) -> bool {
        self.p_nstar_pos >= self.second_moment_bound - 3.0 * self.second_moment_sigma
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Samples `samples` ASRWs from uniform starts on the base graph and
/// counts sigma-faulty steps: traversals u -> v of a violated edge with
/// the start within distance t of u and agreeing with sigma on u, and the
/// end within distance t of v and agreeing with sigma on v.
pub fn powering_diagnostics(
    inst: &Instance,
    sigma_prime: &[Label],
    sigma: &[Label],
    t: usize,
    b: usize,
    samples: usize,
    seed: u64,
) -> Result<DiagnosticsReport> {
    let g = Graph::of_instance(inst)?;
    if g.regular_degree().is_none() {
        return Err(Error::NotRegular);
    }
    if sigma.len() != inst.num_vars() || sigma_prime.len() != inst.num_vars() || samples < 2 || t == 0 {
        return Err(Error::DomainMismatch("assignments must cover the base variables".into()));
    }
    let dist: Vec<Vec<usize>> = (0..g.n()).map(|v| g.distances(v)).collect();
    let faulty: Vec<bool> = inst.constraints.iter().map(|c| !c.satisfied(sigma)).collect();
    let agrees = |x: usize, u: usize| dist[x][u] <= t && sigma_prime[x].opinion(u) == Some(&sigma[u]);
    let rows: Vec<(f64, f64, f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut r = rng(mix(seed, s as u64));
            let start = r.gen_range(0..g.n());
            let w = sample_asrw_full(&g, t, start, &mut r);
            let (x, y) = (w.start, w.end());
            let n = w
                .traversals()
                .into_iter()
                .filter(|&(u, v, e)| faulty[e] && agrees(x, u) && agrees(y, v))
                .count() as f64;
            let steps = (w.len() + 1) as f64;
            let nstar = if w.len() <= b { n } else { 0.0 };
            (steps, n, nstar, if steps > b as f64 { 1.0 } else { 0.0 })
        })
        .collect();
    let col = |f: fn(&(f64, f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let (mean_s, se_s) = mean_se(&col(|r| r.0));
    let (p_s_gt_b, se_p_s_gt_b) = mean_se(&col(|r| r.3));
    let (mean_n, _) = mean_se(&col(|r| r.1));
    let (mean_nstar, se_nstar) = mean_se(&col(|r| r.2));
    let (mean_nstar_sq, se_nstar_sq) = mean_se(&col(|r| r.2 * r.2));
    let (p_nstar_pos, se_p_nstar_pos) = mean_se(&col(|r| if r.2 > 0.0 { 1.0 } else { 0.0 }));
    let (bound, se_bound) = if mean_nstar_sq > 0.0 {
        let ratio = mean_nstar * mean_nstar / mean_nstar_sq;
        let rel = ((2.0 * se_nstar / mean_nstar).powi(2) + (se_nstar_sq / mean_nstar_sq).powi(2)).sqrt();
        (ratio, ratio * rel)
    } else {
        (0.0, 0.0)
    };
    let f = faulty.iter().filter(|x| **x).count();
    let sigma_size = inst.max_alphabet() as f64;
    let lower_bound_ratio = if f > 0 {
        mean_nstar * 1600.0 * sigma_size * sigma_size * inst.num_constraints() as f64 / (t as f64 * f as f64)
    } else {
        0.0
    };
    Ok(DiagnosticsReport {
        t,
        b,
        samples,
        seed,
        faulty_edges: f,
        mean_s,
        se_s,
        p_s_gt_b,
        se_p_s_gt_b,
        expected_p_s_gt_b: (1.0 - 1.0 / t as f64).powi(b as i32),
        mean_n,
        mean_nstar,
        se_nstar,
        mean_nstar_sq,
        se_nstar_sq,
        p_nstar_pos,
        se_p_nstar_pos,
        second_moment_bound: bound,
        second_moment_sigma: (se_p_nstar_pos.powi(2) + se_bound.powi(2)).sqrt(),
        lower_bound_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::atoms;
    use crate::generators::parity_cycle;

    fn views(inst: &Instance, sigma: &[Label], t: usize) -> Vec<Label> {
        let g = Graph::of_instance(inst).unwrap();
        (0..g.n()).map(|v| Label::view(g.ball(v, t).into_iter().map(|w| (w, sigma[w].clone())).collect())).collect()
    }

    #[test]
    fn satisfying_assignment_has_no_faults() {
        let i = parity_cycle(&[1; 6]);
        let s = atoms(&[0, 1, 0, 1, 0, 1]);
        let r = powering_diagnostics(&i, &views(&i, &s, 2), &s, 2, 20, 2000, 1).unwrap();
        assert_eq!(r.faulty_edges, 0);
        assert_eq!(r.mean_n, 0.0);
        assert!(r.second_moment_holds());
    }

    #[test]
    fn planted_violation_is_seen() {
        let i = parity_cycle(&[1; 6]);
        let s = atoms(&[0, 0, 0, 1, 0, 1]);
        let r = powering_diagnostics(&i, &views(&i, &s, 2), &s, 2, 20, 5000, 2).unwrap();
        assert!(r.faulty_edges > 0);
        assert!(r.mean_nstar > 0.0);
        assert!(r.p_nstar_pos >= r.second_moment_bound - 1e-12);
        assert!((r.mean_s - 2.0).abs() <= 3.0 * r.se_s);
    }
}
