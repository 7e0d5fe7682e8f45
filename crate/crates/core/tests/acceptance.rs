//! Acceptance gate. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::collections::{BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use rand::Rng as _;

use pcp_forge::csp::{
    hamming, tv_distance, Alphabet, Assignment, AssignmentDistribution, Constraint, Instance, Label, Marginal, Relation,
};
use pcp_forge::generators::{
    cycle_solutions, e2lin_cycle, label_cover, lemma41_edges, lemma41_pair, planted_assignment, random_bounded_graph,
    random_instance, random_regular_instance, CycleSpec, RelationFamily,
};
use pcp_forge::graph::{bsrw_kernel, lambda, Graph};
use pcp_forge::harness::constraint_diff;
use pcp_forge::nonsignal::{check_nonsignaling_sensitivity, LocalAlgorithm};
use pcp_forge::oracles::{
    compare_runs, default_swap, emd_exact, emd_upper_product, estimate_sensitivity, neighbor, powering_diagnostics,
    run_samples, satisfying_assignments, swap_paths, Algorithm, ConstantAlgorithm, ExactSolver, NeighborPolicy,
    NoisySolver, ParityFlipAlgorithm, RandomizedGreedy,
};
use pcp_forge::pipeline::{run_pipeline, PipelineConfig};
use pcp_forge::recovery::{alphabet_marginals, decode_blocks, power_opinions, recover_degree, recover_fglss};
use pcp_forge::transforms::circuit::{Circuit, CircuitBuilder};
use pcp_forge::transforms::hadamard;
use pcp_forge::transforms::tester::{exhaustive_violation, hadamard_tables};
use pcp_forge::transforms::{
    alphabet_reduce, assignment_tester, canonical_clique, degree_reduce, e3sat_to_3lin, expanderize, fglss,
    lift_alphabet, lift_degree, lift_e3sat, lift_power, power, recover_e3sat, to_e3sat, walk_bound, AlphabetConfig,
    PowerMode, TesterConfig,
};
use pcp_forge::util::{mix, rat, rat_int, rng, Rng};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn one() -> BigRational {
    BigRational::one()
}

fn sum_tv(a: &[Marginal], b: &[Marginal]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| tv_distance(x, y)).sum()
}

/// sigma with coordinate w moved to a different label.
fn change_one(inst: &Instance, sigma: &[Label], w: usize, r: &mut Rng) -> Assignment {
    let mut out = sigma.to_vec();
    while inst.alphabet_of(w).size() > 1 && out[w] == sigma[w] {
        out[w] = inst.alphabet_of(w).random_label(r);
    }
    out
}

fn bfs(n: usize, edges: &[(usize, usize)], s: usize) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut d = vec![usize::MAX; n];
    d[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if d[v] == usize::MAX {
                d[v] = d[u] + 1;
                q.push_back(v);
            }
        }
    }
    d
}

// 1. Two satisfying assignments each, far apart.
fn criterion_1() -> Check {
    for n in [4usize, 8, 16, 32] {
        let (a, b) = lemma41_pair(n).map_err(|e| e.to_string())?;
        ensure!(a.swap_distance(&b).unwrap() == 2, "n={n}: pair is not at swap distance 2");
        let sols = |i: &Instance| -> Result<Vec<Assignment>, String> {
            if n <= 16 {
                satisfying_assignments(i, 1 << 16).map_err(|e| e.to_string())
            } else {
                Ok(cycle_solutions(i))
            }
        };
        let (sa, sb) = (sols(&a)?, sols(&b)?);
        ensure!(sa.len() == 2 && sb.len() == 2, "n={n}: {} and {} satisfying assignments", sa.len(), sb.len());
        for s in sa.iter().chain(&sb) {
            let inst = if sa.contains(s) { &a } else { &b };
            ensure!(inst.value(s).unwrap().is_one(), "n={n}: witness is not satisfying");
        }
        let min = sa.iter().flat_map(|x| sb.iter().map(move |y| hamming(x, y).unwrap())).min().unwrap();
        ensure!(2 * min >= n, "n={n}: min cross distance {min} < n/2");
    }
    Ok("n in {4,8,16,32}".into())
}

// 2. Degree reduction on 3-regular satisfiable instances.
fn criterion_2() -> Check {
    let d0 = 4usize;
    let mut worst_ci = 0usize;
    let mut worst_cs = BigRational::zero();
    let mut pairs = 0usize;
    for trial in 0..50u64 {
        let n = [4usize, 6, 8, 10, 12][trial as usize % 5];
        let seed = mix(0xa2, trial);
        let mut r = rng(seed);
        let inst = random_regular_instance(n, 3, 3, RelationFamily::Planted, seed).map_err(|e| e.to_string())?;
        let sigma = planted_assignment(n, 3, seed);
        ensure!(inst.value(&sigma).unwrap().is_one(), "trial {trial}: planted assignment not satisfying");
        let (out, map) = degree_reduce(&inst, d0, seed).map_err(|e| e.to_string())?;
        let g = Graph::of_instance(&out).unwrap();
        ensure!(g.regular_degree() == Some(d0 + 1), "trial {trial}: output is not {}-regular", d0 + 1);
        ensure!(out.num_constraints() == (d0 + 1) * inst.num_constraints(), "trial {trial}: m' != (d0+1) m");
        let lift = lift_degree(&map, &sigma).unwrap();
        ensure!(out.value(&lift).unwrap().is_one(), "trial {trial}: lift is not satisfying");
        let rec = recover_degree(&map, &lift).unwrap();
        ensure!(rec.expected_value(&inst).unwrap().is_one(), "trial {trial}: recovered value below 1");
        for e in 0..inst.num_constraints() {
            let other = neighbor(&inst, e, NeighborPolicy::Swap).unwrap();
            let (out2, _) = degree_reduce(&other, d0, seed).unwrap();
            worst_ci = worst_ci.max(constraint_diff(&out, &out2));
        }
        for _ in 0..8 {
            let a = out.random_assignment(&mut r);
            let b = change_one(&out, &a, r.gen_range(0..out.num_vars()), &mut r);
            let ma = recover_degree(&map, &a).unwrap().marginals();
            let mb = recover_degree(&map, &b).unwrap().marginals();
            // Product laws: the exact distance is the sum of marginal TVs.
            let d = sum_tv(&ma, &mb) / rat_int(hamming(&a, &b).unwrap() as u128);
            worst_cs = worst_cs.max(d);
            pairs += 1;
        }
    }
    ensure!(worst_ci <= 1, "C_I measured {worst_ci} > 1");
    ensure!(worst_cs <= rat(1, 3), "C_sigma measured {worst_cs} > 1/3");
    Ok(format!("C_I={worst_ci}, C_sigma={worst_cs} over {pairs} pairs"))
}

// 3. Expanderization: spectral bound and exact cost dilution.
fn criterion_3() -> Check {
    let mut checked = 0usize;
    let mut worst_gap = f64::NEG_INFINITY;
    for case in 0..100u64 {
        // Degrees at which lambda <= d0/2 is attainable at these sizes.
        let (n, d0) = [(8usize, 8usize), (10, 8), (12, 10), (14, 10), (16, 10)][case as usize % 5];
        let seed = mix(0xa3, case);
        let mut r = rng(seed);
        let inst = random_regular_instance(n, 3, 2, RelationFamily::Random, seed).map_err(|e| e.to_string())?;
        let (out, h) = expanderize(&inst, d0, seed).map_err(|e| e.to_string())?;
        let (lg, lh, lo) = (
            lambda(&Graph::of_instance(&inst).unwrap()).unwrap(),
            lambda(&h).unwrap(),
            lambda(&Graph::of_instance(&out).unwrap()).unwrap(),
        );
        ensure!(lh.value <= d0 as f64 / 2.0 + 1e-9, "case {case}: expander lambda {} > d0/2", lh.value);
        let gap = lo.value - (lg.value + lh.value);
        worst_gap = worst_gap.max(gap);
        ensure!(gap <= 1e-6, "case {case}: lambda(out) {} > {} + {}", lo.value, lg.value, lh.value);
        for _ in 0..10 {
            let s = inst.random_assignment(&mut r);
            let lhs = out.cost(&s).unwrap() * out.total_mass();
            let rhs = inst.cost(&s).unwrap() * inst.total_mass();
            ensure!(lhs == rhs, "case {case}: cost' m' = {lhs} but cost m = {rhs}");
            checked += 1;
        }
    }
    Ok(format!("100 cases, {checked} assignments, max lambda slack {worst_gap:.3e}"))
}

// 4. Exact powering on micro instances.
fn criterion_4() -> Check {
    let cases: Vec<(usize, usize, u64)> = vec![(4, 1, 1), (6, 1, 2), (8, 1, 3), (8, 1, 4), (4, 2, 5), (4, 2, 6)];
    let mut pairs = 0usize;
    let mut worst_l1 = BigRational::zero();
    for (n, t, seed) in cases {
        let inst = random_regular_instance(n, 3, 2, RelationFamily::Planted, seed).map_err(|e| e.to_string())?;
        let sigma = planted_assignment(n, 2, seed);
        let (out, info) = power(&inst, t, PowerMode::Exact).map_err(|e| e.to_string())?;
        let lift = lift_power(&inst, &sigma, t).unwrap();
        ensure!(out.value(&lift).unwrap().is_one(), "n={n} t={t}: lift value below 1");
        // Moves are geometric: Pr[l moves] = (1/t)(1-1/t)^l; walks beyond B are dropped.
        let b = walk_bound(t, 2);
        ensure!(info.b == b, "walk bound {} != {b}", info.b);
        let stay = one() - rat(1, t as i64);
        let tail: BigRational = Pow::pow(&stay, b + 1);
        ensure!(out.total_mass() == one() - &tail, "n={n} t={t}: total weight {} != 1 - {tail}", out.total_mass());
        let g = Graph::of_instance(&inst).unwrap();
        let kernel = bsrw_kernel(&g, t).unwrap();
        let cutoff = rat(1, 20);
        let mut r = rng(mix(0xa4, seed));
        let per_case = 200 / 6 + 1;
        for _ in 0..per_case {
            let a = out.random_assignment(&mut r);
            let bb = change_one(&out, &a, r.gen_range(0..n), &mut r);
            let (oa, ob) = (power_opinions(&inst, &kernel, &a).unwrap(), power_opinions(&inst, &kernel, &bb).unwrap());
            let mut l1 = BigRational::zero();
            for (x, y) in oa.iter().zip(&ob) {
                for o in [x, y] {
                    ensure!(o.denominator >= rat(9, 10), "truncation denominator {} < 9/10", o.denominator);
                    // Independent truncation: (mu - c)_+ renormalized.
                    let kept: Vec<(Label, BigRational)> =
                        o.mu.iter().filter(|(_, p)| *p > cutoff).map(|(l, p)| (l.clone(), p - &cutoff)).collect();
                    let z: BigRational = kept.iter().map(|(_, p)| p.clone()).sum();
                    let expect: Marginal = kept.into_iter().map(|(l, p)| (l, p / &z)).collect();
                    ensure!(tv_distance(&expect, &o.mu_star).is_zero(), "truncated opinion mismatch");
                }
                let tv_star = tv_distance(&x.mu_star, &y.mu_star);
                ensure!(tv_star <= tv_distance(&x.mu, &y.mu) * rat(4, 1), "4x TV bound fails");
                l1 += tv_star * rat(2, 1);
            }
            ensure!(l1 <= rat(8, 1), "sum of L1 distances {l1} > 8");
            worst_l1 = worst_l1.max(l1);
            pairs += 1;
        }
    }
    ensure!(pairs >= 200, "only {pairs} pairs");
    Ok(format!("{pairs} pairs, max sum L1 = {worst_l1}"))
}

// 5. Walk-length statistics and the second-moment inequality.
fn criterion_5() -> Check {
    let samples = 100_000usize;
    let mut notes = Vec::new();
    for (i, (t, b)) in [(2usize, 4usize), (3, 5), (4, 8)].into_iter().enumerate() {
        let seed = 0xa5 + i as u64;
        let inst = random_regular_instance(8, 3, 2, RelationFamily::Planted, seed).map_err(|e| e.to_string())?;
        let planted = planted_assignment(8, 2, seed);
        let mut sigma = planted.clone();
        for v in 0..8 {
            sigma = planted.clone();
            sigma[v] = Label::Atom(1 - sigma[v].as_atom().unwrap());
            if !inst.value(&sigma).unwrap().is_one() {
                break;
            }
        }
        let views = lift_power(&inst, &sigma, t).unwrap();
        let rep = powering_diagnostics(&inst, &views, &sigma, t, b, samples, seed).map_err(|e| e.to_string())?;
        ensure!(rep.faulty_edges > 0, "t={t}: no planted violation");
        ensure!((rep.mean_s - t as f64).abs() <= 3.0 * rep.se_s, "t={t}: E[S]={} vs {t} (se {})", rep.mean_s, rep.se_s);
        let expect = (1.0 - 1.0 / t as f64).powi(b as i32);
        ensure!(
            (rep.p_s_gt_b - expect).abs() <= 3.0 * rep.se_p_s_gt_b,
            "t={t}: Pr[S>B]={} vs {expect} (se {})",
            rep.p_s_gt_b,
            rep.se_p_s_gt_b
        );
        ensure!(rep.mean_nstar > 0.0, "t={t}: N* never fires");
        ensure!(
            rep.p_nstar_pos >= rep.second_moment_bound - 3.0 * rep.second_moment_sigma,
            "t={t}: Pr[N*>0]={} < {} - 3*{}",
            rep.p_nstar_pos,
            rep.second_moment_bound,
            rep.second_moment_sigma
        );
        notes.push(format!("t={t}: E[S]={:.3}", rep.mean_s));
    }
    Ok(notes.join(", "))
}

fn micro_circuits() -> Vec<(&'static str, Circuit)> {
    let mut out = Vec::new();
    let mut b = CircuitBuilder::new(2);
    let g = b.and(0, 1);
    out.push(("and", b.finish(g)));
    let mut b = CircuitBuilder::new(2);
    let g = b.or(0, 1);
    out.push(("or", b.finish(g)));
    let mut b = CircuitBuilder::new(2);
    let g = b.not(0);
    out.push(("not", b.finish(g)));
    out
}

fn bits(x: usize, k: usize) -> Vec<bool> {
    (0..k).map(|i| (x >> i) & 1 == 1).collect()
}

// 6. Assignment tester at k = 3.
fn criterion_6() -> Check {
    let mut tables = 0usize;
    let mut min_ratio: Option<BigRational> = None;
    for (name, c) in micro_circuits() {
        ensure!(c.wires() == 3, "{name}: k = {}", c.wires());
        let inputs: Vec<Vec<bool>> = (0..4).map(|x| bits(x, 2)).collect();
        let sat: Vec<&Vec<bool>> = inputs.iter().filter(|x| c.accepts(x)).collect();
        let ti = assignment_tester(&c, &TesterConfig::default()).map_err(|e| e.to_string())?;
        for x in &sat {
            let (l, q) = hadamard_tables(&c.eval(x));
            let v = exhaustive_violation(&c, x, &l, &q).map_err(|e| e.to_string())?;
            ensure!(v.per_family.iter().all(Zero::is_zero), "{name}: honest tables violate a check");
            ensure!(ti.instance.value(&ti.lift(x)).unwrap().is_one(), "{name}: honest proof rejected");
        }
        for (ai, alpha) in inputs.iter().enumerate() {
            let dist = sat.iter().map(|s| s.iter().zip(alpha).filter(|(a, b)| a != b).count()).min().unwrap();
            if dist == 0 {
                continue;
            }
            let delta = rat(dist as i64, 2);
            let floor = &delta / rat(48, 1);
            let mut r = rng(mix(0xa6, ai as u64) ^ name.len() as u64);
            let mut corpus: Vec<(Vec<bool>, Vec<bool>)> = (0..8).map(|z| hadamard_tables(&bits(z, 3))).collect();
            for _ in 0..100 {
                let (mut l, mut q) = hadamard_tables(&bits(r.gen_range(0..8), 3));
                let p = r.gen_range(1..=16) as f64 / 64.0;
                l.iter_mut().chain(q.iter_mut()).for_each(|b| *b ^= r.gen_bool(p));
                corpus.push((l, q));
            }
            for (l, q) in &corpus {
                let v = exhaustive_violation(&c, alpha, l, q).map_err(|e| e.to_string())?;
                ensure!(v.sparsified >= floor, "{name}: alpha={alpha:?} violated weight {} < {floor}", v.sparsified);
                let ratio = &v.sparsified / &delta;
                if min_ratio.as_ref().is_none_or(|m| ratio < *m) {
                    min_ratio = Some(ratio);
                }
                tables += 1;
            }
        }
    }
    // BLR on a single corrupted cell, against direct enumeration of (x, y).
    let k = 3usize;
    let n = 1usize << k;
    for z in 0..n {
        let (l0, q) = hadamard_tables(&bits(z, k));
        for p in 0..n {
            let mut l = l0.clone();
            l[p] = !l[p];
            let fails = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| l[x] ^ l[y] ^ l[x ^ y]).count();
            let oracle = rat(fails as i64, (n * n) as i64);
            let closed = if p == 0 { rat(3 * n as i64 - 2, (n * n) as i64) } else { rat(3 * (n as i64 - 2), (n * n) as i64) };
            ensure!(oracle == closed, "BLR enumeration {oracle} disagrees with {closed}");
            let v = exhaustive_violation(&micro_circuits()[0].1, &[false, false], &l, &q).map_err(|e| e.to_string())?;
            ensure!(v.per_family[0] == oracle, "BLR fraction {} != {oracle} at cell {p}", v.per_family[0]);
        }
    }
    Ok(format!("{tables} tables, min violated/delta = {}", min_ratio.unwrap_or_else(BigRational::zero)))
}

// 7. Threshold decoding of X blocks.
fn criterion_7() -> Check {
    let mut same = 0usize;
    let mut boundary = 0usize;
    for (sigma_size, ell) in [(6u32, 8usize), (12, 16)] {
        let (inst, s) = label_cover(1, 1, 1, sigma_size, sigma_size, 5).map_err(|e| e.to_string())?;
        let (out, map) = alphabet_reduce(&inst, &AlphabetConfig::default()).map_err(|e| e.to_string())?;
        ensure!(map.ell == ell, "ell = {} for |Sigma| = {sigma_size}", map.ell);
        let base = lift_alphabet(&inst, &map, out.num_vars(), &s).unwrap();
        let block = map.blocks[0].clone();
        let a = map.alphabet_of(0);
        let msg = a.index_of(&s[0]).unwrap();
        let code = hadamard::encode(msg, map.b);
        let read = |x: &Assignment| -> Vec<bool> { block.iter().map(|&v| x[v].as_atom() == Some(1)).collect() };
        ensure!(read(&base) == code, "honest block is not the codeword");
        let write = |word: &[bool]| -> Assignment {
            let mut x = base.clone();
            for (&v, &bit) in block.iter().zip(word) {
                x[v] = Label::Atom(bit as u32);
            }
            x
        };
        // p = 1 - 4 delta at delta in {0, 1/8, 1/4}.
        for flips in [0, ell / 8, ell / 4] {
            let mut w = code.clone();
            w.iter_mut().take(flips).for_each(|b| *b = !*b);
            let d = &decode_blocks(&map, &write(&w)).unwrap()[0];
            let delta = rat(flips as i64, ell as i64);
            ensure!(d.p == one() - rat(4, 1) * &delta, "p = {} at delta = {delta}", d.p);
        }
        // Walk from this codeword to another one, flipping every single bit
        // along the way.
        let other = hadamard::encode((msg + 1) % a.size(), map.b);
        let diff: Vec<usize> = (0..ell).filter(|&i| code[i] != other[i]).collect();
        let mut w = code.clone();
        let bound = rat(8, ell as i64);
        for step in 0..=diff.len() {
            if step > 0 {
                w[diff[step - 1]] = !w[diff[step - 1]];
            }
            let x = write(&w);
            let (dx, mx) = (decode_blocks(&map, &x).unwrap(), alphabet_marginals(&map, &x).unwrap());
            for i in 0..ell {
                let mut w2 = w.clone();
                w2[i] = !w2[i];
                let y = write(&w2);
                let (dy, my) = (decode_blocks(&map, &y).unwrap(), alphabet_marginals(&map, &y).unwrap());
                for (u, (p, q)) in mx.iter().zip(&my).enumerate() {
                    let tv = tv_distance(p, q);
                    ensure!(tv <= bound, "vertex {u}: TV {tv} > 8/ell at step {step}, bit {i}");
                }
                ensure!(sum_tv(&mx, &my) <= bound, "summed TV above 8/ell");
                if dx[0].label == dy[0].label {
                    same += 1;
                } else {
                    boundary += 1;
                }
            }
        }
    }
    ensure!(same > 0 && boundary > 0, "fixtures: {same} same-codeword, {boundary} boundary");
    Ok(format!("{same} same-codeword and {boundary} boundary flips"))
}

/// Every clique of a graph whose vertex set splits into independent
/// clouds: at most one vertex per cloud.
fn all_cliques(g: &Graph, clouds: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let adj: BTreeSet<(usize, usize)> = g.edges().iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    let mut out = Vec::new();
    fn go(i: usize, cur: &mut Vec<usize>, clouds: &[Vec<usize>], adj: &BTreeSet<(usize, usize)>, out: &mut Vec<Vec<usize>>) {
        if i == clouds.len() {
            out.push(cur.clone());
            return;
        }
        go(i + 1, cur, clouds, adj, out);
        for &v in &clouds[i] {
            if cur.iter().all(|&u| adj.contains(&(u, v))) {
                cur.push(v);
                go(i + 1, cur, clouds, adj, out);
                cur.pop();
            }
        }
    }
    go(0, &mut Vec::new(), clouds, &adj, &mut out);
    out
}

// 8. FGLSS cliques and clique recovery.
fn criterion_8() -> Check {
    let mut cliques = 0usize;
    for (i, m) in (1..=6usize).cycle().take(18).enumerate() {
        let (inst, s) = label_cover(2, 2, m, 3, 3, mix(0xa8, i as u64)).map_err(|e| e.to_string())?;
        let (g, legend) = fglss(&inst).map_err(|e| e.to_string())?;
        for cloud in &legend.clouds {
            for (x, &a) in cloud.iter().enumerate() {
                ensure!(cloud[x + 1..].iter().all(|&b| !g.edges().contains(&(a, b)) && !g.edges().contains(&(b, a))), "cloud is not independent");
            }
        }
        let canon = canonical_clique(&legend, &s);
        ensure!(canon.len() == m, "canonical clique has {} vertices, m = {m}", canon.len());
        let all = all_cliques(&g, &legend.clouds);
        let best = all.iter().map(Vec::len).max().unwrap();
        ensure!(best == m, "max clique {best} != m = {m}");
        for c in &all {
            let sigma = recover_fglss(&inst, &g, &legend, c).map_err(|e| e.to_string())?;
            let sat = inst.constraints.iter().filter(|k| k.satisfied(&sigma)).count();
            ensure!(sat >= c.len(), "clique of size {} recovers only {sat} satisfied constraints", c.len());
        }
        cliques += all.len();
    }
    Ok(format!("18 instances, {cliques} cliques"))
}

// 9. E3SAT and 3LIN gadgets.
fn criterion_9() -> Check {
    for neg in 0..8usize {
        let mut clause = Instance::uniform(3, Alphabet::Boolean);
        clause.push(Constraint::unit(vec![0, 1, 2], Relation::Clause(bits(neg, 3)))).unwrap();
        let lin = e3sat_to_3lin(&clause).map_err(|e| e.to_string())?;
        ensure!(lin.num_constraints() == 7, "{} equations per clause", lin.num_constraints());
        for x in 0..8usize {
            let a: Assignment = bits(x, 3).into_iter().map(|b| Label::Atom(b as u32)).chain((3..lin.num_vars()).map(|_| Label::Atom(0))).collect();
            let ok = lin.constraints.iter().filter(|c| c.satisfied(&a)).count();
            let want = if clause.constraints[0].satisfied(&a) { 4 } else { 0 };
            ensure!(ok == want, "negations {neg:03b}, assignment {x:03b}: {ok} of 7 satisfied");
        }
    }
    let mut worst = 0usize;
    let mut k = 0usize;
    for seed in 0..6u64 {
        let (inst, s) = label_cover(2, 2, 4, 3, 2, mix(0xa9, seed)).map_err(|e| e.to_string())?;
        let (sat, enc) = to_e3sat(&inst).map_err(|e| e.to_string())?;
        k = enc.k;
        let bitsig = lift_e3sat(&sat, &enc, &s).unwrap();
        ensure!(sat.value(&bitsig).unwrap().is_one(), "e3sat lift not satisfying");
        ensure!(recover_e3sat(&enc, &bitsig) == s, "labels do not round-trip");
        for e in 0..inst.num_constraints() {
            let other = inst.swap_constraint(e, default_swap(&inst, e).unwrap()).unwrap();
            let (sat2, _) = to_e3sat(&other).unwrap();
            let d = constraint_diff(&sat, &sat2);
            ensure!(d <= enc.k, "swap changes {d} > K = {} clauses", enc.k);
            worst = worst.max(d);
        }
    }
    Ok(format!("max clause change {worst} <= K = {k}"))
}

fn se_of_hamming(a: &[Assignment], b: &[Assignment]) -> f64 {
    let xs: Vec<f64> = a.iter().zip(b).map(|(x, y)| hamming(x, y).unwrap() as f64).collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (var / n).sqrt()
}

// 10. Sensitivity measurements.
fn criterion_10() -> Check {
    let cyc = e2lin_cycle(&CycleSpec::ones(8)).unwrap();
    let r = estimate_sensitivity(&ConstantAlgorithm, &cyc, NeighborPolicy::Delete, 8, 1, None).map_err(|e| e.to_string())?;
    ensure!(r.max_emd().is_zero() && r.max_coupling().is_zero(), "constant algorithm moved");
    let mut notes = Vec::new();
    for n in [4usize, 8, 16] {
        let (a, b) = lemma41_pair(n).unwrap();
        let [e1, e2] = lemma41_edges(n);
        let mid = a.swap_constraint(e1, default_swap(&a, e1).unwrap()).unwrap();
        let end = mid.swap_constraint(e2, default_swap(&mid, e2).unwrap()).unwrap();
        ensure!(end == b, "n={n}: swap path does not reach the paired instance");
        let runs: Vec<Vec<Assignment>> = [&a, &mid, &b].iter().map(|i| run_samples(&ExactSolver, i, 1, 0).unwrap()).collect();
        let s1 = compare_runs(&runs[0], &runs[1]).unwrap().0;
        let s2 = compare_runs(&runs[1], &runs[2]).unwrap().0;
        let best = if s1 > s2 { s1 } else { s2 };
        ensure!(best * rat(4, 1) >= rat_int(n as u128), "n={n}: swap sensitivity below n/4");
        notes.push(format!("n={n}"));
    }
    let algs: Vec<Box<dyn Algorithm>> = vec![
        Box::new(ConstantAlgorithm),
        Box::new(ExactSolver),
        Box::new(ParityFlipAlgorithm),
        Box::new(NoisySolver { p: 0.2 }),
        Box::new(RandomizedGreedy { sweeps: 1 }),
    ];
    for i in 0..20u64 {
        let alg = &algs[i as usize % algs.len()];
        let inst = random_instance(5, 6, 2, RelationFamily::Random, mix(0xaa, i)).map_err(|e| e.to_string())?;
        let edges: Vec<usize> = (0..inst.num_constraints()).collect();
        let samples = 24;
        let paths = swap_paths(alg.as_ref(), &inst, samples, i, &edges).map_err(|e| e.to_string())?;
        let sens = paths
            .iter()
            .flat_map(|p| [p.delete_from_original.clone(), p.delete_from_swapped.clone()])
            .max()
            .unwrap();
        let (e, swap) = paths.iter().map(|p| (p.edge, p.swap.clone())).max_by(|x, y| x.1.cmp(&y.1)).unwrap();
        let base = run_samples(alg.as_ref(), &inst, samples, i).unwrap();
        let other = run_samples(alg.as_ref(), &neighbor(&inst, e, NeighborPolicy::Swap).unwrap(), samples, i).unwrap();
        let sigma = se_of_hamming(&base, &other);
        let lhs = pcp_forge::util::to_f64(&swap);
        let rhs = 2.0 * pcp_forge::util::to_f64(&sens) + 3.0 * sigma;
        ensure!(lhs <= rhs + 1e-12, "{}: SwapSens {lhs} > 2 Sens + 3 sigma = {rhs}", alg.name());
    }
    Ok(format!("lemma pair at {}, 20 swap/delete pairs", notes.join(",")))
}

/// Random law on {0,1}^n with support at most 8.
fn random_dist(r: &mut Rng, n: usize) -> AssignmentDistribution {
    let support = r.gen_range(1..=8);
    let items = (0..support)
        .map(|_| {
            let a: Assignment = (0..n).map(|_| Label::Atom(r.gen_range(0..2))).collect();
            (a, rat(r.gen_range(1..10), 1))
        })
        .collect::<Vec<_>>();
    let z: BigRational = items.iter().map(|(_, w)| w.clone()).sum();
    AssignmentDistribution::empirical(items.into_iter().map(|(a, w)| (a, w / &z)).collect())
}

fn atoms(xs: &[u32]) -> Assignment {
    xs.iter().map(|&x| Label::Atom(x)).collect()
}

// 11. Earth mover's distance.
fn criterion_11() -> Check {
    let emd = |a: &AssignmentDistribution, b: &AssignmentDistribution| emd_exact(a, b).map(|x| x.0).map_err(|e| e.to_string());
    let mut r = rng(0xab);
    for _ in 0..60 {
        let n = r.gen_range(2..5);
        let (x, y, z) = (
            random_dist(&mut r, n),
            random_dist(&mut r, n),
            random_dist(&mut r, n),
        );
        let (xy, yx, yz, xz) = (emd(&x, &y)?, emd(&y, &x)?, emd(&y, &z)?, emd(&x, &z)?);
        ensure!(emd(&x, &x)?.is_zero(), "d(x, x) != 0");
        ensure!(xy == yx, "asymmetric: {xy} vs {yx}");
        ensure!(!xy.is_negative(), "negative distance");
        ensure!(xz <= &xy + &yz, "triangle: {xz} > {xy} + {yz}");
    }
    let h = rat(1, 2);
    let p = |xs: &[(&[u32], BigRational)]| AssignmentDistribution::empirical(xs.iter().map(|(a, w)| (atoms(a), w.clone())).collect());
    let diag = p(&[(&[0, 0], h.clone()), (&[1, 1], h.clone())]);
    let anti = p(&[(&[0, 1], h.clone()), (&[1, 0], h.clone())]);
    ensure!(emd(&diag, &anti)? == one(), "diagonal vs anti-diagonal");
    let zero = p(&[(&[0, 0], one())]);
    ensure!(emd(&zero, &diag)? == one(), "point vs diagonal");
    let mixed = p(&[(&[0, 0], rat(3, 4)), (&[1, 1], rat(1, 4))]);
    ensure!(emd(&diag, &mixed)? == rat(1, 2), "1/4 of the mass moves distance 2");
    let lopsided = p(&[(&[0, 1], rat(3, 4)), (&[1, 1], rat(1, 4))]);
    ensure!(emd(&zero, &lopsided)? == rat(5, 4), "point vs lopsided");
    for _ in 0..200 {
        let n = r.gen_range(1..4);
        let marg = |r: &mut Rng| -> Marginal {
            let w = r.gen_range(0..=4);
            let mut m = vec![(Label::Atom(0), rat(w, 4)), (Label::Atom(1), rat(4 - w, 4))];
            m.retain(|(_, p)| !p.is_zero());
            m
        };
        let a = AssignmentDistribution::product((0..n).map(|_| marg(&mut r)).collect());
        let b = AssignmentDistribution::product((0..n).map(|_| marg(&mut r)).collect());
        let (ex, up) = (emd(&a, &b)?, emd_upper_product(&a, &b).map_err(|e| e.to_string())?);
        ensure!(ex <= up, "emd_exact {ex} > product bound {up}");
    }
    Ok("60 triples, 4 hand cases, 200 product pairs".into())
}

// 12. Locality bound for t-local rules.
fn criterion_12() -> Check {
    let rules = ["local-max", "color-parity", "even-degree", "constant"];
    let mut worst = (0usize, 1usize);
    for i in 0..50u64 {
        let mut r = rng(mix(0xac, i));
        let n = r.gen_range(6..=14);
        let delta = r.gen_range(2..=4);
        let m = r.gen_range(n / 2..=n * delta / 2);
        let t = 1 + (i as usize % 2);
        let g = random_bounded_graph(n, m, delta, mix(0xac, i)).map_err(|e| e.to_string())?;
        ensure!(g.max_degree() <= delta, "degree above {delta}");
        let alg = LocalAlgorithm::by_name(rules[i as usize % rules.len()], t).unwrap();
        let rep = check_nonsignaling_sensitivity(&alg, &g, 6, i).map_err(|e| e.to_string())?;
        let bound = 2 * g.max_degree().pow(alg.t as u32);
        for e in &rep.edges {
            let (a, b) = g.edges()[e.edge];
            let (da, db) = (bfs(n, g.edges(), a), bfs(n, g.edges(), b));
            let affected = (0..n).filter(|&v| da[v] <= alg.t && db[v] <= alg.t).count();
            ensure!(affected == e.affected, "graph {i}, edge {}: affected {} vs {affected}", e.edge, e.affected);
            ensure!(affected <= bound, "graph {i}: affected {affected} > 2 Delta^t = {bound}");
            ensure!(e.emd <= e.coupling && e.coupling <= rat_int(affected as u128), "graph {i}: coupling out of range");
            ensure!(e.leaked == 0, "graph {i}: a vertex outside the affected set moved");
            if affected * worst.1 > worst.0 * bound.max(1) {
                worst = (affected, bound);
            }
        }
        ensure!(rep.holds(), "graph {i}: report does not hold");
    }
    Ok(format!("50 graphs, tightest {}/{}", worst.0, worst.1))
}

// 13. One round end to end, replayed.
fn criterion_13() -> Check {
    let inst = e2lin_cycle(&CycleSpec::ones(8)).unwrap();
    let cfg = PipelineConfig { rounds: 1, seed: 13, ..Default::default() };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = run_pipeline(&cfg, &inst, None, d1.path()).map_err(|e| e.to_string())?;
    ensure!(run.stages.len() == 4, "{} stages", run.stages.len());
    for s in &run.stages {
        ensure!(s.witness_value.is_one(), "stage {} witness value {}", s.kind.as_str(), s.witness_value);
    }
    ensure!(run.output.value(&run.witness).unwrap().is_one(), "final witness not satisfying");
    let product: BigRational = run.ledger.stages.iter().map(|s| &s.c_i * &s.c_sigma).product();
    ensure!(run.ledger.factor == product && run.ledger.stages.len() == 4, "ledger does not compose the stages");
    run_pipeline(&cfg, &inst, None, d2.path()).map_err(|e| e.to_string())?;
    let read = |d: &std::path::Path| std::fs::read(d.join("report.json")).unwrap();
    ensure!(read(d1.path()) == read(d2.path()), "reports differ on replay");
    let mut names: Vec<_> = std::fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in &names {
        ensure!(std::fs::read(d1.path().join(name)).unwrap() == std::fs::read(d2.path().join(name)).unwrap(), "{name:?} differs");
    }
    let last = &run.stages[3];
    Ok(format!("{} files identical, final size {:?}", names.len(), last.output_size))
}

fn main() {
    let criteria: Vec<(usize, fn() -> Check, Duration)> = vec![
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(30)),
        (3, criterion_3, Duration::from_secs(60)),
        (4, criterion_4, Duration::from_secs(300)),
        (5, criterion_5, Duration::from_secs(120)),
        (6, criterion_6, Duration::from_secs(600)),
        (7, criterion_7, Duration::from_secs(10)),
        (8, criterion_8, Duration::from_secs(30)),
        (9, criterion_9, Duration::from_secs(5)),
        (10, criterion_10, Duration::from_secs(120)),
        (11, criterion_11, Duration::from_secs(30)),
        (12, criterion_12, Duration::from_secs(60)),
        (13, criterion_13, Duration::from_secs(600)),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, f, budget) in criteria {
        if only.is_some_and(|o| o != i) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let took = start.elapsed();
        let res = match res {
            Ok(note) if took > budget => Err(format!("{note}; over the {}s budget", budget.as_secs())),
            other => other,
        };
        match res {
            Ok(note) => println!("criterion {i}: PASS ({:.2}s) {note}", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {i}: FAIL ({:.2}s) {why}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
