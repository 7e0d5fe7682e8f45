use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::Rng as _;

use pcp_forge::csp::format::{from_json, to_json};
use pcp_forge::csp::{hamming, tv_distance, Assignment, AssignmentDistribution, Label, Relation};
use pcp_forge::generators::{
    e2lin_cycle, label_cover, planted_assignment, random_bounded_graph, random_instance, random_regular_graph,
    random_regular_instance, CycleSpec, RelationFamily,
};
use pcp_forge::graph::{bsrw_kernel, lambda, sample_asrw, superimpose, AsrwOutcome, Graph};
use pcp_forge::harness::constraint_diff;
use pcp_forge::nonsignal::{check_nonsignaling_sensitivity, LocalAlgorithm};
use pcp_forge::oracles::{
    brute_force_opt, default_swap, emd_exact, emd_upper_product, estimate_sensitivity, neighbor, Algorithm,
    ExactSolver, NeighborPolicy, ParityFlipAlgorithm,
};
use pcp_forge::recovery::recover_degree;
use pcp_forge::transforms::{
    degree_reduce, e3sat_to_3lin, expanderize, lift_degree, lift_e3sat, to_e3sat,
};
use pcp_forge::util::{rat, rat_int, rng};

fn family() -> impl Strategy<Value = RelationFamily> {
    prop_oneof![
        Just(RelationFamily::Random),
        Just(RelationFamily::Parity),
        Just(RelationFamily::Planted),
        Just(RelationFamily::PlantedProjection),
    ]
}

fn cycle_bits(sigma: &[u32]) -> Assignment {
    sigma.iter().map(|&x| Label::Atom(x)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn value_plus_cost_is_one(n in 2usize..7, m in 1usize..10, q in 2u32..4, f in family(), seed in any::<u64>()) {
        let inst = random_instance(n, m, q, f, seed).unwrap();
        let s = inst.random_assignment(&mut rng(seed ^ 1));
        prop_assert_eq!(inst.value(&s).unwrap() + inst.cost(&s).unwrap(), BigRational::one());
    }

    #[test]
    fn swaps_move_one_edge(n in 2usize..6, m in 1usize..8, f in family(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let inst = random_instance(n, m, 2, f, seed).unwrap();
        let e = pick.index(m);
        let other = inst.swap_constraint(e, default_swap(&inst, e).unwrap()).unwrap();
        prop_assert_eq!(inst.swap_distance(&other).unwrap(), 1);
        let same = inst.swap_constraint(e, inst.constraints[e].relation.clone()).unwrap();
        prop_assert_eq!(inst.swap_distance(&same).unwrap(), 0);
    }

    #[test]
    fn swap_distance_is_a_metric(seed in any::<u64>(), flips in prop::collection::vec((0usize..8, 0usize..3), 0..10)) {
        let base = random_instance(5, 8, 2, RelationFamily::Random, seed).unwrap();
        let mut xs = [base.clone(), base.clone(), base];
        for (e, which) in flips {
            let r = default_swap(&xs[which], e).unwrap();
            xs[which] = xs[which].swap_constraint(e, r).unwrap();
        }
        let d = |a: usize, b: usize| xs[a].swap_distance(&xs[b]).unwrap();
        prop_assert_eq!(d(0, 0), 0);
        prop_assert_eq!(d(0, 1), d(1, 0));
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2));
    }

    #[test]
    fn projections_accept_one_tuple_per_left_label(nu in 1usize..4, nv in 1usize..4, m in 1usize..6, su in 2u32..5, sv in 2u32..5, seed in any::<u64>()) {
        let (inst, sigma) = label_cover(nu, nv, m, su, sv, seed).unwrap();
        prop_assert!(inst.value(&sigma).unwrap().is_one());
        for c in &inst.constraints {
            let (lu, lv) = (inst.alphabet_of(c.vars[0]).labels(64).unwrap(), inst.alphabet_of(c.vars[1]).labels(64).unwrap());
            for a in &lu {
                let hits = lv.iter().filter(|b| c.relation.accepts(&[a, b])).count();
                prop_assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn json_round_trip(n in 1usize..7, m in 0usize..10, q in 2u32..5, f in family(), seed in any::<u64>()) {
        let inst = random_instance(n, m, q, f, seed).unwrap();
        let back = from_json(&to_json(&inst)).unwrap();
        prop_assert_eq!(to_json(&back), to_json(&inst));
        prop_assert_eq!(back, inst.canonical());
    }

    #[test]
    fn planted_instances_are_satisfiable(n in 2usize..7, m in 1usize..10, q in 2u32..4, seed in any::<u64>()) {
        let inst = random_instance(n, m, q, RelationFamily::Planted, seed).unwrap();
        let planted = planted_assignment(n, q, seed);
        prop_assert!(inst.value(&planted).unwrap().is_one());
        prop_assert!(brute_force_opt(&inst).unwrap().0.is_one());
    }

    #[test]
    fn cycle_violations_are_even(half in 2usize..33, seed in any::<u64>()) {
        let n = 2 * half;
        let inst = e2lin_cycle(&CycleSpec::ones(n)).unwrap();
        let mut r = rng(seed);
        let s: Vec<u32> = (0..n).map(|_| r.gen_range(0..2)).collect();
        let violated = inst.constraints.iter().filter(|c| !c.satisfied(&cycle_bits(&s))).count();
        prop_assert_eq!(violated % 2, 0);
    }

    #[test]
    fn superimposed_spectra(n in 6usize..14, seed in any::<u64>()) {
        let n = n + n % 2;
        let g = random_regular_graph(n, 3, seed).unwrap();
        let h = random_regular_graph(n, 4, seed ^ 7).unwrap();
        let s = superimpose(&g, &h).unwrap();
        prop_assert_eq!(s.regular_degree(), Some(7));
        prop_assert!(lambda(&s).unwrap().value <= lambda(&g).unwrap().value + lambda(&h).unwrap().value + 1e-6);
    }

    #[test]
    fn kernel_rows_are_distributions(n in 4usize..10, t in 1usize..4, seed in any::<u64>()) {
        let n = n + n % 2;
        let g = random_regular_graph(n, 3, seed).unwrap();
        let k = bsrw_kernel(&g, t).unwrap();
        for v in 0..n {
            let row = k.row(v);
            prop_assert!(row.iter().all(|p| !p.is_negative()));
            prop_assert!(row.iter().sum::<BigRational>().is_one());
        }
    }

    #[test]
    fn transforms_keep_the_witness(m in 1usize..6, seed in any::<u64>()) {
        let (inst, sigma) = label_cover(2, 2, m, 3, 2, seed).unwrap();
        let (sat, enc) = to_e3sat(&inst).unwrap();
        let bits = lift_e3sat(&sat, &enc, &sigma).unwrap();
        prop_assert!(sat.value(&bits).unwrap().is_one());
        // Satisfied clauses keep 4 of their 7 equations.
        let lin = e3sat_to_3lin(&sat).unwrap();
        prop_assert_eq!(lin.value(&bits).unwrap(), rat(4, 7));
    }

    #[test]
    fn regularity_after_reduction(half in 3usize..7, seed in any::<u64>()) {
        let n = 2 * half;
        let inst = random_regular_instance(n, 3, 2, RelationFamily::Planted, seed).unwrap();
        let sigma = planted_assignment(n, 2, seed);
        let (out, map) = degree_reduce(&inst, 4, seed).unwrap();
        prop_assert_eq!(Graph::of_instance(&out).unwrap().regular_degree(), Some(5));
        prop_assert!(out.value(&lift_degree(&map, &sigma).unwrap()).unwrap().is_one());
        if n <= 10 {
            let (out, _) = expanderize(&inst, 10, seed).unwrap();
            prop_assert_eq!(Graph::of_instance(&out).unwrap().regular_degree(), Some(13));
            prop_assert!(out.value(&sigma).unwrap().is_one());
        }
        for e in 0..inst.num_constraints() {
            let other = neighbor(&inst, e, NeighborPolicy::Swap).unwrap();
            let (out2, _) = degree_reduce(&other, 4, seed).unwrap();
            let (out1, _) = degree_reduce(&inst, 4, seed).unwrap();
            prop_assert!(constraint_diff(&out1, &out2) <= 1);
        }
    }

    #[test]
    fn degree_recovery_moves_little(half in 2usize..6, h in 1usize..5, seed in any::<u64>()) {
        let n = 2 * half;
        let inst = random_regular_instance(n, 3, 3, RelationFamily::Planted, seed).unwrap();
        let (out, map) = degree_reduce(&inst, 4, seed).unwrap();
        let mut r = rng(seed);
        let a = out.random_assignment(&mut r);
        let mut b = a.clone();
        for _ in 0..h {
            let w = r.gen_range(0..out.num_vars());
            b[w] = out.alphabet_of(w).random_label(&mut r);
        }
        let (ma, mb) = (recover_degree(&map, &a).unwrap().marginals(), recover_degree(&map, &b).unwrap().marginals());
        let tv: BigRational = ma.iter().zip(&mb).map(|(x, y)| tv_distance(x, y)).sum();
        // Every cloud has 3 copies (the degree of the input).
        prop_assert!(tv <= rat_int(hamming(&a, &b).unwrap() as u128) / rat(3, 1));
    }

    #[test]
    fn emd_against_the_product_bound(ws in prop::collection::vec((0i64..=4, 0i64..=4), 1..4)) {
        let m = |w: i64| {
            let mut v = vec![(Label::Atom(0), rat(w, 4)), (Label::Atom(1), rat(4 - w, 4))];
            v.retain(|(_, p)| !p.is_zero());
            v
        };
        let a = AssignmentDistribution::product(ws.iter().map(|&(x, _)| m(x)).collect());
        let b = AssignmentDistribution::product(ws.iter().map(|&(_, y)| m(y)).collect());
        let ex = emd_exact(&a, &b).unwrap().0;
        prop_assert!(ex <= emd_upper_product(&a, &b).unwrap());
        prop_assert_eq!(ex, emd_exact(&b, &a).unwrap().0);
    }

    #[test]
    fn deterministic_sensitivity_is_hamming(n in 3usize..6, m in 2usize..7, seed in any::<u64>(), parity in any::<bool>()) {
        let inst = random_instance(n, m, 2, RelationFamily::Random, seed).unwrap();
        let alg: Box<dyn Algorithm> = if parity { Box::new(ParityFlipAlgorithm) } else { Box::new(ExactSolver) };
        let rep = estimate_sensitivity(alg.as_ref(), &inst, NeighborPolicy::Delete, 3, seed, None).unwrap();
        let base = alg.run(&inst, &mut rng(0)).unwrap();
        for e in &rep.edges {
            let out = alg.run(&inst.delete_constraint(e.edge).unwrap(), &mut rng(0)).unwrap();
            prop_assert_eq!(&e.emd, &rat_int(hamming(&base, &out).unwrap() as u128));
            prop_assert_eq!(&e.coupling, &e.emd);
        }
    }

    #[test]
    fn far_edges_do_not_signal(n in 6usize..14, m in 4usize..20, t in 1usize..3, seed in any::<u64>()) {
        let g = random_bounded_graph(n, m.min(2 * n), 3, seed).unwrap();
        let rep = check_nonsignaling_sensitivity(&LocalAlgorithm::color_parity(t), &g, 4, seed).unwrap();
        prop_assert!(rep.holds());
        for e in &rep.edges {
            prop_assert_eq!(e.leaked, 0);
            if e.affected == 0 {
                prop_assert!(e.coupling.is_zero());
            }
        }
    }
}

#[test]
fn cycles_have_two_complementary_solutions() {
    for n in (4..=16).step_by(2) {
        let inst = e2lin_cycle(&CycleSpec::ones(n)).unwrap();
        let mut sols = Vec::new();
        for x in 0u32..1 << n {
            let s: Vec<u32> = (0..n).map(|i| (x >> i) & 1).collect();
            let a = cycle_bits(&s);
            let violated = inst.constraints.iter().filter(|c| !c.satisfied(&a)).count();
            assert_eq!(violated % 2, 0, "n={n}, x={x:b}");
            if violated == 0 {
                sols.push(a);
            }
        }
        assert_eq!(sols.len(), 2);
        assert_eq!(hamming(&sols[0], &sols[1]).unwrap(), n);
    }
}

/// Kept walk lengths follow the geometric law truncated at B.
#[test]
fn walk_lengths_are_truncated_geometric() {
    let g = random_regular_graph(10, 3, 4).unwrap();
    let (t, b) = (3usize, 10usize);
    let mut r = rng(11);
    let mut counts = vec![0f64; b + 1];
    let mut kept = 0f64;
    for _ in 0..100_000 {
        if let AsrwOutcome::Kept(w) = sample_asrw(&g, t, b, r.gen_range(0..10), &mut r) {
            counts[w.len()] += 1.0;
            kept += 1.0;
        }
    }
    let stay = 1.0 - 1.0 / t as f64;
    let z: f64 = (0..=b).map(|l| stay.powi(l as i32)).sum();
    let chi2: f64 = (0..=b)
        .map(|l| {
            let e = kept * stay.powi(l as i32) / z;
            (counts[l] - e).powi(2) / e
        })
        .sum();
    // 0.1% critical value with 10 degrees of freedom.
    assert!(chi2 < 29.59, "chi2 = {chi2}");
}

#[test]
fn equality_swap_is_detected() {
    let (inst, _) = label_cover(2, 2, 3, 3, 3, 1).unwrap();
    let other = inst.swap_constraint(0, Relation::Trivial(2)).unwrap();
    assert_eq!(inst.swap_distance(&other).unwrap(), 1);
}
