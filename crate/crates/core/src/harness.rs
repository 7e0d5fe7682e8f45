//! Measures the four reduction obligations for each pass: completeness of
//! the canonical lift, soundness of the recovery, instance distance C_I and
//! assignment distance C_sigma.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use rand::Rng as _;
use serde_json::{json, Value};

use crate::csp::format::relation_fingerprint;
use crate::csp::{hamming, tv_distance, Assignment, AssignmentDistribution, Instance, Label};
use crate::error::{Error, Result};
use crate::generators::{label_cover, planted_assignment, random_regular_instance, RelationFamily};
use crate::graph::{bsrw_kernel, Graph};
use crate::oracles::{neighbor, NeighborPolicy};
use crate::recovery::{
    alphabet_marginals, power_opinions, recover_3lin, recover_alphabet, recover_degree, recover_e3sat,
    recover_serial,
};
use crate::transforms::alphabet::common_pad;
use crate::transforms::{
    alphabet_reduce, degree_reduce, e3sat_to_3lin, expanderize, lift_alphabet, lift_degree, lift_e3sat, lift_power,
    named_constraint_diff, power, serial_repeat, to_e3sat, walk_bound, AlphabetConfig, PowerMode,
};
use crate::util::{format_rational, mix, rat, rat_int, rng, Rng};

pub const REPORT_SCHEMA: &str = "pcp-forge/reduction-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pass {
    DegreeReduce,
    Expanderize,
    Power,
    AlphabetReduce,
    E3Sat,
    ThreeLin,
    Serial,
}

impl Pass {
    pub const ALL: [Pass; 7] =
        [Pass::DegreeReduce, Pass::Expanderize, Pass::Power, Pass::AlphabetReduce, Pass::E3Sat, Pass::ThreeLin, Pass::Serial];

    pub fn as_str(&self) -> &'static str {
        match self {
            Pass::DegreeReduce => "degree-reduce",
            Pass::Expanderize => "expanderize",
            Pass::Power => "power",
            Pass::AlphabetReduce => "alphabet-reduce",
            Pass::E3Sat => "e3sat",
            Pass::ThreeLin => "3lin",
            Pass::Serial => "serial",
        }
    }
}

impl FromStr for Pass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Pass> {
        Pass::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown pass {s}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    /// Vertices of the sampled regular instances.
    pub n: usize,
    pub d0: usize,
    pub t: usize,
    /// Assignment pairs per trial for the C_sigma check.
    pub pairs: usize,
}

impl VerifyConfig {
    pub fn for_pass(pass: Pass, trials: usize, seed: u64) -> VerifyConfig {
        let (n, d0, t) = match pass {
            Pass::Expanderize => (8, 8, 1),
            Pass::Power => (4, 4, 2),
            _ => (10, 4, 3),
        };
        VerifyConfig { trials, seed, n, d0, t, pairs: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Measured and reported; no finite bound is asserted.
    Info,
}

impl Status {
    fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub declared: Option<BigRational>,
    /// Worst value seen over all trials.
    pub measured: BigRational,
    pub status: Status,
    pub note: String,
}

impl Obligation {
    fn to_json(&self) -> Value {
        json!({
            "declared": self.declared.as_ref().map(format_rational),
            "measured": format_rational(&self.measured),
            "status": self.status.as_str(),
            "note": self.note,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionReport {
    pub pass: Pass,
    pub config: VerifyConfig,
    pub completeness: Obligation,
    pub soundness: Obligation,
    pub instance_distance: Obligation,
    pub assignment_distance: Obligation,
    /// Sizes (n, m) of the last sampled input and output.
    pub input_size: (usize, usize),
    pub output_size: (usize, usize),
    /// Soundness samples: (output cost, expected recovered cost).
    pub soundness_points: usize,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        [&self.completeness, &self.soundness, &self.instance_distance, &self.assignment_distance]
            .iter()
            .all(|o| o.status != Status::Fail)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": REPORT_SCHEMA,
            "pass_name": self.pass.as_str(),
            "config": {
                "trials": self.config.trials,
                "seed": self.config.seed,
                "n": self.config.n,
                "d0": self.config.d0,
                "t": self.config.t,
                "pairs": self.config.pairs,
            },
            "completeness": self.completeness.to_json(),
            "soundness": self.soundness.to_json(),
            "c_i": self.instance_distance.to_json(),
            "c_sigma": self.assignment_distance.to_json(),
            "input_size": [self.input_size.0, self.input_size.1],
            "output_size": [self.output_size.0, self.output_size.1],
            "soundness_points": self.soundness_points,
            "pass": self.passed(),
        })
    }
}

/// What one trial measured.
struct Trial {
    /// Value of the canonical lift (and of its recovery) minus the expected
    /// completeness; zero when complete.
    completeness_gap: BigRational,
    ci: BigRational,
    ci_declared: BigRational,
    csigma: BigRational,
    csigma_declared: BigRational,
    csigma_extra_ok: bool,
    /// (output cost, recovered cost) pairs and the declared ratio, if any.
    soundness: Vec<(BigRational, BigRational)>,
    soundness_declared: Option<BigRational>,
    /// Soundness holds with equality rather than as an inequality.
    soundness_exact: bool,
    input_size: (usize, usize),
    output_size: (usize, usize),
}

/// Multiset difference of constraints keyed by (vars, relation, mass).
pub fn constraint_diff(a: &Instance, b: &Instance) -> usize {
    let names: Vec<String> = (0..a.num_vars().max(b.num_vars())).map(|v| v.to_string()).collect();
    named_constraint_diff(a, &names[..a.num_vars()], b, &names[..b.num_vars()])
}

/// Mass version of `constraint_diff`: constraints keyed by (vars,
/// relation), mass summed; the larger one-sided excess.
pub fn constraint_mass_diff(a: &Instance, b: &Instance) -> BigRational {
    let keyed = |i: &Instance| {
        let mut m: BTreeMap<(Vec<usize>, String), BigRational> = BTreeMap::new();
        for c in &i.constraints {
            *m.entry((c.vars.clone(), relation_fingerprint(&c.relation))).or_insert_with(BigRational::zero) += c.mass();
        }
        m
    };
    let (ka, kb) = (keyed(a), keyed(b));
    let excess = |x: &BTreeMap<_, BigRational>, y: &BTreeMap<_, BigRational>| -> BigRational {
        x.iter()
            .map(|(k, p)| {
                let d = p - y.get(k).cloned().unwrap_or_else(BigRational::zero);
                if d.is_positive() { d } else { BigRational::zero() }
            })
            .sum()
    };
    let (l, r) = (excess(&ka, &kb), excess(&kb, &ka));
    if l > r { l } else { r }
}

/// Random, planted-then-corrupted and all-first assignments.
fn corpus(inst: &Instance, planted: &[Label], r: &mut Rng) -> Vec<Assignment> {
    let mut out = vec![inst.random_assignment(r), inst.random_assignment(r), inst.first_assignment()];
    for frac in [0.05, 0.1, 0.25, 0.5] {
        let mut a = planted.to_vec();
        for (v, l) in a.iter_mut().enumerate() {
            if r.gen_bool(frac) {
                *l = inst.alphabet_of(v).random_label(r);
            }
        }
        out.push(a);
    }
    out
}

/// sigma with coordinate w moved to a different label (if one exists).
fn change_one(inst: &Instance, sigma: &[Label], w: usize, r: &mut Rng) -> Assignment {
    let mut out = sigma.to_vec();
    if inst.alphabet_of(w).size() < 2 {
        return out;
    }
    while out[w] == sigma[w] {
        out[w] = inst.alphabet_of(w).random_label(r);
    }
    out
}

fn sum_tv(a: &AssignmentDistribution, b: &AssignmentDistribution) -> BigRational {
    (0..a.num_vars()).map(|u| tv_distance(&a.marginal(u), &b.marginal(u))).sum()
}

fn cost_of(inst: &Instance, d: &AssignmentDistribution) -> Result<BigRational> {
    Ok(BigRational::one() - d.expected_value(inst)?)
}

fn size(i: &Instance) -> (usize, usize) {
    (i.num_vars(), i.num_constraints())
}

fn swap_neighbor(inst: &Instance, r: &mut Rng) -> Result<Instance> {
    neighbor(inst, r.gen_range(0..inst.num_constraints()), NeighborPolicy::Swap)
}

/// Minimum over clouds of min_{|S| <= |cloud|/2} |E(S, S^c)| / |S|, from
/// the intra-cloud constraints (everything after the first `m`).
fn cloud_expansion(out: &Instance, m: usize, clouds: &[Vec<usize>]) -> Result<BigRational> {
    let mut best: Option<BigRational> = None;
    for cloud in clouds.iter().filter(|c| c.len() >= 2) {
        if cloud.len() > 20 {
            return Err(Error::TooLarge(format!("cloud of size {}", cloud.len())));
        }
        let pos: BTreeMap<usize, usize> = cloud.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges: Vec<(usize, usize)> = out.constraints[m..]
            .iter()
            .filter_map(|c| Some((*pos.get(&c.vars[0])?, *pos.get(&c.vars[1])?)))
            .collect();
        let k = cloud.len();
        for s in 1u32..(1 << k) - 1 {
            let sz = s.count_ones() as usize;
            if 2 * sz > k {
                continue;
            }
            let cut = edges.iter().filter(|(a, b)| ((s >> a) & 1) != ((s >> b) & 1)).count();
            let phi = rat(cut as i64, sz as i64);
            if best.as_ref().is_none_or(|b| phi < *b) {
                best = Some(phi);
            }
        }
    }
    Ok(best.unwrap_or_else(BigRational::zero))
}

fn trial_degree(cfg: &VerifyConfig, seed: u64) -> Result<Trial> {
    let mut r = rng(mix(seed, 1));
    let inst = random_regular_instance(cfg.n, 3, 3, RelationFamily::Planted, seed)?;
    let sigma = planted_assignment(cfg.n, 3, seed);
    let other = swap_neighbor(&inst, &mut r)?;
    let (out, map) = degree_reduce(&inst, cfg.d0, seed)?;
    let (out2, _) = degree_reduce(&other, cfg.d0, seed)?;
    let lift = lift_degree(&map, &sigma)?;
    let gap = (BigRational::one() - out.value(&lift)?) + (BigRational::one() - recover_degree(&map, &lift)?.expected_value(&inst)?);
    let min_cloud = map.clouds.iter().map(Vec::len).filter(|&l| l > 0).min().unwrap_or(1);
    let mut csigma = BigRational::zero();
    for _ in 0..cfg.pairs {
        let a = out.random_assignment(&mut r);
        let b = change_one(&out, &a, r.gen_range(0..out.num_vars()), &mut r);
        let d = sum_tv(&recover_degree(&map, &a)?, &recover_degree(&map, &b)?) / rat_int(hamming(&a, &b)?.max(1) as u128);
        csigma = csigma.max(d);
    }
    let phi = cloud_expansion(&out, inst.num_constraints(), &map.clouds)?;
    let dp1 = rat(cfg.d0 as i64 + 1, 1);
    let declared = (!phi.is_zero()).then(|| {
        let b = rat(4, 1) * &dp1 / &phi;
        let a = rat(2, 1) * &dp1;
        if a > b { a } else { b }
    });
    let mut points = Vec::new();
    for s in corpus(&out, &lift, &mut r) {
        points.push((out.cost(&s)?, cost_of(&inst, &recover_degree(&map, &s)?)?));
    }
    Ok(Trial {
        completeness_gap: gap,
        ci: rat_int(constraint_diff(&out, &out2) as u128),
        ci_declared: BigRational::one(),
        csigma,
        csigma_declared: rat(1, min_cloud as i64),
        csigma_extra_ok: true,
        soundness: points,
        soundness_declared: declared,
        soundness_exact: false,
        input_size: size(&inst),
        output_size: size(&out),
    })
}

fn trial_expanderize(cfg: &VerifyConfig, seed: u64) -> Result<Trial> {
    let mut r = rng(mix(seed, 2));
    let inst = random_regular_instance(cfg.n, 3, 3, RelationFamily::Planted, seed)?;
    let sigma = planted_assignment(cfg.n, 3, seed);
    let other = swap_neighbor(&inst, &mut r)?;
    let (out, _) = expanderize(&inst, cfg.d0, seed)?;
    let (out2, _) = expanderize(&other, cfg.d0, seed)?;
    let mut points = Vec::new();
    for s in corpus(&inst, &sigma, &mut r) {
        points.push((out.cost(&s)?, inst.cost(&s)?));
    }
    let mut csigma = BigRational::zero();
    for _ in 0..cfg.pairs {
        let a = out.random_assignment(&mut r);
        let b = change_one(&out, &a, r.gen_range(0..out.num_vars()), &mut r);
        csigma = csigma.max(rat_int(hamming(&a, &b)? as u128) / rat_int(hamming(&a, &b)?.max(1) as u128));
    }
    Ok(Trial {
        completeness_gap: BigRational::one() - out.value(&sigma)?,
        ci: rat_int(constraint_diff(&out, &out2) as u128),
        ci_declared: BigRational::one(),
        csigma,
        csigma_declared: BigRational::one(),
        csigma_extra_ok: true,
        soundness: points,
        // cost * m = cost' * m'
        soundness_declared: Some(out.total_mass() / inst.total_mass()),
        soundness_exact: true,
        input_size: size(&inst),
        output_size: size(&out),
    })
}

fn trial_power(cfg: &VerifyConfig, seed: u64) -> Result<Trial> {
    let mut r = rng(mix(seed, 3));
    let inst = random_regular_instance(cfg.n, 3, 2, RelationFamily::Planted, seed)?;
    let sigma = planted_assignment(cfg.n, 2, seed);
    let other = swap_neighbor(&inst, &mut r)?;
    let (out, _) = power(&inst, cfg.t, PowerMode::Exact)?;
    let (out2, _) = power(&other, cfg.t, PowerMode::Exact)?;
    let g = Graph::of_instance(&inst)?;
    let kernel = bsrw_kernel(&g, cfg.t)?;
    let lift = lift_power(&inst, &sigma, cfg.t)?;
    let recovered = AssignmentDistribution::product(
        power_opinions(&inst, &kernel, &lift)?.into_iter().map(|o| o.mu_star).collect(),
    );
    let gap = (BigRational::one() - out.value(&lift)?) + (BigRational::one() - recovered.expected_value(&inst)?);
    // D = (dt)^B copies per unit of n-normalized mass.
    let b = walk_bound(cfg.t, inst.max_alphabet());
    let dt: BigRational = rat((3 * cfg.t) as i64, 1);
    let big_d: BigRational = Pow::pow(&dt, b);
    let ci = constraint_mass_diff(&out, &out2) * rat_int(cfg.n as u128) * &big_d;
    let mut csigma = BigRational::zero();
    let mut extra = true;
    for _ in 0..cfg.pairs {
        let a = out.random_assignment(&mut r);
        let w = r.gen_range(0..out.num_vars());
        let bb = change_one(&out, &a, w, &mut r);
        let oa = power_opinions(&inst, &kernel, &a)?;
        let ob = power_opinions(&inst, &kernel, &bb)?;
        let mut l1 = BigRational::zero();
        for (x, y) in oa.iter().zip(&ob) {
            let tv_star = tv_distance(&x.mu_star, &y.mu_star);
            extra &= tv_star <= tv_distance(&x.mu, &y.mu) * rat(4, 1);
            extra &= x.denominator >= rat(9, 10) && y.denominator >= rat(9, 10);
            l1 += tv_star * rat(2, 1);
        }
        csigma = csigma.max(l1);
    }
    let mut points = Vec::new();
    for s in corpus(&out, &lift, &mut r) {
        let d = AssignmentDistribution::product(power_opinions(&inst, &kernel, &s)?.into_iter().map(|o| o.mu_star).collect());
        points.push((out.cost(&s)?, cost_of(&inst, &d)?));
    }
    Ok(Trial {
        completeness_gap: gap,
        ci,
        ci_declared: big_d,
        csigma,
        csigma_declared: rat(8, 1),
        csigma_extra_ok: extra,
        soundness: points,
        soundness_declared: None,
        soundness_exact: false,
        input_size: size(&inst),
        output_size: size(&out),
    })
}

fn flip_bit(sigma: &[Label], v: usize) -> Assignment {
    let mut out = sigma.to_vec();
    out[v] = Label::Atom(1 - out[v].as_atom().unwrap_or(0).min(1));
    out
}

fn trial_alphabet(cfg: &VerifyConfig, seed: u64) -> Result<Trial> {
    let mut r = rng(mix(seed, 4));
    let (inst, sigma) = label_cover(2, 2, 3, 3, 3, seed)?;
    let other = swap_neighbor(&inst, &mut r)?;
    let pad = common_pad(&[&inst, &other])?;
    let acfg = AlphabetConfig { pad_to: Some(pad), ..AlphabetConfig::default() };
    let (out, map) = alphabet_reduce(&inst, &acfg)?;
    let (out2, map2) = alphabet_reduce(&other, &acfg)?;
    let ci = named_constraint_diff(&out, &map.names, &out2, &map2.names);
    let n_edge = map.testers.iter().map(|t| t.emitted.iter().map(|e| e.vars.len()).sum::<usize>()).max().unwrap_or(0);
    let lift = lift_alphabet(&inst, &map, out.num_vars(), &sigma)?;
    let gap = (BigRational::one() - out.value(&lift)?) + (BigRational::one() - recover_alphabet(&map, &lift)?.expected_value(&inst)?);
    let x_vars: Vec<usize> = map.blocks.iter().flatten().copied().collect();
    let mut csigma = BigRational::zero();
    let mut extra = true;
    for _ in 0..cfg.pairs {
        let base = lift_alphabet(&inst, &map, out.num_vars(), &inst.random_assignment(&mut r))?;
        let mut a = base;
        for &x in &x_vars {
            if r.gen_bool(0.15) {
                a = flip_bit(&a, x);
            }
        }
        let b = flip_bit(&a, x_vars[r.gen_range(0..x_vars.len())]);
        let (ma, mb) = (alphabet_marginals(&map, &a)?, alphabet_marginals(&map, &b)?);
        let per: Vec<BigRational> = ma.iter().zip(&mb).map(|(x, y)| tv_distance(x, y)).collect();
        extra &= per.iter().all(|p| *p <= rat(8, map.ell as i64));
        csigma = csigma.max(per.into_iter().sum());
    }
    let mut points = Vec::new();
    for s in corpus(&out, &lift, &mut r) {
        points.push((out.cost(&s)?, cost_of(&inst, &recover_alphabet(&map, &s)?)?));
    }
    Ok(Trial {
        completeness_gap: gap,
        ci: rat_int(ci as u128),
        ci_declared: rat_int(n_edge as u128),
        csigma,
        csigma_declared: rat(8, map.ell as i64),
        csigma_extra_ok: extra,
        soundness: points,
        soundness_declared: Some(rat(384, 1)),
        soundness_exact: false,
        input_size: size(&inst),
        output_size: size(&out),
    })
}

fn bool_pairs(out: &Instance, cfg: &VerifyConfig, r: &mut Rng, recover: impl Fn(&[Label]) -> Assignment) -> Result<BigRational> {
    let mut worst = BigRational::zero();
    for _ in 0..cfg.pairs {
        let a = out.random_assignment(r);
        let b = flip_bit(&a, r.gen_range(0..out.num_vars()));
        worst = worst.max(rat_int(hamming(&recover(&a), &recover(&b))? as u128));
    }
    Ok(worst)
}

fn trial_e3sat(cfg: &VerifyConfig, seed: u64) -> Result<Trial> {
    let mut r = rng(mix(seed, 5));
    let (inst, sigma) = label_cover(3, 3, 6, 3, 3, seed)?;
    let other = swap_neighbor(&inst, &mut r)?;
    let (out, enc) = to_e3sat(&inst)?;
    let (out2, _) = to_e3sat(&other)?;
    let lift = lift_e3sat(&out, &enc, &sigma)?;
    let gap = (BigRational::one() - out.value(&lift)?) + (BigRational::one() - inst.value(&recover_e3sat(&enc, &lift))?);
    let csigma = bool_pairs(&out, cfg, &mut r, |a| recover_e3sat(&enc, a))?;
    let mut points = Vec::new();
    for s in corpus(&out, &lift, &mut r) {
        points.push((out.cost(&s)?, inst.cost(&recover_e3sat(&enc, &s))?));
    }
    Ok(Trial {
        completeness_gap: gap,
        ci: rat_int(constraint_diff(&out, &out2) as u128),
        ci_declared: rat_int(enc.k as u128),
        csigma,
        csigma_declared: BigRational::one(),
        csigma_extra_ok: true,
        soundness: points,
        soundness_declared: Some(rat_int(enc.k as u128)),
        soundness_exact: false,
        input_size: size(&inst),
        output_size: size(&out),
    })
}

fn trial_3lin(cfg: &VerifyConfig, seed: u64) -> Result<Trial> {
    let mut r = rng(mix(seed, 6));
    let (lc, sigma) = label_cover(2, 2, 4, 3, 2, seed)?;
    let (sat, enc) = to_e3sat(&lc)?;
    let bits = lift_e3sat(&sat, &enc, &sigma)?;
    let other = swap_neighbor(&sat, &mut r)?;
    let out = e3sat_to_3lin(&sat)?;
    let out2 = e3sat_to_3lin(&other)?;
    let four_sevenths = rat(4, 7);
    let gap = (&four_sevenths - out.value(&bits)?) + (BigRational::one() - sat.value(&recover_3lin(&bits))?);
    let csigma = bool_pairs(&out, cfg, &mut r, recover_3lin)?;
    let mut points = Vec::new();
    for s in corpus(&out, &bits, &mut r) {
        // val' = (4/7) val exactly, i.e. (1 - cost')·7/4 = 1 - cost.
        let scaled = BigRational::one() - (BigRational::one() - out.cost(&s)?) * rat(7, 4);
        points.push((scaled, sat.cost(&s)?));
    }
    Ok(Trial {
        completeness_gap: gap,
        ci: rat_int(constraint_diff(&out, &out2) as u128),
        ci_declared: rat(7, 1),
        csigma,
        csigma_declared: BigRational::one(),
        csigma_extra_ok: true,
        soundness: points,
        soundness_declared: Some(BigRational::one()),
        soundness_exact: true,
        input_size: size(&sat),
        output_size: size(&out),
    })
}

fn trial_serial(cfg: &VerifyConfig, seed: u64) -> Result<Trial> {
    let mut r = rng(mix(seed, 7));
    let (inst, sigma) = label_cover(4, 4, 10, 3, 3, seed)?;
    let e = r.gen_range(0..inst.num_constraints());
    let other = neighbor(&inst, e, NeighborPolicy::Swap)?;
    let m_out = 60;
    let (out, info) = serial_repeat(&inst, cfg.t, m_out, seed)?;
    let (out2, _) = serial_repeat(&other, cfg.t, m_out, seed)?;
    let csigma = {
        let mut w = BigRational::zero();
        for _ in 0..cfg.pairs {
            let a = out.random_assignment(&mut r);
            let b = change_one(&out, &a, r.gen_range(0..out.num_vars()), &mut r);
            w = w.max(rat_int(hamming(&recover_serial(&a), &recover_serial(&b))? as u128));
        }
        w
    };
    let mut points = Vec::new();
    for s in corpus(&out, &sigma, &mut r) {
        points.push((out.cost(&s)?, inst.cost(&recover_serial(&s))?));
    }
    let declared = BigRational::from_float(info.usage_bound).unwrap_or_else(BigRational::zero);
    Ok(Trial {
        completeness_gap: BigRational::one() - out.value(&sigma)?,
        ci: rat_int(constraint_diff(&out, &out2) as u128),
        ci_declared: declared,
        csigma,
        csigma_declared: BigRational::one(),
        csigma_extra_ok: true,
        soundness: points,
        soundness_declared: None,
        soundness_exact: false,
        input_size: size(&inst),
        output_size: size(&out),
    })
}

fn run_trial(pass: Pass, cfg: &VerifyConfig, seed: u64) -> Result<Trial> {
    match pass {
        Pass::DegreeReduce => trial_degree(cfg, seed),
        Pass::Expanderize => trial_expanderize(cfg, seed),
        Pass::Power => trial_power(cfg, seed),
        Pass::AlphabetReduce => trial_alphabet(cfg, seed),
        Pass::E3Sat => trial_e3sat(cfg, seed),
        Pass::ThreeLin => trial_3lin(cfg, seed),
        Pass::Serial => trial_serial(cfg, seed),
    }
}

fn bound(measured: &[BigRational], declared: &[BigRational], note: &str) -> Obligation {
    let ok = measured.iter().zip(declared).all(|(m, d)| m <= d);
    let worst = measured.iter().max().cloned().unwrap_or_else(BigRational::zero);
    let dec = declared.iter().min().cloned();
    Obligation { declared: dec, measured: worst, status: if ok { Status::Pass } else { Status::Fail }, note: note.into() }
}

/// Runs `cfg.trials` independent trials and folds them into one report.
pub fn verify_reduction(pass: Pass, cfg: &VerifyConfig) -> Result<ReductionReport> {
    use rayon::prelude::*;
    if cfg.trials == 0 {
        return Err(Error::Invalid("at least one trial is required".into()));
    }
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(pass, cfg, mix(cfg.seed, i as u64)))
        .collect::<Result<_>>()?;
    let gaps: Vec<BigRational> = trials.iter().map(|t| t.completeness_gap.abs()).collect();
    let completeness = bound(&gaps, &vec![BigRational::zero(); gaps.len()], "lift value minus target, plus recovered cost");
    let instance_distance = bound(
        &trials.iter().map(|t| t.ci.clone()).collect::<Vec<_>>(),
        &trials.iter().map(|t| t.ci_declared.clone()).collect::<Vec<_>>(),
        "swap distance of outputs for one swapped input constraint",
    );
    let mut assignment_distance = bound(
        &trials.iter().map(|t| t.csigma.clone()).collect::<Vec<_>>(),
        &trials.iter().map(|t| t.csigma_declared.clone()).collect::<Vec<_>>(),
        "recovered distance per changed coordinate",
    );
    if !trials.iter().all(|t| t.csigma_extra_ok) {
        assignment_distance.status = Status::Fail;
        assignment_distance.note.push_str("; per-vertex side condition failed");
    }
    // Soundness: recovered cost <= C * output cost (or equality).
    let mut worst = BigRational::zero();
    let mut ok = true;
    let mut declared_seen: Option<BigRational> = None;
    let mut informational = false;
    let mut points = 0;
    for t in &trials {
        points += t.soundness.len();
        match &t.soundness_declared {
            None => informational = true,
            Some(c) => {
                declared_seen = Some(declared_seen.map_or(c.clone(), |d: BigRational| d.max(c.clone())));
                for (out_cost, in_cost) in &t.soundness {
                    ok &= if t.soundness_exact { *in_cost == out_cost * c } else { *in_cost <= out_cost * c };
                }
            }
        }
        for (out_cost, in_cost) in &t.soundness {
            if out_cost.is_positive() {
                worst = worst.max(in_cost / out_cost);
            } else if in_cost.is_positive() {
                ok = ok && t.soundness_declared.is_none();
            }
        }
    }
    let soundness = Obligation {
        declared: declared_seen,
        measured: worst,
        status: if informational { Status::Info } else if ok { Status::Pass } else { Status::Fail },
        note: "max recovered cost / output cost over the adversarial corpus".into(),
    };
    let last = trials.last().expect("trials");
    Ok(ReductionReport {
        pass,
        config: cfg.clone(),
        completeness,
        soundness,
        instance_distance,
        assignment_distance,
        input_size: last.input_size,
        output_size: last.output_size,
        soundness_points: points,
    })
}

/// One stage of a composed ledger.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerStage {
    pub pass: String,
    pub c_i: BigRational,
    pub c_sigma: BigRational,
    pub input_size: (usize, usize),
    pub output_size: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ledger {
    pub stages: Vec<LedgerStage>,
    /// Product of C_I * C_sigma; sensitivity shrinks by at most this.
    pub factor: BigRational,
    /// Output vertices over input vertices, end to end.
    pub growth: BigRational,
}

impl Ledger {
    pub fn to_json(&self) -> Value {
        json!({
            "stages": self.stages.iter().map(|s| json!({
                "pass": s.pass,
                "c_i": format_rational(&s.c_i),
                "c_sigma": format_rational(&s.c_sigma),
                "input_size": [s.input_size.0, s.input_size.1],
                "output_size": [s.output_size.0, s.output_size.1],
            })).collect::<Vec<_>>(),
            "factor": format_rational(&self.factor),
            "growth": format_rational(&self.growth),
        })
    }
}

pub fn compose(stages: Vec<LedgerStage>) -> Ledger {
    let factor = stages.iter().fold(BigRational::one(), |acc, s| acc * &s.c_i * &s.c_sigma);
    let growth = match (stages.first(), stages.last()) {
        (Some(a), Some(b)) if a.input_size.0 > 0 => rat_int(b.output_size.0 as u128) / rat_int(a.input_size.0 as u128),
        _ => BigRational::one(),
    };
    Ledger { stages, factor, growth }
}

pub fn ledger_stage(report: &ReductionReport) -> LedgerStage {
    LedgerStage {
        pass: report.pass.as_str().into(),
        c_i: report.instance_distance.measured.clone(),
        c_sigma: report.assignment_distance.measured.clone(),
        input_size: report.input_size,
        output_size: report.output_size,
    }
}
