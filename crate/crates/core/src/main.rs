use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pcp_forge::csp::format::{assignment_from_json, assignment_to_json, from_json, to_json};
use pcp_forge::csp::{Assignment, Instance};
use pcp_forge::generators::{
    e2lin_cycle, label_cover, lemma41_pair, random_bounded_graph, random_instance, random_regular_graph,
    random_regular_instance, CycleSpec, RelationFamily,
};
use pcp_forge::graph::Graph;
use pcp_forge::harness::{verify_reduction, Pass, VerifyConfig};
use pcp_forge::nonsignal::{check_nonsignaling_sensitivity, LocalAlgorithm};
use pcp_forge::oracles::{
    algorithm_by_spec, estimate_sensitivity, optimal_assignments, swap_paths, Algorithm, NeighborPolicy,
    BRUTE_FORCE_CAP,
};
use pcp_forge::pipeline::{run_pipeline, ModeConfig, PipelineConfig};
use pcp_forge::recovery::recover_fglss;
use pcp_forge::transforms::{
    alphabet_reduce, canonical_clique, degree_reduce, e3sat_to_3lin, expanderize, fglss, lift_alphabet,
    lift_degree, lift_e3sat, lift_power, lift_sparsify, max_clique, power, serial_repeat, sparsify, to_e3sat,
    AlphabetConfig, PowerMode, TesterConfig,
};
use pcp_forge::util::{format_rational, sha256_hex};
use pcp_forge::Error;

#[derive(Parser, Debug)]
#[command(name = "pcp-forge", version, about = "Sensitivity-preserving CSP reductions and their checks")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on the assignment space searched exhaustively.
    #[arg(long, global = true)]
    cap: Option<u128>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write outputs under this directory instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate an instance or graph.
    Gen(GenArgs),
    /// Apply one reduction to an instance.
    Transform(TransformArgs),
    /// Exact optimum by exhaustive search.
    Opt(InputArgs),
    /// Value of an assignment.
    Eval(EvalArgs),
    /// Per-edge sensitivity of an algorithm.
    Sens(SensArgs),
    /// Run the sensitivity harness on one pass.
    Verify(VerifyArgs),
    /// Run the round structure end to end.
    Pipeline(PipelineArgs),
    /// Build the FGLSS graph and decode a clique.
    Fglss(FglssArgs),
    /// Check the locality bound of a local rule.
    Nonsig(NonsigArgs),
    /// Summarize a pipeline directory and check its hashes.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Cycle pattern: ones, zeros, or a bit string of length n.
    #[arg(long, default_value = "ones")]
    pattern: String,
    #[arg(long, default_value_t = 12)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long, default_value = "planted")]
    family: String,
    /// Label-cover side sizes and alphabets.
    #[arg(long, default_value_t = 2)]
    nu: usize,
    #[arg(long, default_value_t = 2)]
    nv: usize,
    #[arg(long, default_value_t = 3)]
    su: u32,
    #[arg(long, default_value_t = 3)]
    sv: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    E2linCycle,
    Lemma41,
    Random,
    Regular,
    LabelCover,
    RegularGraph,
    BoundedGraph,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Instance JSON file.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(value_enum)]
    pass: TransformKind,
    #[arg(long)]
    input: PathBuf,
    /// Satisfying assignment to lift alongside the instance.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    d0: usize,
    #[arg(long, default_value_t = 1)]
    t: usize,
    /// Sampled powering budget (exact when absent).
    #[arg(long)]
    sampled: Option<usize>,
    /// Output constraints of serial repetition.
    #[arg(long, default_value_t = 32)]
    m_out: usize,
    #[arg(long)]
    pad_to: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TransformKind {
    DegreeReduce,
    Expanderize,
    Power,
    AlphabetReduce,
    E3sat,
    #[value(name = "3lin")]
    ThreeLin,
    Serial,
    Sparsify,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    assignment: PathBuf,
}

#[derive(Args, Debug)]
struct SensArgs {
    #[arg(long)]
    input: PathBuf,
    /// constant, exact, parity-flip, noisy:P or greedy:SWEEPS.
    #[arg(long, default_value = "exact")]
    algorithm: String,
    #[arg(long, value_enum, default_value_t = Policy::Delete)]
    policy: Policy,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// Restrict to these edges.
    #[arg(long, value_delimiter = ',')]
    edges: Option<Vec<usize>>,
    /// Measure the swap path through the deletion and check its bound.
    #[arg(long)]
    swap_paths: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Policy {
    Delete,
    Swap,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    pass: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d0: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    pairs: Option<usize>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Input instance; the all-ones cycle on --cycle vertices when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    cycle: usize,
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, default_value_t = 1)]
    t: usize,
    #[arg(long, default_value_t = 8)]
    d0: usize,
    #[arg(long, default_value_t = 4)]
    cloud_d0: usize,
    #[arg(long)]
    sampled: Option<usize>,
}

#[derive(Args, Debug)]
struct FglssArgs {
    #[arg(long)]
    input: PathBuf,
    /// Clique to decode (graph vertex ids); the maximum clique when absent.
    #[arg(long, value_delimiter = ',')]
    clique: Option<Vec<usize>>,
    /// Report the canonical clique of this assignment as well.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NonsigArgs {
    /// Edge-list graph; a random bounded-degree graph when absent.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    max_degree: usize,
    /// constant, even-degree, local-max or color-parity.
    #[arg(long, default_value = "local-max")]
    rule: String,
    #[arg(long, default_value_t = 1)]
    t: usize,
    #[arg(long, default_value_t = 8)]
    samples: usize,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory written by `pipeline`.
    dir: PathBuf,
}

enum Failure {
    Usage(String),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Io(_) | Error::Invalid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Assertion(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Library errors caused by bad arguments rather than failed checks.
fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> CliResult<Instance> {
    Ok(from_json(&read(path)?)?)
}

fn load_assignment(path: &Path) -> CliResult<Assignment> {
    Ok(assignment_from_json(&read(path)?)?)
}

fn json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("json values serialize")
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Usage(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

struct Ctx {
    seed: u64,
    cap: u128,
    format: Format,
    out: Option<PathBuf>,
}

impl Ctx {
    /// Writes `text` to `out/name`, or prints it when no directory is set.
    fn emit(&self, name: &str, text: &str) -> CliResult<()> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Failure::Usage(e.to_string()))?;
                let p = dir.join(name);
                fs::write(&p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                eprintln!("wrote {}", p.display());
            }
            None => print!("{text}"),
        }
        Ok(())
    }

    fn json_only(&self, cmd: &str) -> CliResult<()> {
        match self.format {
            Format::Json => Ok(()),
            Format::Csv => Err(Failure::Usage(format!("{cmd} has no csv output"))),
        }
    }
}

fn gen(ctx: &Ctx, a: &GenArgs) -> CliResult<()> {
    ctx.json_only("gen")?;
    let family = || a.family.parse::<RelationFamily>();
    match a.kind {
        GenKind::E2linCycle => {
            let spec = match a.pattern.as_str() {
                "ones" => CycleSpec::ones(a.n),
                "zeros" => CycleSpec::zeros(a.n),
                bits => {
                    let pattern = bits
                        .chars()
                        .map(|c| c.to_digit(2).map(|b| b as u8))
                        .collect::<Option<Vec<u8>>>()
                        .ok_or_else(|| Failure::Usage(format!("bad pattern {bits}")))?;
                    if pattern.len() != a.n {
                        return Err(Failure::Usage(format!("pattern has {} bits, expected {}", pattern.len(), a.n)));
                    }
                    CycleSpec { n: a.n, pattern }
                }
            };
            let name = format!("e2lin-cycle-{}-{}.json", a.n, a.pattern);
            ctx.emit(&name, &to_json(&e2lin_cycle(&spec).map_err(usage)?))
        }
        GenKind::Lemma41 => {
            let (i, j) = lemma41_pair(a.n).map_err(usage)?;
            if ctx.out.is_some() {
                ctx.emit(&format!("lemma41-{}-a.json", a.n), &to_json(&i))?;
                ctx.emit(&format!("lemma41-{}-b.json", a.n), &to_json(&j))
            } else {
                let v: Vec<Value> = [&i, &j].iter().map(|x| serde_json::from_str(&to_json(x)).expect("own output parses")).collect();
                ctx.emit("", &json_text(&json!(v)))
            }
        }
        GenKind::Random => {
            let inst = random_instance(a.n, a.m, a.q, family()?, ctx.seed)?;
            ctx.emit(&format!("random-{}-{}-{}.json", a.n, a.m, ctx.seed), &to_json(&inst))
        }
        GenKind::Regular => {
            let inst = random_regular_instance(a.n, a.d, a.q, family()?, ctx.seed)?;
            ctx.emit(&format!("regular-{}-{}-{}.json", a.n, a.d, ctx.seed), &to_json(&inst))
        }
        GenKind::LabelCover => {
            let (inst, sigma) = label_cover(a.nu, a.nv, a.m, a.su, a.sv, ctx.seed)?;
            let base = format!("label-cover-{}-{}-{}-{}", a.nu, a.nv, a.m, ctx.seed);
            ctx.emit(&format!("{base}.json"), &to_json(&inst))?;
            if ctx.out.is_some() {
                ctx.emit(&format!("{base}.witness.json"), &assignment_to_json(&sigma))?;
            }
            Ok(())
        }
        GenKind::RegularGraph => {
            let g = random_regular_graph(a.n, a.d, ctx.seed)?;
            ctx.emit(&format!("regular-graph-{}-{}-{}.txt", a.n, a.d, ctx.seed), &g.to_text())
        }
        GenKind::BoundedGraph => {
            let g = random_bounded_graph(a.n, a.m, a.d, ctx.seed)?;
            ctx.emit(&format!("bounded-graph-{}-{}-{}.txt", a.n, a.m, ctx.seed), &g.to_text())
        }
    }
}

fn transform(ctx: &Ctx, a: &TransformArgs) -> CliResult<()> {
    ctx.json_only("transform")?;
    let inst = load_instance(&a.input)?;
    let witness = a.witness.as_deref().map(load_assignment).transpose()?;
    if let Some(w) = &witness {
        inst.check_assignment(w)?;
    }
    let (out, meta, lifted): (Instance, Value, Option<Assignment>) = match a.pass {
        TransformKind::DegreeReduce => {
            let (out, map) = degree_reduce(&inst, a.d0, ctx.seed)?;
            let lifted = witness.as_ref().map(|w| lift_degree(&map, w)).transpose()?;
            (out, to_value(&map), lifted)
        }
        TransformKind::Expanderize => {
            let (out, g) = expanderize(&inst, a.d0, ctx.seed)?;
            (out, json!({ "expander": g.to_text() }), witness.clone())
        }
        TransformKind::Power => {
            let mode = match a.sampled {
                Some(count) => PowerMode::Sampled { count, seed: ctx.seed },
                None => PowerMode::Exact,
            };
            let (out, info) = power(&inst, a.t, mode)?;
            let lifted = witness.as_ref().map(|w| lift_power(&inst, w, a.t)).transpose()?;
            (out, to_value(&info), lifted)
        }
        TransformKind::AlphabetReduce => {
            let cfg = AlphabetConfig { tester: TesterConfig { seed: ctx.seed, ..Default::default() }, pad_to: a.pad_to };
            let (out, map) = alphabet_reduce(&inst, &cfg)?;
            let lifted = witness.as_ref().map(|w| lift_alphabet(&inst, &map, out.num_vars(), w)).transpose()?;
            let meta = to_value(&map.summary(&out));
            (out, meta, lifted)
        }
        TransformKind::E3sat => {
            let (out, enc) = to_e3sat(&inst)?;
            let lifted = witness.as_ref().map(|w| lift_e3sat(&out, &enc, w)).transpose()?;
            (out, to_value(&enc), lifted)
        }
        TransformKind::ThreeLin => {
            let out = e3sat_to_3lin(&inst)?;
            (out, json!({ "equations_per_clause": 7 }), witness.clone())
        }
        TransformKind::Serial => {
            let (out, info) = serial_repeat(&inst, a.t, a.m_out, ctx.seed)?;
            (out, to_value(&info), witness.clone())
        }
        TransformKind::Sparsify => {
            let out = sparsify(&inst)?;
            let lifted = witness.as_ref().map(|w| lift_sparsify(&inst, w)).transpose()?;
            (out, json!({ "local_views": inst.num_constraints() }), lifted)
        }
    };
    let name = TransformKind::value_variants()
        .iter()
        .find(|k| **k == a.pass)
        .and_then(|k| k.to_possible_value())
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    if ctx.out.is_none() {
        return ctx.emit("", &to_json(&out));
    }
    ctx.emit(&format!("{name}.instance.json"), &to_json(&out))?;
    let mut meta = json!({ "pass": name, "seed": ctx.seed, "input_sha256": sha256_hex(to_json(&inst).as_bytes()), "meta": meta, "stats": out.stats() });
    if let Some(w) = lifted {
        let value = out.value(&w)?;
        meta["witness_value"] = json!(format_rational(&value));
        ctx.emit(&format!("{name}.witness.json"), &assignment_to_json(&w))?;
    }
    ctx.emit(&format!("{name}.meta.json"), &json_text(&meta))
}

fn opt(ctx: &Ctx, a: &InputArgs) -> CliResult<()> {
    ctx.json_only("opt")?;
    let inst = load_instance(&a.input)?;
    let (value, all) = optimal_assignments(&inst, ctx.cap)?;
    let best: Value = serde_json::from_str(&assignment_to_json(&all[0])).expect("own output parses");
    ctx.emit("opt.json", &json_text(&json!({ "value": format_rational(&value), "optima": all.len(), "assignment": best })))
}

fn eval(ctx: &Ctx, a: &EvalArgs) -> CliResult<()> {
    let inst = load_instance(&a.input)?;
    let sigma = load_assignment(&a.assignment)?;
    let value = inst.value(&sigma)?;
    let violated: Vec<usize> = (0..inst.num_constraints()).filter(|&i| !inst.constraints[i].satisfied(&sigma)).collect();
    match ctx.format {
        Format::Json => ctx.emit("eval.json", &json_text(&json!({ "value": format_rational(&value), "violated": violated }))),
        Format::Csv => {
            let rows: Vec<Vec<String>> = violated.iter().map(|e| vec![e.to_string()]).collect();
            ctx.emit("eval.csv", &csv_text(&["violated_edge"], &rows)?)
        }
    }
}

fn algorithm(spec: &str) -> CliResult<Box<dyn Algorithm>> {
    algorithm_by_spec(spec).map_err(usage)
}

fn sens(ctx: &Ctx, a: &SensArgs) -> CliResult<()> {
    let inst = load_instance(&a.input)?;
    let alg = algorithm(&a.algorithm)?;
    if a.swap_paths {
        let edges: Vec<usize> = a.edges.clone().unwrap_or_else(|| (0..inst.num_constraints()).collect());
        let paths = swap_paths(alg.as_ref(), &inst, a.samples, ctx.seed, &edges)?;
        let holds = paths.iter().all(|p| p.holds());
        let rows: Vec<Vec<String>> = paths
            .iter()
            .map(|p| {
                vec![
                    p.edge.to_string(),
                    format_rational(&p.swap),
                    format_rational(&p.delete_from_original),
                    format_rational(&p.delete_from_swapped),
                    p.holds().to_string(),
                ]
            })
            .collect();
        match ctx.format {
            Format::Json => {
                let v = json!({
                    "algorithm": alg.name(),
                    "samples": a.samples,
                    "seed": ctx.seed,
                    "holds": holds,
                    "paths": rows.iter().map(|r| json!({"edge": r[0], "swap": r[1], "delete_from_original": r[2], "delete_from_swapped": r[3]})).collect::<Vec<_>>(),
                });
                ctx.emit("swap-paths.json", &json_text(&v))?;
            }
            Format::Csv => ctx.emit("swap-paths.csv", &csv_text(&["edge", "swap", "delete_from_original", "delete_from_swapped", "holds"], &rows)?)?,
        }
        return if holds { Ok(()) } else { Err(Failure::Assertion("swap path exceeds the triangle bound".into())) };
    }
    let policy = match a.policy {
        Policy::Delete => NeighborPolicy::Delete,
        Policy::Swap => NeighborPolicy::Swap,
    };
    let r = estimate_sensitivity(alg.as_ref(), &inst, policy, a.samples, ctx.seed, a.edges.as_deref())?;
    match ctx.format {
        Format::Json => ctx.emit("sensitivity.json", &json_text(&r.to_json())),
        Format::Csv => ctx.emit("sensitivity.csv", &r.to_csv()?),
    }
}

fn verify(ctx: &Ctx, a: &VerifyArgs) -> CliResult<()> {
    let pass: Pass = a.pass.parse().map_err(usage)?;
    let mut cfg = VerifyConfig::for_pass(pass, a.trials, ctx.seed);
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.d0 = a.d0.unwrap_or(cfg.d0);
    cfg.t = a.t.unwrap_or(cfg.t);
    cfg.pairs = a.pairs.unwrap_or(cfg.pairs);
    let r = verify_reduction(pass, &cfg)?;
    let v = r.to_json();
    match ctx.format {
        Format::Json => ctx.emit(&format!("verify-{}.json", pass.as_str()), &json_text(&v))?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = ["completeness", "soundness", "c_i", "c_sigma"]
                .iter()
                .map(|k| {
                    let o = &v[k];
                    let s = |f: &str| o[f].as_str().unwrap_or("").to_string();
                    vec![k.to_string(), s("declared"), s("measured"), s("status")]
                })
                .collect();
            ctx.emit(&format!("verify-{}.csv", pass.as_str()), &csv_text(&["obligation", "declared", "measured", "status"], &rows)?)?
        }
    }
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("{} failed an obligation", pass.as_str())))
    }
}

fn pipeline(ctx: &Ctx, a: &PipelineArgs) -> CliResult<()> {
    ctx.json_only("pipeline")?;
    let dir = ctx.out.clone().ok_or_else(|| Failure::Usage("pipeline needs --out DIR".into()))?;
    let inst = match &a.input {
        Some(p) => load_instance(p)?,
        None => e2lin_cycle(&CycleSpec::ones(a.cycle)).map_err(usage)?,
    };
    let witness = a.witness.as_deref().map(load_assignment).transpose()?;
    let cfg = PipelineConfig {
        rounds: a.rounds,
        t: a.t,
        d0: a.d0,
        cloud_d0: a.cloud_d0,
        mode: a.sampled.map_or(ModeConfig::Exact, |count| ModeConfig::Sampled { count }),
        seed: ctx.seed,
        witness_cap: ctx.cap,
        ..Default::default()
    };
    let run = run_pipeline(&cfg, &inst, witness.as_ref(), &dir)?;
    for s in &run.stages {
        eprintln!(
            "{:02} {:<16} {:>8} vars {:>8} constraints  witness value {}",
            s.index,
            s.kind.as_str(),
            s.output_size.0,
            s.output_size.1,
            format_rational(&s.witness_value)
        );
    }
    println!("{}", dir.join("report.json").display());
    if run.complete() {
        Ok(())
    } else {
        Err(Failure::Assertion("a stage lost completeness".into()))
    }
}

fn fglss_cmd(ctx: &Ctx, a: &FglssArgs) -> CliResult<()> {
    ctx.json_only("fglss")?;
    let inst = load_instance(&a.input)?;
    let (g, legend) = fglss(&inst)?;
    let clique = match &a.clique {
        Some(c) => c.clone(),
        None => max_clique(&g),
    };
    let sigma = recover_fglss(&inst, &g, &legend, &clique)?;
    let satisfied = inst.constraints.iter().filter(|c| c.satisfied(&sigma)).count();
    let mut v = json!({
        "vertices": g.n(),
        "edges": g.num_edges(),
        "clique": clique,
        "recovered": serde_json::from_str::<Value>(&assignment_to_json(&sigma)).expect("own output parses"),
        "satisfied": satisfied,
    });
    if let Some(p) = &a.witness {
        let w = load_assignment(p)?;
        v["canonical_clique"] = json!(canonical_clique(&legend, &w));
    }
    if ctx.out.is_some() {
        ctx.emit("fglss.graph.txt", &g.to_text())?;
    }
    ctx.emit("fglss.json", &json_text(&v))?;
    if satisfied >= clique.len() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("recovered assignment satisfies {satisfied} < {} constraints", clique.len())))
    }
}

fn nonsig(ctx: &Ctx, a: &NonsigArgs) -> CliResult<()> {
    let g = match &a.graph {
        Some(p) => Graph::from_text(&read(p)?)?,
        None => random_bounded_graph(a.n, a.m, a.max_degree, ctx.seed)?,
    };
    let alg = LocalAlgorithm::by_name(&a.rule, a.t).map_err(usage)?;
    let r = check_nonsignaling_sensitivity(&alg, &g, a.samples, ctx.seed)?;
    match ctx.format {
        Format::Json => ctx.emit("nonsig.json", &json_text(&r.to_json()))?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = r
                .edges
                .iter()
                .map(|e| {
                    vec![
                        e.edge.to_string(),
                        e.affected.to_string(),
                        format_rational(&e.coupling),
                        format_rational(&e.emd),
                        e.leaked.to_string(),
                    ]
                })
                .collect();
            ctx.emit("nonsig.csv", &csv_text(&["edge", "affected", "coupling", "emd", "leaked"], &rows)?)?
        }
    }
    if r.holds() {
        Ok(())
    } else {
        Err(Failure::Assertion("locality bound violated".into()))
    }
}

fn report(ctx: &Ctx, a: &ReportArgs) -> CliResult<()> {
    let text = read(&a.dir.join("report.json"))?;
    let rep: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("report.json: {e}")))?;
    let mut listed: Vec<(String, String)> = Vec::new();
    let mut collect = |files: &Value| {
        for f in files.as_array().into_iter().flatten() {
            listed.push((f["name"].as_str().unwrap_or("").into(), f["sha256"].as_str().unwrap_or("").into()));
        }
    };
    collect(&rep["files"]);
    for s in rep["stages"].as_array().into_iter().flatten() {
        collect(&s["files"]);
    }
    let mismatched: Vec<String> = listed
        .iter()
        .filter(|(name, hash)| fs::read(a.dir.join(name)).map(|b| sha256_hex(&b) != *hash).unwrap_or(true))
        .map(|(name, _)| name.clone())
        .collect();
    let stages = rep["stages"].as_array().cloned().unwrap_or_default();
    let s = |v: &Value| match v {
        Value::String(x) => x.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    match ctx.format {
        Format::Json => {
            let v = json!({
                "schema": rep["schema"],
                "input_sha256": rep["input_sha256"],
                "stages": stages.iter().map(|st| json!({
                    "stage": st["stage"],
                    "variables": st["stats"]["n"],
                    "constraints": st["stats"]["m"],
                    "witness_value": st["witness_value"],
                })).collect::<Vec<_>>(),
                "ledger_factor": rep["ledger"]["factor"],
                "complete": rep["complete"],
                "files_checked": listed.len(),
                "mismatched": mismatched,
            });
            ctx.emit("summary.json", &json_text(&v))?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = stages
                .iter()
                .map(|st| {
                    vec![
                        s(&st["index"]),
                        s(&st["stage"]),
                        s(&st["stats"]["n"]),
                        s(&st["stats"]["m"]),
                        s(&st["lambda"]),
                        s(&st["witness_value"]),
                        s(&st["c_i"]),
                        s(&st["c_sigma"]),
                    ]
                })
                .collect();
            ctx.emit(
                "summary.csv",
                &csv_text(&["index", "stage", "variables", "constraints", "lambda", "witness_value", "c_i", "c_sigma"], &rows)?,
            )?;
        }
    }
    if !mismatched.is_empty() {
        return Err(Failure::Assertion(format!("hash mismatch: {}", mismatched.join(", "))));
    }
    if rep["complete"] != json!(true) {
        return Err(Failure::Assertion("pipeline did not stay complete".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = Ctx { seed: cli.seed, cap: cli.cap.unwrap_or(BRUTE_FORCE_CAP), format: cli.format, out: cli.out };
    if ctx.cap == 0 {
        return Err(Failure::Usage("--cap must be positive".into()));
    }
    match &cli.cmd {
        Cmd::Gen(a) => gen(&ctx, a),
        Cmd::Transform(a) => transform(&ctx, a),
        Cmd::Opt(a) => opt(&ctx, a),
        Cmd::Eval(a) => eval(&ctx, a),
        Cmd::Sens(a) => sens(&ctx, a),
        Cmd::Verify(a) => verify(&ctx, a),
        Cmd::Pipeline(a) => pipeline(&ctx, a),
        Cmd::Fglss(a) => fglss_cmd(&ctx, a),
        Cmd::Nonsig(a) => nonsig(&ctx, a),
        Cmd::Report(a) => report(&ctx, a),
    }
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("PCP_FORGE_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure::Usage(format!("PCP_FORGE_THREADS={v} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Assertion(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(1)
        }
    }
}
