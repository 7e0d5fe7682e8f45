//! Round structure: expanderize, power, degree-reduce, alphabet-reduce,
//! degree-reduce; the last round stops after alphabet reduction.

use std::fs;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::csp::format::{assignment_to_json, to_json};
use crate::csp::{Assignment, Instance};
use crate::error::{Error, Result};
use crate::graph::{lambda, Graph};
use crate::harness::{compose, Ledger, LedgerStage};
use crate::oracles::{satisfying_assignments, BRUTE_FORCE_CAP};
use crate::transforms::{
    alphabet_reduce, degree_reduce, expanderize, lift_alphabet, lift_degree, lift_power, power,
    AlphabetConfig, PowerMode, TesterConfig,
};
use crate::util::{format_rational, mix, rat, rat_int, sha256_hex};

pub const PIPELINE_SCHEMA: &str = "pcp-forge/pipeline-report/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeConfig {
    Exact,
    Sampled { count: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub rounds: usize,
    pub t: usize,
    /// Degree of the expander superimposed by expanderization.
    pub d0: usize,
    /// Degree of the expanders wiring degree-reduction clouds.
    pub cloud_d0: usize,
    pub mode: ModeConfig,
    pub seed: u64,
    /// Per-family enumeration cap of the assignment tester.
    pub tester_enum_cap: u128,
    pub tester_samples: usize,
    /// Cap for the brute-force witness search on the input.
    pub witness_cap: u128,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let tc = TesterConfig::default();
        PipelineConfig {
            rounds: 1,
            t: 1,
            d0: 8,
            cloud_d0: 4,
            mode: ModeConfig::Exact,
            seed: 0,
            tester_enum_cap: tc.enum_cap,
            tester_samples: tc.samples,
            witness_cap: 1 << 20,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.d0 == 0 || self.cloud_d0 == 0 || self.tester_enum_cap == 0 || self.tester_samples == 0 || self.witness_cap == 0 {
            return Err(Error::Invalid("pipeline parameters and caps must be positive".into()));
        }
        if let ModeConfig::Sampled { count: 0 } = self.mode {
            return Err(Error::Invalid("sampled powering needs a positive budget".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageKind {
    Expanderize,
    Power,
    DegreeReduce,
    AlphabetReduce,
}

impl StageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StageKind::Expanderize => "expanderize",
            StageKind::Power => "power",
            StageKind::DegreeReduce => "degree-reduce",
            StageKind::AlphabetReduce => "alphabet-reduce",
        }
    }
}

/// Stage order for r rounds.
pub fn schedule(rounds: usize) -> Vec<StageKind> {
    let mut out = Vec::new();
    for r in 0..rounds {
        out.extend([StageKind::Expanderize, StageKind::Power, StageKind::DegreeReduce, StageKind::AlphabetReduce]);
        if r + 1 < rounds {
            out.push(StageKind::DegreeReduce);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct StageRecord {
    pub index: usize,
    pub kind: StageKind,
    pub stats: Value,
    pub lambda: Option<f64>,
    pub witness_value: BigRational,
    pub c_i: BigRational,
    pub c_sigma: BigRational,
    pub input_size: (usize, usize),
    pub output_size: (usize, usize),
    /// File name -> sha256 of the bytes written.
    pub files: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub stages: Vec<StageRecord>,
    pub ledger: Ledger,
    pub report: Value,
    pub output: Instance,
    pub witness: Assignment,
}

impl PipelineRun {
    pub fn complete(&self) -> bool {
        self.stages.iter().all(|s| s.witness_value.is_one())
    }
}

fn write(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<(String, String)>) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    files.push((name.to_string(), sha256_hex(bytes)));
    Ok(())
}

fn lambda_of(inst: &Instance) -> Option<f64> {
    let g = Graph::of_instance(inst).ok()?;
    lambda(&g).ok().map(|l| l.value)
}

fn stage_error(kind: StageKind, index: usize, e: Error) -> Error {
    Error::Stage { stage: format!("{index:02}-{}", kind.as_str()), source: Box::new(e) }
}

struct StageOut {
    inst: Instance,
    witness: Assignment,
    c_i: BigRational,
    c_sigma: BigRational,
}

fn apply(kind: StageKind, cfg: &PipelineConfig, seed: u64, inst: &Instance, sigma: &[crate::csp::Label]) -> Result<StageOut> {
    match kind {
        StageKind::Expanderize => {
            let (out, _) = expanderize(inst, cfg.d0, seed)?;
            Ok(StageOut { inst: out, witness: sigma.to_vec(), c_i: BigRational::one(), c_sigma: BigRational::one() })
        }
        StageKind::Power => {
            let mode = match cfg.mode {
                ModeConfig::Exact => PowerMode::Exact,
                ModeConfig::Sampled { count } => PowerMode::Sampled { count, seed },
            };
            let (out, info) = power(inst, cfg.t, mode)?;
            let witness = lift_power(inst, sigma, cfg.t)?;
            let c_i = Pow::pow(rat_int((info.d * cfg.t) as u128), info.b);
            Ok(StageOut { inst: out, witness, c_i, c_sigma: rat(8, 1) })
        }
        StageKind::DegreeReduce => {
            let (out, map) = degree_reduce(inst, cfg.cloud_d0, seed)?;
            let witness = lift_degree(&map, sigma)?;
            let d = map.clouds.iter().map(Vec::len).filter(|&l| l > 0).min().unwrap_or(1);
            Ok(StageOut { inst: out, witness, c_i: BigRational::one(), c_sigma: rat(1, d as i64) })
        }
        StageKind::AlphabetReduce => {
            let acfg = AlphabetConfig {
                tester: TesterConfig { samples: cfg.tester_samples, enum_cap: cfg.tester_enum_cap, seed: mix(seed, 0x7e57) },
                pad_to: None,
            };
            let (out, map) = alphabet_reduce(inst, &acfg)?;
            let witness = lift_alphabet(inst, &map, out.num_vars(), sigma)?;
            let n_edge = map.testers.iter().map(|t| t.emitted.iter().map(|e| e.vars.len()).sum::<usize>()).max().unwrap_or(0);
            Ok(StageOut { inst: out, witness, c_i: rat_int(n_edge as u128), c_sigma: rat(8, map.ell as i64) })
        }
    }
}

/// Runs the schedule, writing each stage's instance, witness and stats to
/// `out_dir` together with the ledger and the report.
pub fn run_pipeline(cfg: &PipelineConfig, input: &Instance, witness: Option<&Assignment>, out_dir: &Path) -> Result<PipelineRun> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let input_json = to_json(input);
    let input_hash = sha256_hex(input_json.as_bytes());
    let sigma = match witness {
        Some(w) => {
            input.check_assignment(w)?;
            w.clone()
        }
        None => satisfying_assignments(input, cfg.witness_cap.min(BRUTE_FORCE_CAP))?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Invalid("input has no satisfying assignment".into()))?,
    };
    let mut cur = input.clone();
    let mut cur_sigma = sigma;
    let mut stages = Vec::new();
    let mut files0 = Vec::new();
    write(out_dir, "00-input.instance.json", input_json.as_bytes(), &mut files0)?;
    write(out_dir, "00-input.witness.json", assignment_to_json(&cur_sigma).as_bytes(), &mut files0)?;
    for (i, kind) in schedule(cfg.rounds).into_iter().enumerate() {
        let index = i + 1;
        let seed = mix(cfg.seed, index as u64);
        let so = apply(kind, cfg, seed, &cur, &cur_sigma).map_err(|e| stage_error(kind, index, e))?;
        let value = so.inst.value(&so.witness).map_err(|e| stage_error(kind, index, e))?;
        let lam = match kind {
            StageKind::Expanderize => lambda_of(&so.inst),
            _ => None,
        };
        let stats = json!(so.inst.stats());
        let prefix = format!("{index:02}-{}", kind.as_str());
        let mut files = Vec::new();
        write(out_dir, &format!("{prefix}.instance.json"), to_json(&so.inst).as_bytes(), &mut files)?;
        write(out_dir, &format!("{prefix}.witness.json"), assignment_to_json(&so.witness).as_bytes(), &mut files)?;
        let stats_bytes = serde_json::to_vec_pretty(&stats).map_err(|e| Error::Io(e.to_string()))?;
        write(out_dir, &format!("{prefix}.stats.json"), &stats_bytes, &mut files)?;
        stages.push(StageRecord {
            index,
            kind,
            stats,
            lambda: lam,
            witness_value: value,
            c_i: so.c_i,
            c_sigma: so.c_sigma,
            input_size: (cur.num_vars(), cur.num_constraints()),
            output_size: (so.inst.num_vars(), so.inst.num_constraints()),
            files,
        });
        cur = so.inst;
        cur_sigma = so.witness;
    }
    let ledger = compose(
        stages
            .iter()
            .map(|s| LedgerStage {
                pass: s.kind.as_str().into(),
                c_i: s.c_i.clone(),
                c_sigma: s.c_sigma.clone(),
                input_size: s.input_size,
                output_size: s.output_size,
            })
            .collect(),
    );
    let ledger_bytes = serde_json::to_vec_pretty(&ledger.to_json()).map_err(|e| Error::Io(e.to_string()))?;
    write(out_dir, "ledger.json", &ledger_bytes, &mut files0)?;
    let report = json!({
        "schema": PIPELINE_SCHEMA,
        "config": serde_json::to_value(cfg).map_err(|e| Error::Io(e.to_string()))?,
        "input_sha256": input_hash,
        "input_stats": input.stats(),
        "files": files0.iter().map(|(n, h)| json!({"name": n, "sha256": h})).collect::<Vec<_>>(),
        "stages": stages.iter().map(|s| json!({
            "index": s.index,
            "stage": s.kind.as_str(),
            "stats": s.stats,
            "lambda": s.lambda.map(|l| format!("{l:.9}")),
            "witness_value": format_rational(&s.witness_value),
            "c_i": format_rational(&s.c_i),
            "c_sigma": format_rational(&s.c_sigma),
            "files": s.files.iter().map(|(n, h)| json!({"name": n, "sha256": h})).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "ledger": ledger.to_json(),
        "complete": stages.iter().all(|s| s.witness_value.is_one()),
    });
    let report_bytes = serde_json::to_vec_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(out_dir.join("report.json"), &report_bytes)?;
    Ok(PipelineRun { stages, ledger, report, output: cur, witness: cur_sigma })
}
