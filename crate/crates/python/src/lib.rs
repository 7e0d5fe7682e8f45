//! Python bindings. Assignments cross the boundary as plain JSON-like
//! objects (ints for atoms, lists for compound labels) and exact values as
//! `fractions.Fraction`.

use std::path::PathBuf;

use num_rational::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::Value;

use ::pcp_forge as core;
use core::csp::format::{assignment_from_json, assignment_to_json, from_json, to_json};
use core::csp::{hamming, Assignment};
use core::generators::{self, CycleSpec, RelationFamily};
use core::harness::{verify_reduction, Pass, VerifyConfig};
use core::nonsignal::{check_nonsignaling_sensitivity, LocalAlgorithm};
use core::oracles::{algorithm_by_spec, estimate_sensitivity, optimal_assignments, NeighborPolicy, BRUTE_FORCE_CAP};
use core::pipeline::{run_pipeline, ModeConfig, PipelineConfig};
use core::transforms::{self, PowerMode};
use core::util::format_rational;

create_exception!(pcp_forge, PcpForgeError, PyValueError);

fn err(e: core::Error) -> PyErr {
    PcpForgeError::new_err(e.to_string())
}

fn json_in(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    let json = obj.py().import("json")?;
    json.call_method1("dumps", (obj,))?.extract()
}

fn json_out<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn value_out<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    json_out(py, &v.to_string())
}

fn fraction<'py>(py: Python<'py>, q: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((format_rational(q),))
}

fn assignment(obj: &Bound<'_, PyAny>) -> PyResult<Assignment> {
    assignment_from_json(&json_in(obj)?).map_err(err)
}

fn assignment_out<'py>(py: Python<'py>, sigma: &[core::csp::Label]) -> PyResult<Bound<'py, PyAny>> {
    json_out(py, &assignment_to_json(sigma))
}

fn family(name: &str) -> PyResult<RelationFamily> {
    name.parse().map_err(err)
}

/// A weighted constraint satisfaction instance.
#[pyclass(module = "pcp_forge", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Instance {
    inner: core::csp::Instance,
}

fn wrap(inner: core::csp::Instance) -> Instance {
    Instance { inner }
}

#[pymethods]
impl Instance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Instance> {
        from_json(text).map(wrap).map_err(err)
    }

    /// Canonical JSON text.
    fn to_json(&self) -> String {
        to_json(&self.inner)
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    #[getter]
    fn num_constraints(&self) -> usize {
        self.inner.num_constraints()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        value_out(py, &serde_json::to_value(self.inner.stats()).expect("stats serialize"))
    }

    fn value<'py>(&self, py: Python<'py>, assignment_: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.value(&assignment(assignment_)?).map_err(err)?)
    }

    fn cost<'py>(&self, py: Python<'py>, assignment_: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.cost(&assignment(assignment_)?).map_err(err)?)
    }

    /// Indices of the constraints the assignment violates.
    fn violated(&self, assignment_: &Bound<'_, PyAny>) -> PyResult<Vec<usize>> {
        let sigma = assignment(assignment_)?;
        self.inner.check_assignment(&sigma).map_err(err)?;
        Ok((0..self.inner.num_constraints()).filter(|&i| !self.inner.constraints[i].satisfied(&sigma)).collect())
    }

    fn swap_distance(&self, other: &Instance) -> PyResult<usize> {
        self.inner.swap_distance(&other.inner).map_err(err)
    }

    /// The neighbor at edge `e`, either `"delete"` or `"swap"`.
    #[pyo3(signature = (e, policy = "delete"))]
    fn neighbor(&self, e: usize, policy: &str) -> PyResult<Instance> {
        let p = match policy {
            "delete" => NeighborPolicy::Delete,
            "swap" => NeighborPolicy::Swap,
            _ => return Err(PyValueError::new_err(format!("unknown policy {policy}"))),
        };
        core::oracles::neighbor(&self.inner, e, p).map(wrap).map_err(err)
    }

    fn __eq__(&self, other: &Instance) -> bool {
        self.inner.canonical() == other.inner.canonical()
    }

    fn __repr__(&self) -> String {
        format!("Instance(vars={}, constraints={})", self.inner.num_vars(), self.inner.num_constraints())
    }
}

#[pyfunction]
#[pyo3(signature = (n, pattern = "ones"))]
fn e2lin_cycle(n: usize, pattern: &str) -> PyResult<Instance> {
    let spec = match pattern {
        "ones" => CycleSpec::ones(n),
        "zeros" => CycleSpec::zeros(n),
        bits => {
            let pattern = bits
                .chars()
                .map(|c| c.to_digit(2).map(|b| b as u8))
                .collect::<Option<Vec<u8>>>()
                .ok_or_else(|| PyValueError::new_err(format!("bad pattern {bits}")))?;
            CycleSpec { n, pattern }
        }
    };
    generators::e2lin_cycle(&spec).map(wrap).map_err(err)
}

/// The two cycles that differ in two edges and share no near-optimal solution.
#[pyfunction]
fn lemma41_pair(n: usize) -> PyResult<(Instance, Instance)> {
    let (a, b) = generators::lemma41_pair(n).map_err(err)?;
    Ok((wrap(a), wrap(b)))
}

#[pyfunction]
#[pyo3(signature = (n, m, q = 2, family = "random", seed = 0))]
fn random_instance(n: usize, m: usize, q: u32, family: &str, seed: u64) -> PyResult<Instance> {
    generators::random_instance(n, m, q, self::family(family)?, seed).map(wrap).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, d, q = 2, family = "planted", seed = 0))]
fn random_regular_instance(n: usize, d: usize, q: u32, family: &str, seed: u64) -> PyResult<Instance> {
    generators::random_regular_instance(n, d, q, self::family(family)?, seed).map(wrap).map_err(err)
}

/// A satisfiable projection game and its planted assignment.
#[pyfunction]
#[pyo3(signature = (nu = 2, nv = 2, m = 4, su = 3, sv = 3, seed = 0))]
fn label_cover<'py>(
    py: Python<'py>,
    nu: usize,
    nv: usize,
    m: usize,
    su: u32,
    sv: u32,
    seed: u64,
) -> PyResult<(Instance, Bound<'py, PyAny>)> {
    let (inst, sigma) = generators::label_cover(nu, nv, m, su, sv, seed).map_err(err)?;
    Ok((wrap(inst), assignment_out(py, &sigma)?))
}

/// Exhaustive optimum: (value, one optimal assignment, number of optima).
#[pyfunction]
#[pyo3(signature = (inst, cap = BRUTE_FORCE_CAP))]
fn opt<'py>(py: Python<'py>, inst: &Instance, cap: u128) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>, usize)> {
    let (value, all) = optimal_assignments(&inst.inner, cap).map_err(err)?;
    Ok((fraction(py, &value)?, assignment_out(py, &all[0])?, all.len()))
}

#[pyfunction]
fn hamming_distance(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<usize> {
    hamming(&assignment(a)?, &assignment(b)?).map_err(err)
}

type Lifted<'py> = (Instance, Option<Bound<'py, PyAny>>);

fn lifted<'py>(py: Python<'py>, out: core::csp::Instance, sigma: Option<Assignment>) -> PyResult<Lifted<'py>> {
    Ok((wrap(out), sigma.map(|s| assignment_out(py, &s)).transpose()?))
}

/// Degree reduction; returns the output and, if given a witness, its lift.
#[pyfunction]
#[pyo3(signature = (inst, d0 = 4, seed = 0, witness = None))]
fn degree_reduce<'py>(
    py: Python<'py>,
    inst: &Instance,
    d0: usize,
    seed: u64,
    witness: Option<&Bound<'py, PyAny>>,
) -> PyResult<Lifted<'py>> {
    let (out, map) = transforms::degree_reduce(&inst.inner, d0, seed).map_err(err)?;
    let lift = witness.map(|w| transforms::lift_degree(&map, &assignment(w)?).map_err(err)).transpose()?;
    lifted(py, out, lift)
}

/// Superimposes a certified d0-regular expander with trivial constraints.
#[pyfunction]
#[pyo3(signature = (inst, d0 = 8, seed = 0))]
fn expanderize(inst: &Instance, d0: usize, seed: u64) -> PyResult<Instance> {
    transforms::expanderize(&inst.inner, d0, seed).map(|(i, _)| wrap(i)).map_err(err)
}

/// Random-walk powering, exact unless `sampled` gives a walk budget.
#[pyfunction]
#[pyo3(signature = (inst, t = 1, sampled = None, seed = 0, witness = None))]
fn power<'py>(
    py: Python<'py>,
    inst: &Instance,
    t: usize,
    sampled: Option<usize>,
    seed: u64,
    witness: Option<&Bound<'py, PyAny>>,
) -> PyResult<Lifted<'py>> {
    let mode = sampled.map_or(PowerMode::Exact, |count| PowerMode::Sampled { count, seed });
    let (out, _) = transforms::power(&inst.inner, t, mode).map_err(err)?;
    let lift = witness.map(|w| transforms::lift_power(&inst.inner, &assignment(w)?, t).map_err(err)).transpose()?;
    lifted(py, out, lift)
}

#[pyfunction]
#[pyo3(signature = (inst, witness = None))]
fn to_e3sat<'py>(py: Python<'py>, inst: &Instance, witness: Option<&Bound<'py, PyAny>>) -> PyResult<Lifted<'py>> {
    let (out, enc) = transforms::to_e3sat(&inst.inner).map_err(err)?;
    let lift = witness.map(|w| transforms::lift_e3sat(&out, &enc, &assignment(w)?).map_err(err)).transpose()?;
    lifted(py, out, lift)
}

#[pyfunction]
fn e3sat_to_3lin(inst: &Instance) -> PyResult<Instance> {
    transforms::e3sat_to_3lin(&inst.inner).map(wrap).map_err(err)
}

/// Estimated sensitivity of an algorithm given by spec, e.g. `"greedy:2"`.
#[pyfunction]
#[pyo3(signature = (inst, algorithm = "exact", policy = "delete", samples = 16, seed = 0, edges = None))]
fn sensitivity<'py>(
    py: Python<'py>,
    inst: &Instance,
    algorithm: &str,
    policy: &str,
    samples: usize,
    seed: u64,
    edges: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let alg = algorithm_by_spec(algorithm).map_err(err)?;
    let policy = match policy {
        "delete" => NeighborPolicy::Delete,
        "swap" => NeighborPolicy::Swap,
        _ => return Err(PyValueError::new_err(format!("unknown policy {policy}"))),
    };
    let r = estimate_sensitivity(alg.as_ref(), &inst.inner, policy, samples, seed, edges.as_deref()).map_err(err)?;
    value_out(py, &r.to_json())
}

/// Runs the reduction harness for one pass and returns its report.
#[pyfunction]
#[pyo3(signature = (pass_name, trials = 10, seed = 0))]
fn verify<'py>(py: Python<'py>, pass_name: &str, trials: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let pass: Pass = pass_name.parse().map_err(err)?;
    let r = verify_reduction(pass, &VerifyConfig::for_pass(pass, trials, seed)).map_err(err)?;
    value_out(py, &r.to_json())
}

/// Locality check of a local rule on a random bounded-degree graph.
#[pyfunction]
#[pyo3(signature = (rule = "local-max", t = 1, n = 12, m = 16, max_degree = 4, samples = 8, seed = 0))]
fn nonsignal<'py>(
    py: Python<'py>,
    rule: &str,
    t: usize,
    n: usize,
    m: usize,
    max_degree: usize,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = generators::random_bounded_graph(n, m, max_degree, seed).map_err(err)?;
    let alg = LocalAlgorithm::by_name(rule, t).map_err(err)?;
    value_out(py, &check_nonsignaling_sensitivity(&alg, &g, samples, seed).map_err(err)?.to_json())
}

/// Runs the amplification pipeline into `out_dir` and returns the report.
#[pyfunction]
#[pyo3(signature = (out_dir, inst, witness = None, rounds = 1, t = 1, d0 = 8, cloud_d0 = 4, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn pipeline<'py>(
    py: Python<'py>,
    out_dir: PathBuf,
    inst: &Instance,
    witness: Option<&Bound<'py, PyAny>>,
    rounds: usize,
    t: usize,
    d0: usize,
    cloud_d0: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = PipelineConfig { rounds, t, d0, cloud_d0, mode: ModeConfig::Exact, seed, ..Default::default() };
    let w = witness.map(assignment).transpose()?;
    let run = run_pipeline(&cfg, &inst.inner, w.as_ref(), &out_dir).map_err(err)?;
    value_out(py, &run.report)
}

#[pymodule]
fn pcp_forge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PcpForgeError", m.py().get_type::<PcpForgeError>())?;
    m.add_class::<Instance>()?;
    m.add_function(wrap_pyfunction!(e2lin_cycle, m)?)?;
    m.add_function(wrap_pyfunction!(lemma41_pair, m)?)?;
    m.add_function(wrap_pyfunction!(random_instance, m)?)?;
    m.add_function(wrap_pyfunction!(random_regular_instance, m)?)?;
    m.add_function(wrap_pyfunction!(label_cover, m)?)?;
    m.add_function(wrap_pyfunction!(opt, m)?)?;
    m.add_function(wrap_pyfunction!(hamming_distance, m)?)?;
    m.add_function(wrap_pyfunction!(degree_reduce, m)?)?;
    m.add_function(wrap_pyfunction!(expanderize, m)?)?;
    m.add_function(wrap_pyfunction!(power, m)?)?;
    m.add_function(wrap_pyfunction!(to_e3sat, m)?)?;
    m.add_function(wrap_pyfunction!(e3sat_to_3lin, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(nonsignal, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline, m)?)?;
    Ok(())
}
