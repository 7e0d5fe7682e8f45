//! Canonical JSON text for instances, assignments and relations.
//!
//! `to_json` writes the canonical form of an instance: alphabets named
//! `s0, s1, ...` in order of first use, one edge per line, edges sorted by
//! (tuple, relation fingerprint). Output is byte-deterministic, so
//! `from_json(to_json(i)) == i.canonical()`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::util::{format_rational, parse_rational, sha256_hex};

use super::{Alphabet, Assignment, Constraint, Instance, Label, Relation, WalkCheck};

fn perr(location: &str, message: impl Into<String>) -> Error {
    Error::Parse { location: location.to_string(), message: message.into() }
}

pub fn label_to_value(l: &Label) -> Value {
    match l {
        Label::Atom(a) => json!(a),
        Label::View(entries) => Value::Array(
            entries.iter().map(|(w, l)| json!([w, label_to_value(l)])).collect(),
        ),
    }
}

pub fn label_from_value(v: &Value, path: &str) -> Result<Label> {
    match v {
        Value::Number(n) => n
            .as_u64()
            .and_then(|x| u32::try_from(x).ok())
            .map(Label::Atom)
            .ok_or_else(|| perr(path, "label must be a non-negative 32-bit integer")),
        Value::Array(items) => {
            let mut entries = Vec::with_capacity(items.len());
            for (i, it) in items.iter().enumerate() {
                let p = format!("{path}[{i}]");
                let pair = it.as_array().filter(|a| a.len() == 2).ok_or_else(|| perr(&p, "expected [var, label]"))?;
                let w = pair[0].as_u64().ok_or_else(|| perr(&p, "expected variable id"))? as usize;
                entries.push((w, label_from_value(&pair[1], &format!("{p}[1]"))?));
            }
            let sorted = entries.windows(2).all(|w| w[0].0 < w[1].0);
            if !sorted {
                return Err(perr(path, "view entries must be strictly sorted by variable"));
            }
            Ok(Label::View(entries.into()))
        }
        _ => Err(perr(path, "expected a label")),
    }
}

pub fn alphabet_to_value(a: &Alphabet) -> Value {
    match a {
        Alphabet::Explicit(v) => json!({"kind": "explicit", "labels": v}),
        Alphabet::Boolean => json!({"kind": "boolean"}),
        Alphabet::Product { base, count } => {
            json!({"kind": "product", "base": alphabet_to_value(base), "count": count})
        }
        Alphabet::Ball { center, radius, ball, bases } => json!({
            "kind": "ball",
            "center": center,
            "radius": radius,
            "ball": ball,
            "bases": bases.iter().map(alphabet_to_value).collect::<Vec<_>>(),
        }),
    }
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| perr(path, format!("missing key `{key}`")))
}

fn as_obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| perr(path, "expected an object"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| perr(path, "expected a non-negative integer"))
}

fn as_arr<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| perr(path, "expected an array"))
}

fn usize_list(v: &Value, path: &str) -> Result<Vec<usize>> {
    as_arr(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_usize(x, &format!("{path}[{i}]")))
        .collect()
}

fn u32_list(v: &Value, path: &str) -> Result<Vec<u32>> {
    usize_list(v, path)?
        .into_iter()
        .map(|x| u32::try_from(x).map_err(|_| perr(path, "entry exceeds 32 bits")))
        .collect()
}

pub fn alphabet_from_value(v: &Value, path: &str) -> Result<Alphabet> {
    let o = as_obj(v, path)?;
    let kind = get(o, "kind", path)?.as_str().ok_or_else(|| perr(path, "kind must be a string"))?;
    match kind {
        "explicit" => {
            let labels = u32_list(get(o, "labels", path)?, &format!("{path}.labels"))?;
            Alphabet::explicit(labels).map_err(|e| perr(path, e.to_string()))
        }
        "boolean" => Ok(Alphabet::Boolean),
        "product" => Ok(Alphabet::Product {
            base: Box::new(alphabet_from_value(get(o, "base", path)?, &format!("{path}.base"))?),
            count: as_usize(get(o, "count", path)?, &format!("{path}.count"))?,
        }),
        "ball" => {
            let ball = usize_list(get(o, "ball", path)?, &format!("{path}.ball"))?;
            let bases_v = as_arr(get(o, "bases", path)?, &format!("{path}.bases"))?;
            let bases = bases_v
                .iter()
                .enumerate()
                .map(|(i, b)| alphabet_from_value(b, &format!("{path}.bases[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            if ball.len() != bases.len() || !ball.windows(2).all(|w| w[0] < w[1]) {
                return Err(perr(path, "ball must be sorted and match its bases"));
            }
            Ok(Alphabet::Ball {
                center: as_usize(get(o, "center", path)?, &format!("{path}.center"))?,
                radius: as_usize(get(o, "radius", path)?, &format!("{path}.radius"))?,
                ball,
                bases,
            })
        }
        other => Err(perr(path, format!("unknown alphabet kind `{other}`"))),
    }
}

pub fn relation_to_value(r: &Relation) -> Value {
    match r {
        Relation::Tuples { arity, accept } => {
            json!({"kind": "tuples", "arity": arity, "accept": accept.iter().collect::<Vec<_>>()})
        }
        Relation::Parity2(b) => json!({"kind": "parity2", "b": b}),
        Relation::Xor { arity, b } => json!({"kind": "xor", "arity": arity, "b": b}),
        Relation::Equality => json!({"kind": "eq"}),
        Relation::Trivial(arity) => json!({"kind": "trivial", "arity": arity}),
        Relation::Projection(map) => json!({"kind": "projection", "map": map.as_slice()}),
        Relation::Clause(neg) => json!({"kind": "clause", "neg": neg}),
        Relation::Conjunction { arity, parts } => json!({
            "kind": "conj",
            "arity": arity,
            "parts": parts.iter().map(|(r, p)| json!({"rel": relation_to_value(r), "pos": p})).collect::<Vec<_>>(),
        }),
        Relation::Walk(checks) => json!({
            "kind": "walk",
            "checks": checks.iter().map(|c| json!({
                "a": c.a, "b": c.b, "edge": c.edge, "rev": c.reversed, "rel": relation_to_value(&c.relation),
            })).collect::<Vec<_>>(),
        }),
        Relation::Sparse { inner, position } => {
            json!({"kind": "sparse", "inner": relation_to_value(inner), "pos": position})
        }
    }
}

/// Parses a relation; `arity_hint` fills in the arity of `trivial` when the
/// file omits it.
pub fn relation_from_value(v: &Value, path: &str, arity_hint: Option<usize>) -> Result<Relation> {
    let o = as_obj(v, path)?;
    let kind = get(o, "kind", path)?.as_str().ok_or_else(|| perr(path, "kind must be a string"))?;
    let bit = |key: &str| -> Result<u8> {
        match get(o, key, path)?.as_u64() {
            Some(b @ 0..=1) => Ok(b as u8),
            _ => Err(perr(&format!("{path}.{key}"), "expected 0 or 1")),
        }
    };
    match kind {
        "parity2" => Ok(Relation::Parity2(bit("b")?)),
        "xor" => Ok(Relation::Xor { arity: as_usize(get(o, "arity", path)?, path)?, b: bit("b")? }),
        "eq" => Ok(Relation::Equality),
        "trivial" => {
            let arity = match o.get("arity") {
                Some(a) => as_usize(a, &format!("{path}.arity"))?,
                None => arity_hint.ok_or_else(|| perr(path, "trivial relation needs an arity"))?,
            };
            Ok(Relation::Trivial(arity))
        }
        "projection" => Ok(Relation::projection(u32_list(get(o, "map", path)?, &format!("{path}.map"))?)),
        "tuples" => {
            let acc = as_arr(get(o, "accept", path)?, &format!("{path}.accept"))?;
            let mut set = BTreeSet::new();
            for (i, t) in acc.iter().enumerate() {
                set.insert(u32_list(t, &format!("{path}.accept[{i}]"))?);
            }
            let arity = match o.get("arity") {
                Some(a) => as_usize(a, &format!("{path}.arity"))?,
                None => match set.iter().next() {
                    Some(t) => t.len(),
                    None => arity_hint.ok_or_else(|| perr(path, "empty tuple relation needs an arity"))?,
                },
            };
            if let Some((i, _)) = set.iter().enumerate().find(|(_, t)| t.len() != arity) {
                return Err(perr(&format!("{path}.accept[{i}]"), "tuple length differs from arity"));
            }
            Ok(Relation::Tuples { arity, accept: Arc::new(set) })
        }
        "clause" => {
            let neg = as_arr(get(o, "neg", path)?, &format!("{path}.neg"))?
                .iter()
                .enumerate()
                .map(|(i, b)| b.as_bool().ok_or_else(|| perr(&format!("{path}.neg[{i}]"), "expected bool")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Relation::Clause(neg))
        }
        "conj" => {
            let arity = as_usize(get(o, "arity", path)?, &format!("{path}.arity"))?;
            let parts_v = as_arr(get(o, "parts", path)?, &format!("{path}.parts"))?;
            let mut parts = Vec::with_capacity(parts_v.len());
            for (i, p) in parts_v.iter().enumerate() {
                let pp = format!("{path}.parts[{i}]");
                let po = as_obj(p, &pp)?;
                let pos = usize_list(get(po, "pos", &pp)?, &format!("{pp}.pos"))?;
                if pos.iter().any(|&x| x >= arity) {
                    return Err(perr(&pp, "position out of range"));
                }
                let r = relation_from_value(get(po, "rel", &pp)?, &format!("{pp}.rel"), Some(pos.len()))?;
                if r.arity() != pos.len() {
                    return Err(perr(&pp, "part arity differs from its positions"));
                }
                parts.push((r, pos));
            }
            Ok(Relation::Conjunction { arity, parts: Arc::new(parts) })
        }
        "walk" => {
            let checks_v = as_arr(get(o, "checks", path)?, &format!("{path}.checks"))?;
            let mut checks = Vec::with_capacity(checks_v.len());
            for (i, c) in checks_v.iter().enumerate() {
                let cp = format!("{path}.checks[{i}]");
                let co = as_obj(c, &cp)?;
                checks.push(WalkCheck {
                    a: as_usize(get(co, "a", &cp)?, &cp)?,
                    b: as_usize(get(co, "b", &cp)?, &cp)?,
                    edge: as_usize(get(co, "edge", &cp)?, &cp)?,
                    reversed: get(co, "rev", &cp)?.as_bool().ok_or_else(|| perr(&cp, "rev must be bool"))?,
                    relation: relation_from_value(get(co, "rel", &cp)?, &format!("{cp}.rel"), Some(2))?,
                });
            }
            Ok(Relation::Walk(Arc::new(checks)))
        }
        "sparse" => {
            let inner = relation_from_value(get(o, "inner", path)?, &format!("{path}.inner"), None)?;
            let position = as_usize(get(o, "pos", path)?, &format!("{path}.pos"))?;
            if position >= inner.arity() {
                return Err(perr(path, "sparse position out of range"));
            }
            Ok(Relation::Sparse { inner: Arc::new(inner), position })
        }
        other => Err(perr(path, format!("unknown relation kind `{other}`"))),
    }
}

/// Short stable digest of a relation's canonical text.
pub fn relation_fingerprint(r: &Relation) -> String {
    let text = serde_json::to_string(&relation_to_value(r)).expect("json");
    sha256_hex(text.as_bytes())[..16].to_string()
}

/// Canonical text of an instance.
pub fn to_json(inst: &Instance) -> String {
    let c = inst.canonical();
    let mut out = String::new();
    out.push_str("{\"alphabets\":{");
    for (i, a) in c.alphabets.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("\n\"s{i}\":{}", alphabet_to_value(a)));
    }
    out.push_str("},\n\"variables\":[");
    for v in 0..c.num_vars() {
        if v > 0 {
            out.push(',');
        }
        out.push_str(&format!("{{\"alphabet\":\"s{}\",\"id\":{v}}}", c.var_alphabet[v]));
    }
    out.push_str("],\n\"edges\":[");
    for (i, e) in c.constraints.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let ev = json!({
            "vars": e.vars,
            "relation": relation_to_value(&e.relation),
            "weight": format_rational(&e.weight),
            "mult": e.mult,
        });
        out.push('\n');
        out.push_str(&ev.to_string());
    }
    out.push_str("\n]");
    if let Some(m) = &c.marked {
        out.push_str(&format!(",\n\"marked\":{}", json!(m.iter().collect::<Vec<_>>())));
    }
    out.push_str("}\n");
    out
}

/// Parses instance text. Errors carry the JSON path of the offending item.
pub fn from_json(text: &str) -> Result<Instance> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| perr(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let o = as_obj(&root, "$")?;
    let alph_o = as_obj(get(o, "alphabets", "$")?, "$.alphabets")?;
    let mut names: BTreeMap<&str, usize> = BTreeMap::new();
    let mut alphabets = Vec::new();
    for (name, a) in alph_o {
        names.insert(name.as_str(), alphabets.len());
        alphabets.push(alphabet_from_value(a, &format!("$.alphabets.{name}"))?);
    }
    let vars = as_arr(get(o, "variables", "$")?, "$.variables")?;
    let mut var_alphabet = vec![usize::MAX; vars.len()];
    for (i, v) in vars.iter().enumerate() {
        let p = format!("$.variables[{i}]");
        let vo = as_obj(v, &p)?;
        let id = as_usize(get(vo, "id", &p)?, &format!("{p}.id"))?;
        if id >= vars.len() || var_alphabet[id] != usize::MAX {
            return Err(perr(&p, "variable ids must be a permutation of 0..n"));
        }
        let an = get(vo, "alphabet", &p)?.as_str().ok_or_else(|| perr(&p, "alphabet must be a name"))?;
        var_alphabet[id] = *names.get(an).ok_or_else(|| perr(&format!("{p}.alphabet"), format!("unknown alphabet `{an}`")))?;
    }
    let mut inst = Instance { alphabets, var_alphabet, constraints: Vec::new(), marked: None };
    let edges = as_arr(get(o, "edges", "$")?, "$.edges")?;
    for (i, e) in edges.iter().enumerate() {
        let p = format!("$.edges[{i}]");
        let eo = as_obj(e, &p)?;
        let evars = usize_list(get(eo, "vars", &p)?, &format!("{p}.vars"))?;
        if let Some(&bad) = evars.iter().find(|&&v| v >= inst.num_vars()) {
            return Err(perr(&format!("{p}.vars"), format!("unknown variable {bad}")));
        }
        let relation = relation_from_value(get(eo, "relation", &p)?, &format!("{p}.relation"), Some(evars.len()))?;
        if relation.arity() != evars.len() {
            return Err(perr(&p, format!("relation arity {} but {} variables", relation.arity(), evars.len())));
        }
        check_relation_typing(&inst, &evars, &relation, &format!("{p}.relation"))?;
        let weight = match eo.get("weight") {
            None => crate::util::one(),
            Some(w) => {
                let s = w.as_str().map(str::to_string).unwrap_or_else(|| w.to_string());
                parse_rational(&s).ok_or_else(|| perr(&format!("{p}.weight"), "expected \"p/q\""))?
            }
        };
        let mult = match eo.get("mult") {
            None => 1,
            Some(m) => m.as_u64().filter(|&m| m > 0).ok_or_else(|| perr(&format!("{p}.mult"), "expected positive integer"))?,
        };
        inst.push(Constraint { vars: evars, relation, weight, mult }).map_err(|e| perr(&p, e.to_string()))?;
    }
    if let Some(m) = o.get("marked") {
        let list = usize_list(m, "$.marked")?;
        if let Some(&bad) = list.iter().find(|&&v| v >= inst.num_vars()) {
            return Err(perr("$.marked", format!("unknown variable {bad}")));
        }
        inst.marked = Some(list.into_iter().collect());
    }
    inst.normalize_alphabets();
    Ok(inst)
}

fn check_relation_typing(inst: &Instance, vars: &[usize], r: &Relation, path: &str) -> Result<()> {
    match r {
        Relation::Tuples { accept, .. } => {
            for (i, t) in accept.iter().enumerate() {
                for (&v, &a) in vars.iter().zip(t) {
                    if !inst.alphabet_of(v).contains(&Label::Atom(a)) {
                        return Err(perr(
                            &format!("{path}.accept[{i}]"),
                            format!("label {a} is not in the alphabet of variable {v}"),
                        ));
                    }
                }
            }
        }
        Relation::Projection(map) => {
            let (left, right) = (inst.alphabet_of(vars[0]), inst.alphabet_of(vars[1]));
            if let Ok(labels) = left.labels(1 << 20) {
                for l in labels {
                    let a = l.as_atom().ok_or_else(|| perr(path, "projection needs atom labels"))?;
                    match map.get(a as usize) {
                        Some(&b) if right.contains(&Label::Atom(b)) => {}
                        _ => return Err(perr(&format!("{path}.map"), format!("left label {a} has no valid image"))),
                    }
                }
            }
        }
        _ => {}
    }
    Ok(())
}

pub fn assignment_to_json(sigma: &[Label]) -> String {
    Value::Array(sigma.iter().map(label_to_value).collect()).to_string()
}

pub fn assignment_from_json(text: &str) -> Result<Assignment> {
    let v: Value = serde_json::from_str(text).map_err(|e| perr("$", e.to_string()))?;
    as_arr(&v, "$")?
        .iter()
        .enumerate()
        .map(|(i, l)| label_from_value(l, &format!("$[{i}]")))
        .collect()
}
