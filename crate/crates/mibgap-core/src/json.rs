//! Canonical JSON formats shared with the command line: instances (bilinear
//! systems, automata, piece families), solver reports, and certificates.
//!
//! All numbers travel as strings: integers in decimal, rationals as `"p/q"`.
//! No JSON number literals appear anywhere, so files are exact and
//! portable. Serialization sorts object keys (the default map of the JSON
//! library), making parse -> serialize byte-stable on canonical files.

use crate::engine::{BranchDesc, GapVerdict, SplitBranch, UnsatNode};
use crate::mib::{AffineMap, Assignment, BilinearRow, Form, LinearBlock, MibSystem};
use crate::mpta::{DominationOutcome, Edge, GuardAtom, GuardOp, Mpta};
use crate::num::{fmt_int, fmt_rat, parse_int, parse_rat, Int, Rat};
use crate::realfeas::{BoxCert, RefuteTree, RelaxRow, RelaxRowKind};
use crate::relax::ConstantLedger;
use crate::semilinear::{HybridLinearSet, LinearSet};
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Num(#[from] crate::num::NumError),
}

fn schema(msg: impl Into<String>) -> JsonError {
    JsonError::Schema(msg.into())
}

/// Serialize with sorted keys, two-space indentation, and a trailing
/// newline; the canonical on-disk form.
pub fn canonical(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// primitive helpers
// ---------------------------------------------------------------------------

fn int_str(v: &Int) -> Value {
    Value::String(fmt_int(v))
}

fn rat_str(v: &Rat) -> Value {
    Value::String(fmt_rat(v))
}

fn usize_str(v: usize) -> Value {
    Value::String(v.to_string())
}

fn int_vec(v: &[Int]) -> Value {
    Value::Array(v.iter().map(int_str).collect())
}

fn rat_vec_json(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rat_str).collect())
}

fn int_mat(m: &[Vec<Int>]) -> Value {
    Value::Array(m.iter().map(|r| int_vec(r)).collect())
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str, JsonError> {
    v.as_str().ok_or_else(|| schema(format!("{what} must be a string")))
}

fn as_arr<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, JsonError> {
    v.as_array().ok_or_else(|| schema(format!("{what} must be an array")))
}

fn as_obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, JsonError> {
    v.as_object().ok_or_else(|| schema(format!("{what} must be an object")))
}

fn field<'a>(o: &'a Map<String, Value>, key: &str) -> Result<&'a Value, JsonError> {
    o.get(key).ok_or_else(|| schema(format!("missing field `{key}`")))
}

fn parse_int_field(v: &Value, what: &str) -> Result<Int, JsonError> {
    if v.is_number() {
        return Err(schema(format!("{what} must be a decimal string, not a JSON number")));
    }
    Ok(parse_int(as_str(v, what)?)?)
}

fn parse_rat_field(v: &Value, what: &str) -> Result<Rat, JsonError> {
    if v.is_number() {
        return Err(schema(format!("{what} must be a `p/q` string, not a JSON number")));
    }
    Ok(parse_rat(as_str(v, what)?)?)
}

fn parse_usize(v: &Value, what: &str) -> Result<usize, JsonError> {
    as_str(v, what)?
        .parse::<usize>()
        .map_err(|_| schema(format!("{what} must be a nonnegative decimal string")))
}

fn parse_int_vec(v: &Value, what: &str) -> Result<Vec<Int>, JsonError> {
    as_arr(v, what)?.iter().map(|x| parse_int_field(x, what)).collect()
}

fn parse_rat_vec(v: &Value, what: &str) -> Result<Vec<Rat>, JsonError> {
    as_arr(v, what)?.iter().map(|x| parse_rat_field(x, what)).collect()
}

fn parse_int_mat(v: &Value, what: &str) -> Result<Vec<Vec<Int>>, JsonError> {
    as_arr(v, what)?.iter().map(|r| parse_int_vec(r, what)).collect()
}

// ---------------------------------------------------------------------------
// instances
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum Instance {
    Mib(MibSystem),
    Mpta(Mpta),
    Pieces { dim: usize, exact: bool, pieces: HybridLinearSet },
}

pub fn parse_instance(text: &str) -> Result<Instance, JsonError> {
    let v: Value = serde_json::from_str(text).map_err(|e| JsonError::Syntax(e.to_string()))?;
    let o = as_obj(&v, "instance")?;
    match as_str(field(o, "kind")?, "kind")? {
        "mib" => Ok(Instance::Mib(mib_from_json(o)?)),
        "mpta" => Ok(Instance::Mpta(mpta_from_json(o)?)),
        "pieces" => {
            let dim = parse_usize(field(o, "dim")?, "dim")?;
            let exact = field(o, "exact")?
                .as_bool()
                .ok_or_else(|| schema("exact must be a boolean"))?;
            let pieces = pieces_from_json(field(o, "pieces")?, dim)?;
            Ok(Instance::Pieces { dim, exact, pieces })
        }
        k => Err(schema(format!("unknown instance kind `{k}`"))),
    }
}

pub fn mib_to_json(s: &MibSystem) -> Value {
    json!({
        "kind": "mib",
        "form": match s.form { Form::General => "general", Form::Standard => "standard" },
        "m": usize_str(s.m),
        "n": usize_str(s.n),
        "bilinear": Value::Array(s.bilinear.iter().map(|r| json!({
            "a": int_mat(&r.a),
            "b": int_vec(&r.b),
            "c": int_str(&r.c),
        })).collect()),
        "int_linear": { "rows": int_mat(&s.int_linear.rows), "rhs": int_vec(&s.int_linear.rhs) },
        "real_linear": { "rows": int_mat(&s.real_linear.rows), "rhs": int_vec(&s.real_linear.rhs) },
    })
}

fn linear_block_from_json(v: &Value, n_cols: usize, what: &str) -> Result<LinearBlock, JsonError> {
    let o = as_obj(v, what)?;
    let rows = parse_int_mat(field(o, "rows")?, "rows")?;
    let rhs = parse_int_vec(field(o, "rhs")?, "rhs")?;
    if rows.len() != rhs.len() || rows.iter().any(|r| r.len() != n_cols) {
        return Err(schema(format!("{what}: inconsistent dimensions")));
    }
    Ok(LinearBlock { rows, rhs })
}

fn mib_from_json(o: &Map<String, Value>) -> Result<MibSystem, JsonError> {
    let m = parse_usize(field(o, "m")?, "m")?;
    let n = parse_usize(field(o, "n")?, "n")?;
    let form = match as_str(field(o, "form")?, "form")? {
        "general" => Form::General,
        "standard" => Form::Standard,
        f => return Err(schema(format!("unknown form `{f}`"))),
    };
    let mut bilinear = Vec::new();
    for r in as_arr(field(o, "bilinear")?, "bilinear")? {
        let ro = as_obj(r, "bilinear row")?;
        let a = parse_int_mat(field(ro, "a")?, "a")?;
        let b = parse_int_vec(field(ro, "b")?, "b")?;
        let c = parse_int_field(field(ro, "c")?, "c")?;
        bilinear.push(BilinearRow { a, b, c });
    }
    let int_linear = linear_block_from_json(field(o, "int_linear")?, m, "int_linear")?;
    let real_linear = linear_block_from_json(field(o, "real_linear")?, n, "real_linear")?;
    MibSystem::new(m, n, bilinear, int_linear, real_linear, form)
        .map_err(|e| schema(e.to_string()))
}

pub fn mpta_to_json(a: &Mpta) -> Value {
    let loc_name = |i: usize| a.locations[i].clone();
    let clock_name = |i: usize| a.clocks[i].clone();
    let mut rates = Map::new();
    for (l, row) in a.rates.iter().enumerate() {
        let mut per = Map::new();
        for (o, r) in row.iter().enumerate() {
            if !num_traits::Zero::is_zero(r) {
                per.insert(a.observers[o].clone(), int_str(r));
            }
        }
        if !per.is_empty() {
            rates.insert(loc_name(l), Value::Object(per));
        }
    }
    json!({
        "kind": "mpta",
        "locations": a.locations,
        "initial": loc_name(a.initial),
        "accepting": Value::Array(a.accepting.iter().map(|&l| Value::String(loc_name(l))).collect()),
        "clocks": a.clocks,
        "observers": a.observers,
        "edges": Value::Array(a.edges.iter().map(|e| json!({
            "source": loc_name(e.source),
            "target": loc_name(e.target),
            "guard": Value::Array(e.guard.iter().map(|g| json!([
                clock_name(g.clock),
                match g.op { GuardOp::Le => "<=", GuardOp::Ge => ">=" },
                fmt_int(&g.bound),
            ])).collect()),
            "resets": Value::Array(e.resets.iter().map(|&c| Value::String(clock_name(c))).collect()),
        })).collect()),
        "rates": Value::Object(rates),
    })
}

fn mpta_from_json(o: &Map<String, Value>) -> Result<Mpta, JsonError> {
    let locations: Vec<String> = as_arr(field(o, "locations")?, "locations")?
        .iter()
        .map(|v| as_str(v, "location").map(str::to_string))
        .collect::<Result<_, _>>()?;
    let clocks: Vec<String> = as_arr(field(o, "clocks")?, "clocks")?
        .iter()
        .map(|v| as_str(v, "clock").map(str::to_string))
        .collect::<Result<_, _>>()?;
    let observers: Vec<String> = as_arr(field(o, "observers")?, "observers")?
        .iter()
        .map(|v| as_str(v, "observer").map(str::to_string))
        .collect::<Result<_, _>>()?;
    let loc_id = |name: &str| -> Result<usize, JsonError> {
        locations
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| schema(format!("unknown location `{name}`")))
    };
    let clock_id = |name: &str| -> Result<usize, JsonError> {
        clocks
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| schema(format!("unknown clock `{name}`")))
    };
    let initial = loc_id(as_str(field(o, "initial")?, "initial")?)?;
    let mut accepting = BTreeSet::new();
    for v in as_arr(field(o, "accepting")?, "accepting")? {
        accepting.insert(loc_id(as_str(v, "accepting location")?)?);
    }
    let mut edges = Vec::new();
    for ev in as_arr(field(o, "edges")?, "edges")? {
        let eo = as_obj(ev, "edge")?;
        let source = loc_id(as_str(field(eo, "source")?, "source")?)?;
        let target = loc_id(as_str(field(eo, "target")?, "target")?)?;
        let mut guard = Vec::new();
        for gv in as_arr(field(eo, "guard")?, "guard")? {
            let triple = as_arr(gv, "guard atom")?;
            if triple.len() != 3 {
                return Err(schema("guard atom must be [clock, op, bound]"));
            }
            let clock = clock_id(as_str(&triple[0], "guard clock")?)?;
            let op = match as_str(&triple[1], "guard op")? {
                "<=" => GuardOp::Le,
                ">=" => GuardOp::Ge,
                op => return Err(schema(format!("unknown guard operator `{op}`"))),
            };
            let bound = parse_int_field(&triple[2], "guard bound")?;
            if num_traits::Signed::is_negative(&bound) {
                return Err(schema("guard bound must be a natural number"));
            }
            guard.push(GuardAtom { clock, op, bound });
        }
        let mut resets = BTreeSet::new();
        for rv in as_arr(field(eo, "resets")?, "resets")? {
            resets.insert(clock_id(as_str(rv, "reset clock")?)?);
        }
        edges.push(Edge { source, guard, resets, target });
    }
    let mut rates = vec![vec![Int::from(0); observers.len()]; locations.len()];
    let ro = as_obj(field(o, "rates")?, "rates")?;
    for (loc_name, per) in ro {
        let l = loc_id(loc_name)?;
        for (obs_name, val) in as_obj(per, "rates entry")? {
            let oi = observers
                .iter()
                .position(|x| x == obs_name)
                .ok_or_else(|| schema(format!("unknown observer `{obs_name}`")))?;
            rates[l][oi] = parse_int_field(val, "rate")?;
        }
    }
    let a = Mpta { locations, initial, accepting, clocks, observers, edges, rates };
    a.validate().map_err(|e| schema(e.to_string()))?;
    Ok(a)
}

pub fn pieces_to_json(dim: usize, exact: bool, pieces: &HybridLinearSet) -> Value {
    json!({
        "kind": "pieces",
        "dim": usize_str(dim),
        "exact": exact,
        "pieces": Value::Array(pieces.pieces.iter().map(|p| json!({
            "base": int_vec(&p.base),
            "periods": int_mat(&p.periods),
        })).collect()),
    })
}

fn pieces_from_json(v: &Value, dim: usize) -> Result<HybridLinearSet, JsonError> {
    let mut pieces = Vec::new();
    for pv in as_arr(v, "pieces")? {
        let po = as_obj(pv, "piece")?;
        let base = parse_int_vec(field(po, "base")?, "base")?;
        let periods = parse_int_mat(field(po, "periods")?, "periods")?;
        if base.len() != dim || periods.iter().any(|p| p.len() != dim) {
            return Err(schema("piece dimension mismatch"));
        }
        pieces.push(LinearSet { base, periods });
    }
    Ok(HybridLinearSet { dim, pieces })
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

pub fn affine_map_to_json(m: &AffineMap) -> Value {
    json!({ "w": int_vec(&m.w), "p": int_mat(&m.p) })
}

pub fn affine_map_from_json(v: &Value) -> Result<AffineMap, JsonError> {
    let o = as_obj(v, "affine map")?;
    Ok(AffineMap {
        w: parse_int_vec(field(o, "w")?, "w")?,
        p: parse_int_mat(field(o, "p")?, "p")?,
    })
}

fn boxes_to_json(boxes: &[(Rat, Option<Rat>)]) -> Value {
    Value::Array(
        boxes
            .iter()
            .map(|(lo, hi)| {
                json!([rat_str(lo), hi.as_ref().map(rat_str).unwrap_or(Value::Null)])
            })
            .collect(),
    )
}

fn boxes_from_json(v: &Value) -> Result<Vec<(Rat, Option<Rat>)>, JsonError> {
    let mut out = Vec::new();
    for bv in as_arr(v, "boxes")? {
        let pair = as_arr(bv, "box")?;
        if pair.len() != 2 {
            return Err(schema("box must be [lo, hi-or-null]"));
        }
        let lo = parse_rat_field(&pair[0], "box lo")?;
        let hi = if pair[1].is_null() { None } else { Some(parse_rat_field(&pair[1], "box hi")?) };
        out.push((lo, hi));
    }
    Ok(out)
}

fn relax_row_to_json(r: &RelaxRow) -> Value {
    let kind = match &r.kind {
        RelaxRowKind::OriginalLower { row } => json!({ "type": "original", "row": usize_str(*row) }),
        RelaxRowKind::McCormick { prod, which } => {
            json!({ "type": "mccormick", "prod": usize_str(*prod), "which": usize_str(*which as usize) })
        }
        RelaxRowKind::VarLower { var } => json!({ "type": "var-lower", "var": usize_str(*var) }),
        RelaxRowKind::VarUpper { var } => json!({ "type": "var-upper", "var": usize_str(*var) }),
    };
    json!({
        "kind": kind,
        "coeffs": Value::Array(r.coeffs.iter().map(|(v, c)| json!([usize_str(*v), rat_str(c)])).collect()),
        "rhs": rat_str(&r.rhs),
    })
}

fn relax_row_from_json(v: &Value) -> Result<RelaxRow, JsonError> {
    let o = as_obj(v, "relaxation row")?;
    let ko = as_obj(field(o, "kind")?, "row kind")?;
    let kind = match as_str(field(ko, "type")?, "type")? {
        "original" => RelaxRowKind::OriginalLower { row: parse_usize(field(ko, "row")?, "row")? },
        "mccormick" => RelaxRowKind::McCormick {
            prod: parse_usize(field(ko, "prod")?, "prod")?,
            which: parse_usize(field(ko, "which")?, "which")? as u8,
        },
        "var-lower" => RelaxRowKind::VarLower { var: parse_usize(field(ko, "var")?, "var")? },
        "var-upper" => RelaxRowKind::VarUpper { var: parse_usize(field(ko, "var")?, "var")? },
        t => return Err(schema(format!("unknown relaxation row type `{t}`"))),
    };
    let mut coeffs = Vec::new();
    for cv in as_arr(field(o, "coeffs")?, "coeffs")? {
        let pair = as_arr(cv, "coeff")?;
        if pair.len() != 2 {
            return Err(schema("coeff must be [var, value]"));
        }
        coeffs.push((parse_usize(&pair[0], "var")?, parse_rat_field(&pair[1], "value")?));
    }
    Ok(RelaxRow { kind, coeffs, rhs: parse_rat_field(field(o, "rhs")?, "rhs")? })
}

fn box_cert_to_json(c: &BoxCert) -> Value {
    match c {
        BoxCert::IntervalViolation { row, lower } => {
            json!({ "type": "interval", "row": usize_str(*row), "lower": rat_str(lower) })
        }
        BoxCert::RowCombination { lambda } => {
            json!({ "type": "row-combination", "lambda": rat_vec_json(lambda) })
        }
        BoxCert::FarkasRelaxation { products, rows, lambda } => json!({
            "type": "farkas-relaxation",
            "products": Value::Array(products.iter().map(|(i, j)| json!([usize_str(*i), usize_str(*j)])).collect()),
            "rows": Value::Array(rows.iter().map(relax_row_to_json).collect()),
            "lambda": rat_vec_json(lambda),
        }),
    }
}

fn box_cert_from_json(v: &Value) -> Result<BoxCert, JsonError> {
    let o = as_obj(v, "certificate")?;
    match as_str(field(o, "type")?, "type")? {
        "interval" => Ok(BoxCert::IntervalViolation {
            row: parse_usize(field(o, "row")?, "row")?,
            lower: parse_rat_field(field(o, "lower")?, "lower")?,
        }),
        "row-combination" => Ok(BoxCert::RowCombination {
            lambda: parse_rat_vec(field(o, "lambda")?, "lambda")?,
        }),
        "farkas-relaxation" => {
            let mut products = Vec::new();
            for pv in as_arr(field(o, "products")?, "products")? {
                let pair = as_arr(pv, "product")?;
                if pair.len() != 2 {
                    return Err(schema("product must be [i, j]"));
                }
                products.push((parse_usize(&pair[0], "i")?, parse_usize(&pair[1], "j")?));
            }
            let rows = as_arr(field(o, "rows")?, "rows")?
                .iter()
                .map(relax_row_from_json)
                .collect::<Result<_, _>>()?;
            Ok(BoxCert::FarkasRelaxation {
                products,
                rows,
                lambda: parse_rat_vec(field(o, "lambda")?, "lambda")?,
            })
        }
        t => Err(schema(format!("unknown certificate type `{t}`"))),
    }
}

pub fn refute_tree_to_json(t: &RefuteTree) -> Value {
    match t {
        RefuteTree::Leaf { boxes, cert } => json!({
            "type": "leaf",
            "boxes": boxes_to_json(boxes),
            "cert": box_cert_to_json(cert),
        }),
        RefuteTree::Split { var, at, below, above } => json!({
            "type": "split",
            "var": usize_str(*var),
            "at": rat_str(at),
            "below": refute_tree_to_json(below),
            "above": refute_tree_to_json(above),
        }),
    }
}

pub fn refute_tree_from_json(v: &Value) -> Result<RefuteTree, JsonError> {
    let o = as_obj(v, "refutation tree")?;
    match as_str(field(o, "type")?, "type")? {
        "leaf" => Ok(RefuteTree::Leaf {
            boxes: boxes_from_json(field(o, "boxes")?)?,
            cert: box_cert_from_json(field(o, "cert")?)?,
        }),
        "split" => Ok(RefuteTree::Split {
            var: parse_usize(field(o, "var")?, "var")?,
            at: parse_rat_field(field(o, "at")?, "at")?,
            below: Box::new(refute_tree_from_json(field(o, "below")?)?),
            above: Box::new(refute_tree_from_json(field(o, "above")?)?),
        }),
        t => Err(schema(format!("unknown tree node type `{t}`"))),
    }
}

pub fn unsat_node_to_json(n: &UnsatNode) -> Value {
    match n {
        UnsatNode::RealBlockInfeasible { farkas } => {
            json!({ "type": "real-block-infeasible", "farkas": rat_vec_json(farkas) })
        }
        UnsatNode::RealRelaxationInfeasible { refutation } => {
            json!({ "type": "real-relaxation-infeasible", "refutation": refute_tree_to_json(refutation) })
        }
        UnsatNode::BaseInfeasible { farkas } => {
            json!({ "type": "base-infeasible", "farkas": rat_vec_json(farkas) })
        }
        UnsatNode::Decomposed { pieces } => json!({
            "type": "decomposed",
            "pieces": Value::Array(pieces.iter().map(|(map, node)| json!({
                "map": affine_map_to_json(map),
                "node": unsat_node_to_json(node),
            })).collect()),
        }),
        UnsatNode::SplitRefuted { width_dirs, refutation, branch_bound, branches } => json!({
            "type": "split-refuted",
            "width_dirs": int_mat(width_dirs),
            "branch_bound": int_str(branch_bound),
            "refutation": refute_tree_to_json(refutation),
            "branches": Value::Array(branches.iter().map(|b| json!({
                "desc": match &b.desc {
                    BranchDesc::ZeroComponent { index } => json!({ "type": "zero", "index": usize_str(*index) }),
                    BranchDesc::Hyperplane { u, b } => json!({ "type": "hyperplane", "u": int_vec(u), "b": int_str(b) }),
                },
                "map": affine_map_to_json(&b.map),
                "node": unsat_node_to_json(&b.child),
            })).collect()),
        }),
    }
}

pub fn unsat_node_from_json(v: &Value) -> Result<UnsatNode, JsonError> {
    let o = as_obj(v, "unsat node")?;
    match as_str(field(o, "type")?, "type")? {
        "real-block-infeasible" => Ok(UnsatNode::RealBlockInfeasible {
            farkas: parse_rat_vec(field(o, "farkas")?, "farkas")?,
        }),
        "real-relaxation-infeasible" => Ok(UnsatNode::RealRelaxationInfeasible {
            refutation: refute_tree_from_json(field(o, "refutation")?)?,
        }),
        "base-infeasible" => Ok(UnsatNode::BaseInfeasible {
            farkas: parse_rat_vec(field(o, "farkas")?, "farkas")?,
        }),
        "decomposed" => {
            let mut pieces = Vec::new();
            for pv in as_arr(field(o, "pieces")?, "pieces")? {
                let po = as_obj(pv, "decomposed piece")?;
                pieces.push((
                    affine_map_from_json(field(po, "map")?)?,
                    Box::new(unsat_node_from_json(field(po, "node")?)?),
                ));
            }
            Ok(UnsatNode::Decomposed { pieces })
        }
        "split-refuted" => {
            let width_dirs = parse_int_mat(field(o, "width_dirs")?, "width_dirs")?;
            let branch_bound = parse_int_field(field(o, "branch_bound")?, "branch_bound")?;
            let refutation = refute_tree_from_json(field(o, "refutation")?)?;
            let mut branches = Vec::new();
            for bv in as_arr(field(o, "branches")?, "branches")? {
                let bo = as_obj(bv, "branch")?;
                let descv = as_obj(field(bo, "desc")?, "desc")?;
                let desc = match as_str(field(descv, "type")?, "type")? {
                    "zero" => BranchDesc::ZeroComponent {
                        index: parse_usize(field(descv, "index")?, "index")?,
                    },
                    "hyperplane" => BranchDesc::Hyperplane {
                        u: parse_int_vec(field(descv, "u")?, "u")?,
                        b: parse_int_field(field(descv, "b")?, "b")?,
                    },
                    t => return Err(schema(format!("unknown branch type `{t}`"))),
                };
                branches.push(SplitBranch {
                    desc,
                    map: affine_map_from_json(field(bo, "map")?)?,
                    child: unsat_node_from_json(field(bo, "node")?)?,
                });
            }
            Ok(UnsatNode::SplitRefuted { width_dirs, refutation, branch_bound, branches })
        }
        t => Err(schema(format!("unknown unsat node type `{t}`"))),
    }
}

pub fn ledger_to_json(l: &ConstantLedger) -> Value {
    let (u_json, u_count): (Value, Value) = match &l.u_set {
        crate::relax::DirectionSet::Materialized(us) => {
            (int_mat(us), usize_str(us.len()))
        }
        crate::relax::DirectionSet::TooLarge { norm_sq_below } => (
            json!({ "too_large": true, "norm_sq_below": rat_str(norm_sq_below) }),
            Value::Null,
        ),
    };
    json!({
        "m": usize_str(l.m),
        "h": int_str(&l.h),
        "kappa1_upper": rat_str(&l.kappa1_upper),
        "r": rat_str(&l.r),
        "omega_upper": rat_str(&l.omega_upper),
        "omega_hat": rat_str(&l.omega_hat),
        "u_count": u_count,
        "u_set": u_json,
        "kappa2": rat_str(&l.kappa2),
        "kappa3": rat_str(&l.kappa3),
        // symbolic magnitude note: the smallest witness bound has shape
        // 2^(kappa3^(c m^3 (m+n))) for an unspecified constant c; reported,
        // never used as an enumeration cap
        "magnitude_note": format!("2^(kappa3^(c*m^3*(m+n))) with kappa3 = {}", fmt_rat(&l.kappa3)),
    })
}

pub fn solve_report_to_json(
    eps: &Rat,
    verdict: &GapVerdict,
    nodes: u64,
    ledger: Option<&ConstantLedger>,
) -> Value {
    let mut o = Map::new();
    o.insert("kind".into(), json!("solve-report"));
    o.insert("epsilon".into(), rat_str(eps));
    o.insert("nodes".into(), Value::String(nodes.to_string()));
    match verdict {
        GapVerdict::Sat { assignment, margin } => {
            o.insert("verdict".into(), json!("sat"));
            o.insert(
                "witness".into(),
                json!({ "x": int_vec(&assignment.x), "y": rat_vec_json(&assignment.y) }),
            );
            o.insert("margin".into(), rat_str(margin));
        }
        GapVerdict::Unsat { tree } => {
            o.insert("verdict".into(), json!("unsat"));
            o.insert("unsat".into(), unsat_node_to_json(tree));
        }
        GapVerdict::Unknown { reason } => {
            o.insert("verdict".into(), json!("unknown"));
            o.insert("reason".into(), Value::String(reason.to_string()));
        }
    }
    if let Some(l) = ledger {
        o.insert("ledger".into(), ledger_to_json(l));
    }
    Value::Object(o)
}

/// Parsed solve report (the parts a verifier needs).
#[derive(Debug, Clone)]
pub struct SolveReportData {
    pub epsilon: Rat,
    pub verdict: String,
    pub witness: Option<Assignment>,
    pub margin: Option<Rat>,
    pub unsat: Option<UnsatNode>,
}

pub fn parse_solve_report(text: &str) -> Result<SolveReportData, JsonError> {
    let v: Value = serde_json::from_str(text).map_err(|e| JsonError::Syntax(e.to_string()))?;
    let o = as_obj(&v, "report")?;
    if as_str(field(o, "kind")?, "kind")? != "solve-report" {
        return Err(schema("not a solve report"));
    }
    let epsilon = parse_rat_field(field(o, "epsilon")?, "epsilon")?;
    let verdict = as_str(field(o, "verdict")?, "verdict")?.to_string();
    let witness = match o.get("witness") {
        Some(w) if !w.is_null() => {
            let wo = as_obj(w, "witness")?;
            Some(Assignment {
                x: parse_int_vec(field(wo, "x")?, "x")?,
                y: parse_rat_vec(field(wo, "y")?, "y")?,
            })
        }
        _ => None,
    };
    let margin = match o.get("margin") {
        Some(m) if !m.is_null() => Some(parse_rat_field(m, "margin")?),
        _ => None,
    };
    let unsat = match o.get("unsat") {
        Some(u) if !u.is_null() => Some(unsat_node_from_json(u)?),
        _ => None,
    };
    Ok(SolveReportData { epsilon, verdict, witness, margin, unsat })
}

pub fn dominate_report_to_json(
    gamma: &[Rat],
    eps: &Rat,
    outcome: &DominationOutcome,
    enumerate: Option<(u64, u64)>,
) -> Value {
    let mut o = Map::new();
    o.insert("kind".into(), json!("dominate-report"));
    o.insert("gamma".into(), rat_vec_json(gamma));
    o.insert("epsilon".into(), rat_str(eps));
    if let Some((steps, time)) = enumerate {
        o.insert(
            "enumerate".into(),
            json!([steps.to_string(), time.to_string()]),
        );
    }
    match outcome {
        DominationOutcome::Dominated { witness } => {
            o.insert("verdict".into(), json!("dominated"));
            o.insert(
                "witness".into(),
                json!({
                    "piece": usize_str(witness.piece),
                    "lambdas": rat_vec_json(&witness.lambdas),
                    "tuples": Value::Array(witness.tuples.iter().map(|t| int_vec(t)).collect()),
                    "combination": rat_vec_json(&witness.combination),
                    "margin": rat_str(&witness.margin),
                }),
            );
        }
        DominationOutcome::NotDominated => {
            o.insert("verdict".into(), json!("not-dominated"));
        }
        DominationOutcome::Unknown { reason } => {
            o.insert("verdict".into(), json!("unknown"));
            o.insert("reason".into(), Value::String(reason.to_string()));
        }
    }
    Value::Object(o)
}

#[derive(Debug, Clone)]
pub struct DominateReportData {
    pub gamma: Vec<Rat>,
    pub epsilon: Rat,
    pub verdict: String,
    pub enumerate: Option<(u64, u64)>,
    pub lambdas: Option<Vec<Rat>>,
    pub tuples: Option<Vec<Vec<Int>>>,
    pub combination: Option<Vec<Rat>>,
}

pub fn parse_dominate_report(text: &str) -> Result<DominateReportData, JsonError> {
    let v: Value = serde_json::from_str(text).map_err(|e| JsonError::Syntax(e.to_string()))?;
    let o = as_obj(&v, "report")?;
    if as_str(field(o, "kind")?, "kind")? != "dominate-report" {
        return Err(schema("not a dominate report"));
    }
    let gamma = parse_rat_vec(field(o, "gamma")?, "gamma")?;
    let epsilon = parse_rat_field(field(o, "epsilon")?, "epsilon")?;
    let verdict = as_str(field(o, "verdict")?, "verdict")?.to_string();
    let enumerate = match o.get("enumerate") {
        Some(e) if !e.is_null() => {
            let pair = as_arr(e, "enumerate")?;
            if pair.len() != 2 {
                return Err(schema("enumerate must be [steps, time]"));
            }
            Some((
                parse_usize(&pair[0], "steps")? as u64,
                parse_usize(&pair[1], "time")? as u64,
            ))
        }
        _ => None,
    };
    let (lambdas, tuples, combination) = match o.get("witness") {
        Some(w) if !w.is_null() => {
            let wo = as_obj(w, "witness")?;
            (
                Some(parse_rat_vec(field(wo, "lambdas")?, "lambdas")?),
                Some(parse_int_mat(field(wo, "tuples")?, "tuples")?),
                Some(parse_rat_vec(field(wo, "combination")?, "combination")?),
            )
        }
        _ => (None, None, None),
    };
    Ok(DominateReportData { gamma, epsilon, verdict, enumerate, lambdas, tuples, combination })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat, rat_int};

    fn iv(v: &[i64]) -> Vec<Int> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn mib_round_trip_is_byte_stable() {
        let s = MibSystem::new(
            1,
            1,
            vec![BilinearRow { a: vec![iv(&[2])], b: iv(&[0]), c: int(1) }],
            MibSystem::standard_int_block(1),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::Standard,
        )
        .unwrap();
        let text = canonical(&mib_to_json(&s));
        let Instance::Mib(parsed) = parse_instance(&text).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(parsed, s);
        assert_eq!(canonical(&mib_to_json(&parsed)), text);
    }

    #[test]
    fn mpta_round_trip_is_byte_stable() {
        let a = crate::mpta::alternating_example(false);
        let text = canonical(&mpta_to_json(&a));
        let Instance::Mpta(parsed) = parse_instance(&text).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(parsed, a);
        assert_eq!(canonical(&mpta_to_json(&parsed)), text);
    }

    #[test]
    fn numbers_must_be_strings() {
        let bad = r#"{"kind":"mib","form":"standard","m":1,"n":"1","bilinear":[],
                      "int_linear":{"rows":[],"rhs":[]},"real_linear":{"rows":[],"rhs":[]}}"#;
        assert!(parse_instance(bad).is_err());
    }

    #[test]
    fn solve_report_round_trip() {
        let verdict = GapVerdict::Sat {
            assignment: Assignment { x: iv(&[2, 5]), y: vec![rat_int(1), rat(7, 16), rat(1, 8)] },
            margin: rat(1, 16),
        };
        let text = canonical(&solve_report_to_json(&rat(1, 8), &verdict, 42, None));
        let data = parse_solve_report(&text).unwrap();
        assert_eq!(data.verdict, "sat");
        assert_eq!(data.epsilon, rat(1, 8));
        assert_eq!(data.witness.unwrap().x, iv(&[2, 5]));
        assert_eq!(data.margin.unwrap(), rat(1, 16));
    }
}
