//! Browser bindings. Queries use a compact text form:
//! `R(x,y) S(y,z) T(z,x); y -> x; x,z -> y`, relations first, then fds.

use std::collections::BTreeMap;

use fdjoin::bounds::{coloring_bound, edge_cover_bound, format_rational, polymatroid_bound, rational_to_f64, vertex_packing_bound, BoundReport, Certificate};
use fdjoin::entropy::Distribution;
use fdjoin::fd::iterative_width;
use fdjoin::synth::permutation::normalized_log_coset_count;
use fdjoin::synth::{coloring_sizes, Coloring, GroupConstructionSpec};
use fdjoin::{attr_set, AttrSet, Attribute, FunctionalDependency, Instance, Query, Rational, Row, Schema};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Parses the compact query form; every relation is joined.
pub fn parse_query(text: &str) -> Result<Instance, String> {
    let mut parts = text.split(';');
    let relations_text = parts.next().unwrap_or_default();
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut relations = BTreeMap::new();
    let mut rest = relations_text.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| format!("expected `(` in `{rest}`"))?;
        let close = rest.find(')').ok_or_else(|| format!("expected `)` in `{rest}`"))?;
        if close < open {
            return Err(format!("unbalanced parentheses in `{rest}`"));
        }
        let name = rest[..open].trim().trim_start_matches(',').trim().to_string();
        let mut attrs = AttrSet::new();
        for a in rest[open + 1..close].split(',').map(str::trim).filter(|a| !a.is_empty()) {
            let a = Attribute::new(a).map_err(|e| e.to_string())?;
            if !attributes.contains(&a) {
                attributes.push(a.clone());
            }
            attrs.insert(a);
        }
        if relations.insert(name.clone(), attrs).is_some() {
            return Err(format!("relation `{name}` appears twice"));
        }
        rest = rest[close + 1..].trim().trim_start_matches(',').trim();
    }
    if relations.is_empty() {
        return Err("no relations, e.g. `R(x,y) S(y,z)`".into());
    }
    let schema = Schema::new(attributes, relations).map_err(|e| e.to_string())?;
    let fds = parts
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(|f| f.parse::<FunctionalDependency>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let query = Query::all(&schema);
    Instance::new(schema, fds, query).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BoundLine {
    method: &'static str,
    value: String,
    decimal: f64,
}

fn line(b: BoundReport) -> BoundLine {
    BoundLine { method: b.method.name(), value: format_rational(&b.value), decimal: rational_to_f64(&b.value) }
}

/// AGM, packing, polymatroid and coloring bounds plus the iterative width, as JSON.
pub fn bounds_json(text: &str) -> Result<String, String> {
    let inst = parse_query(text)?;
    let (s, q, fds) = (&inst.schema, &inst.query, &inst.fds);
    let err = |e: fdjoin::Error| e.to_string();
    let lines = vec![
        line(edge_cover_bound(s, q).map_err(err)?),
        line(vertex_packing_bound(s, q).map_err(err)?),
        line(polymatroid_bound(s, fds, q, None).map_err(err)?),
        line(coloring_bound(s, fds, q).map_err(err)?),
    ];
    let (width, _) = iterative_width(&inst.effective_fds(), q.variables());
    Ok(json!({ "bounds": lines, "iterative_width": width }).to_string())
}

/// `(1/k)·log₂(k!/((k/2)!)²)` for the uniform distribution on two rows, per even `k`.
pub fn coset_curve_json(ks: &[u64]) -> Result<String, String> {
    let support = vec![Row::from_pairs([("x", "a")]), Row::from_pairs([("x", "b")])];
    let half = Rational::new(1.into(), 2.into());
    let d = Distribution::new(attr_set(["x"]), support, vec![half.clone(), half]).map_err(|e| e.to_string())?;
    let points = ks
        .iter()
        .map(|&k| {
            let spec = GroupConstructionSpec::new(d.clone(), k).map_err(|e| e.to_string())?;
            Ok(json!({ "k": k, "bits": normalized_log_coset_count(&spec, &attr_set(["x"])) }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(serde_json::Value::Array(points).to_string())
}

/// Closed-form table and join sizes of the coloring construction built from
/// the coloring-bound certificate over a value set of size `values`.
pub fn coloring_sizes_json(text: &str, values: usize) -> Result<String, String> {
    let inst = parse_query(text)?;
    let bound = coloring_bound(&inst.schema, &inst.fds, &inst.query).map_err(|e| e.to_string())?;
    let Certificate::ColorClasses(classes) = &bound.certificate else { unreachable!("coloring certificate") };
    let f = Coloring::from_classes(classes);
    let sizes = coloring_sizes(&inst.schema, &inst.query, &f, &inst.fds, values).map_err(|e| e.to_string())?;
    let colors: BTreeMap<&str, Vec<&str>> =
        f.assign.iter().map(|(x, cs)| (x.as_str(), cs.iter().map(String::as_str).collect())).collect();
    Ok(json!({
        "coloring_bound": format_rational(&bound.value),
        "colors": colors,
        "tables": sizes.tables.iter().map(|(r, n)| (r.clone(), n.to_string())).collect::<BTreeMap<_, _>>(),
        "join": sizes.join.to_string(),
        "predicted_alpha": sizes.predicted_alpha(&inst.query),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn bounds(text: &str) -> Result<String, JsValue> {
    bounds_json(text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn coset_curve(ks: Vec<u32>) -> Result<String, JsValue> {
    let ks: Vec<u64> = ks.into_iter().map(u64::from).collect();
    coset_curve_json(&ks).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn coloring_construction(text: &str, values: usize) -> Result<String, JsValue> {
    coloring_sizes_json(text, values).map_err(|e| JsValue::from_str(&e))
}
