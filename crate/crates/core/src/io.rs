//! TOML formats for instances, databases and construction parameters.
//!
//! Instance:
//!
//! ```toml
//! attributes = ["x", "y", "z"]
//!
//! [relations]
//! R = ["x", "y"]
//! S = ["y", "z"]
//!
//! [[fds]]
//! lhs = ["y"]
//! rhs = "x"
//! relation = "R"      # optional; fds are schema-wide
//!
//! [query]             # optional; defaults to joining every relation
//! joins = ["R", "S"]
//! free = ["x", "z"]   # optional; defaults to every joined attribute
//!
//! [budgets]           # optional log-scale size budgets
//! R = "1/2"
//! ```
//!
//! Database:
//!
//! ```toml
//! tuple_values = false   # true admits `|`-encoded tuple values
//!
//! [tables.R]
//! attributes = ["x", "y"]
//! rows = [["a", "1"], ["b", "2"]]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::Path;

use ratlp::{parse_rational, Rational};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::relational::{
    validate_input_value, validate_token, AttrSet, Attribute, Database, FunctionalDependency, Instance, Query, Schema,
    Table, Value,
};

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

fn at<T>(text: &str, span: Range<usize>, e: Error) -> Result<T> {
    Err(Error::Parse { line: line_of(text, span), message: e.to_string() })
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    Error::Parse { line: e.span().map(|s| line_of(text, s)).unwrap_or(0), message: e.message().trim().to_string() }
}

type Token = Spanned<String>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    attributes: Vec<Token>,
    relations: BTreeMap<String, Spanned<Vec<Token>>>,
    #[serde(default)]
    fds: Vec<Spanned<FdEntry>>,
    query: Option<QueryEntry>,
    budgets: Option<BTreeMap<String, Spanned<String>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FdEntry {
    #[serde(default)]
    lhs: Vec<Token>,
    rhs: Token,
    relation: Option<Token>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryEntry {
    joins: Spanned<Vec<Token>>,
    free: Option<Spanned<Vec<Token>>>,
}

fn attribute(text: &str, known: &AttrSet, t: &Token) -> Result<Attribute> {
    let a = Attribute::new(t.get_ref().clone()).or_else(|e| at(text, t.span(), e))?;
    if !known.contains(&a) {
        return at(text, t.span(), Error::UnknownAttribute(a.to_string()));
    }
    Ok(a)
}

pub fn parse_instance_str(text: &str) -> Result<Instance> {
    let file: InstanceFile = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let mut attributes = Vec::new();
    let mut known = AttrSet::new();
    for t in &file.attributes {
        let a = Attribute::new(t.get_ref().clone()).or_else(|e| at(text, t.span(), e))?;
        if !known.insert(a.clone()) {
            return at(text, t.span(), Error::Duplicate { kind: "attribute", name: a.to_string() });
        }
        attributes.push(a);
    }
    let mut relations = BTreeMap::new();
    for (name, attrs) in &file.relations {
        validate_token("relation", name).or_else(|e| at(text, attrs.span(), e))?;
        let mut set = AttrSet::new();
        for t in attrs.get_ref() {
            let a = attribute(text, &known, t)?;
            if !set.insert(a.clone()) {
                return at(text, t.span(), Error::Duplicate { kind: "attribute in relation", name: a.to_string() });
            }
        }
        relations.insert(name.clone(), set);
    }
    let schema = Schema::new(attributes, relations).map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;

    let mut fds = Vec::new();
    for entry in &file.fds {
        let f = entry.get_ref();
        let lhs = f.lhs.iter().map(|t| attribute(text, &known, t)).collect::<Result<AttrSet>>()?;
        let fd = FunctionalDependency::new(lhs, attribute(text, &known, &f.rhs)?);
        if let Some(r) = &f.relation {
            let attrs = match schema.relations().get(r.get_ref()) {
                Some(a) => a,
                None => return at(text, r.span(), Error::UnknownRelation(r.get_ref().clone())),
            };
            if !attrs.is_superset(&fd.attributes()) {
                return at(text, entry.span(), Error::Invalid(format!("{fd} is not over the attributes of `{}`", r.get_ref())));
            }
        }
        fds.push(fd);
    }

    let query = match &file.query {
        None => Query::all(&schema),
        Some(q) => {
            let mut joins = BTreeSet::new();
            for t in q.joins.get_ref() {
                if !schema.relations().contains_key(t.get_ref()) {
                    return at(text, t.span(), Error::UnknownRelation(t.get_ref().clone()));
                }
                if !joins.insert(t.get_ref().clone()) {
                    return at(text, t.span(), Error::Duplicate { kind: "joined relation", name: t.get_ref().clone() });
                }
            }
            let free = match &q.free {
                None => None,
                Some(f) => Some(f.get_ref().iter().map(|t| attribute(text, &known, t)).collect::<Result<AttrSet>>()?),
            };
            let span = q.free.as_ref().map(Spanned::span).unwrap_or_else(|| q.joins.span());
            Query::new(&schema, joins, free).or_else(|e| at(text, span, e))?
        }
    };

    let budgets = match &file.budgets {
        None => None,
        Some(b) => {
            let mut out = BTreeMap::new();
            for (r, v) in b {
                if !schema.relations().contains_key(r) {
                    return at(text, v.span(), Error::UnknownRelation(r.clone()));
                }
                let value: Rational = parse_rational(v.get_ref()).map_err(|e| Error::Parse { line: line_of(text, v.span()), message: e.to_string() })?;
                if value < Rational::from_integer(0.into()) {
                    return at(text, v.span(), Error::Invalid(format!("budget for `{r}` is negative")));
                }
                out.insert(r.clone(), value);
            }
            Some(out)
        }
    };

    let mut instance = Instance::new(schema, fds, query)?;
    instance.budgets = budgets;
    Ok(instance)
}

pub fn parse_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance_str(&std::fs::read_to_string(path)?)
}

/// Instance in the format read by [`parse_instance_str`].
pub fn serialize_instance(inst: &Instance) -> String {
    let mut doc = toml::Table::new();
    let strs = |it: &mut dyn Iterator<Item = String>| toml::Value::Array(it.map(toml::Value::String).collect());
    doc.insert("attributes".into(), strs(&mut inst.schema.attributes().iter().map(Attribute::to_string)));
    let mut rel = toml::Table::new();
    for (r, attrs) in inst.schema.relations() {
        rel.insert(r.clone(), strs(&mut attrs.iter().map(Attribute::to_string)));
    }
    doc.insert("relations".into(), toml::Value::Table(rel));
    let fds: Vec<toml::Value> = inst
        .fds
        .iter()
        .map(|fd| {
            let mut t = toml::Table::new();
            t.insert("lhs".into(), strs(&mut fd.lhs.iter().map(Attribute::to_string)));
            t.insert("rhs".into(), toml::Value::String(fd.rhs.to_string()));
            toml::Value::Table(t)
        })
        .collect();
    if !fds.is_empty() {
        doc.insert("fds".into(), toml::Value::Array(fds));
    }
    let mut q = toml::Table::new();
    q.insert("joins".into(), strs(&mut inst.query.joins().iter().cloned()));
    if !inst.query.is_natural_join() {
        q.insert("free".into(), strs(&mut inst.query.free().iter().map(Attribute::to_string)));
    }
    doc.insert("query".into(), toml::Value::Table(q));
    if let Some(b) = &inst.budgets {
        let t = b.iter().map(|(r, v)| (r.clone(), toml::Value::String(crate::bounds::format_rational(v)))).collect();
        doc.insert("budgets".into(), toml::Value::Table(t));
    }
    toml::to_string(&doc).expect("instance serializes")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Str(String),
    Int(i64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatabaseFile {
    #[serde(default)]
    tuple_values: bool,
    #[serde(default)]
    tables: BTreeMap<String, Spanned<TableEntry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    attributes: Vec<Token>,
    #[serde(default)]
    rows: Vec<Spanned<Vec<Scalar>>>,
}

#[derive(Clone, Debug)]
pub struct ParsedDatabase {
    pub db: Database,
    pub warnings: Vec<String>,
}

/// Parses a database against `schema`. Relations missing from the file are
/// empty; duplicate rows are dropped with a warning.
pub fn parse_database_str(text: &str, schema: &Schema) -> Result<ParsedDatabase> {
    let file: DatabaseFile = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let mut db = Database::empty(schema);
    let mut warnings = Vec::new();
    for (name, entry) in &file.tables {
        let Some(expected) = schema.relations().get(name) else {
            return at(text, entry.span(), Error::UnknownRelation(name.clone()));
        };
        let t = entry.get_ref();
        let mut columns = Vec::new();
        for a in &t.attributes {
            let attr = Attribute::new(a.get_ref().clone()).or_else(|e| at(text, a.span(), e))?;
            if !expected.contains(&attr) || columns.contains(&attr) {
                return at(text, a.span(), Error::Invalid(format!("attribute `{attr}` does not belong to `{name}` or repeats")));
            }
            columns.push(attr);
        }
        if columns.len() != expected.len() {
            return at(text, entry.span(), Error::ArityMismatch { relation: name.clone(), expected: expected.len(), found: columns.len() });
        }
        // file column order → sorted table order
        let mut order: Vec<usize> = (0..columns.len()).collect();
        order.sort_by(|&a, &b| columns[a].cmp(&columns[b]));
        let mut table = Table::new(expected.clone());
        for row in &t.rows {
            let values = row.get_ref();
            if values.len() != columns.len() {
                return at(text, row.span(), Error::ArityMismatch { relation: name.clone(), expected: columns.len(), found: values.len() });
            }
            let values: Vec<Value> = values
                .iter()
                .map(|s| match s {
                    Scalar::Str(s) => s.clone(),
                    Scalar::Int(i) => i.to_string(),
                })
                .collect();
            for v in &values {
                validate_input_value(v, file.tuple_values).or_else(|e| at(text, row.span(), e))?;
            }
            let tuple = order.iter().map(|&i| values[i].clone()).collect();
            if !table.insert_tuple(tuple)? {
                warnings.push(format!("line {}: duplicate row in `{name}` ignored", line_of(text, row.span())));
            }
        }
        db.set_table(name, table)?;
    }
    Ok(ParsedDatabase { db, warnings })
}

pub fn parse_database(path: impl AsRef<Path>, schema: &Schema) -> Result<ParsedDatabase> {
    parse_database_str(&std::fs::read_to_string(path)?, schema)
}

#[derive(Serialize)]
struct DatabaseOut<'a> {
    tuple_values: bool,
    tables: BTreeMap<&'a str, TableOut<'a>>,
}

#[derive(Serialize)]
struct TableOut<'a> {
    attributes: Vec<&'a str>,
    rows: Vec<&'a Vec<Value>>,
}

/// Database in the format read by [`parse_database_str`].
pub fn serialize_database(db: &Database) -> String {
    let tuple_values = db.tables().values().flat_map(|t| t.tuples()).flatten().any(|v| v.contains(crate::limits::TUPLE_SEPARATOR));
    let tables = db
        .tables()
        .iter()
        .map(|(r, t)| (r.as_str(), TableOut { attributes: t.attributes().iter().map(Attribute::as_str).collect(), rows: t.tuples().collect() }))
        .collect();
    toml::to_string(&DatabaseOut { tuple_values, tables }).expect("database serializes")
}

/// Construction parameters; each section is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    pub product: Option<ProductParams>,
    pub coloring: Option<ColoringParams>,
    pub vspace: Option<VspaceParams>,
    pub permutation: Option<PermutationParams>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductParams {
    #[serde(rename = "N")]
    pub n: u64,
    /// `p_x` as "p/q"; defaults to an optimal fractional vertex packing.
    pub packing: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColoringParams {
    /// `|N|`.
    pub values: usize,
    /// Color tokens per attribute; defaults to the coloring LP certificate.
    pub colors: Option<BTreeMap<String, Vec<String>>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceKind {
    /// fds read as `V_x ⊇ ∩ V_Y`; used as given.
    #[default]
    Intersection,
    /// fds read as `V_x ⊆ Σ V_Y`; dualized before building the database.
    Sum,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VspaceParams {
    pub prime: u32,
    pub dim: usize,
    #[serde(default)]
    pub kind: SubspaceKind,
    pub subspaces: BTreeMap<String, Vec<Vec<u32>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermutationParams {
    pub k: u64,
    pub base: Vec<BaseRow>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseRow {
    pub prob: String,
    pub row: BTreeMap<String, String>,
}

pub fn parse_params_str(text: &str) -> Result<SynthParams> {
    toml::from_str(text).map_err(|e| toml_error(text, e))
}

pub fn parse_params(path: impl AsRef<Path>) -> Result<SynthParams> {
    parse_params_str(&std::fs::read_to_string(path)?)
}
