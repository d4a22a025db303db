//! Schemas, functional dependencies, queries and set-semantics databases.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use ratlp::Rational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{PLACEHOLDER_CLOSE, PLACEHOLDER_OPEN, TUPLE_SEPARATOR};

pub type Value = String;
pub type AttrSet = BTreeSet<Attribute>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Attribute(String);

impl Attribute {
    /// Validated constructor: non-empty, no whitespace, no placeholder brackets.
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        validate_token("attribute", &name)?;
        Ok(Attribute(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The placeholder value standing in for this attribute in a quotient database.
    pub fn placeholder(&self) -> Value {
        format!("{PLACEHOLDER_OPEN}{}{PLACEHOLDER_CLOSE}", self.0)
    }
}

impl From<&str> for Attribute {
    fn from(s: &str) -> Self {
        Attribute(s.to_string())
    }
}

impl From<String> for Attribute {
    fn from(s: String) -> Self {
        Attribute(s)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn validate_token(kind: &'static str, token: &str) -> Result<()> {
    let reason = if token.is_empty() {
        Some("empty name")
    } else if token.chars().any(char::is_whitespace) {
        Some("contains whitespace")
    } else if token.contains([PLACEHOLDER_OPEN, PLACEHOLDER_CLOSE]) {
        Some("contains a reserved placeholder bracket")
    } else if token.contains(TUPLE_SEPARATOR) {
        Some("contains the reserved tuple separator")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(Error::InvalidToken { kind, token: token.to_string(), reason }),
        None => Ok(()),
    }
}

/// Rejects input values that collide with reserved encodings.
pub fn validate_input_value(value: &str, allow_tuples: bool) -> Result<()> {
    if value.contains([PLACEHOLDER_OPEN, PLACEHOLDER_CLOSE]) {
        return Err(Error::ForbiddenValue {
            value: value.to_string(),
            reason: "placeholder brackets are reserved",
        });
    }
    if !allow_tuples && value.contains(TUPLE_SEPARATOR) {
        return Err(Error::ForbiddenValue {
            value: value.to_string(),
            reason: "`|` is reserved for tuple values",
        });
    }
    Ok(())
}

/// Injective encoding of a tuple of values as a single value.
///
/// Components are joined with `|`; a literal `|` or `\` inside a component is
/// escaped with `\`, so distinct tuples never share an encoding.
pub fn encode_tuple<S: AsRef<str>>(parts: &[S]) -> Value {
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            out.push(TUPLE_SEPARATOR);
        }
        for ch in p.as_ref().chars() {
            if ch == TUPLE_SEPARATOR || ch == '\\' {
                out.push('\\');
            }
            out.push(ch);
        }
    }
    out
}

pub fn attr_set<I, S>(names: I) -> AttrSet
where
    I: IntoIterator<Item = S>,
    S: Into<Attribute>,
{
    names.into_iter().map(Into::into).collect()
}

/// Schema-wide functional dependency `lhs ↦ rhs`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FunctionalDependency {
    pub lhs: AttrSet,
    pub rhs: Attribute,
}

impl FunctionalDependency {
    pub fn new(lhs: AttrSet, rhs: Attribute) -> Self {
        FunctionalDependency { lhs, rhs }
    }

    /// `FunctionalDependency::of(&["x", "y"], "z")`
    pub fn of(lhs: &[&str], rhs: &str) -> Self {
        FunctionalDependency { lhs: attr_set(lhs.iter().copied()), rhs: rhs.into() }
    }

    pub fn attributes(&self) -> AttrSet {
        let mut s = self.lhs.clone();
        s.insert(self.rhs.clone());
        s
    }

    pub fn is_trivial(&self) -> bool {
        self.lhs.contains(&self.rhs)
    }
}

impl fmt::Display for FunctionalDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lhs.is_empty() {
            f.write_str("∅")?;
        } else {
            let names: Vec<&str> = self.lhs.iter().map(Attribute::as_str).collect();
            f.write_str(&names.join(","))?;
        }
        write!(f, " -> {}", self.rhs)
    }
}

impl FromStr for FunctionalDependency {
    type Err = Error;

    /// Parses `x,y -> z`; an empty left side (`-> z`) is allowed.
    fn from_str(s: &str) -> Result<Self> {
        let (lhs, rhs) = s
            .split_once("->")
            .ok_or_else(|| Error::Invalid(format!("functional dependency `{s}` lacks `->`")))?;
        let lhs = lhs
            .split([',', ' '])
            .map(str::trim)
            .filter(|t| !t.is_empty() && *t != "∅")
            .map(Attribute::new)
            .collect::<Result<AttrSet>>()?;
        Ok(FunctionalDependency { lhs, rhs: Attribute::new(rhs.trim())? })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<Attribute>,
    relations: BTreeMap<String, AttrSet>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>, relations: BTreeMap<String, AttrSet>) -> Result<Self> {
        let mut seen = AttrSet::new();
        for a in &attributes {
            validate_token("attribute", a.as_str())?;
            if !seen.insert(a.clone()) {
                return Err(Error::Duplicate { kind: "attribute", name: a.to_string() });
            }
        }
        if relations.is_empty() {
            return Err(Error::Invalid("a schema needs at least one relation".into()));
        }
        for (name, attrs) in &relations {
            validate_token("relation", name)?;
            if attrs.is_empty() {
                return Err(Error::Invalid(format!("relation `{name}` has no attributes")));
            }
            if let Some(a) = attrs.iter().find(|a| !seen.contains(*a)) {
                return Err(Error::UnknownAttribute(a.to_string()));
            }
        }
        Ok(Schema { attributes, relations })
    }

    /// Builds a schema from `(relation, attributes)` pairs; attributes are
    /// listed in first-appearance order.
    pub fn from_relations(relations: &[(&str, &[&str])]) -> Result<Self> {
        let mut attributes: Vec<Attribute> = Vec::new();
        let mut map = BTreeMap::new();
        for (name, attrs) in relations {
            for a in *attrs {
                let a = Attribute::from(*a);
                if !attributes.contains(&a) {
                    attributes.push(a);
                }
            }
            if map.insert(name.to_string(), attr_set(attrs.iter().copied())).is_some() {
                return Err(Error::Duplicate { kind: "relation", name: name.to_string() });
            }
        }
        Schema::new(attributes, map)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute_set(&self) -> AttrSet {
        self.attributes.iter().cloned().collect()
    }

    pub fn relations(&self) -> &BTreeMap<String, AttrSet> {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Result<&AttrSet> {
        self.relations.get(name).ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn has_attribute(&self, a: &Attribute) -> bool {
        self.attributes.contains(a)
    }

    pub fn check_fd(&self, fd: &FunctionalDependency) -> Result<()> {
        match fd.attributes().into_iter().find(|a| !self.has_attribute(a)) {
            Some(a) => Err(Error::UnknownAttribute(a.to_string())),
            None => Ok(()),
        }
    }
}

/// Natural join over `joins`, optionally projected onto `free`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    joins: BTreeSet<String>,
    vars: AttrSet,
    free: AttrSet,
}

impl Query {
    pub fn new(schema: &Schema, joins: BTreeSet<String>, free: Option<AttrSet>) -> Result<Self> {
        if joins.is_empty() {
            return Err(Error::Invalid("a query joins at least one relation".into()));
        }
        let mut vars = AttrSet::new();
        for r in &joins {
            vars.extend(schema.relation(r)?.iter().cloned());
        }
        let free = match free {
            Some(f) => {
                if let Some(a) = f.iter().find(|a| !vars.contains(*a)) {
                    return Err(Error::Invalid(format!(
                        "free variable `{a}` does not occur in any joined relation"
                    )));
                }
                f
            }
            None => vars.clone(),
        };
        Ok(Query { joins, vars, free })
    }

    /// Natural join query over every relation of the schema.
    pub fn all(schema: &Schema) -> Self {
        let joins = schema.relations().keys().cloned().collect();
        Query::new(schema, joins, None).expect("schema relations are valid joins")
    }

    pub fn joins(&self) -> &BTreeSet<String> {
        &self.joins
    }

    /// `V(Q)`: attributes of the joined relations.
    pub fn variables(&self) -> &AttrSet {
        &self.vars
    }

    pub fn free(&self) -> &AttrSet {
        &self.free
    }

    pub fn is_natural_join(&self) -> bool {
        self.free == self.vars
    }

    pub fn natural_join(&self) -> Query {
        Query { joins: self.joins.clone(), vars: self.vars.clone(), free: self.vars.clone() }
    }
}

/// Functional dependencies that actually constrain the join: those whose
/// attributes all lie inside at least one joined relation.
pub fn effective_fds(schema: &Schema, fds: &[FunctionalDependency], q: &Query) -> Vec<FunctionalDependency> {
    let mut out: Vec<FunctionalDependency> = fds
        .iter()
        .filter(|fd| {
            let attrs = fd.attributes();
            q.joins().iter().any(|r| schema.relations()[r].is_superset(&attrs))
        })
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    out
}

/// A row as an attribute → value map.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Row(BTreeMap<Attribute, Value>);

impl Row {
    pub fn new() -> Self {
        Row(BTreeMap::new())
    }

    pub fn from_pairs<I, A, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, V)>,
        A: Into<Attribute>,
        V: Into<Value>,
    {
        Row(pairs.into_iter().map(|(a, v)| (a.into(), v.into())).collect())
    }

    pub fn get(&self, a: &Attribute) -> Option<&Value> {
        self.0.get(a)
    }

    pub fn insert(&mut self, a: Attribute, v: Value) -> Option<Value> {
        self.0.insert(a, v)
    }

    pub fn attributes(&self) -> AttrSet {
        self.0.keys().cloned().collect()
    }

    pub fn bindings(&self) -> &BTreeMap<Attribute, Value> {
        &self.0
    }

    pub fn restrict(&self, attrs: &AttrSet) -> Row {
        Row(self.0.iter().filter(|(a, _)| attrs.contains(*a)).map(|(a, v)| (a.clone(), v.clone())).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Set of rows over a fixed, sorted attribute list. Rows are stored as
/// value tuples aligned with [`Table::attributes`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    attributes: Vec<Attribute>,
    rows: BTreeSet<Vec<Value>>,
}

impl Table {
    pub fn new(attributes: AttrSet) -> Self {
        Table { attributes: attributes.into_iter().collect(), rows: BTreeSet::new() }
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute_set(&self) -> AttrSet {
        self.attributes.iter().cloned().collect()
    }

    pub fn position(&self, a: &Attribute) -> Option<usize> {
        self.attributes.binary_search(a).ok()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Inserts a tuple aligned with `attributes()`; returns false on a duplicate.
    pub fn insert_tuple(&mut self, values: Vec<Value>) -> Result<bool> {
        if values.len() != self.attributes.len() {
            return Err(Error::ArityMismatch {
                relation: "table".into(),
                expected: self.attributes.len(),
                found: values.len(),
            });
        }
        Ok(self.rows.insert(values))
    }

    pub fn insert_row(&mut self, row: &Row) -> Result<bool> {
        let tuple = self.tuple_of(row)?;
        Ok(self.rows.insert(tuple))
    }

    fn tuple_of(&self, row: &Row) -> Result<Vec<Value>> {
        if row.len() != self.attributes.len() {
            return Err(Error::ArityMismatch {
                relation: "table".into(),
                expected: self.attributes.len(),
                found: row.len(),
            });
        }
        self.attributes
            .iter()
            .map(|a| row.get(a).cloned().ok_or_else(|| Error::UnknownAttribute(a.to_string())))
            .collect()
    }

    pub fn contains_row(&self, row: &Row) -> bool {
        self.tuple_of(row).map(|t| self.rows.contains(&t)).unwrap_or(false)
    }

    pub fn contains_tuple(&self, tuple: &[Value]) -> bool {
        self.rows.contains(tuple)
    }

    pub fn tuples(&self) -> impl Iterator<Item = &Vec<Value>> {
        self.rows.iter()
    }

    pub fn rows(&self) -> impl Iterator<Item = Row> + '_ {
        self.rows
            .iter()
            .map(|t| Row(self.attributes.iter().cloned().zip(t.iter().cloned()).collect()))
    }

    /// Deduplicated projection onto `attrs ∩ attributes()`.
    pub fn project(&self, attrs: &AttrSet) -> Table {
        let keep: Vec<usize> = (0..self.attributes.len()).filter(|&i| attrs.contains(&self.attributes[i])).collect();
        let mut out = Table::new(keep.iter().map(|&i| self.attributes[i].clone()).collect());
        for t in &self.rows {
            out.rows.insert(keep.iter().map(|&i| t[i].clone()).collect());
        }
        out
    }

    pub fn column(&self, a: &Attribute) -> BTreeSet<&Value> {
        match self.position(a) {
            Some(i) => self.rows.iter().map(|t| &t[i]).collect(),
            None => BTreeSet::new(),
        }
    }

    pub(crate) fn from_parts(attributes: Vec<Attribute>, rows: BTreeSet<Vec<Value>>) -> Table {
        debug_assert!(attributes.windows(2).all(|w| w[0] < w[1]));
        Table { attributes, rows }
    }
}

/// One table per schema relation (possibly empty).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    tables: BTreeMap<String, Table>,
}

impl Database {
    pub fn empty(schema: &Schema) -> Self {
        Database {
            tables: schema
                .relations()
                .iter()
                .map(|(n, attrs)| (n.clone(), Table::new(attrs.clone())))
                .collect(),
        }
    }

    pub fn tables(&self) -> &BTreeMap<String, Table> {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Result<&Table> {
        self.tables.get(name).ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn table_mut(&mut self, name: &str) -> Result<&mut Table> {
        self.tables.get_mut(name).ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    /// Replaces a table; its attributes must match the existing one.
    pub fn set_table(&mut self, name: &str, table: Table) -> Result<()> {
        let slot = self.table_mut(name)?;
        if slot.attributes != table.attributes {
            return Err(Error::Invalid(format!("table for `{name}` has the wrong attributes")));
        }
        *slot = table;
        Ok(())
    }

    pub fn insert(&mut self, relation: &str, row: &Row) -> Result<bool> {
        self.table_mut(relation)?.insert_row(row).map_err(|e| match e {
            Error::ArityMismatch { expected, found, .. } => {
                Error::ArityMismatch { relation: relation.to_string(), expected, found }
            }
            other => other,
        })
    }

    /// `|D|` restricted to the joined relations: the largest table size.
    pub fn max_size(&self, q: &Query) -> usize {
        q.joins().iter().filter_map(|r| self.tables.get(r)).map(Table::len).max().unwrap_or(0)
    }

    pub fn map_tables(&self, mut f: impl FnMut(&str, &Table) -> Table) -> Database {
        Database { tables: self.tables.iter().map(|(n, t)| (n.clone(), f(n, t))).collect() }
    }
}

/// True iff, in every relation containing `lhs ∪ {rhs}`, rows agreeing on
/// `lhs` agree on `rhs`. Relations lacking any of those attributes impose nothing.
pub fn check_fd(db: &Database, fd: &FunctionalDependency) -> bool {
    first_fd_violation(db, fd).is_none()
}

/// Name of the first relation violating `fd`, if any.
pub fn first_fd_violation(db: &Database, fd: &FunctionalDependency) -> Option<String> {
    let attrs = fd.attributes();
    for (name, table) in db.tables() {
        if !table.attribute_set().is_superset(&attrs) {
            continue;
        }
        let lhs: Vec<usize> = fd.lhs.iter().map(|a| table.position(a).unwrap()).collect();
        let rhs = table.position(&fd.rhs).unwrap();
        let mut seen: HashMap<Vec<&Value>, &Value> = HashMap::new();
        for t in table.tuples() {
            let key: Vec<&Value> = lhs.iter().map(|&i| &t[i]).collect();
            if let Some(prev) = seen.insert(key, &t[rhs]) {
                if prev != &t[rhs] {
                    return Some(name.clone());
                }
            }
        }
    }
    None
}

/// `D^n`: rows are n-tuples of rows, values n-tuples of values.
pub fn power_database(db: &Database, n: usize, row_limit: u64) -> Result<Database> {
    if n == 0 {
        return Err(Error::Invalid("power exponent must be at least 1".into()));
    }
    for (name, t) in db.tables() {
        let rows = BigUint::from(t.len()).pow(n as u32);
        if rows.to_u64().is_none_or(|r| r > row_limit) {
            return Err(Error::RowLimit { what: format!("power table `{name}`"), rows: rows.to_string(), limit: row_limit });
        }
    }
    Ok(db.map_tables(|_, t| {
        let base: Vec<&Vec<Value>> = t.tuples().collect();
        let width = t.attributes().len();
        let mut rows = BTreeSet::new();
        if !base.is_empty() {
            let mut idx = vec![0usize; n];
            loop {
                let tuple: Vec<Value> = (0..width)
                    .map(|c| {
                        let parts: Vec<&str> = idx.iter().map(|&i| base[i][c].as_str()).collect();
                        encode_tuple(&parts)
                    })
                    .collect();
                rows.insert(tuple);
                // odometer increment
                let mut k = n;
                loop {
                    if k == 0 {
                        return Table::from_parts(t.attributes().to_vec(), rows);
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < base.len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        Table::from_parts(t.attributes().to_vec(), rows)
    }))
}

/// Schema, fds, query and optional log-scale size budgets.
#[derive(Clone, Debug)]
pub struct Instance {
    pub schema: Schema,
    pub fds: Vec<FunctionalDependency>,
    pub query: Query,
    pub budgets: Option<BTreeMap<String, Rational>>,
}

impl Instance {
    pub fn new(schema: Schema, fds: Vec<FunctionalDependency>, query: Query) -> Result<Self> {
        for fd in &fds {
            schema.check_fd(fd)?;
        }
        Ok(Instance { schema, fds, query, budgets: None })
    }

    pub fn effective_fds(&self) -> Vec<FunctionalDependency> {
        effective_fds(&self.schema, &self.fds, &self.query)
    }
}
