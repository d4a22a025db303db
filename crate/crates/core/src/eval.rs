//! Join evaluation: a backtracking baseline and the component-wise algorithm
//! that quotients minimal components away and re-extends them through
//! functional dependencies.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::decompose;
use crate::relational::{effective_fds, AttrSet, Attribute, Database, FunctionalDependency, Query, Row, Schema, Table, Value};

/// Natural join over `V(Q)`: relations in ascending size order, each probed
/// through a hash index on the attributes bound by earlier relations.
pub fn join_baseline(schema: &Schema, q: &Query, db: &Database) -> Result<Table> {
    let vars: Vec<Attribute> = q.variables().iter().cloned().collect();
    let pos = |a: &Attribute| vars.binary_search(a).unwrap();
    let mut order: Vec<(&String, &Table)> = q.joins().iter().map(|r| db.table(r).map(|t| (r, t))).collect::<Result<_>>()?;
    order.sort_by_key(|(r, t)| (t.len(), *r));

    struct Step<'a> {
        /// (column in table, slot in assignment) for already-bound attributes
        shared: Vec<(usize, usize)>,
        /// same for attributes this relation binds first
        fresh: Vec<(usize, usize)>,
        index: HashMap<Vec<&'a Value>, Vec<&'a Vec<Value>>>,
    }
    let mut bound = vec![false; vars.len()];
    let mut steps = Vec::with_capacity(order.len());
    for (r, t) in &order {
        if t.attribute_set() != schema.relations()[*r] {
            return Err(Error::Invalid(format!("table `{r}` does not match its schema")));
        }
        let (mut shared, mut fresh) = (Vec::new(), Vec::new());
        for (col, a) in t.attributes().iter().enumerate() {
            let slot = pos(a);
            if bound[slot] { shared.push((col, slot)) } else { fresh.push((col, slot)) }
        }
        for &(_, slot) in &fresh {
            bound[slot] = true;
        }
        let mut index: HashMap<Vec<&Value>, Vec<&Vec<Value>>> = HashMap::new();
        for tuple in t.tuples() {
            index.entry(shared.iter().map(|&(c, _)| &tuple[c]).collect()).or_default().push(tuple);
        }
        steps.push(Step { shared, fresh, index });
    }

    fn dfs<'a>(steps: &[Step<'a>], i: usize, assign: &mut Vec<Option<&'a Value>>, out: &mut BTreeSet<Vec<Value>>) {
        if i == steps.len() {
            out.insert(assign.iter().map(|v| v.unwrap().clone()).collect());
            return;
        }
        let step = &steps[i];
        let key: Vec<&Value> = step.shared.iter().map(|&(_, s)| assign[s].unwrap()).collect();
        let Some(matches) = step.index.get(&key) else { return };
        for tuple in matches {
            for &(c, s) in &step.fresh {
                assign[s] = Some(&tuple[c]);
            }
            dfs(steps, i + 1, assign, out);
        }
        for &(_, s) in &step.fresh {
            assign[s] = None;
        }
    }

    let mut rows = BTreeSet::new();
    dfs(&steps, 0, &mut vec![None; vars.len()], &mut rows);
    Ok(Table::from_parts(vars, rows))
}

/// `V_x`: values of `x` common to every joined relation that contains `x`.
pub fn candidate_values(schema: &Schema, q: &Query, db: &Database, x: &Attribute) -> Result<BTreeSet<Value>> {
    let mut acc: Option<BTreeSet<Value>> = None;
    for r in q.joins().iter().filter(|r| schema.relations()[*r].contains(x)) {
        let col: BTreeSet<Value> = db.table(r)?.column(x).into_iter().cloned().collect();
        acc = Some(match acc {
            None => col,
            Some(a) => a.intersection(&col).cloned().collect(),
        });
    }
    acc.ok_or_else(|| Error::Invalid(format!("attribute `{x}` occurs in no joined relation")))
}

/// `D/C`: every value of an attribute in `c` becomes the placeholder `⟨x⟩`.
pub fn quotient_database(db: &Database, c: &AttrSet) -> Database {
    db.map_tables(|_, t| {
        let mask: Vec<Option<Value>> = t.attributes().iter().map(|a| c.contains(a).then(|| a.placeholder())).collect();
        if mask.iter().all(Option::is_none) {
            return t.clone();
        }
        let rows = t
            .tuples()
            .map(|tuple| tuple.iter().zip(&mask).map(|(v, m)| m.clone().unwrap_or_else(|| v.clone())).collect())
            .collect();
        Table::from_parts(t.attributes().to_vec(), rows)
    })
}

/// Lookup tables `lhs values → rhs value`, one per fd, each read from the
/// smallest joined relation containing the fd's attributes.
#[derive(Clone, Debug)]
pub struct FdIndex {
    entries: Vec<(FunctionalDependency, String, HashMap<Vec<Value>, Value>)>,
}

impl FdIndex {
    pub fn build(schema: &Schema, q: &Query, db: &Database, fds: &[FunctionalDependency]) -> Result<Self> {
        let mut entries = Vec::with_capacity(fds.len());
        for fd in fds {
            let attrs = fd.attributes();
            let relation = q
                .joins()
                .iter()
                .filter(|r| schema.relations()[*r].is_superset(&attrs))
                .map(|r| db.table(r).map(|t| (t.len(), r)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .min()
                .map(|(_, r)| r.clone())
                .ok_or_else(|| Error::Invalid(format!("no joined relation contains the attributes of {fd}")))?;
            let t = db.table(&relation)?;
            let lhs: Vec<usize> = fd.lhs.iter().map(|a| t.position(a).unwrap()).collect();
            let rhs = t.position(&fd.rhs).unwrap();
            let mut map = HashMap::new();
            for tuple in t.tuples() {
                let key: Vec<Value> = lhs.iter().map(|&i| tuple[i].clone()).collect();
                if let Some(prev) = map.insert(key, tuple[rhs].clone()) {
                    if prev != tuple[rhs] {
                        return Err(Error::FdViolation { fd: fd.to_string(), location: format!("relation `{relation}`") });
                    }
                }
            }
            entries.push((fd.clone(), relation, map));
        }
        Ok(FdIndex { entries })
    }

    pub fn fds(&self) -> impl Iterator<Item = &FunctionalDependency> {
        self.entries.iter().map(|e| &e.0)
    }

    /// The unique rhs value for an fd given its lhs values, if any row has them.
    pub fn lookup(&self, fd_index: usize, lhs_values: &[Value]) -> Option<&Value> {
        self.entries[fd_index].2.get(lhs_values)
    }
}

/// Chases `s` (valued off `c`) together with `assignment` (valued on a
/// spanning set `S ⊆ c`) through the indexed fds until `c` is valued, then
/// keeps the row only if every joined relation contains its restriction.
pub fn extend_component(
    schema: &Schema,
    q: &Query,
    db: &Database,
    index: &FdIndex,
    c: &AttrSet,
    s: &Row,
    assignment: &Row,
) -> Option<Row> {
    let mut t = s.clone();
    for (a, v) in assignment.bindings() {
        t.insert(a.clone(), v.clone());
    }
    let mut missing: AttrSet = c.iter().filter(|a| !assignment.bindings().contains_key(*a)).cloned().collect();
    while !missing.is_empty() {
        let mut progressed = false;
        for (i, fd) in index.fds().enumerate() {
            if !missing.contains(&fd.rhs) {
                continue;
            }
            let lhs: Option<Vec<Value>> = fd
                .lhs
                .iter()
                .map(|a| if missing.contains(a) { None } else { t.get(a).cloned() })
                .collect();
            let Some(lhs) = lhs else { continue };
            let v = index.lookup(i, &lhs)?;
            t.insert(fd.rhs.clone(), v.clone());
            missing.remove(&fd.rhs);
            progressed = true;
        }
        if !progressed {
            return None;
        }
    }
    for r in q.joins() {
        let table = db.table(r).ok()?;
        if !table.contains_row(&t.restrict(&schema.relations()[r])) {
            return None;
        }
    }
    Some(t)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExtensionStep {
    pub component: Vec<String>,
    pub spanning_set: Vec<String>,
    /// Partial results entering the step.
    pub input_rows: usize,
    /// `|K|`: product of candidate-value counts over the spanning set.
    pub candidates: usize,
    /// `input_rows · candidates` extension attempts.
    pub attempts: usize,
    pub output_rows: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    pub iterative_width: usize,
    pub steps: Vec<ExtensionStep>,
}

impl EvalStats {
    pub fn total_attempts(&self) -> usize {
        self.steps.iter().map(|s| s.attempts).sum()
    }
}

fn names(s: &AttrSet) -> Vec<String> {
    s.iter().map(Attribute::to_string).collect()
}

/// All rows over `s` drawn from the candidate sets.
fn candidate_rows(schema: &Schema, q: &Query, db: &Database, s: &AttrSet) -> Result<Vec<Row>> {
    let mut rows = vec![Row::new()];
    for x in s {
        let values = candidate_values(schema, q, db, x)?;
        rows = rows
            .into_iter()
            .flat_map(|r| {
                values.iter().map(move |v| {
                    let mut r = r.clone();
                    r.insert(x.clone(), v.clone());
                    r
                })
            })
            .collect();
    }
    Ok(rows)
}

/// Component-wise evaluation of the natural join.
///
/// Components are peeled layer by layer (one quotient per component), the
/// all-placeholder row seeds the recursion, and components are re-valued in
/// reverse order from the candidate values of their spanning sets.
pub fn join_components(schema: &Schema, fds: &[FunctionalDependency], q: &Query, db: &Database) -> Result<(Table, EvalStats)> {
    let fds = effective_fds(schema, fds, q);
    let decomposition = decompose(&fds, q.variables());
    let mut plan: Vec<(AttrSet, AttrSet, Vec<FunctionalDependency>)> = Vec::new();
    for layer in &decomposition.layers {
        for (c, s) in layer.components.iter().zip(&layer.spanning_sets) {
            let chase: Vec<FunctionalDependency> = layer.residual_fds.iter().filter(|f| c.contains(&f.rhs)).cloned().collect();
            plan.push((c.clone(), s.clone(), chase));
        }
    }

    // dbs[j] = D with the first j planned components quotiented away
    let mut dbs = vec![db.clone()];
    for (c, _, _) in &plan {
        let next = quotient_database(dbs.last().unwrap(), c);
        dbs.push(next);
    }

    let nonempty = q.joins().iter().map(|r| db.table(r).map(|t| !t.is_empty())).collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<Row> = if nonempty.iter().all(|b| *b) {
        vec![Row::from_pairs(q.variables().iter().map(|a| (a.clone(), a.placeholder())))]
    } else {
        Vec::new()
    };

    let mut stats = EvalStats { iterative_width: decomposition.iterative_width(), steps: Vec::new() };
    for (j, (c, s, chase)) in plan.iter().enumerate().rev() {
        let current = &dbs[j];
        let k = candidate_rows(schema, q, current, s)?;
        let index = FdIndex::build(schema, q, current, chase)?;
        let mut next = Vec::new();
        for partial in &rows {
            for assignment in &k {
                if let Some(t) = extend_component(schema, q, current, &index, c, partial, assignment) {
                    next.push(t);
                }
            }
        }
        stats.steps.push(ExtensionStep {
            component: names(c),
            spanning_set: names(s),
            input_rows: rows.len(),
            candidates: k.len(),
            attempts: rows.len() * k.len(),
            output_rows: next.len(),
        });
        rows = next;
    }

    let mut table = Table::new(q.variables().clone());
    for r in &rows {
        table.insert_row(r)?;
    }
    Ok((table, stats))
}

/// Deduplicated projection onto `free`.
pub fn project_set(t: &Table, free: &AttrSet) -> Result<Table> {
    if !free.is_subset(&t.attribute_set()) {
        return Err(Error::Invalid("projection onto attributes outside the table".into()));
    }
    Ok(t.project(free))
}

/// Projection without deduplication: multiplicity per projected row and the
/// total, which always equals `|t|`.
pub fn project_bag_count(t: &Table, free: &AttrSet) -> Result<(BTreeMap<Row, u64>, u64)> {
    if !free.is_subset(&t.attribute_set()) {
        return Err(Error::Invalid("projection onto attributes outside the table".into()));
    }
    let mut counts: BTreeMap<Row, u64> = BTreeMap::new();
    for r in t.rows() {
        *counts.entry(r.restrict(free)).or_default() += 1;
    }
    let total = counts.values().sum();
    Ok((counts, total))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Baseline,
    Components,
}

/// Natural-join result with the chosen algorithm (stats only for components).
pub fn evaluate(
    schema: &Schema,
    fds: &[FunctionalDependency],
    q: &Query,
    db: &Database,
    algo: Algorithm,
) -> Result<(Table, Option<EvalStats>)> {
    match algo {
        Algorithm::Baseline => Ok((join_baseline(schema, q, db)?, None)),
        Algorithm::Components => join_components(schema, fds, q, db).map(|(t, s)| (t, Some(s))),
    }
}
