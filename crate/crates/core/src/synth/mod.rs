//! Worst-case database generators.
//!
//! Every generator returns the materialized database together with its
//! closed-form sizes ([`ClosedForm`]); the `*_sizes` functions return the
//! closed forms alone, without materializing anything.
//!
//! For the coloring, vector-space and permutation constructions the closed
//! form for the join counts the rows produced by a single global witness
//! (an assignment, a vector, a permutation); the evaluated join contains all
//! of those and may contain more, so it is a lower bound on `|Q(D)|`.

pub mod gf;
pub mod permutation;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use ratlp::Rational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::alpha_from_sizes;
use crate::relational::{
    effective_fds, encode_tuple, AttrSet, Attribute, Database, FunctionalDependency, Query, Schema, Table, Value,
};

pub use gf::{dualize_coloring, vs_system_database, vs_system_sizes, VectorSpaceSystem};
pub use permutation::{normalized_log_coset_count, permutation_database, permutation_sizes, GroupConstructionSpec};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosedForm {
    /// Predicted size of every schema relation.
    #[serde(serialize_with = "ser_sizes")]
    pub tables: BTreeMap<String, BigUint>,
    /// Predicted (for product: exact; otherwise lower-bound) join size.
    #[serde(serialize_with = "ser_big")]
    pub join: BigUint,
}

fn ser_big<S: serde::Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

fn ser_sizes<S: serde::Serializer>(m: &BTreeMap<String, BigUint>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &v.to_string())?;
    }
    map.end()
}

impl ClosedForm {
    /// `log |Q(D)| / log |D|` from the closed forms, `|D|` over the joined relations.
    pub fn predicted_alpha(&self, q: &Query) -> Option<f64> {
        let db = q.joins().iter().filter_map(|r| self.tables.get(r)).max().cloned().unwrap_or_default();
        alpha_from_sizes(&self.join, &db)
    }

    pub fn max_table(&self, q: &Query) -> BigUint {
        q.joins().iter().filter_map(|r| self.tables.get(r)).max().cloned().unwrap_or_default()
    }
}

#[derive(Clone, Debug)]
pub struct Synthesized {
    pub db: Database,
    pub sizes: ClosedForm,
}

pub(crate) fn guard(what: String, rows: &BigUint, limit: u64) -> Result<()> {
    if rows.to_u64().is_none_or(|r| r > limit) {
        return Err(Error::RowLimit { what, rows: rows.to_string(), limit });
    }
    Ok(())
}

/// Cartesian product table; `values[i]` is the value list of `attrs[i]`
/// (attributes sorted).
pub(crate) fn product_table(attrs: &[Attribute], values: &[Vec<Value>]) -> Table {
    let mut rows = BTreeSet::new();
    if values.iter().all(|v| !v.is_empty()) {
        let mut idx = vec![0usize; attrs.len()];
        'outer: loop {
            rows.insert(idx.iter().zip(values).map(|(&i, v)| v[i].clone()).collect());
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < values[k].len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
    }
    Table::from_parts(attrs.to_vec(), rows)
}

fn check_packing(schema: &Schema, q: &Query, packing: &BTreeMap<Attribute, Rational>) -> Result<()> {
    if let Some((x, _)) = packing.iter().find(|(x, p)| p.is_negative() || !q.variables().contains(*x)) {
        return Err(Error::InvalidConstruction(format!("packing weight of `{x}` is negative or outside the query")));
    }
    for r in q.joins() {
        let load: Rational = schema.relations()[r].iter().filter_map(|x| packing.get(x)).sum();
        if load > Rational::one() {
            return Err(Error::InvalidConstruction(format!("packing overloads relation `{r}`")));
        }
    }
    Ok(())
}

/// Exact `N^p` for rational `p ≥ 0`, or an error when it is not an integer.
fn rational_power(n: u64, p: &Rational) -> Result<BigUint> {
    let a = p.numer().to_u32().ok_or_else(|| Error::InvalidConstruction("packing weight too large".into()))?;
    let b = p.denom().to_u32().ok_or_else(|| Error::InvalidConstruction("packing weight denominator too large".into()))?;
    let target = BigUint::from(n).pow(a);
    let root = target.nth_root(b);
    if root.pow(b) != target {
        return Err(Error::InvalidConstruction(format!("{n}^({p}) is not an integer")));
    }
    Ok(root)
}

fn domain_sizes(q: &Query, schema: &Schema, packing: &BTreeMap<Attribute, Rational>, n: u64) -> Result<BTreeMap<Attribute, BigUint>> {
    if n < 2 {
        return Err(Error::InvalidConstruction("N must be at least 2".into()));
    }
    check_packing(schema, q, packing)?;
    schema
        .attributes()
        .iter()
        .map(|x| {
            let p = packing.get(x).cloned().unwrap_or_else(Rational::zero);
            Ok((x.clone(), rational_power(n, &p)?))
        })
        .collect()
}

pub fn product_sizes(schema: &Schema, q: &Query, packing: &BTreeMap<Attribute, Rational>, n: u64) -> Result<ClosedForm> {
    let dom = domain_sizes(q, schema, packing, n)?;
    let prod = |attrs: &AttrSet| attrs.iter().map(|x| dom[x].clone()).product::<BigUint>();
    Ok(ClosedForm {
        tables: schema.relations().iter().map(|(r, attrs)| (r.clone(), prod(attrs))).collect(),
        join: prod(q.variables()),
    })
}

/// Full products of per-attribute value sets of size `N^{p_x}`; attributes
/// outside the packing get a single value.
pub fn product_database(
    schema: &Schema,
    q: &Query,
    packing: &BTreeMap<Attribute, Rational>,
    n: u64,
    row_limit: u64,
) -> Result<Synthesized> {
    let sizes = product_sizes(schema, q, packing, n)?;
    for (r, s) in &sizes.tables {
        guard(format!("product table `{r}`"), s, row_limit)?;
    }
    let dom = domain_sizes(q, schema, packing, n)?;
    let mut db = Database::empty(schema);
    for (r, attrs) in schema.relations() {
        let attrs: Vec<Attribute> = attrs.iter().cloned().collect();
        let values: Vec<Vec<Value>> =
            attrs.iter().map(|x| (0..dom[x].to_u64().unwrap()).map(|i| i.to_string()).collect()).collect();
        db.set_table(r, product_table(&attrs, &values))?;
    }
    Ok(Synthesized { db, sizes })
}

/// Color sets per attribute; attributes absent from the map have no colors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub assign: BTreeMap<Attribute, BTreeSet<String>>,
}

impl Coloring {
    pub fn colors(&self, x: &Attribute) -> BTreeSet<String> {
        self.assign.get(x).cloned().unwrap_or_default()
    }

    pub fn colors_of(&self, attrs: &AttrSet) -> BTreeSet<String> {
        attrs.iter().flat_map(|x| self.colors(x)).collect()
    }

    /// `f(x) ⊆ f(Y)`.
    pub fn satisfies(&self, fd: &FunctionalDependency) -> bool {
        self.colors(&fd.rhs).is_subset(&self.colors_of(&fd.lhs))
    }

    /// One fresh color per unit of a scaled color-class certificate; color
    /// names are zero-padded so lexicographic order matches creation order.
    pub fn from_classes(weights: &BTreeMap<AttrSet, Rational>) -> Self {
        use num_integer::Integer;
        let denom = weights.values().fold(BigInt::one(), |d, w| d.lcm(w.denom()));
        let mut assign: BTreeMap<Attribute, BTreeSet<String>> = BTreeMap::new();
        let mut next = 0usize;
        for (class, w) in weights {
            let copies = (w * Rational::from_integer(denom.clone())).to_integer().to_usize().expect("small color count");
            for _ in 0..copies {
                for a in class {
                    assign.entry(a.clone()).or_default().insert(format!("c{next:04}"));
                }
                next += 1;
            }
        }
        Coloring { assign }
    }
}

fn check_coloring(schema: &Schema, q: &Query, f: &Coloring, fds: &[FunctionalDependency]) -> Result<()> {
    for fd in effective_fds(schema, fds, q) {
        if !f.satisfies(&fd) {
            return Err(Error::InvalidConstruction(format!("coloring violates {fd}")));
        }
    }
    Ok(())
}

pub fn coloring_sizes(
    schema: &Schema,
    q: &Query,
    f: &Coloring,
    fds: &[FunctionalDependency],
    n_values: usize,
) -> Result<ClosedForm> {
    if n_values < 2 {
        return Err(Error::InvalidConstruction("the value set needs at least 2 elements".into()));
    }
    check_coloring(schema, q, f, fds)?;
    let pow = |colors: usize| BigUint::from(n_values).pow(colors as u32);
    Ok(ClosedForm {
        tables: schema.relations().iter().map(|(r, attrs)| (r.clone(), pow(f.colors_of(attrs).len()))).collect(),
        join: pow(f.colors_of(q.variables()).len()),
    })
}

/// Rows `r[f(V(R))]` of the table `N^C`, with attribute `x` carrying the
/// sub-row on `f(x)` (colors in lexicographic order, tuple-encoded).
pub fn coloring_database(
    schema: &Schema,
    q: &Query,
    f: &Coloring,
    fds: &[FunctionalDependency],
    n_values: &[Value],
    row_limit: u64,
) -> Result<Synthesized> {
    let sizes = coloring_sizes(schema, q, f, fds, n_values.len())?;
    let distinct: BTreeSet<&Value> = n_values.iter().collect();
    if distinct.len() != n_values.len() {
        return Err(Error::InvalidConstruction("value set has duplicates".into()));
    }
    for (r, s) in &sizes.tables {
        guard(format!("coloring table `{r}`"), s, row_limit)?;
    }
    let mut db = Database::empty(schema);
    for (r, attrs) in schema.relations() {
        let colors: Vec<String> = f.colors_of(attrs).into_iter().collect();
        let attr_list: Vec<Attribute> = attrs.iter().cloned().collect();
        // positions of each attribute's colors inside `colors`
        let picks: Vec<Vec<usize>> = attr_list
            .iter()
            .map(|x| f.colors(x).iter().map(|c| colors.binary_search(c).unwrap()).collect())
            .collect();
        let assignments = product_table(
            &(0..colors.len()).map(|i| Attribute::from(format!("{i:04}"))).collect::<Vec<_>>(),
            &vec![n_values.to_vec(); colors.len()],
        );
        let mut rows = BTreeSet::new();
        for a in assignments.tuples() {
            rows.insert(picks.iter().map(|p| encode_tuple(&p.iter().map(|&i| a[i].as_str()).collect::<Vec<_>>())).collect());
        }
        if colors.is_empty() {
            rows.insert(vec![encode_tuple::<&str>(&[]); attr_list.len()]);
        }
        db.set_table(r, Table::from_parts(attr_list, rows))?;
    }
    Ok(Synthesized { db, sizes })
}

/// The value set `{"0", …, "n−1"}`.
pub fn value_set(n: usize) -> Vec<Value> {
    (0..n).map(|i| i.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::join_baseline;
    use crate::relational::{attr_set, check_fd};
    use ratlp::{int, ratio};

    fn triangle() -> (Schema, Query) {
        let s = Schema::from_relations(&[("R", &["x", "y"]), ("S", &["y", "z"]), ("T", &["z", "x"])]).unwrap();
        let q = Query::all(&s);
        (s, q)
    }

    fn path() -> (Schema, Query) {
        let s = Schema::from_relations(&[("R", &["x", "y"]), ("S", &["y", "z"])]).unwrap();
        let q = Query::all(&s);
        (s, q)
    }

    fn packing(pairs: &[(&str, Rational)]) -> BTreeMap<Attribute, Rational> {
        pairs.iter().map(|(a, p)| (Attribute::from(*a), p.clone())).collect()
    }

    #[test]
    fn product_triangle_n9() {
        let (s, q) = triangle();
        let p = packing(&[("x", ratio(1, 2)), ("y", ratio(1, 2)), ("z", ratio(1, 2))]);
        let out = product_database(&s, &q, &p, 9, 10_000).unwrap();
        assert!(out.db.tables().values().all(|t| t.len() == 9));
        assert_eq!(join_baseline(&s, &q, &out.db).unwrap().len(), 27);
        assert_eq!(out.sizes.join, BigUint::from(27u8));
        assert!((out.sizes.predicted_alpha(&q).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn product_zero_packing_gives_singletons() {
        let (s, q) = triangle();
        let out = product_database(&s, &q, &BTreeMap::new(), 5, 100).unwrap();
        assert!(out.db.tables().values().all(|t| t.len() == 1));
    }

    #[test]
    fn product_path_n5() {
        let (s, q) = path();
        let p = packing(&[("x", int(1)), ("y", int(0)), ("z", int(1))]);
        let out = product_database(&s, &q, &p, 5, 100).unwrap();
        assert_eq!(out.db.table("R").unwrap().len(), 5);
        assert_eq!(join_baseline(&s, &q, &out.db).unwrap().len(), 25);
    }

    #[test]
    fn product_rejects_bad_inputs() {
        let (s, q) = triangle();
        let half = packing(&[("x", ratio(1, 2))]);
        assert!(matches!(product_database(&s, &q, &half, 8, 100), Err(Error::InvalidConstruction(_))));
        let heavy = packing(&[("x", int(1)), ("y", int(1))]);
        assert!(product_database(&s, &q, &heavy, 4, 100).is_err());
        let p = packing(&[("x", int(1))]);
        assert!(matches!(product_database(&s, &q, &p, 1000, 10), Err(Error::RowLimit { .. })));
    }

    fn coloring(pairs: &[(&str, &[&str])]) -> Coloring {
        Coloring {
            assign: pairs
                .iter()
                .map(|(a, cs)| (Attribute::from(*a), cs.iter().map(|c| c.to_string()).collect()))
                .collect(),
        }
    }

    #[test]
    fn coloring_triangle_singletons() {
        let (s, q) = triangle();
        let f = coloring(&[("x", &["1"]), ("y", &["2"]), ("z", &["3"])]);
        let out = coloring_database(&s, &q, &f, &[], &value_set(2), 1000).unwrap();
        assert!(out.db.tables().values().all(|t| t.len() == 4));
        assert_eq!(join_baseline(&s, &q, &out.db).unwrap().len(), 8);
    }

    #[test]
    fn coloring_shared_color() {
        let (s, q) = triangle();
        let f = coloring(&[("x", &["c"]), ("y", &["c"]), ("z", &["c"])]);
        let out = coloring_database(&s, &q, &f, &[], &value_set(3), 1000).unwrap();
        assert!(out.db.tables().values().all(|t| t.len() == 3));
        assert_eq!(join_baseline(&s, &q, &out.db).unwrap().len(), 3);
    }

    #[test]
    fn coloring_path_with_keys_satisfies_fds() {
        let (s, q) = path();
        let fds = vec![FunctionalDependency::of(&["y"], "x"), FunctionalDependency::of(&["y"], "z")];
        let f = coloring(&[("x", &["a"]), ("y", &["a", "b"]), ("z", &["b"])]);
        let out = coloring_database(&s, &q, &f, &fds, &value_set(2), 1000).unwrap();
        assert!(fds.iter().all(|fd| check_fd(&out.db, fd)));
        let bad = coloring(&[("x", &["a"]), ("y", &["b"]), ("z", &["b"])]);
        assert!(matches!(coloring_database(&s, &q, &bad, &fds, &value_set(2), 1000), Err(Error::InvalidConstruction(_))));
    }

    #[test]
    fn coloring_from_certificate_classes() {
        let w: BTreeMap<AttrSet, Rational> = [(attr_set(["x"]), ratio(1, 2)), (attr_set(["y", "z"]), ratio(1, 1))].into();
        let f = Coloring::from_classes(&w);
        assert_eq!(f.colors(&"x".into()).len(), 1);
        assert_eq!(f.colors(&"y".into()).len(), 2);
        assert_eq!(f.colors(&"y".into()), f.colors(&"z".into()));
    }
}
