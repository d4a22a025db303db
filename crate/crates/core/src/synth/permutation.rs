//! Permutation-group construction on the row-multiset matrix `A_k`.
//!
//! `A_k` holds `k·p_r` copies of every support row `r` of a rational base
//! distribution. The stabilizer of the submatrix `A_k[Y]` has order
//! `∏ m!` over the distinct rows of `A_k[Y]` with multiplicities `m`, so its
//! cosets, i.e. the distinct row orders of `A_k[Y]`, number `k! / ∏ m!`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::Zero;

use super::{guard, ClosedForm, Synthesized};
use crate::entropy::{big_factorial, multiplicities, Distribution};
use crate::error::{Error, Result};
use crate::measure::log2_big;
use crate::relational::{effective_fds, encode_tuple, AttrSet, Attribute, Database, FunctionalDependency, Query, Row, Schema, Table, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupConstructionSpec {
    base: Distribution,
    k: u64,
    counts: Vec<u64>,
}

impl GroupConstructionSpec {
    /// `k` must make every `k·p_r` integral.
    pub fn new(base: Distribution, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConstruction("k must be positive".into()));
        }
        let counts = multiplicities(&base, k)?;
        Ok(GroupConstructionSpec { base, k, counts })
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Distinct rows of `A_k[Y]` with their multiplicities, in sorted row order.
    pub fn restricted_rows(&self, y: &AttrSet) -> Vec<(Row, u64)> {
        let mut acc: BTreeMap<Row, u64> = BTreeMap::new();
        for (r, c) in self.base.support().iter().zip(&self.counts) {
            *acc.entry(r.restrict(y)).or_default() += c;
        }
        acc.into_iter().collect()
    }

    /// `|G^k_Y| = ∏ m!`.
    pub fn stabilizer_order(&self, y: &AttrSet) -> BigUint {
        self.restricted_rows(y).iter().map(|(_, m)| big_factorial(*m)).product()
    }

    /// `k! / |G^k_Y|`.
    pub fn coset_count(&self, y: &AttrSet) -> BigUint {
        big_factorial(self.k) / self.stabilizer_order(y)
    }
}

/// `(1/k)·log₂(k! / ∏ (k·p_r)!)` over the marginal of the base on `y`.
pub fn normalized_log_coset_count(spec: &GroupConstructionSpec, y: &AttrSet) -> f64 {
    log2_big(&spec.coset_count(y)) / spec.k as f64
}

fn check_spec(schema: &Schema, q: &Query, spec: &GroupConstructionSpec, fds: &[FunctionalDependency]) -> Result<()> {
    if !q.variables().is_subset(spec.base.attributes()) {
        return Err(Error::InvalidConstruction("base distribution does not cover the query variables".into()));
    }
    for fd in effective_fds(schema, fds, q) {
        let mut seen: BTreeMap<Row, &Value> = BTreeMap::new();
        for r in spec.base.support() {
            let v = r.get(&fd.rhs).unwrap();
            if seen.insert(r.restrict(&fd.lhs), v).is_some_and(|p| p != v) {
                return Err(Error::InvalidConstruction(format!("base distribution violates {fd}")));
            }
        }
    }
    Ok(())
}

/// Closed forms only: `|R(D)| = k!/|G^k_{V(R)}|`, join ≥ `k!/|G^k_{V(Q)}|`.
pub fn permutation_sizes(schema: &Schema, q: &Query, spec: &GroupConstructionSpec, fds: &[FunctionalDependency]) -> Result<ClosedForm> {
    check_spec(schema, q, spec, fds)?;
    let attrs = spec.base.attributes();
    Ok(ClosedForm {
        tables: schema
            .relations()
            .iter()
            .map(|(r, a)| (r.clone(), spec.coset_count(&a.intersection(attrs).cloned().collect())))
            .collect(),
        join: spec.coset_count(q.variables()),
    })
}

/// Steps to the next lexicographic permutation of a multiset; false after the last one.
fn next_permutation(a: &mut [usize]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else { return false };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).unwrap();
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// One row per coset of `G^k_{V(R)}`: every distinct row order of
/// `A_k[V(R)]`, with attribute `x` carrying the reordered column `x`.
/// Enumerates multiset permutations, never all `k!` permutations.
pub fn permutation_database(
    schema: &Schema,
    q: &Query,
    spec: &GroupConstructionSpec,
    fds: &[FunctionalDependency],
    row_limit: u64,
) -> Result<Synthesized> {
    let sizes = permutation_sizes(schema, q, spec, fds)?;
    let full = spec.coset_count(spec.base.attributes());
    guard(format!("permutation construction with k = {} (use count-only mode)", spec.k), &full, row_limit)?;
    let mut db = Database::empty(schema);
    for (r, attrs) in schema.relations() {
        let attr_list: Vec<Attribute> = attrs.iter().cloned().collect();
        let distinct = spec.restricted_rows(&attrs.intersection(spec.base.attributes()).cloned().collect());
        let mut seq: Vec<usize> = distinct.iter().enumerate().flat_map(|(i, (_, m))| std::iter::repeat_n(i, *m as usize)).collect();
        let mut rows = BTreeSet::new();
        loop {
            rows.insert(
                attr_list
                    .iter()
                    .map(|x| {
                        let column: Vec<&str> =
                            seq.iter().map(|&i| distinct[i].0.get(x).map(String::as_str).unwrap_or("")).collect();
                        encode_tuple(&column)
                    })
                    .collect(),
            );
            if !next_permutation(&mut seq) {
                break;
            }
        }
        debug_assert_eq!(BigUint::from(rows.len()), sizes.tables[r]);
        db.set_table(r, Table::from_parts(attr_list, rows))?;
    }
    Ok(Synthesized { db, sizes })
}

/// Ratio of normalized coset counts `log(k!/|G_X|) / max_R log(k!/|G_{V(R)}|)`.
pub fn coset_ratio(schema: &Schema, q: &Query, spec: &GroupConstructionSpec) -> Option<f64> {
    let num = spec.coset_count(q.variables());
    let den = q.joins().iter().map(|r| spec.coset_count(&schema.relations()[r])).max().unwrap_or_default();
    if den <= BigUint::from(1u8) || num.is_zero() {
        return None;
    }
    Some(log2_big(&num) / log2_big(&den))
}
