//! Seeded random instances shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fdjoin::entropy::Distribution;
use fdjoin::{AttrSet, Attribute, Database, FunctionalDependency, Query, Row, Schema, Table, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratlp::{int, Rational};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<Attribute> {
    (0..n).map(|i| Attribute::from(format!("a{i}"))).collect()
}

fn random_subset(rng: &mut ChaCha8Rng, universe: &[Attribute], min: usize) -> AttrSet {
    loop {
        let s: AttrSet = universe.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        if s.len() >= min {
            return s;
        }
    }
}

/// Hypergraph on `≤ max_v` vertices with `≤ max_e` nonempty edges; isolated
/// vertices are dropped, so every attribute lies in some relation.
pub fn random_hypergraph(rng: &mut ChaCha8Rng, max_v: usize, max_e: usize) -> (Schema, Query) {
    let attrs = names(rng.gen_range(1..=max_v));
    let m = rng.gen_range(1..=max_e);
    let mut relations = BTreeMap::new();
    for i in 0..m {
        relations.insert(format!("R{i}"), random_subset(rng, &attrs, 1));
    }
    let used: AttrSet = relations.values().flatten().cloned().collect();
    let schema = Schema::new(used.into_iter().collect(), relations).unwrap();
    let q = Query::all(&schema);
    (schema, q)
}

/// Random fds over `attrs`, including cyclic ones and occasional empty lhs.
pub fn random_fds(rng: &mut ChaCha8Rng, attrs: &[Attribute], max: usize) -> Vec<FunctionalDependency> {
    let mut fds = Vec::new();
    for _ in 0..rng.gen_range(0..=max) {
        let rhs = attrs.choose(rng).unwrap().clone();
        let lhs: AttrSet = attrs.iter().filter(|a| **a != rhs && rng.gen_bool(0.35)).cloned().collect();
        if lhs.is_empty() && !rng.gen_bool(0.15) {
            continue;
        }
        fds.push(FunctionalDependency::new(lhs, rhs));
    }
    if attrs.len() >= 2 && rng.gen_bool(0.3) {
        // a directed cycle of single-attribute fds
        for w in attrs.windows(2) {
            fds.push(FunctionalDependency::new([w[0].clone()].into(), w[1].clone()));
        }
        fds.push(FunctionalDependency::new([attrs[attrs.len() - 1].clone()].into(), attrs[0].clone()));
    }
    fds
}

/// Rewrites rows until every fd inside `attrs` holds: each rhs becomes the
/// least value among rows agreeing on the lhs. Values only ever decrease,
/// so this terminates.
pub fn repair(rows: &mut [BTreeMap<Attribute, Value>], attrs: &AttrSet, fds: &[FunctionalDependency]) {
    let inside: Vec<&FunctionalDependency> = fds.iter().filter(|fd| attrs.is_superset(&fd.attributes())).collect();
    loop {
        let mut changed = false;
        for fd in &inside {
            let mut least: BTreeMap<Vec<Value>, Value> = BTreeMap::new();
            for r in rows.iter() {
                let key: Vec<Value> = fd.lhs.iter().map(|a| r[a].clone()).collect();
                let v = least.entry(key).or_insert_with(|| r[&fd.rhs].clone());
                if r[&fd.rhs] < *v {
                    *v = r[&fd.rhs].clone();
                }
            }
            for r in rows.iter_mut() {
                let key: Vec<Value> = fd.lhs.iter().map(|a| r[a].clone()).collect();
                if r[&fd.rhs] != least[&key] {
                    r.insert(fd.rhs.clone(), least[&key].clone());
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

fn random_row(rng: &mut ChaCha8Rng, attrs: &AttrSet, domain: usize) -> BTreeMap<Attribute, Value> {
    attrs.iter().map(|a| (a.clone(), rng.gen_range(0..domain).to_string())).collect()
}

pub struct RandomInstance {
    pub schema: Schema,
    pub fds: Vec<FunctionalDependency>,
    pub query: Query,
    pub db: Database,
}

/// Fd-satisfying database: shared "universal" rows make the join nonempty,
/// extra per-relation noise rows make it selective.
pub fn random_fd_instance(rng: &mut ChaCha8Rng, max_attrs: usize, max_rows: usize) -> RandomInstance {
    let attrs = names(rng.gen_range(2..=max_attrs));
    let all: AttrSet = attrs.iter().cloned().collect();
    let mut relations = BTreeMap::new();
    let m = rng.gen_range(2..=4);
    for i in 0..m {
        relations.insert(format!("R{i}"), random_subset(rng, &attrs, 1));
    }
    let covered: AttrSet = relations.values().flatten().cloned().collect();
    if covered != all {
        let missing: AttrSet = all.difference(&covered).cloned().collect();
        relations.insert(format!("R{m}"), missing);
    }
    let schema = Schema::new(attrs.clone(), relations).unwrap();
    let fds = random_fds(rng, &attrs, 4);
    let domain = rng.gen_range(2..=4);
    let mut universal: Vec<_> = (0..rng.gen_range(1..=max_rows / 2)).map(|_| random_row(rng, &all, domain)).collect();
    repair(&mut universal, &all, &fds);
    let mut db = Database::empty(&schema);
    for (r, rattrs) in schema.relations() {
        let mut rows: Vec<_> = universal
            .iter()
            .map(|u| u.iter().filter(|(a, _)| rattrs.contains(*a)).map(|(a, v)| (a.clone(), v.clone())).collect())
            .collect();
        for _ in 0..rng.gen_range(0..=max_rows / 2) {
            rows.push(random_row(rng, rattrs, domain));
        }
        repair(&mut rows, rattrs, &fds);
        let mut table = Table::new(rattrs.clone());
        for row in rows.into_iter().take(max_rows) {
            table.insert_row(&Row::from_pairs(row)).unwrap();
        }
        db.set_table(r, table).unwrap();
    }
    let query = Query::all(&schema);
    RandomInstance { schema, fds, query, db }
}

/// Random distribution over `≤ max_attrs` attributes with rational
/// probabilities proportional to small integer weights.
pub fn random_distribution(rng: &mut ChaCha8Rng, max_attrs: usize) -> Distribution {
    let attrs: AttrSet = names(rng.gen_range(1..=max_attrs)).into_iter().collect();
    let mut support = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=8) {
        support.insert(Row::from_pairs(random_row(rng, &attrs, 3)));
    }
    let support: Vec<Row> = support.into_iter().collect();
    let weights: Vec<i64> = support.iter().map(|_| rng.gen_range(1..=5)).collect();
    let total: i64 = weights.iter().sum();
    let probs: Vec<Rational> = weights.iter().map(|&w| int(w) / int(total)).collect();
    Distribution::new(attrs, support, probs).unwrap()
}
