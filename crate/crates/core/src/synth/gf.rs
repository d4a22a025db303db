//! Subspace systems over GF(p) and their coset databases.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use serde::Serialize;

use super::{guard, ClosedForm, Synthesized};
use crate::error::{Error, Result};
use crate::relational::{effective_fds, encode_tuple, AttrSet, Attribute, Database, FunctionalDependency, Query, Schema, Table};

pub const MAX_PRIME: u32 = 251;
pub const MAX_DIM: usize = 12;

pub type Vector = Vec<u32>;

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn inv(a: u32, p: u32) -> u32 {
    // Fermat: a^(p−2)
    let (mut base, mut exp, mut acc) = (a as u64 % p as u64, p as u64 - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    acc as u32
}

/// Reduced row-echelon basis of the span of `rows`; returns basis and pivot columns.
pub fn rref(rows: &[Vector], p: u32, dim: usize) -> (Vec<Vector>, Vec<usize>) {
    let mut m: Vec<Vector> = rows.iter().map(|r| r.iter().map(|v| v % p).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..dim {
        let Some(i) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, i);
        let s = inv(m[r][c], p) as u64;
        for v in m[r].iter_mut() {
            *v = (*v as u64 * s % p as u64) as u32;
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c] as u64;
                let pivot = m[r].clone();
                for (v, &pv) in m[i].iter_mut().zip(&pivot) {
                    let sub = f * pv as u64 % p as u64;
                    *v = ((*v as u64 + p as u64 - sub) % p as u64) as u32;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

/// A subspace of GF(p)^dim held in reduced row-echelon form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subspace {
    basis: Vec<Vector>,
    #[serde(skip)]
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn span(rows: &[Vector], p: u32, dim: usize) -> Self {
        let (basis, pivots) = rref(rows, p, dim);
        Subspace { basis, pivots }
    }

    pub fn zero() -> Self {
        Subspace { basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(p: u32, dim: usize) -> Self {
        let rows: Vec<Vector> = (0..dim).map(|i| (0..dim).map(|j| u32::from(i == j)).collect()).collect();
        Subspace::span(&rows, p, dim)
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Canonical representative of `v + self`: pivot coordinates eliminated.
    pub fn reduce(&self, v: &[u32], p: u32) -> Vector {
        let mut out: Vector = v.iter().map(|x| x % p).collect();
        for (row, &c) in self.basis.iter().zip(&self.pivots) {
            let f = out[c] as u64;
            if f != 0 {
                for (o, b) in out.iter_mut().zip(row) {
                    *o = ((*o as u64 + p as u64 - f * *b as u64 % p as u64) % p as u64) as u32;
                }
            }
        }
        out
    }

    pub fn contains_vector(&self, v: &[u32], p: u32) -> bool {
        self.reduce(v, p).iter().all(|&x| x == 0)
    }

    pub fn contains(&self, other: &Subspace, p: u32) -> bool {
        other.basis.iter().all(|v| self.contains_vector(v, p))
    }

    pub fn sum(&self, other: &Subspace, p: u32, dim: usize) -> Subspace {
        let rows: Vec<Vector> = self.basis.iter().chain(&other.basis).cloned().collect();
        Subspace::span(&rows, p, dim)
    }

    /// `{w : ⟨w, v⟩ = 0 for all v}`, read off the reduced row-echelon form.
    pub fn annihilator(&self, p: u32, dim: usize) -> Subspace {
        let free: Vec<usize> = (0..dim).filter(|c| !self.pivots.contains(c)).collect();
        let rows: Vec<Vector> = free
            .iter()
            .map(|&f| {
                let mut w = vec![0u32; dim];
                w[f] = 1;
                for (row, &c) in self.basis.iter().zip(&self.pivots) {
                    w[c] = (p - row[f] % p) % p;
                }
                w
            })
            .collect();
        Subspace::span(&rows, p, dim)
    }

    /// `(U⊥ + W⊥)⊥`.
    pub fn intersect(&self, other: &Subspace, p: u32, dim: usize) -> Subspace {
        self.annihilator(p, dim).sum(&other.annihilator(p, dim), p, dim).annihilator(p, dim)
    }
}

/// Family of subspaces `V_x ⊆ GF(p)^dim`, one per attribute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VectorSpaceSystem {
    pub prime: u32,
    pub dim: usize,
    pub subspaces: BTreeMap<Attribute, Subspace>,
}

impl VectorSpaceSystem {
    /// Builds from spanning vectors per attribute (any spanning set; reduced internally).
    pub fn new(prime: u32, dim: usize, generators: BTreeMap<Attribute, Vec<Vector>>) -> Result<Self> {
        if !is_prime(prime) || prime > MAX_PRIME {
            return Err(Error::InvalidConstruction(format!("{prime} is not a prime ≤ {MAX_PRIME}")));
        }
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidConstruction(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        let mut subspaces = BTreeMap::new();
        for (x, gens) in generators {
            if let Some(v) = gens.iter().find(|v| v.len() != dim || v.iter().any(|&c| c >= prime)) {
                return Err(Error::InvalidConstruction(format!("vector {v:?} for `{x}` is not in GF({prime})^{dim}")));
            }
            subspaces.insert(x, Subspace::span(&gens, prime, dim));
        }
        Ok(VectorSpaceSystem { prime, dim, subspaces })
    }

    /// `V_x`; attributes outside the system are the whole space.
    pub fn subspace(&self, x: &Attribute) -> Subspace {
        self.subspaces.get(x).cloned().unwrap_or_else(|| Subspace::full(self.prime, self.dim))
    }

    /// `V_Y = ∩_{y∈Y} V_y` (the whole space for `Y = ∅`).
    pub fn intersection(&self, y: &AttrSet) -> Subspace {
        y.iter().fold(Subspace::full(self.prime, self.dim), |acc, a| acc.intersect(&self.subspace(a), self.prime, self.dim))
    }

    /// `Σ_{y∈Y} V_y` (zero for `Y = ∅`).
    pub fn sum(&self, y: &AttrSet) -> Subspace {
        y.iter().fold(Subspace::zero(), |acc, a| acc.sum(&self.subspace(a), self.prime, self.dim))
    }

    pub fn codim(&self, y: &AttrSet) -> usize {
        self.dim - self.intersection(y).rank()
    }

    /// Intersection form of an fd: `V_x ⊇ V_Y`.
    pub fn satisfies(&self, fd: &FunctionalDependency) -> bool {
        self.subspace(&fd.rhs).contains(&self.intersection(&fd.lhs), self.prime)
    }

    /// Sum form of an fd: `V_x ⊆ Σ_{y∈Y} V_y`.
    pub fn satisfies_sum_form(&self, fd: &FunctionalDependency) -> bool {
        self.sum(&fd.lhs).contains(&self.subspace(&fd.rhs), self.prime)
    }

    /// `dim Σ V_X / max_R dim Σ V_{V(R)}`.
    pub fn sum_ratio(&self, schema: &Schema, q: &Query) -> Option<f64> {
        let num = self.sum(q.variables()).rank();
        let den = q.joins().iter().map(|r| self.sum(&schema.relations()[r]).rank()).max().unwrap_or(0);
        (den > 0).then(|| num as f64 / den as f64)
    }

    /// `codim V_X / max_R codim V_{V(R)}`.
    pub fn codim_ratio(&self, schema: &Schema, q: &Query) -> Option<f64> {
        let num = self.codim(q.variables());
        let den = q.joins().iter().map(|r| self.codim(&schema.relations()[r])).max().unwrap_or(0);
        (den > 0).then(|| num as f64 / den as f64)
    }

    fn label(&self, x: &Attribute, v: &[u32]) -> String {
        let rep = self.subspace(x).reduce(v, self.prime);
        encode_tuple(&rep.iter().map(u32::to_string).collect::<Vec<_>>())
    }
}

/// Annihilator system `V_x ↦ V_x⊥`. Sums become intersections:
/// `dim Σ V_Y = codim ∩ V_Y⊥`, so sum-form fds of the input become
/// intersection-form fds of the output.
pub fn dualize_coloring(sys: &VectorSpaceSystem) -> VectorSpaceSystem {
    VectorSpaceSystem {
        prime: sys.prime,
        dim: sys.dim,
        subspaces: sys.subspaces.iter().map(|(x, s)| (x.clone(), s.annihilator(sys.prime, sys.dim))).collect(),
    }
}

fn check_system(schema: &Schema, q: &Query, sys: &VectorSpaceSystem, fds: &[FunctionalDependency]) -> Result<()> {
    if let Some(x) = q.variables().iter().find(|x| !sys.subspaces.contains_key(*x)) {
        return Err(Error::InvalidConstruction(format!("no subspace for `{x}`")));
    }
    for fd in effective_fds(schema, fds, q) {
        if !sys.satisfies(&fd) {
            return Err(Error::InvalidConstruction(format!("subspace system violates {fd}")));
        }
    }
    Ok(())
}

pub fn vs_system_sizes(schema: &Schema, q: &Query, sys: &VectorSpaceSystem, fds: &[FunctionalDependency]) -> Result<ClosedForm> {
    check_system(schema, q, sys, fds)?;
    let pow = |c: usize| BigUint::from(sys.prime).pow(c as u32);
    Ok(ClosedForm {
        tables: schema.relations().iter().map(|(r, attrs)| (r.clone(), pow(sys.codim(attrs)))).collect(),
        join: pow(sys.codim(q.variables())),
    })
}

/// One row `r_v` per vector `v`: `r_v[x]` is the canonical label of `V_x + v`.
pub fn vs_system_database(
    schema: &Schema,
    q: &Query,
    sys: &VectorSpaceSystem,
    fds: &[FunctionalDependency],
    row_limit: u64,
) -> Result<Synthesized> {
    let sizes = vs_system_sizes(schema, q, sys, fds)?;
    guard(format!("GF({})^{} vector enumeration", sys.prime, sys.dim), &BigUint::from(sys.prime).pow(sys.dim as u32), row_limit)?;
    let mut db = Database::empty(schema);
    for (r, attrs) in schema.relations() {
        let attrs: Vec<Attribute> = attrs.iter().cloned().collect();
        let mut rows = BTreeSet::new();
        let mut v = vec![0u32; sys.dim];
        loop {
            rows.insert(attrs.iter().map(|x| sys.label(x, &v)).collect());
            let Some(i) = (0..sys.dim).rev().find(|&i| v[i] + 1 < sys.prime) else { break };
            v[i] += 1;
            for w in v.iter_mut().skip(i + 1) {
                *w = 0;
            }
        }
        db.set_table(r, Table::from_parts(attrs, rows))?;
    }
    Ok(Synthesized { db, sizes })
}

/// The coordinate-plane triangle system: `V_x = ⟨e1,e2⟩`, `V_y = ⟨e2,e3⟩`, `V_z = ⟨e1,e3⟩`.
pub fn triangle_system(prime: u32, names: [&str; 3]) -> Result<VectorSpaceSystem> {
    let e = |i: usize| -> Vector { (0..3).map(|j| u32::from(i == j)).collect() };
    let gens: BTreeMap<Attribute, Vec<Vector>> = [
        (Attribute::from(names[0]), vec![e(0), e(1)]),
        (Attribute::from(names[1]), vec![e(1), e(2)]),
        (Attribute::from(names[2]), vec![e(0), e(2)]),
    ]
    .into();
    VectorSpaceSystem::new(prime, 3, gens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::join_baseline;
    use crate::relational::check_fd;

    fn triangle() -> (Schema, Query) {
        let s = Schema::from_relations(&[("R", &["x", "y"]), ("S", &["y", "z"]), ("T", &["z", "x"])]).unwrap();
        let q = Query::all(&s);
        (s, q)
    }

    #[test]
    fn rref_and_rank() {
        let s = Subspace::span(&[vec![1, 1, 0], vec![2, 2, 0], vec![0, 1, 1]], 3, 3);
        assert_eq!(s.rank(), 2);
        assert!(s.contains_vector(&[1, 2, 1], 3));
        assert!(!s.contains_vector(&[1, 0, 0], 3));
    }

    #[test]
    fn annihilator_examples() {
        let s = Subspace::span(&[vec![1, 0]], 2, 2);
        assert_eq!(s.annihilator(2, 2), Subspace::span(&[vec![0, 1]], 2, 2));
        assert_eq!(Subspace::zero().annihilator(2, 2).rank(), 2);
        let t = Subspace::span(&[vec![1, 2, 0]], 5, 3);
        let a = t.annihilator(5, 3);
        assert_eq!(a.rank(), 2);
        for w in a.basis() {
            let dot: u32 = w.iter().zip(&[1, 2, 0]).map(|(a, b)| a * b).sum();
            assert_eq!(dot % 5, 0);
        }
    }

    #[test]
    fn gf2_triangle_has_three_halves() {
        let (s, q) = triangle();
        let sys = triangle_system(2, ["x", "y", "z"]).unwrap();
        let out = vs_system_database(&s, &q, &sys, &[], 10_000).unwrap();
        assert!(out.db.tables().values().all(|t| t.len() == 4));
        assert_eq!(join_baseline(&s, &q, &out.db).unwrap().len(), 8);
        assert!((out.sizes.predicted_alpha(&q).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_systems() {
        let (s, q) = triangle();
        let full: BTreeMap<Attribute, Vec<Vector>> =
            ["x", "y", "z"].iter().map(|a| (Attribute::from(*a), vec![vec![1, 0], vec![0, 1]])).collect();
        let sys = VectorSpaceSystem::new(3, 2, full).unwrap();
        let out = vs_system_database(&s, &q, &sys, &[], 1000).unwrap();
        assert!(out.db.tables().values().all(|t| t.len() == 1));
        let zero: BTreeMap<Attribute, Vec<Vector>> = ["x", "y", "z"].iter().map(|a| (Attribute::from(*a), vec![])).collect();
        let sys = VectorSpaceSystem::new(3, 2, zero).unwrap();
        let out = vs_system_database(&s, &q, &sys, &[], 1000).unwrap();
        assert!(out.db.tables().values().all(|t| t.len() == 9));
        assert_eq!(join_baseline(&s, &q, &out.db).unwrap().len(), 9);
    }

    #[test]
    fn fd_violating_system_is_rejected_and_valid_ones_hold() {
        let (s, q) = triangle();
        let sys = triangle_system(2, ["x", "y", "z"]).unwrap();
        let fd = FunctionalDependency::of(&["x"], "y");
        assert!(matches!(vs_system_database(&s, &q, &sys, &[fd], 1000), Err(Error::InvalidConstruction(_))));
        // V_x ∩ V_y = ⟨e2⟩ ⊆ V_y: x,y ↦ y trivially; x,y ↦ z needs ⟨e2⟩ ⊆ V_z, which fails
        assert!(!sys.satisfies(&FunctionalDependency::of(&["x", "y"], "z")));
        let gens: BTreeMap<Attribute, Vec<Vector>> = [
            (Attribute::from("x"), vec![vec![1, 0, 0], vec![0, 1, 0]]),
            (Attribute::from("y"), vec![vec![1, 0, 0]]),
            (Attribute::from("z"), vec![vec![0, 0, 1]]),
        ]
        .into();
        let sys = VectorSpaceSystem::new(2, 3, gens).unwrap();
        let fd = FunctionalDependency::of(&["y"], "x");
        let out = vs_system_database(&s, &q, &sys, std::slice::from_ref(&fd), 1000).unwrap();
        assert!(check_fd(&out.db, &fd));
    }

    #[test]
    fn dualization_swaps_sums_and_intersections() {
        let sys = triangle_system(3, ["x", "y", "z"]).unwrap();
        let dual = dualize_coloring(&sys);
        for m in 0..8usize {
            let y: AttrSet = ["x", "y", "z"].iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, a)| Attribute::from(*a)).collect();
            assert_eq!(sys.sum(&y).rank(), dual.codim(&y));
        }
        let (s, q) = triangle();
        assert_eq!(sys.sum_ratio(&s, &q), dual.codim_ratio(&s, &q));
        assert_eq!(dualize_coloring(&dual), sys);
    }

    #[test]
    fn invalid_parameters() {
        assert!(VectorSpaceSystem::new(4, 2, BTreeMap::new()).is_err());
        assert!(VectorSpaceSystem::new(2, 13, BTreeMap::new()).is_err());
        let bad: BTreeMap<Attribute, Vec<Vector>> = [(Attribute::from("x"), vec![vec![2, 0]])].into();
        assert!(VectorSpaceSystem::new(2, 2, bad).is_err());
    }
}
