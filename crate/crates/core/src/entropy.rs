//! Rational-probability distributions over rows and their entropy vectors.
//!
//! Probabilities are exact rationals; entropies are `f64` bits. Anything that
//! must be decided exactly (fd checks, uniformity) is decided on the rationals.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use ratlp::Rational;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::bounds::{rational_to_f64, Lattice};
use crate::error::{Error, Result};
use crate::limits::{DEFAULT_ENTROPY_CAP, TOLERANCE};
use crate::measure::log2_big;
use crate::relational::{effective_fds, AttrSet, Attribute, FunctionalDependency, Query, Row, Schema, Table};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    attributes: AttrSet,
    support: Vec<Row>,
    probs: Vec<Rational>,
}

impl Distribution {
    /// Validates: rows distinct and over `attributes`, probabilities positive, sum exactly 1.
    pub fn new(attributes: AttrSet, support: Vec<Row>, probs: Vec<Rational>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::Invalid("support and probabilities differ in length".into()));
        }
        if support.is_empty() {
            return Err(Error::Invalid("empty support".into()));
        }
        if let Some(r) = support.iter().find(|r| r.attributes() != attributes) {
            return Err(Error::Invalid(format!("support row {r:?} is not over the distribution attributes")));
        }
        let mut seen = std::collections::BTreeSet::new();
        if !support.iter().all(|r| seen.insert(r)) {
            return Err(Error::Invalid("support rows are not distinct".into()));
        }
        if probs.iter().any(|p| !p.is_positive()) {
            return Err(Error::Invalid("probabilities must be positive".into()));
        }
        if probs.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::Invalid("probabilities do not sum to 1".into()));
        }
        Ok(Distribution { attributes, support, probs })
    }

    pub fn point_mass(row: Row) -> Self {
        Distribution { attributes: row.attributes(), support: vec![row], probs: vec![Rational::one()] }
    }

    pub fn attributes(&self) -> &AttrSet {
        &self.attributes
    }

    pub fn support(&self) -> &[Row] {
        &self.support
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Row, &Rational)> {
        self.support.iter().zip(&self.probs)
    }

    /// Least common denominator of the probabilities.
    pub fn common_denominator(&self) -> BigInt {
        use num_integer::Integer;
        self.probs.iter().fold(BigInt::one(), |d, p| d.lcm(p.denom()))
    }
}

/// `U[Y]`: distinct restrictions with summed probabilities, in sorted row order.
pub fn marginal(d: &Distribution, y: &AttrSet) -> Result<Distribution> {
    if !y.is_subset(&d.attributes) {
        return Err(Error::Invalid("marginal onto attributes outside the distribution".into()));
    }
    let mut acc: BTreeMap<Row, Rational> = BTreeMap::new();
    for (r, p) in d.iter() {
        *acc.entry(r.restrict(y)).or_insert_with(Rational::zero) += p;
    }
    let (support, probs) = acc.into_iter().unzip();
    Ok(Distribution { attributes: y.clone(), support, probs })
}

fn log2_rational(p: &Rational) -> f64 {
    let n = p.numer().to_biguint().expect("positive probability");
    let d = p.denom().to_biguint().expect("positive denominator");
    log2_big(&n) - log2_big(&d)
}

/// Shannon entropy in bits.
pub fn entropy_bits(d: &Distribution) -> f64 {
    let h: f64 = d.probs.iter().map(|p| -rational_to_f64(p) * log2_rational(p)).sum();
    h.max(0.0)
}

/// `Y ↦ H(U[Y])` over every subset of the distribution's attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyVector {
    lattice: Lattice,
    coords: Vec<f64>,
}

impl EntropyVector {
    pub fn get(&self, y: &AttrSet) -> f64 {
        self.coords[self.lattice.mask(y)]
    }

    pub fn by_mask(&self, mask: usize) -> f64 {
        self.coords[mask]
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coords(&self) -> BTreeMap<AttrSet, f64> {
        self.coords.iter().enumerate().map(|(m, h)| (self.lattice.set(m), *h)).collect()
    }

    /// Zero at ∅, monotone, and submodular for every pair of subsets, within `tol`.
    pub fn check_shannon(&self, tol: f64) -> std::result::Result<(), String> {
        if self.coords[0] != 0.0 {
            return Err("nonzero entropy of the empty set".into());
        }
        let full = self.lattice.full();
        for y in 0..=full {
            for z in 0..=full {
                let (hy, hz) = (self.coords[y], self.coords[z]);
                if y & z == y && hy > hz + tol {
                    return Err(format!("monotonicity fails at {:?} ⊆ {:?}", self.lattice.set(y), self.lattice.set(z)));
                }
                if self.coords[y | z] + self.coords[y & z] > hy + hz + tol {
                    return Err(format!("submodularity fails at {:?}, {:?}", self.lattice.set(y), self.lattice.set(z)));
                }
            }
        }
        Ok(())
    }
}

impl Serialize for EntropyVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.coords.len()))?;
        for (m, h) in self.coords.iter().enumerate() {
            let names: Vec<String> = self.lattice.set(m).iter().map(Attribute::to_string).collect();
            seq.serialize_element(&(names, h))?;
        }
        seq.end()
    }
}

pub fn entropy_vector(d: &Distribution) -> Result<EntropyVector> {
    entropy_vector_capped(d, DEFAULT_ENTROPY_CAP)
}

pub fn entropy_vector_capped(d: &Distribution, cap: usize) -> Result<EntropyVector> {
    let n = d.attributes.len();
    if n > cap {
        return Err(Error::CapExceeded { what: "entropy lattice".into(), size: n, cap });
    }
    let lattice = Lattice::new(&d.attributes);
    let coords = (0..=lattice.full())
        .map(|m| if m == 0 { Ok(0.0) } else { marginal(d, &lattice.set(m)).map(|mg| entropy_bits(&mg)) })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EntropyVector { lattice, coords })
}

fn fd_holds_on_support(d: &Distribution, fd: &FunctionalDependency) -> bool {
    let mut seen: BTreeMap<Row, &String> = BTreeMap::new();
    for r in &d.support {
        let v = r.get(&fd.rhs).expect("fd attribute in distribution");
        if let Some(prev) = seen.insert(r.restrict(&fd.lhs), v) {
            if prev != v {
                return false;
            }
        }
    }
    true
}

/// Whether `U` satisfies `fd`, decided on the support and cross-checked
/// against `H(U[Y]) = H(U[Y∪x])`.
///
/// # Panics
/// If the two answers disagree beyond the tolerance.
pub fn fd_holds_on_distribution(d: &Distribution, fd: &FunctionalDependency) -> Result<bool> {
    let all = fd.attributes();
    if !all.is_subset(&d.attributes) {
        return Err(Error::Invalid(format!("fd {fd} mentions attributes outside the distribution")));
    }
    let support_based = fd_holds_on_support(d, fd);
    let h_lhs = entropy_bits(&marginal(d, &fd.lhs)?);
    let h_all = entropy_bits(&marginal(d, &all)?);
    let entropy_based = (h_all - h_lhs).abs() <= TOLERANCE;
    assert_eq!(support_based, entropy_based, "support and entropy disagree on {fd}: H gap {}", h_all - h_lhs);
    Ok(support_based)
}

/// `H(U[free]) / max_R H(U[V(R)])`; `None` when the denominator is zero.
/// The distribution must cover `V(Q)` and satisfy every effective fd.
pub fn h_ratio(schema: &Schema, fds: &[FunctionalDependency], q: &Query, d: &Distribution) -> Result<Option<f64>> {
    if !q.variables().is_subset(&d.attributes) {
        return Err(Error::Invalid("distribution does not cover the query variables".into()));
    }
    for fd in effective_fds(schema, fds, q) {
        if !fd_holds_on_support(d, &fd) {
            return Err(Error::FdViolation { fd: fd.to_string(), location: "distribution support".into() });
        }
    }
    let num = entropy_bits(&marginal(d, q.free())?);
    let mut den: f64 = 0.0;
    for r in q.joins() {
        den = den.max(entropy_bits(&marginal(d, &schema.relations()[r])?));
    }
    Ok((den > TOLERANCE).then(|| num / den))
}

pub fn uniform_on_table(t: &Table) -> Result<Distribution> {
    if t.is_empty() {
        return Err(Error::Invalid("uniform distribution on an empty table".into()));
    }
    let p = Rational::new(BigInt::one(), BigInt::from(t.len()));
    Ok(Distribution { attributes: t.attribute_set(), support: t.rows().collect(), probs: vec![p; t.len()] })
}

/// Rounds real probabilities to multiples of `1/q` on the same support.
///
/// Largest-remainder rounding of the normalized input (ties by support
/// order); any entry rounded to zero then takes one unit from the largest
/// entry, so the support and hence the satisfied fds are preserved.
pub fn rationalize_distribution(attributes: AttrSet, support: Vec<Row>, probs: &[f64], q: u64) -> Result<Distribution> {
    let n = probs.len();
    if n != support.len() || n == 0 {
        return Err(Error::Invalid("support and probabilities differ in length or are empty".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(Error::Invalid("probabilities must be positive and finite".into()));
    }
    if (q as usize) < n {
        return Err(Error::Invalid(format!("denominator {q} cannot keep {n} support points positive")));
    }
    let total: f64 = probs.iter().sum();
    let scaled: Vec<f64> = probs.iter().map(|p| p / total * q as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (scaled[a] - scaled[a].floor(), scaled[b] - scaled[b].floor());
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(q.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    for i in 0..n {
        if counts[i] == 0 {
            let donor = (0..n).filter(|&j| counts[j] > 1).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)));
            let donor = donor.ok_or_else(|| Error::Invalid("no entry can donate a unit".into()))?;
            counts[donor] -= 1;
            counts[i] = 1;
        }
    }
    let probs = counts.iter().map(|&c| Rational::new(BigInt::from(c), BigInt::from(q))).collect();
    Distribution::new(attributes, support, probs)
}

/// Two-stage variable on a join result: pick a projected row uniformly, then
/// a preimage uniformly. Its marginal on `free` is exactly uniform.
pub fn two_stage_distribution(t: &Table, free: &AttrSet) -> Result<Distribution> {
    if t.is_empty() {
        return Err(Error::Invalid("two-stage distribution on an empty table".into()));
    }
    let rows: Vec<Row> = t.rows().collect();
    let mut mult: BTreeMap<Row, u64> = BTreeMap::new();
    for r in &rows {
        *mult.entry(r.restrict(free)).or_default() += 1;
    }
    let groups = BigInt::from(mult.len());
    let probs = rows
        .iter()
        .map(|r| Rational::new(BigInt::one(), &groups * BigInt::from(mult[&r.restrict(free)])))
        .collect();
    Distribution::new(t.attribute_set(), rows, probs)
}

/// Exact uniformity check of a distribution.
pub fn is_uniform(d: &Distribution) -> bool {
    d.probs.windows(2).all(|w| w[0] == w[1])
}

/// Number of rows `k·p_r` a row receives when the distribution is blown up to `k` rows.
pub fn multiplicities(d: &Distribution, k: u64) -> Result<Vec<u64>> {
    d.probs
        .iter()
        .map(|p| {
            let c = p * Rational::from_integer(BigInt::from(k));
            if c.is_integer() {
                Ok(c.to_integer().to_u64().expect("row count fits"))
            } else {
                Err(Error::InvalidConstruction(format!("k = {k} is not a multiple of the common denominator")))
            }
        })
        .collect()
}

pub(crate) fn big_factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}
