//! LP bounds on the worst-case exponent: fractional vertex packing and edge
//! cover, the polymatroid relaxation with fd equalities and size budgets, and
//! the coloring lower bound.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use ratlp::{int, LowerBound, LpStatus, Rational, RationalLp, Relation, VarId};
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits::{DEFAULT_LATTICE_CAP, TOLERANCE};
use crate::relational::{effective_fds, AttrSet, Attribute, Database, FunctionalDependency, Query, Schema};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AgmCover,
    VertexPacking,
    Polymatroid,
    PolymatroidBudgeted,
    Coloring,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AgmCover => "agm_cover",
            Method::VertexPacking => "vertex_packing",
            Method::Polymatroid => "polymatroid",
            Method::PolymatroidBudgeted => "polymatroid_budgeted",
            Method::Coloring => "coloring",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// `w_R` per joined relation.
    EdgeWeights(BTreeMap<String, Rational>),
    /// `v_x` per attribute.
    VertexWeights(BTreeMap<Attribute, Rational>),
    /// `v_Y` per nonempty attribute set (`v_∅ = 0` is implicit).
    SetFunction(BTreeMap<AttrSet, Rational>),
    /// Weight per admissible color class; zero-weight classes are omitted.
    ColorClasses(BTreeMap<AttrSet, Rational>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub method: Method,
    pub value: Rational,
    pub certificate: Certificate,
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

fn set_key(s: &AttrSet) -> String {
    s.iter().map(Attribute::as_str).collect::<Vec<_>>().join(",")
}

impl Serialize for Certificate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<(String, String)> = match self {
            Certificate::EdgeWeights(m) => m.iter().map(|(k, v)| (k.clone(), format_rational(v))).collect(),
            Certificate::VertexWeights(m) => m.iter().map(|(k, v)| (k.to_string(), format_rational(v))).collect(),
            Certificate::SetFunction(m) | Certificate::ColorClasses(m) => {
                m.iter().map(|(k, v)| (set_key(k), format_rational(v))).collect()
            }
        };
        let mut map = serializer.serialize_map(Some(entries.len()))?;
        for (k, v) in entries {
            map.serialize_entry(&k, &v)?;
        }
        map.end()
    }
}

impl Serialize for BoundReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("method", self.method.name())?;
        map.serialize_entry("value", &format_rational(&self.value))?;
        map.serialize_entry("certificate", &self.certificate)?;
        map.end()
    }
}

/// Subsets of a sorted attribute list, indexed by bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    attrs: Vec<Attribute>,
}

impl Lattice {
    pub fn new(attrs: &AttrSet) -> Self {
        Lattice { attrs: attrs.iter().cloned().collect() }
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    pub fn full(&self) -> usize {
        (1usize << self.attrs.len()) - 1
    }

    pub fn bit(&self, a: &Attribute) -> usize {
        1 << self.attrs.binary_search(a).expect("attribute outside the lattice")
    }

    pub fn mask(&self, s: &AttrSet) -> usize {
        s.iter().map(|a| self.bit(a)).fold(0, |m, b| m | b)
    }

    pub fn set(&self, mask: usize) -> AttrSet {
        (0..self.attrs.len()).filter(|i| mask >> i & 1 == 1).map(|i| self.attrs[i].clone()).collect()
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded { what: "attribute lattice".into(), size: n, cap });
    }
    Ok(())
}

fn solved(lp: &RationalLp, what: &str) -> Result<ratlp::LpSolution> {
    let sol = lp.solve();
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        status => Err(Error::Solver(format!("{what} LP is {status:?}"))),
    }
}

/// Fractional vertex packing LP: `max Σ v_x` with `Σ_{x∈V(R)} v_x ≤ 1`.
pub fn vertex_packing_lp(schema: &Schema, q: &Query) -> RationalLp {
    let mut lp = RationalLp::maximize();
    let vars: BTreeMap<&Attribute, VarId> = q
        .variables()
        .iter()
        .map(|x| (x, lp.add_variable(format!("v_{x}"), LowerBound::Zero).unwrap()))
        .collect();
    for &v in vars.values() {
        lp.set_objective(v, int(1)).unwrap();
    }
    for r in q.joins() {
        lp.add_constraint(schema.relations()[r].iter().map(|x| (vars[x], int(1))), Relation::Le, int(1)).unwrap();
    }
    lp
}

/// Fractional edge cover LP: `min Σ w_R` with `Σ_{R∋x} w_R ≥ 1`.
pub fn edge_cover_lp(schema: &Schema, q: &Query) -> RationalLp {
    let mut lp = RationalLp::minimize();
    let vars: BTreeMap<&String, VarId> =
        q.joins().iter().map(|r| (r, lp.add_variable(format!("w_{r}"), LowerBound::Zero).unwrap())).collect();
    for &w in vars.values() {
        lp.set_objective(w, int(1)).unwrap();
    }
    for x in q.variables() {
        let terms = q.joins().iter().filter(|r| schema.relations()[*r].contains(x)).map(|r| (vars[r], int(1)));
        lp.add_constraint(terms, Relation::Ge, int(1)).unwrap();
    }
    lp
}

pub fn vertex_packing_bound(schema: &Schema, q: &Query) -> Result<BoundReport> {
    let lp = vertex_packing_lp(schema, q);
    let sol = solved(&lp, "vertex packing")?;
    let a = sol.assignment.as_ref().unwrap();
    let weights = q.variables().iter().cloned().zip(a.iter().cloned()).collect();
    Ok(BoundReport { method: Method::VertexPacking, value: sol.value.unwrap(), certificate: Certificate::VertexWeights(weights) })
}

pub fn edge_cover_bound(schema: &Schema, q: &Query) -> Result<BoundReport> {
    let lp = edge_cover_lp(schema, q);
    let sol = solved(&lp, "edge cover")?;
    let a = sol.assignment.as_ref().unwrap();
    let weights = q.joins().iter().cloned().zip(a.iter().cloned()).collect();
    Ok(BoundReport { method: Method::AgmCover, value: sol.value.unwrap(), certificate: Certificate::EdgeWeights(weights) })
}

/// The polymatroid LP over the subsets of `V(Q)`, one variable per nonempty
/// subset (index = bitmask − 1).
///
/// Rows: elemental monotonicity `v_{X−x} ≤ v_X`, elemental submodularity
/// `v_{K∪xy} + v_K ≤ v_{K∪x} + v_{K∪y}`, budgets `v_{V(R)} ≤ s_R`, and for
/// each fd `Z ↦ z` the row `v_{Z∪z} ≤ v_Z` (equality follows from monotonicity).
pub fn polymatroid_lp(
    schema: &Schema,
    fds: &[FunctionalDependency],
    q: &Query,
    budgets: Option<&BTreeMap<String, Rational>>,
    cap: usize,
) -> Result<(RationalLp, Lattice)> {
    check_cap(q.variables().len(), cap)?;
    if let Some(b) = budgets {
        if let Some((r, v)) = b.iter().find(|(_, v)| v.is_negative()) {
            return Err(Error::Invalid(format!("budget for `{r}` is negative ({})", format_rational(v))));
        }
        if let Some(r) = b.keys().find(|r| !schema.relations().contains_key(*r)) {
            return Err(Error::UnknownRelation(r.clone()));
        }
    }
    let lat = Lattice::new(q.variables());
    let n = lat.len();
    let full = lat.full();
    let mut lp = RationalLp::maximize();
    let vars: Vec<VarId> = (1..=full)
        .map(|m| lp.add_variable(format!("v[{}]", set_key(&lat.set(m))), LowerBound::Zero).unwrap())
        .collect();
    let var = |m: usize| -> Option<VarId> { (m != 0).then(|| vars[m - 1]) };
    let row = |lp: &mut RationalLp, plus: &[usize], minus: &[usize], rhs: Rational| {
        let terms = plus
            .iter()
            .filter_map(|&m| var(m).map(|v| (v, int(1))))
            .chain(minus.iter().filter_map(|&m| var(m).map(|v| (v, int(-1)))));
        lp.add_constraint(terms.collect::<Vec<_>>(), Relation::Le, rhs).unwrap();
    };

    for i in 0..n {
        row(&mut lp, &[full & !(1 << i)], &[full], Rational::zero());
    }
    for i in 0..n {
        for j in i + 1..n {
            let (bi, bj) = (1 << i, 1 << j);
            for k in 0..=full {
                if k & (bi | bj) != 0 {
                    continue;
                }
                row(&mut lp, &[k | bi | bj, k], &[k | bi, k | bj], Rational::zero());
            }
        }
    }
    for r in q.joins() {
        let budget = budgets.and_then(|b| b.get(r)).cloned().unwrap_or_else(Rational::one);
        row(&mut lp, &[lat.mask(&schema.relations()[r])], &[], budget);
    }
    for fd in effective_fds(schema, fds, q) {
        let z = lat.mask(&fd.lhs);
        row(&mut lp, &[z | lat.bit(&fd.rhs)], &[z], Rational::zero());
    }
    if let Some(v) = var(lat.mask(q.free())) {
        lp.set_objective(v, int(1)).unwrap();
    }
    Ok((lp, lat))
}

pub fn polymatroid_bound(
    schema: &Schema,
    fds: &[FunctionalDependency],
    q: &Query,
    budgets: Option<&BTreeMap<String, Rational>>,
) -> Result<BoundReport> {
    polymatroid_bound_capped(schema, fds, q, budgets, DEFAULT_LATTICE_CAP)
}

pub fn polymatroid_bound_capped(
    schema: &Schema,
    fds: &[FunctionalDependency],
    q: &Query,
    budgets: Option<&BTreeMap<String, Rational>>,
    cap: usize,
) -> Result<BoundReport> {
    let (lp, lat) = polymatroid_lp(schema, fds, q, budgets, cap)?;
    let sol = solved(&lp, "polymatroid")?;
    let a = sol.assignment.unwrap();
    let values = a.into_iter().enumerate().map(|(i, v)| (lat.set(i + 1), v)).collect();
    Ok(BoundReport {
        method: if budgets.is_some() { Method::PolymatroidBudgeted } else { Method::Polymatroid },
        value: sol.value.unwrap(),
        certificate: Certificate::SetFunction(values),
    })
}

/// Nonempty `S` such that every fd `Y ↦ x` with `x ∈ S` has `S ∩ Y ≠ ∅`.
pub fn is_admissible_class(s: &AttrSet, fds: &[FunctionalDependency]) -> bool {
    !s.is_empty() && fds.iter().all(|f| !s.contains(&f.rhs) || !f.lhs.is_disjoint(s))
}

/// Coloring LP over admissible color classes; returns the LP and the class of each variable.
pub fn coloring_lp(schema: &Schema, fds: &[FunctionalDependency], q: &Query, cap: usize) -> Result<(RationalLp, Vec<AttrSet>)> {
    check_cap(q.variables().len(), cap)?;
    let fds = effective_fds(schema, fds, q);
    let lat = Lattice::new(q.variables());
    let classes: Vec<AttrSet> =
        (1..=lat.full()).map(|m| lat.set(m)).filter(|s| is_admissible_class(s, &fds)).collect();
    let mut lp = RationalLp::maximize();
    let vars: Vec<VarId> = classes
        .iter()
        .map(|s| lp.add_variable(format!("w[{}]", set_key(s)), LowerBound::Zero).unwrap())
        .collect();
    for &v in &vars {
        lp.set_objective(v, int(1)).unwrap();
    }
    for r in q.joins() {
        let attrs = &schema.relations()[r];
        let terms: Vec<_> = classes.iter().zip(&vars).filter(|(s, _)| !s.is_disjoint(attrs)).map(|(_, v)| (*v, int(1))).collect();
        lp.add_constraint(terms, Relation::Le, int(1)).unwrap();
    }
    Ok((lp, classes))
}

pub fn coloring_bound(schema: &Schema, fds: &[FunctionalDependency], q: &Query) -> Result<BoundReport> {
    coloring_bound_capped(schema, fds, q, DEFAULT_LATTICE_CAP)
}

pub fn coloring_bound_capped(schema: &Schema, fds: &[FunctionalDependency], q: &Query, cap: usize) -> Result<BoundReport> {
    let (lp, classes) = coloring_lp(schema, fds, q, cap)?;
    let sol = solved(&lp, "coloring")?;
    let weights = classes
        .into_iter()
        .zip(sol.assignment.unwrap())
        .filter(|(_, w)| !w.is_zero())
        .collect();
    Ok(BoundReport { method: Method::Coloring, value: sol.value.unwrap(), certificate: Certificate::ColorClasses(weights) })
}

/// Integral coloring realizing a color-class certificate: weights are scaled
/// by their common denominator and class `S` receives that many fresh colors.
/// Colors are numbered from 0 in class order.
pub fn coloring_from_classes(weights: &BTreeMap<AttrSet, Rational>) -> BTreeMap<Attribute, Vec<usize>> {
    let denom = weights.values().fold(num_bigint::BigInt::one(), |d, w| d.lcm(w.denom()));
    let mut out: BTreeMap<Attribute, Vec<usize>> = BTreeMap::new();
    let mut next = 0usize;
    for (class, w) in weights {
        let copies = (w * Rational::from_integer(denom.clone())).to_integer().to_usize().expect("small color count");
        for _ in 0..copies {
            for a in class {
                out.entry(a.clone()).or_default().push(next);
            }
            next += 1;
        }
    }
    out
}

/// `C(Q,f)` for an explicit coloring (attributes missing from `f` get no colors).
/// `None` when no joined relation sees a color.
pub fn coloring_ratio(
    schema: &Schema,
    q: &Query,
    f: &BTreeMap<Attribute, Vec<usize>>,
) -> Option<Rational> {
    let colors_of = |attrs: &AttrSet| -> usize {
        let mut s: Vec<usize> = attrs.iter().filter_map(|a| f.get(a)).flatten().copied().collect();
        s.sort_unstable();
        s.dedup();
        s.len()
    };
    let total = colors_of(q.variables());
    let worst = q.joins().iter().map(|r| colors_of(&schema.relations()[r])).max().unwrap_or(0);
    (worst > 0).then(|| Rational::new(int(total as i64).to_integer(), int(worst as i64).to_integer()))
}

/// True iff `f(x) ⊆ ∪_{y∈Y} f(y)` for every fd `Y ↦ x`.
pub fn coloring_satisfies(f: &BTreeMap<Attribute, Vec<usize>>, fd: &FunctionalDependency) -> bool {
    let empty = Vec::new();
    let rhs = f.get(&fd.rhs).unwrap_or(&empty);
    rhs.iter().all(|c| fd.lhs.iter().any(|y| f.get(y).is_some_and(|cs| cs.contains(c))))
}

/// Exhaustive maximum of `C(Q,f)` over all fd-satisfying colorings with at
/// most `max_colors` colors. Zero when no coloring sees a color.
pub fn coloring_bound_oracle(
    schema: &Schema,
    fds: &[FunctionalDependency],
    q: &Query,
    max_colors: usize,
) -> Result<Rational> {
    let xs: Vec<&Attribute> = q.variables().iter().collect();
    if max_colors > 4 || xs.len() > 4 {
        return Err(Error::CapExceeded { what: "coloring oracle".into(), size: max_colors.max(xs.len()), cap: 4 });
    }
    let fds = effective_fds(schema, fds, q);
    let per = 1usize << max_colors;
    let total = per.pow(xs.len() as u32);
    let mut best = Rational::zero();
    for code in 0..total {
        let mut c = code;
        let mut f = BTreeMap::new();
        for x in &xs {
            let set = c % per;
            c /= per;
            f.insert((*x).clone(), (0..max_colors).filter(|b| set >> b & 1 == 1).collect::<Vec<_>>());
        }
        if !fds.iter().all(|fd| coloring_satisfies(&f, fd)) {
            continue;
        }
        if let Some(r) = coloring_ratio(schema, q, &f) {
            if r > best {
                best = r;
            }
        }
    }
    Ok(best)
}

/// `joinSize ≤ ∏_R |R(D)|^{w_R}`, compared in the log domain with relative
/// tolerance. The cover must be a feasible fractional edge cover of `q`.
pub fn weighted_product_bound(
    schema: &Schema,
    q: &Query,
    db: &Database,
    cover: &BTreeMap<String, Rational>,
    join_size: u128,
) -> Result<bool> {
    if let Some((r, _)) = cover.iter().find(|(r, w)| w.is_negative() || !q.joins().contains(*r)) {
        return Err(Error::Invalid(format!("cover weight for `{r}` is negative or not a joined relation")));
    }
    for x in q.variables() {
        let load: Rational = q
            .joins()
            .iter()
            .filter(|r| schema.relations()[*r].contains(x))
            .filter_map(|r| cover.get(r))
            .sum();
        if load < Rational::one() {
            return Err(Error::Invalid(format!("attribute `{x}` is covered with weight {}", format_rational(&load))));
        }
    }
    let mut log_bound = 0.0;
    for r in q.joins() {
        let size = db.table(r)?.len();
        let w = cover.get(r).cloned().unwrap_or_else(Rational::zero);
        if size == 0 {
            if !w.is_zero() {
                return Ok(join_size == 0);
            }
            // `0^0 = 1`; the join is still empty
            if join_size != 0 {
                return Ok(false);
            }
            continue;
        }
        log_bound += rational_to_f64(&w) * (size as f64).log2();
    }
    if join_size == 0 {
        return Ok(true);
    }
    let lhs = (join_size as f64).log2();
    Ok(lhs <= log_bound + TOLERANCE * log_bound.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::{Row, Schema};
    use ratlp::ratio;

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

    fn key_fds() -> Vec<FunctionalDependency> {
        vec![FunctionalDependency::of(&["y"], "x"), FunctionalDependency::of(&["y"], "z")]
    }

    #[test]
    fn triangle_bounds_are_three_halves() {
        let (s, q) = triangle();
        assert_eq!(vertex_packing_bound(&s, &q).unwrap().value, ratio(3, 2));
        let cover = edge_cover_bound(&s, &q).unwrap();
        assert_eq!(cover.value, ratio(3, 2));
        let Certificate::EdgeWeights(w) = &cover.certificate else { panic!() };
        assert!(w.values().all(|v| *v == ratio(1, 2)));
        assert_eq!(polymatroid_bound(&s, &[], &q, None).unwrap().value, ratio(3, 2));
        assert_eq!(coloring_bound(&s, &[], &q).unwrap().value, ratio(3, 2));
    }

    #[test]
    fn path_bounds() {
        let (s, q) = path();
        assert_eq!(vertex_packing_bound(&s, &q).unwrap().value, int(2));
        assert_eq!(polymatroid_bound(&s, &key_fds(), &q, None).unwrap().value, int(1));
        assert_eq!(coloring_bound(&s, &key_fds(), &q).unwrap().value, int(1));
    }

    #[test]
    fn single_relation_is_one_everywhere() {
        let s = Schema::from_relations(&[("R", &["a", "b", "c"])]).unwrap();
        let q = Query::all(&s);
        assert_eq!(vertex_packing_bound(&s, &q).unwrap().value, int(1));
        assert_eq!(edge_cover_bound(&s, &q).unwrap().value, int(1));
        assert_eq!(polymatroid_bound(&s, &[], &q, None).unwrap().value, int(1));
        assert_eq!(coloring_bound(&s, &[], &q).unwrap().value, int(1));
    }

    #[test]
    fn loomis_whitney_cover_uses_halves() {
        let s = Schema::from_relations(&[("A", &["y", "z"]), ("B", &["x", "z"]), ("C", &["x", "y"])]).unwrap();
        let cover = edge_cover_bound(&s, &Query::all(&s)).unwrap();
        assert_eq!(cover.value, ratio(3, 2));
    }

    #[test]
    fn zero_budgets_give_zero() {
        let (s, q) = triangle();
        let b: BTreeMap<String, Rational> = q.joins().iter().map(|r| (r.clone(), Rational::zero())).collect();
        let rep = polymatroid_bound(&s, &[], &q, Some(&b)).unwrap();
        assert_eq!(rep.method, Method::PolymatroidBudgeted);
        assert_eq!(rep.value, Rational::zero());
    }

    #[test]
    fn budgets_scale_the_bound() {
        let (s, q) = triangle();
        let b: BTreeMap<String, Rational> = q.joins().iter().map(|r| (r.clone(), int(2))).collect();
        assert_eq!(polymatroid_bound(&s, &[], &q, Some(&b)).unwrap().value, int(3));
        let neg: BTreeMap<String, Rational> = [("R".to_string(), int(-1))].into();
        assert!(polymatroid_bound(&s, &[], &q, Some(&neg)).is_err());
    }

    #[test]
    fn projected_objective_uses_free_variables() {
        let (s, _) = path();
        let q = Query::new(&s, ["R".to_string(), "S".to_string()].into(), Some(crate::attr_set(["x", "z"]))).unwrap();
        assert_eq!(polymatroid_bound(&s, &[], &q, None).unwrap().value, int(2));
        assert_eq!(polymatroid_bound(&s, &key_fds(), &q, None).unwrap().value, int(1));
    }

    #[test]
    fn certificates_resubstitute_exactly() {
        let (s, q) = path();
        let (lp, lat) = polymatroid_lp(&s, &key_fds(), &q, None, 12).unwrap();
        let rep = polymatroid_bound(&s, &key_fds(), &q, None).unwrap();
        let Certificate::SetFunction(v) = &rep.certificate else { panic!() };
        let a: Vec<Rational> = (1..=lat.full()).map(|m| v[&lat.set(m)].clone()).collect();
        assert!(lp.is_feasible(&a));
        assert_eq!(lp.objective_value(&a), rep.value);
    }

    #[test]
    fn literal_submodular_lp_is_unbounded_on_the_path() {
        // free variables for every subset including ∅, all-pairs submodularity
        // and budgets only; v = M·(1_x + 1_z − 1_y) is feasible for every M
        let (s, q) = path();
        let lat = Lattice::new(q.variables());
        let full = lat.full();
        let mut lp = RationalLp::maximize();
        let v: Vec<VarId> = (0..=full).map(|m| lp.add_variable(format!("v{m}"), LowerBound::Free).unwrap()).collect();
        for y in 0..=full {
            for z in 0..=full {
                lp.add_constraint(
                    [(v[y | z], int(1)), (v[y & z], int(1)), (v[y], int(-1)), (v[z], int(-1))],
                    Relation::Le,
                    Rational::zero(),
                )
                .unwrap();
            }
        }
        for r in q.joins() {
            lp.add_constraint([(v[lat.mask(&s.relations()[r])], int(1))], Relation::Le, int(1)).unwrap();
        }
        lp.set_objective(v[full], int(1)).unwrap();
        assert_eq!(lp.solve().status, LpStatus::Unbounded);
    }

    #[test]
    fn elemental_rows_match_full_monotonicity_and_submodularity() {
        let s = Schema::from_relations(&[("R", &["a", "b"]), ("S", &["b", "c"]), ("T", &["c", "d", "a"])]).unwrap();
        let q = Query::all(&s);
        let fds = vec![FunctionalDependency::of(&["b"], "c"), FunctionalDependency::of(&["c", "d"], "a")];
        let elemental = polymatroid_bound(&s, &fds, &q, None).unwrap().value;
        let (mut lp, lat) = polymatroid_lp(&s, &fds, &q, None, 12).unwrap();
        let full = lat.full();
        let var = |m: usize| lp.var(&format!("v[{}]", set_key(&lat.set(m)))).unwrap();
        let vars: Vec<Option<VarId>> = (0..=full).map(|m| (m != 0).then(|| var(m))).collect();
        for y in 0..=full {
            for z in 0..=full {
                let mut terms = Vec::new();
                for (m, c) in [(y | z, 1), (y & z, 1), (y, -1), (z, -1)] {
                    if let Some(v) = vars[m] {
                        terms.push((v, int(c)));
                    }
                }
                lp.add_constraint(terms, Relation::Le, Rational::zero()).unwrap();
                if y & z == y {
                    if let (Some(a), Some(b)) = (vars[y], vars[z]) {
                        lp.add_constraint([(a, int(1)), (b, int(-1))], Relation::Le, Rational::zero()).unwrap();
                    }
                }
            }
        }
        assert_eq!(lp.solve().value.unwrap(), elemental);
    }

    #[test]
    fn lattice_cap_is_enforced() {
        let names: Vec<String> = (0..13).map(|i| format!("a{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let s = Schema::from_relations(&[("R", &refs)]).unwrap();
        let q = Query::all(&s);
        assert!(matches!(polymatroid_bound(&s, &[], &q, None), Err(Error::CapExceeded { .. })));
        assert!(matches!(coloring_bound(&s, &[], &q), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn oracle_examples() {
        let (s, q) = triangle();
        assert_eq!(coloring_bound_oracle(&s, &[], &q, 3).unwrap(), ratio(3, 2));
        let (p, pq) = path();
        assert_eq!(coloring_bound_oracle(&p, &key_fds(), &pq, 2).unwrap(), int(1));
        let single = Schema::from_relations(&[("R", &["x"])]).unwrap();
        assert_eq!(coloring_bound_oracle(&single, &[], &Query::all(&single), 1).unwrap(), int(1));
    }

    #[test]
    fn certificate_coloring_attains_the_value() {
        let (s, q) = triangle();
        let rep = coloring_bound(&s, &[], &q).unwrap();
        let Certificate::ColorClasses(w) = &rep.certificate else { panic!() };
        let f = coloring_from_classes(w);
        assert_eq!(coloring_ratio(&s, &q, &f), Some(rep.value));
    }

    #[test]
    fn empty_lhs_fd_forbids_its_classes() {
        let s = Schema::from_relations(&[("R", &["x", "y"])]).unwrap();
        let fds = vec![FunctionalDependency::of(&[], "x")];
        assert!(!is_admissible_class(&crate::attr_set(["x", "y"]), &fds));
        assert!(is_admissible_class(&crate::attr_set(["y"]), &fds));
        assert_eq!(coloring_bound(&s, &fds, &Query::all(&s)).unwrap().value, int(1));
    }

    #[test]
    fn weighted_product_examples() {
        let (s, q) = triangle();
        let mut db = Database::empty(&s);
        for (r, (a, b)) in [("R", ("x", "y")), ("S", ("y", "z")), ("T", ("z", "x"))] {
            for i in 0..3 {
                for j in 0..3 {
                    db.insert(r, &Row::from_pairs([(a, i.to_string()), (b, j.to_string())])).unwrap();
                }
            }
        }
        let w: BTreeMap<String, Rational> = q.joins().iter().map(|r| (r.clone(), ratio(1, 2))).collect();
        assert!(weighted_product_bound(&s, &q, &db, &w, 27).unwrap());
        assert!(!weighted_product_bound(&s, &q, &db, &w, 28).unwrap());
        let thin: BTreeMap<String, Rational> = [("R".to_string(), ratio(1, 2))].into();
        assert!(weighted_product_bound(&s, &q, &db, &thin, 1).is_err());
        let empty = Database::empty(&s);
        assert!(weighted_product_bound(&s, &q, &empty, &w, 0).unwrap());
        assert!(!weighted_product_bound(&s, &q, &empty, &w, 1).unwrap());
    }

    #[test]
    fn reports_serialize_with_stable_keys() {
        let (s, q) = triangle();
        let json = serde_json::to_value(edge_cover_bound(&s, &q).unwrap()).unwrap();
        assert_eq!(json["method"], "agm_cover");
        assert_eq!(json["value"], "3/2");
        assert_eq!(json["certificate"]["R"], "1/2");
    }
}
