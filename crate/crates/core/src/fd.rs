//! Closure combinatorics of functional dependency sets: closures, spanning
//! sets, widths, minimal components and the layered (iterative) decomposition.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::relational::{AttrSet, Attribute, FunctionalDependency};

/// Smallest superset of `start` closed under `fds`.
pub fn fd_closure(start: &AttrSet, fds: &[FunctionalDependency]) -> AttrSet {
    let mut closed = start.clone();
    let mut pending: Vec<&FunctionalDependency> = fds.iter().filter(|f| !closed.contains(&f.rhs)).collect();
    loop {
        let before = pending.len();
        pending.retain(|f| {
            if f.lhs.is_subset(&closed) {
                closed.insert(f.rhs.clone());
                false
            } else {
                !closed.contains(&f.rhs)
            }
        });
        if pending.len() == before {
            return closed;
        }
    }
}

pub fn spans(s: &AttrSet, fds: &[FunctionalDependency], universe: &AttrSet) -> bool {
    fd_closure(s, fds).is_superset(universe)
}

/// Lexicographically first spanning set of minimum size (subsets are
/// enumerated by cardinality, then in sorted attribute order).
pub fn minimal_spanning_set(fds: &[FunctionalDependency], universe: &AttrSet) -> AttrSet {
    let attrs: Vec<&Attribute> = universe.iter().collect();
    for size in 0..=attrs.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let s: AttrSet = idx.iter().map(|&i| attrs[i].clone()).collect();
            if spans(&s, fds, universe) {
                return s;
            }
            if !next_combination(&mut idx, attrs.len()) {
                break;
            }
        }
    }
    unreachable!("the universe spans itself")
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Size of the smallest spanning set of `universe`.
pub fn width(fds: &[FunctionalDependency], universe: &AttrSet) -> usize {
    minimal_spanning_set(fds, universe).len()
}

/// Restricts `fds` to `universe`: attributes outside it are deleted from
/// left-hand sides and fds whose right-hand side lies outside are dropped.
pub fn restrict_fds(fds: &[FunctionalDependency], universe: &AttrSet) -> Vec<FunctionalDependency> {
    let mut out: Vec<FunctionalDependency> = fds
        .iter()
        .filter(|f| universe.contains(&f.rhs))
        .map(|f| FunctionalDependency::new(f.lhs.intersection(universe).cloned().collect(), f.rhs.clone()))
        .filter(|f| !f.is_trivial())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// `F[C]`: the fds lying entirely inside `c`.
pub fn fds_within(fds: &[FunctionalDependency], c: &AttrSet) -> Vec<FunctionalDependency> {
    fds.iter().filter(|f| f.lhs.is_subset(c) && c.contains(&f.rhs)).cloned().collect()
}

/// Component predicate: every fd whose left side meets `c` has its right side in `c`.
pub fn is_component(c: &AttrSet, fds: &[FunctionalDependency]) -> bool {
    fds.iter().all(|f| f.lhs.is_disjoint(c) || c.contains(&f.rhs))
}

/// Smallest component containing `a`: reachability along `y → x` for each
/// `y ∈ Y` of an fd `Y ↦ x`. Empty-lhs fds contribute no edges.
fn reach(a: &Attribute, fds: &[FunctionalDependency]) -> AttrSet {
    let mut seen: AttrSet = [a.clone()].into();
    let mut stack = vec![a.clone()];
    while let Some(y) = stack.pop() {
        for f in fds {
            if f.lhs.contains(&y) && seen.insert(f.rhs.clone()) {
                stack.push(f.rhs.clone());
            }
        }
    }
    seen
}

/// Inclusion-minimal nonempty components of `universe` under `fds`
/// (restricted to `universe`), in sorted order.
pub fn minimal_components(fds: &[FunctionalDependency], universe: &AttrSet) -> Vec<AttrSet> {
    let fds = restrict_fds(fds, universe);
    let reaches: BTreeSet<AttrSet> = universe.iter().map(|a| reach(a, &fds)).collect();
    let minimal: Vec<AttrSet> = reaches
        .iter()
        .filter(|c| !reaches.iter().any(|d| d != *c && d.is_subset(c)))
        .cloned()
        .collect();
    // distinct minimal components are disjoint: their intersection would be a smaller component
    for (i, c) in minimal.iter().enumerate() {
        for d in &minimal[i + 1..] {
            assert!(c.is_disjoint(d), "overlapping minimal components {c:?} and {d:?}");
        }
    }
    minimal
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Layer {
    /// Attributes still present when this layer was computed.
    pub universe: AttrSet,
    /// Fds restricted to `universe`.
    pub residual_fds: Vec<FunctionalDependency>,
    pub components: Vec<AttrSet>,
    /// Per component: the lexicographically first minimum spanning set of `F[C]`.
    pub spanning_sets: Vec<AttrSet>,
}

impl Layer {
    pub fn width(&self) -> usize {
        self.spanning_sets.iter().map(BTreeSet::len).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentDecomposition {
    pub layers: Vec<Layer>,
}

impl ComponentDecomposition {
    pub fn iterative_width(&self) -> usize {
        self.layers.iter().map(Layer::width).max().unwrap_or(0)
    }
}

/// Peels minimal components layer by layer until no attribute is left.
pub fn decompose(fds: &[FunctionalDependency], universe: &AttrSet) -> ComponentDecomposition {
    let mut layers = Vec::new();
    let mut rest = universe.clone();
    let mut current = restrict_fds(fds, &rest);
    while !rest.is_empty() {
        let components = minimal_components(&current, &rest);
        let spanning_sets = components.iter().map(|c| minimal_spanning_set(&fds_within(&current, c), c)).collect();
        let before = rest.clone();
        for a in components.iter().flatten() {
            rest.remove(a);
        }
        let next = restrict_fds(&current, &rest);
        layers.push(Layer { universe: before, residual_fds: current, components, spanning_sets });
        current = next;
    }
    ComponentDecomposition { layers }
}

pub fn iterative_width(fds: &[FunctionalDependency], universe: &AttrSet) -> (usize, ComponentDecomposition) {
    let d = decompose(fds, universe);
    (d.iterative_width(), d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::attr_set;

    fn fd(l: &[&str], r: &str) -> FunctionalDependency {
        FunctionalDependency::of(l, r)
    }

    fn cycle() -> Vec<FunctionalDependency> {
        vec![fd(&["x"], "y"), fd(&["y"], "z"), fd(&["z"], "x")]
    }

    fn pairs() -> Vec<FunctionalDependency> {
        vec![fd(&["x", "y"], "z"), fd(&["y", "z"], "x"), fd(&["x", "z"], "y")]
    }

    #[test]
    fn closure_examples() {
        let xyz = attr_set(["x", "y", "z"]);
        assert_eq!(fd_closure(&attr_set(["x"]), &cycle()), xyz);
        assert!(fd_closure(&AttrSet::new(), &[fd(&["x"], "y")]).is_empty());
        assert_eq!(fd_closure(&attr_set(["y"]), &[fd(&["x"], "y")]), attr_set(["y"]));
        assert_eq!(fd_closure(&AttrSet::new(), &[fd(&[], "y")]), attr_set(["y"]));
    }

    #[test]
    fn spans_examples() {
        let xyz = attr_set(["x", "y", "z"]);
        assert!(spans(&attr_set(["x"]), &cycle(), &xyz));
        assert!(spans(&xyz, &pairs(), &xyz));
        assert!(!spans(&AttrSet::new(), &[], &attr_set(["x"])));
    }

    #[test]
    fn width_examples() {
        let xyz = attr_set(["x", "y", "z"]);
        assert_eq!(width(&pairs(), &xyz), 2);
        assert_eq!(width(&[], &attr_set(["x", "y"])), 2);
        assert_eq!(width(&cycle(), &xyz), 1);
        assert_eq!(minimal_spanning_set(&pairs(), &xyz), attr_set(["x", "y"]));
    }

    #[test]
    fn minimal_component_examples() {
        assert_eq!(minimal_components(&[], &attr_set(["x", "y"])), vec![attr_set(["x"]), attr_set(["y"])]);
        let xyz = attr_set(["x", "y", "z"]);
        assert_eq!(minimal_components(&cycle(), &xyz), vec![xyz.clone()]);
        assert_eq!(minimal_components(&pairs(), &xyz), vec![xyz]);
    }

    #[test]
    fn empty_lhs_fds_never_absorb() {
        let comps = minimal_components(&[fd(&[], "x")], &attr_set(["x", "y"]));
        assert_eq!(comps, vec![attr_set(["x"]), attr_set(["y"])]);
    }

    #[test]
    fn chain_components_sit_at_the_sink() {
        // y ↦ x: {x} is a component, {y} is not ({y} must absorb x)
        let comps = minimal_components(&[fd(&["y"], "x")], &attr_set(["x", "y"]));
        assert_eq!(comps, vec![attr_set(["x"])]);
        let (w, d) = iterative_width(&[fd(&["y"], "x")], &attr_set(["x", "y"]));
        assert_eq!(w, 1);
        assert_eq!(d.layers.len(), 2);
        assert_eq!(d.layers[1].components, vec![attr_set(["y"])]);
    }

    #[test]
    fn iterative_width_examples() {
        let xyz = attr_set(["x", "y", "z"]);
        assert_eq!(iterative_width(&[], &xyz).0, 1);
        assert_eq!(iterative_width(&cycle(), &xyz).0, 1);
        assert_eq!(iterative_width(&pairs(), &xyz).0, 2);
        let (_, d) = iterative_width(&pairs(), &xyz);
        assert_eq!(d.layers.len(), 1);
        assert_eq!(d.layers[0].universe, xyz);
    }

    #[test]
    fn layers_partition_the_universe() {
        let u = attr_set(["a", "b", "c", "d"]);
        let fds = vec![fd(&["a"], "b"), fd(&["c", "d"], "a")];
        let d = decompose(&fds, &u);
        let mut all = AttrSet::new();
        for l in &d.layers {
            for c in &l.components {
                assert!(c.iter().all(|a| all.insert(a.clone())));
            }
        }
        assert_eq!(all, u);
    }
}
