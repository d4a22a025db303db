mod common;

use std::collections::BTreeMap;

use common::{names, random_distribution, random_fd_instance, random_fds, random_hypergraph, rng};
use fdjoin::bounds::{coloring_bound, polymatroid_bound, rational_to_f64};
use fdjoin::entropy::{entropy_vector, fd_holds_on_distribution, is_uniform, marginal, two_stage_distribution};
use fdjoin::eval::{join_baseline, join_components, project_bag_count};
use fdjoin::fd::{decompose, fd_closure, is_component, minimal_components};
use fdjoin::io::{parse_database_str, serialize_database};
use fdjoin::limits::TOLERANCE;
use fdjoin::{check_fd, power_database, AttrSet, FunctionalDependency};
use proptest::prelude::*;
use ratlp::int;

fn subsets(universe: &AttrSet) -> Vec<AttrSet> {
    let v: Vec<_> = universe.iter().cloned().collect();
    (0..1usize << v.len()).map(|m| (0..v.len()).filter(|i| m >> i & 1 == 1).map(|i| v[i].clone()).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_extensive_idempotent_monotone_and_closed(seed in any::<u64>()) {
        let mut r = rng(seed);
        let attrs = names(5);
        let fds = random_fds(&mut r, &attrs, 6);
        let universe: AttrSet = attrs.iter().cloned().collect();
        for s in subsets(&universe) {
            let c = fd_closure(&s, &fds);
            prop_assert!(c.is_superset(&s));
            prop_assert_eq!(&fd_closure(&c, &fds), &c);
            prop_assert!(fds.iter().all(|f| !f.lhs.is_subset(&c) || c.contains(&f.rhs)));
            for a in &universe {
                let mut t = s.clone();
                t.insert(a.clone());
                prop_assert!(fd_closure(&t, &fds).is_superset(&c));
            }
        }
    }

    #[test]
    fn minimal_components_are_minimal_disjoint_components(seed in any::<u64>()) {
        let mut r = rng(seed);
        let attrs = names(5);
        let fds = random_fds(&mut r, &attrs, 6);
        let universe: AttrSet = attrs.iter().cloned().collect();
        let comps = minimal_components(&fds, &universe);
        prop_assert!(!comps.is_empty());
        let brute: Vec<AttrSet> = subsets(&universe).into_iter().filter(|s| !s.is_empty() && is_component(s, &fds)).collect();
        for c in &comps {
            prop_assert!(is_component(c, &fds));
            prop_assert!(brute.iter().all(|d| d == c || !d.is_subset(c)));
        }
        for d in &brute {
            // every component contains some minimal one
            prop_assert!(comps.iter().any(|c| c.is_subset(d)));
        }
        let layers = decompose(&fds, &universe).layers;
        let covered: Vec<_> = layers.iter().flat_map(|l| l.components.iter().flatten()).cloned().collect();
        prop_assert_eq!(covered.len(), universe.len());
        prop_assert_eq!(covered.into_iter().collect::<AttrSet>(), universe);
    }

    #[test]
    fn power_database_preserves_fds_and_scales_sizes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_fd_instance(&mut r, 4, 6);
        let p = power_database(&inst.db, 2, 1_000_000).unwrap();
        for fd in &inst.fds {
            prop_assert_eq!(check_fd(&inst.db, fd), check_fd(&p, fd));
        }
        for (name, t) in inst.db.tables() {
            prop_assert_eq!(p.table(name).unwrap().len(), t.len() * t.len());
        }
        let j = join_baseline(&inst.schema, &inst.query, &inst.db).unwrap().len();
        let jp = join_baseline(&inst.schema, &inst.query, &p).unwrap().len();
        prop_assert_eq!(jp, j * j);
    }

    #[test]
    fn evaluator_matches_baseline(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_fd_instance(&mut r, 5, 20);
        let base = join_baseline(&inst.schema, &inst.query, &inst.db).unwrap();
        let (comp, stats) = join_components(&inst.schema, &inst.fds, &inst.query, &inst.db).unwrap();
        prop_assert_eq!(&base, &comp);
        prop_assert!(stats.iterative_width <= inst.schema.attributes().len());
        let free: AttrSet = inst.schema.attributes().iter().take(2).cloned().collect();
        let (_, total) = project_bag_count(&base, &free).unwrap();
        prop_assert_eq!(total as usize, base.len());
    }

    #[test]
    fn database_serialization_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_fd_instance(&mut r, 4, 10);
        let text = serialize_database(&inst.db);
        prop_assert_eq!(parse_database_str(&text, &inst.schema).unwrap().db, inst.db);
    }

    #[test]
    fn entropy_vectors_are_polymatroids(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = random_distribution(&mut r, 4);
        let h = entropy_vector(&d).unwrap();
        prop_assert!(h.check_shannon(TOLERANCE).is_ok());
        let attrs: Vec<_> = d.attributes().iter().cloned().collect();
        for x in &attrs {
            let lhs: AttrSet = attrs.iter().filter(|a| *a != x).take(1).cloned().collect();
            fd_holds_on_distribution(&d, &FunctionalDependency::new(lhs, x.clone())).unwrap();
        }
    }

    #[test]
    fn two_stage_marginal_is_uniform(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_fd_instance(&mut r, 4, 12);
        let join = join_baseline(&inst.schema, &inst.query, &inst.db).unwrap();
        prop_assume!(!join.is_empty());
        let free: AttrSet = inst.schema.attributes().iter().take(1).cloned().collect();
        let d = two_stage_distribution(&join, &free).unwrap();
        prop_assert!(is_uniform(&marginal(&d, &free).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounds_are_monotone_and_ordered(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (schema, q) = random_hypergraph(&mut r, 4, 4);
        let attrs: Vec<_> = schema.attributes().to_vec();
        let fds = random_fds(&mut r, &attrs, 3);
        let free = polymatroid_bound(&schema, &[], &q, None).unwrap().value;
        let keyed = polymatroid_bound(&schema, &fds, &q, None).unwrap().value;
        prop_assert!(keyed <= free);
        let color = coloring_bound(&schema, &fds, &q).unwrap().value;
        prop_assert!(color <= keyed, "coloring {} > polymatroid {}", color, keyed);
        let budgets: BTreeMap<String, _> = q.joins().iter().map(|rel| (rel.clone(), int(2))).collect();
        let doubled = polymatroid_bound(&schema, &fds, &q, Some(&budgets)).unwrap().value;
        prop_assert_eq!(doubled, keyed * int(2));
        prop_assert!(rational_to_f64(&color) >= 0.0);
    }
}
