use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smabp::abp::AbpJson;
use smabp::decompose::decompose;
use smabp::formula::{abp_to_formula, abp_to_formula_with, FormulaConfig, SharingMode};
use smabp::gen::{random_l_ordered, random_smabp, OrderedParams, SmabpParams};
use smabp::interval::{overlaps, CircularInterval};
use smabp::{Abp, EqualityMode, MultilinearPoly, Permutation, PrimeField, VarSet};

fn field() -> PrimeField {
    PrimeField::default()
}

fn smabp(seed: u64, n: usize, nodes: usize) -> Abp {
    random_smabp(field(), SmabpParams::new(n, nodes), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn same(a: &MultilinearPoly, b: &MultilinearPoly) -> bool {
    a.equals(b, EqualityMode::Exact).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_preserves_polynomial(seed in any::<u64>(), n in 1usize..8, nodes in 2usize..30) {
        let p = smabp(seed, n, nodes);
        let q = p.normalize();
        prop_assert!(same(&p.poly().unwrap(), &q.poly().unwrap()));
        prop_assert!(q.is_syntactic_multilinear().multilinear);
        prop_assert_eq!(q.normalize(), q);
    }

    #[test]
    fn subprogram_vars_match_path_union(seed in any::<u64>(), n in 1usize..8, nodes in 2usize..20) {
        let p = smabp(seed, n, nodes);
        let (s, t) = (p.source(), p.sink());
        let mut union = VarSet::EMPTY;
        for path in p.enumerate_paths(s, t, 1_000_000).unwrap() {
            union = union.union(VarSet::from_vars(p.path_vars(&path)));
        }
        prop_assert_eq!(p.subprogram_vars(s, t).unwrap(), union);
    }

    #[test]
    fn summand_factors_are_variable_disjoint(seed in any::<u64>(), n in 1usize..10, nodes in 3usize..30) {
        let p = smabp(seed, n, nodes).normalize();
        prop_assume!(!p.subprogram_vars(p.source(), p.sink()).unwrap().is_empty());
        let d = decompose(&p, p.source(), p.sink()).unwrap();
        for s in &d.summands {
            let left = s.left.vars().union(s.label.vars());
            prop_assert!(left.is_disjoint(s.right.vars()));
        }
    }

    #[test]
    fn ordered_checks_agree(seed in any::<u64>(), n in 2usize..6, l in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = OrderedParams { nvars: n, orders: l, width: 2, perturbations: 6 };
        let (p, orders) = random_l_ordered(field(), params, &mut rng).unwrap();
        prop_assert!(p.check_ordered_exhaustive(&orders).unwrap().ordered);
        prop_assert!(p.check_ordered_dp(&orders).unwrap().ordered);
        // A single unrelated order usually fails; both checkers must agree.
        let other = smabp::OrderList::new(vec![Permutation::reversed(n)]).unwrap();
        prop_assert_eq!(
            p.check_ordered_exhaustive(&other).unwrap().ordered,
            p.check_ordered_dp(&other).unwrap().ordered
        );
    }

    #[test]
    fn tree_and_dag_formulas_agree(seed in any::<u64>(), n in 1usize..10, nodes in 2usize..30) {
        let p = smabp(seed, n, nodes);
        let tree = abp_to_formula(&p).unwrap();
        let dag = abp_to_formula_with(&p, FormulaConfig { sharing: SharingMode::Dag, ..FormulaConfig::default() }).unwrap();
        prop_assert!(same(&tree.poly().unwrap(), &dag.poly().unwrap()));
        prop_assert_eq!(tree.max_nonconstant_leaves(), dag.max_nonconstant_leaves());
        prop_assert!(dag.gate_count() <= tree.gate_count());
    }

    #[test]
    fn abp_json_round_trips(seed in any::<u64>(), n in 1usize..8, nodes in 2usize..20) {
        let p = smabp(seed, n, nodes);
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back: AbpJson = serde_json::from_str(&text).unwrap();
        let q = Abp::from_json(&back).unwrap();
        prop_assert_eq!(serde_json::to_string(&q.to_json()).unwrap(), text);
        prop_assert_eq!(q, p);
    }

    #[test]
    fn overlap_is_symmetric_and_irreflexive(n in 4usize..10, s1 in 1usize..10, l1 in 0usize..10, s2 in 1usize..10, l2 in 0usize..10) {
        prop_assume!(s1 <= n && s2 <= n && l1 <= n && l2 <= n);
        let pi = std::sync::Arc::new(Permutation::identity(n));
        let a = CircularInterval::new(pi.clone(), s1, l1).unwrap();
        let b = CircularInterval::new(pi, s2, l2).unwrap();
        prop_assert_eq!(overlaps(&a, &b).unwrap(), overlaps(&b, &a).unwrap());
        prop_assert!(!overlaps(&a, &a).unwrap());
    }
}

#[test]
fn parse_tree_values_sum_to_formula() {
    for seed in 0..30 {
        let p = smabp(seed, 6, 14);
        let f = abp_to_formula(&p).unwrap();
        let mut sum = MultilinearPoly::zero(field(), 6);
        for tree in f.parse_trees(1_000_000) {
            sum = sum.add(&tree.unwrap().value(&f).unwrap()).unwrap();
        }
        assert!(same(&sum, &p.poly().unwrap()), "seed {seed}");
        assert_eq!(f.parse_trees(1_000_000).count() as u128, f.parse_tree_count());
    }
}
