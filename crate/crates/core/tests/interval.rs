use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smabp::formula::{abp_to_formula, FormulaConfig};
use smabp::fullrank::{gen_fullrank, FullRankSpec, WMode};
use smabp::gen::{random_arc_program, IntervalParams};
use smabp::interval::{
    bichromatic_census, check_strict_circular_interval, find_interval_order, DEFAULT_SEARCH_BUDGET,
};
use smabp::partition::{partition_from_permutation, rank_under};
use smabp::{AbpBuilder, EqualityMode, Label, Permutation, PrimeField};

fn field() -> PrimeField {
    PrimeField::default()
}

/// `(1 + x1 x4)(1 + x2 x3) + w (1 + x1 x2)(1 + x3 x4)` with each factor
/// read inside its own nested block.
fn fullrank_n4_program(w: u64) -> smabp::Abp {
    let mut b = AbpBuilder::new(field(), 4);
    let s = b.source();
    let t_layer = 5;
    let (a1, a0) = (b.node(1), b.node(1));
    b.var_edge(s, a1, 1).const_edge(s, a0, 1);
    let mut ends = Vec::new();
    for (a, outer) in [(a1, true), (a0, false)] {
        let (m, m0, bb) = (b.node(2), b.node(2), b.node(3));
        b.var_edge(a, m, 2).const_edge(a, m0, 1).var_edge(m, bb, 3).const_edge(m0, bb, 1);
        let f = b.node(4);
        if outer {
            b.var_edge(bb, f, 4);
        } else {
            b.const_edge(bb, f, 1);
        }
        ends.push(f);
    }
    let c = b.node(1);
    b.edge(s, c, Label::Const(field().elem(w)));
    let (e, e0, d) = (b.node(2), b.node(2), b.node(3));
    b.var_edge(c, e, 1).const_edge(c, e0, 1).var_edge(e, d, 2).const_edge(e0, d, 1);
    let (h, h0) = (b.node(4), b.node(4));
    b.var_edge(d, h, 3).const_edge(d, h0, 1);
    let t = b.node(t_layer);
    b.var_edge(h, t, 4).const_edge(h0, t, 1);
    for f in ends {
        b.const_edge(f, t, 1);
    }
    b.build().unwrap()
}

#[test]
fn fullrank_n4_block_program_is_interval() {
    let w = 7;
    let p = fullrank_n4_program(w);
    let g = gen_fullrank(field(), &FullRankSpec { n: 4, w_mode: WMode::Explicit(BTreeMap::from([((1, 2, 4), field().elem(w))])) })
        .unwrap();
    assert!(p.poly().unwrap().equals(&g.poly, EqualityMode::Exact).unwrap());
    let q = p.normalize();
    let check = check_strict_circular_interval(&q, &Permutation::identity(4), DEFAULT_SEARCH_BUDGET).unwrap();
    assert!(check.strict, "{check:?}");
    assert!(find_interval_order(&q, DEFAULT_SEARCH_BUDGET).unwrap().is_some());
}

#[test]
fn three_node_crossing_counterexample() {
    // X_{s,a} = {x1, x3}, X_{a,t} = {x2, x5}: every pair of covers crosses.
    let mut b = AbpBuilder::new(field(), 6);
    let s = b.source();
    let (a, t) = (b.node(1), b.node(2));
    b.var_edge(s, a, 1).var_edge(s, a, 3).var_edge(a, t, 2).var_edge(a, t, 5);
    let p = b.build().unwrap();
    let check = check_strict_circular_interval(&p, &Permutation::identity(6), DEFAULT_SEARCH_BUDGET).unwrap();
    assert!(!check.strict);
    let w = check.witness.unwrap();
    assert_eq!(w.triple, [s, a, t]);
    assert_eq!(w.interval_ua.members, vec![1, 2, 3]);
    let json = serde_json::to_value(&w).unwrap();
    assert!(json.get("triple").is_some() && json.get("interval_ua").is_some() && json.get("interval_av").is_some());
}

#[test]
fn census_of_small_programs() {
    let chain = |vars: &[usize]| {
        let mut b = AbpBuilder::new(field(), 4);
        let mut prev = b.source();
        for (i, &v) in vars.iter().enumerate() {
            let x = b.node(i + 1);
            b.var_edge(prev, x, v);
            prev = x;
        }
        b.build().unwrap()
    };
    let pi = Permutation::identity(4);
    let mono = bichromatic_census(&chain(&[1, 2]), &pi, FormulaConfig::default()).unwrap();
    assert_eq!(mono.max_bichromatic, 0);
    let straddle = bichromatic_census(&chain(&[2, 3]), &pi, FormulaConfig::default()).unwrap();
    assert!((1..=2).contains(&straddle.max_bichromatic));
    assert!(straddle.holds);
}

#[test]
fn rank_is_bounded_by_parse_tree_skeleton() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    while checked < 40 {
        let n = 2 * rng.gen_range(2..=5);
        let pi = Permutation::random(n, &mut rng);
        let params = IntervalParams { nvars: n, components: rng.gen_range(1..=3), width: rng.gen_range(1..=2) };
        let p = random_arc_program(field(), &pi, params, &mut rng).unwrap();
        if !check_strict_circular_interval(&p, &pi, DEFAULT_SEARCH_BUDGET).unwrap().strict {
            continue;
        }
        let f = abp_to_formula(&p).unwrap();
        let rank = rank_under(&p.poly().unwrap(), &partition_from_permutation(&pi).unwrap()).unwrap() as u128;
        let bound = 2 * (1u128 << f.tau()) * f.parse_tree_count();
        assert!(rank <= bound, "rank {rank} > {bound}");
        checked += 1;
    }
}
