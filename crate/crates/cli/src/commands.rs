use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use smabp::corpus::{run_criterion, CorpusConfig, CRITERIA};
use smabp::decompose::{decompose, verify_decomposition};
use smabp::formula::{abp_to_formula_with, ceil_sqrt, depth_bound, flatten_depth4, FormulaConfig};
use smabp::fullrank::{gen_fullrank, FullRankSpec, WMode};
use smabp::gen::{random_l_ordered, random_smabp, OrderedParams, SmabpParams};
use smabp::interval::{check_strict_circular_interval, find_interval_order, DEFAULT_SEARCH_BUDGET};
use smabp::ordered::{order_to_pass, verify_band_claim};
use smabp::partition::{partition_from_permutation, rank_under, sample_partition_with, Partition, Side};
use smabp::{Abp, EqualityMode, Error, OrderList, PrimeField};

use crate::io::{parse_orders, parse_perm, read_poly, read_program, ProgramFile};
use crate::{CheckKind, Command, Failure, GenKind, GlobalOpts, Outcome, Pass};

type Res = Result<Outcome, Failure>;

pub fn config_json(cmd: &Command, g: &GlobalOpts) -> Value {
    let input = match cmd {
        Command::Transform { input, .. } | Command::Rank { input, .. } | Command::Check { input, .. } => {
            Some(input.display().to_string())
        }
        _ => None,
    };
    json!({
        "seed": g.seed,
        "prime": g.prime,
        "budget_gates": g.budget_gates,
        "budget_trees": g.budget_trees,
        "input": input,
        "out": g.out.as_ref().map(|p| p.display().to_string()),
    })
}

pub fn run(cmd: &Command, g: &GlobalOpts) -> Res {
    match cmd {
        Command::Gen { kind } => gen(kind, g),
        Command::Transform { pass, input, orders } => {
            let (p, file_orders) = read_program(input)?;
            let orders = match orders {
                Some(s) => Some(parse_orders(s)?),
                None => file_orders,
            };
            transform(*pass, &p, orders, g)
        }
        Command::Rank { input, samples, from_permutation, explicit, expect_rank } => {
            let f = read_poly(input)?;
            let n = f.nvars();
            let partitions: Vec<Partition> = if let Some(s) = from_permutation {
                vec![partition_from_permutation(&parse_perm(s)?)?]
            } else if let Some(s) = explicit {
                vec![parse_partition(s)?]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
                (0..*samples).map(|_| sample_partition_with(n, &mut rng)).collect::<Result<_, _>>()?
            };
            rank(&f, &partitions, *expect_rank)
        }
        Command::Check { kind, input, orders, passes, pi } => {
            let (p, file_orders) = read_program(input)?;
            check(*kind, &p, orders.as_deref(), file_orders, *passes, pi.as_deref())
        }
        Command::Corpus { criterion } => corpus(*criterion, g),
    }
}

fn field(g: &GlobalOpts) -> Result<PrimeField, Failure> {
    Ok(PrimeField::new(g.prime)?)
}

fn gen(kind: &GenKind, g: &GlobalOpts) -> Res {
    let field = field(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let (summary, body) = match *kind {
        GenKind::Fullrank { n } => {
            let out = gen_fullrank(field, &FullRankSpec { n, w_mode: WMode::Random(g.seed) })?;
            (format!("full-rank polynomial, n={n}, {} terms", out.poly.num_terms()), to_value(&out.to_json()))
        }
        GenKind::RandomSmabp { n, nodes, orders: None, .. } => {
            let p = random_smabp(field, SmabpParams::new(n, nodes), &mut rng)?;
            (format!("random smABP, n={n}, {} nodes", p.node_count()), to_value(&ProgramFile::Plain(p.to_json())))
        }
        GenKind::RandomSmabp { n, orders: Some(l), width, nodes } => {
            let perturbations = nodes / 2;
            let (p, orders) = random_l_ordered(field, OrderedParams { nvars: n, orders: l, width, perturbations }, &mut rng)?;
            let file = ProgramFile::WithOrders {
                abp: p.to_json(),
                orders: orders.iter().map(|o| o.as_slice().to_vec()).collect(),
            };
            (format!("random {l}-ordered smABP, n={n}, {} nodes", p.node_count()), to_value(&file))
        }
    };
    Ok(Outcome { passed: true, summary, body })
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("artifact serializes")
}

fn formula_config(g: &GlobalOpts) -> FormulaConfig {
    FormulaConfig { gate_budget: g.budget_gates, ..FormulaConfig::default() }
}

fn same_poly(a: &Abp, b: &smabp::MultilinearPoly) -> Result<bool, Failure> {
    Ok(a.poly()?.equals(b, EqualityMode::Exact)?)
}

fn transform(pass: Pass, p: &Abp, orders: Option<OrderList>, g: &GlobalOpts) -> Res {
    let n = p.nvars();
    let tau = ceil_sqrt(n);
    match pass {
        Pass::Decompose => {
            let d = decompose(p, p.source(), p.sink())?;
            let check = verify_decomposition(p, &d)?;
            let passed = check.ok();
            let summary = format!(
                "decompose: {} red-blue + {} green-blue edges, verified={passed}",
                d.e_rb.len(),
                d.e_gb.len()
            );
            Ok(Outcome { passed, summary, body: json!({ "pass": pass, "equality": "exact", "report": d.report(check) }) })
        }
        Pass::ToFormula => {
            let f = abp_to_formula_with(p, formula_config(g))?;
            let exact = same_poly(p, &f.poly()?)?;
            let leaves = f.max_nonconstant_leaves();
            let report = json!({
                "equality": "exact",
                "equivalent": exact,
                "tau": tau,
                "max_leaf_arity": f.max_leaf_arity(),
                "max_parse_tree_leaves": leaves,
                "leaf_bound": 3 * tau,
                "depth": f.depth(),
                "depth_bound": depth_bound(n),
                "gates": f.gate_count(),
                "parse_trees": f.parse_tree_count().to_string(),
                "syntactic_multilinear": f.is_syntactic_multilinear(),
            });
            let passed = exact && f.max_leaf_arity() <= tau && leaves <= 3 * tau as u64 && f.is_syntactic_multilinear();
            let summary = format!("to-formula: {} gates, depth {}, max leaves {leaves}, ok={passed}", f.gate_count(), f.depth());
            Ok(Outcome { passed, summary, body: json!({ "pass": pass, "artifact": f.to_json(), "report": report }) })
        }
        Pass::ToDepth4 => {
            let f = abp_to_formula_with(p, formula_config(g))?;
            let d4 = flatten_depth4(&f, g.budget_trees)?;
            let exact = same_poly(p, &d4.poly()?)?;
            let report = json!({
                "equality": "exact",
                "equivalent": exact,
                "products": d4.products.len(),
                "max_factors": d4.max_factors(),
                "factor_bound": 3 * tau,
                "max_factor_arity": d4.max_factor_arity(),
                "arity_bound": tau,
                "factors_disjoint": d4.factors_disjoint(),
            });
            let passed = exact && d4.max_factors() <= 3 * tau && d4.max_factor_arity() <= tau;
            let summary = format!(
                "to-depth4: {} products, max {} factors of arity ≤ {}, ok={passed}",
                d4.products.len(),
                d4.max_factors(),
                d4.max_factor_arity()
            );
            Ok(Outcome { passed, summary, body: json!({ "pass": pass, "artifact": d4.to_json(), "report": report }) })
        }
        Pass::OrderToPass => {
            let orders = orders.ok_or_else(|| Error::Validation("order-to-pass needs --orders or an input with orders".into()))?;
            let l = orders.len();
            let out = order_to_pass(p, &orders)?;
            let exact = same_poly(&out.q, &p.poly()?)?;
            let passes = out.q.classify().l_pass.map(|lp| lp.passes);
            let claim = verify_band_claim(p, &out.q, &out.mapping)?;
            let size_ok = out.non_padding_nodes() <= l * p.node_count();
            let passed = exact && passes.is_some_and(|k| k <= l) && size_ok && claim.holds;
            let report = json!({
                "equality": "exact",
                "equivalent": exact,
                "passes": passes,
                "orders": l,
                "non_padding_nodes": out.non_padding_nodes(),
                "size_bound": l * p.node_count(),
                "band_claim": claim,
                "fallback_routes": out.fallback_routes,
            });
            let shown = passes.map_or("not oblivious".to_string(), |k| format!("{k}-pass"));
            let summary = format!("order-to-pass: {shown}, {} nodes, ok={passed}", out.q.node_count());
            let artifact = json!({ "abp": out.q.to_json(), "mapping": out.mapping_json() });
            Ok(Outcome { passed, summary, body: json!({ "pass": pass, "artifact": artifact, "report": report }) })
        }
    }
}

fn parse_partition(s: &str) -> Result<Partition, Failure> {
    let assign = s
        .split(',')
        .map(|t| {
            let t = t.trim();
            let side = match t.chars().next() {
                Some('y') => Side::Y,
                Some('z') => Side::Z,
                _ => return Err(Failure::from(Error::Parse(format!("bad partition label {t:?}")))),
            };
            let idx = t[1..].parse::<usize>().map_err(|e| Error::Parse(format!("bad partition label {t:?}: {e}")))?;
            Ok((side, idx))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Partition::new(assign)?)
}

fn rank(f: &smabp::MultilinearPoly, partitions: &[Partition], expect: Option<usize>) -> Res {
    // Parallel map; results keep the partition order.
    let ranks: Vec<usize> = partitions.par_iter().map(|phi| rank_under(f, phi)).collect::<Result<_, _>>()?;
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in &ranks {
        *histogram.entry(r).or_default() += 1;
    }
    let (min, max) = (ranks.iter().min().copied(), ranks.iter().max().copied());
    let passed = expect.is_none_or(|e| ranks.iter().all(|&r| r == e));
    let rows: Vec<Value> =
        partitions.iter().zip(&ranks).map(|(phi, r)| json!({ "partition": phi.labels(), "rank": r })).collect();
    let summary = match (min, max) {
        (Some(lo), Some(hi)) => format!("rank over {} partitions: min {lo}, max {hi}", ranks.len()),
        _ => "rank: no partitions".to_string(),
    };
    let body = json!({
        "nvars": f.nvars(),
        "ranks": rows,
        "min": min,
        "max": max,
        "histogram": histogram,
        "expected": expect,
    });
    Ok(Outcome { passed, summary, body })
}

fn check(
    kind: CheckKind,
    p: &Abp,
    orders: Option<&str>,
    file_orders: Option<OrderList>,
    passes: usize,
    pi: Option<&str>,
) -> Res {
    let path_json = |path: &[usize]| json!({ "nodes": p.path_nodes(path), "vars": p.path_vars(path) });
    match kind {
        CheckKind::Smabp => {
            let c = p.is_syntactic_multilinear();
            let witness = c.witness.as_deref().map(path_json);
            let summary = format!("syntactic multilinear: {}", c.multilinear);
            Ok(Outcome {
                passed: c.multilinear,
                summary,
                body: json!({ "kind": kind, "passed": c.multilinear, "repeated_var": c.repeated_var, "witness": witness }),
            })
        }
        CheckKind::Roabp | CheckKind::LPass => {
            let ml = p.is_syntactic_multilinear().multilinear;
            let c = p.classify();
            let limit = if kind == CheckKind::Roabp { 1 } else { passes };
            let found = c.l_pass.as_ref().map(|lp| lp.passes);
            let passed = ml && found.is_some_and(|k| k <= limit);
            let shown = found.map_or("none".to_string(), |k| k.to_string());
            let summary = format!("{limit}-pass: {passed} (oblivious={}, passes={shown})", c.oblivious);
            Ok(Outcome { passed, summary, body: json!({ "kind": kind, "passed": passed, "multilinear": ml, "classification": c }) })
        }
        CheckKind::Ordered => {
            let orders = match orders {
                Some(s) => parse_orders(s)?,
                None => file_orders.ok_or_else(|| Error::Validation("ordered check needs --orders".into()))?,
            };
            let c = p.check_ordered(&orders)?;
            let witness = c.witness.as_deref().map(path_json);
            let summary = format!("ordered by {} orders: {}", orders.len(), c.ordered);
            Ok(Outcome { passed: c.ordered, summary, body: json!({ "kind": kind, "passed": c.ordered, "witness": witness }) })
        }
        CheckKind::CircularInterval => {
            let perm = match pi {
                Some(s) => Some(parse_perm(s)?),
                None => find_interval_order(p, DEFAULT_SEARCH_BUDGET)?,
            };
            let Some(perm) = perm else {
                let summary = "strict circular-interval: false for every order".to_string();
                return Ok(Outcome { passed: false, summary, body: json!({ "kind": kind, "passed": false, "pi": null }) });
            };
            let c = check_strict_circular_interval(p, &perm, DEFAULT_SEARCH_BUDGET)?;
            let summary = format!("strict circular-interval under {:?}: {}", perm.as_slice(), c.strict);
            Ok(Outcome {
                passed: c.strict,
                summary,
                body: json!({ "kind": kind, "passed": c.strict, "pi": perm.as_slice(), "witness": c.witness, "assignment": c.assignment }),
            })
        }
    }
}

fn corpus(criterion: Option<u8>, g: &GlobalOpts) -> Res {
    let cfg = CorpusConfig { seed: g.seed, prime: g.prime, gate_budget: g.budget_gates, tree_budget: g.budget_trees };
    let ids: Vec<u8> = match criterion {
        Some(id) => vec![id],
        None => CRITERIA.iter().map(|&(id, _)| id).collect(),
    };
    let results = ids.into_iter().map(|id| run_criterion(id, &cfg)).collect::<Result<Vec<_>, _>>()?;
    let passed = results.iter().all(|r| r.passed);
    let summary = results.iter().map(|r| r.line()).collect::<Vec<_>>().join("\n");
    Ok(Outcome { passed, summary, body: json!({ "passed": passed, "results": results }) })
}
