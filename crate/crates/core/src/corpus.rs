//! The acceptance corpus: seeded instance families and the nine checks run
//! over them. Shared by the `corpus` subcommand and the acceptance tests.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abp::Abp;
use crate::decompose::{decompose, verify_decomposition};
use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};
use crate::formula::{abp_to_formula_with, ceil_sqrt, depth_bound, flatten_depth4, FormulaConfig};
use crate::fullrank::fullrank_rank_check;
use crate::gen::{random_arc_program, random_l_ordered, random_smabp, IntervalParams, OrderedParams, SmabpParams};
use crate::interval::{bichromatic_census, check_strict_circular_interval, DEFAULT_SEARCH_BUDGET};
use crate::ordered::{order_to_pass, roabp_leaf_census, verify_band_claim};
use crate::partition::{rank_under, sample_partition_with, Side};
use crate::perm::{OrderList, Permutation};
use crate::poly::{EqualityMode, MultilinearPoly, VarSet};

/// Failures kept verbatim per criterion; the rest are only counted.
const KEPT_FAILURES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    pub prime: u64,
    pub gate_budget: u64,
    /// Cap on enumerated parse trees (depth-4 flattening) and paths.
    pub tree_budget: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 20_240_601,
            prime: crate::field::DEFAULT_PRIME,
            gate_budget: crate::formula::DEFAULT_GATE_BUDGET,
            tree_budget: 1_000_000,
        }
    }
}

impl CorpusConfig {
    fn field(&self) -> Result<PrimeField> {
        PrimeField::new(self.prime)
    }

    fn formula(&self) -> FormulaConfig {
        FormulaConfig { gate_budget: self.gate_budget, ..FormulaConfig::default() }
    }

    fn rng(&self, criterion: u8) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ (u64::from(criterion) << 56))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub instances: usize,
    pub failed_instances: usize,
    pub failures: Vec<String>,
    /// Summary statistics, `key=value` pairs.
    pub stats: Vec<(String, String)>,
    pub elapsed_ms: u128,
    pub time_limit_ms: Option<u128>,
}

impl CriterionResult {
    /// One human-readable line.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let limit = self.time_limit_ms.map_or(String::new(), |l| format!(" (limit {l} ms)"));
        let stats: Vec<String> = self.stats.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let mut line = format!(
            "criterion {} [{}] {verdict}: {}/{} instances ok, {} ms{limit}",
            self.id,
            self.name,
            self.instances - self.failed_instances,
            self.instances,
            self.elapsed_ms,
        );
        if !stats.is_empty() {
            line.push_str("; ");
            line.push_str(&stats.join(" "));
        }
        if let Some(first) = self.failures.first() {
            line.push_str("; first failure: ");
            line.push_str(first);
        }
        line
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub config: CorpusConfig,
    pub results: Vec<CriterionResult>,
    pub passed: bool,
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "full-rank polynomial"),
    (2, "decomposition soundness"),
    (3, "formula construction"),
    (4, "depth-4 reduction"),
    (5, "order-to-pass"),
    (6, "ROABP leaf census"),
    (7, "bichromatic bound"),
    (8, "rank properties"),
    (9, "DP vs path enumeration"),
];

pub fn run_all(cfg: &CorpusConfig) -> Result<CorpusReport> {
    let results = CRITERIA.iter().map(|&(id, _)| run_criterion(id, cfg)).collect::<Result<Vec<_>>>()?;
    let passed = results.iter().all(|r| r.passed);
    Ok(CorpusReport { config: *cfg, results, passed })
}

pub fn run_criterion(id: u8, cfg: &CorpusConfig) -> Result<CriterionResult> {
    let field = cfg.field()?;
    let mut t = Tally::default();
    let start = Instant::now();
    let limit_s: Option<u128> = match id {
        1 => {
            fullrank_checks(field, cfg, &mut t)?;
            Some(60)
        }
        2 => {
            decomposition_checks(field, cfg, &mut t)?;
            Some(30)
        }
        3 => {
            formula_checks(field, cfg, &mut t)?;
            Some(60)
        }
        4 => {
            depth4_checks(field, cfg, &mut t)?;
            Some(60)
        }
        5 => {
            order_to_pass_checks(field, cfg, &mut t)?;
            Some(60)
        }
        6 => {
            census_checks(field, cfg, &mut t)?;
            None
        }
        7 => {
            bichromatic_checks(field, cfg, &mut t)?;
            Some(60)
        }
        8 => {
            rank_property_checks(field, cfg, &mut t)?;
            Some(30)
        }
        9 => {
            path_oracle_checks(field, cfg, &mut t)?;
            None
        }
        _ => return Err(Error::Validation(format!("no criterion {id}"))),
    };
    let elapsed_ms = start.elapsed().as_millis();
    let time_limit_ms = limit_s.map(|s| s * 1000);
    let in_time = time_limit_ms.is_none_or(|l| elapsed_ms < l);
    let name = CRITERIA[usize::from(id) - 1].1.to_string();
    Ok(CriterionResult {
        id,
        name,
        passed: t.failed == 0 && t.instances > 0 && in_time,
        instances: t.instances,
        failed_instances: t.failed,
        failures: t.failures,
        stats: t.stats,
        elapsed_ms,
        time_limit_ms,
    })
}

#[derive(Default)]
struct Tally {
    instances: usize,
    failed: usize,
    failures: Vec<String>,
    stats: Vec<(String, String)>,
}

impl Tally {
    /// Records one instance; `Err` outcomes count as failures.
    fn record(&mut self, label: impl FnOnce() -> String, outcome: Result<Option<String>>) {
        self.instances += 1;
        let problem = match outcome {
            Ok(None) => return,
            Ok(Some(why)) => why,
            Err(e) => format!("error: {e}"),
        };
        self.failed += 1;
        if self.failures.len() < KEPT_FAILURES {
            self.failures.push(format!("{}: {problem}", label()));
        }
    }

    fn stat(&mut self, key: &str, value: impl ToString) {
        self.stats.push((key.to_string(), value.to_string()));
    }
}

fn fail_unless(ok: bool, why: impl FnOnce() -> String) -> Option<String> {
    (!ok).then(why)
}

fn fullrank_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let mut retries = 0;
    for n in [2usize, 4, 6, 8, 12] {
        let report = fullrank_rank_check(field, n, 50, 10, cfg.seed.wrapping_add(n as u64));
        if let Ok(r) = &report {
            retries += r.attempts.len() - 1;
        }
        t.record(
            || format!("n={n}"),
            report.map(|r| {
                fail_unless(r.passed, || {
                    let last = r.attempts.last().expect("at least one attempt");
                    let low = last.sampled_ranks.iter().chain(&last.permutation_ranks).min().copied().unwrap_or(0);
                    format!("rank {low} < {}", r.expected_rank)
                })
            }),
        );
    }
    t.stat("reseeds", retries);
    Ok(())
}

/// A random smABP passed through normalization, regenerated until it
/// reads at least one variable and has at most `max_nodes` nodes.
fn normalized_smabp(field: PrimeField, n: usize, max_nodes: usize, rng: &mut ChaCha8Rng) -> Result<Abp> {
    loop {
        let nodes = rng.gen_range(3..=max_nodes * 2 / 3);
        let p = random_smabp(field, SmabpParams::new(n, nodes), rng)?.normalize();
        if p.node_count() <= max_nodes && !p.subprogram_vars(p.source(), p.sink())?.is_empty() {
            return Ok(p);
        }
    }
}

fn decomposition_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let mut rng = cfg.rng(2);
    let mut crossing = 0;
    for i in 0..200 {
        let n = rng.gen_range(1..=12);
        let p = normalized_smabp(field, n, 60, &mut rng)?;
        let outcome = (|| {
            let d = decompose(&p, p.source(), p.sink())?;
            crossing += d.e_rb.len() + d.e_gb.len();
            let c = verify_decomposition(&p, &d)?;
            Ok(fail_unless(c.ok(), || format!("{c:?}")))
        })();
        t.record(|| format!("instance {i} (n={n}, {} nodes)", p.node_count()), outcome);
    }
    t.stat("crossing_edges", crossing);
    Ok(())
}

fn formula_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let mut rng = cfg.rng(3);
    let (mut worst_leaves, mut worst_depth_ratio) = (0u64, 0f64);
    for i in 0..100 {
        let n = rng.gen_range(1..=16);
        let nodes = rng.gen_range(3..=60);
        let p = random_smabp(field, SmabpParams::new(n, nodes), &mut rng)?;
        let outcome = (|| {
            let f = abp_to_formula_with(&p, cfg.formula())?;
            let tau = ceil_sqrt(n);
            let leaves = f.max_nonconstant_leaves();
            worst_leaves = worst_leaves.max(leaves);
            worst_depth_ratio = worst_depth_ratio.max(f.depth() as f64 / depth_bound(n));
            if !f.poly()?.equals(&p.poly()?, EqualityMode::Exact)? {
                return Ok(Some("formula computes a different polynomial".into()));
            }
            if f.max_leaf_arity() > tau {
                return Ok(Some(format!("leaf with {} variables > {tau}", f.max_leaf_arity())));
            }
            if !f.is_syntactic_multilinear() {
                return Ok(Some("formula is not syntactic multilinear".into()));
            }
            Ok(fail_unless(leaves <= 3 * tau as u64, || format!("parse tree with {leaves} leaves > {}", 3 * tau)))
        })();
        t.record(|| format!("instance {i} (n={n}, {} nodes)", p.node_count()), outcome);
    }
    t.stat("max_leaves", worst_leaves);
    t.stat("max_depth_over_bound", format!("{worst_depth_ratio:.2}"));
    Ok(())
}

fn depth4_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let mut rng = cfg.rng(4);
    let mut max_products = 0usize;
    for i in 0..50 {
        let n = rng.gen_range(1..=12);
        let nodes = rng.gen_range(3..=16);
        let p = random_smabp(field, SmabpParams::new(n, nodes), &mut rng)?;
        let outcome = (|| {
            let f = abp_to_formula_with(&p, cfg.formula())?;
            let d4 = flatten_depth4(&f, cfg.tree_budget)?;
            max_products = max_products.max(d4.products.len());
            let tau = ceil_sqrt(n);
            if !d4.poly()?.equals(&p.poly()?, EqualityMode::Exact)? {
                return Ok(Some("depth-4 form computes a different polynomial".into()));
            }
            if d4.max_factors() > 3 * tau {
                return Ok(Some(format!("{} factors > {}", d4.max_factors(), 3 * tau)));
            }
            Ok(fail_unless(d4.max_factor_arity() <= tau, || format!("factor arity {} > {tau}", d4.max_factor_arity())))
        })();
        t.record(|| format!("instance {i} (n={n}, {} nodes)", p.node_count()), outcome);
    }
    t.stat("max_products", max_products);
    Ok(())
}

/// The L-ordered corpus shared by criteria 5 and 6.
fn ordered_corpus(field: PrimeField, cfg: &CorpusConfig) -> Result<Vec<(Abp, OrderList)>> {
    let mut rng = cfg.rng(5);
    (0..100)
        .map(|_| {
            let orders = rng.gen_range(1..=4);
            let nvars = rng.gen_range(if orders > 2 { 3 } else { 2 }..=10);
            let width = rng.gen_range(1..=2);
            let perturbations = rng.gen_range(0..=8);
            random_l_ordered(field, OrderedParams { nvars, orders, width, perturbations }, &mut rng)
        })
        .collect()
}

fn order_to_pass_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let corpus = ordered_corpus(field, cfg)?;
    let mut fallback = 0;
    for (i, (p, orders)) in corpus.iter().enumerate() {
        let l = orders.len();
        let outcome = (|| {
            let out = order_to_pass(p, orders)?;
            fallback += out.fallback_routes;
            if !out.q.poly()?.equals(&p.poly()?, EqualityMode::Exact)? {
                return Ok(Some("output computes a different polynomial".into()));
            }
            match out.q.classify().l_pass {
                Some(lp) if lp.passes <= l => {}
                other => return Ok(Some(format!("not {l}-pass: {other:?}"))),
            }
            if out.non_padding_nodes() > l * p.node_count() {
                return Ok(Some(format!("{} nodes > {l}·{}", out.non_padding_nodes(), p.node_count())));
            }
            let claim = verify_band_claim(p, &out.q, &out.mapping)?;
            Ok(fail_unless(claim.holds, || format!("band identity fails at {:?}", claim.failures)))
        })();
        t.record(|| format!("instance {i} (L={l}, n={}, {} nodes)", p.nvars(), p.node_count()), outcome);
    }
    t.stat("fallback_routes", fallback);
    Ok(())
}

fn census_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let corpus = ordered_corpus(field, cfg)?;
    let mut worst = 0;
    for (i, (p, orders)) in corpus.iter().enumerate() {
        let outcome = roabp_leaf_census(p, orders, cfg.formula()).map(|c| {
            worst = worst.max(c.max_non_roabp);
            fail_unless(c.holds, || format!("{} non-ROABP leaves > {}", c.max_non_roabp, c.bound))
        });
        t.record(|| format!("instance {i} (L={}, n={})", orders.len(), p.nvars()), outcome);
    }
    t.stat("max_non_roabp_leaves", worst);
    Ok(())
}

fn bichromatic_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let mut rng = cfg.rng(7);
    let (mut tried, mut worst) = (0, 0);
    while t.instances < 60 && tried < 2_000 {
        tried += 1;
        let n = 2 * rng.gen_range(2..=6);
        let pi = Permutation::random(n, &mut rng);
        let params = IntervalParams { nvars: n, components: rng.gen_range(1..=3), width: rng.gen_range(1..=2) };
        let p = random_arc_program(field, &pi, params, &mut rng)?;
        match check_strict_circular_interval(&p, &pi, DEFAULT_SEARCH_BUDGET) {
            Ok(c) if c.strict => {}
            Ok(_) | Err(Error::BudgetExceeded { .. }) => continue,
            Err(e) => return Err(e),
        }
        let outcome = bichromatic_census(&p, &pi, cfg.formula()).map(|c| {
            worst = worst.max(c.max_bichromatic);
            fail_unless(c.holds, || format!("{} bichromatic leaves > 2", c.max_bichromatic))
        });
        t.record(|| format!("n={n}, π={:?}", pi.as_slice()), outcome);
    }
    t.stat("candidates", tried);
    t.stat("max_bichromatic", worst);
    Ok(())
}

/// A random multilinear polynomial with monomials drawn from `support`.
pub fn random_poly<R: Rng + ?Sized>(
    field: PrimeField,
    n: usize,
    support: VarSet,
    terms: usize,
    rng: &mut R,
) -> Result<MultilinearPoly> {
    let vars = support.to_vec();
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mono: Vec<usize> = vars.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        out.push((mono, field.from_i64(rng.gen_range(-3..=3))));
    }
    MultilinearPoly::from_terms(field, n, out)
}

fn rank_property_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let mut rng = cfg.rng(8);
    for i in 0..500 {
        let n = 2 * rng.gen_range(1..=4);
        let phi = sample_partition_with(n, &mut rng)?;
        let all = VarSet::full(n);
        let outcome = (|| {
            let f = random_poly(field, n, all, rng.gen_range(1..=12), &mut rng)?;
            let g = random_poly(field, n, all, rng.gen_range(1..=12), &mut rng)?;
            let (rf, rg, rs) = (rank_under(&f, &phi)?, rank_under(&g, &phi)?, rank_under(&f.add(&g)?, &phi)?);
            Ok(fail_unless(rs <= rf + rg, || format!("rank(f+g)={rs} > {rf}+{rg}")))
        })();
        t.record(|| format!("subadditivity {i}"), outcome);
    }
    for i in 0..500 {
        let n = 2 * rng.gen_range(1..=4);
        let phi = sample_partition_with(n, &mut rng)?;
        let mut vars: Vec<usize> = (1..=n).collect();
        vars.shuffle(&mut rng);
        let cut = rng.gen_range(0..=n);
        let (a, b) = (VarSet::from_vars(vars[..cut].iter().copied()), VarSet::from_vars(vars[cut..].iter().copied()));
        let outcome = (|| {
            let f = random_poly(field, n, a, rng.gen_range(1..=8), &mut rng)?;
            let g = random_poly(field, n, b, rng.gen_range(1..=8), &mut rng)?;
            let (rf, rg, rp) = (rank_under(&f, &phi)?, rank_under(&g, &phi)?, rank_under(&f.mul(&g)?, &phi)?);
            Ok(fail_unless(rp == rf * rg, || format!("rank(fg)={rp} ≠ {rf}·{rg}")))
        })();
        t.record(|| format!("multiplicativity {i}"), outcome);
    }
    for i in 0..500 {
        let n = 2 * rng.gen_range(1..=4);
        let phi = sample_partition_with(n, &mut rng)?;
        let pick = |side: Side, rng: &mut ChaCha8Rng| {
            VarSet::from_vars(phi.vars_on(side).iter().filter(|_| rng.gen_bool(0.5)).collect::<Vec<_>>())
        };
        let (y1, z1) = (pick(Side::Y, &mut rng), pick(Side::Z, &mut rng));
        let outcome = (|| {
            let f = random_poly(field, n, y1.union(z1), rng.gen_range(1..=16), &mut rng)?;
            let r = rank_under(&f, &phi)?;
            let bound = 1usize << y1.len().min(z1.len());
            Ok(fail_unless(r <= bound, || format!("rank {r} > 2^min({}, {})", y1.len(), z1.len())))
        })();
        t.record(|| format!("support bound {i}"), outcome);
    }
    Ok(())
}

/// Sum of path weights over every `u → v` path.
pub fn path_sum(p: &Abp, u: u32, v: u32, cap: u64) -> Result<MultilinearPoly> {
    let mut acc = MultilinearPoly::zero(p.field(), p.nvars());
    for path in p.enumerate_paths(u, v, cap)? {
        acc = acc.add(&p.path_weight(&path)?)?;
    }
    if u == v {
        acc = MultilinearPoly::constant(p.field(), p.nvars(), Fe::ONE);
    }
    Ok(acc)
}

fn path_oracle_checks(field: PrimeField, cfg: &CorpusConfig, t: &mut Tally) -> Result<()> {
    let mut rng = cfg.rng(9);
    let mut pairs = 0;
    for i in 0..200 {
        let n = rng.gen_range(1..=10);
        let nodes = rng.gen_range(2..=30);
        let p = random_smabp(field, SmabpParams::new(n, nodes), &mut rng)?;
        let ids = p.node_ids().to_vec();
        let mut queries = vec![(p.source(), p.sink())];
        for _ in 0..3 {
            queries.push((*ids.choose(&mut rng).expect("nodes"), *ids.choose(&mut rng).expect("nodes")));
        }
        let outcome = (|| {
            for &(u, v) in &queries {
                let (lu, lv) = (p.layer_of(u)?, p.layer_of(v)?);
                let (u, v) = if lu <= lv { (u, v) } else { (v, u) };
                pairs += 1;
                let dp = p.subprogram_poly(u, v)?;
                if !dp.equals(&path_sum(&p, u, v, cfg.tree_budget)?, EqualityMode::Exact)? {
                    return Ok(Some(format!("[{u},{v}] differs from its path sum")));
                }
            }
            Ok(None)
        })();
        t.record(|| format!("instance {i} (n={n}, {} nodes)", p.node_count()), outcome);
    }
    t.stat("pairs", pairs);
    Ok(())
}
