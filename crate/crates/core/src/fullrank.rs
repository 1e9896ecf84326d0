//! The recursively defined polynomial whose partial derivative matrix has
//! full rank under every balanced partition.
//!
//! `g_{i,j} = 1` on an empty interval and otherwise
//! `g_{i,j} = (1 + x_i x_j) g_{i+1,j-1} + Σ_k w_{i,k,j} g_{i,k} g_{k+1,j}`
//! with `k` over `[i+1, j-2]` such that `k - i + 1` is even. The `w` are
//! independent indeterminates; here they are replaced by field elements.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};
use crate::partition::{partition_from_permutation, rank_under, sample_partition_with, Partition};
use crate::perm::Permutation;
use crate::poly::{MultilinearPoly, PolyJson, VarSet};

/// Largest supported `n`.
pub const MAX_FULLRANK_VARS: usize = 20;

/// Default cap on the number of terms of any intermediate `g_{i,j}`.
pub const DEFAULT_TERM_BUDGET: u64 = 10_000_000;

pub type WKey = (usize, usize, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WMode {
    /// Each `w_{i,k,j}` drawn uniformly from `F_p` by a seeded generator.
    Random(u64),
    /// Values for every needed `(i, k, j)`; missing keys are an error.
    Explicit(BTreeMap<WKey, Fe>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullRankSpec {
    pub n: usize,
    pub w_mode: WMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullRankPoly {
    pub poly: MultilinearPoly,
    /// The substituted values, keyed by `(i, k, j)`.
    pub w: BTreeMap<WKey, Fe>,
}

/// Every `(i, k, j)` the recursion for `g_{1,n}` can touch, ascending.
pub fn needed_w_keys(n: usize) -> Vec<WKey> {
    let mut keys = Vec::new();
    for i in 1..=n {
        for j in (i + 1..=n).step_by(2) {
            for k in (i + 1..=j.saturating_sub(2)).filter(|k| (k - i + 1) % 2 == 0) {
                keys.push((i, k, j));
            }
        }
    }
    keys
}

pub fn gen_fullrank(field: PrimeField, spec: &FullRankSpec) -> Result<FullRankPoly> {
    gen_fullrank_with_budget(field, spec, DEFAULT_TERM_BUDGET)
}

pub fn gen_fullrank_with_budget(field: PrimeField, spec: &FullRankSpec, term_budget: u64) -> Result<FullRankPoly> {
    let n = spec.n;
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("full-rank polynomial needs an even n, got {n}")));
    }
    if n > MAX_FULLRANK_VARS {
        return Err(Error::budget("full-rank variables", MAX_FULLRANK_VARS as u64, n as u64));
    }
    let w: BTreeMap<WKey, Fe> = match &spec.w_mode {
        WMode::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            needed_w_keys(n).into_iter().map(|k| (k, field.random(&mut rng))).collect()
        }
        WMode::Explicit(map) => {
            for key in needed_w_keys(n) {
                if !map.contains_key(&key) {
                    return Err(Error::Validation(format!("no value for w{key:?}")));
                }
            }
            map.clone()
        }
    };
    let mut g = Recursion { field, n, w: &w, memo: HashMap::new(), touched: HashMap::new(), term_budget };
    let poly = if n == 0 { MultilinearPoly::one(field, 0) } else { g.eval(1, n)? };
    Ok(FullRankPoly { poly, w })
}

struct Recursion<'a> {
    field: PrimeField,
    n: usize,
    w: &'a BTreeMap<WKey, Fe>,
    memo: HashMap<(usize, usize), MultilinearPoly>,
    touched: HashMap<(usize, usize), BTreeSet<WKey>>,
    term_budget: u64,
}

impl Recursion<'_> {
    /// `g_{i,j}`; an interval with `j < i` is empty.
    fn eval(&mut self, i: usize, j: usize) -> Result<MultilinearPoly> {
        if j < i {
            return Ok(MultilinearPoly::one(self.field, self.n));
        }
        if let Some(p) = self.memo.get(&(i, j)) {
            return Ok(p.clone());
        }
        let mut touched = BTreeSet::new();
        let inner = self.eval(i + 1, j - 1)?;
        touched.extend(self.touched_by(i + 1, j - 1));
        let pair = MultilinearPoly::from_terms(self.field, self.n, [(vec![], Fe::ONE), (vec![i, j], Fe::ONE)])?;
        let mut acc = pair.mul(&inner)?;
        for k in (i + 1..=j.saturating_sub(2)).filter(|k| (k - i + 1) % 2 == 0) {
            let key = (i, k, j);
            let wv = self.w[&key];
            touched.insert(key);
            let left = self.eval(i, k)?;
            let right = self.eval(k + 1, j)?;
            touched.extend(self.touched_by(i, k));
            touched.extend(self.touched_by(k + 1, j));
            acc.add_assign_unchecked(&left.mul(&right)?.scale(wv));
            if acc.num_terms() as u64 > self.term_budget {
                return Err(Error::budget("full-rank terms", self.term_budget, acc.num_terms() as u64));
            }
        }
        let interval = VarSet::from_vars(i..=j);
        if !acc.vars().is_subset(interval) {
            return Err(Error::InternalContradiction(format!("g_{{{i},{j}}} reads variables outside [{i},{j}]")));
        }
        if let Some(bad) = touched.iter().find(|&&(a, k, b)| [a, k, b].iter().any(|&x| x < i || x > j)) {
            return Err(Error::InternalContradiction(format!("g_{{{i},{j}}} depends on w{bad:?}")));
        }
        self.memo.insert((i, j), acc.clone());
        self.touched.insert((i, j), touched);
        Ok(acc)
    }

    fn touched_by(&self, i: usize, j: usize) -> BTreeSet<WKey> {
        self.touched.get(&(i, j)).cloned().unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullRankJson {
    pub polynomial: PolyJson,
    /// `[i, k, j, value]` rows.
    pub w: Vec<(usize, usize, usize, String)>,
}

impl FullRankPoly {
    pub fn to_json(&self) -> FullRankJson {
        FullRankJson {
            polynomial: self.poly.to_json(),
            w: self.w.iter().map(|(&(i, k, j), v)| (i, k, j, v.to_string())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankAttempt {
    pub w_seed: u64,
    /// Ranks under the sampled partitions, in sampling order.
    pub sampled_ranks: Vec<usize>,
    /// Ranks under the partitions induced by random permutations.
    pub permutation_ranks: Vec<usize>,
    pub all_full: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullRankReport {
    pub n: usize,
    pub expected_rank: usize,
    pub attempts: Vec<RankAttempt>,
    pub passed: bool,
}

/// Checks `rank = 2^{n/2}` under `partitions` sampled partitions and
/// `perm_partitions` permutation-induced ones, redrawing the `w` values once
/// if some rank falls short.
pub fn fullrank_rank_check(
    field: PrimeField,
    n: usize,
    partitions: usize,
    perm_partitions: usize,
    seed: u64,
) -> Result<FullRankReport> {
    if n > 16 {
        return Err(Error::budget("rank-check variables", 16, n as u64));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled: Vec<Partition> =
        (0..partitions).map(|_| sample_partition_with(n, &mut rng)).collect::<Result<_>>()?;
    let induced: Vec<Partition> = (0..perm_partitions)
        .map(|_| partition_from_permutation(&Permutation::random(n, &mut rng)))
        .collect::<Result<_>>()?;
    let expected = 1usize << (n / 2);
    let mut attempts = Vec::new();
    for w_seed in [seed, seed ^ 0x9e37_79b9_7f4a_7c15] {
        let g = gen_fullrank(field, &FullRankSpec { n, w_mode: WMode::Random(w_seed) })?;
        let ranks = |ps: &[Partition]| -> Result<Vec<usize>> { ps.par_iter().map(|phi| rank_under(&g.poly, phi)).collect() };
        let sampled_ranks = ranks(&sampled)?;
        let permutation_ranks = ranks(&induced)?;
        let all_full = sampled_ranks.iter().chain(&permutation_ranks).all(|&r| r == expected);
        attempts.push(RankAttempt { w_seed, sampled_ranks, permutation_ranks, all_full });
        if all_full {
            break;
        }
    }
    let passed = attempts.last().is_some_and(|a| a.all_full);
    Ok(FullRankReport { n, expected_rank: expected, attempts, passed })
}
