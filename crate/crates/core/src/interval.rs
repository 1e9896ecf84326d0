//! Circular intervals of a variable order and the strict circular-interval
//! property of programs.
//!
//! Positions `1..=n` of a permutation `π` sit on a circle. An arc is a run
//! of consecutive positions; two arcs overlap when the chords joining their
//! endpoints cross.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::abp::{Abp, NodeId};
use crate::error::{Error, Result};
use crate::formula::{abp_to_formula_with, Formula, FormulaConfig, Gate};
use crate::partition::{chromatic_class, partition_from_permutation, Chromatic, Partition};
use crate::perm::Permutation;
use crate::poly::VarSet;

/// Default cap on backtracking steps in the interval assignment search.
pub const DEFAULT_SEARCH_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircularInterval {
    pi: Arc<Permutation>,
    /// 1-based starting position.
    start: usize,
    len: usize,
}

impl CircularInterval {
    pub fn new(pi: Arc<Permutation>, start: usize, len: usize) -> Result<Self> {
        let n = pi.len();
        if start == 0 || start > n || len > n {
            return Err(Error::Validation(format!("arc at {start} of length {len} does not fit {n} positions")));
        }
        Ok(CircularInterval { pi, start, len })
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Positions covered, in circular order from `start`.
    pub fn positions(&self) -> Vec<usize> {
        let n = self.n();
        (0..self.len).map(|j| (self.start - 1 + j) % n + 1).collect()
    }

    /// Variables covered, in circular order.
    pub fn members(&self) -> Vec<usize> {
        self.positions().into_iter().map(|q| self.pi.var_at(q)).collect()
    }

    /// Arcs of length ≤ 1 or ≥ n − 1 have no proper chord.
    pub fn is_degenerate(&self) -> bool {
        self.len <= 1 || self.len + 1 >= self.n()
    }

    fn end(&self) -> usize {
        (self.start - 1 + self.len - 1) % self.n() + 1
    }

    /// Whether position `q` lies strictly between the two endpoints along
    /// the arc.
    fn interior_contains(&self, q: usize) -> bool {
        let n = self.n();
        let offset = (q + n - self.start) % n;
        offset > 0 && offset + 1 < self.len
    }

    pub fn to_json(&self) -> ArcJson {
        ArcJson { start: self.start, len: self.len, members: self.members() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcJson {
    pub start: usize,
    pub len: usize,
    pub members: Vec<usize>,
}

/// Whether the chords of two arcs cross.
pub fn overlaps(i: &CircularInterval, j: &CircularInterval) -> Result<bool> {
    if !Arc::ptr_eq(&i.pi, &j.pi) && i.pi != j.pi {
        return Err(Error::Validation("arcs are over different orders".into()));
    }
    if i.is_degenerate() || j.is_degenerate() {
        return Ok(false);
    }
    let (a1, a2, b1, b2) = (i.start, i.end(), j.start, j.end());
    if a1 == b1 || a1 == b2 || a2 == b1 || a2 == b2 {
        return Ok(false);
    }
    Ok(i.interior_contains(b1) != i.interior_contains(b2))
}

/// Every shortest arc containing all of `s`.
pub fn minimal_covers(s: VarSet, pi: &Arc<Permutation>) -> Result<Vec<CircularInterval>> {
    let n = pi.len();
    if s.is_empty() {
        return Err(Error::Validation("cannot cover an empty set".into()));
    }
    if s.max_var() > n {
        return Err(Error::Dimension(format!("variable x{} outside the order of length {n}", s.max_var())));
    }
    let mut positions: Vec<usize> = s.iter().map(|v| pi.position(v)).collect();
    positions.sort_unstable();
    let k = positions.len();
    // Gap after positions[i]: free positions before the next member.
    let gaps: Vec<usize> = (0..k)
        .map(|i| {
            let next = if i + 1 < k { positions[i + 1] } else { positions[0] + n };
            next - positions[i] - 1
        })
        .collect();
    let widest = *gaps.iter().max().expect("nonempty");
    let len = n - widest;
    let mut covers: Vec<CircularInterval> = (0..k)
        .filter(|&i| gaps[i] == widest)
        .map(|i| CircularInterval::new(pi.clone(), positions[(i + 1) % k], len))
        .collect::<Result<_>>()?;
    covers.sort_by_key(|c| c.start);
    covers.dedup_by_key(|c| c.start);
    Ok(covers)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalWitness {
    pub triple: [NodeId; 3],
    pub interval_ua: ArcJson,
    pub interval_av: ArcJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalCheck {
    pub strict: bool,
    /// Chosen arc per connected pair `(u, v)` with nonempty `X_{u,v}`.
    pub assignment: Option<BTreeMap<String, ArcJson>>,
    pub witness: Option<IntervalWitness>,
}

/// Searches for an assignment of one shortest covering arc to every
/// connected pair such that, for every `u → a → v`, the arcs of `(u, a)`
/// and `(a, v)` do not overlap.
pub fn check_strict_circular_interval(p: &Abp, pi: &Permutation, budget: u64) -> Result<IntervalCheck> {
    if pi.len() != p.nvars() {
        return Err(Error::Dimension(format!("order of length {} for {} variables", pi.len(), p.nvars())));
    }
    let pi = Arc::new(pi.clone());
    let nodes = p.node_count();
    // Pairs with a nonempty variable set and their candidate arcs.
    let mut pair_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut domains: Vec<Vec<CircularInterval>> = Vec::new();
    let mut reach: Vec<Vec<bool>> = Vec::with_capacity(nodes);
    for u in 0..nodes {
        reach.push(p.reach_from(u));
    }
    for u in 0..nodes {
        for v in u + 1..nodes {
            if !reach[u][v] {
                continue;
            }
            let x = p.vars_between(u, v);
            if x.is_empty() {
                continue;
            }
            pair_index.insert((u, v), pairs.len());
            pairs.push((u, v));
            domains.push(minimal_covers(x, &pi)?);
        }
    }
    // Constraints: pairs (u, a) and (a, v) sharing the middle node.
    let mut constraints: Vec<(usize, usize, [usize; 3])> = Vec::new();
    for a in 0..nodes {
        let left: Vec<usize> = (0..a).filter(|&u| pair_index.contains_key(&(u, a))).collect();
        let right: Vec<usize> = (a + 1..nodes).filter(|&v| pair_index.contains_key(&(a, v))).collect();
        for &u in &left {
            for &v in &right {
                constraints.push((pair_index[&(u, a)], pair_index[&(a, v)], [u, a, v]));
            }
        }
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); pairs.len()];
    for (ci, &(x, y, _)) in constraints.iter().enumerate() {
        adj[x].push(ci);
        adj[y].push(ci);
    }

    let mut choice: Vec<Option<usize>> = vec![None; pairs.len()];
    // Fixed pairs first, then the rest by domain size.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by_key(|&i| (domains[i].len(), i));
    let mut steps = 0u64;
    let mut first_conflict: Option<usize> = None;
    let ok = backtrack(
        &order,
        0,
        &domains,
        &constraints,
        &adj,
        &mut choice,
        &mut steps,
        budget,
        &mut first_conflict,
    )?;
    if ok {
        let assignment = pairs
            .iter()
            .zip(&choice)
            .map(|(&(u, v), c)| {
                let arc = &domains[pair_index[&(u, v)]][c.expect("complete assignment")];
                (format!("{}-{}", p.id_at(u), p.id_at(v)), arc.to_json())
            })
            .collect();
        return Ok(IntervalCheck { strict: true, assignment: Some(assignment), witness: None });
    }
    let ci = first_conflict.expect("failure records a conflict");
    let (x, y, [u, a, v]) = constraints[ci];
    Ok(IntervalCheck {
        strict: false,
        assignment: None,
        witness: Some(IntervalWitness {
            triple: [p.id_at(u), p.id_at(a), p.id_at(v)],
            interval_ua: domains[x][0].to_json(),
            interval_av: domains[y][0].to_json(),
        }),
    })
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    order: &[usize],
    depth: usize,
    domains: &[Vec<CircularInterval>],
    constraints: &[(usize, usize, [usize; 3])],
    adj: &[Vec<usize>],
    choice: &mut Vec<Option<usize>>,
    steps: &mut u64,
    budget: u64,
    first_conflict: &mut Option<usize>,
) -> Result<bool> {
    if depth == order.len() {
        return Ok(true);
    }
    let var = order[depth];
    'values: for val in 0..domains[var].len() {
        *steps += 1;
        if *steps > budget {
            return Err(Error::budget("interval search steps", budget, *steps));
        }
        choice[var] = Some(val);
        for &ci in &adj[var] {
            let (x, y, _) = constraints[ci];
            if let (Some(cx), Some(cy)) = (choice[x], choice[y]) {
                if overlaps(&domains[x][cx], &domains[y][cy])? {
                    first_conflict.get_or_insert(ci);
                    continue 'values;
                }
            }
        }
        if backtrack(order, depth + 1, domains, constraints, adj, choice, steps, budget, first_conflict)? {
            return Ok(true);
        }
    }
    choice[var] = None;
    Ok(false)
}

/// Tries every order with `π(1) = 1` and returns the first for which the
/// program is strict circular-interval. Limited to `n ≤ 8`.
pub fn find_interval_order(p: &Abp, budget: u64) -> Result<Option<Permutation>> {
    let n = p.nvars();
    if n > 8 {
        return Err(Error::budget("exhaustive order variables", 8, n as u64));
    }
    if n == 0 {
        return Ok(Some(Permutation::identity(0)));
    }
    let mut rest: Vec<usize> = (2..=n).collect();
    let mut found = None;
    permute(&mut rest, 0, &mut |tail| {
        if found.is_some() {
            return Ok(());
        }
        let mut seq = vec![1];
        seq.extend_from_slice(tail);
        let pi = Permutation::new(seq)?;
        if check_strict_circular_interval(p, &pi, budget)?.strict {
            found = Some(pi);
        }
        Ok(())
    })?;
    Ok(found)
}

fn permute(xs: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if k == xs.len() {
        return f(xs);
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permute(xs, k + 1, f)?;
        xs.swap(k, i);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BichromaticCensus {
    pub max_bichromatic: u64,
    pub parse_trees: u128,
    pub leaves: usize,
    pub bichromatic_leaves: usize,
    pub holds: bool,
}

/// Largest number of leaves in one parse tree whose variables meet both
/// sides of the partition induced by `π`.
pub fn bichromatic_census(p: &Abp, pi: &Permutation, cfg: FormulaConfig) -> Result<BichromaticCensus> {
    let f = abp_to_formula_with(p, cfg)?;
    let phi = partition_from_permutation(pi)?;
    census_of_formula(&f, &phi)
}

pub fn census_of_formula(f: &Formula, phi: &Partition) -> Result<BichromaticCensus> {
    let bichromatic = |vars: VarSet| chromatic_class(vars, phi) == Chromatic::Bichromatic;
    let max_bichromatic = f.max_over_parse_trees(|_, g| Ok(matches!(g, Gate::Leaf(l) if bichromatic(l.vars)) as u64))?;
    let leaves: Vec<_> = f.leaves().collect();
    Ok(BichromaticCensus {
        max_bichromatic,
        parse_trees: f.parse_tree_count(),
        leaves: leaves.len(),
        bichromatic_leaves: leaves.iter().filter(|(_, l)| bichromatic(l.vars)).count(),
        holds: max_bichromatic <= 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abp::AbpBuilder;
    use crate::field::PrimeField;

    fn id(n: usize) -> Arc<Permutation> {
        Arc::new(Permutation::identity(n))
    }

    fn arc(pi: &Arc<Permutation>, start: usize, len: usize) -> CircularInterval {
        CircularInterval::new(pi.clone(), start, len).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let pi = id(6);
        assert!(overlaps(&arc(&pi, 1, 3), &arc(&pi, 2, 4)).unwrap());
        assert!(!overlaps(&arc(&pi, 1, 2), &arc(&pi, 3, 2)).unwrap());
        assert!(!overlaps(&arc(&pi, 1, 4), &arc(&pi, 2, 2)).unwrap());
        let other = Arc::new(Permutation::reversed(6));
        assert!(overlaps(&arc(&pi, 1, 3), &arc(&other, 2, 4)).is_err());
    }

    #[test]
    fn minimal_cover_examples() {
        let pi = Arc::new(Permutation::new(vec![4, 2, 6, 1, 5, 3]).unwrap());
        let single = minimal_covers(VarSet::singleton(pi.var_at(2)), &pi).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!((single[0].start(), single[0].len()), (2, 1));

        let two = minimal_covers(VarSet::from_vars([pi.var_at(1), pi.var_at(3)]), &pi).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!((two[0].start(), two[0].len()), (1, 3));

        let block = VarSet::from_vars([pi.var_at(3), pi.var_at(4), pi.var_at(5)]);
        let c = minimal_covers(block, &pi).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(VarSet::from_vars(c[0].members()), block);

        // Opposite points on a circle of 4 have two shortest covers.
        let pi4 = id(4);
        assert_eq!(minimal_covers(VarSet::from_vars([1, 3]), &pi4).unwrap().len(), 2);
    }

    /// Layered chain reading `vars` in order.
    fn chain(vars: &[usize], n: usize) -> Abp {
        let mut b = AbpBuilder::new(PrimeField::default(), n);
        let mut prev = b.source();
        for (i, &v) in vars.iter().enumerate() {
            let x = b.node(i + 1);
            b.var_edge(prev, x, v);
            prev = x;
        }
        b.build().unwrap()
    }

    #[test]
    fn contiguous_reader_is_strict() {
        let p = chain(&[1, 2, 3, 4, 5, 6], 6);
        let check = check_strict_circular_interval(&p, &Permutation::identity(6), DEFAULT_SEARCH_BUDGET).unwrap();
        assert!(check.strict);
    }

    #[test]
    fn crossing_chords_are_detected() {
        // X_{s,a} = {1,3} and X_{a,t} = {2,5} under the identity order:
        // chords (1,3) and (2,5) cross.
        let p = chain(&[1, 3, 2, 5], 6);
        let check = check_strict_circular_interval(&p, &Permutation::identity(6), DEFAULT_SEARCH_BUDGET).unwrap();
        assert!(!check.strict);
        let w = check.witness.unwrap();
        assert_eq!(w.triple[1], 2);
    }

    #[test]
    fn nesting_and_disjointness_never_overlap() {
        let pi = id(8);
        for s1 in 1..=8 {
            for l1 in 0..=8 {
                for s2 in 1..=8 {
                    for l2 in 0..=8 {
                        let (a, b) = (arc(&pi, s1, l1), arc(&pi, s2, l2));
                        let pa: Vec<_> = a.positions();
                        let pb: Vec<_> = b.positions();
                        let nested = pa.iter().all(|x| pb.contains(x)) || pb.iter().all(|x| pa.contains(x));
                        let disjoint = pa.iter().all(|x| !pb.contains(x));
                        let o = overlaps(&a, &b).unwrap();
                        assert_eq!(o, overlaps(&b, &a).unwrap());
                        if nested || disjoint {
                            assert!(!o, "{s1}/{l1} vs {s2}/{l2}");
                        }
                    }
                }
            }
        }
    }
}
