//! Deciding whether every source-to-sink path is consistent with one of a
//! list of variable orders.

use std::collections::HashMap;

use super::{Abp, EdgeId, Label, Path};
use crate::error::{Error, Result};
use crate::perm::OrderList;

/// Programs with at most this many source-to-sink paths are checked by
/// enumeration; larger ones by the profile DP.
pub const ORDER_ENUMERATION_LIMIT: u128 = 1_000_000;

/// Cap on the number of distinct per-node profiles the DP may create.
const PROFILE_BUDGET: u64 = 5_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderCheck {
    pub ordered: bool,
    /// A source-to-sink path consistent with none of the orders.
    pub witness: Option<Path>,
}

/// For each order: `None` once the path prefix broke it, otherwise the
/// largest position read so far (0 before any variable).
type Profile = Vec<Option<u32>>;

impl Abp {
    pub fn check_ordered(&self, orders: &OrderList) -> Result<OrderCheck> {
        self.check_order_arity(orders)?;
        if self.count_paths(0, self.ids.len() - 1) <= ORDER_ENUMERATION_LIMIT {
            self.check_ordered_exhaustive(orders)
        } else {
            self.check_ordered_dp(orders)
        }
    }

    fn check_order_arity(&self, orders: &OrderList) -> Result<()> {
        if orders.nvars() != self.nvars {
            return Err(Error::Dimension(format!(
                "orders are on {} variables, program on {}",
                orders.nvars(),
                self.nvars
            )));
        }
        Ok(())
    }

    /// Enumerates every path; exact but exponential.
    pub fn check_ordered_exhaustive(&self, orders: &OrderList) -> Result<OrderCheck> {
        self.check_order_arity(orders)?;
        let t = self.ids.len() - 1;
        for path in self.paths_between(0, t, ORDER_ENUMERATION_LIMIT as u64)? {
            let vars = self.path_vars(&path);
            if orders.first_consistent(&vars).is_none() {
                return Ok(OrderCheck { ordered: false, witness: Some(path) });
            }
        }
        Ok(OrderCheck { ordered: true, witness: None })
    }

    /// Forward DP over the set of distinct order profiles reaching each
    /// node. Exact; its cost is the number of distinct profiles.
    pub fn check_ordered_dp(&self, orders: &OrderList) -> Result<OrderCheck> {
        self.check_order_arity(orders)?;
        let n = self.ids.len();
        let t = n - 1;
        let live = self.between(0, t);
        // Per node: profiles with a back-pointer (edge, profile index at tail).
        let mut tables: Vec<Vec<(Profile, Option<(EdgeId, usize)>)>> = vec![Vec::new(); n];
        let mut lookup: Vec<HashMap<Profile, usize>> = vec![HashMap::new(); n];
        tables[0].push((vec![Some(0); orders.len()], None));
        let mut created = 1u64;
        for a in 0..n {
            if !live[a] {
                continue;
            }
            for &e in &self.out_edges[a] {
                let b = self.head(e);
                if !live[b] {
                    continue;
                }
                for pi in 0..tables[a].len() {
                    let next = extend(&tables[a][pi].0, self.edges[e].label, orders);
                    if !lookup[b].contains_key(&next) {
                        created += 1;
                        if created > PROFILE_BUDGET {
                            return Err(Error::budget("order profiles", PROFILE_BUDGET, created));
                        }
                        lookup[b].insert(next.clone(), tables[b].len());
                        tables[b].push((next, Some((e, pi))));
                    }
                }
            }
        }
        let bad = tables[t].iter().position(|(prof, _)| prof.iter().all(Option::is_none));
        let Some(mut idx) = bad else {
            return Ok(OrderCheck { ordered: true, witness: None });
        };
        let mut path = Vec::new();
        let mut node = t;
        while let Some((e, prev)) = tables[node][idx].1 {
            path.push(e);
            node = self.tail(e);
            idx = prev;
        }
        path.reverse();
        Ok(OrderCheck { ordered: false, witness: Some(path) })
    }
}

fn extend(profile: &Profile, label: Label, orders: &OrderList) -> Profile {
    match label {
        Label::Const(_) => profile.clone(),
        Label::Var(k) => profile
            .iter()
            .zip(orders.iter())
            .map(|(slot, pi)| {
                let pos = pi.position(k) as u32;
                slot.filter(|&m| pos > m).map(|_| pos)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use crate::abp::AbpBuilder;
    use crate::field::PrimeField;
    use crate::perm::OrderList;

    fn diamond() -> crate::abp::Abp {
        let mut b = AbpBuilder::new(PrimeField::default(), 2);
        let s = b.source();
        let a = b.node(1);
        let c = b.node(1);
        let t = b.node(2);
        b.var_edge(s, a, 1).var_edge(s, c, 2).var_edge(a, t, 2).var_edge(c, t, 1);
        b.build().unwrap()
    }

    #[test]
    fn single_path_identity() {
        let mut b = AbpBuilder::new(PrimeField::default(), 2);
        let s = b.source();
        let a = b.node(1);
        let t = b.node(2);
        b.var_edge(s, a, 1).var_edge(a, t, 2);
        let p = b.build().unwrap();
        let id = OrderList::from_seqs(vec![vec![1, 2]]).unwrap();
        assert!(p.check_ordered(&id).unwrap().ordered);
        assert!(p.check_ordered_dp(&id).unwrap().ordered);
    }

    #[test]
    fn diamond_needs_both_orders() {
        let d = diamond();
        let id = OrderList::from_seqs(vec![vec![1, 2]]).unwrap();
        for check in [d.check_ordered_exhaustive(&id).unwrap(), d.check_ordered_dp(&id).unwrap()] {
            assert!(!check.ordered);
            assert_eq!(d.path_vars(&check.witness.unwrap()), vec![2, 1]);
        }
        let both = OrderList::from_seqs(vec![vec![1, 2], vec![2, 1]]).unwrap();
        assert!(d.check_ordered_exhaustive(&both).unwrap().ordered);
        assert!(d.check_ordered_dp(&both).unwrap().ordered);
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let d = diamond();
        let three = OrderList::from_seqs(vec![vec![1, 2, 3]]).unwrap();
        assert!(d.check_ordered(&three).is_err());
    }
}
