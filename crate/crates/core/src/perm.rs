//! Permutations of `{1, ..., n}` written as reading sequences.
//!
//! `seq[j]` is the variable at position `j + 1`. Order consistency, `φ_π`
//! partitions and circular intervals all use this convention.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    seq: Vec<usize>,
    /// `rank[v]` is the 1-based position of variable `v`; index 0 unused.
    rank: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(seq: Vec<usize>) -> Result<Self> {
        Permutation::new(seq)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.seq
    }
}

impl Permutation {
    pub fn new(seq: Vec<usize>) -> Result<Self> {
        let n = seq.len();
        let mut rank = vec![0; n + 1];
        for (j, &v) in seq.iter().enumerate() {
            if v == 0 || v > n {
                return Err(Error::Validation(format!("permutation entry {v} outside 1..={n}")));
            }
            if rank[v] != 0 {
                return Err(Error::Validation(format!("permutation repeats {v}")));
            }
            rank[v] = j + 1;
        }
        Ok(Permutation { seq, rank })
    }

    pub fn identity(n: usize) -> Self {
        Permutation::new((1..=n).collect()).expect("identity is a bijection")
    }

    pub fn reversed(n: usize) -> Self {
        Permutation::new((1..=n).rev().collect()).expect("reversal is a bijection")
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut seq: Vec<usize> = (1..=n).collect();
        seq.shuffle(rng);
        Permutation::new(seq).expect("shuffle is a bijection")
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    /// Variable at 1-based position `pos`.
    pub fn var_at(&self, pos: usize) -> usize {
        self.seq[pos - 1]
    }

    /// 1-based position of `var`.
    pub fn position(&self, var: usize) -> usize {
        self.rank[var]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.seq
    }

    /// Whether the variables appear in strictly increasing position.
    pub fn is_consistent(&self, vars: &[usize]) -> bool {
        vars.windows(2).all(|w| self.rank[w[0]] < self.rank[w[1]])
    }
}

/// A list of `L` pairwise distinct permutations of the same length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Permutation>", into = "Vec<Permutation>")]
pub struct OrderList {
    perms: Vec<Permutation>,
}

impl TryFrom<Vec<Permutation>> for OrderList {
    type Error = Error;

    fn try_from(perms: Vec<Permutation>) -> Result<Self> {
        OrderList::new(perms)
    }
}

impl From<OrderList> for Vec<Permutation> {
    fn from(o: OrderList) -> Self {
        o.perms
    }
}

impl OrderList {
    pub fn new(perms: Vec<Permutation>) -> Result<Self> {
        if perms.is_empty() {
            return Err(Error::Validation("order list is empty".into()));
        }
        let n = perms[0].len();
        for (i, p) in perms.iter().enumerate() {
            if p.len() != n {
                return Err(Error::Validation(format!("order {} has length {} != {n}", i + 1, p.len())));
            }
            if perms[..i].contains(p) {
                return Err(Error::Validation(format!("order {} is a duplicate", i + 1)));
            }
        }
        Ok(OrderList { perms })
    }

    pub fn from_seqs(seqs: Vec<Vec<usize>>) -> Result<Self> {
        OrderList::new(seqs.into_iter().map(Permutation::new).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.perms[0].len()
    }

    pub fn get(&self, i: usize) -> &Permutation {
        &self.perms[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Permutation> {
        self.perms.iter()
    }

    /// Index of the first order the sequence is consistent with.
    pub fn first_consistent(&self, vars: &[usize]) -> Option<usize> {
        self.perms.iter().position(|p| p.is_consistent(vars))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_consistency() {
        let p = Permutation::new(vec![3, 1, 2]).unwrap();
        assert_eq!(p.var_at(1), 3);
        assert_eq!(p.position(3), 1);
        assert_eq!(p.position(2), 3);
        assert!(p.is_consistent(&[3, 2]));
        assert!(p.is_consistent(&[1]));
        assert!(!p.is_consistent(&[2, 1]));
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 3]).is_err());
    }

    #[test]
    fn order_list_validation() {
        assert!(OrderList::from_seqs(vec![vec![1, 2], vec![2, 1]]).is_ok());
        assert!(OrderList::from_seqs(vec![vec![1, 2], vec![1, 2]]).is_err());
        assert!(OrderList::from_seqs(vec![vec![1, 2], vec![1, 2, 3]]).is_err());
        assert!(OrderList::from_seqs(vec![]).is_err());
    }
}
