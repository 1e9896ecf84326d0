//! Balanced partitions of the variables and partial derivative matrices.
//!
//! A partition sends each `x_i` injectively to some `y_j` or `z_j`, half of
//! the variables to each side. The matrix of `f` under a partition has rows
//! indexed by `Y`-monomials, columns by `Z`-monomials, and the coefficient of
//! their product as entry.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};
use crate::perm::Permutation;
use crate::poly::{MultilinearPoly, VarSet};

/// Largest variable count for which a matrix is built (`2^12 × 2^12`).
pub const MAX_PDM_VARS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    /// `assign[i - 1]` is the side and 1-based slot of `x_i`.
    assign: Vec<(Side, usize)>,
}

impl Partition {
    pub fn new(assign: Vec<(Side, usize)>) -> Result<Self> {
        let n = assign.len();
        if n % 2 != 0 {
            return Err(Error::Dimension(format!("partition of {n} variables cannot be balanced")));
        }
        let m = n / 2;
        let mut used = [vec![false; m + 1], vec![false; m + 1]];
        for &(side, slot) in &assign {
            let s = side as usize;
            if slot == 0 || slot > m || used[s][slot] {
                return Err(Error::Validation(format!("slot {side:?}{slot} invalid or reused")));
            }
            used[s][slot] = true;
        }
        Ok(Partition { assign })
    }

    pub fn nvars(&self) -> usize {
        self.assign.len()
    }

    /// `m = n / 2`.
    pub fn half(&self) -> usize {
        self.assign.len() / 2
    }

    pub fn image(&self, var: usize) -> (Side, usize) {
        self.assign[var - 1]
    }

    pub fn side_of(&self, var: usize) -> Side {
        self.assign[var - 1].0
    }

    /// Variables mapped into `side`.
    pub fn vars_on(&self, side: Side) -> VarSet {
        VarSet::from_vars((1..=self.nvars()).filter(|&v| self.side_of(v) == side))
    }

    /// Splits a monomial into its `Y`-slot and `Z`-slot bitmasks.
    pub fn split(&self, m: VarSet) -> (usize, usize) {
        let (mut y, mut z) = (0usize, 0usize);
        for v in m.iter() {
            match self.assign[v - 1] {
                (Side::Y, j) => y |= 1 << (j - 1),
                (Side::Z, j) => z |= 1 << (j - 1),
            }
        }
        (y, z)
    }

    /// `y1`, `z3`, ... for each variable in order.
    pub fn labels(&self) -> Vec<String> {
        self.assign
            .iter()
            .map(|&(side, j)| format!("{}{j}", if side == Side::Y { 'y' } else { 'z' }))
            .collect()
    }
}

/// Uniformly random balanced partition determined by `seed`.
pub fn sample_partition(n: usize, seed: u64) -> Result<Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_partition_with(n, &mut rng)
}

pub fn sample_partition_with<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Partition> {
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("partition of {n} variables cannot be balanced")));
    }
    partition_from_permutation(&Permutation::random(n, rng))
}

/// `x_{π(i)} ↦ y_i` and `x_{π(m+i)} ↦ z_i`.
pub fn partition_from_permutation(pi: &Permutation) -> Result<Partition> {
    let n = pi.len();
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("partition of {n} variables cannot be balanced")));
    }
    let m = n / 2;
    let mut assign = vec![(Side::Y, 0); n];
    for pos in 1..=n {
        let var = pi.var_at(pos);
        assign[var - 1] = if pos <= m { (Side::Y, pos) } else { (Side::Z, pos - m) };
    }
    Partition::new(assign)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chromatic {
    Monochromatic,
    Bichromatic,
}

pub fn chromatic_class(s: VarSet, phi: &Partition) -> Chromatic {
    let y = s.iter().any(|v| phi.side_of(v) == Side::Y);
    let z = s.iter().any(|v| phi.side_of(v) == Side::Z);
    if y && z {
        Chromatic::Bichromatic
    } else {
        Chromatic::Monochromatic
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdMatrix {
    field: PrimeField,
    m: usize,
    /// `entries[row][col]`, row a `Y`-slot mask, column a `Z`-slot mask.
    entries: Vec<Vec<Fe>>,
}

pub fn build_pdm(f: &MultilinearPoly, phi: &Partition) -> Result<PdMatrix> {
    if f.nvars() != phi.nvars() {
        return Err(Error::Dimension(format!("polynomial on {} variables, partition on {}", f.nvars(), phi.nvars())));
    }
    if f.nvars() > MAX_PDM_VARS {
        return Err(Error::budget("matrix variables", MAX_PDM_VARS as u64, f.nvars() as u64));
    }
    let m = phi.half();
    let dim = 1usize << m;
    let mut entries = vec![vec![Fe::ZERO; dim]; dim];
    for (mono, c) in f.terms() {
        let (y, z) = phi.split(mono);
        entries[y][z] = c;
    }
    Ok(PdMatrix { field: f.field(), m, entries })
}

impl PdMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> Fe {
        self.entries[row][col]
    }

    pub fn rows(&self) -> &[Vec<Fe>] {
        &self.entries
    }

    /// Rank over `F_p` by Gaussian elimination on a copy.
    pub fn rank(&self) -> usize {
        let f = self.field;
        let mut a: Vec<Vec<Fe>> = self.entries.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
        let cols = self.dim();
        let mut rank = 0;
        for col in 0..cols {
            let Some(piv) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else { continue };
            a.swap(rank, piv);
            let inv = f.inv(a[rank][col]).expect("pivot is nonzero");
            for x in a[rank][col..].iter_mut() {
                *x = f.mul(*x, inv);
            }
            let pivot_row = a[rank].clone();
            for r in rank + 1..a.len() {
                let factor = a[r][col];
                if factor.is_zero() {
                    continue;
                }
                for (x, &pv) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x = f.sub(*x, f.mul(factor, pv));
                }
            }
            rank += 1;
            if rank == a.len() {
                break;
            }
        }
        rank
    }

    /// Rank over the rationals of the matrix of centered lifts of the
    /// entries; agrees with [`PdMatrix::rank`] for small integer matrices.
    pub fn rank_rational(&self) -> usize {
        let mut a: Vec<Vec<BigRational>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(self.field.centered(x)))).collect())
            .collect();
        let cols = self.dim();
        let mut rank = 0;
        for col in 0..cols {
            let Some(piv) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else { continue };
            a.swap(rank, piv);
            let inv = BigRational::one() / a[rank][col].clone();
            for x in a[rank][col..].iter_mut() {
                *x = &*x * &inv;
            }
            let pivot_row = a[rank].clone();
            for r in rank + 1..a.len() {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = a[r][col].clone();
                for (x, pv) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x = &*x - &factor * pv;
                }
            }
            rank += 1;
        }
        rank
    }
}

/// `rank_φ(f)` over `F_p`.
pub fn rank_under(f: &MultilinearPoly, phi: &Partition) -> Result<usize> {
    Ok(build_pdm(f, phi)?.rank())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub partition: Vec<String>,
    pub rank: usize,
    pub m: usize,
}

pub fn rank_report(f: &MultilinearPoly, phi: &Partition) -> Result<RankReport> {
    let rank = rank_under(f, phi)?;
    Ok(RankReport { partition: phi.labels(), rank, m: phi.half() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f() -> PrimeField {
        PrimeField::default()
    }

    fn two_var_phi() -> Partition {
        Partition::new(vec![(Side::Y, 1), (Side::Z, 1)]).unwrap()
    }

    #[test]
    fn constant_one_matrix() {
        let one = MultilinearPoly::one(f(), 2);
        let m = build_pdm(&one, &two_var_phi()).unwrap();
        assert_eq!(m.entry(0, 0), Fe::ONE);
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn one_plus_x1x2_is_identity() {
        let p = MultilinearPoly::from_terms(f(), 2, [(vec![], Fe::ONE), (vec![1, 2], Fe::ONE)]).unwrap();
        let m = build_pdm(&p, &two_var_phi()).unwrap();
        assert_eq!(m.rows(), &[vec![Fe::ONE, Fe::ZERO], vec![Fe::ZERO, Fe::ONE]]);
        assert_eq!(m.rank(), 2);
        assert_eq!(m.rank_rational(), 2);
    }

    #[test]
    fn x1_plus_x1x2_has_rank_one() {
        let p = MultilinearPoly::from_terms(f(), 2, [(vec![1], Fe::ONE), (vec![1, 2], Fe::ONE)]).unwrap();
        let m = build_pdm(&p, &two_var_phi()).unwrap();
        assert_eq!(m.rows()[1], vec![Fe::ONE, Fe::ONE]);
        assert_eq!(m.rows()[0], vec![Fe::ZERO, Fe::ZERO]);
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn zero_matrix_rank() {
        let z = MultilinearPoly::zero(f(), 4);
        let phi = sample_partition(4, 1).unwrap();
        assert_eq!(rank_under(&z, &phi).unwrap(), 0);
    }

    #[test]
    fn permutation_partitions() {
        let id = partition_from_permutation(&Permutation::identity(4)).unwrap();
        assert_eq!(id.labels(), vec!["y1", "y2", "z1", "z2"]);
        let rev = partition_from_permutation(&Permutation::reversed(4)).unwrap();
        assert_eq!(rev.labels(), vec!["z2", "z1", "y2", "y1"]);
        assert!(partition_from_permutation(&Permutation::identity(3)).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_balanced() {
        assert_eq!(sample_partition(10, 7).unwrap(), sample_partition(10, 7).unwrap());
        for seed in 0..50 {
            let phi = sample_partition(10, seed).unwrap();
            assert_eq!(phi.vars_on(Side::Y).len(), 5);
        }
        assert!(matches!(sample_partition(3, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn chromatic_examples() {
        let phi = partition_from_permutation(&Permutation::identity(4)).unwrap();
        assert_eq!(chromatic_class(VarSet::EMPTY, &phi), Chromatic::Monochromatic);
        assert_eq!(chromatic_class(VarSet::from_vars([1, 2]), &phi), Chromatic::Monochromatic);
        assert_eq!(chromatic_class(VarSet::from_vars([2, 3]), &phi), Chromatic::Bichromatic);
    }
}
