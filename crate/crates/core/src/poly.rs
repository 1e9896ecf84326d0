//! Sparse multilinear polynomials over a prime field.
//!
//! A monomial is a set of variable indices stored as a bitmask (bit `i - 1`
//! stands for `x_i`), so at most 64 variables are representable.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};

pub const MAX_VARS: usize = 64;

/// A set of variable indices in `1..=64`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarSet(pub u64);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn singleton(var: usize) -> VarSet {
        debug_assert!((1..=MAX_VARS).contains(&var));
        VarSet(1u64 << (var - 1))
    }

    pub fn from_vars<I: IntoIterator<Item = usize>>(vars: I) -> VarSet {
        vars.into_iter().fold(VarSet::EMPTY, |acc, v| acc.union(VarSet::singleton(v)))
    }

    /// `{1, ..., n}`.
    pub fn full(n: usize) -> VarSet {
        if n >= 64 {
            VarSet(u64::MAX)
        } else {
            VarSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, var: usize) -> bool {
        var >= 1 && var <= MAX_VARS && self.0 >> (var - 1) & 1 == 1
    }

    pub fn insert(&mut self, var: usize) {
        self.0 |= 1u64 << (var - 1);
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn intersect(self, other: VarSet) -> VarSet {
        VarSet(self.0 & other.0)
    }

    pub fn minus(self, other: VarSet) -> VarSet {
        VarSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: VarSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn max_var(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    /// Ascending variable indices.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(tz + 1)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

pub type Monomial = VarSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqualityMode {
    Exact,
    Randomized { seed: u64, trials: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearPoly {
    field: PrimeField,
    nvars: usize,
    terms: BTreeMap<Monomial, Fe>,
}

impl MultilinearPoly {
    pub fn zero(field: PrimeField, nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables");
        MultilinearPoly { field, nvars, terms: BTreeMap::new() }
    }

    pub fn constant(field: PrimeField, nvars: usize, c: Fe) -> Self {
        let mut p = Self::zero(field, nvars);
        p.add_term(Monomial::EMPTY, c);
        p
    }

    pub fn one(field: PrimeField, nvars: usize) -> Self {
        Self::constant(field, nvars, Fe::ONE)
    }

    pub fn var(field: PrimeField, nvars: usize, var: usize) -> Self {
        let mut p = Self::zero(field, nvars);
        p.add_term(VarSet::singleton(var), Fe::ONE);
        p
    }

    /// Builds from `(variables, coefficient)` pairs; repeated monomials are summed.
    pub fn from_terms<I>(field: PrimeField, nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, Fe)>,
    {
        let mut p = Self::zero(field, nvars);
        for (vars, c) in terms {
            let mut m = VarSet::EMPTY;
            for v in vars {
                if v == 0 || v > nvars {
                    return Err(Error::Dimension(format!("variable x{v} outside 1..={nvars}")));
                }
                if m.contains(v) {
                    return Err(Error::MultilinearityViolation { var: v });
                }
                m.insert(v);
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, Fe)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, *c))
    }

    pub fn coeff(&self, m: Monomial) -> Fe {
        self.terms.get(&m).copied().unwrap_or(Fe::ZERO)
    }

    /// Union of the supports of all monomials.
    pub fn vars(&self) -> VarSet {
        self.terms.keys().fold(VarSet::EMPTY, |acc, m| acc.union(*m))
    }

    pub fn constant_term(&self) -> Fe {
        self.coeff(Monomial::EMPTY)
    }

    /// Same polynomial viewed in a larger (or equal) ambient variable count.
    pub fn with_nvars(&self, nvars: usize) -> Result<Self> {
        if self.vars().max_var() > nvars || nvars > MAX_VARS {
            return Err(Error::Dimension(format!("cannot view polynomial in {nvars} variables")));
        }
        Ok(MultilinearPoly { field: self.field, nvars, terms: self.terms.clone() })
    }

    pub fn add_term(&mut self, m: Monomial, c: Fe) {
        if c.is_zero() {
            return;
        }
        let f = self.field;
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = f.add(*e.get(), c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::Dimension(format!("nvars {} vs {}", self.nvars, other.nvars)));
        }
        if self.field != other.field {
            return Err(Error::Dimension(format!(
                "moduli {} vs {}",
                self.field.modulus(),
                other.field.modulus()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.add_assign_unchecked(other);
        Ok(out)
    }

    pub(crate) fn add_assign_unchecked(&mut self, other: &Self) {
        for (m, c) in other.terms() {
            self.add_term(m, c);
        }
    }

    pub fn scale(&self, c: Fe) -> Self {
        let mut out = Self::zero(self.field, self.nvars);
        if c.is_zero() {
            return out;
        }
        for (m, a) in self.terms() {
            out.terms.insert(m, self.field.mul(a, c));
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(self.field.neg(Fe::ONE))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Product; fails if any pair of monomials shares a variable.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let f = self.field;
        let mut out = Self::zero(f, self.nvars);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                let shared = ma.intersect(mb);
                if !shared.is_empty() {
                    return Err(Error::MultilinearityViolation { var: shared.iter().next().unwrap() });
                }
                out.add_term(ma.union(mb), f.mul(ca, cb));
            }
        }
        Ok(out)
    }

    /// Multiplies by a single variable.
    pub fn mul_var(&self, var: usize) -> Result<Self> {
        if var == 0 || var > self.nvars {
            return Err(Error::Dimension(format!("variable x{var} outside 1..={}", self.nvars)));
        }
        let bit = VarSet::singleton(var);
        let mut out = Self::zero(self.field, self.nvars);
        for (m, c) in self.terms() {
            if m.contains(var) {
                return Err(Error::MultilinearityViolation { var });
            }
            out.terms.insert(m.union(bit), c);
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[Fe]) -> Result<Fe> {
        if point.len() != self.nvars {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, polynomial has {} variables",
                point.len(),
                self.nvars
            )));
        }
        let f = self.field;
        let mut acc = Fe::ZERO;
        for (m, c) in self.terms() {
            let term = m.iter().fold(c, |t, v| f.mul(t, point[v - 1]));
            acc = f.add(acc, term);
        }
        Ok(acc)
    }

    /// Exact comparison of term maps, or Schwartz–Zippel testing at random points.
    /// The randomized mode is one-sided: `false` is always a proof of inequality.
    pub fn equals(&self, other: &Self, mode: EqualityMode) -> Result<bool> {
        self.check_compatible(other)?;
        match mode {
            EqualityMode::Exact => Ok(self.terms == other.terms),
            EqualityMode::Randomized { seed, trials } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..trials {
                    let pt: Vec<Fe> = (0..self.nvars).map(|_| self.field.random(&mut rng)).collect();
                    if self.eval(&pt)? != other.eval(&pt)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Canonical serializable form: terms sorted lexicographically by their
    /// ascending variable lists.
    pub fn to_json(&self) -> PolyJson {
        let mut terms: Vec<TermJson> = self
            .terms()
            .map(|(m, c)| TermJson { vars: m.to_vec(), coeff: c.to_string() })
            .collect();
        terms.sort_by(|a, b| a.vars.cmp(&b.vars));
        PolyJson { nvars: self.nvars, p: self.field.modulus(), terms }
    }

    pub fn from_json(j: &PolyJson) -> Result<Self> {
        if j.nvars > MAX_VARS {
            return Err(Error::Dimension(format!("{} variables exceeds {MAX_VARS}", j.nvars)));
        }
        let field = PrimeField::new(j.p)?;
        let mut parsed = Vec::with_capacity(j.terms.len());
        for t in &j.terms {
            parsed.push((t.vars.clone(), field.parse(&t.coeff)?));
        }
        Self::from_terms(field, j.nvars, parsed)
    }
}

/// Upper bound on the per-trial false-positive rate of randomized equality:
/// a nonzero multilinear difference has total degree at most `nvars`.
pub fn schwartz_zippel_error(nvars: usize, p: u64, trials: u32) -> f64 {
    (nvars as f64 / p as f64).powi(trials as i32)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub vars: Vec<usize>,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyJson {
    pub nvars: usize,
    pub p: u64,
    pub terms: Vec<TermJson>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f() -> PrimeField {
        PrimeField::default()
    }

    fn poly(nvars: usize, terms: &[(&[usize], i64)]) -> MultilinearPoly {
        MultilinearPoly::from_terms(f(), nvars, terms.iter().map(|(v, c)| (v.to_vec(), f().from_i64(*c)))).unwrap()
    }

    #[test]
    fn add_examples() {
        let a = poly(2, &[(&[1], 1), (&[2], 1)]);
        let b = poly(2, &[(&[2], 1)]);
        assert_eq!(a.add(&b).unwrap(), poly(2, &[(&[1], 1), (&[2], 2)]));
        assert_eq!(a.add(&MultilinearPoly::zero(f(), 2)).unwrap(), a);
        let p = f().modulus() as i64;
        let c = poly(2, &[(&[], 1), (&[1, 2], 1)]);
        let d = poly(2, &[(&[1, 2], p - 1)]);
        assert_eq!(c.add(&d).unwrap(), MultilinearPoly::one(f(), 2));
    }

    #[test]
    fn add_rejects_mismatched_nvars() {
        let a = poly(2, &[(&[1], 1)]);
        let b = poly(3, &[(&[1], 1)]);
        assert!(matches!(a.add(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn mul_examples() {
        let a = poly(2, &[(&[], 1), (&[1], 1)]);
        let b = poly(2, &[(&[], 1), (&[2], 1)]);
        assert_eq!(a.mul(&b).unwrap(), poly(2, &[(&[], 1), (&[1], 1), (&[2], 1), (&[1, 2], 1)]));
        assert_eq!(a.mul(&MultilinearPoly::one(f(), 2)).unwrap(), a);
        let x1 = MultilinearPoly::var(f(), 2, 1);
        assert_eq!(x1.mul(&x1), Err(Error::MultilinearityViolation { var: 1 }));
    }

    #[test]
    fn eval_examples() {
        let fld = f();
        let a = poly(2, &[(&[], 1), (&[1, 2], 1)]);
        assert_eq!(a.eval(&[Fe::ONE, Fe::ONE]).unwrap(), fld.elem(2));
        assert_eq!(a.eval(&[Fe::ZERO, Fe::ZERO]).unwrap(), a.constant_term());
        let b = poly(3, &[(&[1], 1), (&[2, 3], 1)]);
        assert_eq!(b.eval(&[fld.elem(2), fld.elem(3), fld.elem(4)]).unwrap(), fld.elem(14));
        assert!(matches!(b.eval(&[Fe::ONE]), Err(Error::Dimension(_))));
    }

    #[test]
    fn equality_examples() {
        let a = poly(2, &[(&[1], 1), (&[2], 1)]);
        let b = poly(2, &[(&[2], 1), (&[1], 1)]);
        assert!(a.equals(&b, EqualityMode::Exact).unwrap());
        let x1 = MultilinearPoly::var(f(), 2, 1);
        let x2 = MultilinearPoly::var(f(), 2, 2);
        assert!(!x1.equals(&x2, EqualityMode::Exact).unwrap());
        let mode = EqualityMode::Randomized { seed: 9, trials: 20 };
        assert!(!x1.equals(&x2, mode).unwrap());
        assert!(a.equals(&b, mode).unwrap());
        // 20 trials at n <= 64 and p > 2^61 leave a negligible error.
        assert!(schwartz_zippel_error(64, f().modulus(), 20) < 1e-300);
    }

    #[test]
    fn json_is_canonical() {
        let a = poly(3, &[(&[2], 5), (&[1, 3], 1), (&[], 2), (&[1], 7)]);
        let j = a.to_json();
        let vars: Vec<Vec<usize>> = j.terms.iter().map(|t| t.vars.clone()).collect();
        assert_eq!(vars, vec![vec![], vec![1], vec![1, 3], vec![2]]);
        let text = serde_json::to_string(&j).unwrap();
        let back = MultilinearPoly::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, a);
        assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), text);
    }

    #[test]
    fn varset_iteration() {
        let s = VarSet::from_vars([3, 1, 64]);
        assert_eq!(s.to_vec(), vec![1, 3, 64]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.max_var(), 64);
        assert!(VarSet::EMPTY.is_empty());
        assert_eq!(VarSet::full(3).to_vec(), vec![1, 2, 3]);
    }
}
