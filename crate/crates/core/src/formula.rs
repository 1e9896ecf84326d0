//! Depth reduction from ABPs to syntactic multilinear formulas.
//!
//! The construction splits `[u, v]` along its variable-balanced decomposition
//! until every piece reads at most `tau = ceil(sqrt(n))` variables. A piece
//! is a sequence of subprograms and edge labels whose product is the leaf's
//! polynomial, so leaves stay lazy references into the program.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::abp::{Abp, Label, LabelJson, NodeId};
use crate::decompose::{crossings_with_offset, CrossingKind};
use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};
use crate::poly::{MultilinearPoly, PolyJson, VarSet};

pub type GateId = usize;

/// Default cap on the number of gates a construction may create.
pub const DEFAULT_GATE_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Part {
    /// The subprogram `[from, to]`.
    Sub { from: NodeId, to: NodeId },
    Label(Label),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    /// Factors whose product is the leaf polynomial, in path order.
    pub parts: Vec<Part>,
    /// Variables read by any path through the parts.
    pub vars: VarSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    Plus(Vec<GateId>),
    Times(GateId, GateId),
    Leaf(Leaf),
    Const(Fe),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SharingMode {
    /// Every recursive call gets fresh gates; the result is a formula.
    #[default]
    Tree,
    /// Identical subproblems share one gate.
    Dag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormulaConfig {
    pub gate_budget: u64,
    pub sharing: SharingMode,
}

impl Default for FormulaConfig {
    fn default() -> Self {
        FormulaConfig { gate_budget: DEFAULT_GATE_BUDGET, sharing: SharingMode::Tree }
    }
}

#[derive(Clone, Debug)]
pub struct Formula {
    abp: Abp,
    tau: usize,
    gates: Vec<Gate>,
    root: GateId,
}

pub fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// Depth the construction must respect on `n` variables: `2·log_{3/2}(n) + 2`.
pub fn depth_bound(n: usize) -> f64 {
    if n <= 1 {
        return 2.0;
    }
    2.0 * (n as f64).ln() / 1.5f64.ln() + 2.0
}

/// A subproblem: an optional leading label followed by `[u, v]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Segment {
    lead: Option<Label>,
    u: usize,
    v: usize,
}

struct Builder<'a> {
    abp: &'a Abp,
    tau: usize,
    cfg: FormulaConfig,
    gates: Vec<Gate>,
    memo: HashMap<Segment, GateId>,
}

impl Builder<'_> {
    fn push(&mut self, g: Gate) -> Result<GateId> {
        if self.gates.len() as u64 >= self.cfg.gate_budget {
            return Err(Error::budget("formula gates", self.cfg.gate_budget, self.gates.len() as u64 + 1));
        }
        self.gates.push(g);
        Ok(self.gates.len() - 1)
    }

    fn leaf(&mut self, parts: Vec<Part>) -> Result<GateId> {
        let mut vars = VarSet::EMPTY;
        for part in &parts {
            vars = vars.union(match *part {
                Part::Sub { from, to } => self.abp.subprogram_vars(from, to)?,
                Part::Label(l) => l.vars(),
            });
        }
        self.push(Gate::Leaf(Leaf { parts, vars }))
    }

    fn sub(&self, u: usize, v: usize) -> Part {
        Part::Sub { from: self.abp.id_at(u), to: self.abp.id_at(v) }
    }

    fn parts(&self, seg: Segment) -> Vec<Part> {
        let mut parts = Vec::with_capacity(2);
        if let Some(l) = seg.lead {
            parts.push(Part::Label(l));
        }
        parts.push(self.sub(seg.u, seg.v));
        parts
    }

    fn build(&mut self, seg: Segment) -> Result<GateId> {
        if self.cfg.sharing == SharingMode::Dag {
            if let Some(&g) = self.memo.get(&seg) {
                return Ok(g);
            }
        }
        let g = self.build_fresh(seg)?;
        if self.cfg.sharing == SharingMode::Dag {
            self.memo.insert(seg, g);
        }
        Ok(g)
    }

    fn build_fresh(&mut self, seg: Segment) -> Result<GateId> {
        let lead_vars = seg.lead.map_or(VarSet::EMPTY, Label::vars);
        let inner = self.abp.vars_between(seg.u, seg.v);
        if lead_vars.len() + inner.len() <= self.tau {
            let parts = self.parts(seg);
            return self.leaf(parts);
        }
        let offset = lead_vars.len();
        let crossings = crossings_with_offset(self.abp, seg.u, seg.v, offset);
        let mut children = Vec::with_capacity(crossings.len());
        for (kind, c) in crossings {
            let a = self.abp.idx(c.from)?;
            let b = self.abp.idx(c.to)?;
            let left = Segment { lead: seg.lead, u: seg.u, v: a };
            let right = Segment { lead: Some(c.label), u: b, v: seg.v };
            let fused_size = offset + c.vars_before + c.label.vars().len() + c.vars_after;
            let child = if kind == CrossingKind::GreenBlue && fused_size <= self.tau {
                let mut parts = self.parts(left);
                parts.push(Part::Label(c.label));
                parts.push(self.sub(b, seg.v));
                let fused = self.leaf(parts)?;
                let one = self.push(Gate::Const(Fe::ONE))?;
                self.push(Gate::Times(fused, one))?
            } else {
                let l = self.build(left)?;
                let r = self.build(right)?;
                self.push(Gate::Times(l, r))?
            };
            children.push(child);
        }
        match children.len() {
            0 => self.push(Gate::Const(Fe::ZERO)),
            1 => Ok(children[0]),
            _ => self.push(Gate::Plus(children)),
        }
    }
}

/// Builds the formula for the whole program with the default configuration.
pub fn abp_to_formula(p: &Abp) -> Result<Formula> {
    abp_to_formula_with(p, FormulaConfig::default())
}

pub fn abp_to_formula_with(p: &Abp, cfg: FormulaConfig) -> Result<Formula> {
    let check = p.is_syntactic_multilinear();
    if let Some(var) = check.repeated_var {
        return Err(Error::MultilinearityViolation { var });
    }
    let tau = ceil_sqrt(p.nvars());
    let mut b = Builder { abp: p, tau, cfg, gates: Vec::new(), memo: HashMap::new() };
    let root = b.build(Segment { lead: None, u: 0, v: p.node_count() - 1 })?;
    let gates = b.gates;
    let f = Formula { abp: p.clone(), tau, gates, root };
    let bound = depth_bound(p.nvars());
    if f.depth() as f64 > bound {
        return Err(Error::InternalContradiction(format!("formula depth {} exceeds {bound:.2}", f.depth())));
    }
    Ok(f)
}

impl Formula {
    pub fn abp(&self) -> &Abp {
        &self.abp
    }

    pub fn nvars(&self) -> usize {
        self.abp.nvars()
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn root(&self) -> GateId {
        self.root
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, g: GateId) -> &Gate {
        &self.gates[g]
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Leaves reachable from the root, by gate id.
    pub fn leaves(&self) -> impl Iterator<Item = (GateId, &Leaf)> {
        self.gates.iter().enumerate().filter_map(|(i, g)| match g {
            Gate::Leaf(l) => Some((i, l)),
            _ => None,
        })
    }

    /// Longest root-to-leaf gate count, with a lone leaf at depth 0.
    pub fn depth(&self) -> usize {
        // Children always have smaller ids than their parents.
        let mut d = vec![0usize; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            d[i] = match g {
                Gate::Plus(cs) => 1 + cs.iter().map(|&c| d[c]).max().unwrap_or(0),
                Gate::Times(a, b) => 1 + d[*a].max(d[*b]),
                _ => 0,
            };
        }
        d[self.root]
    }

    /// Variable set below each gate.
    pub fn gate_vars(&self) -> Vec<VarSet> {
        let mut vs = vec![VarSet::EMPTY; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            vs[i] = match g {
                Gate::Plus(cs) => cs.iter().fold(VarSet::EMPTY, |acc, &c| acc.union(vs[c])),
                Gate::Times(a, b) => vs[*a].union(vs[*b]),
                Gate::Leaf(l) => l.vars,
                Gate::Const(_) => VarSet::EMPTY,
            };
        }
        vs
    }

    /// Whether both children of every product gate read disjoint variables.
    pub fn is_syntactic_multilinear(&self) -> bool {
        let vs = self.gate_vars();
        self.gates.iter().all(|g| match g {
            Gate::Times(a, b) => vs[*a].is_disjoint(vs[*b]),
            _ => true,
        })
    }

    pub fn max_leaf_arity(&self) -> usize {
        self.leaves().map(|(_, l)| l.vars.len()).max().unwrap_or(0)
    }

    pub fn leaf_poly(&self, leaf: &Leaf) -> Result<MultilinearPoly> {
        let mut acc = MultilinearPoly::one(self.abp.field(), self.abp.nvars());
        for part in &leaf.parts {
            acc = match *part {
                Part::Sub { from, to } => acc.mul(&self.abp.subprogram_poly(from, to)?)?,
                Part::Label(l) => l.apply(&acc)?,
            };
        }
        Ok(acc)
    }

    fn gate_leaf_poly(&self, g: GateId) -> Result<MultilinearPoly> {
        match &self.gates[g] {
            Gate::Leaf(l) => self.leaf_poly(l),
            Gate::Const(c) => Ok(MultilinearPoly::constant(self.abp.field(), self.abp.nvars(), *c)),
            _ => Err(Error::InternalContradiction(format!("gate {g} is not a leaf"))),
        }
    }

    /// Bottom-up evaluation.
    pub fn poly(&self) -> Result<MultilinearPoly> {
        let mut vals: Vec<Option<MultilinearPoly>> = vec![None; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            let v = match g {
                Gate::Plus(cs) => {
                    let mut acc = MultilinearPoly::zero(self.abp.field(), self.abp.nvars());
                    for &c in cs {
                        acc.add_assign_unchecked(vals[c].as_ref().expect("children precede parents"));
                    }
                    acc
                }
                Gate::Times(a, b) => {
                    let (x, y) = (vals[*a].as_ref(), vals[*b].as_ref());
                    x.expect("children precede parents").mul(y.expect("children precede parents"))?
                }
                _ => self.gate_leaf_poly(i)?,
            };
            vals[i] = Some(v);
        }
        Ok(vals[self.root].take().expect("root evaluated"))
    }

    /// Number of parse trees, saturating.
    pub fn parse_tree_count(&self) -> u128 {
        let mut c = vec![0u128; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            c[i] = match g {
                Gate::Plus(cs) => cs.iter().fold(0u128, |acc, &k| acc.saturating_add(c[k])),
                Gate::Times(a, b) => c[*a].saturating_mul(c[*b]),
                _ => 1,
            };
        }
        c[self.root]
    }

    /// Maximum over parse trees of the summed leaf weights, by dynamic
    /// programming: sums pick their best child, products add.
    pub fn max_over_parse_trees<F>(&self, mut weight: F) -> Result<u64>
    where
        F: FnMut(GateId, &Gate) -> Result<u64>,
    {
        let mut best = vec![0u64; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            best[i] = match g {
                Gate::Plus(cs) => cs.iter().map(|&k| best[k]).max().unwrap_or(0),
                Gate::Times(a, b) => best[*a] + best[*b],
                _ => weight(i, g)?,
            };
        }
        Ok(best[self.root])
    }

    /// Largest number of leaves reading at least one variable in any parse tree.
    pub fn max_nonconstant_leaves(&self) -> u64 {
        self.max_over_parse_trees(|_, g| Ok(matches!(g, Gate::Leaf(l) if !l.vars.is_empty()) as u64))
            .expect("infallible weight")
    }

    pub fn parse_trees(&self, cap: u64) -> ParseTrees<'_> {
        ParseTrees { formula: self, choices: HashMap::new(), done: false, produced: 0, cap }
    }

    pub fn to_json(&self) -> FormulaJson {
        let gates = self
            .gates
            .iter()
            .map(|g| match g {
                Gate::Plus(cs) => GateJson::Plus(cs.clone()),
                Gate::Times(a, b) => GateJson::Times([*a, *b]),
                Gate::Const(c) => GateJson::Const(c.to_string()),
                Gate::Leaf(l) => GateJson::Leaf {
                    parts: l
                        .parts
                        .iter()
                        .map(|p| match *p {
                            Part::Sub { from, to } => PartJson::Sub([from, to]),
                            Part::Label(Label::Var(v)) => PartJson::Label(LabelJson::Var(v)),
                            Part::Label(Label::Const(c)) => PartJson::Label(LabelJson::Const(c.to_string())),
                        })
                        .collect(),
                    vars: l.vars.to_vec(),
                },
            })
            .collect();
        FormulaJson { nvars: self.nvars(), tau: self.tau, depth: self.depth(), root: self.root, gates }
    }
}

/// One parse tree: the choice made at each retained sum gate and the
/// retained leaves, both in preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseTree {
    pub choices: Vec<(GateId, usize)>,
    pub leaves: Vec<GateId>,
}

impl ParseTree {
    /// Product of the leaf polynomials.
    pub fn value(&self, f: &Formula) -> Result<MultilinearPoly> {
        let mut acc = MultilinearPoly::one(f.abp.field(), f.abp.nvars());
        for &g in &self.leaves {
            acc = acc.mul(&f.gate_leaf_poly(g)?)?;
        }
        Ok(acc)
    }
}

/// Lexicographic enumeration of parse trees over preorder choice sequences.
pub struct ParseTrees<'a> {
    formula: &'a Formula,
    choices: HashMap<GateId, usize>,
    done: bool,
    produced: u64,
    cap: u64,
}

impl ParseTrees<'_> {
    fn walk(&self) -> ParseTree {
        let mut tree = ParseTree { choices: Vec::new(), leaves: Vec::new() };
        let mut stack = vec![self.formula.root];
        while let Some(g) = stack.pop() {
            match &self.formula.gates[g] {
                Gate::Plus(cs) => {
                    let k = self.choices.get(&g).copied().unwrap_or(0);
                    tree.choices.push((g, k));
                    stack.push(cs[k]);
                }
                Gate::Times(a, b) => {
                    stack.push(*b);
                    stack.push(*a);
                }
                _ => tree.leaves.push(g),
            }
        }
        tree
    }
}

impl Iterator for ParseTrees<'_> {
    type Item = Result<ParseTree>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.produced >= self.cap {
            self.done = true;
            return Some(Err(Error::budget("parse trees", self.cap, self.produced + 1)));
        }
        let tree = self.walk();
        self.produced += 1;
        let bump = tree.choices.iter().rposition(|&(g, k)| match &self.formula.gates[g] {
            Gate::Plus(cs) => k + 1 < cs.len(),
            _ => false,
        });
        match bump {
            None => self.done = true,
            Some(i) => {
                let mut next: HashMap<GateId, usize> = tree.choices[..i].iter().copied().collect();
                let (g, k) = tree.choices[i];
                next.insert(g, k + 1);
                self.choices = next;
            }
        }
        Some(Ok(tree))
    }
}

/// A sum of products of small polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Depth4Form {
    pub field: PrimeField,
    pub nvars: usize,
    pub products: Vec<Vec<MultilinearPoly>>,
}

/// One product per parse tree; each factor is an expanded leaf. Leaves that
/// read no variable are folded into the first factor.
pub fn flatten_depth4(f: &Formula, cap: u64) -> Result<Depth4Form> {
    let mut cache: HashMap<GateId, MultilinearPoly> = HashMap::new();
    let mut products = Vec::new();
    for tree in f.parse_trees(cap) {
        let tree = tree?;
        let mut constant = Fe::ONE;
        let mut factors = Vec::new();
        for &g in &tree.leaves {
            match &f.gates[g] {
                Gate::Const(c) => constant = f.abp.field().mul(constant, *c),
                Gate::Leaf(l) if l.vars.is_empty() => constant = f.abp.field().mul(constant, f.leaf_poly(l)?.constant_term()),
                Gate::Leaf(l) => {
                    if !cache.contains_key(&g) {
                        cache.insert(g, f.leaf_poly(l)?);
                    }
                    factors.push(cache[&g].clone());
                }
                _ => unreachable!("parse tree leaves are leaf gates"),
            }
        }
        match factors.first_mut() {
            Some(first) => *first = first.scale(constant),
            None => factors.push(MultilinearPoly::constant(f.abp.field(), f.nvars(), constant)),
        }
        products.push(factors);
    }
    Ok(Depth4Form { field: f.abp.field(), nvars: f.nvars(), products })
}

impl Depth4Form {
    pub fn poly(&self) -> Result<MultilinearPoly> {
        let mut total = MultilinearPoly::zero(self.field, self.nvars);
        for factors in &self.products {
            let mut prod = MultilinearPoly::one(self.field, self.nvars);
            for fac in factors {
                prod = prod.mul(fac)?;
            }
            total.add_assign_unchecked(&prod);
        }
        Ok(total)
    }

    pub fn max_factors(&self) -> usize {
        self.products.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_factor_arity(&self) -> usize {
        self.products.iter().flatten().map(|p| p.vars().len()).max().unwrap_or(0)
    }

    /// Whether the factors of every product read pairwise disjoint variables.
    pub fn factors_disjoint(&self) -> bool {
        self.products.iter().all(|fs| {
            let mut seen = VarSet::EMPTY;
            fs.iter().all(|p| {
                let v = p.vars();
                let ok = seen.is_disjoint(v);
                seen = seen.union(v);
                ok
            })
        })
    }

    pub fn to_json(&self) -> Depth4Json {
        Depth4Json {
            nvars: self.nvars,
            p: self.field.modulus(),
            products: self.products.iter().map(|fs| fs.iter().map(MultilinearPoly::to_json).collect()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartJson {
    Sub([NodeId; 2]),
    Label(LabelJson),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateJson {
    Plus(Vec<GateId>),
    Times([GateId; 2]),
    Leaf { parts: Vec<PartJson>, vars: Vec<usize> },
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaJson {
    pub nvars: usize,
    pub tau: usize,
    pub depth: usize,
    pub root: GateId,
    /// Gates in construction order; children precede parents.
    pub gates: Vec<GateJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Depth4Json {
    pub nvars: usize,
    pub p: u64,
    pub products: Vec<Vec<PolyJson>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abp::AbpBuilder;
    use crate::poly::EqualityMode;

    fn chain(n: usize) -> Abp {
        let mut b = AbpBuilder::new(PrimeField::default(), n);
        let mut prev = b.source();
        for i in 1..=n {
            let x = b.node(i);
            b.var_edge(prev, x, i).const_edge(prev, x, 1);
            prev = x;
        }
        b.build().unwrap()
    }

    #[test]
    fn ceil_sqrt_values() {
        let got: Vec<_> = [0, 1, 2, 4, 5, 9, 10, 16, 17].iter().map(|&n| ceil_sqrt(n)).collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 4, 4, 5]);
    }

    #[test]
    fn small_program_is_one_leaf() {
        let p = chain(4);
        let f = abp_to_formula(&p).unwrap();
        // tau = 2 < 4, so this splits; a 1-variable program does not.
        assert!(f.gate_count() > 1);
        let q = chain(1);
        let g = abp_to_formula(&q).unwrap();
        assert_eq!(g.gate_count(), 1);
        assert_eq!(g.parse_trees(10).count(), 1);
        assert_eq!(g.max_nonconstant_leaves(), 1);
    }

    #[test]
    fn chain_formula_is_faithful() {
        for n in [4, 9, 16] {
            let p = chain(n);
            let f = abp_to_formula(&p).unwrap();
            assert!(f.poly().unwrap().equals(&p.poly().unwrap(), EqualityMode::Exact).unwrap());
            assert!(f.is_syntactic_multilinear());
            assert!(f.max_leaf_arity() <= ceil_sqrt(n));
            assert!(f.max_nonconstant_leaves() as usize <= 3 * ceil_sqrt(n));
            assert!(f.depth() as f64 <= depth_bound(n));
        }
    }

    #[test]
    fn parse_tree_enumeration_matches_count_and_value() {
        let p = chain(9);
        let f = abp_to_formula(&p).unwrap();
        let trees: Vec<_> = f.parse_trees(1_000_000).collect::<Result<_>>().unwrap();
        assert_eq!(trees.len() as u128, f.parse_tree_count());
        let mut sum = MultilinearPoly::zero(p.field(), p.nvars());
        for t in &trees {
            sum = sum.add(&t.value(&f).unwrap()).unwrap();
        }
        assert_eq!(sum, p.poly().unwrap());
        assert!(matches!(f.parse_trees(1).nth(1), Some(Err(Error::BudgetExceeded { .. }))));
    }

    #[test]
    fn plus_of_k_leaves_has_k_trees() {
        // A formula assembled by hand: Plus of three constant leaves.
        let p = chain(1);
        let gates = vec![Gate::Const(Fe::ONE), Gate::Const(Fe::ONE), Gate::Const(Fe::ONE), Gate::Plus(vec![0, 1, 2])];
        let f = Formula { abp: p, tau: 1, gates, root: 3 };
        assert_eq!(f.parse_trees(10).count(), 3);
        assert_eq!(f.poly().unwrap().constant_term().value(), 3);
    }

    #[test]
    fn depth4_matches() {
        let p = chain(9);
        let f = abp_to_formula(&p).unwrap();
        let d = flatten_depth4(&f, 1_000_000).unwrap();
        assert_eq!(d.poly().unwrap(), p.poly().unwrap());
        assert!(d.max_factor_arity() <= 3);
        assert!(d.max_factors() <= 9);
        assert!(d.factors_disjoint());
    }
}
