//! Variable-balanced decomposition of a subprogram `[u, v]`.
//!
//! Nodes are colored by how many variables they have seen since `u`
//! (`n = |X_{u,v}|`): blue above `2n/3`, red in `[n/3, 2n/3]`, green below
//! `n/3`. Coloring spreads backwards from `v` through blue nodes only. Every
//! `u → v` path then crosses exactly one red→blue or green→blue edge, which
//! splits `[u, v]` into a sum of products of smaller subprograms.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::abp::{Abp, EdgeId, Label, NodeId};
use crate::error::{Error, Result};
use crate::poly::{EqualityMode, MultilinearPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Red,
    Green,
    Uncolored,
}

/// Color for a node with `seen = |X_{u,a}|` inside a subprogram on `n`
/// variables. Integer comparisons avoid rounding the thirds.
pub fn threshold_color(seen: usize, n: usize) -> Color {
    if 3 * seen > 2 * n {
        Color::Blue
    } else if 3 * seen >= n {
        Color::Red
    } else {
        Color::Green
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    pub u: NodeId,
    pub v: NodeId,
    /// `|X_{u,v}|`.
    pub n: usize,
    /// Colors of the nodes on `u → v` paths.
    pub colors: BTreeMap<NodeId, Color>,
    /// `|X_{u,a}|` for the same nodes.
    pub seen: BTreeMap<NodeId, usize>,
}

impl Coloring {
    pub fn color(&self, id: NodeId) -> Color {
        self.colors.get(&id).copied().unwrap_or(Color::Uncolored)
    }
}

pub fn color_nodes(p: &Abp, u: NodeId, v: NodeId) -> Result<Coloring> {
    let (ui, vi) = (p.idx(u)?, p.idx(v)?);
    Ok(coloring_with_offset(p, ui, vi, 0))
}

/// Coloring of `[u, v]` preceded by `offset` variables read before `u`
/// (a leading edge label). Counts in the result exclude the offset.
pub(crate) fn coloring_with_offset(p: &Abp, ui: usize, vi: usize, offset: usize) -> Coloring {
    let (u, v) = (p.id_at(ui), p.id_at(vi));
    let live = p.between(ui, vi);
    let from = p.vars_from(ui);
    let n = p.vars_between(ui, vi).len();
    let total = n + offset;
    let mut colors = BTreeMap::new();
    let mut seen = BTreeMap::new();
    for (i, &ok) in live.iter().enumerate() {
        if ok {
            colors.insert(p.id_at(i), Color::Uncolored);
            seen.insert(p.id_at(i), from[i].len());
        }
    }
    if !live[ui] {
        return Coloring { u, v, n, colors, seen };
    }
    colors.insert(v, Color::Blue);
    let mut queue = VecDeque::from([vi]);
    while let Some(b) = queue.pop_front() {
        for &e in p.ins(b) {
            let a = p.tail(e);
            if !live[a] {
                continue;
            }
            let id = p.id_at(a);
            if colors[&id] != Color::Uncolored {
                continue;
            }
            let c = threshold_color(offset + from[a].len(), total);
            colors.insert(id, c);
            if c == Color::Blue {
                queue.push_back(a);
            }
        }
    }
    Coloring { u, v, n, colors, seen }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingKind {
    RedBlue,
    GreenBlue,
}

/// One crossing edge with the variable counts the size bounds talk about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossingEdge {
    pub edge: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub label: Label,
    /// `|X_{u,from}|`.
    pub vars_before: usize,
    /// `|X_{to,v}|`.
    pub vars_after: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summand {
    pub left: MultilinearPoly,
    pub label: Label,
    pub right: MultilinearPoly,
}

impl Summand {
    pub fn product(&self) -> Result<MultilinearPoly> {
        self.label.apply(&self.left)?.mul(&self.right)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub u: NodeId,
    pub v: NodeId,
    pub n: usize,
    pub e_rb: Vec<CrossingEdge>,
    pub e_gb: Vec<CrossingEdge>,
    /// One summand per edge, `e_rb` first then `e_gb`.
    pub summands: Vec<Summand>,
}

/// The crossing edges alone, without expanding any polynomial.
pub fn crossing_edges(p: &Abp, u: NodeId, v: NodeId) -> Result<(Vec<CrossingEdge>, Vec<CrossingEdge>)> {
    let (ui, vi) = (p.idx(u)?, p.idx(v)?);
    if p.vars_between(ui, vi).is_empty() {
        return Err(Error::DegenerateInput(format!("subprogram [{u}, {v}] reads no variable")));
    }
    let mut e_rb = Vec::new();
    let mut e_gb = Vec::new();
    for (kind, c) in crossings_with_offset(p, ui, vi, 0) {
        match kind {
            CrossingKind::RedBlue => e_rb.push(c),
            CrossingKind::GreenBlue => e_gb.push(c),
        }
    }
    Ok((e_rb, e_gb))
}

/// Crossing edges of `[u, v]` after `offset` leading variables, in edge order.
pub(crate) fn crossings_with_offset(p: &Abp, ui: usize, vi: usize, offset: usize) -> Vec<(CrossingKind, CrossingEdge)> {
    let coloring = coloring_with_offset(p, ui, vi, offset);
    let to = p.vars_to(vi);
    let mut out = Vec::new();
    for (e, edge) in p.edges().iter().enumerate() {
        if coloring.color(edge.to) != Color::Blue {
            continue;
        }
        let kind = match coloring.color(edge.from) {
            Color::Red => CrossingKind::RedBlue,
            Color::Green => CrossingKind::GreenBlue,
            _ => continue,
        };
        let crossing = CrossingEdge {
            edge: e,
            from: edge.from,
            to: edge.to,
            label: edge.label,
            vars_before: coloring.seen[&edge.from],
            vars_after: to[p.head(e)].len(),
        };
        out.push((kind, crossing));
    }
    out
}

pub fn decompose(p: &Abp, u: NodeId, v: NodeId) -> Result<Decomposition> {
    let (ui, vi) = (p.idx(u)?, p.idx(v)?);
    let check = p.multilinear_between(ui, vi);
    if let Some(var) = check.repeated_var {
        return Err(Error::MultilinearityViolation { var });
    }
    let (e_rb, e_gb) = crossing_edges(p, u, v)?;
    let n = p.vars_between(ui, vi).len();
    let left_polys = p.polys_from(ui, Some(vi))?;
    let zero = MultilinearPoly::zero(p.field(), p.nvars());
    let summands = e_rb
        .iter()
        .chain(&e_gb)
        .map(|c| {
            let left = left_polys[p.idx(c.from)?].clone().unwrap_or_else(|| zero.clone());
            let right = p.poly_between(p.idx(c.to)?, vi)?;
            Ok(Summand { left, label: c.label, right })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition { u, v, n, e_rb, e_gb, summands })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub sum_matches: bool,
    pub red_bounds_hold: bool,
    pub green_bounds_hold: bool,
}

impl DecompositionCheck {
    pub fn ok(&self) -> bool {
        self.sum_matches && self.red_bounds_hold && self.green_bounds_hold
    }
}

/// Recomputes the summand sum and both size bounds from `p` itself.
pub fn verify_decomposition(p: &Abp, d: &Decomposition) -> Result<DecompositionCheck> {
    let (ui, vi) = (p.idx(d.u)?, p.idx(d.v)?);
    let n = p.vars_between(ui, vi).len();
    let mut total = MultilinearPoly::zero(p.field(), p.nvars());
    for s in &d.summands {
        total.add_assign_unchecked(&s.product()?);
    }
    let target = p.poly_between(ui, vi)?;
    let sum_matches = total.equals(&target, EqualityMode::Exact)?;
    let mut red_bounds_hold = true;
    for c in &d.e_rb {
        let before = p.vars_between(ui, p.idx(c.from)?).len();
        red_bounds_hold &= n <= 3 * before && 3 * before <= 2 * n;
    }
    let mut green_bounds_hold = true;
    for c in &d.e_gb {
        let before = p.vars_between(ui, p.idx(c.from)?).len();
        let after = p.vars_between(p.idx(c.to)?, vi).len();
        green_bounds_hold &= 3 * (before + after) <= 2 * n;
    }
    Ok(DecompositionCheck { sum_matches, red_bounds_hold, green_bounds_hold })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingEdgeJson {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: CrossingKind,
    /// `|X_{u,from}|`.
    pub vars_before: usize,
    /// `|X_{to,v}|`.
    pub vars_after: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub u: NodeId,
    pub v: NodeId,
    pub n: usize,
    pub edges: Vec<CrossingEdgeJson>,
    pub check: DecompositionCheck,
    pub verified: bool,
}

impl Decomposition {
    pub fn report(&self, check: DecompositionCheck) -> DecompositionReport {
        let entry = |c: &CrossingEdge, kind| CrossingEdgeJson {
            from: c.from,
            to: c.to,
            kind,
            vars_before: c.vars_before,
            vars_after: c.vars_after,
        };
        let edges = self
            .e_rb
            .iter()
            .map(|c| entry(c, CrossingKind::RedBlue))
            .chain(self.e_gb.iter().map(|c| entry(c, CrossingKind::GreenBlue)))
            .collect();
        let verified = check.ok();
        DecompositionReport { u: self.u, v: self.v, n: self.n, edges, check, verified }
    }
}
