//! Layered algebraic branching programs.
//!
//! An [`Abp`] is a layered DAG from a unique source to a unique sink whose
//! edges carry a variable or a field constant. The program computes the sum
//! over source-to-sink paths of the product of edge labels; `[u, v]` denotes
//! the same sum restricted to `u → v` paths, with `[u, u] = 1`.

mod normalize;
mod ordering;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};
use crate::poly::{MultilinearPoly, VarSet, MAX_VARS};

pub use ordering::{OrderCheck, ORDER_ENUMERATION_LIMIT};

pub type NodeId = u32;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Var(usize),
    Const(Fe),
}

impl Label {
    pub fn var(self) -> Option<usize> {
        match self {
            Label::Var(v) => Some(v),
            Label::Const(_) => None,
        }
    }

    pub fn vars(self) -> VarSet {
        match self {
            Label::Var(v) => VarSet::singleton(v),
            Label::Const(_) => VarSet::EMPTY,
        }
    }

    pub fn to_poly(self, field: PrimeField, nvars: usize) -> MultilinearPoly {
        match self {
            Label::Var(v) => MultilinearPoly::var(field, nvars, v),
            Label::Const(c) => MultilinearPoly::constant(field, nvars, c),
        }
    }

    /// `p · label`.
    pub fn apply(self, p: &MultilinearPoly) -> Result<MultilinearPoly> {
        match self {
            Label::Var(v) => p.mul_var(v),
            Label::Const(c) => Ok(p.scale(c)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: Label,
}

/// A source-to-sink (or `u → v`) path as a list of edge ids.
pub type Path = Vec<EdgeId>;

#[derive(Clone, Debug)]
pub struct Abp {
    field: PrimeField,
    nvars: usize,
    layers: Vec<Vec<NodeId>>,
    edges: Vec<Edge>,
    index: HashMap<NodeId, usize>,
    ids: Vec<NodeId>,
    layer_of: Vec<usize>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl PartialEq for Abp {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.nvars == other.nvars
            && self.layers == other.layers
            && self.edges == other.edges
    }
}

impl Eq for Abp {}

impl Abp {
    pub fn new(field: PrimeField, nvars: usize, layers: Vec<Vec<NodeId>>, edges: Vec<Edge>) -> Result<Self> {
        if nvars > MAX_VARS {
            return Err(Error::Dimension(format!("{nvars} variables exceeds {MAX_VARS}")));
        }
        if layers.len() < 2 {
            return Err(Error::Validation("an ABP needs at least a source layer and a sink layer".into()));
        }
        if layers[0].len() != 1 || layers[layers.len() - 1].len() != 1 {
            return Err(Error::Validation("first and last layers must each hold exactly one node".into()));
        }
        let mut index = HashMap::new();
        let mut ids = Vec::new();
        let mut layer_of = Vec::new();
        for (li, layer) in layers.iter().enumerate() {
            for &id in layer {
                if index.insert(id, ids.len()).is_some() {
                    return Err(Error::Validation(format!("node {id} appears twice")));
                }
                ids.push(id);
                layer_of.push(li);
            }
        }
        let mut out_edges = vec![Vec::new(); ids.len()];
        let mut in_edges = vec![Vec::new(); ids.len()];
        for (ei, e) in edges.iter().enumerate() {
            let a = *index.get(&e.from).ok_or(Error::Lookup(e.from))?;
            let b = *index.get(&e.to).ok_or(Error::Lookup(e.to))?;
            if layer_of[a] + 1 != layer_of[b] {
                return Err(Error::Validation(format!(
                    "edge {}→{} goes from layer {} to layer {}",
                    e.from, e.to, layer_of[a], layer_of[b]
                )));
            }
            if let Label::Var(v) = e.label {
                if v == 0 || v > nvars {
                    return Err(Error::Validation(format!("edge label x{v} outside 1..={nvars}")));
                }
            }
            out_edges[a].push(ei);
            in_edges[b].push(ei);
        }
        Ok(Abp { field, nvars, layers, edges, index, ids, layer_of, out_edges, in_edges })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn layers(&self) -> &[Vec<NodeId>] {
        &self.layers
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Node ids in layer order.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn source(&self) -> NodeId {
        self.layers[0][0]
    }

    pub fn sink(&self) -> NodeId {
        self.layers[self.layers.len() - 1][0]
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn layer_of(&self, id: NodeId) -> Result<usize> {
        Ok(self.layer_of[self.idx(id)?])
    }

    pub fn out_edges(&self, id: NodeId) -> Result<&[EdgeId]> {
        Ok(&self.out_edges[self.idx(id)?])
    }

    pub fn in_edges(&self, id: NodeId) -> Result<&[EdgeId]> {
        Ok(&self.in_edges[self.idx(id)?])
    }

    pub(crate) fn idx(&self, id: NodeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::Lookup(id))
    }

    pub(crate) fn id_at(&self, i: usize) -> NodeId {
        self.ids[i]
    }

    pub(crate) fn outs(&self, i: usize) -> &[EdgeId] {
        &self.out_edges[i]
    }

    pub(crate) fn ins(&self, i: usize) -> &[EdgeId] {
        &self.in_edges[i]
    }

    pub(crate) fn head(&self, e: EdgeId) -> usize {
        self.index[&self.edges[e].to]
    }

    pub(crate) fn tail(&self, e: EdgeId) -> usize {
        self.index[&self.edges[e].from]
    }

    /// Nodes reachable from `u`, including `u`.
    pub(crate) fn reach_from(&self, u: usize) -> Vec<bool> {
        let mut seen = vec![false; self.ids.len()];
        seen[u] = true;
        // Dense indices are in layer order, so a single sweep suffices.
        for a in u..self.ids.len() {
            if seen[a] {
                for &e in &self.out_edges[a] {
                    seen[self.head(e)] = true;
                }
            }
        }
        seen
    }

    /// Nodes that reach `v`, including `v`.
    pub(crate) fn reach_to(&self, v: usize) -> Vec<bool> {
        let mut seen = vec![false; self.ids.len()];
        seen[v] = true;
        for b in (0..=v).rev() {
            if seen[b] {
                for &e in &self.in_edges[b] {
                    seen[self.tail(e)] = true;
                }
            }
        }
        seen
    }

    /// Nodes lying on some `u → v` path.
    pub(crate) fn between(&self, u: usize, v: usize) -> Vec<bool> {
        let f = self.reach_from(u);
        let b = self.reach_to(v);
        f.iter().zip(&b).map(|(x, y)| *x && *y).collect()
    }

    /// `X_{u,a}` for every node `a` (empty where unreachable).
    pub(crate) fn vars_from(&self, u: usize) -> Vec<VarSet> {
        let reach = self.reach_from(u);
        let mut x = vec![VarSet::EMPTY; self.ids.len()];
        for a in u..self.ids.len() {
            if !reach[a] {
                continue;
            }
            for &e in &self.out_edges[a] {
                let b = self.head(e);
                x[b] = x[b].union(x[a]).union(self.edges[e].label.vars());
            }
        }
        x
    }

    /// `X_{a,v}` for every node `a` (empty where `v` is unreachable).
    pub(crate) fn vars_to(&self, v: usize) -> Vec<VarSet> {
        let reach = self.reach_to(v);
        let mut x = vec![VarSet::EMPTY; self.ids.len()];
        for b in (0..=v).rev() {
            if !reach[b] {
                continue;
            }
            for &e in &self.in_edges[b] {
                let a = self.tail(e);
                x[a] = x[a].union(x[b]).union(self.edges[e].label.vars());
            }
        }
        x
    }

    pub(crate) fn vars_between(&self, u: usize, v: usize) -> VarSet {
        if u == v {
            return VarSet::EMPTY;
        }
        let f = self.reach_from(u);
        let b = self.reach_to(v);
        self.edges
            .iter()
            .enumerate()
            .filter(|(e, _)| f[self.tail(*e)] && b[self.head(*e)])
            .fold(VarSet::EMPTY, |acc, (_, edge)| acc.union(edge.label.vars()))
    }

    /// `X_{u,v}`: variables labelling some edge on a `u → v` path.
    pub fn subprogram_vars(&self, u: NodeId, v: NodeId) -> Result<VarSet> {
        Ok(self.vars_between(self.idx(u)?, self.idx(v)?))
    }

    pub(crate) fn poly_between(&self, u: usize, v: usize) -> Result<MultilinearPoly> {
        let mut polys = self.polys_from(u, Some(v))?;
        Ok(polys[v].take().unwrap_or_else(|| MultilinearPoly::zero(self.field, self.nvars)))
    }

    /// Layer-by-layer DP of `[u, a]` for every node `a` reachable from `u`
    /// (and reaching `limit`, when given).
    pub(crate) fn polys_from(&self, u: usize, limit: Option<usize>) -> Result<Vec<Option<MultilinearPoly>>> {
        let live = match limit {
            Some(v) => self.between(u, v),
            None => self.reach_from(u),
        };
        let mut polys: Vec<Option<MultilinearPoly>> = vec![None; self.ids.len()];
        if !live[u] {
            return Ok(polys);
        }
        polys[u] = Some(MultilinearPoly::one(self.field, self.nvars));
        let end = limit.unwrap_or(self.ids.len() - 1);
        for a in u..=end {
            if !live[a] {
                continue;
            }
            let Some(pa) = polys[a].take() else { continue };
            for &e in &self.out_edges[a] {
                let b = self.head(e);
                if !live[b] {
                    continue;
                }
                let contrib = self.edges[e].label.apply(&pa)?;
                match &mut polys[b] {
                    Some(pb) => pb.add_assign_unchecked(&contrib),
                    slot @ None => *slot = Some(contrib),
                }
            }
            polys[a] = Some(pa);
        }
        Ok(polys)
    }

    /// `[u, v]` by dynamic programming over layers.
    pub fn subprogram_poly(&self, u: NodeId, v: NodeId) -> Result<MultilinearPoly> {
        self.poly_between(self.idx(u)?, self.idx(v)?)
    }

    /// The polynomial computed by the whole program.
    pub fn poly(&self) -> Result<MultilinearPoly> {
        self.poly_between(0, self.ids.len() - 1)
    }

    /// `[source, a]` for every node, keyed by node id.
    pub fn prefix_polys(&self) -> Result<HashMap<NodeId, MultilinearPoly>> {
        let polys = self.polys_from(0, None)?;
        Ok(polys
            .into_iter()
            .enumerate()
            .map(|(i, p)| (self.ids[i], p.unwrap_or_else(|| MultilinearPoly::zero(self.field, self.nvars))))
            .collect())
    }

    /// Number of `u → v` paths, saturating at `u128::MAX`.
    pub fn path_count(&self, u: NodeId, v: NodeId) -> Result<u128> {
        let (u, v) = (self.idx(u)?, self.idx(v)?);
        Ok(self.count_paths(u, v))
    }

    pub(crate) fn count_paths(&self, u: usize, v: usize) -> u128 {
        let mut count = vec![0u128; self.ids.len()];
        count[u] = 1;
        for a in u..=v.max(u) {
            if count[a] == 0 {
                continue;
            }
            for &e in &self.out_edges[a] {
                let b = self.head(e);
                count[b] = count[b].saturating_add(count[a]);
            }
        }
        count[v]
    }

    /// Every `u → v` path, failing once more than `cap` are found.
    pub fn enumerate_paths(&self, u: NodeId, v: NodeId, cap: u64) -> Result<Vec<Path>> {
        let (u, v) = (self.idx(u)?, self.idx(v)?);
        self.paths_between(u, v, cap)
    }

    pub(crate) fn paths_between(&self, u: usize, v: usize, cap: u64) -> Result<Vec<Path>> {
        let reach = self.reach_to(v);
        let mut out = Vec::new();
        if !reach[u] {
            return Ok(out);
        }
        let mut stack: Vec<(usize, usize)> = vec![(u, 0)];
        let mut path: Path = Vec::new();
        while let Some((a, next)) = stack.pop() {
            if a == v {
                if out.len() as u64 >= cap {
                    return Err(Error::budget("paths", cap, out.len() as u64 + 1));
                }
                out.push(path.clone());
                path.pop();
                continue;
            }
            let outs = &self.out_edges[a];
            let mut k = next;
            while k < outs.len() && !reach[self.head(outs[k])] {
                k += 1;
            }
            if k < outs.len() {
                stack.push((a, k + 1));
                path.push(outs[k]);
                stack.push((self.head(outs[k]), 0));
            } else {
                path.pop();
            }
        }
        Ok(out)
    }

    /// Variable indices read along a path, in order.
    pub fn path_vars(&self, path: &[EdgeId]) -> Vec<usize> {
        path.iter().filter_map(|&e| self.edges[e].label.var()).collect()
    }

    /// Node ids visited by a nonempty path.
    pub fn path_nodes(&self, path: &[EdgeId]) -> Vec<NodeId> {
        let mut nodes = Vec::with_capacity(path.len() + 1);
        if let Some(&first) = path.first() {
            nodes.push(self.edges[first].from);
        }
        nodes.extend(path.iter().map(|&e| self.edges[e].to));
        nodes
    }

    /// Product of the labels along a path.
    pub fn path_weight(&self, path: &[EdgeId]) -> Result<MultilinearPoly> {
        let mut w = MultilinearPoly::one(self.field, self.nvars);
        for &e in path {
            w = self.edges[e].label.apply(&w)?;
        }
        Ok(w)
    }

    /// Some `a → b` path, if one exists.
    pub(crate) fn find_path(&self, a: usize, b: usize) -> Option<Path> {
        if a == b {
            return Some(Vec::new());
        }
        let mut parent: Vec<Option<EdgeId>> = vec![None; self.ids.len()];
        let mut queue = VecDeque::from([a]);
        let mut seen = vec![false; self.ids.len()];
        seen[a] = true;
        while let Some(x) = queue.pop_front() {
            for &e in &self.out_edges[x] {
                let y = self.head(e);
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(e);
                    queue.push_back(y);
                }
            }
        }
        if !seen[b] {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = b;
        while cur != a {
            let e = parent[cur]?;
            path.push(e);
            cur = self.tail(e);
        }
        path.reverse();
        Some(path)
    }

    /// Decides whether some source-to-sink path reads a variable twice.
    ///
    /// A path repeats `x` iff two `x`-labelled edges on source-to-sink paths
    /// are chained, i.e. the head of one reaches the tail of the other.
    pub fn is_syntactic_multilinear(&self) -> MultilinearityCheck {
        self.multilinear_between(0, self.ids.len() - 1)
    }

    /// The same check restricted to `s → t` paths for dense indices `s, t`.
    pub(crate) fn multilinear_between(&self, s: usize, t: usize) -> MultilinearityCheck {
        let live = self.between(s, t);
        let mut by_var: HashMap<usize, Vec<EdgeId>> = HashMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if let Label::Var(v) = edge.label {
                if live[self.tail(e)] && live[self.head(e)] {
                    by_var.entry(v).or_default().push(e);
                }
            }
        }
        let mut vars: Vec<_> = by_var.keys().copied().collect();
        vars.sort_unstable();
        let mut reach_cache: HashMap<usize, Vec<bool>> = HashMap::new();
        for var in vars {
            let es = &by_var[&var];
            if es.len() < 2 {
                continue;
            }
            for &e1 in es {
                let h = self.head(e1);
                let reach = reach_cache.entry(h).or_insert_with(|| self.reach_from(h));
                for &e2 in es {
                    if e1 != e2 && reach[self.tail(e2)] {
                        let mut path = self.find_path(s, self.tail(e1)).expect("live edge");
                        path.push(e1);
                        path.extend(self.find_path(h, self.tail(e2)).expect("checked reachable"));
                        path.push(e2);
                        path.extend(self.find_path(self.head(e2), t).expect("live edge"));
                        return MultilinearityCheck { multilinear: false, repeated_var: Some(var), witness: Some(path) };
                    }
                }
            }
        }
        MultilinearityCheck { multilinear: true, repeated_var: None, witness: None }
    }

    /// Structural classification: oblivious, read-once oblivious, and the
    /// least number of consecutive read-once segments.
    pub fn classify(&self) -> Classification {
        let nl = self.layers.len() - 1;
        let mut layer_var: Vec<Option<usize>> = vec![None; nl];
        let mut oblivious = true;
        for e in &self.edges {
            if let Label::Var(v) = e.label {
                let li = self.layer_of[self.index[&e.from]];
                match layer_var[li] {
                    None => layer_var[li] = Some(v),
                    Some(w) if w == v => {}
                    Some(_) => oblivious = false,
                }
            }
        }
        if !oblivious {
            return Classification { oblivious, roabp: false, l_pass: None, layer_vars: None };
        }
        let mut passes = 1;
        let mut cuts = vec![0];
        let mut seen = VarSet::EMPTY;
        for (li, v) in layer_var.iter().enumerate() {
            if let Some(v) = *v {
                if seen.contains(v) {
                    passes += 1;
                    cuts.push(li);
                    seen = VarSet::EMPTY;
                }
                seen.insert(v);
            }
        }
        let multilinear = self.is_syntactic_multilinear().multilinear;
        let l_pass = multilinear.then_some(LPass { passes, cuts });
        Classification { oblivious, roabp: passes == 1, l_pass, layer_vars: Some(layer_var) }
    }

    /// Copy with every label replaced; used for structural experiments.
    pub fn map_labels<F: FnMut(Label) -> Label>(&self, mut f: F) -> Result<Abp> {
        let edges = self.edges.iter().map(|e| Edge { label: f(e.label), ..*e }).collect();
        Abp::new(self.field, self.nvars, self.layers.clone(), edges)
    }

    pub fn to_json(&self) -> AbpJson {
        AbpJson {
            nvars: self.nvars,
            p: self.field.modulus(),
            layers: self.layers.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    from: e.from,
                    to: e.to,
                    label: match e.label {
                        Label::Var(v) => LabelJson::Var(v),
                        Label::Const(c) => LabelJson::Const(c.to_string()),
                    },
                })
                .collect(),
        }
    }

    pub fn from_json(j: &AbpJson) -> Result<Self> {
        let field = PrimeField::new(j.p)?;
        let edges = j
            .edges
            .iter()
            .map(|e| {
                Ok(Edge {
                    from: e.from,
                    to: e.to,
                    label: match &e.label {
                        LabelJson::Var(v) => Label::Var(*v),
                        LabelJson::Const(c) => Label::Const(field.parse(c)?),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Abp::new(field, j.nvars, j.layers.clone(), edges)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearityCheck {
    pub multilinear: bool,
    pub repeated_var: Option<usize>,
    /// A source-to-sink path reading `repeated_var` twice.
    pub witness: Option<Path>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LPass {
    pub passes: usize,
    /// Edge-layer indices where each read-once segment starts.
    pub cuts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub oblivious: bool,
    pub roabp: bool,
    /// Present only for oblivious syntactic multilinear programs.
    pub l_pass: Option<LPass>,
    /// The variable read by each edge layer, when oblivious.
    pub layer_vars: Option<Vec<Option<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelJson {
    Var(usize),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: NodeId,
    pub to: NodeId,
    pub label: LabelJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbpJson {
    pub nvars: usize,
    pub p: u64,
    pub layers: Vec<Vec<NodeId>>,
    pub edges: Vec<EdgeJson>,
}

/// Incremental construction with automatically numbered nodes.
#[derive(Clone, Debug)]
pub struct AbpBuilder {
    field: PrimeField,
    nvars: usize,
    layers: Vec<Vec<NodeId>>,
    edges: Vec<Edge>,
    next_id: NodeId,
}

impl AbpBuilder {
    /// Starts with the source alone in layer 0.
    pub fn new(field: PrimeField, nvars: usize) -> Self {
        AbpBuilder { field, nvars, layers: vec![vec![0]], edges: Vec::new(), next_id: 1 }
    }

    pub fn source(&self) -> NodeId {
        0
    }

    /// Adds a node to `layer`, creating empty layers as needed.
    pub fn node(&mut self, layer: usize) -> NodeId {
        while self.layers.len() <= layer {
            self.layers.push(Vec::new());
        }
        let id = self.next_id;
        self.next_id += 1;
        self.layers[layer].push(id);
        id
    }

    pub fn edge(&mut self, from: NodeId, to: NodeId, label: Label) -> &mut Self {
        self.edges.push(Edge { from, to, label });
        self
    }

    pub fn var_edge(&mut self, from: NodeId, to: NodeId, var: usize) -> &mut Self {
        self.edge(from, to, Label::Var(var))
    }

    pub fn const_edge(&mut self, from: NodeId, to: NodeId, c: u64) -> &mut Self {
        let c = self.field.elem(c);
        self.edge(from, to, Label::Const(c))
    }

    pub fn build(self) -> Result<Abp> {
        Abp::new(self.field, self.nvars, self.layers, self.edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f() -> PrimeField {
        PrimeField::default()
    }

    /// s→{a,b}→t with labels x1, x2 then x2, x1.
    fn diamond() -> Abp {
        let mut b = AbpBuilder::new(f(), 2);
        let s = b.source();
        let a = b.node(1);
        let c = b.node(1);
        let t = b.node(2);
        b.var_edge(s, a, 1).var_edge(s, c, 2).var_edge(a, t, 2).var_edge(c, t, 1);
        b.build().unwrap()
    }

    fn chain(vars: &[usize], nvars: usize) -> Abp {
        let mut b = AbpBuilder::new(f(), nvars);
        let mut prev = b.source();
        for (i, &v) in vars.iter().enumerate() {
            let n = b.node(i + 1);
            b.var_edge(prev, n, v);
            prev = n;
        }
        b.build().unwrap()
    }

    #[test]
    fn validation_rejects_bad_layering() {
        let e = Edge { from: 0, to: 2, label: Label::Var(1) };
        let r = Abp::new(f(), 1, vec![vec![0], vec![1], vec![2]], vec![e]);
        assert!(matches!(r, Err(Error::Validation(_))));
        let r = Abp::new(f(), 1, vec![vec![0], vec![1, 2]], vec![]);
        assert!(r.is_err());
        let e = Edge { from: 0, to: 9, label: Label::Var(1) };
        assert_eq!(Abp::new(f(), 1, vec![vec![0], vec![1]], vec![e]).unwrap_err(), Error::Lookup(9));
    }

    #[test]
    fn subprogram_vars_examples() {
        let d = diamond();
        assert!(d.subprogram_vars(0, 0).unwrap().is_empty());
        let single = chain(&[3], 3);
        assert_eq!(single.subprogram_vars(0, 1).unwrap().to_vec(), vec![3]);

        // Two parallel two-edge paths x1·x2 and x3·x4.
        let mut b = AbpBuilder::new(f(), 4);
        let s = b.source();
        let a = b.node(1);
        let c = b.node(1);
        let t = b.node(2);
        b.var_edge(s, a, 1).var_edge(a, t, 2).var_edge(s, c, 3).var_edge(c, t, 4);
        let p = b.build().unwrap();
        assert_eq!(p.subprogram_vars(s, t).unwrap().to_vec(), vec![1, 2, 3, 4]);
        assert!(p.subprogram_vars(a, c).unwrap().is_empty());
        assert!(matches!(p.subprogram_vars(s, 77), Err(Error::Lookup(77))));
    }

    #[test]
    fn subprogram_poly_examples() {
        let d = diamond();
        assert_eq!(d.subprogram_poly(1, 1).unwrap(), MultilinearPoly::one(f(), 2));
        let expect = MultilinearPoly::from_terms(f(), 2, [(vec![1, 2], f().elem(2))]).unwrap();
        assert_eq!(d.poly().unwrap(), expect);
        assert_eq!(d.subprogram_poly(1, 2).unwrap(), MultilinearPoly::zero(f(), 2));
    }

    #[test]
    fn non_multilinear_subprogram_errors() {
        let p = chain(&[1, 1], 1);
        assert_eq!(p.poly(), Err(Error::MultilinearityViolation { var: 1 }));
    }

    #[test]
    fn multilinearity_check_examples() {
        assert!(chain(&[1, 2, 3], 3).is_syntactic_multilinear().multilinear);
        let bad = chain(&[1, 1], 1);
        let check = bad.is_syntactic_multilinear();
        assert!(!check.multilinear);
        assert_eq!(check.repeated_var, Some(1));
        assert_eq!(bad.path_vars(check.witness.as_ref().unwrap()), vec![1, 1]);
        assert!(diamond().is_syntactic_multilinear().multilinear);
    }

    #[test]
    fn path_enumeration_and_counts() {
        let d = diamond();
        let paths = d.enumerate_paths(0, 3, 10).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(d.path_count(0, 3).unwrap(), 2);
        let seqs: Vec<_> = paths.iter().map(|p| d.path_vars(p)).collect();
        assert!(seqs.contains(&vec![1, 2]) && seqs.contains(&vec![2, 1]));
        assert!(matches!(d.enumerate_paths(0, 3, 1), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn classify_examples() {
        let c = chain(&[2, 1, 3], 3).classify();
        assert!(c.oblivious && c.roabp);
        assert_eq!(c.l_pass.unwrap().passes, 1);
        assert!(!diamond().classify().oblivious);

        // Two tracks over layers reading x1..x4 then x4..x1: the first track
        // reads in the first half and idles in the second, the other track
        // the reverse. Oblivious and multilinear, but two passes are needed.
        let reads = [1usize, 2, 3, 4, 4, 3, 2, 1];
        let mut b = AbpBuilder::new(f(), 4);
        let (mut a, mut z) = (b.source(), b.source());
        for (i, &v) in reads.iter().enumerate() {
            let (na, nz) = if i + 1 < reads.len() { (b.node(i + 1), b.node(i + 1)) } else {
                let t = b.node(i + 1);
                (t, t)
            };
            if i < 4 {
                b.var_edge(a, na, v).const_edge(z, nz, 1);
            } else {
                b.const_edge(a, na, 1).var_edge(z, nz, v);
            }
            a = na;
            z = nz;
        }
        let two = b.build().unwrap();
        let c = two.classify();
        assert!(c.oblivious && !c.roabp);
        let lp = c.l_pass.unwrap();
        assert_eq!(lp.passes, 2);
        assert_eq!(lp.cuts, vec![0, 4]);
    }

    #[test]
    fn json_round_trip() {
        let d = diamond();
        let text = serde_json::to_string(&d.to_json()).unwrap();
        assert!(text.contains("\"var\":1"));
        let back = Abp::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, d);
        assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), text);
    }
}
