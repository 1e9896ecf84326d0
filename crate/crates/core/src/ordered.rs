//! Converting an `L`-ordered program into an `L`-pass one, and counting
//! formula leaves that are not read-once in a single order.
//!
//! Every node `u` of the input gets up to `L` copies, one per band; band `i`
//! reads variables in the order `π_i`. A variable edge leaving the band-`i`
//! copy of `u` goes to the smallest band `m ≥ i` such that every path into
//! that copy, extended by the edge, is consistent with `π_m`. When no band
//! qualifies (possible when several paths into one copy are consistent with
//! different orders) the edge stays in band `i` if it continues that band's
//! reading order, and otherwise moves to band `i + 1`. Constant edges stay in
//! their band. Copies are then placed on a band-major timeline and layered
//! with `Const(1)` padding so that each layer reads at most one variable.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::abp::{Abp, Edge, Label, NodeId};
use crate::error::{Error, Result};
use crate::field::Fe;
use crate::formula::{abp_to_formula_with, Formula, FormulaConfig, Gate, Leaf, Part};
use crate::perm::OrderList;
use crate::poly::{EqualityMode, MultilinearPoly, VarSet};

#[derive(Clone, Debug, PartialEq, Eq)]
struct CopyState {
    /// Per order: every path into this copy is consistent with it.
    all_consistent: Vec<bool>,
    /// Per order: largest position read, over all paths (meaningful where
    /// `all_consistent` holds).
    max_pos: Vec<usize>,
    /// Largest position, in this band's order, read inside this band.
    band_max: usize,
    /// Timeline point.
    time: u64,
}

impl CopyState {
    fn merge(&mut self, other: &CopyState) {
        for (a, b) in self.all_consistent.iter_mut().zip(&other.all_consistent) {
            *a &= *b;
        }
        for (a, b) in self.max_pos.iter_mut().zip(&other.max_pos) {
            *a = (*a).max(*b);
        }
        self.band_max = self.band_max.max(other.band_max);
        self.time = self.time.max(other.time);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum QNode {
    /// Copy of dense node `a` in band `i` (0-based).
    Copy(usize, usize),
    /// Extra sink joining several sink copies.
    Sink,
}

struct QEdge {
    from: QNode,
    to: QNode,
    label: Label,
    /// Timeline transition that carries the label.
    at: u64,
}

/// Output of [`order_to_pass`].
#[derive(Clone, Debug)]
pub struct PassProgram {
    pub q: Abp,
    /// Original node id → its copy in each band, if that copy exists.
    pub mapping: BTreeMap<NodeId, Vec<Option<NodeId>>>,
    pub padding: BTreeSet<NodeId>,
    /// Edge-layer range of each band in `q`.
    pub band_layers: Vec<Range<usize>>,
    /// Copies created before pruning, including the source copy.
    pub copies_created: usize,
    /// Variable edges routed by the in-band fallback rule.
    pub fallback_routes: usize,
}

impl PassProgram {
    pub fn non_padding_nodes(&self) -> usize {
        self.q.node_count() - self.padding.len()
    }

    pub fn mapping_json(&self) -> MappingJson {
        MappingJson {
            copies: self.mapping.iter().map(|(&k, v)| (k, v.clone())).collect(),
            padding: self.padding.iter().copied().collect(),
            band_layers: self.band_layers.iter().map(|r| [r.start, r.end]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingJson {
    pub copies: BTreeMap<NodeId, Vec<Option<NodeId>>>,
    pub padding: Vec<NodeId>,
    pub band_layers: Vec<[usize; 2]>,
}

/// Timeline: band `i`, position `q ∈ 0..=n`, sub-step `o ∈ 0..=c`.
struct Timeline {
    n: u64,
    c: u64,
}

impl Timeline {
    fn point(&self, band: usize, q: usize, o: u64) -> u64 {
        ((band as u64 * (self.n + 1)) + q as u64) * (self.c + 1) + o
    }

    /// Transition reading the variable at position `q` of `band`.
    fn read(&self, band: usize, q: usize) -> u64 {
        self.point(band, q - 1, self.c)
    }

    fn band_start(&self, band: usize) -> u64 {
        self.point(band, 0, 0)
    }
}

pub fn order_to_pass(p: &Abp, orders: &OrderList) -> Result<PassProgram> {
    let n = p.nvars();
    if orders.nvars() != n {
        return Err(Error::Dimension(format!("orders are on {} variables, program on {n}", orders.nvars())));
    }
    if let Some(var) = p.is_syntactic_multilinear().repeated_var {
        return Err(Error::MultilinearityViolation { var });
    }
    let check = p.check_ordered(orders)?;
    if let Some(path) = check.witness {
        return Err(Error::OrderViolation { vars: p.path_vars(&path), path: p.path_nodes(&path) });
    }
    let bands = orders.len();
    let ell = p.layers().len() - 1;
    let tl = Timeline { n: n as u64, c: ell as u64 + 1 };
    let end = tl.band_start(bands);
    let nodes = p.node_count();
    let s = 0;
    let t = nodes - 1;
    let pos = |m: usize, k: usize| orders.get(m).position(k);

    let mut state: Vec<Vec<Option<CopyState>>> = vec![vec![None; nodes]; bands];
    state[0][s] = Some(CopyState {
        all_consistent: vec![true; bands],
        max_pos: vec![0; bands],
        band_max: 0,
        time: 0,
    });
    let mut edges: Vec<QEdge> = Vec::new();
    let mut fallback_routes = 0;
    for a in 0..nodes {
        for i in 0..bands {
            let Some(st) = state[i][a].clone() else { continue };
            for &e in p.outs(a) {
                let b = p.head(e);
                let label = p.edge(e).label;
                let (m, next, at) = match label {
                    Label::Const(_) => {
                        let mut next = st.clone();
                        next.time = st.time + 1;
                        (i, next, st.time)
                    }
                    Label::Var(k) => {
                        let ruled = (i..bands).find(|&m| st.all_consistent[m] && pos(m, k) > st.max_pos[m]);
                        let m = match ruled {
                            Some(m) => m,
                            None => {
                                fallback_routes += 1;
                                if pos(i, k) > st.band_max {
                                    i
                                } else if i + 1 < bands {
                                    i + 1
                                } else {
                                    return Err(Error::InternalContradiction(format!(
                                        "edge {}→{} reading x{k} has no band left after band {}",
                                        p.id_at(a),
                                        p.id_at(b),
                                        i + 1
                                    )));
                                }
                            }
                        };
                        let q = pos(m, k);
                        let at = tl.read(m, q);
                        if st.time > at {
                            return Err(Error::InternalContradiction(format!(
                                "copy of node {} in band {} is scheduled after the read of x{k}",
                                p.id_at(a),
                                i + 1
                            )));
                        }
                        let all_consistent: Vec<bool> =
                            (0..bands).map(|r| st.all_consistent[r] && pos(r, k) > st.max_pos[r]).collect();
                        let max_pos = (0..bands).map(|r| pos(r, k).max(st.max_pos[r])).collect();
                        (m, CopyState { all_consistent, max_pos, band_max: q, time: at + 1 }, at)
                    }
                };
                match &mut state[m][b] {
                    Some(existing) => existing.merge(&next),
                    slot @ None => *slot = Some(next),
                }
                edges.push(QEdge { from: QNode::Copy(i, a), to: QNode::Copy(m, b), label, at });
            }
        }
    }
    let copies_created = state.iter().flatten().filter(|c| c.is_some()).count();

    let sink_copies: Vec<usize> = (0..bands).filter(|&i| state[i][t].is_some()).collect();
    let mut time: HashMap<QNode, u64> = HashMap::new();
    for (i, row) in state.iter().enumerate() {
        for (a, st) in row.iter().enumerate() {
            if let Some(st) = st {
                time.insert(QNode::Copy(i, a), st.time);
            }
        }
    }
    let sink = match sink_copies.as_slice() {
        [] => return Err(Error::InternalContradiction("no copy of the sink was reached".into())),
        [only] => QNode::Copy(*only, t),
        many => {
            for &i in many {
                edges.push(QEdge { from: QNode::Copy(i, t), to: QNode::Sink, label: Label::Const(Fe::ONE), at: end - 1 });
            }
            time.insert(QNode::Sink, end);
            QNode::Sink
        }
    };

    // Prune copies that cannot reach the sink.
    let mut alive: BTreeSet<QNode> = BTreeSet::from([sink]);
    let mut changed = true;
    while changed {
        changed = false;
        for e in &edges {
            if alive.contains(&e.to) && alive.insert(e.from) {
                changed = true;
            }
        }
    }
    edges.retain(|e| alive.contains(&e.from) && alive.contains(&e.to));

    // Compress the timeline to the transitions that carry labels.
    let kept: Vec<u64> = edges.iter().map(|e| e.at).collect::<BTreeSet<_>>().into_iter().collect();
    let layer_of_point = |pt: u64| kept.partition_point(|&k| k < pt);

    let mut ids: BTreeMap<QNode, NodeId> = BTreeMap::new();
    let source = QNode::Copy(0, s);
    ids.insert(source, 0);
    let mut next_id: NodeId = 1;
    for &qn in &alive {
        if qn != source {
            ids.insert(qn, next_id);
            next_id += 1;
        }
    }
    let mut layer: HashMap<NodeId, usize> = ids.iter().map(|(qn, &id)| (id, layer_of_point(time[qn]))).collect();

    let mut padding = BTreeSet::new();
    let mut out_wire: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    let mut in_wire: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    let mut q_edges: Vec<Edge> = Vec::new();
    let one = Label::Const(Fe::ONE);
    for e in &edges {
        let (u, v) = (ids[&e.from], ids[&e.to]);
        let lab = layer_of_point(e.at);
        let (lu, lv) = (layer[&u], layer[&v]);
        if lab < lu || lab + 1 > lv {
            return Err(Error::InternalContradiction(format!("edge {u}→{v} cannot carry its label at layer {lab}")));
        }
        // Out-wire of u: wire[j] sits at layer lu + 1 + j.
        let tail = if lab == lu {
            u
        } else {
            let wire = out_wire.entry(u).or_default();
            while wire.len() < lab - lu {
                let w = next_id;
                next_id += 1;
                let prev = wire.last().copied().unwrap_or(u);
                q_edges.push(Edge { from: prev, to: w, label: one });
                layer.insert(w, lu + 1 + wire.len());
                padding.insert(w);
                wire.push(w);
            }
            wire[lab - lu - 1]
        };
        // In-wire of v: wire[j] sits at layer lv - 1 - j.
        let head = if lab + 1 == lv {
            v
        } else {
            let wire = in_wire.entry(v).or_default();
            while wire.len() < lv - lab - 1 {
                let w = next_id;
                next_id += 1;
                let next = wire.last().copied().unwrap_or(v);
                q_edges.push(Edge { from: w, to: next, label: one });
                layer.insert(w, lv - 1 - wire.len());
                padding.insert(w);
                wire.push(w);
            }
            wire[lv - lab - 2]
        };
        q_edges.push(Edge { from: tail, to: head, label: e.label });
    }

    let nl = layer.values().copied().max().unwrap_or(0) + 1;
    let mut layers: Vec<Vec<NodeId>> = vec![Vec::new(); nl];
    let mut all: Vec<NodeId> = layer.keys().copied().collect();
    all.sort_unstable();
    for id in all {
        layers[layer[&id]].push(id);
    }
    let q = Abp::new(p.field(), n, layers, q_edges)?;

    let mut mapping = BTreeMap::new();
    for a in 0..nodes {
        let copies = (0..bands).map(|i| ids.get(&QNode::Copy(i, a)).copied()).collect();
        mapping.insert(p.id_at(a), copies);
    }
    let band_layers = (0..bands)
        .map(|i| layer_of_point(tl.band_start(i))..layer_of_point(tl.band_start(i + 1)))
        .collect();
    Ok(PassProgram { q, mapping, padding, band_layers, copies_created, fallback_routes })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandClaimCheck {
    pub holds: bool,
    /// Original nodes where the identity fails.
    pub failures: Vec<NodeId>,
}

/// Checks `[s, u]_P = Σ_i [s', u_i]_Q` at every node `u` of `P`.
pub fn verify_band_claim(
    p: &Abp,
    q: &Abp,
    mapping: &BTreeMap<NodeId, Vec<Option<NodeId>>>,
) -> Result<BandClaimCheck> {
    let pp = p.prefix_polys()?;
    let qp = q.prefix_polys()?;
    let mut failures = Vec::new();
    for &u in p.node_ids() {
        let copies = mapping.get(&u).ok_or(Error::Lookup(u))?;
        let mut sum = MultilinearPoly::zero(q.field(), q.nvars());
        for c in copies.iter().flatten() {
            sum.add_assign_unchecked(qp.get(c).ok_or(Error::Lookup(*c))?);
        }
        if !sum.equals(&pp[&u], EqualityMode::Exact)? {
            failures.push(u);
        }
    }
    Ok(BandClaimCheck { holds: failures.is_empty(), failures })
}

/// Whether every band of `q` reads each variable at most once, in
/// increasing position of that band's order.
pub fn bands_are_pure(out: &PassProgram, orders: &OrderList) -> bool {
    let Some(layer_vars) = out.q.classify().layer_vars else { return false };
    out.band_layers.iter().enumerate().all(|(i, range)| {
        let positions: Vec<usize> =
            layer_vars[range.clone()].iter().flatten().map(|&v| orders.get(i).position(v)).collect();
        positions.windows(2).all(|w| w[0] < w[1])
    })
}

/// Whether all paths through the parts of a leaf fit one variable order.
///
/// Builds the "read before" relation (`x` before `y` when an `x`-edge
/// reaches a `y`-edge, and anything in an earlier part before anything in
/// a later one) and tests it for cycles.
pub fn leaf_is_one_ordered(p: &Abp, leaf: &Leaf) -> Result<bool> {
    let mut before = [0u64; 65];
    let mut earlier = VarSet::EMPTY;
    for part in &leaf.parts {
        let vars = match *part {
            Part::Label(l) => l.vars(),
            Part::Sub { from, to } => {
                let (u, v) = (p.idx(from)?, p.idx(to)?);
                let live = p.between(u, v);
                let var_edges: Vec<(usize, usize)> = (0..p.edges().len())
                    .filter_map(|e| match p.edge(e).label {
                        Label::Var(x) if live[p.tail(e)] && live[p.head(e)] => Some((e, x)),
                        _ => None,
                    })
                    .collect();
                for &(e1, x1) in &var_edges {
                    let reach = p.reach_from(p.head(e1));
                    for &(e2, x2) in &var_edges {
                        if reach[p.tail(e2)] {
                            before[x1] |= 1 << (x2 - 1);
                        }
                    }
                }
                p.vars_between(u, v)
            }
        };
        for x in earlier.iter() {
            before[x] |= vars.0;
        }
        earlier = earlier.union(vars);
    }
    Ok(is_acyclic(&before, earlier))
}

fn is_acyclic(before: &[u64; 65], vars: VarSet) -> bool {
    let mut remaining = vars;
    loop {
        if remaining.is_empty() {
            return true;
        }
        // Remove a variable with no predecessor among the remaining ones.
        let source = remaining.iter().find(|&y| remaining.iter().all(|x| before[x] & (1 << (y - 1)) == 0));
        match source {
            Some(y) => remaining = remaining.minus(VarSet::singleton(y)),
            None => return false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafCensus {
    /// Largest number of leaves in one parse tree that fit no single order.
    pub max_non_roabp: u64,
    /// `floor(log2 L)`.
    pub bound: u64,
    pub parse_trees: u128,
    pub leaves: usize,
    pub non_roabp_leaves: usize,
    pub holds: bool,
}

pub fn floor_log2(l: usize) -> u64 {
    (usize::BITS - 1 - l.max(1).leading_zeros()) as u64
}

pub fn roabp_leaf_census(p: &Abp, orders: &OrderList, cfg: FormulaConfig) -> Result<LeafCensus> {
    let f = abp_to_formula_with(p, cfg)?;
    census_of_formula(&f, orders)
}

pub fn census_of_formula(f: &Formula, orders: &OrderList) -> Result<LeafCensus> {
    let mut flags: HashMap<usize, bool> = HashMap::new();
    for (g, leaf) in f.leaves() {
        flags.insert(g, !leaf_is_one_ordered(f.abp(), leaf)?);
    }
    let max_non_roabp = f.max_over_parse_trees(|g, gate| Ok((matches!(gate, Gate::Leaf(_)) && flags[&g]) as u64))?;
    let bound = floor_log2(orders.len());
    Ok(LeafCensus {
        max_non_roabp,
        bound,
        parse_trees: f.parse_tree_count(),
        leaves: flags.len(),
        non_roabp_leaves: flags.values().filter(|&&b| b).count(),
        holds: max_non_roabp <= bound,
    })
}
