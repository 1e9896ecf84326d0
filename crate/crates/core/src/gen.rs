//! Random instance generators. All randomness comes from the caller's RNG.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abp::{Abp, AbpBuilder, Label, NodeId};
use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};
use crate::perm::{OrderList, Permutation};
use crate::poly::VarSet;

/// Largest node count the generators accept.
pub const MAX_GEN_NODES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmabpParams {
    pub nvars: usize,
    /// Target node count, source and sink included.
    pub nodes: usize,
    /// Probability (percent) that an edge reads a variable.
    pub var_percent: u32,
}

impl SmabpParams {
    pub fn new(nvars: usize, nodes: usize) -> Self {
        SmabpParams { nvars, nodes, var_percent: 70 }
    }
}

fn small_const<R: Rng + ?Sized>(field: PrimeField, rng: &mut R) -> Label {
    Label::Const(field.elem(rng.gen_range(1..=5)))
}

fn check_size(nodes: usize) -> Result<()> {
    if nodes > MAX_GEN_NODES {
        return Err(Error::budget("generated nodes", MAX_GEN_NODES as u64, nodes as u64));
    }
    if nodes < 2 {
        return Err(Error::Validation("a program needs at least two nodes".into()));
    }
    Ok(())
}

/// A random layered syntactic multilinear program.
///
/// Each edge `a → b` reads a variable outside `X_{s,a}` (or a small
/// constant), so no path can read a variable twice.
pub fn random_smabp<R: Rng + ?Sized>(field: PrimeField, params: SmabpParams, rng: &mut R) -> Result<Abp> {
    check_size(params.nodes)?;
    let n = params.nvars;
    let inner = params.nodes.saturating_sub(2).max(1);
    let width_cap = 4.min(inner);
    let mut widths = Vec::new();
    let mut left = inner;
    while left > 0 {
        let w = rng.gen_range(1..=width_cap).min(left);
        widths.push(w);
        left -= w;
    }
    let mut b = AbpBuilder::new(field, n);
    let mut prev: Vec<(NodeId, VarSet)> = vec![(b.source(), VarSet::EMPTY)];
    let pick_label = |seen: VarSet, rng: &mut R| -> Label {
        let free: Vec<usize> = (1..=n).filter(|&v| !seen.contains(v)).collect();
        if !free.is_empty() && rng.gen_range(0..100) < params.var_percent {
            Label::Var(*free.choose(rng).expect("nonempty"))
        } else {
            small_const(field, rng)
        }
    };
    for (li, &w) in widths.iter().enumerate() {
        let layer: Vec<NodeId> = (0..w).map(|_| b.node(li + 1)).collect();
        let mut seen = vec![VarSet::EMPTY; w];
        let mut has_out = vec![false; prev.len()];
        for (j, &node) in layer.iter().enumerate() {
            let k = rng.gen_range(1..=2.min(prev.len()));
            let mut preds: Vec<usize> = (0..prev.len()).collect();
            preds.shuffle(rng);
            for &pi in &preds[..k] {
                let label = pick_label(prev[pi].1, rng);
                b.edge(prev[pi].0, node, label);
                seen[j] = seen[j].union(prev[pi].1).union(label.vars());
                has_out[pi] = true;
            }
        }
        for (pi, used) in has_out.iter().enumerate() {
            if !used {
                let j = rng.gen_range(0..w);
                let label = pick_label(prev[pi].1, rng);
                b.edge(prev[pi].0, layer[j], label);
                seen[j] = seen[j].union(prev[pi].1).union(label.vars());
            }
        }
        prev = layer.into_iter().zip(seen).collect();
    }
    let t = b.node(widths.len() + 1);
    for &(node, seen) in &prev {
        let label = pick_label(seen, rng);
        b.edge(node, t, label);
    }
    b.build()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedParams {
    pub nvars: usize,
    pub orders: usize,
    /// Nodes per layer in each order's component.
    pub width: usize,
    /// Extra edges to try between components.
    pub perturbations: usize,
}

/// A random `L`-ordered program together with its order list.
///
/// Component `i` reads `x_{π_i(1)}, x_{π_i(2)}, ...` one layer at a time
/// (each edge reads the layer's variable or a constant); components share
/// the source and sink. Random cross edges are then added and kept only if
/// the program stays syntactic multilinear and ordered.
pub fn random_l_ordered<R: Rng + ?Sized>(field: PrimeField, params: OrderedParams, rng: &mut R) -> Result<(Abp, OrderList)> {
    let n = params.nvars;
    let l = params.orders;
    if n == 0 || l == 0 || params.width == 0 {
        return Err(Error::Validation("orders, variables and width must be positive".into()));
    }
    check_size(l * n * params.width + 2)?;
    let mut perms: Vec<Permutation> = Vec::new();
    let mut guard = 0;
    while perms.len() < l {
        let p = Permutation::random(n, rng);
        if !perms.contains(&p) {
            perms.push(p);
        }
        guard += 1;
        if guard > 10_000 {
            return Err(Error::Validation(format!("cannot draw {l} distinct orders of {n} variables")));
        }
    }
    let orders = OrderList::new(perms)?;
    let mut b = AbpBuilder::new(field, n);
    let s = b.source();
    // grid[i][j] are component i's nodes in layer j + 1.
    let mut grid: Vec<Vec<Vec<NodeId>>> = vec![Vec::new(); l];
    for j in 0..n {
        for comp in grid.iter_mut() {
            comp.push((0..params.width).map(|_| b.node(j + 1)).collect());
        }
    }
    let t = b.node(n + 1);
    let label_for = |i: usize, j: usize, rng: &mut R| -> Label {
        if rng.gen_range(0..100) < 75 {
            Label::Var(orders.get(i).var_at(j + 1))
        } else {
            small_const(field, rng)
        }
    };
    for i in 0..l {
        for (k, &node) in grid[i][0].iter().enumerate() {
            if k == 0 || rng.gen_bool(0.5) {
                let lab = label_for(i, 0, rng);
                b.edge(s, node, lab);
            }
        }
        for j in 1..n {
            let w = params.width;
            let mut has_out = vec![false; w];
            for k in 0..w {
                let preds = rng.gen_range(1..=2.min(w));
                let mut idx: Vec<usize> = (0..w).collect();
                idx.shuffle(rng);
                for &pk in &idx[..preds] {
                    let lab = label_for(i, j, rng);
                    b.edge(grid[i][j - 1][pk], grid[i][j][k], lab);
                    has_out[pk] = true;
                }
            }
            for (pk, used) in has_out.into_iter().enumerate() {
                if !used {
                    let lab = label_for(i, j, rng);
                    let k = rng.gen_range(0..w);
                    b.edge(grid[i][j - 1][pk], grid[i][j][k], lab);
                }
            }
        }
        for &node in &grid[i][n - 1] {
            b.const_edge(node, t, 1);
        }
    }
    let mut p = b.build()?;
    // Layer-one nodes left without an incoming edge are dead; normalization
    // prunes them at the end.
    for _ in 0..params.perturbations {
        if n < 2 {
            break;
        }
        let j = rng.gen_range(0..n - 1);
        let (i1, i2) = (rng.gen_range(0..l), rng.gen_range(0..l));
        let from = *grid[i1][j].choose(rng).expect("width > 0");
        let to = *grid[i2][j + 1].choose(rng).expect("width > 0");
        let label = if rng.gen_bool(0.7) { Label::Var(rng.gen_range(1..=n)) } else { small_const(field, rng) };
        let mut edges = p.edges().to_vec();
        edges.push(crate::abp::Edge { from, to, label });
        let candidate = Abp::new(field, n, p.layers().to_vec(), edges)?;
        if candidate.is_syntactic_multilinear().multilinear && candidate.check_ordered(&orders)?.ordered {
            p = candidate;
        }
    }
    Ok((p.normalize(), orders))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalParams {
    pub nvars: usize,
    /// Number of arc-reading components.
    pub components: usize,
    pub width: usize,
}

/// A random program whose components each read a circular arc of `π` in
/// circular order, one position per layer. Components share source and
/// sink and are padded with constant layers to a common depth. The result
/// is not guaranteed to be strict circular-interval; callers filter.
pub fn random_arc_program<R: Rng + ?Sized>(
    field: PrimeField,
    pi: &Permutation,
    params: IntervalParams,
    rng: &mut R,
) -> Result<Abp> {
    let n = params.nvars;
    if pi.len() != n || n == 0 || params.components == 0 || params.width == 0 {
        return Err(Error::Validation("arc program needs matching, positive sizes".into()));
    }
    check_size(params.components * n * params.width + 2)?;
    let mut b = AbpBuilder::new(field, n);
    let s = b.source();
    let arcs: Vec<(usize, usize)> =
        (0..params.components).map(|_| (rng.gen_range(0..n), rng.gen_range(1..=n))).collect();
    let mut lasts = Vec::new();
    for &(start, len) in &arcs {
        let mut prev = vec![s];
        for j in 0..n {
            let layer: Vec<NodeId> = (0..params.width).map(|_| b.node(j + 1)).collect();
            let var = (j < len).then(|| pi.var_at((start + j) % n + 1));
            let mut has_out = vec![false; prev.len()];
            for &node in &layer {
                let k = rng.gen_range(1..=2.min(prev.len()));
                let mut idx: Vec<usize> = (0..prev.len()).collect();
                idx.shuffle(rng);
                for &pk in &idx[..k] {
                    let label = match var {
                        Some(v) if rng.gen_range(0..100) < 75 => Label::Var(v),
                        _ => small_const(field, rng),
                    };
                    b.edge(prev[pk], node, label);
                    has_out[pk] = true;
                }
            }
            for (pk, used) in has_out.into_iter().enumerate() {
                if !used {
                    let node = *layer.choose(rng).expect("width > 0");
                    b.edge(prev[pk], node, Label::Const(Fe::ONE));
                }
            }
            prev = layer;
        }
        lasts.extend(prev);
    }
    let t = b.node(n + 1);
    for node in lasts {
        b.const_edge(node, t, 1);
    }
    Ok(b.build()?.normalize())
}
