//! Pruning, bounded fan-in/fan-out rewriting and re-layering.

use std::collections::HashMap;

use super::{Abp, Edge, Label, NodeId};
use crate::field::Fe;

impl Abp {
    /// An equivalent program in which every node lies on a source-to-sink
    /// path and every node has in-degree and out-degree at most 2.
    ///
    /// `Const(0)` edges are dropped first. New nodes (fan trees and layer
    /// padding) get ids above the largest existing id and carry `Const(1)`
    /// edges. A program that already satisfies all of this comes back
    /// unchanged.
    pub fn normalize(&self) -> Abp {
        let s = self.source();
        let t = self.sink();
        let mut g = Dag::default();
        let mut next_id = self.ids.iter().copied().max().unwrap_or(0) + 1;

        let kept: Vec<Edge> = self
            .edges
            .iter()
            .copied()
            .filter(|e| !matches!(e.label, Label::Const(c) if c.is_zero()))
            .collect();
        // Liveness on the surviving edges, sweeping dense indices in layer order.
        let n = self.ids.len();
        let mut fwd = vec![false; n];
        let mut bwd = vec![false; n];
        fwd[0] = true;
        bwd[n - 1] = true;
        let mut by_tail: Vec<Vec<&Edge>> = vec![Vec::new(); n];
        for e in &kept {
            by_tail[self.index[&e.from]].push(e);
        }
        for a in 0..n {
            if fwd[a] {
                for e in &by_tail[a] {
                    fwd[self.index[&e.to]] = true;
                }
            }
        }
        for a in (0..n).rev() {
            if by_tail[a].iter().any(|e| bwd[self.index[&e.to]]) {
                bwd[a] = true;
            }
        }
        if !bwd[0] {
            return Abp::new(self.field, self.nvars, vec![vec![s], vec![t]], Vec::new())
                .expect("two-node program is valid");
        }
        for (i, &id) in self.ids.iter().enumerate() {
            if fwd[i] && bwd[i] {
                g.add_node(id);
            }
        }
        for e in &kept {
            if g.pos.contains_key(&e.from) && g.pos.contains_key(&e.to) {
                g.edges.push(*e);
            }
        }

        g.bound_in_degree(&mut next_id);
        g.bound_out_degree(&mut next_id);
        g.into_layered(self, s, &mut next_id)
    }
}

#[derive(Default)]
struct Dag {
    nodes: Vec<NodeId>,
    pos: HashMap<NodeId, usize>,
    edges: Vec<Edge>,
}

impl Dag {
    fn add_node(&mut self, id: NodeId) {
        self.pos.insert(id, self.nodes.len());
        self.nodes.push(id);
    }

    fn fresh(&mut self, next_id: &mut NodeId) -> NodeId {
        let id = *next_id;
        *next_id += 1;
        self.add_node(id);
        id
    }

    fn one() -> Label {
        Label::Const(Fe::ONE)
    }

    fn bound_in_degree(&mut self, next_id: &mut NodeId) {
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            incoming[self.pos[&e.to]].push(i);
        }
        for (v, list) in incoming.into_iter().enumerate() {
            if list.len() > 2 {
                let target = self.nodes[v];
                self.fan_in(target, &list, next_id);
            }
        }
    }

    /// Retargets `edges` into a binary tree rooted at `target`.
    fn fan_in(&mut self, target: NodeId, edges: &[usize], next_id: &mut NodeId) {
        if edges.len() <= 2 {
            for &e in edges {
                self.edges[e].to = target;
            }
            return;
        }
        let (left, right) = edges.split_at(edges.len() / 2);
        for half in [left, right] {
            if half.len() == 1 {
                self.edges[half[0]].to = target;
            } else {
                let m = self.fresh(next_id);
                self.edges.push(Edge { from: m, to: target, label: Self::one() });
                self.fan_in(m, half, next_id);
            }
        }
    }

    fn bound_out_degree(&mut self, next_id: &mut NodeId) {
        let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            outgoing[self.pos[&e.from]].push(i);
        }
        for (v, list) in outgoing.into_iter().enumerate() {
            if list.len() > 2 {
                let origin = self.nodes[v];
                self.fan_out(origin, &list, next_id);
            }
        }
    }

    fn fan_out(&mut self, origin: NodeId, edges: &[usize], next_id: &mut NodeId) {
        if edges.len() <= 2 {
            for &e in edges {
                self.edges[e].from = origin;
            }
            return;
        }
        let (left, right) = edges.split_at(edges.len() / 2);
        for half in [left, right] {
            if half.len() == 1 {
                self.edges[half[0]].from = origin;
            } else {
                let m = self.fresh(next_id);
                self.edges.push(Edge { from: origin, to: m, label: Self::one() });
                self.fan_out(m, half, next_id);
            }
        }
    }

    /// Layers by longest distance from the source; edges spanning several
    /// layers get a chain of padding nodes, keeping their label on the first
    /// hop.
    fn into_layered(mut self, orig: &Abp, s: NodeId, next_id: &mut NodeId) -> Abp {
        let n = self.nodes.len();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for (i, e) in self.edges.iter().enumerate() {
            out[self.pos[&e.from]].push(i);
            indeg[self.pos[&e.to]] += 1;
        }
        let mut depth = vec![0usize; n];
        let mut queue: Vec<usize> = vec![self.pos[&s]];
        let mut head = 0;
        while head < queue.len() {
            let a = queue[head];
            head += 1;
            for &e in &out[a] {
                let b = self.pos[&self.edges[e].to];
                depth[b] = depth[b].max(depth[a] + 1);
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    queue.push(b);
                }
            }
        }
        let mut layer_of: HashMap<NodeId, usize> =
            self.nodes.iter().enumerate().map(|(i, &id)| (id, depth[i])).collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in std::mem::take(&mut self.edges) {
            let (la, lb) = (layer_of[&e.from], layer_of[&e.to]);
            let mut prev = e.from;
            let mut label = e.label;
            for l in la + 1..lb {
                let m = self.fresh(next_id);
                layer_of.insert(m, l);
                edges.push(Edge { from: prev, to: m, label });
                label = Self::one();
                prev = m;
            }
            edges.push(Edge { from: prev, to: e.to, label });
        }
        let nl = layer_of.values().copied().max().unwrap_or(0) + 1;
        let mut layers: Vec<Vec<NodeId>> = vec![Vec::new(); nl];
        // Original nodes keep their relative order; new nodes follow in creation order.
        let mut ordered: Vec<NodeId> = orig.ids.iter().copied().filter(|id| self.pos.contains_key(id)).collect();
        ordered.extend(self.nodes.iter().copied().filter(|id| !orig.index.contains_key(id)));
        for id in ordered {
            layers[layer_of[&id]].push(id);
        }
        Abp::new(orig.field, orig.nvars, layers, edges).expect("normalization preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use crate::abp::AbpBuilder;
    use crate::field::PrimeField;
    use crate::poly::EqualityMode;

    fn f() -> PrimeField {
        PrimeField::default()
    }

    fn degrees_ok(p: &crate::abp::Abp) -> bool {
        p.node_ids().iter().all(|&id| p.in_edges(id).unwrap().len() <= 2 && p.out_edges(id).unwrap().len() <= 2)
    }

    #[test]
    fn already_normal_is_unchanged() {
        let mut b = AbpBuilder::new(f(), 2);
        let s = b.source();
        let a = b.node(1);
        let c = b.node(1);
        let t = b.node(2);
        b.var_edge(s, a, 1).var_edge(s, c, 2).var_edge(a, t, 2).var_edge(c, t, 1);
        let p = b.build().unwrap();
        assert_eq!(p.normalize(), p);
    }

    #[test]
    fn in_degree_three_gets_fan_in_tree() {
        let mut b = AbpBuilder::new(f(), 3);
        let s = b.source();
        let mids: Vec<_> = (0..3).map(|_| b.node(1)).collect();
        let t = b.node(2);
        for (i, &m) in mids.iter().enumerate() {
            b.var_edge(s, m, i + 1).const_edge(m, t, 1);
        }
        let p = b.build().unwrap();
        let q = p.normalize();
        assert!(degrees_ok(&q));
        assert!(q.node_count() > p.node_count());
        assert!(q.poly().unwrap().equals(&p.poly().unwrap(), EqualityMode::Exact).unwrap());
    }

    #[test]
    fn dead_branch_is_removed() {
        let mut b = AbpBuilder::new(f(), 2);
        let s = b.source();
        let a = b.node(1);
        let dead = b.node(1);
        let t = b.node(2);
        b.var_edge(s, a, 1).var_edge(a, t, 2).var_edge(s, dead, 2);
        let p = b.build().unwrap();
        let q = p.normalize();
        assert!(!q.contains(dead));
        assert_eq!(q.poly().unwrap(), p.poly().unwrap());
    }

    #[test]
    fn zero_program_collapses() {
        let mut b = AbpBuilder::new(f(), 1);
        let s = b.source();
        let t = b.node(1);
        b.const_edge(s, t, 0);
        let q = b.build().unwrap().normalize();
        assert_eq!(q.node_count(), 2);
        assert!(q.edges().is_empty());
        assert!(q.poly().unwrap().is_zero());
    }
}
