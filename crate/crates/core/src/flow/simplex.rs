//! Primal network simplex on strongly feasible spanning trees.
//!
//! The basis is a spanning tree rooted at an artificial node that is joined
//! to every real node by a big-M arc. Pricing is block search over the real
//! arcs; the leaving arc is the last blocking arc met when walking the pivot
//! cycle from its apex in the orientation of the entering arc, which keeps
//! the tree strongly feasible and rules out cycling on degenerate pivots.
//!
//! Arc ids `0..m` are the network's edges, `m..m+n` the artificial arc of
//! each node.

use super::{Edge, Flow, FlowNetwork, FlowSolution, FlowStatus};
use crate::error::{invalid, Error, Result};
use crate::numeric::{dd_add, two_sum};

const NONE: usize = usize::MAX;

struct Simplex<'a> {
    net: &'a FlowNetwork,
    edges: &'a [Edge],
    node_count: usize,
    arc_count: usize,
    artificial_cost: f64,
    /// flow on real arcs followed by artificial arcs
    flow: Vec<i64>,

    parent: Vec<usize>,
    pred: Vec<usize>,
    /// pred arc points from the node to its parent
    pred_up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    /// low parts; `pi + pi_lo` tracks the tree potentials to about 2^-100
    pi_lo: Vec<f64>,
    first_child: Vec<usize>,
    next_sibling: Vec<usize>,
    prev_sibling: Vec<usize>,

    block_size: usize,
    next_arc: usize,
    epsilon: f64,
    stack: Vec<usize>,
    path: Vec<usize>,
}

impl<'a> Simplex<'a> {
    fn new(net: &'a FlowNetwork) -> Self {
        let n = net.node_count();
        let edges = net.edges();
        let m = edges.len();
        let root = n;

        let (cost_sum, cost_max) = edges.iter().fold((0.0, 0.0f64), |(s, mx), e| (s + e.cost, mx.max(e.cost)));
        // Any simple path costs less than this, so artificial arcs leave the
        // basis whenever a real route exists.
        let artificial_cost = 1.0 + f64::min(cost_sum, cost_max * n as f64);

        let mut flow = vec![0i64; m + n];
        let mut parent = vec![NONE; n + 1];
        let mut pred = vec![NONE; n + 1];
        let mut pred_up = vec![false; n + 1];
        let mut depth = vec![0usize; n + 1];
        let mut pi = vec![0.0; n + 1];
        let mut first_child = vec![NONE; n + 1];
        let mut next_sibling = vec![NONE; n + 1];
        let mut prev_sibling = vec![NONE; n + 1];

        for (v, &s) in net.supply().iter().enumerate() {
            flow[m + v] = s.abs();
            pred_up[v] = s >= 0;
            pi[v] = if s >= 0 { artificial_cost } else { -artificial_cost };
            parent[v] = root;
            pred[v] = m + v;
            depth[v] = 1;
            next_sibling[v] = if v + 1 < n { v + 1 } else { NONE };
            prev_sibling[v] = if v > 0 { v - 1 } else { NONE };
        }
        first_child[root] = 0;

        let block_size = ((m as f64).sqrt().ceil() as usize).clamp(10, m.max(10));
        Self {
            net,
            edges,
            node_count: n,
            arc_count: m,
            artificial_cost,
            flow,
            parent,
            pred,
            pred_up,
            depth,
            pi_lo: vec![0.0; n + 1],
            pi,
            first_child,
            next_sibling,
            prev_sibling,
            block_size,
            next_arc: 0,
            epsilon: artificial_cost * f64::EPSILON * 64.0,
            stack: Vec::new(),
            path: Vec::new(),
        }
    }

    /// Endpoints of an arc. Artificial arcs point towards the root from
    /// nodes with nonnegative supply and away from it otherwise.
    #[inline]
    fn ends(&self, a: usize) -> (usize, usize) {
        if a < self.arc_count {
            let e = &self.edges[a];
            (e.tail, e.head)
        } else {
            let v = a - self.arc_count;
            if self.net.supply()[v] >= 0 {
                (v, self.node_count)
            } else {
                (self.node_count, v)
            }
        }
    }

    #[inline]
    fn cost(&self, a: usize) -> f64 {
        if a < self.arc_count {
            self.edges[a].cost
        } else {
            self.artificial_cost
        }
    }

    /// Block search: returns the most negative reduced cost arc in the first
    /// block that contains an improving arc. Basic arcs have zero reduced
    /// cost up to rounding well below `epsilon`, so they are never chosen.
    fn find_entering(&mut self) -> Option<usize> {
        let m = self.arc_count;
        if m == 0 {
            return None;
        }
        let pi = &self.pi;
        let mut best = NONE;
        let mut best_rc = -self.epsilon;
        let mut scanned = 0;
        let mut a = self.next_arc;
        for _ in 0..m {
            let e = &self.edges[a];
            let rc = e.cost - pi[e.tail] + pi[e.head];
            if rc < best_rc {
                best_rc = rc;
                best = a;
            }
            a += 1;
            if a == m {
                a = 0;
            }
            scanned += 1;
            if scanned == self.block_size {
                if best != NONE {
                    self.next_arc = a;
                    return Some(best);
                }
                scanned = 0;
            }
        }
        if best != NONE {
            self.next_arc = a;
            Some(best)
        } else {
            None
        }
    }

    fn find_join(&self, mut u: usize, mut v: usize) -> usize {
        while self.depth[u] > self.depth[v] {
            u = self.parent[u];
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v];
        }
        while u != v {
            u = self.parent[u];
            v = self.parent[v];
        }
        u
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        let (u, v) = self.ends(entering);
        let join = self.find_join(u, v);

        // Flow is pushed u -> v, up from v to the apex and down to u.
        let mut delta = i64::MAX;
        let mut out_node = NONE;
        let mut out_on_tail_side = false;
        let mut x = u;
        while x != join {
            if self.pred_up[x] && self.flow[self.pred[x]] < delta {
                delta = self.flow[self.pred[x]];
                out_node = x;
                out_on_tail_side = true;
            }
            x = self.parent[x];
        }
        let mut x = v;
        while x != join {
            if !self.pred_up[x] && self.flow[self.pred[x]] <= delta {
                delta = self.flow[self.pred[x]];
                out_node = x;
                out_on_tail_side = false;
            }
            x = self.parent[x];
        }
        if out_node == NONE {
            return Err(Error::Internal("unbounded pivot cycle in an uncapacitated network with nonnegative costs".into()));
        }

        if delta > 0 {
            self.flow[entering] += delta;
            let mut x = u;
            while x != join {
                let a = self.pred[x];
                if self.pred_up[x] {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
                x = self.parent[x];
            }
            let mut x = v;
            while x != join {
                let a = self.pred[x];
                if self.pred_up[x] {
                    self.flow[a] += delta;
                } else {
                    self.flow[a] -= delta;
                }
                x = self.parent[x];
            }
        }

        // The subtree under out_node is cut off and re-hung from the entering
        // arc endpoint that lies inside it.
        let (inner, outer) = if out_on_tail_side { (u, v) } else { (v, u) };
        self.path.clear();
        let mut x = inner;
        loop {
            self.path.push(x);
            if x == out_node {
                break;
            }
            x = self.parent[x];
        }

        for i in 0..self.path.len() {
            let x = self.path[i];
            self.unlink(x);
        }
        let k = self.path.len();
        for i in (1..k).rev() {
            let child = self.path[i];
            let new_parent = self.path[i - 1];
            self.pred[child] = self.pred[new_parent];
            self.pred_up[child] = !self.pred_up[new_parent];
            self.parent[child] = new_parent;
        }
        self.parent[inner] = outer;
        self.pred[inner] = entering;
        self.pred_up[inner] = u == inner;
        for i in 0..k {
            let x = self.path[i];
            self.link(x, self.parent[x]);
        }

        self.refresh_subtree(inner);
        Ok(())
    }

    fn unlink(&mut self, x: usize) {
        let p = self.parent[x];
        let prev = self.prev_sibling[x];
        let next = self.next_sibling[x];
        if prev == NONE {
            self.first_child[p] = next;
        } else {
            self.next_sibling[prev] = next;
        }
        if next != NONE {
            self.prev_sibling[next] = prev;
        }
        self.prev_sibling[x] = NONE;
        self.next_sibling[x] = NONE;
    }

    fn link(&mut self, x: usize, p: usize) {
        let first = self.first_child[p];
        self.next_sibling[x] = first;
        self.prev_sibling[x] = NONE;
        if first != NONE {
            self.prev_sibling[first] = x;
        }
        self.first_child[p] = x;
    }

    /// Recomputes depth and potential below `top` from its parent.
    fn refresh_subtree(&mut self, top: usize) {
        self.stack.clear();
        self.stack.push(top);
        while let Some(x) = self.stack.pop() {
            let p = self.parent[x];
            let c = self.cost(self.pred[x]);
            self.depth[x] = self.depth[p] + 1;
            let step = if self.pred_up[x] { c } else { -c };
            (self.pi[x], self.pi_lo[x]) = dd_add(self.pi[p], self.pi_lo[p], step);
            let mut child = self.first_child[x];
            while child != NONE {
                self.stack.push(child);
                child = self.next_sibling[child];
            }
        }
    }

    /// Replaces the artificial starting tree with `basis`. Returns false,
    /// leaving the starting tree intact, when `basis` does not describe a
    /// feasible spanning tree of this network.
    fn install(&mut self, basis: &Basis) -> bool {
        let n = self.node_count;
        let m = self.arc_count;
        let root = n;
        if basis.parent.len() != n || basis.flow.iter().any(|&x| x < 0) {
            return false;
        }
        // (head, node) pairs wanted per tail
        let mut wanted: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for v in 0..n {
            if let Some((t, h)) = basis.arc[v] {
                if t >= n || h >= n {
                    return false;
                }
                wanted[t].push((h, v));
            }
        }
        let mut arc_of = vec![NONE; n];
        for (a, e) in self.edges.iter().enumerate() {
            let list = &wanted[e.tail];
            if list.is_empty() {
                continue;
            }
            for &(h, v) in list {
                if h == e.head && arc_of[v] == NONE {
                    arc_of[v] = a;
                }
            }
        }
        let mut pred = vec![NONE; n + 1];
        let mut pred_up = vec![false; n + 1];
        let mut net_out = vec![0i64; n + 1];
        for v in 0..n {
            let p = basis.parent[v];
            let a = match basis.arc[v] {
                Some(_) => arc_of[v],
                None if p == root => m + v,
                None => return false,
            };
            if a == NONE || p > root || p == v {
                return false;
            }
            let (t, h) = self.ends(a);
            if !((t == v && h == p) || (t == p && h == v)) {
                return false;
            }
            pred[v] = a;
            pred_up[v] = t == v;
            net_out[t] += basis.flow[v];
            net_out[h] -= basis.flow[v];
        }
        if (0..n).any(|v| net_out[v] != self.net.supply()[v]) {
            return false;
        }

        let mut first_child = vec![NONE; n + 1];
        let mut next_sibling = vec![NONE; n + 1];
        let mut prev_sibling = vec![NONE; n + 1];
        for v in (0..n).rev() {
            let p = basis.parent[v];
            let first = first_child[p];
            next_sibling[v] = first;
            if first != NONE {
                prev_sibling[first] = v;
            }
            first_child[p] = v;
        }
        // every node must hang below the root
        let mut seen = 0;
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            seen += 1;
            if seen > n + 1 {
                return false;
            }
            let mut c = first_child[x];
            while c != NONE {
                stack.push(c);
                c = next_sibling[c];
            }
        }
        if seen != n + 1 {
            return false;
        }

        for v in 0..n {
            self.flow[m + v] = 0;
        }
        for v in 0..n {
            self.flow[pred[v]] = basis.flow[v];
        }
        self.parent[..n].copy_from_slice(&basis.parent);
        self.pred = pred;
        self.pred_up = pred_up;
        self.first_child = first_child;
        self.next_sibling = next_sibling;
        self.prev_sibling = prev_sibling;
        let mut c = self.first_child[root];
        while c != NONE {
            self.refresh_subtree(c);
            c = self.next_sibling[c];
        }
        true
    }

    fn basis(&self) -> Basis {
        let n = self.node_count;
        let m = self.arc_count;
        let mut parent = Vec::with_capacity(n);
        let mut arc = Vec::with_capacity(n);
        let mut flow = Vec::with_capacity(n);
        for v in 0..n {
            let a = self.pred[v];
            parent.push(self.parent[v]);
            arc.push((a < m).then(|| self.ends(a)));
            flow.push(self.flow[a]);
        }
        Basis { parent, arc, flow }
    }

    /// Final pricing pass on the double-double potentials. Float pricing
    /// cannot see reduced costs below `epsilon`; this pass resolves them, so
    /// optima that tie in exact arithmetic report the same objective.
    fn find_entering_precise(&self) -> Option<usize> {
        // far above the double-double error, far below any nonzero gap
        // between sums of the costs at hand
        let tol = self.artificial_cost * f64::EPSILON * f64::EPSILON * 64.0;
        let (pi, lo) = (&self.pi, &self.pi_lo);
        let mut best = None;
        let mut best_rc = -tol;
        for (a, e) in self.edges.iter().enumerate() {
            let (s1, e1) = two_sum(e.cost, -pi[e.tail]);
            let (s2, e2) = two_sum(s1, pi[e.head]);
            let rc = s2 + (e1 + e2 - lo[e.tail] + lo[e.head]);
            if rc < best_rc {
                best_rc = rc;
                best = Some(a);
            }
        }
        best
    }

    fn run(mut self) -> Result<FlowSolution> {
        let mut iterations = 0u64;
        while let Some(entering) = self.find_entering().or_else(|| self.find_entering_precise()) {
            self.pivot(entering)?;
            iterations += 1;
        }
        let n = self.node_count;
        let m = self.arc_count;
        let infeasible = self.flow[m..].iter().any(|&x| x > 0);
        let basis = self.basis();
        let mut basic_edges: Vec<usize> = self.pred[..n].iter().copied().filter(|&a| a < m).collect();
        basic_edges.sort_unstable();
        self.flow.truncate(m);
        let flow = Flow { values: self.flow };
        let objective = self.net.objective(&flow);
        self.pi.truncate(n);
        Ok(FlowSolution {
            flow,
            objective,
            iterations,
            status: if infeasible { FlowStatus::Infeasible } else { FlowStatus::Optimal },
            potentials: self.pi,
            basic_edges,
            basis,
        })
    }
}

/// A spanning-tree basis described by node pairs rather than edge indices,
/// so it can seed a solve on any network with the same nodes and supplies
/// whose edge set still contains the tree's edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    /// Tree parent of each node; `node_count` denotes the artificial root.
    parent: Vec<usize>,
    /// `(tail, head)` of the edge to the parent, `None` for artificial arcs.
    arc: Vec<Option<(usize, usize)>>,
    flow: Vec<i64>,
}

/// Solves the min-cost flow problem exactly in integer flow units.
///
/// Returns [`FlowStatus::Infeasible`] when some demand cannot be reached.
pub fn solve_min_cost_flow(net: &FlowNetwork) -> Result<FlowSolution> {
    check_balance(net)?;
    Simplex::new(net).run()
}

/// Like [`solve_min_cost_flow`], starting from `basis` when it fits `net`
/// and from the artificial tree otherwise.
pub fn solve_min_cost_flow_from(net: &FlowNetwork, basis: &Basis) -> Result<FlowSolution> {
    check_balance(net)?;
    let mut simplex = Simplex::new(net);
    simplex.install(basis);
    simplex.run()
}

fn check_balance(net: &FlowNetwork) -> Result<()> {
    let total = net.total_supply();
    if total != 0 {
        return invalid(format!("supplies sum to {total}; a feasible flow needs total supply 0"));
    }
    Ok(())
}
