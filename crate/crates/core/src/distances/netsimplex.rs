//! Primal network simplex for uncapacitated min-cost flow.
//!
//! Spanning-tree bases, block-search pricing and Cunningham's leaving-arc
//! rule on strongly feasible trees. Arcs can be added and costs changed
//! between solves; the current tree stays a feasible basis, so re-solving
//! is a warm start.
//!
//! The initial tree is a star around the root node. A rooted problem
//! supplies the star arcs itself, which avoids big-M artificial costs and
//! the cancellation they cause in floating point; missing star arcs are
//! filled with artificial ones.

const NONE: usize = usize::MAX;

pub struct NetworkSimplex {
    /// non-root node count; the root is node `n`
    n: usize,
    supply: Vec<f64>,
    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    // tree, over n + 1 nodes (root = n)
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    potential: Vec<f64>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    in_tree: Vec<bool>,
    artificial: Vec<bool>,
    built: bool,
    big_m: f64,
    next_arc: usize,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Optimal,
    Infeasible,
}

impl NetworkSimplex {
    /// `supply[v]` is the net outflow required at node `v`; supplies must
    /// sum to zero. An artificial root is added as node `supply.len()`.
    pub fn new(mut supply: Vec<f64>) -> Self {
        supply.push(0.0);
        Self::rooted(supply)
    }

    /// The last node is a real root; for every other node `v`, an arc
    /// `v → root` (when `supply[v] > 0`) or `root → v` should be present
    /// at the first solve.
    pub fn rooted(supply: Vec<f64>) -> Self {
        assert!(!supply.is_empty());
        let n = supply.len() - 1;
        NetworkSimplex {
            n,
            supply,
            source: Vec::new(),
            target: Vec::new(),
            cost: Vec::new(),
            flow: Vec::new(),
            parent: Vec::new(),
            pred: Vec::new(),
            depth: Vec::new(),
            potential: Vec::new(),
            first_child: Vec::new(),
            next_sib: Vec::new(),
            prev_sib: Vec::new(),
            in_tree: Vec::new(),
            artificial: Vec::new(),
            built: false,
            big_m: 0.0,
            next_arc: 0,
            pivots: 0,
        }
    }

    /// Adds an arc and returns its index (artificial arcs share the index
    /// space, so keep the returned value); allowed before or between solves.
    pub fn add_arc(&mut self, from: usize, to: usize, cost: f64) -> usize {
        debug_assert!(from <= self.n && to <= self.n && cost >= 0.0);
        self.artificial.push(false);
        self.source.push(from);
        self.target.push(to);
        self.cost.push(cost);
        self.flow.push(0.0);
        self.in_tree.push(false);
        self.source.len() - 1
    }

    pub fn arc_count(&self) -> usize {
        self.source.len()
    }

    pub fn set_cost(&mut self, arc: usize, cost: f64) {
        self.cost[arc] = cost;
    }

    /// Node potentials `π` with `c_uv + π_u − π_v ≥ 0` at optimality,
    /// shifted so that `π[reference] = 0`.
    pub fn potentials(&self, reference: usize) -> Vec<f64> {
        let p0 = self.potential[reference];
        self.potential.iter().map(|p| p - p0).collect()
    }

    pub fn total_cost(&self) -> f64 {
        (0..self.arc_count()).filter(|&a| !self.artificial[a]).map(|a| self.cost[a] * self.flow[a]).sum()
    }

    pub fn flow(&self, arc: usize) -> f64 {
        self.flow[arc]
    }

    fn init_tree(&mut self) {
        let n = self.n;
        let max_cost = self.cost.iter().copied().fold(0.0, f64::max);
        self.big_m = (max_cost + 1.0) * (n as f64 + 1.0);
        self.built = true;
        let mut to_root = vec![NONE; n];
        let mut from_root = vec![NONE; n];
        for a in 0..self.source.len() {
            if self.target[a] == n && self.source[a] < n && to_root[self.source[a]] == NONE {
                to_root[self.source[a]] = a;
            }
            if self.source[a] == n && self.target[a] < n && from_root[self.target[a]] == NONE {
                from_root[self.target[a]] = a;
            }
        }
        self.parent = vec![NONE; n + 1];
        self.pred = vec![NONE; n + 1];
        self.depth = vec![0; n + 1];
        self.potential = vec![0.0; n + 1];
        self.first_child = vec![NONE; n + 1];
        self.next_sib = vec![NONE; n + 1];
        self.prev_sib = vec![NONE; n + 1];
        for v in 0..n {
            let s = self.supply[v];
            // strongly feasible start: zero-flow arcs point away from the root
            let a = if s > 0.0 {
                let a = if to_root[v] != NONE { to_root[v] } else { self.push_raw(v, n, self.big_m) };
                self.flow[a] = s;
                self.potential[v] = -self.cost[a];
                a
            } else {
                let a = if from_root[v] != NONE { from_root[v] } else { self.push_raw(n, v, self.big_m) };
                self.flow[a] = -s;
                self.potential[v] = self.cost[a];
                a
            };
            self.in_tree[a] = true;
            self.pred[v] = a;
            self.depth[v] = 1;
            self.link(v, n);
        }
    }

    fn push_raw(&mut self, from: usize, to: usize, cost: f64) -> usize {
        let a = self.add_arc(from, to, cost);
        self.artificial[a] = true;
        a
    }

    fn link(&mut self, child: usize, parent: usize) {
        self.parent[child] = parent;
        let head = self.first_child[parent];
        self.next_sib[child] = head;
        self.prev_sib[child] = NONE;
        if head != NONE {
            self.prev_sib[head] = child;
        }
        self.first_child[parent] = child;
    }

    fn unlink(&mut self, child: usize) {
        let p = self.parent[child];
        let (prev, next) = (self.prev_sib[child], self.next_sib[child]);
        if prev != NONE {
            self.next_sib[prev] = next;
        } else {
            self.first_child[p] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.parent[child] = NONE;
        self.prev_sib[child] = NONE;
        self.next_sib[child] = NONE;
    }

    fn reduced_cost(&self, a: usize) -> f64 {
        self.cost[a] + self.potential[self.source[a]] - self.potential[self.target[a]]
    }

    /// Recomputes potentials from the tree after cost changes.
    pub fn refresh_potentials(&mut self) {
        if !self.built {
            return;
        }
        let root = self.n;
        self.potential[root] = 0.0;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            let mut c = self.first_child[u];
            while c != NONE {
                let a = self.pred[c];
                self.potential[c] = if self.source[a] == u {
                    self.potential[u] + self.cost[a]
                } else {
                    self.potential[u] - self.cost[a]
                };
                self.depth[c] = self.depth[u] + 1;
                stack.push(c);
                c = self.next_sib[c];
            }
        }
    }

    pub fn solve(&mut self, eps: f64) -> Status {
        if self.built {
            self.refresh_potentials();
        } else {
            self.init_tree();
        }
        let m = self.source.len();
        let block = ((m as f64).sqrt().ceil() as usize).max(10).min(m);
        while let Some(e) = self.find_entering(block, eps) {
            self.pivot(e);
            self.pivots += 1;
        }
        let art_flow =
            (0..m).filter(|&a| self.artificial[a]).map(|a| self.flow[a]).fold(0.0, f64::max);
        let scale = self.supply.iter().map(|s| s.abs()).fold(0.0, f64::max).max(1e-300);
        if art_flow > 1e-9 * scale {
            Status::Infeasible
        } else {
            Status::Optimal
        }
    }

    fn find_entering(&mut self, block: usize, eps: f64) -> Option<usize> {
        let m = self.source.len();
        let mut best = NONE;
        let mut best_rc = -eps;
        let mut scanned = 0;
        let mut a = self.next_arc % m;
        while scanned < m {
            let end = (scanned + block).min(m);
            while scanned < end {
                if !self.in_tree[a] {
                    let rc = self.reduced_cost(a);
                    if rc < best_rc {
                        best_rc = rc;
                        best = a;
                    }
                }
                a += 1;
                if a == m {
                    a = 0;
                }
                scanned += 1;
            }
            if best != NONE {
                self.next_arc = a;
                return Some(best);
            }
        }
        None
    }

    fn pivot(&mut self, e: usize) {
        let (u, v) = (self.source[e], self.target[e]);
        // join node
        let (mut x, mut y) = (u, v);
        while x != y {
            if self.depth[x] >= self.depth[y] {
                x = self.parent[x];
            } else {
                y = self.parent[y];
            }
        }
        let join = x;

        // cycle orientation: u → v along e, then v up to join, then join down to u.
        // Cunningham: the leaving arc is the last blocking arc met when the
        // cycle is traversed in this orientation starting at the join node.
        let mut delta = f64::INFINITY;
        let mut leave = NONE;
        let mut leave_child = NONE;
        let mut leave_on_u_side = false;
        // join → u side, traversed downward: collect the u path bottom-up first
        let mut u_path = Vec::new();
        let mut w = u;
        while w != join {
            u_path.push(w);
            w = self.parent[w];
        }
        for &c in u_path.iter().rev() {
            let a = self.pred[c];
            // traversal parent → c; decreasing if the arc points c → parent
            if self.source[a] == c && self.flow[a] <= delta {
                delta = self.flow[a];
                leave = a;
                leave_child = c;
                leave_on_u_side = true;
            }
        }
        let mut w = v;
        while w != join {
            let a = self.pred[w];
            // traversal w → parent; decreasing if the arc points parent → w
            if self.target[a] == w && self.flow[a] <= delta {
                delta = self.flow[a];
                leave = a;
                leave_child = w;
                leave_on_u_side = false;
            }
            w = self.parent[w];
        }
        if leave == NONE {
            // no blocking arc: unbounded, impossible with nonnegative costs
            return;
        }

        // augment
        if delta > 0.0 {
            self.flow[e] += delta;
            for &c in &u_path {
                let a = self.pred[c];
                if self.source[a] == c {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
            }
            let mut w = v;
            while w != join {
                let a = self.pred[w];
                if self.target[a] == w {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
                w = self.parent[w];
            }
        }
        if leave == e {
            return;
        }
        self.flow[leave] = 0.0;

        // re-hang the subtree below the leaving arc from the entering arc
        let (inner, outer) = if leave_on_u_side { (u, v) } else { (v, u) };
        let rc = self.reduced_cost(e);
        let shift = if inner == v { rc } else { -rc };
        self.in_tree[leave] = false;
        self.in_tree[e] = true;

        // reverse the parent chain inner → leave_child
        let mut chain = Vec::new();
        let mut w = inner;
        loop {
            chain.push(w);
            if w == leave_child {
                break;
            }
            w = self.parent[w];
        }
        let old_pred: Vec<usize> = chain.iter().map(|&c| self.pred[c]).collect();
        for &c in &chain {
            self.unlink(c);
        }
        for i in (1..chain.len()).rev() {
            self.pred[chain[i]] = old_pred[i - 1];
            self.link(chain[i], chain[i - 1]);
        }
        self.pred[inner] = e;
        self.link(inner, outer);

        // shift potentials and recompute depths in the moved subtree
        let base = self.depth[outer] + 1;
        let mut stack = vec![(inner, base)];
        while let Some((c, d)) = stack.pop() {
            self.potential[c] += shift;
            self.depth[c] = d;
            let mut k = self.first_child[c];
            while k != NONE {
                stack.push((k, d + 1));
                k = self.next_sib[k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_transport() {
        // two sources, two sinks
        let mut ns = NetworkSimplex::new(vec![1.0, 2.0, -1.5, -1.5]);
        ns.add_arc(0, 2, 1.0);
        ns.add_arc(0, 3, 3.0);
        ns.add_arc(1, 2, 2.0);
        ns.add_arc(1, 3, 1.0);
        assert_eq!(ns.solve(1e-12), Status::Optimal);
        // 0→2: 1, 1→2: 0.5, 1→3: 1.5 gives 1 + 1 + 1.5
        assert!((ns.total_cost() - 3.5).abs() < 1e-12);
        let pi = ns.potentials(0);
        for a in 0..ns.arc_count() {
            let rc = ns.cost[a] + pi[ns.source[a]] - pi[ns.target[a]];
            assert!(rc > -1e-12);
        }
    }

    #[test]
    fn infeasible_is_reported() {
        let mut ns = NetworkSimplex::new(vec![1.0, -1.0]);
        ns.add_arc(1, 0, 1.0);
        assert_eq!(ns.solve(1e-12), Status::Infeasible);
    }

    #[test]
    fn warm_start_after_new_arcs() {
        let mut ns = NetworkSimplex::new(vec![1.0, 0.0, -1.0]);
        ns.add_arc(0, 1, 1.0);
        ns.add_arc(1, 2, 1.0);
        assert_eq!(ns.solve(1e-12), Status::Optimal);
        assert!((ns.total_cost() - 2.0).abs() < 1e-12);
        let direct = ns.add_arc(0, 2, 1.5);
        assert_eq!(ns.solve(1e-12), Status::Optimal);
        assert!((ns.total_cost() - 1.5).abs() < 1e-12);
        ns.set_cost(direct, 3.0);
        assert_eq!(ns.solve(1e-12), Status::Optimal);
        assert!((ns.total_cost() - 2.0).abs() < 1e-12);
    }
}
