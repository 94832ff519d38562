//! Primal network simplex for dense transportation problems.
//!
//! Sources `0..m`, sinks `m..m+k` and an artificial root `m+k`. Real arcs run
//! from every source to every sink with uncapacitated flow; each node is also
//! joined to the root by an artificial arc of large cost, which gives the
//! starting spanning tree. The tree is kept as parent pointers plus intrusive
//! child lists, and the leaving arc is chosen by the strongly-feasible rule so
//! degenerate pivots cannot cycle. Only tree arcs ever carry flow, so flows
//! are stored per child node.

const NONE: usize = usize::MAX;

/// Optimal flow and potentials of a transportation problem.
#[derive(Clone, Debug)]
pub struct Solution {
    /// `(source, sink, flow)` for every real arc with positive flow.
    pub flow: Vec<(usize, usize, f64)>,
    /// Total cost `Σ flow·cost`.
    pub cost: f64,
    /// Source potentials `φ`, sink potentials `ψ` with `φᵢ + ψⱼ ≤ cᵢⱼ` up to rounding.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub pivots: usize,
}

struct Tree<'a> {
    m: usize,
    k: usize,
    cost: &'a [f64],
    art_cost: f64,
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    depth: Vec<u32>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    pi: Vec<f64>,
    tflow: Vec<f64>,
}

impl<'a> Tree<'a> {
    #[inline]
    fn real_arcs(&self) -> usize {
        self.m * self.k
    }

    #[inline]
    fn root(&self) -> usize {
        self.m + self.k
    }

    #[inline]
    fn ends(&self, e: usize) -> (usize, usize) {
        let r = self.real_arcs();
        if e < r {
            (e / self.k, self.m + e % self.k)
        } else {
            let v = e - r;
            if v < self.m {
                (v, self.root())
            } else {
                (self.root(), v)
            }
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.real_arcs() {
            self.cost[e]
        } else {
            self.art_cost
        }
    }

    fn unlink(&mut self, v: usize) {
        let p = self.parent[v];
        let (pr, nx) = (self.prev_sib[v], self.next_sib[v]);
        if pr == NONE {
            self.first_child[p] = nx;
        } else {
            self.next_sib[pr] = nx;
        }
        if nx != NONE {
            self.prev_sib[nx] = pr;
        }
        self.prev_sib[v] = NONE;
        self.next_sib[v] = NONE;
    }

    fn link(&mut self, v: usize, p: usize) {
        self.parent[v] = p;
        let f = self.first_child[p];
        self.next_sib[v] = f;
        self.prev_sib[v] = NONE;
        if f != NONE {
            self.prev_sib[f] = v;
        }
        self.first_child[p] = v;
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            if self.depth[a] > self.depth[b] {
                a = self.parent[a];
            } else if self.depth[b] > self.depth[a] {
                b = self.parent[b];
            } else {
                a = self.parent[a];
                b = self.parent[b];
            }
        }
        a
    }

    /// Block search for an arc with sufficiently negative reduced cost.
    fn entering(&self, next: &mut usize, block: usize, tol: f64) -> Option<usize> {
        let total = self.real_arcs() + self.m + self.k;
        let mut best = NONE;
        let mut best_rc = -tol;
        let mut scanned = 0;
        let mut in_block = 0;
        let mut e = *next;
        while scanned < total {
            let (s, t) = self.ends(e);
            let rc = self.arc_cost(e) + self.pi[s] - self.pi[t];
            if rc < best_rc {
                best_rc = rc;
                best = e;
            }
            e += 1;
            if e == total {
                e = 0;
            }
            scanned += 1;
            in_block += 1;
            if in_block == block {
                if best != NONE {
                    *next = e;
                    return Some(best);
                }
                in_block = 0;
            }
        }
        if best != NONE {
            *next = e;
            Some(best)
        } else {
            None
        }
    }

    fn pivot(&mut self, e: usize) {
        let (s, t) = self.ends(e);
        let join = self.join(s, t);

        let mut delta = f64::INFINITY;
        let mut u_out = NONE;
        let mut side = 0u8;
        let mut w = s;
        while w != join {
            if self.up[w] {
                let d = self.tflow[w].max(0.0);
                if d < delta {
                    delta = d;
                    u_out = w;
                    side = 1;
                }
            }
            w = self.parent[w];
        }
        let mut w = t;
        while w != join {
            if !self.up[w] {
                let d = self.tflow[w].max(0.0);
                if d <= delta {
                    delta = d;
                    u_out = w;
                    side = 2;
                }
            }
            w = self.parent[w];
        }
        assert!(u_out != NONE, "unbounded transportation cycle");

        if delta > 0.0 {
            let mut w = s;
            while w != join {
                if self.up[w] {
                    self.tflow[w] -= delta;
                } else {
                    self.tflow[w] += delta;
                }
                w = self.parent[w];
            }
            let mut w = t;
            while w != join {
                if self.up[w] {
                    self.tflow[w] += delta;
                } else {
                    self.tflow[w] -= delta;
                }
                w = self.parent[w];
            }
        }

        let (u_in, v_in) = if side == 1 { (s, t) } else { (t, s) };

        let mut path = Vec::new();
        let mut w = u_in;
        loop {
            path.push(w);
            if w == u_out {
                break;
            }
            w = self.parent[w];
        }
        let old_pred: Vec<usize> = path.iter().map(|&v| self.pred[v]).collect();
        let old_up: Vec<bool> = path.iter().map(|&v| self.up[v]).collect();
        let old_flow: Vec<f64> = path.iter().map(|&v| self.tflow[v]).collect();
        for &v in &path {
            self.unlink(v);
        }
        for i in 1..path.len() {
            let (child, par) = (path[i], path[i - 1]);
            self.link(child, par);
            self.pred[child] = old_pred[i - 1];
            self.up[child] = !old_up[i - 1];
            self.tflow[child] = old_flow[i - 1];
        }
        self.link(u_in, v_in);
        self.pred[u_in] = e;
        self.up[u_in] = s == u_in;
        self.tflow[u_in] = delta;

        let c = self.arc_cost(e);
        let target = if self.up[u_in] {
            self.pi[v_in] - c
        } else {
            self.pi[v_in] + c
        };
        let sigma = target - self.pi[u_in];
        let base_depth = self.depth[v_in] + 1;
        self.pi[u_in] += sigma;
        self.depth[u_in] = base_depth;
        let mut stack = vec![u_in];
        while let Some(v) = stack.pop() {
            let mut ch = self.first_child[v];
            while ch != NONE {
                self.pi[ch] += sigma;
                self.depth[ch] = self.depth[v] + 1;
                stack.push(ch);
                ch = self.next_sib[ch];
            }
        }
    }
}

/// Solves `min Σ cᵢⱼ xᵢⱼ` subject to row sums `supply` and column sums `demand`.
///
/// `cost` is row-major `m × k`. Supplies and demands must be non-negative with
/// (approximately) equal totals.
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Solution {
    let m = supply.len();
    let k = demand.len();
    assert_eq!(cost.len(), m * k, "cost matrix shape");
    assert!(m > 0 && k > 0, "empty transportation problem");
    let nn = m + k + 1;
    let max_c = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let art_cost = (max_c + 1.0) * nn as f64;
    let root = m + k;

    let mut t = Tree {
        m,
        k,
        cost,
        art_cost,
        parent: vec![NONE; nn],
        pred: vec![NONE; nn],
        up: vec![false; nn],
        depth: vec![0; nn],
        first_child: vec![NONE; nn],
        next_sib: vec![NONE; nn],
        prev_sib: vec![NONE; nn],
        pi: vec![0.0; nn],
        tflow: vec![0.0; nn],
    };
    for v in 0..m + k {
        t.link(v, root);
        t.depth[v] = 1;
        t.pred[v] = m * k + v;
        if v < m {
            t.up[v] = true;
            t.tflow[v] = supply[v];
            t.pi[v] = -art_cost;
        } else {
            t.up[v] = false;
            t.tflow[v] = demand[v - m];
            t.pi[v] = art_cost;
        }
    }

    let total_arcs = m * k + m + k;
    let block = ((total_arcs as f64).sqrt().ceil() as usize).max(10);
    let tol = 1e-12 * (1.0 + max_c);
    let mut next = 0;
    let mut pivots = 0;
    while let Some(e) = t.entering(&mut next, block, tol) {
        t.pivot(e);
        pivots += 1;
    }

    let mut flow = Vec::new();
    let mut total = 0.0;
    for v in 0..m + k {
        let e = t.pred[v];
        if e < m * k && t.tflow[v] > 0.0 {
            let (i, j) = t.ends(e);
            let f = t.tflow[v];
            flow.push((i, j - m, f));
            total += f * cost[e];
        }
    }
    flow.sort_by_key(|a| (a.0, a.1));

    let phi: Vec<f64> = (0..m).map(|i| -t.pi[i]).collect();
    let psi: Vec<f64> = (0..k).map(|j| t.pi[m + j]).collect();
    Solution {
        flow,
        cost: total,
        phi,
        psi,
        pivots,
    }
}
