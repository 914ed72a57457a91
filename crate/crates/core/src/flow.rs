//! Dinic max-flow over any [`Scalar`]. With exact scalars every augmentation
//! is exact; with floats, residual capacities within the scalar tolerance
//! count as saturated.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
struct Edge<S> {
    to: usize,
    cap: S,
    rev: usize,
}

#[derive(Clone, Debug)]
pub struct MaxFlow<S> {
    graph: Vec<Vec<Edge<S>>>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

impl<S: Scalar> MaxFlow<S> {
    pub fn new(nodes: usize) -> Self {
        MaxFlow { graph: vec![Vec::new(); nodes], level: vec![-1; nodes], iter: vec![0; nodes] }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: S) {
        let rev_from = self.graph[to].len() + usize::from(from == to);
        let rev_to = self.graph[from].len();
        self.graph[from].push(Edge { to, cap, rev: rev_from });
        self.graph[to].push(Edge { to: from, cap: S::zero(), rev: rev_to });
    }

    fn bfs(&mut self, source: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for e in &self.graph[u] {
                if e.cap.is_positive_tol() && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[u] + 1;
                    queue.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, sink: usize, pushed: S) -> S {
        if u == sink {
            return pushed;
        }
        while self.iter[u] < self.graph[u].len() {
            let i = self.iter[u];
            let (to, cap) = {
                let e = &self.graph[u][i];
                (e.to, e.cap.clone())
            };
            if cap.is_positive_tol() && self.level[u] < self.level[to] {
                let got = self.dfs(to, sink, S::min_of(pushed.clone(), cap));
                if got.is_positive_tol() {
                    let rev = self.graph[u][i].rev;
                    self.graph[u][i].cap = self.graph[u][i].cap.clone() - got.clone();
                    self.graph[to][rev].cap = self.graph[to][rev].cap.clone() + got.clone();
                    return got;
                }
            }
            self.iter[u] += 1;
        }
        S::zero()
    }

    /// Value of a maximum `source → sink` flow. Consumes residual capacity,
    /// so call it once per network.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> S {
        let unbounded: S = self.graph[source].iter().fold(S::zero(), |a, e| a + e.cap.clone());
        let mut total = S::zero();
        loop {
            self.bfs(source);
            if self.level[sink] < 0 {
                return total;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(source, sink, unbounded.clone());
                if !f.is_positive_tol() {
                    break;
                }
                total = total + f;
            }
        }
    }
}
