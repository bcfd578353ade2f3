//! Successive shortest augmenting paths with node potentials on real-valued
//! capacities. All arc costs must be non-negative, which lets the first
//! Dijkstra run with zero potentials.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: f64,
    cost: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MinCostFlow {
    graph: Vec<Vec<Edge>>,
    handles: Vec<(usize, usize)>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on node index for determinism
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MinCostFlow {
    pub fn new(n: usize) -> Self {
        MinCostFlow {
            graph: vec![Vec::new(); n],
            handles: Vec::new(),
        }
    }

    /// Adds an arc and returns its handle.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) -> usize {
        debug_assert!(cost >= 0.0 && cap >= 0.0);
        let fwd = self.graph[from].len();
        let bwd = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge { to, rev: bwd, cap, cost });
        self.graph[to].push(Edge {
            to: from,
            rev: fwd,
            cap: 0.0,
            cost: -cost,
        });
        self.handles.push((from, fwd));
        self.handles.len() - 1
    }

    pub fn flow(&self, handle: usize) -> f64 {
        let (u, i) = self.handles[handle];
        let e = &self.graph[u][i];
        // the paired reverse residual is the net flow pushed
        self.graph[e.to][e.rev].cap.max(0.0)
    }

    /// Pushes up to `limit` units from `s` to `t` at minimum cost.
    /// Returns (flow sent, cost).
    pub fn run(&mut self, s: usize, t: usize, limit: f64) -> (f64, f64) {
        let n = self.graph.len();
        let mut potential = vec![0.0; n];
        let mut dist = vec![f64::INFINITY; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut sent = 0.0;
        let mut cost = 0.0;

        while limit - sent > EPS {
            dist.fill(f64::INFINITY);
            prev.fill(None);
            dist[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Entry(0.0, s));
            while let Some(Entry(d, u)) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for (i, e) in self.graph[u].iter().enumerate() {
                    if e.cap <= EPS {
                        continue;
                    }
                    // reduced costs are >= 0 up to rounding
                    let rc = (e.cost + potential[u] - potential[e.to]).max(0.0);
                    let nd = d + rc;
                    if nd < dist[e.to] {
                        dist[e.to] = nd;
                        prev[e.to] = Some((u, i));
                        heap.push(Entry(nd, e.to));
                    }
                }
            }
            if dist[t].is_infinite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }

            let mut push = limit - sent;
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                push = push.min(self.graph[u][i].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                let rev = self.graph[u][i].rev;
                let to = self.graph[u][i].to;
                self.graph[u][i].cap -= push;
                self.graph[to][rev].cap += push;
                cost += push * self.graph[u][i].cost;
                v = u;
            }
            sent += push;
        }
        (sent, cost)
    }
}
