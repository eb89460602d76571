//! s-t max-flow / min-cut over real capacities, and exact minimization of
//! submodular binary energies through it.
//!
//! The solver is Dinic's blocking-flow algorithm (shortest augmenting paths).
//! Labels follow the convention source side = 0, sink side = 1. Among all
//! minimum cuts the returned one has the largest source side: a node is on
//! the sink side only if it can still reach the sink in the final residual
//! graph.

use std::collections::VecDeque;

use crate::energy::BinaryEnergy;
use crate::error::{Error, Result};

/// Endpoint of an arc: a non-terminal node or one of the two terminals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vertex {
    Source,
    Sink,
    Node(usize),
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    residual: f64,
    capacity: f64,
}

/// Flow network with paired forward/backward residual arcs.
///
/// Internally the source is `node_count` and the sink `node_count + 1`.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    node_count: usize,
    arcs: Vec<Arc>,
    adjacency: Vec<Vec<usize>>,
    max_capacity: f64,
}

/// Result of [`max_flow`]: the flow value and the canonical minimum cut.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub flow: f64,
    /// `true` for non-terminal nodes on the source side of the cut.
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            arcs: Vec::new(),
            adjacency: vec![Vec::new(); node_count + 2],
            max_capacity: 0.0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    fn source(&self) -> usize {
        self.node_count
    }

    fn sink(&self) -> usize {
        self.node_count + 1
    }

    fn index(&self, v: Vertex) -> usize {
        match v {
            Vertex::Source => self.source(),
            Vertex::Sink => self.sink(),
            Vertex::Node(i) => {
                assert!(i < self.node_count, "node {i} out of range");
                i
            }
        }
    }

    /// Adds a directed arc `from -> to`. Zero-capacity arcs are accepted and
    /// ignored.
    pub fn add_arc(&mut self, from: Vertex, to: Vertex, capacity: f64) -> Result<()> {
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(Error::Invalid(format!("arc capacity {capacity} must be finite and non-negative")));
        }
        let (a, b) = (self.index(from), self.index(to));
        if a == b {
            return Err(Error::Invalid(format!("self-loop arc on vertex {a}")));
        }
        if capacity == 0.0 {
            return Ok(());
        }
        self.max_capacity = self.max_capacity.max(capacity);
        let forward = self.arcs.len();
        self.arcs.push(Arc {
            to: b,
            residual: capacity,
            capacity,
        });
        self.arcs.push(Arc {
            to: a,
            residual: 0.0,
            capacity: 0.0,
        });
        self.adjacency[a].push(forward);
        self.adjacency[b].push(forward + 1);
        Ok(())
    }

    /// Capacity of the cut whose source side is given, over the original
    /// capacities.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        assert_eq!(source_side.len(), self.node_count);
        let side = |v: usize| -> bool {
            if v == self.source() {
                true
            } else if v == self.sink() {
                false
            } else {
                source_side[v]
            }
        };
        let mut total = 0.0;
        for (from, arcs) in self.adjacency.iter().enumerate() {
            for &a in arcs {
                let arc = &self.arcs[a];
                if arc.capacity > 0.0 && side(from) && !side(arc.to) {
                    total += arc.capacity;
                }
            }
        }
        total
    }

    /// Residual below this is treated as saturated.
    fn tolerance(&self) -> f64 {
        self.max_capacity * 1e-13
    }

    fn levels(&self, tol: f64) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.node_count + 2];
        let mut queue = VecDeque::new();
        level[self.source()] = 0;
        queue.push_back(self.source());
        while let Some(v) = queue.pop_front() {
            for &a in &self.adjacency[v] {
                let arc = &self.arcs[a];
                if arc.residual > tol && level[arc.to] == usize::MAX {
                    level[arc.to] = level[v] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        level
    }

    fn reaches_sink(&self, tol: f64) -> Vec<bool> {
        let mut seen = vec![false; self.node_count + 2];
        let mut queue = VecDeque::new();
        seen[self.sink()] = true;
        queue.push_back(self.sink());
        while let Some(w) = queue.pop_front() {
            for &a in &self.adjacency[w] {
                // the paired arc runs from `arcs[a].to` into `w`
                let from = self.arcs[a].to;
                if !seen[from] && self.arcs[a ^ 1].residual > tol {
                    seen[from] = true;
                    queue.push_back(from);
                }
            }
        }
        seen
    }

    fn augment(&mut self, v: usize, limit: f64, level: &[usize], next: &mut [usize], tol: f64) -> f64 {
        if v == self.sink() {
            return limit;
        }
        while next[v] < self.adjacency[v].len() {
            let a = self.adjacency[v][next[v]];
            let (to, residual) = (self.arcs[a].to, self.arcs[a].residual);
            if residual > tol && level[to] == level[v] + 1 {
                let pushed = self.augment(to, limit.min(residual), level, next, tol);
                if pushed > 0.0 {
                    self.arcs[a].residual -= pushed;
                    self.arcs[a ^ 1].residual += pushed;
                    return pushed;
                }
            }
            next[v] += 1;
        }
        0.0
    }

    /// Runs max-flow to completion. The network keeps its residual state;
    /// calling again continues from it and returns the additional flow.
    pub fn solve(&mut self) -> MinCut {
        let tol = self.tolerance();
        let mut flow = 0.0;
        loop {
            let level = self.levels(tol);
            if level[self.sink()] == usize::MAX {
                let reaches_sink = self.reaches_sink(tol);
                let source_side = reaches_sink[..self.node_count].iter().map(|&r| !r).collect();
                return MinCut { flow, source_side };
            }
            let mut next = vec![0usize; self.node_count + 2];
            loop {
                let pushed = self.augment(self.source(), f64::INFINITY, &level, &mut next, tol);
                if pushed <= 0.0 {
                    break;
                }
                flow += pushed;
            }
        }
    }
}

/// Free-function form of [`FlowNetwork::solve`].
pub fn max_flow(network: &mut FlowNetwork) -> MinCut {
    network.solve()
}

/// s-t graph whose cuts price the labelings of a submodular binary energy:
/// for every labeling `x`, `cut_capacity(x == 0) + offset == energy(x)`.
pub fn build_flow_network(energy: &BinaryEnergy) -> Result<(FlowNetwork, f64)> {
    if let Some(term) = energy.first_submodularity_violation() {
        return Err(Error::NotSubmodular { term });
    }
    let n = energy.node_count();
    let mut offset = 0.0;
    let mut cost0 = vec![0.0; n];
    let mut cost1 = vec![0.0; n];
    for (u, &[c0, c1]) in energy.unaries().iter().enumerate() {
        cost0[u] += c0;
        cost1[u] += c1;
    }
    let mut network = FlowNetwork::new(n);
    for term in energy.terms() {
        // E(x,y) = A + (C - A) x + (D - C) y + (B + C - A - D) (1 - x) y
        let [[a, b], [c, d]] = term.table;
        offset += a;
        cost1[term.u] += c - a;
        cost1[term.v] += d - c;
        let coupling = b + c - a - d;
        network.add_arc(Vertex::Node(term.u), Vertex::Node(term.v), coupling.max(0.0))?;
    }
    for u in 0..n {
        let base = cost0[u].min(cost1[u]);
        offset += base;
        // label 1 (sink side) cuts the source arc; label 0 cuts the sink arc
        network.add_arc(Vertex::Source, Vertex::Node(u), cost1[u] - base)?;
        network.add_arc(Vertex::Node(u), Vertex::Sink, cost0[u] - base)?;
    }
    Ok((network, offset))
}

/// Global minimizer of a submodular binary energy and its energy.
pub fn minimize_submodular(energy: &BinaryEnergy) -> Result<(Vec<bool>, f64)> {
    let (mut network, offset) = build_flow_network(energy)?;
    let cut = network.solve();
    let labeling: Vec<bool> = cut.source_side.iter().map(|&s| !s).collect();
    let value = energy.evaluate(&labeling);
    debug_assert!(
        (cut.flow + offset - value).abs() <= 1e-7 * (1.0 + value.abs()),
        "flow {} + offset {} != energy {}",
        cut.flow,
        offset,
        value
    );
    Ok((labeling, value))
}
