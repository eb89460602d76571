//! Test-time MAP inference over one-hot labelings.
//!
//! [`predict_exact`] is a depth-first branch and bound; [`trws`] is
//! sequential tree-reweighted message passing with node order `0..n`, whose
//! lower bound is evaluated on the monotonic-chain decomposition the
//! schedule induces.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyFunction;
use crate::error::{Error, Result};
use crate::graphdata::GraphInstance;
use crate::model::{instantiate_potentials, WeightVector};

/// Assignment budget under which `Strategy::Auto` searches exactly.
pub const AUTO_EXACT_CAP: u64 = 1 << 20;
/// Default budget for an explicit exact search.
pub const EXACT_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub labeling: Vec<usize>,
    pub energy: f64,
    pub lower_bound: Option<f64>,
    /// The energy is certified to be the global minimum.
    pub exact: bool,
}

/// Global minimizer over `L^|V|` with lexicographic tie-breaking, if the
/// search space holds at most `cap` assignments.
pub fn predict_exact(energy: &EnergyFunction, cap: u64) -> Result<InferenceResult> {
    let n = energy.node_count();
    let k = energy.label_count();
    let total = (k as f64).powi(n as i32);
    if total > cap as f64 {
        return Err(Error::TooLarge { assignments: total, cap });
    }
    let mut search = BranchAndBound::new(energy);
    search.run();
    Ok(InferenceResult {
        energy: search.best_energy,
        labeling: search.best,
        lower_bound: None,
        exact: true,
    })
}

struct BranchAndBound<'a> {
    energy: &'a EnergyFunction,
    /// Edges grouped by their later endpoint: (edge, earlier node, later is v).
    back_edges: Vec<Vec<(usize, usize, bool)>>,
    /// Lower bound on the cost of nodes `s..n` and every edge touching them
    /// that is not yet paid, indexed by `s`.
    tail_bound: Vec<f64>,
    labeling: Vec<usize>,
    best: Vec<usize>,
    best_energy: f64,
}

impl<'a> BranchAndBound<'a> {
    fn new(energy: &'a EnergyFunction) -> Self {
        let n = energy.node_count();
        let mut back_edges = vec![Vec::new(); n];
        let mut edge_min = vec![0.0; n];
        for (e, &(u, v)) in energy.edges().iter().enumerate() {
            let (early, late) = if u < v { (u, v) } else { (v, u) };
            back_edges[late].push((e, early, late == v));
            edge_min[late] += energy.pairwise(e).iter().copied().fold(f64::INFINITY, f64::min);
        }
        let mut tail_bound = vec![0.0; n + 1];
        for s in (0..n).rev() {
            let unary_min = energy.unary(s).iter().copied().fold(f64::INFINITY, f64::min);
            tail_bound[s] = tail_bound[s + 1] + unary_min + edge_min[s];
        }
        // seed with the all-zero labeling so ties keep the smallest
        let zero = vec![0; n];
        let best_energy = energy.evaluate_unchecked(&zero);
        Self {
            energy,
            back_edges,
            tail_bound,
            labeling: zero.clone(),
            best: zero,
            best_energy,
        }
    }

    fn local_cost(&self, node: usize, label: usize) -> f64 {
        let mut cost = self.energy.unary(node)[label];
        for &(e, early, late_is_v) in &self.back_edges[node] {
            let other = self.labeling[early];
            cost += if late_is_v {
                self.energy.pairwise_entry(e, other, label)
            } else {
                self.energy.pairwise_entry(e, label, other)
            };
        }
        cost
    }

    fn run(&mut self) {
        if self.energy.node_count() > 0 {
            self.descend(0, 0.0);
        }
    }

    fn descend(&mut self, node: usize, partial: f64) {
        let n = self.energy.node_count();
        let slack = 1e-9 * (1.0 + self.best_energy.abs());
        for label in 0..self.energy.label_count() {
            self.labeling[node] = label;
            let value = partial + self.local_cost(node, label);
            if value + self.tail_bound[node + 1] > self.best_energy + slack {
                continue;
            }
            if node + 1 == n {
                let exact = self.energy.evaluate_unchecked(&self.labeling);
                if exact < self.best_energy {
                    self.best_energy = exact;
                    self.best.copy_from_slice(&self.labeling);
                }
            } else {
                self.descend(node + 1, value);
            }
        }
        self.labeling[node] = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrwsOptions {
    pub max_iterations: usize,
    /// Stop when an iteration raises the bound by less than
    /// `tolerance * max(1, |bound|)`, or the gap to the best energy closes.
    pub tolerance: f64,
}

impl Default for TrwsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrwsSolution {
    pub result: InferenceResult,
    /// Lower bound after every iteration.
    pub bound_history: Vec<f64>,
    pub converged: bool,
}

/// Oriented copy of an edge: `lo < hi`, table indexed `[x_lo * K + x_hi]`.
struct ChainEdge {
    lo: usize,
    hi: usize,
    table: Vec<f64>,
}

struct Trws<'a> {
    energy: &'a EnergyFunction,
    k: usize,
    edges: Vec<ChainEdge>,
    /// Per node: (edge, node is the lower endpoint).
    incident: Vec<Vec<(usize, bool)>>,
    gamma: Vec<f64>,
    /// Message lo -> hi, a function of `x_hi`.
    forward: Vec<Vec<f64>>,
    /// Message hi -> lo, a function of `x_lo`.
    backward: Vec<Vec<f64>>,
    chains: Vec<Vec<usize>>,
    chain_starts: Vec<usize>,
}

impl<'a> Trws<'a> {
    fn new(energy: &'a EnergyFunction) -> Self {
        let n = energy.node_count();
        let k = energy.label_count();
        let mut edges = Vec::with_capacity(energy.edges().len());
        let mut incident = vec![Vec::new(); n];
        for (e, &(u, v)) in energy.edges().iter().enumerate() {
            let (lo, hi) = (u.min(v), u.max(v));
            let mut table = vec![0.0; k * k];
            for a in 0..k {
                for b in 0..k {
                    // a labels lo, b labels hi
                    table[a * k + b] = if u < v {
                        energy.pairwise_entry(e, a, b)
                    } else {
                        energy.pairwise_entry(e, b, a)
                    };
                }
            }
            incident[lo].push((e, true));
            incident[hi].push((e, false));
            edges.push(ChainEdge { lo, hi, table });
        }
        let gamma = incident
            .iter()
            .map(|inc| {
                let out = inc.iter().filter(|(_, is_lo)| *is_lo).count();
                let inn = inc.len() - out;
                1.0 / out.max(inn).max(1) as f64
            })
            .collect();
        let (chains, chain_starts) = monotonic_chains(n, &edges, &incident);
        let m = edges.len();
        Self {
            energy,
            k,
            edges,
            incident,
            gamma,
            forward: vec![vec![0.0; k]; m],
            backward: vec![vec![0.0; k]; m],
            chains,
            chain_starts,
        }
    }

    /// Unary plus all incoming messages.
    fn belief(&self, s: usize) -> Vec<f64> {
        let mut b = self.energy.unary(s).to_vec();
        for &(e, is_lo) in &self.incident[s] {
            let msg = if is_lo { &self.backward[e] } else { &self.forward[e] };
            for (bi, m) in b.iter_mut().zip(msg) {
                *bi += m;
            }
        }
        b
    }

    fn pass(&mut self, forward: bool) {
        let n = self.energy.node_count();
        let k = self.k;
        let order: Vec<usize> = if forward { (0..n).collect() } else { (0..n).rev().collect() };
        for s in order {
            let belief = self.belief(s);
            let g = self.gamma[s];
            for idx in 0..self.incident[s].len() {
                let (e, is_lo) = self.incident[s][idx];
                // forward pass sends to later nodes (s is lo), backward to earlier
                if is_lo != forward {
                    continue;
                }
                let incoming = if is_lo { &self.backward[e] } else { &self.forward[e] };
                let table = &self.edges[e].table;
                let mut out = vec![f64::INFINITY; k];
                for xs in 0..k {
                    let base = g * belief[xs] - incoming[xs];
                    for (xt, slot) in out.iter_mut().enumerate() {
                        let pair = if is_lo { table[xs * k + xt] } else { table[xt * k + xs] };
                        let v = base + pair;
                        if v < *slot {
                            *slot = v;
                        }
                    }
                }
                let min = out.iter().copied().fold(f64::INFINITY, f64::min);
                out.iter_mut().for_each(|v| *v -= min);
                if is_lo {
                    self.forward[e] = out;
                } else {
                    self.backward[e] = out;
                }
            }
        }
    }

    /// Sum over chains of the chain minimum of the reparameterized energy
    /// with node terms split evenly among the chains through each node.
    fn lower_bound(&self) -> f64 {
        let k = self.k;
        let beliefs: Vec<Vec<f64>> = (0..self.energy.node_count()).map(|s| self.belief(s)).collect();
        let mut total = 0.0;
        for (chain, &start) in self.chains.iter().zip(&self.chain_starts) {
            let g = self.gamma[start];
            let mut cost: Vec<f64> = beliefs[start].iter().map(|b| g * b).collect();
            for &e in chain {
                let edge = &self.edges[e];
                let gh = self.gamma[edge.hi];
                let mut next = vec![f64::INFINITY; k];
                for (xh, slot) in next.iter_mut().enumerate() {
                    for (xl, c) in cost.iter().enumerate() {
                        let pair = edge.table[xl * k + xh] - self.backward[e][xl] - self.forward[e][xh];
                        let v = c + pair;
                        if v < *slot {
                            *slot = v;
                        }
                    }
                    *slot += gh * beliefs[edge.hi][xh];
                }
                cost = next;
            }
            total += cost.iter().copied().fold(f64::INFINITY, f64::min);
        }
        total
    }

    /// Sequential rounding: each node minimizes its unary, the true pairwise
    /// terms to already-labeled earlier neighbours, and the messages from
    /// later neighbours. Ties go to the smallest label.
    fn round(&self) -> Vec<usize> {
        let n = self.energy.node_count();
        let k = self.k;
        let mut labels = vec![0usize; n];
        for s in 0..n {
            let mut cost = self.energy.unary(s).to_vec();
            for &(e, is_lo) in &self.incident[s] {
                if is_lo {
                    for (c, m) in cost.iter_mut().zip(&self.backward[e]) {
                        *c += m;
                    }
                } else {
                    let xl = labels[self.edges[e].lo];
                    for (xs, c) in cost.iter_mut().enumerate() {
                        *c += self.edges[e].table[xl * k + xs];
                    }
                }
            }
            let mut best = 0;
            for (x, &c) in cost.iter().enumerate() {
                if c < cost[best] {
                    best = x;
                }
            }
            labels[s] = best;
        }
        labels
    }
}

/// Splits the edges into chains increasing in node id. Node `s` lies on
/// `max(in(s), out(s), 1)` chains; isolated nodes form singleton chains.
/// Returns each chain's edge list and first node.
fn monotonic_chains(n: usize, edges: &[ChainEdge], incident: &[Vec<(usize, bool)>]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut starts: Vec<usize> = Vec::new();
    // chains currently ending at each node
    let mut open: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        let mut ending = std::mem::take(&mut open[s]);
        let outgoing: Vec<usize> = incident[s].iter().filter(|(_, is_lo)| *is_lo).map(|&(e, _)| e).collect();
        if ending.is_empty() && outgoing.is_empty() {
            chains.push(Vec::new());
            starts.push(s);
            continue;
        }
        for e in outgoing {
            let chain = match ending.pop() {
                Some(c) => c,
                None => {
                    chains.push(Vec::new());
                    starts.push(s);
                    chains.len() - 1
                }
            };
            chains[chain].push(e);
            open[edges[e].hi].push(chain);
        }
    }
    (chains, starts)
}

/// Sequential tree-reweighted message passing. Returns the best labeling
/// seen, its energy and the final lower bound.
pub fn trws(energy: &EnergyFunction, options: &TrwsOptions) -> TrwsSolution {
    let n = energy.node_count();
    let mut state = Trws::new(energy);
    let mut best = vec![0usize; n];
    let mut best_energy = energy.evaluate_unchecked(&best);
    let mut history = Vec::new();
    let mut converged = false;
    let gap_tol = |scale: f64| 1e-9 * scale.abs().max(1.0);

    let initial = state.round();
    let e0 = energy.evaluate_unchecked(&initial);
    if e0 < best_energy {
        best_energy = e0;
        best = initial;
    }
    for _ in 0..options.max_iterations {
        state.pass(true);
        state.pass(false);
        let bound = state.lower_bound();
        let labels = state.round();
        let value = energy.evaluate_unchecked(&labels);
        if value < best_energy {
            best_energy = value;
            best = labels;
        }
        let improvement = history.last().map(|&prev: &f64| bound - prev);
        history.push(bound);
        if best_energy - bound <= gap_tol(best_energy) {
            converged = true;
            break;
        }
        if let Some(delta) = improvement {
            if delta.abs() <= options.tolerance * bound.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }
    let lower_bound = history.last().copied().unwrap_or(f64::NEG_INFINITY);
    let exact = best_energy - lower_bound <= gap_tol(best_energy);
    TrwsSolution {
        result: InferenceResult {
            labeling: best,
            energy: best_energy,
            lower_bound: Some(lower_bound.min(best_energy)),
            exact,
        },
        bound_history: history,
        converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Exact search when `K^|V| <= AUTO_EXACT_CAP`, TRW-S otherwise.
    Auto,
    Exact,
    Trws,
}

/// Instantiates the potentials of `x` under `w` and minimizes them.
pub fn predict(w: &WeightVector, x: &GraphInstance, strategy: Strategy) -> Result<InferenceResult> {
    let energy = instantiate_potentials(w, x)?;
    infer_energy(&energy, strategy)
}

pub fn infer_energy(energy: &EnergyFunction, strategy: Strategy) -> Result<InferenceResult> {
    let space = (energy.label_count() as f64).powi(energy.node_count() as i32);
    match strategy {
        Strategy::Exact => predict_exact(energy, EXACT_CAP),
        Strategy::Trws => Ok(trws(energy, &TrwsOptions::default()).result),
        Strategy::Auto if space <= AUTO_EXACT_CAP as f64 => predict_exact(energy, AUTO_EXACT_CAP),
        Strategy::Auto => Ok(trws(energy, &TrwsOptions::default()).result),
    }
}

pub const PREDICTIONS_FORMAT: &str = "cutlearn-predictions";

/// Per-instance inference results as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub format: String,
    pub version: u32,
    pub strategy: Strategy,
    pub instances: Vec<InferenceResult>,
}

impl Predictions {
    pub fn new(strategy: Strategy, instances: Vec<InferenceResult>) -> Self {
        Self {
            format: PREDICTIONS_FORMAT.into(),
            version: 1,
            strategy,
            instances,
        }
    }

    pub fn labelings(&self) -> Vec<Vec<usize>> {
        self.instances.iter().map(|r| r.labeling.clone()).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        // one instance per line
        let mut text = format!(
            "{{\"format\":{},\"version\":{},\"strategy\":{},\"instances\":[",
            serde_json::to_string(&self.format).expect("string serializes"),
            self.version,
            serde_json::to_string(&self.strategy).expect("strategy serializes"),
        );
        for (i, r) in self.instances.iter().enumerate() {
            text += if i == 0 { "\n" } else { ",\n" };
            text += &serde_json::to_string(r).expect("result serializes");
        }
        text += "\n]}\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if parsed.format != PREDICTIONS_FORMAT || parsed.version != 1 {
            return Err(Error::Invalid(format!("unsupported predictions file {:?} v{}", parsed.format, parsed.version)));
        }
        Ok(parsed)
    }
}
