//! Discrete pairwise energies and their binary encodings.
//!
//! [`EnergyFunction`] is the multi-class energy
//! `U(y) = sum_u U_u(y_u) + sum_(u,v) U_uv(y_u, y_v)` over an arbitrary
//! graph with full (possibly asymmetric) `K x K` pairwise tables.
//! [`BinaryEnergy`] is the 0/1 energy that graph cuts and QPBO operate on;
//! [`multiclass_to_binary`] maps the former to the latter with one binary
//! variable per (node, class) pair and no sum-to-one constraint.
//!
//! All energies are in minimization convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of assignments the exhaustive minimizers visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Multi-class pairwise energy over a fixed topology.
///
/// The pairwise table of edge `e = (u, v)` is stored row-major with the row
/// indexed by the label of `u`: `pairwise(e)[k * K + l] = U_uv(k, l)`.
/// The reverse orientation `U_vu(l, k)` is the same entry, so the symmetry
/// convention holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyFunction {
    node_count: usize,
    label_count: usize,
    edges: Vec<(usize, usize)>,
    unary: Vec<f64>,
    pairwise: Vec<f64>,
}

impl EnergyFunction {
    /// All-zero energy over the given topology.
    pub fn zeros(node_count: usize, label_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let k = label_count;
        let m = edges.len();
        Self::from_tables(node_count, label_count, edges, vec![0.0; node_count * k], vec![0.0; m * k * k])
    }

    pub fn from_tables(
        node_count: usize,
        label_count: usize,
        edges: Vec<(usize, usize)>,
        unary: Vec<f64>,
        pairwise: Vec<f64>,
    ) -> Result<Self> {
        if label_count == 0 {
            return Err(Error::Invalid("label count must be at least 1".into()));
        }
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= node_count || v >= node_count {
                return Err(Error::Invalid(format!("edge {e} ({u}, {v}) references a missing node")));
            }
            if u == v {
                return Err(Error::Invalid(format!("edge {e} is a self-loop on node {u}")));
            }
        }
        if unary.len() != node_count * label_count {
            return Err(Error::Shape(format!(
                "unary table has {} entries, expected {}",
                unary.len(),
                node_count * label_count
            )));
        }
        if pairwise.len() != edges.len() * label_count * label_count {
            return Err(Error::Shape(format!(
                "pairwise tables have {} entries, expected {}",
                pairwise.len(),
                edges.len() * label_count * label_count
            )));
        }
        Ok(Self {
            node_count,
            label_count,
            edges,
            unary,
            pairwise,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn unary(&self, node: usize) -> &[f64] {
        let k = self.label_count;
        &self.unary[node * k..(node + 1) * k]
    }

    pub fn unary_mut(&mut self, node: usize) -> &mut [f64] {
        let k = self.label_count;
        &mut self.unary[node * k..(node + 1) * k]
    }

    pub fn pairwise(&self, edge: usize) -> &[f64] {
        let kk = self.label_count * self.label_count;
        &self.pairwise[edge * kk..(edge + 1) * kk]
    }

    pub fn pairwise_mut(&mut self, edge: usize) -> &mut [f64] {
        let kk = self.label_count * self.label_count;
        &mut self.pairwise[edge * kk..(edge + 1) * kk]
    }

    /// `U_uv(k, l)` for the stored orientation of `edge`.
    pub fn pairwise_entry(&self, edge: usize, k: usize, l: usize) -> f64 {
        self.pairwise(edge)[k * self.label_count + l]
    }

    pub fn check_labeling(&self, labeling: &[usize]) -> Result<()> {
        if labeling.len() != self.node_count {
            return Err(Error::Shape(format!(
                "labeling has {} entries for {} nodes",
                labeling.len(),
                self.node_count
            )));
        }
        for (node, &label) in labeling.iter().enumerate() {
            if label >= self.label_count {
                return Err(Error::LabelOutOfRange {
                    node,
                    label,
                    label_count: self.label_count,
                });
            }
        }
        Ok(())
    }

    /// Energy of a labeling. Terms are accumulated unaries first, then edges,
    /// in index order.
    pub fn evaluate(&self, labeling: &[usize]) -> Result<f64> {
        self.check_labeling(labeling)?;
        Ok(self.evaluate_unchecked(labeling))
    }

    pub(crate) fn evaluate_unchecked(&self, labeling: &[usize]) -> f64 {
        let mut total = 0.0;
        for (u, &k) in labeling.iter().enumerate() {
            total += self.unary(u)[k];
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            total += self.pairwise_entry(e, labeling[u], labeling[v]);
        }
        total
    }

    /// Structured-text dump for fixtures and debugging.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("energy tables serialize")
    }
}

/// Free-function form of [`EnergyFunction::evaluate`].
pub fn evaluate_energy(energy: &EnergyFunction, labeling: &[usize]) -> Result<f64> {
    energy.evaluate(labeling)
}

/// A pairwise term of a binary energy. `table[a][b]` is the cost of
/// `(x_u, x_v) = (a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryTerm {
    pub u: usize,
    pub v: usize,
    pub table: [[f64; 2]; 2],
}

impl BinaryTerm {
    /// `E(0,1) + E(1,0) >= E(0,0) + E(1,1)`, compared exactly.
    pub fn is_submodular(&self) -> bool {
        let t = &self.table;
        t[0][1] + t[1][0] >= t[0][0] + t[1][1]
    }

    pub fn cost(&self, a: bool, b: bool) -> f64 {
        self.table[a as usize][b as usize]
    }
}

/// Energy over binary variables with unary and pairwise terms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BinaryEnergy {
    unary: Vec<[f64; 2]>,
    terms: Vec<BinaryTerm>,
}

impl BinaryEnergy {
    pub fn new(node_count: usize) -> Self {
        Self {
            unary: vec![[0.0; 2]; node_count],
            terms: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.unary.len()
    }

    /// Appends a fresh variable with zero unary cost and returns its id.
    pub fn add_node(&mut self) -> usize {
        self.unary.push([0.0; 2]);
        self.unary.len() - 1
    }

    pub fn add_unary(&mut self, node: usize, cost0: f64, cost1: f64) {
        let entry = &mut self.unary[node];
        entry[0] += cost0;
        entry[1] += cost1;
    }

    pub fn unary(&self, node: usize) -> [f64; 2] {
        self.unary[node]
    }

    pub fn unaries(&self) -> &[[f64; 2]] {
        &self.unary
    }

    /// Adds a pairwise term and returns its index.
    ///
    /// # Panics
    /// If `u == v` or either endpoint is out of range.
    pub fn add_pairwise(&mut self, u: usize, v: usize, table: [[f64; 2]; 2]) -> usize {
        assert!(u != v, "pairwise term on a single variable {u}");
        assert!(u < self.node_count() && v < self.node_count(), "pairwise term ({u}, {v}) out of range");
        self.terms.push(BinaryTerm { u, v, table });
        self.terms.len() - 1
    }

    pub fn terms(&self) -> &[BinaryTerm] {
        &self.terms
    }

    pub fn evaluate(&self, labeling: &[bool]) -> f64 {
        debug_assert_eq!(labeling.len(), self.node_count());
        let mut total = 0.0;
        for (u, &x) in labeling.iter().enumerate() {
            total += self.unary[u][x as usize];
        }
        for term in &self.terms {
            total += term.cost(labeling[term.u], labeling[term.v]);
        }
        total
    }

    /// Index of the first pairwise term violating submodularity, if any.
    pub fn first_submodularity_violation(&self) -> Option<usize> {
        self.terms.iter().position(|t| !t.is_submodular())
    }

    pub fn is_submodular(&self) -> bool {
        self.first_submodularity_violation().is_none()
    }

    /// Adds `coefficient * x * y * z` through one auxiliary variable and
    /// returns the auxiliary id. Minimizing over the auxiliary recovers the
    /// cubic term exactly.
    pub fn add_third_order(&mut self, term: &ThirdOrderTerm) -> Result<usize> {
        for &var in &term.variables {
            if var >= self.node_count() {
                return Err(Error::Invalid(format!("third-order variable {var} out of range")));
            }
        }
        let aux = self.node_count();
        let reduction = reduce_third_order(term, aux)?;
        self.add_node();
        self.add_unary(aux, reduction.aux_unary[0], reduction.aux_unary[1]);
        for (var, table) in reduction.pairs {
            self.add_pairwise(aux, var, table);
        }
        Ok(aux)
    }
}

/// Free-function form of [`BinaryEnergy::is_submodular`] that also reports
/// the first violating term.
pub fn is_submodular(energy: &BinaryEnergy) -> (bool, Option<usize>) {
    let violation = energy.first_submodularity_violation();
    (violation.is_none(), violation)
}

/// Binary variable index of (node, class) in the encoding produced by
/// [`multiclass_to_binary`].
pub fn binary_index(node: usize, class: usize, label_count: usize) -> usize {
    node * label_count + class
}

/// Binary encoding of a multi-class energy.
///
/// Variable `(u, k)` (index `u * K + k`) pays `U_u(k)` when set. For every
/// edge `e = (u, v)` and class pair `(k, l)` a term joins `(u, k)` and
/// `(v, l)` with only its `(1, 1)` entry set to `U_uv(k, l)`; term index is
/// `e * K * K + k * K + l`. The one-hot constraint is not encoded.
pub fn multiclass_to_binary(energy: &EnergyFunction) -> BinaryEnergy {
    let k_count = energy.label_count();
    let mut binary = BinaryEnergy::new(energy.node_count() * k_count);
    for u in 0..energy.node_count() {
        for (k, &cost) in energy.unary(u).iter().enumerate() {
            binary.add_unary(binary_index(u, k, k_count), 0.0, cost);
        }
    }
    for (e, &(u, v)) in energy.edges().iter().enumerate() {
        for k in 0..k_count {
            for l in 0..k_count {
                let c = energy.pairwise_entry(e, k, l);
                binary.add_pairwise(
                    binary_index(u, k, k_count),
                    binary_index(v, l, k_count),
                    [[0.0, 0.0], [0.0, c]],
                );
            }
        }
    }
    binary
}

/// One-hot binary encoding of a multi-class labeling.
pub fn one_hot_bits(labeling: &[usize], label_count: usize) -> Vec<bool> {
    let mut bits = vec![false; labeling.len() * label_count];
    for (u, &k) in labeling.iter().enumerate() {
        bits[binary_index(u, k, label_count)] = true;
    }
    bits
}

fn assignment_count(base: usize, digits: usize) -> f64 {
    (base as f64).powi(digits as i32)
}

/// Exhaustive minimizer over `L^|V|`. Ties go to the lexicographically
/// smallest labeling (node 0 most significant).
pub fn brute_force_minimize(energy: &EnergyFunction) -> Result<(Vec<usize>, f64)> {
    brute_force_minimize_capped(energy, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_minimize_capped(energy: &EnergyFunction, cap: u64) -> Result<(Vec<usize>, f64)> {
    let n = energy.node_count();
    let k = energy.label_count();
    let total = assignment_count(k, n);
    if total > cap as f64 {
        return Err(Error::TooLarge { assignments: total, cap });
    }
    let mut labeling = vec![0usize; n];
    let mut best = labeling.clone();
    let mut best_energy = energy.evaluate_unchecked(&labeling);
    // odometer with the last node fastest visits labelings in lexicographic order
    loop {
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok((best, best_energy));
            }
            pos -= 1;
            labeling[pos] += 1;
            if labeling[pos] < k {
                break;
            }
            labeling[pos] = 0;
        }
        let value = energy.evaluate_unchecked(&labeling);
        if value < best_energy {
            best_energy = value;
            best.copy_from_slice(&labeling);
        }
    }
}

/// Exhaustive minimizer over `{0,1}^n` with lexicographic tie-breaking.
pub fn brute_force_minimize_binary(energy: &BinaryEnergy) -> Result<(Vec<bool>, f64)> {
    brute_force_minimize_binary_capped(energy, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_minimize_binary_capped(energy: &BinaryEnergy, cap: u64) -> Result<(Vec<bool>, f64)> {
    let n = energy.node_count();
    let total = assignment_count(2, n);
    if total > cap as f64 || n >= 64 {
        return Err(Error::TooLarge { assignments: total, cap });
    }
    let mut labeling = vec![false; n];
    let mut best = labeling.clone();
    let mut best_energy = energy.evaluate(&labeling);
    for mask in 1u64..(1u64 << n) {
        // node 0 is the most significant bit, so increasing masks are lexicographic
        for (i, bit) in labeling.iter_mut().enumerate() {
            *bit = (mask >> (n - 1 - i)) & 1 == 1;
        }
        let value = energy.evaluate(&labeling);
        if value < best_energy {
            best_energy = value;
            best.copy_from_slice(&labeling);
        }
    }
    Ok((best, best_energy))
}

/// A cubic term `coefficient * x * y * z` over three distinct binary variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrderTerm {
    variables: [usize; 3],
    coefficient: f64,
}

impl ThirdOrderTerm {
    pub fn new(variables: [usize; 3], coefficient: f64) -> Result<Self> {
        let [a, b, c] = variables;
        if a == b || b == c || a == c {
            return Err(Error::Invalid(format!("third-order variables {variables:?} are not distinct")));
        }
        if !coefficient.is_finite() {
            return Err(Error::Invalid("third-order coefficient must be finite".into()));
        }
        Ok(Self { variables, coefficient })
    }

    pub fn variables(&self) -> [usize; 3] {
        self.variables
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }
}

/// Pairwise form of a non-positive cubic term.
///
/// With `a = -coefficient >= 0`:
/// `coefficient * xyz = min_w a * w * (2 - x - y - z)`,
/// realized as a unary on `w` costing `2a` when set and three `(w, var)`
/// terms whose only nonzero entry is `(1, 1) = -a`. All emitted pairwise
/// entries are non-positive, so the result is submodular.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdOrderReduction {
    pub aux: usize,
    pub aux_unary: [f64; 2],
    pub pairs: [(usize, [[f64; 2]; 2]); 3],
}

pub fn reduce_third_order(term: &ThirdOrderTerm, aux: usize) -> Result<ThirdOrderReduction> {
    if term.coefficient > 0.0 {
        return Err(Error::Invalid(format!(
            "third-order coefficient {} is positive; only non-positive terms reduce to submodular form",
            term.coefficient
        )));
    }
    if term.variables.contains(&aux) {
        return Err(Error::Invalid(format!("auxiliary id {aux} collides with a term variable")));
    }
    let a = -term.coefficient;
    let table = [[0.0, 0.0], [0.0, -a]];
    let pairs = term.variables.map(|var| (var, table));
    debug_assert!(pairs.iter().all(|(_, t)| t[0][1] + t[1][0] >= t[0][0] + t[1][1]));
    Ok(ThirdOrderReduction {
        aux,
        aux_unary: [0.0, 2.0 * a],
        pairs,
    })
}
