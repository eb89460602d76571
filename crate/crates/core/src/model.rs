//! Linear discriminant model over graph labelings.
//!
//! The weight vector has one unary block `w^k` (length `d_n`) per class and
//! one pairwise block `w^{kl}` (length `d_e`) per ordered class pair, shared
//! by all edges. Potentials are `U_u(k) = -w^k . phi(u)` and
//! `U_uv(k, l) = -w^{kl} . phi(u, v)`, so `score = w . Psi = -energy`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{binary_index, multiclass_to_binary, BinaryEnergy, EnergyFunction};
use crate::error::{Error, Result};
use crate::graphdata::GraphInstance;

/// Flat parameter vector: `K * d_n` unary entries followed by `K^2 * d_e`
/// pairwise entries. The pairwise range is the non-negativity set `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    label_count: usize,
    node_dim: usize,
    edge_dim: usize,
    values: Vec<f64>,
}

impl WeightVector {
    pub fn zeros(label_count: usize, node_dim: usize, edge_dim: usize) -> Self {
        let len = flat_len(label_count, node_dim, edge_dim);
        Self {
            label_count,
            node_dim,
            edge_dim,
            values: vec![0.0; len],
        }
    }

    pub fn from_flat(label_count: usize, node_dim: usize, edge_dim: usize, values: Vec<f64>) -> Result<Self> {
        let len = flat_len(label_count, node_dim, edge_dim);
        if values.len() != len {
            return Err(Error::Shape(format!("weight vector has {} entries, expected {len}", values.len())));
        }
        Ok(Self {
            label_count,
            node_dim,
            edge_dim,
            values,
        })
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unary_offset(&self, class: usize) -> usize {
        class * self.node_dim
    }

    pub fn pairwise_offset(&self, k: usize, l: usize) -> usize {
        self.label_count * self.node_dim + (k * self.label_count + l) * self.edge_dim
    }

    pub fn unary_block(&self, class: usize) -> &[f64] {
        let o = self.unary_offset(class);
        &self.values[o..o + self.node_dim]
    }

    pub fn pairwise_block(&self, k: usize, l: usize) -> &[f64] {
        let o = self.pairwise_offset(k, l);
        &self.values[o..o + self.edge_dim]
    }

    /// Range of flat indices constrained to be non-negative.
    pub fn nonneg_range(&self) -> std::ops::Range<usize> {
        self.label_count * self.node_dim..self.values.len()
    }

    pub fn nonneg_mask(&self) -> Vec<bool> {
        let range = self.nonneg_range();
        (0..self.values.len()).map(|i| range.contains(&i)).collect()
    }

    /// Smallest entry over the non-negativity set, `+inf` if it is empty.
    pub fn min_constrained(&self) -> f64 {
        self.values[self.nonneg_range()].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `K x K` matrix of pairwise weights for one edge-feature dimension,
    /// row-major with rows indexed by the label of the edge's first node.
    pub fn pairwise_matrix(&self, feature: usize) -> Vec<f64> {
        let k = self.label_count;
        let mut m = Vec::with_capacity(k * k);
        for a in 0..k {
            for b in 0..k {
                m.push(self.pairwise_block(a, b)[feature]);
            }
        }
        m
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.values, other)
    }

    pub fn check_instance(&self, x: &GraphInstance) -> Result<()> {
        if x.label_count() != self.label_count {
            return Err(Error::Shape(format!(
                "instance has {} classes, weights have {}",
                x.label_count(),
                self.label_count
            )));
        }
        if let Some(d) = x.node_dim() {
            if d != self.node_dim {
                return Err(Error::Shape(format!("node features have dimension {d}, weights expect {}", self.node_dim)));
            }
        }
        if let Some(d) = x.edge_dim() {
            if d != self.edge_dim {
                return Err(Error::Shape(format!("edge features have dimension {d}, weights expect {}", self.edge_dim)));
            }
        }
        Ok(())
    }
}

pub fn flat_len(label_count: usize, node_dim: usize, edge_dim: usize) -> usize {
    label_count * node_dim + label_count * label_count * edge_dim
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-node, per-class indicators without the sum-to-one constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryLabeling {
    label_count: usize,
    bits: Vec<bool>,
}

impl BinaryLabeling {
    pub fn new(node_count: usize, label_count: usize) -> Self {
        Self {
            label_count,
            bits: vec![false; node_count * label_count],
        }
    }

    /// Wraps bits laid out as `u * K + k`.
    pub fn from_bits(label_count: usize, bits: Vec<bool>) -> Result<Self> {
        if label_count == 0 || bits.len() % label_count != 0 {
            return Err(Error::Shape(format!("{} bits do not split into {label_count} classes", bits.len())));
        }
        Ok(Self { label_count, bits })
    }

    pub fn one_hot(labeling: &[usize], label_count: usize) -> Self {
        Self {
            label_count,
            bits: crate::energy::one_hot_bits(labeling, label_count),
        }
    }

    pub fn node_count(&self) -> usize {
        self.bits.len() / self.label_count
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn get(&self, node: usize, class: usize) -> bool {
        self.bits[binary_index(node, class, self.label_count)]
    }

    pub fn set(&mut self, node: usize, class: usize, value: bool) {
        self.bits[binary_index(node, class, self.label_count)] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// The multi-class labeling, if every node has exactly one bit set.
    pub fn to_labeling(&self) -> Option<Vec<usize>> {
        self.bits
            .chunks(self.label_count)
            .map(|row| {
                let mut on = row.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k);
                match (on.next(), on.next()) {
                    (Some(k), None) => Some(k),
                    _ => None,
                }
            })
            .collect()
    }
}

/// Loss scale `rho`. Zero is accepted and removes the loss entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    rho: f64,
}

pub const DEFAULT_RHO: f64 = 100.0;

impl LossConfig {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::Invalid(format!("loss scale {rho} must be finite and non-negative")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { rho: DEFAULT_RHO }
    }
}

fn check_labeling_shape(x: &GraphInstance, y: &BinaryLabeling) -> Result<()> {
    if y.node_count() != x.node_count() || y.label_count() != x.label_count() {
        return Err(Error::Shape(format!(
            "labeling is {}x{}, instance is {}x{}",
            y.node_count(),
            y.label_count(),
            x.node_count(),
            x.label_count()
        )));
    }
    Ok(())
}

/// Joint feature map with real-valued indicators: `unary[u * K + k]` stands
/// for `y_u^k`, `pair[e * K * K + k * K + l]` for `y_u^k * y_v^l`.
pub fn joint_feature_map_relaxed(
    x: &GraphInstance,
    node_dim: usize,
    edge_dim: usize,
    unary: &[f64],
    pair: &[f64],
) -> Vec<f64> {
    let k_count = x.label_count();
    let mut psi = vec![0.0; flat_len(k_count, node_dim, edge_dim)];
    for u in 0..x.node_count() {
        let phi = x.node_features(u);
        for k in 0..k_count {
            let y = unary[binary_index(u, k, k_count)];
            if y != 0.0 {
                let block = &mut psi[k * node_dim..(k + 1) * node_dim];
                for (slot, f) in block.iter_mut().zip(phi) {
                    *slot += y * f;
                }
            }
        }
    }
    let base = k_count * node_dim;
    for (e, edge) in x.edges().iter().enumerate() {
        for k in 0..k_count {
            for l in 0..k_count {
                let y = pair[(e * k_count + k) * k_count + l];
                if y != 0.0 {
                    let o = base + (k * k_count + l) * edge_dim;
                    for (slot, f) in psi[o..o + edge_dim].iter_mut().zip(&edge.features) {
                        *slot += y * f;
                    }
                }
            }
        }
    }
    psi
}

/// `Psi(x, y_b)`: unary block `k` sums `y_u^k phi(u)`, pairwise block
/// `(k, l)` sums `y_u^k y_v^l phi(u, v)` over edges in stored orientation.
pub fn joint_feature_map(x: &GraphInstance, y: &BinaryLabeling, node_dim: usize, edge_dim: usize) -> Result<Vec<f64>> {
    check_labeling_shape(x, y)?;
    if x.node_dim().is_some_and(|d| d != node_dim) || x.edge_dim().is_some_and(|d| d != edge_dim) {
        return Err(Error::Shape("feature dimensions disagree with the requested map".into()));
    }
    let k_count = x.label_count();
    let unary: Vec<f64> = y.bits().iter().map(|&b| b as u8 as f64).collect();
    let mut pair = Vec::with_capacity(x.edges().len() * k_count * k_count);
    for edge in x.edges() {
        for k in 0..k_count {
            for l in 0..k_count {
                pair.push((y.get(edge.u, k) && y.get(edge.v, l)) as u8 as f64);
            }
        }
    }
    Ok(joint_feature_map_relaxed(x, node_dim, edge_dim, &unary, &pair))
}

pub fn score(w: &WeightVector, x: &GraphInstance, y: &BinaryLabeling) -> Result<f64> {
    w.check_instance(x)?;
    let psi = joint_feature_map(x, y, w.node_dim(), w.edge_dim())?;
    Ok(w.dot(&psi))
}

pub fn instantiate_potentials(w: &WeightVector, x: &GraphInstance) -> Result<EnergyFunction> {
    w.check_instance(x)?;
    let k_count = x.label_count();
    let mut energy = EnergyFunction::zeros(x.node_count(), k_count, x.topology())?;
    for u in 0..x.node_count() {
        let phi = x.node_features(u);
        let table = energy.unary_mut(u);
        for (k, slot) in table.iter_mut().enumerate() {
            *slot = -dot(w.unary_block(k), phi);
        }
    }
    for (e, edge) in x.edges().iter().enumerate() {
        let table = energy.pairwise_mut(e);
        for k in 0..k_count {
            for l in 0..k_count {
                table[k * k_count + l] = -dot(w.pairwise_block(k, l), &edge.features);
            }
        }
    }
    Ok(energy)
}

/// `rho * (1 - fraction of nodes labeled correctly)`.
pub fn hamming_loss(y: &[usize], y_hat: &[usize], cfg: &LossConfig) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::Shape(format!("labelings have {} and {} nodes", y.len(), y_hat.len())));
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let correct = y.iter().zip(y_hat).filter(|(a, b)| a == b).count();
    Ok(cfg.rho * (1.0 - correct as f64 / y.len() as f64))
}

/// `rho / (2|V|)` times the number of differing bits.
pub fn binary_hamming_loss(y: &BinaryLabeling, y_hat: &BinaryLabeling, cfg: &LossConfig) -> Result<f64> {
    if y.node_count() != y_hat.node_count() || y.label_count() != y_hat.label_count() {
        return Err(Error::Shape("binary labelings differ in shape".into()));
    }
    let n = y.node_count();
    if n == 0 {
        return Ok(0.0);
    }
    let differing = y.bits().iter().zip(y_hat.bits()).filter(|(a, b)| a != b).count();
    Ok(cfg.rho / (2.0 * n as f64) * differing as f64)
}

/// Soft-label form of [`binary_hamming_loss`]: `|y - y_hat|` per bit.
pub fn relaxed_binary_hamming_loss(gold: &BinaryLabeling, y_hat: &[f64], cfg: &LossConfig) -> f64 {
    let n = gold.node_count();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = gold
        .bits()
        .iter()
        .zip(y_hat)
        .map(|(&g, &v)| (g as u8 as f64 - v).abs())
        .sum();
    cfg.rho / (2.0 * n as f64) * total
}

/// Loss-augmented binary energy.
///
/// For every binary labeling `b`:
/// `energy.evaluate(b) + offset == -(binary_hamming_loss(gold, b) + score(w, x, b))`.
#[derive(Debug, Clone)]
pub struct LossAugmented {
    pub energy: BinaryEnergy,
    pub offset: f64,
}

/// Folds the binary Hamming loss into the unaries of the binary encoding of
/// `instantiate_potentials(w, x)`. Submodular whenever the pairwise weights
/// and edge features are non-negative.
pub fn loss_augment(w: &WeightVector, x: &GraphInstance, gold: &[usize], cfg: &LossConfig) -> Result<LossAugmented> {
    if gold.len() != x.node_count() {
        return Err(Error::Shape(format!("gold labeling has {} nodes, instance {}", gold.len(), x.node_count())));
    }
    let k_count = x.label_count();
    let potentials = instantiate_potentials(w, x)?;
    potentials.check_labeling(gold)?;
    let mut energy = multiclass_to_binary(&potentials);
    let n = x.node_count();
    let per_bit = if n == 0 { 0.0 } else { cfg.rho / (2.0 * n as f64) };
    let mut offset = 0.0;
    for (u, &g) in gold.iter().enumerate() {
        for k in 0..k_count {
            let bit = binary_index(u, k, k_count);
            if k == g {
                // loss per_bit * (1 - b): constant -per_bit, +per_bit when set
                energy.add_unary(bit, 0.0, per_bit);
                offset -= per_bit;
            } else {
                energy.add_unary(bit, 0.0, -per_bit);
            }
        }
    }
    Ok(LossAugmented { energy, offset })
}

/// Weight checkpoint as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub label_count: usize,
    pub node_dim: usize,
    pub edge_dim: usize,
    /// `K x d_n`, row-major.
    pub unary: Vec<f64>,
    /// `K^2 x d_e`, rows ordered by `(k, l)` row-major.
    pub pairwise: Vec<f64>,
    pub hyperparameters: Hyperparameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub c: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub oracle: String,
    pub heuristic: bool,
}

pub const CHECKPOINT_FORMAT: &str = "cutlearn-weights";

impl Checkpoint {
    pub fn new(w: &WeightVector, hyperparameters: Hyperparameters) -> Self {
        let split = w.label_count * w.node_dim;
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: 1,
            label_count: w.label_count,
            node_dim: w.node_dim,
            edge_dim: w.edge_dim,
            unary: w.values[..split].to_vec(),
            pairwise: w.values[split..].to_vec(),
            hyperparameters,
        }
    }

    pub fn weights(&self) -> Result<WeightVector> {
        if self.format != CHECKPOINT_FORMAT || self.version != 1 {
            return Err(Error::Invalid(format!("unsupported checkpoint {:?} v{}", self.format, self.version)));
        }
        if self.unary.len() != self.label_count * self.node_dim {
            return Err(Error::Shape("unary block length disagrees with K x d_n".into()));
        }
        let mut values = self.unary.clone();
        values.extend_from_slice(&self.pairwise);
        WeightVector::from_flat(self.label_count, self.node_dim, self.edge_dim, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}
