//! 1-slack cutting-plane training with a partially non-negative QP and an
//! exact graph-cut separation oracle.
//!
//! The QP `min 1/2 |w|^2 + C xi` subject to `w . g_j >= l_j - xi`, `xi >= 0`
//! and `w_j >= 0` on the constrained set is solved in the dual. With
//! multipliers `alpha` (one per working-set entry, `sum alpha <= C`) and
//! `mu >= 0` for the sign constraints, `w = G alpha + mu`; the optimal `mu`
//! for fixed `alpha` clips the constrained coordinates of `G alpha` at zero.
//! The solver alternates SMO-style pair steps on `alpha` (with an implicit
//! slack multiplier absorbing `C - sum alpha`) with that clipping step, and
//! stops on the primal-dual gap.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphdata::{Dataset, GraphInstance};
use crate::maxflow::minimize_submodular;
use crate::model::{
    binary_hamming_loss, dot, joint_feature_map, joint_feature_map_relaxed, loss_augment, relaxed_binary_hamming_loss,
    BinaryLabeling, LossConfig, WeightVector,
};
use crate::qpbo::{pair_products, qpbo_r};

/// One aggregated cutting plane: `w . feature_diff >= loss - xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingSetEntry {
    /// `1/n sum_i [Psi(x_i, y_i) - Psi(x_i, ybar_i)]`.
    pub feature_diff: Vec<f64>,
    /// `1/n sum_i Delta_b(y_i, ybar_i)`.
    pub loss: f64,
}

impl WorkingSetEntry {
    pub fn violation(&self, w: &[f64]) -> f64 {
        self.loss - dot(w, &self.feature_diff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Stop when the duality gap falls below `tolerance * max(1, primal)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub weights: Vec<f64>,
    pub slack: f64,
    /// Dual multipliers, one per working-set entry.
    pub alphas: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

/// Primal objective `1/2 |w|^2 + C * max(0, max_j violation_j)`.
pub fn qp_objective(entries: &[WorkingSetEntry], c: f64, w: &[f64]) -> (f64, f64) {
    let slack = entries.iter().map(|e| e.violation(w)).fold(0.0, f64::max);
    (0.5 * dot(w, w) + c * slack, slack)
}

fn clip(z: &[f64], nonneg: &[bool], w: &mut [f64]) {
    for ((wi, &zi), &p) in w.iter_mut().zip(z).zip(nonneg) {
        *wi = if p { zi.max(0.0) } else { zi };
    }
}

/// Solves the working-set QP. `nonneg[j]` marks coordinates constrained to
/// be `>= 0`. `warm_start` may carry multipliers from a previous, shorter
/// working set; missing entries start at zero.
pub fn solve_qp(
    entries: &[WorkingSetEntry],
    c: f64,
    nonneg: &[bool],
    warm_start: Option<&[f64]>,
    options: &QpOptions,
) -> Result<QpSolution> {
    let dim = nonneg.len();
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Invalid(format!("regularization constant C = {c} must be positive")));
    }
    if let Some(bad) = entries.iter().position(|e| e.feature_diff.len() != dim) {
        return Err(Error::Shape(format!("working-set entry {bad} has the wrong dimension")));
    }
    let m = entries.len();
    if m == 0 {
        return Ok(QpSolution {
            weights: vec![0.0; dim],
            slack: 0.0,
            alphas: Vec::new(),
            objective: 0.0,
            dual_objective: 0.0,
            iterations: 0,
        });
    }

    let mut alphas = vec![0.0; m];
    if let Some(warm) = warm_start {
        for (a, &v) in alphas.iter_mut().zip(warm) {
            *a = v.max(0.0);
        }
        let total: f64 = alphas.iter().sum();
        if total > c {
            alphas.iter_mut().for_each(|a| *a *= c / total);
        }
    }
    let mut z = vec![0.0; dim];
    for (a, e) in alphas.iter().zip(entries) {
        if *a != 0.0 {
            for (zi, g) in z.iter_mut().zip(&e.feature_diff) {
                *zi += a * g;
            }
        }
    }
    let mut w = vec![0.0; dim];
    clip(&z, nonneg, &mut w);
    let sq_norms: Vec<f64> = entries.iter().map(|e| dot(&e.feature_diff, &e.feature_diff)).collect();

    // index m is the slack multiplier: zero gradient vector, zero loss
    let mut grad = vec![0.0; m + 1];
    for iteration in 0..options.max_iterations {
        for (j, e) in entries.iter().enumerate() {
            grad[j] = dot(&w, &e.feature_diff) - e.loss;
        }
        grad[m] = 0.0;
        let slack_alpha = (c - alphas.iter().sum::<f64>()).max(0.0);

        let norm_w = dot(&w, &w);
        let slack = grad[..m].iter().map(|g| -g).fold(0.0, f64::max);
        let primal = 0.5 * norm_w + c * slack;
        let dual = entries.iter().zip(&alphas).map(|(e, a)| a * e.loss).sum::<f64>() - 0.5 * norm_w;
        if primal - dual <= options.tolerance * primal.abs().max(1.0) {
            return Ok(QpSolution {
                weights: w,
                slack,
                alphas,
                objective: primal,
                dual_objective: dual,
                iterations: iteration,
            });
        }

        // most violating pair: grow the smallest gradient, shrink the largest
        // among multipliers that are still positive
        let up = (0..=m).min_by(|&a, &b| grad[a].total_cmp(&grad[b])).unwrap();
        let alpha_of = |j: usize| if j == m { slack_alpha } else { alphas[j] };
        let down = (0..=m)
            .filter(|&j| alpha_of(j) > 0.0)
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]))
            .unwrap_or(m);
        let gain = grad[down] - grad[up];
        if up == down || gain <= 0.0 {
            // only the clipping block can still be off; it is already exact,
            // so the gap is floating-point noise
            return Ok(QpSolution {
                weights: w,
                slack,
                alphas,
                objective: primal,
                dual_objective: dual,
                iterations: iteration,
            });
        }
        let dir_sq = match (up == m, down == m) {
            (false, true) => sq_norms[up],
            (true, false) => sq_norms[down],
            _ => {
                let (gu, gd) = (&entries[up].feature_diff, &entries[down].feature_diff);
                gu.iter().zip(gd).map(|(a, b)| (a - b) * (a - b)).sum()
            }
        };
        let limit = alpha_of(down);
        let step = if dir_sq > 0.0 { (gain / dir_sq).min(limit) } else { limit };
        if up < m {
            alphas[up] += step;
            for (zi, g) in z.iter_mut().zip(&entries[up].feature_diff) {
                *zi += step * g;
            }
        }
        if down < m {
            alphas[down] = (alphas[down] - step).max(0.0);
            if step == limit {
                alphas[down] = 0.0;
            }
            for (zi, g) in z.iter_mut().zip(&entries[down].feature_diff) {
                *zi -= step * g;
            }
        }
        clip(&z, nonneg, &mut w);
    }
    let (objective, _) = qp_objective(entries, c, &w);
    let dual = entries.iter().zip(&alphas).map(|(e, a)| a * e.loss).sum::<f64>() - 0.5 * dot(&w, &w);
    Err(Error::QpNotConverged {
        iterations: options.max_iterations,
        gap: objective - dual,
    })
}

/// Which separation oracle the trainer calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Graph cut on the submodular loss-augmented binary energy.
    Exact,
    /// QPBO with unlabeled variables at 0.5; weights are left unconstrained.
    QpboR,
}

impl OracleKind {
    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Exact => "exact",
            OracleKind::QpboR => "qpbo-r",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub max_iterations: usize,
    pub oracle: OracleKind,
    /// Pairwise rounding rule for the QPBO-R oracle.
    pub heuristic: bool,
    /// A new violation this far below the working-set slack is reported as
    /// an anomaly.
    pub anomaly_tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::with_rho(crate::model::DEFAULT_RHO)
    }
}

impl TrainConfig {
    /// Defaults with `epsilon = 1e-3 * rho`.
    pub fn with_rho(rho: f64) -> Self {
        Self {
            c: 1.0,
            epsilon: 1e-3 * rho,
            rho,
            max_iterations: 500,
            oracle: OracleKind::Exact,
            heuristic: true,
            anomaly_tolerance: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C", self.c), ("epsilon", self.epsilon), ("rho", self.rho)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} = {v} must be positive and finite")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Invalid("max_iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn loss(&self) -> LossConfig {
        LossConfig::new(self.rho).expect("validated rho")
    }
}

/// Most violating labeling found by the oracle, with the quantities the
/// trainer aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Value of every binary variable: 0/1 for the exact oracle, possibly 0.5
    /// for QPBO-R.
    pub bits: Vec<f64>,
    /// `Psi(x, ybar)`.
    pub features: Vec<f64>,
    /// `Delta_b(y, ybar)`.
    pub loss: f64,
    /// `Delta_b + w . Psi(x, ybar)`.
    pub value: f64,
}

impl OracleResult {
    /// The hard labeling, when every bit is integral.
    pub fn binary_labeling(&self, label_count: usize) -> Option<BinaryLabeling> {
        let bits: Option<Vec<bool>> = self
            .bits
            .iter()
            .map(|&b| {
                if b == 0.0 {
                    Some(false)
                } else if b == 1.0 {
                    Some(true)
                } else {
                    None
                }
            })
            .collect();
        BinaryLabeling::from_bits(label_count, bits?).ok()
    }
}

/// Loss-augmented inference `argmax_ybar Delta_b(y, ybar) + w . Psi(x, ybar)`
/// over binary labelings without the one-hot constraint.
pub fn separation_oracle(
    w: &WeightVector,
    x: &GraphInstance,
    kind: OracleKind,
    heuristic: bool,
    loss: &LossConfig,
) -> Result<OracleResult> {
    let gold = x.labels();
    let aug = loss_augment(w, x, gold, loss)?;
    let k_count = x.label_count();
    match kind {
        OracleKind::Exact => {
            let (bits, _) = minimize_submodular(&aug.energy)?;
            let labeling = BinaryLabeling::from_bits(k_count, bits)?;
            let features = joint_feature_map(x, &labeling, w.node_dim(), w.edge_dim())?;
            let loss_value = binary_hamming_loss(&BinaryLabeling::one_hot(gold, k_count), &labeling, loss)?;
            let value = loss_value + w.dot(&features);
            let bits = labeling.bits().iter().map(|&b| b as u8 as f64).collect();
            Ok(OracleResult {
                bits,
                features,
                loss: loss_value,
                value,
            })
        }
        OracleKind::QpboR => {
            let relaxed = qpbo_r(&aug.energy);
            let unary: Vec<f64> = relaxed.iter().map(|v| v.as_f64()).collect();
            let pairs = pair_products(&relaxed, &aug.energy, heuristic);
            let features = joint_feature_map_relaxed(x, w.node_dim(), w.edge_dim(), &unary, &pairs);
            let loss_value = relaxed_binary_hamming_loss(&BinaryLabeling::one_hot(gold, k_count), &unary, loss);
            let value = loss_value + w.dot(&features);
            Ok(OracleResult {
                bits: unary,
                features,
                loss: loss_value,
                value,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// QP objective `1/2 |w|^2 + C xi` over the working set before this
    /// iteration's constraint was added.
    pub objective: f64,
    pub slack: f64,
    /// Violation of the newly found constraint under the current `w`.
    pub violation: f64,
    /// Largest violation among the constraints already in the working set;
    /// `None` on the first iteration.
    pub working_set_violation: Option<f64>,
    pub min_constrained_weight: f64,
    pub oracle_seconds: f64,
    pub qp_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum Termination {
    /// `violation - slack <= epsilon`.
    Converged,
    /// The new violation fell below the working-set slack, which an exact
    /// oracle cannot produce.
    EarlyTermination { iteration: usize, violation: f64, slack: f64 },
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
    pub weights: WeightVector,
}

impl TrainReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn final_objective(&self) -> f64 {
        self.iterations.last().map_or(0.0, |r| r.objective)
    }
}

/// Mean joint feature map of the gold labelings.
fn mean_gold_features(data: &Dataset, w: &WeightVector) -> Result<Vec<f64>> {
    let n = data.len() as f64;
    let mut mean = vec![0.0; w.len()];
    for x in data.instances() {
        let psi = joint_feature_map(x, &BinaryLabeling::one_hot(x.labels(), x.label_count()), w.node_dim(), w.edge_dim())?;
        for (m, p) in mean.iter_mut().zip(psi) {
            *m += p / n;
        }
    }
    Ok(mean)
}

/// Runs the cutting-plane loop to completion.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<(WeightVector, TrainReport)> {
    train_with_observer(data, cfg, |_| {})
}

/// [`train`] with a callback invoked after every iteration.
pub fn train_with_observer(
    data: &Dataset,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&IterationRecord),
) -> Result<(WeightVector, TrainReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Invalid("cannot train on an empty dataset".into()));
    }
    let (k, dn, de) = (data.label_count(), data.node_dim(), data.edge_dim());
    let mut w = WeightVector::zeros(k, dn, de);
    let nonneg = match cfg.oracle {
        OracleKind::Exact => w.nonneg_mask(),
        OracleKind::QpboR => vec![false; w.len()],
    };
    let loss = cfg.loss();
    let gold_mean = mean_gold_features(data, &w)?;
    let n = data.len() as f64;
    let qp_options = QpOptions::default();

    let mut working_set: Vec<WorkingSetEntry> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut violation = f64::INFINITY;
    let mut slack = 0.0;
    let mut records = Vec::new();

    let termination = loop {
        if violation - slack <= cfg.epsilon {
            break if violation < slack - cfg.anomaly_tolerance {
                Termination::EarlyTermination {
                    iteration: records.len(),
                    violation,
                    slack,
                }
            } else {
                Termination::Converged
            };
        }
        if records.len() >= cfg.max_iterations {
            break Termination::MaxIterations;
        }

        let qp_start = Instant::now();
        let qp = solve_qp(&working_set, cfg.c, &nonneg, Some(&alphas), &qp_options)?;
        let qp_seconds = qp_start.elapsed().as_secs_f64();
        w = WeightVector::from_flat(k, dn, de, qp.weights)?;
        slack = qp.slack;
        alphas = qp.alphas;

        let oracle_start = Instant::now();
        let results: Vec<OracleResult> = data
            .instances()
            .par_iter()
            .map(|x| separation_oracle(&w, x, cfg.oracle, cfg.heuristic, &loss))
            .collect::<Result<_>>()?;
        let oracle_seconds = oracle_start.elapsed().as_secs_f64();

        let mut feature_diff = gold_mean.clone();
        let mut mean_loss = 0.0;
        for r in &results {
            for (d, f) in feature_diff.iter_mut().zip(&r.features) {
                *d -= f / n;
            }
            mean_loss += r.loss / n;
        }
        let entry = WorkingSetEntry {
            feature_diff,
            loss: mean_loss,
        };
        violation = entry.violation(w.as_slice());
        let working_set_violation = working_set
            .iter()
            .map(|e| e.violation(w.as_slice()))
            .reduce(f64::max);
        let record = IterationRecord {
            iteration: records.len() + 1,
            objective: qp.objective,
            slack,
            violation,
            working_set_violation,
            min_constrained_weight: w.min_constrained(),
            oracle_seconds,
            qp_seconds,
        };
        observer(&record);
        records.push(record);
        working_set.push(entry);
        alphas.push(0.0);
    };

    let report = TrainReport {
        iterations: records,
        termination,
        weights: w.clone(),
    };
    Ok((w, report))
}
