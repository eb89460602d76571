//! QPBO for arbitrary binary energies, its 0.5-relaxed variant and the
//! pairwise rounding rule used by the relaxed baseline trainer.
//!
//! Each variable `x_u` gets a twin standing for `1 - x_u`. Every term is
//! split in half over the two copies so that the doubled energy is
//! submodular; it is minimized by graph cut, and a variable is labeled only
//! when it and its twin agree.

use crate::energy::BinaryEnergy;
use crate::maxflow::minimize_submodular;

/// Output of QPBO for one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialLabel {
    Zero,
    One,
    Unlabeled,
}

impl PartialLabel {
    pub fn value(self) -> Option<bool> {
        match self {
            PartialLabel::Zero => Some(false),
            PartialLabel::One => Some(true),
            PartialLabel::Unlabeled => None,
        }
    }
}

pub type PartialBinaryLabeling = Vec<PartialLabel>;

/// Per-variable value in `{0, 0.5, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxedValue {
    Zero,
    Half,
    One,
}

impl RelaxedValue {
    pub fn as_f64(self) -> f64 {
        match self {
            RelaxedValue::Zero => 0.0,
            RelaxedValue::Half => 0.5,
            RelaxedValue::One => 1.0,
        }
    }
}

impl From<PartialLabel> for RelaxedValue {
    fn from(label: PartialLabel) -> Self {
        match label {
            PartialLabel::Zero => RelaxedValue::Zero,
            PartialLabel::One => RelaxedValue::One,
            PartialLabel::Unlabeled => RelaxedValue::Half,
        }
    }
}

pub type RelaxedBinaryLabeling = Vec<RelaxedValue>;

fn remap(table: [[f64; 2]; 2], flip_first: bool, flip_second: bool) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let ia = if flip_first { 1 - a } else { a };
            let ib = if flip_second { 1 - b } else { b };
            *cell = 0.5 * table[ia][ib];
        }
    }
    out
}

/// The submodular doubled energy over `2n` variables: `u` keeps `x_u`,
/// `n + u` holds `1 - x_u`.
pub fn doubled_energy(energy: &BinaryEnergy) -> BinaryEnergy {
    let n = energy.node_count();
    let mut doubled = BinaryEnergy::new(2 * n);
    for (u, &[c0, c1]) in energy.unaries().iter().enumerate() {
        doubled.add_unary(u, 0.5 * c0, 0.5 * c1);
        doubled.add_unary(n + u, 0.5 * c1, 0.5 * c0);
    }
    for term in energy.terms() {
        let (u, v) = (term.u, term.v);
        if term.is_submodular() {
            doubled.add_pairwise(u, v, remap(term.table, false, false));
            doubled.add_pairwise(n + u, n + v, remap(term.table, true, true));
        } else {
            doubled.add_pairwise(u, n + v, remap(term.table, false, true));
            doubled.add_pairwise(n + u, v, remap(term.table, true, false));
        }
    }
    debug_assert!(doubled.is_submodular());
    doubled
}

/// Partial labeling with the persistency property: every labeled variable
/// agrees with some global minimizer. Total on submodular inputs.
pub fn qpbo_solve(energy: &BinaryEnergy) -> PartialBinaryLabeling {
    let n = energy.node_count();
    let doubled = doubled_energy(energy);
    let (bits, _) = minimize_submodular(&doubled).expect("doubled energy is submodular by construction");
    (0..n)
        .map(|u| match (bits[u], bits[n + u]) {
            (false, true) => PartialLabel::Zero,
            (true, false) => PartialLabel::One,
            _ => PartialLabel::Unlabeled,
        })
        .collect()
}

/// QPBO with unlabeled variables replaced by 0.5.
pub fn qpbo_r(energy: &BinaryEnergy) -> RelaxedBinaryLabeling {
    qpbo_solve(energy).into_iter().map(RelaxedValue::from).collect()
}

/// Value of `y_u * y_v` for every pairwise term, as fed to the joint
/// feature map by the relaxed baseline.
///
/// If either end is labeled the literal product is used. If both ends are
/// 0.5 the product reads 0.5 when its coefficient in the maximized objective,
/// `-table[1][1]`, is positive and 0 otherwise. With `heuristic == false` the
/// literal product (0.25) is kept.
pub fn pair_products(relaxed: &[RelaxedValue], energy: &BinaryEnergy, heuristic: bool) -> Vec<f64> {
    energy
        .terms()
        .iter()
        .map(|term| {
            let (a, b) = (relaxed[term.u], relaxed[term.v]);
            if heuristic && a == RelaxedValue::Half && b == RelaxedValue::Half {
                let coefficient = -term.table[1][1];
                if coefficient > 0.0 {
                    0.5
                } else {
                    0.0
                }
            } else {
                a.as_f64() * b.as_f64()
            }
        })
        .collect()
}

/// The rounding rule itself (heuristic enabled).
pub fn rounding_heuristic(relaxed: &[RelaxedValue], energy: &BinaryEnergy) -> Vec<f64> {
    pair_products(relaxed, energy, true)
}
