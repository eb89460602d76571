//! Shared fixtures and independent reference computations for the
//! integration tests. Nothing here calls the library's own evaluators.

#![allow(dead_code)]

use cutlearn::energy::{BinaryEnergy, EnergyFunction};
use cutlearn::graphdata::{Edge, GraphInstance};
use cutlearn::model::WeightVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Energy of a binary labeling, summed straight from the stored tables.
pub fn binary_value(energy: &BinaryEnergy, bits: &[bool]) -> f64 {
    let mut total = 0.0;
    for (u, c) in energy.unaries().iter().enumerate() {
        total += c[bits[u] as usize];
    }
    for t in energy.terms() {
        total += t.table[bits[t.u] as usize][bits[t.v] as usize];
    }
    total
}

pub fn bits_of(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Minimum energy and every labeling attaining it within `tol`.
pub fn all_binary_minimizers(energy: &BinaryEnergy, tol: f64) -> (f64, Vec<Vec<bool>>) {
    let n = energy.node_count();
    let values: Vec<f64> = (0..1u64 << n).map(|m| binary_value(energy, &bits_of(m, n))).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let argmins = (0..1u64 << n)
        .filter(|&m| values[m as usize] <= best + tol)
        .map(|m| bits_of(m, n))
        .collect();
    (best, argmins)
}

fn random_table(rng: &mut ChaCha8Rng, submodular: bool) -> [[f64; 2]; 2] {
    loop {
        let mut t = [[0.0; 2]; 2];
        for row in &mut t {
            for c in row.iter_mut() {
                // coarse grid values make exact ties common
                *c = if rng.gen_bool(0.3) {
                    rng.gen_range(-3..=3) as f64
                } else {
                    rng.gen_range(-3.0..3.0)
                };
            }
        }
        if !submodular || t[0][1] + t[1][0] >= t[0][0] + t[1][1] {
            return t;
        }
    }
}

/// Random binary energy with `n` nodes and up to `max_edges` pairwise terms
/// (parallel terms allowed).
pub fn random_binary_energy(rng: &mut ChaCha8Rng, n: usize, max_edges: usize, submodular: bool) -> BinaryEnergy {
    let mut e = BinaryEnergy::new(n);
    for u in 0..n {
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        e.add_unary(u, a, b);
    }
    if n >= 2 {
        for _ in 0..rng.gen_range(0..=max_edges) {
            let u = rng.gen_range(0..n);
            let mut v = rng.gen_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            let table = random_table(rng, submodular);
            e.add_pairwise(u, v, table);
        }
    }
    e
}

/// Random multi-class energy on a random simple graph, edge orientation
/// random.
pub fn random_energy(rng: &mut ChaCha8Rng, n: usize, k: usize, density: f64) -> EnergyFunction {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                edges.push(if rng.gen_bool(0.5) { (u, v) } else { (v, u) });
            }
        }
    }
    let mut e = EnergyFunction::zeros(n, k, edges).unwrap();
    for u in 0..n {
        for c in e.unary_mut(u) {
            *c = rng.gen_range(-2.0..2.0);
        }
    }
    for i in 0..e.edges().len() {
        for c in e.pairwise_mut(i) {
            *c = rng.gen_range(-2.0..2.0);
        }
    }
    e
}

/// Random tree (random recursive attachment, random orientation).
pub fn random_tree_energy(rng: &mut ChaCha8Rng, n: usize, k: usize) -> EnergyFunction {
    let edges = (1..n)
        .map(|c| {
            let p = rng.gen_range(0..c);
            if rng.gen_bool(0.5) {
                (p, c)
            } else {
                (c, p)
            }
        })
        .collect();
    let mut e = EnergyFunction::zeros(n, k, edges).unwrap();
    for u in 0..n {
        for c in e.unary_mut(u) {
            *c = rng.gen_range(-2.0..2.0);
        }
    }
    for i in 0..e.edges().len() {
        for c in e.pairwise_mut(i) {
            *c = rng.gen_range(-2.0..2.0);
        }
    }
    e
}

pub fn multiclass_value(e: &EnergyFunction, y: &[usize]) -> f64 {
    let mut total: f64 = (0..e.node_count()).map(|u| e.unary(u)[y[u]]).sum();
    for (i, &(u, v)) in e.edges().iter().enumerate() {
        total += e.pairwise(i)[y[u] * e.label_count() + y[v]];
    }
    total
}

/// Minimum by recursive enumeration.
pub fn multiclass_minimum(e: &EnergyFunction) -> f64 {
    fn go(e: &EnergyFunction, y: &mut Vec<usize>, best: &mut f64) {
        if y.len() == e.node_count() {
            *best = best.min(multiclass_value(e, y));
            return;
        }
        for k in 0..e.label_count() {
            y.push(k);
            go(e, y, best);
            y.pop();
        }
    }
    let mut best = f64::INFINITY;
    go(e, &mut Vec::new(), &mut best);
    best
}

/// Random instance with non-negative edge features.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, dn: usize, de: usize, density: f64) -> GraphInstance {
    let nodes = (0..n).map(|_| (0..dn).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                let (a, b) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
                let features = (0..de)
                    .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) })
                    .collect();
                edges.push(Edge { u: a, v: b, features });
            }
        }
    }
    let labels = (0..n).map(|_| rng.gen_range(0..k)).collect();
    GraphInstance::new(nodes, edges, labels, k).unwrap()
}

/// Random weights, non-negative on the pairwise block.
pub fn random_weights(rng: &mut ChaCha8Rng, k: usize, dn: usize, de: usize) -> WeightVector {
    let mut w = WeightVector::zeros(k, dn, de);
    let range = w.nonneg_range();
    let mut values = w.clone().into_vec();
    for (i, v) in values.iter_mut().enumerate() {
        *v = if range.contains(&i) {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..2.0)
            }
        } else {
            rng.gen_range(-2.0..2.0)
        };
    }
    w = WeightVector::from_flat(k, dn, de, values).unwrap();
    w
}

/// Direct evaluation of `Delta_b(gold, bits) + w . Psi(x, bits)` from the
/// definitions, with `bits[u * k + c]` the indicator of class `c` at `u`.
pub fn loss_plus_score(w: &WeightVector, x: &GraphInstance, bits: &[bool], rho: f64) -> f64 {
    let k = x.label_count();
    let n = x.node_count();
    let (dn, de) = (w.node_dim(), w.edge_dim());
    let vals = w.as_slice();
    let mut total = 0.0;
    for u in 0..n {
        for c in 0..k {
            let on = bits[u * k + c];
            let gold = x.labels()[u] == c;
            if on != gold {
                total += rho / (2.0 * n as f64);
            }
            if on {
                total += (0..dn).map(|j| vals[c * dn + j] * x.node_features(u)[j]).sum::<f64>();
            }
        }
    }
    for edge in x.edges() {
        for a in 0..k {
            for b in 0..k {
                if bits[edge.u * k + a] && bits[edge.v * k + b] {
                    let o = k * dn + (a * k + b) * de;
                    total += (0..de).map(|j| vals[o + j] * edge.features[j]).sum::<f64>();
                }
            }
        }
    }
    total
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&x, &y| v[x].total_cmp(&v[y]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
                j += 1;
            }
            for &idx in &order[i..=j] {
                r[idx] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
