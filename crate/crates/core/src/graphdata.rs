//! Graph-labeling datasets: in-memory model, line-delimited file format,
//! the synthetic contextual-scene generator and node-level metrics.
//!
//! File layout: the first line is a header object
//! `{"format":"cutlearn-dataset","version":1,"node_dim":..,"edge_dim":..,"label_count":..,"instances":..}`,
//! followed by one object per instance:
//! `{"nodes":[[f64,..],..],"edges":[[u,v,[f64,..]],..],"labels":[usize,..]}`.
//! Floats are written in shortest round-trip form.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "cutlearn-dataset";
pub const DATASET_VERSION: u32 = 1;

/// Undirected edge stored in the orientation `(u, v)` its feature and
/// potential table refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub features: Vec<f64>,
}

/// One labeled graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance {
    nodes: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    labels: Vec<usize>,
    label_count: usize,
}

impl GraphInstance {
    /// Validates and builds an instance. Node ids are positions in `nodes`.
    pub fn new(nodes: Vec<Vec<f64>>, edges: Vec<Edge>, labels: Vec<usize>, label_count: usize) -> Result<Self> {
        let instance = Self {
            nodes,
            edges,
            labels,
            label_count,
        };
        instance.validate().map_err(|message| Error::InvalidInstance { instance: 0, message })?;
        Ok(instance)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.label_count == 0 {
            return Err("label count must be at least 1".into());
        }
        let n = self.nodes.len();
        if self.labels.len() != n {
            return Err(format!("{} labels for {} nodes", self.labels.len(), n));
        }
        if let Some((u, &k)) = self.labels.iter().enumerate().find(|(_, &k)| k >= self.label_count) {
            return Err(format!("node {u} has label {k} outside 0..{}", self.label_count));
        }
        if let Some(first) = self.nodes.first() {
            let d = first.len();
            for (u, f) in self.nodes.iter().enumerate() {
                if f.len() != d {
                    return Err(format!("node {u} has {} features, expected {d}", f.len()));
                }
                if f.iter().any(|x| !x.is_finite()) {
                    return Err(format!("node {u} has a non-finite feature"));
                }
            }
        }
        let mut seen = HashSet::with_capacity(self.edges.len());
        let edge_dim = self.edges.first().map(|e| e.features.len());
        for (i, e) in self.edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(format!("edge {i} ({}, {}) references a missing node", e.u, e.v));
            }
            if e.u == e.v {
                return Err(format!("edge {i} is a self-loop on node {}", e.u));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(format!("edge {i} ({}, {}) duplicates an earlier edge", e.u, e.v));
            }
            if Some(e.features.len()) != edge_dim {
                return Err(format!("edge {i} has {} features, expected {}", e.features.len(), edge_dim.unwrap_or(0)));
            }
            if let Some(j) = e.features.iter().position(|&x| !(x.is_finite() && x >= 0.0)) {
                return Err(format!(
                    "edge {i} ({}, {}) feature {j} = {} must be finite and non-negative",
                    e.u, e.v, e.features[j]
                ));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn node_features(&self, u: usize) -> &[f64] {
        &self.nodes[u]
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Node feature dimension, `None` for an empty graph.
    pub fn node_dim(&self) -> Option<usize> {
        self.nodes.first().map(Vec::len)
    }

    /// Edge feature dimension, `None` for a graph without edges.
    pub fn edge_dim(&self) -> Option<usize> {
        self.edges.first().map(|e| e.features.len())
    }

    pub fn topology(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.u, e.v)).collect()
    }
}

/// A collection of instances sharing `node_dim`, `edge_dim` and `label_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<GraphInstance>,
    node_dim: usize,
    edge_dim: usize,
    label_count: usize,
}

impl Dataset {
    pub fn new(node_dim: usize, edge_dim: usize, label_count: usize, instances: Vec<GraphInstance>) -> Result<Self> {
        if label_count == 0 {
            return Err(Error::Invalid("label count must be at least 1".into()));
        }
        for (i, inst) in instances.iter().enumerate() {
            Self::check_member(i, inst, node_dim, edge_dim, label_count)?;
        }
        Ok(Self {
            instances,
            node_dim,
            edge_dim,
            label_count,
        })
    }

    fn check_member(index: usize, inst: &GraphInstance, node_dim: usize, edge_dim: usize, label_count: usize) -> Result<()> {
        let fail = |message: String| Error::InvalidInstance { instance: index, message };
        inst.validate().map_err(fail)?;
        if inst.label_count != label_count {
            return Err(fail(format!("label count {} differs from dataset's {label_count}", inst.label_count)));
        }
        if let Some(d) = inst.node_dim() {
            if d != node_dim {
                return Err(fail(format!("node feature dimension {d} differs from dataset's {node_dim}")));
            }
        }
        if let Some(d) = inst.edge_dim() {
            if d != edge_dim {
                return Err(fail(format!("edge feature dimension {d} differs from dataset's {edge_dim}")));
            }
        }
        Ok(())
    }

    pub fn instances(&self) -> &[GraphInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn total_nodes(&self) -> usize {
        self.instances.iter().map(GraphInstance::node_count).sum()
    }

    pub fn total_edges(&self) -> usize {
        self.instances.iter().map(|g| g.edges.len()).sum()
    }

    /// Sub-dataset with the instances at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
            node_dim: self.node_dim,
            edge_dim: self.edge_dim,
            label_count: self.label_count,
        }
    }

    /// The same nodes and labels with every edge dropped; trains and
    /// evaluates a unary-only model.
    pub fn without_edges(&self) -> Dataset {
        Dataset {
            instances: self
                .instances
                .iter()
                .map(|g| GraphInstance {
                    edges: Vec::new(),
                    ..g.clone()
                })
                .collect(),
            ..*self
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    node_dim: usize,
    edge_dim: usize,
    label_count: usize,
    instances: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceRecord {
    nodes: Vec<Vec<f64>>,
    edges: Vec<(usize, usize, Vec<f64>)>,
    labels: Vec<usize>,
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        node_dim: dataset.node_dim,
        edge_dim: dataset.edge_dim,
        label_count: dataset.label_count,
        instances: dataset.len(),
    };
    let write_line = |out: &mut BufWriter<File>, json: String| -> Result<()> {
        writeln!(out, "{json}").map_err(|e| Error::io(path, e))
    };
    write_line(&mut out, serde_json::to_string(&header).expect("header serializes"))?;
    for inst in &dataset.instances {
        let record = InstanceRecord {
            nodes: inst.nodes.clone(),
            edges: inst.edges.iter().map(|e| (e.u, e.v, e.features.clone())).collect(),
            labels: inst.labels.clone(),
        };
        write_line(&mut out, serde_json::to_string(&record).expect("instance serializes"))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses the dataset format from any buffered reader.
pub fn read_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let first = first.map_err(|e| Error::io("<dataset>", e))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| Error::Parse {
        line: 1,
        message: format!("bad header: {e}"),
    })?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported format {:?} version {}", header.format, header.version),
        });
    }
    let mut instances = Vec::with_capacity(header.instances);
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io("<dataset>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InstanceRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let inst = GraphInstance {
            nodes: record.nodes,
            edges: record
                .edges
                .into_iter()
                .map(|(u, v, features)| Edge { u, v, features })
                .collect(),
            labels: record.labels,
            label_count: header.label_count,
        };
        Dataset::check_member(instances.len(), &inst, header.node_dim, header.edge_dim, header.label_count)?;
        instances.push(inst);
    }
    if instances.len() != header.instances {
        return Err(Error::Parse {
            line: 1,
            message: format!("header announces {} instances, file has {}", header.instances, instances.len()),
        });
    }
    Dataset::new(header.node_dim, header.edge_dim, header.label_count, instances)
}

/// Settings of the synthetic contextual-scene generator.
///
/// Each graph is a random recursive tree ("support" edges, parent to child)
/// plus extra random "contact" edges. Labels are sampled top-down: a child's
/// label is drawn from the planted transition table row of its parent's
/// label. Node features are the one-hot label plus Gaussian noise, followed
/// by a constant 1 acting as a bias; edge features are `[support, contact]`
/// indicators, so feature 0 is the planted one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub label_count: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Extra non-tree edges per node.
    pub edge_density: f64,
    /// Standard deviation of the node-feature noise.
    pub noise: f64,
    pub instances: usize,
    /// Probability that a child takes its parent's preferred successor class.
    pub affinity: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            label_count: 4,
            min_nodes: 30,
            max_nodes: 30,
            edge_density: 0.5,
            noise: 1.0,
            instances: 50,
            affinity: 0.9,
        }
    }
}

pub const SUPPORT_FEATURE: usize = 0;
pub const CONTACT_FEATURE: usize = 1;
pub const GENERATED_EDGE_DIM: usize = 2;

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        if self.label_count < 2 {
            return bad("generator needs at least 2 classes");
        }
        if self.min_nodes == 0 || self.max_nodes < self.min_nodes {
            return bad("node count range must be non-empty and start at 1 or more");
        }
        if self.instances == 0 {
            return bad("generator needs at least one instance");
        }
        if !(self.edge_density.is_finite() && self.edge_density >= 0.0) {
            return bad("edge density must be finite and non-negative");
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad("noise must be finite and non-negative");
        }
        if !(self.affinity > 0.0 && self.affinity < 1.0) {
            return bad("affinity must lie strictly between 0 and 1");
        }
        Ok(())
    }

    /// Row-stochastic parent-to-child table, `K x K` row-major. Class `k`
    /// prefers child class `(k + 1) mod K`; the remaining mass is spread
    /// evenly, so the diagonal is weaker than the preferred off-diagonal.
    pub fn transition_table(&self) -> Vec<f64> {
        let k = self.label_count;
        let rest = (1.0 - self.affinity) / (k - 1) as f64;
        let mut table = vec![rest; k * k];
        for row in 0..k {
            table[row * k + (row + 1) % k] = self.affinity;
        }
        table
    }

    /// Non-negative compatibility table: log-transition probabilities shifted
    /// so the smallest entry is zero.
    pub fn planted_compatibility(&self) -> Vec<f64> {
        let logs: Vec<f64> = self.transition_table().iter().map(|p| p.ln()).collect();
        let min = logs.iter().copied().fold(f64::INFINITY, f64::min);
        logs.iter().map(|l| l - min).collect()
    }
}

fn categorical(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let mut r: f64 = rng.gen();
    for (i, &p) in probs.iter().enumerate() {
        if r < p {
            return i;
        }
        r -= p;
    }
    probs.len() - 1
}

/// Deterministic in `(cfg, seed)`.
pub fn generate_synthetic(cfg: &GeneratorConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let k = cfg.label_count;
    let table = cfg.transition_table();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut instances = Vec::with_capacity(cfg.instances);
    for _ in 0..cfg.instances {
        let n = rng.gen_range(cfg.min_nodes..=cfg.max_nodes);
        let mut labels = Vec::with_capacity(n);
        let mut edges = Vec::new();
        let mut present = HashSet::new();
        labels.push(rng.gen_range(0..k));
        for child in 1..n {
            let parent = rng.gen_range(0..child);
            let label = categorical(&mut rng, &table[labels[parent] * k..(labels[parent] + 1) * k]);
            labels.push(label);
            present.insert((parent, child));
            edges.push(Edge {
                u: parent,
                v: child,
                features: vec![1.0, 0.0],
            });
        }
        let extra = (cfg.edge_density * n as f64).round() as usize;
        let max_edges = n * (n - 1) / 2;
        let mut added = 0;
        while added < extra && present.len() < max_edges {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let key = (a.min(b), a.max(b));
            if a == b || !present.insert(key) {
                continue;
            }
            edges.push(Edge {
                u: key.0,
                v: key.1,
                features: vec![0.0, 1.0],
            });
            added += 1;
        }
        let nodes = labels
            .iter()
            .map(|&y| {
                let mut f: Vec<f64> = (0..k).map(|c| if c == y { 1.0 } else { 0.0 } + noise.sample(&mut rng)).collect();
                f.push(1.0);
                f
            })
            .collect();
        instances.push(GraphInstance {
            nodes,
            edges,
            labels,
            label_count: k,
        });
    }
    Dataset::new(k + 1, GENERATED_EDGE_DIM, k, instances)
}

/// Seeded assignment of `count` instances to `folds` folds of near-equal size.
pub fn fold_assignment(count: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > count {
        return Err(Error::Invalid(format!("cannot split {count} instances into {folds} folds")));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; count];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    Ok(fold_of)
}

/// Node-level classification metrics pooled over instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// `confusion[gold][predicted]`.
    pub confusion: Vec<Vec<u64>>,
}

pub fn evaluate(predictions: &[Vec<usize>], gold: &Dataset) -> Result<Metrics> {
    if predictions.len() != gold.len() {
        return Err(Error::Shape(format!(
            "{} predicted labelings for {} instances",
            predictions.len(),
            gold.len()
        )));
    }
    let k = gold.label_count();
    let mut confusion = vec![vec![0u64; k]; k];
    for (i, (pred, inst)) in predictions.iter().zip(gold.instances()).enumerate() {
        if pred.len() != inst.node_count() {
            return Err(Error::Shape(format!(
                "instance {i}: {} predictions for {} nodes",
                pred.len(),
                inst.node_count()
            )));
        }
        for (&p, &g) in pred.iter().zip(inst.labels()) {
            if p >= k {
                return Err(Error::Shape(format!("instance {i}: predicted label {p} outside 0..{k}")));
            }
            confusion[g][p] += 1;
        }
    }
    Ok(metrics_from_confusion(confusion))
}

pub fn metrics_from_confusion(confusion: Vec<Vec<u64>>) -> Metrics {
    let k = confusion.len();
    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut precision = 0.0;
    let mut recall = 0.0;
    for c in 0..k {
        let predicted: u64 = (0..k).map(|g| confusion[g][c]).sum();
        let actual: u64 = confusion[c].iter().sum();
        precision += ratio(confusion[c][c], predicted);
        recall += ratio(confusion[c][c], actual);
    }
    let classes = k.max(1) as f64;
    Metrics {
        accuracy: ratio(correct, total),
        macro_precision: precision / classes,
        macro_recall: recall / classes,
        confusion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let inst = GraphInstance::new(
            vec![vec![1.0, 0.5], vec![0.0, 2.0]],
            vec![Edge {
                u: 0,
                v: 1,
                features: vec![0.25],
            }],
            vec![0, 1],
            2,
        )
        .unwrap();
        Dataset::new(2, 1, 2, vec![inst]).unwrap()
    }

    fn three_class_gold(labels: Vec<usize>) -> Dataset {
        let n = labels.len();
        let inst = GraphInstance::new(vec![vec![0.0]; n], vec![], labels, 3).unwrap();
        Dataset::new(1, 0, 3, vec![inst]).unwrap()
    }

    #[test]
    fn minimal_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.jsonl");
        save_dataset(&tiny(), &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back.total_nodes(), 2);
        assert_eq!(back.total_edges(), 1);
        assert_eq!(back.label_count(), 2);
        assert_eq!(back, tiny());
    }

    #[test]
    fn negative_edge_feature_is_rejected() {
        let text = "{\"format\":\"cutlearn-dataset\",\"version\":1,\"node_dim\":1,\"edge_dim\":1,\"label_count\":2,\"instances\":1}\n\
                    {\"nodes\":[[0.0],[1.0]],\"edges\":[[0,1,[-0.1]]],\"labels\":[0,1]}\n";
        let err = read_dataset(text.as_bytes()).unwrap_err();
        match err {
            Error::InvalidInstance { instance, message } => {
                assert_eq!(instance, 0);
                assert!(message.contains("edge 0 (0, 1)"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\"format\":\"cutlearn-dataset\",\"version\":1,\"node_dim\":1,\"edge_dim\":1,\"label_count\":2,\"instances\":1}\n\
                    {\"nodes\":[[0.0],[1.0]],\"edges\":[[0,1,[0.1]]],\"labels\":[0,1\n";
        assert!(matches!(read_dataset(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn dangling_and_duplicate_edges_are_rejected() {
        let node = vec![vec![0.0]; 2];
        let bad = GraphInstance::new(node.clone(), vec![Edge { u: 0, v: 5, features: vec![] }], vec![0, 0], 2);
        assert!(bad.is_err());
        let dup = GraphInstance::new(
            node,
            vec![Edge { u: 0, v: 1, features: vec![] }, Edge { u: 1, v: 0, features: vec![] }],
            vec![0, 0],
            2,
        );
        assert!(dup.is_err());
    }

    #[test]
    fn empty_dataset_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        let empty = Dataset::new(3, 2, 4, vec![]).unwrap();
        save_dataset(&empty, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(load_dataset(&path).unwrap(), empty);
    }

    #[test]
    fn generated_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gen.jsonl");
        let cfg = GeneratorConfig {
            instances: 5,
            ..Default::default()
        };
        let data = generate_synthetic(&cfg, 3).unwrap();
        save_dataset(&data, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), data);
    }

    #[test]
    fn unwritable_path() {
        let err = save_dataset(&tiny(), "/nonexistent-dir/x/y.jsonl").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = GeneratorConfig {
            instances: 4,
            ..Default::default()
        };
        assert_eq!(generate_synthetic(&cfg, 7).unwrap(), generate_synthetic(&cfg, 7).unwrap());
        assert_ne!(generate_synthetic(&cfg, 7).unwrap(), generate_synthetic(&cfg, 8).unwrap());
    }

    #[test]
    fn degenerate_configs() {
        let k1 = GeneratorConfig {
            label_count: 1,
            ..Default::default()
        };
        assert!(generate_synthetic(&k1, 0).is_err());
        let empty = GeneratorConfig {
            min_nodes: 0,
            max_nodes: 0,
            ..Default::default()
        };
        assert!(generate_synthetic(&empty, 0).is_err());
    }

    #[test]
    fn noiseless_evidence_is_perfect() {
        let cfg = GeneratorConfig {
            noise: 0.0,
            instances: 5,
            ..Default::default()
        };
        let data = generate_synthetic(&cfg, 1).unwrap();
        for inst in data.instances() {
            for (u, &y) in inst.labels().iter().enumerate() {
                let f = inst.node_features(u);
                assert_eq!(f.len(), cfg.label_count + 1);
                let arg = (0..cfg.label_count).max_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap();
                assert_eq!(arg, y);
            }
        }
    }

    #[test]
    fn planted_table_shape() {
        let cfg = GeneratorConfig::default();
        let t = cfg.transition_table();
        for row in t.chunks(4) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let c = cfg.planted_compatibility();
        assert!(c.iter().all(|&x| x >= 0.0));
        // asymmetric and repulsive relative to the diagonal
        assert!(c[1] > c[4]);
        assert!(c[1] > c[0]);
    }

    #[test]
    fn metrics_identity() {
        let gold = three_class_gold(vec![0, 1, 2, 2]);
        let m = evaluate(&[vec![0, 1, 2, 2]], &gold).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_precision, 1.0);
        assert_eq!(m.macro_recall, 1.0);
        assert_eq!(m.confusion, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
    }

    #[test]
    fn metrics_constant_prediction() {
        let inst = GraphInstance::new(vec![vec![0.0]; 4], vec![], vec![0, 1, 0, 1], 2).unwrap();
        let gold = Dataset::new(1, 0, 2, vec![inst]).unwrap();
        let m = evaluate(&[vec![0; 4]], &gold).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.macro_recall, 0.5);
        assert_eq!(m.macro_precision, 0.25);
    }

    #[test]
    fn metrics_three_class_hand_case() {
        let gold = three_class_gold(vec![0, 1, 2]);
        let m = evaluate(&[vec![0, 1, 1]], &gold).unwrap();
        assert!((m.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.confusion[2][1], 1);
        // precision: class0 1, class1 1/2, class2 0 (never predicted)
        assert!((m.macro_precision - 0.5).abs() < 1e-15);
        assert!((m.macro_recall - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn metrics_shape_mismatch() {
        let gold = three_class_gold(vec![0, 1, 2]);
        assert!(evaluate(&[vec![0, 1]], &gold).is_err());
        assert!(evaluate(&[], &gold).is_err());
    }

    #[test]
    fn folds_cover_everything() {
        let f = fold_assignment(10, 3, 5).unwrap();
        let mut counts = [0; 3];
        for &x in &f {
            counts[x] += 1;
        }
        assert_eq!(counts, [4, 3, 3]);
        assert_eq!(f, fold_assignment(10, 3, 5).unwrap());
        assert!(fold_assignment(2, 3, 0).is_err());
    }
}
