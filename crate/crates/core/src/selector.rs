//! Diverse sub-suite sampling: instances are nodes, an edge joins two
//! instances whose feature vectors have cosine similarity at or above a
//! threshold, and a randomized maximal independent set picks the sub-suite.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::InstanceRecord;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub const DEFAULT_THRESHOLD: f64 = 0.9;

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "vectors have lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (sq_norm(u), sq_norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(cosine_from_parts(dot, nu, nv))
}

// A single square root keeps parallel vectors at exactly 1 in common cases.
fn cosine_from_parts(dot: f64, sq_u: f64, sq_v: f64) -> f64 {
    let denom = (sq_u * sq_v).sqrt();
    let denom = if denom.is_finite() && denom > 0.0 {
        denom
    } else {
        sq_u.sqrt() * sq_v.sqrt()
    };
    (dot / denom).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGraph {
    pub node_ids: Vec<String>,
    /// Sorted neighbor lists.
    pub adjacency: Vec<Vec<usize>>,
    pub threshold: f64,
}

impl SimilarityGraph {
    /// Graph from an explicit undirected edge list. Self-loops and repeated
    /// edges are ignored.
    pub fn from_edges(node_ids: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = node_ids.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Shape(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if u != v {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
            nb.dedup();
        }
        Ok(Self {
            node_ids,
            adjacency,
            threshold: f64::NAN,
        })
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }
}

/// Adjacency lists over the rows of `features`. Zero rows are rejected.
pub fn similarity_adjacency(features: &Matrix, threshold: f64) -> Result<Vec<Vec<usize>>> {
    let k = features.nrows();
    let norms: Vec<f64> = features.rows().map(sq_norm).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        return Err(Error::Domain(format!(
            "row {i} has a zero or non-finite feature vector"
        )));
    }
    let mut adjacency = vec![Vec::new(); k];
    for i in 0..k {
        let ri = features.row(i);
        for j in (i + 1)..k {
            let dot: f64 = ri.iter().zip(features.row(j)).map(|(a, b)| a * b).sum();
            let cos = cosine_from_parts(dot, norms[i], norms[j]);
            if cos >= threshold {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    for nb in &mut adjacency {
        nb.sort_unstable();
    }
    Ok(adjacency)
}

/// Node key used for instances: `suite_id/instance_id`.
pub fn instance_key(r: &InstanceRecord) -> String {
    format!("{}/{}", r.suite_id, r.instance_id)
}

pub fn build_similarity_graph(
    instances: &[InstanceRecord],
    threshold: f64,
) -> Result<SimilarityGraph> {
    if instances.is_empty() {
        return Err(Error::InsufficientData("similarity graph needs at least one instance".into()));
    }
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "similarity threshold must lie in [-1, 1], got {threshold}"
        )));
    }
    let rows: Vec<&[f64]> = instances.iter().map(|r| r.features.as_slice()).collect();
    let features = Matrix::from_rows(&rows)?;
    let adjacency = similarity_adjacency(&features, threshold).map_err(|e| match e {
        Error::Domain(_) => {
            let bad = instances
                .iter()
                .find(|r| {
                    let n = sq_norm(&r.features);
                    n == 0.0 || !n.is_finite()
                })
                .map(instance_key)
                .unwrap_or_default();
            Error::Domain(format!("instance `{bad}` has a zero or non-finite feature vector"))
        }
        other => other,
    })?;
    Ok(SimilarityGraph {
        node_ids: instances.iter().map(instance_key).collect(),
        adjacency,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub suite_label: String,
    pub seed: u64,
    /// Node indices in ascending order.
    pub selected_indices: Vec<usize>,
    pub selected: Vec<String>,
}

/// Randomized greedy maximal independent set: visit nodes in a seeded
/// uniform random order and keep each node none of whose neighbors is kept.
pub fn mis_indices(adjacency: &[Vec<usize>], seed: u64) -> Vec<usize> {
    let n = adjacency.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut chosen = vec![false; n];
    let mut blocked = vec![false; n];
    for v in order {
        if blocked[v] {
            continue;
        }
        chosen[v] = true;
        blocked[v] = true;
        for &u in &adjacency[v] {
            blocked[u] = true;
        }
    }
    (0..n).filter(|&v| chosen[v]).collect()
}

pub fn maximal_independent_set(graph: &SimilarityGraph, seed: u64) -> SelectionResult {
    let idx = mis_indices(&graph.adjacency, seed);
    SelectionResult {
        suite_label: String::new(),
        seed,
        selected: idx.iter().map(|&i| graph.node_ids[i].clone()).collect(),
        selected_indices: idx,
    }
}

/// No two selected nodes are adjacent.
pub fn is_independent(adjacency: &[Vec<usize>], selected: &[usize]) -> bool {
    let mut mark = vec![false; adjacency.len()];
    for &v in selected {
        mark[v] = true;
    }
    selected
        .iter()
        .all(|&v| adjacency[v].iter().all(|&u| !mark[u]))
}

/// Every unselected node has a selected neighbor.
pub fn is_maximal(adjacency: &[Vec<usize>], selected: &[usize]) -> bool {
    let mut mark = vec![false; adjacency.len()];
    for &v in selected {
        mark[v] = true;
    }
    (0..adjacency.len()).all(|v| mark[v] || adjacency[v].iter().any(|&u| mark[u]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub suite_a: String,
    pub suite_b: String,
    pub shared: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub pairs: Vec<OverlapEntry>,
}

pub fn suite_label(i: usize) -> String {
    format!("BS{}", i + 1)
}

/// Draws `count` sub-suites `BS1..BScount` from one graph, each from its own
/// seed stream, and reports pairwise overlaps.
pub fn sample_from_graph(
    graph: &SimilarityGraph,
    count: usize,
    master_seed: u64,
) -> Result<(Vec<SelectionResult>, OverlapReport)> {
    if count < 1 {
        return Err(Error::Config("selection count must be at least 1".into()));
    }
    let results: Vec<SelectionResult> = (0..count)
        .map(|i| {
            let mut r = maximal_independent_set(graph, seed::derive(master_seed, i as u64));
            r.suite_label = suite_label(i);
            r
        })
        .collect();
    let mut report = OverlapReport::default();
    for i in 0..results.len() {
        for j in (i + 1)..results.len() {
            let b = &results[j].selected_indices;
            let shared = results[i]
                .selected_indices
                .iter()
                .filter(|v| b.binary_search(v).is_ok())
                .count();
            report.pairs.push(OverlapEntry {
                suite_a: results[i].suite_label.clone(),
                suite_b: results[j].suite_label.clone(),
                shared,
            });
        }
    }
    Ok((results, report))
}

pub fn sample_suites(
    instances: &[InstanceRecord],
    threshold: f64,
    count: usize,
    master_seed: u64,
) -> Result<(Vec<SelectionResult>, OverlapReport)> {
    let graph = build_similarity_graph(instances, threshold)?;
    sample_from_graph(&graph, count, master_seed)
}
