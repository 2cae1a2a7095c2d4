//! Counter inference without knowledge of `n`.
//!
//! A source `u` sizes its hop budget from its 2-hop neighbourhood only:
//! for each neighbour `v` it counts `b_v`, the neighbours of `v` outside
//! `N(u) ∪ {u}`, and sets
//!
//! ```text
//! c(u) = max(1, ⌊c_u · Σ b_v / d(u)⌋),    c_u = C · μ_local / d(u)
//! ```
//!
//! where `μ_local` is the mean degree over `N(u) ∪ {u}`. A neighbour with
//! exactly one external neighbour starts a chain walk: the walk follows the
//! chain until it reaches a node with zero or several unvisited neighbours,
//! and `b_v` becomes the summed degree of those neighbours.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::coding::Payload;
use crate::dsa1::{run_with_counters, DisseminationReport, FloodOptions, StorageParams};
use crate::netgraph::NetworkGraph;
use crate::{Error, NodeId, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub node_id: NodeId,
    /// `(v, b_v)` for every `v ∈ N(u)`, after chain substitution.
    pub external_degrees: Vec<(NodeId, usize)>,
    pub c_u: f64,
    pub counter: u32,
}

impl InferenceResult {
    pub fn sum_b(&self) -> usize {
        self.external_degrees.iter().map(|&(_, b)| b).sum()
    }
}

/// `b_v = |N(v) \ (N(u) ∪ {u})|`.
pub fn external_degree(graph: &NetworkGraph, u: NodeId, v: NodeId) -> Result<usize> {
    if !graph.is_neighbor(u, v) {
        return Err(Error::Domain(format!("{v} is not a neighbour of {u}")));
    }
    Ok(graph
        .neighbors(v)
        .iter()
        .filter(|&&w| w != u && !graph.is_neighbor(u, w))
        .count())
}

/// `max(1, ⌊c_u · Σb / d⌋)`.
pub fn counter_from_external(c_u: f64, degree: usize, external: &[usize]) -> Result<u32> {
    if degree == 0 {
        return Err(Error::Domain("counter undefined for an isolated node".into()));
    }
    let sum: usize = external.iter().sum();
    let raw = c_u * sum as f64 / degree as f64;
    // Absorb rounding noise so exact ratios such as 9/3 floor to 3.
    let floored = (raw + 1e-9).floor();
    Ok(floored.clamp(1.0, u32::MAX as f64) as u32)
}

/// Walks the chain that starts at `start` (the single external neighbour of
/// some `v ∈ N(u)`). Capped at `n` steps; an exhausted walk yields 0.
fn chain_walk(graph: &NetworkGraph, visited: &mut BTreeSet<NodeId>, start: NodeId) -> usize {
    let mut cur = start;
    visited.insert(cur);
    for _ in 0..graph.n() {
        let next: Vec<NodeId> = graph
            .neighbors(cur)
            .iter()
            .copied()
            .filter(|w| !visited.contains(w))
            .collect();
        if next.len() == 1 {
            cur = next[0];
            visited.insert(cur);
            continue;
        }
        return next.iter().map(|&w| graph.degree(w)).sum();
    }
    0
}

/// Inference phase at `u` with system parameter `c_u`.
pub fn infer_counter(graph: &NetworkGraph, u: NodeId, c_u: f64) -> Result<InferenceResult> {
    let d = graph.degree(u);
    if d == 0 {
        return Err(Error::Domain(format!("node {u} is isolated")));
    }
    let mut external = Vec::with_capacity(d);
    for &v in graph.neighbors(u) {
        let mut b = external_degree(graph, u, v)?;
        if b == 1 {
            let mut visited: BTreeSet<NodeId> = graph.neighbors(u).iter().copied().collect();
            visited.insert(u);
            let start = graph
                .neighbors(v)
                .iter()
                .copied()
                .find(|w| !visited.contains(w))
                .expect("b_v = 1 implies one external neighbour");
            b = chain_walk(graph, &mut visited, start);
        }
        external.push((v, b));
    }
    let bs: Vec<usize> = external.iter().map(|&(_, b)| b).collect();
    Ok(InferenceResult {
        node_id: u,
        counter: counter_from_external(c_u, d, &bs)?,
        external_degrees: external,
        c_u,
    })
}

/// `c_u = C · μ_local / d(u)` with `μ_local` the mean degree of `N(u) ∪ {u}`.
pub fn choose_c_u(graph: &NetworkGraph, u: NodeId, scale: f64) -> Result<f64> {
    let d = graph.degree(u);
    if d == 0 {
        return Err(Error::Domain(format!("node {u} is isolated")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("c-scale must be positive, got {scale}")));
    }
    let local_sum: usize = d + graph.neighbors(u).iter().map(|&v| graph.degree(v)).sum::<usize>();
    let mu_local = local_sum as f64 / (d + 1) as f64;
    Ok(scale * mu_local / d as f64)
}

pub fn infer_all(graph: &NetworkGraph, scale: f64) -> Result<Vec<InferenceResult>> {
    (0..graph.n())
        .map(|u| infer_counter(graph, u, choose_c_u(graph, u, scale)?))
        .collect()
}

/// Inference phase at every node, then the shared flooding engine.
pub fn run_dsa2<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    truth: &[Payload],
    storage: &StorageParams,
    scale: f64,
    options: FloodOptions,
    rng: &mut R,
) -> Result<(DisseminationReport, Vec<InferenceResult>)> {
    let inference = infer_all(graph, scale)?;
    let counters = inference.iter().map(|r| r.counter).collect();
    let report = run_with_counters(graph, truth, counters, storage, options, rng)?;
    Ok((report, inference))
}

/// CSV rows `node_id,degree,sum_b_v,c_u,counter`.
pub fn inference_csv(graph: &NetworkGraph, results: &[InferenceResult]) -> String {
    let mut out = String::from("node_id,degree,sum_b_v,c_u,counter\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.node_id,
            graph.degree(r.node_id),
            r.sum_b(),
            r.c_u,
            r.counter
        );
    }
    out
}
