//! Random geometric graph model of the sensor field.
//!
//! `n` sensors are dropped uniformly on the square `[0, L]²`; two distinct
//! sensors are linked iff their Euclidean distance is at most `r`. Distances
//! do not wrap around the square's edges.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, NodeId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n: usize,
    /// Side length `L` of the deployment square.
    pub side: f64,
    /// Connectivity radius `r`.
    pub radius: f64,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(n: usize, side: f64, radius: f64, seed: u64) -> Self {
        Self {
            n,
            side,
            radius,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("node count must be at least 1".into()));
        }
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(Error::Config(format!(
                "side length must be positive, got {}",
                self.side
            )));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Config(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Node density `λ = n / L²`.
    pub fn density(&self) -> f64 {
        self.n as f64 / (self.side * self.side)
    }
}

pub type Point = [f64; 2];

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Immutable sensor graph. Adjacency lists are sorted and symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    side: f64,
    radius: f64,
    seed: u64,
    /// Empty for abstract topologies built with [`NetworkGraph::from_edges`].
    positions: Vec<Point>,
    adjacency: Vec<Vec<NodeId>>,
}

/// Draws `config.n` uniform positions and links them by the distance rule.
pub fn generate_network(config: &NetworkConfig) -> Result<NetworkGraph> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);
    let positions: Vec<Point> = (0..config.n)
        .map(|_| {
            [
                rng.gen::<f64>() * config.side,
                rng.gen::<f64>() * config.side,
            ]
        })
        .collect();
    let mut graph = NetworkGraph::from_positions(positions, config.side, config.radius)?;
    graph.seed = config.seed;
    Ok(graph)
}

impl NetworkGraph {
    /// Builds the geometric graph for fixed positions.
    pub fn from_positions(positions: Vec<Point>, side: f64, radius: f64) -> Result<Self> {
        NetworkConfig::new(positions.len(), side, radius, 0).validate()?;
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                let d = distance(positions[u], positions[v]);
                // Coincident points are not linked: the rule is 0 < d(u,v) ≤ r.
                if d > 0.0 && d <= radius {
                    adjacency[u].push(v);
                    adjacency[v].push(u);
                }
            }
        }
        Ok(Self {
            side,
            radius,
            seed: 0,
            positions,
            adjacency,
        })
    }

    /// Abstract topology without geometry, for hand-built test graphs.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::Domain(format!("invalid edge ({u}, {v}) for n={n}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            side: 1.0,
            radius: 1.0,
            seed: 0,
            positions: Vec::new(),
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn is_neighbor(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    /// Mean degree `μ = (1/|V|) Σ d(u)`.
    pub fn mean_degree(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        self.adjacency.iter().map(Vec::len).sum::<usize>() as f64 / self.n() as f64
    }

    /// Node density `λ = n / L²`.
    pub fn node_density(&self) -> f64 {
        self.n() as f64 / (self.side * self.side)
    }

    pub fn isolated_nodes(&self) -> Vec<NodeId> {
        (0..self.n()).filter(|&u| self.degree(u) == 0).collect()
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            n: self.n(),
            side: self.side,
            radius: self.radius,
            seed: self.seed,
            positions: self.positions.clone(),
            edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }

    /// Rebuilds a graph from a fixture. Geometric documents are re-derived from
    /// their positions and must agree with the stored edge list.
    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        let edges: Vec<(NodeId, NodeId)> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
        if doc.positions.is_empty() {
            let mut g = Self::from_edges(doc.n, &edges)?;
            g.side = doc.side;
            g.radius = doc.radius;
            g.seed = doc.seed;
            return Ok(g);
        }
        if doc.positions.len() != doc.n {
            return Err(Error::Config(format!(
                "graph document has {} positions for n={}",
                doc.positions.len(),
                doc.n
            )));
        }
        let mut g = Self::from_positions(doc.positions.clone(), doc.side, doc.radius)?;
        g.seed = doc.seed;
        let mut sorted = edges;
        for e in &mut sorted {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        sorted.sort_unstable();
        if sorted != g.edges() {
            return Err(Error::Integrity(
                "graph document edges disagree with the distance rule".into(),
            ));
        }
        Ok(g)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }
}

/// JSON fixture form `{n, L, r, seed, positions, edges}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub n: usize,
    #[serde(rename = "L")]
    pub side: f64,
    #[serde(rename = "r")]
    pub radius: f64,
    pub seed: u64,
    pub positions: Vec<Point>,
    pub edges: Vec<[NodeId; 2]>,
}

/// Generates graphs under derived seeds until one has no isolated node.
pub fn generate_connected_enough(
    n: usize,
    side: f64,
    radius: f64,
    base_seed: u64,
    max_attempts: usize,
) -> Result<NetworkGraph> {
    for attempt in 0..max_attempts {
        let cfg = NetworkConfig::new(n, side, radius, seed::derive(base_seed, seed::stream::GRAPH, attempt as u64));
        let g = generate_network(&cfg)?;
        if g.isolated_nodes().is_empty() {
            return Ok(g);
        }
    }
    Err(Error::GraphRejection {
        n,
        side,
        radius,
        attempts: max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> NetworkGraph {
        NetworkGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn two_close_nodes_share_an_edge() {
        let g = NetworkGraph::from_positions(vec![[0.0, 0.0], [0.0, 0.5]], 1.0, 1.0).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
        assert_eq!(g.degrees(), vec![1, 1]);
    }

    #[test]
    fn single_node_has_no_edges() {
        let g = generate_network(&NetworkConfig::new(1, 3.0, 0.7, 11)).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.mean_degree(), 0.0);
        assert_eq!(g.isolated_nodes(), vec![0]);
    }

    #[test]
    fn coincident_points_are_not_linked() {
        let g = NetworkGraph::from_positions(vec![[0.3, 0.3], [0.3, 0.3]], 1.0, 1.0).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for cfg in [
            NetworkConfig::new(0, 1.0, 1.0, 0),
            NetworkConfig::new(5, 0.0, 1.0, 0),
            NetworkConfig::new(5, -1.0, 1.0, 0),
            NetworkConfig::new(5, 1.0, 0.0, 0),
            NetworkConfig::new(5, 1.0, f64::NAN, 0),
        ] {
            assert!(matches!(generate_network(&cfg), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn mean_degree_small_cases() {
        assert_eq!(triangle().mean_degree(), 2.0);
        let path = NetworkGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.mean_degree(), 4.0 / 3.0);
        assert_eq!(NetworkGraph::from_edges(1, &[]).unwrap().mean_degree(), 0.0);
    }

    #[test]
    fn density_is_nodes_per_area() {
        assert_eq!(NetworkConfig::new(50, 2.0, 1.0, 0).density(), 12.5);
        assert_eq!(NetworkConfig::new(4, 2.0, 1.0, 0).density(), 1.0);
        assert_eq!(NetworkConfig::new(500, 5.0, 1.0, 0).density(), 20.0);
        let g = generate_network(&NetworkConfig::new(50, 2.0, 1.0, 3)).unwrap();
        assert_eq!(g.node_density(), 12.5);
    }

    #[test]
    fn isolated_node_listing() {
        assert!(triangle().isolated_nodes().is_empty());
        let far = NetworkGraph::from_positions(vec![[0.0, 0.0], [2.0, 0.0]], 3.0, 1.0).unwrap();
        assert_eq!(far.isolated_nodes(), vec![0, 1]);
    }

    #[test]
    fn from_edges_rejects_self_loops() {
        assert!(NetworkGraph::from_edges(2, &[(1, 1)]).is_err());
        assert!(NetworkGraph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn rejection_exhaustion_reports_parameters() {
        // Radius far below spacing: every draw has isolated nodes.
        let err = generate_connected_enough(30, 100.0, 1e-6, 1, 5).unwrap_err();
        assert!(matches!(err, Error::GraphRejection { n: 30, attempts: 5, .. }));
    }
}
