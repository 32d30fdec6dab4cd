//! Intrinsic distance estimation over a proximity graph.
//!
//! A densified cloud is turned into a weighted graph — nodes are points,
//! edges connect nearby points with their ambient distance as weight — and
//! shortest graph paths approximate geodesics on the underlying manifold.
//! The denser the cloud, the better the chord lengths hug the surface.
//!
//! Everything here is deterministic: adjacency lists are sorted by neighbor
//! index, and Dijkstra breaks distance ties by node index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::spatial::KdTree;

/// Multiple of the median nearest-neighbor distance used by
/// [`default_connection_radius`]. Large enough to bridge local density
/// fluctuations of quasi-uniform samples, small enough not to shortcut
/// through the ambient space.
pub const CONNECTION_RADIUS_FACTOR: f64 = 2.2;

/// How nodes get connected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConnectionRule {
    /// Connect every pair within this ambient distance.
    Radius(f64),
    /// Connect each node to its k nearest neighbors, then symmetrize.
    KNearest(usize),
}

/// An undirected proximity graph over a point cloud.
#[derive(Debug, Clone)]
pub struct GeodesicGraph {
    /// adjacency[i] = (neighbor, edge length), sorted by neighbor index.
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Connected-component label per node (labels are dense, 0-based, in
    /// order of first appearance by node index).
    components: Vec<usize>,
    component_count: usize,
    edge_count: usize,
}

impl GeodesicGraph {
    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Neighbors of a node with edge lengths, ascending by index.
    pub fn neighbors(&self, node: usize) -> Result<&[(usize, f64)]> {
        self.adjacency
            .get(node)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange { index: node, len: self.adjacency.len() })
    }

    /// Connected-component label of a node.
    pub fn component(&self, node: usize) -> Result<usize> {
        self.components
            .get(node)
            .copied()
            .ok_or(Error::IndexOutOfRange { index: node, len: self.components.len() })
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Nodes with no edges at all.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        self.adjacency
            .iter()
            .enumerate()
            .filter(|(_, adj)| adj.is_empty())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds the proximity graph for a cloud under a connection rule.
pub fn build_graph(cloud: &PointCloud, rule: ConnectionRule) -> Result<GeodesicGraph> {
    if cloud.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, actual: 0 });
    }
    match rule {
        ConnectionRule::Radius(r) if !r.is_finite() || r <= 0.0 => {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: format!("must be finite and positive, got {r}"),
            });
        }
        ConnectionRule::KNearest(0) => {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "must connect at least one neighbor".into(),
            });
        }
        _ => {}
    }
    let n = cloud.len();
    let tree = KdTree::build(cloud);
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    match rule {
        ConnectionRule::Radius(r) => {
            for i in 0..n {
                // within_radius returns indices ascending, so each list is
                // born sorted; the relation is symmetric by construction.
                for (j, d) in tree.within_radius(cloud.point(i), r) {
                    if j != i {
                        adjacency[i].push((j, d));
                    }
                }
            }
        }
        ConnectionRule::KNearest(k) => {
            for i in 0..n {
                // k+1 nearest including the node itself.
                for (j, d) in tree.k_nearest(cloud.point(i), (k + 1).min(n), None) {
                    if j != i {
                        adjacency[i].push((j, d));
                        adjacency[j].push((i, d));
                    }
                }
            }
            for list in adjacency.iter_mut() {
                list.sort_by(|a, b| a.0.cmp(&b.0));
                list.dedup_by_key(|e| e.0);
            }
        }
    }
    let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;

    // Component labels by breadth-first sweep in node order.
    let mut components = vec![usize::MAX; n];
    let mut component_count = 0;
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if components[start] != usize::MAX {
            continue;
        }
        components[start] = component_count;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adjacency[u] {
                if components[v] == usize::MAX {
                    components[v] = component_count;
                    queue.push_back(v);
                }
            }
        }
        component_count += 1;
    }

    Ok(GeodesicGraph { adjacency, components, component_count, edge_count })
}

/// Connection radius adapted to a cloud's density: 2.2 × the median
/// nearest-neighbor distance (upper median for even counts).
pub fn default_connection_radius(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, actual: cloud.len() });
    }
    let tree = KdTree::build(cloud);
    let mut gaps: Vec<f64> = (0..cloud.len())
        .map(|i| {
            let (_, d) = tree.nearest_other(i).expect("cloud has at least two points");
            d
        })
        .collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(CONNECTION_RADIUS_FACTOR * gaps[gaps.len() / 2])
}

/// A shortest path between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Sum of edge lengths along the path.
    pub distance: f64,
    /// Node indices from source to target inclusive.
    pub path: Vec<usize>,
}

#[derive(Debug, PartialEq)]
struct HeapEntry {
    distance: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want smallest (distance,
        // node) first. Distances are finite by construction.
        other
            .distance
            .partial_cmp(&self.distance)
            .expect("graph distances are never NaN")
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-pair Dijkstra with deterministic tie-breaking ((distance, node)
/// heap order, strict-improvement relaxation) and early exit at the target.
pub fn dijkstra(graph: &GeodesicGraph, source: usize, target: usize) -> Result<PathResult> {
    let n = graph.node_count();
    for index in [source, target] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
    }
    if graph.component(source)? != graph.component(target)? {
        return Err(Error::Disconnected);
    }
    if source == target {
        return Ok(PathResult { distance: 0.0, path: vec![source] });
    }
    let mut best = vec![f64::INFINITY; n];
    let mut predecessor = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    best[source] = 0.0;
    heap.push(HeapEntry { distance: 0.0, node: source });
    while let Some(HeapEntry { distance, node }) = heap.pop() {
        if settled[node] {
            continue;
        }
        settled[node] = true;
        if node == target {
            break;
        }
        for &(next, weight) in graph.neighbors(node)? {
            let candidate = distance + weight;
            if candidate < best[next] {
                best[next] = candidate;
                predecessor[next] = node;
                heap.push(HeapEntry { distance: candidate, node: next });
            }
        }
    }
    if !settled[target] {
        // Components matched, so this is unreachable; guard anyway.
        return Err(Error::Disconnected);
    }
    let mut path = vec![target];
    let mut cursor = target;
    while cursor != source {
        cursor = predecessor[cursor];
        path.push(cursor);
    }
    path.reverse();
    Ok(PathResult { distance: best[target], path })
}

/// One-call geodesic estimate between two nodes of a cloud: builds the
/// proximity graph (defaulting to the density-adapted radius rule) and runs
/// Dijkstra.
pub fn geodesic_estimate(
    cloud: &PointCloud,
    source: usize,
    target: usize,
    rule: Option<ConnectionRule>,
) -> Result<PathResult> {
    let rule = match rule {
        Some(rule) => rule,
        None => ConnectionRule::Radius(default_connection_radius(cloud)?),
    };
    let graph = build_graph(cloud, rule)?;
    dijkstra(&graph, source, target)
}

/// Root-mean-square error of `estimates` against `truths`, as a percentage
/// of the mean truth.
pub fn rmse_percent(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), actual: estimates.len() });
    }
    if truths.is_empty() {
        return Err(Error::InvalidParameter {
            name: "truths",
            reason: "need at least one pair".into(),
        });
    }
    let mean_truth = truths.iter().sum::<f64>() / truths.len() as f64;
    if !mean_truth.is_finite() || mean_truth <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "truths",
            reason: format!("mean must be positive and finite, got {mean_truth}"),
        });
    }
    let mse = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| (e - t) * (e - t))
        .sum::<f64>()
        / truths.len() as f64;
    Ok(100.0 * mse.sqrt() / mean_truth)
}
