use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{NavGraph, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub nodes: Vec<NodeId>,
    pub cost: f64,
}

/// Single-source Dijkstra result, by node index.
///
/// Among equal-cost predecessors the lower node id is kept, so the tree (and
/// every path read from it) is deterministic.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub source: usize,
    pub dist: Vec<f64>,
    pub parent: Vec<Option<usize>>,
}

#[derive(Copy, Clone, PartialEq)]
struct Frontier {
    dist: f64,
    index: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Reversed: BinaryHeap is a max-heap and we want the smallest distance,
    // then the smallest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl ShortestPathTree {
    pub fn from_source(g: &NavGraph, source: usize) -> Self {
        let n = g.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Frontier { dist: 0.0, index: source });
        while let Some(Frontier { dist: d, index: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, cost) in g.neighbors(u) {
                if v == source {
                    continue;
                }
                let nd = d + cost;
                if nd < dist[v] {
                    dist[v] = nd;
                    parent[v] = Some(u);
                    heap.push(Frontier { dist: nd, index: v });
                } else if nd == dist[v] && parent[v].is_some_and(|p| u < p) {
                    parent[v] = Some(u);
                }
            }
        }
        Self { source, dist, parent }
    }

    /// Node indices from the source to `target`, inclusive.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Minimum-cost path from `s` to `t`, both included.
pub fn shortest_path(g: &NavGraph, s: NodeId, t: NodeId) -> Result<Route> {
    let (si, ti) = (g.index_of(s)?, g.index_of(t)?);
    let tree = ShortestPathTree::from_source(g, si);
    let path = tree.path_to(ti).ok_or(Error::NoPath { from: s, to: t })?;
    Ok(Route { nodes: path.into_iter().map(|i| g.id_at(i)).collect(), cost: tree.dist[ti] })
}
