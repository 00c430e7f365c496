//! Topological navigation graph, its persistence format, and the
//! node–landmark similarity primitives shared by the planner and the attack.

mod path;
pub mod store;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use path::{shortest_path, Route, ShortestPathTree};

use crate::embedding::{cosine_similarity, encode_text, EmbeddingVec, Encoder, TextGrounding};
use crate::error::{Error, Result};
use crate::tensor::{ImageShape, ImageTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of a node's two camera views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Front,
    Back,
}

impl Slot {
    pub const ALL: [Slot; 2] = [Slot::Front, Slot::Back];

    pub const fn index(self) -> usize {
        match self {
            Slot::Front => 0,
            Slot::Back => 1,
        }
    }

    pub const fn other(self) -> Slot {
        match self {
            Slot::Front => Slot::Back,
            Slot::Back => Slot::Front,
        }
    }

    pub const fn suffix(self) -> &'static str {
        match self {
            Slot::Front => "f",
            Slot::Back => "b",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavNode {
    pub id: NodeId,
    /// Planar position in meters.
    pub position: [f64; 2],
    /// Front and back views.
    pub images: [ImageTensor; 2],
}

impl NavNode {
    pub fn image(&self, slot: Slot) -> &ImageTensor {
        &self.images[slot.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub cost: f64,
}

/// Undirected graph with strictly positive edge costs.
///
/// Nodes are kept sorted by id, so a node's index order is its id order and
/// every "lower id wins" tie-break can compare indices.
#[derive(Debug, Clone)]
pub struct NavGraph {
    nodes: Vec<NavNode>,
    edges: Vec<Edge>,
    index: HashMap<NodeId, usize>,
    /// Per node index: (neighbor index, cost), sorted by neighbor index.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for NavGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl NavGraph {
    /// Validates ids, endpoints, costs, image shapes and connectivity.
    pub fn new(nodes: Vec<NavNode>, edges: Vec<Edge>) -> Result<Self> {
        let g = Self::build(nodes, edges)?;
        if !g.is_connected() {
            return Err(Error::InvalidInput("graph is not connected".into()));
        }
        Ok(g)
    }

    fn build(mut nodes: Vec<NavNode>, edges: Vec<Edge>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidInput("graph has no nodes".into()));
        }
        nodes.sort_by_key(|n| n.id);
        let shape = nodes[0].images[0].shape();
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate node id {}", n.id)));
            }
            if n.images.iter().any(|img| img.shape() != shape) {
                return Err(Error::InvalidInput(format!(
                    "node {} has images of a different shape",
                    n.id
                )));
            }
            if !n.position.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidInput(format!("node {} has a non-finite position", n.id)));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen = BTreeSet::new();
        for e in &edges {
            let (Some(&a), Some(&b)) = (index.get(&e.u), index.get(&e.v)) else {
                let missing = if index.contains_key(&e.u) { e.v } else { e.u };
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) references absent node {missing}",
                    e.u, e.v
                )));
            };
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on node {}", e.u)));
            }
            if !(e.cost > 0.0 && e.cost.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) has non-positive cost {}",
                    e.u, e.v, e.cost
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidInput(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
            adjacency[a].push((b, e.cost));
            adjacency[b].push((a, e.cost));
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(j, _)| j);
        }
        Ok(Self { nodes, edges, index, adjacency })
    }

    #[cfg(test)]
    pub(crate) fn new_allow_disconnected(nodes: Vec<NavNode>, edges: Vec<Edge>) -> Result<Self> {
        Self::build(nodes, edges)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.nodes.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NavNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn image_shape(&self) -> ImageShape {
        self.nodes[0].images[0].shape()
    }

    pub fn index_of(&self, id: NodeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Result<&NavNode> {
        Ok(&self.nodes[self.index_of(id)?])
    }

    pub fn id_at(&self, index: usize) -> NodeId {
        self.nodes[index].id
    }

    /// Neighbors of the node at `index` as (index, cost), ascending by index.
    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    pub fn edge_cost(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let (ia, ib) = (self.index.get(&a)?, self.index.get(&b)?);
        self.adjacency[*ia].iter().find(|(j, _)| j == ib).map(|&(_, c)| c)
    }

    /// A new graph with some images replaced. The receiver is not modified.
    pub fn with_images(&self, replacements: &[(NodeId, Slot, ImageTensor)]) -> Result<NavGraph> {
        let mut g = self.clone();
        for (id, slot, img) in replacements {
            let i = g.index_of(*id)?;
            if img.shape() != g.image_shape() {
                return Err(Error::DimensionMismatch {
                    expected: g.image_shape().len(),
                    actual: img.len(),
                });
            }
            g.nodes[i].images[slot.index()] = img.clone();
        }
        Ok(g)
    }

    /// (node, slot) pairs whose pixels differ bitwise between two graphs with
    /// the same node set.
    pub fn differing_images(&self, other: &NavGraph) -> Result<Vec<(NodeId, Slot)>> {
        self.check_same_nodes(other)?;
        let mut out = Vec::new();
        for (a, b) in self.nodes.iter().zip(&other.nodes) {
            for slot in Slot::ALL {
                if !a.image(slot).bit_eq(b.image(slot)) {
                    out.push((a.id, slot));
                }
            }
        }
        Ok(out)
    }

    pub fn check_same_nodes(&self, other: &NavGraph) -> Result<()> {
        let same = self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| a.id == b.id)
            && self.image_shape() == other.image_shape();
        if same {
            Ok(())
        } else {
            Err(Error::InvalidInput("graphs do not share the same node ids and image shape".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub text: String,
    pub embedding: EmbeddingVec,
}

/// Ordered landmark descriptions with their text embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSeq(Vec<Landmark>);

impl LandmarkSeq {
    pub fn new(entries: Vec<Landmark>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidInput("landmark list is empty".into()));
        };
        let dim = first.embedding.dim();
        if let Some(bad) = entries.iter().find(|l| l.embedding.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.embedding.dim() });
        }
        Ok(Self(entries))
    }

    pub fn from_texts<E, G, S>(enc: &E, grounding: &G, texts: &[S]) -> Result<Self>
    where
        E: Encoder + ?Sized,
        G: TextGrounding + ?Sized,
        S: AsRef<str>,
    {
        let entries = texts
            .iter()
            .map(|t| {
                Ok(Landmark {
                    text: t.as_ref().to_owned(),
                    embedding: encode_text(enc, grounding, t.as_ref())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Landmark] {
        &self.0
    }

    pub fn get(&self, i: usize) -> &Landmark {
        &self.0[i]
    }

    pub fn texts(&self) -> Vec<&str> {
        self.0.iter().map(|l| l.text.as_str()).collect()
    }
}

/// Node × landmark similarities, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged similarity matrix".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite similarity".into()));
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

/// Max over the node's two views of `cos(f(image), l)`.
pub fn node_landmark_similarity<E: Encoder + ?Sized>(
    enc: &E,
    node: &NavNode,
    l: &EmbeddingVec,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for img in &node.images {
        best = best.max(cosine_similarity(&enc.encode_image(img)?, l)?);
    }
    Ok(best)
}

pub fn similarity_matrix<E: Encoder + ?Sized>(
    enc: &E,
    nodes: &[&NavNode],
    landmarks: &LandmarkSeq,
) -> Result<SimilarityMatrix> {
    let rows = nodes
        .par_iter()
        .map(|node| {
            let embs = [enc.encode_image(&node.images[0])?, enc.encode_image(&node.images[1])?];
            landmarks.entries().iter().map(|l| max_slot(&embs, &l.embedding).map(|r| r.0)).collect()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    SimilarityMatrix::from_rows(rows)
}

/// Embeddings of every image in a graph, indexed like the graph's nodes.
///
/// Planner and attack query similarities many times per graph; encoding each
/// image once keeps that cheap.
#[derive(Debug, Clone)]
pub struct GraphEmbeddings {
    per_node: Vec<[EmbeddingVec; 2]>,
}

impl GraphEmbeddings {
    pub fn compute<E: Encoder + ?Sized>(enc: &E, g: &NavGraph) -> Result<Self> {
        let per_node = g
            .nodes()
            .par_iter()
            .map(|n| Ok([enc.encode_image(&n.images[0])?, enc.encode_image(&n.images[1])?]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_node })
    }

    pub fn get(&self, index: usize, slot: Slot) -> &EmbeddingVec {
        &self.per_node[index][slot.index()]
    }

    pub fn set(&mut self, index: usize, slot: Slot, emb: EmbeddingVec) {
        self.per_node[index][slot.index()] = emb;
    }

    pub fn len(&self) -> usize {
        self.per_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_node.is_empty()
    }

    /// Node similarity and the view realizing it (front wins ties).
    pub fn node_similarity(&self, index: usize, l: &EmbeddingVec) -> Result<(f64, Slot)> {
        max_slot(&self.per_node[index], l)
    }

    pub fn slot_similarity(&self, index: usize, slot: Slot, l: &EmbeddingVec) -> Result<f64> {
        cosine_similarity(self.get(index, slot), l)
    }

    /// Similarity of every node to `l`.
    pub fn similarities(&self, l: &EmbeddingVec) -> Result<Vec<f64>> {
        (0..self.per_node.len()).map(|i| self.node_similarity(i, l).map(|r| r.0)).collect()
    }

    /// Median L2 distance between the embeddings of distinct images.
    pub fn typical_distance(&self) -> Result<f64> {
        let all: Vec<&EmbeddingVec> = self.per_node.iter().flatten().collect();
        let mut d = Vec::with_capacity(all.len() * all.len().saturating_sub(1) / 2);
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                d.push(all[i].distance(all[j])?);
            }
        }
        if d.is_empty() {
            return Err(Error::InvalidInput("need at least two images".into()));
        }
        d.sort_by(f64::total_cmp);
        let mid = d.len() / 2;
        Ok(if d.len() % 2 == 1 { d[mid] } else { (d[mid - 1] + d[mid]) / 2.0 })
    }

    pub fn similarity_matrix(
        &self,
        indices: &[usize],
        landmarks: &LandmarkSeq,
    ) -> Result<SimilarityMatrix> {
        let rows = indices
            .iter()
            .map(|&i| {
                landmarks
                    .entries()
                    .iter()
                    .map(|l| self.node_similarity(i, &l.embedding).map(|r| r.0))
                    .collect()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        SimilarityMatrix::from_rows(rows)
    }
}

fn max_slot(embs: &[EmbeddingVec; 2], l: &EmbeddingVec) -> Result<(f64, Slot)> {
    let front = cosine_similarity(&embs[0], l)?;
    let back = cosine_similarity(&embs[1], l)?;
    Ok(if back > front { (back, Slot::Back) } else { (front, Slot::Front) })
}
