//! Landmark-conditioned route planner over the navigation graph.
//!
//! `Q(0, v) = -α·dist(start, v)` and, for each landmark `i`,
//! `Q(i, v) = max(Q(i-1, v) + P(v | l_i), max_w Q(i, w) - α·D(v, w))`.
//! The neighbor term is resolved per layer by a Dijkstra-style
//! max-propagation, which reaches the fixed point in one sweep because every
//! transition can only lower a score.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingVec, Encoder};
use crate::error::{Error, Result};
use crate::navgraph::{GraphEmbeddings, LandmarkSeq, NavGraph, NodeId};

pub const DEFAULT_TEMPERATURE: f64 = 0.07;
pub const DEFAULT_ALPHA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    /// Weight of travel cost against landmark probability.
    pub alpha: f64,
    pub start: NodeId,
    /// Softmax temperature mapping similarities to probabilities.
    pub temperature: f64,
}

impl PlanConfig {
    pub fn new(start: NodeId) -> Self {
        Self { alpha: DEFAULT_ALPHA, start, temperature: DEFAULT_TEMPERATURE }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidInput(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub start: NodeId,
    /// Visited nodes from start to destination; no consecutive repeats.
    pub waypoints: Vec<NodeId>,
    /// Node credited with each landmark, in landmark order.
    pub assignments: Vec<NodeId>,
    pub destination: NodeId,
    pub score: f64,
    /// `q_table[i][k]` = `Q(i, node at index k)`, for `i = 0..=n`.
    pub q_table: Vec<Vec<f64>>,
    /// `probabilities[i][k]` = `P(node k | l_{i+1})`.
    pub probabilities: Vec<Vec<f64>>,
}

/// `softmax_v(sim(v, l) / temperature)` over all nodes, in node index order.
pub fn landmark_probability<E: Encoder + ?Sized>(
    enc: &E,
    g: &NavGraph,
    l: &EmbeddingVec,
    temperature: f64,
) -> Result<Vec<f64>> {
    let embs = GraphEmbeddings::compute(enc, g)?;
    landmark_probability_from(&embs, l, temperature)
}

pub fn landmark_probability_from(
    embs: &GraphEmbeddings,
    l: &EmbeddingVec,
    temperature: f64,
) -> Result<Vec<f64>> {
    Ok(softmax(&embs.similarities(l)?, temperature))
}

pub fn softmax(values: &[f64], temperature: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn plan_route<E: Encoder + ?Sized>(
    enc: &E,
    g: &NavGraph,
    landmarks: &LandmarkSeq,
    cfg: &PlanConfig,
) -> Result<PlanResult> {
    let embs = GraphEmbeddings::compute(enc, g)?;
    plan_route_with_embeddings(&embs, g, landmarks, cfg)
}

pub fn plan_route_with_embeddings(
    embs: &GraphEmbeddings,
    g: &NavGraph,
    landmarks: &LandmarkSeq,
    cfg: &PlanConfig,
) -> Result<PlanResult> {
    cfg.validate()?;
    let probs = landmarks
        .entries()
        .iter()
        .map(|l| landmark_probability_from(embs, &l.embedding, cfg.temperature))
        .collect::<Result<Vec<_>>>()?;
    plan_with_probabilities(g, &probs, cfg.start, cfg.alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Link {
    /// The layer's initial value: carried over from the previous layer (or the
    /// start node in layer 0).
    Carry,
    Move(usize),
}

#[derive(Copy, Clone, PartialEq)]
struct Frontier {
    q: f64,
    index: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Largest score first, then lowest index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.q.total_cmp(&other.q).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Max-propagation of `q` along edges with transition cost `α·D`.
///
/// A transition replaces a value only if strictly better, so the carried
/// value wins ties; among equal transitions the lower predecessor id wins.
fn propagate(g: &NavGraph, alpha: f64, q: &mut [f64], links: &mut [Option<Link>]) {
    let n = q.len();
    let mut done = vec![false; n];
    let mut heap: BinaryHeap<Frontier> = (0..n)
        .filter(|&i| q[i] > f64::NEG_INFINITY)
        .map(|i| Frontier { q: q[i], index: i })
        .collect();
    while let Some(Frontier { q: qu, index: u }) = heap.pop() {
        if done[u] || qu != q[u] {
            continue;
        }
        done[u] = true;
        for &(v, cost) in g.neighbors(u) {
            if done[v] {
                continue;
            }
            let cand = qu - alpha * cost;
            if cand > q[v] {
                q[v] = cand;
                links[v] = Some(Link::Move(u));
                heap.push(Frontier { q: cand, index: v });
            } else if cand == q[v] && matches!(links[v], Some(Link::Move(p)) if u < p) {
                links[v] = Some(Link::Move(u));
            }
        }
    }
}

/// Core planner on explicit probabilities: `probs[i][k] = P(node k | l_{i+1})`.
pub fn plan_with_probabilities(
    g: &NavGraph,
    probs: &[Vec<f64>],
    start: NodeId,
    alpha: f64,
) -> Result<PlanResult> {
    if probs.is_empty() {
        return Err(Error::InvalidInput("at least one landmark is required".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be >= 0, got {alpha}")));
    }
    let n = g.len();
    if let Some(bad) = probs.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: bad.len() });
    }
    if probs.iter().flatten().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite landmark probability".into()));
    }
    let s = g.index_of(start)?;

    let mut q = vec![f64::NEG_INFINITY; n];
    let mut links: Vec<Option<Link>> = vec![None; n];
    q[s] = 0.0;
    links[s] = Some(Link::Carry);
    propagate(g, alpha, &mut q, &mut links);
    let mut q_table = vec![q.clone()];
    let mut link_table = vec![links];

    for p in probs {
        let mut q: Vec<f64> = q_table.last().expect("layer").iter().zip(p).map(|(a, b)| a + b).collect();
        let mut links = vec![Some(Link::Carry); n];
        propagate(g, alpha, &mut q, &mut links);
        q_table.push(q);
        link_table.push(links);
    }

    let last = q_table.last().expect("layer");
    let last_links = link_table.last().expect("layer");
    let mut dest = 0;
    for k in 1..n {
        let better = last[k] > last[dest]
            || (last[k] == last[dest]
                && last_links[k] == Some(Link::Carry)
                && last_links[dest] != Some(Link::Carry));
        if better {
            dest = k;
        }
    }

    // Backtrack: moves within a layer, carries down a layer.
    let mut rev = vec![dest];
    let mut assignments_rev = Vec::with_capacity(probs.len());
    let mut cur = dest;
    for layer in (0..=probs.len()).rev() {
        loop {
            match link_table[layer][cur] {
                Some(Link::Move(u)) => {
                    cur = u;
                    rev.push(cur);
                }
                Some(Link::Carry) => break,
                None => unreachable!("reachable node without a link"),
            }
        }
        if layer > 0 {
            assignments_rev.push(cur);
        }
    }
    debug_assert_eq!(cur, s);
    rev.reverse();
    rev.dedup();
    assignments_rev.reverse();

    Ok(PlanResult {
        start,
        waypoints: rev.into_iter().map(|i| g.id_at(i)).collect(),
        assignments: assignments_rev.into_iter().map(|i| g.id_at(i)).collect(),
        destination: g.id_at(dest),
        score: last[dest],
        q_table,
        probabilities: probs.to_vec(),
    })
}

/// The visited node sequence under perfect execution of `plan`.
pub fn simulate_traversal(g: &NavGraph, plan: &PlanResult) -> Result<Vec<NodeId>> {
    let Some(first) = plan.waypoints.first() else {
        return Err(Error::InvalidInput("plan has no waypoints".into()));
    };
    g.index_of(*first)?;
    for w in plan.waypoints.windows(2) {
        g.index_of(w[1])?;
        if w[0] != w[1] && g.edge_cost(w[0], w[1]).is_none() {
            return Err(Error::InvalidInput(format!(
                "waypoints {} and {} are not adjacent",
                w[0], w[1]
            )));
        }
    }
    Ok(plan.waypoints.clone())
}
