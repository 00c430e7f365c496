//! Synthetic navigation worlds whose landmark texts, node images and topology
//! share ground-truth concepts.
//!
//! A concept is a unit vector `c` in `R^d`. Its rendering is
//! `clamp(0.5 + 0.5·P·c + u)` where `P` is a seeded `m×d` projection and `u`
//! is uniform pixel noise. Text for a known landmark is grounded in the
//! noise-free rendering of its concept, so text and image embeddings live in
//! one space.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding::{EncoderSpec, TextGrounding, ToyEncoder};
use crate::error::{Error, Result};
use crate::navgraph::{Edge, GraphEmbeddings, LandmarkSeq, NavGraph, NavNode, NodeId, Slot};
use crate::seed;
use crate::tensor::{ImageShape, ImageTensor};

pub const WORLD_FORMAT_VERSION: u32 = 1;

const STREAM_PROJECTION: u64 = 0x9_0e_c7;
const STREAM_CONCEPTS: u64 = 0xc0_9c_e9;
const STREAM_LAYOUT: u64 = 0x1a_40_07;
const STREAM_ASSIGN: u64 = 0xa5_51_69;
const STREAM_RENDER: u64 = 0x4e_9d_e4;
const STREAM_TEXT: u64 = 0x7e_47;
const STREAM_RETRY: u64 = 0x4e_74_41;

const LANDMARK_VOCABULARY: &[&str] = &[
    "a red mailbox",
    "a stone bench",
    "a blue door",
    "a bike rack",
    "a water fountain",
    "a yellow crate",
    "a brick archway",
    "a parked scooter",
    "a glass kiosk",
    "a tall lamppost",
    "a wooden gate",
    "a recycling bin",
    "a green awning",
    "a traffic cone",
    "a picnic table",
    "a white van",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptKind {
    Landmark,
    Background,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptVec {
    pub label: String,
    pub kind: ConceptKind,
    /// Unit L2 norm.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    pub node_count: usize,
    pub landmark_count: usize,
    pub concept_dim: usize,
    pub background_count: usize,
    /// Half-width of the uniform pixel noise.
    pub noise_amplitude: f64,
    /// Standard deviation of the projection entries.
    pub contrast: f64,
    /// Largest allowed `|cos|` between a landmark concept and any other concept.
    pub max_landmark_cosine: f64,
    /// Mean distance between consecutive trajectory nodes, in meters.
    pub step_length: f64,
    /// Non-consecutive nodes closer than this are also joined.
    pub link_radius: f64,
    pub image_shape: ImageShape,
    pub encoder_seed: u64,
    /// Regeneration attempts before giving up on groundability.
    pub max_attempts: u32,
}

impl WorldParams {
    pub fn new(node_count: usize, landmark_count: usize) -> Self {
        Self {
            node_count,
            landmark_count,
            concept_dim: 16,
            background_count: 12,
            noise_amplitude: 0.05,
            contrast: 0.12,
            max_landmark_cosine: 0.5,
            step_length: 0.1,
            link_radius: 0.15,
            image_shape: ImageShape::default(),
            encoder_seed: 42,
            max_attempts: 20,
        }
    }

    pub fn small(landmark_count: usize) -> Self {
        Self::new(40, landmark_count)
    }

    pub fn large(landmark_count: usize) -> Self {
        Self::new(80, landmark_count)
    }

    pub fn encoder_spec(&self) -> EncoderSpec {
        EncoderSpec::for_shape(self.encoder_seed, self.image_shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.landmark_count == 0 {
            return Err(Error::InvalidInput("landmark_count must be at least 1".into()));
        }
        if self.node_count < self.landmark_count + 2 {
            return Err(Error::InvalidInput(format!(
                "node_count {} is too small for {} landmarks (need at least landmark_count + 2 = {})",
                self.node_count,
                self.landmark_count,
                self.landmark_count + 2
            )));
        }
        if self.landmark_count > LANDMARK_VOCABULARY.len() {
            return Err(Error::InvalidInput(format!(
                "at most {} landmarks are supported",
                LANDMARK_VOCABULARY.len()
            )));
        }
        if self.concept_dim == 0 || self.background_count == 0 {
            return Err(Error::InvalidInput("concept_dim and background_count must be positive".into()));
        }
        let positive = [self.contrast, self.step_length, self.link_radius];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("contrast, step_length and link_radius must be positive".into()));
        }
        if !(0.0..=0.5).contains(&self.noise_amplitude) {
            return Err(Error::InvalidInput("noise_amplitude must lie in [0, 0.5]".into()));
        }
        if !(0.0..1.0).contains(&self.max_landmark_cosine) {
            return Err(Error::InvalidInput("max_landmark_cosine must lie in [0, 1)".into()));
        }
        if self.image_shape.is_empty() || self.max_attempts == 0 {
            return Err(Error::InvalidInput("image shape and max_attempts must be non-empty".into()));
        }
        Ok(())
    }
}

/// Which concept each of a node's views was rendered from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeConcepts {
    pub front: String,
    pub back: String,
}

/// Everything about a world except its graph: concepts, rendering, and the
/// ground-truth concept of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldMeta {
    /// Seed the caller asked for.
    pub seed: u64,
    /// Seed of the attempt that passed the groundability check.
    pub effective_seed: u64,
    pub regenerations: u32,
    pub params: WorldParams,
    /// Landmarks first, in instruction order, then backgrounds.
    pub concepts: Vec<ConceptVec>,
    pub ground_truth: BTreeMap<NodeId, NodeConcepts>,
    /// `m×d` row-major; regenerated from `effective_seed`, never stored.
    projection: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    pub meta: WorldMeta,
    pub graph: NavGraph,
}

/// `world.json` contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldSidecar {
    pub format_version: u32,
    pub seed: u64,
    pub effective_seed: u64,
    pub regenerations: u32,
    pub params: WorldParams,
    pub concepts: Vec<ConceptVec>,
    pub ground_truth: Vec<GroundTruthEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub node: NodeId,
    pub front: String,
    pub back: String,
}

impl WorldMeta {
    pub fn concept(&self, label: &str) -> Option<&ConceptVec> {
        self.concepts.iter().find(|c| c.label == label)
    }

    pub fn landmark_concepts(&self) -> impl Iterator<Item = &ConceptVec> {
        self.concepts.iter().filter(|c| c.kind == ConceptKind::Landmark)
    }

    pub fn landmark_labels(&self) -> Vec<String> {
        self.landmark_concepts().map(|c| c.label.clone()).collect()
    }

    /// Nodes whose front view shows `label`.
    pub fn nodes_with_concept(&self, label: &str) -> Vec<NodeId> {
        self.ground_truth
            .iter()
            .filter(|(_, c)| c.front == label)
            .map(|(&id, _)| id)
            .collect()
    }

    /// The single node holding each landmark, in landmark order.
    pub fn landmark_nodes(&self) -> Vec<NodeId> {
        self.landmark_concepts()
            .filter_map(|c| self.nodes_with_concept(&c.label).first().copied())
            .collect()
    }

    pub fn encoder_spec(&self) -> EncoderSpec {
        self.params.encoder_spec()
    }

    /// `clamp(0.5 + 0.5·P·c + u)`, `u ~ U(-amp, amp)` drawn from `noise_seed`.
    /// Without a noise seed (or with zero amplitude) this is the prototype.
    pub fn render(&self, concept: &[f64], noise_seed: Option<u64>) -> Result<ImageTensor> {
        let d = self.params.concept_dim;
        if concept.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: concept.len() });
        }
        let amp = self.params.noise_amplitude;
        let mut rng = noise_seed.filter(|_| amp > 0.0).map(seed::rng);
        let pixels: Vec<f64> = self
            .projection
            .chunks_exact(d)
            .map(|row| {
                let base = 0.5 + 0.5 * row.iter().zip(concept).map(|(p, c)| p * c).sum::<f64>();
                match rng.as_mut() {
                    Some(r) => base + r.random_range(-amp..=amp),
                    None => base,
                }
            })
            .collect();
        ImageTensor::from_f64_clamped(self.params.image_shape, &pixels)
    }

    pub fn prototype(&self, label: &str) -> Result<ImageTensor> {
        let c = self
            .concept(label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown concept {label:?}")))?;
        self.render(&c.values, None)
    }

    pub fn landmarks<E: crate::embedding::Encoder + ?Sized>(
        &self,
        enc: &E,
        labels: &[impl AsRef<str>],
    ) -> Result<LandmarkSeq> {
        LandmarkSeq::from_texts(enc, self, labels)
    }

    pub fn to_sidecar(&self) -> WorldSidecar {
        WorldSidecar {
            format_version: WORLD_FORMAT_VERSION,
            seed: self.seed,
            effective_seed: self.effective_seed,
            regenerations: self.regenerations,
            params: self.params.clone(),
            concepts: self.concepts.clone(),
            ground_truth: self
                .ground_truth
                .iter()
                .map(|(&node, c)| GroundTruthEntry {
                    node,
                    front: c.front.clone(),
                    back: c.back.clone(),
                })
                .collect(),
        }
    }

    pub fn from_sidecar(s: WorldSidecar) -> Result<Self> {
        if s.format_version != WORLD_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "world sidecar format_version {} is not {WORLD_FORMAT_VERSION}",
                s.format_version
            )));
        }
        s.params.validate()?;
        let labels: BTreeSet<&str> = s.concepts.iter().map(|c| c.label.as_str()).collect();
        if labels.len() != s.concepts.len() {
            return Err(Error::InvalidInput("duplicate concept labels".into()));
        }
        for c in &s.concepts {
            let norm = c.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            if c.values.len() != s.params.concept_dim || (norm - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("concept {:?} is not a unit vector", c.label)));
            }
        }
        let mut ground_truth = BTreeMap::new();
        for e in s.ground_truth {
            if !labels.contains(e.front.as_str()) || !labels.contains(e.back.as_str()) {
                return Err(Error::InvalidInput(format!("node {} references an unknown concept", e.node)));
            }
            ground_truth.insert(e.node, NodeConcepts { front: e.front, back: e.back });
        }
        let projection = projection(&s.params, s.effective_seed);
        Ok(Self {
            seed: s.seed,
            effective_seed: s.effective_seed,
            regenerations: s.regenerations,
            params: s.params,
            concepts: s.concepts,
            ground_truth,
            projection,
        })
    }

    /// Checks that ground truth covers exactly the graph's nodes.
    pub fn check_graph(&self, g: &NavGraph) -> Result<()> {
        let same = g.len() == self.ground_truth.len()
            && g.nodes().iter().all(|n| self.ground_truth.contains_key(&n.id));
        if same && g.image_shape() == self.params.image_shape {
            Ok(())
        } else {
            Err(Error::InvalidInput("world ground truth does not match the graph".into()))
        }
    }
}

impl TextGrounding for WorldMeta {
    /// Known labels map to their prototype; any other text to the prototype of
    /// a concept seeded by the text's hash.
    fn ground_text(&self, text: &str) -> Result<ImageTensor> {
        if let Some(c) = self.concept(text) {
            return self.render(&c.values, None);
        }
        let mut rng = seed::rng(seed::derive(seed::hash_text(text), &[STREAM_TEXT]));
        let c = random_unit(&mut rng, self.params.concept_dim);
        self.render(&c, None)
    }
}

impl TextGrounding for WorldModel {
    fn ground_text(&self, text: &str) -> Result<ImageTensor> {
        self.meta.ground_text(text)
    }
}

impl WorldModel {
    pub fn encoder(&self) -> Result<ToyEncoder> {
        ToyEncoder::new(self.meta.encoder_spec(), self.meta.params.image_shape)
    }

    /// Texts of the world's landmarks, in order.
    pub fn landmark_labels(&self) -> Vec<String> {
        self.meta.landmark_labels()
    }
}

/// Generates a world. Worlds whose landmarks are not each best matched by
/// their own node are regenerated from a derived seed; the number of retries
/// is kept in [`WorldMeta::regenerations`].
pub fn make_world(seed: u64, params: &WorldParams) -> Result<WorldModel> {
    params.validate()?;
    let enc = ToyEncoder::new(params.encoder_spec(), params.image_shape)?;
    for attempt in 0..params.max_attempts {
        let effective = if attempt == 0 { seed } else { seed::derive(seed, &[STREAM_RETRY, u64::from(attempt)]) };
        let mut world = generate(seed, effective, params)?;
        world.meta.regenerations = attempt;
        if is_groundable(&enc, &world)? {
            if attempt > 0 {
                log::warn!("world seed {seed}: regenerated {attempt} time(s) for groundability");
            }
            return Ok(world);
        }
    }
    Err(Error::WorldGeneration(format!(
        "seed {seed}: no groundable world within {} attempts",
        params.max_attempts
    )))
}

/// Every landmark's own node attains the maximum node similarity for that
/// landmark's text.
pub fn is_groundable(enc: &ToyEncoder, world: &WorldModel) -> Result<bool> {
    let embs = GraphEmbeddings::compute(enc, &world.graph)?;
    for c in world.meta.landmark_concepts() {
        let l = crate::embedding::encode_text(enc, &world.meta, &c.label)?;
        let sims = embs.similarities(&l)?;
        let best = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let own = world.meta.nodes_with_concept(&c.label);
        if !own.iter().any(|id| world.graph.index_of(*id).is_ok_and(|i| sims[i] == best)) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn projection(params: &WorldParams, effective_seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(effective_seed, &[STREAM_PROJECTION]));
    let n = params.image_shape.len() * params.concept_dim;
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * params.contrast).collect()
}

fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn concept_cos(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn make_concepts(params: &WorldParams, effective_seed: u64) -> Result<Vec<ConceptVec>> {
    let mut rng = seed::rng(seed::derive(effective_seed, &[STREAM_CONCEPTS]));
    let backgrounds: Vec<ConceptVec> = (0..params.background_count)
        .map(|i| ConceptVec {
            label: format!("background {i}"),
            kind: ConceptKind::Background,
            values: random_unit(&mut rng, params.concept_dim),
        })
        .collect();

    let mut vocab: Vec<&str> = LANDMARK_VOCABULARY.to_vec();
    vocab.shuffle(&mut rng);
    let mut landmarks: Vec<ConceptVec> = Vec::with_capacity(params.landmark_count);
    for label in vocab.into_iter().take(params.landmark_count) {
        let mut tries = 0;
        let values = loop {
            let v = random_unit(&mut rng, params.concept_dim);
            let far = backgrounds
                .iter()
                .chain(&landmarks)
                .all(|c| concept_cos(&c.values, &v).abs() <= params.max_landmark_cosine);
            if far {
                break v;
            }
            tries += 1;
            if tries > 100_000 {
                return Err(Error::WorldGeneration(format!(
                    "could not place landmark concept {label:?} within cosine {}",
                    params.max_landmark_cosine
                )));
            }
        };
        landmarks.push(ConceptVec { label: label.to_owned(), kind: ConceptKind::Landmark, values });
    }
    landmarks.extend(backgrounds);
    Ok(landmarks)
}

/// Random-walk trajectory that turns back toward the origin when it strays
/// beyond the arena radius.
fn trajectory(params: &WorldParams, effective_seed: u64) -> Vec<[f64; 2]> {
    let mut rng = seed::rng(seed::derive(effective_seed, &[STREAM_LAYOUT]));
    let turn = Normal::new(0.0, 0.6).expect("valid normal");
    let arena = params.step_length * (params.node_count as f64).sqrt() * 0.8;
    let mut heading: f64 = rng.random_range(0.0..2.0 * PI);
    let mut pos = [0.0f64, 0.0];
    let mut out = Vec::with_capacity(params.node_count);
    for _ in 0..params.node_count {
        out.push(pos);
        heading += turn.sample(&mut rng);
        if pos[0].hypot(pos[1]) > arena {
            let inward = (-pos[1]).atan2(-pos[0]);
            let mut delta = inward - heading;
            delta = (delta + PI).rem_euclid(2.0 * PI) - PI;
            heading += 0.6 * delta;
        }
        let step = params.step_length * rng.random_range(0.8..1.2);
        pos = [pos[0] + step * heading.cos(), pos[1] + step * heading.sin()];
    }
    out
}

fn layout_edges(positions: &[[f64; 2]], radius: f64) -> Vec<Edge> {
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let mut pairs = BTreeSet::new();
    for i in 1..positions.len() {
        pairs.insert((i - 1, i));
    }
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = dist(positions[i], positions[j]);
            if d <= radius && d > 1e-9 {
                pairs.insert((i, j));
            }
        }
    }
    pairs
        .into_iter()
        .map(|(i, j)| Edge {
            u: NodeId(i as u32),
            v: NodeId(j as u32),
            cost: dist(positions[i], positions[j]),
        })
        .collect()
}

fn generate(seed: u64, effective_seed: u64, params: &WorldParams) -> Result<WorldModel> {
    let concepts = make_concepts(params, effective_seed)?;
    let meta = WorldMeta {
        seed,
        effective_seed,
        regenerations: 0,
        params: params.clone(),
        concepts,
        ground_truth: BTreeMap::new(),
        projection: projection(params, effective_seed),
    };

    let positions = trajectory(params, effective_seed);
    let mut rng = seed::rng(seed::derive(effective_seed, &[STREAM_ASSIGN]));
    let landmark_nodes = rand::seq::index::sample(&mut rng, params.node_count, params.landmark_count);
    let backgrounds: Vec<&ConceptVec> =
        meta.concepts.iter().filter(|c| c.kind == ConceptKind::Background).collect();

    let mut front_of: Vec<Option<&ConceptVec>> = vec![None; params.node_count];
    for (k, node) in landmark_nodes.iter().enumerate() {
        front_of[node] = Some(&meta.concepts[k]);
    }
    let mut ground_truth = BTreeMap::new();
    let mut nodes = Vec::with_capacity(params.node_count);
    for (i, pos) in positions.iter().enumerate() {
        let front = match front_of[i] {
            Some(c) => c,
            None => backgrounds[rng.random_range(0..backgrounds.len())],
        };
        let back = backgrounds[rng.random_range(0..backgrounds.len())];
        let id = NodeId(i as u32);
        let images = [
            meta.render(&front.values, Some(render_seed(effective_seed, id, Slot::Front)))?,
            meta.render(&back.values, Some(render_seed(effective_seed, id, Slot::Back)))?,
        ];
        ground_truth.insert(id, NodeConcepts { front: front.label.clone(), back: back.label.clone() });
        nodes.push(NavNode { id, position: *pos, images });
    }

    let graph = NavGraph::new(nodes, layout_edges(&positions, params.link_radius))
        .map_err(|e| Error::WorldGeneration(format!("generated graph is invalid: {e}")))?;
    Ok(WorldModel { meta: WorldMeta { ground_truth, ..meta }, graph })
}

fn render_seed(effective_seed: u64, id: NodeId, slot: Slot) -> u64 {
    seed::derive(effective_seed, &[STREAM_RENDER, u64::from(id.0), slot.index() as u64])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{cosine_similarity, encode_text, Encoder};

    #[test]
    fn small_world_postconditions() {
        let w = make_world(1, &WorldParams::small(4)).unwrap();
        assert_eq!(w.graph.len(), 40);
        assert!(w.graph.is_connected());
        assert_eq!(w.meta.landmark_nodes().len(), 4);
        for c in &w.meta.concepts {
            let n = c.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        let labels: BTreeSet<_> = w.meta.concepts.iter().map(|c| &c.label).collect();
        assert_eq!(labels.len(), w.meta.concepts.len());
        for e in w.graph.edges() {
            assert!(e.cost > 0.0);
            assert_eq!(w.graph.edge_cost(e.v, e.u), Some(e.cost));
        }
    }

    #[test]
    fn regeneration_is_bit_exact() {
        let p = WorldParams::small(3);
        let (a, b) = (make_world(9, &p).unwrap(), make_world(9, &p).unwrap());
        assert_eq!(a, b);
        for (x, y) in a.graph.nodes().iter().zip(b.graph.nodes()) {
            assert!(x.images[0].bit_eq(&y.images[0]) && x.images[1].bit_eq(&y.images[1]));
        }
        assert_ne!(a, make_world(10, &p).unwrap());
    }

    #[test]
    fn rejects_too_few_nodes() {
        assert!(make_world(1, &WorldParams::new(3, 4)).is_err());
        assert!(make_world(1, &WorldParams::new(5, 0)).is_err());
    }

    #[test]
    fn zero_amplitude_yields_prototype() {
        let mut p = WorldParams::small(2);
        p.noise_amplitude = 0.0;
        let w = make_world(3, &p).unwrap();
        let c = &w.meta.concepts[0];
        let a = w.meta.render(&c.values, Some(5)).unwrap();
        assert!(a.bit_eq(&w.meta.render(&c.values, None).unwrap()));
        assert!(a.bit_eq(&w.meta.prototype(&c.label).unwrap()));
    }

    #[test]
    fn unknown_texts_get_distinct_deterministic_embeddings() {
        let w = make_world(2, &WorldParams::small(2)).unwrap();
        let enc = w.encoder().unwrap();
        let a = encode_text(&enc, &w, "a purple elephant").unwrap();
        let b = encode_text(&enc, &w, "a purple giraffe").unwrap();
        assert_ne!(a, b);
        assert_eq!(a, encode_text(&enc, &w, "a purple elephant").unwrap());
    }

    #[test]
    fn same_concept_renderings_stay_close() {
        let w = make_world(4, &WorldParams::small(4)).unwrap();
        let enc = w.encoder().unwrap();
        for c in w.meta.landmark_concepts() {
            let text = encode_text(&enc, &w, &c.label).unwrap();
            for k in 0..5 {
                let img = w.meta.render(&c.values, Some(100 + k)).unwrap();
                let cos = cosine_similarity(&enc.encode_image(&img).unwrap(), &text).unwrap();
                assert!(cos >= 0.8, "{} rendering {k}: cos {cos}", c.label);
            }
        }
    }

    #[test]
    fn sidecar_round_trip_rebuilds_projection() {
        let w = make_world(5, &WorldParams::small(3)).unwrap();
        let json = serde_json::to_string(&w.meta.to_sidecar()).unwrap();
        let back = WorldMeta::from_sidecar(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, w.meta);
    }
}
