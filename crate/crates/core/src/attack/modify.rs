use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::select::AttackPlan;
use crate::embedding::{
    align_to_embedding, align_until, cosine_similarity, AlignmentConfig, AlignmentStatus,
    EmbeddingVec, Encoder, TraceSummary,
};
use crate::error::{Error, Result};
use crate::metrics::{psnr, ssim, Psnr};
use crate::navgraph::{GraphEmbeddings, LandmarkSeq, NavGraph, NavNode, NodeId, Slot};

pub const ATTACK_REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Image-to-text alignment used to raise a selected node.
    pub boost: AlignmentConfig,
    /// Image-to-image alignment used to lower a competing node. Its
    /// thresholds are unused: suppression stops on the margin rule.
    pub suppress: AlignmentConfig,
    /// A suppressed node must end this far below the boosted node.
    pub suppress_margin: f64,
    /// Number of top-ranked nodes kept per landmark in the report.
    pub ranking_depth: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            boost: AlignmentConfig::default(),
            suppress: AlignmentConfig::default(),
            suppress_margin: 0.01,
            ranking_depth: 5,
        }
    }
}

impl AttackConfig {
    /// Boost L2 threshold set from the world's typical inter-embedding distance.
    pub fn calibrated(typical_distance: f64) -> Self {
        Self { boost: AlignmentConfig::calibrated(typical_distance), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.boost.validate()?;
        self.suppress.validate()?;
        if !(self.suppress_margin >= 0.0 && self.suppress_margin.is_finite()) {
            return Err(Error::InvalidInput("suppress_margin must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModificationKind {
    /// Image-to-text: pull toward the landmark embedding.
    Boost,
    /// Image-to-image: pull toward a low-similarity image's embedding.
    Suppress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModificationRecord {
    pub node: NodeId,
    pub slot: Slot,
    pub kind: ModificationKind,
    pub landmark: usize,
    /// Node similarity to the landmark before and after.
    pub similarity_before: f64,
    pub similarity_after: f64,
    pub trace: TraceSummary,
    pub ssim: f64,
    pub psnr: Psnr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackWarning {
    pub node: NodeId,
    pub landmark: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedNode {
    pub node: NodeId,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkOutcome {
    pub landmark: usize,
    pub text: String,
    pub selected: NodeId,
    /// Nodes that outscored the selected node before it was boosted.
    pub competitors_before_boost: usize,
    /// Nodes that still outscored it after boosting, i.e. suppression targets.
    pub competitors_after_boost: usize,
    /// Image used as the suppression target.
    pub suppression_target: Option<(NodeId, Slot)>,
    /// Highest-similarity nodes on the final graph.
    pub ranking: Vec<RankedNode>,
    /// The selected node is the unique top match on the final graph.
    pub selected_is_top: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub format_version: u32,
    pub plan: AttackPlan,
    pub landmarks: Vec<String>,
    pub modifications: Vec<ModificationRecord>,
    pub outcomes: Vec<LandmarkOutcome>,
    pub warnings: Vec<AttackWarning>,
    /// Graph directory the modified graph was written to, when it was.
    pub output: Option<String>,
}

impl AttackReport {
    /// (node, slot) pairs changed by the attack, without repeats, sorted.
    pub fn touched_images(&self) -> Vec<(NodeId, Slot)> {
        let mut v: Vec<_> = self.modifications.iter().map(|m| (m.node, m.slot)).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn boosts(&self) -> impl Iterator<Item = &ModificationRecord> {
        self.modifications.iter().filter(|m| m.kind == ModificationKind::Boost)
    }

    pub fn suppressions(&self) -> impl Iterator<Item = &ModificationRecord> {
        self.modifications.iter().filter(|m| m.kind == ModificationKind::Suppress)
    }
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub graph: NavGraph,
    pub report: AttackReport,
}

fn node_similarity<E: Encoder + ?Sized>(enc: &E, node: &NavNode, l: &EmbeddingVec) -> Result<(f64, Slot)> {
    let front = cosine_similarity(&enc.encode_image(node.image(Slot::Front))?, l)?;
    let back = cosine_similarity(&enc.encode_image(node.image(Slot::Back))?, l)?;
    Ok(if back > front { (back, Slot::Back) } else { (front, Slot::Front) })
}

/// Aligns `node`'s `slot` image toward the landmark embedding `l`.
pub fn modify_node_with_text<E: Encoder + ?Sized>(
    enc: &E,
    node: &NavNode,
    slot: Slot,
    l: &EmbeddingVec,
    landmark: usize,
    cfg: &AlignmentConfig,
) -> Result<(NavNode, ModificationRecord)> {
    let before = node_similarity(enc, node, l)?.0;
    let original = node.image(slot);
    let aligned = align_to_embedding(enc, original, l, cfg)?;
    let mut out = node.clone();
    out.images[slot.index()] = aligned.image;
    let after = node_similarity(enc, &out, l)?.0;
    let record = ModificationRecord {
        node: node.id,
        slot,
        kind: ModificationKind::Boost,
        landmark,
        similarity_before: before,
        similarity_after: after,
        trace: aligned.trace.summary(),
        ssim: ssim(original, out.image(slot))?,
        psnr: psnr(original, out.image(slot))?,
    };
    Ok((out, record))
}

/// The image (over all nodes and both views) least similar to `l`; ties go
/// to the lower (id, slot).
pub fn find_target_image<E: Encoder + ?Sized>(
    enc: &E,
    g: &NavGraph,
    l: &EmbeddingVec,
) -> Result<(NodeId, Slot)> {
    find_target_image_from(&GraphEmbeddings::compute(enc, g)?, g, l)
}

pub fn find_target_image_from(
    embs: &GraphEmbeddings,
    g: &NavGraph,
    l: &EmbeddingVec,
) -> Result<(NodeId, Slot)> {
    let mut best: Option<(f64, NodeId, Slot)> = None;
    for (i, node) in g.nodes().iter().enumerate() {
        for slot in Slot::ALL {
            let sim = embs.slot_similarity(i, slot, l)?;
            if best.is_none_or(|(b, _, _)| sim < b) {
                best = Some((sim, node.id, slot));
            }
        }
    }
    let (_, id, slot) = best.ok_or_else(|| Error::InvalidInput("graph is empty".into()))?;
    Ok((id, slot))
}

struct Suppression {
    node: NavNode,
    records: Vec<ModificationRecord>,
    warning: Option<String>,
}

/// Lowers `node`'s similarity to `l` below `ceiling` by aligning each
/// offending view toward `target`.
fn suppress_node<E: Encoder + ?Sized>(
    enc: &E,
    node: &NavNode,
    l: &EmbeddingVec,
    target: &EmbeddingVec,
    ceiling: f64,
    landmark: usize,
    cfg: &AlignmentConfig,
) -> Result<Suppression> {
    let mut current = node.clone();
    let mut records = Vec::new();
    for _ in 0..Slot::ALL.len() {
        let (before, slot) = node_similarity(enc, &current, l)?;
        if before < ceiling {
            break;
        }
        let original = current.image(slot).clone();
        let aligned = align_until(enc, &original, target, cfg, |view| {
            cosine_similarity(view.embedding, l).is_ok_and(|c| c < ceiling)
        })?;
        current.images[slot.index()] = aligned.image;
        let after = node_similarity(enc, &current, l)?.0;
        records.push(ModificationRecord {
            node: node.id,
            slot,
            kind: ModificationKind::Suppress,
            landmark,
            similarity_before: before,
            similarity_after: after,
            trace: aligned.trace.summary(),
            ssim: ssim(&original, current.image(slot))?,
            psnr: psnr(&original, current.image(slot))?,
        });
        if aligned.trace.status == AlignmentStatus::MaxStepsReached
            && cosine_similarity(&enc.encode_image(current.image(slot))?, l)? >= ceiling
        {
            break;
        }
    }
    let final_sim = node_similarity(enc, &current, l)?.0;
    let warning = (final_sim >= ceiling).then(|| {
        format!("similarity {final_sim:.4} still at or above {ceiling:.4} after suppression")
    });
    Ok(Suppression { node: current, records, warning })
}

/// Boosts every selected node toward its landmark and suppresses the nodes
/// that still outrank it. Returns a new graph; `g` is not modified.
pub fn modify_graph<E: Encoder + ?Sized>(
    enc: &E,
    g: &NavGraph,
    plan: &AttackPlan,
    landmarks: &LandmarkSeq,
    cfg: &AttackConfig,
) -> Result<AttackOutcome> {
    cfg.validate()?;
    plan.check()?;
    if plan.selected.len() != landmarks.len() {
        return Err(Error::InvalidInput(format!(
            "plan places {} landmarks but {} were given",
            plan.selected.len(),
            landmarks.len()
        )));
    }
    let mut graph = g.clone();
    let mut embs = GraphEmbeddings::compute(enc, &graph)?;
    let mut modifications = Vec::new();
    let mut warnings = Vec::new();
    let mut outcomes = Vec::with_capacity(landmarks.len());

    for (sel, lm) in plan.selected.iter().zip(landmarks.entries()) {
        let i = sel.landmark;
        let l = &lm.embedding;
        let vi = graph.index_of(sel.node)?;
        let sims = embs.similarities(l)?;
        let competitors_before_boost = count_above(&sims, vi, sims[vi]);

        let (_, slot) = embs.node_similarity(vi, l)?;
        let (boosted, record) =
            modify_node_with_text(enc, &graph.nodes()[vi], slot, l, i, &cfg.boost)?;
        if record.similarity_after <= record.similarity_before {
            warnings.push(AttackWarning {
                node: sel.node,
                landmark: i,
                message: format!(
                    "boost did not raise similarity ({:.4} -> {:.4})",
                    record.similarity_before, record.similarity_after
                ),
            });
        }
        embs.set(vi, slot, enc.encode_image(boosted.image(slot))?);
        graph = graph.with_images(&[(sel.node, slot, boosted.image(slot).clone())])?;
        modifications.push(record);

        let sims = embs.similarities(l)?;
        let ceiling = sims[vi];
        let rivals: Vec<usize> =
            (0..graph.len()).filter(|&u| u != vi && sims[u] > ceiling).collect();
        let mut suppression_target = None;
        if !rivals.is_empty() {
            let (tid, tslot) = find_target_image_from(&embs, &graph, l)?;
            suppression_target = Some((tid, tslot));
            let target = embs.get(graph.index_of(tid)?, tslot).clone();
            let threshold = ceiling - cfg.suppress_margin;
            let results = rivals
                .par_iter()
                .map(|&u| suppress_node(enc, &graph.nodes()[u], l, &target, threshold, i, &cfg.suppress))
                .collect::<Result<Vec<_>>>()?;
            let mut replacements = Vec::new();
            for (&u, s) in rivals.iter().zip(results) {
                for r in &s.records {
                    embs.set(u, r.slot, enc.encode_image(s.node.image(r.slot))?);
                    replacements.push((s.node.id, r.slot, s.node.image(r.slot).clone()));
                }
                if let Some(message) = s.warning {
                    log::warn!("landmark {i}: node {}: {message}", s.node.id);
                    warnings.push(AttackWarning { node: s.node.id, landmark: i, message });
                }
                modifications.extend(s.records);
            }
            graph = graph.with_images(&replacements)?;
        }
        outcomes.push(LandmarkOutcome {
            landmark: i,
            text: lm.text.clone(),
            selected: sel.node,
            competitors_before_boost,
            competitors_after_boost: rivals.len(),
            suppression_target,
            ranking: Vec::new(),
            selected_is_top: false,
        });
    }

    for (o, lm) in outcomes.iter_mut().zip(landmarks.entries()) {
        let sims = embs.similarities(&lm.embedding)?;
        let mut order: Vec<usize> = (0..sims.len()).collect();
        order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
        o.ranking = order
            .iter()
            .take(cfg.ranking_depth)
            .map(|&k| RankedNode { node: graph.id_at(k), similarity: sims[k] })
            .collect();
        let vi = graph.index_of(o.selected)?;
        o.selected_is_top = count_above_or_equal(&sims, vi) == 0;
    }

    let report = AttackReport {
        format_version: ATTACK_REPORT_VERSION,
        plan: plan.clone(),
        landmarks: landmarks.texts().into_iter().map(str::to_owned).collect(),
        modifications,
        outcomes,
        warnings,
        output: None,
    };
    Ok(AttackOutcome { graph, report })
}

fn count_above(sims: &[f64], skip: usize, level: f64) -> usize {
    sims.iter().enumerate().filter(|&(k, &s)| k != skip && s > level).count()
}

fn count_above_or_equal(sims: &[f64], index: usize) -> usize {
    sims.iter().enumerate().filter(|&(k, &s)| k != index && s >= sims[index]).count()
}
