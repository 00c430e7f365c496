//! Noise-sensitivity detection of modified images.
//!
//! An image's score is the mean embedding shift under small Gaussian pixel
//! noise. Images pushed by gradient descent toward a foreign embedding tend to
//! sit where the encoder is steeper, so a threshold on the score separates
//! them when the encoder allows it.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{noise_response, Encoder};
use crate::error::{Error, Result};
use crate::navgraph::{NavGraph, NodeId, Slot};
use crate::seed;
use crate::tensor::ImageTensor;

pub const DETECTION_REPORT_VERSION: u32 = 1;
pub const DEFAULT_TRIALS: usize = 16;
/// Operating point reported for the CLIP-scale setting, echoed for reference.
pub const REFERENCE_SIGMA: f64 = 1e-5;
pub const REFERENCE_THRESHOLD: f64 = 0.203;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub sigma: f64,
    pub trials: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl DetectionConfig {
    pub fn new(sigma: f64, threshold: f64, seed: u64) -> Self {
        Self { sigma, trials: DEFAULT_TRIALS, threshold, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidInput(format!("threshold must be >= 0, got {}", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Clean,
    Modified,
}

/// Modified iff `score > threshold`.
pub fn classify(score: f64, threshold: f64) -> Verdict {
    if score > threshold {
        Verdict::Modified
    } else {
        Verdict::Clean
    }
}

pub fn sensitivity_score<E: Encoder + ?Sized>(
    enc: &E,
    img: &ImageTensor,
    cfg: &DetectionConfig,
) -> Result<f64> {
    noise_response(enc, img, cfg.sigma, cfg.trials, cfg.seed)
}

/// Noise seed for one image, independent of scoring order.
pub fn image_seed(global: u64, node: NodeId, slot: Slot) -> u64 {
    seed::derive(global, &[u64::from(node.0), slot.index() as u64])
}

fn score_images<E: Encoder + ?Sized>(
    enc: &E,
    g: &NavGraph,
    images: &[(NodeId, Slot)],
    sigma: f64,
    trials: usize,
    global_seed: u64,
) -> Result<Vec<f64>> {
    images
        .par_iter()
        .map(|&(id, slot)| {
            let img = g.node(id)?.image(slot);
            noise_response(enc, img, sigma, trials, image_seed(global_seed, id, slot))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageVerdict {
    pub node: NodeId,
    pub slot: Slot,
    pub score: f64,
    pub verdict: Verdict,
    /// Whether the image is known to be modified, when ground truth is given.
    pub modified: Option<bool>,
}

/// Confusion counts with "modified" as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl BinaryMetrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let specificity = ratio(tn, tn + fp);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            balanced_accuracy: (recall + specificity) / 2.0,
            precision,
            recall,
            f1,
        }
    }

    pub fn at_threshold(clean: &[f64], modified: &[f64], threshold: f64) -> Self {
        let tp = modified.iter().filter(|&&s| classify(s, threshold) == Verdict::Modified).count();
        let fp = clean.iter().filter(|&&s| classify(s, threshold) == Verdict::Modified).count();
        Self::from_counts(tp, fp, clean.len() - fp, modified.len() - tp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
}

/// Threshold maximizing balanced accuracy among midpoints of consecutive
/// distinct pooled scores; ties go to the smallest threshold.
pub fn calibrate_threshold(clean: &[f64], modified: &[f64]) -> Result<Calibration> {
    if clean.is_empty() || modified.is_empty() {
        return Err(Error::InvalidInput("both score populations must be non-empty".into()));
    }
    if clean.iter().chain(modified).any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let mut pooled: Vec<f64> = clean.iter().chain(modified).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();
    let candidates: Vec<f64> = if pooled.len() == 1 {
        pooled.clone()
    } else {
        pooled.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect()
    };
    let mut best: Option<Calibration> = None;
    for t in candidates {
        let m = BinaryMetrics::at_threshold(clean, modified, t);
        if best.is_none_or(|b| m.balanced_accuracy > b.balanced_accuracy) {
            best = Some(Calibration { threshold: t, balanced_accuracy: m.balanced_accuracy, f1: m.f1 });
        }
    }
    Ok(best.expect("at least one candidate"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFlag {
    pub path: Vec<NodeId>,
    /// Per node, the larger of its two image scores.
    pub node_scores: Vec<f64>,
    pub flagged_nodes: Vec<NodeId>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub sigma: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub format_version: u32,
    pub config: DetectionConfig,
    pub images: Vec<ImageVerdict>,
    pub metrics: Option<BinaryMetrics>,
    pub path: Option<PathFlag>,
    pub reference_operating_point: OperatingPoint,
}

/// Scores and classifies every image of `g`. With `truth` (the set of
/// modified images) aggregate metrics are filled in; with `path` the path is
/// flagged if any of its nodes has a modified verdict.
pub fn detect_graph<E: Encoder + ?Sized>(
    enc: &E,
    g: &NavGraph,
    cfg: &DetectionConfig,
    truth: Option<&BTreeSet<(NodeId, Slot)>>,
    path: Option<&[NodeId]>,
) -> Result<DetectionReport> {
    cfg.validate()?;
    let images: Vec<(NodeId, Slot)> =
        g.nodes().iter().flat_map(|n| Slot::ALL.map(|s| (n.id, s))).collect();
    let scores = score_images(enc, g, &images, cfg.sigma, cfg.trials, cfg.seed)?;
    let verdicts: Vec<ImageVerdict> = images
        .iter()
        .zip(&scores)
        .map(|(&(node, slot), &score)| ImageVerdict {
            node,
            slot,
            score,
            verdict: classify(score, cfg.threshold),
            modified: truth.map(|t| t.contains(&(node, slot))),
        })
        .collect();
    let metrics = truth.map(|_| {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for v in &verdicts {
            match (v.modified == Some(true), v.verdict) {
                (true, Verdict::Modified) => tp += 1,
                (true, Verdict::Clean) => fn_ += 1,
                (false, Verdict::Modified) => fp += 1,
                (false, Verdict::Clean) => tn += 1,
            }
        }
        BinaryMetrics::from_counts(tp, fp, tn, fn_)
    });
    let path = path
        .map(|p| {
            let node_scores = p
                .iter()
                .map(|&id| {
                    let i = g.index_of(id)?;
                    Ok(scores[2 * i].max(scores[2 * i + 1]))
                })
                .collect::<Result<Vec<f64>>>()?;
            let flagged_nodes: Vec<NodeId> = p
                .iter()
                .zip(&node_scores)
                .filter(|(_, &s)| classify(s, cfg.threshold) == Verdict::Modified)
                .map(|(&id, _)| id)
                .collect();
            Ok::<_, Error>(PathFlag {
                path: p.to_vec(),
                node_scores,
                flagged: !flagged_nodes.is_empty(),
                flagged_nodes,
            })
        })
        .transpose()?;
    Ok(DetectionReport {
        format_version: DETECTION_REPORT_VERSION,
        config: *cfg,
        images: verdicts,
        metrics,
        path,
        reference_operating_point: OperatingPoint {
            sigma: REFERENCE_SIGMA,
            threshold: REFERENCE_THRESHOLD,
        },
    })
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
        return Err(Error::InvalidInput(format!(
            "log grid needs 0 < lo < hi and at least 2 points, got [{lo}, {hi}] x {count}"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> =
        (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect();
    grid[0] = lo;
    grid[count - 1] = hi;
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub mean_clean: f64,
    pub mean_modified: f64,
    pub best: Calibration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub images: Vec<(NodeId, Slot)>,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn sigmas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sigma).collect()
    }

    /// The point with the highest balanced accuracy (earliest on ties).
    pub fn best(&self) -> Option<&SweepPoint> {
        self.points.iter().fold(None, |acc: Option<&SweepPoint>, p| match acc {
            Some(b) if b.best.balanced_accuracy >= p.best.balanced_accuracy => Some(b),
            _ => Some(p),
        })
    }
}

/// Raw per-image scores for both populations at one σ.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationScores {
    pub clean: Vec<f64>,
    pub modified: Vec<f64>,
}

/// Scores the listed images in both graphs. The same image in the two graphs
/// sees the same noise draws.
pub fn population_scores<E: Encoder + ?Sized>(
    enc: &E,
    clean: &NavGraph,
    modified: &NavGraph,
    images: &[(NodeId, Slot)],
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<PopulationScores> {
    clean.check_same_nodes(modified)?;
    Ok(PopulationScores {
        clean: score_images(enc, clean, images, sigma, trials, seed)?,
        modified: score_images(enc, modified, images, sigma, trials, seed)?,
    })
}

/// σ-sweep over the images touched by the attack. `touched` defaults to the
/// images whose pixels differ between the graphs.
pub fn sweep<E: Encoder + ?Sized>(
    enc: &E,
    clean: &NavGraph,
    modified: &NavGraph,
    sigmas: &[f64],
    cfg: &DetectionConfig,
    touched: Option<&[(NodeId, Slot)]>,
) -> Result<SweepResult> {
    clean.check_same_nodes(modified)?;
    if sigmas.is_empty() || sigmas.windows(2).any(|w| w[1] <= w[0]) || sigmas[0] <= 0.0 {
        return Err(Error::InvalidInput("sigma grid must be positive and strictly increasing".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let images = match touched {
        Some(t) => t.to_vec(),
        None => clean.differing_images(modified)?,
    };
    if images.is_empty() {
        return Err(Error::InvalidInput("no modified images to score".into()));
    }
    let points = sigmas
        .iter()
        .map(|&sigma| {
            let pop = population_scores(enc, clean, modified, &images, sigma, cfg.trials, cfg.seed)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            Ok(SweepPoint {
                sigma,
                mean_clean: mean(&pop.clean),
                mean_modified: mean(&pop.modified),
                best: calibrate_threshold(&pop.clean, &pop.modified)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { images, points })
}
