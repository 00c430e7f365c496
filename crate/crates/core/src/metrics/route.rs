use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Psnr;
use crate::attack::{AttackPlan, ModificationRecord};
use crate::error::{Error, Result};
use crate::navgraph::{NavGraph, NodeId};
use crate::planner::PlanResult;

pub struct RouteEvalInput<'a> {
    pub clean_plan: &'a PlanResult,
    pub clean_traversal: &'a [NodeId],
    pub attacked_plan: &'a PlanResult,
    pub attacked_traversal: &'a [NodeId],
    pub attack: &'a AttackPlan,
    /// Node holding each landmark in the unmodified world, in landmark order.
    pub ground_truth_landmarks: &'a [NodeId],
}

/// Why the attacked route did not end at the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalFailure {
    /// The target is the most probable node for the final landmark, but the
    /// planner's accumulated score favored another destination.
    CumulativeScore,
    /// Some other node remained the most probable match for the final landmark.
    RepresentationMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteEvalReport {
    pub route_modification_success: bool,
    /// Fraction of landmarks the attacked planner credits to the attack's node.
    pub landmark_matching_rate: f64,
    /// Share of the attack's shortest-path nodes that the attacked route visits.
    pub path_efficiency: f64,
    pub arrival_success: bool,
    pub arrival_failure: Option<ArrivalFailure>,
    pub clean_destination: NodeId,
    pub attacked_destination: NodeId,
    pub target: NodeId,
    /// Fraction of ground-truth landmark nodes the clean route visits.
    pub clean_ground_truth_coverage: f64,
}

fn last(nodes: &[NodeId]) -> Option<NodeId> {
    nodes.last().copied()
}

pub fn route_modification_success(input: &RouteEvalInput) -> bool {
    last(input.attacked_traversal) != last(input.clean_traversal)
}

pub fn landmark_matching_rate(input: &RouteEvalInput) -> f64 {
    let selected = input.attack.selected_nodes();
    if selected.is_empty() {
        return 0.0;
    }
    let hits = selected
        .iter()
        .zip(&input.attacked_plan.assignments)
        .filter(|(a, b)| a == b)
        .count();
    hits as f64 / selected.len() as f64
}

pub fn path_efficiency(input: &RouteEvalInput) -> f64 {
    let intended: BTreeSet<NodeId> = input.attack.path.iter().copied().collect();
    if intended.is_empty() {
        return 0.0;
    }
    let visited: BTreeSet<NodeId> = input.attacked_plan.waypoints.iter().copied().collect();
    intended.intersection(&visited).count() as f64 / intended.len() as f64
}

pub fn arrival_success(input: &RouteEvalInput) -> bool {
    last(input.attacked_traversal) == Some(input.attack.target)
}

/// Classifies an arrival failure using the attacked plan's probabilities.
pub fn attribute_arrival_failure(
    attacked_graph: &NavGraph,
    attacked_plan: &PlanResult,
    target: NodeId,
) -> Result<ArrivalFailure> {
    let probs = attacked_plan
        .probabilities
        .last()
        .ok_or_else(|| Error::InvalidInput("plan has no landmark probabilities".into()))?;
    if probs.len() != attacked_graph.len() {
        return Err(Error::DimensionMismatch { expected: attacked_graph.len(), actual: probs.len() });
    }
    let mut best = 0;
    for k in 1..probs.len() {
        if probs[k] > probs[best] {
            best = k;
        }
    }
    Ok(if attacked_graph.id_at(best) == target {
        ArrivalFailure::CumulativeScore
    } else {
        ArrivalFailure::RepresentationMismatch
    })
}

pub fn evaluate_route(attacked_graph: &NavGraph, input: &RouteEvalInput) -> Result<RouteEvalReport> {
    let (Some(clean_destination), Some(attacked_destination)) =
        (last(input.clean_traversal), last(input.attacked_traversal))
    else {
        return Err(Error::InvalidInput("empty traversal".into()));
    };
    for id in input.clean_traversal.iter().chain(input.attacked_traversal).chain(&input.attack.path) {
        attacked_graph.index_of(*id)?;
    }
    let arrived = arrival_success(input);
    let arrival_failure = if arrived {
        None
    } else {
        Some(attribute_arrival_failure(attacked_graph, input.attacked_plan, input.attack.target)?)
    };
    let visited: BTreeSet<NodeId> = input.clean_traversal.iter().copied().collect();
    let gt = input.ground_truth_landmarks;
    let clean_ground_truth_coverage = if gt.is_empty() {
        0.0
    } else {
        gt.iter().filter(|n| visited.contains(n)).count() as f64 / gt.len() as f64
    };
    Ok(RouteEvalReport {
        route_modification_success: route_modification_success(input),
        landmark_matching_rate: landmark_matching_rate(input),
        path_efficiency: path_efficiency(input),
        arrival_success: arrived,
        arrival_failure,
        clean_destination,
        attacked_destination,
        target: input.attack.target,
        clean_ground_truth_coverage,
    })
}

/// Means over scenarios, in the layout of a per-environment results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteEvalAggregate {
    pub scenarios: usize,
    pub route_modification_success_rate: f64,
    pub landmark_matching_rate: f64,
    pub path_efficiency: f64,
    pub arrival_success_rate: f64,
}

impl RouteEvalAggregate {
    /// `(metric name, value)` rows in table order.
    pub fn rows(&self) -> [(&'static str, f64); 4] {
        [
            ("route_modification_success_rate", self.route_modification_success_rate),
            ("landmark_matching_rate", self.landmark_matching_rate),
            ("path_efficiency", self.path_efficiency),
            ("arrival_success_rate", self.arrival_success_rate),
        ]
    }
}

pub fn aggregate(reports: &[RouteEvalReport]) -> RouteEvalAggregate {
    let n = reports.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RouteEvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    RouteEvalAggregate {
        scenarios: reports.len(),
        route_modification_success_rate: mean(&|r| flag(r.route_modification_success)),
        landmark_matching_rate: mean(&|r| r.landmark_matching_rate),
        path_efficiency: mean(&|r| r.path_efficiency),
        arrival_success_rate: mean(&|r| flag(r.arrival_success)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub count: usize,
    pub mean_ssim: f64,
    pub min_ssim: f64,
    /// Over finite values only.
    pub mean_psnr: Option<f64>,
    pub min_psnr: Option<f64>,
    /// Records whose image did not change.
    pub infinite_psnr: usize,
}

pub fn summarize_quality<'a, I>(records: I) -> QualitySummary
where
    I: IntoIterator<Item = &'a ModificationRecord>,
{
    let mut count = 0;
    let (mut ssim_sum, mut min_ssim) = (0.0, f64::INFINITY);
    let mut finite = Vec::new();
    let mut infinite_psnr = 0;
    for r in records {
        count += 1;
        ssim_sum += r.ssim;
        min_ssim = min_ssim.min(r.ssim);
        match r.psnr {
            Psnr::Finite(v) => finite.push(v),
            Psnr::Infinite => infinite_psnr += 1,
        }
    }
    if infinite_psnr > 0 {
        log::info!("{infinite_psnr} unchanged image(s) excluded from the PSNR mean");
    }
    QualitySummary {
        count,
        mean_ssim: if count > 0 { ssim_sum / count as f64 } else { f64::NAN },
        min_ssim,
        mean_psnr: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
        min_psnr: finite.iter().copied().reduce(f64::min),
        infinite_psnr,
    }
}
