//! Seeded end-to-end runs: generate a world, plan on it, attack it, plan
//! again, and evaluate.

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::attack::{modify_graph, select_nodes_with_embeddings, AttackConfig, AttackOutcome};
use crate::embedding::ToyEncoder;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_route, RouteEvalInput, RouteEvalReport};
use crate::navgraph::{shortest_path, GraphEmbeddings, LandmarkSeq, NavGraph, NodeId};
use crate::planner::{plan_route_with_embeddings, simulate_traversal, PlanConfig, PlanResult};
use crate::seed;
use crate::worldgen::{make_world, WorldModel, WorldParams};

const STREAM_ENDPOINTS: u64 = 0x5_7a_47;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub world: WorldParams,
    pub seed: u64,
    pub alpha: f64,
    pub temperature: f64,
    /// `None` calibrates the boost threshold from the world's embeddings.
    pub attack: Option<AttackConfig>,
}

impl ScenarioConfig {
    pub fn new(world: WorldParams, seed: u64) -> Self {
        Self {
            world,
            seed,
            alpha: crate::planner::DEFAULT_ALPHA,
            temperature: crate::planner::DEFAULT_TEMPERATURE,
            attack: None,
        }
    }
}

/// A world with its encoder, instruction and attack endpoints.
pub struct Scenario {
    pub world: WorldModel,
    pub encoder: ToyEncoder,
    pub landmarks: LandmarkSeq,
    pub embeddings: GraphEmbeddings,
    pub start: NodeId,
    pub target: NodeId,
    pub clean_plan: PlanResult,
    pub plan_config: PlanConfig,
}

pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub attack_config: AttackConfig,
    pub attack: AttackOutcome,
    pub clean_traversal: Vec<NodeId>,
    pub attacked_plan: PlanResult,
    pub attacked_traversal: Vec<NodeId>,
    pub eval: RouteEvalReport,
}

/// Draws a start node, plans the clean route, then draws a target that is not
/// a landmark node, not the clean destination, and far enough away for every
/// landmark to get its own path node.
pub fn prepare(cfg: &ScenarioConfig) -> Result<Scenario> {
    let world = make_world(cfg.seed, &cfg.world)?;
    let encoder = world.encoder()?;
    let landmarks = world.meta.landmarks(&encoder, &world.landmark_labels())?;
    let embeddings = GraphEmbeddings::compute(&encoder, &world.graph)?;
    let g = &world.graph;
    let landmark_nodes = world.meta.landmark_nodes();
    let mut rng = seed::rng(seed::derive(cfg.seed, &[STREAM_ENDPOINTS]));

    let starts: Vec<NodeId> = g.nodes().iter().map(|n| n.id).collect();
    for _ in 0..starts.len() {
        let start = *starts.choose(&mut rng).expect("non-empty graph");
        let plan_config = PlanConfig { alpha: cfg.alpha, start, temperature: cfg.temperature };
        let clean_plan = plan_route_with_embeddings(&embeddings, g, &landmarks, &plan_config)?;
        let targets = endpoint_candidates(g, start, clean_plan.destination, &landmark_nodes, landmarks.len())?;
        if let Some(&target) = targets.choose(&mut rng) {
            return Ok(Scenario {
                world,
                encoder,
                landmarks,
                embeddings,
                start,
                target,
                clean_plan,
                plan_config,
            });
        }
    }
    Err(Error::InvalidInput(format!("seed {}: no admissible start/target pair", cfg.seed)))
}

fn endpoint_candidates(
    g: &NavGraph,
    start: NodeId,
    clean_destination: NodeId,
    landmark_nodes: &[NodeId],
    n: usize,
) -> Result<Vec<NodeId>> {
    let mut out = Vec::new();
    for node in g.nodes() {
        let t = node.id;
        if t == start || t == clean_destination || landmark_nodes.contains(&t) {
            continue;
        }
        if shortest_path(g, start, t)?.nodes.len() >= n {
            out.push(t);
        }
    }
    Ok(out)
}

pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let scenario = prepare(cfg)?;
    let attack_config = match &cfg.attack {
        Some(a) => a.clone(),
        None => AttackConfig::calibrated(scenario.embeddings.typical_distance()?),
    };
    attack(scenario, attack_config)
}

pub fn attack(scenario: Scenario, attack_config: AttackConfig) -> Result<ScenarioOutcome> {
    let g = &scenario.world.graph;
    let enc = &scenario.encoder;
    let plan = select_nodes_with_embeddings(
        &scenario.embeddings,
        g,
        scenario.start,
        scenario.target,
        &scenario.landmarks,
    )?;
    let attack = modify_graph(enc, g, &plan, &scenario.landmarks, &attack_config)?;
    let attacked_embs = GraphEmbeddings::compute(enc, &attack.graph)?;
    let attacked_plan = plan_route_with_embeddings(
        &attacked_embs,
        &attack.graph,
        &scenario.landmarks,
        &scenario.plan_config,
    )?;
    let clean_traversal = simulate_traversal(g, &scenario.clean_plan)?;
    let attacked_traversal = simulate_traversal(&attack.graph, &attacked_plan)?;
    let ground_truth = scenario.world.meta.landmark_nodes();
    let eval = evaluate_route(
        &attack.graph,
        &RouteEvalInput {
            clean_plan: &scenario.clean_plan,
            clean_traversal: &clean_traversal,
            attacked_plan: &attacked_plan,
            attacked_traversal: &attacked_traversal,
            attack: &attack.report.plan,
            ground_truth_landmarks: &ground_truth,
        },
    )?;
    Ok(ScenarioOutcome {
        scenario,
        attack_config,
        attack,
        clean_traversal,
        attacked_plan,
        attacked_traversal,
        eval,
    })
}
