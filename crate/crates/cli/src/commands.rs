use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use log::{info, warn};
use serde::Serialize;

use vln_attack::attack::{modify_graph, select_nodes_with_embeddings, AttackConfig, AttackReport};
use vln_attack::detector::{
    detect_graph, log_grid, sweep, DetectionConfig, SweepResult,
};
use vln_attack::embedding::ToyEncoder;
use vln_attack::metrics::{aggregate, evaluate_route, summarize_quality, RouteEvalInput, RouteEvalReport};
use vln_attack::navgraph::store::{load_graph, save_graph, StoredGraph};
use vln_attack::navgraph::{GraphEmbeddings, LandmarkSeq, NavGraph, NodeId, Slot};
use vln_attack::planner::{plan_route_with_embeddings, simulate_traversal, PlanConfig};
use vln_attack::scenario::{run, ScenarioConfig};
use vln_attack::worldgen::{make_world, WorldMeta, WorldParams};

use crate::artifacts::{csv_bytes, emit_json, json_string, Staging};
use crate::config::ExperimentConfig;
use crate::{AttackArgs, DetectArgs, EvaluateArgs, GenEnvArgs, PlanArgs, UsageError};

pub const ATTACK_REPORT_FILE: &str = "attack_report.json";

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

struct Opened {
    stored: StoredGraph,
    encoder: ToyEncoder,
}

impl Opened {
    fn graph(&self) -> &NavGraph {
        &self.stored.graph
    }

    fn world(&self) -> Result<&WorldMeta> {
        self.stored
            .world
            .as_ref()
            .ok_or_else(|| usage("graph directory has no world.json; landmark phrases cannot be grounded"))
    }
}

fn open(dir: &Path) -> Result<Opened> {
    if !dir.is_dir() {
        return Err(usage(format!("graph directory {} does not exist", dir.display())));
    }
    let stored = load_graph(dir).with_context(|| format!("loading {}", dir.display()))?;
    let encoder = ToyEncoder::new(stored.encoder, stored.graph.image_shape())?;
    Ok(Opened { stored, encoder })
}

fn parse_list(raw: &str) -> Vec<String> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect()
}

fn landmarks(opened: &Opened, raw: &str) -> Result<LandmarkSeq> {
    let texts = parse_list(raw);
    if texts.is_empty() {
        return Err(usage("at least one landmark is required"));
    }
    Ok(LandmarkSeq::from_texts(&opened.encoder, opened.world()?, &texts)?)
}

fn node_ids(raw: &str) -> Result<Vec<NodeId>> {
    parse_list(raw)
        .iter()
        .map(|s| s.parse::<u32>().map(NodeId).map_err(|_| usage(format!("bad node id {s:?}"))))
        .collect()
}

pub fn gen_env(a: &GenEnvArgs) -> Result<()> {
    let mut params = WorldParams::new(a.nodes, a.landmarks);
    if let Some(amp) = a.noise_amplitude {
        params.noise_amplitude = amp;
    }
    params.validate()?;
    let staging = Staging::new(&a.out)?;
    let world = make_world(a.seed, &params)?;
    save_graph(&world.graph, &world.meta.encoder_spec(), Some(&world.meta), staging.path())?;
    let out = staging.commit()?;
    println!("wrote {} ({} nodes, {} edges)", out.display(), world.graph.len(), world.graph.edges().len());
    for (label, node) in world.landmark_labels().iter().zip(world.meta.landmark_nodes()) {
        println!("landmark {label:?} at node {node}");
    }
    if world.meta.regenerations > 0 {
        println!("regenerated {} time(s) for groundability", world.meta.regenerations);
    }
    Ok(())
}

pub fn plan(a: &PlanArgs) -> Result<()> {
    let opened = open(&a.graph)?;
    let landmarks = landmarks(&opened, &a.landmarks)?;
    let cfg = PlanConfig { alpha: a.alpha, start: NodeId(a.start), temperature: a.temperature };
    let embs = GraphEmbeddings::compute(&opened.encoder, opened.graph())?;
    let plan = plan_route_with_embeddings(&embs, opened.graph(), &landmarks, &cfg)?;
    emit_json(&plan, a.out.as_deref())
}

pub fn attack(a: &AttackArgs) -> Result<()> {
    let opened = open(&a.graph)?;
    let landmarks = landmarks(&opened, &a.landmarks)?;
    let g = opened.graph();
    let embs = GraphEmbeddings::compute(&opened.encoder, g)?;
    let plan = select_nodes_with_embeddings(&embs, g, NodeId(a.start), NodeId(a.target), &landmarks)?;
    let cfg = AttackConfig::calibrated(embs.typical_distance()?);
    let mut outcome = modify_graph(&opened.encoder, g, &plan, &landmarks, &cfg)?;
    outcome.report.output = Some(a.out.display().to_string());
    for w in &outcome.report.warnings {
        warn!("landmark {} node {}: {}", w.landmark, w.node, w.message);
    }

    let staging = Staging::new(&a.out)?;
    save_graph(&outcome.graph, &opened.stored.encoder, opened.stored.world.as_ref(), staging.path())?;
    std::fs::write(staging.path().join(ATTACK_REPORT_FILE), json_string(&outcome.report)?)?;
    let out = staging.commit()?;
    let q = summarize_quality(&outcome.report.modifications);
    println!(
        "wrote {}: {} boost(s), {} suppression(s), min SSIM {:.4}",
        out.display(),
        outcome.report.boosts().count(),
        outcome.report.suppressions().count(),
        q.min_ssim
    );
    Ok(())
}

fn parse_sigmas(raw: &str) -> Result<Vec<f64>> {
    if let Some(spec) = raw.strip_prefix("log:") {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(usage(format!("bad sigma grid {raw:?}; expected log:LO:HI:COUNT")));
        };
        let bad = || usage(format!("bad sigma grid {raw:?}"));
        return Ok(log_grid(lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?, count.parse().map_err(|_| bad())?)?);
    }
    let values = parse_list(raw)
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| usage(format!("bad sigma {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(usage("empty sigma grid"));
    }
    Ok(values)
}

#[derive(Serialize)]
struct SweepRow {
    sigma: f64,
    mean_clean: f64,
    mean_modified: f64,
    threshold: f64,
    balanced_accuracy: f64,
    f1: f64,
}

pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let rows: Vec<SweepRow> = result
        .points
        .iter()
        .map(|p| SweepRow {
            sigma: p.sigma,
            mean_clean: p.mean_clean,
            mean_modified: p.mean_modified,
            threshold: p.best.threshold,
            balanced_accuracy: p.best.balanced_accuracy,
            f1: p.best.f1,
        })
        .collect();
    csv_bytes(&rows)
}

pub fn detect(a: &DetectArgs) -> Result<()> {
    match (&a.clean, &a.modified, &a.graph) {
        (Some(clean), Some(modified), None) => detect_sweep(a, clean, modified),
        (None, None, Some(graph)) => detect_single(a, graph),
        _ => Err(usage("use either --clean with --modified, or --graph")),
    }
}

fn detect_sweep(a: &DetectArgs, clean: &Path, modified: &Path) -> Result<()> {
    let out_dir = a.out.as_deref().ok_or_else(|| usage("--out is required for a sweep"))?;
    let sigmas = parse_sigmas(&a.sigmas)?;
    let c = open(clean)?;
    let m = open(modified)?;
    if c.stored.encoder != m.stored.encoder {
        return Err(usage("the two graphs were stored with different encoders"));
    }
    c.graph().check_same_nodes(m.graph())?;
    let mut images = c.graph().differing_images(m.graph())?;
    let truth: BTreeSet<(NodeId, Slot)> = images.iter().copied().collect();
    if images.is_empty() {
        warn!("graphs are identical; scoring every image");
        images = c.graph().nodes().iter().flat_map(|n| Slot::ALL.map(|s| (n.id, s))).collect();
    }
    let base = DetectionConfig { sigma: sigmas[0], trials: a.trials, threshold: 0.0, seed: a.seed };
    let result = sweep(&c.encoder, c.graph(), m.graph(), &sigmas, &base, Some(&images))?;
    let best = result.best().expect("non-empty grid");
    info!("best sigma {:e}: balanced accuracy {:.3}", best.sigma, best.best.balanced_accuracy);
    let cfg = DetectionConfig { sigma: best.sigma, threshold: best.best.threshold, ..base };
    let report = detect_graph(&m.encoder, m.graph(), &cfg, Some(&truth), None)?;

    let staging = Staging::new(out_dir)?;
    std::fs::write(staging.path().join("sweep.json"), json_string(&result)?)?;
    std::fs::write(staging.path().join("sweep.csv"), sweep_csv(&result)?)?;
    std::fs::write(staging.path().join("detection_report.json"), json_string(&report)?)?;
    let out = staging.commit()?;
    println!(
        "wrote {}: best sigma {:e}, threshold {:e}, balanced accuracy {:.3}, F1 {:.3}",
        out.display(),
        best.sigma,
        best.best.threshold,
        best.best.balanced_accuracy,
        best.best.f1
    );
    Ok(())
}

fn detect_single(a: &DetectArgs, graph: &Path) -> Result<()> {
    let (Some(sigma), Some(threshold)) = (a.sigma, a.threshold) else {
        return Err(usage("--graph needs --sigma and --threshold"));
    };
    let g = open(graph)?;
    let path = a.path.as_deref().map(node_ids).transpose()?;
    let cfg = DetectionConfig { sigma, trials: a.trials, threshold, seed: a.seed };
    let report = detect_graph(&g.encoder, g.graph(), &cfg, None, path.as_deref())?;
    emit_json(&report, a.out.as_deref())
}

#[derive(Serialize)]
struct MetricRow {
    metric: &'static str,
    value: f64,
}

fn metric_rows(reports: &[RouteEvalReport]) -> Result<Vec<u8>> {
    let agg = aggregate(reports);
    let rows: Vec<MetricRow> = agg.rows().iter().map(|&(metric, value)| MetricRow { metric, value }).collect();
    csv_bytes(&rows)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    if a.batch.is_some() || a.config.is_some() {
        return evaluate_batch(a);
    }
    let (Some(clean), Some(attacked), Some(report_path)) = (&a.clean_graph, &a.attacked_graph, &a.attack_report)
    else {
        return Err(usage("give --clean-graph, --attacked-graph and --attack-report, or --batch"));
    };
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| usage(format!("cannot read attack report {}: {e}", report_path.display())))?;
    let report: AttackReport = serde_json::from_str(&text)
        .map_err(|e| usage(format!("malformed attack report {}: {e}", report_path.display())))?;
    let c = open(clean)?;
    let m = open(attacked)?;
    c.graph().check_same_nodes(m.graph())?;
    let phrases = match &a.landmarks {
        Some(raw) => raw.clone(),
        None => report.landmarks.join(","),
    };
    let landmarks = landmarks(&c, &phrases)?;
    let start = a.start.map_or(report.plan.start, NodeId);
    let cfg = PlanConfig { alpha: a.alpha, start, temperature: a.temperature };

    let clean_plan = plan_route_with_embeddings(&GraphEmbeddings::compute(&c.encoder, c.graph())?, c.graph(), &landmarks, &cfg)?;
    let attacked_plan =
        plan_route_with_embeddings(&GraphEmbeddings::compute(&m.encoder, m.graph())?, m.graph(), &landmarks, &cfg)?;
    let clean_traversal = simulate_traversal(c.graph(), &clean_plan)?;
    let attacked_traversal = simulate_traversal(m.graph(), &attacked_plan)?;
    let world = c.world()?;
    let ground_truth: Vec<NodeId> = landmarks
        .texts()
        .iter()
        .filter_map(|t| world.concept(t).and_then(|_| world.nodes_with_concept(t).first().copied()))
        .collect();
    let eval = evaluate_route(
        m.graph(),
        &RouteEvalInput {
            clean_plan: &clean_plan,
            clean_traversal: &clean_traversal,
            attacked_plan: &attacked_plan,
            attacked_traversal: &attacked_traversal,
            attack: &report.plan,
            ground_truth_landmarks: &ground_truth,
        },
    )?;
    match &a.out {
        Some(dir) => {
            let staging = Staging::new(dir)?;
            std::fs::write(staging.path().join("route_eval.json"), json_string(&eval)?)?;
            std::fs::write(staging.path().join("route_eval.csv"), metric_rows(std::slice::from_ref(&eval))?)?;
            staging.commit()?;
            Ok(())
        }
        None => emit_json(&eval, None),
    }
}

#[derive(Serialize)]
struct ScenarioRecord {
    seed: u64,
    start: NodeId,
    target: NodeId,
    landmarks: Vec<String>,
    eval: RouteEvalReport,
}

fn evaluate_batch(a: &EvaluateArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| usage(format!("malformed config {}: {e}", p.display())))?
        }
        None => {
            let mut c = ExperimentConfig::new(
                a.seed,
                a.batch.expect("batch mode"),
                WorldParams::new(a.nodes, a.landmark_count),
            );
            c.alpha = a.alpha;
            c.temperature = a.temperature;
            c.out = a.out.clone();
            c
        }
    };
    cfg.validate()?;
    let out_dir = a.out.clone().or_else(|| cfg.out.clone()).ok_or_else(|| usage("--out is required in batch mode"))?;
    let staging = Staging::new(&out_dir)?;

    let mut records = Vec::with_capacity(cfg.scenarios);
    let mut modifications = Vec::new();
    for k in 0..cfg.scenarios {
        let seed = cfg.scenario_seed(k);
        let sc = ScenarioConfig {
            world: cfg.world.clone(),
            seed,
            alpha: cfg.alpha,
            temperature: cfg.temperature,
            attack: cfg.attack.clone(),
        };
        let o = run(&sc).with_context(|| format!("scenario seed {seed}"))?;
        info!("seed {seed}: modified {} arrived {}", o.eval.route_modification_success, o.eval.arrival_success);
        modifications.extend(o.attack.report.modifications.iter().cloned());
        records.push(ScenarioRecord {
            seed,
            start: o.scenario.start,
            target: o.scenario.target,
            landmarks: o.scenario.landmarks.texts().into_iter().map(str::to_owned).collect(),
            eval: o.eval,
        });
    }
    let reports: Vec<RouteEvalReport> = records.iter().map(|r| r.eval.clone()).collect();
    let agg = aggregate(&reports);
    let quality = summarize_quality(&modifications);

    std::fs::write(staging.path().join("experiment.json"), json_string(&cfg)?)?;
    std::fs::write(staging.path().join("route_eval.json"), json_string(&records)?)?;
    std::fs::write(staging.path().join("route_eval.csv"), metric_rows(&reports)?)?;
    std::fs::write(staging.path().join("quality.json"), json_string(&quality)?)?;
    let out = staging.commit()?;
    println!("wrote {} ({} scenarios)", out.display(), agg.scenarios);
    for (name, value) in agg.rows() {
        println!("{name}: {value:.3}");
    }
    Ok(())
}
