mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use vln_attack::detector::{
    classify, detect_graph, image_seed, log_grid, sensitivity_score, sweep, BinaryMetrics, DetectionConfig,
    Verdict, REFERENCE_SIGMA, REFERENCE_THRESHOLD,
};
use vln_attack::embedding::noise_response;
use vln_attack::navgraph::{NodeId, Slot};
use vln_attack::worldgen::{make_world, WorldParams};

#[test]
fn clean_against_clean_is_chance() {
    let world = make_world(61, &WorldParams::small(3)).unwrap();
    let enc = world.encoder().unwrap();
    let images: Vec<(NodeId, Slot)> = world.graph.nodes()[..6].iter().map(|n| (n.id, Slot::Front)).collect();
    let cfg = DetectionConfig::new(1e-4, 0.0, 3);
    let grid = log_grid(1e-6, 1e-2, 3).unwrap();
    let res = sweep(&enc, &world.graph, &world.graph, &grid, &cfg, Some(&images)).unwrap();
    assert_eq!(res.points.len(), 3);
    for p in &res.points {
        assert_eq!(p.mean_clean, p.mean_modified);
        assert_eq!(p.best.balanced_accuracy, 0.5);
    }
    // Nothing differs, so there is nothing to score by default.
    assert!(sweep(&enc, &world.graph, &world.graph, &grid, &cfg, None).is_err());
}

#[test]
fn graph_report_matches_per_image_scores() {
    let world = make_world(62, &WorldParams::small(3)).unwrap();
    let enc = world.encoder().unwrap();
    let g = &world.graph;
    let truth: BTreeSet<(NodeId, Slot)> = [(g.id_at(2), Slot::Back), (g.id_at(5), Slot::Front)].into();
    let path: Vec<NodeId> = (0..4).map(|k| g.id_at(k)).collect();
    let mut cfg = DetectionConfig::new(1e-3, 0.0, 11);
    cfg.trials = 4;
    let scores = detect_graph(&enc, g, &cfg, None, None).unwrap();
    cfg.threshold = scores.images[7].score;
    let report = detect_graph(&enc, g, &cfg, Some(&truth), Some(&path)).unwrap();
    assert_eq!(report.images.len(), 2 * g.len());
    for v in &report.images {
        let img = g.node(v.node).unwrap().image(v.slot);
        let own = DetectionConfig { seed: image_seed(cfg.seed, v.node, v.slot), ..cfg };
        assert_eq!(v.score, sensitivity_score(&enc, img, &own).unwrap());
        assert_eq!(v.score, noise_response(&enc, img, cfg.sigma, cfg.trials, own.seed).unwrap());
        assert_eq!(v.verdict, classify(v.score, cfg.threshold));
        assert_eq!(v.modified, Some(truth.contains(&(v.node, v.slot))));
    }
    let m = report.metrics.unwrap();
    assert_eq!(m.true_positives + m.false_positives + m.true_negatives + m.false_negatives, 2 * g.len());
    let flag = report.path.unwrap();
    assert_eq!(flag.flagged, !flag.flagged_nodes.is_empty());
    assert_eq!(flag.node_scores.len(), path.len());
    assert_eq!(report.reference_operating_point.sigma, REFERENCE_SIGMA);
    assert_eq!(report.reference_operating_point.threshold, REFERENCE_THRESHOLD);
    assert_eq!(detect_graph(&enc, g, &cfg, Some(&truth), Some(&path)).unwrap().images, report.images);
}

#[test]
fn bad_configs_are_rejected() {
    let world = make_world(63, &WorldParams::small(3)).unwrap();
    let enc = world.encoder().unwrap();
    for cfg in [
        DetectionConfig::new(0.0, 0.1, 1),
        DetectionConfig::new(1e-3, -1.0, 1),
        DetectionConfig { trials: 0, ..DetectionConfig::new(1e-3, 0.1, 1) },
    ] {
        assert!(detect_graph(&enc, &world.graph, &cfg, None, None).is_err());
    }
    assert!(detect_graph(&enc, &world.graph, &DetectionConfig::new(1e-3, 0.1, 1), None, Some(&[NodeId(999)])).is_err());
}

proptest! {
    #[test]
    fn verdicts_are_monotone_in_threshold(score in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if classify(score, hi) == Verdict::Modified {
            prop_assert_eq!(classify(score, lo), Verdict::Modified);
        }
    }

    #[test]
    fn counts_are_conserved(
        clean in prop::collection::vec(0.0f64..1.0, 1..20),
        modified in prop::collection::vec(0.0f64..1.0, 1..20),
        t in 0.0f64..1.0,
    ) {
        let m = BinaryMetrics::at_threshold(&clean, &modified, t);
        prop_assert_eq!(m.true_positives + m.false_negatives, modified.len());
        prop_assert_eq!(m.false_positives + m.true_negatives, clean.len());
        prop_assert!((0.0..=1.0).contains(&m.balanced_accuracy));
    }
}
