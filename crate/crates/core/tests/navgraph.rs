mod common;

use proptest::prelude::*;

use vln_attack::embedding::{cosine_similarity, Encoder, EncoderSpec, ToyEncoder};
use vln_attack::error::{Error, StoreError};
use vln_attack::navgraph::store::{encode_image, load_graph, save_graph};
use vln_attack::navgraph::{
    shortest_path, similarity_matrix, GraphEmbeddings, Landmark, LandmarkSeq, NavGraph, NavNode, NodeId, Slot,
};
use vln_attack::tensor::{ImageShape, ImageTensor};

#[test]
fn shortest_paths_agree_with_bellman_ford() {
    let mut r = common::rng(101);
    for case in 0..100 {
        let n = 2 + case % 9;
        let g = common::random_graph(&mut r, n, 0.35, case % 2 == 0);
        let s = NodeId((case % n) as u32);
        let dist = common::bellman_ford(&g, s);
        for t in 0..n {
            let route = shortest_path(&g, s, g.id_at(t)).unwrap();
            assert!((route.cost - dist[t]).abs() < 1e-9, "case {case}: {} vs {}", route.cost, dist[t]);
            let idx: Vec<usize> = route.nodes.iter().map(|&id| g.index_of(id).unwrap()).collect();
            assert!((common::path_cost(&g, &idx) - route.cost).abs() < 1e-9);
            assert_eq!(route.nodes.first(), Some(&s));
            assert_eq!(route.nodes.last(), Some(&g.id_at(t)));
        }
    }
}

#[test]
fn shortest_paths_agree_with_path_enumeration() {
    let mut r = common::rng(102);
    for case in 0..60 {
        let n = 2 + case % 7;
        let g = common::random_graph(&mut r, n, 0.4, true);
        for t in 1..n {
            let best = common::simple_paths(&g, 0, t)
                .iter()
                .map(|p| common::path_cost(&g, p))
                .fold(f64::INFINITY, f64::min);
            let route = shortest_path(&g, NodeId(0), g.id_at(t)).unwrap();
            assert_eq!(route.cost, best, "case {case}");
        }
    }
}

fn toy() -> (ToyEncoder, NavGraph) {
    let shape = ImageShape::new(3, 3, 1);
    let enc = ToyEncoder::new(EncoderSpec { seed: 4, m: 9, h: 10, n: 5 }, shape).unwrap();
    let mut r = common::rng(103);
    let nodes: Vec<NavNode> = (0..4)
        .map(|i| NavNode {
            id: NodeId(i),
            position: [f64::from(i), 0.0],
            images: [common::random_image(&mut r, shape), common::random_image(&mut r, shape)],
        })
        .collect();
    let edges = (0..3).map(|i| vln_attack::navgraph::Edge { u: NodeId(i), v: NodeId(i + 1), cost: 1.0 }).collect();
    (enc, NavGraph::new(nodes, edges).unwrap())
}

#[test]
fn similarity_matrix_is_elementwise_max_over_views() {
    let (enc, g) = toy();
    let mut r = common::rng(104);
    let landmarks = LandmarkSeq::new(
        (0..3)
            .map(|k| Landmark {
                text: format!("l{k}"),
                embedding: enc.encode_image(&common::random_image(&mut r, enc.input_shape())).unwrap(),
            })
            .collect(),
    )
    .unwrap();
    let picked: Vec<&NavNode> = vec![&g.nodes()[2], &g.nodes()[0]];
    let s = similarity_matrix(&enc, &picked, &landmarks).unwrap();
    assert_eq!((s.rows(), s.cols()), (2, 3));
    for (row, node) in picked.iter().enumerate() {
        for (col, l) in landmarks.entries().iter().enumerate() {
            let want = Slot::ALL
                .iter()
                .map(|&slot| cosine_similarity(&enc.encode_image(node.image(slot)).unwrap(), &l.embedding).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(s.get(row, col), want);
        }
    }
    let embs = GraphEmbeddings::compute(&enc, &g).unwrap();
    assert_eq!(embs.similarity_matrix(&[2, 0], &landmarks).unwrap(), s);

    let one = LandmarkSeq::new(vec![landmarks.get(1).clone()]).unwrap();
    let single = similarity_matrix(&enc, &picked[..1], &one).unwrap();
    assert_eq!((single.rows(), single.cols()), (1, 1));
    assert_eq!(single.get(0, 0), s.get(0, 1));
}

#[test]
fn trailing_bytes_and_path_escapes_are_rejected() {
    let (enc, g) = toy();
    let tmp = tempfile::tempdir().unwrap();
    save_graph(&g, &enc.spec(), None, tmp.path()).unwrap();
    let blob = tmp.path().join("imgs/1_b.vimg");
    let mut bytes = std::fs::read(&blob).unwrap();
    bytes.extend_from_slice(&[0, 0, 0, 0]);
    std::fs::write(&blob, bytes).unwrap();
    assert!(matches!(load_graph(tmp.path()), Err(Error::Store(StoreError::Validation(_)))));

    std::fs::write(&blob, encode_image(g.nodes()[1].image(Slot::Back))).unwrap();
    let manifest = tmp.path().join("manifest.json");
    let text = std::fs::read_to_string(&manifest).unwrap().replace("imgs/2_f.vimg", "../2_f.vimg");
    std::fs::write(&manifest, text).unwrap();
    assert!(matches!(load_graph(tmp.path()), Err(Error::Store(StoreError::Validation(_)))));

    std::fs::write(&manifest, "{ not json").unwrap();
    assert!(matches!(load_graph(tmp.path()), Err(Error::Store(StoreError::MalformedManifest { .. }))));
}

#[test]
fn saving_twice_gives_identical_bytes() {
    let (enc, g) = toy();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    save_graph(&g, &enc.spec(), None, a.path()).unwrap();
    save_graph(&g, &enc.spec(), None, b.path()).unwrap();
    for rel in ["manifest.json", "imgs/0_f.vimg", "imgs/3_b.vimg"] {
        assert_eq!(std::fs::read(a.path().join(rel)).unwrap(), std::fs::read(b.path().join(rel)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_graph_round_trips_bit_exactly(
        pixels in prop::collection::vec(prop::num::f32::POSITIVE | prop::num::f32::ZERO, 3 * 2 * 6 * 2),
        costs in prop::collection::vec(1e-6f64..1e6, 2),
        y in -1e3f64..1e3,
    ) {
        let shape = ImageShape::new(3, 2, 2);
        let px: Vec<f32> = pixels.iter().map(|v| v.fract().abs()).collect();
        let nodes: Vec<NavNode> = (0..3u32)
            .map(|i| {
                let off = i as usize * 24;
                NavNode {
                    id: NodeId(i * 7),
                    position: [f64::from(i) * 0.1, y],
                    images: [
                        ImageTensor::new(shape, px[off..off + 12].to_vec()).unwrap(),
                        ImageTensor::new(shape, px[off + 12..off + 24].to_vec()).unwrap(),
                    ],
                }
            })
            .collect();
        let edges = vec![
            vln_attack::navgraph::Edge { u: NodeId(0), v: NodeId(7), cost: costs[0] },
            vln_attack::navgraph::Edge { u: NodeId(7), v: NodeId(14), cost: costs[1] },
        ];
        let g = NavGraph::new(nodes, edges).unwrap();
        let spec = EncoderSpec::for_shape(3, shape);
        let tmp = tempfile::tempdir().unwrap();
        save_graph(&g, &spec, None, tmp.path()).unwrap();
        let loaded = load_graph(tmp.path()).unwrap();
        prop_assert_eq!(loaded.encoder, spec);
        prop_assert_eq!(loaded.graph.edges(), g.edges());
        for (a, b) in g.nodes().iter().zip(loaded.graph.nodes()) {
            prop_assert_eq!(a.id, b.id);
            prop_assert_eq!(a.position[1].to_bits(), b.position[1].to_bits());
            for s in Slot::ALL {
                prop_assert!(a.image(s).bit_eq(b.image(s)));
            }
        }
    }
}
