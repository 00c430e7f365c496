//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use vln_attack::navgraph::{Edge, NavGraph, NavNode, NodeId};
use vln_attack::tensor::{ImageShape, ImageTensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn blank_node(id: u32) -> NavNode {
    let img = ImageTensor::filled(ImageShape::new(2, 2, 1), 0.5).unwrap();
    NavNode { id: NodeId(id), position: [f64::from(id), 0.0], images: [img.clone(), img] }
}

/// Connected graph: a random spanning tree plus extra edges. With
/// `integer_costs` many equal-cost alternatives arise.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, extra_p: f64, integer_costs: bool) -> NavGraph {
    let cost = |r: &mut ChaCha8Rng| {
        if integer_costs {
            f64::from(r.random_range(1..=3u32))
        } else {
            r.random_range(0.1..5.0)
        }
    };
    let mut edges = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = r.random_range(0..i);
        seen.insert((j, i));
        edges.push(Edge { u: NodeId(j as u32), v: NodeId(i as u32), cost: cost(r) });
    }
    for i in 0..n {
        for j in i + 1..n {
            if !seen.contains(&(i, j)) && r.random_bool(extra_p) {
                edges.push(Edge { u: NodeId(i as u32), v: NodeId(j as u32), cost: cost(r) });
            }
        }
    }
    NavGraph::new((0..n as u32).map(blank_node).collect(), edges).unwrap()
}

/// Single-source distances by Bellman-Ford over the edge list.
pub fn bellman_ford(g: &NavGraph, s: NodeId) -> Vec<f64> {
    let n = g.len();
    let idx = |id: NodeId| g.index_of(id).unwrap();
    let mut d = vec![f64::INFINITY; n];
    d[idx(s)] = 0.0;
    for _ in 0..n {
        for e in g.edges() {
            let (a, b) = (idx(e.u), idx(e.v));
            if d[a] + e.cost < d[b] {
                d[b] = d[a] + e.cost;
            }
            if d[b] + e.cost < d[a] {
                d[a] = d[b] + e.cost;
            }
        }
    }
    d
}

/// Every simple path from `s` to `t`, as node-index sequences.
pub fn simple_paths(g: &NavGraph, s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(g: &NavGraph, cur: usize, t: usize, path: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur == t {
            out.push(path.clone());
            return;
        }
        for e in g.edges() {
            let (a, b) = (g.index_of(e.u).unwrap(), g.index_of(e.v).unwrap());
            let next = if a == cur { b } else if b == cur { a } else { continue };
            if !on[next] {
                on[next] = true;
                path.push(next);
                walk(g, next, t, path, on, out);
                path.pop();
                on[next] = false;
            }
        }
    }
    let mut on = vec![false; g.len()];
    on[s] = true;
    let mut out = Vec::new();
    walk(g, s, t, &mut vec![s], &mut on, &mut out);
    out
}

pub fn path_cost(g: &NavGraph, path: &[usize]) -> f64 {
    path.windows(2).map(|w| g.edge_cost(g.id_at(w[0]), g.id_at(w[1])).unwrap()).sum()
}

/// Simple paths between every ordered pair of nodes.
pub struct PathCache {
    paths: Vec<Vec<Vec<Vec<usize>>>>,
}

impl PathCache {
    pub fn new(g: &NavGraph) -> Self {
        let n = g.len();
        Self { paths: (0..n).map(|s| (0..n).map(|t| simple_paths(g, s, t)).collect()).collect() }
    }

    /// Best value after walking from `s` to `t` starting at `value`,
    /// subtracting `alpha·cost` edge by edge.
    fn best_leg(&self, g: &NavGraph, s: usize, t: usize, value: f64, alpha: f64) -> f64 {
        self.paths[s][t]
            .iter()
            .map(|p| {
                p.windows(2).fold(value, |v, w| {
                    v - alpha * g.edge_cost(g.id_at(w[0]), g.id_at(w[1])).unwrap()
                })
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Score of a specific node tuple: the best route through the tuple's
    /// nodes in order, collecting one landmark probability at each.
    pub fn tuple_score(&self, g: &NavGraph, probs: &[Vec<f64>], start: NodeId, alpha: f64, tuple: &[usize]) -> f64 {
        let mut value = 0.0;
        let mut prev = g.index_of(start).unwrap();
        for (i, &v) in tuple.iter().enumerate() {
            value = self.best_leg(g, prev, v, value, alpha);
            value += probs[i][v];
            prev = v;
        }
        value
    }
}

/// Exhaustive planner reference over every ordered choice of one node per
/// landmark. Returns the optimum and every node tuple that attains it.
pub fn brute_force_plan(g: &NavGraph, probs: &[Vec<f64>], start: NodeId, alpha: f64) -> (f64, Vec<Vec<usize>>) {
    let cache = PathCache::new(g);
    let n = g.len();
    let k = probs.len();
    let mut best = f64::NEG_INFINITY;
    let mut argbest = Vec::new();
    let mut tuple = vec![0usize; k];
    loop {
        let value = cache.tuple_score(g, probs, start, alpha, &tuple);
        if value > best {
            best = value;
            argbest = vec![tuple.clone()];
        } else if value == best {
            argbest.push(tuple.clone());
        }
        let mut pos = 0;
        loop {
            if pos == k {
                return (best, argbest);
            }
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// Exhaustive order-preserving assignment: maximum of `Σ_i s[pos_i][i]`
/// over strictly increasing positions.
pub fn brute_force_assignment(s: &[Vec<f64>]) -> (f64, Vec<Vec<usize>>) {
    let m = s.len();
    let n = s.first().map_or(0, Vec::len);
    let mut best = f64::NEG_INFINITY;
    let mut arg = Vec::new();
    fn rec(s: &[Vec<f64>], m: usize, n: usize, from: usize, chosen: &mut Vec<usize>, best: &mut f64, arg: &mut Vec<Vec<usize>>) {
        if chosen.len() == n {
            let total = chosen.iter().enumerate().fold(0.0, |acc, (i, &p)| acc + s[p][i]);
            if total > *best {
                *best = total;
                *arg = vec![chosen.clone()];
            } else if total == *best {
                arg.push(chosen.clone());
            }
            return;
        }
        for p in from..m {
            chosen.push(p);
            rec(s, m, n, p + 1, chosen, best, arg);
            chosen.pop();
        }
    }
    rec(s, m, n, 0, &mut Vec::new(), &mut best, &mut arg);
    (best, arg)
}

/// Direct 2-D windowed SSIM using centered second moments.
pub fn reference_ssim(a: &ImageTensor, b: &ImageTensor) -> f64 {
    let s = a.shape();
    let (win, sigma) = (11usize, 1.5f64);
    let half = (win / 2) as f64;
    let mut w = vec![vec![0.0; win]; win];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - half, j as f64 - half);
            *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    for row in &mut w {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut channel_sum = 0.0;
    for ch in 0..s.channels {
        let px = |img: &ImageTensor, r: usize, c: usize| f64::from(img.get(r, c, ch));
        let mut acc = 0.0;
        let mut count = 0usize;
        for r0 in 0..=s.height - win {
            for c0 in 0..=s.width - win {
                let (mut mx, mut my) = (0.0, 0.0);
                for i in 0..win {
                    for j in 0..win {
                        mx += w[i][j] * px(a, r0 + i, c0 + j);
                        my += w[i][j] * px(b, r0 + i, c0 + j);
                    }
                }
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for i in 0..win {
                    for j in 0..win {
                        let dx = px(a, r0 + i, c0 + j) - mx;
                        let dy = px(b, r0 + i, c0 + j) - my;
                        vx += w[i][j] * dx * dx;
                        vy += w[i][j] * dy * dy;
                        cxy += w[i][j] * dx * dy;
                    }
                }
                acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        channel_sum += acc / count as f64;
    }
    channel_sum / s.channels as f64
}

pub fn random_image(r: &mut ChaCha8Rng, shape: ImageShape) -> ImageTensor {
    ImageTensor::new(shape, (0..shape.len()).map(|_| r.random::<f32>()).collect()).unwrap()
}

/// Central finite difference of `f` at coordinate `k` of `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[k] += h;
    minus[k] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// Independent forward pass of the two-layer encoder from its weights.
pub fn reference_forward(w1: &[f64], w2: &[f64], m: usize, h: usize, x: &[f64]) -> Vec<f64> {
    let mut act = vec![0.0; h];
    for (j, a) in act.iter_mut().enumerate() {
        let mut z = 0.0;
        for k in 0..m {
            z += w1[j * m + k] * (x[k] - 0.5);
        }
        *a = z.tanh();
    }
    w2.chunks(h).map(|row| row.iter().zip(&act).map(|(w, a)| w * a).sum()).collect()
}
