use serde::{Deserialize, Serialize};

use crate::embedding::Encoder;
use crate::error::{Error, Result};
use crate::navgraph::{shortest_path, GraphEmbeddings, LandmarkSeq, NavGraph, NodeId, SimilarityMatrix};

/// One landmark pinned to a node of the start–target shortest path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedNode {
    /// Zero-based landmark index.
    pub landmark: usize,
    pub node: NodeId,
    /// Index into [`AttackPlan::path`].
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpChoice {
    /// Landmark not placed at this column's position.
    Skip,
    /// Landmark placed at this column's position.
    Take,
}

/// Order-preserving landmark-to-position assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Position of each landmark, strictly increasing.
    pub positions: Vec<usize>,
    pub total: f64,
    /// `table[i][j]`: best total placing the first `i` landmarks among the
    /// first `j` positions; `-inf` where impossible.
    pub table: Vec<Vec<f64>>,
    pub parents: Vec<Vec<DpChoice>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub start: NodeId,
    pub target: NodeId,
    /// Shortest start–target path, both ends included.
    pub path: Vec<NodeId>,
    pub path_cost: f64,
    /// One entry per landmark; the last is the target.
    pub selected: Vec<SelectedNode>,
    /// Sum of path-node similarities over the DP-placed landmarks.
    pub total_similarity: f64,
    #[serde(with = "neg_inf_table")]
    pub dp_table: Vec<Vec<f64>>,
    pub parent_table: Vec<Vec<DpChoice>>,
}

impl AttackPlan {
    /// `v_1..v_n`.
    pub fn selected_nodes(&self) -> Vec<NodeId> {
        self.selected.iter().map(|s| s.node).collect()
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.selected.last().is_some_and(|s| s.node == self.target)
            && self.selected.windows(2).all(|w| w[0].position < w[1].position)
            && self.selected.iter().enumerate().all(|(i, s)| {
                s.landmark == i && self.path.get(s.position) == Some(&s.node)
            });
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("attack plan violates path order or target placement".into()))
        }
    }
}

/// Maximizes `Σ_i sim[pos_i][i]` over strictly increasing `pos`.
///
/// Rows of `sim` are candidate positions, columns are landmarks. Ties keep
/// the earlier position.
pub fn assign_landmarks(sim: &SimilarityMatrix) -> Result<Assignment> {
    let (m, n) = (sim.rows(), sim.cols());
    if m < n {
        return Err(Error::InvalidInput(format!(
            "{n} landmarks cannot be placed on {m} positions"
        )));
    }
    let mut table = vec![vec![f64::NEG_INFINITY; m + 1]; n + 1];
    let mut parents = vec![vec![DpChoice::Skip; m + 1]; n + 1];
    table[0].fill(0.0);
    for i in 1..=n {
        for j in 1..=m {
            let skip = table[i][j - 1];
            let take = table[i - 1][j - 1] + sim.get(j - 1, i - 1);
            if take > skip {
                table[i][j] = take;
                parents[i][j] = DpChoice::Take;
            } else {
                table[i][j] = skip;
            }
        }
    }
    let mut positions = vec![0; n];
    let (mut i, mut j) = (n, m);
    while i > 0 {
        match parents[i][j] {
            DpChoice::Take => {
                positions[i - 1] = j - 1;
                i -= 1;
            }
            DpChoice::Skip => {}
        }
        j -= 1;
    }
    Ok(Assignment { positions, total: table[n][m], table, parents })
}

pub fn select_nodes<E: Encoder + ?Sized>(
    enc: &E,
    g: &NavGraph,
    s: NodeId,
    t: NodeId,
    landmarks: &LandmarkSeq,
) -> Result<AttackPlan> {
    let embs = GraphEmbeddings::compute(enc, g)?;
    select_nodes_with_embeddings(&embs, g, s, t, landmarks)
}

/// Landmarks `1..n-1` go to distinct path positions before the target, in
/// order; landmark `n` goes to the target.
pub fn select_nodes_with_embeddings(
    embs: &GraphEmbeddings,
    g: &NavGraph,
    s: NodeId,
    t: NodeId,
    landmarks: &LandmarkSeq,
) -> Result<AttackPlan> {
    if s == t {
        return Err(Error::InvalidInput(format!("start and target are the same node {s}")));
    }
    let route = shortest_path(g, s, t)?;
    let (m, n) = (route.nodes.len(), landmarks.len());
    if m < n {
        return Err(Error::InfeasibleAssignment { path_len: m, landmarks: n });
    }
    let candidates: Vec<usize> =
        route.nodes[..m - 1].iter().map(|&id| g.index_of(id)).collect::<Result<_>>()?;
    let leading = LandmarkSeq::new(landmarks.entries()[..n - 1].to_vec());
    let assignment = match leading {
        Ok(seq) => assign_landmarks(&embs.similarity_matrix(&candidates, &seq)?)?,
        Err(_) => Assignment {
            positions: Vec::new(),
            total: 0.0,
            table: vec![vec![0.0; m]],
            parents: vec![vec![DpChoice::Skip; m]],
        },
    };
    let mut selected: Vec<SelectedNode> = assignment
        .positions
        .iter()
        .enumerate()
        .map(|(i, &p)| SelectedNode { landmark: i, node: route.nodes[p], position: p })
        .collect();
    selected.push(SelectedNode { landmark: n - 1, node: t, position: m - 1 });
    let plan = AttackPlan {
        start: s,
        target: t,
        path: route.nodes,
        path_cost: route.cost,
        selected,
        total_similarity: assignment.total,
        dp_table: assignment.table,
        parent_table: assignment.parents,
    };
    plan.check()?;
    Ok(plan)
}

/// JSON has no infinity; unreachable DP cells are written as `null`.
mod neg_inf_table {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Option<f64>>> =
            t.iter().map(|r| r.iter().map(|v| v.is_finite().then_some(*v)).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows: Vec<Vec<Option<f64>>> = Vec::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> SimilarityMatrix {
        SimilarityMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn forced_assignment_takes_the_diagonal() {
        let s = matrix(&[&[0.1, 0.9], &[0.8, 0.2]]);
        let a = assign_landmarks(&s).unwrap();
        assert_eq!(a.positions, vec![0, 1]);
        assert_eq!(a.total, 0.1 + 0.2);
    }

    #[test]
    fn picks_best_ordered_placement() {
        let s = matrix(&[&[0.5, 0.0], &[0.9, 0.1], &[0.2, 0.8], &[0.0, 0.7]]);
        let a = assign_landmarks(&s).unwrap();
        assert_eq!(a.positions, vec![1, 2]);
        assert_eq!(a.total, 0.9 + 0.8);
    }

    #[test]
    fn ties_keep_earlier_positions() {
        let s = matrix(&[&[0.5], &[0.5], &[0.5]]);
        assert_eq!(assign_landmarks(&s).unwrap().positions, vec![0]);
    }

    #[test]
    fn too_few_positions() {
        assert!(assign_landmarks(&matrix(&[&[0.5, 0.5]])).is_err());
    }

    #[test]
    fn no_landmarks_is_empty() {
        let s = SimilarityMatrix::from_rows(vec![vec![]; 3]).unwrap();
        let a = assign_landmarks(&s).unwrap();
        assert!(a.positions.is_empty());
        assert_eq!(a.total, 0.0);
    }
}
