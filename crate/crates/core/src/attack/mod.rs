//! Route manipulation: pick the nodes along the start–target shortest path
//! that should be read as each landmark, then alter graph images so the
//! planner reads them that way.

mod modify;
mod select;

pub use modify::{
    find_target_image, find_target_image_from, modify_graph, modify_node_with_text, AttackConfig,
    AttackOutcome, AttackReport, AttackWarning, LandmarkOutcome, ModificationKind,
    ModificationRecord, RankedNode, ATTACK_REPORT_VERSION,
};
pub use select::{
    assign_landmarks, select_nodes, select_nodes_with_embeddings, Assignment, AttackPlan, DpChoice,
    SelectedNode,
};
