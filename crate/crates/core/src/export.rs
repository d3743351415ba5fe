//! Text export formats: tree CSV/DOT/Newick, distance-matrix CSV/JSON,
//! coalescent-realization JSON, and the report table.
//!
//! CSV schemas carry a versioned header comment line so downstream plotting
//! stays stable.

use crate::builders::{FrozenTree, VertexId};
use crate::continuum::{CoalescentRealization, NodeKind};
use crate::metrics::DistanceSample;
use crate::verify::TestReport;
use std::fmt::Write as _;

/// Flat CSV: `vertex_id,parent_id,vertex_label,edge_label,birth`.
pub fn tree_csv(tree: &FrozenTree) -> String {
    let mut out = String::new();
    out.push_str("# freezetree tree v1\n");
    out.push_str("vertex_id,parent_id,vertex_label,edge_label,birth\n");
    for v in 0..tree.vertex_count() as VertexId {
        let parent = tree.parent(v).map(|p| p.to_string()).unwrap_or_default();
        let edge = tree.edge_label(v).map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{v},{parent},{label},{edge},{birth}",
            label = tree.vertex_label(v),
            birth = tree.birth(v)
        );
    }
    out
}

/// GraphViz DOT with blue frozen vertices, green active vertices and the
/// appearance step as edge label.
pub fn tree_dot(tree: &FrozenTree) -> String {
    let mut out = String::from("graph tree {\n  node [style=filled];\n");
    for v in 0..tree.vertex_count() as VertexId {
        let color = if tree.is_active(v) {
            "palegreen"
        } else {
            "lightblue"
        };
        let _ = writeln!(
            out,
            "  v{v} [label=\"{}\", fillcolor={color}];",
            tree.vertex_label(v)
        );
    }
    for v in 0..tree.vertex_count() as VertexId {
        if let Some(p) = tree.parent(v) {
            let _ = writeln!(
                out,
                "  v{p} -- v{v} [label=\"{}\"];",
                tree.edge_label(v).expect("non-root edge")
            );
        }
    }
    out.push_str("}\n");
    out
}

/// Newick with vertex labels on every node and unit branch lengths.
pub fn tree_newick(tree: &FrozenTree) -> String {
    let children = tree.children_lists();
    let mut out = String::new();
    // Iterative post-order serialization to stay safe on deep trees.
    enum Item {
        Open(VertexId),
        Close(VertexId),
        Comma,
    }
    let mut stack = vec![Item::Open(tree.root())];
    while let Some(item) = stack.pop() {
        match item {
            Item::Open(v) => {
                let kids = &children[v as usize];
                if kids.is_empty() {
                    let _ = write!(out, "{}", tree.vertex_label(v));
                    if tree.parent(v).is_some() {
                        out.push_str(":1");
                    }
                } else {
                    out.push('(');
                    stack.push(Item::Close(v));
                    for (idx, &c) in kids.iter().enumerate().rev() {
                        stack.push(Item::Open(c));
                        if idx > 0 {
                            stack.push(Item::Comma);
                        }
                    }
                }
            }
            Item::Close(v) => {
                out.push(')');
                let _ = write!(out, "{}", tree.vertex_label(v));
                if tree.parent(v).is_some() {
                    out.push_str(":1");
                }
            }
            Item::Comma => out.push(','),
        }
    }
    out.push(';');
    out
}

/// Distance matrix CSV: header comment records mode, normalization, and n;
/// the first row lists the sampled vertex ids.
pub fn matrix_csv(sample: &DistanceSample) -> String {
    let k = sample.k();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# freezetree distmat v1 mode={} normalization={} n={}",
        sample.mode, sample.normalization, sample.n
    );
    let ids: Vec<String> = sample.vertex_ids.iter().map(|v| format!("v{v}")).collect();
    let _ = writeln!(out, ",{}", ids.join(","));
    for (i, id) in ids.iter().enumerate() {
        let row: Vec<String> = (0..k).map(|j| format!("{}", sample.entry(i, j))).collect();
        let _ = writeln!(out, "{id},{}", row.join(","));
    }
    out
}

pub fn matrix_json(sample: &DistanceSample) -> String {
    serde_json::to_string_pretty(sample).expect("matrix serializes")
}

/// Continuum realization JSON: births, merge events with times and child
/// nodes, surviving-cluster count.
pub fn realization_json(real: &CoalescentRealization) -> String {
    let merges: Vec<serde_json::Value> = real
        .forest
        .nodes
        .iter()
        .filter_map(|n| match n.kind {
            NodeKind::Internal(a, b) => Some(serde_json::json!({
                "time": n.time,
                "left": a,
                "right": b,
            })),
            NodeKind::Leaf(_) => None,
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "k": real.k(),
        "births": real.births,
        "merge_times": real.merge_times,
        "merges": merges,
        "surviving_clusters": real.surviving,
    }))
    .expect("realization serializes")
}

/// One JSON line per report.
pub fn reports_jsonl(reports: &[TestReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(out, "{}", serde_json::to_string(r).expect("report serializes"));
    }
    out
}

/// Human-readable summary table.
pub fn reports_table(reports: &[TestReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(out, "{}", r.summary_line());
        if let Some(notes) = &r.notes {
            let _ = writeln!(out, "      {notes}");
        }
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    let _ = writeln!(out, "{} checks, {} failed", reports.len(), failed);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_coalescent;
    use crate::continuum::{sample_coalescent, FunctionTable};
    use crate::metrics::{sample_distance_matrix, DistanceMode};
    use crate::sequences::{FreezeSequence, HarmonicSums};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture() -> (FreezeSequence, crate::builders::FrozenTree, crate::builders::MergeGenealogy)
    {
        let s = FreezeSequence::from_signs("+-++-").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (tree, gen) = build_coalescent(&s, &mut rng).unwrap();
        (s, tree, gen)
    }

    #[test]
    fn csv_has_header_and_all_vertices() {
        let (_, tree, _) = fixture();
        let csv = tree_csv(&tree);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "# freezetree tree v1");
        assert_eq!(
            lines.next().unwrap(),
            "vertex_id,parent_id,vertex_label,edge_label,birth"
        );
        assert_eq!(csv.lines().count(), 2 + tree.vertex_count());
    }

    #[test]
    fn dot_mentions_colors_and_edges() {
        let (_, tree, _) = fixture();
        let dot = tree_dot(&tree);
        assert!(dot.contains("lightblue"));
        assert!(dot.contains("palegreen"));
        assert_eq!(
            dot.matches(" -- ").count(),
            tree.vertex_count() - 1
        );
    }

    #[test]
    fn newick_is_balanced_and_terminated() {
        let (_, tree, _) = fixture();
        let nwk = tree_newick(&tree);
        assert!(nwk.ends_with(';'));
        assert_eq!(nwk.matches('(').count(), nwk.matches(')').count());
    }

    #[test]
    fn matrix_csv_shape() {
        let (s, tree, gen) = fixture();
        let sums = HarmonicSums::new(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m =
            sample_distance_matrix(&tree, &gen, &sums, 3, DistanceMode::Graph, 0.5, &mut rng)
                .unwrap();
        let csv = matrix_csv(&m);
        assert!(csv.starts_with("# freezetree distmat v1 mode=graph"));
        assert_eq!(csv.lines().count(), 2 + 3);
    }

    #[test]
    fn realization_json_fields() {
        let table = FunctionTable::power(0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let real = sample_coalescent(&table, 4, &mut rng);
        let json = realization_json(&real);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["k"], 4);
        assert_eq!(value["births"].as_array().unwrap().len(), 4);
        assert!(value["surviving_clusters"].as_u64().unwrap() >= 1);
    }
}
