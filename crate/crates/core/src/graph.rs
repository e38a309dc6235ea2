//! Recursive construction of the pruned trajectory graph, node
//! classification, termination, sampling and (lossless) export/import.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;

use crate::analysis::ConeTracker;
use crate::error::{Error, Result};
use crate::escape::EmpiricalSet;
use crate::geometry::{classify_displacements, NodeClass};
use crate::market_data::DiscretizationParams;
use crate::pruning::{admissible, Candidate, PruningTables};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub k1: i64,
    pub k2: i64,
    /// Rebalance index.
    pub i: u32,
    /// Elapsed time in Δ steps.
    pub t_steps: u32,
    /// Accumulated variation.
    pub w: u32,
    pub class: NodeClass,
    pub terminal: bool,
}

impl GraphNode {
    pub fn tuple(&self) -> (i64, i64, u32, u32, u32) {
        (self.k1, self.k2, self.i, self.t_steps, self.w)
    }
}

/// Cone-crossing based termination: a node is made terminal once every path
/// into it has completed k upcrossings with (alpha/beta)^k below `threshold`.
#[derive(Debug, Clone, Copy)]
pub struct DubinOptions {
    pub alpha: f64,
    pub beta: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub n_max: u32,
    /// ε ≥ 0: child displacements scaled by (1-ε) and re-snapped to the grid.
    pub hull_shrink: f64,
    /// No node merging: every path is its own branch (needed for
    /// path-dependent payoffs).
    pub tree_mode: bool,
    pub dubin: Option<DubinOptions>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            n_max: 3,
            hull_shrink: 0.0,
            tree_mode: false,
            dubin: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryGraph {
    pub nodes: Vec<GraphNode>,
    pub children: Vec<Vec<usize>>,
    pub parents: Vec<Vec<usize>>,
    pub root: usize,
    /// True when the root has no admissible children.
    pub degenerate: bool,
}

impl TrajectoryGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn is_tree(&self) -> bool {
        self.parents
            .iter()
            .enumerate()
            .all(|(id, p)| p.len() <= 1 || id == self.root)
            && self.parents[self.root].is_empty()
    }

    /// Path root -> node via parent links; requires tree shape.
    pub fn path_to(&self, node: usize) -> Result<Vec<usize>> {
        let mut path = vec![node];
        let mut cur = node;
        while cur != self.root {
            match self.parents[cur].as_slice() {
                [p] => {
                    path.push(*p);
                    cur = *p;
                }
                [] => return Err(Error::InvalidGraph(format!("node {cur} unreachable from root"))),
                _ => return Err(Error::RequiresTree),
            }
        }
        path.reverse();
        Ok(path)
    }

    /// Validated assembly from explicit parts (used by import and fixtures).
    pub fn from_parts(
        nodes: Vec<GraphNode>,
        edges: Vec<(usize, usize)>,
        root: usize,
    ) -> Result<TrajectoryGraph> {
        if root >= nodes.len() {
            return Err(Error::InvalidGraph("root id out of range".into()));
        }
        let mut children = vec![Vec::new(); nodes.len()];
        let mut parents = vec![Vec::new(); nodes.len()];
        for (p, c) in edges {
            if p >= nodes.len() || c >= nodes.len() {
                return Err(Error::InvalidGraph(format!("edge ({p},{c}) out of range")));
            }
            if nodes[c].i != nodes[p].i + 1 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({p},{c}) does not advance the rebalance index by 1"
                )));
            }
            children[p].push(c);
            parents[c].push(p);
        }
        for (id, node) in nodes.iter().enumerate() {
            if node.terminal && !children[id].is_empty() {
                return Err(Error::InvalidGraph(format!("terminal node {id} has children")));
            }
        }
        let degenerate = children[root].is_empty();
        Ok(TrajectoryGraph {
            nodes,
            children,
            parents,
            root,
            degenerate,
        })
    }
}

/// Key of the merge map; in tree mode the parent is part of the identity so
/// nothing merges across branches.
type MergeKey = (Option<usize>, (i64, i64, u32, u32, u32));

fn shrink_move(m: i64, eps: f64) -> i64 {
    if eps == 0.0 {
        m
    } else {
        // scaling the price displacement by (1-ε) and re-snapping to the grid
        // is the same as scaling the integer move, since the step cancels
        (m as f64 * (1.0 - eps)).round() as i64
    }
}

pub fn build(
    root_levels: (i64, i64),
    ne: &EmpiricalSet,
    tables: Option<&PruningTables>,
    disc: &DiscretizationParams,
    options: &BuildOptions,
) -> Result<TrajectoryGraph> {
    if !(0.0..1.0).contains(&options.hull_shrink) {
        return Err(Error::InvalidParameter("hull_shrink must lie in [0, 1)".into()));
    }
    if let Some(d) = &options.dubin {
        if !(0.0 <= d.alpha && d.alpha < d.beta) {
            return Err(Error::InvalidParameter("dubin needs 0 <= alpha < beta".into()));
        }
    }
    if ne.is_empty() {
        return Err(Error::InvalidParameter("empty increment set".into()));
    }

    let mut nodes = vec![GraphNode {
        k1: root_levels.0,
        k2: root_levels.1,
        i: 0,
        t_steps: 0,
        w: 0,
        class: NodeClass::TerminalOnly,
        terminal: options.n_max == 0,
    }];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut parents: Vec<Vec<usize>> = vec![Vec::new()];
    let mut merge: HashMap<MergeKey, usize> = HashMap::new();

    // cone-crossing automaton states per node (only tracked when enabled);
    // key fields: completed count, seeking-tau flag, anchor value bits
    let mut dubin_states: Vec<Vec<(u32, bool, u64)>> = Vec::new();
    if let Some(d) = &options.dubin {
        let mut tracker = ConeTracker::new(root_levels.1 as f64 * disc.dhat2_f);
        tracker.step(
            root_levels.0 as f64 * disc.dhat1_f,
            root_levels.1 as f64 * disc.dhat2_f,
            d.alpha,
            d.beta,
        );
        dubin_states.push(vec![tracker.key()]);
    }

    let mut level: Vec<usize> = vec![0];
    for depth in 0..options.n_max {
        let mut next: Vec<usize> = Vec::new();
        for &nid in &level {
            if nodes[nid].terminal {
                continue;
            }
            let parent = nodes[nid].clone();
            let mut seen: HashMap<(i64, i64, u32, u32, u32), usize> = HashMap::new();
            for inc in &ne.increments {
                let m1 = shrink_move(inc.m1, options.hull_shrink);
                let m2 = shrink_move(inc.m2, options.hull_shrink);
                let tuple = (
                    parent.k1 + m1,
                    parent.k2 + m2,
                    parent.i + 1,
                    parent.t_steps + inc.q,
                    parent.w + inc.eta,
                );
                if seen.contains_key(&tuple) {
                    continue;
                }
                if let Some(tables) = tables {
                    let cand = Candidate {
                        k1: tuple.0,
                        k2: tuple.1,
                        i: tuple.2,
                        t_steps: tuple.3,
                        w: tuple.4,
                    };
                    if admissible(root_levels, &cand, tables, disc).is_err() {
                        continue;
                    }
                }
                let key: MergeKey = (options.tree_mode.then_some(nid), tuple);
                let cid = match merge.get(&key) {
                    Some(&cid) => cid,
                    None => {
                        let cid = nodes.len();
                        nodes.push(GraphNode {
                            k1: tuple.0,
                            k2: tuple.1,
                            i: tuple.2,
                            t_steps: tuple.3,
                            w: tuple.4,
                            class: NodeClass::TerminalOnly,
                            terminal: false,
                        });
                        children.push(Vec::new());
                        parents.push(Vec::new());
                        if options.dubin.is_some() {
                            dubin_states.push(Vec::new());
                        }
                        merge.insert(key, cid);
                        next.push(cid);
                        cid
                    }
                };
                if let Some(d) = &options.dubin {
                    let f1 = tuple.0 as f64 * disc.dhat1_f;
                    let f2 = tuple.1 as f64 * disc.dhat2_f;
                    let mut merged = dubin_states[cid].clone();
                    for &state in &dubin_states[nid] {
                        let mut tracker = ConeTracker::from_key(state);
                        tracker.step(f1, f2, d.alpha, d.beta);
                        merged.push(tracker.key());
                    }
                    merged.sort_unstable();
                    merged.dedup();
                    dubin_states[cid] = merged;
                }
                seen.insert(tuple, cid);
                children[nid].push(cid);
                parents[cid].push(nid);
            }
            if children[nid].is_empty() {
                nodes[nid].terminal = true;
            } else {
                let moves: Vec<(i64, i64)> = children[nid]
                    .iter()
                    .map(|&c| (nodes[c].k1 - parent.k1, nodes[c].k2 - parent.k2))
                    .collect();
                nodes[nid].class = classify_displacements(&moves);
            }
        }
        // trajectories through arbitrage nodes stop at the adjacent nodes
        for &nid in &level {
            if matches!(nodes[nid].class, NodeClass::TypeI | NodeClass::TypeII) {
                for &c in &children[nid].clone() {
                    nodes[c].terminal = true;
                }
            }
        }
        for &cid in &next {
            if depth + 1 == options.n_max {
                nodes[cid].terminal = true;
            }
            if let Some(d) = &options.dubin {
                let all_below = !dubin_states[cid].is_empty()
                    && dubin_states[cid]
                        .iter()
                        .all(|&(count, _, _)| (d.alpha / d.beta).powi(count as i32) < d.threshold);
                if all_below {
                    nodes[cid].terminal = true;
                }
            }
        }
        level = next;
    }

    let degenerate = children[0].is_empty();
    Ok(TrajectoryGraph {
        nodes,
        children,
        parents,
        root: 0,
        degenerate,
    })
}

/// Uniform independent child choice from the root down to a leaf.
pub fn sample_trajectory(graph: &TrajectoryGraph, rng: &mut impl Rng) -> Vec<usize> {
    let mut path = vec![graph.root];
    let mut cur = graph.root;
    while !graph.children[cur].is_empty() {
        let pick = rng.gen_range(0..graph.children[cur].len());
        cur = graph.children[cur][pick];
        path.push(cur);
    }
    path
}

pub fn export(
    graph: &TrajectoryGraph,
    nodes_path: &Path,
    edges_path: &Path,
    adjacency_path: Option<&Path>,
    provenance: Option<&str>,
) -> Result<()> {
    let mut nf = std::fs::File::create(nodes_path)?;
    if let Some(p) = provenance {
        writeln!(nf, "# {p}")?;
    }
    writeln!(nf, "id,k1,k2,i,t,w,class,terminal")?;
    for (id, n) in graph.nodes.iter().enumerate() {
        writeln!(
            nf,
            "{},{},{},{},{},{},{},{}",
            id, n.k1, n.k2, n.i, n.t_steps, n.w, n.class, n.terminal
        )?;
    }
    let mut ef = std::fs::File::create(edges_path)?;
    if let Some(p) = provenance {
        writeln!(ef, "# {p}")?;
    }
    writeln!(ef, "parent_id,child_id")?;
    for (p, cs) in graph.children.iter().enumerate() {
        for &c in cs {
            writeln!(ef, "{p},{c}")?;
        }
    }
    if let Some(path) = adjacency_path {
        let adjacency = serde_json::json!({
            "root": graph.root,
            "degenerate": graph.degenerate,
            "children": graph.children,
        });
        std::fs::write(path, serde_json::to_string_pretty(&adjacency)?)?;
    }
    Ok(())
}

pub fn import(nodes_path: &Path, edges_path: &Path) -> Result<TrajectoryGraph> {
    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(nodes_path)?;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::BadValue {
                row,
                value: String::new(),
                reason: format!("missing field {idx}"),
            })
        };
        let parse_err = |value: &str, reason: &str| Error::BadValue {
            row,
            value: value.to_string(),
            reason: reason.to_string(),
        };
        let id: usize = field(0)?
            .parse()
            .map_err(|_| parse_err(field(0).unwrap_or(""), "bad id"))?;
        if id != nodes.len() {
            return Err(Error::InvalidGraph(format!(
                "node ids must be dense and ascending (saw {id} at row {row})"
            )));
        }
        nodes.push(GraphNode {
            k1: field(1)?.parse().map_err(|_| parse_err(field(1).unwrap_or(""), "bad k1"))?,
            k2: field(2)?.parse().map_err(|_| parse_err(field(2).unwrap_or(""), "bad k2"))?,
            i: field(3)?.parse().map_err(|_| parse_err(field(3).unwrap_or(""), "bad i"))?,
            t_steps: field(4)?.parse().map_err(|_| parse_err(field(4).unwrap_or(""), "bad t"))?,
            w: field(5)?.parse().map_err(|_| parse_err(field(5).unwrap_or(""), "bad w"))?,
            class: field(6)?
                .parse()
                .map_err(|e: String| parse_err(field(6).unwrap_or(""), &e))?,
            terminal: field(7)?
                .parse()
                .map_err(|_| parse_err(field(7).unwrap_or(""), "bad terminal flag"))?,
        });
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(edges_path)?;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |reason: &str| Error::BadValue {
            row,
            value: String::new(),
            reason: reason.to_string(),
        };
        let p: usize = record
            .get(0)
            .ok_or_else(|| bad("missing parent"))?
            .parse()
            .map_err(|_| bad("bad parent id"))?;
        let c: usize = record
            .get(1)
            .ok_or_else(|| bad("missing child"))?
            .parse()
            .map_err(|_| bad("bad child id"))?;
        edges.push((p, c));
    }
    let mut has_parent = vec![false; nodes.len()];
    for &(_, c) in &edges {
        if c < nodes.len() {
            has_parent[c] = true;
        }
    }
    let roots: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|(id, n)| n.i == 0 && !has_parent[*id])
        .map(|(id, _)| id)
        .collect();
    let root = match roots.as_slice() {
        [r] => *r,
        _ => {
            return Err(Error::InvalidGraph(format!(
                "expected exactly one root, found {}",
                roots.len()
            )))
        }
    };
    TrajectoryGraph::from_parts(nodes, edges, root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::escape::EmpiricalIncrement;
    use rand::SeedableRng;

    fn disc() -> DiscretizationParams {
        DiscretizationParams::new("0.01", "0.01").unwrap()
    }

    fn inc(m1: i64, m2: i64, q: u32, eta: u32) -> EmpiricalIncrement {
        EmpiricalIncrement { m1, m2, q, eta }
    }

    fn simple_ne() -> EmpiricalSet {
        EmpiricalSet::from_increments(vec![
            inc(1, 1, 1, 2),
            inc(-1, -1, 1, 2),
            inc(1, -1, 1, 2),
            inc(-1, 1, 1, 2),
        ])
    }

    #[test]
    fn n_max_zero_gives_root_only() {
        let g = build(
            (100, 100),
            &simple_ne(),
            None,
            &disc(),
            &BuildOptions { n_max: 0, ..Default::default() },
        )
        .unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(g.nodes[0].terminal);
    }

    #[test]
    fn unpruned_build_matches_path_enumeration_with_merging() {
        // independent oracle: enumerate all |N_E|^depth paths, dedup tuples
        let ne = simple_ne();
        let n_max = 3u32;
        let g = build(
            (100, 100),
            &ne,
            None,
            &disc(),
            &BuildOptions { n_max, ..Default::default() },
        )
        .unwrap();
        let mut expected: std::collections::HashSet<(i64, i64, u32, u32, u32)> =
            std::collections::HashSet::new();
        let mut frontier = vec![(100i64, 100i64, 0u32, 0u32, 0u32)];
        expected.insert(frontier[0]);
        for _ in 0..n_max {
            let mut nf = Vec::new();
            for &(k1, k2, i, t, w) in &frontier {
                for inc in &ne.increments {
                    let tup = (k1 + inc.m1, k2 + inc.m2, i + 1, t + inc.q, w + inc.eta);
                    if expected.insert(tup) {
                        nf.push(tup);
                    }
                }
            }
            frontier = nf;
        }
        let got: std::collections::HashSet<_> = g.nodes.iter().map(|n| n.tuple()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn symmetric_set_classifies_root_free() {
        let g = build(
            (100, 100),
            &simple_ne(),
            None,
            &disc(),
            &BuildOptions { n_max: 1, ..Default::default() },
        )
        .unwrap();
        assert_eq!(g.nodes[g.root].class, NodeClass::ArbitrageFree);
        assert!(!g.degenerate);
        for &c in &g.children[g.root] {
            assert!(g.nodes[c].terminal);
            assert_eq!(g.nodes[c].class, NodeClass::TerminalOnly);
        }
    }

    #[test]
    fn one_sided_set_stops_after_arbitrage_node() {
        let ne = EmpiricalSet::from_increments(vec![inc(1, 0, 1, 1), inc(2, 1, 1, 3)]);
        let g = build(
            (100, 100),
            &ne,
            None,
            &disc(),
            &BuildOptions { n_max: 4, ..Default::default() },
        )
        .unwrap();
        assert_eq!(g.nodes[g.root].class, NodeClass::TypeII);
        // children terminal, nothing deeper than i=1
        assert!(g.nodes.iter().all(|n| n.i <= 1));
        for &c in &g.children[g.root] {
            assert!(g.nodes[c].terminal);
        }
    }

    #[test]
    fn tree_mode_disables_merging() {
        let ne = simple_ne();
        let opts_dag = BuildOptions { n_max: 2, ..Default::default() };
        let opts_tree = BuildOptions { n_max: 2, tree_mode: true, ..Default::default() };
        let dag = build((100, 100), &ne, None, &disc(), &opts_dag).unwrap();
        let tree = build((100, 100), &ne, None, &disc(), &opts_tree).unwrap();
        assert!(tree.is_tree());
        assert!(tree.len() > dag.len());
        // 1 + 4 + 16 nodes in the tree
        assert_eq!(tree.len(), 21);
    }

    #[test]
    fn hull_shrink_identity_at_zero_and_shrinks_moves() {
        let ne = EmpiricalSet::from_increments(vec![
            inc(10, 0, 1, 10),
            inc(-10, 0, 1, 10),
            inc(0, 10, 1, 10),
            inc(0, -10, 1, 10),
        ]);
        let base = build(
            (100, 100),
            &ne,
            None,
            &disc(),
            &BuildOptions { n_max: 1, ..Default::default() },
        )
        .unwrap();
        let same = build(
            (100, 100),
            &ne,
            None,
            &disc(),
            &BuildOptions { n_max: 1, hull_shrink: 0.0, ..Default::default() },
        )
        .unwrap();
        let shrunk = build(
            (100, 100),
            &ne,
            None,
            &disc(),
            &BuildOptions { n_max: 1, hull_shrink: 0.05, ..Default::default() },
        )
        .unwrap();
        let tuples = |g: &TrajectoryGraph| -> Vec<_> { g.nodes.iter().map(|n| n.tuple()).collect() };
        assert_eq!(tuples(&base), tuples(&same));
        // 10 * 0.95 = 9.5 rounds away from zero to 10; use a clearer eps
        let shrunk2 = build(
            (100, 100),
            &ne,
            None,
            &disc(),
            &BuildOptions { n_max: 1, hull_shrink: 0.1, ..Default::default() },
        )
        .unwrap();
        assert!(shrunk.len() == base.len());
        let max_move = shrunk2.nodes[1..]
            .iter()
            .map(|n| (n.k1 - 100).abs().max((n.k2 - 100).abs()))
            .max()
            .unwrap();
        assert_eq!(max_move, 9);
    }

    #[test]
    fn sampling_is_deterministic_and_roughly_uniform() {
        let g = build(
            (100, 100),
            &simple_ne(),
            None,
            &disc(),
            &BuildOptions { n_max: 2, ..Default::default() },
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = sample_trajectory(&g, &mut rng);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let b = sample_trajectory(&g, &mut rng);
        assert_eq!(a, b);
        assert_eq!(g.nodes[*a.last().unwrap()].terminal, true);

        // frequency of the root's first child over many samples
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let n = 10_000;
        let first = g.children[g.root][0];
        let mut hits = 0;
        for _ in 0..n {
            let path = sample_trajectory(&g, &mut rng);
            if path[1] == first {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let expect = 1.0 / g.children[g.root].len() as f64;
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((p - expect).abs() < 3.0 * sigma + 1e-9, "p={p}");
    }

    #[test]
    fn chain_graph_sampling_is_forced() {
        let ne = EmpiricalSet::from_increments(vec![inc(0, 0, 1, 0)]);
        let g = build(
            (100, 100),
            &ne,
            None,
            &disc(),
            &BuildOptions { n_max: 3, ..Default::default() },
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let path = sample_trajectory(&g, &mut rng);
        assert_eq!(path.len(), 4);
    }

    #[test]
    fn export_import_roundtrip() {
        let g = build(
            (100, 100),
            &simple_ne(),
            None,
            &disc(),
            &BuildOptions { n_max: 2, ..Default::default() },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let nodes = dir.path().join("nodes.csv");
        let edges = dir.path().join("edges.csv");
        let adj = dir.path().join("adjacency.json");
        export(&g, &nodes, &edges, Some(&adj), Some("cfg=test")).unwrap();
        let g2 = import(&nodes, &edges).unwrap();
        assert_eq!(g.nodes, g2.nodes);
        assert_eq!(g.children, g2.children);
        assert_eq!(g.root, g2.root);
        assert!(adj.exists());
    }

    #[test]
    fn export_import_root_only() {
        let g = build(
            (7, 9),
            &simple_ne(),
            None,
            &disc(),
            &BuildOptions { n_max: 0, ..Default::default() },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let nodes = dir.path().join("nodes.csv");
        let edges = dir.path().join("edges.csv");
        export(&g, &nodes, &edges, None, None).unwrap();
        let g2 = import(&nodes, &edges).unwrap();
        assert_eq!(g2.len(), 1);
        assert_eq!(g2.edge_count(), 0);
    }

    #[test]
    fn path_invariants_hold() {
        let g = build(
            (100, 100),
            &simple_ne(),
            None,
            &disc(),
            &BuildOptions { n_max: 3, ..Default::default() },
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let path = sample_trajectory(&g, &mut rng);
            for pair in path.windows(2) {
                let (a, b) = (&g.nodes[pair[0]], &g.nodes[pair[1]]);
                assert_eq!(b.i, a.i + 1);
                assert!(b.t_steps > a.t_steps);
                assert!(b.w >= a.w);
            }
        }
    }

    #[test]
    fn dubin_termination_truncates_confirmed_crossers() {
        // root ratio f2/f1 well below alpha, single huge up-move of f2
        // completes one crossing immediately
        let ne = EmpiricalSet::from_increments(vec![inc(0, 200, 1, 200), inc(0, -10, 1, 10)]);
        let no_dubin = build(
            (100, 20),
            &ne,
            None,
            &disc(),
            &BuildOptions { n_max: 3, ..Default::default() },
        )
        .unwrap();
        let with_dubin = build(
            (100, 20),
            &ne,
            None,
            &disc(),
            &BuildOptions {
                n_max: 3,
                dubin: Some(DubinOptions { alpha: 0.5, beta: 1.5, threshold: 0.5 }),
                ..Default::default()
            },
        )
        .unwrap();
        // (alpha/beta)^1 = 1/3 < 0.5: nodes whose every path completed one
        // crossing stop; the pruned graph is strictly smaller
        assert!(with_dubin.len() < no_dubin.len());
    }
}
