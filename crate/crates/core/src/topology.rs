//! Chromatic structure of adjacency graphs: bipartiteness, odd cycles,
//! conflict sets and per-image / per-corpus summaries.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cag::{degree_histogram, AdjacencyGraph};
use crate::error::{DiscoError, Result};

/// Largest graph accepted by [`exact_min_oct`].
pub const EXACT_OCT_MAX_NODES: usize = 20;
/// Largest graph accepted by [`enumerate_odd_cycles`].
pub const CYCLE_ENUM_MAX_NODES: usize = 10_000;
pub const MAX_CYCLE_CAP: usize = 15;
pub const DEFAULT_CYCLE_CAP: usize = 11;

/// Outcome of a bipartiteness test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteCheck {
    pub is_bipartite: bool,
    /// Nodes of an odd cycle `v0 - v1 - … - vk - v0` when not bipartite.
    pub odd_cycle: Option<Vec<usize>>,
}

struct Layering {
    color: Vec<u8>,
    parent: Vec<usize>,
    depth: Vec<usize>,
}

/// BFS from the lowest id of each component; layer parity gives colours 1/2.
/// Nodes with `removed[v]` are skipped entirely.
fn bfs_layering(g: &AdjacencyGraph, removed: Option<&[bool]>) -> Layering {
    let n = g.node_count();
    let skip = |v: usize| removed.is_some_and(|r| r[v]);
    let mut color = vec![0u8; n + 1];
    let mut parent = vec![0usize; n + 1];
    let mut depth = vec![0usize; n + 1];
    let mut queue = VecDeque::new();
    for root in g.nodes() {
        if color[root] != 0 || skip(root) {
            continue;
        }
        color[root] = 1;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if color[v] == 0 && !skip(v) {
                    color[v] = 3 - color[u];
                    parent[v] = u;
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    Layering {
        color,
        parent,
        depth,
    }
}

fn monochromatic(
    g: &AdjacencyGraph,
    layering: &Layering,
    removed: Option<&[bool]>,
) -> Vec<(usize, usize)> {
    let skip = |v: usize| removed.is_some_and(|r| r[v]);
    g.edges()
        .iter()
        .copied()
        .filter(|&(a, b)| !skip(a) && !skip(b) && layering.color[a] == layering.color[b])
        .collect()
}

/// Two-colourability test with an odd-cycle witness.
pub fn is_bipartite(g: &AdjacencyGraph) -> BipartiteCheck {
    let layering = bfs_layering(g, None);
    let Some(&(a, b)) = monochromatic(g, &layering, None).first() else {
        return BipartiteCheck {
            is_bipartite: true,
            odd_cycle: None,
        };
    };
    // Equal parity endpoints: climb to the common ancestor.
    let (mut x, mut y) = (a, b);
    let mut left = vec![x];
    let mut right = vec![y];
    while layering.depth[x] > layering.depth[y] {
        x = layering.parent[x];
        left.push(x);
    }
    while layering.depth[y] > layering.depth[x] {
        y = layering.parent[y];
        right.push(y);
    }
    while x != y {
        x = layering.parent[x];
        y = layering.parent[y];
        left.push(x);
        right.push(y);
    }
    right.pop();
    left.extend(right.into_iter().rev());
    BipartiteCheck {
        is_bipartite: false,
        odd_cycle: Some(left),
    }
}

/// True when the subgraph induced by the nodes not flagged in `removed`
/// is bipartite. `removed` is indexed by node id.
pub fn is_bipartite_without(g: &AdjacencyGraph, removed: &[bool]) -> bool {
    let layering = bfs_layering(g, Some(removed));
    monochromatic(g, &layering, Some(removed)).is_empty()
}

/// Counts simple odd cycles of each odd length `3..=max_len`.
///
/// Each cycle is enumerated from its smallest node in both directions and
/// halved. Paths that cannot close within the cap are pruned with BFS
/// distances back to the start.
pub fn enumerate_odd_cycles(g: &AdjacencyGraph, max_len: usize) -> Result<BTreeMap<usize, u64>> {
    if max_len.is_multiple_of(2) || !(3..=MAX_CYCLE_CAP).contains(&max_len) {
        return Err(DiscoError::Domain(format!(
            "cycle length cap must be odd and within 3..={MAX_CYCLE_CAP}, got {max_len}"
        )));
    }
    if g.node_count() > CYCLE_ENUM_MAX_NODES {
        return Err(DiscoError::Size(format!(
            "cycle enumeration supports at most {CYCLE_ENUM_MAX_NODES} nodes, got {}",
            g.node_count()
        )));
    }
    let n = g.node_count();
    let mut counts = vec![0u64; max_len + 1];
    let mut dist = vec![usize::MAX; n + 1];
    let mut on_path = vec![false; n + 1];
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();

    for start in g.nodes() {
        // distances to `start` within nodes >= start, bounded by the cap
        for &v in &touched {
            dist[v] = usize::MAX;
        }
        touched.clear();
        dist[start] = 0;
        touched.push(start);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            if dist[u] * 2 >= max_len {
                continue;
            }
            for &v in g.neighbors(u) {
                if v > start && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    touched.push(v);
                    queue.push_back(v);
                }
            }
        }
        on_path[start] = true;
        extend_path(
            g,
            start,
            start,
            0,
            max_len,
            &dist,
            &mut on_path,
            &mut counts,
        );
        on_path[start] = false;
    }

    Ok((3..=max_len)
        .step_by(2)
        .map(|len| (len, counts[len] / 2))
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn extend_path(
    g: &AdjacencyGraph,
    start: usize,
    tip: usize,
    edges_so_far: usize,
    max_len: usize,
    dist: &[usize],
    on_path: &mut [bool],
    counts: &mut [u64],
) {
    for &next in g.neighbors(tip) {
        let len = edges_so_far + 1;
        if next == start {
            if len >= 3 && len % 2 == 1 {
                counts[len] += 1;
            }
            continue;
        }
        if next < start || on_path[next] || dist[next] == usize::MAX || len + dist[next] > max_len {
            continue;
        }
        on_path[next] = true;
        extend_path(g, start, next, len, max_len, dist, on_path, counts);
        on_path[next] = false;
    }
}

/// Result of the BFS conflict heuristic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictAnalysis {
    /// Tentative BFS colour per node id (slot 0 unused).
    pub two_coloring: Vec<u8>,
    pub monochromatic_edges: Vec<(usize, usize)>,
    /// Sorted.
    pub conflict_set: Vec<usize>,
    pub secondary_conflict_edges: Vec<(usize, usize)>,
    /// Sorted.
    pub secondary_conflict_nodes: Vec<usize>,
}

impl ConflictAnalysis {
    pub fn is_conflict(&self, v: usize) -> bool {
        self.conflict_set.binary_search(&v).is_ok()
    }
}

/// Approximates a minimum odd cycle transversal.
///
/// BFS layer parity gives a tentative 2-colouring; the monochromatic edges
/// are then covered greedily by the node of highest remaining degree
/// (lowest id on ties). Removing the cover leaves only bichromatic edges,
/// so the remainder is bipartite.
pub fn heuristic_conflict_set(g: &AdjacencyGraph) -> ConflictAnalysis {
    let n = g.node_count();
    let layering = bfs_layering(g, None);
    let mono = monochromatic(g, &layering, None);

    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (i, &(a, b)) in mono.iter().enumerate() {
        incident[a].push(i);
        incident[b].push(i);
    }
    let mut degree: Vec<usize> = incident.iter().map(Vec::len).collect();
    let mut alive = vec![true; mono.len()];
    let mut remaining = mono.len();
    let mut in_conflict = vec![false; n + 1];
    while remaining > 0 {
        let pick = (1..=n)
            .max_by(|&a, &b| degree[a].cmp(&degree[b]).then(b.cmp(&a)))
            .expect("monochromatic edges imply nodes");
        in_conflict[pick] = true;
        for &e in &incident[pick] {
            if alive[e] {
                alive[e] = false;
                remaining -= 1;
                let (a, b) = mono[e];
                degree[a] -= 1;
                degree[b] -= 1;
            }
        }
    }
    assert!(
        is_bipartite_without(g, &in_conflict),
        "conflict cover must leave a bipartite remainder"
    );

    let conflict_set: Vec<usize> = (1..=n).filter(|&v| in_conflict[v]).collect();
    let secondary_conflict_edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| in_conflict[a] && in_conflict[b])
        .collect();
    let mut secondary_conflict_nodes: Vec<usize> = secondary_conflict_edges
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect();
    secondary_conflict_nodes.sort_unstable();
    secondary_conflict_nodes.dedup();

    ConflictAnalysis {
        two_coloring: layering.color,
        monochromatic_edges: mono,
        conflict_set,
        secondary_conflict_edges,
        secondary_conflict_nodes,
    }
}

fn bitmask_bipartite(adj: &[u32], keep: u32) -> bool {
    let mut color_a = 0u32;
    let mut seen = 0u32;
    let mut pending = keep;
    while pending != 0 {
        let root = pending.trailing_zeros();
        let mut frontier = 1u32 << root;
        seen |= frontier;
        color_a |= frontier;
        let mut side_a = true;
        while frontier != 0 {
            let mut next = 0u32;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                let nb = adj[v] & keep;
                // a neighbour on the same side means an odd cycle
                let same = if side_a {
                    nb & color_a
                } else {
                    nb & seen & !color_a
                };
                if same != 0 {
                    return false;
                }
                next |= nb & !seen;
            }
            seen |= next;
            side_a = !side_a;
            if side_a {
                color_a |= next;
            }
            frontier = next;
        }
        pending = keep & !seen;
    }
    true
}

/// Minimum odd cycle transversal by size-ordered subset enumeration.
///
/// Among minimum sets the lexicographically smallest id list is returned.
pub fn exact_min_oct(g: &AdjacencyGraph) -> Result<Vec<usize>> {
    let n = g.node_count();
    if n > EXACT_OCT_MAX_NODES {
        return Err(DiscoError::Size(format!(
            "exact OCT supports at most {EXACT_OCT_MAX_NODES} nodes, got {n}"
        )));
    }
    let adj: Vec<u32> = (1..=n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << (w - 1)))
        .collect();
    let all: u32 = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
    for size in 0..=n {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let removed = combo.iter().fold(0u32, |m, &i| m | 1 << i);
            if bitmask_bipartite(&adj, all & !removed) {
                return Ok(combo.iter().map(|i| i + 1).collect());
            }
            // next combination in lexicographic order
            let Some(pos) = (0..size).rev().find(|&i| combo[i] < n - size + i) else {
                break;
            };
            combo[pos] += 1;
            for i in pos + 1..size {
                combo[i] = combo[i - 1] + 1;
            }
        }
    }
    unreachable!("removing every node leaves an empty, bipartite graph")
}

/// True when some four nodes are pairwise adjacent.
pub fn contains_k4(g: &AdjacencyGraph) -> bool {
    for &(a, b) in g.edges() {
        let common: Vec<usize> = intersect_sorted(g.neighbors(a), g.neighbors(b))
            .into_iter()
            .filter(|&c| c > b)
            .collect();
        for (i, &c) in common.iter().enumerate() {
            if common[i + 1..].iter().any(|&d| g.has_edge(c, d)) {
                return true;
            }
        }
    }
    false
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Options for [`analyze_graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub max_cycle_len: usize,
    /// Also compute the exact transversal when the graph is small enough.
    pub exact: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            max_cycle_len: DEFAULT_CYCLE_CAP,
            exact: false,
        }
    }
}

/// Topological statistics for one image or an aggregate of many.
///
/// Ratios are always derived from the stored counts, so aggregation is a
/// matter of summing counts and recomputing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub image_count: usize,
    pub node_count: usize,
    pub edge_count: usize,
    pub max_degree: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub prop_deg_le_3: f64,
    pub is_bipartite: bool,
    pub non_bipartite_images: usize,
    pub odd_cycle_cap: usize,
    pub odd_cycle_count_by_length: BTreeMap<usize, u64>,
    pub prop_3cycles_among_odd: f64,
    pub conflict_node_count: usize,
    pub secondary_conflict_node_count: usize,
    pub bipartite_node_ratio: f64,
    pub conflict_node_ratio: f64,
    pub secondary_conflict_node_ratio: f64,
    pub exact_conflict_node_count: Option<usize>,
    pub exact_conflict_node_ratio: Option<f64>,
    pub contains_k4: bool,
    pub k4_images: usize,
}

fn ratio(num: usize, den: usize, vacuous: f64) -> f64 {
    if den == 0 {
        vacuous
    } else {
        num as f64 / den as f64
    }
}

impl TopologyReport {
    fn finalize(&mut self) {
        let n = self.node_count;
        let low: usize = self
            .degree_histogram
            .iter()
            .filter(|(&d, _)| d <= 3)
            .map(|(_, &c)| c)
            .sum();
        self.prop_deg_le_3 = ratio(low, n, 1.0);
        let odd: u64 = self.odd_cycle_count_by_length.values().sum();
        let tri = self.odd_cycle_count_by_length.get(&3).copied().unwrap_or(0);
        self.prop_3cycles_among_odd = if odd == 0 {
            0.0
        } else {
            tri as f64 / odd as f64
        };
        self.conflict_node_ratio = ratio(self.conflict_node_count, n, 0.0);
        self.bipartite_node_ratio = 1.0 - self.conflict_node_ratio;
        self.secondary_conflict_node_ratio = ratio(self.secondary_conflict_node_count, n, 0.0);
        self.exact_conflict_node_ratio = self.exact_conflict_node_count.map(|c| ratio(c, n, 0.0));
    }

    pub const CSV_HEADER: &'static str = "name,prop_deg_le_3,prop_3cycles_among_odd,bipartite_node_ratio,conflict_node_ratio,secondary_conflict_node_ratio,images,non_bipartite_images,nodes,edges,max_degree,conflict_nodes,secondary_conflict_nodes,exact_conflict_node_ratio,k4_images";

    /// One CSV row; the first five value columns follow the cross-dataset
    /// table layout, the rest are extras.
    pub fn csv_row(&self, name: &str) -> String {
        let exact = self
            .exact_conflict_node_ratio
            .map(|r| format!("{r:.6}"))
            .unwrap_or_default();
        format!(
            "{name},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{},{},{exact},{}",
            self.prop_deg_le_3,
            self.prop_3cycles_among_odd,
            self.bipartite_node_ratio,
            self.conflict_node_ratio,
            self.secondary_conflict_node_ratio,
            self.image_count,
            self.non_bipartite_images,
            self.node_count,
            self.edge_count,
            self.max_degree,
            self.conflict_node_count,
            self.secondary_conflict_node_count,
            self.k4_images,
        )
    }

    pub const CYCLE_CSV_HEADER: &'static str = "name,length,count";

    pub fn cycle_csv_rows(&self, name: &str) -> String {
        let mut out = String::new();
        for (len, count) in &self.odd_cycle_count_by_length {
            let _ = writeln!(out, "{name},{len},{count}");
        }
        out
    }
}

pub fn analyze_graph(g: &AdjacencyGraph, opts: &AnalysisOptions) -> Result<TopologyReport> {
    let cycles = enumerate_odd_cycles(g, opts.max_cycle_len)?;
    let conflicts = heuristic_conflict_set(g);
    let exact = if opts.exact && g.node_count() <= EXACT_OCT_MAX_NODES {
        Some(exact_min_oct(g)?.len())
    } else {
        None
    };
    let bipartite = is_bipartite(g).is_bipartite;
    let k4 = contains_k4(g);
    let mut report = TopologyReport {
        image_count: 1,
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        max_degree: g.max_degree(),
        degree_histogram: degree_histogram(g),
        prop_deg_le_3: 0.0,
        is_bipartite: bipartite,
        non_bipartite_images: usize::from(!bipartite),
        odd_cycle_cap: opts.max_cycle_len,
        odd_cycle_count_by_length: cycles,
        prop_3cycles_among_odd: 0.0,
        conflict_node_count: conflicts.conflict_set.len(),
        secondary_conflict_node_count: conflicts.secondary_conflict_nodes.len(),
        bipartite_node_ratio: 0.0,
        conflict_node_ratio: 0.0,
        secondary_conflict_node_ratio: 0.0,
        exact_conflict_node_count: exact,
        exact_conflict_node_ratio: None,
        contains_k4: k4,
        k4_images: usize::from(k4),
    };
    report.finalize();
    Ok(report)
}

/// Node-weighted aggregate of per-image reports.
pub fn summarize_corpus(reports: &[TopologyReport]) -> Result<TopologyReport> {
    let (first, rest) = reports
        .split_first()
        .ok_or_else(|| DiscoError::Domain("cannot summarize an empty corpus".into()))?;
    let mut agg = first.clone();
    for r in rest {
        agg.image_count += r.image_count;
        agg.node_count += r.node_count;
        agg.edge_count += r.edge_count;
        agg.max_degree = agg.max_degree.max(r.max_degree);
        for (&d, &c) in &r.degree_histogram {
            *agg.degree_histogram.entry(d).or_insert(0) += c;
        }
        agg.is_bipartite &= r.is_bipartite;
        agg.non_bipartite_images += r.non_bipartite_images;
        agg.odd_cycle_cap = agg.odd_cycle_cap.max(r.odd_cycle_cap);
        for (&len, &c) in &r.odd_cycle_count_by_length {
            *agg.odd_cycle_count_by_length.entry(len).or_insert(0) += c;
        }
        agg.conflict_node_count += r.conflict_node_count;
        agg.secondary_conflict_node_count += r.secondary_conflict_node_count;
        agg.exact_conflict_node_count = agg
            .exact_conflict_node_count
            .zip(r.exact_conflict_node_count)
            .map(|(a, b)| a + b);
        agg.contains_k4 |= r.contains_k4;
        agg.k4_images += r.k4_images;
    }
    agg.finalize();
    Ok(agg)
}
