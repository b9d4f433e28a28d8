//! Cell adjacency graphs built from instance masks.
//!
//! Two instances are adjacent when the 3×3 dilation of one intersects the
//! other, which is the same as some pair of their pixels lying within
//! Chebyshev distance 1 (8-connected contact). Dilation is clipped at the
//! image border.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{DiscoError, Result};
use crate::mask_io::InstanceMask;

/// Undirected simple graph over instance ids `1..=N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdjacencyGraph {
    node_count: usize,
    // slot 0 unused so that ids index directly
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl AdjacencyGraph {
    pub fn edgeless(node_count: usize) -> Self {
        Self {
            node_count,
            adjacency: vec![Vec::new(); node_count + 1],
            edges: Vec::new(),
        }
    }

    /// Builds a graph from unordered pairs. Duplicates (in either
    /// orientation) collapse; self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(DiscoError::Domain(format!("self-loop on node {a}")));
            }
            if a == 0 || b == 0 || a > node_count || b > node_count {
                return Err(DiscoError::Domain(format!(
                    "edge ({a},{b}) outside node range 1..={node_count}"
                )));
            }
            list.push((a.min(b), a.max(b)));
        }
        Ok(Self::from_normalized(node_count, list))
    }

    fn from_normalized(node_count: usize, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); node_count + 1];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            node_count,
            adjacency,
            edges,
        }
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let edges = (1..=n)
            .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
            .collect();
        Self::from_normalized(n, edges)
    }

    /// Cycle `1-2-…-n-1`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least 3 nodes");
        let edges = (1..=n)
            .map(|a| (a, a % n + 1))
            .map(|(a, b)| (a.min(b), a.max(b)));
        Self::from_normalized(n, edges.collect())
    }

    /// Path `1-2-…-n`.
    pub fn path(n: usize) -> Self {
        Self::from_normalized(n, (1..n).map(|a| (a, a + 1)).collect())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn nodes(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.node_count
    }

    /// Sorted neighbour ids.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.nodes().map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        if a == 0 || a > self.node_count {
            return false;
        }
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Relabels node `v` as `perm[v - 1]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.node_count {
            return Err(DiscoError::Shape("permutation length mismatch".into()));
        }
        let edges = self.edges.iter().map(|&(a, b)| (perm[a - 1], perm[b - 1]));
        Self::from_edges(self.node_count, edges)
    }

    /// `"N\nM\ni j\n…"` with 1-based ids.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n{}\n", self.node_count, self.edges.len());
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut header = |what: &str| -> Result<usize> {
            lines
                .next()
                .and_then(|l| l.parse().ok())
                .ok_or_else(|| DiscoError::Parse(format!("edge list: missing {what}")))
        };
        let n = header("node count")?;
        let m = header("edge count")?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => edges.push((a, b)),
                _ => return Err(DiscoError::Parse(format!("edge list: bad line '{line}'"))),
            }
        }
        if edges.len() != m {
            return Err(DiscoError::Parse(format!(
                "edge list: header says {m} edges, found {}",
                edges.len()
            )));
        }
        Self::from_edges(n, edges)
    }

    /// `{"n":N,"edges":[[i,j],…]}`
    pub fn to_json(&self) -> String {
        let doc = GraphJson {
            n: self.node_count,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&doc).expect("graph serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphJson = serde_json::from_str(text)
            .map_err(|e| DiscoError::Parse(format!("graph JSON: {e}")))?;
        Self::from_edges(doc.n, doc.edges.into_iter().map(|[a, b]| (a, b)))
    }
}

/// Pixels covered by the 3×3 dilation of instance `id`, clipped to the image.
pub fn dilate_instance(mask: &InstanceMask, id: u32) -> Result<BTreeSet<(usize, usize)>> {
    let pixels = if id == 0 {
        Vec::new()
    } else {
        mask.pixels_of(id)
    };
    if pixels.is_empty() {
        return Err(DiscoError::Domain(format!(
            "instance {id} not present in mask"
        )));
    }
    let (h, w) = (mask.height(), mask.width());
    let mut out = BTreeSet::new();
    for (r, c) in pixels {
        for rr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
            for cc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                out.insert((rr, cc));
            }
        }
    }
    Ok(out)
}

/// Builds the cell adjacency graph of a compacted mask.
pub fn build_cag(mask: &InstanceMask) -> Result<AdjacencyGraph> {
    mask.require_compact()?;
    let (h, w) = (mask.height(), mask.width());
    let labels = mask.labels();
    let mut edges = Vec::new();
    let mut link = |a: u32, b: u32| {
        if b != 0 && a != b {
            edges.push((a.min(b) as usize, a.max(b) as usize));
        }
    };
    // Forward half of the 3x3 window; the backward half is covered by symmetry.
    for r in 0..h {
        for c in 0..w {
            let a = labels[r * w + c];
            if a == 0 {
                continue;
            }
            if c + 1 < w {
                link(a, labels[r * w + c + 1]);
            }
            if r + 1 < h {
                let below = (r + 1) * w;
                if c > 0 {
                    link(a, labels[below + c - 1]);
                }
                link(a, labels[below + c]);
                if c + 1 < w {
                    link(a, labels[below + c + 1]);
                }
            }
        }
    }
    Ok(AdjacencyGraph::from_normalized(
        mask.max_label() as usize,
        edges,
    ))
}

/// Degree → number of nodes with that degree.
pub fn degree_histogram(g: &AdjacencyGraph) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for v in g.nodes() {
        *hist.entry(g.degree(v)).or_insert(0) += 1;
    }
    hist
}
