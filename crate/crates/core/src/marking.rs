//! Conflict-aware colour labels ("explicit marking") and greedy colouring
//! baselines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cag::{build_cag, AdjacencyGraph};
use crate::error::{DiscoError, Result};
use crate::mask_io::InstanceMask;
use crate::topology::{heuristic_conflict_set, ConflictAnalysis};

/// Default index of the dedicated conflict colour.
pub const DEFAULT_CONFLICT_COLOR: u8 = 3;

/// Per-pixel colour categories in `0..=t` plus the per-instance colours
/// they were rendered from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoLabelMap {
    height: usize,
    width: usize,
    categories: Vec<u8>,
    t: u8,
    /// Indexed by instance id; slot 0 is background and always 0.
    node_colors: Vec<u8>,
}

impl DiscoLabelMap {
    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn categories(&self) -> &[u8] {
        &self.categories
    }

    #[inline]
    pub fn conflict_color(&self) -> u8 {
        self.t
    }

    #[inline]
    pub fn node_colors(&self) -> &[u8] {
        &self.node_colors
    }

    /// Category map as a mask (useful for saving as PGM).
    pub fn to_mask(&self) -> InstanceMask {
        let labels = self.categories.iter().map(|&c| c as u32).collect();
        InstanceMask::new(self.height, self.width, labels).expect("label map shape is valid")
    }

    /// Rebuilds a label map from a saved category raster. Instance colours
    /// are unknown at that point and left empty.
    pub fn from_categories(mask: &InstanceMask, t: u8) -> Result<Self> {
        if let Some(&bad) = mask.labels().iter().find(|&&c| c > t as u32) {
            return Err(DiscoError::Domain(format!(
                "category {bad} exceeds conflict colour {t}"
            )));
        }
        Ok(Self {
            height: mask.height(),
            width: mask.width(),
            categories: mask.labels().iter().map(|&c| c as u8).collect(),
            t,
            node_colors: vec![0],
        })
    }

    /// `{"t":3,"node_colors":{"1":1,…}}`
    pub fn sidecar_json(&self) -> serde_json::Value {
        let colors: BTreeMap<String, u8> = self
            .node_colors
            .iter()
            .enumerate()
            .skip(1)
            .map(|(id, &c)| (id.to_string(), c))
            .collect();
        serde_json::json!({ "t": self.t, "node_colors": colors })
    }
}

fn check_t(t: u8) -> Result<()> {
    if t < 3 {
        return Err(DiscoError::Domain(format!(
            "conflict colour must be at least 3 to stay distinct from the two bipartite colours, got {t}"
        )));
    }
    Ok(())
}

/// Paints each instance with its colour; background stays 0.
///
/// `node_colors` is indexed by instance id (slot 0 ignored); a 0 entry for a
/// present instance counts as missing.
pub fn render_label_map(mask: &InstanceMask, node_colors: &[u8], t: u8) -> Result<DiscoLabelMap> {
    let mut colors = vec![0u8; mask.max_label() as usize + 1];
    let mut categories = Vec::with_capacity(mask.len());
    for &l in mask.labels() {
        if l == 0 {
            categories.push(0);
            continue;
        }
        let c = node_colors.get(l as usize).copied().unwrap_or(0);
        if c == 0 {
            return Err(DiscoError::Domain(format!("no colour for instance {l}")));
        }
        if c > t {
            return Err(DiscoError::Domain(format!(
                "colour {c} of instance {l} exceeds conflict colour {t}"
            )));
        }
        colors[l as usize] = c;
        categories.push(c);
    }
    Ok(DiscoLabelMap {
        height: mask.height(),
        width: mask.width(),
        categories,
        t,
        node_colors: colors,
    })
}

/// Explicit marking with a precomputed conflict analysis.
pub fn explicit_marking_from(
    mask: &InstanceMask,
    g: &AdjacencyGraph,
    analysis: &ConflictAnalysis,
    t: u8,
) -> Result<DiscoLabelMap> {
    check_t(t)?;
    mask.require_compact()?;
    if g.node_count() != mask.max_label() as usize {
        return Err(DiscoError::Precondition(format!(
            "graph has {} nodes but mask has {} instances",
            g.node_count(),
            mask.max_label()
        )));
    }
    let mut colors = analysis.two_coloring.clone();
    for &v in &analysis.conflict_set {
        colors[v] = t;
    }
    for &(a, b) in g.edges() {
        if colors[a] != t && colors[b] != t {
            assert_ne!(
                colors[a], colors[b],
                "bipartite colours must differ on edge ({a},{b})"
            );
        }
    }
    render_label_map(mask, &colors, t)
}

/// Two bipartite colours from BFS layering, with the heuristic conflict set
/// painted in the single conflict colour `t`.
pub fn explicit_marking(mask: &InstanceMask, g: &AdjacencyGraph, t: u8) -> Result<DiscoLabelMap> {
    mask.require_compact()?;
    if *g != build_cag(mask)? {
        return Err(DiscoError::Precondition(
            "graph is not the adjacency graph of this mask".into(),
        ));
    }
    explicit_marking_from(mask, g, &heuristic_conflict_set(g), t)
}

/// Vertex order for greedy colouring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GreedyOrder {
    #[default]
    IdAscending,
}

/// Colours per node id (slot 0 unused, colours start at 1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyColoring {
    pub colors: Vec<usize>,
    pub colors_used: usize,
}

fn smallest_free(g: &AdjacencyGraph, colors: &[usize], v: usize, scratch: &mut Vec<bool>) -> usize {
    scratch.clear();
    scratch.resize(g.degree(v) + 2, false);
    for &w in g.neighbors(v) {
        if colors[w] < scratch.len() {
            scratch[colors[w]] = true;
        }
    }
    (1..scratch.len())
        .find(|&c| !scratch[c])
        .expect("degree+1 colours always leave one free")
}

/// Smallest-available-colour greedy pass; never needs more than Δ+1 colours.
pub fn greedy_coloring(g: &AdjacencyGraph, order: GreedyOrder) -> GreedyColoring {
    let GreedyOrder::IdAscending = order;
    let mut colors = vec![0usize; g.node_count() + 1];
    let mut scratch = Vec::new();
    for v in g.nodes() {
        colors[v] = smallest_free(g, &colors, v, &mut scratch);
    }
    let colors_used = colors.iter().copied().max().unwrap_or(0);
    GreedyColoring {
        colors,
        colors_used,
    }
}

/// Greedy colouring restricted to a palette of `k` colours; `None` when
/// some node finds its palette exhausted (not a proof that χ(G) > k).
pub fn greedy_k_coloring(g: &AdjacencyGraph, k: usize) -> Option<Vec<usize>> {
    let mut colors = vec![0usize; g.node_count() + 1];
    let mut scratch = Vec::new();
    for v in g.nodes() {
        let c = smallest_free(g, &colors, v, &mut scratch);
        if c > k {
            return None;
        }
        colors[v] = c;
    }
    Some(colors)
}

/// True when no edge joins two equal colours.
pub fn is_proper_coloring<C: PartialEq>(g: &AdjacencyGraph, colors: &[C]) -> bool {
    g.edges().iter().all(|&(a, b)| colors[a] != colors[b])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&[u32]]) -> InstanceMask {
        InstanceMask::from_rows(rows).unwrap()
    }

    /// Three mutually touching instances.
    fn triangle_mask() -> InstanceMask {
        mask(&[&[1, 1, 2, 2], &[1, 1, 2, 2], &[3, 3, 3, 3]])
    }

    #[test]
    fn pair_uses_bipartite_colors() {
        let m = mask(&[&[1, 2]]);
        let g = build_cag(&m).unwrap();
        let y = explicit_marking(&m, &g, 3).unwrap();
        assert_eq!(y.node_colors()[1..], [1, 2]);
        assert!(!y.categories().contains(&3));
    }

    #[test]
    fn triangle_marks_node_two() {
        let m = triangle_mask();
        let g = build_cag(&m).unwrap();
        assert_eq!(g, AdjacencyGraph::complete(3));
        let y = explicit_marking(&m, &g, 3).unwrap();
        assert_eq!(y.node_colors()[1..], [1, 3, 2]);
        assert_eq!(y.categories(), &[1, 1, 3, 3, 1, 1, 3, 3, 2, 2, 2, 2]);
        let via_render = render_label_map(&m, &[0, 1, 3, 2], 3).unwrap();
        assert_eq!(via_render, y);
    }

    #[test]
    fn isolated_instances_get_color_one() {
        let m = mask(&[&[1, 0, 2, 0, 3]]);
        let y = explicit_marking(&m, &build_cag(&m).unwrap(), 3).unwrap();
        assert_eq!(y.categories(), &[1, 0, 1, 0, 1]);
    }

    #[test]
    fn marking_preconditions() {
        let m = mask(&[&[1, 2]]);
        assert!(matches!(
            explicit_marking(&m, &AdjacencyGraph::edgeless(2), 3),
            Err(DiscoError::Precondition(_))
        ));
        assert!(explicit_marking(&m, &build_cag(&m).unwrap(), 2).is_err());
        let loose = mask(&[&[1, 3]]);
        assert!(explicit_marking(&loose, &AdjacencyGraph::edgeless(3), 3).is_err());
    }

    #[test]
    fn configurable_conflict_color() {
        let m = triangle_mask();
        let y = explicit_marking(&m, &build_cag(&m).unwrap(), 5).unwrap();
        assert_eq!(y.node_colors()[1..], [1, 5, 2]);
        assert_eq!(y.sidecar_json()["t"], 5);
    }

    #[test]
    fn render_examples() {
        let m = mask(&[&[1, 0, 2]]);
        assert_eq!(
            render_label_map(&m, &[0, 1, 2], 3).unwrap().categories(),
            &[1, 0, 2]
        );
        let m = mask(&[&[1, 1, 2]]);
        assert_eq!(
            render_label_map(&m, &[0, 2, 1], 3).unwrap().categories(),
            &[2, 2, 1]
        );
        assert!(matches!(
            render_label_map(&m, &[0, 2], 3),
            Err(DiscoError::Domain(_))
        ));
        assert!(matches!(
            render_label_map(&m, &[0, 2, 0], 3),
            Err(DiscoError::Domain(_))
        ));
        assert!(matches!(
            render_label_map(&m, &[0, 2, 4], 3),
            Err(DiscoError::Domain(_))
        ));
    }

    #[test]
    fn sidecar_layout() {
        let m = triangle_mask();
        let y = explicit_marking(&m, &build_cag(&m).unwrap(), 3).unwrap();
        assert_eq!(
            y.sidecar_json().to_string(),
            r#"{"node_colors":{"1":1,"2":3,"3":2},"t":3}"#
        );
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(
            greedy_coloring(&AdjacencyGraph::path(3), GreedyOrder::IdAscending).colors_used,
            2
        );
        let k4 = greedy_coloring(&AdjacencyGraph::complete(4), GreedyOrder::IdAscending);
        assert_eq!(k4.colors_used, 4);
        let c5 = greedy_coloring(&AdjacencyGraph::cycle(5), GreedyOrder::IdAscending);
        assert_eq!(c5.colors[1..], [1, 2, 1, 2, 3]);
        assert_eq!(
            greedy_coloring(&AdjacencyGraph::edgeless(0), GreedyOrder::IdAscending).colors_used,
            0
        );
    }

    #[test]
    fn greedy_k_examples() {
        let tri = AdjacencyGraph::complete(3);
        assert_eq!(greedy_k_coloring(&tri, 3).unwrap()[1..], [1, 2, 3]);
        assert!(greedy_k_coloring(&tri, 2).is_none());
        assert!(greedy_k_coloring(&AdjacencyGraph::complete(4), 3).is_none());
        assert!(greedy_k_coloring(&AdjacencyGraph::edgeless(2), 1).is_some());
    }
}
