//! Seeded synthetic instance masks and random graphs.
//!
//! All randomness comes from [`DiscoRng`], a PCG-XSL-RR 128/64 generator
//! with a fixed stream, so a seed reproduces the same output everywhere.

use std::fmt;
use std::str::FromStr;

use rand_core::Rng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::cag::{build_cag, AdjacencyGraph};
use crate::error::{DiscoError, Result};
use crate::mask_io::InstanceMask;
use crate::topology::CYCLE_ENUM_MAX_NODES;

const PCG_STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

/// Portable seeded generator.
#[derive(Clone, Debug)]
pub struct DiscoRng(Pcg64);

impl DiscoRng {
    pub fn new(seed: u64) -> Self {
        Self(Pcg64::new(u128::from(seed), PCG_STREAM))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..n` by widening multiply with rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(n);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Uniform `f64` in `[0, 1)` from the top 53 bits.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthProfile {
    /// Instances never come within one pixel of each other.
    Sparse,
    /// `growth_rounds` rounds of growth; neighbours may touch.
    Touching,
    /// Each instance grows until it first 8-touches another instance.
    Dense,
}

impl SynthProfile {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sparse => "sparse",
            Self::Touching => "touching",
            Self::Dense => "dense",
        }
    }
}

impl fmt::Display for SynthProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthProfile {
    type Err = DiscoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(Self::Sparse),
            "touching" => Ok(Self::Touching),
            "dense" => Ok(Self::Dense),
            _ => Err(DiscoError::Domain(format!(
                "unknown profile '{s}' (expected sparse, touching or dense)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub target_instance_count: usize,
    /// Minimum Chebyshev distance between seed points.
    pub min_spacing: usize,
    pub growth_rounds: usize,
    pub profile: SynthProfile,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            height: 64,
            width: 64,
            target_instance_count: 40,
            min_spacing: 2,
            growth_rounds: 3,
            profile: SynthProfile::Touching,
        }
    }
}

/// Consecutive rejected draws tolerated before placement gives up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

impl SynthConfig {
    /// Spacing actually enforced: sparse seeds stay at least two pixels
    /// apart so that they never 8-touch.
    pub fn effective_spacing(&self) -> usize {
        match self.profile {
            SynthProfile::Sparse => self.min_spacing.max(2),
            _ => self.min_spacing.max(1),
        }
    }

    /// Same configuration with the seed offset by `index`.
    pub fn nth(&self, index: u64) -> Self {
        Self {
            seed: self.seed.wrapping_add(index),
            ..self.clone()
        }
    }
}

fn place_seeds(cfg: &SynthConfig, rng: &mut DiscoRng) -> Result<Vec<u32>> {
    let (h, w) = (cfg.height, cfg.width);
    let mut labels = vec![0u32; h * w];
    let reach = cfg.effective_spacing() - 1;
    for id in 1..=cfg.target_instance_count as u32 {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let r = rng.below(h as u64) as usize;
            let c = rng.below(w as u64) as usize;
            let clear = (r.saturating_sub(reach)..=(r + reach).min(h - 1)).all(|rr| {
                (c.saturating_sub(reach)..=(c + reach).min(w - 1))
                    .all(|cc| labels[rr * w + cc] == 0)
            });
            if clear {
                labels[r * w + c] = id;
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(DiscoError::Generation(format!(
                "could not place seed {id} of {} on a {h}x{w} grid with spacing {} after {MAX_PLACEMENT_ATTEMPTS} attempts",
                cfg.target_instance_count,
                cfg.effective_spacing()
            )));
        }
    }
    Ok(labels)
}

/// One synchronous growth round over 4-neighbours. Returns whether any
/// pixel changed.
fn grow_round(
    labels: &mut [u32],
    frozen: &mut [bool],
    stopped: &[bool],
    h: usize,
    w: usize,
    keep_apart: bool,
) -> bool {
    let mut claims: Vec<(usize, u32)> = Vec::new();
    let mut newly_frozen = Vec::new();
    for i in 0..h * w {
        if labels[i] != 0 || frozen[i] {
            continue;
        }
        let (r, c) = (i / w, i % w);
        let mut owner = 0u32;
        let mut contested = false;
        for j in four_neighbours(r, c, h, w) {
            let l = labels[j];
            if l != 0 {
                if owner == 0 {
                    owner = l;
                } else if owner != l {
                    contested = true;
                }
            }
        }
        if contested {
            newly_frozen.push(i);
        } else if owner != 0 && !stopped[owner as usize] {
            claims.push((i, owner));
        }
    }

    if keep_apart {
        let mut pending = vec![0u32; h * w];
        for &(i, k) in &claims {
            pending[i] = k;
        }
        claims.retain(|&(i, k)| {
            let (r, c) = (i / w, i % w);
            let ok = eight_neighbours(r, c, h, w).all(|j| {
                let other = if labels[j] != 0 {
                    labels[j]
                } else {
                    pending[j]
                };
                other == 0 || other == k
            });
            if !ok {
                newly_frozen.push(i);
            }
            ok
        });
    }

    for i in newly_frozen {
        frozen[i] = true;
    }
    for &(i, k) in &claims {
        labels[i] = k;
    }
    !claims.is_empty()
}

/// Flags every instance that 8-touches another instance.
fn mark_touching(labels: &[u32], stopped: &mut [bool], h: usize, w: usize) {
    for i in 0..h * w {
        let k = labels[i];
        if k == 0 || stopped[k as usize] {
            continue;
        }
        if eight_neighbours(i / w, i % w, h, w).any(|j| labels[j] != 0 && labels[j] != k) {
            stopped[k as usize] = true;
        }
    }
}

fn four_neighbours(r: usize, c: usize, h: usize, w: usize) -> impl Iterator<Item = usize> {
    let up = (r > 0).then(|| (r - 1) * w + c);
    let down = (r + 1 < h).then(|| (r + 1) * w + c);
    let left = (c > 0).then(|| r * w + c - 1);
    let right = (c + 1 < w).then(|| r * w + c + 1);
    [up, down, left, right].into_iter().flatten()
}

fn eight_neighbours(r: usize, c: usize, h: usize, w: usize) -> impl Iterator<Item = usize> {
    (r.saturating_sub(1)..=(r + 1).min(h - 1)).flat_map(move |rr| {
        (c.saturating_sub(1)..=(c + 1).min(w - 1))
            .filter(move |&cc| (rr, cc) != (r, c))
            .map(move |cc| rr * w + cc)
    })
}

/// Seeds placed by rejection sampling, then grown one pixel per round.
/// Background pixels reachable from two instances in the same round are
/// frozen, so instances never overlap. Ids follow placement order.
pub fn generate_mask(cfg: &SynthConfig) -> Result<InstanceMask> {
    grow_mask(cfg, true)
}

fn grow_mask(cfg: &SynthConfig, stop_on_contact: bool) -> Result<InstanceMask> {
    let (h, w) = (cfg.height, cfg.width);
    if h == 0 || w == 0 {
        return Err(DiscoError::Shape(
            "synthetic mask must be at least 1x1".into(),
        ));
    }
    if cfg.target_instance_count > h * w || cfg.target_instance_count > u32::MAX as usize {
        return Err(DiscoError::Generation(format!(
            "{} instances do not fit on a {h}x{w} grid",
            cfg.target_instance_count
        )));
    }
    let mut rng = DiscoRng::new(cfg.seed);
    let mut labels = place_seeds(cfg, &mut rng)?;
    let mut frozen = vec![false; h * w];
    let mut stopped = vec![false; cfg.target_instance_count + 1];
    match cfg.profile {
        SynthProfile::Sparse | SynthProfile::Touching => {
            let keep_apart = cfg.profile == SynthProfile::Sparse;
            for _ in 0..cfg.growth_rounds {
                if !grow_round(&mut labels, &mut frozen, &stopped, h, w, keep_apart) {
                    break;
                }
            }
        }
        SynthProfile::Dense => loop {
            if stop_on_contact {
                mark_touching(&labels, &mut stopped, h, w);
            }
            if !grow_round(&mut labels, &mut frozen, &stopped, h, w, false) {
                break;
            }
        },
    }
    InstanceMask::new(h, w, labels)
}

/// `count` masks with seeds `cfg.seed`, `cfg.seed + 1`, ….
pub fn generate_corpus(cfg: &SynthConfig, count: usize) -> Result<Vec<InstanceMask>> {
    (0..count as u64)
        .map(|i| generate_mask(&cfg.nth(i)))
        .collect()
}

/// Seeded random graph on nodes `1..=n`.
///
/// Without `planarize` every pair `i < j` (in lexicographic order) is an
/// edge when a fresh uniform draw is below `p`. With `planarize` the graph
/// is the contact graph of `n` seeds grown until the grid saturates and
/// `p` is ignored.
pub fn generate_random_graph(
    seed: u64,
    n: usize,
    p: f64,
    planarize: bool,
) -> Result<AdjacencyGraph> {
    if n > CYCLE_ENUM_MAX_NODES {
        return Err(DiscoError::Size(format!(
            "{n} nodes exceeds the limit of {CYCLE_ENUM_MAX_NODES}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(DiscoError::Domain(format!(
            "edge probability must lie in [0, 1], got {p}"
        )));
    }
    if planarize {
        if n == 0 {
            return Ok(AdjacencyGraph::edgeless(0));
        }
        let side = (n as f64).sqrt().ceil() as usize * 6;
        let mask = grow_mask(
            &SynthConfig {
                seed,
                height: side,
                width: side,
                target_instance_count: n,
                min_spacing: 2,
                growth_rounds: 0,
                profile: SynthProfile::Dense,
            },
            false,
        )?;
        return build_cag(&mask);
    }
    let mut rng = DiscoRng::new(seed);
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.unit_f64() < p {
                edges.push((i, j));
            }
        }
    }
    AdjacencyGraph::from_edges(n, edges)
}
