//! Instance reconstruction from a colouring probability field.
//!
//! Same-colour instances never touch, so 4-connected components of each
//! category are instances. Adjacent conflict instances share the conflict
//! colour and are separated by the argmax over the bipartite channels.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::loss::ProbabilityField;
use crate::marking::DiscoLabelMap;
use crate::mask_io::InstanceMask;

/// Per-pixel argmax over the colouring channels; ties go to the lowest
/// channel.
pub fn argmax_decode(field: &ProbabilityField) -> DiscoLabelMap {
    let cc = field.color_channels();
    let categories: Vec<u32> = field
        .color_logits()
        .chunks_exact(cc)
        .map(|row| argmax(row) as u32)
        .collect();
    let raster =
        InstanceMask::new(field.height(), field.width(), categories).expect("field shape is valid");
    DiscoLabelMap::from_categories(&raster, field.conflict_color()).expect("argmax stays within t")
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceProvenance {
    pub id: u32,
    pub category: u8,
    /// Bipartite channel that won among conflict pixels; absent otherwise.
    pub secondary_key: Option<u8>,
    pub used_secondary_split: bool,
    pub area: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedInstances {
    pub mask: InstanceMask,
    pub provenance: Vec<InstanceProvenance>,
}

impl DecodedInstances {
    pub fn provenance_json(&self) -> serde_json::Value {
        serde_json::json!({ "instances": self.provenance })
    }
}

/// Options for [`decode_instances_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecodeOptions {
    /// Components smaller than this are dropped to background.
    pub min_size: Option<usize>,
}

pub fn decode_instances(field: &ProbabilityField) -> DecodedInstances {
    decode_instances_with(field, &DecodeOptions::default())
}

const UNSET: u32 = u32::MAX;

/// Labels 4-connected components of pixels with equal `key`, skipping
/// pixels where `key` is `None`. Components are numbered from 0 in
/// row-major discovery order.
fn label_components(
    h: usize,
    w: usize,
    key: impl Fn(usize) -> Option<u16>,
) -> (Vec<u32>, Vec<usize>) {
    let mut comp = vec![UNSET; h * w];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        let Some(k) = key(start) else { continue };
        if comp[start] != UNSET {
            continue;
        }
        let id = sizes.len() as u32;
        comp[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if comp[j] == UNSET && key(j) == Some(k) {
                    comp[j] = id;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
        }
        sizes.push(size);
    }
    (comp, sizes)
}

pub fn decode_instances_with(field: &ProbabilityField, opts: &DecodeOptions) -> DecodedInstances {
    let (h, w) = (field.height(), field.width());
    let cc = field.color_channels();
    let t = field.conflict_color();
    let labels = argmax_decode(field);
    let cats = labels.categories();
    let logits = field.color_logits();
    let secondary: Vec<u8> = (0..h * w)
        .map(|i| {
            if cats[i] == t {
                1 + argmax(&logits[i * cc + 1..i * cc + t as usize]) as u8
            } else {
                0
            }
        })
        .collect();

    // Stratum key: category in the high byte, secondary key in the low byte.
    let stratum =
        |i: usize| (cats[i] != 0).then(|| (u16::from(cats[i]) << 8) | u16::from(secondary[i]));
    let (comp, sizes) = label_components(h, w, stratum);

    // Conflict regions before splitting, to flag components that were split.
    let (parent, _) = label_components(h, w, |i| (cats[i] == t).then_some(0));
    let mut pieces_per_parent =
        std::collections::BTreeMap::<u32, std::collections::BTreeSet<u32>>::new();
    for i in 0..h * w {
        if cats[i] == t {
            pieces_per_parent
                .entry(parent[i])
                .or_default()
                .insert(comp[i]);
        }
    }

    let keep = |k: usize| opts.min_size.is_none_or(|m| sizes[k] >= m);
    let mut new_id = vec![0u32; sizes.len()];
    let mut provenance = Vec::new();
    let mut out = vec![0u32; h * w];
    for i in 0..h * w {
        if comp[i] == UNSET {
            continue;
        }
        let k = comp[i] as usize;
        if !keep(k) {
            continue;
        }
        if new_id[k] == 0 {
            let id = provenance.len() as u32 + 1;
            new_id[k] = id;
            let is_conflict = cats[i] == t;
            provenance.push(InstanceProvenance {
                id,
                category: cats[i],
                secondary_key: is_conflict.then_some(secondary[i]),
                used_secondary_split: is_conflict && pieces_per_parent[&parent[i]].len() > 1,
                area: sizes[k],
            });
        }
        out[i] = new_id[k];
    }
    DecodedInstances {
        mask: InstanceMask::new(h, w, out).expect("decoded shape matches field"),
        provenance,
    }
}
