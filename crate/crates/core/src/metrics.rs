//! Instance segmentation scores: Dice, AJI and panoptic DQ/SQ/PQ.
//!
//! Instance ids need not be compact. Empty-versus-empty comparisons score
//! 1.0 for every metric.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{DiscoError, Result};
use crate::mask_io::InstanceMask;

/// IoU above which a prediction counts as a detection.
pub const MATCH_IOU: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub gt: u32,
    pub pred: u32,
    pub intersection: usize,
    pub union: usize,
    pub iou: f64,
}

/// Overlap statistics between two masks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchTable {
    pub gt_areas: BTreeMap<u32, usize>,
    pub pred_areas: BTreeMap<u32, usize>,
    /// Pairs with nonzero intersection, sorted by `(gt, pred)`.
    pub pairs: Vec<PairOverlap>,
    /// Pairs with IoU above [`MATCH_IOU`].
    pub matches: Vec<PairOverlap>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

fn check_shapes(gt: &InstanceMask, pred: &InstanceMask) -> Result<()> {
    if (gt.height(), gt.width()) != (pred.height(), pred.width()) {
        return Err(DiscoError::Shape(format!(
            "ground truth is {}x{}, prediction is {}x{}",
            gt.height(),
            gt.width(),
            pred.height(),
            pred.width()
        )));
    }
    Ok(())
}

fn areas(mask: &InstanceMask) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for &l in mask.labels() {
        if l != 0 {
            *out.entry(l).or_insert(0) += 1;
        }
    }
    out
}

impl MatchTable {
    pub fn build(gt: &InstanceMask, pred: &InstanceMask) -> Result<Self> {
        check_shapes(gt, pred)?;
        let gt_areas = areas(gt);
        let pred_areas = areas(pred);
        let mut inter = BTreeMap::<(u32, u32), usize>::new();
        for (&g, &p) in gt.labels().iter().zip(pred.labels()) {
            if g != 0 && p != 0 {
                *inter.entry((g, p)).or_insert(0) += 1;
            }
        }
        let pairs: Vec<PairOverlap> = inter
            .into_iter()
            .map(|((g, p), i)| {
                let union = gt_areas[&g] + pred_areas[&p] - i;
                PairOverlap {
                    gt: g,
                    pred: p,
                    intersection: i,
                    union,
                    iou: i as f64 / union as f64,
                }
            })
            .collect();
        // IoU > 0.5 makes each side match at most once.
        let matches: Vec<PairOverlap> = pairs
            .iter()
            .copied()
            .filter(|p| p.iou > MATCH_IOU)
            .collect();
        let tp = matches.len();
        Ok(Self {
            fp: pred_areas.len() - tp,
            fn_: gt_areas.len() - tp,
            gt_areas,
            pred_areas,
            pairs,
            matches,
            tp,
        })
    }
}

/// Dice coefficient of the binarised foregrounds.
pub fn dice(gt: &InstanceMask, pred: &InstanceMask) -> Result<f64> {
    check_shapes(gt, pred)?;
    let (mut both, mut ng, mut np) = (0usize, 0usize, 0usize);
    for (&g, &p) in gt.labels().iter().zip(pred.labels()) {
        ng += usize::from(g != 0);
        np += usize::from(p != 0);
        both += usize::from(g != 0 && p != 0);
    }
    if ng + np == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (ng + np) as f64)
}

/// Aggregated Jaccard Index.
///
/// Ground-truth instances are visited in ascending id; each takes the
/// prediction of highest IoU (lowest id on ties), and predictions may be
/// taken more than once. Predictions never taken add their area to the
/// denominator.
pub fn aji(gt: &InstanceMask, pred: &InstanceMask) -> Result<f64> {
    let table = MatchTable::build(gt, pred)?;
    Ok(aji_from_table(&table))
}

fn aji_from_table(table: &MatchTable) -> f64 {
    let mut best: BTreeMap<u32, PairOverlap> = BTreeMap::new();
    for p in &table.pairs {
        match best.get(&p.gt) {
            Some(b) if b.iou >= p.iou => {}
            _ => {
                best.insert(p.gt, *p);
            }
        }
    }
    let mut num = 0usize;
    let mut den = 0usize;
    let mut used = BTreeSet::new();
    for (&g, &area) in &table.gt_areas {
        match best.get(&g) {
            Some(p) => {
                num += p.intersection;
                den += p.union;
                used.insert(p.pred);
            }
            None => den += area,
        }
    }
    den += table
        .pred_areas
        .iter()
        .filter(|(id, _)| !used.contains(id))
        .map(|(_, &a)| a)
        .sum::<usize>();
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanopticScores {
    pub dq: f64,
    pub sq: f64,
    pub pq: f64,
}

pub fn panoptic(gt: &InstanceMask, pred: &InstanceMask) -> Result<PanopticScores> {
    let table = MatchTable::build(gt, pred)?;
    Ok(panoptic_from_table(&table))
}

fn panoptic_from_table(table: &MatchTable) -> PanopticScores {
    let (tp, fp, fn_) = (table.tp as f64, table.fp as f64, table.fn_ as f64);
    let both_empty = table.gt_areas.is_empty() && table.pred_areas.is_empty();
    let dq = if both_empty {
        1.0
    } else {
        tp / (tp + 0.5 * fp + 0.5 * fn_)
    };
    let sq = if table.tp > 0 {
        table.matches.iter().map(|m| m.iou).sum::<f64>() / tp
    } else if both_empty {
        1.0
    } else {
        0.0
    };
    PanopticScores {
        dq,
        sq,
        pq: dq * sq,
    }
}

/// One row of an evaluation report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub dice: f64,
    pub aji: f64,
    pub dq: f64,
    pub sq: f64,
    pub pq: f64,
}

impl MetricScores {
    pub const CSV_HEADER: &'static str = "name,dice,aji,dq,sq,pq";

    pub fn csv_row(&self, name: &str) -> String {
        format!(
            "{name},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.dice, self.aji, self.dq, self.sq, self.pq
        )
    }

    /// Arithmetic mean of each column; `None` for an empty slice.
    pub fn mean(rows: &[MetricScores]) -> Option<MetricScores> {
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let sum = |f: fn(&MetricScores) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Some(MetricScores {
            dice: sum(|r| r.dice),
            aji: sum(|r| r.aji),
            dq: sum(|r| r.dq),
            sq: sum(|r| r.sq),
            pq: sum(|r| r.pq),
        })
    }
}

pub fn evaluate_pair(gt: &InstanceMask, pred: &InstanceMask) -> Result<MetricScores> {
    let table = MatchTable::build(gt, pred)?;
    let p = panoptic_from_table(&table);
    Ok(MetricScores {
        dice: dice(gt, pred)?,
        aji: aji_from_table(&table),
        dq: p.dq,
        sq: p.sq,
        pq: p.pq,
    })
}
