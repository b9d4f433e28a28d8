//! The five-term training loss evaluated on a single image, with analytic
//! gradients with respect to the semantic and colouring logits.
//!
//! Logits are stored pixel-major: channel `c` of pixel `i` lives at
//! `i * channels + c`. Gradients use the same layout.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cag::AdjacencyGraph;
use crate::error::{DiscoError, Result};
use crate::marking::DiscoLabelMap;
use crate::mask_io::InstanceMask;

/// Per-pixel semantic (2-channel) and colouring (`t + 1`-channel) logits.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityField {
    height: usize,
    width: usize,
    color_channels: usize,
    sem_logits: Vec<f64>,
    color_logits: Vec<f64>,
}

pub const SEM_CHANNELS: usize = 2;

impl ProbabilityField {
    pub fn new(
        height: usize,
        width: usize,
        t: u8,
        sem_logits: Vec<f64>,
        color_logits: Vec<f64>,
    ) -> Result<Self> {
        let pixels = height * width;
        if pixels == 0 {
            return Err(DiscoError::Shape("field must be at least 1x1".into()));
        }
        if t < 3 {
            return Err(DiscoError::Domain(format!(
                "conflict channel must be >= 3, got {t}"
            )));
        }
        let color_channels = t as usize + 1;
        if sem_logits.len() != pixels * SEM_CHANNELS {
            return Err(DiscoError::Shape(format!(
                "expected {} semantic logits, got {}",
                pixels * SEM_CHANNELS,
                sem_logits.len()
            )));
        }
        if color_logits.len() != pixels * color_channels {
            return Err(DiscoError::Shape(format!(
                "expected {} colour logits, got {}",
                pixels * color_channels,
                color_logits.len()
            )));
        }
        if sem_logits
            .iter()
            .chain(&color_logits)
            .any(|v| !v.is_finite())
        {
            return Err(DiscoError::Domain("logits must be finite".into()));
        }
        Ok(Self {
            height,
            width,
            color_channels,
            sem_logits,
            color_logits,
        })
    }

    /// Saturated field whose argmax reproduces `labels`: the true colour
    /// channel gets `hot`, all others 0; the semantic head follows the
    /// foreground.
    pub fn from_labels(labels: &DiscoLabelMap, hot: f64) -> Self {
        let channels = labels.conflict_color() as usize + 1;
        let mut color = vec![0.0; labels.categories().len() * channels];
        let mut sem = vec![0.0; labels.categories().len() * SEM_CHANNELS];
        for (i, &c) in labels.categories().iter().enumerate() {
            color[i * channels + c as usize] = hot;
            sem[i * SEM_CHANNELS + usize::from(c != 0)] = hot;
        }
        Self::new(
            labels.height(),
            labels.width(),
            labels.conflict_color(),
            sem,
            color,
        )
        .expect("label map yields a consistent field")
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn color_channels(&self) -> usize {
        self.color_channels
    }

    /// Index of the conflict channel.
    #[inline]
    pub fn conflict_color(&self) -> u8 {
        (self.color_channels - 1) as u8
    }

    #[inline]
    pub fn sem_logits(&self) -> &[f64] {
        &self.sem_logits
    }

    #[inline]
    pub fn color_logits(&self) -> &[f64] {
        &self.color_logits
    }

    pub fn sem_logits_mut(&mut self) -> &mut [f64] {
        &mut self.sem_logits
    }

    pub fn color_logits_mut(&mut self) -> &mut [f64] {
        &mut self.color_logits
    }

    /// Logit `k` of the concatenated `[sem, color]` vector.
    fn logit_mut(&mut self, k: usize) -> &mut f64 {
        let ns = self.sem_logits.len();
        if k < ns {
            &mut self.sem_logits[k]
        } else {
            &mut self.color_logits[k - ns]
        }
    }

    pub fn color_probabilities(&self) -> Vec<f64> {
        softmax_rows(&self.color_logits, self.color_channels)
    }

    pub fn sem_probabilities(&self) -> Vec<f64> {
        softmax_rows(&self.sem_logits, SEM_CHANNELS)
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("y,x,sem_0,sem_1");
        for c in 0..self.color_channels {
            let _ = write!(h, ",color_{c}");
        }
        h
    }

    /// One row per pixel in row-major order; floats use shortest
    /// round-trip formatting so reloading is bit-exact.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        let cc = self.color_channels;
        for i in 0..self.pixel_count() {
            let _ = write!(out, "{},{}", i / self.width, i % self.width);
            for v in &self.sem_logits[i * SEM_CHANNELS..(i + 1) * SEM_CHANNELS] {
                let _ = write!(out, ",{v:?}");
            }
            for v in &self.color_logits[i * cc..(i + 1) * cc] {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the layout written by [`ProbabilityField::to_csv`]. Rows may
    /// come in any order but must cover every pixel exactly once.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| DiscoError::Parse("field CSV: missing header".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let color_channels = cols.iter().filter(|c| c.starts_with("color_")).count();
        let expected: Vec<String> = ["y", "x", "sem_0", "sem_1"]
            .iter()
            .map(|s| s.to_string())
            .chain((0..color_channels).map(|c| format!("color_{c}")))
            .collect();
        if cols != expected {
            return Err(DiscoError::Parse(format!(
                "field CSV: header must be '{}'",
                expected.join(",")
            )));
        }
        if !(4..=256).contains(&color_channels) {
            return Err(DiscoError::Shape(format!(
                "field CSV: {color_channels} colour channels, need 4..=256"
            )));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(DiscoError::Shape(format!(
                    "field CSV: row {n} has {} columns, expected {}",
                    fields.len(),
                    cols.len()
                )));
            }
            let coord = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    DiscoError::Parse(format!("field CSV: row {n}: bad coordinate '{s}'"))
                })
            };
            let (y, x) = (coord(fields[0])?, coord(fields[1])?);
            let values = fields[2..]
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        DiscoError::Parse(format!("field CSV: row {n}: bad value '{s}'"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push((y, x, values));
        }
        let height = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        let width = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        if rows.len() != height * width || rows.is_empty() {
            return Err(DiscoError::Shape(format!(
                "field CSV: {} rows do not tile a {height}x{width} grid",
                rows.len()
            )));
        }
        let mut sem = vec![0.0; height * width * SEM_CHANNELS];
        let mut color = vec![0.0; height * width * color_channels];
        let mut seen = vec![false; height * width];
        for (y, x, values) in rows {
            let i = y * width + x;
            if std::mem::replace(&mut seen[i], true) {
                return Err(DiscoError::Shape(format!(
                    "field CSV: pixel ({y},{x}) repeated"
                )));
            }
            sem[i * SEM_CHANNELS..(i + 1) * SEM_CHANNELS].copy_from_slice(&values[..SEM_CHANNELS]);
            color[i * color_channels..(i + 1) * color_channels]
                .copy_from_slice(&values[SEM_CHANNELS..]);
        }
        Self::new(height, width, (color_channels - 1) as u8, sem, color)
    }
}

fn softmax_rows(logits: &[f64], channels: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks_exact(channels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        out.extend(row.iter().map(|&z| (z - max).exp()));
        let sum: f64 = out[start..].iter().sum();
        for p in &mut out[start..] {
            *p /= sum;
        }
    }
    out
}

fn log_softmax_at(row: &[f64], c: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    row[c] - lse
}

/// Channel-wise softmax of pixel-major logits, stabilised by max-subtraction.
pub fn softmax_field(logits: &[f64], channels: usize) -> Result<Vec<f64>> {
    if channels == 0 || !logits.len().is_multiple_of(channels) {
        return Err(DiscoError::Shape(format!(
            "{} logits do not split into rows of {channels}",
            logits.len()
        )));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(DiscoError::Domain("logits must be finite".into()));
    }
    Ok(softmax_rows(logits, channels))
}

/// Pulls `dL/dp` back through the softmax: `dL/dz_j = p_j (g_j - Σ_c p_c g_c)`.
fn softmax_backward(probs: &[f64], upstream: &[f64], channels: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(probs.len());
    for (p, g) in probs
        .chunks_exact(channels)
        .zip(upstream.chunks_exact(channels))
    {
        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        out.extend(p.iter().zip(g).map(|(pj, gj)| pj * (gj - dot)));
    }
    out
}

/// Relative weights of the five loss terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermWeights {
    pub sem: f64,
    pub color: f64,
    pub cons: f64,
    pub conf: f64,
    pub adj: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        Self {
            sem: 1.0,
            color: 1.0,
            cons: 1.0,
            conf: 1.0,
            adj: 1.0,
        }
    }
}

impl TermWeights {
    pub fn get(&self, term: LossTerm) -> f64 {
        match term {
            LossTerm::Sem => self.sem,
            LossTerm::Color => self.color,
            LossTerm::Cons => self.cons,
            LossTerm::Conf => self.conf,
            LossTerm::Adj => self.adj,
        }
    }

    pub fn zero() -> Self {
        Self {
            sem: 0.0,
            color: 0.0,
            cons: 0.0,
            conf: 0.0,
            adj: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// `w_c` for `c = 0..=t`.
    pub class_weights: Vec<f64>,
    pub term_weights: TermWeights,
    pub cosine_epsilon: f64,
    pub dice_smoothing: f64,
}

pub const DEFAULT_CONFLICT_WEIGHT: f64 = 5.0;

impl Default for LossConfig {
    fn default() -> Self {
        Self::for_conflict_color(3)
    }
}

impl LossConfig {
    /// Unit class weights with the conflict class up-weighted.
    pub fn for_conflict_color(t: u8) -> Self {
        let mut class_weights = vec![1.0; t as usize + 1];
        class_weights[t as usize] = DEFAULT_CONFLICT_WEIGHT;
        Self {
            class_weights,
            term_weights: TermWeights::default(),
            cosine_epsilon: 1e-8,
            dice_smoothing: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tw = &self.term_weights;
        let all = self
            .class_weights
            .iter()
            .chain([&tw.sem, &tw.color, &tw.cons, &tw.conf, &tw.adj]);
        for &w in all {
            if !(w.is_finite() && w >= 0.0) {
                return Err(DiscoError::Domain(format!(
                    "weights must be finite and >= 0, got {w}"
                )));
            }
        }
        if !(self.cosine_epsilon > 0.0 && self.cosine_epsilon.is_finite()) {
            return Err(DiscoError::Domain("cosine epsilon must be > 0".into()));
        }
        if !(self.dice_smoothing > 0.0 && self.dice_smoothing.is_finite()) {
            return Err(DiscoError::Domain("dice smoothing must be > 0".into()));
        }
        Ok(())
    }
}

/// The five loss components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossTerm {
    Sem,
    Color,
    Cons,
    Conf,
    Adj,
}

impl LossTerm {
    pub const ALL: [LossTerm; 5] = [Self::Sem, Self::Color, Self::Cons, Self::Conf, Self::Adj];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sem => "sem",
            Self::Color => "color",
            Self::Cons => "cons",
            Self::Conf => "conf",
            Self::Adj => "adj",
        }
    }
}

impl FromStr for LossTerm {
    type Err = DiscoError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| DiscoError::Domain(format!("unknown loss term '{s}'")))
    }
}

/// Value of one term and its gradient. Gradients of `Sem` are with respect
/// to the semantic logits; all other terms act on the colouring logits.
#[derive(Clone, Debug, PartialEq)]
pub struct TermValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

fn check_same_grid(
    field: &ProbabilityField,
    height: usize,
    width: usize,
    what: &str,
) -> Result<()> {
    if (field.height, field.width) != (height, width) {
        return Err(DiscoError::Shape(format!(
            "{what} is {height}x{width}, field is {}x{}",
            field.height, field.width
        )));
    }
    Ok(())
}

fn check_labels(field: &ProbabilityField, labels: &DiscoLabelMap) -> Result<()> {
    check_same_grid(field, labels.height(), labels.width(), "label map")?;
    if labels.conflict_color() != field.conflict_color() {
        return Err(DiscoError::Shape(format!(
            "label map uses t={}, field has t={}",
            labels.conflict_color(),
            field.conflict_color()
        )));
    }
    Ok(())
}

/// Soft Dice loss `1 - (2Σpg + s)/(Σp + Σg + s)` for one channel, and its
/// derivative with respect to each `p`.
fn soft_dice(probs: impl Iterator<Item = (f64, bool)> + Clone, s: f64) -> (f64, f64, f64) {
    let (mut sp, mut sg, mut inter) = (0.0, 0.0, 0.0);
    for (p, g) in probs {
        sp += p;
        if g {
            sg += 1.0;
            inter += p;
        }
    }
    let a = 2.0 * inter + s;
    let b = sp + sg + s;
    // dD/dp = (a - 2 g b) / b², returned as (loss, a, b)
    (1.0 - a / b, a, b)
}

/// Mean cross-entropy plus soft Dice on the foreground channel.
pub fn loss_semantic(
    field: &ProbabilityField,
    y_sem: &[bool],
    cfg: &LossConfig,
) -> Result<TermValue> {
    if y_sem.len() != field.pixel_count() {
        return Err(DiscoError::Shape(format!(
            "semantic target has {} pixels, field has {}",
            y_sem.len(),
            field.pixel_count()
        )));
    }
    let n = field.pixel_count() as f64;
    let probs = field.sem_probabilities();
    let mut ce = 0.0;
    let mut grad = vec![0.0; probs.len()];
    for (i, &fg) in y_sem.iter().enumerate() {
        let y = usize::from(fg);
        ce -= log_softmax_at(&field.sem_logits[i * 2..i * 2 + 2], y);
        for c in 0..2 {
            grad[i * 2 + c] = (probs[i * 2 + c] - f64::from(c == y)) / n;
        }
    }
    ce /= n;

    let fg_probs = probs
        .chunks_exact(2)
        .map(|p| p[1])
        .zip(y_sem.iter().copied());
    let (dice, a, b) = soft_dice(fg_probs, cfg.dice_smoothing);
    let mut upstream = vec![0.0; probs.len()];
    for (i, &fg) in y_sem.iter().enumerate() {
        upstream[i * 2 + 1] = (a - 2.0 * f64::from(u8::from(fg)) * b) / (b * b);
    }
    for (g, d) in grad.iter_mut().zip(softmax_backward(&probs, &upstream, 2)) {
        *g += d;
    }
    Ok(TermValue {
        value: ce + dice,
        grad,
    })
}

/// Weighted cross-entropy plus soft Dice averaged over all `t + 1`
/// categories.
pub fn loss_color(
    field: &ProbabilityField,
    labels: &DiscoLabelMap,
    cfg: &LossConfig,
) -> Result<TermValue> {
    check_labels(field, labels)?;
    let cc = field.color_channels;
    if cfg.class_weights.len() != cc {
        return Err(DiscoError::Shape(format!(
            "{} class weights for {cc} colour channels",
            cfg.class_weights.len()
        )));
    }
    let n = field.pixel_count() as f64;
    let probs = field.color_probabilities();
    let y = labels.categories();

    let mut wce = 0.0;
    let mut grad = vec![0.0; probs.len()];
    for (i, &yc) in y.iter().enumerate() {
        let yc = yc as usize;
        let w = cfg.class_weights[yc];
        wce -= w * log_softmax_at(&field.color_logits[i * cc..(i + 1) * cc], yc);
        for c in 0..cc {
            grad[i * cc + c] = w * (probs[i * cc + c] - f64::from(c == yc)) / n;
        }
    }
    wce /= n;

    let mut dice = 0.0;
    let mut upstream = vec![0.0; probs.len()];
    for c in 0..cc {
        let channel = (0..y.len()).map(|i| (probs[i * cc + c], y[i] as usize == c));
        let (d, a, b) = soft_dice(channel, cfg.dice_smoothing);
        dice += d / cc as f64;
        for (i, &yc) in y.iter().enumerate() {
            let g = f64::from(yc as usize == c);
            upstream[i * cc + c] = (a - 2.0 * g * b) / (b * b) / cc as f64;
        }
    }
    for (g, d) in grad.iter_mut().zip(softmax_backward(&probs, &upstream, cc)) {
        *g += d;
    }
    Ok(TermValue {
        value: wce + dice,
        grad,
    })
}

/// Shared shape of the two conflict-channel regularisers: the mean of
/// `penalty(p_t)` over the selected pixels, 0 when none are selected.
fn conflict_channel_mean(
    field: &ProbabilityField,
    labels: &DiscoLabelMap,
    select: impl Fn(u8) -> bool,
    penalty: impl Fn(f64) -> (f64, f64),
) -> Result<TermValue> {
    check_labels(field, labels)?;
    let cc = field.color_channels;
    let t = cc - 1;
    let probs = field.color_probabilities();
    let picked: Vec<usize> = labels
        .categories()
        .iter()
        .enumerate()
        .filter(|&(_, &c)| select(c))
        .map(|(i, _)| i)
        .collect();
    let mut grad = vec![0.0; probs.len()];
    if picked.is_empty() {
        return Ok(TermValue { value: 0.0, grad });
    }
    let m = picked.len() as f64;
    let mut value = 0.0;
    let mut upstream = vec![0.0; probs.len()];
    for &i in &picked {
        let (v, dv) = penalty(probs[i * cc + t]);
        value += v;
        upstream[i * cc + t] = dv / m;
    }
    grad = softmax_backward(&probs, &upstream, cc);
    Ok(TermValue {
        value: value / m,
        grad,
    })
}

/// Mean squared conflict probability over bipartite-coloured pixels.
pub fn loss_cons(field: &ProbabilityField, labels: &DiscoLabelMap) -> Result<TermValue> {
    let t = labels.conflict_color();
    conflict_channel_mean(field, labels, |c| c >= 1 && c < t, |p| (p * p, 2.0 * p))
}

/// Mean squared shortfall of the conflict probability over conflict pixels.
pub fn loss_conf(field: &ProbabilityField, labels: &DiscoLabelMap) -> Result<TermValue> {
    let t = labels.conflict_color();
    conflict_channel_mean(
        field,
        labels,
        |c| c == t,
        |p| {
            let q = 1.0 - p;
            (q * q, -2.0 * q)
        },
    )
}

/// Mean softmax vector over the pixels of one instance.
pub fn instance_mean_probability(
    field: &ProbabilityField,
    mask: &InstanceMask,
    id: u32,
) -> Result<Vec<f64>> {
    check_same_grid(field, mask.height(), mask.width(), "mask")?;
    let cc = field.color_channels;
    let probs = field.color_probabilities();
    let mut mean = vec![0.0; cc];
    let mut count = 0usize;
    for (i, &l) in mask.labels().iter().enumerate() {
        if l == id && id != 0 {
            count += 1;
            for c in 0..cc {
                mean[c] += probs[i * cc + c];
            }
        }
    }
    if count == 0 {
        return Err(DiscoError::Domain(format!("instance {id} has no pixels")));
    }
    for v in &mut mean {
        *v /= count as f64;
    }
    Ok(mean)
}

/// Mean cosine similarity between the mean probability vectors of adjacent
/// instances, over all graph edges (0 for an edgeless graph).
pub fn loss_adj(
    field: &ProbabilityField,
    mask: &InstanceMask,
    g: &AdjacencyGraph,
    cfg: &LossConfig,
) -> Result<TermValue> {
    check_same_grid(field, mask.height(), mask.width(), "mask")?;
    mask.require_compact()?;
    if g.node_count() != mask.max_label() as usize {
        return Err(DiscoError::Precondition(format!(
            "graph has {} nodes, mask has {} instances",
            g.node_count(),
            mask.max_label()
        )));
    }
    let cc = field.color_channels;
    let probs = field.color_probabilities();
    let mut grad = vec![0.0; probs.len()];
    if g.edge_count() == 0 {
        return Ok(TermValue { value: 0.0, grad });
    }

    let n = g.node_count();
    let mut means = vec![0.0; (n + 1) * cc];
    let areas = mask.areas();
    for (i, &l) in mask.labels().iter().enumerate() {
        if l != 0 {
            let k = l as usize;
            for c in 0..cc {
                means[k * cc + c] += probs[i * cc + c];
            }
        }
    }
    for k in 1..=n {
        for c in 0..cc {
            means[k * cc + c] /= areas[k] as f64;
        }
    }
    let norms: Vec<f64> = (0..=n)
        .map(|k| {
            means[k * cc..(k + 1) * cc]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let e = g.edge_count() as f64;
    let eps = cfg.cosine_epsilon;
    let mut value = 0.0;
    let mut dmeans = vec![0.0; (n + 1) * cc];
    for &(a, b) in g.edges() {
        let ma = &means[a * cc..(a + 1) * cc];
        let mb = &means[b * cc..(b + 1) * cc];
        let dot: f64 = ma.iter().zip(mb).map(|(x, y)| x * y).sum();
        let (na, nb) = (norms[a], norms[b]);
        let den = na * nb + eps;
        value += dot / den;
        // d(dot/den)/dma = mb/den - dot * nb * ma / (na * den²)
        for c in 0..cc {
            dmeans[a * cc + c] += (mb[c] / den - dot * nb * ma[c] / (na * den * den)) / e;
            dmeans[b * cc + c] += (ma[c] / den - dot * na * mb[c] / (nb * den * den)) / e;
        }
    }
    let mut upstream = vec![0.0; probs.len()];
    for (i, &l) in mask.labels().iter().enumerate() {
        if l != 0 {
            let k = l as usize;
            let inv = 1.0 / areas[k] as f64;
            for c in 0..cc {
                upstream[i * cc + c] = dmeans[k * cc + c] * inv;
            }
        }
    }
    grad = softmax_backward(&probs, &upstream, cc);
    Ok(TermValue {
        value: value / e,
        grad,
    })
}

/// Everything the loss needs besides the logits.
#[derive(Clone, Copy, Debug)]
pub struct LossTargets<'a> {
    pub semantic: &'a [bool],
    pub labels: &'a DiscoLabelMap,
    pub mask: &'a InstanceMask,
    pub graph: &'a AdjacencyGraph,
}

/// Foreground flags of a mask.
pub fn semantic_target(mask: &InstanceMask) -> Vec<bool> {
    mask.labels().iter().map(|&l| l != 0).collect()
}

pub fn evaluate_term(
    field: &ProbabilityField,
    targets: &LossTargets<'_>,
    cfg: &LossConfig,
    term: LossTerm,
) -> Result<TermValue> {
    match term {
        LossTerm::Sem => loss_semantic(field, targets.semantic, cfg),
        LossTerm::Color => loss_color(field, targets.labels, cfg),
        LossTerm::Cons => loss_cons(field, targets.labels),
        LossTerm::Conf => loss_conf(field, targets.labels),
        LossTerm::Adj => loss_adj(field, targets.mask, targets.graph, cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_sem: f64,
    pub l_color: f64,
    pub l_cons: f64,
    pub l_conf: f64,
    pub l_adj: f64,
    pub l_total: f64,
    #[serde(skip)]
    pub grad_sem: Vec<f64>,
    #[serde(skip)]
    pub grad_color: Vec<f64>,
}

impl LossBreakdown {
    pub fn term(&self, term: LossTerm) -> f64 {
        match term {
            LossTerm::Sem => self.l_sem,
            LossTerm::Color => self.l_color,
            LossTerm::Cons => self.l_cons,
            LossTerm::Conf => self.l_conf,
            LossTerm::Adj => self.l_adj,
        }
    }
}

/// Weighted sum of the five terms and the matching gradients.
pub fn total_loss(
    field: &ProbabilityField,
    targets: &LossTargets<'_>,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    let mut values = [0.0; 5];
    let mut grad_sem = vec![0.0; field.sem_logits.len()];
    let mut grad_color = vec![0.0; field.color_logits.len()];
    for (slot, term) in LossTerm::ALL.into_iter().enumerate() {
        let tv = evaluate_term(field, targets, cfg, term)?;
        values[slot] = tv.value;
        let w = cfg.term_weights.get(term);
        let dst = if term == LossTerm::Sem {
            &mut grad_sem
        } else {
            &mut grad_color
        };
        for (d, g) in dst.iter_mut().zip(&tv.grad) {
            *d += w * g;
        }
    }
    let l_total = LossTerm::ALL
        .iter()
        .zip(values)
        .map(|(&t, v)| cfg.term_weights.get(t) * v)
        .sum();
    Ok(LossBreakdown {
        l_sem: values[0],
        l_color: values[1],
        l_cons: values[2],
        l_conf: values[3],
        l_adj: values[4],
        l_total,
        grad_sem,
        grad_color,
    })
}

/// What a gradient check differentiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradTarget {
    Term(LossTerm),
    Total,
}

impl GradTarget {
    pub fn name(self) -> &'static str {
        match self {
            Self::Term(t) => t.name(),
            Self::Total => "total",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub target: String,
    pub value: f64,
    pub step: f64,
    pub checked: usize,
    pub max_abs_err: f64,
    pub max_rel_grad_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const GRAD_STEP_RANGE: (f64, f64) = (1e-5, 1e-2);

/// Value and gradient over the concatenated `[sem, color]` logits.
fn full_gradient(
    field: &ProbabilityField,
    targets: &LossTargets<'_>,
    cfg: &LossConfig,
    target: GradTarget,
) -> Result<(f64, Vec<f64>)> {
    let ns = field.sem_logits.len();
    let nc = field.color_logits.len();
    match target {
        GradTarget::Total => {
            let b = total_loss(field, targets, cfg)?;
            let mut g = b.grad_sem;
            g.extend(b.grad_color);
            Ok((b.l_total, g))
        }
        GradTarget::Term(term) => {
            let tv = evaluate_term(field, targets, cfg, term)?;
            let mut g = vec![0.0; ns + nc];
            if term == LossTerm::Sem {
                g[..ns].copy_from_slice(&tv.grad);
            } else {
                g[ns..].copy_from_slice(&tv.grad);
            }
            Ok((tv.value, g))
        }
    }
}

fn value_only(
    field: &ProbabilityField,
    targets: &LossTargets<'_>,
    cfg: &LossConfig,
    target: GradTarget,
) -> Result<f64> {
    match target {
        GradTarget::Total => Ok(total_loss(field, targets, cfg)?.l_total),
        GradTarget::Term(term) => Ok(evaluate_term(field, targets, cfg, term)?.value),
    }
}

/// Compares the analytic gradient against central finite differences over
/// every semantic and colouring logit.
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check(
    field: &ProbabilityField,
    targets: &LossTargets<'_>,
    cfg: &LossConfig,
    target: GradTarget,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    if !(GRAD_STEP_RANGE.0..=GRAD_STEP_RANGE.1).contains(&step) {
        return Err(DiscoError::Domain(format!(
            "finite-difference step must lie in [{}, {}], got {step}",
            GRAD_STEP_RANGE.0, GRAD_STEP_RANGE.1
        )));
    }
    let (value, analytic) = full_gradient(field, targets, cfg, target)?;
    let mut probe = field.clone();
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let orig = *probe.logit_mut(k);
        *probe.logit_mut(k) = orig + step;
        let up = value_only(&probe, targets, cfg, target)?;
        *probe.logit_mut(k) = orig - step;
        let down = value_only(&probe, targets, cfg, target)?;
        *probe.logit_mut(k) = orig;
        let numeric = (up - down) / (2.0 * step);
        let abs = (a - numeric).abs();
        let rel = abs / a.abs().max(numeric.abs()).max(1e-8);
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(rel);
    }
    Ok(GradCheckReport {
        target: target.name().to_string(),
        value,
        step,
        checked: analytic.len(),
        max_abs_err: max_abs,
        max_rel_grad_err: max_rel,
        tolerance,
        passed: max_rel <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cag::build_cag;
    use crate::marking::{explicit_marking, render_label_map};

    const LN2: f64 = std::f64::consts::LN_2;

    fn uniform_field(h: usize, w: usize) -> ProbabilityField {
        ProbabilityField::new(h, w, 3, vec![0.0; h * w * 2], vec![0.0; h * w * 4]).unwrap()
    }

    fn mask(rows: &[&[u32]]) -> InstanceMask {
        InstanceMask::from_rows(rows).unwrap()
    }

    /// Small deterministic pseudo-random logits for tests.
    fn lcg_values(seed: u64, n: usize, scale: f64) -> Vec<f64> {
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0) * scale
            })
            .collect()
    }

    #[test]
    fn softmax_examples() {
        let p = softmax_field(&[0.0; 4], 4).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let p = softmax_field(&[1000.0, 0.0, 0.0, 0.0], 4).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] < 1e-300);
        let p = softmax_field(&[LN2, 0.0, 0.0, 0.0], 4).unwrap();
        let expect = [0.4, 0.2, 0.2, 0.2];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(
            softmax_field(&[f64::NAN, 0.0], 2),
            Err(DiscoError::Domain(_))
        ));
        assert!(matches!(
            softmax_field(&[f64::INFINITY, 0.0], 2),
            Err(DiscoError::Domain(_))
        ));
        assert!(softmax_field(&[0.0; 3], 2).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits = lcg_values(7, 400, 50.0);
        let p = softmax_field(&logits, 4).unwrap();
        for row in p.chunks(4) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn semantic_examples() {
        let (h, w) = (3, 4);
        let fg = vec![true; h * w];
        let cfg = LossConfig::default();
        let sem: Vec<f64> = (0..h * w).flat_map(|_| [-30.0, 30.0]).collect();
        let f = ProbabilityField::new(h, w, 3, sem, vec![0.0; h * w * 4]).unwrap();
        assert!(loss_semantic(&f, &fg, &cfg).unwrap().value < 1e-6);

        let v = loss_semantic(&uniform_field(h, w), &fg, &cfg)
            .unwrap()
            .value;
        let n = (h * w) as f64;
        let s = cfg.dice_smoothing;
        let expect = LN2 + 1.0 - (n + s) / (1.5 * n + s);
        assert!((v - expect).abs() < 1e-12);
        assert!((v - (LN2 + 1.0 / 3.0)).abs() < 1e-6);

        let bg = vec![false; h * w];
        let sem: Vec<f64> = (0..h * w).flat_map(|_| [30.0, -30.0]).collect();
        let f = ProbabilityField::new(h, w, 3, sem, vec![0.0; h * w * 4]).unwrap();
        assert!(loss_semantic(&f, &bg, &cfg).unwrap().value < 1e-6);

        assert!(matches!(
            loss_semantic(&f, &bg[1..], &cfg),
            Err(DiscoError::Shape(_))
        ));
    }

    #[test]
    fn color_single_pixel_weighted_ce() {
        // p_3 = 0.5: logits (0,0,0,ln 3)
        let f =
            ProbabilityField::new(1, 1, 3, vec![0.0, 0.0], vec![0.0, 0.0, 0.0, 3f64.ln()]).unwrap();
        let labels = render_label_map(&mask(&[&[1]]), &[0, 3], 3).unwrap();
        let mut cfg = LossConfig::default();
        let full = loss_color(&f, &labels, &cfg).unwrap().value;
        cfg.class_weights = vec![0.0; 4];
        let dice_only = loss_color(&f, &labels, &cfg).unwrap().value;
        assert!((full - dice_only - 5.0 * LN2).abs() < 1e-12);
        assert!((5.0 * LN2 - 3.4657).abs() < 1e-4);
    }

    #[test]
    fn color_saturated_and_zero_weights() {
        let m = mask(&[&[1, 1, 2], &[0, 2, 2]]);
        let labels = explicit_marking(&m, &build_cag(&m).unwrap(), 3).unwrap();
        let f = ProbabilityField::from_labels(&labels, 30.0);
        let mut f2 = f.clone();
        for v in f2.color_logits_mut() {
            *v = if *v == 30.0 { 30.0 } else { -30.0 };
        }
        let cfg = LossConfig::default();
        assert!(loss_color(&f2, &labels, &cfg).unwrap().value < 1e-6);

        let zero = LossConfig {
            class_weights: vec![0.0; 4],
            ..LossConfig::default()
        };
        let u = uniform_field(2, 3);
        let v = loss_color(&u, &labels, &zero).unwrap().value;
        let dice_only = {
            // uniform p=0.25: each category c with count n_c over 6 pixels
            let counts = [1.0, 2.0, 3.0, 0.0];
            let s = zero.dice_smoothing;
            counts
                .iter()
                .map(|&nc| 1.0 - (2.0 * 0.25 * nc + s) / (6.0 * 0.25 + nc + s))
                .sum::<f64>()
                / 4.0
        };
        assert!((v - dice_only).abs() < 1e-12, "{v} vs {dice_only}");
    }

    #[test]
    fn color_shape_checks() {
        let labels = render_label_map(&mask(&[&[1, 0]]), &[0, 1], 3).unwrap();
        let f = uniform_field(1, 3);
        assert!(matches!(
            loss_color(&f, &labels, &LossConfig::default()),
            Err(DiscoError::Shape(_))
        ));
        let f5 = ProbabilityField::new(1, 2, 5, vec![0.0; 4], vec![0.0; 12]).unwrap();
        assert!(matches!(
            loss_color(&f5, &labels, &LossConfig::default()),
            Err(DiscoError::Shape(_))
        ));
    }

    #[test]
    fn cons_and_conf_closed_forms() {
        let m = mask(&[&[1, 1, 2, 2], &[1, 1, 2, 2], &[3, 3, 3, 3]]);
        let labels = explicit_marking(&m, &build_cag(&m).unwrap(), 3).unwrap();
        let u = uniform_field(3, 4);
        assert!((loss_cons(&u, &labels).unwrap().value - 0.0625).abs() < 1e-15);
        assert!((loss_conf(&u, &labels).unwrap().value - 0.5625).abs() < 1e-15);

        let bip_only = render_label_map(&mask(&[&[1, 2]]), &[0, 1, 2], 3).unwrap();
        assert_eq!(
            loss_conf(&uniform_field(1, 2), &bip_only).unwrap().value,
            0.0
        );
        let conf_only = render_label_map(&mask(&[&[1, 0]]), &[0, 3], 3).unwrap();
        assert_eq!(
            loss_cons(&uniform_field(1, 2), &conf_only).unwrap().value,
            0.0
        );

        // p_t -> 0 on bipartite pixels, p_t -> 1 on conflict pixels
        let good = ProbabilityField::from_labels(&labels, 60.0);
        assert!(loss_cons(&good, &labels).unwrap().value < 1e-40);
        assert!(loss_conf(&good, &labels).unwrap().value < 1e-40);
    }

    #[test]
    fn instance_means() {
        let m = mask(&[&[1, 2, 2]]);
        let color = vec![0.0, 0.0, 0.0, 0.0, 50.0, 0.0, 0.0, 0.0, 0.0, 50.0, 0.0, 0.0];
        let f = ProbabilityField::new(1, 3, 3, vec![0.0; 6], color).unwrap();
        let one = instance_mean_probability(&f, &m, 1).unwrap();
        assert!(one.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let two = instance_mean_probability(&f, &m, 2).unwrap();
        let expect = [0.5, 0.5, 0.0, 0.0];
        for (a, b) in two.iter().zip(expect) {
            assert!((a - b).abs() < 1e-20);
        }
        assert!((two.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            instance_mean_probability(&f, &m, 3),
            Err(DiscoError::Domain(_))
        ));
    }

    /// Two single-pixel instances with prescribed softmax vectors.
    fn two_pixel_field(pa: [f64; 4], pb: [f64; 4]) -> ProbabilityField {
        let logit = |p: f64| if p == 0.0 { -800.0 } else { p.ln() };
        let color = pa.iter().chain(&pb).map(|&p| logit(p)).collect();
        ProbabilityField::new(1, 2, 3, vec![0.0; 4], color).unwrap()
    }

    #[test]
    fn adjacency_closed_forms() {
        let m = mask(&[&[1, 2]]);
        let g = build_cag(&m).unwrap();
        let cfg = LossConfig::default();
        let ortho = two_pixel_field([0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]);
        assert!(loss_adj(&ortho, &m, &g, &cfg).unwrap().value.abs() < 1e-300);
        let same = uniform_field(1, 2);
        let v = loss_adj(&same, &m, &g, &cfg).unwrap().value;
        assert!((v - 0.25 / (0.25 + 1e-8)).abs() < 1e-15 && v < 1.0);
        let half = two_pixel_field([0.5, 0.5, 0.0, 0.0], [0.5, 0.0, 0.5, 0.0]);
        let v = loss_adj(&half, &m, &g, &cfg).unwrap().value;
        assert!((v - 0.5).abs() < 1e-7);
        assert!((v - 0.25 / (0.5 + 1e-8)).abs() < 1e-14);
        // no edges
        let apart = mask(&[&[1, 0, 2]]);
        let v = loss_adj(
            &uniform_field(1, 3),
            &apart,
            &build_cag(&apart).unwrap(),
            &cfg,
        )
        .unwrap();
        assert_eq!(v.value, 0.0);
    }

    fn triangle_scene() -> (InstanceMask, AdjacencyGraph, DiscoLabelMap) {
        let m = mask(&[&[1, 1, 2, 2], &[1, 1, 2, 2], &[3, 3, 3, 3]]);
        let g = build_cag(&m).unwrap();
        let y = explicit_marking(&m, &g, 3).unwrap();
        (m, g, y)
    }

    fn random_field(seed: u64, h: usize, w: usize) -> ProbabilityField {
        ProbabilityField::new(
            h,
            w,
            3,
            lcg_values(seed, h * w * 2, 2.0),
            lcg_values(seed ^ 99, h * w * 4, 2.0),
        )
        .unwrap()
    }

    #[test]
    fn total_loss_examples() {
        let (m, g, y) = triangle_scene();
        let sem = semantic_target(&m);
        let targets = LossTargets {
            semantic: &sem,
            labels: &y,
            mask: &m,
            graph: &g,
        };
        let f = random_field(3, 3, 4);

        let zero = LossConfig {
            term_weights: TermWeights::zero(),
            ..LossConfig::default()
        };
        let b = total_loss(&f, &targets, &zero).unwrap();
        assert_eq!(b.l_total, 0.0);
        assert!(b.grad_color.iter().chain(&b.grad_sem).all(|&v| v == 0.0));

        let b = total_loss(&f, &targets, &LossConfig::default()).unwrap();
        let sum = b.l_sem + b.l_color + b.l_cons + b.l_conf + b.l_adj;
        assert!((b.l_total - sum).abs() < 1e-12);

        // cos = 0.5 example with λ_adj = 2
        let m2 = mask(&[&[1, 2]]);
        let g2 = build_cag(&m2).unwrap();
        let y2 = explicit_marking(&m2, &g2, 3).unwrap();
        let sem2 = semantic_target(&m2);
        let t2 = LossTargets {
            semantic: &sem2,
            labels: &y2,
            mask: &m2,
            graph: &g2,
        };
        let cfg = LossConfig {
            term_weights: TermWeights {
                adj: 2.0,
                ..TermWeights::zero()
            },
            ..LossConfig::default()
        };
        let half = two_pixel_field([0.5, 0.5, 0.0, 0.0], [0.5, 0.0, 0.5, 0.0]);
        assert!((total_loss(&half, &t2, &cfg).unwrap().l_total - 1.0).abs() < 1e-7);
    }

    #[test]
    fn perfect_bipartite_scene_has_near_zero_total() {
        let m = mask(&[&[1, 1, 2, 2], &[1, 1, 2, 2]]);
        let g = build_cag(&m).unwrap();
        let y = explicit_marking(&m, &g, 3).unwrap();
        let sem = semantic_target(&m);
        let targets = LossTargets {
            semantic: &sem,
            labels: &y,
            mask: &m,
            graph: &g,
        };
        let mut f = ProbabilityField::from_labels(&y, 30.0);
        for v in f.color_logits.iter_mut().chain(f.sem_logits.iter_mut()) {
            if *v == 0.0 {
                *v = -30.0;
            }
        }
        let b = total_loss(&f, &targets, &LossConfig::default()).unwrap();
        assert!(b.l_total < 1e-5, "{b:?}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (m, g, y) = triangle_scene();
        let sem = semantic_target(&m);
        let targets = LossTargets {
            semantic: &sem,
            labels: &y,
            mask: &m,
            graph: &g,
        };
        let cfg = LossConfig::default();
        for seed in 0..5 {
            let f = random_field(seed, 3, 4);
            for target in LossTerm::ALL
                .map(GradTarget::Term)
                .into_iter()
                .chain([GradTarget::Total])
            {
                let r = grad_check(&f, &targets, &cfg, target, 1e-5, 1e-4).unwrap();
                assert!(r.passed, "{r:?}");
            }
        }
    }

    #[test]
    fn cons_grad_check_small_field() {
        let m = mask(&[&[1, 2], &[1, 2]]);
        let g = build_cag(&m).unwrap();
        let y = explicit_marking(&m, &g, 3).unwrap();
        let sem = semantic_target(&m);
        let targets = LossTargets {
            semantic: &sem,
            labels: &y,
            mask: &m,
            graph: &g,
        };
        let f = random_field(11, 2, 2);
        let r = grad_check(
            &f,
            &targets,
            &LossConfig::default(),
            GradTarget::Term(LossTerm::Cons),
            1e-3,
            1e-4,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn zero_weights_zero_gradients() {
        let (m, g, y) = triangle_scene();
        let sem = semantic_target(&m);
        let targets = LossTargets {
            semantic: &sem,
            labels: &y,
            mask: &m,
            graph: &g,
        };
        let cfg = LossConfig {
            term_weights: TermWeights::zero(),
            ..LossConfig::default()
        };
        let r = grad_check(
            &random_field(5, 3, 4),
            &targets,
            &cfg,
            GradTarget::Total,
            1e-4,
            1e-4,
        )
        .unwrap();
        assert_eq!((r.max_abs_err, r.value), (0.0, 0.0));
        assert!(grad_check(
            &random_field(5, 3, 4),
            &targets,
            &cfg,
            GradTarget::Total,
            0.5,
            1e-4
        )
        .is_err());
    }

    #[test]
    fn push_pull_monotonicity() {
        let (_, _, y) = triangle_scene();
        let f = random_field(21, 3, 4);
        let t = 3;
        for (i, &c) in y.categories().iter().enumerate() {
            let mut up = f.clone();
            up.color_logits_mut()[i * 4 + t] += 0.5;
            let before_cons = loss_cons(&f, &y).unwrap().value;
            let before_conf = loss_conf(&f, &y).unwrap().value;
            if (1..3).contains(&c) {
                assert!(loss_cons(&up, &y).unwrap().value > before_cons);
            } else if c == 3 {
                assert!(loss_conf(&up, &y).unwrap().value < before_conf);
            }
        }
    }

    #[test]
    fn bipartite_channel_swap_symmetry() {
        let (m, g, y) = triangle_scene();
        let f = random_field(8, 3, 4);
        let swap = |c: u8| match c {
            1 => 2,
            2 => 1,
            c => c,
        };
        let swapped_colors: Vec<u8> = y.node_colors().iter().map(|&c| swap(c)).collect();
        let ys = render_label_map(&m, &swapped_colors, 3).unwrap();
        let mut fs = f.clone();
        for row in fs.color_logits_mut().chunks_mut(4) {
            row.swap(1, 2);
        }
        let sem = semantic_target(&m);
        let a = total_loss(
            &f,
            &LossTargets {
                semantic: &sem,
                labels: &y,
                mask: &m,
                graph: &g,
            },
            &LossConfig::default(),
        )
        .unwrap();
        let b = total_loss(
            &fs,
            &LossTargets {
                semantic: &sem,
                labels: &ys,
                mask: &m,
                graph: &g,
            },
            &LossConfig::default(),
        )
        .unwrap();
        for term in LossTerm::ALL {
            assert!((a.term(term) - b.term(term)).abs() < 1e-12, "{term:?}");
        }
    }

    #[test]
    fn field_csv_round_trip() {
        let f = random_field(4, 3, 2);
        let text = f.to_csv();
        assert!(text.starts_with("y,x,sem_0,sem_1,color_0,color_1,color_2,color_3\n"));
        assert_eq!(ProbabilityField::from_csv(&text).unwrap(), f);
        assert!(ProbabilityField::from_csv(
            "y,x,sem_0,sem_1,color_0,color_1,color_2,color_3\n0,0,1,2,3,4,5,6\n0,0,1,2,3,4,5,6\n"
        )
        .is_err());
        assert!(ProbabilityField::from_csv("a,b\n").is_err());
        assert!(ProbabilityField::from_csv(
            "y,x,sem_0,sem_1,color_0,color_1,color_2,color_3\n0,0,1,2,3,4,5\n"
        )
        .is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LossConfig::default().validate().is_ok());
        let mut bad = LossConfig::default();
        bad.class_weights[0] = -1.0;
        assert!(bad.validate().is_err());
        let bad = LossConfig {
            cosine_epsilon: 0.0,
            ..LossConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(
            LossConfig::default().class_weights,
            vec![1.0, 1.0, 1.0, 5.0]
        );
    }

    #[test]
    fn non_finite_logits_rejected() {
        assert!(matches!(
            ProbabilityField::new(1, 1, 3, vec![0.0, f64::NAN], vec![0.0; 4]),
            Err(DiscoError::Domain(_))
        ));
    }
}
