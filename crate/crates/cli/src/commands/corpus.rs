//! `evaluate` and `synth`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use disco_core::mask_io::{save_mask, MaskFormat};
use disco_core::metrics::{evaluate_pair, MetricScores};
use disco_core::synth::{generate_mask, SynthConfig, SynthProfile};
use rayon::ThreadPool;
use serde::Serialize;

use crate::args::{EvaluateArgs, SynthArgs};
use crate::io::{self, create_dir, par_map, require_out, resolve_inputs, unique_stems, write_text};
use crate::UsageError;

pub const MEAN_ROW: &str = "MEAN";

#[derive(Serialize)]
struct NamedScores<'a> {
    name: &'a str,
    #[serde(flatten)]
    scores: MetricScores,
}

pub fn evaluate(args: &EvaluateArgs, pool: &ThreadPool) -> Result<()> {
    let out = require_out(&args.out)?;
    let gt_paths = resolve_inputs(&args.gt, io::MASK_EXTENSIONS, "ground-truth masks")?;
    let pred_paths = resolve_inputs(&args.pred, io::MASK_EXTENSIONS, "predicted masks")?;
    let gt_names = unique_stems(&gt_paths)?;
    let preds: BTreeMap<String, PathBuf> = unique_stems(&pred_paths)?
        .into_iter()
        .zip(pred_paths)
        .collect();
    let mut jobs = Vec::new();
    for (name, gt) in gt_names.iter().zip(&gt_paths) {
        match preds.get(name) {
            Some(pred) => jobs.push((name, gt, pred)),
            None => bail!("no prediction named '{name}' for {}", gt.display()),
        }
    }
    if let Some(extra) = preds.keys().find(|k| !gt_names.contains(k)) {
        bail!("prediction '{extra}' has no ground truth");
    }
    create_dir(out)?;
    let scores = par_map(pool, &jobs, |&(_, gt, pred)| {
        Ok(evaluate_pair(&io::read_mask(gt)?, &io::read_mask(pred)?)?)
    })?;
    let mean = MetricScores::mean(&scores).expect("at least one pair");

    let mut csv = String::from(MetricScores::CSV_HEADER);
    csv.push('\n');
    for ((name, _, _), s) in jobs.iter().zip(&scores) {
        csv.push_str(&s.csv_row(name));
        csv.push('\n');
    }
    csv.push_str(&mean.csv_row(MEAN_ROW));
    csv.push('\n');
    write_text(&out.join("metrics.csv"), &csv)?;

    let images: Vec<NamedScores> = jobs
        .iter()
        .zip(&scores)
        .map(|((name, _, _), &scores)| NamedScores { name, scores })
        .collect();
    let doc = serde_json::json!({ "images": images, "mean": mean });
    write_text(&out.join("metrics.json"), &io::to_json(&doc))
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    seed: u64,
    instances: usize,
}

pub fn synth(args: &SynthArgs, pool: &ThreadPool) -> Result<()> {
    let out = require_out(&args.out)?;
    let defaults = SynthConfig::default();
    let profile: SynthProfile = match &args.profile {
        Some(p) => p
            .parse()
            .map_err(|e: disco_core::DiscoError| UsageError(e.to_string()))?,
        None => defaults.profile,
    };
    let base = SynthConfig {
        seed: args.seed.unwrap_or(defaults.seed),
        height: args.height.unwrap_or(defaults.height),
        width: args.width.unwrap_or(defaults.width),
        target_instance_count: args.count.unwrap_or(defaults.target_instance_count),
        min_spacing: args.spacing.unwrap_or(defaults.min_spacing),
        growth_rounds: args.rounds.unwrap_or(defaults.growth_rounds),
        profile,
    };
    let num = args.num.unwrap_or(1);
    create_dir(out)?;
    let indices: Vec<u64> = (0..num as u64).collect();
    let entries = par_map(pool, &indices, |&i| {
        let cfg = base.nth(i);
        let mask = generate_mask(&cfg)?;
        let file = format!("{}_{i:04}.pgm", profile.name());
        save_mask(&mask, &out.join(&file), MaskFormat::Pgm)?;
        Ok(ManifestEntry {
            file,
            seed: cfg.seed,
            instances: mask.instance_count(),
        })
    })?;
    let doc = serde_json::json!({ "config": base, "images": entries });
    write_text(&out.join("manifest.json"), &io::to_json(&doc))
}
