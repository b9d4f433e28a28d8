//! `decode` and `losscheck`: consumers of probability-field CSVs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use disco_core::cag::build_cag;
use disco_core::decode::{decode_instances_with, DecodeOptions};
use disco_core::loss::{
    grad_check, semantic_target, total_loss, GradTarget, LossConfig, LossTargets, LossTerm,
    ProbabilityField,
};
use disco_core::marking::{explicit_marking, DiscoLabelMap};
use disco_core::mask_io::{save_mask, MaskFormat};
use rayon::ThreadPool;
use serde::Serialize;

use crate::args::{DecodeArgs, LosscheckArgs};
use crate::io::{self, create_dir, par_map, require_out, resolve_inputs, unique_stems, write_text};
use crate::UsageError;

fn read_field(path: &Path) -> Result<ProbabilityField> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ProbabilityField::from_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn decode(args: &DecodeArgs, pool: &ThreadPool) -> Result<()> {
    let out = require_out(&args.out)?;
    let paths = resolve_inputs(&args.inputs, &["csv"], "probability fields")?;
    let names = unique_stems(&paths)?;
    let opts = DecodeOptions {
        min_size: args.min_size,
    };
    create_dir(out)?;
    let jobs: Vec<(&PathBuf, &String)> = paths.iter().zip(&names).collect();
    par_map(pool, &jobs, |&(path, name)| {
        let decoded = decode_instances_with(&read_field(path)?, &opts);
        save_mask(
            &decoded.mask,
            &out.join(format!("{name}.decoded.pgm")),
            MaskFormat::Pgm,
        )?;
        write_text(
            &out.join(format!("{name}.provenance.json")),
            &io::to_json(&decoded.provenance_json()),
        )
    })?;
    Ok(())
}

fn loss_config(args: &LosscheckArgs, t: u8) -> Result<LossConfig> {
    let mut cfg = LossConfig::for_conflict_color(t);
    if !args.class_weights.is_empty() {
        if args.class_weights.len() != t as usize + 1 {
            return Err(UsageError(format!(
                "--class-weights needs {} values for t = {t}, got {}",
                t as usize + 1,
                args.class_weights.len()
            ))
            .into());
        }
        cfg.class_weights = args.class_weights.clone();
    }
    let tw = &mut cfg.term_weights;
    for (slot, v) in [
        (&mut tw.sem, args.lambda_sem),
        (&mut tw.color, args.lambda_color),
        (&mut tw.cons, args.lambda_cons),
        (&mut tw.conf, args.lambda_conf),
        (&mut tw.adj, args.lambda_adj),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if let Some(e) = args.cosine_epsilon {
        cfg.cosine_epsilon = e;
    }
    if let Some(s) = args.dice_smoothing {
        cfg.dice_smoothing = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TermCheck {
    value: f64,
    max_rel_grad_err: f64,
    passed: bool,
}

pub fn losscheck(args: &LosscheckArgs, _pool: &ThreadPool) -> Result<()> {
    let field_path = args
        .field
        .as_deref()
        .ok_or_else(|| UsageError("--field is required".into()))?;
    let mask_path = args
        .mask
        .as_deref()
        .ok_or_else(|| UsageError("--mask is required".into()))?;
    let field = read_field(field_path)?;
    let mask = io::read_compact_mask(mask_path)?;
    let g = build_cag(&mask)?;
    let t = field.conflict_color();
    let labels = match &args.labels {
        Some(p) => DiscoLabelMap::from_categories(&io::read_mask(p)?, t)
            .with_context(|| format!("reading labels {}", p.display()))?,
        None => explicit_marking(&mask, &g, t)?,
    };
    let cfg = loss_config(args, t)?;
    let step = args.step.unwrap_or(1e-5);
    let tol = args.tol.unwrap_or(1e-4);
    let semantic = semantic_target(&mask);
    let targets = LossTargets {
        semantic: &semantic,
        labels: &labels,
        mask: &mask,
        graph: &g,
    };
    // Surface shape mismatches before the gradient sweep.
    total_loss(&field, &targets, &cfg)?;

    let mut report = BTreeMap::new();
    let mut failed = Vec::new();
    let checks = LossTerm::ALL
        .map(GradTarget::Term)
        .into_iter()
        .chain([GradTarget::Total]);
    for target in checks {
        let r = grad_check(&field, &targets, &cfg, target, step, tol)?;
        if !r.passed {
            failed.push(r.target.clone());
        }
        report.insert(
            r.target,
            TermCheck {
                value: r.value,
                max_rel_grad_err: r.max_rel_grad_err,
                passed: r.passed,
            },
        );
    }
    let json = io::to_json(&report);
    match &args.out {
        Some(p) => write_text(p, &json)?,
        None => print!("{json}"),
    }
    if !failed.is_empty() {
        bail!(
            "gradient check above tolerance {tol} for: {}",
            failed.join(", ")
        );
    }
    Ok(())
}
