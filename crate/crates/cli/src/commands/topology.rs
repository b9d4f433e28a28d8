//! `analyze` and `report`: per-image topology and corpus tables.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use disco_core::cag::build_cag;
use disco_core::topology::{
    analyze_graph, summarize_corpus, AnalysisOptions, TopologyReport, DEFAULT_CYCLE_CAP,
};
use rayon::ThreadPool;
use serde_json::Value;

use crate::args::{AnalyzeArgs, ReportArgs};
use crate::io::{self, create_dir, par_map, require_out, resolve_inputs, unique_stems, write_text};

/// Name of the aggregate row in corpus tables.
pub const CORPUS_ROW: &str = "ALL";
const REPORT_SUFFIX: &str = ".topology.json";

fn named_json(name: &str, report: &TopologyReport) -> Value {
    let mut v = serde_json::to_value(report).expect("reports serialize");
    v.as_object_mut()
        .expect("reports serialize to objects")
        .insert("name".into(), Value::String(name.to_string()));
    v
}

/// Writes `corpus.json`, `corpus.csv` and `odd_cycles.csv`.
fn write_corpus(out: &Path, named: &[(String, TopologyReport)]) -> Result<()> {
    let reports: Vec<TopologyReport> = named.iter().map(|(_, r)| r.clone()).collect();
    let corpus = summarize_corpus(&reports)?;

    let images: Vec<Value> = named.iter().map(|(n, r)| named_json(n, r)).collect();
    let doc = serde_json::json!({ "images": images, "corpus": named_json(CORPUS_ROW, &corpus) });
    write_text(&out.join("corpus.json"), &io::to_json(&doc))?;

    let mut csv = String::from(TopologyReport::CSV_HEADER);
    csv.push('\n');
    let mut cycles = String::from(TopologyReport::CYCLE_CSV_HEADER);
    cycles.push('\n');
    for (name, r) in named {
        csv.push_str(&r.csv_row(name));
        csv.push('\n');
        cycles.push_str(&r.cycle_csv_rows(name));
    }
    csv.push_str(&corpus.csv_row(CORPUS_ROW));
    csv.push('\n');
    cycles.push_str(&corpus.cycle_csv_rows(CORPUS_ROW));
    write_text(&out.join("corpus.csv"), &csv)?;
    write_text(&out.join("odd_cycles.csv"), &cycles)
}

pub fn analyze(args: &AnalyzeArgs, pool: &ThreadPool) -> Result<()> {
    let out = require_out(&args.out)?;
    let paths = resolve_inputs(&args.inputs, io::MASK_EXTENSIONS, "masks")?;
    let names = unique_stems(&paths)?;
    let opts = AnalysisOptions {
        max_cycle_len: args.cycle_cap.unwrap_or(DEFAULT_CYCLE_CAP),
        exact: args.exact,
    };
    create_dir(out)?;
    let jobs: Vec<(&PathBuf, &String)> = paths.iter().zip(&names).collect();
    let named = par_map(pool, &jobs, |&(path, name)| {
        let mask = io::read_compact_mask(path)?;
        let report = analyze_graph(&build_cag(&mask)?, &opts)
            .with_context(|| format!("analysing {}", path.display()))?;
        write_text(
            &out.join(format!("{name}{REPORT_SUFFIX}")),
            &io::to_json(&named_json(name, &report)),
        )?;
        Ok((name.clone(), report))
    })?;
    write_corpus(out, &named)
}

fn read_report(path: &Path) -> Result<(String, TopologyReport)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut v: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Some(obj) = v.as_object_mut() else {
        bail!("{}: expected a JSON object", path.display());
    };
    let name = match obj.remove("name") {
        Some(Value::String(s)) => s,
        _ => io::stem(path).trim_end_matches(".topology").to_string(),
    };
    let report = serde_json::from_value(v)
        .with_context(|| format!("{}: not a topology report", path.display()))?;
    Ok((name, report))
}

pub fn report(args: &ReportArgs, pool: &ThreadPool) -> Result<()> {
    let out = require_out(&args.out)?;
    let paths = resolve_inputs(&args.inputs, &["json"], "topology reports")?;
    let paths: Vec<PathBuf> = paths
        .into_iter()
        .filter(|p| p.to_string_lossy().ends_with(REPORT_SUFFIX))
        .collect();
    if paths.is_empty() {
        return Err(
            crate::UsageError(format!("no *{REPORT_SUFFIX} files among the inputs")).into(),
        );
    }
    let named = par_map(pool, &paths, |p| read_report(p))?;
    let mut seen = std::collections::BTreeSet::new();
    for (name, _) in &named {
        if !seen.insert(name) {
            bail!("two reports are both named '{name}'");
        }
    }
    create_dir(out)?;
    write_corpus(out, &named)
}
