//! `mark` and `color`: colour assignments for each contact graph.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use disco_core::cag::build_cag;
use disco_core::marking::{
    explicit_marking_from, greedy_coloring, greedy_k_coloring, GreedyOrder, DEFAULT_CONFLICT_COLOR,
};
use disco_core::mask_io::{save_mask, MaskFormat};
use disco_core::topology::{contains_k4, heuristic_conflict_set};
use rayon::ThreadPool;
use serde::Serialize;

use crate::args::{ColorArgs, MarkArgs};
use crate::io::{self, create_dir, par_map, require_out, resolve_inputs, unique_stems, write_text};

pub fn mark(args: &MarkArgs, pool: &ThreadPool) -> Result<()> {
    let out = require_out(&args.out)?;
    let paths = resolve_inputs(&args.inputs, io::MASK_EXTENSIONS, "masks")?;
    let names = unique_stems(&paths)?;
    let t = args.t.unwrap_or(DEFAULT_CONFLICT_COLOR);
    create_dir(out)?;
    let jobs: Vec<(&PathBuf, &String)> = paths.iter().zip(&names).collect();
    par_map(pool, &jobs, |&(path, name)| {
        let mask = io::read_compact_mask(path)?;
        let g = build_cag(&mask)?;
        let analysis = heuristic_conflict_set(&g);
        let labels = explicit_marking_from(&mask, &g, &analysis, t)?;
        save_mask(
            &labels.to_mask(),
            &out.join(format!("{name}.disco.pgm")),
            MaskFormat::Pgm,
        )?;
        let mut sidecar = labels.sidecar_json();
        let obj = sidecar.as_object_mut().expect("sidecar is an object");
        obj.insert("name".into(), name.as_str().into());
        obj.insert(
            "conflict_nodes".into(),
            serde_json::to_value(&analysis.conflict_set)?,
        );
        obj.insert(
            "secondary_conflict_edges".into(),
            serde_json::to_value(&analysis.secondary_conflict_edges)?,
        );
        write_text(
            &out.join(format!("{name}.disco.json")),
            &io::to_json(&sidecar),
        )
    })?;
    Ok(())
}

#[derive(Serialize)]
struct ColoringRecord {
    name: String,
    nodes: usize,
    edges: usize,
    max_degree: usize,
    colors_used: usize,
    colors: BTreeMap<usize, usize>,
    k: usize,
    k_coloring_found: bool,
    k_colors: Option<BTreeMap<usize, usize>>,
    contains_k4: bool,
}

fn by_node(colors: &[usize]) -> BTreeMap<usize, usize> {
    colors.iter().copied().enumerate().skip(1).collect()
}

pub fn color(args: &ColorArgs, pool: &ThreadPool) -> Result<()> {
    let out = require_out(&args.out)?;
    let paths = resolve_inputs(&args.inputs, io::MASK_EXTENSIONS, "masks")?;
    let names = unique_stems(&paths)?;
    let k = args.k.unwrap_or(3);
    create_dir(out)?;
    let jobs: Vec<(&PathBuf, &String)> = paths.iter().zip(&names).collect();
    let records = par_map(pool, &jobs, |&(path, name)| {
        let g = build_cag(&io::read_compact_mask(path)?)?;
        let greedy = greedy_coloring(&g, GreedyOrder::IdAscending);
        let bounded = greedy_k_coloring(&g, k);
        let record = ColoringRecord {
            name: name.clone(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            max_degree: g.max_degree(),
            colors_used: greedy.colors_used,
            colors: by_node(&greedy.colors),
            k,
            k_coloring_found: bounded.is_some(),
            k_colors: bounded.as_deref().map(by_node),
            contains_k4: contains_k4(&g),
        };
        write_text(
            &out.join(format!("{name}.coloring.json")),
            &io::to_json(&record),
        )?;
        Ok(record)
    })?;
    let mut csv =
        String::from("name,nodes,edges,max_degree,colors_used,k,k_coloring_found,contains_k4\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.name,
            r.nodes,
            r.edges,
            r.max_degree,
            r.colors_used,
            r.k,
            r.k_coloring_found,
            r.contains_k4
        ));
    }
    write_text(&out.join("coloring.csv"), &csv)
}
