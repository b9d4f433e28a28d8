//! End-to-end runs of the `disco` binary.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use disco_core::cag::build_cag;
use disco_core::loss::ProbabilityField;
use disco_core::marking::explicit_marking;
use disco_core::mask_io::{load_mask, save_mask, InstanceMask, MaskFormat};
use serde_json::Value;

fn disco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disco"))
        .args(args)
        .env_remove("DISCO_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = disco(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn triangle() -> InstanceMask {
    InstanceMask::from_rows(&[&[1, 1, 2, 2], &[1, 1, 2, 2], &[3, 3, 3, 3]]).unwrap()
}

#[test]
fn mark_triangle_has_one_conflict_instance() {
    let dir = tempfile::tempdir().unwrap();
    let tri = dir.path().join("tri.pgm");
    save_mask(&triangle(), &tri, MaskFormat::Pgm).unwrap();
    let out = dir.path().join("labels");
    ok(&["mark", "--in", p(&tri), "--out", p(&out)]);

    let y = load_mask(&out.join("tri.disco.pgm"), MaskFormat::Pgm).unwrap();
    let values: BTreeSet<u32> = y.labels().iter().copied().collect();
    assert!(values.is_subset(&BTreeSet::from([0, 1, 2, 3])));
    let m = triangle();
    let at_three: BTreeSet<u32> = m
        .labels()
        .iter()
        .zip(y.labels())
        .filter(|(_, &c)| c == 3)
        .map(|(&l, _)| l)
        .collect();
    assert_eq!(at_three.len(), 1);

    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("tri.disco.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["name"], "tri");
    assert_eq!(sidecar["conflict_nodes"].as_array().unwrap().len(), 1);
}

#[test]
fn losscheck_reports_small_gradient_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = triangle();
    let mask = dir.path().join("m.pgm");
    save_mask(&m, &mask, MaskFormat::Pgm).unwrap();
    let y = explicit_marking(&m, &build_cag(&m).unwrap(), 3).unwrap();
    let labels = dir.path().join("y.pgm");
    save_mask(&y.to_mask(), &labels, MaskFormat::Pgm).unwrap();
    let mut field = ProbabilityField::from_labels(&y, 1.5);
    for (i, v) in field.color_logits_mut().iter_mut().enumerate() {
        *v += (i as f64 * 0.37).sin();
    }
    let csv = dir.path().join("field.csv");
    std::fs::write(&csv, field.to_csv()).unwrap();

    let out = ok(&[
        "losscheck",
        "--field",
        p(&csv),
        "--mask",
        p(&mask),
        "--labels",
        p(&labels),
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    for term in ["sem", "color", "cons", "conf", "adj", "total"] {
        let r = &report[term];
        assert!(
            r["max_rel_grad_err"].as_f64().unwrap() <= 1e-4,
            "{term}: {r}"
        );
        assert_eq!(r["passed"], true);
        assert!(r["value"].as_f64().unwrap().is_finite());
    }
}

#[test]
fn sparse_corpus_has_no_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let masks = dir.path().join("masks");
    let report = dir.path().join("report");
    ok(&[
        "synth",
        "--profile",
        "sparse",
        "--spacing",
        "3",
        "--num",
        "5",
        "--out",
        p(&masks),
    ]);
    let pattern = format!("{}/*.pgm", p(&masks));
    ok(&["analyze", "--in", &pattern, "--out", p(&report)]);
    let csv = std::fs::read_to_string(report.join("corpus.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header
        .iter()
        .position(|&h| h == "conflict_node_ratio")
        .unwrap();
    assert_eq!(csv.lines().count(), 7);
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(col), Some("0.000000"), "{line}");
    }
}

#[test]
fn report_of_single_image_matches_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let tri = dir.path().join("tri.pgm");
    save_mask(&triangle(), &tri, MaskFormat::Pgm).unwrap();
    let analyzed = dir.path().join("a");
    let reported = dir.path().join("r");
    ok(&["analyze", "--in", p(&tri), "--out", p(&analyzed)]);
    ok(&[
        "report",
        "--in",
        p(&analyzed.join("tri.topology.json")),
        "--out",
        p(&reported),
    ]);
    for f in ["corpus.json", "corpus.csv", "odd_cycles.csv"] {
        assert_eq!(
            std::fs::read(analyzed.join(f)).unwrap(),
            std::fs::read(reported.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let from_file = dir.path().join("file");
    let from_flag = dir.path().join("flag");
    std::fs::write(
        &cfg,
        serde_json::json!({ "profile": "dense", "num": 2, "seed": 9, "out": p(&from_file), "threads": 2 }).to_string(),
    )
    .unwrap();
    ok(&["--config", p(&cfg), "synth"]);
    ok(&[
        "--config",
        p(&cfg),
        "synth",
        "--out",
        p(&from_flag),
        "--seed",
        "10",
    ]);
    let manifest = |d: &Path| -> Value {
        serde_json::from_str(&std::fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap()
    };
    assert_eq!(manifest(&from_file)["config"]["seed"], 9);
    assert_eq!(manifest(&from_flag)["config"]["seed"], 10);
    assert_eq!(manifest(&from_flag)["config"]["profile"], "dense");
    assert!(from_file.join("dense_0001.pgm").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    let out = dir.path().join("o");
    assert_eq!(
        disco(&["--config", p(&cfg), "synth", "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(disco(&["analyze", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        disco(&["analyze", "--in", "does/not/exist/*.pgm", "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(disco(&["frobnicate"]).status.code(), Some(2));

    let broken = dir.path().join("broken.pgm");
    std::fs::write(&broken, "P2\n2 2\n255\n1 2 3\n").unwrap();
    let r = disco(&["analyze", "--in", p(&broken), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("disco: "));

    let r = disco(&[
        "synth",
        "--height",
        "2",
        "--width",
        "2",
        "--count",
        "50",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(disco(&["--help"]).status.code(), Some(0));
}

#[test]
fn thread_env_fallback_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let status = Command::new(env!("CARGO_BIN_EXE_disco"))
        .args(["synth", "--num", "2", "--out", p(&out)])
        .env("DISCO_THREADS", "3")
        .status()
        .unwrap();
    assert!(status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_disco"))
        .args(["synth", "--num", "2", "--out", p(&out)])
        .env("DISCO_THREADS", "many")
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}

#[test]
fn decode_and_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = triangle();
    let y = explicit_marking(&m, &build_cag(&m).unwrap(), 3).unwrap();
    let fields = dir.path().join("fields");
    std::fs::create_dir(&fields).unwrap();
    std::fs::write(
        fields.join("tri.csv"),
        ProbabilityField::from_labels(&y, 3.0).to_csv(),
    )
    .unwrap();
    let decoded = dir.path().join("decoded");
    ok(&["decode", "--in", p(&fields), "--out", p(&decoded)]);
    let provenance: Value = serde_json::from_str(
        &std::fs::read_to_string(decoded.join("tri.provenance.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(provenance["instances"].as_array().unwrap().len(), 3);

    let gt = dir.path().join("gt");
    let pred = dir.path().join("pred");
    std::fs::create_dir(&gt).unwrap();
    std::fs::create_dir(&pred).unwrap();
    save_mask(&m, &gt.join("tri.pgm"), MaskFormat::Pgm).unwrap();
    std::fs::copy(decoded.join("tri.decoded.pgm"), pred.join("tri.pgm")).unwrap();
    let metrics = dir.path().join("metrics");
    ok(&[
        "evaluate",
        "--gt",
        p(&gt),
        "--pred",
        p(&pred),
        "--out",
        p(&metrics),
    ]);
    let csv = std::fs::read_to_string(metrics.join("metrics.csv")).unwrap();
    assert_eq!(
        csv,
        "name,dice,aji,dq,sq,pq\ntri,1.000000,1.000000,1.000000,1.000000,1.000000\nMEAN,1.000000,1.000000,1.000000,1.000000,1.000000\n"
    );

    std::fs::copy(gt.join("tri.pgm"), gt.join("extra.pgm")).unwrap();
    let r = disco(&[
        "evaluate",
        "--gt",
        p(&gt),
        "--pred",
        p(&pred),
        "--out",
        p(&metrics),
    ]);
    assert_eq!(r.status.code(), Some(1));
}
