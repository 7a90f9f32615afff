use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use dsmetric::quotient::{glue_by_correspondence, Correspondence};
use dsmetric::relation::ds_distance;
use dsmetric::{DynamicalRelation, FiniteMetricSpace};
use serde_json::Value;
use tempfile::TempDir;

fn dsmetric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsmetric")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn line_relation(xs: &[f64], pairs: &[(usize, usize)]) -> String {
    let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    serde_json::json!({ "space": { "kind": "euclidean", "points": pts }, "pairs": pairs }).to_string()
}

#[test]
fn singleton_identities_are_at_the_hausdorff_distance() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "id0.json", &line_relation(&[0.0, 1.0], &[(0, 0)]));
    let g = write(dir.path(), "id1.json", &line_relation(&[0.0, 1.0], &[(1, 1)]));
    let out = dir.path().join("w.json");
    let o = dsmetric(&["ds", "--f", s(&f), "--g", s(&g), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().next(), Some("1.0"));
    let w = read_json(&out);
    assert_eq!(w["schema"], "dsmetric/1");
    assert_eq!(w["value"], 1.0);
    assert_eq!(w["direction"], "f→g");
    assert_eq!(w["from"], serde_json::json!([0, 0]));
    assert_eq!(w["to"], serde_json::json!([1, 1]));
}

#[test]
fn asymmetric_matrix_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"kind":"matrix","dist":[[0,1],[2,0]]}"#);
    let o = dsmetric(&["validate", "--input", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("AsymmetricMatrix"));

    let good = write(dir.path(), "good.json", r#"{"schema":"dsmetric/1","kind":"matrix","dist":[[0,1],[1,0]]}"#);
    let o = dsmetric(&["validate", "--input", s(&good)]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("valid: metric space with 2 points"));

    let garbage = write(dir.path(), "garbage.json", "{ not json");
    assert_eq!(dsmetric(&["validate", "--input", s(&garbage)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(dsmetric(&["validate", "--input", s(&missing)]).status.code(), Some(1));
}

#[test]
fn unknown_command_is_rejected() {
    let o = dsmetric(&["teleport"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn translated_conjugates_bracket_to_zero() {
    let dir = TempDir::new().unwrap();
    let cycle = [(0, 1), (1, 2), (2, 0)];
    let a = write(dir.path(), "a.json", &line_relation(&[0.0, 1.0, 3.0], &cycle));
    let b = write(dir.path(), "b.json", &line_relation(&[5.0, 6.0, 8.0], &cycle));
    for extra in [&[][..], &["--euclidean"][..]] {
        let out = dir.path().join("dgh.json");
        let mut args = vec!["dgh", "--f", s(&a), "--g", s(&b), "--out", s(&out)];
        args.extend_from_slice(extra);
        let o = dsmetric(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v = read_json(&out);
        assert_eq!(v["lower"], 0.0);
        assert!(v["upper"].as_f64().unwrap() <= 1e-9, "{v}");
        assert_eq!(v["exact"], true);
    }
}

#[test]
fn gluing_witness_reproduces_the_upper_bound() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &line_relation(&[0.0, 1.0], &[(0, 1), (1, 0)]));
    let b = write(dir.path(), "b.json", &line_relation(&[0.0, 2.0, 3.0], &[(0, 0), (1, 2), (2, 1)]));
    let out = dir.path().join("dgh.json");
    let o = dsmetric(&["dgh", "--f", s(&a), "--g", s(&b), "--out", s(&out)]);
    assert!(o.status.success());
    let v = read_json(&out);
    let w = &v["witness"];
    assert_eq!(w["kind"], "gluing");

    let x = FiniteMetricSpace::line(&[0.0, 1.0]).unwrap();
    let y = FiniteMetricSpace::line(&[0.0, 2.0, 3.0]).unwrap();
    let pairs: Vec<(usize, usize)> = serde_json::from_value(w["correspondence"].clone()).unwrap();
    let r = Correspondence::new(2, 3, pairs).unwrap();
    let glued = glue_by_correspondence(&x, &y, &r, w["eps"].as_f64().unwrap()).unwrap();
    let space = Arc::new(glued.space.clone());
    let f = DynamicalRelation::new(space.clone(), vec![(0, 1), (1, 0)]).unwrap();
    let g = DynamicalRelation::new(space, vec![(2, 2), (3, 4), (4, 3)]).unwrap();
    let d = ds_distance(&f, &g).unwrap().value;
    let upper = v["upper"].as_f64().unwrap();
    assert!((d - upper).abs() <= 1e-9 * upper.max(1.0), "{d} vs {upper}");
    assert!(v["lower"].as_f64().unwrap() <= upper);
}

#[test]
fn ds_witness_reproduces_the_value() {
    let dir = TempDir::new().unwrap();
    let xs = [0.0, 0.3, 1.1, 2.0];
    let f = write(dir.path(), "f.json", &line_relation(&xs, &[(0, 1), (1, 0), (2, 3), (3, 2)]));
    let g = write(dir.path(), "g.json", &line_relation(&xs, &[(0, 0), (1, 1), (2, 2), (3, 3)]));
    let out = dir.path().join("w.json");
    assert!(dsmetric(&["ds", "--f", s(&f), "--g", s(&g), "--out", s(&out)]).status.success());
    let w = read_json(&out);
    let p: (usize, usize) = serde_json::from_value(w["from"].clone()).unwrap();
    let q: (usize, usize) = serde_json::from_value(w["to"].clone()).unwrap();
    let d = (xs[p.0] - xs[q.0]).abs().max((xs[p.1] - xs[q.1]).abs());
    assert!((d - w["value"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &line_relation(&[0.0, 1.0, 2.5], &[(0, 1), (1, 2), (2, 0)]));
    let b = write(dir.path(), "b.json", &line_relation(&[0.0, 1.5, 2.0], &[(0, 0), (1, 2), (2, 1)]));
    let c = write(dir.path(), "c.json", &line_relation(&[0.0, 1.0, 2.5], &[(0, 0), (1, 1), (2, 2)]));
    for (cmd, b) in [("dgh", &b), ("am", &b), ("ds", &c)] {
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let out = dir.path().join(format!("{cmd}{k}.json"));
                let o = dsmetric(&[cmd, "--f", s(&a), "--g", s(b), "--out", s(&out)]);
                assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
                std::fs::read(&out).unwrap()
            })
            .collect();
        assert_eq!(runs[0], runs[1], "{cmd}");
    }
}

#[test]
fn am_swap_versus_identity() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", &line_relation(&[0.0, 1.0], &[(0, 1), (1, 0)]));
    let g = write(dir.path(), "g.json", &line_relation(&[0.0, 1.0], &[(0, 0), (1, 1)]));
    let out = dir.path().join("am.json");
    assert!(dsmetric(&["am", "--f", s(&f), "--g", s(&g), "--out", s(&out)]).status.success());
    let v = read_json(&out);
    assert_eq!(v["value"], 1.0);
    assert_eq!(v["mode"], "exact");
    assert_eq!(v["phi"].as_array().unwrap().len(), 2);
}

#[test]
fn budget_exhaustion_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let xs = [0.0, 1.0, 2.5, 4.0];
    let f = write(dir.path(), "f.json", &line_relation(&xs, &[(0, 1), (1, 2), (2, 3), (3, 0)]));
    let g = write(dir.path(), "g.json", &line_relation(&[0.0, 2.0, 3.0, 7.0], &[(0, 0), (1, 2), (2, 1), (3, 3)]));
    let out = dir.path().join("dgh.json");
    let o = dsmetric(&["dgh", "--f", s(&f), "--g", s(&g), "--budget", "5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    let v = read_json(&out);
    assert_eq!(v["complete"], false);
    assert!(v["upper"].as_f64().unwrap() >= v["lower"].as_f64().unwrap());

    let o = dsmetric(&["sft", "--input", s(&f), "--eps", "0.1", "--depth", "3", "--budget", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn discretize_then_lift() {
    let dir = TempDir::new().unwrap();
    let xs: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let pairs: Vec<(usize, usize)> = (0..21).map(|i| (i, (i * 8) % 21)).collect();
    let f = write(dir.path(), "f.json", &line_relation(&xs, &pairs));
    let (g, cert) = (dir.path().join("g.json"), dir.path().join("cert.json"));
    let o = dsmetric(&["discretize", "--input", s(&f), "--eps", "0.25", "--out", s(&g), "--certificate", s(&cert)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = read_json(&cert);
    assert!(c["distance"]["value"].as_f64().unwrap() <= 0.25);
    assert!(dsmetric(&["validate", "--input", s(&g)]).status.success());

    let sft = dir.path().join("sft.json");
    let o = dsmetric(&["sft", "--input", s(&g), "--depth", "1", "--bits", "1", "--eps", "0.1", "--out", s(&sft)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&sft);
    assert!(v["certificate"]["value"].as_f64().unwrap() <= 0.1);
    assert_eq!(v["points"].as_array().unwrap().len(), v["words"].as_array().unwrap().len() * 2);
    let inner = dir.path().join("relation.json");
    std::fs::write(&inner, v["relation"].to_string()).unwrap();
    assert!(dsmetric(&["validate", "--input", s(&inner)]).status.success());
}

fn tree(reps: &[f64], gap: f64) -> Value {
    let leaf = |x: f64| serde_json::json!({ "rep": [x], "diam": 0.0 });
    let half = reps.len() / 2;
    let cell = |xs: &[f64]| {
        serde_json::json!({ "rep": [xs[0]], "diam": xs[xs.len() - 1] - xs[0], "children": xs.iter().map(|&x| leaf(x)).collect::<Vec<_>>() })
    };
    serde_json::json!({ "rep": [reps[0]], "diam": reps[reps.len() - 1] - reps[0] + gap * 0.0, "children": [cell(&reps[..half]), cell(&reps[half..])] })
}

#[test]
fn cantor_commands() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &tree(&[0.0, 0.1, 0.9, 1.0], 0.0).to_string());
    let b = write(dir.path(), "b.json", &serde_json::json!({ "root": tree(&[0.02, 0.12, 0.92, 1.02], 0.0) }).to_string());
    let out = dir.path().join("m.json");
    let o = dsmetric(&["cantor-match", "--a", s(&a), "--b", s(&b), "--delta", "0.2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert!((v["displacement"].as_f64().unwrap() - 0.02).abs() < 1e-9);
    assert_eq!(v["pairs"], serde_json::json!([[0, 0], [1, 1], [2, 2], [3, 3]]));

    let sa = write(dir.path(), "sa.json", &serde_json::json!({ "tree": tree(&[0.0, 0.1, 0.9, 1.0], 0.0), "map": [2, 3, 0, 1] }).to_string());
    let sb = write(dir.path(), "sb.json", &serde_json::json!({ "tree": tree(&[0.02, 0.12, 0.92, 1.02], 0.0), "map": [2, 3, 0, 1] }).to_string());
    let out = dir.path().join("p.json");
    let o = dsmetric(&["conjugate-pair", "--a", s(&sa), "--b", s(&sb), "--delta", "0.1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    let h1: Vec<usize> = serde_json::from_value(v["h1"].clone()).unwrap();
    let h2: Vec<usize> = serde_json::from_value(v["h2"].clone()).unwrap();
    let g = [2, 3, 0, 1];
    for x in 0..4 {
        assert_eq!(h2[g[x]], g[h1[x]]);
    }
}

#[test]
fn pipelines_from_the_command_line() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("power.json");
    let o = dsmetric(&["regress-power", "--n", "1,4,20", "--out", s(&out)]);
    assert!(o.status.success());
    let rows = read_json(&out)["rows"].as_array().unwrap().clone();
    let d: Vec<f64> = rows.iter().map(|r| r["distance"].as_f64().unwrap()).collect();
    assert!(d[0] > d[1] && d[1] > d[2]);

    let out = dir.path().join("circle.json");
    let o = dsmetric(&["manifold-approx", "--fixture", "circle", "--eps", "0.3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = &read_json(&out)["certificate"];
    assert!(c["density"].as_f64().unwrap() < 0.3 && c["closeness"].as_f64().unwrap() < 0.3);

    let m = write(
        dir.path(),
        "m.json",
        r#"{"space":{"kind":"euclidean","points":[[0],[0.1],[0.2],[0.3]]},"map":[0,1,2,3],"modulus":{"lipschitz":1}}"#,
    );
    let o = dsmetric(&["manifold-approx", "--input", s(&m), "--eps", "0.05"]);
    assert_eq!(o.status.code(), Some(2), "grid too coarse");

    let f = write(dir.path(), "f.json", &line_relation(&[0.0, 0.1, 1.0], &[(0, 0), (1, 1), (2, 2)]));
    let out = dir.path().join("diag.json");
    let o = dsmetric(&["diagnose", "--input", s(&f), "--eps", "0.2", "--r", "0.2", "--out", s(&out)]);
    assert!(o.status.success());
    let v = read_json(&out);
    assert_eq!(v["components"][0]["mesh"], 0.1);
    assert_eq!(v["isolated"][0]["points"], serde_json::json!([2]));
}

#[test]
fn hausdorff_between_point_sets() {
    let dir = TempDir::new().unwrap();
    let x = write(dir.path(), "x.json", r#"{"kind":"euclidean","points":[[0,0],[1,0]]}"#);
    let y = write(dir.path(), "y.json", r#"{"kind":"euclidean","points":[[0,0],[4,3]]}"#);
    let o = dsmetric(&["hausdorff", "--x", s(&x), "--y", s(&y)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("hausdorff  ") && stdout(&o).contains("4.24264068712"));
    let sp = write(dir.path(), "s.json", r#"{"kind":"euclidean","points":[[0],[1],[5]]}"#);
    let o = dsmetric(&["hausdorff", "--space", s(&sp), "--a", "0,1", "--b", "2"]);
    assert!(stdout(&o).contains("5.0"));
}
