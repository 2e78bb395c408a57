use std::f64::consts::TAU;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crofton-cli")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a CSV output as string records, keyed by the header.
fn rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

#[test]
fn forward_of_constant_density_is_two_pi_c() {
    let o = run(&["forward", "--family", "constant", "--c", "0.7", "--l_max", "6", "--points", "[[0,0,0],[0.5,-1,2]]"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("# grid_l_max = 6"));
    assert!(text.contains("# c = 0.7"));
    let (h, rows) = rows(&text);
    assert_eq!(rows.len(), 2 * 7 * 14);
    let hc = col(&h, "H");
    for r in &rows {
        assert!((num(&r[hc]) - TAU * 0.7).abs() < 1e-10);
        // 17 significant digits
        assert_eq!(r[hc].split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
    }
}

#[test]
fn empty_grid_writes_header_only() {
    let o = run(&["forward", "--points", "[]"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = rows(&stdout(&o));
    assert_eq!(h.len(), 7);
    assert!(rows.is_empty());
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "l_max = 8\nstep_size = 0.1\n").unwrap();
    let o = run(&["forward", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("step_size"));

    let o = run(&["reconstruct", "--delta", "\"small\""]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delta"));

    let o = run(&["reconstruct", "--n_phi", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_phi"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "family = \"constant\"\nc = 2.0\nl_max = 4\n").unwrap();
    let o = run(&["forward", "--config", path.to_str().unwrap(), "--c", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = rows(&stdout(&o));
    assert!((num(&rows[0][col(&h, "H")]) - TAU * 0.5).abs() < 1e-12);
}

#[test]
fn zonoid_of_constant_has_only_degree_zero() {
    let o = run(&["zonoid", "--family", "constant", "--c", "1.0", "--l_max", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = rows(&stdout(&o));
    let (rec, n, hv, res) = (col(&h, "record"), col(&h, "n"), col(&h, "h"), col(&h, "residual"));
    let sqrt_4pi = (4.0 * std::f64::consts::PI).sqrt();
    for r in &rows {
        assert!(num(&r[res]) < 1e-7);
        if r[rec] == "coefficient" {
            let want = if r[n] == "0" { sqrt_4pi } else { 0.0 };
            assert!((num(&r[hv]) - want).abs() < 1e-10, "{r:?}");
        } else {
            assert!((num(&r[hv]) - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn zonoid_rejects_odd_input_with_a_record() {
    let o = run(&["zonoid", "--l_max", "8", "--odd_perturbation", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let (h, rows) = rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][col(&h, "error")], "odd_part_too_large");
    assert!(num(&rows[0][col(&h, "value")]) > 1e-6);
}

#[test]
fn sampled_metric_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("metric.csv");
    let t = table.to_str().unwrap();
    let o = run(&["forward", "--l_max", "8", "--points", "[[0.1, 0.2, -0.3]]", "--output", t]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let args = ["zonoid", "--l_max", "8", "--point", "[0.1, 0.2, -0.3]"];
    let direct = run(&args);
    let mut with_input = args.to_vec();
    with_input.extend(["--input", t]);
    let sampled = run(&with_input);
    assert_eq!(sampled.status.code(), Some(0), "{}", stderr(&sampled));
    let (h, a) = rows(&stdout(&direct));
    let (_, b) = rows(&stdout(&sampled));
    let hv = col(&h, "h");
    for (ra, rb) in a.iter().zip(&b) {
        assert_eq!(ra[hv], rb[hv]);
    }

    let missing = run(&["zonoid", "--l_max", "8", "--input", t]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stdout(&missing).contains("missing_samples"));

    let mismatch = run(&["zonoid", "--l_max", "6", "--input", t, "--point", "[0.1, 0.2, -0.3]"]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(stderr(&mismatch).contains("grid_l_max"));
}

#[test]
fn reconstruct_constant_family_as_json() {
    let o = run(&["reconstruct", "--family", "constant", "--c", "0.7", "--planes", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["c"], 0.7);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["rel_error"].as_f64().unwrap() <= 1e-6);
        assert!(r["h_oracle"].is_null());
        assert_eq!(r["c_norm"].as_f64().unwrap(), 1.0 / TAU);
    }
}

#[test]
fn reconstruct_translation_invariant_family_with_oracle() {
    let o = run(&[
        "reconstruct",
        "--family",
        "translation-invariant",
        "--plane_list",
        "[[0.4, 0.0, 0.6, 0.8]]",
        "--oracle",
        "true",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = rows(&stdout(&o));
    let r = &rows[0];
    let (rec, truth, oracle) = (num(&r[col(&h, "h_reconstructed")]), num(&r[col(&h, "h_true")]), num(&r[col(&h, "h_oracle")]));
    assert!(num(&r[col(&h, "rel_error")]) <= 1e-3);
    assert!((truth - (1.0 + 0.5 * 0.64)).abs() < 1e-12);
    assert!((oracle - rec).abs() / rec < 1e-2);
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = run(&["reconstruct", "--planes", "2", "--seed", "9", "--family", "constant", "--output", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    let (ta, tb) = (read(&a), read(&b));
    let strip = |t: &str| t.lines().filter(|l| !l.starts_with("# output")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&ta), strip(&tb));
}

#[test]
fn verify_identities_passes() {
    let o = run(&["verify", "--suite", "identities"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = rows(&stdout(&o));
    assert!(rows.iter().all(|r| r[col(&h, "passed")] == "true"));
    assert!(rows.iter().any(|r| r[col(&h, "identity")] == "kernel-average"));
}

#[test]
fn verify_with_printed_normalization_reports_two_pi() {
    let o = run(&["verify", "--suite", "reconstruction", "--c_norm", "1", "--suite_planes", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let (h, rows) = rows(&stdout(&o));
    let first = &rows[0];
    assert_eq!(first[col(&h, "passed")], "false");
    let detail = &first[col(&h, "detail")];
    let ratio: f64 = detail
        .split("mean ratio reconstructed/true = ")
        .nth(1)
        .and_then(|s| s.split(';').next())
        .map(num)
        .unwrap();
    assert!((ratio - TAU).abs() < 1e-4, "{detail}");
}

#[test]
fn verify_unknown_suite_is_a_usage_error() {
    let o = run(&["verify", "--suite", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown suite"));
}

#[test]
fn calibrate_recovers_one_over_two_pi() {
    let o = run(&["calibrate", "--c", "0.7", "--planes", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = rows(&stdout(&o));
    for r in &rows {
        assert!((num(&r[col(&h, "c_norm_fit")]) - 1.0 / TAU).abs() < 1e-10);
    }
    assert!(stderr(&o).contains("fitted c_norm"));
}
