use std::process::{Command, Output};

fn kflat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kflat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

#[test]
fn build_lists_twelve_rectangles_at_depth_two() {
    let out = kflat(&["build", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let generations = doc["generations"].as_array().unwrap();
    assert_eq!(generations.len(), 2);
    assert_eq!(generations[1]["rects"].as_array().unwrap().len(), 12);
    assert_eq!(generations[1]["gaps"].as_array().unwrap().len(), 11);
    assert_eq!(doc["metrics"][1]["d"], "1/242");
}

#[test]
fn build_depth_one_is_the_root_only() {
    let doc = json(&kflat(&["build", "--depth", "1"]));
    let generations = doc["generations"].as_array().unwrap();
    assert_eq!(generations.len(), 1);
    assert_eq!(generations[0]["rects"].as_array().unwrap().len(), 1);
}

#[test]
fn eps_at_the_limit_exits_two_with_the_constraint() {
    let out = kflat(&["build", "--eps", "1/11"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("min(1/2, 1/(rs-1))"), "{err}");
}

#[test]
fn malformed_input_is_a_usage_error() {
    assert_eq!(kflat(&["build", "--eps", "one/22"]).status.code(), Some(2));
    let out = kflat(&["figure", "--kind", "link", "--gap", "2:1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        kflat(&["figure", "--format", "json"]).status.code(),
        Some(2)
    );
}

#[test]
fn eval_endpoints_and_gap_midpoint() {
    let out = kflat(&[
        "eval",
        "--x",
        "0",
        "--x",
        "1",
        "--x",
        "-1",
        "--x",
        "869/10648",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = json(&out);
    let values: Vec<&str> = doc
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"]["value"].as_str().unwrap())
        .collect();
    assert!(values[0].starts_with("0"));
    assert!(values[1].starts_with("1"));
    assert!(values[2].starts_with("-1"));
    // 7/88 + 1/484 is the middle of the first gap: a_2 / 2
    assert!(values[3].starts_with("1.6099018314693817"), "{}", values[3]);
}

#[test]
fn eval_grid_as_csv() {
    let out = kflat(&["eval", "--grid", "0,1,5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("x,value,error,depth_used,classification\n"));
    assert_eq!(kflat(&["eval"]).status.code(), Some(2));
    assert_eq!(kflat(&["eval", "--x", "3"]).status.code(), Some(2));
}

#[test]
fn dims_reports_lambda() {
    let doc = json(&kflat(&["dims"]));
    assert_eq!(doc["closed_form"]["lambda"], "3/11");
    assert!(doc["closed_form"]["alpha"]["value"]
        .as_str()
        .unwrap()
        .starts_with("5.4763362496"));
    assert_eq!(doc["slopes"]["d"].as_array().unwrap().len(), 1);
}

#[test]
fn covers_in_both_formats() {
    let doc = json(&kflat(&["covers", "--target", "d", "--depth", "3"]));
    assert_eq!(doc["generation"], 3);
    let out = kflat(&["covers", "--target", "a", "--depth", "3", "--format", "csv"]);
    assert_eq!(stdout(&out).lines().count(), 145);
    let out = kflat(&[
        "covers", "--target", "level", "--rows", "1,3", "--depth", "3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        kflat(&["covers", "--target", "level"]).status.code(),
        Some(2)
    );
}

#[test]
fn plan_certificate_has_positive_margins() {
    let out = kflat(&["plan", "--alpha", "1/2", "--eta", "1/5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    for margin in doc["certificate"]["margins"].as_array().unwrap() {
        assert_eq!(margin["holds"], true, "{margin}");
    }
    let out = kflat(&["plan", "--alpha", "1/10", "--eta", "1/50"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn figures_are_well_formed() {
    let out = kflat(&["figure", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(
        doc.descendants().filter(|n| n.has_tag_name("rect")).count(),
        12
    );
    let out = kflat(&["figure", "--kind", "link", "--gap", "root#3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    roxmltree::Document::parse(&text).unwrap();
    assert!(text.contains("data-kind=\"row-transition\""));
}

#[test]
fn outputs_are_deterministic_and_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("figure.svg");
    let p = path.to_str().unwrap();
    for _ in 0..2 {
        assert_eq!(
            kflat(&["figure", "--depth", "3", "--out", p]).status.code(),
            Some(0)
        );
    }
    let first = std::fs::read(&path).unwrap();
    let again = kflat(&["figure", "--depth", "3"]).stdout;
    assert_eq!(first, again);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn unwritable_output_exits_three() {
    let out = kflat(&["build", "--out", "/nonexistent-dir/geometry.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_passes_and_catches_injected_faults() {
    let out = kflat(&["verify", "--depth", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
    let out = kflat(&["verify", "--depth", "4", "--inject-fault", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn verify_with_a_schedule_skips_closed_forms() {
    let out = kflat(&["verify", "--schedule", "4:3:1/22,2:2:1/10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["counts"]["skipped"], 3);
}

#[test]
fn verify_round_trips_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geometry.json");
    let p = path.to_str().unwrap();
    let args = [
        "build", "--k", "2", "--r", "2", "--s", "2", "--eps", "1/10", "--depth", "4",
    ];
    assert_eq!(
        kflat(&[&args[..], &["--out", p]].concat()).status.code(),
        Some(0)
    );
    let out = kflat(&["verify", "--against", p]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["params"]["k"], 2);
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "round-trip/metrics" && c["status"] == "pass"));

    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = dir.path().join("tampered.json");
    assert!(text.contains("\"d\": \"1/30\""));
    std::fs::write(
        &tampered,
        text.replacen("\"d\": \"1/30\"", "\"d\": \"1/31\"", 1),
    )
    .unwrap();
    let out = kflat(&["verify", "--against", tampered.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        kflat(&["verify", "--against", "/nonexistent/g.json"])
            .status
            .code(),
        Some(3)
    );
}
