use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use parcc_core::io::{load_demo_dir, save_demo_dir};
use parcc_core::study::box_packing_demos;
use parcc_core::synthesizer::DEFAULT_BUDGET;

fn parcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parcc")).args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn demos_dir(dir: &Path, k: usize, seed: u64) -> PathBuf {
    let d = dir.join(format!("demos{seed}"));
    save_demo_dir(&box_packing_demos(k, seed, DEFAULT_BUDGET).unwrap(), &d).unwrap();
    d
}

#[test]
fn check_reports_violations_per_object() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demos_dir(dir.path(), 1, 3);
    let demo = demos.join("demo_000.json");
    let ok = parcc(&["check", "--spec", s(&fixture("box_packing.parcc")), "--demo", s(&demo)]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).starts_with("satisfied"));

    let spec = dir.path().join("south.parcc");
    std::fs::write(&spec, "DR_S(B, R)\n").unwrap();
    let bad = parcc(&["check", "--spec", s(&spec), "--demo", s(&demo)]);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    assert!(text.contains("unsatisfied: DR_S(B, R)"), "{text}");
    assert!(text.contains("B1 fails DR_S(B, R)"), "{text}");

    let json = parcc(&["--json", "check", "--spec", s(&spec), "--demo", s(&demo)]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["satisfied"], false);
    assert!(v["violations"][0]["violating_object_ids"].as_array().unwrap().len() >= 2);
}

#[test]
fn input_errors_have_their_own_exit_code_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let demo = dir.path().join("d.json");
    std::fs::write(
        &demo,
        r#"{"schema_version": 1, "space": {"x_min": 0, "x_max": 5, "y_min": 0, "y_max": 5},
            "classes": [{"name": "B"}], "objects": [{"id": "b", "class": "Q", "l": 1, "w": 1, "x": 1, "y": 1}]}"#,
    )
    .unwrap();
    let spec = fixture("box_packing.parcc");
    let out = parcc(&["--json", "check", "--spec", s(&spec), "--demo", s(&demo)]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(v["error"]["kind"], "input");
    assert_eq!(v["error"]["path"], "objects[0].class");

    let bad_spec = dir.path().join("bad.parcc");
    std::fs::write(&bad_spec, "DR_N(B, R) |\n").unwrap();
    let out = parcc(&["check", "--spec", s(&bad_spec), "--demo", s(&demo)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("bad.parcc:1:"), "{}", stderr(&out));

    let out = parcc(&["check", "--spec", s(&spec)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn semantic_errors_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demos_dir(dir.path(), 1, 5);
    let spec = dir.path().join("z.parcc");
    std::fs::write(&spec, "DR_N(B, Z)\n").unwrap();
    let out = parcc(&["check", "--spec", s(&spec), "--demo", s(&demos.join("demo_000.json"))]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));

    // demos with different spaces cannot be combined
    let mut text = std::fs::read_to_string(demos.join("demo_000.json")).unwrap();
    text = text.replace("\"x_max\": 20.0", "\"x_max\": 21.0");
    std::fs::write(demos.join("demo_001.json"), text).unwrap();
    let out = parcc(&["infer", "--demos", s(&demos)]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn infer_writes_spec_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demos_dir(dir.path(), 4, 8);
    let spec = dir.path().join("out.parcc");
    let report = dir.path().join("report.json");
    let out = parcc(&["infer", "--demos", s(&demos), "--seed", "3", "--out", s(&spec), "--report", s(&report)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&spec).unwrap();
    assert!(text.lines().any(|l| l == "DR_N(B, R)"), "{text}");
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["spec_text"], text);
    assert_eq!(r["params"]["p_c"], 0.05);
    assert_eq!(r["params"]["k_r"], 100);
    assert_eq!(r["template"]["name"], "original");
    assert!(r["reports"].as_array().unwrap().iter().all(|c| c["clause"].is_string()));

    let stdout_run = parcc(&["infer", "--demos", s(&demos), "--seed", "3"]);
    assert_eq!(stdout(&stdout_run), text);
}

#[test]
fn custom_templates_load_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demos_dir(dir.path(), 3, 12);
    let toml = dir.path().join("t.toml");
    std::fs::write(
        &toml,
        "[[template]]\nname = \"contacts\"\nmax_len = 2\nsame_head = true\nhomogeneous_kind = true\n\
         excluded_atoms = [\"DR_N\", \"DR_S\", \"DR_E\", \"DR_W\"]\n",
    )
    .unwrap();
    let out = parcc(&["infer", "--demos", s(&demos), "--templates", s(&toml), "--template", "contacts"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).lines().all(|l| !l.contains("DR_")), "{}", stdout(&out));
    let count =
        parcc(&["enumerate", "--templates", s(&toml), "--template", "contacts", "--classes", "A,B", "--count-only"]);
    // EC only, same head: 2 heads x (8 units x 2 polarities + C(8, 2))
    assert_eq!(stdout(&count).trim(), (2 * (16 + 28)).to_string());
}

#[test]
fn enumerate_counts_and_lists() {
    let count = |t: &str| -> u128 {
        let out = parcc(&["enumerate", "--template", t, "--classes", "R,G,B,WA", "--count-only"]);
        stdout(&out).trim().parse().unwrap()
    };
    let (r, o, x) = (count("restrictive"), count("original"), count("relaxed"));
    assert!(r < o && o < x, "{r} {o} {x}");
    let listed = parcc(&["enumerate", "--classes", "A", "--max-len", "2"]);
    let lines = stdout(&listed).lines().count() as u128;
    assert_eq!(
        lines,
        stdout(&parcc(&["enumerate", "--classes", "A", "--max-len", "2", "--count-only"]))
            .trim()
            .parse::<u128>()
            .unwrap()
    );
    let json = parcc(&["--json", "enumerate", "--classes", "A,B", "--max-len", "1", "--count-only"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["total"], "64");
    let unknown = parcc(&["enumerate", "--template", "nope", "--classes", "A"]);
    assert_eq!(unknown.status.code(), Some(3));
}

#[test]
fn sampling_and_placement_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demos_dir(dir.path(), 2, 1);
    let a = parcc(&["sample-random", "--demos", s(&demos), "-n", "3", "--seed", "4"]);
    let b = parcc(&["sample-random", "--demos", s(&demos), "-n", "3", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let docs: Vec<serde_json::Value> = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(docs.len(), 3);

    let out = dir.path().join("random");
    let c = parcc(&["sample-random", "--demos", s(&demos), "-n", "2", "--collision-free", "--out", s(&out)]);
    assert!(c.status.success(), "{}", stderr(&c));
    assert_eq!(load_demo_dir(&out).unwrap().len(), 2);

    let spec = fixture("box_packing.parcc");
    let inv = fixture("box_inventory.json");
    let p1 = parcc(&["place", "--spec", s(&spec), "--inventory", s(&inv), "-n", "2", "--seed", "6"]);
    let p2 = parcc(&["place", "--spec", s(&spec), "--inventory", s(&inv), "-n", "2", "--seed", "6"]);
    assert!(p1.status.success(), "{}", stderr(&p1));
    assert_eq!(p1.stdout, p2.stdout);
}

#[test]
fn infeasible_placement_exits_with_five() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("c.parcc");
    std::fs::write(&spec, "DR_N(B, R)\nDR_S(B, R)\n").unwrap();
    let out = parcc(&["place", "--spec", s(&spec), "--inventory", s(&fixture("box_inventory.json"))]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stdout(&out).contains("proven infeasible"), "{}", stdout(&out));

    let tiny = parcc(&[
        "place",
        "--spec",
        s(&fixture("box_packing.parcc")),
        "--inventory",
        s(&fixture("box_inventory.json")),
        "--budget",
        "5",
    ]);
    assert_eq!(tiny.status.code(), Some(5));
    assert!(stdout(&tiny).contains("no layout found"), "{}", stdout(&tiny));
}

#[test]
fn tolerance_flag_changes_contact() {
    let dir = tempfile::tempdir().unwrap();
    let demo = dir.path().join("gap.json");
    std::fs::write(
        &demo,
        r#"{"schema_version": 1, "space": {"x_min": 0, "x_max": 10, "y_min": 0, "y_max": 10},
            "classes": [{"name": "A", "fixed": false}],
            "objects": [{"id": "a1", "class": "A", "l": 2, "w": 2, "x": 2, "y": 2},
                        {"id": "a2", "class": "A", "l": 2, "w": 2, "x": 2, "y": 4.001}]}"#,
    )
    .unwrap();
    let spec = dir.path().join("touch.parcc");
    std::fs::write(&spec, "EC_N(A, A) | EC_S(A, A)\n").unwrap();
    assert_eq!(parcc(&["check", "--spec", s(&spec), "--demo", s(&demo)]).status.code(), Some(1));
    assert_eq!(parcc(&["--tau", "0.01", "check", "--spec", s(&spec), "--demo", s(&demo)]).status.code(), Some(0));
    assert_eq!(parcc(&["--tau=-1", "check", "--spec", s(&spec), "--demo", s(&demo)]).status.code(), Some(3));
}
