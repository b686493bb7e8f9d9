use highway_assert::engine::{sort_verdicts, Verdict};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_highway-assert");

fn rules(name: &str) -> String {
    format!("{}/rules/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    if let Some(s) = stdin {
        input.write_all(s.as_bytes()).unwrap();
    }
    drop(input);
    child.wait_with_output().unwrap()
}

fn gen(dir: &Path, preset: &str) -> PathBuf {
    let out = dir.join(preset);
    let o = run(&["gen", preset, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn parse(out: &[u8]) -> Vec<Verdict> {
    let mut v: Vec<Verdict> =
        String::from_utf8_lossy(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    sort_verdicts(&mut v);
    v
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_exit_codes_follow_safety_outcome() {
    let tmp = tempfile::tempdir().unwrap();
    for (preset, code) in [("safe", 0), ("near_miss", 1), ("collision", 1)] {
        let d = gen(tmp.path(), preset);
        let o = run(
            &["check", "--map", s(&d.join("map.json")), "--trace", s(&d.join("trace.jsonl")), "--rules", &rules("overtaking.rules")],
            None,
        );
        assert_eq!(o.status.code(), Some(code), "{preset}");
        assert_eq!(parse(&o.stdout).len(), 3);
    }
}

#[test]
fn monitor_matches_check() {
    let tmp = tempfile::tempdir().unwrap();
    let d = gen(tmp.path(), "occlusion_abort");
    let trace = std::fs::read_to_string(d.join("trace.jsonl")).unwrap();
    let (r1, r2) = (rules("overtaking.rules"), rules("overtaking_runtime.rules"));
    let (map, tr) = (d.join("map.json"), d.join("trace.jsonl"));
    for debounce in ["1", "3"] {
        let base = ["--map", s(&map), "--rules", &r1, &r2, "--debounce", debounce];
        let checked = run(&[&["check", "--trace", s(&tr)], &base[..]].concat(), None);
        let monitored = run(&[&["monitor"], &base[..]].concat(), Some(&trace));
        assert_eq!(checked.status.code(), monitored.status.code());
        let (a, b) = (parse(&checked.stdout), parse(&monitored.stdout));
        assert!(!a.is_empty());
        assert_eq!(a, b, "debounce {debounce}");
    }
}

#[test]
fn monitor_keeps_output_before_a_bad_line() {
    let tmp = tempfile::tempdir().unwrap();
    let d = gen(tmp.path(), "safe");
    let trace = std::fs::read_to_string(d.join("trace.jsonl")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    let broken = format!("{}\n{{not json\n{}\n", lines[..200].join("\n"), lines[200..].join("\n"));
    let (r, map) = (rules("overtaking_runtime.rules"), d.join("map.json"));
    let args = ["monitor", "--map", s(&map), "--rules", &r];
    let o = run(&args, Some(&broken));
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 201"), "{}", String::from_utf8_lossy(&o.stderr));

    let backwards = format!("{}\n{}\n", lines[100], lines[0]);
    assert_eq!(run(&args, Some(&backwards)).status.code(), Some(1));
    assert_eq!(run(&args, Some("")).status.code(), Some(0));
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let d = gen(tmp.path(), "safe");
    assert_eq!(run(&["gen", "nonsense", "--out", s(tmp.path())], None).status.code(), Some(2));
    assert_eq!(run(&["check"], None).status.code(), Some(2));

    let bad = tmp.path().join("bad.rules");
    std::fs::write(&bad, "assertion a {\n  odd: r\n  type: invariant\n  condition: overlaps(1m)\n}\n").unwrap();
    let o = run(&["check", "--map", s(&d.join("map.json")), "--trace", s(&d.join("trace.jsonl")), "--rules", s(&bad)], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.rules:4:"), "{err}");

    let o = run(&["check", "--map", s(&d.join("trace.jsonl")), "--trace", s(&d.join("trace.jsonl")), "--rules", &rules("overtaking.rules")], None);
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        &["check", "--map", s(&d.join("map.json")), "--trace", s(&d.join("trace.jsonl")), "--rules", &rules("overtaking.rules"), "--profile", "reckless"],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_writes_summary_and_stage_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = gen(tmp.path(), "occlusion_abort");
    let (sum, stages) = (tmp.path().join("sum.csv"), tmp.path().join("stages.json"));
    let o = run(
        &[
            "check", "--map", s(&d.join("map.json")), "--trace", s(&d.join("trace.jsonl")),
            "--rules", &rules("overtaking_runtime.rules"), "--format", "csv",
            "--summary", s(&sum), "--stage-report", s(&stages),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("assertion_id,t,result"));
    let sum = std::fs::read_to_string(sum).unwrap();
    assert!(sum.lines().any(|l| l.starts_with("ds_av_clear_of_vbp,") && l.contains(",0,")), "{sum}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(stages).unwrap()).unwrap();
    assert_eq!(report["outcomes"]["ds_av_clear_of_ov"]["passing"], "fail");
    assert!(report["stages"]["cut_in"].is_null());
}

#[test]
fn estimate_then_check_and_zones() {
    let tmp = tempfile::tempdir().unwrap();
    let d = gen(tmp.path(), "occlusion_abort");
    let est = tmp.path().join("est.jsonl");
    let o = run(
        &["estimate", "--detections", s(&d.join("detections.jsonl")), "--calibration", s(&d.join("calibration.json")), "--output", s(&est)],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(
        &["check", "--map", s(&d.join("map.json")), "--trace", s(&est), "--rules", &rules("overtaking_runtime.rules"), "--ds-speed", "recorded"],
        None,
    );
    assert!(matches!(o.status.code(), Some(0 | 1)));
    assert!(!parse(&o.stdout).is_empty());

    let safe = gen(tmp.path(), "safe");
    let verdicts = tmp.path().join("v.jsonl");
    run(
        &["check", "--map", s(&safe.join("map.json")), "--trace", s(&safe.join("trace.jsonl")), "--rules", &rules("overtaking.rules"), "--output", s(&verdicts)],
        None,
    );
    let o = run(&["zones", "--verdicts", s(&verdicts)], None);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().nth(1).unwrap().starts_with("3.75,rule162_sda,76.430,63.730,"), "{text}");
    assert!(text.trim_end().ends_with(",C"));
}
