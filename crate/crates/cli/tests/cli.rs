use std::fs;
use std::process::Command;

fn ghopf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ghopf"))
}

fn code(c: &mut Command) -> Option<i32> {
    c.output().unwrap().status.code()
}

#[test]
fn presets_are_listed() {
    let out = ghopf().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for p in ghopf_cli::presets::PRESETS {
        assert!(text.contains(p.name));
    }
}

#[test]
fn preset_run_writes_fields_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let status = code(
        ghopf()
            .args(["criteria", "--preset", "hyperbolic-axes", "--grid", "33", "--margin", "0.1", "--out"])
            .arg(dir.path()),
    );
    assert_eq!(status, Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert!(summary["report"]["ess_inf"].is_number());
    let csv = fs::read_to_string(dir.path().join("im_field.csv")).unwrap();
    assert!(csv.starts_with("x,y,re,im,mask\n"));
    assert_eq!(csv.lines().count(), 33 * 33 + 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    fs::write(
        &cfg,
        r#"
name = "tight"
command = "solve"

[grid]
n = 17

[data]
boundary = "w + 0.3*conj(w)^2"
exact = "w"
"#,
    )
    .unwrap();
    let status = code(
        ghopf()
            .args(["solve", "--seq", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join("out")),
    );
    assert_eq!(status, Some(1), "exact solution differs, so a check fails");
    assert_eq!(code(ghopf().args(["solve", "--preset", "shear-log"])), Some(2));
    assert_eq!(code(ghopf().args(["solve", "--preset", "missing"])), Some(2));
}
