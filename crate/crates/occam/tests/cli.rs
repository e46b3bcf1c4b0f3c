mod common;

use serde_json::json;

use common::{fixture, occam, occam_json, occam_ok};

fn exit_code(dir: &std::path::Path, args: &[&str]) -> i32 {
    occam(dir, args).status.code().expect("exit code")
}

#[test]
fn inventory_show_matches_the_shipped_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let shown = occam_ok(dir.path(), &["inventory", "show"]);
    let shipped = std::fs::read_to_string(fixture("inventory.json")).unwrap();
    assert_eq!(shown, shipped);
    assert!(
        !dir.path().join("events.jsonl").exists(),
        "read-only verbs write nothing"
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let crystal = fixture("apps/crystal.json");
    let crystal = crystal.to_str().unwrap();

    // Unknown tenant.
    assert_eq!(exit_code(d, &["app", "submit", crystal]), 2);
    // Schema error.
    let bad = d.join("bad.json");
    std::fs::write(&bad, r#"{"name": "x", "tenant": "chem", "colour": "red"}"#).unwrap();
    assert_eq!(exit_code(d, &["app", "submit", bad.to_str().unwrap()]), 2);

    let key = d.join("k.pub");
    std::fs::write(&key, "ssh-ed25519 AAAA\n").unwrap();
    occam_ok(
        d,
        &["tenant", "add", "chem", "--ssh-key", key.to_str().unwrap()],
    );
    let app_id = occam_json(d, &["app", "submit", crystal])["app_id"]
        .as_str()
        .unwrap()
        .to_string();
    occam_ok(d, &["farm", "deploy", &app_id]);
    // Every Light node is already an executor.
    assert_eq!(exit_code(d, &["farm", "scale", &app_id, "--delta", "1"]), 3);
    assert_eq!(exit_code(d, &["app", "status", "app-000000000000"]), 1);

    std::fs::write(
        d.join("events.jsonl"),
        "{\"seed\":42,\"version\":1}\nnot json\n",
    )
    .unwrap();
    assert_eq!(exit_code(d, &["app", "status", &app_id]), 4);
    assert_eq!(
        exit_code(d, &["replay", d.join("events.jsonl").to_str().unwrap()]),
        4
    );
}

#[test]
fn scale_accepts_negative_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let key = d.join("k.pub");
    std::fs::write(&key, "ssh-ed25519 AAAA\n").unwrap();
    occam_ok(
        d,
        &["tenant", "add", "chem", "--ssh-key", key.to_str().unwrap()],
    );
    let crystal = fixture("apps/crystal.json");
    let app_id = occam_json(d, &["app", "submit", crystal.to_str().unwrap()])["app_id"]
        .as_str()
        .unwrap()
        .to_string();
    occam_ok(d, &["farm", "deploy", &app_id]);
    let view = occam_json(d, &["farm", "scale", &app_id, "--delta", "-2"]);
    assert_eq!(view["executors"].as_array().unwrap().len(), 30);
}

#[test]
fn bench_writes_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hpl.csv");
    occam_ok(
        dir.path(),
        &[
            "bench",
            "hpl",
            "--nodes",
            "1,2",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(
        text.lines().collect::<Vec<_>>(),
        [
            "label,metric,value,unit",
            "N=1,time,873.2035655812261,s",
            "N=1,efficiency,1,1",
            "N=2,time,873.2035655812261,s",
            "N=2,efficiency,1,1",
        ]
    );
}

#[test]
fn replay_reports_the_state_hash() {
    let dir = tempfile::tempdir().unwrap();
    let log = common::cli_scenario(dir.path());
    let path = dir.path().join("events.jsonl");
    let summary = occam_json(dir.path(), &["replay", path.to_str().unwrap()]);
    assert_eq!(summary["seed"], json!(42));
    assert_eq!(summary["events"], json!(log.lines().count() - 1));
    assert_eq!(summary["state_hash"].as_str().unwrap().len(), 64);

    // Reformatting a line breaks canonical form.
    let tampered = log.replacen("{\"seq\":0,", "{\"seq\": 0,", 1);
    let bad = dir.path().join("tampered.jsonl");
    std::fs::write(&bad, tampered).unwrap();
    assert_eq!(
        occam(dir.path(), &["replay", bad.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("k.pub");
    std::fs::write(&key, "ssh-ed25519 AAAA\n").unwrap();
    let out = std::process::Command::new(common::BIN)
        .args(["tenant", "add", "chem", "--ssh-key", key.to_str().unwrap()])
        .env("OCCAM_STATE_DIR", dir.path())
        .env("OCCAM_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    let log = std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    assert!(log.starts_with("{\"seed\":7,"));
}
