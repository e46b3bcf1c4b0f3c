#![allow(dead_code)]

pub mod oracles;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub const BIN: &str = env!("CARGO_BIN_EXE_occam");

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

/// Runs `occam` against `state_dir` with the seed pinned to 42.
pub fn occam(state_dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("OCCAM_STATE_DIR", state_dir)
        .env("OCCAM_SEED", "42")
        .output()
        .expect("occam runs")
}

/// Runs `occam` and returns stdout, panicking on a non-zero exit.
pub fn occam_ok(state_dir: &Path, args: &[&str]) -> String {
    let out = occam(state_dir, args);
    assert!(
        out.status.success(),
        "occam {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

pub fn occam_json(state_dir: &Path, args: &[&str]) -> Value {
    serde_json::from_str(&occam_ok(state_dir, args)).expect("json output")
}

/// `(label, metric) -> value` rows of a bench CSV.
pub fn csv_rows(text: &str) -> Vec<(String, String, f64)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("label,metric,value,unit"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].to_string(),
                f[2].parse().expect("numeric value"),
            )
        })
        .collect()
}

pub fn csv_value(rows: &[(String, String, f64)], label: &str, metric: &str) -> f64 {
    rows.iter()
        .find(|(l, m, _)| l == label && m == metric)
        .unwrap_or_else(|| panic!("no row {label}/{metric}"))
        .2
}

pub const TENANTS: [&str; 3] = ["chem", "biotech", "stats"];

/// The scripted integration scenario through the CLI: three tenants, one
/// application per execution model, and all three benches. Returns the
/// event log as written to disk.
pub fn cli_scenario(state_dir: &Path) -> String {
    let key = state_dir.join("id.pub");
    std::fs::create_dir_all(state_dir).unwrap();
    std::fs::write(&key, "ssh-ed25519 AAAAC3Nza scenario@occam\n").unwrap();
    let key = key.to_str().unwrap();
    for t in TENANTS {
        occam_ok(state_dir, &["tenant", "add", t, "--ssh-key", key]);
    }
    let submit = |name: &str| {
        let path = fixture(&format!("apps/{name}.json"));
        occam_json(state_dir, &["app", "submit", path.to_str().unwrap()])["app_id"]
            .as_str()
            .unwrap()
            .to_string()
    };
    let crystal = submit("crystal");
    let casc = submit("casc");
    let no2 = submit("no2");

    occam_ok(state_dir, &["farm", "deploy", &crystal]);
    for work in ["2000000", "1500000", "3000000"] {
        occam_ok(
            state_dir,
            &[
                "job",
                "submit",
                &crystal,
                "--millicores",
                "48000",
                "--memory-mib",
                "65536",
                "--work",
                work,
            ],
        );
    }
    occam_ok(state_dir, &["farm", "run", &crystal]);
    occam_ok(state_dir, &["farm", "scale", &crystal, "--delta", "-4"]);

    occam_ok(state_dir, &["pipeline", "run", &casc]);

    let session = occam_json(state_dir, &["session", "start", &no2]);
    let sid = session["session_id"].as_str().unwrap().to_string();
    occam_ok(
        state_dir,
        &[
            "session",
            "exec",
            &sid,
            "--image",
            "r-base:3.4",
            "--work",
            "80000",
            "--millicores",
            "8000",
            "--memory-mib",
            "16384",
        ],
    );
    occam_ok(state_dir, &["sim", "advance", "--seconds", "60"]);
    occam_ok(state_dir, &["session", "stop", &sid]);

    occam_ok(
        state_dir,
        &[
            "bench",
            "hpl",
            "--mix",
            "mixed",
            "--balance",
            "proportional",
        ],
    );
    occam_ok(
        state_dir,
        &["bench", "fio", "--target", "scratch", "--clients", "32"],
    );
    occam_ok(state_dir, &["bench", "mdtest"]);
    occam_ok(state_dir, &["app", "release", &crystal]);

    std::fs::read_to_string(state_dir.join("events.jsonl")).unwrap()
}
