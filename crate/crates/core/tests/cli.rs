use std::fs;
use std::path::{Path, PathBuf};

use finslerkit::cli::{self, builtin_examples, parse_config, render, Command, RunConfig};
use finslerkit::Error;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["finslerkit"];
    argv.extend_from_slice(args);
    let code = cli::main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn shipped_configs_parse_and_bad_one_is_rejected() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let parsed = parse_config(&text);
        if path.file_name().unwrap() == "bad_matsumoto.json" {
            match parsed {
                Err(Error::Validation { path, constraint: message }) => {
                    assert_eq!(path, "metric.q");
                    assert!(message.contains("E_BAD_EXPONENT"), "{message}");
                }
                other => panic!("expected validation error, got {other:?}"),
            }
        } else {
            parsed.unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
        seen += 1;
    }
    assert!(seen >= 9);
}

#[test]
fn render_round_trips_every_builtin() {
    for (name, spec) in builtin_examples() {
        let text = render(&spec, &RunConfig::default());
        let (back, _) = parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(render(&back, &RunConfig::default()), text, "{name}");
    }
}

#[test]
fn eval_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval.csv");
    let cfg = configs_dir().join("randers_tensor.json");
    let (code, stdout, stderr) = run(&["eval", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.is_empty());
    assert!(stderr.contains("command: eval"), "{stderr}");
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("v1,v2,F,status"));
    assert_eq!(lines.next(), Some("1.0000000000000000e0,0.0000000000000000e0,1.5000000000000000e0,ok"));
}

#[test]
fn json_summary_embeds_csv_or_path() {
    let cfg = configs_dir().join("randers_tensor.json");
    let (code, stdout, _) = run(&["tensor", "--config", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["command"], "tensor");
    assert!(v["csv"].as_str().unwrap().starts_with("v1,v2,g11,g12,g21,g22,det,status"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let (code, stdout, _) = run(&["tensor", "--config", cfg.to_str().unwrap(), "--json", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["csv_path"], out.to_str().unwrap());
    assert!(v.get("csv").is_none());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (name, command) in [
        ("gen_matsumoto_oracle.json", "oracle"),
        ("position_randers.json", "gauss"),
        ("matsumoto_classify.json", "classify"),
        ("lorentz_separation.json", "separation"),
    ] {
        let cfg = configs_dir().join(name);
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let out = dir.path().join(format!("{command}.csv"));
            let (code, _, stderr) =
                run(&[command, "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()]);
            assert_eq!(code, 0, "{name}: {stderr}");
            outputs.push((fs::read(&out).unwrap(), stderr));
        }
        assert_eq!(outputs[0], outputs[1], "{name}");
    }
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(&["bogus"]);
    assert_eq!(code, 1, "{stderr}");
    let (code, _, _) = run(&["eval"]);
    assert_eq!(code, 1);
    let missing = dir.path().join("missing.json");
    let (code, _, stderr) = run(&["eval", "--config", missing.to_str().unwrap()]);
    assert_eq!(code, 1, "{stderr}");

    let bad = configs_dir().join("bad_matsumoto.json");
    let (code, _, stderr) = run(&["eval", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error[E_VALIDATION]"), "{stderr}");

    let parse = write_config(dir.path(), "parse.json", "{\n  \"metric\": {\"type\": \"riemannian\"},\n  \"run\": {\"dimension\": \"two\"}\n}");
    let (code, _, stderr) = run(&["eval", "--config", &parse]);
    assert_eq!(code, 1);
    assert!(stderr.contains("E_PARSE") && stderr.contains("run.dimension"), "{stderr}");

    let kropina = write_config(
        dir.path(),
        "kropina.json",
        r#"{"metric": {"type": "named", "family": "kropina", "q": 1, "b": 0.5},
            "run": {"base": [0, 0], "vectors": [[0, 1]]}}"#,
    );
    let (code, _, stderr) = run(&["eval", "--config", &kropina]);
    assert_eq!(code, 2, "{stderr}");

    let (code, _, _) = run(&["eval", "--config", &kropina, "--tolerance", "-1"]);
    assert_eq!(code, 1);
}

#[test]
fn every_command_runs_on_a_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "randers.json",
        r#"{"metric": {"type": "named", "family": "randers", "b": 0.3},
            "run": {"grid": {"lo": [-1, -1], "hi": [1, 1], "resolutions": [9]}, "radius": 0.5,
                    "base": [0, 0], "vectors": [[1, 0], [0.3, 0.4]], "from": [0, 0], "to": [[0.5, 0.5]]}}"#,
    );
    for command in Command::ALL {
        let (code, stdout, stderr) = run(&[command.name(), "--config", &cfg, "--json"]);
        assert_eq!(code, 0, "{}: {stderr}", command.name());
        let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(v["command"], command.name());
        assert!(v["csv"].as_str().unwrap().lines().count() > 1, "{}", command.name());
    }
}

#[test]
fn lorentz_separation_reports_infinite_for_unreachable_targets() {
    let cfg = configs_dir().join("lorentz_separation.json");
    let (code, stdout, _) = run(&["separation", "--config", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let csv = v["csv"].as_str().unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().filter(|r| r.contains(",inf,")).count() == 3, "{csv}");
}
