use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_shadowprint");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SHADOWPRINT_SEED").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn fingerprint(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    let out_path = p(dir, name);
    let mut args = vec!["fingerprint", "--out", &out_path];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    out_path
}

#[test]
fn fingerprint_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let flags = ["--channel", "depolarizing", "--param", "0.05", "--seed", "42", "--heatmap"];
    let a = fingerprint(&dir, "a.json", &[&flags[..], &[&p(&dir, "a.svg")]].concat());
    let b = fingerprint(&dir, "b.json", &[&flags[..], &[&p(&dir, "b.svg")]].concat());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(p(&dir, "a.svg")).unwrap(), fs::read(p(&dir, "b.svg")).unwrap());
    let c = fingerprint(&dir, "c.json", &["--channel", "depolarizing", "--param", "0.05", "--seed", "43"]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn seed_falls_back_to_environment_and_flag_wins() {
    let dir = TempDir::new().unwrap();
    let run_env = |name: &str, seed_env: &str, extra: &[&str]| {
        let path = p(&dir, name);
        let mut args = vec!["fingerprint", "--out", &path];
        args.extend_from_slice(extra);
        let out = Command::new(BIN).args(&args).env("SHADOWPRINT_SEED", seed_env).output().unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read(path).unwrap()
    };
    let flagged = fingerprint(&dir, "flag.json", &["--seed", "7"]);
    assert_eq!(run_env("env.json", "7", &[]), fs::read(&flagged).unwrap());
    assert_eq!(run_env("both.json", "1234", &["--seed", "7"]), fs::read(&flagged).unwrap());
}

#[test]
fn exact_phase_damping_classifies_as_phase_damping() {
    let dir = TempDir::new().unwrap();
    let f = fingerprint(&dir, "pd.json", &["--channel", "phase_damping", "--param", "0.08", "--shots", "exact"]);
    let out = run(&["classify", &f]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("label:               phase_damping"), "{text}");
    for key in ["mean_dev", "std_dev", "frobenius_norm", "sparsity", "max_abs_dev", "variance_pattern", "c_phase", "provenance"] {
        assert!(text.contains(key), "missing {key}");
    }

    let json = run(&["estimate", &f, "--json", "--c-phase", "0.5"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["label"], "phase_damping");
    assert_eq!(v["constants"]["provenance"]["kind"], "override");
    let s = v["features"]["sparsity"].as_f64().unwrap();
    assert!((v["estimated_parameter"].as_f64().unwrap() - (1.0 - s) * 0.5).abs() < 1e-12);

    let assumed = run(&["estimate", &f, "--assume", "depolarizing"]);
    assert!(stdout(&assumed).contains("depolarizing (assumed; rules give phase_damping)"));
}

#[test]
fn noiseless_fingerprint_stays_near_the_floor() {
    let dir = TempDir::new().unwrap();
    let f = fingerprint(&dir, "id.json", &["--seed", "42"]);
    let text = fs::read_to_string(&f).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let norm: f64 = v["deviations"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|row| row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap().powi(2)))
        .sum::<f64>()
        .sqrt();
    assert!(norm < 2.0 * (2.0f64 * 135.0 / 500.0).sqrt(), "‖F‖ = {norm}");
    assert_eq!(v["format_version"], "shadowprint-fingerprint/1");
    assert_eq!(v["metadata"]["timestamp"], serde_json::Value::Null);
}

#[test]
fn compare_with_itself_is_zero() {
    let dir = TempDir::new().unwrap();
    let f = fingerprint(&dir, "a.json", &["--channel", "amplitude_damping", "--param", "0.1"]);
    let report = p(&dir, "cmp.json");
    let svg = p(&dir, "delta.svg");
    let out = run(&["compare", &f, &f, "--out", &report, "--heatmap", &svg]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["frobenius_distance"].as_f64(), Some(0.0));
    assert_eq!(v["ratio"].as_f64(), Some(0.0));
    assert_eq!(v["systematic"], false);
    let svg = fs::read_to_string(svg).unwrap();
    assert_eq!(svg.matches(r#"class="cell""#).count(), 135);
    let cells: Vec<&str> = svg.lines().filter(|l| l.contains(r#"class="cell""#)).collect();
    assert!(cells.iter().all(|l| l.contains(r##"fill="#ffffff""##)));
}

#[test]
fn suite_mismatch_exits_1() {
    let dir = TempDir::new().unwrap();
    let suite_path = p(&dir, "suite.json");
    fs::write(
        &suite_path,
        r#"{"version":"mini","states":[{"id":"z","gates":[]},{"id":"p","gates":[["h",0]]}],"observables":["ZI","XI","ZZ"]}"#,
    )
    .unwrap();
    let out = run(&["suite", "validate", &suite_path]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("2 states x 3 observables"));

    let a = fingerprint(&dir, "a.json", &[]);
    let b = fingerprint(&dir, "b.json", &["--suite", &suite_path]);
    let out = run(&["compare", &a, &b]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("not comparable"), "{}", stderr(&out));
}

#[test]
fn invalid_input_exits_1() {
    let dir = TempDir::new().unwrap();
    let out_path = p(&dir, "x.json");
    for args in [
        vec!["fingerprint", "--out", &out_path, "--channel", "bitflip"],
        vec!["fingerprint", "--out", &out_path, "--shots", "0"],
        vec!["fingerprint", "--out", &out_path, "--param", "1.5", "--channel", "phase_damping"],
        vec!["fingerprint", "--out", &out_path, "--backend", "qiskit"],
        vec!["fingerprint", "--out", &out_path, "--backend", "builtin:variant-C"],
        vec!["fingerprint", "--out", &out_path, "--seed", "-3"],
        vec!["fingerprint"],
        vec!["scaling", "--max-qubits", "17"],
        vec!["no-such-command"],
    ] {
        let out = run(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
        assert!(!Path::new(&out_path).exists());
    }
}

#[test]
fn malformed_files_exit_1() {
    let dir = TempDir::new().unwrap();
    let good = fingerprint(&dir, "good.json", &[]);
    let text = fs::read_to_string(&good).unwrap();

    let garbage = p(&dir, "garbage.json");
    fs::write(&garbage, "{not json").unwrap();
    let wrong_version = p(&dir, "v.json");
    fs::write(&wrong_version, text.replace("shadowprint-fingerprint/1", "shadowprint-fingerprint/9")).unwrap();
    let tampered = p(&dir, "t.json");
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["deviations"][0][0] = serde_json::json!(0.5);
    fs::write(&tampered, v.to_string()).unwrap();
    let missing = p(&dir, "missing.json");

    for file in [&garbage, &wrong_version, &tampered, &missing] {
        for cmd in ["classify", "estimate"] {
            let out = run(&[cmd, file]);
            assert_eq!(code(&out), 1, "{cmd} {file}: {}", stderr(&out));
        }
        assert_eq!(code(&run(&["compare", &good, file])), 1);
    }
}

#[test]
fn scaling_report_contents() {
    let out = run(&["scaling", "--max-qubits", "8", "--shots", "500", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines[2].starts_with("2,67500,128000,"));
    assert!(lines[8].starts_with("8,1696500,2147483648000,"));
    assert!(lines[8].contains(",864000,2.1e12,"));
    assert!(lines[7].ends_with(",,,"));

    let table = stdout(&run(&["scaling", "--max-qubits", "16"]));
    assert!(table.contains("reported figures"));
    assert_eq!(table.lines().count(), 18);
}

#[test]
fn suite_print_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = run(&["suite", "print"]);
    assert_eq!(code(&out), 0);
    let path = p(&dir, "default.json");
    fs::write(&path, &out.stdout).unwrap();
    let again = run(&["suite", "print", "--file", &path]);
    assert_eq!(out.stdout, again.stdout);
    assert!(stdout(&out).contains("suite_v1"));

    let bad = p(&dir, "bad.json");
    fs::write(&bad, r#"{"states":[{"id":"a","gates":[["t",0]]}],"observables":["ZZ"]}"#).unwrap();
    assert_eq!(code(&run(&["suite", "validate", &bad])), 1);
}

#[test]
fn calibrate_writes_constants_usable_by_estimate() {
    let dir = TempDir::new().unwrap();
    let constants = p(&dir, "k.json");
    let out = run(&["calibrate", "--out", &constants]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let f = fingerprint(&dir, "pd.json", &["--channel", "phase_damping", "--param", "0.08", "--shots", "exact"]);
    let json = run(&["estimate", &f, "--constants", &constants, "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let lambda = v["estimated_parameter"].as_f64().unwrap();
    assert!((lambda - 0.08).abs() / 0.08 < 1e-9, "{lambda}");
    assert_eq!(v["constants"]["provenance"]["kind"], "calibrated");
}

#[test]
fn heatmap_command_renders_file() {
    let dir = TempDir::new().unwrap();
    let f = fingerprint(&dir, "a.json", &["--channel", "phase_damping", "--param", "0.08", "--shots", "exact"]);
    let svg = p(&dir, "a.svg");
    let out = run(&["heatmap", &f, "--out", &svg, "--title", "phase <0.08>"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.contains("phase &lt;0.08&gt;"));
    assert_eq!(text.matches(r#"class="row-label""#).count(), 9);
}
