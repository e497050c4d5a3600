use serde_json::Value;
use zigzag_core::cli::{run, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

const REPORT_SCHEMA: &str = include_str!("../schemas/report.schema.json");
const RECORD_SCHEMA: &str = include_str!("../schemas/trial_record.schema.json");

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn zigzag(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("zigzag").chain(args.iter().copied());
    let code = run(argv, Some(2), &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn validator(schema: &str) -> jsonschema::Validator {
    jsonschema::validator_for(&serde_json::from_str(schema).unwrap()).unwrap()
}

fn assert_valid(schema: &str, text: &str) -> Value {
    let v: Value = serde_json::from_str(text).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"));
    let errors: Vec<String> = validator(schema).iter_errors(&v).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}\n{text}");
    v
}

fn report(args: &[&str]) -> Value {
    let o = zigzag(args);
    assert_eq!(o.code, EXIT_OK, "stderr: {}", o.stderr);
    assert_valid(REPORT_SCHEMA, &o.stdout)
}

#[test]
fn chsh_example_prints_two_root_two() {
    let v = report(&["chsh", "--model", "zigzag", "--angles", "0,45,22.5,67.5", "--trials-per-pair", "1000000", "--seed", "7"]);
    let s = v["result"]["s"].as_f64().unwrap();
    assert!((s - 2.0 * 2f64.sqrt()).abs() < 0.01, "S = {s}");
    assert_eq!(v["result"]["local_bound"], 2.0);
    assert_eq!(v["config"]["trials_per_pair"], 1_000_000);
}

#[test]
fn infer_example_is_certain() {
    let v = report(&["infer", "--alpha", "30", "--beta", "30", "--known", "leftBit=1,alpha=30"]);
    assert_eq!(v["result"]["conditional"]["p_right_aligned"], 1.0);
}

#[test]
fn infer_ignorance_is_half() {
    for reading in ["one-photon", "two-photon"] {
        let v = report(&["infer", "--alpha", "10", "--beta", "75", "--reading", reading]);
        assert_eq!(v["result"]["conditional"]["p_right_aligned"], 0.5);
    }
}

#[test]
fn simulate_zero_trials() {
    let o = zigzag(&["simulate", "--model", "zigzag", "--alpha", "0", "--beta", "0", "--trials", "0", "--seed", "1"]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(o.stdout, "");
    let v = assert_valid(REPORT_SCHEMA, &o.stderr);
    assert_eq!(v["result"]["counts"], serde_json::json!([[0, 0], [0, 0]]));
    assert!(v["result"]["joint"].is_null());
}

#[test]
fn simulate_records_match_schema() {
    let records = validator(RECORD_SCHEMA);
    for model in ["zigzag", "two-tau", "one-photon", "local:1/0"] {
        let o = zigzag(&["simulate", "--model", model, "--alpha", "15", "--beta", "80", "--trials", "500", "--seed", "3"]);
        assert_eq!(o.code, EXIT_OK, "{model}: {}", o.stderr);
        let lines: Vec<&str> = o.stdout.lines().collect();
        assert_eq!(lines.len(), 500);
        for (i, line) in lines.iter().enumerate() {
            let v: Value = serde_json::from_str(line).unwrap();
            assert!(records.is_valid(&v), "{model}: {line}");
            assert_eq!(v["trial_index"], i as u64);
        }
        let summary = assert_valid(REPORT_SCHEMA, &o.stderr);
        let counts: u64 = summary["result"]["counts"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(counts, 500);
    }
}

#[test]
fn simulate_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trials.jsonl");
    let o = zigzag(&[
        "simulate", "--model", "one-photon", "--bias", "0.8", "--alpha", "0", "--beta", "30", "--trials", "200", "--seed", "9",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(o.stderr, "");
    assert_valid(REPORT_SCHEMA, &o.stdout);
    let records = validator(RECORD_SCHEMA);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 200);
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(records.is_valid(&v), "{line}");
        assert_eq!(v["experiment"], "one-photon");
        assert!(v["tau_b"].is_null());
    }
}

#[test]
fn every_report_validates() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["chsh", "--model", "two-tau", "--trials-per-pair", "1000", "--seed", "1"],
        vec!["chsh", "--model", "local:01/11", "--trials-per-pair", "10", "--seed", "1"],
        vec!["chsh", "--model", "one-photon", "--bias", "0.5", "--trials-per-pair", "1000", "--seed", "1"],
        vec!["nosig", "--model", "zigzag", "--alphas", "0,45,90", "--beta", "30", "--trials", "5000", "--seed", "2"],
        vec!["nosig", "--model", "local:10/1", "--alphas", "0,45", "--beta", "30", "--trials", "100", "--seed", "2"],
        vec!["signal", "--bias", "1", "--message", "0110", "--photons-per-bit", "1000", "--grid-step", "22.5", "--seed", "4"],
        vec!["mirror", "--alpha", "10", "--beta", "40", "--trials", "10000", "--seed", "5"],
        vec!["infer", "--alpha", "0", "--beta", "60", "--known", "B=0,beta=60", "--bias", "0.7"],
        vec!["sweep", "--model", "zigzag", "--alpha", "0", "--beta-range", "0:180:15", "--trials", "2000", "--seed", "6", "--out", csv.to_str().unwrap()],
    ];
    for args in cases {
        let v = report(&args);
        assert_eq!(v["command"], args[0]);
    }
}

#[test]
fn signal_decodes_biased_message() {
    let v = report(&["signal", "--message", "10110010", "--photons-per-bit", "1000", "--seed", "11"]);
    assert_eq!(v["result"]["decoded"]["bits"], "10110010");
    assert_eq!(v["result"]["bit_errors"], 0);
    assert_eq!(v["config"]["grid_step"], 22.5);
}

#[test]
fn sweep_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let v = report(&[
        "sweep", "--model", "zigzag", "--alpha", "0", "--beta-range", "0:90:22.5", "--trials", "20000", "--seed", "8", "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(v["result"]["rows"], 5);
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["beta", "trials", "n00", "n01", "n10", "n11", "p_same", "correlation", "correlation_analytic", "p_right_aligned"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let betas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(betas, [0.0, 22.5, 45.0, 67.5, 90.0]);
    assert_eq!(rows[0][8].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[4][8].parse::<f64>().unwrap(), -1.0);
    for r in &rows {
        let n: u64 = (2..6).map(|k| r[k].parse::<u64>().unwrap()).sum();
        assert_eq!(n, 20000);
    }
}

#[test]
fn usage_errors_exit_one() {
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["teleport"],
        vec!["chsh", "--trials-per-pair", "10", "--seed", "1", "--frobnicate"],
        vec!["chsh", "--angles", "0,45,22.5", "--trials-per-pair", "10", "--seed", "1"],
        vec!["chsh", "--model", "hidden", "--trials-per-pair", "10", "--seed", "1"],
        vec!["chsh", "--model", "zigzag", "--bias", "0.9", "--trials-per-pair", "10", "--seed", "1"],
        vec!["simulate", "--alpha", "NaN", "--beta", "0", "--trials", "1", "--seed", "1"],
        vec!["simulate", "--alpha", "0", "--beta", "0", "--trials", "-5", "--seed", "1"],
        vec!["simulate", "--model", "one-photon", "--bias", "1.5", "--alpha", "0", "--beta", "0", "--trials", "1", "--seed", "1"],
        vec!["simulate", "--model", "local:11/0", "--alpha", "0", "--beta", "0", "--trials", "1", "--seed", "1"],
        vec!["nosig", "--alphas", "0", "--beta", "0", "--trials", "10", "--seed", "1"],
        vec!["signal", "--message", "012", "--photons-per-bit", "10", "--seed", "1"],
        vec!["signal", "--message", "01", "--photons-per-bit", "10", "--grid-step", "30", "--seed", "1"],
        vec!["signal", "--message", "01", "--photons-per-bit", "10", "--grid-step", "-1", "--seed", "1"],
        vec!["mirror", "--alpha", "0", "--beta", "0", "--trials", "0", "--seed", "1"],
        vec!["infer", "--alpha", "0", "--beta", "0", "--known", "gamma=3"],
        vec!["sweep", "--alpha", "0", "--beta-range", "90:0:10", "--trials", "10", "--seed", "1", "--out", "x.csv"],
        vec!["sweep", "--alpha", "0", "--beta-range", "0:90:0", "--trials", "10", "--seed", "1", "--out", "x.csv"],
        vec!["sweep", "--alpha", "0", "--beta-range", "0:90", "--trials", "10", "--seed", "1", "--out", "x.csv"],
    ];
    for args in cases {
        let o = zigzag(&args);
        assert_eq!(o.code, EXIT_USAGE, "{args:?}: {}", o.stderr);
        assert!(!o.stderr.is_empty(), "{args:?}");
        assert_eq!(o.stdout, "", "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir/curve.csv");
    let o = zigzag(&["sweep", "--alpha", "0", "--beta-range", "0:90:45", "--trials", "10", "--seed", "1", "--out", missing.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_RUNTIME, "{}", o.stderr);
    let o = zigzag(&["infer", "--alpha", "0", "--beta", "0", "--known", "alpha=30,leftBit=1"]);
    assert_eq!(o.code, EXIT_RUNTIME, "{}", o.stderr);
}

#[test]
fn help_and_version_succeed() {
    let o = zigzag(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("simulate"));
    let o = zigzag(&["mirror", "--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("1e-12"));
    let o = zigzag(&["--version"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn reports_are_repeatable() {
    let args = ["nosig", "--alphas", "0,30,60", "--beta", "10", "--trials", "20000", "--seed", "77"];
    assert_eq!(zigzag(&args).stdout, zigzag(&args).stdout);
}

#[test]
fn schemas_reject_malformed_output() {
    let reports = validator(REPORT_SCHEMA);
    let mut v = report(&["chsh", "--trials-per-pair", "100", "--seed", "1"]);
    assert!(reports.is_valid(&v));
    v["result"].as_object_mut().unwrap().remove("s");
    assert!(!reports.is_valid(&v));
    let mut v = report(&["infer", "--alpha", "0", "--beta", "0"]);
    v["result"]["conditional"]["p_right_aligned"] = 1.5.into();
    assert!(!reports.is_valid(&v));
    let mut v = report(&["mirror", "--alpha", "0", "--beta", "0", "--trials", "10", "--seed", "1"]);
    v["command"] = "infer".into();
    assert!(!reports.is_valid(&v));

    let records = validator(RECORD_SCHEMA);
    let o = zigzag(&["simulate", "--alpha", "0", "--beta", "0", "--trials", "1", "--seed", "1"]);
    let mut r: Value = serde_json::from_str(o.stdout.trim()).unwrap();
    assert!(records.is_valid(&r));
    r["left_bit"] = 2.into();
    assert!(!records.is_valid(&r));
    r["left_bit"] = 1.into();
    r["alpha"] = 360.0.into();
    assert!(!records.is_valid(&r));
}
