use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_colored-shuffle"));
    c.env("NO_COLOR", "1");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn manifest_at(out: &Path) -> serde_json::Value {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&std::fs::read_to_string(name).unwrap()).unwrap()
}

#[test]
fn spectrum_charpoly_for_three_cards_two_colors() {
    let o = run(&["spectrum", "--n", "3", "--p", "2", "--method", "charpoly"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("char_poly = (x-6)(x-4)^3(x-2)^15x^29"));
}

#[test]
fn spectrum_single_uncolored_card() {
    let o = run(&["spectrum", "--n", "1", "--p", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\n1,1,1\n"), "{text}");
    assert!(text.contains("\n0,0,0\n"), "{text}");
}

#[test]
fn spectrum_trace_matches_formula() {
    let json = |method: &str| {
        let o = run(&["spectrum", "--n", "4", "--p", "3", "--method", method, "--format", "json"]);
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["eigenvalues"].clone()
    };
    assert_eq!(json("trace"), json("formula"));
}

#[test]
fn spectrum_exit_codes() {
    let o = run(&["spectrum", "--n", "9", "--p", "3", "--method", "charpoly"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("formula method"));
    assert_eq!(run(&["spectrum", "--n", "0", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--n", "3", "--p", "2", "--method", "guess"]).status.code(), Some(2));
    assert_eq!(run(&["tvd", "--n", "3", "--p", "2"]).status.code(), Some(2));
}

#[test]
fn tvd_prints_fraction_and_decimal() {
    let o = run(&["tvd", "--n", "3", "--p", "2", "--k", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,c,tv_exact_num,tv_exact_den,tv_upper,tv_limit,threshold_A,mode,tv,lower_bound_flag"
    );
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((fields[2], fields[3]), ("47", "48"));
    assert_eq!(fields[8], "0.979166666667");

    let o = run(&["tvd", "--n", "3", "--p", "2", "--k", "10"]);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(line.starts_with("10,"));
    assert!(line.contains(",341,13122,"), "{line}");
}

#[test]
fn tvd_range_at_a_hundred_cards() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = run(&[
        "tvd", "--n", "100", "--p", "2", "--kmin", "200", "--kmax", "800", "--mode", "exact", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 601);
    let tv: Vec<f64> = rows.iter().map(|r| r[8].parse().unwrap()).collect();
    let upper: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(tv.windows(2).all(|w| w[1] <= w[0]));
    assert!(tv.iter().zip(&upper).all(|(t, u)| t <= u));
    let manifest = manifest_at(&out);
    assert_eq!(manifest["command"], "tvd");
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["outputs"][0], out.to_str().unwrap());
}

#[test]
fn tvd_json_and_logspace() {
    let o = run(&["tvd", "--n", "300", "--p", "2", "--k", "2000", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mode"], "logspace");
    assert!(v["records"][0]["tv_exact"].is_null());
}

#[test]
fn tvd_exact_mode_cap_suggests_logspace() {
    let o = run(&["tvd", "--n", "1500", "--p", "2", "--k", "100", "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("logspace"), "{}", stderr(&o));
}

#[test]
fn cutoff_empty_grid_warns() {
    let o = run(&["cutoff", "--n", "10", "--p", "2", "--cmin", "2", "--cmax", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stderr(&o).contains("warning: cmin = 2 exceeds cmax = 1"));
}

#[test]
fn cutoff_at_a_hundred_cards() {
    let o = run(&[
        "cutoff", "--n", "100", "--p", "2", "--cmin", "-3.25", "--cmax", "1", "--step", "0.25", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let records = v["curve"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 18);
    let at_zero = records.iter().find(|r| r["c"] == 0.0).unwrap();
    assert!((at_zero["tv_limit"].as_f64().unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    // For n = 100, p = 2 the window is 3.19 <= c_n < 0.75 ln 100 = 3.45.
    let lower = v["lower_bounds"].as_array().unwrap();
    assert_eq!(lower.len(), 1);
    assert_eq!(lower[0]["c_n"], 3.25);
    assert_eq!(records[0]["lower_bound_flag"], true);
    assert!(records[1]["lower_bound_flag"].is_null());
    assert!(stderr(&o).contains("exceeds tolerance 0.02"));
}

#[test]
fn simulate_matches_exact_distance() {
    let o = run(&["simulate", "--n", "3", "--p", "2", "--k", "10", "--trials", "100000", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&fields[..3], &["10", "100000", "7"]);
    let abs_error: f64 = fields[5].parse().unwrap();
    assert!(abs_error < 0.088, "{abs_error}");
    assert!(stderr(&o).contains("ChaCha8Rng"));
}

#[test]
fn simulate_point_mass_and_determinism() {
    let o = run(&["simulate", "--n", "3", "--p", "2", "--k", "0", "--trials", "1", "--seed", "1"]);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    assert_eq!(line, "0,1,1,0.979166666667,0.979166666667,0");

    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.csv", "b.csv"].iter().map(|f| dir.path().join(f)).collect();
    let hist: Vec<_> = ["a.hist", "b.hist"].iter().map(|f| dir.path().join(f)).collect();
    for (threads, (out, h)) in ["1", "8"].iter().zip(paths.iter().zip(&hist)) {
        let o = run(&[
            "--threads", threads, "simulate", "--n", "4", "--p", "2", "--k", "6", "--trials", "20000", "--seed",
            "3", "--out", out.to_str().unwrap(), "--histogram", h.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert_eq!(std::fs::read(&hist[0]).unwrap(), std::fs::read(&hist[1]).unwrap());
    let manifest = manifest_at(&paths[0]);
    assert!(manifest["rng_algorithm"].as_str().unwrap().contains("set_stream"));
    assert_eq!(manifest["parameters"]["command"]["simulate"]["seed"], 3);
}

#[test]
fn simulate_refuses_huge_groups() {
    let o = run(&["simulate", "--n", "12", "--p", "2", "--k", "1", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn stirling_export_csv() {
    let o = run(&["stirling", "export", "--kmin", "5", "--kmax", "5", "--amin", "1", "--amax", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "k,a,value\n5,1,1\n5,2,15\n5,3,25\n5,4,10\n5,5,1\n");
    let o = run(&["stirling", "export", "--kind", "first", "--kmin", "4", "--kmax", "4", "--amin", "1"]);
    assert_eq!(stdout(&o), "k,a,value\n4,1,6\n4,2,11\n4,3,6\n4,4,1\n");
}

#[test]
fn verify_passes_on_small_groups() {
    let o = run(&["verify", "--n-max", "3", "--p-max", "2", "--suite", "all"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("passed: "));
    assert!(!stdout(&o).contains('\x1b'));
}

#[test]
fn verify_empty_range_passes() {
    let o = run(&["verify", "--n-max", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("passed: 0 checks over 0 groups"));
}

#[test]
fn verify_catches_an_injected_fault() {
    let o = run(&["verify", "--n-max", "3", "--p-max", "2", "--inject-stirling-fault", "3:2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let failed: Vec<&serde_json::Value> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| c["identity"] == "b1-power-expansion"));
    assert!(stderr(&o).contains("failed: b1-power-expansion"));
}
