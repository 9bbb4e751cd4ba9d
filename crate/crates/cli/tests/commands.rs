use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tolpred::simlab::{emit_table, TableFormat};
use tolpred_cli::io::parse_coverage_csv;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> String {
    root().join("scenarios").join(name).display().to_string()
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).display().to_string()
}

fn tolpred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tolpred")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

fn floats(text: &str, name: &str) -> Vec<f64> {
    csv_column(text, name).iter().map(|s| s.parse().unwrap()).collect()
}

#[test]
fn empty_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    fs::write(&p, "").unwrap();
    let o = tolpred(&["fit", "--input", p.to_str().unwrap(), "--family", "gamma"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "days\n1.5\n2.0\nabc\n").unwrap();
    let o = tolpred(&["fit", "--input", p.to_str().unwrap(), "--family", "gamma"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn missing_input_and_schema_are_config_errors() {
    let o = tolpred(&["fit", "--input", "/nonexistent.csv", "--family", "gamma"]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cfg.json");
    fs::write(&p, r#"{"fit": {"file": "x.json"}, "target": {"n": 2, "future": {"count": 1}}, "methods": []}"#).unwrap();
    let o = tolpred(&["predict", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("schema_version"));
}

#[test]
fn unknown_method_is_a_config_error() {
    let o = tolpred(&["predict", "--config", &scenario("recruit_days_predict.json"), "--method", "Eq9"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn fit_errors_exit_with_the_compute_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("neg.csv");
    fs::write(&p, "days\n1.0\n-2.0\n3.0\n").unwrap();
    let o = tolpred(&["fit", "--input", p.to_str().unwrap(), "--family", "gamma"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn gamma_fit_mean_is_the_column_mean() {
    let text = fs::read_to_string(fixture("interarrival_days.csv")).unwrap();
    let y: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let o = tolpred(&["fit", "--input", &fixture("interarrival_days.csv"), "--family", "gamma"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mu = v["mu_hat"].as_f64().unwrap();
    assert!((mu - mean).abs() < 1e-9 * mean, "{mu} {mean}");
    assert_eq!(v["n_obs"].as_u64(), Some(y.len() as u64));
}

#[test]
fn saved_fit_reproduces_intervals_from_raw_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = tolpred(&["fit", "--input", &fixture("interarrival_days.csv"), "--family", "gamma", "--out-dir", d.to_str().unwrap()]);
    assert!(o.status.success());
    let methods = r#"[{"method": "Eq1"}, {"method": "Eq2"}, {"method": "F pivot"}, {"method": "Plug-in"}]"#;
    let target = r#"{"n": 20, "future": {"count": 280}}"#;
    let from_file = format!(r#"{{"schema_version": 1, "fit": {{"file": "fit.json"}}, "target": {target}, "methods": {methods}}}"#);
    let from_data = format!(
        r#"{{"schema_version": 1, "fit": {{"data": {{"path": "{}", "family": "gamma"}}}}, "target": {target}, "methods": {methods}}}"#,
        fixture("interarrival_days.csv")
    );
    fs::write(d.join("a.json"), from_file).unwrap();
    fs::write(d.join("b.json"), from_data).unwrap();
    let (oa, ob) = (d.join("oa"), d.join("ob"));
    for (cfg, out) in [("a.json", &oa), ("b.json", &ob)] {
        let o = tolpred(&["predict", "--config", d.join(cfg).to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = fs::read_to_string(oa.join("intervals.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(ob.join("intervals.csv")).unwrap());
    assert_eq!(a.lines().count(), 5);
}

#[test]
fn recruitment_curves_cross_at_the_worked_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let o = tolpred(&["curve", "--config", &scenario("recruit_days_curves.json"), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("curves.json")).unwrap()).unwrap();
    let curves = json.as_array().unwrap();
    assert_eq!(curves.len(), 4);
    let iv = |i: usize| (curves[i]["interval"][0].as_f64().unwrap(), curves[i]["interval"][1].as_f64().unwrap());
    let (l, u) = iv(0);
    assert!((l - 566.0).abs() <= 1.0 && (u - 940.0).abs() <= 1.0, "{l} {u}");
    let (l, u) = iv(1);
    assert!((l - 583.0).abs() <= 1.0 && (u - 914.0).abs() <= 1.0, "{l} {u}");
    let (f, f1) = (iv(2), iv(3));
    assert!(f1.0 < f.0 && f1.1 > f.1, "k = 1 widens the F pivot");

    let table = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let labels = csv_column(&table, "curve");
    let per = labels.iter().filter(|l| *l == "Eq1").count();
    assert_eq!(labels.len(), 4 * per);
    let c = floats(&table, "C");
    assert!(c.iter().all(|v| (0.0..=0.5).contains(v)));
    for name in ["curves.svg", "density.svg"] {
        assert!(fs::read_to_string(dir.path().join(name)).unwrap().starts_with("<svg"));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        ("curve", scenario("recruit_days_curves.json")),
        ("recruit", scenario("recruit_trend.json")),
        ("survival", scenario("survival_weibull.json")),
    ];
    let runs: Vec<Vec<&str>> = configs.iter().map(|(c, p)| vec![*c, "--config", p.as_str()]).collect();
    for (i, args) in runs.iter().enumerate() {
        let mut outs = vec![];
        for rep in 0..2 {
            let out = dir.path().join(format!("{i}-{rep}"));
            let mut a = args.clone();
            let s = out.to_str().unwrap().to_string();
            a.extend(["--out-dir", &s]);
            let o = tolpred(&a);
            assert!(o.status.success(), "{}", stderr(&o));
            outs.push(out);
        }
        for entry in fs::read_dir(&outs[0]).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(fs::read(outs[0].join(&name)).unwrap(), fs::read(outs[1].join(&name)).unwrap(), "{name:?}");
        }
    }
}

#[test]
fn simulate_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut tables = vec![];
    for threads in ["1", "4", "4"] {
        let out = dir.path().join(format!("t{threads}-{}", tables.len()));
        let o = Command::new(env!("CARGO_BIN_EXE_tolpred"))
            .args(["simulate", "--scenario", &scenario("table1.json"), "--runs", "200", "--seed", "7"])
            .args(["--out-dir", out.to_str().unwrap()])
            .env("TOLPRED_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        tables.push((stdout(&o), fs::read_to_string(out.join("coverage.csv")).unwrap()));
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[1], tables[2]);
    // seven methods by five levels, one line each
    let text = &tables[0].0;
    assert_eq!(text.lines().filter(|l| l.starts_with("Eq") || l.starts_with("F pivot") || l.starts_with("Plug-in")).count(), 7);
    assert_eq!(text.lines().filter(|l| l.split_whitespace().count() >= 6).count(), 1 + 35);
    assert_eq!(tables[0].1.lines().count(), 1 + 7 * 5 * 5);
}

#[test]
fn coverage_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = tolpred(&[
        "simulate",
        "--scenario",
        &scenario("table2.json"),
        "--runs",
        "100",
        "--method",
        "Eq1,F pivot",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("coverage.csv")).unwrap();
    let report = parse_coverage_csv(&csv, "Gamma(0.7, 1.5/0.7)").unwrap();
    assert_eq!(report.rows.len(), 2 * 5 * 5);
    assert_eq!(emit_table(&report, TableFormat::Csv), csv);
    let text = fs::read_to_string(dir.path().join("coverage.txt")).unwrap();
    assert_eq!(emit_table(&report, TableFormat::Text), text);
}

#[test]
fn flag_overrides_win_over_the_config() {
    let a = tolpred(&["predict", "--config", &scenario("recruit_days_predict.json"), "--method", "Eq1"]);
    let b = tolpred(&["predict", "--config", &scenario("recruit_days_predict.json"), "--method", "Eq1", "--level", "0.8"]);
    assert!(a.status.success() && b.status.success());
    let width = |s: String| {
        let f: Vec<f64> = s.lines().nth(1).unwrap().split_whitespace().skip(1).take(2).map(|x| x.parse().unwrap()).collect();
        f[1] - f[0]
    };
    assert_eq!(stdout(&a).lines().count(), 2);
    assert!(width(stdout(&b)) < width(stdout(&a)));
}

#[test]
fn tolerance_limits_widen_with_content() {
    let run = |p: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = tolpred(&["tolerance", "--config", &scenario("recruit_days_tolerance.json"), "--content", p, "--out-dir", dir.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let t = fs::read_to_string(dir.path().join("tolerance.csv")).unwrap();
        (floats(&t, "lower"), floats(&t, "upper"))
    };
    let (l50, u50) = run("0.5");
    let (l95, u95) = run("0.95");
    assert_eq!(l50.len(), 3);
    for i in 0..3 {
        assert!(l95[i] < l50[i] && u95[i] > u50[i]);
    }
}

#[test]
fn survival_prediction_band_contains_tolerance_band() {
    let dir = tempfile::tempdir().unwrap();
    let o = tolpred(&["survival", "--config", &scenario("survival_weibull.json"), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    let (tl, tu) = (floats(&t, "tolerance_lower"), floats(&t, "tolerance_upper"));
    let (pl, pu) = (floats(&t, "prediction_lower"), floats(&t, "prediction_upper"));
    let est = floats(&t, "estimate");
    assert_eq!(tl.len(), 49);
    for i in 0..tl.len() {
        assert!(pl[i] <= tl[i] && tl[i] <= est[i] && est[i] <= tu[i] && tu[i] <= pu[i], "row {i}");
    }
    let km = fs::read_to_string(dir.path().join("km.csv")).unwrap();
    let s = floats(&km, "survival");
    assert!(s.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn site_day_forecast_from_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut series = String::from("period,events,exposure_days,active_sites\n");
    let counts = [8, 11, 9, 14, 12, 10];
    for (i, c) in counts.iter().enumerate() {
        series.push_str(&format!("{},{c},30,{}\n", i + 1, 4 + i));
    }
    fs::write(d.join("series.csv"), series).unwrap();
    fs::write(d.join("schedule.csv"), "period,active_sites\n7,10\n8,10\n9,10\n").unwrap();
    fs::write(
        d.join("cfg.json"),
        r#"{"schema_version": 1, "model": {"kind": "site_days", "series": {"file": "series.csv"}, "schedule": "schedule.csv"}}"#,
    )
    .unwrap();
    let out = d.join("out");
    let o = tolpred(&["recruit", "--config", d.join("cfg.json").to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let iv = fs::read_to_string(out.join("intervals.csv")).unwrap();
    let events: f64 = counts.iter().sum::<i32>() as f64;
    let site_days: f64 = (0..6).map(|i| 30.0 * (4 + i) as f64).sum();
    let point = events / site_days * 900.0;
    let (lo, hi, est) = (floats(&iv, "lower")[0], floats(&iv, "upper")[0], floats(&iv, "estimate")[0]);
    assert!((est - point).abs() < 1e-9 * point, "{est} {point}");
    assert!(lo < point && point < hi);
    assert!(stdout(&o).contains("stationarity"));
    assert!(out.join("site_rates.svg").exists());
}

#[test]
fn svg_is_drawn_from_the_written_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = tolpred(&["recruit", "--config", &scenario("recruit_trend.json"), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    let fitted = floats(&t, "fitted");
    assert_eq!(fitted.len(), 30);
    let svg = fs::read_to_string(dir.path().join("bands.svg")).unwrap();
    // one point marker per observed period
    let observed = csv_column(&t, "observed").iter().filter(|s| !s.is_empty()).count();
    assert_eq!(svg.matches("<circle").count(), observed);
    assert_eq!(fs::read_to_string(dir.path().join("bands.csv")).unwrap(), t);
}
