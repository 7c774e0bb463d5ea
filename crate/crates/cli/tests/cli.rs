use std::path::PathBuf;
use std::process::{Command, Output};

fn oneclick(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oneclick"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn header(o: &Output) -> String {
    stdout(o).lines().next().unwrap_or_default().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oneclick-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn threshold_limit_and_spacing() {
    let o = oneclick(&["threshold", "--X", "2", "--limit"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "X,delta,epsilon_star,lambda_max\n2,,0.5,2.0\n");

    let o = oneclick(&["--format", "json", "threshold", "--X", "2", "--delta", "2.0943951023931957"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v[0]["epsilon_star"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn validation_errors_exit_two() {
    for args in [
        vec!["threshold", "--X", "1", "--limit"],
        vec!["threshold", "--X", "2"],
        vec!["curve-steering", "--eps", ""],
        vec!["curve-bell", "--mode", "optimized", "--eps", "1.5"],
        vec!["wnr-steering", "--mode", "sideways", "--eps", "0.5"],
        vec!["simulate", "--config", "/nonexistent/config.json"],
    ] {
        let o = oneclick(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn csv_headers_are_stable() {
    let cases: [(&[&str], &str); 4] = [
        (&["curve-steering", "--eps", "0.516", "--overlaps", "0.9,0.95"], "epsilon,overlap,delta,parameter"),
        (
            &["curve-bell", "--mode", "maxent", "--eps", "0.9,1"],
            "epsilon,eta,phi_x,phi_y,lambda_min,below_threshold",
        ),
        (&["curve-bell", "--mode", "optimized", "--eps", "1"], "epsilon,eta,phi_x,phi_y,lambda_min,below_threshold"),
        (&["wnr-steering", "--mode", "maxent", "--eps", "0.4,1"], "epsilon,eta,delta,alpha"),
    ];
    for (args, want) in cases {
        let o = oneclick(args);
        assert!(o.status.success(), "{args:?}");
        assert_eq!(header(&o), want);
    }
}

#[test]
fn steering_curve_signs() {
    let o = oneclick(&["curve-steering", "--eps", "0.516,0.45", "--overlaps", "0.5:0.99:50"]);
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let min_516 = rows.iter().filter(|r| r[0] == 0.516).map(|r| r[3]).fold(f64::INFINITY, f64::min);
    assert!(min_516 < 0.0);
    assert!(rows.iter().filter(|r| r[0] == 0.45).all(|r| r[3] >= 0.0));
}

#[test]
fn wnr_below_threshold_is_zero() {
    let o = oneclick(&["wnr-steering", "--mode", "optimized", "--eps", "0.3,0.45"]);
    for line in stdout(&o).lines().skip(1) {
        let eta: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(eta, 0.0);
    }
}

#[test]
fn simulate_writes_report_deterministically() {
    let config = scratch("config.json");
    std::fs::write(
        &config,
        r#"{"alpha": 0.7853981633974483, "epsilon": 0.615, "deltas": [0.9, 1.1681], "heralds": 100000, "repetitions": 4, "seed": 7}"#,
    )
    .unwrap();
    let out = scratch("report.csv");
    let args = ["simulate", "--config", config.to_str().unwrap(), "--output", out.to_str().unwrap()];
    assert!(oneclick(&args).status.success());
    let first = std::fs::read_to_string(&out).unwrap();
    assert!(oneclick(&args).status.success());
    assert_eq!(first, std::fs::read_to_string(&out).unwrap());
    assert_eq!(first.lines().next().unwrap(), "overlap,mean_parameter,stderr,epsilon_estimate");
    assert_eq!(first.lines().count(), 3);

    let o = oneclick(&["--format", "json", "simulate", "--config", config.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_rejects_single_repetition() {
    let config = scratch("single.json");
    std::fs::write(&config, r#"{"alpha": 0.78, "epsilon": 0.6, "deltas": [1.0], "repetitions": 1}"#).unwrap();
    assert_eq!(oneclick(&["simulate", "--config", config.to_str().unwrap()]).status.code(), Some(2));
}
