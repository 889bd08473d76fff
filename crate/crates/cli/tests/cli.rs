use std::process::Command;

fn ebus(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ebus"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn decay_csv_is_deterministic() {
    let args = [
        "decay", "--n", "8", "--steps", "4", "--draws", "2e3", "--seed", "11",
    ];
    let a = ebus(&args);
    let b = ebus(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,jsd,chi2_p");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("4,"));
}

#[test]
fn decay_json_rows() {
    let out = ebus(&[
        "decay", "--n", "4", "--steps", "2", "--draws", "500", "--format", "json",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["step"], 2);
    assert!(rows[0]["jsd"].as_f64().unwrap() >= 0.0);
}

#[test]
fn decay_writes_file() {
    let path = std::env::temp_dir().join(format!("ebus-decay-{}.csv", std::process::id()));
    let out = ebus(&[
        "decay",
        "--n",
        "3",
        "--steps",
        "1",
        "--draws",
        "100",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.starts_with("step,jsd,chi2_p\n1,"));
}

#[test]
fn bench_static_smoke() {
    let out = ebus(&[
        "bench",
        "--scenario",
        "static",
        "--sizes",
        "1e3",
        "--repeats",
        "2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,size,median_ns_per_iter");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..2], &["static", "1000"]);
    assert!(fields[2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        ebus(&["bench", "--scenario", "dynamic"]).status.code(),
        Some(2)
    );
    assert_eq!(ebus(&["bench"]).status.code(), Some(2));
    assert_eq!(ebus(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ebus(&["decay", "--n", "1"]).status.code(), Some(2));
    assert_eq!(ebus(&["decay", "--draws", "1.5"]).status.code(), Some(2));
    assert_eq!(
        ebus(&["bench", "--scenario", "fixed", "--sizes", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn selftest_passes() {
    let out = ebus(&["selftest", "--seed", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    for suite in [
        "oracle-equivalence",
        "safety-invariant",
        "repair-equivalence",
        "statistical",
    ] {
        assert!(text.contains(&format!("PASS {suite}")), "{text}");
    }
}
