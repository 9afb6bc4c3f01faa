use std::f64::consts::LN_2;
use std::process::{Command, Output};

fn suplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suplab"))
        .args(args)
        .output()
        .expect("suplab runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn summary(csv: &str, key: &str) -> String {
    let prefix = format!("# {key}=");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("missing {key}"))
        .to_string()
}

#[test]
fn matched_phase_gives_all_yes() {
    let o = suplab(&[
        "protocol",
        "--model",
        "rsi",
        "--trials",
        "20",
        "--phase-actual",
        "0",
        "--phase-assumed",
        "0",
        "--seed",
        "7",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# suplab protocol v1"));
    assert_eq!(lines.next(), Some("index,outcome,p_rsi,p_collapse"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 20);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        assert_eq!(r[1], "Yes");
    }
    let lbf: f64 = summary(&csv, "log_bayes_factor").parse().unwrap();
    assert!((lbf - 20.0 * LN_2).abs() < 1e-9 * 20.0 * LN_2);
    assert_eq!(summary(&csv, "yes_count"), "20");
}

#[test]
fn half_turn_mismatch_gives_all_no() {
    let o = suplab(&[
        "protocol",
        "--model",
        "rsi",
        "--phase-actual",
        "3.14159265",
        "--phase-assumed",
        "0",
        "--trials",
        "5",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[1] == "No"));
}

#[test]
fn degrees_switch_converts_both_phases() {
    let deg = suplab(&[
        "protocol",
        "--phase-actual",
        "180",
        "--degrees",
        "--trials",
        "5",
        "--format",
        "csv",
    ]);
    assert_eq!(deg.status.code(), Some(0));
    assert!(data_rows(&stdout(&deg)).iter().all(|r| r[1] == "No"));
    let both = suplab(&[
        "protocol",
        "--phase-actual",
        "90",
        "--phase-assumed",
        "90",
        "--degrees",
        "--trials",
        "5",
        "--format",
        "csv",
    ]);
    assert!(data_rows(&stdout(&both)).iter().all(|r| r[1] == "Yes"));
}

#[test]
fn collapse_run_is_balanced_and_rejects_rsi() {
    let args = [
        "protocol", "--model", "collapse", "--trials", "10000", "--seed", "7", "--format", "csv",
    ];
    let o = suplab(&args);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let yes: f64 = summary(&csv, "yes_count").parse().unwrap();
    assert!((yes / 10000.0 - 0.5).abs() <= 0.02);
    assert_eq!(summary(&csv, "log_bayes_factor"), "rsi_rejected");
    assert_eq!(suplab(&args).stdout, o.stdout);
}

#[test]
fn text_format_reports_summary() {
    let o = suplab(&["protocol", "--trials", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("yes_count        3"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["theorems", "--dim", "1"][..],
        &["search", "--kind", "bogus"][..],
        &["protocol", "--model", "pilot-wave"][..],
        &["protocol", "--trials", "0"][..],
        &["protocol", "--phase-actual", "NaN"][..],
        &["protocol", "--format", "json"][..],
        &["mixture", "--k", "1"][..],
        &[][..],
    ] {
        let o = suplab(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_exits_zero() {
    assert_eq!(suplab(&["--help"]).status.code(), Some(0));
    assert_eq!(suplab(&["search", "--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("out.csv");
    let o = suplab(&["protocol", "--trials", "2", "--out", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let args = [
        "protocol",
        "--trials",
        "50",
        "--phase-actual",
        "2",
        "--seed",
        "4",
        "--format",
        "csv",
    ];
    let direct = suplab(&args);
    let mut with_out = args.to_vec();
    let p = path.to_str().unwrap();
    with_out.extend(["--out", p]);
    let o = suplab(&with_out);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn theorems_pass_and_list_every_check() {
    let o = suplab(&[
        "theorems",
        "--dim",
        "16",
        "--instances",
        "1000",
        "--seed",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("# suplab theorems v1\ncheck,status,metric,value\n"));
    let rows = data_rows(&csv);
    assert!(rows.len() >= 6);
    assert!(rows.iter().all(|r| r[1] == "pass"));
    for name in [
        "lemma1_overlap_invariance",
        "linearity_identity",
        "branch_relation",
        "machine_mixture_identity",
    ] {
        assert!(rows.iter().any(|r| r[0] == name), "{name}");
    }
}

#[test]
fn search_examples_exit_zero() {
    for args in [
        &[
            "search",
            "--kind",
            "branch-discriminating",
            "--dim",
            "8",
            "--restarts",
            "20",
            "--seed",
            "1",
        ][..],
        &[
            "search",
            "--kind",
            "definitive",
            "--dim",
            "4",
            "--restarts",
            "100",
            "--seed",
            "1",
        ][..],
        &[
            "search",
            "--kind",
            "partially-definitive",
            "--dim",
            "3",
            "--restarts",
            "10",
            "--seed",
            "1",
            "--format",
            "csv",
        ][..],
    ] {
        let o = suplab(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
    }
    let csv = stdout(&suplab(&[
        "search",
        "--kind",
        "definitive",
        "--dim",
        "2",
        "--restarts",
        "5",
        "--format",
        "csv",
    ]));
    assert_eq!(data_rows(&csv).len(), 5);
    assert_eq!(summary(&csv, "passed"), "true");
}

#[test]
fn mixture_command_passes() {
    let o = suplab(&["mixture", "--dim", "4", "--instances", "20", "--k", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS machine_mixture_identity"));
}
