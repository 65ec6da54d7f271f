mod common;

use common::{run, stdout, toy_csv, write_csv};
use outlyingness::{DMatrix, DataMatrix};
use outlyingness_cli::document::{CaseStatus, ExplanationDocument};
use tempfile::tempdir;

#[test]
fn toy_outlier_is_explained_by_the_first_variable() {
    let dir = tempdir().unwrap();
    let csv = toy_csv(dir.path(), 0);
    let out = run(&[
        "explain",
        "--input",
        csv.to_str().unwrap(),
        "--case",
        "51",
        "--grid",
        "0.1:0.9:0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = ExplanationDocument::from_json(&stdout(&out)).unwrap();
    let case = &doc.cases[0];
    assert_eq!(case.case, 51);
    assert_eq!(case.status, CaseStatus::Converged);
    assert_eq!(case.flagged_variables, ["v1"]);
    let report = case.report.as_ref().unwrap();
    assert_eq!(report.flagged[0].sign, outlyingness::Sign::Positive);
    assert!(doc.detector.outlying_cases.contains(&51));
}

#[test]
fn document_round_trips() {
    let dir = tempdir().unwrap();
    let csv = toy_csv(dir.path(), 1);
    let out = run(&["explain", "--input", csv.to_str().unwrap(), "--all"]);
    let text = stdout(&out);
    let doc = ExplanationDocument::from_json(&text).unwrap();
    assert_eq!(doc.to_json().unwrap(), text);
    let again = ExplanationDocument::from_json(&doc.to_json().unwrap()).unwrap();
    assert_eq!(again, doc);
    let cases: Vec<usize> = doc.cases.iter().map(|c| c.case).collect();
    assert_eq!(cases, doc.detector.outlying_cases);
}

fn symmetric_data() -> DataMatrix {
    // Rows come in +/- pairs around the origin, plus the origin itself.
    let base = [
        [1.0, 0.3, -0.4],
        [0.2, -1.1, 0.5],
        [-0.7, 0.4, 1.2],
        [0.9, 0.8, 0.1],
        [0.1, -0.2, -0.9],
        [1.4, -0.6, 0.3],
        [-0.3, 1.3, 0.7],
        [0.6, 0.1, 1.5],
        [-1.2, -0.5, 0.2],
        [0.4, 0.9, -1.1],
        [0.8, -1.4, -0.6],
        [-0.5, 0.6, -0.2],
    ];
    let n = 2 * base.len() + 1;
    DataMatrix::new(
        DMatrix::from_fn(n, 3, |i, j| match i {
            0 => 0.0,
            _ if i % 2 == 1 => base[(i - 1) / 2][j],
            _ => -base[(i - 2) / 2][j],
        }),
        None,
    )
    .unwrap()
}

#[test]
fn central_case_is_refused_with_partial_status() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("sym.csv");
    write_csv(&csv, &symmetric_data(), true);
    let out = run(&["explain", "--input", csv.to_str().unwrap(), "--case", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = ExplanationDocument::from_json(&stdout(&out)).unwrap();
    assert_eq!(doc.cases[0].status, CaseStatus::NotOutlying);
    assert!(doc.cases[0].report.is_none());
}

#[test]
fn errors_exit_with_one() {
    let dir = tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        run(&["weights", "--input", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n3,NA\n4,5\n").unwrap();
    let out = run(&["weights", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lines 3"));

    assert_eq!(
        run(&["simulate", "--n", "50", "--p", "5", "--frac", "1.5", "--gamma", "4"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["explain"]).status.code(), Some(1));

    let csv = toy_csv(dir.path(), 0);
    let out = run(&["explain", "--input", csv.to_str().unwrap(), "--case", "52"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn csv_and_svg_explanations() {
    let dir = tempdir().unwrap();
    let csv = toy_csv(dir.path(), 0);
    let input = csv.to_str().unwrap();
    let out = run(&[
        "explain",
        "--input",
        input,
        "--case",
        "51",
        "--grid",
        "0.1:0.9:0.05",
        "--format",
        "csv",
    ]);
    assert_eq!(
        stdout(&out).lines().next().unwrap(),
        "case,status,variable,column,sign,coefficient,eta"
    );
    assert!(stdout(&out)
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("51,converged,v1,1,+,"));
    assert_eq!(stdout(&out).lines().count(), 2);

    let svg_path = dir.path().join("heat.svg");
    let out = run(&[
        "explain",
        "--input",
        input,
        "--case",
        "51",
        "--grid",
        "0.1:0.9:0.05",
        "--format",
        "svg",
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let svg = std::fs::read_to_string(svg_path).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains("case 51"));
    assert_eq!(svg.matches("#b2182b").count(), 1);
    assert!(!svg.contains("#2166ac"));
}

#[test]
fn path_files_and_counts() {
    let dir = tempdir().unwrap();
    let csv = toy_csv(dir.path(), 0);
    let out_dir = dir.path().join("path");
    let out = run(&[
        "path",
        "--input",
        csv.to_str().unwrap(),
        "--case",
        "51",
        "--grid",
        "0.0:0.9:0.05",
        "--format",
        "svg",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for f in [
        "screeplot.csv",
        "directions.csv",
        "screeplot.svg",
        "heatmap.svg",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let scree = std::fs::read_to_string(out_dir.join("screeplot.csv")).unwrap();
    let rows: Vec<(f64, usize, u8)> = scree
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<&str> = l.split(',').collect();
            (
                v[0].parse().unwrap(),
                v[1].parse().unwrap(),
                v[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 19);
    for &(eta, count, _) in &rows {
        if eta >= 0.3 - 1e-9 {
            assert_eq!(count, 1, "eta {eta}");
        }
    }
    assert_eq!(rows.last().unwrap(), &(0.0, 30, 0));
    assert_eq!(rows.iter().filter(|r| r.2 == 1).count(), 1);
    let directions = std::fs::read_to_string(out_dir.join("directions.csv")).unwrap();
    assert_eq!(directions.lines().count(), 20);
}

#[test]
fn direction_command() {
    let dir = tempdir().unwrap();
    let csv = toy_csv(dir.path(), 0);
    let input = csv.to_str().unwrap();
    let out = run(&[
        "direction",
        "--input",
        input,
        "--case",
        "51",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<f64> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 30);
    let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-10);

    let out = run(&[
        "direction",
        "--input",
        input,
        "--case",
        "51",
        "--eta",
        "0.5",
        "--format",
        "csv",
    ]);
    let nonzero: Vec<String> = stdout(&out)
        .lines()
        .skip(1)
        .filter(|l| !l.ends_with(",0"))
        .map(str::to_owned)
        .collect();
    assert_eq!(nonzero, ["v1,1"]);
}

#[test]
fn simulate_single_replication() {
    let out = run(&[
        "simulate", "--n", "100", "--p", "10", "--frac", "0.2", "--gamma", "5", "--reps", "1",
        "--seed", "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("100,10,a09,0.2,5,1,4,1,"));
}

#[test]
fn weights_command() {
    let dir = tempdir().unwrap();
    let csv = toy_csv(dir.path(), 0);
    let out = run(&["weights", "--input", csv.to_str().unwrap()]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 52);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[..2], ["51", "0"]);
    let o2: f64 = last[2].parse().unwrap();
    let cutoff: f64 = last[3].parse().unwrap();
    assert!(o2 > cutoff);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempdir().unwrap();
    let csv = toy_csv(dir.path(), 2);
    let args = ["explain", "--input", csv.to_str().unwrap(), "--all"];
    let one = common::bin()
        .args(args)
        .env("SPADIMO_THREADS", "1")
        .output()
        .unwrap();
    let auto = common::bin()
        .args(args)
        .env("SPADIMO_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(one.stdout, auto.stdout);
    let bad = common::bin()
        .args(args)
        .env("SPADIMO_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
