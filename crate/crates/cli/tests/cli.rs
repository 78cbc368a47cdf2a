use std::path::Path;
use std::process::{Command, Output};

use dass_cli::dataset::{ingest_csv, write_csv};
use dass_cli::report::{REPORT_FORMAT_HEADER, SUMMARY_COLUMNS};

fn dass(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dass"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dass(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn simulate_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["simulate", "--blocks", "20", "--block-length", "48", "--seed", "1", "--report", "r.csv", "--summary", "s.csv"],
    );
    let text = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert!(text.starts_with(REPORT_FORMAT_HEADER));
    assert!(text.contains("# seed = 1"));
    let table = rows(&d.join("r.csv"));
    assert!(table.len() > 1);
    let summary = rows(&d.join("s.csv"));
    assert_eq!(summary[0], SUMMARY_COLUMNS);
    assert_eq!(summary.len(), 2);
}

#[test]
fn sweep_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "sweep", "--methods", "OLS_uniform,CSN", "--snr-db", "10:10:30", "--blocks", "15", "--block-length", "24",
            "--report", "sweep.csv",
        ],
    );
    assert_eq!(rows(&d.join("sweep.csv")).len(), 1 + 2 * 3);
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = dass(d, &["simulate", "--gamam", "0.1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--gamam"));

    let out = dass(d, &["simulate", "--method", "magic", "--blocks", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    std::fs::write(d.join("bad.csv"), "a\n1\nx\n").unwrap();
    let out = dass(d, &["simulate", "--data", "bad.csv", "--block-length", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3, column 1"));
}

#[test]
fn synth_csv_round_trip_with_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--profile", "multi_node_correlated", "--nodes", "2", "--blocks", "4", "--block-length", "24", "--out", "s.csv"]);
    let (clean, notes) = ingest_csv(&d.join("s.csv"), 24).unwrap();
    assert_eq!(notes.interpolated_cells, 0);
    assert_eq!(clean.block_count(), 4);

    // Blank three interior cells of the second column.
    let text = std::fs::read_to_string(d.join("s.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    for row in [5, 6, 40] {
        let line = &mut lines[header + 1 + row];
        let first = line.split(',').next().unwrap().to_string();
        *line = format!("{first},");
    }
    std::fs::write(d.join("gaps.csv"), lines.join("\n") + "\n").unwrap();
    let (filled, notes) = ingest_csv(&d.join("gaps.csv"), 24).unwrap();
    assert_eq!(notes.interpolated_cells, 3);
    let s = &filled.series[1];
    let c = &clean.series[1];
    assert!((s[5] - (c[4] + (c[7] - c[4]) / 3.0)).abs() < 1e-12);
    assert!((s[40] - 0.5 * (c[39] + c[41])).abs() < 1e-12);

    let mut buf = Vec::new();
    write_csv(&filled, &mut buf).unwrap();
    std::fs::write(d.join("again.csv"), &buf).unwrap();
    let (again, notes) = ingest_csv(&d.join("again.csv"), 24).unwrap();
    assert_eq!(notes.interpolated_cells, 0);
    assert_eq!(again.series, filled.series);

    let out = ok(d, &["simulate", "--data", "gaps.csv", "--block-length", "24", "--method", "OLS_uniform", "--report", "r.csv"]);
    assert!(out.contains("OLS_uniform gamma=0.1"), "{out}");
}

#[test]
fn schedule_learns_and_reuses_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "schedule", "--data", "synth:diurnal_spiky", "--blocks", "20", "--block-length", "48", "--samples", "6",
            "--save-model", "m.model", "--out", "p1.txt",
        ],
    );
    ok(d, &["schedule", "--model", "m.model", "--samples", "6", "--block-length", "48", "--out", "p2.txt"]);
    let indices = |f: &str| -> Vec<usize> {
        let text = std::fs::read_to_string(d.join(f)).unwrap();
        let body = text.lines().find(|l| !l.starts_with('#')).unwrap();
        body.split(',').map(|v| v.trim().parse().unwrap()).collect()
    };
    let p = indices("p1.txt");
    assert_eq!(p.len(), 6);
    assert!(p.windows(2).all(|w| w[0] < w[1]) && p[5] < 48);
    assert_eq!(indices("p2.txt"), p);
}

#[test]
fn energy_grid_long_format() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["energy", "--rs", "0:0.5:1", "--rc", "1:1:3", "--out", "e.csv"]);
    let table = rows(&d.join("e.csv"));
    assert_eq!(table[0], "rc,rs,saving,zero_crossing_rs");
    assert_eq!(table.len(), 1 + 3 * 3);
    let out = ok(d, &["energy", "--platform", "tmote_sky", "--rs", "0.26", "--rc", "4"]);
    assert!(out.contains("0.26"));
}
