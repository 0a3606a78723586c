use std::path::{Path, PathBuf};
use std::process::Command;

use dequant_cli::parse_csv;
use dequant_cli::report::ParsedCsv;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dequant"));
    c.env("DEQUANT_THREADS", "1");
    c
}

struct Run {
    code: i32,
    stderr: String,
    out: PathBuf,
}

fn run(dir: &Path, name: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{name}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("{name}.csv"));
    let output = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: output.status.code().unwrap(),
        stderr: String::from_utf8(output.stderr).unwrap(),
        out,
    }
}

fn parsed(r: &Run) -> ParsedCsv {
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = parse_csv(&std::fs::read_to_string(&r.out).unwrap()).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(r.out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), csv.rows.len());
    csv
}

fn error_code(r: &Run) -> &str {
    let line = r.stderr.trim();
    assert_eq!(line.lines().count(), 1, "{line}");
    line.strip_prefix("error code=")
        .and_then(|s| s.split_whitespace().next())
        .unwrap_or_else(|| panic!("unparseable error line `{line}`"))
}

const QUADRATIC: &str = r#"functional = """
dim 2
2 0 0 2.0
2 0 1 -0.5
2 1 1 1.0
""""#;

#[test]
fn asymptotic_scan_on_quadratic_has_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        "scan",
        &format!("command = \"asymptotic-scan\"\n{QUADRATIC}"),
        &["--seed", "5"],
    );
    let csv = parsed(&r);
    assert_eq!(csv.rows.len(), 7);
    for i in 0..csv.rows.len() {
        assert_eq!(csv.value(i, "residual"), Some(0.0));
        assert_eq!(csv.value(i, "slope"), None);
        assert_eq!(csv.value(i, "seed"), Some(5.0));
    }
    assert_eq!(csv.header_value("seed"), Some("5"));
}

#[test]
fn asymptotic_scan_on_quartic_fits_slope_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
command = "asymptotic-scan"
functional = """
dim 2
2 0 0 1.0
2 1 1 1.0
4 0 0 0 0 6.0
4 0 0 1 1 2.0
"""
[density]
diagonal = [0.25, 0.75]
"#;
    let csv = parsed(&run(dir.path(), "quartic", cfg, &[]));
    let slope = csv.value(0, "slope").unwrap();
    assert!((slope - 2.0).abs() < 0.01, "{slope}");
    for i in 0..csv.rows.len() {
        let a = csv.value(i, "alpha").unwrap();
        assert!(
            csv.value(i, "residual").unwrap().abs() <= csv.value(i, "bound").unwrap() + 1e-300 * a
        );
    }
}

#[test]
fn wick_check_identity_fourth_moment() {
    let dir = tempfile::tempdir().unwrap();
    let csv = parsed(&run(
        dir.path(),
        "wick",
        "command = \"wick-check\"\ndim = 3\norder = 4\n",
        &["--samples", "20000"],
    ));
    let row = csv.rows.iter().position(|r| r[1] == "e0 e0 e0 e0").unwrap();
    assert_eq!(csv.value(row, "exact_value"), Some(3.0));
    assert_eq!(csv.value(0, "exact_value"), Some(3.0));
    assert_eq!(csv.value(0, "residual"), Some(0.0));
    // Number of canonical 4-indices over 3 basis vectors, plus the matchings row.
    assert_eq!(csv.rows.len(), 15 + 1);
}

#[test]
fn verify_trace_and_higher_order_residuals_are_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let csv = parsed(&run(
        dir.path(),
        "trace",
        &format!(
            "command = \"verify-trace\"\nalpha_grid = [0.5, 0.05]\nsamples = 200000\n{QUADRATIC}"
        ),
        &[],
    ));
    for i in 0..2 {
        let exact = csv.value(i, "exact_value").unwrap();
        assert!(csv.value(i, "residual").unwrap().abs() <= 1e-14 * exact.abs());
        let mc = csv.value(i, "mc_estimate").unwrap();
        assert!((mc - exact).abs() <= 4.0 * csv.value(i, "mc_stderr").unwrap());
    }

    let cfg = r#"
command = "higher-order"
order = 2
alpha_grid = [0.3, 0.03]
functional = """
dim 2
2 0 0 1.0
4 0 0 1 1 3.0
4 1 1 1 1 -1.0
"""
"#;
    let csv = parsed(&run(dir.path(), "higher", cfg, &[]));
    for i in 0..2 {
        let exact = csv.value(i, "exact_value").unwrap();
        assert!(csv.value(i, "residual").unwrap().abs() <= 1e-13 * exact.abs());
    }
}

#[test]
fn pure_state_chebyshov_and_fieldgrid_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = parsed(&run(
        dir.path(),
        "pure",
        "command = \"pure-state\"\ndim = 3\npsi = [1.0, 2.0, 2.0]\npsi2 = [0.0, 1.0, 0.0]\nalpha = 0.01\n",
        &["--samples", "50000"],
    ));
    assert_eq!(csv.rows.len(), 4);
    assert!(csv.value(0, "exact_value").unwrap() <= 1e-12);
    assert!(csv.value(1, "exact_value").unwrap() <= 1e-15);
    let sp = csv.value(2, "exact_value").unwrap();
    assert!((sp - 2.0 / 3.0).abs() < 1e-15);
    assert!(
        (csv.value(2, "mc_estimate").unwrap() - sp).abs()
            <= 4.0 * csv.value(2, "mc_stderr").unwrap()
    );
    assert!(csv.value(3, "exact_value").unwrap() <= 1e-12);

    let csv = parsed(&run(
        dir.path(),
        "cheb",
        "command = \"chebyshov\"\ndim = 2\nalpha_grid = [0.1, 0.01]\n[density]\npreset = \"maximally-mixed\"\n",
        &["--samples", "20000"],
    ));
    assert_eq!(csv.rows.len(), 10);
    for i in 0..10 {
        let p = csv.value(i, "mc_estimate").unwrap();
        let se = csv.value(i, "mc_stderr").unwrap();
        assert!(p <= csv.value(i, "bound").unwrap() + 3.0 * se);
        assert!((p - csv.value(i, "exact_value").unwrap()).abs() <= 4.0 * se.max(1e-4));
    }

    let csv = parsed(&run(
        dir.path(),
        "grid",
        "command = \"fieldgrid\"\n[grid]\nhalf_width = 2.0\npoints = 9\nx0 = 0.5\nrefinements = 3\nprofile = \"uniform\"\n",
        &["--samples", "20000"],
    ));
    assert!(csv.text(0, "case").starts_with("projection"));
    let norms: Vec<f64> = (0..csv.rows.len())
        .filter(|&i| csv.text(i, "case").starts_with("delta-norm"))
        .map(|i| csv.value(i, "exact_value").unwrap())
        .collect();
    assert_eq!(norms.len(), 3);
    assert!((norms[2] / norms[1] - 2.0).abs() < 1e-9);
    for i in 0..csv.rows.len() {
        if csv.text(i, "case").starts_with("delta-trace") {
            let e = csv.value(i, "exact_value").unwrap();
            assert!(csv.value(i, "residual").unwrap().abs() <= 1e-12 * e.abs());
        }
    }
}

#[test]
fn functional_file_is_resolved_next_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("f.txt"),
        "# quadratic\ndim 2\n2 0 0 1\n2 1 1 3\n",
    )
    .unwrap();
    let csv = parsed(&run(
        dir.path(),
        "file",
        "command = \"verify-trace\"\nfunctional_file = \"f.txt\"\nalpha = 0.1\n",
        &[],
    ));
    assert_eq!(csv.header_value("functional"), Some("file:f.txt"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("notpsd", format!("command = \"verify-trace\"\n{QUADRATIC}\n[density]\nentries = [[1.5, 0.0], [0.0, -0.5]]\n"), "NOT_PSD"),
        ("cap", "command = \"asymptotic-scan\"\nfunctional = \"dim 1\\n10 0 0 0 0 0 0 0 0 0 0 1\"\n".to_string(), "DEGREE_OVER_CAP"),
        ("grid", "command = \"fieldgrid\"\n[grid]\npoints = 9\nx0 = 0.3\n".to_string(), "CONFIG_INVALID"),
        ("order", "command = \"asymptotic-scan\"\nalpha_grid = [0.01, 0.1]\nfunctional = \"dim 1\\n2 0 0 1\"\n".to_string(), "CONFIG_INVALID"),
        ("budget", "command = \"wick-check\"\nsamples = 10\n".to_string(), "CONFIG_INVALID"),
        ("notquad", "command = \"verify-trace\"\nfunctional = \"dim 1\\n4 0 0 0 0 1\"\n".to_string(), "CONFIG_INVALID"),
        ("unknown", "command = \"wick-check\"\nbogus = 1\n".to_string(), "CONFIG_PARSE"),
        ("missing", "command = \"verify-trace\"\nfunctional_file = \"nope.txt\"\n".to_string(), "CONFIG_IO"),
    ];
    for (name, cfg, code) in cases {
        let r = run(dir.path(), name, &cfg, &[]);
        assert_eq!(r.code, 2, "{name}: {}", r.stderr);
        assert_eq!(error_code(&r), code, "{name}");
        assert!(!r.out.exists(), "{name} wrote output");
    }
}

#[test]
fn non_finite_results_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        dir.path(),
        "overflow",
        "command = \"verify-trace\"\nalpha = 1e10\nsamples = 1000\nfunctional = \"dim 1\\n2 0 0 1.7e308\"\n",
        &[],
    );
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert_eq!(error_code(&r), "NON_FINITE");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv = parsed(&run(
        dir.path(),
        "flags",
        "command = \"chebyshov\"\nseed = 1\nalpha = 0.5\n",
        &[
            "--seed",
            "9",
            "--alpha-grid",
            "0.2,0.02",
            "--dim",
            "4",
            "--samples",
            "5000",
        ],
    ));
    assert_eq!(csv.header_value("seed"), Some("9"));
    assert_eq!(csv.header_value("dim"), Some("4"));
    assert_eq!(csv.header_value("alpha_grid"), Some("2e-1;2e-2"));
    assert_eq!(csv.value(0, "alpha"), Some(0.2));
}
