use std::path::Path;
use std::process::{Command, Output};

fn seihrd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seihrd")).args(args).arg("--output-dir").arg(out).output().expect("binary runs")
}

fn field(line: &str, i: usize) -> f64 {
    line.split(',').nth(i).unwrap().parse().unwrap()
}

#[test]
fn deterministic_row_at_day_69() {
    let dir = tempfile::tempdir().unwrap();
    let out = seihrd(&["deterministic", "--config", "default"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "0,1400812635,1,0,0,0,0,0,0,0,0.2887");
    let row = text.lines().find(|l| l.starts_with("69,")).expect("row at t=69");
    for (column, expected) in [(2, 2993.0), (3, 1340.0), (4, 3854.0), (5, 3252.0), (6, 214.0), (7, 1846.0), (8, 4296.0)]
    {
        let got = field(row, column);
        assert!((got - expected).abs() <= 0.02 * expected, "column {column}: {got} vs {expected}");
    }
    assert!((field(row, 9) - 131.0).abs() <= 2.0);

    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("t=69") && stdout.contains("t=119"));
    assert!(dir.path().join("indicators.csv").exists());
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn repeated_ensembles_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["ensemble", "--sigma", "0.1", "--paths", "32768", "--seed", "42"];
    for dir in [&a, &b] {
        let out = seihrd(&args, dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = std::fs::read(a.path().join("summary.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.path().join("summary.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.path().join("curves.csv")).unwrap(),
        std::fs::read(b.path().join("curves.csv")).unwrap()
    );
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("variable,t,mean,q1,q3,p95\n"));
    let d119 = text.lines().find(|l| l.starts_with("D,119,")).unwrap();
    assert!((field(d119, 2) - 426.0).abs() <= 0.05 * 426.0, "{d119}");
}

#[test]
fn zero_paths_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = seihrd(&["ensemble", "--paths", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--paths"));
}

#[test]
fn invalid_configuration_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    let text = seihrd::config::BUNDLED_DEFAULT.replace("d_g = 6.0", "d_g = 9.0");
    std::fs::write(&config, text).unwrap();
    let out = seihrd(&["deterministic", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.d_g"));
}

#[test]
fn effective_configuration_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = seihrd(
        &["histogram", "--sigma", "0.3", "--paths", "16", "--variable", "D", "--day", "119", "--bins", "4"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echoed = seihrd::RunConfig::from_path(&dir.path().join("config.toml")).unwrap();
    assert_eq!(echoed.cir.sigma, 0.3);
    assert_eq!(echoed.ensemble.paths, 16);

    let hist = std::fs::read_to_string(dir.path().join("histogram_D_119.csv")).unwrap();
    let counts: f64 = hist.lines().skip(1).map(|l| field(l, 2)).sum();
    assert_eq!(hist.lines().count(), 5);
    assert_eq!(counts, 16.0);

    // The echoed file is itself a valid configuration.
    let again = seihrd(
        &[
            "histogram",
            "--config",
            dir.path().join("config.toml").to_str().unwrap(),
            "--variable",
            "D",
            "--day",
            "119",
            "--bins",
            "4",
        ],
        dir.path(),
    );
    assert!(again.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("histogram_D_119.csv")).unwrap(), hist);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_seihrd"))
        .args(["indicators"])
        .env("SEIHRD_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("daily.csv").exists());
    assert!(!dir.path().join("trajectory.csv").exists());
}
