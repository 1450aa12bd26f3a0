use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 1
trials = 2
[dataset]
kind = "normal"
d = 3
points = 800
[split]
n = 30
xi = 1.5
[kernel]
family = "laplace"
[compress]
schemes = [{ kind = "uniform" }, { kind = "nearest_neighbor" }]
s_grid = [0.1, 1.0]
"#;

fn farfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_farfield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn compress_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("runs").join("out.csv");
    let o = farfield(&["compress", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,d,N,n,xi,kernel,h,method,scheme,s,trial,seed,rank,rel_error,mc_error,bound_id,bound_sampling,elapsed_ms,status"
    );
    assert_eq!(lines.count(), 2 * 2 * 2);
    let summary = std::fs::read_to_string(dir.path().join("runs").join("out_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 2);
}

#[test]
fn overrides_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let a = farfield(&["compress", "--config", &cfg]);
    let b = farfield(&["compress", "--config", &cfg, "--seed", "2", "--trials", "1"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(
        String::from_utf8_lossy(&b.stdout).lines().count(),
        1 + 2 * 2
    );
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        &SMALL.replace("xi = 1.5", "xi = 1.5\nradius = 2"),
    );
    assert_eq!(
        farfield(&["compress", "--config", &bad]).status.code(),
        Some(1)
    );
    assert_eq!(farfield(&["compress"]).status.code(), Some(1));
    assert_eq!(
        farfield(&["compress", "--config", "/nonexistent.toml"])
            .status
            .code(),
        Some(1)
    );
    let no_search = write(dir.path(), "c.toml", SMALL);
    assert_eq!(
        farfield(&["bandwidth-search", "--config", &no_search])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        farfield(&["verify", "--suites", "nope"]).status.code(),
        Some(1)
    );
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(
        dir.path(),
        "file.toml",
        &SMALL.replace(
            "kind = \"normal\"\nd = 3\npoints = 800",
            "kind = \"file\"\npath = \"/nonexistent/points.csv\"",
        ),
    );
    assert_eq!(
        farfield(&["spectra", "--config", &missing]).status.code(),
        Some(2)
    );
    // A rank of 100% of the sources is out of reach on the large-h side.
    let search = write(
        dir.path(),
        "bw.toml",
        &format!("{SMALL}\n[bandwidth_search]\nkappa = 1.0\nbranches = [\"large_h\"]\n"),
    );
    let o = farfield(&["bandwidth-search", "--config", &search]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("error:"));
}

#[test]
fn verify_passes_and_detects_shrunken_bounds() {
    let ok = farfield(&[
        "verify",
        "--trials",
        "10",
        "--suites",
        "id_bound,projection,improvement",
    ]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.starts_with(
        "suite,trials,skipped,violations,failure_rate,allowed_rate,max_ratio,passed,detail"
    ));
    let bad = farfield(&[
        "verify",
        "--trials",
        "10",
        "--suites",
        "id_bound,projection",
        "--bound-scale",
        "0.01",
    ]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn uniform_suite_reports_rate_and_delta() {
    let o = farfield(&["verify", "--trials", "20", "--suites", "uniform"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("uniform,20,"));
    assert!(row.contains("delta=0.1"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            farfield::harness::ExperimentConfig::load(&p)
                .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
