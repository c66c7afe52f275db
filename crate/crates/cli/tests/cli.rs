use std::path::Path;
use std::process::{Command, Output};

fn rectiflat(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rectiflat"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("RECTIFLAT_THREADS", t);
    }
    cmd.output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_cantor_depth_two_writes_sixteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = rectiflat(&["generate", "cantor4:depth=2", "--out", path(&out)], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.starts_with("x1,x2,weight"));
}

#[test]
fn analyze_line_has_zero_constants_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("line.json");
    let o =
        rectiflat(&["analyze", "--generate", "line", "--n", "16", "--coeff", "beta[q=2]", "--out", path(&out)], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    for c in report["carleson"].as_array().unwrap() {
        assert_eq!(c["constant"].as_f64(), Some(0.0));
    }
    assert!(report["dyadic"]["c0"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("line.cubes.csv").exists());
}

#[test]
fn csv_input_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pts.csv");
    std::fs::write(&data, "x1,x2\n0,0\n1,0\n2,0.1\n3,0\n").unwrap();
    let o = rectiflat(&["analyze", "--input", path(&data), "--coeff", "kappa", "--p", "1", "--K", "2"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["space"]["n"], 4);
}

#[test]
fn embed_four_collinear_points_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("four.csv");
    std::fs::write(&data, "0\n1\n2\n3\n").unwrap();
    let o = rectiflat(&["embed", "--input", path(&data), "--ambient", "euclidean:1"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["witness"]["linf_distortion"].as_f64(), Some(0.0));
    assert_eq!(r["witness"]["l1_distortion"].as_f64(), Some(0.0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(rectiflat(&["analyze", "--input", path(&missing)], None).status.code(), Some(3));
    assert_eq!(rectiflat(&["analyze", "--generate", "line", "--s=-1"], None).status.code(), Some(2));
    assert_eq!(rectiflat(&["verify", "nonsense"], None).status.code(), Some(2));
    assert_eq!(rectiflat(&["analyze", "--generate", "line", "--coeff", "gamma"], None).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0,0\n1,x\n").unwrap();
    assert_eq!(rectiflat(&["analyze", "--input", path(&bad)], None).status.code(), Some(3));
}

#[test]
fn config_file_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"
ambient = "euclidean:2"
seed = 3

[generate]
kind = "circle"
n = 24
seed = 3

[[coefficients]]
kind = "beta"
q = [1.0, "inf"]
p = [2.0]
K = [2.0]
"#,
    )
    .unwrap();
    let a = rectiflat(&["analyze", "--config", path(&cfg)], None);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = rectiflat(
        &[
            "analyze",
            "--generate",
            "circle",
            "--n",
            "24",
            "--seed",
            "3",
            "--coeff",
            "beta[q=1,q=inf]",
            "--p",
            "2",
            "--K",
            "2",
        ],
        None,
    );
    assert!(b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let args = [
        "analyze",
        "--generate",
        "perturbed-line:noise=0.05",
        "--n",
        "120",
        "--coeff",
        "beta",
        "--coeff",
        "kappa",
        "--coeff",
        "iota",
    ];
    let one = rectiflat(&args, Some("1"));
    let four = rectiflat(&args, Some("4"));
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn verify_menger_passes() {
    let o = rectiflat(&["verify", "menger", "--effort", "0.1"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
