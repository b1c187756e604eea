use std::path::Path;
use std::process::{Command, Output};

use prodtop::complex::SimplicialComplex;
use prodtop::io::read_matrix_market;
use prodtop::product::ProductComplex;

fn prodtop(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prodtop"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn demo_prints_ablation_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = prodtop(dir.path(), &["demo", "fig1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# prodtop "));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "alpha_t,alpha_s,rel_error");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
}

#[test]
fn malformed_json_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", "{\"top_simplices\": [[0, 1]");
    let o = prodtop(dir.path(), &["complex", "build", "--input", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
}

#[test]
fn unknown_flag_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = prodtop(dir.path(), &["spectral", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn every_subcommand_has_help_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        &["complex", "build"][..],
        &["product"],
        &["spectral"],
        &["interpolate"],
        &["demo", "fig1"],
        &["drifter", "run"],
        &["drifter", "synth"],
    ] {
        let mut args = cmd.to_vec();
        args.push("--help");
        let o = prodtop(dir.path(), &args);
        assert!(o.status.success(), "{cmd:?}");
        assert!(stdout(&o).contains("--validate"), "{cmd:?}");
    }
}

#[test]
fn validate_checks_without_computing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "x.json", r#"{"top_simplices": [[0, 1, 2], [2, 3]]}"#);
    let o = prodtop(
        d,
        &[
            "product",
            "--x",
            "x.json",
            "--y",
            "x.json",
            "--emit",
            "l.mtx",
            "--validate",
        ],
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "ok");
    assert!(!d.join("l.mtx").exists());
    let o = prodtop(
        d,
        &[
            "product",
            "--x",
            "x.json",
            "--y",
            "missing.json",
            "--validate",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn emitted_laplacian_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "x.json",
        r#"{"top_simplices": [[0, 1, 2], [2, 3], [3, 4], [1, 4]]}"#,
    );
    write(
        d,
        "y.json",
        r#"{"top_simplices": [[0, 1], [1, 2], [2, 3]]}"#,
    );
    let o = prodtop(
        d,
        &[
            "product", "--x", "x.json", "--y", "y.json", "--grade", "1,0", "--emit", "l.mtx",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let x =
        SimplicialComplex::new(vec![vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![1, 4]]).unwrap();
    let z = ProductComplex::from_simplicial(&x, &SimplicialComplex::path(4));
    let expected = z.kronecker_sum_laplacian(1, 0);
    let file = std::fs::File::open(d.join("l.mtx")).unwrap();
    let back =
        read_matrix_market::<i64, _>(file, |_| expected.rows(), |_| expected.cols()).unwrap();
    assert_eq!(back.to_dense(), expected.to_dense());

    let o = prodtop(
        d,
        &[
            "product",
            "--x",
            "x.json",
            "--y",
            "y.json",
            "--grade",
            "1,0",
            "--alpha-x",
            "0.5",
            "--emit",
            "w.mtx",
        ],
    );
    assert!(o.status.success());
    let weighted = std::fs::read_to_string(d.join("w.mtx")).unwrap();
    assert!(weighted.starts_with("%%MatrixMarket matrix coordinate real general"));
}

#[test]
fn complex_build_writes_cell_complex() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "sc.json", r#"{"top_simplices": [[0, 1, 2], [2, 3]]}"#);
    let o = prodtop(
        d,
        &[
            "complex",
            "build",
            "--input",
            "sc.json",
            "--out",
            "complex.bin",
            "--summary",
        ],
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o), "N_0 = 4\nN_1 = 4\nN_2 = 1\n");
    let o = prodtop(
        d,
        &["complex", "build", "--input", "complex.bin", "--summary"],
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o), "N_0 = 4\nN_1 = 4\nN_2 = 1\n");
}

#[test]
fn spectral_lists_kronecker_sums() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "z.json",
        r#"{"product": {"x": {"top_simplices": [[0, 1, 2]]}, "y": {"top_simplices": [[0, 1]]}}}"#,
    );
    let o = prodtop(
        d,
        &[
            "spectral",
            "--complex",
            "z.json",
            "--grade",
            "0,0",
            "--modes",
            "6",
        ],
    );
    assert!(o.status.success());
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "index,lambda_x,lambda_y,lambda_sum");
    let sums: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    for (got, want) in sums.iter().zip([0.0, 2.0, 3.0, 3.0, 5.0, 5.0]) {
        assert!((got - want).abs() < 1e-8, "{sums:?}");
    }
    let o = prodtop(
        d,
        &[
            "spectral",
            "--complex",
            "z.json",
            "--grade",
            "0,0",
            "--modes",
            "7",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn interpolate_reads_exported_scene() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(prodtop(
        d,
        &["demo", "fig1", "--export", "fig", "--out", "table.csv"]
    )
    .status
    .success());
    let o = prodtop(
        d,
        &[
            "interpolate",
            "--complex",
            "fig/complex.json",
            "--obs",
            "fig/obs.csv",
            "--alpha-s",
            "1",
            "--alpha-t",
            "0.01",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "t,edge_u,edge_v,value");
    assert_eq!(lines.len(), 1 + 30);

    write(d, "bad_obs.csv", "t,edge_u,edge_v,value\n0,0,6,1.0\n");
    let o = prodtop(
        d,
        &[
            "interpolate",
            "--complex",
            "fig/complex.json",
            "--obs",
            "bad_obs.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn drifter_run_scores_exported_pings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(prodtop(d, &["drifter", "synth", "--export", "synth"])
        .status
        .success());
    let bbox = std::fs::read_to_string(d.join("synth/bbox.txt")).unwrap();
    let o = prodtop(
        d,
        &[
            "drifter",
            "run",
            "--pings",
            "synth/pings.csv",
            "--mask",
            "synth/mask.txt",
            "--bbox",
            bbox.trim(),
            "--alpha-s",
            "0,0.001",
            "--alpha-t",
            "0,1",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("seed=7"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "alpha_s,alpha_t,train_loss,test_loss,iters");
    assert_eq!(lines.len(), 5);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(f[2] <= 1e-3 && (0.0..=1.0).contains(&f[3]));
    }
}

#[test]
fn drifter_run_rejects_bad_bbox() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pings.csv", "id,timestamp,lat,lon\n");
    let o = prodtop(
        dir.path(),
        &["drifter", "run", "--pings", "pings.csv", "--bbox", "1,2,3"],
    );
    assert_eq!(o.status.code(), Some(1));
}
