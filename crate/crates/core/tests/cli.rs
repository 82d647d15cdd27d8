//! End-to-end runs of the `ncvariety` binary on the sample configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ncvariety::fock::TruncationGrid;
use ncvariety::ncalg::DomainSpec;
use ncvariety::operator::TripletMatrix;
use ncvariety::variety::{build_ideal_subspace, IdealSpec};
use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncvariety")).args(args).output().expect("binary runs")
}

fn run_config(cmd: &str, cfg: &str, extra: &[&str]) -> (i32, String) {
    let path = config(cfg);
    let mut args = vec![cmd, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ncvariety-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn zero_tuple_passes_with_full_defect_rank() {
    let (code, out) = run_config("check-domain", "zero_pair.json", &[]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["data"]["defectRank"], 2);
    assert_eq!(r["passed"], true);
    assert_eq!(r["tolerances"]["psdTol"], 1e-9);
}

#[test]
fn verify_all_is_byte_identical_across_runs_and_jobs() {
    let (a_code, a) = run_config("verify-all", "drury_arveson_verify.json", &["--jobs", "1"]);
    let (b_code, b) = run_config("verify-all", "drury_arveson_verify.json", &["--jobs", "3"]);
    assert_eq!((a_code, b_code), (0, 0));
    assert_eq!(a, b);
    let (_, timed) = run_config("verify-all", "drury_arveson_verify.json", &["--runtime"]);
    let r: Value = serde_json::from_str(&timed).unwrap();
    assert!(r["runtimeMs"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_and_grid_flags_change_the_config_hash() {
    let hash = |extra: &[&str]| {
        let (_, out) = run_config("build-model", "drury_arveson_verify.json", extra);
        serde_json::from_str::<Value>(&out).unwrap()["configHash"].as_str().unwrap().to_string()
    };
    let base = hash(&[]);
    assert_eq!(base.len(), 64);
    assert_eq!(base, hash(&["--grid", "3"]));
    assert_ne!(base, hash(&["--grid", "2"]));
    assert_ne!(base, hash(&["--seed", "9"]));
}

#[test]
fn identity_scalar_has_characteristic_function_and_boundary_dilation() {
    let (code, out) = run_config("char-fn", "scalar_identity.json", &[]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["data"]["charFn"]["exists"], true);
    assert_eq!(r["data"]["charFn"]["defectDimension"], 0);
    let (code, out) = run_config("dilate", "scalar_identity.json", &[]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["data"]["dilation"]["dilationIndex"], 0);
    assert_eq!(r["data"]["dilation"]["boundaryDimension"], 1);
}

#[test]
fn exit_codes() {
    assert_eq!(run_config("check-domain", "outside_ball.json", &[]).0, 1);
    assert_eq!(run_config("berezin", "zero_pair.json", &[]).0, 2);
    assert_eq!(run_config("build-model", "drury_arveson_verify.json", &["--grid", "40"]).0, 3);
    assert_eq!(run_config("berezin", "scalar_identity.json", &["--r", "1.5"]).0, 2);
    assert_eq!(run(&["wold"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));

    let dir = scratch("badjson");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\n  \"domain\": {\"preset\": \"ball\", \"n\": [2]},\n  \"grid\": [3],\n  \"tolerence\": {}\n}\n").unwrap();
    let out = run(&["build-model", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("tolerence") && err.contains("line 4"), "{err}");
}

#[test]
fn refusal_is_reported_not_failed() {
    let (code, out) = run_config("char-fn", "skew_noncommutative.json", &[]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["data"]["charFn"]["exists"], false);
    assert!(r["data"]["charFn"]["violation"]["minEigen"].as_f64().unwrap() < 0.0);
}

#[test]
fn bergman_search_and_points_and_coincidence() {
    let (code, out) = run_config("beurling", "bergman_beurling.json", &[]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert!(r["data"]["searchViolations"].as_u64().unwrap() >= 1);

    let (code, out) = run_config("kernel-eval", "bidisc_points.json", &["--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("name,value,tolerance,relation,passed\n"));
    assert!(out.contains("gram.psd"));

    let (code, out) = run_config("coincide", "nilpotent_pair_coincide.json", &[]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["data"]["coincidence"]["coincide"], true);
    assert_eq!(r["data"]["coincidence"]["unitarilyEquivalent"], true);
}

#[test]
fn exported_operators_reimport_exactly() {
    let spec = DomainSpec::drury_arveson(2);
    let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![3]), &IdealSpec::qc(&[2])).unwrap();
    for format in ["json", "csv"] {
        let dir = scratch(format);
        let (code, _) = run_config("build-model", "drury_arveson_verify.json", &["--out", dir.to_str().unwrap(), "--format", format]);
        assert_eq!(code, 0);
        assert!(dir.join(format!("report.{format}")).exists());
        let manifest: Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.as_array().unwrap().len(), model.w.dim());
        let read = |name: &str, rows: usize, cols: usize| {
            let path = dir.join(format!("{name}.{format}"));
            let t = match format {
                "json" => serde_json::from_slice::<TripletMatrix>(&std::fs::read(&path).unwrap()).unwrap(),
                _ => TripletMatrix::read_csv(std::fs::File::open(&path).unwrap(), rows, cols).unwrap(),
            };
            t.to_matrix().unwrap()
        };
        assert_eq!(read("basis_n", model.w.dim(), model.dim()), model.basis_n);
        assert_eq!(read("s_1_1", model.dim(), model.dim()), model.s[0][0]);
        assert_eq!(read("s_1_2", model.dim(), model.dim()), model.s[0][1]);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
