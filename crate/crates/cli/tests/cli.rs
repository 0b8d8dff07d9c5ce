use std::path::Path;

use vprofile_cli::run;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn vp(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("vprofile").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

#[test]
fn kernel_row_has_five_eighths() {
    let r = vp(&["kernel", "--from", "1,0", "--smax", "10"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("r,s,exact,float\n"));
    assert!(r.out.lines().any(|l| l == "0,0,5/8,0.625"), "{}", r.out);
    let total: f64 = r.out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!(total > 0.99 && total <= 1.0 + 1e-12);
}

#[test]
fn counting_lemma_suite_passes() {
    let r = vp(&["verify", "--suite", "counting-lemma", "--max-pq", "7"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("counting-lemma,pass,1275,0,"), "{}", r.out);
    assert!(r.err.starts_with("manifest: {"));
}

#[test]
fn usage_errors_exit_two() {
    let r = vp(&["kernel", "--from", "1,0", "--bogus"]);
    assert_eq!(r.code, 2);
    assert!(r.err.starts_with("error[usage]:"), "{}", r.err);
    assert_eq!(vp(&["frobnicate"]).code, 2);
    // models are never implicit
    let r = vp(&["sample", "--count", "2"]);
    assert_eq!(r.code, 2);
    assert!(r.err.starts_with("error[config]:"));
    assert_eq!(vp(&["sample", "--model", "geom-pm1"]).code, 2);
    assert_eq!(vp(&["sample", "--model", "builtin:nope"]).code, 2);
    let r = vp(&["decompose", "--tree", "0(+(", "--level", "1"]);
    assert_eq!(r.code, 2);
    assert!(r.err.starts_with("error[parse]:"), "{}", r.err);
}

#[test]
fn cap_exceeded_exits_one() {
    let r = vp(&["sample", "--model", "builtin:geom-pm1", "--count", "50", "--vertex-cap", "2"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("error[resource]:"), "{}", r.err);
}

#[test]
fn output_independent_of_workers() {
    let base = ["sample", "--model", "builtin:geom-pm01", "--count", "40", "--seed", "9", "--vertex-cap", "100000"];
    let one = vp(&[&base[..], &["--workers", "1"]].concat());
    let four = vp(&[&base[..], &["--workers", "4"]].concat());
    assert_eq!(one.code, 0);
    assert_eq!(one.out, four.out);
    assert_eq!(one.out.lines().count(), 40);
}

fn rerun_from_manifest(manifest: &Path) -> Vec<String> {
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    json["argv"].as_array().unwrap().iter().map(|a| a.as_str().unwrap().to_string()).collect()
}

#[test]
fn manifest_regenerates_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trees.csv");
    let out_s = out.to_str().unwrap();
    let r = vp(&["sample", "--model", "builtin:incomplete-binary", "--kind", "excursion", "--sign", "minus", "--count", "30", "--seed", "4", "--format", "summary", "--out", out_s]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.is_empty());
    let first = std::fs::read(&out).unwrap();
    let manifest = dir.path().join("trees.csv.manifest.json");
    let argv = rerun_from_manifest(&manifest);
    std::fs::remove_file(&out).unwrap();
    let argv_ref: Vec<&str> = argv.iter().map(String::as_str).collect();
    assert_eq!(vp(&argv_ref).code, 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(json["model"], "builtin:incomplete-binary");
    assert_eq!(json["seed"], 4);
    assert_eq!(json["subcommand"], "sample");
}

#[test]
fn model_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ib.json");
    std::fs::write(&path, vprofile::builtin_model("incomplete-binary").unwrap().to_json().unwrap()).unwrap();
    let spec = format!("file:{}", path.display());
    let a = vp(&["genfun", "--model", &spec, "--order", "3"]);
    let b = vp(&["genfun", "--model", "builtin:incomplete-binary", "--order", "3"]);
    assert_eq!(a.code, 0, "{}", a.err);
    assert_eq!(a.out, b.out);
    assert!(a.out.contains("0,2/5"));
}

#[test]
fn maps_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("q.csv");
    let tree = "0(+(+()0(-()))-(+()0()))";
    let r = vp(&["maps", "convert", "--tree", tree, "--orientation", "false", "--out", map.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.err);
    let back = vp(&["maps", "to-tree", "--input", map.to_str().unwrap()]);
    assert_eq!(back.out, format!("tree,orientation\n{tree},false\n"));
    let prof = vp(&["maps", "profile", "--input", map.to_str().unwrap()]);
    assert!(prof.out.starts_with("k,perimeter,components,d_star\n"));
    for line in prof.out.lines().skip(1) {
        let p: u64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(p % 2, 0);
    }
}

#[test]
fn decompose_prints_forest() {
    let r = vp(&["decompose", "--tree", "0(+(+()0(-()))-(+()0()))", "--level", "1"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("root_component,0(+()-(+()0()))\n"));
    assert!(r.out.contains("forest_shape,(())\n"));
    assert!(r.out.contains("1,0,1,-,3,-1()\n"));
}

#[test]
fn conditioned_kernel_row_sums_to_one() {
    let r = vp(&["kernel", "--from", "1,1,0", "--total", "4"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let total: f64 = r.out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12, "{}", r.out);
}

#[test]
fn verify_suites_small() {
    for args in [
        vec!["verify", "--suite", "marked-forests", "--p-max", "2", "--s-max", "2"],
        vec!["verify", "--suite", "cycle-lemma", "--p-max", "2", "--s-max", "3"],
        vec!["verify", "--suite", "markov", "--max-total", "4"],
        vec!["verify", "--suite", "decompose", "--model", "builtin:geom-pm1", "--max-edges", "3", "--samples", "20"],
        vec!["verify", "--suite", "schaeffer", "--max-edges", "3", "--samples", "20", "--vertex-cap", "10000"],
        vec!["verify", "--suite", "profile-count", "--max-edges", "4"],
    ] {
        let r = vp(&args);
        assert_eq!(r.code, 0, "{args:?}: {} {}", r.out, r.err);
        assert!(r.out.lines().nth(1).unwrap().contains(",pass,"), "{args:?}: {}", r.out);
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_vprofile");
    let st = std::process::Command::new(bin).args(["kernel", "--bogus"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).starts_with("error[usage]:"));
    let ok = std::process::Command::new(bin).args(["kernel", "--from", "1,0", "--smax", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("0,0,5/8,0.625"));
}

#[test]
fn stats_tests_report_csv() {
    let r = vp(&["stats", "--model", "builtin:geom-pm1", "--test", "excursions", "--pq", "1,1", "--count", "2000", "--seed", "3"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("test,statistic,dof,p_value,skipped\n\"level 1 (p,q)=(1,1) on "), "{}", r.out);
    let r = vp(&["stats", "--model", "builtin:geom-pm01", "--test", "balls", "--count", "500", "--min-visits", "50", "--vertex-cap", "20000"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.lines().count() >= 2, "{}", r.out);
    let r = vp(&["stats", "--model", "builtin:geom-pm1", "--test", "balls", "--count", "10"]);
    assert_eq!(r.code, 2);
    let r = vp(&["stats", "--model", "builtin:geom-pm1", "--test", "excursions", "--pq", "1"]);
    assert_eq!(r.code, 2);
    assert!(r.err.starts_with("error[config]"), "{}", r.err);
}
