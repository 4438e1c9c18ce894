use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use mvcca::harness::{make_synthetic, run_protocol, Classifier, MethodSpec, ProtocolConfig, SyntheticSpec};
use mvcca::io;

fn mvcca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvcca")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mvcca(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> String {
    let out = dir.join("data");
    let mut args = vec!["synth", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args).trim().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_eval_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), &["--m", "3", "--d", "4", "--n", "120", "--seed", "3"]);
    let out = dir.path().join("eval");
    ok(&[
        "eval", "--method", "tcca", "--manifest", &manifest, "--sweep", "1:4", "--runs", "2", "--labeled", "20",
        "--seed", "8", "--out", s(&out),
    ]);
    let report = io::load_report(&out.join("report.json")).unwrap();

    let data = make_synthetic(&SyntheticSpec::new(vec![4; 3], 120, 0.1, 3)).unwrap();
    let mut cfg = ProtocolConfig::new(MethodSpec::Tcca, Classifier::Rls(Default::default()), 20);
    cfg.ranks = (1..=4).collect();
    cfg.runs = 2;
    cfg.seed = 8;
    let expected = run_protocol(&data.data, &data.labels, &cfg).unwrap();
    assert_eq!(report, expected);
    let tsv = std::fs::read_to_string(out.join("tcca_acc_vs_dim.tsv")).unwrap();
    assert!(tsv.starts_with("r\tmean\tstd\n"));
    assert_eq!(tsv.lines().count(), 5);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "ok");
    assert_eq!(meta["seed"], 8);
}

#[test]
fn fit_then_transform_writes_projections() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), &["--m", "3", "--d", "3", "--n", "40"]);
    for (method, extra, width) in [
        ("tcca", vec![], 6),
        ("maxvar", vec![], 6),
        ("cca", vec!["--views", "0,2"], 4),
        ("ktcca", vec!["--kernel", "l2"], 6),
    ] {
        let out = dir.path().join(method);
        let mut args = vec!["fit", "--method", method, "--manifest", &manifest, "--rank", "2", "--out", s(&out)];
        args.extend(extra);
        let printed = ok(&args);
        assert_eq!(printed.lines().count(), 2, "{method}");
        let model = out.join("model.txt");
        ok(&["transform", "--model", s(&model), "--manifest", &manifest, "--out", s(&out)]);
        let z = io::read_matrix(&out.join("projection.csv"), ',', "projection").unwrap();
        assert_eq!((z.nrows(), z.ncols()), (40, width), "{method}");
    }
}

#[test]
fn manifest_path_can_come_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), &["--n", "60"]);
    let out = dir.path().join("eval");
    let mut child = Command::new(env!("CARGO_BIN_EXE_mvcca"))
        .args(["eval", "--method", "bsf", "--manifest", "-", "--runs", "1", "--out", s(&out)])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    writeln!(child.stdin.take().unwrap(), "{manifest}").unwrap();
    let status = child.wait_with_output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("bsf_acc_vs_dim.tsv").exists());
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn exit_codes_follow_error_categories() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), &["--m", "3", "--d", "3", "--n", "30"]);
    let out = dir.path().join("out");
    let o = s(&out);

    assert_eq!(code(&mvcca(&["eval", "--method", "nope", "--manifest", &manifest, "--out", o])), 2);
    assert_eq!(code(&mvcca(&["fit", "--method", "bsf", "--manifest", &manifest, "--rank", "1", "--out", o])), 2);
    let no_validate = mvcca(&[
        "eval", "--method", "tcca", "--manifest", &manifest, "--eps", "0.1,1", "--no-validate", "--out", o,
    ]);
    assert_eq!(code(&no_validate), 2);

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&mvcca(&["fit", "--method", "tcca", "--manifest", s(&missing), "--rank", "1", "--out", o])), 3);
    let view = PathBuf::from(&manifest).with_file_name("view1.csv");
    let text = std::fs::read_to_string(&view).unwrap();
    std::fs::write(&view, text.replacen(',', ",nan,", 1)).unwrap();
    assert_eq!(code(&mvcca(&["fit", "--method", "tcca", "--manifest", &manifest, "--rank", "1", "--out", o])), 3);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "error");
}

#[test]
fn oversized_kernel_tensor_exits_with_capacity_code() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), &["--m", "3", "--d", "2", "--n", "20"]);
    let out = dir.path().join("out");
    let r = mvcca(&[
        "fit", "--method", "ktcca", "--manifest", &manifest, "--rank", "1", "--memory-cap", "7999", "--out", s(&out),
    ]);
    assert_eq!(code(&r), 4);
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("8000") && err.contains("7999"), "{err}");

    let env = Command::new(env!("CARGO_BIN_EXE_mvcca"))
        .args(["fit", "--method", "ktcca", "--manifest", &manifest, "--rank", "1", "--out", s(&out)])
        .env("MVCCA_MEMORY_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(code(&env), 4);
    let flag_wins = Command::new(env!("CARGO_BIN_EXE_mvcca"))
        .args(["fit", "--method", "ktcca", "--manifest", &manifest, "--rank", "1", "--memory-cap", "8000"])
        .args(["--out", s(&out)])
        .env("MVCCA_MEMORY_CAP", "100")
        .output()
        .unwrap();
    assert!(flag_wins.status.success(), "{}", String::from_utf8_lossy(&flag_wins.stderr));
}

#[test]
fn repeated_eval_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), &["--n", "90", "--kind", "triple"]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "eval", "--method", "cca", "--combine", "average", "--classifier", "knn", "--k", "1:5:2", "--manifest",
            &manifest, "--runs", "2", "--seed", "5", "--out", s(&out),
        ]);
        (
            std::fs::read(out.join("report.json")).unwrap(),
            std::fs::read(out.join("cca-avg_acc_vs_dim.tsv")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}
