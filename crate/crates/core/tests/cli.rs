use std::path::Path;
use std::process::{Command, Output};

use flaglp::grid::SampledFunction;
use serde_json::Value;

fn flaglp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flaglp"))
        .args(args)
        .current_dir(dir)
        .env_remove("FLAGLP_JOBS")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

fn read_fn(path: &Path) -> SampledFunction {
    SampledFunction::from_block_bytes(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn corpus_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for sub in ["a", "b"] {
        std::fs::create_dir(d.join(sub)).unwrap();
        let o = flaglp(
            &["gen-corpus", "--count", "10", "--seed", "7", "--L", "6", "-o", "out"],
            &d.join(sub),
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest = report(&d.join("a/out/corpus"), "manifest.json");
    assert_eq!(manifest["items"].as_array().unwrap().len(), 10);
    assert!(manifest["rng"].as_str().unwrap().starts_with("ChaCha20"));
    for i in 0..10 {
        let f = format!("out/corpus/item_{i:03}.bin");
        assert_eq!(
            std::fs::read(d.join("a").join(&f)).unwrap(),
            std::fs::read(d.join("b").join(&f)).unwrap()
        );
    }
    assert_eq!(
        std::fs::read(d.join("a/out/gen-corpus.json")).unwrap(),
        std::fs::read(d.join("b/out/gen-corpus.json")).unwrap()
    );
    let o = flaglp(&["gen-corpus", "--count", "0", "--L", "5", "-o", "empty"], d);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&d.join("empty/corpus"), "manifest.json")["count"], 0);
}

#[test]
fn verify_plancherel_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let o = flaglp(&["verify", "--suite", "plancherel", "--L", "7", "-o", "v"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(&tmp.path().join("v"), "verify.json");
    assert_eq!(r["result"]["suite"], "plancherel");
    assert!(r["result"]["maxResidual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(r["config"]["level"], 7);
    assert!(r["version"].is_string());
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = flaglp(&["analyze", "missing.bin", "-o", "out"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.join("out").exists());
    assert_eq!(flaglp(&["frobnicate"], d).status.code(), Some(2));
    assert_eq!(flaglp(&["maximal", "x.bin"], d).status.code(), Some(2));
    assert_eq!(flaglp(&["verify", "--suite", "nope"], d).status.code(), Some(2));
    let o = flaglp(&["--help"], d);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("cz-decompose"));
}

#[test]
fn commands_on_one_input() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(
        flaglp(&["gen-corpus", "--count", "2", "--L", "6", "-o", "c"], d)
            .status
            .code(),
        Some(0)
    );
    let input = "c/corpus/item_000.bin";
    let before = std::fs::read(d.join(input)).unwrap();
    let f = read_fn(&d.join(input));

    let o = flaglp(
        &[
            "cz-decompose",
            input,
            "--alpha",
            "0.5",
            "--p",
            "1",
            "--p1",
            "2",
            "--p2",
            "0.5",
            "-o",
            "cz",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let g = read_fn(&d.join("cz/g.bin"));
    let b = read_fn(&d.join("cz/b.bin"));
    assert!(g.add(&b).unwrap().sub(&f).unwrap().l2_norm() <= 1e-9 * f.l2_norm());
    let r = report(&d.join("cz"), "cz-decompose.json");
    assert_eq!(r["result"]["supportViolations"], 0);

    for (args, out) in [
        (vec!["analyze", input, "-o", "an"], "an/analyze.json"),
        (vec!["squarefunc", input, "--pp", "-o", "sq"], "sq/squarefunc.json"),
        (vec!["hardy-norm", input, "--p", "0.8", "-o", "h"], "h/hardy-norm.json"),
        (
            vec!["cmo-norm", input, "--auto-budget", "8", "-o", "cmo"],
            "cmo/cmo-norm.json",
        ),
        (vec!["maximal", input, "--hl", "-o", "mx"], "mx/maximal.json"),
        (
            vec!["kernel", "convolve", "k2-cancellative", input, "--eps", "2", "-o", "kc"],
            "kc/kernel-convolve.json",
        ),
    ] {
        let o = flaglp(&args, d);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(d.join(out).exists(), "{out}");
    }
    let o = flaglp(&["synthesize", "an/coeffs", "-o", "syn"], d);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_fn(&d.join("syn/synthesized.bin")).grid(), f.grid());
    let o = flaglp(
        &["cmo-norm", input, "--candidates", "cmo/candidates.json", "-o", "cmo2"],
        d,
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        report(&d.join("cmo"), "cmo-norm.json")["result"]["value"],
        report(&d.join("cmo2"), "cmo-norm.json")["result"]["value"]
    );
    let pp = &report(&d.join("sq"), "squarefunc.json")["result"]["ppreport"];
    assert!(pp["ratio"].as_f64().unwrap() > 0.0);
    assert_eq!(std::fs::read(d.join(input)).unwrap(), before);
}

#[test]
fn reports_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    flaglp(&["gen-corpus", "--count", "1", "--L", "6", "-o", "c"], d);
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = flaglp(&["hardy-norm", "c/corpus/item_000.bin", "--p", "0.6", "-o", "r"], d);
        assert_eq!(o.status.code(), Some(0));
        runs.push((std::fs::read(d.join("r/hardy-norm.json")).unwrap(), o.stdout));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn kernel_verdicts_set_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(
        flaglp(&["kernel", "validate", "k2-flag", "-o", "k"], d).status.code(),
        Some(0)
    );
    assert_eq!(
        flaglp(&["kernel", "validate", "k1-product", "-o", "k"], d)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        flaglp(&["kernel", "validate", "k1-product", "--product", "-o", "k"], d)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        flaglp(&["kernel", "validate", "1/(x*(x+i*y))", "-o", "k"], d)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        flaglp(&["kernel", "validate", "1/(x*", "-o", "k"], d).status.code(),
        Some(2)
    );
    let o = flaglp(
        &["kernel", "project", "lifted-product", "--points", "1,1", "-o", "p"],
        d,
    );
    assert_eq!(o.status.code(), Some(0));
    let v = &report(&d.join("p"), "kernel-project.json")["result"]["values"][0];
    // pi i / (1 + i)^2 = pi / 2
    assert!((v["re"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
}

#[test]
fn config_file_and_jobs_env() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("exp.cfg"),
        "# small run\nL = 5\nmode = compact\nN = 1\ncount = 3\nseed = 11\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_flaglp"))
        .args(["gen-corpus", "--config", "exp.cfg", "--N", "2", "-o", "cfg"])
        .current_dir(d)
        .env("FLAGLP_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&d.join("cfg"), "gen-corpus.json");
    assert_eq!(r["config"]["level"], 5);
    assert_eq!(r["config"]["offset"], 2);
    assert_eq!(r["config"]["mode"], "compact-spatial");
    assert_eq!(r["result"]["count"], 3);
    std::fs::write(d.join("bad.cfg"), "L = nine\n").unwrap();
    assert_eq!(flaglp(&["gen-corpus", "--config", "bad.cfg"], d).status.code(), Some(2));
}
