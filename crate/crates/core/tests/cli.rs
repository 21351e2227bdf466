use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn synrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synrec")).args(args).current_dir(root()).env_remove("SYNREC_LIB").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_writes_solution_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (out, stats) = (dir.path().join("out.synrec"), dir.path().join("stats.json"));
    let o = synrec(&["synth", "corpus/lIns.synrec", "-o", path(&out), "--stats", path(&stats)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    let keys: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
    let golden: Vec<String> = serde_json::from_str(
        &std::fs::read_to_string(root().join("crates/core/tests/golden/stats_keys.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(keys, golden);
    assert!(doc["iterations"].as_u64().unwrap() >= 1);

    // Emitted solutions re-check clean.
    let o = synrec(&["check", path(&out)]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn decomposition_reduces_evaluations() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = ["synth", "corpus/scaling/langLarge4.synrec", "-o", "/dev/null", "--stats"];
    assert_eq!(code(&synrec(&[&args[..], &[path(&a)]].concat())), 0);
    assert_eq!(code(&synrec(&[&args[..], &[path(&b), "--no-indecomp"]].concat())), 0);
    let evals = |p: &Path| -> u64 {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["candidate_evaluations"].as_u64().unwrap()
    };
    assert!(evals(&a) < evals(&b), "{} vs {}", evals(&a), evals(&b));
}

#[test]
fn synth_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.synrec");
    let stats = dir.path().join("stats.json");

    let o = synrec(&["synth", "no/such/file.synrec", "-o", path(&out), "--stats", path(&stats)]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists() && !stats.exists(), "partial outputs written");

    let bad = dir.path().join("bad.synrec");
    std::fs::write(&bad, "int f(int x) {\n  return y;\n}\n").unwrap();
    let o = synrec(&["synth", path(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.synrec:2:"), "{}", stderr(&o));

    let unsat = dir.path().join("unsat.synrec");
    std::fs::write(&unsat, "int f(int x) { return ??; } harness void h(int x) { assert(1 == 2); }").unwrap();
    let o = synrec(&["synth", path(&unsat), "-o", path(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());

    // A space too large to exhaust in a second.
    let o = synrec(&["synth", "corpus/lang.synrec", "--no-indecomp", "--timeout-secs", "1"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    for flags in [&["--int-domain", "2..1"][..], &["--input-depth", "0"], &["--timeout-secs", "0"], &["--bogus"]] {
        let o = synrec(&[&["synth", "corpus/lIns.synrec"][..], flags].concat());
        assert_eq!(code(&o), 1, "{flags:?}");
    }
}

#[test]
fn check_exit_codes() {
    let o = synrec(&["check", "corpus/lang.expected.synrec", "corpus/lang.synrec", "--input-depth", "2"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let mutant = dir.path().join("mutant.synrec");
    let text = std::fs::read_to_string(root().join("corpus/lang.expected.synrec")).unwrap();
    let changed = text.replace("case TrueS: return new BoolD(v = true);", "case TrueS: return new BoolD(v = false);");
    assert_ne!(text, changed);
    std::fs::write(&mutant, changed).unwrap();
    let o = synrec(&["check", path(&mutant), "corpus/lang.synrec", "--input-depth", "2"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stdout(&o).trim(), "counterexample: TrueS");

    let lone = dir.path().join("lone.synrec");
    std::fs::write(&lone, "adt u { U { } } int f(u x) { return 1; }").unwrap();
    assert_eq!(code(&synrec(&["check", path(&lone)])), 1);

    let o = synrec(&["check", "corpus/lang.synrec", "--input-depth", "2"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("synthesis constructs"));
}

#[test]
fn expand_dumps_annotated_program() {
    let o = synrec(&["expand", "corpus/lang.synrec"]);
    assert_eq!(code(&o), 0);
    let dump = stdout(&o);
    assert!(dump.contains("choose#0(") && dump.contains("??#1"));
    assert!(dump.matches("case ").count() >= 5);
    assert!(stderr(&o).contains("control points: 80"), "{}", stderr(&o));

    // Without synthesis constructs the dump is the pretty-printed program.
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.synrec");
    let text = "adt u {\n  U { }\n}\n\nint f(u x) {\n  return 1;\n}\n";
    std::fs::write(&plain, text).unwrap();
    let lib = dir.path().join("empty.synrec");
    std::fs::write(&lib, "").unwrap();
    let o = synrec(&["expand", path(&plain), "--lib", path(&lib)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), text);
    assert!(stderr(&o).contains("control points: 0"));

    let nested = dir.path().join("nested.synrec");
    std::fs::write(&nested, "adt t { L { } N { t a; } }\nt f(t s) { return field(field(s)); }\n").unwrap();
    let o = synrec(&["expand", path(&nested)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("expansion error"), "{}", stderr(&o));
}

#[test]
fn library_override_and_environment_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("lib.synrec");
    std::fs::write(&lib, "").unwrap();
    // The running example needs the bundled templates.
    assert_eq!(code(&synrec(&["expand", "corpus/lang.synrec", "--lib", path(&lib)])), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_synrec"))
        .args(["expand", "corpus/lang.synrec"])
        .current_dir(root())
        .env("SYNREC_LIB", &lib)
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn bench_reports_every_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let o = synrec(&["bench", path(dir.path())]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);

    for f in ["lIns.synrec", "tIns.synrec", "lang.expected.synrec"] {
        std::fs::copy(root().join("corpus").join(f), dir.path().join(f)).unwrap();
    }
    std::fs::write(dir.path().join("broken.synrec"), "int f(").unwrap();
    let o = synrec(&["bench", path(dir.path())]);
    assert_eq!(code(&o), 0);
    let rows: Vec<Vec<String>> =
        stdout(&o).lines().skip(1).map(|l| l.split('\t').map(String::from).collect()).collect();
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["broken", "lIns", "tIns"]);
    assert_eq!(rows[0][1], "error");
    assert!(rows[1..].iter().all(|r| r[1] == "yes" && r[4] == "yes" && r.len() == 8));
}
