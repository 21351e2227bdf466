//! End-to-end acceptance checks. Runs sequentially so the timing criteria
//! are not disturbed by concurrent tests, and prints one line per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::rc::Rc;
use std::time::{Duration, Instant};

use synrec_core::cegis::{
    prepare, synthesize, synthesize_inductive, verify, Inductive, InputSpace, Prepared, Status, SynthesisConfig,
    SynthesisResult, Verification,
};
use synrec_core::evaluator::{Compiled, ControlAssignment, EvalStats, Layout, Scratch, Value};
use synrec_core::expander::{expand_field_list, expand_flex_match, expand_program, expand_unknown_constructor};
use synrec_core::expander::{ExpandedProgram, ExpansionContext};
use synrec_core::indecomp::{classify_transformer, count_self_calls, Verdict};
use synrec_core::surface::{parse_with_library, print_expr_annotated, Expr, ExprKind, Program, Span, Type, PRELUDE};
use synrec_core::typesys::{check_program, TypeEnv};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus_text(name: &str) -> String {
    std::fs::read_to_string(root().join("corpus").join(name)).unwrap()
}

fn load(name: &str) -> Program {
    parse_with_library(&corpus_text(name), PRELUDE).unwrap().0
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn synrec(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_synrec")).args(args).current_dir(root()).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// The reference desugaring with its self-calls renamed.
fn reference_as(name: &str) -> String {
    corpus_text("lang.expected.synrec").replace("desugar", name)
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.synrec");
    let stats = dir.path().join("stats.json");
    let t = Instant::now();
    let (code, _, err) =
        synrec(&["synth", "corpus/lang.synrec", "-o", out.to_str().unwrap(), "--stats", stats.to_str().unwrap()]);
    let synth_time = t.elapsed();
    ensure(code == 0, || format!("synth exited {code}: {err}"))?;
    ensure(synth_time <= Duration::from_secs(120), || format!("synth took {synth_time:?}"))?;

    // One bounded check covers both the original specification and
    // equivalence with the reference: on every input up to depth 3 the
    // solution's output means what the source means and what the
    // reference's output means.
    let solution = std::fs::read_to_string(&out).unwrap();
    let harness = "harness void main(srcAST exp) {\n  assert(srcInterpret(exp) == dstInterpret(desugar(exp)));\n}";
    ensure(solution.contains(harness), || "solution lacks the original harness".into())?;
    let both = solution.replace(
        harness,
        &format!(
            "{}\nharness void main(srcAST exp) {{\n  val d = dstInterpret(desugar(exp));\n  \
             assert(srcInterpret(exp) == d);\n  assert(d == dstInterpret(reference(exp)));\n}}",
            reference_as("reference")
        ),
    );
    let combined = dir.path().join("combined.synrec");
    std::fs::write(&combined, both).unwrap();
    let (code, stdout, err) = synrec(&["check", combined.to_str().unwrap(), "--input-depth", "3"]);
    ensure(code == 0, || format!("check exited {code}: {stdout}{err}"))?;
    Ok(format!("synth {:.2} s, verified and equivalent at depth 3", synth_time.as_secs_f64()))
}

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display())).trim_end().to_string()
}

fn criterion_2() -> Outcome {
    let p = load("lang.synrec");
    let d = Span::DUMMY;
    let rec = |v: &str| Type::Record(Rc::new(p.record_type(v).unwrap()));
    let fields = Expr::new(ExprKind::FieldList(Expr::var("src", d).boxed()), d);
    let src_arr = Type::array(Type::adt("srcAST"));
    let mut checked = 0;
    let mut expect = |got: String, file: &str| -> Result<(), String> {
        checked += 1;
        let want = golden(file);
        ensure(got == want, || format!("{file}: got\n{got}\nwant\n{want}"))
    };

    let env = TypeEnv::new().bind("src", rec("NumS"));
    let x = expand_field_list(&p, &env, &fields, &src_arr).map_err(|e| e.to_string())?;
    expect(print_expr_annotated(&x), "fl_nums.txt")?;

    let env = TypeEnv::new().bind("src", rec("BetweenS"));
    let x = expand_field_list(&p, &env, &fields, &src_arr).map_err(|e| e.to_string())?;
    expect(print_expr_annotated(&x), "fl_betweens.txt")?;

    let env = TypeEnv::new().bind("src", Type::adt("srcAST"));
    let sw = Expr::new(ExprKind::SwitchAny { scrutinee: "src".into(), body: fields.clone().boxed() }, d);
    let (x, cs) = expand_flex_match(&p, &env, &sw, &src_arr).map_err(|e| e.to_string())?;
    ensure(cs.is_empty(), || "field lists introduce no control points".into())?;
    let ExprKind::Switch { arms, .. } = &x.kind else { return Err("FPM did not yield a switch".into()) };
    ensure(arms.len() == 5, || format!("{} arms", arms.len()))?;
    expect(print_expr_annotated(&x), "fpm_srcast.txt")?;

    let env = TypeEnv::new().bind("src", rec("NumS"));
    let rcons = Expr::new(ExprKind::Call { func: "rcons".into(), args: vec![Expr::var("src", d)] }, d);
    let uc = Expr::new(ExprKind::NewAny(vec![rcons]), d);
    let ctx = ExpansionContext::default();
    let (x, _) = expand_unknown_constructor(&p, &env, &uc, &Type::adt("opcode"), &ctx).map_err(|e| e.to_string())?;
    expect(print_expr_annotated(&x), "uc1_opcode.txt")?;
    let (x, _) = expand_unknown_constructor(&p, &env, &uc, &Type::Int, &ctx).map_err(|e| e.to_string())?;
    expect(print_expr_annotated(&x), "uc2_int.txt")?;
    Ok(format!("{checked} golden expansions match"))
}

/// Every `.synrec` under `corpus/`, expected solutions excepted.
fn corpus_programs() -> Vec<PathBuf> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else if p.to_str().unwrap().ends_with(".synrec") && !p.to_str().unwrap().ends_with(".expected.synrec") {
                out.push(p);
            }
        }
    }
    let mut out = Vec::new();
    walk(&root().join("corpus"), &mut out);
    out.sort();
    out
}

fn criterion_3() -> Outcome {
    let files = corpus_programs();
    for f in &files {
        let p = parse_with_library(&std::fs::read_to_string(f).unwrap(), PRELUDE).map_err(|e| e.to_string())?.0;
        let ep = expand_program(&p, &ExpansionContext::default()).map_err(|e| format!("{}: {e}", f.display()))?;
        check_program(&ep.program).map_err(|e| format!("{}: {e}", f.display()))?;
    }
    Ok(format!("{} corpus programs expand to well-typed code", files.len()))
}

fn all_assignments(ep: &ExpandedProgram) -> Vec<ControlAssignment> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for c in &ep.control {
        out = out
            .into_iter()
            .flat_map(|p| {
                (c.kind.first()..=c.kind.last()).map(move |v| {
                    let mut p = p.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(ControlAssignment).collect()
}

fn harness_inputs(ep: &ExpandedProgram, depth: u32) -> Vec<Vec<Value>> {
    let layout = Layout::new(&ep.program);
    let h = ep.program.harnesses().next().unwrap();
    let types: Vec<Type> = h.params.iter().map(|p| p.ty.clone()).collect();
    let space = InputSpace::new(&ep.program, &layout, &types, depth, (0, 2)).unwrap();
    let mut out = Vec::new();
    space.for_each(None, |x| {
        out.push(x.to_vec());
        true
    });
    out
}

/// Indices of the assignments passing every input, by direct evaluation.
fn passing_set(ep: &ExpandedProgram, prep: &Prepared, decomposed: bool, inputs: &[Vec<Value>]) -> BTreeSet<usize> {
    let shape = if decomposed { prep.shape.as_ref() } else { None };
    let prog = if decomposed { &prep.searched } else { &prep.expanded };
    let code = Compiled::new(prog, shape).unwrap();
    let h = code.function(&ep.program.harnesses().next().unwrap().name).unwrap();
    let limits = SynthesisConfig::default().eval_limits();
    let mut scratch = Scratch::default();
    let mut stats = EvalStats::default();
    all_assignments(ep)
        .into_iter()
        .enumerate()
        .filter(|(_, phi)| {
            inputs.iter().all(|x| scratch.run(&code, h, x, &mut phi.clone(), &limits, &mut stats).is_pass())
        })
        .map(|(i, _)| i)
        .collect()
}

fn criterion_4() -> Outcome {
    let mut report = Vec::new();
    for name in ["toys/boolIf.synrec", "toys/envLower.synrec"] {
        let t = Instant::now();
        let prep = prepare(&load(name), &SynthesisConfig::default()).map_err(|e| e.to_string())?;
        ensure(prep.decomposed, || format!("{name}: decomposition not applied"))?;
        let ep = &prep.expanded;
        ensure(ep.space_size() <= 100_000, || format!("{name}: {} assignments", ep.space_size()))?;
        let inputs = harness_inputs(ep, 3);
        let plain = passing_set(ep, &prep, false, &inputs);
        let decomposed = passing_set(ep, &prep, true, &inputs);
        ensure(plain == decomposed, || format!("{name}: {} vs {} passing assignments", plain.len(), decomposed.len()))?;
        ensure(!plain.is_empty(), || format!("{name}: no assignment passes"))?;
        let elapsed = t.elapsed();
        ensure(elapsed <= Duration::from_secs(60), || format!("{name}: {elapsed:?}"))?;
        report.push(format!(
            "{name}: {} of {} pass both ways ({:.1} s)",
            plain.len(),
            ep.space_size(),
            elapsed.as_secs_f64()
        ));
    }
    Ok(report.join("; "))
}

fn criterion_5() -> Outcome {
    let prep = prepare(&load("lang.synrec"), &SynthesisConfig::default()).map_err(|e| e.to_string())?;
    ensure(prep.decomposed, || "decomposition not applied".into())?;
    let before = prep.expanded.program.function("desugar").unwrap();
    let after = prep.searched.program.function("desugar").unwrap();
    let verdict = classify_transformer(&prep.expanded.program, before, "srcAST").verdict;
    ensure(verdict == Verdict::RecursiveMorphism, || format!("classified as {verdict:?}"))?;
    let (n_before, n_after) = (count_self_calls(before), count_self_calls(after));
    ensure(n_before > 0 && n_after == 0, || format!("self-calls {n_before} before, {n_after} after"))?;
    Ok(format!("self-calls {n_before} before decomposition, 0 after"))
}

fn run(prog: &Program, indecomp: bool) -> (SynthesisResult, bool, Duration) {
    let cfg = SynthesisConfig { indecomp, ..Default::default() };
    let t = Instant::now();
    let (prep, r) = synthesize(prog, &cfg).unwrap();
    (r, prep.decomposed, t.elapsed())
}

const CORPUS: [&str; 4] = ["elimBool", "lIns", "lang", "tIns"];

fn criterion_6() -> Outcome {
    let mut report = Vec::new();
    for name in CORPUS {
        let prog = load(&format!("{name}.synrec"));
        let (with, decomposed, t_with) = run(&prog, true);
        if !decomposed {
            report.push(format!("{name}: shape not decomposed"));
            continue;
        }
        let (without, _, t_without) = run(&prog, false);
        let (a, b) = (with.stats.candidate_evaluations, without.stats.candidate_evaluations);
        ensure(a <= b, || format!("{name}: {a} evaluations with decomposition, {b} without"))?;
        let factor = t_without.as_secs_f64() / t_with.as_secs_f64();
        if name == "lang" {
            ensure(factor >= 2.0, || format!("lang speedup only {factor:.2}"))?;
        }
        report.push(format!("{name}: evaluations {a} vs {b}, time factor {factor:.1}"));
    }
    Ok(report.join("; "))
}

fn best_of_3(prog: &Program, indecomp: bool) -> Duration {
    (0..3)
        .map(|_| run(prog, indecomp))
        .map(|(r, _, t)| {
            assert!(matches!(r.status, Status::Solved { .. }), "unsolved: {:?}", r.status);
            t
        })
        .min()
        .unwrap()
}

fn criterion_7() -> Outcome {
    let mut rows = Vec::new();
    for k in 3..=8 {
        let prog = load(&format!("scaling/langLarge{k}.synrec"));
        let with = best_of_3(&prog, true);
        let without = best_of_3(&prog, false);
        rows.push((k, with, without, without.as_secs_f64() / with.as_secs_f64()));
    }
    let table: Vec<String> =
        rows.iter().map(|(k, a, b, r)| format!("k={k} {:.1}/{:.1} ms x{r:.1}", ms(*a), ms(*b))).collect();
    for w in rows.windows(2) {
        ensure(w[1].2 > w[0].2, || format!("time without decomposition not growing: {}", table.join(", ")))?;
        ensure(w[1].3 > w[0].3, || format!("speedup not growing: {}", table.join(", ")))?;
    }
    Ok(table.join(", "))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn criterion_8() -> Outcome {
    // Progress and soundness over the corpus.
    let mut runs = 0;
    for name in ["elimBool", "lIns", "tIns", "lang", "scaling/langLarge4", "toys/boolIf", "toys/envLower"] {
        for indecomp in [true, false] {
            if name == "lang" && !indecomp {
                continue;
            }
            let cfg = SynthesisConfig { indecomp, ..Default::default() };
            let (prep, r) = synthesize(&load(&format!("{name}.synrec")), &cfg).map_err(|e| e.to_string())?;
            let shape = if prep.decomposed { prep.shape.as_ref() } else { None };
            let code = Compiled::new(&prep.searched, shape).unwrap();
            let h = code.function(&prep.searched.program.harnesses().next().unwrap().name).unwrap();
            let limits = cfg.eval_limits();
            let mut seen: Vec<&Vec<Value>> = Vec::new();
            for it in &r.trace {
                if let Some(x) = &it.counterexample {
                    let o = Scratch::default().run(
                        &code,
                        h,
                        x,
                        &mut it.candidate.clone(),
                        &limits,
                        &mut EvalStats::default(),
                    );
                    ensure(!o.is_pass(), || format!("{name}: counterexample passes its candidate"))?;
                    ensure(!seen.contains(&x), || format!("{name}: repeated counterexample"))?;
                    seen.push(x);
                }
            }
            let Status::Solved { program, .. } = &r.status else { return Err(format!("{name}: {:?}", r.status)) };
            let emitted = expand_program(program, &ExpansionContext::default()).map_err(|e| e.to_string())?;
            let depth = if name == "lang" { 2 } else { 3 };
            let v = verify(&emitted, &ControlAssignment(vec![]), &SynthesisConfig { input_depth: depth, ..cfg }, None)
                .map_err(|e| e.to_string())?;
            ensure(v == Verification::Pass, || format!("{name}: solution fails full verification: {v:?}"))?;
            runs += 1;
        }
    }

    // Inductive-step completeness against brute force on the toy.
    let prep = prepare(&load("toys/boolIf.synrec"), &SynthesisConfig::default()).map_err(|e| e.to_string())?;
    let ep = &prep.expanded;
    let inputs = harness_inputs(ep, 2);
    let all = all_assignments(ep);
    let code = Compiled::new(ep, None).unwrap();
    let h = code.function("main").unwrap();
    let limits = SynthesisConfig::default().eval_limits();
    let mut scratch = Scratch::default();
    let mut stats = EvalStats::default();
    // pass[i][j]: assignment i passes input j.
    let pass: Vec<Vec<bool>> = all
        .iter()
        .map(|phi| {
            inputs.iter().map(|x| scratch.run(&code, h, x, &mut phi.clone(), &limits, &mut stats).is_pass()).collect()
        })
        .collect();
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut subsets = 0;
    for size in 1..=6 {
        for _ in 0..8 {
            let picks: Vec<usize> = (0..size)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state % inputs.len() as u64) as usize
                })
                .collect();
            let cexs: Vec<Vec<Value>> = picks.iter().map(|&j| inputs[j].clone()).collect();
            let sols: Vec<usize> = (0..all.len()).filter(|&i| picks.iter().all(|&j| pass[i][j])).collect();
            match synthesize_inductive(ep, &cexs, &SynthesisConfig::default(), None).map_err(|e| e.to_string())? {
                Inductive::Found(phi) => {
                    let i = all.iter().position(|a| *a == phi).ok_or("answer outside the space")?;
                    ensure(sols.contains(&i), || format!("answer fails the constraints {picks:?}"))?;
                }
                Inductive::Unsatisfiable => ensure(sols.is_empty(), || format!("missed a solution for {picks:?}"))?,
                Inductive::Timeout => return Err("inductive step timed out".into()),
            }
            subsets += 1;
        }
    }
    Ok(format!("{runs} runs progress and sound; {subsets} constraint sets agree with brute force"))
}

fn criterion_9() -> Outcome {
    let mut report = Vec::new();
    for name in CORPUS {
        let (r, _, t) = run(&load(&format!("{name}.synrec")), true);
        ensure(matches!(r.status, Status::Solved { .. }), || format!("{name}: {:?}", r.status))?;
        ensure(t <= Duration::from_secs(300), || format!("{name}: {t:?}"))?;
        report.push(format!("{name} {:.1} ms", ms(t)));
    }
    Ok(report.join(", "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("running example end to end", criterion_1),
        ("golden expansions", criterion_2),
        ("expansions are well typed", criterion_3),
        ("decomposition preserves the solution set", criterion_4),
        ("morphism recursion eliminated", criterion_5),
        ("decomposition accelerates", criterion_6),
        ("scaling trend", criterion_7),
        ("CEGIS progress, soundness, completeness", criterion_8),
        ("corpus breadth", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| id.ends_with(x.as_str()) || name.contains(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("{id} ({name}): pass [{secs:.1} s] {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} ({name}): FAIL [{secs:.1} s] {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
