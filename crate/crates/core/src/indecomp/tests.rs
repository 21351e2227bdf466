use super::*;
use crate::expander::{expand_program, ExpansionContext};
use crate::surface::{parse_program, parse_with_library, PRELUDE};

fn corpus(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn lang() -> Program {
    parse_with_library(&corpus("lang.synrec"), PRELUDE).unwrap().0
}

fn deferred(f: &FuncDecl) -> usize {
    let mut n = 0;
    f.body.walk(&mut |e| {
        if matches!(e.kind, ExprKind::Deferred { .. }) {
            n += 1;
        }
    });
    n
}

#[test]
fn detects_the_running_example() {
    let p = lang();
    let shape = detect_spec_shape(&p, p.function("main").unwrap()).unwrap();
    assert_eq!(shape.trans, "desugar");
    assert_eq!(shape.interp_s, "srcInterpret");
    assert_eq!(shape.interp_d, "dstInterpret");
    assert_eq!((shape.source_adt.as_str(), shape.dest_adt.as_str()), ("srcAST", "dstAST"));
    assert!(shape.extra_state.is_empty());
    assert_eq!(shape.gamma_param, None);
}

#[test]
fn swapped_equality_is_detected() {
    let src = corpus("lang.synrec").replace(
        "assert(srcInterpret(exp) == dstInterpret(desugar(exp)));",
        "assert(dstInterpret(desugar(exp)) == srcInterpret(exp));",
    );
    let p = parse_with_library(&src, PRELUDE).unwrap().0;
    assert_eq!(detect_spec_shape(&p, p.function("main").unwrap()).unwrap().trans, "desugar");
}

#[test]
fn plain_equalities_are_not_shapes() {
    let p = parse_program(
        "int f(int x) { return x; } int g(int x) { return x; }
         harness void h(int x) { assert(f(x) == g(x)); }",
    )
    .unwrap();
    assert_eq!(detect_spec_shape(&p, p.function("h").unwrap()), None);

    // Two equality assertions: not the sole one.
    let src = corpus("lang.synrec").replace(
        "assert(srcInterpret(exp) == dstInterpret(desugar(exp)));",
        "assert(srcInterpret(exp) == dstInterpret(desugar(exp))); assert(1 == 1);",
    );
    let p = parse_with_library(&src, PRELUDE).unwrap().0;
    assert_eq!(detect_spec_shape(&p, p.function("main").unwrap()), None);
}

const STATEFUL: &str = "
adt src { SLit { int v; } SVar { } SAdd { src a; src b; } }
adt dst { DLit { int v; } DAdd { dst a; dst b; } }
int envOf(int s) { return s + 1; }
int evalS(src e, int s) {
  switch (e) {
    case SLit: return e.v;
    case SVar: return s;
    case SAdd: return evalS(e.a, s) + evalS(e.b, s);
  }
}
int evalD(dst e, int s) {
  switch (e) {
    case DLit: return e.v;
    case DAdd: return evalD(e.a, s) + evalD(e.b, s);
  }
}
dst lower(src e, int g) {
  switch (e) {
    case SLit: return new DLit(v = e.v);
    case SVar: return new DLit(v = g - 1);
    case SAdd: return new DAdd(a = lower(e.a, g), b = lower(e.b, g));
  }
}
";

#[test]
fn abstracted_state_fills_the_generalized_shape() {
    let with = format!(
        "{STATEFUL} @abstracts(envOf, s, g) harness void h(src e, int s, int g) {{ if (g == envOf(s)) assert(evalS(e, s) == evalD(lower(e, g), s)); }}"
    );
    let p = parse_program(&with).unwrap();
    let shape = detect_spec_shape(&p, p.function("h").unwrap()).unwrap();
    assert_eq!(shape.extra_state, vec!["s".to_string()]);
    assert_eq!(
        shape.gamma_param,
        Some(GammaParam { name: "g".into(), abstraction: "envOf".into(), state_position: 0 })
    );

    let without = format!(
        "{STATEFUL} harness void h(src e, int s, int g) {{ if (g == envOf(s)) assert(evalS(e, s) == evalD(lower(e, g), s)); }}"
    );
    let p = parse_program(&without).unwrap();
    assert_eq!(detect_spec_shape(&p, p.function("h").unwrap()), None);
}

#[test]
fn expanded_template_is_a_morphism() {
    let ep = expand_program(&lang(), &ExpansionContext::default()).unwrap();
    let f = ep.program.function("desugar").unwrap();
    let r = classify_transformer(&ep.program, f, "srcAST");
    assert_eq!(r.verdict, Verdict::RecursiveMorphism, "{:?}", r.reason);
    let fields: Vec<(&str, Vec<&str>)> =
        r.arms.iter().map(|a| (a.variant.as_str(), a.recursive_fields.iter().map(String::as_str).collect())).collect();
    assert_eq!(
        fields,
        vec![
            ("NumS", vec![]),
            ("TrueS", vec![]),
            ("FalseS", vec![]),
            ("BinaryS", vec!["a", "b"]),
            ("BetweenS", vec!["a", "b", "c"]),
        ]
    );
    assert!(r.arms.iter().all(|a| a.skeleton.is_some()));
}

#[test]
fn interpreters_are_transformers_only() {
    let p = lang();
    let r = classify_transformer(&p, p.function("dstInterpret").unwrap(), "dstAST");
    assert_eq!(r.verdict, Verdict::RecursiveTransformer);
    assert!(r.reason.unwrap().contains("applyOp"));
    assert!(r.arms.iter().all(|a| a.skeleton.is_none()));

    let r = classify_transformer(&p, p.function("srcInterpret").unwrap(), "srcAST");
    assert_eq!(r.verdict, Verdict::RecursiveTransformer);
}

#[test]
fn other_shapes() {
    let p = parse_program(&format!(
        "{STATEFUL} dst wrap(src e, int g) {{ dst x = lower(e, g); return x; }}
         dst deep(src e, int g) {{ switch (e) {{ case SLit: return new DLit(v = 0); case SVar: return new DLit(v = 0);
           case SAdd: return deep(new SAdd(a = e.a, b = e.b), g); }} }}"
    ))
    .unwrap();
    let r = classify_transformer(&p, p.function("wrap").unwrap(), "src");
    assert_eq!(r.verdict, Verdict::Other);
    assert!(r.arms.is_empty());
    let r = classify_transformer(&p, p.function("deep").unwrap(), "src");
    assert_eq!(r.verdict, Verdict::Other);
    let r = classify_transformer(&p, p.function("envOf").unwrap(), "src");
    assert_eq!(r.verdict, Verdict::Other);
}

#[test]
fn decomposition_removes_every_self_call() {
    let p = lang();
    let shape = detect_spec_shape(&p, p.function("main").unwrap()).unwrap();
    let ep = expand_program(&p, &ExpansionContext::default()).unwrap();
    let f = ep.program.function("desugar").unwrap();
    assert_eq!(count_self_calls(f), 5);
    let report = classify_transformer(&ep.program, f, "srcAST");
    let (out, diag) = apply_inductive_decomposition(&ep, &shape, &report);
    assert_eq!(diag, None);
    let g = out.program.function("desugar").unwrap();
    assert_eq!(count_self_calls(g), 0);
    assert_eq!(deferred(g), 5);
    assert_eq!(out.control, ep.control);
    // Only the synthesized function changes.
    assert_eq!(out.program.function("srcInterpret"), ep.program.function("srcInterpret"));
}

#[test]
fn other_verdict_refuses() {
    let p = lang();
    let shape = detect_spec_shape(&p, p.function("main").unwrap()).unwrap();
    let ep = expand_program(&p, &ExpansionContext::default()).unwrap();
    let report = ClassificationReport::other("test");
    let (out, diag) = apply_inductive_decomposition(&ep, &shape, &report);
    assert!(diag.unwrap().contains("skipped"));
    assert_eq!(out.program, ep.program);
}
