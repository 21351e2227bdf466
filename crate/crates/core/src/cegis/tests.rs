use proptest::prelude::*;

use super::*;
use crate::evaluator::Layout;
use crate::expander::{expand_program, ExpansionContext};
use crate::surface::{parse_program, parse_with_library, pretty_print_program, Program, Type, PRELUDE};

fn corpus(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn load(name: &str) -> Program {
    parse_with_library(&corpus(name), PRELUDE).unwrap().0
}

fn expand(p: &Program) -> ExpandedProgram {
    expand_program(p, &ExpansionContext::default()).unwrap()
}

fn shown(layout: &Layout, vs: &[Value]) -> Vec<String> {
    vs.iter().map(|v| layout.show(v)).collect()
}

fn lang_reference() -> Program {
    let src = corpus("lang.synrec").replace(
        "dstAST desugar(srcAST src) { return recursiveReplacer(src, desugar); }",
        &corpus("lang.expected.synrec"),
    );
    parse_program(&src).unwrap()
}

fn depth(cfg_depth: u32) -> SynthesisConfig {
    SynthesisConfig { input_depth: cfg_depth, ..Default::default() }
}

#[test]
fn enumerates_in_depth_major_declaration_order() {
    let p = load("lang.synrec");
    let layout = Layout::new(&p);
    let mut en = Enumerator::new(&p, &layout, (0, 1));
    let ops = en.values(&Type::adt("opcode"), 1).unwrap();
    assert_eq!(shown(&layout, &ops), ["AndOp", "OrOp", "LtOp"]);
    let terms = en.values(&Type::adt("srcAST"), 1).unwrap();
    assert_eq!(shown(&layout, &terms), ["NumS(0)", "NumS(1)", "TrueS", "FalseS"]);
    let bits = en.values(&Type::Bit, 4).unwrap();
    assert_eq!(bits, [Value::Bit(false), Value::Bit(true)]);
    assert!(en.values(&Type::adt("srcAST"), 0).unwrap().is_empty());
}

/// Every value of `t` up to `d`, generated independently: all constructor
/// applications over shallower values, stably sorted by depth.
fn naive(p: &Program, layout: &Layout, t: &Type, d: u32, ints: &[i64]) -> Vec<(Value, u32)> {
    match t {
        Type::Int => ints.iter().map(|&n| (Value::Int(n), 0)).collect(),
        Type::Bit => vec![(Value::Bit(false), 0), (Value::Bit(true), 0)],
        _ if d == 0 => vec![],
        _ => {
            let adt = p.adt(t.adt_name().unwrap()).unwrap();
            let mut out: Vec<(Value, u32)> = Vec::new();
            for v in &adt.variants {
                let mut tuples: Vec<(Vec<Value>, u32)> = vec![(vec![], 0)];
                for (_, ft) in &v.fields {
                    let opts = naive(p, layout, ft, d - 1, ints);
                    tuples = tuples
                        .into_iter()
                        .flat_map(|(vs, m)| {
                            opts.iter().map(move |(o, od)| {
                                let mut vs = vs.clone();
                                vs.push(o.clone());
                                (vs, m.max(*od))
                            })
                        })
                        .collect();
                }
                out.extend(tuples.into_iter().map(|(vs, m)| (Value::record(layout.tag(&v.name).unwrap(), vs), m + 1)));
            }
            out.sort_by_key(|(_, d)| *d);
            out
        }
    }
}

#[test]
fn enumeration_matches_an_independent_generator() {
    for (name, adt, d) in [("lang.synrec", "srcAST", 2), ("lIns.synrec", "list", 3), ("tIns.synrec", "tree", 3)] {
        let p = load(name);
        let layout = Layout::new(&p);
        let t = Type::adt(adt);
        let expected: Vec<Value> = naive(&p, &layout, &t, d, &[0, 1, 2]).into_iter().map(|(v, _)| v).collect();
        let mut en = Enumerator::new(&p, &layout, (0, 2));
        let got = en.values(&t, d).unwrap();
        assert_eq!(shown(&layout, &got), shown(&layout, &expected), "{name}");
        let printed: std::collections::HashSet<String> = shown(&layout, &got).into_iter().collect();
        assert_eq!(printed.len(), got.len(), "duplicates in {name}");

        let space = InputSpace::new(&p, &layout, std::slice::from_ref(&t), d, (0, 2)).unwrap();
        let mut tuples = Vec::new();
        space.for_each(None, |x| {
            tuples.push(x[0].clone());
            true
        });
        assert_eq!(shown(&layout, &tuples), shown(&layout, &expected), "{name}");
    }
}

#[test]
fn input_tuples_are_ordered_by_their_deepest_component() {
    let p = load("lIns.synrec");
    let layout = Layout::new(&p);
    let params = [Type::adt("list"), Type::Int];
    let space = InputSpace::new(&p, &layout, &params, 2, (0, 1)).unwrap();
    let mut got = Vec::new();
    space.for_each(None, |x| {
        got.push(format!("{} {}", layout.show(&x[0]), layout.show(&x[1])));
        true
    });
    assert_eq!(got, ["Nil 0", "Nil 1", "Cons(0, Nil) 0", "Cons(0, Nil) 1", "Cons(1, Nil) 0", "Cons(1, Nil) 1"]);
    assert_eq!(space.count(), 6);
}

#[test]
fn reference_solution_verifies() {
    let p = lang_reference();
    let ep = expand(&p);
    assert!(ep.control.is_empty());
    let phi = ControlAssignment::first(&ep);
    assert_eq!(verify(&ep, &phi, &depth(2), None).unwrap(), Verification::Pass);
    // Depth 3 through decomposition: the reference is itself a morphism.
    let mut cfg = depth(3);
    cfg.timeout = None;
    let prepared = prepare(&p, &cfg).unwrap();
    assert!(prepared.decomposed);
    let shape = prepared.shape.as_ref();
    assert_eq!(verify(&prepared.searched, &phi, &cfg, shape).unwrap(), Verification::Pass);
}

#[test]
fn wrong_true_case_is_refuted_by_true() {
    let src = corpus("lang.synrec").replace(
        "dstAST desugar(srcAST src) { return recursiveReplacer(src, desugar); }",
        &corpus("lang.expected.synrec")
            .replace("case TrueS: return new BoolD(v = true);", "case TrueS: return new BoolD(v = false);"),
    );
    let p = parse_program(&src).unwrap();
    let ep = expand(&p);
    let layout = Layout::new(&ep.program);
    match verify(&ep, &ControlAssignment::first(&ep), &depth(3), None).unwrap() {
        Verification::Counterexample(x) => assert_eq!(shown(&layout, &x), ["TrueS"]),
        other => panic!("expected a counterexample, got {other:?}"),
    }
}

#[test]
fn tautology_without_control_passes() {
    let p = parse_program("adt u { U { } } harness void h(u x) { assert(true); }").unwrap();
    let ep = expand(&p);
    assert_eq!(verify(&ep, &ControlAssignment(vec![]), &depth(3), None).unwrap(), Verification::Pass);
}

#[test]
fn inductive_step_solves_arithmetic() {
    let p = parse_program("int f(int x) { return x + ??; } harness void h(int x) { assert(f(x) == 3); }").unwrap();
    let ep = expand(&p);
    assert_eq!(
        synthesize_inductive(&ep, &[vec![Value::Int(1)]], &depth(3), None).unwrap(),
        Inductive::Found(ControlAssignment(vec![2]))
    );
    assert_eq!(
        synthesize_inductive(&ep, &[vec![Value::Int(1)], vec![Value::Int(2)]], &depth(3), None).unwrap(),
        Inductive::Unsatisfiable
    );
}

#[test]
fn vacuous_constraints_give_the_first_assignment() {
    let ep = expand(&load("lang.synrec"));
    assert_eq!(
        synthesize_inductive(&ep, &[], &SynthesisConfig::default(), None).unwrap(),
        Inductive::Found(ControlAssignment::first(&ep))
    );
}

#[test]
fn inconsistent_harness_is_unsatisfiable_at_once() {
    let p = parse_program("int f(int x) { return ??; } harness void h(int x) { assert(1 == 2); }").unwrap();
    let ep = expand(&p);
    let r = run_cegis(&ep, &SynthesisConfig::default(), None).unwrap();
    assert!(matches!(r.status, Status::Unsatisfiable(_)), "{:?}", r.status);
    assert_eq!(r.stats.iterations, 1);
}

// Toy lowering of boolean connectives with a small, enumerable control space.

const BOOL_HARNESS: &str = "harness void main(boolS exp) {
  assert(evalS(exp) == evalD(lower(exp)));
}";

const REFERENCE_LOWERING: &str = "
ifD ref(boolS e) {
  switch (e) {
    case TrueS: return new TrueD();
    case FalseS: return new FalseD();
    case NotS: return new IfD(c = ref(e.a), t = new FalseD(), e = new TrueD());
    case AndS: return new IfD(c = ref(e.a), t = ref(e.b), e = new FalseD());
  }
}
ifD bad(boolS e) {
  switch (e) {
    case TrueS: return new IfD(c = new TrueD(), t = new TrueD(), e = new TrueD());
    default: return ref(e);
  }
}
";

fn bool_toy(harness: &str) -> ExpandedProgram {
    let src = corpus("toys/boolIf.synrec").replace(BOOL_HARNESS, &format!("{REFERENCE_LOWERING}\n{harness}"));
    expand(&parse_program(&src).unwrap())
}

/// Every complete assignment, in lexicographic order.
fn all_assignments(ep: &ExpandedProgram) -> Vec<ControlAssignment> {
    let mut out = vec![vec![]];
    for c in &ep.control {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
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

/// Assignments passing every input in `cexs`, by exhaustive evaluation.
fn brute_force(ep: &ExpandedProgram, cexs: &[Vec<Value>]) -> Vec<ControlAssignment> {
    let code = Compiled::new(ep, None).unwrap();
    let h = code.function("main").unwrap();
    let limits = SynthesisConfig::default().eval_limits();
    let mut scratch = Scratch::default();
    let mut stats = EvalStats::default();
    all_assignments(ep)
        .into_iter()
        .filter(|phi| cexs.iter().all(|x| scratch.run(&code, h, x, &mut phi.clone(), &limits, &mut stats).is_pass()))
        .collect()
}

fn inputs(ep: &ExpandedProgram, d: u32) -> Vec<Vec<Value>> {
    let layout = Layout::new(&ep.program);
    let space = InputSpace::new(&ep.program, &layout, &[Type::adt("boolS")], d, (0, 2)).unwrap();
    let mut out = Vec::new();
    space.for_each(None, |x| {
        out.push(x.to_vec());
        true
    });
    out
}

#[test]
fn toy_control_space_is_enumerable() {
    let ep = bool_toy(BOOL_HARNESS);
    assert_eq!(ep.space_size(), 2 * 2 * 27 * 64);
}

#[test]
fn structural_specification_has_a_unique_solution() {
    let ep = bool_toy("harness void main(boolS exp) { assert(lower(exp) == ref(exp)); }");
    let cexs = inputs(&ep, 2);
    let sols = brute_force(&ep, &cexs);
    assert_eq!(sols.len(), 1);
    assert_eq!(synthesize_inductive(&ep, &cexs, &depth(2), None).unwrap(), Inductive::Found(sols[0].clone()));
}

#[test]
fn inexpressible_specification_is_unsatisfiable() {
    let ep = bool_toy("harness void main(boolS exp) { assert(lower(exp) == bad(exp)); }");
    let cexs = inputs(&ep, 1);
    assert!(brute_force(&ep, &cexs).is_empty());
    assert_eq!(synthesize_inductive(&ep, &cexs, &depth(1), None).unwrap(), Inductive::Unsatisfiable);
    let r = run_cegis(&ep, &depth(2), None).unwrap();
    assert!(matches!(r.status, Status::Unsatisfiable(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The search answers exactly when brute force finds a solution, and its
    /// answer is one of those solutions.
    #[test]
    fn inductive_step_is_complete(
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..6),
        which in 0usize..3,
    ) {
        let harness = [
            BOOL_HARNESS,
            "harness void main(boolS exp) { assert(lower(exp) == ref(exp)); }",
            "harness void main(boolS exp) { assert(lower(exp) == bad(exp)); }",
        ][which];
        let ep = bool_toy(harness);
        let all = inputs(&ep, 2);
        let cexs: Vec<Vec<Value>> = picks.iter().map(|i| all[i.index(all.len())].clone()).collect();
        let sols = brute_force(&ep, &cexs);
        match synthesize_inductive(&ep, &cexs, &depth(2), None).unwrap() {
            Inductive::Found(phi) => prop_assert!(sols.contains(&phi)),
            Inductive::Unsatisfiable => prop_assert!(sols.is_empty()),
            Inductive::Timeout => prop_assert!(false, "timeout"),
        }
    }
}

/// Runs the pipeline and checks progress, distinct counterexamples and, for a
/// solution, a full verification of the emitted program without decomposition.
fn check_run(name: &str, cfg: &SynthesisConfig) -> SynthesisResult {
    let p = load(name);
    let (prep, r) = synthesize(&p, cfg).unwrap();
    let shape = if prep.decomposed { prep.shape.as_ref() } else { None };
    let code = Compiled::new(&prep.searched, shape).unwrap();
    let h = code.function(&select_harness(&prep.searched.program, shape).unwrap().name).unwrap();
    let limits = cfg.eval_limits();
    let mut seen = Vec::new();
    for it in &r.trace {
        if let Some(x) = &it.counterexample {
            let mut stats = EvalStats::default();
            let o = Scratch::default().run(&code, h, x, &mut it.candidate.clone(), &limits, &mut stats);
            assert!(!o.is_pass(), "{name}: counterexample passes its candidate");
            assert!(!seen.contains(x), "{name}: repeated counterexample");
            seen.push(x.clone());
        }
    }
    let Status::Solved { program, phi } = &r.status else { panic!("{name}: {:?}", r.status) };
    assert!(phi.fits(&prep.searched));
    let text = pretty_print_program(program).unwrap();
    let emitted = expand(&parse_program(&text).unwrap());
    assert!(emitted.control.is_empty());
    let v = verify(&emitted, &ControlAssignment(vec![]), cfg, None).unwrap();
    assert_eq!(v, Verification::Pass, "{name}: emitted program fails");
    r
}

#[test]
fn cegis_progress_and_soundness() {
    let plain = SynthesisConfig { indecomp: false, ..Default::default() };
    for name in ["elimBool.synrec", "lIns.synrec", "tIns.synrec", "toys/boolIf.synrec", "toys/envLower.synrec"] {
        check_run(name, &SynthesisConfig::default());
        check_run(name, &plain);
    }
    let with = check_run("scaling/langLarge4.synrec", &SynthesisConfig::default());
    let without = check_run("scaling/langLarge4.synrec", &plain);
    assert!(with.stats.candidate_evaluations <= without.stats.candidate_evaluations);
}

#[test]
fn running_example_solves_with_decomposition() {
    let p = load("lang.synrec");
    let (prep, r) = synthesize(&p, &SynthesisConfig::default()).unwrap();
    assert!(prep.decomposed);
    let Status::Solved { program, .. } = &r.status else { panic!("{:?}", r.status) };
    let desugar = program.function("desugar").unwrap();
    assert_eq!(count_self_calls(desugar), 5);
    assert_eq!(r.stats.per_arm.len(), 5);
    assert!(r.stats.per_arm.iter().all(|a| a.solved));
    assert_eq!(r.eval_stats.trans_reentries, 0);
    // Bounded equivalence with the reference at depth 2 here; the acceptance
    // suite checks depth 3.
    let text = pretty_print_program(program).unwrap();
    let emitted = expand(&parse_program(&text).unwrap());
    assert_eq!(verify(&emitted, &ControlAssignment(vec![]), &depth(2), None).unwrap(), Verification::Pass);
}

#[test]
fn between_arm_concretizes_to_the_reference_text() {
    let p = load("lang.synrec");
    let (_, r) = synthesize(&p, &SynthesisConfig::default()).unwrap();
    let Status::Solved { program, .. } = &r.status else { panic!() };
    let text = pretty_print_program(program).unwrap();
    let reference = pretty_print_program(&lang_reference()).unwrap();
    let between = "return new BinaryD(op = new AndOp(), a = new BinaryD(op = new LtOp(), a = a[0], b = a[1]), \
                   b = new BinaryD(op = new LtOp(), a = a[1], b = a[2]));";
    assert!(text.contains(between), "{text}");
    assert!(reference.contains(between), "{reference}");
}

#[test]
fn concretizing_without_control_is_the_identity() {
    let p = lang_reference();
    let ep = expand(&p);
    assert_eq!(concretize(&ep, &ControlAssignment(vec![])), ep.program);
}

fn random_phi(ep: &ExpandedProgram, seed: &[u64]) -> ControlAssignment {
    ControlAssignment(
        ep.control.iter().zip(seed.iter().cycle()).map(|(c, s)| c.kind.first() + (*s % c.kind.size()) as i64).collect(),
    )
}

fn solved_phi(name: &str) -> (Prepared, ControlAssignment) {
    let (prep, r) = synthesize(&load(name), &SynthesisConfig::default()).unwrap();
    let Status::Solved { phi, .. } = r.status else { panic!() };
    (prep, phi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The emitted program behaves like the expanded one under the same
    /// assignment, except where the expanded one was infeasible.
    #[test]
    fn concretization_is_faithful(
        seed in proptest::collection::vec(any::<u64>(), 1..12),
        mutate in any::<bool>(),
    ) {
        let (prep, solved) = solved_phi("lang.synrec");
        let ep = &prep.expanded;
        let phi = if mutate { random_phi(ep, &seed) } else { solved };
        let emitted = expand(&concretize(ep, &phi));
        let (a, b) = (Compiled::new(ep, None).unwrap(), Compiled::new(&emitted, None).unwrap());
        let (ha, hb) = (a.function("main").unwrap(), b.function("main").unwrap());
        let limits = SynthesisConfig::default().eval_limits();
        let layout = Layout::new(&ep.program);
        let space = InputSpace::new(&ep.program, &layout, &[Type::adt("srcAST")], 2, (0, 2)).unwrap();
        let mut stats = EvalStats::default();
        let mut scratch = Scratch::default();
        let mut mismatch = None;
        space.for_each(None, |x| {
            let oa = scratch.run(&a, ha, x, &mut phi.clone(), &limits, &mut stats);
            let ob = scratch.run(&b, hb, x, &mut ControlAssignment(vec![]), &limits, &mut stats);
            if oa != Outcome::CandidateInfeasible && oa != ob {
                mismatch = Some((layout.show(&x[0]), oa, ob));
            }
            mismatch.is_none()
        });
        prop_assert!(mismatch.is_none(), "{:?}", mismatch);
    }

    /// Verifying class representatives finds the same first counterexample
    /// as verifying every input.
    #[test]
    fn class_verification_agrees_with_full_verification(
        seed in proptest::collection::vec(any::<u64>(), 1..12),
        flips in 0usize..4,
        large in any::<bool>(),
    ) {
        let name = if large { "scaling/langLarge5.synrec" } else { "lang.synrec" };
        let (prep, solved) = solved_phi(name);
        let ep = &prep.searched;
        let mut phi = solved.clone();
        for (i, s) in seed.iter().take(flips).enumerate() {
            let id = (*s as usize).wrapping_add(i) % ep.control.len();
            let k = ep.control[id].kind;
            phi.0[id] = k.first() + ((*s >> 8) % k.size()) as i64;
        }
        let d = if large { 3 } else { 2 };
        let with = SynthesisConfig { input_depth: d, ..Default::default() };
        let without = SynthesisConfig { quotient: false, ..with.clone() };
        let shape = prep.shape.as_ref();
        let mut engine = Engine::new(ep, &with, shape).unwrap();
        prop_assert!(engine.quotient.is_some());
        let a = engine.verify(&mut phi.clone(), None).unwrap();
        let b = verify(ep, &phi, &without, shape).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn classes_are_not_used_when_subterms_are_observable() {
    // The stateful toy passes extra state, so subterm semantics alone do not
    // decide outcomes.
    let p = load("toys/envLower.synrec");
    let prep = prepare(&p, &SynthesisConfig::default()).unwrap();
    assert!(prep.decomposed);
    let e = Engine::new(&prep.searched, &SynthesisConfig::default(), prep.shape.as_ref()).unwrap();
    assert!(e.quotient.is_none());
}

#[test]
fn stats_serialize_with_stable_field_names() {
    let s = SynthesisStats {
        iterations: 2,
        candidate_evaluations: 10,
        counterexamples: vec!["TrueS".into()],
        wall_ms: 5,
        per_arm: vec![ArmStat { variant: "TrueS".into(), solved: true, ms: 1 }],
    };
    assert_eq!(
        serde_json::to_string(&s).unwrap(),
        r#"{"iterations":2,"candidate_evaluations":10,"counterexamples":["TrueS"],"wall_ms":5,"per_arm":[{"variant":"TrueS","solved":true,"ms":1}]}"#
    );
}
