//! Detection of interpreter-equivalence specifications and the inductive
//! decomposition rewrite.
//!
//! For a harness asserting `interp_s(e) == interp_d(trans(e))`, recursive calls
//! of `trans` on subterms may be replaced by placeholders that the destination
//! interpreter turns into source-interpreter calls. Correctness of `trans` on
//! smaller terms is then assumed rather than recomputed, which decouples the
//! arms of `trans`.

use log::warn;

use crate::expander::ExpandedProgram;
use crate::surface::{print_expr_annotated as print_expr, BinOp, Expr, ExprKind, FuncDecl, Program, Type};

#[cfg(test)]
mod tests;

/// `interp_s(e, S..) == interp_d(trans(e[, Gamma]), S..)` as found in a harness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecShape {
    pub harness: String,
    pub trans: String,
    /// Printed form of the term both interpreters receive.
    pub term: String,
    pub interp_s: String,
    pub interp_d: String,
    pub source_adt: String,
    pub dest_adt: String,
    /// Printed forms of the interpreter arguments after the term, identical on
    /// both sides.
    pub extra_state: Vec<String>,
    pub gamma_param: Option<GammaParam>,
}

/// The second parameter of `trans`, tied to the interpreter state by an
/// abstraction function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaParam {
    pub name: String,
    pub abstraction: String,
    /// Index of `S` among the extra interpreter arguments.
    pub state_position: usize,
}

/// Finds the specification shape in `harness`, if its only equality assertion
/// has one. Both orientations of the equality are tried.
pub fn detect_spec_shape(prog: &Program, harness: &FuncDecl) -> Option<SpecShape> {
    let mut eqs: Vec<(&Expr, &Expr)> = Vec::new();
    let mut others = 0;
    collect_asserts(&harness.body, &mut eqs, &mut others);
    let [(l, r)] = eqs.as_slice() else { return None };
    match_sides(prog, harness, l, r).or_else(|| match_sides(prog, harness, r, l))
}

fn collect_asserts<'a>(e: &'a Expr, eqs: &mut Vec<(&'a Expr, &'a Expr)>, others: &mut usize) {
    if let ExprKind::Assert(x) = &e.kind {
        match &x.kind {
            ExprKind::Binary(BinOp::Eq, l, r) => eqs.push((l, r)),
            _ => *others += 1,
        }
    }
    e.for_each_child(|c| collect_asserts(c, eqs, others));
}

fn call_parts(e: &Expr) -> Option<(&str, &[Expr])> {
    match &e.kind {
        ExprKind::Call { func, args } if !args.is_empty() => Some((func, args)),
        _ => None,
    }
}

fn first_param_adt(f: &FuncDecl) -> Option<&str> {
    f.params.first().and_then(|p| p.ty.adt_name())
}

fn match_sides(prog: &Program, harness: &FuncDecl, src: &Expr, dst: &Expr) -> Option<SpecShape> {
    let (interp_s, s_args) = call_parts(src)?;
    let (interp_d, d_args) = call_parts(dst)?;
    let (trans, t_args) = call_parts(&d_args[0])?;
    if t_args[0] != s_args[0] || s_args.len() != d_args.len() || s_args[1..] != d_args[1..] {
        return None;
    }
    if trans == interp_s || trans == interp_d {
        return None;
    }
    let tf = prog.function(trans)?;
    let source_adt = first_param_adt(tf)?.to_string();
    let dest_adt = tf.ret.adt_name()?.to_string();
    if first_param_adt(prog.function(interp_s)?)? != source_adt
        || first_param_adt(prog.function(interp_d)?)? != dest_adt
    {
        return None;
    }
    let extra_state: Vec<String> = s_args[1..].iter().map(print_expr).collect();
    let gamma_param = match t_args.len() {
        1 => None,
        2 => {
            let ann = harness.abstraction.as_ref()?;
            if print_expr(&t_args[1]) != ann.gamma {
                return None;
            }
            let state_position = extra_state.iter().position(|s| *s == ann.state)?;
            Some(GammaParam { name: tf.params.get(1)?.name.clone(), abstraction: ann.function.clone(), state_position })
        }
        _ => return None,
    };
    Some(SpecShape {
        harness: harness.name.clone(),
        trans: trans.to_string(),
        term: print_expr(&s_args[0]),
        interp_s: interp_s.to_string(),
        interp_d: interp_d.to_string(),
        source_adt,
        dest_adt,
        extra_state,
        gamma_param,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    RecursiveTransformer,
    /// A transformer whose recursive results only fill constructor leaves.
    RecursiveMorphism,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArmDetail {
    pub variant: String,
    /// Scrutinee fields passed to recursive calls, in order of first use.
    pub recursive_fields: Vec<String>,
    /// For morphisms, the arm body: the builder skeleton with its residual
    /// processing.
    pub skeleton: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    /// Empty when the verdict is `Other`.
    pub arms: Vec<ArmDetail>,
    /// Why the verdict is `Other`, or why a transformer is not a morphism.
    pub reason: Option<String>,
}

impl ClassificationReport {
    fn other(reason: impl Into<String>) -> Self {
        ClassificationReport { verdict: Verdict::Other, arms: Vec::new(), reason: Some(reason.into()) }
    }
}

/// Classifies `f` by the structure of its recursion over its first
/// parameter, of ADT `adt`.
pub fn classify_transformer(prog: &Program, f: &FuncDecl, adt: &str) -> ClassificationReport {
    let Some(param) = f.params.first().filter(|p| p.ty.adt_name() == Some(adt)) else {
        return ClassificationReport::other(format!("first parameter is not of type {adt}"));
    };
    let ExprKind::Switch { scrutinee, arms } = &f.body.kind else {
        return ClassificationReport::other("body is not a single switch");
    };
    if *scrutinee != param.name {
        return ClassificationReport::other("switch is not on the first parameter");
    }
    let mut details = Vec::new();
    let mut morphism = true;
    let mut reason = None;
    for (variant, body) in arms {
        let Some(rt) = prog.record_type(variant) else {
            return ClassificationReport::other(format!("unknown variant {variant}"));
        };
        let mut fields = Vec::new();
        let mut bad = None;
        body.walk(&mut |e| {
            if let ExprKind::Call { func, args } | ExprKind::Deferred { func, args } = &e.kind {
                if *func != f.name || bad.is_some() {
                    return;
                }
                match args.first().map(|a| &a.kind) {
                    Some(ExprKind::Field(x, l))
                        if matches!(&x.kind, ExprKind::Var(v) if *v == param.name)
                            && rt.field(l) == Some(&Type::adt(adt)) =>
                    {
                        if !fields.contains(l) {
                            fields.push(l.clone());
                        }
                    }
                    _ => bad = Some(format!("recursive call in {variant} is not on a field of the scrutinee")),
                }
                if args[1..].iter().any(|a| mentions(a, &f.name)) {
                    bad = Some(format!("nested recursive call in {variant}"));
                }
            }
        });
        if let Some(b) = bad {
            return ClassificationReport::other(b);
        }
        let leafy = match flow(body, &f.name, &mut Vec::new()) {
            Ok(_) => true,
            Err(why) => {
                if reason.is_none() {
                    reason = Some(format!("in {variant}: {why}"));
                }
                false
            }
        };
        morphism &= leafy;
        details.push(ArmDetail { variant: variant.clone(), recursive_fields: fields, skeleton: None });
    }
    if morphism {
        for (d, (_, body)) in details.iter_mut().zip(arms) {
            d.skeleton = Some(print_expr(body));
        }
    }
    ClassificationReport {
        verdict: if morphism { Verdict::RecursiveMorphism } else { Verdict::RecursiveTransformer },
        arms: details,
        reason,
    }
}

fn mentions(e: &Expr, f: &str) -> bool {
    e.any(&mut |x| matches!(&x.kind, ExprKind::Call { func, .. } | ExprKind::Deferred { func, .. } if func == f))
}

/// Whether `e` may evaluate to something built from a recursive result.
/// Fails when such a value is inspected rather than placed.
fn flow(e: &Expr, f: &str, scope: &mut Vec<(String, bool)>) -> Result<bool, String> {
    use ExprKind::*;
    let clean = |x: &Expr, scope: &mut Vec<(String, bool)>, what: &str| -> Result<(), String> {
        if flow(x, f, scope)? {
            Err(format!("recursive result used by {what}"))
        } else {
            Ok(())
        }
    };
    Ok(match &e.kind {
        Var(x) => is_tainted(scope, x),
        Int(_) | Bit(_) | Unit | AlwaysFail | Hole(_) => false,
        Call { func, args } | Deferred { func, args } if func == f => {
            for a in args {
                clean(a, scope, "a recursive argument")?;
            }
            true
        }
        Call { func, args } => {
            for a in args {
                clean(a, scope, &format!("`{func}`"))?;
            }
            false
        }
        Deferred { .. } => false,
        Let { name, value, body, .. } => {
            let t = flow(value, f, scope)?;
            scope.push((name.clone(), t));
            let r = flow(body, f, scope);
            scope.pop();
            r?
        }
        Seq(a, b) => {
            flow(a, f, scope)?;
            flow(b, f, scope)?
        }
        Switch { scrutinee, arms } => {
            if is_tainted(scope, scrutinee) {
                return Err("recursive result inspected by a switch".into());
            }
            let mut t = false;
            for (_, a) in arms {
                t |= flow(a, f, scope)?;
            }
            t
        }
        If(c, a, b) => {
            clean(c, scope, "a condition")?;
            let x = flow(a, f, scope)?;
            flow(b, f, scope)? || x
        }
        Choose(arms, _) => {
            let mut t = false;
            for a in arms {
                t |= flow(a, f, scope)?;
            }
            t
        }
        New { fields, .. } => {
            let mut t = false;
            for (_, v) in fields {
                t |= flow(v, f, scope)?;
            }
            t
        }
        Array(es) => {
            let mut t = false;
            for x in es {
                t |= flow(x, f, scope)?;
            }
            t
        }
        Index(a, i) => {
            clean(i, scope, "an index")?;
            flow(a, f, scope)?
        }
        Field(x, _) => {
            clean(x, scope, "a field access")?;
            false
        }
        Binary(_, a, b) => {
            clean(a, scope, "an operator")?;
            clean(b, scope, "an operator")?;
            false
        }
        Not(x) | Neg(x) => {
            clean(x, scope, "an operator")?;
            false
        }
        Assert(x) => {
            clean(x, scope, "an assertion")?;
            false
        }
        NewAny(_) | FieldList(_) | SwitchAny { .. } => return Err("unexpanded construct".into()),
    })
}

fn is_tainted(scope: &[(String, bool)], x: &str) -> bool {
    scope.iter().rev().find(|(n, _)| n == x).is_some_and(|(_, t)| *t)
}

/// Replaces the recursive calls in `shape.trans` by deferred calls. Refuses,
/// returning the program unchanged with a diagnostic, unless `report` shows a
/// structural recursion on scrutinee fields.
pub fn apply_inductive_decomposition(
    prog: &ExpandedProgram,
    shape: &SpecShape,
    report: &ClassificationReport,
) -> (ExpandedProgram, Option<String>) {
    if report.verdict == Verdict::Other {
        let why = format!(
            "inductive decomposition skipped: `{}` is not a structural recursion ({})",
            shape.trans,
            report.reason.as_deref().unwrap_or("unclassified")
        );
        warn!("{why}");
        return (prog.clone(), Some(why));
    }
    let mut out = prog.clone();
    let Some(f) = out.program.function_mut(&shape.trans) else {
        return (prog.clone(), Some(format!("no function `{}`", shape.trans)));
    };
    let trans = shape.trans.clone();
    f.body.walk_mut(&mut |e| {
        if let ExprKind::Call { func, args } = &mut e.kind {
            if *func == trans {
                e.kind = ExprKind::Deferred { func: std::mem::take(func), args: std::mem::take(args) };
            }
        }
    });
    (out, None)
}

/// Direct calls of `f` to itself; deferred calls do not count.
pub fn count_self_calls(f: &FuncDecl) -> usize {
    let mut n = 0;
    f.body.walk(&mut |e| {
        if matches!(&e.kind, ExprKind::Call { func, .. } if *func == f.name) {
            n += 1;
        }
    });
    n
}

/// Checks that after decomposition a harness outcome depends on the subterms
/// of its input only through their source-interpreter results: the harness
/// passes its single input straight to the two sides, `interp_s` reads
/// recursive fields only as arguments of its own recursive calls, and the
/// decomposed `trans` reads them only as placeholder contents. Forcing a
/// placeholder breaks this at run time and has to be detected there.
pub fn subterm_semantics_suffice(prog: &Program, shape: &SpecShape) -> Result<(), String> {
    if shape.gamma_param.is_some() || !shape.extra_state.is_empty() {
        return Err("interpreters take extra state".into());
    }
    let h = prog.function(&shape.harness).ok_or("no harness")?;
    let [param] = h.params.as_slice() else { return Err("harness takes more than the term".into()) };
    if shape.term != param.name {
        return Err("harness does not pass its parameter as the term".into());
    }
    let mut uses = 0;
    h.body.walk(&mut |e| {
        if matches!(&e.kind, ExprKind::Var(x) if *x == param.name) {
            uses += 1;
        }
    });
    if uses != 2 {
        return Err(format!("harness uses `{}` outside the specification", param.name));
    }
    let adt = prog.adt(&shape.source_adt).ok_or("unknown source ADT")?;
    let rec: Vec<&str> = adt
        .variants
        .iter()
        .flat_map(|v| &v.fields)
        .filter(|(_, t)| t.adt_name() == Some(adt.name.as_str()))
        .map(|(n, _)| n.as_str())
        .collect();
    let through = |f: &FuncDecl, deferred: bool| -> Result<(), String> {
        let [p] = f.params.as_slice() else { return Err(format!("`{}` takes extra parameters", f.name)) };
        let wraps = |e: &Expr| match &e.kind {
            ExprKind::Call { func, args } if !deferred && *func == f.name => field_of(args, &p.name).is_some(),
            ExprKind::Deferred { func, args } if deferred && *func == f.name => field_of(args, &p.name).is_some(),
            _ => false,
        };
        reads_children_only_via(&f.body, &p.name, &rec, &wraps).map_err(|m| format!("`{}` {m}", f.name))
    };
    through(prog.function(&shape.interp_s).ok_or("no source interpreter")?, false)?;
    through(prog.function(&shape.trans).ok_or("no transformer")?, true)
}

fn field_of<'a>(args: &'a [Expr], p: &str) -> Option<&'a str> {
    match args {
        [Expr { kind: ExprKind::Field(b, f), .. }] if matches!(&b.kind, ExprKind::Var(x) if x == p) => Some(f),
        _ => None,
    }
}

fn reads_children_only_via(e: &Expr, p: &str, rec: &[&str], wraps: &dyn Fn(&Expr) -> bool) -> Result<(), String> {
    match &e.kind {
        _ if wraps(e) => return Ok(()),
        ExprKind::Var(x) if x == p => return Err(format!("uses `{p}` as a value")),
        ExprKind::Let { name, .. } if name == p => return Err(format!("rebinds `{p}`")),
        ExprKind::Field(b, f) if matches!(&b.kind, ExprKind::Var(x) if x == p) => {
            return if rec.contains(&f.as_str()) { Err(format!("reads `{p}.{f}` directly")) } else { Ok(()) };
        }
        _ => {}
    }
    let mut r = Ok(());
    e.for_each_child(|c| {
        if r.is_ok() {
            r = reads_children_only_via(c, p, rec, wraps);
        }
    });
    r
}
