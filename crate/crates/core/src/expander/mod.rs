//! Type-directed expansion of polymorphic synthesis constructs and
//! generator inlining into a finite control space.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use log::debug;

use crate::error::{Error, Result};
use crate::surface::{BinOp, ControlId, Expr, ExprKind, FuncDecl, FuncKind, Program, Span, Type, MAP_BUILTIN};
use crate::typesys::{apply_subst, assignable, is_concrete, unify, widen, Substitution, TypeEnv};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlKind {
    /// Integer constant in `lo..=hi`.
    Hole { lo: i64, hi: i64 },
    /// Bit-typed hole; reads 0 or 1.
    Flag,
    /// Index of the selected arm, `0..arity`.
    Choice { arity: usize },
}

impl ControlKind {
    pub fn size(&self) -> u64 {
        match *self {
            ControlKind::Hole { lo, hi } => (hi - lo + 1) as u64,
            ControlKind::Flag => 2,
            ControlKind::Choice { arity } => arity as u64,
        }
    }

    /// Smallest value in the domain.
    pub fn first(&self) -> i64 {
        match *self {
            ControlKind::Hole { lo, .. } => lo,
            ControlKind::Flag | ControlKind::Choice { .. } => 0,
        }
    }

    pub fn last(&self) -> i64 {
        match *self {
            ControlKind::Hole { hi, .. } => hi,
            ControlKind::Flag => 1,
            ControlKind::Choice { arity } => arity as i64 - 1,
        }
    }
}

/// Where a control point came from: its source position and the generator
/// call sites it was inlined through, outermost first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origin {
    pub span: Span,
    pub path: Vec<(String, Span)>,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.span)?;
        for (g, s) in &self.path {
            write!(f, " <- {g}@{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlPoint {
    pub id: ControlId,
    pub kind: ControlKind,
    pub origin: Origin,
}

/// A program whose only synthesis constructs are holes and choices.
#[derive(Clone, Debug)]
pub struct ExpandedProgram {
    /// Standard functions and harnesses; generators are consumed.
    pub program: Program,
    pub control: Vec<ControlPoint>,
}

impl ExpandedProgram {
    /// Number of complete control assignments, saturating.
    pub fn space_size(&self) -> u64 {
        self.control.iter().fold(1u64, |acc, c| acc.saturating_mul(c.kind.size()))
    }

    pub fn count_kinds(&self) -> (usize, usize) {
        let holes =
            self.control.iter().filter(|c| matches!(c.kind, ControlKind::Hole { .. } | ControlKind::Flag)).count();
        (holes, self.control.len() - holes)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionContext {
    /// Maximum nesting of one generator on an inlining path.
    pub inline_bound: usize,
    /// Domain of integer holes.
    pub hole_domain: (i64, i64),
    /// Recursion budget for standard functions; enforced by evaluation.
    pub unroll_bound: usize,
}

impl Default for ExpansionContext {
    fn default() -> Self {
        ExpansionContext { inline_bound: 3, hole_domain: (0, 3), unroll_bound: 5 }
    }
}

/// Expands every standard function at its declared return type. Generators
/// are inlined where used and dropped from the result.
pub fn expand_program(prog: &Program, ctx: &ExpansionContext) -> Result<ExpandedProgram> {
    check_ctx(ctx)?;
    let mut ex = Expander::new(prog, ctx);
    let mut functions = Vec::new();
    for f in prog.functions.iter().filter(|f| f.kind == FuncKind::Standard) {
        let mut env = Env::default();
        for p in &f.params {
            if !is_concrete(&p.ty) {
                return Err(Error::Expand {
                    span: f.span,
                    msg: format!("parameter `{}` of `{}` needs a concrete type", p.name, f.name),
                });
            }
            env = env.bind_var(&p.name, p.name.clone(), p.ty.clone(), None);
        }
        let body = ex.expand(&env, &f.body, &f.ret).map_err(|e| e.into_error(&f.name))?;
        functions.push(FuncDecl { body, ..f.clone() });
    }
    let program = Program { adts: prog.adts.clone(), functions };
    Ok(ex.finish(program))
}

/// Expands a single expression under `env` at `required`. Names in `env`
/// are treated as target variables of the same name.
pub fn expand_expr(
    prog: &Program,
    env: &TypeEnv,
    expr: &Expr,
    required: &Type,
    ctx: &ExpansionContext,
) -> Result<(Expr, Vec<ControlPoint>)> {
    check_ctx(ctx)?;
    let mut ex = Expander::new(prog, ctx);
    let mut e = Env::default();
    let mut names = env.names();
    names.reverse();
    for n in names {
        e = e.bind_var(n, n.to_string(), env.lookup(n).unwrap().clone(), None);
    }
    let out = ex.expand(&e, expr, required).map_err(|e| e.into_error("expression"))?;
    let mut p = Program {
        adts: Vec::new(),
        functions: vec![FuncDecl {
            kind: FuncKind::Standard,
            name: String::new(),
            type_params: Vec::new(),
            params: Vec::new(),
            ret: required.clone(),
            body: out,
            harness: false,
            abstraction: None,
            span: expr.span,
        }],
    };
    let done = ex.finish(std::mem::take(&mut p));
    let body = done.program.functions.into_iter().next().unwrap().body;
    Ok((body, done.control))
}

/// The FL rule applied to `e.fields?`.
pub fn expand_field_list(prog: &Program, env: &TypeEnv, expr: &Expr, required: &Type) -> Result<Expr> {
    expect_kind(expr, matches!(expr.kind, ExprKind::FieldList(_)), "e.fields?")?;
    Ok(expand_expr(prog, env, expr, required, &ExpansionContext::default())?.0)
}

/// The FPM rule applied to `switch (x) { case?: e }`.
pub fn expand_flex_match(
    prog: &Program,
    env: &TypeEnv,
    expr: &Expr,
    required: &Type,
) -> Result<(Expr, Vec<ControlPoint>)> {
    expect_kind(expr, matches!(expr.kind, ExprKind::SwitchAny { .. }), "switch (x) { case?: e }")?;
    expand_expr(prog, env, expr, required, &ExpansionContext::default())
}

/// The UC1/UC2 rules applied to `new cons?(...)`.
pub fn expand_unknown_constructor(
    prog: &Program,
    env: &TypeEnv,
    expr: &Expr,
    required: &Type,
    ctx: &ExpansionContext,
) -> Result<(Expr, Vec<ControlPoint>)> {
    expect_kind(expr, matches!(expr.kind, ExprKind::NewAny(_)), "new cons?(...)")?;
    expand_expr(prog, env, expr, required, ctx)
}

/// The PG rule applied to a generator call.
pub fn expand_polygen_call(
    prog: &Program,
    env: &TypeEnv,
    call: &Expr,
    required: &Type,
    ctx: &ExpansionContext,
) -> Result<(Expr, Vec<ControlPoint>)> {
    let ok = matches!(&call.kind, ExprKind::Call { func, .. } if prog.function(func).is_some_and(|f| f.is_generator()));
    expect_kind(call, ok, "generator call")?;
    expand_expr(prog, env, call, required, ctx)
}

fn expect_kind(e: &Expr, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Expand { span: e.span, msg: format!("expected {what}") })
    }
}

fn check_ctx(ctx: &ExpansionContext) -> Result<()> {
    if ctx.inline_bound == 0 || ctx.unroll_bound == 0 {
        return Err(Error::Config("inline and unroll bounds must be positive".into()));
    }
    if ctx.hole_domain.0 > ctx.hole_domain.1 {
        return Err(Error::Config("hole domain is empty".into()));
    }
    Ok(())
}

/// Expansion failure. Failures inside choices and constructor arguments are
/// recovered from, so they stay cheap until reported.
#[derive(Debug)]
struct Fail {
    span: Span,
    msg: String,
}

impl Fail {
    fn into_error(self, func: &str) -> Error {
        Error::Expand { span: self.span, msg: format!("in `{func}`: {}", self.msg) }
    }
}

type Ex<T> = std::result::Result<T, Fail>;

fn fail<T>(span: Span, msg: impl Into<String>) -> Ex<T> {
    Err(Fail { span, msg: msg.into() })
}

/// A source-level name during expansion.
#[derive(Clone, Debug)]
enum Binding {
    /// Output variable, with the length of the array literal it holds.
    Var { target: String, len: Option<usize> },
    /// Pure expression substituted at each use.
    Subst(Expr),
    /// Expression passed for a `fun` parameter, re-expanded at each use.
    Thunk(Rc<Thunk>),
    /// Function passed for a `fun` parameter.
    Func(String),
}

#[derive(Debug)]
struct Thunk {
    expr: Expr,
    scope: Scope,
    subst: Rc<Substitution>,
}

#[derive(Clone, Debug, Default)]
struct Scope {
    head: Option<Rc<ScopeNode>>,
}

#[derive(Debug)]
struct ScopeNode {
    name: String,
    binding: Binding,
    next: Option<Rc<ScopeNode>>,
}

impl Scope {
    fn bind(&self, name: &str, binding: Binding) -> Scope {
        Scope { head: Some(Rc::new(ScopeNode { name: name.to_string(), binding, next: self.head.clone() })) }
    }

    fn lookup(&self, name: &str) -> Option<&Binding> {
        let mut cur = self.head.as_deref();
        while let Some(n) = cur {
            if n.name == name {
                return Some(&n.binding);
            }
            cur = n.next.as_deref();
        }
        None
    }
}

/// `scope` maps source names; `tenv` types output variables; `subst`
/// instantiates type variables of the generator being expanded.
#[derive(Clone, Debug, Default)]
struct Env {
    scope: Scope,
    tenv: TypeEnv,
    subst: Rc<Substitution>,
}

impl Env {
    fn bind_var(&self, name: &str, target: String, ty: Type, len: Option<usize>) -> Env {
        Env {
            scope: self.scope.bind(name, Binding::Var { target: target.clone(), len }),
            tenv: self.tenv.bind(target, ty),
            subst: self.subst.clone(),
        }
    }

    fn refine(&self, target: &str, ty: Type) -> Env {
        Env { scope: self.scope.clone(), tenv: self.tenv.bind(target, ty), subst: self.subst.clone() }
    }
}

struct Expander<'p> {
    prog: &'p Program,
    ctx: &'p ExpansionContext,
    points: Vec<(ControlKind, Origin)>,
    stack: Vec<(String, Span)>,
}

fn mk(kind: ExprKind, span: Span) -> Expr {
    Expr::new(kind, span)
}

impl<'p> Expander<'p> {
    fn new(prog: &'p Program, ctx: &'p ExpansionContext) -> Self {
        Expander { prog, ctx, points: Vec::new(), stack: Vec::new() }
    }

    fn point(&mut self, kind: ControlKind, span: Span) -> ControlId {
        self.points.push((kind, Origin { span, path: self.stack.clone() }));
        self.points.len() - 1
    }

    /// Renumbers the control points that survived speculative expansion
    /// densely, in pre-order of first occurrence.
    fn finish(self, mut program: Program) -> ExpandedProgram {
        let mut map: HashMap<ControlId, ControlId> = HashMap::new();
        let mut control = Vec::new();
        for f in &mut program.functions {
            f.body.walk_mut(&mut |e| {
                let id = match &mut e.kind {
                    ExprKind::Hole(Some(id)) | ExprKind::Choose(_, Some(id)) => id,
                    _ => return,
                };
                let next = control.len();
                let new = *map.entry(*id).or_insert(next);
                if new == next {
                    let (kind, origin) = self.points[*id].clone();
                    control.push(ControlPoint { id: new, kind, origin });
                }
                *id = new;
            });
        }
        ExpandedProgram { program, control }
    }

    fn fresh_name(&self, env: &Env, base: &str) -> String {
        let taken = |n: &str| env.tenv.contains(n) || self.prog.function(n).is_some();
        if !taken(base) {
            return base.to_string();
        }
        (1..).map(|k| format!("{base}_{k}")).find(|n| !taken(n)).unwrap()
    }

    fn concrete(&self, env: &Env, t: &Type, span: Span) -> Ex<Type> {
        let t = apply_subst(&env.subst, t);
        if is_concrete(&t) {
            Ok(t)
        } else {
            fail(span, format!("type variable encountered where concrete type expected: `{t}`"))
        }
    }

    fn generator_depth(&self, name: &str) -> usize {
        self.stack.iter().filter(|(g, _)| g == name).count()
    }

    fn in_generator(&self) -> bool {
        !self.stack.is_empty()
    }

    fn type_of(&self, env: &Env, e: &Expr) -> Ex<Type> {
        crate::typesys::type_of(self.prog, &env.tenv, e)
            .map_err(|e| Fail { span: e.span().unwrap_or_default(), msg: e.to_string() })
    }

    /// Length of an array-literal-valued output expression.
    fn known_len(&self, env: &Env, e: &Expr) -> Option<usize> {
        match &e.kind {
            ExprKind::Array(es) => Some(es.len()),
            ExprKind::Var(t) => {
                let mut cur = env.scope.head.as_deref();
                while let Some(n) = cur {
                    if let Binding::Var { target, len } = &n.binding {
                        if target == t {
                            return *len;
                        }
                    }
                    cur = n.next.as_deref();
                }
                None
            }
            _ => None,
        }
    }

    /// Checking mode: expands `e` so that its result is assignable to `req`.
    fn expand(&mut self, env: &Env, e: &Expr, req: &Type) -> Ex<Expr> {
        use ExprKind::*;
        let sp = e.span;
        match &e.kind {
            Hole(_) => match req {
                Type::Int => {
                    let (lo, hi) = self.ctx.hole_domain;
                    Ok(mk(Hole(Some(self.point(ControlKind::Hole { lo, hi }, sp))), sp))
                }
                Type::Bit => Ok(mk(Hole(Some(self.point(ControlKind::Flag, sp))), sp)),
                t => fail(sp, format!("hole at non-primitive type `{t}`")),
            },
            Int(n @ (0 | 1)) if *req == Type::Bit => Ok(mk(Bit(*n == 1), sp)),
            AlwaysFail => Ok(e.clone()),
            Choose(arms, _) => {
                let mut kept = Vec::new();
                for a in arms {
                    match self.expand(env, a, req) {
                        Ok(x) => kept.push(x),
                        Err(f) => debug!("{}: dropping choice arm at `{req}`: {}", f.span, f.msg),
                    }
                }
                self.choice(kept, sp, || format!("no arm of the choice expands at `{req}`"))
            }
            Let { name, ty, value, body } => {
                let ty = self.concrete(env, ty, sp)?;
                let v = self.expand(env, value, &ty)?;
                let len = self.known_len(env, &v);
                let target = self.fresh_name(env, name);
                let inner = env.bind_var(name, target.clone(), ty.clone(), len);
                let b = self.expand(&inner, body, req)?;
                Ok(mk(Let { name: target, ty, value: v.boxed(), body: b.boxed() }, sp))
            }
            Seq(a, b) => {
                let a = self.effect(env, a)?;
                let b = self.expand(env, b, req)?;
                Ok(mk(Seq(a.boxed(), b.boxed()), sp))
            }
            If(c, t, f) => {
                let cond = self.expand(env, c, &Type::Bit)?;
                let t2 = self.expand(env, t, req);
                let f2 = self.expand(env, f, req);
                match (t2, f2) {
                    (Ok(t), Ok(f)) if matches!(c.kind, Hole(_)) && is_fail(&f) => Ok(t),
                    (Ok(t), Ok(f)) if matches!(c.kind, Hole(_)) && is_fail(&t) => Ok(f),
                    (Ok(t), Ok(f)) => Ok(mk(If(cond.boxed(), t.boxed(), f.boxed()), sp)),
                    (Err(x), Err(_)) => Err(x),
                    (t2, f2) => {
                        let then_ok = t2.is_ok();
                        let (x, why) = match (t2, f2) {
                            (Ok(x), Err(why)) | (Err(why), Ok(x)) => (x, why),
                            _ => unreachable!(),
                        };
                        if !self.in_generator() {
                            return Err(why);
                        }
                        debug!("{}: branch does not expand at `{req}`: {}", why.span, why.msg);
                        if matches!(c.kind, Hole(_)) || is_fail(&cond) {
                            // The branch selection is now fixed; drop its hole.
                            return Ok(x);
                        }
                        let dead = mk(AlwaysFail, why.span);
                        let (t, f) = if then_ok { (x, dead) } else { (dead, x) };
                        Ok(mk(If(cond.boxed(), t.boxed(), f.boxed()), sp))
                    }
                }
            }
            Switch { scrutinee, arms } => {
                let (target, t) = self.scrutinee(env, scrutinee, sp)?;
                let adt = self.adt_of(&t, sp)?;
                let mut out = Vec::new();
                for (v, body) in arms {
                    let vd = adt.variant(v).expect("resolved switch arm");
                    let inner = env.refine(&target, Type::Record(Rc::new(adt.record_type(vd))));
                    out.push((v.clone(), self.expand(&inner, body, req)?));
                }
                Ok(mk(Switch { scrutinee: target, arms: out }, sp))
            }
            SwitchAny { scrutinee, body } => self.flex_match(env, scrutinee, body, req, sp),
            Array(es) => match req {
                Type::Array(t) => {
                    let es = es.iter().map(|a| self.expand(env, a, t)).collect::<Ex<Vec<_>>>()?;
                    Ok(mk(Array(es), sp))
                }
                t => fail(sp, format!("array literal where `{t}` is expected")),
            },
            FieldList(b) => self.field_list(env, b, req, sp),
            Index(a, i) => {
                let arr = self.expand(env, a, &Type::array(req.clone()))?;
                let idx = self.index(env, &arr, i, sp)?;
                Ok(simplify_index(arr, idx, sp))
            }
            NewAny(args) => self.unknown_constructor(env, args, req, sp),
            Call { func, args } => self.call(env, func, args, Some(req), sp).map(|(x, _)| x),
            Var(x) if matches!(env.scope.lookup(x), Some(Binding::Thunk(_))) => {
                self.call(env, x, &[], Some(req), sp).map(|(x, _)| x)
            }
            _ => {
                let (x, t) = self.synth(env, e)?;
                if assignable(&t, req) {
                    Ok(x)
                } else {
                    fail(sp, format!("expected `{req}`, found `{t}`"))
                }
            }
        }
    }

    /// Builds a choice over already expanded arms. Arms that always fail are
    /// dropped, and a single survivor stands for itself.
    fn choice(&mut self, arms: Vec<Expr>, sp: Span, why: impl FnOnce() -> String) -> Ex<Expr> {
        if arms.is_empty() {
            return fail(sp, why());
        }
        let mut live: Vec<Expr> = arms.into_iter().filter(|a| !is_fail(a)).collect();
        match live.len() {
            0 => Ok(mk(ExprKind::AlwaysFail, sp)),
            1 => Ok(live.pop().unwrap()),
            n => {
                let id = self.point(ControlKind::Choice { arity: n }, sp);
                Ok(mk(ExprKind::Choose(live, Some(id)), sp))
            }
        }
    }

    /// Expands an expression evaluated only for its effect.
    fn effect(&mut self, env: &Env, e: &Expr) -> Ex<Expr> {
        match &e.kind {
            ExprKind::AlwaysFail => Ok(e.clone()),
            _ => self.synth(env, e).map(|(x, _)| x),
        }
    }

    fn scrutinee(&mut self, env: &Env, x: &str, sp: Span) -> Ex<(String, Type)> {
        match env.scope.lookup(x) {
            Some(Binding::Var { target, .. }) => {
                let t = env.tenv.lookup(target).cloned().expect("bound target");
                Ok((target.clone(), t))
            }
            _ => fail(sp, format!("switch scrutinee `{x}` must be a variable")),
        }
    }

    fn adt_of(&self, t: &Type, sp: Span) -> Ex<&'p crate::surface::AdtDecl> {
        match t.adt_name().and_then(|n| self.prog.adt(n)) {
            Some(a) => Ok(a),
            None => fail(sp, format!("switch on a value of non-ADT type `{t}`")),
        }
    }

    /// FPM: one arm per variant, each expanded independently.
    fn flex_match(&mut self, env: &Env, x: &str, body: &Expr, req: &Type, sp: Span) -> Ex<Expr> {
        let (env, target, t, wrap) = match env.scope.lookup(x) {
            Some(Binding::Var { target, .. }) => {
                let t = env.tenv.lookup(target).cloned().expect("bound target");
                (env.clone(), target.clone(), t, None)
            }
            Some(Binding::Subst(e)) => {
                // A substituted field path: bind it so the switch has a variable.
                let t = widen(self.type_of(env, e)?);
                let target = self.fresh_name(env, x);
                let inner = Env {
                    scope: env.scope.bind(x, Binding::Var { target: target.clone(), len: None }),
                    tenv: env.tenv.bind(target.clone(), t.clone()),
                    subst: env.subst.clone(),
                };
                (inner, target, t.clone(), Some((e.clone(), t)))
            }
            _ => return fail(sp, format!("`case?` scrutinee `{x}` must be a variable")),
        };
        let adt = self.adt_of(&t, sp)?;
        let result = if let Type::Record(_) = t {
            // Already refined by an enclosing match: only one arm is live.
            self.expand(&env, body, req)?
        } else {
            let mut arms = Vec::new();
            for v in &adt.variants {
                let inner = env.refine(&target, Type::Record(Rc::new(adt.record_type(v))));
                arms.push((v.name.clone(), self.expand(&inner, body, req)?));
            }
            mk(ExprKind::Switch { scrutinee: target.clone(), arms }, sp)
        };
        Ok(match wrap {
            Some((value, ty)) => mk(ExprKind::Let { name: target, ty, value: value.boxed(), body: result.boxed() }, sp),
            None => result,
        })
    }

    /// FL: the fields of a record whose type is exactly the element type.
    fn field_list(&mut self, env: &Env, b: &Expr, req: &Type, sp: Span) -> Ex<Expr> {
        let Type::Array(elem) = req else {
            return fail(sp, format!("field list where `{req}` is expected"));
        };
        if !is_path(b) {
            return fail(sp, "field list scrutinee must be a variable or field path");
        }
        let (base, t) = self.synth(env, b)?;
        let Type::Record(r) = t else {
            return fail(sp, format!("field list of `{t}`, which is not a variant record"));
        };
        let es = r
            .fields
            .iter()
            .filter(|(_, ft)| ft == &**elem)
            .map(|(l, _)| mk(ExprKind::Field(base.clone().boxed(), l.clone()), sp))
            .collect();
        Ok(mk(ExprKind::Array(es), sp))
    }

    /// Expands an index; a hole indexing an array of known length ranges
    /// over exactly the valid positions.
    fn index(&mut self, env: &Env, arr: &Expr, i: &Expr, sp: Span) -> Ex<Expr> {
        let len = self.known_len(env, arr);
        if len == Some(0) {
            return fail(sp, "index into an empty array");
        }
        match (&i.kind, len) {
            (ExprKind::Hole(_), Some(1)) => Ok(mk(ExprKind::Int(0), i.span)),
            (ExprKind::Hole(_), Some(n)) => {
                let id = self.point(ControlKind::Hole { lo: 0, hi: n as i64 - 1 }, i.span);
                Ok(mk(ExprKind::Hole(Some(id)), i.span))
            }
            _ => self.expand(env, i, &Type::Int),
        }
    }

    /// UC1 at an ADT, UC2 at a primitive.
    fn unknown_constructor(&mut self, env: &Env, args: &[Expr], req: &Type, sp: Span) -> Ex<Expr> {
        match req {
            Type::Int | Type::Bit => self.expand(env, &mk(ExprKind::Hole(None), sp), req),
            Type::Adt(name) => {
                let adt = self.prog.adt(name).expect("resolved adt");
                let mut ctors = Vec::new();
                'variant: for v in &adt.variants {
                    let mut fields = Vec::new();
                    for (l, ft) in &v.fields {
                        let mut arms = Vec::new();
                        for a in args {
                            match self.expand(env, a, ft) {
                                Ok(x) => arms.push(x),
                                Err(f) => {
                                    debug!("{}: constructor argument dropped for {}.{l}: {}", f.span, v.name, f.msg)
                                }
                            }
                        }
                        match self.choice(arms, sp, String::new) {
                            Ok(x) if is_fail(&x) => {
                                ctors.push(x);
                                continue 'variant;
                            }
                            Ok(x) => fields.push((l.clone(), x)),
                            Err(_) => continue 'variant,
                        }
                    }
                    ctors.push(mk(ExprKind::New { variant: v.name.clone(), fields }, sp));
                }
                self.choice(ctors, sp, || format!("no constructor of `{name}` can be built from the arguments"))
            }
            t => fail(sp, format!("unknown constructor at non-ADT type `{t}`")),
        }
    }

    /// Calls of every flavor. `req` is `None` in synthesis mode.
    fn call(&mut self, env: &Env, func: &str, args: &[Expr], req: Option<&Type>, sp: Span) -> Ex<(Expr, Type)> {
        match env.scope.lookup(func).cloned() {
            Some(Binding::Thunk(th)) => {
                if !args.is_empty() {
                    return fail(sp, format!("`{func}` stands for an expression and takes no arguments"));
                }
                let Some(req) = req else {
                    return fail(sp, format!("the type of `{func}()` must come from context"));
                };
                let inner = Env { scope: th.scope.clone(), tenv: env.tenv.clone(), subst: th.subst.clone() };
                let x = self.expand(&inner, &th.expr, req)?;
                return Ok((x, req.clone()));
            }
            Some(Binding::Func(g)) => return self.call_global(env, &g, args, req, sp),
            Some(Binding::Var { target, .. }) => {
                let t = env.tenv.lookup(&target).cloned().expect("bound target");
                return fail(sp, format!("`{func}` has type `{t}` and cannot be called"));
            }
            Some(Binding::Subst(_)) => return fail(sp, format!("`{func}` cannot be called")),
            None => {}
        }
        if func == MAP_BUILTIN {
            return self.map(env, args, req, sp);
        }
        self.call_global(env, func, args, req, sp)
    }

    fn call_global(&mut self, env: &Env, func: &str, args: &[Expr], req: Option<&Type>, sp: Span) -> Ex<(Expr, Type)> {
        let Some(f) = self.prog.function(func) else {
            return fail(sp, format!("unknown function `{func}`"));
        };
        if f.params.len() != args.len() {
            return fail(sp, format!("`{func}` expects {} arguments, got {}", f.params.len(), args.len()));
        }
        if f.is_generator() {
            let Some(req) = req else {
                return fail(sp, format!("generator call `{func}` needs a type from context"));
            };
            let x = self.inline(env, f, args, req, sp)?;
            return Ok((x, req.clone()));
        }
        let mut out = Vec::new();
        for (a, p) in args.iter().zip(&f.params) {
            out.push(self.expand(env, a, &p.ty)?);
        }
        let x = mk(ExprKind::Call { func: func.to_string(), args: out }, sp);
        if let Some(req) = req {
            if !assignable(&f.ret, req) {
                return fail(sp, format!("`{func}` returns `{}`, `{req}` expected", f.ret));
            }
        }
        Ok((x, f.ret.clone()))
    }

    /// `map(arr, f)` over an array literal and a standard function.
    fn map(&mut self, env: &Env, args: &[Expr], req: Option<&Type>, sp: Span) -> Ex<(Expr, Type)> {
        let fname = match &args[1].kind {
            ExprKind::Var(x) => match env.scope.lookup(x) {
                Some(Binding::Func(g)) => g.clone(),
                None => x.clone(),
                _ => return fail(sp, "`map` needs a function argument"),
            },
            _ => return fail(sp, "`map` needs a function argument"),
        };
        let f = match self.prog.function(&fname) {
            Some(f) if f.kind == FuncKind::Standard && f.params.len() == 1 => f,
            _ => return fail(sp, format!("`map` needs a one-argument standard function, got `{fname}`")),
        };
        let arr = self.expand(env, &args[0], &Type::array(f.params[0].ty.clone()))?;
        let ExprKind::Array(es) = arr.kind else {
            return fail(sp, "`map` needs an array whose length is known during expansion");
        };
        let t = Type::array(f.ret.clone());
        if let Some(req) = req {
            if !assignable(&t, req) {
                return fail(sp, format!("`map` yields `{t}`, `{req}` expected"));
            }
        }
        let calls = es.into_iter().map(|e| mk(ExprKind::Call { func: fname.clone(), args: vec![e] }, sp)).collect();
        Ok((mk(ExprKind::Array(calls), sp), t))
    }

    /// PG: instantiate the generator's signature, bind its arguments and
    /// expand its body in a fresh scope.
    fn inline(&mut self, env: &Env, g: &'p FuncDecl, args: &[Expr], req: &Type, sp: Span) -> Ex<Expr> {
        if self.generator_depth(&g.name) >= self.ctx.inline_bound {
            debug!("{sp}: inlining bound reached for `{}`", g.name);
            return Ok(mk(ExprKind::AlwaysFail, sp));
        }
        // Typeable arguments constrain the substitution; the rest are
        // expanded under it afterwards.
        let mut pairs = vec![(g.ret.clone(), req.clone())];
        let mut typed: Vec<Option<(Expr, Type)>> = Vec::new();
        for (a, p) in args.iter().zip(&g.params) {
            if p.ty == Type::Fun {
                typed.push(None);
                continue;
            }
            match self.synth(env, a) {
                Ok((x, t)) => {
                    pairs.push((p.ty.clone(), widen(t.clone())));
                    typed.push(Some((x, t)));
                }
                Err(_) => typed.push(None),
            }
        }
        let s = match unify(&pairs) {
            Ok(s) => s,
            Err(e) => return fail(sp, format!("cannot instantiate `{}`: {e}", g.name)),
        };
        let s = Rc::new(s);
        let mut scope = Scope::default();
        let mut tenv = env.tenv.clone();
        let mut lets: Vec<(String, Type, Expr)> = Vec::new();
        for ((a, p), pre) in args.iter().zip(&g.params).zip(typed) {
            if p.ty == Type::Fun {
                scope = scope.bind(&p.name, self.fun_arg(env, a));
                continue;
            }
            let pty = apply_subst(&s, &p.ty);
            if !is_concrete(&pty) {
                return fail(
                    sp,
                    format!("type variable encountered where concrete type expected: `{pty}` for `{}`", p.name),
                );
            }
            let x = match pre {
                Some((x, _)) => x,
                None => self.expand(env, a, &pty)?,
            };
            let binding = match &x.kind {
                ExprKind::Var(t) if env.tenv.contains(t) => {
                    Binding::Var { target: t.clone(), len: self.known_len(env, &x) }
                }
                _ if is_path(&x) => Binding::Subst(x),
                _ => {
                    let probe = Env { scope: Scope::default(), tenv: tenv.clone(), subst: s.clone() };
                    let target = self.fresh_name(&probe, &p.name);
                    tenv = tenv.bind(target.clone(), pty.clone());
                    let len = self.known_len(env, &x);
                    lets.push((target.clone(), pty, x));
                    Binding::Var { target, len }
                }
            };
            scope = scope.bind(&p.name, binding);
        }
        let ret = apply_subst(&s, &g.ret);
        if !is_concrete(&ret) {
            return fail(sp, format!("type variable encountered where concrete type expected: `{ret}`"));
        }
        let inner = Env { scope, tenv, subst: s };
        self.stack.push((g.name.clone(), sp));
        let body = self.expand(&inner, &g.body, &ret);
        self.stack.pop();
        let mut body = body?;
        for (name, ty, value) in lets.into_iter().rev() {
            body = mk(ExprKind::Let { name, ty, value: value.boxed(), body: body.boxed() }, sp);
        }
        Ok(body)
    }

    fn fun_arg(&self, env: &Env, a: &Expr) -> Binding {
        if let ExprKind::Var(x) = &a.kind {
            match env.scope.lookup(x) {
                Some(b @ (Binding::Thunk(_) | Binding::Func(_))) => return b.clone(),
                None if self.prog.function(x).is_some() => return Binding::Func(x.clone()),
                _ => {}
            }
        }
        Binding::Thunk(Rc::new(Thunk { expr: a.clone(), scope: env.scope.clone(), subst: env.subst.clone() }))
    }

    /// Synthesis mode: expands `e` and reports its type.
    fn synth(&mut self, env: &Env, e: &Expr) -> Ex<(Expr, Type)> {
        use ExprKind::*;
        let sp = e.span;
        match &e.kind {
            Var(x) => match env.scope.lookup(x) {
                Some(Binding::Var { target, .. }) => {
                    let t = env.tenv.lookup(target).cloned().expect("bound target");
                    Ok((mk(Var(target.clone()), sp), t))
                }
                Some(Binding::Subst(x)) => {
                    let t = self.type_of(env, x)?;
                    Ok((x.clone(), t))
                }
                Some(Binding::Thunk(_)) => fail(sp, format!("the type of `{x}` must come from context")),
                Some(Binding::Func(g)) => self.function_value(g, sp),
                None => self.function_value(x, sp),
            },
            Int(_) | Bit(_) | Unit => Ok((e.clone(), self.type_of(env, e)?)),
            Let { name, ty, value, body } => {
                let ty = self.concrete(env, ty, sp)?;
                let v = self.expand(env, value, &ty)?;
                let len = self.known_len(env, &v);
                let target = self.fresh_name(env, name);
                let inner = env.bind_var(name, target.clone(), ty.clone(), len);
                let (b, t) = self.synth(&inner, body)?;
                Ok((mk(Let { name: target, ty, value: v.boxed(), body: b.boxed() }, sp), t))
            }
            Seq(a, b) => {
                let a = self.effect(env, a)?;
                let (b, t) = self.synth(env, b)?;
                Ok((mk(Seq(a.boxed(), b.boxed()), sp), t))
            }
            Call { func, args } => self.call(env, func, args, None, sp),
            Field(b, l) => {
                let (b, t) = self.synth(env, b)?;
                match &t {
                    Type::Record(r) => match r.field(l) {
                        Some(ft) => Ok((mk(Field(b.boxed(), l.clone()), sp), ft.clone())),
                        None => fail(sp, format!("variant `{}` has no field `{l}`", r.variant)),
                    },
                    t => fail(sp, format!("field access `.{l}` on `{t}`, which is not a variant record")),
                }
            }
            New { variant, fields } => {
                let r = self.prog.record_type(variant).expect("resolved variant");
                let mut out = Vec::new();
                for (l, v) in fields {
                    let ft = r.field(l).expect("resolved field");
                    out.push((l.clone(), self.expand(env, v, ft)?));
                }
                Ok((mk(New { variant: variant.clone(), fields: out }, sp), Type::Adt(r.adt.clone())))
            }
            Array(es) if !es.is_empty() => {
                let (first, t) = self.synth(env, &es[0])?;
                let t = widen(t);
                let mut out = vec![first];
                for a in &es[1..] {
                    out.push(self.expand(env, a, &t)?);
                }
                Ok((mk(Array(out), sp), Type::array(t)))
            }
            Index(a, i) => {
                let (arr, t) = self.synth(env, a)?;
                let Type::Array(elem) = t else {
                    return fail(sp, format!("indexing a value of type `{t}`"));
                };
                let idx = self.index(env, &arr, i, sp)?;
                Ok((simplify_index(arr, idx, sp), *elem))
            }
            Binary(op, l, r) => self.binary(env, *op, l, r, sp),
            Not(x) => Ok((mk(Not(self.expand(env, x, &Type::Bit)?.boxed()), sp), Type::Bit)),
            Neg(x) => Ok((mk(Neg(self.expand(env, x, &Type::Int)?.boxed()), sp), Type::Int)),
            Assert(x) => Ok((mk(Assert(self.expand(env, x, &Type::Bit)?.boxed()), sp), Type::Unit)),
            Deferred { .. } => fail(sp, "deferred call in source"),
            _ => fail(sp, "the type of this expression must come from context"),
        }
    }

    fn function_value(&self, name: &str, sp: Span) -> Ex<(Expr, Type)> {
        match self.prog.function(name) {
            Some(f) if f.kind == FuncKind::Standard => Ok((mk(ExprKind::Var(name.to_string()), sp), f.signature())),
            _ => fail(sp, format!("unbound variable `{name}`")),
        }
    }

    fn binary(&mut self, env: &Env, op: BinOp, l: &Expr, r: &Expr, sp: Span) -> Ex<(Expr, Type)> {
        use BinOp::*;
        let (lt, rt, out) = match op {
            Add | Sub | Mul => (Type::Int, Type::Int, Type::Int),
            Lt | Le | Gt | Ge => (Type::Int, Type::Int, Type::Bit),
            And | Or => (Type::Bit, Type::Bit, Type::Bit),
            Eq | Ne => {
                let (l2, r2) = match self.synth(env, l) {
                    Ok((l2, t)) => {
                        let r2 = self.expand(env, r, &widen(t))?;
                        (l2, r2)
                    }
                    Err(first) => match self.synth(env, r) {
                        Ok((r2, t)) => (self.expand(env, l, &widen(t))?, r2),
                        Err(_) => return Err(first),
                    },
                };
                return Ok((mk(ExprKind::Binary(op, l2.boxed(), r2.boxed()), sp), Type::Bit));
            }
        };
        let l2 = self.expand(env, l, &lt)?;
        let r2 = self.expand(env, r, &rt)?;
        Ok((mk(ExprKind::Binary(op, l2.boxed(), r2.boxed()), sp), out))
    }
}

fn is_fail(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::AlwaysFail)
}

/// Variables and field accesses on them.
fn is_path(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Var(_) => true,
        ExprKind::Field(b, _) => is_path(b),
        _ => false,
    }
}

/// `{e0, ..., en}[k]` with a literal `k` is `ek`.
fn simplify_index(arr: Expr, idx: Expr, sp: Span) -> Expr {
    if let (ExprKind::Array(es), ExprKind::Int(k)) = (&arr.kind, &idx.kind) {
        if let Some(e) = usize::try_from(*k).ok().and_then(|k| es.get(k)) {
            return e.clone();
        }
    }
    mk(ExprKind::Index(arr.boxed(), idx.boxed()), sp)
}
