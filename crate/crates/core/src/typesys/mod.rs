//! Typing judgement, substitutions and unification.

mod unify;

pub use unify::{apply_subst, is_concrete, occurs, unify, Substitution, UnifyError};

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::surface::{BinOp, Expr, ExprKind, FuncKind, Program, RecordType, Span, Type, MAP_BUILTIN};

/// Persistent typing environment. Extension shares the tail, so a binding
/// made inside a match arm is invisible to the enclosing environment.
#[derive(Clone, Debug, Default)]
pub struct TypeEnv {
    head: Option<Rc<Binding>>,
}

#[derive(Debug)]
struct Binding {
    name: String,
    ty: Type,
    next: Option<Rc<Binding>>,
}

impl TypeEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&self, name: impl Into<String>, ty: Type) -> TypeEnv {
        TypeEnv { head: Some(Rc::new(Binding { name: name.into(), ty, next: self.head.clone() })) }
    }

    pub fn lookup(&self, name: &str) -> Option<&Type> {
        let mut cur = self.head.as_deref();
        while let Some(b) = cur {
            if b.name == name {
                return Some(&b.ty);
            }
            cur = b.next.as_deref();
        }
        None
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// Bound names, innermost first, without duplicates.
    pub fn names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let mut cur = self.head.as_deref();
        while let Some(b) = cur {
            if !out.contains(&b.name.as_str()) {
                out.push(&b.name);
            }
            cur = b.next.as_deref();
        }
        out
    }
}

fn err(span: Span, msg: impl Into<String>) -> Error {
    Error::Type { span, msg: msg.into() }
}

/// `from` may be used where `to` is expected: equal types, or a variant
/// record used at its ADT.
pub fn assignable(from: &Type, to: &Type) -> bool {
    match (from, to) {
        _ if from == to => true,
        (Type::Record(r), Type::Adt(a)) => &r.adt == a,
        (Type::Array(a), Type::Array(b)) => assignable(a, b),
        _ => false,
    }
}

/// Forgets variant refinement.
pub fn widen(t: Type) -> Type {
    match t {
        Type::Record(r) => Type::Adt(r.adt.clone()),
        Type::Array(e) => Type::array(widen(*e)),
        t => t,
    }
}

/// Type of `e` under `env`; function names not bound in `env` resolve to
/// the program's standard functions.
pub fn type_of(prog: &Program, env: &TypeEnv, e: &Expr) -> Result<Type> {
    Checker { prog }.infer(env, e)
}

/// Checks `e` against `expected`. Unlike [`type_of`], this also accepts
/// holes and `fail`, whose type comes from context.
pub fn check_expr(prog: &Program, env: &TypeEnv, e: &Expr, expected: &Type) -> Result<()> {
    Checker { prog }.check(env, e, expected)
}

/// Checks every non-generator function body at its declared return type.
pub fn check_program(prog: &Program) -> Result<()> {
    for f in prog.functions.iter().filter(|f| f.kind == FuncKind::Standard) {
        let mut env = TypeEnv::new();
        for p in &f.params {
            env = env.bind(p.name.clone(), p.ty.clone());
        }
        check_expr(prog, &env, &f.body, &f.ret).map_err(|e| match e {
            Error::Type { span, msg } => err(span, format!("in `{}`: {msg}", f.name)),
            other => other,
        })?;
    }
    Ok(())
}

struct Checker<'p> {
    prog: &'p Program,
}

impl Checker<'_> {
    /// Parameter and result types of a callee, if it can be typed bottom-up.
    fn callee(&self, env: &TypeEnv, func: &str, span: Span) -> Result<(Vec<Type>, Type)> {
        if let Some(t) = env.lookup(func) {
            return match t {
                Type::Arrow(ps, r) => Ok((ps.clone(), (**r).clone())),
                other => Err(err(span, format!("`{func}` has type `{other}` and cannot be called"))),
            };
        }
        if func == MAP_BUILTIN {
            return Err(err(span, "`map` is only available inside generators"));
        }
        match self.prog.function(func) {
            Some(f) if f.kind == FuncKind::Standard => {
                Ok((f.params.iter().map(|p| p.ty.clone()).collect(), f.ret.clone()))
            }
            Some(_) => Err(err(span, format!("generator call `{func}` has no type before expansion"))),
            None => Err(err(span, format!("unknown function `{func}`"))),
        }
    }

    fn call(&self, env: &TypeEnv, func: &str, args: &[Expr], span: Span) -> Result<Type> {
        let (params, ret) = self.callee(env, func, span)?;
        if params.len() != args.len() {
            return Err(err(span, format!("`{func}` expects {} arguments, got {}", params.len(), args.len())));
        }
        for (a, p) in args.iter().zip(&params) {
            self.check(env, a, p)?;
        }
        Ok(ret)
    }

    /// Resolves the ADT of a switch scrutinee and checks arm coverage.
    fn switch_adt(&self, env: &TypeEnv, x: &str, arms: &[(String, Expr)], span: Span) -> Result<Vec<Type>> {
        let t = env.lookup(x).ok_or_else(|| err(span, format!("unbound variable `{x}`")))?;
        let adt_name = t.adt_name().ok_or_else(|| err(span, format!("switch on `{x}` of non-ADT type `{t}`")))?;
        let adt = self.prog.adt(adt_name).ok_or_else(|| err(span, format!("unknown adt `{adt_name}`")))?;
        if arms.len() != adt.variants.len() || arms.iter().zip(&adt.variants).any(|((l, _), v)| *l != v.name) {
            return Err(err(span, format!("switch on `{x}` does not cover the variants of `{adt_name}` in order")));
        }
        Ok(adt.variants.iter().map(|v| Type::Record(Rc::new(adt.record_type(v)))).collect())
    }

    /// Infers the joint type of alternative branches: the first branch that
    /// types bottom-up fixes the type and every branch is checked against it.
    fn join<'a>(&self, branches: impl Iterator<Item = (TypeEnv, &'a Expr)> + Clone, span: Span) -> Result<Type> {
        let mut first_err = None;
        for (env, b) in branches.clone() {
            match self.infer(&env, b) {
                Ok(t) => {
                    let t = widen(t);
                    for (env, b) in branches {
                        self.check(&env, b, &t)?;
                    }
                    return Ok(t);
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        Err(first_err.unwrap_or_else(|| err(span, "no branch to infer a type from")))
    }

    fn infer(&self, env: &TypeEnv, e: &Expr) -> Result<Type> {
        use ExprKind::*;
        let sp = e.span;
        match &e.kind {
            Var(x) => match env.lookup(x) {
                Some(t) => Ok(t.clone()),
                None => match self.prog.function(x) {
                    Some(f) if f.kind == FuncKind::Standard => Ok(f.signature()),
                    _ => Err(err(sp, format!("unbound variable `{x}`"))),
                },
            },
            Int(_) => Ok(Type::Int),
            Bit(_) => Ok(Type::Bit),
            Unit => Ok(Type::Unit),
            Let { name, ty, value, body } => {
                self.check(env, value, ty)?;
                self.infer(&env.bind(name.clone(), ty.clone()), body)
            }
            Seq(a, b) => {
                self.infer_effect(env, a)?;
                self.infer(env, b)
            }
            Call { func, args } | Deferred { func, args } => self.call(env, func, args, sp),
            Switch { scrutinee, arms } => {
                let recs = self.switch_adt(env, scrutinee, arms, sp)?;
                let branches: Vec<(TypeEnv, &Expr)> =
                    arms.iter().zip(recs).map(|((_, b), r)| (env.bind(scrutinee.clone(), r), b)).collect();
                self.join(branches.into_iter(), sp)
            }
            If(c, t, f) => {
                self.check(env, c, &Type::Bit)?;
                self.join([(env.clone(), &**t), (env.clone(), &**f)].into_iter(), sp)
            }
            Choose(arms, _) => {
                if arms.is_empty() {
                    return Err(err(sp, "empty choice"));
                }
                self.join(arms.iter().map(|a| (env.clone(), a)), sp)
            }
            Field(b, l) => match self.infer(env, b)? {
                Type::Record(r) => {
                    r.field(l).cloned().ok_or_else(|| err(sp, format!("variant `{}` has no field `{l}`", r.variant)))
                }
                t => Err(err(sp, format!("field access `.{l}` on `{t}`, which is not a variant record"))),
            },
            New { variant, fields } => {
                let r: RecordType =
                    self.prog.record_type(variant).ok_or_else(|| err(sp, format!("unknown variant `{variant}`")))?;
                if fields.len() != r.fields.len() {
                    return Err(err(sp, format!("constructor `{variant}` expects {} fields", r.fields.len())));
                }
                for (l, v) in fields {
                    let ft = r.field(l).ok_or_else(|| err(sp, format!("variant `{variant}` has no field `{l}`")))?;
                    self.check(env, v, ft)?;
                }
                Ok(Type::Adt(r.adt))
            }
            Array(es) => {
                if es.is_empty() {
                    return Err(err(sp, "cannot infer the element type of an empty array"));
                }
                Ok(Type::array(self.join(es.iter().map(|a| (env.clone(), a)), sp)?))
            }
            Index(a, i) => {
                self.check(env, i, &Type::Int)?;
                match self.infer(env, a)? {
                    Type::Array(t) => Ok(*t),
                    t => Err(err(sp, format!("indexing a value of type `{t}`"))),
                }
            }
            Binary(op, l, r) => self.binary(env, *op, l, r, sp),
            Not(x) => self.check(env, x, &Type::Bit).map(|_| Type::Bit),
            Neg(x) => self.check(env, x, &Type::Int).map(|_| Type::Int),
            Assert(x) => self.check(env, x, &Type::Bit).map(|_| Type::Unit),
            AlwaysFail => Err(err(sp, "`fail` has no type of its own")),
            Hole(_) => Err(err(sp, "hole type must come from context")),
            NewAny(_) | FieldList(_) | SwitchAny { .. } => {
                Err(err(sp, "polymorphic synthesis construct outside a generator expansion"))
            }
        }
    }

    /// Left operand of a sequence; any type, including holes and `fail`.
    fn infer_effect(&self, env: &TypeEnv, e: &Expr) -> Result<()> {
        match &e.kind {
            ExprKind::AlwaysFail | ExprKind::Hole(_) => Ok(()),
            _ => self.infer(env, e).map(|_| ()),
        }
    }

    fn binary(&self, env: &TypeEnv, op: BinOp, l: &Expr, r: &Expr, sp: Span) -> Result<Type> {
        use BinOp::*;
        match op {
            Add | Sub | Mul => {
                self.check(env, l, &Type::Int)?;
                self.check(env, r, &Type::Int)?;
                Ok(Type::Int)
            }
            Lt | Le | Gt | Ge => {
                self.check(env, l, &Type::Int)?;
                self.check(env, r, &Type::Int)?;
                Ok(Type::Bit)
            }
            And | Or => {
                self.check(env, l, &Type::Bit)?;
                self.check(env, r, &Type::Bit)?;
                Ok(Type::Bit)
            }
            Eq | Ne => {
                let t = match self.infer(env, l) {
                    Ok(t) => widen(t),
                    Err(e) => match self.infer(env, r) {
                        Ok(t) => widen(t),
                        Err(_) => return Err(e),
                    },
                };
                self.check(env, l, &t)?;
                self.check(env, r, &t)?;
                if matches!(t, Type::Arrow(..) | Type::Fun) {
                    return Err(err(sp, "functions cannot be compared"));
                }
                Ok(Type::Bit)
            }
        }
    }

    fn check(&self, env: &TypeEnv, e: &Expr, expected: &Type) -> Result<()> {
        use ExprKind::*;
        let sp = e.span;
        match &e.kind {
            AlwaysFail => Ok(()),
            Hole(_) => match expected {
                Type::Int | Type::Bit => Ok(()),
                t => Err(err(sp, format!("hole used at non-primitive type `{t}`"))),
            },
            Let { name, ty, value, body } => {
                self.check(env, value, ty)?;
                self.check(&env.bind(name.clone(), ty.clone()), body, expected)
            }
            Seq(a, b) => {
                self.infer_effect(env, a)?;
                self.check(env, b, expected)
            }
            If(c, t, f) => {
                self.check(env, c, &Type::Bit)?;
                self.check(env, t, expected)?;
                self.check(env, f, expected)
            }
            Switch { scrutinee, arms } => {
                let recs = self.switch_adt(env, scrutinee, arms, sp)?;
                for ((_, b), r) in arms.iter().zip(recs) {
                    self.check(&env.bind(scrutinee.clone(), r), b, expected)?;
                }
                Ok(())
            }
            Choose(arms, _) => {
                if arms.is_empty() {
                    return Err(err(sp, "empty choice"));
                }
                arms.iter().try_for_each(|a| self.check(env, a, expected))
            }
            Array(es) => match expected {
                Type::Array(t) => es.iter().try_for_each(|a| self.check(env, a, t)),
                t => Err(err(sp, format!("array literal where `{t}` is expected"))),
            },
            _ => {
                let t = self.infer(env, e)?;
                if assignable(&t, expected) {
                    Ok(())
                } else {
                    Err(err(sp, format!("expected `{expected}`, found `{t}`")))
                }
            }
        }
    }
}
