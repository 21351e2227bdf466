//! Name resolution and declaration checks.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::surface::ast::*;
use crate::surface::parser::DEFAULT_ARM;

/// Higher-order builtin: `map(array, f)` applies `f` to every element of a
/// statically known array.
pub const MAP_BUILTIN: &str = "map";

fn err<T>(span: Span, msg: impl Into<String>) -> Result<T> {
    Err(Error::Resolve { span, msg: msg.into() })
}

/// Checks every declaration and reference, filling in `default:` arms.
pub fn resolve(mut prog: Program) -> Result<Program> {
    let mut adt_names = HashSet::new();
    let mut variant_owner: HashMap<String, String> = HashMap::new();
    for adt in &prog.adts {
        if !adt_names.insert(adt.name.clone()) {
            return err(adt.span, format!("duplicate adt `{}`", adt.name));
        }
        if adt.variants.is_empty() {
            return err(adt.span, format!("adt `{}` has no variants", adt.name));
        }
        for v in &adt.variants {
            if variant_owner.insert(v.name.clone(), adt.name.clone()).is_some() {
                return err(v.span, format!("duplicate variant `{}`", v.name));
            }
            let mut labels = HashSet::new();
            for (l, _) in &v.fields {
                if !labels.insert(l) {
                    return err(v.span, format!("duplicate field `{l}` in `{}`", v.name));
                }
            }
        }
    }
    for adt in &prog.adts {
        for v in &adt.variants {
            for (l, t) in &v.fields {
                check_type(t, &adt_names, &[], false, v.span)
                    .map_err(|e| with_context(e, &format!("field `{}.{l}`", v.name)))?;
                if matches!(t, Type::Var(_)) {
                    return err(v.span, "adts are not polymorphic");
                }
            }
        }
    }

    let mut fn_names = HashSet::new();
    for f in &prog.functions {
        if !fn_names.insert(f.name.clone()) {
            return err(f.span, format!("duplicate function `{}`", f.name));
        }
        if f.name == MAP_BUILTIN {
            return err(f.span, "`map` is a builtin and cannot be redefined");
        }
        if adt_names.contains(&f.name) || variant_owner.contains_key(&f.name) {
            return err(f.span, format!("function `{}` clashes with a type name", f.name));
        }
    }

    let ctx = Ctx { adts: &prog.adts, variant_owner: &variant_owner, fn_names: &fn_names, adt_names: &adt_names };
    for f in &mut prog.functions {
        let mut seen = HashSet::new();
        for tp in &f.type_params {
            if !seen.insert(tp) {
                return err(f.span, format!("duplicate type parameter `{tp}`"));
            }
        }
        check_type(&f.ret, &adt_names, &f.type_params, false, f.span)?;
        if f.ret == Type::Fun {
            return err(f.span, "`fun` is only allowed as a parameter type");
        }
        let mut scope: Vec<String> = Vec::new();
        for p in &f.params {
            check_type(&p.ty, &adt_names, &f.type_params, true, f.span)?;
            if scope.contains(&p.name) {
                return err(f.span, format!("duplicate parameter `{}`", p.name));
            }
            scope.push(p.name.clone());
        }
        if f.harness {
            if f.params.iter().any(|p| !is_concrete_surface(&p.ty)) {
                return err(f.span, format!("harness `{}` must have concrete parameter types", f.name));
            }
            if let Some(abs) = &f.abstraction {
                for n in [&abs.state, &abs.gamma] {
                    if !scope.contains(n) {
                        return err(f.span, format!("@abstracts names unknown parameter `{n}`"));
                    }
                }
                if !fn_names.contains(&abs.function) {
                    return err(f.span, format!("@abstracts names unknown function `{}`", abs.function));
                }
            }
        }
        let fun_params: HashSet<String> =
            f.params.iter().filter(|p| p.ty == Type::Fun).map(|p| p.name.clone()).collect();
        ctx.expr(&mut f.body, &mut scope, &fun_params, &f.type_params)?;
    }
    Ok(prog)
}

fn with_context(e: Error, ctx: &str) -> Error {
    match e {
        Error::Resolve { span, msg } => Error::Resolve { span, msg: format!("{ctx}: {msg}") },
        other => other,
    }
}

fn is_concrete_surface(t: &Type) -> bool {
    match t {
        Type::Int | Type::Bit | Type::Adt(_) => true,
        Type::Array(e) => is_concrete_surface(e),
        _ => false,
    }
}

fn check_type(t: &Type, adts: &HashSet<String>, tparams: &[String], param: bool, span: Span) -> Result<()> {
    match t {
        Type::Int | Type::Bit | Type::Unit => Ok(()),
        Type::Fun if param => Ok(()),
        Type::Fun => err(span, "`fun` is only allowed as a parameter type"),
        Type::Adt(n) if adts.contains(n) => Ok(()),
        Type::Adt(n) => err(span, format!("unknown type `{n}`")),
        Type::Var(v) if tparams.contains(v) => Ok(()),
        Type::Var(v) => err(span, format!("undeclared type variable `{v}`")),
        Type::Array(e) => check_type(e, adts, tparams, false, span),
        Type::Record(_) | Type::Arrow(..) => err(span, "record and arrow types cannot be written in source"),
    }
}

struct Ctx<'a> {
    adts: &'a [AdtDecl],
    variant_owner: &'a HashMap<String, String>,
    fn_names: &'a HashSet<String>,
    adt_names: &'a HashSet<String>,
}

impl Ctx<'_> {
    fn adt(&self, name: &str) -> &AdtDecl {
        self.adts.iter().find(|a| a.name == name).expect("variant owner exists")
    }

    fn expr(
        &self,
        e: &mut Expr,
        scope: &mut Vec<String>,
        fun_params: &HashSet<String>,
        tparams: &[String],
    ) -> Result<()> {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Var(x) => {
                if !scope.contains(x) && !self.fn_names.contains(x.as_str()) {
                    return err(span, format!("unbound variable `{x}`"));
                }
            }
            ExprKind::Let { name, ty, value, body } => {
                check_type(ty, self.adt_names, tparams, false, span)?;
                self.expr(value, scope, fun_params, tparams)?;
                scope.push(name.clone());
                let r = self.expr(body, scope, fun_params, tparams);
                scope.pop();
                r?;
            }
            ExprKind::Call { func, args } => {
                let known = self.fn_names.contains(func.as_str())
                    || func == MAP_BUILTIN
                    || (fun_params.contains(func.as_str()) && scope.contains(func));
                if !known {
                    return err(span, format!("unknown function `{func}`"));
                }
                if func == MAP_BUILTIN && args.len() != 2 {
                    return err(span, "`map` takes an array and a function");
                }
                for a in args {
                    self.expr(a, scope, fun_params, tparams)?;
                }
            }
            ExprKind::Switch { scrutinee, arms } => {
                if !scope.contains(scrutinee) {
                    return err(span, format!("unbound switch scrutinee `{scrutinee}`"));
                }
                let adt_name = match arms.iter().find(|(l, _)| l != DEFAULT_ARM) {
                    Some((l, _)) => match self.variant_owner.get(l) {
                        Some(a) => a.clone(),
                        None => return err(span, format!("unknown variant `{l}`")),
                    },
                    None => return err(span, "switch needs at least one explicit case"),
                };
                let adt = self.adt(&adt_name);
                let mut seen = HashSet::new();
                let mut default = None;
                for (label, body) in arms.iter() {
                    if label == DEFAULT_ARM {
                        if default.is_some() {
                            return err(span, "duplicate default arm");
                        }
                        default = Some(body.clone());
                        continue;
                    }
                    if adt.variant(label).is_none() {
                        return err(span, format!("`{label}` is not a variant of `{adt_name}`"));
                    }
                    if !seen.insert(label.clone()) {
                        return err(span, format!("duplicate case `{label}`"));
                    }
                }
                arms.retain(|(l, _)| l != DEFAULT_ARM);
                if let Some(body) = default {
                    for v in &adt.variants {
                        if !seen.contains(&v.name) {
                            arms.push((v.name.clone(), body.clone()));
                        }
                    }
                }
                // Arms follow declaration order.
                arms.sort_by_key(|(l, _)| adt.variants.iter().position(|v| &v.name == l));
                for (_, body) in arms.iter_mut() {
                    self.expr(body, scope, fun_params, tparams)?;
                }
            }
            ExprKind::SwitchAny { scrutinee, body } => {
                if !scope.contains(scrutinee) {
                    return err(span, format!("unbound switch scrutinee `{scrutinee}`"));
                }
                self.expr(body, scope, fun_params, tparams)?;
            }
            ExprKind::New { variant, fields } => {
                let Some(owner) = self.variant_owner.get(variant.as_str()) else {
                    return err(span, format!("unknown variant `{variant}`"));
                };
                let decl = self.adt(owner).variant(variant).expect("owned variant");
                let mut seen = HashSet::new();
                for (l, _) in fields.iter() {
                    if decl.fields.iter().all(|(dl, _)| dl != l) {
                        return err(span, format!("`{variant}` has no field `{l}`"));
                    }
                    if !seen.insert(l.clone()) {
                        return err(span, format!("field `{l}` given twice"));
                    }
                }
                if seen.len() != decl.fields.len() {
                    return err(span, format!("constructor `{variant}` must initialize every field"));
                }
                for (_, v) in fields {
                    self.expr(v, scope, fun_params, tparams)?;
                }
            }
            ExprKind::Deferred { func, args } => {
                if !self.fn_names.contains(func.as_str()) {
                    return err(span, format!("unknown function `{func}`"));
                }
                for a in args {
                    self.expr(a, scope, fun_params, tparams)?;
                }
            }
            _ => {
                for c in e.children_mut() {
                    self.expr(c, scope, fun_params, tparams)?;
                }
            }
        }
        Ok(())
    }
}
