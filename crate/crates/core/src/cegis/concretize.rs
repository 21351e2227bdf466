//! Substitution of a control assignment into an expanded program.

use crate::evaluator::ControlAssignment;
use crate::expander::{ControlKind, ExpandedProgram};
use crate::surface::{Expr, ExprKind, Program};

/// Replaces holes by literals and choices by their selected arms, then prunes
/// branches that only fail and drops unused bindings. Deferred calls become
/// ordinary calls again.
pub fn concretize(prog: &ExpandedProgram, phi: &ControlAssignment) -> Program {
    let mut out = prog.program.clone();
    for f in &mut out.functions {
        f.body = expr(prog, phi, &f.body);
    }
    out
}

fn value(phi: &ControlAssignment, id: usize, kind: ControlKind) -> i64 {
    phi.0.get(id).copied().unwrap_or_else(|| kind.first())
}

fn expr(prog: &ExpandedProgram, phi: &ControlAssignment, e: &Expr) -> Expr {
    use ExprKind::*;
    let sp = e.span;
    let go = |x: &Expr| expr(prog, phi, x);
    let kind = match &e.kind {
        Hole(Some(id)) => {
            let kind = prog.control[*id].kind;
            let v = value(phi, *id, kind);
            if kind == ControlKind::Flag {
                Bit(v != 0)
            } else {
                Int(v)
            }
        }
        Choose(arms, Some(id)) => {
            let v = value(phi, *id, prog.control[*id].kind) as usize;
            return go(&arms[v.min(arms.len() - 1)]);
        }
        If(c, t, f) => {
            let c = go(c);
            let (t, f) = (go(t), go(f));
            match (&c.kind, &t.kind, &f.kind) {
                (Bit(true), _, _) => return t,
                (Bit(false), _, _) => return f,
                (_, _, AlwaysFail) => return t,
                (_, AlwaysFail, _) => return f,
                _ => If(c.boxed(), t.boxed(), f.boxed()),
            }
        }
        Let { name, ty, value, body } => {
            let body = go(body);
            if !uses(&body, name) {
                return body;
            }
            Let { name: name.clone(), ty: ty.clone(), value: go(value).boxed(), body: body.boxed() }
        }
        Seq(a, b) => {
            let a = go(a);
            let b = go(b);
            if a.kind == Unit {
                return b;
            }
            Seq(a.boxed(), b.boxed())
        }
        Index(a, i) => {
            let a = go(a);
            let i = go(i);
            if let (Array(items), Int(k)) = (&a.kind, &i.kind) {
                if let Some(x) = usize::try_from(*k).ok().and_then(|k| items.get(k)) {
                    return x.clone();
                }
            }
            Index(a.boxed(), i.boxed())
        }
        Deferred { func, args } => Call { func: func.clone(), args: args.iter().map(go).collect() },
        _ => {
            let mut e = e.clone();
            for c in e.children_mut() {
                *c = go(c);
            }
            return e;
        }
    };
    Expr::new(kind, sp)
}

/// Whether `x` occurs free in `e`.
fn uses(e: &Expr, x: &str) -> bool {
    match &e.kind {
        ExprKind::Var(y) | ExprKind::Switch { scrutinee: y, .. } if y == x => true,
        ExprKind::Let { name, value, body, .. } => uses(value, x) || (name != x && uses(body, x)),
        _ => {
            let mut found = false;
            e.for_each_child(|c| found = found || uses(c, x));
            found
        }
    }
}
