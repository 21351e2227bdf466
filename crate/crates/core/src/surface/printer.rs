//! Pretty printer producing re-parseable source.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::surface::ast::*;

/// Renders a program without synthesis constructs back to source text.
pub fn pretty_print_program(prog: &Program) -> Result<String> {
    let mut p = Printer { out: String::new(), annotate: false };
    p.program(prog)?;
    Ok(p.out)
}

/// Renders an expanded program, marking control points as `??#k` and
/// `choose#k(...)`. The output is meant for inspection and is not parsed.
pub fn print_annotated(prog: &Program) -> String {
    let mut p = Printer { out: String::new(), annotate: true };
    p.program(prog).expect("annotated printing accepts every node");
    p.out
}

pub fn print_expr_annotated(e: &Expr) -> String {
    let mut p = Printer { out: String::new(), annotate: true };
    p.expr(e, 0).expect("annotated printing accepts every node");
    p.out
}

pub fn print_expr(e: &Expr) -> Result<String> {
    let mut p = Printer { out: String::new(), annotate: false };
    p.expr(e, 0)?;
    Ok(p.out)
}

struct Printer {
    out: String,
    annotate: bool,
}

fn type_str(t: &Type) -> String {
    t.to_string()
}

impl Printer {
    fn program(&mut self, prog: &Program) -> Result<()> {
        for adt in &prog.adts {
            writeln!(self.out, "adt {} {{", adt.name).unwrap();
            for v in &adt.variants {
                write!(self.out, "  {} {{", v.name).unwrap();
                for (l, t) in &v.fields {
                    write!(self.out, " {} {l};", type_str(t)).unwrap();
                }
                self.out.push_str(" }\n");
            }
            self.out.push_str("}\n\n");
        }
        for f in &prog.functions {
            self.func(f)?;
            self.out.push('\n');
        }
        // One newline at the end of the file.
        while self.out.ends_with("\n\n") {
            self.out.pop();
        }
        Ok(())
    }

    fn func(&mut self, f: &FuncDecl) -> Result<()> {
        if let Some(a) = &f.abstraction {
            writeln!(self.out, "@abstracts({}, {}, {})", a.function, a.state, a.gamma).unwrap();
        }
        if f.harness {
            self.out.push_str("harness ");
        }
        if f.is_generator() {
            self.out.push_str("generator ");
        }
        write!(self.out, "{} {}", type_str(&f.ret), f.name).unwrap();
        if !f.type_params.is_empty() {
            write!(self.out, "<{}>", f.type_params.join(", ")).unwrap();
        }
        let params: Vec<String> = f.params.iter().map(|p| format!("{} {}", type_str(&p.ty), p.name)).collect();
        writeln!(self.out, "({}) {{", params.join(", ")).unwrap();
        self.stmts(&f.body, 1, f.ret == Type::Unit)?;
        self.out.push_str("}\n");
        Ok(())
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }

    /// Prints `e` in tail position as a statement sequence.
    fn stmts(&mut self, e: &Expr, depth: usize, void: bool) -> Result<()> {
        match &e.kind {
            ExprKind::Let { name, ty, value, body } => {
                self.indent(depth);
                write!(self.out, "{} {name} = ", type_str(ty)).unwrap();
                self.expr(value, 0)?;
                self.out.push_str(";\n");
                self.stmts(body, depth, void)
            }
            ExprKind::Seq(a, b) => {
                self.indent(depth);
                self.expr(a, 0)?;
                self.out.push_str(";\n");
                self.stmts(b, depth, void)
            }
            ExprKind::If(c, t, f) => {
                self.indent(depth);
                self.out.push_str("if (");
                self.expr(c, 0)?;
                self.out.push_str(") {\n");
                self.stmts(t, depth + 1, void)?;
                self.indent(depth);
                if void && f.kind == ExprKind::Unit {
                    self.out.push_str("}\n");
                    return Ok(());
                }
                self.out.push_str("} else {\n");
                self.stmts(f, depth + 1, void)?;
                self.indent(depth);
                self.out.push_str("}\n");
                Ok(())
            }
            ExprKind::Switch { scrutinee, arms } => {
                self.indent(depth);
                writeln!(self.out, "switch ({scrutinee}) {{").unwrap();
                for (label, body) in arms {
                    self.indent(depth);
                    writeln!(self.out, "case {label}:").unwrap();
                    self.stmts(body, depth + 1, void)?;
                }
                self.indent(depth);
                self.out.push_str("}\n");
                Ok(())
            }
            ExprKind::SwitchAny { scrutinee, body } => {
                if !self.annotate {
                    return Err(Error::Print("flexible pattern match".into()));
                }
                self.indent(depth);
                writeln!(self.out, "switch ({scrutinee}) {{").unwrap();
                self.indent(depth);
                self.out.push_str("case?:\n");
                self.stmts(body, depth + 1, void)?;
                self.indent(depth);
                self.out.push_str("}\n");
                Ok(())
            }
            ExprKind::Unit if void => Ok(()),
            ExprKind::AlwaysFail => {
                self.indent(depth);
                self.out.push_str("fail;\n");
                Ok(())
            }
            _ => {
                self.indent(depth);
                self.out.push_str("return ");
                self.expr(e, 0)?;
                self.out.push_str(";\n");
                Ok(())
            }
        }
    }

    fn list(&mut self, es: &[Expr]) -> Result<()> {
        for (i, a) in es.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(a, 0)?;
        }
        Ok(())
    }

    /// `prec` is the minimum precedence the context accepts without parens.
    fn expr(&mut self, e: &Expr, prec: u8) -> Result<()> {
        match &e.kind {
            ExprKind::Var(x) => self.out.push_str(x),
            ExprKind::Int(n) => write!(self.out, "{n}").unwrap(),
            ExprKind::Bit(b) => self.out.push_str(if *b { "true" } else { "false" }),
            ExprKind::Unit => self.out.push_str("do { return; }"),
            ExprKind::AlwaysFail => self.out.push_str("fail"),
            ExprKind::Call { func, args } => {
                write!(self.out, "{func}(").unwrap();
                self.list(args)?;
                self.out.push(')');
            }
            ExprKind::Deferred { func, args } => {
                if !self.annotate {
                    return Err(Error::Print("deferred recursive call".into()));
                }
                write!(self.out, "[{func}](").unwrap();
                self.list(args)?;
                self.out.push(')');
            }
            ExprKind::Field(b, l) => {
                self.expr(b, 10)?;
                write!(self.out, ".{l}").unwrap();
            }
            ExprKind::New { variant, fields } => {
                write!(self.out, "new {variant}(").unwrap();
                for (i, (l, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    write!(self.out, "{l} = ").unwrap();
                    self.expr(v, 0)?;
                }
                self.out.push(')');
            }
            ExprKind::Array(es) => {
                self.out.push('{');
                self.list(es)?;
                self.out.push('}');
            }
            ExprKind::Index(a, i) => {
                self.expr(a, 10)?;
                self.out.push('[');
                self.expr(i, 0)?;
                self.out.push(']');
            }
            ExprKind::Binary(op, l, r) => {
                let p = op.precedence();
                let paren = p < prec;
                if paren {
                    self.out.push('(');
                }
                self.expr(l, p)?;
                write!(self.out, " {} ", op.symbol()).unwrap();
                self.expr(r, p + 1)?;
                if paren {
                    self.out.push(')');
                }
            }
            ExprKind::Not(x) => {
                self.out.push('!');
                self.expr(x, 10)?;
            }
            ExprKind::Neg(x) => {
                self.out.push_str("-(");
                self.expr(x, 0)?;
                self.out.push(')');
            }
            ExprKind::Assert(x) => {
                self.out.push_str("assert(");
                self.expr(x, 0)?;
                self.out.push(')');
            }
            ExprKind::If(c, t, f) => {
                self.out.push('(');
                self.expr(c, 1)?;
                self.out.push_str(" ? ");
                self.expr(t, 0)?;
                self.out.push_str(" : ");
                self.expr(f, 0)?;
                self.out.push(')');
            }
            ExprKind::Let { .. } | ExprKind::Seq(..) | ExprKind::Switch { .. } | ExprKind::SwitchAny { .. } => {
                self.out.push_str("do {\n");
                let depth = 1;
                self.stmts(e, depth + 1, false)?;
                self.out.push_str("  }");
            }
            ExprKind::Hole(id) => {
                if !self.annotate {
                    return Err(Error::Print("hole".into()));
                }
                match id {
                    Some(k) => write!(self.out, "??#{k}").unwrap(),
                    None => self.out.push_str("??"),
                }
            }
            ExprKind::Choose(arms, id) => {
                if !self.annotate {
                    return Err(Error::Print("choose".into()));
                }
                match id {
                    Some(k) => write!(self.out, "choose#{k}(").unwrap(),
                    None => self.out.push_str("choose("),
                }
                self.list(arms)?;
                self.out.push(')');
            }
            ExprKind::NewAny(args) => {
                if !self.annotate {
                    return Err(Error::Print("unknown constructor".into()));
                }
                self.out.push_str("new cons?(");
                self.list(args)?;
                self.out.push(')');
            }
            ExprKind::FieldList(b) => {
                if !self.annotate {
                    return Err(Error::Print("field list".into()));
                }
                self.expr(b, 10)?;
                self.out.push_str(".fields?");
            }
        }
        Ok(())
    }
}
