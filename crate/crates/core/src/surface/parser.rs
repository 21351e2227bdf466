//! Recursive-descent parser for `.synrec` source.
//!
//! Function bodies are written as C-style statement blocks and lowered to
//! the expression-oriented kernel form while parsing: declarations become
//! `Let`, `assert(e);` and expression statements become `Seq`, and control
//! falling off the end of a branch continues with the statements after it.

use crate::error::{Error, Result};
use crate::surface::ast::*;
use crate::surface::lexer::{tokenize, Tok};

/// Arm label standing in for `default:` until resolution fills in the
/// remaining variants.
pub(crate) const DEFAULT_ARM: &str = "*";

const KEYWORDS: &[&str] = &[
    "adt",
    "generator",
    "harness",
    "return",
    "if",
    "else",
    "switch",
    "case",
    "default",
    "new",
    "choose",
    "assert",
    "true",
    "false",
    "fail",
    "do",
    "let",
    "in",
    "int",
    "bit",
    "void",
    "fun",
];

enum Stmt {
    Return(Expr),
    Decl(Type, Vec<(String, Expr, Span)>),
    If(Expr, Vec<Stmt>, Vec<Stmt>, Span),
    Switch { scrutinee: String, arms: Vec<(String, Vec<Stmt>)>, span: Span },
    SwitchAny { scrutinee: String, body: Vec<Stmt>, span: Span },
    Expr(Expr),
    Block(Vec<Stmt>),
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    /// Type parameters of the function being parsed.
    type_params: Vec<String>,
}

/// Parses source text into an unresolved program.
pub(crate) fn parse_unresolved(text: &str) -> Result<Program> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0, type_params: Vec::new() };
    let mut prog = Program::default();
    while !p.at(&Tok::Eof) {
        if p.at_ident("adt") {
            prog.adts.push(p.adt()?);
        } else {
            prog.functions.push(p.func()?);
        }
    }
    Ok(prog)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, word: &str) -> bool {
        if self.at_ident(word) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { span: self.span(), msg: msg.into() })
    }

    fn expect(&mut self, t: &Tok) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", t.describe(), self.peek().describe()))
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<()> {
        if self.eat_ident(word) {
            Ok(())
        } else {
            self.error(format!("expected `{word}`, found {}", self.peek().describe()))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    // ---- declarations ----

    fn adt(&mut self) -> Result<AdtDecl> {
        let span = self.span();
        self.expect_keyword("adt")?;
        let name = self.ident()?;
        self.expect(&Tok::LBrace)?;
        let mut variants = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let vspan = self.span();
            let vname = self.ident()?;
            self.expect(&Tok::LBrace)?;
            let mut fields = Vec::new();
            while !self.eat(&Tok::RBrace) {
                let ty = self.ty()?;
                let label = self.ident()?;
                self.expect(&Tok::Semi)?;
                fields.push((label, ty));
            }
            variants.push(VariantDecl { name: vname, fields, span: vspan });
        }
        if variants.is_empty() {
            return Err(Error::Syntax { span, msg: format!("adt `{name}` has no variants") });
        }
        Ok(AdtDecl { name, variants, span })
    }

    fn annotation(&mut self) -> Result<Abstraction> {
        self.expect(&Tok::At)?;
        self.expect_keyword("abstracts")?;
        self.expect(&Tok::LParen)?;
        let function = self.ident()?;
        self.expect(&Tok::Comma)?;
        let state = self.ident()?;
        self.expect(&Tok::Comma)?;
        let gamma = self.ident()?;
        self.expect(&Tok::RParen)?;
        Ok(Abstraction { function, state, gamma })
    }

    fn func(&mut self) -> Result<FuncDecl> {
        let mut abstraction = None;
        while self.at(&Tok::At) {
            if abstraction.is_some() {
                return self.error("duplicate @abstracts annotation");
            }
            abstraction = Some(self.annotation()?);
        }
        let span = self.span();
        let harness = self.eat_ident("harness");
        let generator = self.eat_ident("generator");
        // The return type may mention type parameters declared after the name,
        // so look ahead for `<...>` before parsing it.
        let ret_start = self.pos;
        self.type_params = Vec::new();
        self.skip_type()?;
        let name = self.ident()?;
        let mut type_params = Vec::new();
        if self.eat(&Tok::LAngle) {
            loop {
                type_params.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RAngle)?;
        }
        let after_sig = self.pos;
        self.type_params = type_params.clone();
        self.pos = ret_start;
        let ret = self.ty()?;
        self.pos = after_sig;

        self.expect(&Tok::LParen)?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                let ty = self.ty()?;
                let pname = self.ident()?;
                params.push(Param { name: pname, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        let stmts = self.block()?;
        let fallthrough = if ret == Type::Unit { ExprKind::Unit } else { ExprKind::AlwaysFail };
        let body = lower(stmts, &Expr::new(fallthrough, self.span()))?;
        self.type_params.clear();

        if !type_params.is_empty() && !generator {
            return Err(Error::Syntax { span, msg: format!("type parameters on non-generator `{name}`") });
        }
        if harness && generator {
            return Err(Error::Syntax { span, msg: "a harness cannot be a generator".into() });
        }
        if abstraction.is_some() && !harness {
            return Err(Error::Syntax { span, msg: "@abstracts is only allowed on harnesses".into() });
        }
        let kind = match (generator, type_params.is_empty()) {
            (false, _) => FuncKind::Standard,
            (true, true) => FuncKind::Generator,
            (true, false) => FuncKind::PolyGenerator,
        };
        Ok(FuncDecl { kind, name, type_params, params, ret, body, harness, abstraction, span })
    }

    fn skip_type(&mut self) -> Result<()> {
        self.ident_or_prim()?;
        while self.at(&Tok::LBracket) {
            self.advance();
            if let Tok::Int(_) = self.peek() {
                self.advance();
            }
            self.expect(&Tok::RBracket)?;
        }
        Ok(())
    }

    fn ident_or_prim(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) || is_type_keyword(&s) => {
                self.advance();
                Ok(s)
            }
            other => self.error(format!("expected type, found {}", other.describe())),
        }
    }

    fn ty(&mut self) -> Result<Type> {
        let name = self.ident_or_prim()?;
        let mut t = match name.as_str() {
            "int" => Type::Int,
            "bit" => Type::Bit,
            "void" => Type::Unit,
            "fun" => Type::Fun,
            _ if self.type_params.contains(&name) => Type::Var(name),
            _ => Type::Adt(name),
        };
        // `T[]` and the sized form `T[3]`; sizes are informational only.
        while self.at(&Tok::LBracket) {
            self.advance();
            if let Tok::Int(_) = self.peek() {
                self.advance();
            }
            self.expect(&Tok::RBracket)?;
            t = Type::array(t);
        }
        Ok(t)
    }

    /// Whether the upcoming tokens start a local declaration `T x = ...`.
    fn at_decl(&self) -> bool {
        let Tok::Ident(first) = self.peek() else { return false };
        if KEYWORDS.contains(&first.as_str()) && !is_type_keyword(first) {
            return false;
        }
        let mut k = 1;
        while self.peek_at(k) == &Tok::LBracket {
            k += 1;
            if let Tok::Int(_) = self.peek_at(k) {
                k += 1;
            }
            if self.peek_at(k) != &Tok::RBracket {
                return false;
            }
            k += 1;
        }
        matches!(self.peek_at(k), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
    }

    // ---- statements ----

    fn block(&mut self) -> Result<Vec<Stmt>> {
        self.expect(&Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt_or_block(&mut self) -> Result<Vec<Stmt>> {
        if self.at(&Tok::LBrace) {
            self.block()
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let span = self.span();
        if self.at(&Tok::LBrace) {
            return Ok(Stmt::Block(self.block()?));
        }
        if self.eat_ident("return") {
            let e = if self.at(&Tok::Semi) { Expr::new(ExprKind::Unit, span) } else { self.expr()? };
            self.expect(&Tok::Semi)?;
            return Ok(Stmt::Return(e));
        }
        if self.eat_ident("if") {
            self.expect(&Tok::LParen)?;
            let c = self.expr()?;
            self.expect(&Tok::RParen)?;
            let then = self.stmt_or_block()?;
            let els = if self.eat_ident("else") { self.stmt_or_block()? } else { Vec::new() };
            return Ok(Stmt::If(c, then, els, span));
        }
        if self.at_ident("switch") {
            return self.switch_stmt();
        }
        if self.at_ident("assert") && self.peek_at(1) == &Tok::Ident("false".into()) {
            self.advance();
            self.advance();
            self.expect(&Tok::Semi)?;
            return Ok(Stmt::Expr(Expr::new(ExprKind::AlwaysFail, span)));
        }
        if self.at_decl() {
            let ty = self.ty()?;
            let mut decls = Vec::new();
            loop {
                let dspan = self.span();
                let name = self.ident()?;
                self.expect(&Tok::Assign)?;
                decls.push((name, self.expr()?, dspan));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::Semi)?;
            return Ok(Stmt::Decl(ty, decls));
        }
        let e = self.expr()?;
        self.expect(&Tok::Semi)?;
        Ok(Stmt::Expr(e))
    }

    fn switch_stmt(&mut self) -> Result<Stmt> {
        let span = self.span();
        self.expect_keyword("switch")?;
        self.expect(&Tok::LParen)?;
        if !matches!(self.peek(), Tok::Ident(_)) || self.peek_at(1) != &Tok::RParen {
            return self.error("switch scrutinee must be a variable");
        }
        let scrutinee = self.ident()?;
        self.expect(&Tok::RParen)?;
        self.expect(&Tok::LBrace)?;
        if self.eat(&Tok::CaseAny) {
            self.expect(&Tok::Colon)?;
            let mut body = Vec::new();
            while !self.eat(&Tok::RBrace) {
                body.push(self.stmt()?);
            }
            return Ok(Stmt::SwitchAny { scrutinee, body, span });
        }
        let mut arms: Vec<(String, Vec<Stmt>)> = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let label = if self.eat_ident("default") {
                DEFAULT_ARM.to_string()
            } else {
                self.expect_keyword("case")?;
                self.ident()?
            };
            self.expect(&Tok::Colon)?;
            let mut body = Vec::new();
            while !(self.at_ident("case") || self.at_ident("default") || self.at(&Tok::RBrace)) {
                body.push(self.stmt()?);
            }
            arms.push((label, body));
        }
        if arms.is_empty() {
            return Err(Error::Syntax { span, msg: "switch without cases".into() });
        }
        Ok(Stmt::Switch { scrutinee, arms, span })
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr> {
        let c = self.binary(1)?;
        if self.at(&Tok::Question) {
            let span = c.span;
            self.advance();
            let t = self.expr()?;
            self.expect(&Tok::Colon)?;
            let e = self.expr()?;
            return Ok(Expr::new(ExprKind::If(c.boxed(), t.boxed(), e.boxed()), span));
        }
        Ok(c)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::LAngle => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::RAngle => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary(op, lhs.boxed(), rhs.boxed()), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        let span = self.span();
        if self.eat(&Tok::Bang) {
            return Ok(Expr::new(ExprKind::Not(self.unary()?.boxed()), span));
        }
        if self.eat(&Tok::Minus) {
            if let Tok::Int(n) = *self.peek() {
                self.advance();
                let lit = Expr::new(ExprKind::Int(-n), span);
                return self.postfix(lit);
            }
            return Ok(Expr::new(ExprKind::Neg(self.unary()?.boxed()), span));
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn postfix(&mut self, mut e: Expr) -> Result<Expr> {
        loop {
            let span = e.span;
            if self.eat(&Tok::Dot) {
                if self.eat(&Tok::FieldsAny) {
                    e = Expr::new(ExprKind::FieldList(e.boxed()), span);
                } else {
                    let label = self.ident()?;
                    e = Expr::new(ExprKind::Field(e.boxed(), label), span);
                }
            } else if self.eat(&Tok::LBracket) {
                let idx = self.expr()?;
                self.expect(&Tok::RBracket)?;
                e = Expr::new(ExprKind::Index(e.boxed(), idx.boxed()), span);
            } else {
                return Ok(e);
            }
        }
    }

    fn args(&mut self, close: &Tok) -> Result<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat(close) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(close)?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                ExprKind::Int(n)
            }
            Tok::Hole => {
                self.advance();
                ExprKind::Hole(None)
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                return Ok(e);
            }
            Tok::LBrace => {
                self.advance();
                ExprKind::Array(self.args(&Tok::RBrace)?)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" | "false" => {
                    self.advance();
                    ExprKind::Bit(word == "true")
                }
                "fail" => {
                    self.advance();
                    ExprKind::AlwaysFail
                }
                "choose" => {
                    self.advance();
                    self.expect(&Tok::LParen)?;
                    let arms = self.args(&Tok::RParen)?;
                    if arms.is_empty() {
                        return Err(Error::Syntax { span, msg: "choose needs at least one argument".into() });
                    }
                    ExprKind::Choose(arms, None)
                }
                "assert" => {
                    self.advance();
                    self.expect(&Tok::LParen)?;
                    let e = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    ExprKind::Assert(e.boxed())
                }
                "new" => {
                    self.advance();
                    if self.eat(&Tok::ConsAny) {
                        self.expect(&Tok::LParen)?;
                        ExprKind::NewAny(self.args(&Tok::RParen)?)
                    } else {
                        let variant = self.ident()?;
                        self.expect(&Tok::LParen)?;
                        let mut fields = Vec::new();
                        if !self.eat(&Tok::RParen) {
                            loop {
                                let label = self.ident()?;
                                self.expect(&Tok::Assign)?;
                                fields.push((label, self.expr()?));
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                            self.expect(&Tok::RParen)?;
                        }
                        ExprKind::New { variant, fields }
                    }
                }
                "do" => {
                    self.advance();
                    let stmts = self.block()?;
                    return lower(stmts, &Expr::new(ExprKind::AlwaysFail, span));
                }
                "let" => {
                    self.advance();
                    let name = self.ident()?;
                    self.expect(&Tok::Colon)?;
                    let ty = self.ty()?;
                    self.expect(&Tok::Assign)?;
                    let value = self.expr()?;
                    self.expect_keyword("in")?;
                    let body = self.expr()?;
                    ExprKind::Let { name, ty, value: value.boxed(), body: body.boxed() }
                }
                _ => {
                    let name = self.ident()?;
                    if self.eat(&Tok::LParen) {
                        ExprKind::Call { func: name, args: self.args(&Tok::RParen)? }
                    } else {
                        ExprKind::Var(name)
                    }
                }
            },
            other => return self.error(format!("expected expression, found {}", other.describe())),
        };
        Ok(Expr::new(kind, span))
    }
}

fn is_type_keyword(s: &str) -> bool {
    matches!(s, "int" | "bit" | "void" | "fun")
}

/// Lowers a statement list to a kernel expression; `cont` is the value of
/// control falling off the end.
fn lower(stmts: Vec<Stmt>, cont: &Expr) -> Result<Expr> {
    let mut iter = stmts.into_iter();
    let Some(first) = iter.next() else { return Ok(cont.clone()) };
    let rest: Vec<Stmt> = iter.collect();
    match first {
        Stmt::Return(e) => {
            if !rest.is_empty() {
                return Err(Error::Syntax { span: e.span, msg: "unreachable statement after return".into() });
            }
            Ok(e)
        }
        Stmt::Decl(ty, decls) => {
            let mut body = lower(rest, cont)?;
            for (name, value, span) in decls.into_iter().rev() {
                body =
                    Expr::new(ExprKind::Let { name, ty: ty.clone(), value: value.boxed(), body: body.boxed() }, span);
            }
            Ok(body)
        }
        Stmt::If(c, then, els, span) => {
            let k = lower(rest, cont)?;
            Ok(Expr::new(ExprKind::If(c.boxed(), lower(then, &k)?.boxed(), lower(els, &k)?.boxed()), span))
        }
        Stmt::Switch { scrutinee, arms, span } => {
            let k = lower(rest, cont)?;
            let arms =
                arms.into_iter().map(|(label, body)| Ok((label, lower(body, &k)?))).collect::<Result<Vec<_>>>()?;
            Ok(Expr::new(ExprKind::Switch { scrutinee, arms }, span))
        }
        Stmt::SwitchAny { scrutinee, body, span } => {
            let k = lower(rest, cont)?;
            Ok(Expr::new(ExprKind::SwitchAny { scrutinee, body: lower(body, &k)?.boxed() }, span))
        }
        Stmt::Expr(e) if e.kind == ExprKind::AlwaysFail => Ok(e),
        Stmt::Expr(e) => {
            let span = e.span;
            let k = lower(rest, cont)?;
            Ok(Expr::new(ExprKind::Seq(e.boxed(), k.boxed()), span))
        }
        Stmt::Block(inner) => {
            let k = lower(rest, cont)?;
            lower(inner, &k)
        }
    }
}
