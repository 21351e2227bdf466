//! Slot-indexed form of expanded function bodies.

use std::collections::HashMap;

use crate::expander::{ControlKind, ControlPoint};
use crate::surface::{BinOp, Expr, ExprKind, FuncKind, Program, Span};

use super::value::{Layout, Tag};

pub(crate) type FnId = u32;

#[derive(Clone, Debug)]
pub(crate) enum FieldSel {
    At(u32),
    ByTag(Box<[(Tag, u32)]>),
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Local(u32),
    Int(i64),
    Bit(bool),
    Unit,
    Let(u32, Box<Node>, Box<Node>),
    Seq(Box<Node>, Box<Node>),
    Call(FnId, Box<[Node]>),
    /// Call to the destination interpreter, which may consume placeholders.
    CallInterpD(Box<[Node]>),
    Deferred(Box<[Node]>),
    /// Arms indexed by variant position.
    Switch(u32, Box<[Node]>),
    If(Box<Node>, Box<Node>, Box<Node>),
    Field(Box<Node>, FieldSel),
    New(Tag, Box<[Node]>),
    Array(Box<[Node]>),
    Index(Box<Node>, Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Not(Box<Node>),
    Neg(Box<Node>),
    Assert(u32, Box<Node>),
    Fail,
    Hole(u32),
    Flag(u32),
    Choose(u32, Box<[Node]>),
}

#[derive(Clone, Debug)]
pub(crate) struct FnCode {
    pub name: String,
    pub arity: u32,
    pub frame: u32,
    pub body: Node,
}

pub(crate) struct Compiler<'a> {
    pub layout: &'a Layout,
    pub control: &'a [ControlPoint],
    pub fn_ids: &'a HashMap<String, FnId>,
    /// Function whose calls get placeholder handling, if any.
    pub interp_d: Option<FnId>,
    /// Whether deferred calls stay deferred.
    pub decompose: bool,
    pub asserts: &'a mut Vec<Span>,
    scope: Vec<(String, u32)>,
    next_slot: u32,
    max_slot: u32,
}

impl<'a> Compiler<'a> {
    pub fn new(
        layout: &'a Layout,
        control: &'a [ControlPoint],
        fn_ids: &'a HashMap<String, FnId>,
        interp_d: Option<FnId>,
        decompose: bool,
        asserts: &'a mut Vec<Span>,
    ) -> Self {
        Compiler { layout, control, fn_ids, interp_d, decompose, asserts, scope: Vec::new(), next_slot: 0, max_slot: 0 }
    }

    /// Compiles a body whose first slots hold `params`. Returns the body and
    /// the frame size.
    pub fn function(&mut self, params: &[&str], body: &Expr) -> Result<(Node, u32), String> {
        self.scope = params.iter().enumerate().map(|(i, p)| (p.to_string(), i as u32)).collect();
        self.next_slot = params.len() as u32;
        self.max_slot = self.next_slot;
        let node = self.expr(body)?;
        Ok((node, self.max_slot))
    }

    fn lookup(&self, x: &str) -> Result<u32, String> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, s)| *s)
            .ok_or_else(|| format!("unbound variable `{x}` at run time"))
    }

    fn func(&self, f: &str) -> Result<FnId, String> {
        self.fn_ids.get(f).copied().ok_or_else(|| format!("call to `{f}`, which is not an evaluable function"))
    }

    fn list(&mut self, es: &[Expr]) -> Result<Box<[Node]>, String> {
        es.iter().map(|e| self.expr(e)).collect::<Result<Vec<_>, _>>().map(Vec::into_boxed_slice)
    }

    fn field_sel(&self, label: &str) -> Result<FieldSel, String> {
        let mut hits: Vec<(Tag, u32)> = Vec::new();
        for (t, v) in self.layout.variants.iter().enumerate() {
            if let Some(i) = v.fields.iter().position(|(l, _)| l == label) {
                hits.push((t as Tag, i as u32));
            }
        }
        match hits.first() {
            None => Err(format!("no variant has a field `{label}`")),
            Some(&(_, i)) if hits.iter().all(|&(_, j)| j == i) => Ok(FieldSel::At(i)),
            _ => Ok(FieldSel::ByTag(hits.into_boxed_slice())),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<Node, String> {
        use ExprKind::*;
        let b = |n: Node| Box::new(n);
        Ok(match &e.kind {
            Var(x) => Node::Local(self.lookup(x)?),
            Int(n) => Node::Int(*n),
            Bit(v) => Node::Bit(*v),
            Unit => Node::Unit,
            Let { name, value, body, .. } => {
                let v = self.expr(value)?;
                let slot = self.next_slot;
                self.next_slot += 1;
                self.max_slot = self.max_slot.max(self.next_slot);
                self.scope.push((name.clone(), slot));
                let body = self.expr(body);
                self.scope.pop();
                self.next_slot -= 1;
                Node::Let(slot, b(v), b(body?))
            }
            Seq(x, y) => Node::Seq(b(self.expr(x)?), b(self.expr(y)?)),
            Call { func, args } => {
                let id = self.func(func)?;
                let args = self.list(args)?;
                if Some(id) == self.interp_d {
                    Node::CallInterpD(args)
                } else {
                    Node::Call(id, args)
                }
            }
            Deferred { func, args } => {
                let id = self.func(func)?;
                let args = self.list(args)?;
                if self.decompose {
                    Node::Deferred(args)
                } else {
                    Node::Call(id, args)
                }
            }
            Switch { scrutinee, arms } => {
                let slot = self.lookup(scrutinee)?;
                let mut out = Vec::with_capacity(arms.len());
                for (label, body) in arms {
                    let tag = self.layout.tag(label).ok_or_else(|| format!("unknown variant `{label}`"))?;
                    if self.layout.info(tag).pos as usize != out.len() {
                        return Err(format!("switch arms out of declaration order at `{label}`"));
                    }
                    out.push(self.expr(body)?);
                }
                Node::Switch(slot, out.into_boxed_slice())
            }
            If(c, t, f) => Node::If(b(self.expr(c)?), b(self.expr(t)?), b(self.expr(f)?)),
            Field(x, l) => Node::Field(b(self.expr(x)?), self.field_sel(l)?),
            New { variant, fields } => {
                let tag = self.layout.tag(variant).ok_or_else(|| format!("unknown variant `{variant}`"))?;
                let decl = self.layout.info(tag).fields.clone();
                let mut out = Vec::with_capacity(decl.len());
                for (l, _) in &decl {
                    let (_, v) = fields
                        .iter()
                        .find(|(k, _)| k == l)
                        .ok_or_else(|| format!("constructor `{variant}` misses field `{l}`"))?;
                    out.push(self.expr(v)?);
                }
                Node::New(tag, out.into_boxed_slice())
            }
            Array(es) => Node::Array(self.list(es)?),
            Index(a, i) => Node::Index(b(self.expr(a)?), b(self.expr(i)?)),
            Binary(op, l, r) => Node::Bin(*op, b(self.expr(l)?), b(self.expr(r)?)),
            Not(x) => Node::Not(b(self.expr(x)?)),
            Neg(x) => Node::Neg(b(self.expr(x)?)),
            Assert(x) => {
                let id = self.asserts.len() as u32;
                self.asserts.push(e.span);
                Node::Assert(id, b(self.expr(x)?))
            }
            AlwaysFail => Node::Fail,
            Hole(Some(k)) => match self.control.get(*k).map(|c| c.kind) {
                Some(ControlKind::Flag) => Node::Flag(*k as u32),
                Some(_) => Node::Hole(*k as u32),
                None => return Err(format!("control point {k} is not declared")),
            },
            Choose(arms, Some(k)) => Node::Choose(*k as u32, self.list(arms)?),
            Hole(None) | Choose(_, None) => return Err("unexpanded hole or choice".into()),
            NewAny(_) | FieldList(_) | SwitchAny { .. } => return Err("polymorphic construct at run time".into()),
        })
    }
}

/// Ids of the standard functions, in program order.
pub(crate) fn function_ids(prog: &Program) -> HashMap<String, FnId> {
    prog.functions
        .iter()
        .filter(|f| f.kind == FuncKind::Standard)
        .enumerate()
        .map(|(i, f)| (f.name.clone(), i as FnId))
        .collect()
}

impl Node {
    fn children(&self) -> Vec<&Node> {
        use Node::*;
        match self {
            Local(_) | Int(_) | Bit(_) | Unit | Fail | Hole(_) | Flag(_) => Vec::new(),
            Let(_, a, b) | Seq(a, b) | Index(a, b) | Bin(_, a, b) => vec![a, b],
            If(a, b, c) => vec![a, b, c],
            Field(a, _) | Not(a) | Neg(a) | Assert(_, a) => vec![a],
            Call(_, xs) | CallInterpD(xs) | Deferred(xs) | Switch(_, xs) | New(_, xs) | Array(xs) | Choose(_, xs) => {
                xs.iter().collect()
            }
        }
    }
}

/// Functions reachable from `root` (itself included), or `None` when any of
/// them reads a control point or handles placeholders.
pub(crate) fn control_free_closure(fns: &[FnCode], root: FnId) -> Option<Vec<FnId>> {
    let mut seen = vec![root];
    let mut work = vec![&fns[root as usize].body];
    while let Some(n) = work.pop() {
        match n {
            Node::Hole(_) | Node::Flag(_) | Node::Choose(..) | Node::CallInterpD(_) | Node::Deferred(_) => return None,
            Node::Call(f, _) if !seen.contains(f) => {
                seen.push(*f);
                work.push(&fns[*f as usize].body);
            }
            _ => {}
        }
        work.extend(n.children());
    }
    Some(seen)
}
