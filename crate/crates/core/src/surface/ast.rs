//! Syntax tree for the kernel language.

use std::fmt;
use std::rc::Rc;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub const DUMMY: Span = Span { line: 0, col: 0 };

    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Fields of one ADT variant viewed as a record type.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RecordType {
    pub adt: String,
    pub variant: String,
    pub fields: Vec<(String, Type)>,
}

impl RecordType {
    pub fn field(&self, label: &str) -> Option<&Type> {
        self.fields.iter().find(|(l, _)| l == label).map(|(_, t)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bit,
    /// Result type of harnesses and assertions.
    Unit,
    Adt(String),
    Record(Rc<RecordType>),
    Array(Box<Type>),
    /// Unannotated function parameter; acquires an arrow type by inference.
    Fun,
    Arrow(Vec<Type>, Box<Type>),
    Var(String),
}

impl Type {
    pub fn array(elem: Type) -> Type {
        Type::Array(Box::new(elem))
    }

    pub fn adt(name: impl Into<String>) -> Type {
        Type::Adt(name.into())
    }

    pub fn arrow(params: Vec<Type>, ret: Type) -> Type {
        Type::Arrow(params, Box::new(ret))
    }

    pub fn is_prim(&self) -> bool {
        matches!(self, Type::Int | Type::Bit)
    }

    /// The ADT a value of this type belongs to, looking through variant records.
    pub fn adt_name(&self) -> Option<&str> {
        match self {
            Type::Adt(n) => Some(n),
            Type::Record(r) => Some(&r.adt),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bit => f.write_str("bit"),
            Type::Unit => f.write_str("void"),
            Type::Adt(n) | Type::Var(n) => f.write_str(n),
            Type::Record(r) => write!(f, "{}", r.variant),
            Type::Array(t) => write!(f, "{t}[]"),
            Type::Fun => f.write_str("fun"),
            Type::Arrow(ps, r) => {
                f.write_str("(")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ") -> {r}")
            }
        }
    }
}

/// Index into the control space of an expanded program.
pub type ControlId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Var(String),
    Int(i64),
    Bit(bool),
    Unit,
    Let {
        name: String,
        ty: Type,
        value: Box<Expr>,
        body: Box<Expr>,
    },
    /// Evaluate the first expression for its effect, then the second.
    Seq(Box<Expr>, Box<Expr>),
    Call {
        func: String,
        args: Vec<Expr>,
    },
    Switch {
        scrutinee: String,
        arms: Vec<(String, Expr)>,
    },
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Field(Box<Expr>, String),
    New {
        variant: String,
        fields: Vec<(String, Expr)>,
    },
    Array(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Assert(Box<Expr>),
    /// Placeholder for an exhausted generator inlining budget.
    AlwaysFail,
    /// `??`; carries its control point once expanded.
    Hole(Option<ControlId>),
    /// `choose(e1, ..., en)`; carries its control point once expanded.
    Choose(Vec<Expr>, Option<ControlId>),
    /// `new cons?(e1, ..., en)`
    NewAny(Vec<Expr>),
    /// `e.fields?`
    FieldList(Box<Expr>),
    /// `switch (x) { case?: e }`
    SwitchAny {
        scrutinee: String,
        body: Box<Expr>,
    },
    /// Recursive call to the function under synthesis whose evaluation is
    /// postponed until its consumer is known.
    Deferred {
        func: String,
        args: Vec<Expr>,
    },
}

impl PartialEq for Expr {
    /// Structural equality, ignoring source positions.
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn var(name: impl Into<String>, span: Span) -> Self {
        Expr::new(ExprKind::Var(name.into()), span)
    }

    pub fn boxed(self) -> Box<Expr> {
        Box::new(self)
    }

    /// Pre-order visit of every sub-expression.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        self.for_each_child(|c| c.walk(f));
    }

    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        use ExprKind::*;
        match &self.kind {
            Var(_) | Int(_) | Bit(_) | Unit | AlwaysFail | Hole(_) => {}
            Let { value, body, .. } => {
                f(value);
                f(body);
            }
            Seq(a, b) | Index(a, b) | Binary(_, a, b) => {
                f(a);
                f(b);
            }
            Call { args, .. } | Deferred { args, .. } => args.iter().for_each(f),
            Switch { arms, .. } => arms.iter().for_each(|(_, e)| f(e)),
            If(c, t, e) => {
                f(c);
                f(t);
                f(e);
            }
            Field(e, _) | Not(e) | Neg(e) | Assert(e) | FieldList(e) => f(e),
            SwitchAny { body, .. } => f(body),
            New { fields, .. } => fields.iter().for_each(|(_, e)| f(e)),
            Array(es) | Choose(es, _) | NewAny(es) => es.iter().for_each(f),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        use ExprKind::*;
        let mut out: Vec<&mut Expr> = Vec::new();
        match &mut self.kind {
            Var(_) | Int(_) | Bit(_) | Unit | AlwaysFail | Hole(_) => {}
            Let { value, body, .. } => {
                out.push(value);
                out.push(body);
            }
            Seq(a, b) | Index(a, b) | Binary(_, a, b) => {
                out.push(a);
                out.push(b);
            }
            Call { args, .. } | Deferred { args, .. } => out.extend(args.iter_mut()),
            Switch { arms, .. } => out.extend(arms.iter_mut().map(|(_, e)| e)),
            If(c, t, f) => {
                out.push(c);
                out.push(t);
                out.push(f);
            }
            Field(x, _) | Not(x) | Neg(x) | Assert(x) | FieldList(x) => out.push(x),
            SwitchAny { body, .. } => out.push(body),
            New { fields, .. } => out.extend(fields.iter_mut().map(|(_, e)| e)),
            Array(es) | Choose(es, _) | NewAny(es) => out.extend(es.iter_mut()),
        }
        out
    }

    /// Pre-order mutable visit.
    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        for c in self.children_mut() {
            c.walk_mut(f);
        }
    }

    /// True for the template-only constructs that expansion must remove.
    pub fn is_polymorphic_construct(&self) -> bool {
        matches!(self.kind, ExprKind::NewAny(_) | ExprKind::FieldList(_) | ExprKind::SwitchAny { .. })
    }

    pub fn is_synthesis_construct(&self) -> bool {
        matches!(self.kind, ExprKind::Hole(_) | ExprKind::Choose(..)) || self.is_polymorphic_construct()
    }

    pub fn any(&self, pred: &mut dyn FnMut(&Expr) -> bool) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if !found && pred(e) {
                found = true;
            }
        });
        found
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuncKind {
    Standard,
    Generator,
    PolyGenerator,
}

/// `@abstracts(F, S, Gamma)`: the harness guarantees `Gamma == F(S)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abstraction {
    pub function: String,
    pub state: String,
    pub gamma: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Clone, Debug)]
pub struct FuncDecl {
    pub kind: FuncKind,
    pub name: String,
    pub type_params: Vec<String>,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Expr,
    pub harness: bool,
    pub abstraction: Option<Abstraction>,
    pub span: Span,
}

impl PartialEq for FuncDecl {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind
            && self.name == o.name
            && self.type_params == o.type_params
            && self.params == o.params
            && self.ret == o.ret
            && self.body == o.body
            && self.harness == o.harness
            && self.abstraction == o.abstraction
    }
}

impl FuncDecl {
    pub fn is_generator(&self) -> bool {
        self.kind != FuncKind::Standard
    }

    pub fn signature(&self) -> Type {
        Type::arrow(self.params.iter().map(|p| p.ty.clone()).collect(), self.ret.clone())
    }
}

#[derive(Clone, Debug)]
pub struct VariantDecl {
    pub name: String,
    pub fields: Vec<(String, Type)>,
    pub span: Span,
}

impl PartialEq for VariantDecl {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.fields == o.fields
    }
}

#[derive(Clone, Debug)]
pub struct AdtDecl {
    pub name: String,
    pub variants: Vec<VariantDecl>,
    pub span: Span,
}

impl PartialEq for AdtDecl {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.variants == o.variants
    }
}

impl AdtDecl {
    pub fn variant(&self, name: &str) -> Option<&VariantDecl> {
        self.variants.iter().find(|v| v.name == name)
    }

    pub fn record_type(&self, variant: &VariantDecl) -> RecordType {
        RecordType { adt: self.name.clone(), variant: variant.name.clone(), fields: variant.fields.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub adts: Vec<AdtDecl>,
    pub functions: Vec<FuncDecl>,
}

impl Program {
    pub fn adt(&self, name: &str) -> Option<&AdtDecl> {
        self.adts.iter().find(|a| a.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FuncDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut FuncDecl> {
        self.functions.iter_mut().find(|f| f.name == name)
    }

    /// Looks up a variant by name; variant names are unique across ADTs.
    pub fn variant(&self, name: &str) -> Option<(&AdtDecl, &VariantDecl)> {
        self.adts.iter().find_map(|a| a.variant(name).map(|v| (a, v)))
    }

    pub fn harnesses(&self) -> impl Iterator<Item = &FuncDecl> {
        self.functions.iter().filter(|f| f.harness)
    }

    pub fn record_type(&self, variant: &str) -> Option<RecordType> {
        self.variant(variant).map(|(a, v)| a.record_type(v))
    }
}
