use std::collections::HashMap;
use std::fmt::Write;
use std::rc::Rc;

use crate::surface::{Program, Type};

/// Global variant index, dense over all ADTs in declaration order.
pub type Tag = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub tag: Tag,
    /// In field declaration order.
    pub fields: Box<[Value]>,
}

#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Bit(bool),
    Unit,
    Rec(Rc<Record>),
    Arr(Rc<[Value]>),
    /// Postponed call to the function under synthesis, holding its arguments.
    Boxed(Rc<[Value]>),
}

impl Value {
    pub fn record(tag: Tag, fields: Vec<Value>) -> Value {
        Value::Rec(Rc::new(Record { tag, fields: fields.into_boxed_slice() }))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bit(&self) -> Option<bool> {
        match self {
            Value::Bit(b) => Some(*b),
            _ => None,
        }
    }

    /// Constructor nesting depth; primitives and nullary records count as 0
    /// and 1 respectively.
    pub fn depth(&self) -> usize {
        match self {
            Value::Rec(r) => 1 + r.fields.iter().map(Value::depth).max().unwrap_or(0),
            Value::Arr(a) => a.iter().map(Value::depth).max().unwrap_or(0),
            Value::Boxed(a) => a.iter().map(Value::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn contains_boxed(&self) -> bool {
        match self {
            Value::Boxed(_) => true,
            Value::Rec(r) => r.fields.iter().any(Value::contains_boxed),
            Value::Arr(a) => a.iter().any(Value::contains_boxed),
            _ => false,
        }
    }
}

/// Structural equality. Placeholders compare by their arguments; during
/// evaluation they are forced before any comparison reaches this point.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Bit(x), Value::Bit(y)) => x == y,
        (Value::Unit, Value::Unit) => true,
        (Value::Rec(x), Value::Rec(y)) => {
            Rc::ptr_eq(x, y)
                || (x.tag == y.tag && x.fields.iter().zip(y.fields.iter()).all(|(p, q)| values_equal(p, q)))
        }
        (Value::Arr(x), Value::Arr(y)) | (Value::Boxed(x), Value::Boxed(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| values_equal(p, q))
        }
        _ => false,
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        values_equal(self, other)
    }
}

impl Eq for Value {}

#[derive(Clone, Debug)]
pub struct VariantInfo {
    pub name: String,
    pub adt: String,
    /// Position within its ADT.
    pub pos: u32,
    pub fields: Vec<(String, Type)>,
}

/// Variant numbering shared by the evaluator and input enumeration.
#[derive(Clone, Debug, Default)]
pub struct Layout {
    pub variants: Vec<VariantInfo>,
    by_name: HashMap<String, Tag>,
    adt_tags: HashMap<String, Vec<Tag>>,
}

impl Layout {
    pub fn new(prog: &Program) -> Layout {
        let mut l = Layout::default();
        for adt in &prog.adts {
            let mut tags = Vec::new();
            for (i, v) in adt.variants.iter().enumerate() {
                let tag = l.variants.len() as Tag;
                l.by_name.insert(v.name.clone(), tag);
                l.variants.push(VariantInfo {
                    name: v.name.clone(),
                    adt: adt.name.clone(),
                    pos: i as u32,
                    fields: v.fields.clone(),
                });
                tags.push(tag);
            }
            l.adt_tags.insert(adt.name.clone(), tags);
        }
        l
    }

    pub fn tag(&self, variant: &str) -> Option<Tag> {
        self.by_name.get(variant).copied()
    }

    pub fn info(&self, tag: Tag) -> &VariantInfo {
        &self.variants[tag as usize]
    }

    /// Variant tags of an ADT in declaration order.
    pub fn tags_of(&self, adt: &str) -> &[Tag] {
        self.adt_tags.get(adt).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn variant_of<'a>(&'a self, v: &Value) -> Option<&'a str> {
        match v {
            Value::Rec(r) => Some(&self.info(r.tag).name),
            _ => None,
        }
    }

    /// Compact rendering: `BinaryS(AndOp, TrueS, NumS(1))`.
    pub fn show(&self, v: &Value) -> String {
        let mut s = String::new();
        self.show_into(v, &mut s);
        s
    }

    fn show_into(&self, v: &Value, out: &mut String) {
        match v {
            Value::Int(n) => write!(out, "{n}").unwrap(),
            Value::Bit(b) => out.push_str(if *b { "true" } else { "false" }),
            Value::Unit => out.push_str("()"),
            Value::Rec(r) => {
                out.push_str(&self.info(r.tag).name);
                if !r.fields.is_empty() {
                    out.push('(');
                    for (i, f) in r.fields.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        self.show_into(f, out);
                    }
                    out.push(')');
                }
            }
            Value::Arr(a) | Value::Boxed(a) => {
                out.push_str(if matches!(v, Value::Boxed(_)) { "[" } else { "{" });
                for (i, f) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.show_into(f, out);
                }
                out.push_str(if matches!(v, Value::Boxed(_)) { "]" } else { "}" });
            }
        }
    }
}
