use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use crate::surface::{RecordType, Type};

/// Finite map from type variables to types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<String, Type>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Type> {
        self.map.get(var)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Type)> {
        self.map.iter()
    }

    /// Builds a substitution directly; no idempotence check is performed.
    pub fn from_pairs<I: IntoIterator<Item = (String, Type)>>(pairs: I) -> Self {
        Substitution { map: pairs.into_iter().collect() }
    }

    /// Binds `var` and keeps the map idempotent by applying the new binding
    /// to every existing range type.
    fn bind(&mut self, var: String, ty: Type) {
        let single = Substitution { map: BTreeMap::from([(var.clone(), ty.clone())]) };
        for v in self.map.values_mut() {
            *v = apply_subst(&single, v);
        }
        self.map.insert(var, ty);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnifyError {
    Clash(Type, Type),
    Occurs(String, Type),
}

impl fmt::Display for UnifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnifyError::Clash(a, b) => write!(f, "cannot unify `{a}` with `{b}`"),
            UnifyError::Occurs(v, t) => write!(f, "type variable `{v}` occurs in `{t}`"),
        }
    }
}

impl std::error::Error for UnifyError {}

/// Simultaneous substitution.
pub fn apply_subst(s: &Substitution, t: &Type) -> Type {
    if s.is_empty() {
        return t.clone();
    }
    match t {
        Type::Var(v) => s.map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Type::Array(e) => Type::array(apply_subst(s, e)),
        Type::Arrow(ps, r) => Type::arrow(ps.iter().map(|p| apply_subst(s, p)).collect(), apply_subst(s, r)),
        Type::Record(r) => Type::Record(Rc::new(RecordType {
            adt: r.adt.clone(),
            variant: r.variant.clone(),
            fields: r.fields.iter().map(|(l, t)| (l.clone(), apply_subst(s, t))).collect(),
        })),
        Type::Int | Type::Bit | Type::Unit | Type::Adt(_) | Type::Fun => t.clone(),
    }
}

/// True iff `t` has no type variables and no `fun`.
pub fn is_concrete(t: &Type) -> bool {
    match t {
        Type::Var(_) | Type::Fun => false,
        Type::Array(e) => is_concrete(e),
        Type::Arrow(ps, r) => ps.iter().all(is_concrete) && is_concrete(r),
        Type::Record(r) => r.fields.iter().all(|(_, t)| is_concrete(t)),
        Type::Int | Type::Bit | Type::Unit | Type::Adt(_) => true,
    }
}

pub fn occurs(var: &str, t: &Type) -> bool {
    match t {
        Type::Var(v) => v == var,
        Type::Array(e) => occurs(var, e),
        Type::Arrow(ps, r) => ps.iter().any(|p| occurs(var, p)) || occurs(var, r),
        Type::Record(r) => r.fields.iter().any(|(_, t)| occurs(var, t)),
        _ => false,
    }
}

/// Most general unifier of all pairs.
pub fn unify(pairs: &[(Type, Type)]) -> Result<Substitution, UnifyError> {
    let mut s = Substitution::new();
    let mut work: Vec<(Type, Type)> = pairs.iter().rev().cloned().collect();
    while let Some((a, b)) = work.pop() {
        let a = apply_subst(&s, &a);
        let b = apply_subst(&s, &b);
        match (a, b) {
            (a, b) if a == b => {}
            (Type::Var(v), t) | (t, Type::Var(v)) => {
                if occurs(&v, &t) {
                    return Err(UnifyError::Occurs(v, t));
                }
                s.bind(v, t);
            }
            (Type::Array(x), Type::Array(y)) => work.push((*x, *y)),
            (Type::Fun, Type::Arrow(..)) | (Type::Arrow(..), Type::Fun) => {}
            (Type::Arrow(p1, r1), Type::Arrow(p2, r2)) if p1.len() == p2.len() => {
                work.push((*r1, *r2));
                work.extend(p1.into_iter().zip(p2).rev());
            }
            (Type::Record(r1), Type::Record(r2)) => {
                let mut l1: Vec<&String> = r1.fields.iter().map(|(l, _)| l).collect();
                let mut l2: Vec<&String> = r2.fields.iter().map(|(l, _)| l).collect();
                l1.sort();
                l2.sort();
                if l1 != l2 {
                    return Err(UnifyError::Clash(Type::Record(r1.clone()), Type::Record(r2.clone())));
                }
                for (l, t) in r1.fields.iter().rev() {
                    work.push((t.clone(), r2.field(l).expect("same labels").clone()));
                }
            }
            (a, b) => return Err(UnifyError::Clash(a, b)),
        }
    }
    Ok(s)
}
